#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "novas/benchmark.hpp"
#include "novas/errors.hpp"
#include "novas/io/csv.hpp"
#include "novas/io/run_config.hpp"
#include "novas/io/trace.hpp"
#include "novas/parallel.hpp"
#include "novas/selector.hpp"
#include "novas/simulation.hpp"

namespace novas::cli {

enum ExitCode : int { ok = 0, failure = 1, bad_input = 2, bad_config = 3 };

namespace detail {

using nlohmann::json;

/// Binds a CLI option to a RunConfig field, copying it over only when given.
class Binder {
 public:
  explicit Binder(io::RunConfig& target) : target_(target) {}

  template <class T>
  CLI::Option* add(CLI::App& app, const std::string& flag, std::optional<T> io::RunConfig::*field,
                   const std::string& help) {
    auto value = std::make_shared<T>();
    auto* opt = app.add_option(flag, *value, help);
    apply_.push_back([this, opt, value, field] {
      if (opt->count() > 0) target_.*field = *value;
    });
    return opt;
  }

  CLI::Option* add_flag(CLI::App& app, const std::string& flag, std::optional<bool> io::RunConfig::*field,
                        const std::string& help) {
    auto value = std::make_shared<bool>(false);
    auto* opt = app.add_flag(flag, *value, help);
    apply_.push_back([this, opt, value, field] {
      if (opt->count() > 0) target_.*field = *value;
    });
    return opt;
  }

  void apply() const {
    for (const auto& f : apply_) f();
  }

 private:
  io::RunConfig& target_;
  std::vector<std::function<void()>> apply_;
};

inline void add_selector_options(CLI::App& app, Binder& b) {
  b.add(app, "--threshold", &io::RunConfig::threshold, "Minimum relative gain to accept a new stage (default 0.05)");
  b.add(app, "--budget-q", &io::RunConfig::budget_q,
        "Computing budget q; stages keep floor(sqrt(q)) subsets (default: number of covariates)");
  b.add(app, "--max-stages", &io::RunConfig::max_stages, "Upper bound on the number of stages (default 10)");
  b.add(app, "--grid", &io::RunConfig::grid,
        "Bandwidth multipliers of n^(-1/(d+4)), increasing (default 0.3,0.5,0.8,1.2,1.8,2.7)")
      ->delimiter(',');
  b.add(app, "--weight", &io::RunConfig::weight, "Observation weight: unit or box:LO:HI (default unit)");
  b.add(app, "--seed", &io::RunConfig::seed, "Random seed for simulated data (default 1)");
  b.add(app, "--threads", &io::RunConfig::threads,
        "Worker threads (default: $NOVAS_THREADS, else all cores); results do not depend on it");
}

inline std::optional<char> parse_delimiter(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "tab" || s == "\\t" || s == "\t") return '\t';
  if (s == "comma") return ',';
  if (s.size() == 1) return s[0];
  throw ConfigError("delimiter must be a single character, 'tab' or 'comma'");
}

inline json report_json(const sim::ExperimentReport& r) {
  return {{"type", "experiment"},
          {"selector", sim::to_string(r.selector)},
          {"model", sim::to_string(r.spec.model)},
          {"n", r.spec.n},
          {"p", r.spec.p},
          {"nsr", r.spec.nsr},
          {"alpha", r.spec.alpha},
          {"trap", r.spec.trap},
          {"seed", r.spec.seed},
          {"threshold", r.threshold},
          {"replications", r.replications},
          {"correct_count", r.correct_count},
          {"active_counts", r.active_counts},
          {"others_max", r.others_max},
          {"cells",
           {{"exact", r.exact},
            {"exact_plus_trap", r.exact_plus_trap},
            {"no_intruder", r.no_intruder},
            {"intruder", r.intruder}}},
          {"score_mean", r.score.mean},
          {"score_variance", r.score.variance()},
          {"subset_fits_mean", r.subset_fits.mean}};
}

inline std::string report_table(const std::vector<sim::ExperimentReport>& reports) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-9s%-7s%6s%7s%6s%9s%6s%6s%6s%8s%9s%11s%13s%10s%11s%11s\n", "selector", "model",
                "n", "p", "reps", "correct", "x1", "x2", "x3", "others", "{1,2,3}", "{1,2,3,p}", "no-intruder",
                "intruder", "cv-mean", "cv-var");
  os << buf;
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%-9s%-7s%6zu%7zu%6zu%9zu%6zu%6zu%6zu%8zu%9zu%11zu%13zu%10zu%11.4g%11.4g\n",
                  std::string(sim::to_string(r.selector)).c_str(), std::string(sim::to_string(r.spec.model)).c_str(),
                  r.spec.n, r.spec.p, r.replications, r.correct_count, r.active_counts[0], r.active_counts[1],
                  r.active_counts[2], r.others_max, r.exact, r.exact_plus_trap, r.no_intruder, r.intruder,
                  r.score.mean, r.score.variance());
    os << buf;
  }
  return os.str();
}

class OutputFile {
 public:
  explicit OutputFile(const std::string& path) : file_(path) {
    if (!file_) throw ConfigError("cannot write '" + path + "'");
  }
  std::ostream& stream() { return file_; }

 private:
  std::ofstream file_;
};

}  // namespace detail

/// Loads the data file, runs the chosen selector and writes the trace.
inline int cmd_select(const io::RunConfig& rc, const std::string& data_path, const std::string& response,
                      const std::string& delimiter, const std::string& out_path, std::ostream& out) {
  const auto cfg = io::to_selector_config(rc, default_thread_count());
  const auto selector = sim::parse_selector(rc.selector.value_or("novas"));
  const auto table = io::read_table(data_path, detail::parse_delimiter(delimiter));
  auto labelled = io::to_dataset(table, response);
  Dataset data;
  try {
    data = standardize(labelled.data);
  } catch (const ConstantColumn& e) {
    throw DataError("covariate '" + labelled.covariate_names[e.column()] + "' (column " +
                    std::to_string(e.column() + 1) + " of the covariates) is constant");
  }
  const auto trace = selector == sim::Selector::novas ? novas_select(data, cfg) : mpdp_select(data, cfg);

  io::TraceHeader header{trace.selector, labelled.response_name, labelled.covariate_names, data.n(), data.p()};
  detail::OutputFile file(out_path);
  io::write_trace(file.stream(), header, trace);
  out << io::format_summary(trace, labelled.covariate_names);
  return ok;
}

inline int cmd_simulate(const io::RunConfig& rc, const std::string& out_path, std::ostream& out) {
  const auto spec = io::to_model_spec(rc);
  const auto cfg = io::to_selector_config(rc, default_thread_count());
  const std::size_t reps = rc.reps.value_or(100);
  if (reps < 1) throw ConfigError("--reps must be at least 1");
  const std::string which = rc.selector.value_or("novas");
  std::vector<sim::Selector> selectors;
  if (which == "both")
    selectors = {sim::Selector::novas, sim::Selector::mpdp};
  else
    selectors = {sim::parse_selector(which)};

  std::vector<sim::ExperimentReport> reports;
  for (auto s : selectors) reports.push_back(sim::run_experiment(spec, reps, s, cfg));

  std::optional<detail::OutputFile> file;
  if (!out_path.empty()) file.emplace(out_path);
  for (const auto& r : reports) {
    if (file) file->stream() << detail::report_json(r).dump() << '\n';
  }
  out << detail::report_table(reports);
  return ok;
}

inline int cmd_benchmark(const io::RunConfig& rc, const std::string& out_path, std::ostream& out) {
  bench::BenchmarkOptions opt;
  if (rc.p) opt.p_list = *rc.p;
  if (rc.n) opt.n = *rc.n;
  if (rc.stages) opt.stages = *rc.stages;
  if (rc.seed) opt.seed = *rc.seed;
  if (rc.repeats) opt.repeats = *rc.repeats;
  if (rc.threshold) opt.threshold = *rc.threshold;
  opt.threads = rc.threads.value_or(default_thread_count());
  if (opt.threads < 1) throw ConfigError("--threads must be positive");
  if (opt.n < 10) throw ConfigError("--n must be at least 10");
  for (auto p : opt.p_list)
    if (p < 3) throw ConfigError("every p must be at least 3");
  const auto res = bench::run_benchmark(opt);

  std::optional<detail::OutputFile> file;
  if (!out_path.empty()) file.emplace(out_path);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%8s%14s%16s%13s%9s\n", "p", "wall_s", "fits_evaluated", "subset_fits", "threads");
  out << buf;
  for (const auto& r : res.rows) {
    std::snprintf(buf, sizeof buf, "%8zu%14.4f%16zu%13zu%9u\n", r.p, r.wall_seconds, r.fits_evaluated,
                  r.subset_fits, r.threads);
    out << buf;
    if (file)
      file->stream() << nlohmann::json{{"type", "timing"},
                                       {"p", r.p},
                                       {"wall_seconds", r.wall_seconds},
                                       {"fits_evaluated", r.fits_evaluated},
                                       {"subset_fits", r.subset_fits},
                                       {"threads", r.threads},
                                       {"n", opt.n},
                                       {"stages", opt.stages}}
                            .dump()
                     << '\n';
  }
  std::snprintf(buf, sizeof buf, "log-log slope: %.4f\n", res.slope);
  out << buf;
  if (file) file->stream() << nlohmann::json{{"type", "slope"}, {"slope", res.slope}}.dump() << '\n';
  return ok;
}

inline int cmd_summary(const std::string& trace_path, std::ostream& out) {
  std::ifstream in(trace_path);
  if (!in) throw DataError("cannot open trace '" + trace_path + "'");
  const auto loaded = io::read_trace(in);
  out << io::format_summary(loaded.trace, loaded.header.covariates);
  return ok;
}

/// Entry point shared by the executable and the tests. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Nonparametric variable selection by leave-one-out local linear regression"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  io::RunConfig cli_rc;
  detail::Binder binder(cli_rc);
  std::string config_path, data_path, response, delimiter, out_path, trace_path;

  auto* sel = app.add_subcommand("select", "Select covariates from a delimited data file");
  sel->add_option("--data", data_path, "Delimited text file with a header row")->required();
  sel->add_option("--response", response, "Response column: header name or 1-based position")->required();
  sel->add_option("--delimiter", delimiter, "Field delimiter (default: tab if the header has one, else comma)");
  sel->add_option("--config", config_path, "JSON file with default settings; unknown keys are rejected");
  sel->add_option("--out", out_path, "Trace output, one JSON record per line (default <data>.trace.jsonl)");
  binder.add(*sel, "--selector", &io::RunConfig::selector, "novas or mpdp (default novas)");
  detail::add_selector_options(*sel, binder);

  auto* simc = app.add_subcommand("simulate", "Repeat selection on simulated data and tally the outcomes");
  simc->add_option("--config", config_path, "JSON file with default settings; unknown keys are rejected");
  simc->add_option("--out", out_path, "Report output, one JSON record per selector");
  binder.add(*simc, "--model", &io::RunConfig::model, "m1, m2, m3, m4, m5 or alpha (default m1)");
  binder.add(*simc, "--n", &io::RunConfig::n, "Sample size (default 100)");
  binder.add(*simc, "--p", &io::RunConfig::p, "Number of covariates (default 100)")->expected(1);
  binder.add(*simc, "--nsr", &io::RunConfig::nsr, "Noise-to-signal ratio (default 0.05; 0.1 for alpha)");
  binder.add(*simc, "--alpha", &io::RunConfig::alpha, "Linear share for the alpha model (default 0.35)");
  binder.add_flag(*simc, "--trap", &io::RunConfig::trap, "Replace column p by x1^2 |x2|^(1/3)");
  binder.add(*simc, "--reps", &io::RunConfig::reps, "Replications, seeded seed, seed+1, ... (default 100)");
  binder.add(*simc, "--selector", &io::RunConfig::selector, "novas, mpdp or both (default novas)");
  detail::add_selector_options(*simc, binder);

  auto* bench = app.add_subcommand("benchmark", "Time a fixed number of stages for several covariate counts");
  bench->add_option("--config", config_path, "JSON file with default settings; unknown keys are rejected");
  bench->add_option("--out", out_path, "Timing records, one JSON record per line");
  binder.add(*bench, "--p", &io::RunConfig::p, "Comma-separated covariate counts, at least two (default 100,500)")
      ->delimiter(',');
  binder.add(*bench, "--n", &io::RunConfig::n, "Sample size (default 100)");
  binder.add(*bench, "--stages", &io::RunConfig::stages, "Stages run regardless of the gain rule (default 4)");
  binder.add(*bench, "--repeats", &io::RunConfig::repeats, "Timings per p; the fastest is kept (default 3)");
  binder.add(*bench, "--threshold", &io::RunConfig::threshold, "Unused by forced stages (default 0.05)");
  binder.add(*bench, "--seed", &io::RunConfig::seed, "Seed for the model-1 data (default 1)");
  binder.add(*bench, "--threads", &io::RunConfig::threads, "Worker threads (default: $NOVAS_THREADS, else all cores)");

  auto* summ = app.add_subcommand("summary", "Print the stage summary stored in a trace file");
  summ->add_option("--trace", trace_path, "Trace written by 'select'")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return bad_config;
  }

  try {
    binder.apply();
    io::RunConfig rc;
    if (!config_path.empty()) rc = io::load_run_config(config_path);
    rc.overlay(cli_rc);
    if (sel->parsed()) return cmd_select(rc, data_path, response, delimiter,
                                         out_path.empty() ? data_path + ".trace.jsonl" : out_path, out);
    if (simc->parsed()) return cmd_simulate(rc, out_path, out);
    if (bench->parsed()) return cmd_benchmark(rc, out_path, out);
    return cmd_summary(trace_path, out);
  } catch (const DataError& e) {
    err << "input error: " << e.what() << '\n';
    return bad_input;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return bad_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return failure;
  }
}

}  // namespace novas::cli
