#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "novas/cv.hpp"
#include "novas/errors.hpp"
#include "novas/io/csv.hpp"
#include "novas/kernel.hpp"
#include "novas/selector.hpp"
#include "novas/simulation.hpp"

namespace novas::io {

/// Settings for any subcommand. Unset fields fall back to the next layer
/// (command line over config file over built-in defaults).
struct RunConfig {
  std::optional<double> threshold;
  std::optional<std::size_t> budget_q;
  std::optional<std::size_t> max_stages;
  std::optional<std::vector<double>> grid;
  std::optional<std::string> weight;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> selector;
  std::optional<std::string> model;
  std::optional<std::size_t> n;
  std::optional<std::vector<std::size_t>> p;
  std::optional<double> nsr;
  std::optional<double> alpha;
  std::optional<bool> trap;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> stages;
  std::optional<std::size_t> repeats;

  /// Fields of `over` that are set replace ours.
  void overlay(const RunConfig& over) {
    auto take = [](auto& mine, const auto& theirs) {
      if (theirs) mine = theirs;
    };
    take(threshold, over.threshold);
    take(budget_q, over.budget_q);
    take(max_stages, over.max_stages);
    take(grid, over.grid);
    take(weight, over.weight);
    take(seed, over.seed);
    take(threads, over.threads);
    take(selector, over.selector);
    take(model, over.model);
    take(n, over.n);
    take(p, over.p);
    take(nsr, over.nsr);
    take(alpha, over.alpha);
    take(trap, over.trap);
    take(reps, over.reps);
    take(stages, over.stages);
    take(repeats, over.repeats);
  }
};

/// Parses "unit" or "box:LO:HI" (the same bounds on every coordinate).
inline WeightFn parse_weight(std::string_view s) {
  if (s == "unit") return WeightFn::unit();
  if (s.starts_with("box:")) {
    const auto rest = s.substr(4);
    const auto colon = rest.find(':');
    if (colon != std::string_view::npos) {
      auto lo = parse_number(rest.substr(0, colon));
      auto hi = parse_number(rest.substr(colon + 1));
      if (lo && hi) return WeightFn::uniform_box(*lo, *hi);
    }
  }
  throw ConfigError("weight must be 'unit' or 'box:LO:HI', got '" + std::string(s) + "'");
}

/// Parses a JSON config object. Unknown keys and mistyped values are ConfigErrors.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  static const std::set<std::string> known{"threshold", "budget_q", "max_stages", "grid",  "weight", "seed",
                                           "threads",   "selector", "model",      "n",     "p",      "nsr",
                                           "alpha",     "trap",     "reps",       "stages", "repeats"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  RunConfig c;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<typename std::remove_reference_t<decltype(field)>::value_type>();
    };
    get("threshold", c.threshold);
    get("budget_q", c.budget_q);
    get("max_stages", c.max_stages);
    get("grid", c.grid);
    get("weight", c.weight);
    get("seed", c.seed);
    get("threads", c.threads);
    get("selector", c.selector);
    get("model", c.model);
    get("n", c.n);
    if (j.contains("p")) {
      if (j.at("p").is_array())
        c.p = j.at("p").get<std::vector<std::size_t>>();
      else
        c.p = std::vector<std::size_t>{j.at("p").get<std::size_t>()};
    }
    get("nsr", c.nsr);
    get("alpha", c.alpha);
    get("trap", c.trap);
    get("reps", c.reps);
    get("stages", c.stages);
    get("repeats", c.repeats);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return parse_run_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

inline SelectorConfig to_selector_config(const RunConfig& rc, unsigned default_threads) {
  SelectorConfig cfg;
  if (rc.threshold) cfg.threshold = *rc.threshold;
  cfg.budget_q = rc.budget_q;
  if (rc.max_stages) cfg.max_stages = *rc.max_stages;
  if (rc.grid) cfg.grid = BandwidthGrid(*rc.grid);
  if (rc.weight) cfg.weight = parse_weight(*rc.weight);
  if (rc.seed) cfg.seed = *rc.seed;
  cfg.threads = rc.threads.value_or(default_threads);
  cfg.validate();
  return cfg;
}

inline sim::ModelSpec to_model_spec(const RunConfig& rc) {
  sim::ModelSpec spec;
  if (rc.model) spec.model = sim::parse_model(*rc.model);
  if (rc.n) spec.n = *rc.n;
  if (rc.p) {
    if (rc.p->size() != 1) throw ConfigError("simulation takes a single value of p");
    spec.p = rc.p->front();
  }
  if (rc.nsr)
    spec.nsr = *rc.nsr;
  else if (spec.model == sim::Model::alpha_family)
    spec.nsr = 0.1;
  if (rc.alpha) spec.alpha = *rc.alpha;
  if (rc.trap) spec.trap = *rc.trap;
  if (rc.seed) spec.seed = *rc.seed;
  spec.validate();
  return spec;
}

}  // namespace novas::io
