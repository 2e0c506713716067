#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "novas/dataset.hpp"
#include "novas/errors.hpp"
#include "novas/index_set.hpp"
#include "novas/parallel.hpp"
#include "novas/selector.hpp"

namespace novas::sim {

enum class Model { m1, m2, m3, m4, m5, alpha_family };

inline std::string_view to_string(Model m) {
  switch (m) {
    case Model::m1: return "m1";
    case Model::m2: return "m2";
    case Model::m3: return "m3";
    case Model::m4: return "m4";
    case Model::m5: return "m5";
    case Model::alpha_family: return "alpha";
  }
  return "?";
}

inline Model parse_model(std::string_view s) {
  for (auto m : {Model::m1, Model::m2, Model::m3, Model::m4, Model::m5, Model::alpha_family})
    if (s == to_string(m)) return m;
  if (s == "alpha_family") return Model::alpha_family;
  throw ConfigError("unknown model '" + std::string(s) + "' (expected m1..m5 or alpha)");
}

/// Regression function of the three active covariates.
inline double gamma(Model m, double x1, double x2, double x3, double alpha = 0.0) {
  switch (m) {
    case Model::m1: return x1 * x1 + x2 * x2 + x3 * x3;
    case Model::m2: return std::abs(x1 * x2) + std::abs(x1 * x3) + std::abs(x2 * x3);
    case Model::m3: return std::abs(x1 * x2 * x3);
    case Model::m4: return (std::abs(x1 * x2) + x3 * x3) / (2.0 + x1 * x2 * x3);
    case Model::m5: return (std::abs(x1 * x2) + std::abs(x1 * x3)) / (2.0 + std::abs(x2 * x3));
    case Model::alpha_family:
      return 3.0 + alpha * (x1 + x2 + x3) + (1.0 - alpha) * (x1 * x1 + x2 * x2 + x3 * x3);
  }
  return 0.0;
}

/// Redundant column built from the first two active covariates.
inline double trap_value(double x1, double x2) { return x1 * x1 * std::cbrt(std::abs(x2)); }

struct ModelSpec {
  Model model = Model::m1;
  std::size_t n = 100;
  std::size_t p = 100;
  double nsr = 0.05;
  double alpha = 0.35;
  /// Overwrite the last column with the trap covariate.
  bool trap = false;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 10) throw ConfigError("model spec needs n >= 10");
    if (p < 3) throw ConfigError("model spec needs p >= 3");
    if (trap && p < 4) throw ConfigError("trap column needs p >= 4");
    if (!(nsr >= 0.0) || !std::isfinite(nsr)) throw ConfigError("nsr must be nonnegative");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  }
};

inline constexpr std::size_t kCalibrationDraws = 100'000;
inline constexpr std::uint64_t kCalibrationSeed = 0x5eed'ca1b'0000'0001ull;

/// Monte Carlo Var(gamma(X1, X2, X3)) under iid Uniform[-1, 1] inputs.
/// Computed once per (model, alpha) with a fixed seed and cached.
inline double signal_variance(Model m, double alpha = 0.0) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  const std::pair<int, double> key{static_cast<int>(m), m == Model::alpha_family ? alpha : 0.0};
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::mt19937_64 rng(kCalibrationSeed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 1; k <= kCalibrationDraws; ++k) {
    const double x1 = unif(rng), x2 = unif(rng), x3 = unif(rng);
    const double g = gamma(m, x1, x2, x3, key.second);
    const double delta = g - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (g - mean);
  }
  const double var = m2 / static_cast<double>(kCalibrationDraws - 1);
  cache.emplace(key, var);
  return var;
}

/// Raw (unstandardized) dataset drawn from the model. Columns 1-3 are active.
inline Dataset generate(const ModelSpec& spec) {
  spec.validate();
  const double sigma = std::sqrt(spec.nsr * signal_variance(spec.model, spec.alpha));
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.p);
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = unif(rng);
  for (Eigen::Index i = 0; i < n; ++i)
    y[i] = gamma(spec.model, x(i, 0), x(i, 1), x(i, 2), spec.alpha) + sigma * normal(rng);
  if (spec.trap)
    for (Eigen::Index i = 0; i < n; ++i) x(i, p - 1) = trap_value(x(i, 0), x(i, 1));
  return Dataset(std::move(x), std::move(y));
}

/// Streaming mean and variance that can be merged in any order.
struct RunningMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }

  void merge(const RunningMoments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double total = static_cast<double>(count + o.count);
    const double delta = o.mean - mean;
    mean += delta * static_cast<double>(o.count) / total;
    m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / total;
    count += o.count;
  }

  /// Sample variance (n - 1 denominator); zero for fewer than two values.
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
};

enum class Selector { novas, mpdp };

inline std::string_view to_string(Selector s) { return s == Selector::novas ? "novas" : "mpdp"; }

inline Selector parse_selector(std::string_view s) {
  if (s == "novas") return Selector::novas;
  if (s == "mpdp") return Selector::mpdp;
  throw ConfigError("unknown selector '" + std::string(s) + "' (expected novas or mpdp)");
}

/// Where a selected subset falls relative to the active set {1,2,3} and column p.
enum class TrapOutcome { exact, exact_plus_trap, no_intruder, intruder };

inline TrapOutcome classify(const IndexSet& selected, std::size_t p) {
  const IndexSet active{0, 1, 2};
  const IndexSet with_trap{0, 1, 2, p - 1};
  if (selected == active) return TrapOutcome::exact;
  if (selected == with_trap) return TrapOutcome::exact_plus_trap;
  if (with_trap.includes(selected)) return TrapOutcome::no_intruder;
  return TrapOutcome::intruder;
}

struct ExperimentReport {
  ModelSpec spec;
  Selector selector = Selector::novas;
  double threshold = 0.05;
  std::size_t replications = 0;
  /// Replications whose selection equals {1, 2, 3} exactly.
  std::size_t correct_count = 0;
  /// How often each active covariate 1, 2, 3 was selected.
  std::array<std::size_t, 3> active_counts{};
  /// Largest selection count of any single non-active covariate.
  std::size_t others_max = 0;
  std::size_t exact = 0;
  std::size_t exact_plus_trap = 0;
  std::size_t no_intruder = 0;
  std::size_t intruder = 0;
  RunningMoments score;
  RunningMoments subset_fits;
  std::vector<IndexSet> selections;
};

/// Runs the selector on `replications` datasets seeded seed, seed + 1, ...
inline ExperimentReport run_experiment(const ModelSpec& spec, std::size_t replications, Selector selector,
                                       const SelectorConfig& config) {
  spec.validate();
  config.validate();
  if (replications < 1) throw ConfigError("replications must be at least 1");

  struct Outcome {
    IndexSet selected;
    double score = 0.0;
    std::size_t subset_fits = 0;
  };
  std::vector<Outcome> outcomes(replications);
  SelectorConfig inner = config;
  inner.threads = 1;
  parallel_for(replications, config.threads, [&](std::size_t r, unsigned) {
    ModelSpec s = spec;
    s.seed = spec.seed + r;
    const Dataset data = standardize(generate(s));
    const auto trace = selector == Selector::novas ? novas_select(data, inner) : mpdp_select(data, inner);
    outcomes[r] = {trace.final_subset, trace.final_score, trace.subset_fits};
  });

  ExperimentReport rep;
  rep.spec = spec;
  rep.selector = selector;
  rep.threshold = config.threshold;
  rep.replications = replications;
  std::vector<std::size_t> per_column(spec.p, 0);
  for (const auto& o : outcomes) {
    rep.selections.push_back(o.selected);
    for (auto j : o.selected) ++per_column[j];
    switch (classify(o.selected, spec.p)) {
      case TrapOutcome::exact: ++rep.exact; break;
      case TrapOutcome::exact_plus_trap: ++rep.exact_plus_trap; break;
      case TrapOutcome::no_intruder: ++rep.no_intruder; break;
      case TrapOutcome::intruder: ++rep.intruder; break;
    }
    rep.score.add(o.score);
    rep.subset_fits.add(static_cast<double>(o.subset_fits));
  }
  rep.correct_count = rep.exact;
  for (std::size_t j = 0; j < 3; ++j) rep.active_counts[j] = per_column[j];
  for (std::size_t j = 3; j < spec.p; ++j) rep.others_max = std::max(rep.others_max, per_column[j]);
  return rep;
}

}  // namespace novas::sim
