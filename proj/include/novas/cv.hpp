#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "novas/dataset.hpp"
#include "novas/errors.hpp"
#include "novas/index_set.hpp"
#include "novas/kernel.hpp"
#include "novas/local_linear.hpp"

namespace novas {

/// Observation weight w(X_i^J) in the cross-validation sum.
///
/// `unit` weighs every row by one. `box` weighs a row by one when each of its
/// subset coordinates lies inside that column's [lower, upper] bounds and by
/// zero otherwise. Bounds are indexed by covariate column; a single-element
/// bound vector applies to every column.
struct WeightFn {
  enum class Kind { unit, box };
  Kind kind = Kind::unit;
  std::vector<double> lower;
  std::vector<double> upper;

  static WeightFn unit() { return {}; }
  static WeightFn box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.empty() || lo.size() != hi.size()) throw ConfigError("box weight needs matching, nonempty bounds");
    for (std::size_t k = 0; k < lo.size(); ++k)
      if (!(lo[k] <= hi[k])) throw ConfigError("box weight lower bound exceeds upper bound");
    return {Kind::box, std::move(lo), std::move(hi)};
  }
  static WeightFn uniform_box(double lo, double hi) { return box({lo}, {hi}); }

  double operator()(const Dataset& data, std::size_t row, const IndexSet& subset) const {
    if (kind == Kind::unit) return 1.0;
    for (auto j : subset) {
      const std::size_t b = lower.size() == 1 ? 0 : j;
      if (b >= lower.size()) throw ConfigError("box weight has no bounds for column " + std::to_string(j + 1));
      const double v = data.x(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j));
      if (v < lower[b] || v > upper[b]) return 0.0;
    }
    return 1.0;
  }
};

/// A scored subset: indices J, criterion S(J) and the bandwidth that achieved it.
struct SubsetCandidate {
  IndexSet indices;
  double score = std::numeric_limits<double>::infinity();
  double bandwidth = 0.0;
};

/// Ascending score, ties by cardinality then lexicographic order.
inline bool rank_less(const SubsetCandidate& a, const SubsetCandidate& b) {
  if (a.score != b.score) return a.score < b.score;
  return tie_break_less(a.indices, b.indices);
}

namespace detail {

inline double weighted_loo_sse(const LooSmoother<>& smoother, const Dataset& data, const IndexSet& subset,
                               double bandwidth, const WeightFn& weight, LocalFitWorkspace& ws) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw NonPositiveBandwidth(bandwidth);
  double sum = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double w = weight(data, i, subset);
    if (w == 0.0) continue;
    const double r = data.y[static_cast<Eigen::Index>(i)] - smoother.predict_at(i, bandwidth, ws);
    sum += r * r * w;
  }
  return sum;
}

}  // namespace detail

/// Leave-one-out criterion S(J) = sum_i (Y_i - g^{-i}_J(X_i^J))^2 w(X_i^J).
inline double cv_score(const Dataset& data, const IndexSet& subset, double bandwidth,
                       const WeightFn& weight = WeightFn::unit(), LocalFitOptions opts = {}) {
  LooSmoother<> smoother(data, subset, opts);
  LocalFitWorkspace ws;
  return detail::weighted_loo_sse(smoother, data, subset, bandwidth, weight, ws);
}

/// (prev - next) / prev. Negative when the next stage is worse.
inline double relative_gain(double prev_best, double next_best) {
  if (prev_best == 0.0) throw ZeroPreviousScore();
  return (prev_best - next_best) / prev_best;
}

struct BandwidthChoice {
  double bandwidth = 0.0;
  double score = std::numeric_limits<double>::infinity();
};

/// Scores one subset at every grid bandwidth, keeping the minimiser.
/// Ties go to the smaller bandwidth. Reuses `ws` across calls.
inline BandwidthChoice select_bandwidth(const Dataset& data, const IndexSet& subset, const BandwidthGrid& grid,
                                        const WeightFn& weight, LocalFitWorkspace& ws, LocalFitOptions opts = {}) {
  LooSmoother<> smoother(data, subset, opts);
  BandwidthChoice best;
  for (double h : grid.bandwidths(data.n(), subset.size())) {
    const double s = detail::weighted_loo_sse(smoother, data, subset, h, weight, ws);
    if (s < best.score) best = {h, s};
  }
  return best;
}

inline BandwidthChoice select_bandwidth(const Dataset& data, const IndexSet& subset,
                                        const BandwidthGrid& grid = {}, const WeightFn& weight = WeightFn::unit()) {
  LocalFitWorkspace ws;
  return select_bandwidth(data, subset, grid, weight, ws);
}

}  // namespace novas
