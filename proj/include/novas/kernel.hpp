#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "novas/errors.hpp"

namespace novas {

/// Epanechnikov kernel K(u) = 0.75 (1 - u^2) on [-1, 1].
struct Epanechnikov {
  static constexpr const char* name = "epanechnikov";
  constexpr double operator()(double u) const noexcept {
    const double v = 1.0 - u * u;
    return v > 0.0 ? 0.75 * v : 0.0;
  }
};

/// Candidate bandwidths for a subset of dimension d: multiplier * n^(-1/(d+4)).
class BandwidthGrid {
 public:
  BandwidthGrid() : BandwidthGrid(default_multipliers()) {}

  explicit BandwidthGrid(std::vector<double> multipliers) : multipliers_(std::move(multipliers)) {
    if (multipliers_.empty()) throw ConfigError("bandwidth grid is empty");
    for (std::size_t k = 0; k < multipliers_.size(); ++k) {
      if (!(multipliers_[k] > 0.0) || !std::isfinite(multipliers_[k]))
        throw ConfigError("bandwidth multipliers must be positive and finite");
      if (k > 0 && !(multipliers_[k] > multipliers_[k - 1]))
        throw ConfigError("bandwidth multipliers must be strictly increasing");
    }
  }

  static std::vector<double> default_multipliers() { return {0.3, 0.5, 0.8, 1.2, 1.8, 2.7}; }

  static double base_rule(std::size_t n, std::size_t d) {
    return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
  }

  const std::vector<double>& multipliers() const noexcept { return multipliers_; }
  std::size_t size() const noexcept { return multipliers_.size(); }

  /// Increasing list of bandwidths for sample size n and subset dimension d.
  std::vector<double> bandwidths(std::size_t n, std::size_t d) const {
    const double h0 = base_rule(n, d);
    std::vector<double> out;
    out.reserve(multipliers_.size());
    for (double m : multipliers_) out.push_back(m * h0);
    return out;
  }

 private:
  std::vector<double> multipliers_;
};

}  // namespace novas
