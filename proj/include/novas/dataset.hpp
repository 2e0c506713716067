#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "novas/errors.hpp"

namespace novas {

/// n observations of p covariates plus a scalar response.
///
/// Covariates are column-major so a subset of columns can be gathered
/// without striding. The response is never rescaled.
struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  bool standardized = false;
  Eigen::VectorXd column_means;
  Eigen::VectorXd column_sds;

  Dataset() = default;
  Dataset(Eigen::MatrixXd covariates, Eigen::VectorXd response)
      : x(std::move(covariates)), y(std::move(response)) {
    validate();
  }

  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x.cols()); }

  void validate() const {
    if (x.rows() < 2) throw DataError("dataset needs at least 2 rows");
    if (x.cols() < 1) throw DataError("dataset needs at least 1 covariate");
    if (y.size() != x.rows())
      throw DataError("response length " + std::to_string(y.size()) + " differs from row count " +
                      std::to_string(x.rows()));
    if (!x.allFinite() || !y.allFinite()) throw DataError("dataset contains non-finite values");
  }
};

/// Sample mean and (n-1)-denominator standard deviation of one column.
inline std::pair<double, double> column_moments(const Eigen::Ref<const Eigen::VectorXd>& col) {
  const double n = static_cast<double>(col.size());
  const double mean = col.sum() / n;
  const double ss = (col.array() - mean).square().sum();
  return {mean, std::sqrt(ss / (n - 1.0))};
}

/// Centres every covariate to mean 0 and scales it to unit sample sd.
/// Throws ConstantColumn (zero-based index) on a zero-variance column.
inline Dataset standardize(const Dataset& in) {
  in.validate();
  Dataset out;
  out.x.resize(in.x.rows(), in.x.cols());
  out.y = in.y;
  out.column_means.resize(in.x.cols());
  out.column_sds.resize(in.x.cols());
  for (Eigen::Index j = 0; j < in.x.cols(); ++j) {
    auto [mean, sd] = column_moments(in.x.col(j));
    // equal entries can still leave a rounding-level sd
    if (in.x.col(j).maxCoeff() == in.x.col(j).minCoeff() || !(sd > 1e-12 * std::max(1.0, std::abs(mean))))
      throw ConstantColumn(static_cast<std::size_t>(j));
    out.x.col(j) = (in.x.col(j).array() - mean) / sd;
    out.column_means[j] = mean;
    out.column_sds[j] = sd;
  }
  out.standardized = true;
  return out;
}

}  // namespace novas
