#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "novas/dataset.hpp"
#include "novas/errors.hpp"
#include "novas/index_set.hpp"
#include "novas/kernel.hpp"

namespace novas {

/// Numerical safeguards applied to each local fit.
struct LocalFitOptions {
  /// Ridge added to the local covariance diagonal, relative to trace / d.
  double ridge = 1e-10;
  /// Bandwidth growth factor when a neighbourhood has fewer than d + 2 points.
  double inflation = 1.5;
  /// Maximum number of inflations before falling back to the leave-one-out mean.
  int max_inflations = 10;
};

/// Scratch buffers reused across query points; one per worker thread.
struct LocalFitWorkspace {
  std::vector<std::size_t> rows;
  std::vector<double> weights;
  Eigen::MatrixXd cov;
  Eigen::VectorXd cross;
  Eigen::VectorXd centre;
  Eigen::VectorXd beta;
  Eigen::LDLT<Eigen::MatrixXd> ldlt;
};

/// Leave-one-out local linear regression of y on the columns of one subset.
///
/// The covariate rows of the subset are copied into a contiguous row-major
/// block on construction. Each prediction is independent of every other, so
/// predict_at() may be called concurrently given distinct workspaces.
template <class Kernel = Epanechnikov>
class LooSmoother {
 public:
  LooSmoother(const Dataset& data, const IndexSet& subset, LocalFitOptions opts = {}, Kernel kernel = {})
      : n_(data.n()), d_(subset.size()), y_(data.y.data(), data.n()), opts_(opts), kernel_(kernel) {
    if (!data.standardized) throw DataError("local linear fits require a standardized dataset");
    IndexSet::checked(subset.indices(), data.p());
    z_.resize(n_ * d_);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = 0; k < d_; ++k) z_[i * d_ + k] = data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(subset[k]));
    y_sum_ = 0.0;
    for (double v : y_) y_sum_ += v;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }

  /// Local linear fit at row i using every other row.
  double predict_at(std::size_t i, double bandwidth, LocalFitWorkspace& ws) const {
    double h = bandwidth;
    for (int attempt = 0; attempt <= opts_.max_inflations; ++attempt) {
      if (gather_neighbours(i, h, ws) >= d_ + 2) return fit(i, ws);
      h *= opts_.inflation;
    }
    return (y_sum_ - y_[i]) / static_cast<double>(n_ - 1);
  }

  void predict(double bandwidth, std::span<double> out, LocalFitWorkspace& ws) const {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw NonPositiveBandwidth(bandwidth);
    for (std::size_t i = 0; i < n_; ++i) out[i] = predict_at(i, bandwidth, ws);
  }

 private:
  std::size_t gather_neighbours(std::size_t i, double h, LocalFitWorkspace& ws) const {
    ws.rows.clear();
    ws.weights.clear();
    const double inv_h = 1.0 / h;
    const double* zi = &z_[i * d_];
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == i) continue;
      const double* zj = &z_[j * d_];
      double w = 1.0;
      for (std::size_t k = 0; k < d_ && w > 0.0; ++k) w *= kernel_((zj[k] - zi[k]) * inv_h);
      if (w > 0.0) {
        ws.rows.push_back(j);
        ws.weights.push_back(w);
      }
    }
    return ws.rows.size();
  }

  // Weighted least squares on (1, z_j - z_i), written as
  // ybar + (x - xbar)' Sigma^-1 T with the query point at the origin.
  double fit(std::size_t i, LocalFitWorkspace& ws) const {
    const double* zi = &z_[i * d_];
    const std::size_t m = ws.rows.size();
    double wsum = 0.0, ybar = 0.0;
    ws.centre.setZero(static_cast<Eigen::Index>(d_));
    for (std::size_t r = 0; r < m; ++r) {
      const double w = ws.weights[r];
      const double* zj = &z_[ws.rows[r] * d_];
      wsum += w;
      ybar += w * y_[ws.rows[r]];
      for (std::size_t k = 0; k < d_; ++k) ws.centre[static_cast<Eigen::Index>(k)] += w * (zj[k] - zi[k]);
    }
    ybar /= wsum;
    ws.centre /= wsum;

    if (d_ == 1) {
      double sxx = 0.0, sxy = 0.0;
      const double c = ws.centre[0];
      for (std::size_t r = 0; r < m; ++r) {
        const double w = ws.weights[r];
        const double v = z_[ws.rows[r]] - zi[0] - c;
        sxx += w * v * v;
        sxy += w * v * (y_[ws.rows[r]] - ybar);
      }
      sxx /= wsum;
      sxy /= wsum;
      if (!(sxx > 0.0)) return ybar;
      return ybar - c * (sxy / (sxx * (1.0 + opts_.ridge)));
    }

    const auto d = static_cast<Eigen::Index>(d_);
    ws.cov.setZero(d, d);
    ws.cross.setZero(d);
    Eigen::VectorXd& v = ws.beta;
    v.resize(d);
    for (std::size_t r = 0; r < m; ++r) {
      const double w = ws.weights[r];
      const double* zj = &z_[ws.rows[r] * d_];
      for (Eigen::Index k = 0; k < d; ++k) v[k] = zj[k] - zi[k] - ws.centre[k];
      ws.cov.selfadjointView<Eigen::Lower>().rankUpdate(v, w);
      ws.cross.noalias() += (w * (y_[ws.rows[r]] - ybar)) * v;
    }
    ws.cov.triangularView<Eigen::StrictlyUpper>() = ws.cov.transpose();
    ws.cov /= wsum;
    ws.cross /= wsum;
    const double trace = ws.cov.trace();
    if (!(trace > 0.0)) return ybar;
    ws.cov.diagonal().array() += opts_.ridge * trace / static_cast<double>(d_);
    ws.ldlt.compute(ws.cov);
    if (ws.ldlt.info() != Eigen::Success) return ybar;
    ws.beta = ws.ldlt.solve(ws.cross);
    return ybar - ws.centre.dot(ws.beta);
  }

  std::size_t n_;
  std::size_t d_;
  std::vector<double> z_;
  std::span<const double> y_;
  double y_sum_ = 0.0;
  LocalFitOptions opts_;
  Kernel kernel_;
};

/// Leave-one-out local linear predictions for every row.
inline Eigen::VectorXd loo_predict(const Dataset& data, const IndexSet& subset, double bandwidth,
                                   LocalFitOptions opts = {}) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw NonPositiveBandwidth(bandwidth);
  LooSmoother<> smoother(data, subset, opts);
  LocalFitWorkspace ws;
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.n()));
  smoother.predict(bandwidth, std::span<double>(out.data(), data.n()), ws);
  return out;
}

}  // namespace novas
