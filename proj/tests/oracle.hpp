#pragma once

// Brute-force reference for the leave-one-out local linear fit. It shares no
// code with the library: weights come from an explicit product kernel, the
// fit is an augmented weighted least-squares problem solved by column-pivoted
// QR, and the slope penalty is written as extra pseudo-observations.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double epanechnikov(double u) { return std::abs(u) < 1.0 ? 0.75 * (1.0 - u * u) : 0.0; }

/// Leave-one-out prediction at row i of x (n x d, already restricted to the subset).
inline double loo_local_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, Eigen::Index i, double h,
                               double ridge = 1e-10) {
  const Eigen::Index n = x.rows(), d = x.cols();
  for (int attempt = 0; attempt <= 10; ++attempt, h *= 1.5) {
    std::vector<Eigen::Index> rows;
    std::vector<double> w;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double k = 1.0;
      for (Eigen::Index c = 0; c < d; ++c) k *= epanechnikov((x(j, c) - x(i, c)) / h);
      if (k > 0.0) {
        rows.push_back(j);
        w.push_back(k);
      }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    if (m < d + 2) continue;

    // penalty lambda * |slope|^2 with lambda = ridge * trace(weighted cov) / d * sum(w)
    double wsum = 0.0;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index r = 0; r < m; ++r) {
      wsum += w[r];
      mean += w[r] * x.row(rows[r]).transpose();
    }
    mean /= wsum;
    double trace = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) trace += w[r] * (x.row(rows[r]).transpose() - mean).squaredNorm();
    trace /= wsum;
    const double lambda = ridge * trace / static_cast<double>(d) * wsum;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + d, d + 1);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m + d);
    for (Eigen::Index r = 0; r < m; ++r) {
      const double s = std::sqrt(w[r]);
      a(r, 0) = s;
      for (Eigen::Index c = 0; c < d; ++c) a(r, c + 1) = s * (x(rows[r], c) - x(i, c));
      b[r] = s * y[rows[r]];
    }
    for (Eigen::Index c = 0; c < d; ++c) a(m + c, c + 1) = std::sqrt(lambda);
    const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
    return coef[0];
  }
  double total = y.sum() - y[i];
  return total / static_cast<double>(n - 1);
}

inline Eigen::VectorXd loo_predictions(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double h) {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = loo_local_linear(x, y, i, h);
  return out;
}

inline double loo_sse(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double h) {
  return (y - loo_predictions(x, y, h)).squaredNorm();
}

}  // namespace oracle
