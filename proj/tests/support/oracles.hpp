// Independent reference computations used only by the tests.
#ifndef BCPVS_TESTS_ORACLES_HPP
#define BCPVS_TESTS_ORACLES_HPP

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kLog2Pi = 1.8378770664093454836;

/// log N(y | 0, C) by a dense LDLT of the full covariance.
inline double log_mvn_zero_mean(const VectorXd& y, const MatrixXd& C) {
  const Eigen::LDLT<MatrixXd> ldlt(C);
  const double logdet = ldlt.vectorD().array().log().sum();
  const double quad = y.dot(ldlt.solve(y));
  return -0.5 * (static_cast<double>(y.size()) * kLog2Pi + logdet + quad);
}

/// Regression block marginal from y ~ N(0, sigma2 (I + tau2 X X')).
inline double regression_block_dense(const MatrixXd& X, const VectorXd& y, double sigma2, double tau2) {
  const Eigen::Index n = y.size();
  MatrixXd C = sigma2 * MatrixXd::Identity(n, n);
  if (X.cols() > 0) C += sigma2 * tau2 * X * X.transpose();
  return log_mvn_zero_mean(y, C);
}

/// Mean-shift block marginal from y ~ N(0, (sigma2 + tau2) I + V J).
inline double mean_block_dense(const VectorXd& y, double sigma2, double tau2, double V) {
  const Eigen::Index n = y.size();
  const MatrixXd C = (sigma2 + tau2) * MatrixXd::Identity(n, n) + V * MatrixXd::Ones(n, n);
  return log_mvn_zero_mean(y, C);
}

/// log of the integral of exp(f) over the real line, adaptive Gauss-Kronrod
/// after shifting by the value at `centre` to avoid underflow.
template <class F>
double log_integral_1d(F f, double centre, double scale) {
  const double offset = f(centre);
  auto g = [&](double s) { return std::exp(f(centre + scale * s) - offset); };
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      g, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-13, &err);
  return std::log(v * scale) + offset;
}

/// Integral over beta in R^k (k <= 2) of N(y | X beta, sigma2 I) N(beta | 0, sigma2 tau2 I).
inline double regression_block_quadrature(const MatrixXd& X, const VectorXd& y, double sigma2, double tau2) {
  const Eigen::Index k = X.cols();
  const double n = static_cast<double>(y.size());
  auto log_joint = [&](const VectorXd& beta) {
    const double rss = (y - X * beta).squaredNorm();
    const double lik = -0.5 * n * (kLog2Pi + std::log(sigma2)) - 0.5 * rss / sigma2;
    const double kd = static_cast<double>(k);
    const double prior =
        -0.5 * kd * (kLog2Pi + std::log(sigma2 * tau2)) - 0.5 * beta.squaredNorm() / (sigma2 * tau2);
    return lik + prior;
  };
  if (k == 0) return log_joint(VectorXd(0));
  // Posterior mode and scale to centre the integration.
  const MatrixXd A = X.transpose() * X + MatrixXd::Identity(k, k) / tau2;
  const VectorXd mode = A.ldlt().solve(X.transpose() * y);
  const VectorXd sd = (sigma2 * A.inverse()).diagonal().cwiseSqrt();
  if (k == 1) {
    return log_integral_1d([&](double b) { return log_joint(VectorXd::Constant(1, b)); }, mode(0), sd(0));
  }
  // Nested: outer over beta_0, inner over beta_1 centred on its conditional mode.
  const double offset = log_joint(mode);
  const double inner_sd = std::sqrt(sigma2 / A(1, 1));
  auto outer = [&](double s0) {
    const double b0 = mode(0) + sd(0) * s0;
    const double centre = mode(1) - A(1, 0) / A(1, 1) * (b0 - mode(0));
    auto f = [&](double b1) {
      VectorXd b(2);
      b << b0, b1;
      return log_joint(b);
    };
    const double log_inner = log_integral_1d(f, centre, inner_sd);
    return std::exp(log_inner - offset);
  };
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      outer, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-13);
  return std::log(v * sd(0)) + offset;
}

}  // namespace oracle

#endif  // BCPVS_TESTS_ORACLES_HPP
