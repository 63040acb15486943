#include "bcpvs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bcpvs/errors.hpp"

namespace bcpvs {

namespace {

void check_precision(const Eigen::Ref<const VectorXd>& prior_precision, Index k) {
  if (prior_precision.size() != k) {
    throw DimensionMismatch("prior precision has " + std::to_string(prior_precision.size()) +
                            " entries, design has " + std::to_string(k) + " columns");
  }
  for (Index j = 0; j < k; ++j) {
    if (!(prior_precision(j) >= 0.0)) {
      throw ConfigError("prior precision entries must be non-negative");
    }
  }
}

double logdet_diagonal(const Eigen::Ref<const VectorXd>& d) {
  double out = 0.0;
  for (Index j = 0; j < d.size(); ++j) {
    out += std::log(d(j));
  }
  return out;
}

}  // namespace

GramStats GramStats::from_rows(const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& y) {
  if (X.rows() != y.size()) {
    throw DimensionMismatch("design has " + std::to_string(X.rows()) + " rows, response has " +
                            std::to_string(y.size()));
  }
  GramStats s;
  s.xtx = X.transpose() * X;
  s.xty = X.transpose() * y;
  s.yty = y.squaredNorm();
  s.n = y.size();
  return s;
}

Eigen::LLT<MatrixXd> checked_cholesky(const MatrixXd& A) {
  Eigen::LLT<MatrixXd> llt(A);
  if (A.rows() == 0) {
    return llt;
  }
  if (llt.info() != Eigen::Success) {
    throw SingularSystem("matrix is not positive definite");
  }
  const double max_diag = A.diagonal().maxCoeff();
  const auto L = llt.matrixL();
  for (Index j = 0; j < A.rows(); ++j) {
    const double pivot = L(j, j) * L(j, j);
    if (!(pivot > kPivotTolerance * max_diag)) {
      throw SingularSystem("Cholesky pivot " + std::to_string(j) + " below tolerance");
    }
  }
  return llt;
}

double logdet_from_cholesky(const Eigen::LLT<MatrixXd>& llt) {
  double out = 0.0;
  const MatrixXd& L = llt.matrixLLT();
  for (Index j = 0; j < L.rows(); ++j) {
    out += std::log(L(j, j));
  }
  return 2.0 * out;
}

SegmentFit fit_from_gram(const GramStats& stats, const Eigen::Ref<const VectorXd>& prior_precision) {
  const Index k = stats.xtx.rows();
  if (stats.xtx.cols() != k || stats.xty.size() != k) {
    throw DimensionMismatch("inconsistent Gram statistics");
  }
  check_precision(prior_precision, k);

  SegmentFit fit;
  if (k == 0) {
    fit.beta_hat = VectorXd();
    fit.rss = std::max(0.0, stats.yty);
    fit.quad = fit.rss;
    return fit;
  }
  MatrixXd A = stats.xtx;
  A.diagonal() += prior_precision;
  const auto llt = checked_cholesky(A);
  fit.beta_hat = llt.solve(stats.xty);
  fit.logdet_posterior = logdet_from_cholesky(llt);
  fit.logdet_prior = logdet_diagonal(prior_precision);
  const double rss = stats.yty - 2.0 * fit.beta_hat.dot(stats.xty) +
                     fit.beta_hat.dot(stats.xtx * fit.beta_hat);
  fit.rss = std::max(0.0, rss);
  fit.quad = std::clamp(stats.yty - stats.xty.dot(fit.beta_hat), 0.0, std::max(0.0, stats.yty));
  return fit;
}

SegmentFit fit_regularized_ls(const SegmentData& seg, const Eigen::Ref<const VectorXd>& prior_precision) {
  const GramStats stats = GramStats::from_rows(seg.X, seg.y);
  SegmentFit fit = fit_from_gram(stats, prior_precision);
  if (seg.X.cols() > 0) {
    fit.rss = (seg.y - seg.X * fit.beta_hat).squaredNorm();
  }
  return fit;
}

double logdet_gram(const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& prior_precision) {
  check_precision(prior_precision, X.cols());
  MatrixXd A = X.transpose() * X;
  A.diagonal() += prior_precision;
  return logdet_from_cholesky(checked_cholesky(A));
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_bernoulli(double p, bool on) {
  if (on) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }
  return p < 1.0 ? std::log1p(-p) : -std::numeric_limits<double>::infinity();
}

}  // namespace bcpvs
