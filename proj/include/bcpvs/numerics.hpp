#ifndef BCPVS_NUMERICS_HPP
#define BCPVS_NUMERICS_HPP

#include <Eigen/Dense>

namespace bcpvs {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Relative pivot threshold for the Cholesky factor of X'X + S.
inline constexpr double kPivotTolerance = 1e-10;

/// Observations of one partition block restricted to the active columns.
struct SegmentData {
  Eigen::Ref<const MatrixXd> X;
  Eigen::Ref<const VectorXd> y;
};

/// Sufficient statistics of one block: X'X, X'y, y'y and the row count.
struct GramStats {
  MatrixXd xtx;
  VectorXd xty;
  double yty = 0.0;
  Index n = 0;

  static GramStats from_rows(const Eigen::Ref<const MatrixXd>& X,
                             const Eigen::Ref<const VectorXd>& y);
};

struct SegmentFit {
  VectorXd beta_hat;
  double rss = 0.0;
  double logdet_prior = 0.0;      // log det(S)
  double logdet_posterior = 0.0;  // log det(X'X + S)
  double quad = 0.0;              // y'y - y'X (X'X + S)^{-1} X'y
};

/// Solves (X'X + S) beta = X'y through a Cholesky factor of X'X + S.
///
/// `prior_precision` is the diagonal of S. Zero entries are allowed as long
/// as X'X + S stays positive definite; the pivot check is relative to the
/// largest diagonal entry of X'X + S. The residual sum of squares is formed
/// from explicit residuals.
SegmentFit fit_regularized_ls(const SegmentData& seg, const Eigen::Ref<const VectorXd>& prior_precision);

/// Same fit from precomputed block statistics. `rss` is assembled from the
/// Gram entries and clamped at zero.
SegmentFit fit_from_gram(const GramStats& stats, const Eigen::Ref<const VectorXd>& prior_precision);

/// log det(X'X + S) from the Cholesky diagonal.
double logdet_gram(const Eigen::Ref<const MatrixXd>& X, const Eigen::Ref<const VectorXd>& prior_precision);

/// Cholesky factor of a symmetric positive definite matrix with the relative
/// pivot check applied; throws SingularSystem when it fails.
Eigen::LLT<MatrixXd> checked_cholesky(const MatrixXd& A);

/// Sum of log diagonal entries of a Cholesky factor, doubled.
double logdet_from_cholesky(const Eigen::LLT<MatrixXd>& llt);

/// Numerically safe log(exp(a) + exp(b)).
double log_add_exp(double a, double b);

/// log(p) when `on`, log(1-p) otherwise; exact at p = 0 and p = 1.
double log_bernoulli(double p, bool on);

}  // namespace bcpvs

#endif  // BCPVS_NUMERICS_HPP
