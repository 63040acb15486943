#ifndef BCPVS_MODEL_HPP
#define BCPVS_MODEL_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcpvs/numerics.hpp"

namespace bcpvs {

/// Model matrix actually used by the likelihood.
///
/// Rows are the modelled observations (the first observation is dropped
/// when an AR(1) lag column is present, it only enters as a regressor).
/// Columns are the always-included columns followed by the selectable ones.
struct Design {
  MatrixXd columns;
  VectorXd y;
  Index num_fixed = 0;       // leading columns outside of selection (intercept)
  Index first_observation = 0;

  Index rows() const { return y.size(); }
  Index num_candidates() const { return columns.cols() - num_fixed; }
};

struct Dataset {
  VectorXd y;
  MatrixXd X;  // n x p, zero columns when there are no covariates
  bool has_intercept = true;
  bool ar_lag = false;
  std::vector<std::string> covariate_names;

  Index n() const { return y.size(); }
  Index p() const { return X.cols(); }
  Index first_observation() const { return ar_lag ? 1 : 0; }
  /// Number of observations entering the likelihood.
  Index n_eff() const { return n() - first_observation(); }
  /// Covariates plus the lag column, i.e. the length of an inclusion mask.
  Index num_candidates() const { return p() + (ar_lag ? 1 : 0); }
  std::vector<std::string> candidate_names() const;

  void validate() const;
  Design design() const;
};

struct Block {
  Index begin = 0;
  Index end = 0;  // one past the last row
  Index size() const { return end - begin; }
  bool operator==(const Block&) const = default;
};

/// Changepoint indicators over the modelled rows. Position i set means a new
/// block starts at row i; position 0 is never set.
class Segmentation {
 public:
  Segmentation() = default;
  explicit Segmentation(Index n);

  static Segmentation from_indicators(std::vector<std::uint8_t> indicators);
  static Segmentation from_changepoints(Index n, std::span<const Index> starts);

  Index size() const { return static_cast<Index>(indicators_.size()); }
  bool is_changepoint(Index i) const { return indicators_[static_cast<std::size_t>(i)] != 0; }
  void set(Index i, bool on);

  Index num_blocks() const { return num_blocks_; }
  std::vector<Index> changepoints() const;
  std::vector<Block> blocks() const;
  /// First row of the block containing row i (scans left).
  Index block_start(Index i) const;
  /// One past the last row of the block containing row i (scans right).
  Index block_end(Index i) const;

  const std::vector<std::uint8_t>& indicators() const { return indicators_; }
  bool operator==(const Segmentation&) const = default;

 private:
  std::vector<std::uint8_t> indicators_;
  Index num_blocks_ = 0;
};

/// Global inclusion indicators over the selectable columns.
class InclusionMask {
 public:
  InclusionMask() = default;
  explicit InclusionMask(Index dimension) : included_(static_cast<std::size_t>(dimension), 0) {}

  static InclusionMask from_indices(Index dimension, std::span<const Index> indices);

  Index dimension() const { return static_cast<Index>(included_.size()); }
  /// Number of included columns.
  Index size() const { return count_; }
  bool included(Index j) const { return included_[static_cast<std::size_t>(j)] != 0; }
  void set(Index j, bool on);
  std::vector<Index> indices() const;
  const std::vector<std::uint8_t>& indicators() const { return included_; }

  bool operator==(const InclusionMask&) const = default;

 private:
  std::vector<std::uint8_t> included_;
  Index count_ = 0;
};

struct ModelId {
  Segmentation segmentation;
  InclusionMask mask;
  bool operator==(const ModelId&) const = default;
};

enum class ModelKind {
  MeanShift,   // piecewise-constant mean with the mu_j / theta_i hierarchy
  Regression,  // changing regression with a global spike-and-slab mask
};

struct PriorConfig {
  ModelKind kind = ModelKind::Regression;
  double expected_changepoints = 1.0;       // c_n, p_n = c_n / n
  std::optional<double> changepoint_prob;   // overrides c_n / n
  std::optional<double> inclusion_prob;     // scalar p~ override
  std::vector<double> inclusion_probs;      // per-candidate p~ override
  double alpha1 = 0.1;                      // -log p~ = (log n)^(1 + alpha1)
  double tau2 = 1.0;
  double mean_var = 1.0;                    // V
  std::optional<double> sigma2;             // empty: estimate
  bool sample_tau2 = true;                  // mean-shift model only
  std::optional<Index> max_covariates;      // q_n

  double changepoint_probability(Index n) const;
  double inclusion_probability(Index j, Index n) const;
  Index covariate_cap(Index n, Index num_candidates) const;
  bool estimate_sigma2() const { return !sigma2.has_value(); }
  void validate(Index n, Index num_candidates) const;
};

/// Log marginal of one regression block under beta ~ N(0, sigma2 * tau2 * I).
double regression_block_log_marginal(const GramStats& stats, double sigma2, double tau2);

/// Log marginal of one mean-shift block: y ~ N(0, (sigma2 + tau2) I + V J).
double mean_block_log_marginal(Index n, double sum, double sum_sq, double sigma2, double tau2,
                               double mean_var);

/// Indices of the design columns active under a mask.
std::vector<Index> active_columns(const Design& design, const InclusionMask& mask);

struct Sigma2Estimate {
  double value = 0.0;
  bool ridge_fallback = false;
};

/// Pooled block least-squares residual variance, n^{-1} sum_j RSS_j.
Sigma2Estimate empirical_sigma2(const Dataset& data, const Segmentation& seg, const InclusionMask& mask,
                                double fallback_tau2 = 1.0);

/// Collapsed log marginal likelihood of a model. In estimate mode the model's
/// own empirical variance is plugged in.
double log_marginal(const Dataset& data, const ModelId& model, const PriorConfig& prior);

/// Collapsed log marginal at explicit variance values.
double log_marginal_at(const Dataset& data, const ModelId& model, const PriorConfig& prior, double sigma2,
                       double tau2);

/// Regression model with sigma2 integrated against pi(sigma2) ~ 1/sigma2.
double log_marginal_sigma2_integrated(const Dataset& data, const ModelId& model, const PriorConfig& prior);

double log_prior(const ModelId& model, const PriorConfig& prior, Index n, Index p);

double log_bayes_factor(const Dataset& data, const ModelId& a, const ModelId& b, const PriorConfig& prior);

double log_posterior_ratio(const Dataset& data, const ModelId& a, const ModelId& b, const PriorConfig& prior);

/// Throws when the model does not fit the dataset or violates the prior's cap.
void validate_model(const Dataset& data, const ModelId& model, const PriorConfig& prior);

}  // namespace bcpvs

#endif  // BCPVS_MODEL_HPP
