#include "bcpvs/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bcpvs/errors.hpp"

namespace bcpvs {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

GramStats block_stats(const Design& design, const std::vector<Index>& cols, Block block) {
  const auto rows = Eigen::seqN(block.begin, block.size());
  const MatrixXd X = design.columns(rows, cols);
  return GramStats::from_rows(X, design.y(rows));
}

void check_variance(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw NonFinite(std::string(name) + " must be positive and finite, got " + std::to_string(v));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset

std::vector<std::string> Dataset::candidate_names() const {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(num_candidates()));
  for (Index j = 0; j < p(); ++j) {
    if (static_cast<std::size_t>(j) < covariate_names.size()) {
      names.push_back(covariate_names[static_cast<std::size_t>(j)]);
    } else {
      names.push_back("x" + std::to_string(j + 1));
    }
  }
  if (ar_lag) names.emplace_back("y_lag1");
  return names;
}

void Dataset::validate() const {
  if (n() < 2) throw ConfigError("dataset needs at least two observations");
  if (X.cols() > 0 && X.rows() != n()) {
    throw DimensionMismatch("covariate matrix has " + std::to_string(X.rows()) + " rows, response has " +
                            std::to_string(n()));
  }
  if (ar_lag && n() < 3) throw ConfigError("AR(1) lag needs at least three observations");
  if (!covariate_names.empty() && static_cast<Index>(covariate_names.size()) != p()) {
    throw DimensionMismatch("covariate name count does not match covariate columns");
  }
  if (!y.allFinite() || (X.size() > 0 && !X.allFinite())) throw NonFinite("dataset contains non-finite values");
}

Design Dataset::design() const {
  validate();
  Design d;
  d.first_observation = first_observation();
  const Index rows = n_eff();
  const Index fixed = has_intercept ? 1 : 0;
  d.num_fixed = fixed;
  d.columns.resize(rows, fixed + num_candidates());
  if (has_intercept) d.columns.col(0).setOnes();
  if (p() > 0) d.columns.middleCols(fixed, p()) = X.bottomRows(rows);
  if (ar_lag) d.columns.col(fixed + p()) = y.head(rows);
  d.y = y.tail(rows);
  return d;
}

// ---------------------------------------------------------------------------
// Segmentation

Segmentation::Segmentation(Index n) : indicators_(static_cast<std::size_t>(n), 0), num_blocks_(n > 0 ? 1 : 0) {}

Segmentation Segmentation::from_indicators(std::vector<std::uint8_t> indicators) {
  if (indicators.empty()) throw ConfigError("segmentation must cover at least one row");
  if (indicators[0] != 0) throw ConfigError("the first row cannot start a new block");
  Segmentation s;
  s.num_blocks_ = 1;
  for (auto& v : indicators) {
    v = v ? 1 : 0;
  }
  for (std::size_t i = 1; i < indicators.size(); ++i) s.num_blocks_ += indicators[i];
  s.indicators_ = std::move(indicators);
  return s;
}

Segmentation Segmentation::from_changepoints(Index n, std::span<const Index> starts) {
  Segmentation s(n);
  for (Index c : starts) {
    if (c <= 0 || c >= n) {
      throw ConfigError("changepoint " + std::to_string(c) + " outside 1.." + std::to_string(n - 1));
    }
    s.set(c, true);
  }
  return s;
}

void Segmentation::set(Index i, bool on) {
  if (i == 0 && on) throw ConfigError("the first row cannot start a new block");
  auto& v = indicators_[static_cast<std::size_t>(i)];
  const std::uint8_t nv = on ? 1 : 0;
  num_blocks_ += static_cast<Index>(nv) - static_cast<Index>(v);
  v = nv;
}

std::vector<Index> Segmentation::changepoints() const {
  std::vector<Index> out;
  for (Index i = 1; i < size(); ++i) {
    if (is_changepoint(i)) out.push_back(i);
  }
  return out;
}

std::vector<Block> Segmentation::blocks() const {
  std::vector<Block> out;
  out.reserve(static_cast<std::size_t>(num_blocks_));
  Index begin = 0;
  for (Index i = 1; i < size(); ++i) {
    if (is_changepoint(i)) {
      out.push_back({begin, i});
      begin = i;
    }
  }
  if (size() > 0) out.push_back({begin, size()});
  return out;
}

Index Segmentation::block_start(Index i) const {
  while (i > 0 && !is_changepoint(i)) --i;
  return i;
}

Index Segmentation::block_end(Index i) const {
  ++i;
  while (i < size() && !is_changepoint(i)) ++i;
  return i;
}

// ---------------------------------------------------------------------------
// InclusionMask

InclusionMask InclusionMask::from_indices(Index dimension, std::span<const Index> indices) {
  InclusionMask m(dimension);
  for (Index j : indices) {
    if (j < 0 || j >= dimension) throw ConfigError("mask index " + std::to_string(j) + " out of range");
    m.set(j, true);
  }
  return m;
}

void InclusionMask::set(Index j, bool on) {
  auto& v = included_[static_cast<std::size_t>(j)];
  const std::uint8_t nv = on ? 1 : 0;
  count_ += static_cast<Index>(nv) - static_cast<Index>(v);
  v = nv;
}

std::vector<Index> InclusionMask::indices() const {
  std::vector<Index> out;
  for (Index j = 0; j < dimension(); ++j) {
    if (included(j)) out.push_back(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PriorConfig

double PriorConfig::changepoint_probability(Index n) const {
  if (changepoint_prob) return *changepoint_prob;
  return expected_changepoints / static_cast<double>(n);
}

double PriorConfig::inclusion_probability(Index j, Index n) const {
  if (!inclusion_probs.empty()) return inclusion_probs.at(static_cast<std::size_t>(j));
  if (inclusion_prob) return *inclusion_prob;
  return std::exp(-std::pow(std::log(static_cast<double>(n)), 1.0 + alpha1));
}

Index PriorConfig::covariate_cap(Index n, Index num_candidates) const {
  if (max_covariates) return std::min(*max_covariates, num_candidates);
  const auto by_n = static_cast<Index>(std::ceil(2.0 * std::log(static_cast<double>(n))));
  return std::min(by_n, num_candidates);
}

void PriorConfig::validate(Index n, Index num_candidates) const {
  const double pn = changepoint_probability(n);
  if (!(pn > 0.0 && pn < 1.0)) throw ConfigError("changepoint probability must lie in (0,1)");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw ConfigError("tau2 must be positive");
  if (!(mean_var > 0.0) || !std::isfinite(mean_var)) throw ConfigError("V must be positive");
  if (sigma2 && !(*sigma2 > 0.0)) throw ConfigError("sigma2 must be positive");
  if (alpha1 < 0.0) throw ConfigError("alpha1 must be non-negative");
  if (max_covariates && *max_covariates < 0) throw ConfigError("max covariates must be non-negative");
  if (!inclusion_probs.empty() && static_cast<Index>(inclusion_probs.size()) != num_candidates) {
    throw ConfigError("per-covariate inclusion probabilities do not match the candidate count");
  }
  for (Index j = 0; j < num_candidates; ++j) {
    const double pj = inclusion_probability(j, n);
    if (!(pj >= 0.0 && pj <= 1.0)) throw ConfigError("inclusion probabilities must lie in [0,1]");
  }
  if (kind == ModelKind::MeanShift && num_candidates > 0) {
    throw ConfigError("the mean-shift model takes no covariates");
  }
}

// ---------------------------------------------------------------------------
// Block marginals

double regression_block_log_marginal(const GramStats& stats, double sigma2, double tau2) {
  const Index k = stats.xtx.rows();
  const double n = static_cast<double>(stats.n);
  if (k == 0) {
    return -0.5 * n * (kLog2Pi + std::log(sigma2)) - 0.5 * stats.yty / sigma2;
  }
  const VectorXd precision = VectorXd::Constant(k, 1.0 / tau2);
  const SegmentFit fit = fit_from_gram(stats, precision);
  return -0.5 * n * (kLog2Pi + std::log(sigma2)) + 0.5 * fit.logdet_prior - 0.5 * fit.logdet_posterior -
         0.5 * fit.quad / sigma2;
}

double mean_block_log_marginal(Index n, double sum, double sum_sq, double sigma2, double tau2, double mean_var) {
  const double m = static_cast<double>(n);
  const double s = sigma2 + tau2;
  const double total = s + m * mean_var;
  const double centered = std::max(0.0, sum_sq - sum * sum / m);
  const double quad = (centered + (sum * sum / m) * (s / total)) / s;
  const double logdet = (m - 1.0) * std::log(s) + std::log(total);
  return -0.5 * m * kLog2Pi - 0.5 * logdet - 0.5 * quad;
}

std::vector<Index> active_columns(const Design& design, const InclusionMask& mask) {
  std::vector<Index> cols;
  cols.reserve(static_cast<std::size_t>(design.num_fixed + mask.size()));
  for (Index c = 0; c < design.num_fixed; ++c) cols.push_back(c);
  for (Index j = 0; j < mask.dimension(); ++j) {
    if (mask.included(j)) cols.push_back(design.num_fixed + j);
  }
  return cols;
}

// ---------------------------------------------------------------------------
// Model-level quantities

void validate_model(const Dataset& data, const ModelId& model, const PriorConfig& prior) {
  if (model.segmentation.size() != data.n_eff()) {
    throw DimensionMismatch("segmentation covers " + std::to_string(model.segmentation.size()) +
                            " rows, dataset models " + std::to_string(data.n_eff()));
  }
  if (model.mask.dimension() != data.num_candidates()) {
    throw DimensionMismatch("mask has " + std::to_string(model.mask.dimension()) + " entries, dataset has " +
                            std::to_string(data.num_candidates()) + " candidate columns");
  }
  const Index cap = prior.covariate_cap(data.n_eff(), data.num_candidates());
  if (model.mask.size() > cap) {
    throw MaskTooLarge("mask includes " + std::to_string(model.mask.size()) + " columns, cap is " +
                       std::to_string(cap));
  }
  if (prior.kind == ModelKind::MeanShift && !data.has_intercept) {
    throw ConfigError("the mean-shift model needs the intercept column");
  }
}

Sigma2Estimate empirical_sigma2(const Dataset& data, const Segmentation& seg, const InclusionMask& mask,
                                double fallback_tau2) {
  const Design design = data.design();
  const auto cols = active_columns(design, mask);
  Sigma2Estimate out;
  double rss = 0.0;
  for (const Block& b : seg.blocks()) {
    const auto rows = Eigen::seqN(b.begin, b.size());
    const MatrixXd X = design.columns(rows, cols);
    const VectorXd y = design.y(rows);
    const SegmentData sd{X, y};
    try {
      rss += fit_regularized_ls(sd, VectorXd::Zero(X.cols())).rss;
    } catch (const SingularSystem&) {
      out.ridge_fallback = true;
      rss += fit_regularized_ls(sd, VectorXd::Constant(X.cols(), 1.0 / fallback_tau2)).rss;
    }
  }
  out.value = rss / static_cast<double>(design.rows());
  return out;
}

double log_marginal_at(const Dataset& data, const ModelId& model, const PriorConfig& prior, double sigma2,
                       double tau2) {
  validate_model(data, model, prior);
  check_variance(sigma2, "sigma2");
  check_variance(tau2, "tau2");
  const Design design = data.design();
  double total = 0.0;
  if (prior.kind == ModelKind::MeanShift) {
    for (const Block& b : model.segmentation.blocks()) {
      const auto seg = design.y.segment(b.begin, b.size());
      total += mean_block_log_marginal(b.size(), seg.sum(), seg.squaredNorm(), sigma2, tau2, prior.mean_var);
    }
  } else {
    const auto cols = active_columns(design, model.mask);
    for (const Block& b : model.segmentation.blocks()) {
      total += regression_block_log_marginal(block_stats(design, cols, b), sigma2, tau2);
    }
  }
  if (!std::isfinite(total)) throw NonFinite("log marginal is not finite");
  return total;
}

double log_marginal(const Dataset& data, const ModelId& model, const PriorConfig& prior) {
  double sigma2 = 0.0;
  if (prior.sigma2) {
    sigma2 = *prior.sigma2;
  } else {
    validate_model(data, model, prior);
    sigma2 = empirical_sigma2(data, model.segmentation, model.mask, prior.tau2).value;
    if (!(sigma2 > 0.0)) throw NonFinite("empirical variance is zero; the model fits exactly");
  }
  return log_marginal_at(data, model, prior, sigma2, prior.tau2);
}

double log_marginal_sigma2_integrated(const Dataset& data, const ModelId& model, const PriorConfig& prior) {
  if (prior.kind != ModelKind::Regression) {
    throw ConfigError("closed-form variance integration is only defined for the regression model");
  }
  validate_model(data, model, prior);
  const Design design = data.design();
  const auto cols = active_columns(design, model.mask);
  double det_terms = 0.0;
  double quad = 0.0;
  for (const Block& b : model.segmentation.blocks()) {
    const GramStats stats = block_stats(design, cols, b);
    const SegmentFit fit = fit_from_gram(stats, VectorXd::Constant(stats.xtx.rows(), 1.0 / prior.tau2));
    det_terms += 0.5 * (fit.logdet_prior - fit.logdet_posterior);
    quad += fit.quad;
  }
  const double half_n = 0.5 * static_cast<double>(design.rows());
  if (!(quad > 0.0)) throw NonFinite("residual quadratic form is zero");
  const double out = -half_n * kLog2Pi + det_terms + std::lgamma(half_n) - half_n * std::log(0.5 * quad);
  if (!std::isfinite(out)) throw NonFinite("integrated log marginal is not finite");
  return out;
}

double log_prior(const ModelId& model, const PriorConfig& prior, Index n, Index p) {
  if (model.segmentation.size() != n || model.mask.dimension() != p) {
    throw DimensionMismatch("model dimensions do not match n and p");
  }
  const double pn = prior.changepoint_probability(n);
  double out = 0.0;
  const Index cps = model.segmentation.num_blocks() - 1;
  out += static_cast<double>(cps) * log_bernoulli(pn, true) +
         static_cast<double>(n - 1 - cps) * log_bernoulli(pn, false);
  for (Index j = 0; j < p; ++j) {
    out += log_bernoulli(prior.inclusion_probability(j, n), model.mask.included(j));
  }
  return out;
}

double log_bayes_factor(const Dataset& data, const ModelId& a, const ModelId& b, const PriorConfig& prior) {
  if (a == b) return 0.0;
  return log_marginal(data, a, prior) - log_marginal(data, b, prior);
}

double log_posterior_ratio(const Dataset& data, const ModelId& a, const ModelId& b, const PriorConfig& prior) {
  if (a == b) return 0.0;
  const Index n = data.n_eff();
  const Index p = data.num_candidates();
  return log_bayes_factor(data, a, b, prior) + log_prior(a, prior, n, p) - log_prior(b, prior, n, p);
}

}  // namespace bcpvs
