#ifndef BCPVS_SAMPLER_HPP
#define BCPVS_SAMPLER_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "bcpvs/model.hpp"
#include "bcpvs/rng.hpp"

namespace bcpvs {

struct ChainState {
  Segmentation segmentation;
  InclusionMask mask;
  double sigma2 = 1.0;
  double tau2 = 1.0;
  std::uint64_t iteration = 0;
};

struct SamplerConfig {
  Index iterations = 8000;  // total sweeps, burn-in included
  Index burn_in = 4000;
  Index thin = 1;
  std::uint64_t seed = 0;
  Index chains = 1;
  Index threads = 1;

  Index retained() const { return (iterations - burn_in + thin - 1) / thin; }
  void validate() const;
};

struct PosteriorSummary {
  std::vector<double> cp_prob;      // per observation; entries before the first modelled row are 0
  std::vector<double> pip;          // per selectable column
  std::map<Index, double> partition_count_dist;
  std::map<Index, double> model_size_dist;  // number of selected columns
  std::vector<double> fitted_mean;  // per observation
  ModelId map_model;
  double map_log_posterior = 0.0;
  double sigma2_mean = 0.0;
  double tau2_mean = 0.0;
  Index n_samples = 0;
  std::vector<PosteriorSummary> per_chain;  // filled when more than one chain ran

  /// Mode of partition_count_dist (smallest count on ties).
  Index partition_count_mode() const;
};

/// Log-spaced grid used for the griddy-Gibbs variance updates.
std::vector<double> variance_grid();

/// Collapsed Gibbs sampler for both model kinds.
///
/// Holds the design and per-mask prefix sums so block marginals cost
/// O(k^3) regardless of block length. Not thread-safe; use one instance per
/// chain.
class GibbsSampler {
 public:
  GibbsSampler(const Dataset& data, const PriorConfig& prior);

  ChainState initial_state() const;

  void sweep_changepoints(ChainState& state, CounterRng& rng);
  void sweep_inclusion(ChainState& state, CounterRng& rng);
  void update_sigma2(ChainState& state, CounterRng& rng);
  void update_tau2(ChainState& state, CounterRng& rng);
  /// Changepoints, then inclusion (if any candidates), then variances.
  void sweep(ChainState& state, CounterRng& rng);

  /// Exact full-conditional log odds of I^y_i = 1 given everything else.
  double changepoint_log_odds(const ChainState& state, Index i);
  /// Exact full-conditional log odds of I^beta_j = 1; -inf at the size cap.
  double inclusion_log_odds(const ChainState& state, Index j);

  /// Posterior mean of the block means given the discrete state, per modelled row.
  VectorXd conditional_fitted_mean(const ChainState& state);
  /// Log prior + collapsed log marginal (variance integrated for the
  /// regression model in estimate mode).
  double log_score(const ChainState& state);

  bool state_is_valid(const ChainState& state) const;

  const Design& design() const { return design_; }
  const PriorConfig& prior() const { return prior_; }

 private:
  void ensure_mask(const InclusionMask& mask);
  GramStats prefix_gram(Block b) const;
  double block_log_marginal(Block b, const ChainState& state) const;
  double mean_block(Block b, double sigma2, double tau2) const;
  double total_mean_marginal(const std::vector<Block>& blocks, double sigma2, double tau2) const;
  double draw_from_grid(const std::vector<double>& log_weights, CounterRng& rng) const;

  Design design_;
  PriorConfig prior_;
  Index cap_ = 0;
  double changepoint_logit_ = 0.0;
  std::vector<double> inclusion_logit_;
  std::vector<double> grid_;

  // Mean-shift prefix sums.
  std::vector<double> csum_;
  std::vector<double> csq_;

  // Regression prefix sums of z z' with z = (active columns, y), row-major.
  InclusionMask cached_mask_;
  bool has_cache_ = false;
  std::vector<Index> cols_;
  Index width_ = 0;
  std::vector<double> prefix_;
};

// Single-step entry points; each builds a sampler for the call.
ChainState gibbs_sweep_changepoints(ChainState state, const Dataset& data, const PriorConfig& prior,
                                    CounterRng& rng);
ChainState gibbs_sweep_inclusion(ChainState state, const Dataset& data, const PriorConfig& prior, CounterRng& rng);
ChainState update_sigma2(ChainState state, const Dataset& data, const PriorConfig& prior, CounterRng& rng);

/// Runs config.chains chains (in parallel up to config.threads) and pools
/// their retained samples. Deterministic in config.seed.
PosteriorSummary run_chain(const Dataset& data, const PriorConfig& prior, const SamplerConfig& config);

/// Averages the conditional posterior means over stored states; length n.
std::vector<double> fitted_means(const std::vector<ChainState>& samples, const Dataset& data,
                                 const PriorConfig& prior);

}  // namespace bcpvs

#endif  // BCPVS_SAMPLER_HPP
