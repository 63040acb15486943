#include "bcpvs/sampler.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "bcpvs/errors.hpp"

namespace bcpvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double logit(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return std::log(p) - std::log1p(-p);
}

bool draw_bernoulli(double log_odds, CounterRng& rng) {
  if (std::isnan(log_odds)) throw NonFinite("conditional log odds is NaN");
  const double prob = 1.0 / (1.0 + std::exp(-log_odds));
  return rng.uniform() < prob;
}

struct Accumulator {
  std::vector<double> cp;
  std::vector<double> pip;
  std::map<Index, double> partitions;
  std::map<Index, double> sizes;
  std::vector<double> fitted;
  double sigma2 = 0.0;
  double tau2 = 0.0;
  Index count = 0;
  ModelId map_model;
  double map_score = -kInf;
};

PosteriorSummary finalize(Accumulator acc) {
  PosteriorSummary s;
  const double c = static_cast<double>(std::max<Index>(acc.count, 1));
  s.cp_prob = std::move(acc.cp);
  for (auto& v : s.cp_prob) v /= c;
  s.pip = std::move(acc.pip);
  for (auto& v : s.pip) v /= c;
  s.fitted_mean = std::move(acc.fitted);
  for (auto& v : s.fitted_mean) v /= c;
  for (auto [k, v] : acc.partitions) s.partition_count_dist[k] = v / c;
  for (auto [k, v] : acc.sizes) s.model_size_dist[k] = v / c;
  s.sigma2_mean = acc.sigma2 / c;
  s.tau2_mean = acc.tau2 / c;
  s.n_samples = acc.count;
  s.map_model = std::move(acc.map_model);
  s.map_log_posterior = acc.map_score;
  return s;
}

PosteriorSummary run_single_chain(const Dataset& data, const PriorConfig& prior, const SamplerConfig& config,
                                  Index chain) {
  GibbsSampler sampler(data, prior);
  CounterRng rng(config.seed, static_cast<std::uint64_t>(chain));
  ChainState state = sampler.initial_state();

  const Index n = data.n();
  const Index offset = data.first_observation();
  Accumulator acc;
  acc.cp.assign(static_cast<std::size_t>(n), 0.0);
  acc.pip.assign(static_cast<std::size_t>(data.num_candidates()), 0.0);
  acc.fitted.assign(static_cast<std::size_t>(n), 0.0);

  for (Index it = 0; it < config.iterations; ++it) {
    sampler.sweep(state, rng);
    assert(sampler.state_is_valid(state));
    if (it < config.burn_in || (it - config.burn_in) % config.thin != 0) continue;

    ++acc.count;
    for (Index i = 1; i < state.segmentation.size(); ++i) {
      if (state.segmentation.is_changepoint(i)) acc.cp[static_cast<std::size_t>(i + offset)] += 1.0;
    }
    for (Index j = 0; j < state.mask.dimension(); ++j) {
      if (state.mask.included(j)) acc.pip[static_cast<std::size_t>(j)] += 1.0;
    }
    acc.partitions[state.segmentation.num_blocks()] += 1.0;
    acc.sizes[state.mask.size()] += 1.0;
    const VectorXd fit = sampler.conditional_fitted_mean(state);
    for (Index r = 0; r < fit.size(); ++r) acc.fitted[static_cast<std::size_t>(r + offset)] += fit(r);
    for (Index r = 0; r < offset; ++r) acc.fitted[static_cast<std::size_t>(r)] += data.y(r);
    acc.sigma2 += state.sigma2;
    acc.tau2 += state.tau2;
    const double score = sampler.log_score(state);
    if (!std::isfinite(score)) throw NonFinite("model score is not finite");
    if (score > acc.map_score) {
      acc.map_score = score;
      acc.map_model = ModelId{state.segmentation, state.mask};
    }
  }
  return finalize(std::move(acc));
}

PosteriorSummary pool_chains(const std::vector<PosteriorSummary>& chains) {
  if (chains.size() == 1) return chains.front();
  PosteriorSummary out;
  double total = 0.0;
  for (const auto& c : chains) total += static_cast<double>(c.n_samples);
  out.cp_prob.assign(chains.front().cp_prob.size(), 0.0);
  out.pip.assign(chains.front().pip.size(), 0.0);
  out.fitted_mean.assign(chains.front().fitted_mean.size(), 0.0);
  out.map_log_posterior = -kInf;
  for (const auto& c : chains) {
    const double w = static_cast<double>(c.n_samples) / total;
    for (std::size_t i = 0; i < out.cp_prob.size(); ++i) out.cp_prob[i] += w * c.cp_prob[i];
    for (std::size_t i = 0; i < out.pip.size(); ++i) out.pip[i] += w * c.pip[i];
    for (std::size_t i = 0; i < out.fitted_mean.size(); ++i) out.fitted_mean[i] += w * c.fitted_mean[i];
    for (auto [k, v] : c.partition_count_dist) out.partition_count_dist[k] += w * v;
    for (auto [k, v] : c.model_size_dist) out.model_size_dist[k] += w * v;
    out.sigma2_mean += w * c.sigma2_mean;
    out.tau2_mean += w * c.tau2_mean;
    out.n_samples += c.n_samples;
    if (c.map_log_posterior > out.map_log_posterior) {
      out.map_log_posterior = c.map_log_posterior;
      out.map_model = c.map_model;
    }
  }
  out.per_chain = chains;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

void SamplerConfig::validate() const {
  if (iterations <= 0) throw ConfigError("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn-in must be in [0, iterations)");
  if (thin < 1) throw ConfigError("thin must be at least 1");
  if (chains < 1) throw ConfigError("chains must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
}

Index PosteriorSummary::partition_count_mode() const {
  Index best = 0;
  double best_p = -1.0;
  for (auto [k, v] : partition_count_dist) {
    if (v > best_p) {
      best = k;
      best_p = v;
    }
  }
  return best;
}

std::vector<double> variance_grid() {
  constexpr int kPoints = 200;
  std::vector<double> grid(kPoints);
  for (int k = 0; k < kPoints; ++k) {
    grid[static_cast<std::size_t>(k)] = std::pow(10.0, -4.0 + 8.0 * k / (kPoints - 1));
  }
  return grid;
}

GibbsSampler::GibbsSampler(const Dataset& data, const PriorConfig& prior)
    : design_(data.design()), prior_(prior), grid_(variance_grid()) {
  const Index n = design_.rows();
  const Index P = design_.num_candidates();
  prior_.validate(n, P);
  if (prior_.kind == ModelKind::MeanShift && design_.num_fixed == 0) {
    throw ConfigError("the mean-shift model needs the intercept column");
  }
  cap_ = prior_.covariate_cap(n, P);
  changepoint_logit_ = logit(prior_.changepoint_probability(n));
  inclusion_logit_.resize(static_cast<std::size_t>(P));
  for (Index j = 0; j < P; ++j) inclusion_logit_[static_cast<std::size_t>(j)] = logit(prior_.inclusion_probability(j, n));

  if (prior_.kind == ModelKind::MeanShift) {
    csum_.assign(static_cast<std::size_t>(n + 1), 0.0);
    csq_.assign(static_cast<std::size_t>(n + 1), 0.0);
    for (Index r = 0; r < n; ++r) {
      const double y = design_.y(r);
      csum_[static_cast<std::size_t>(r + 1)] = csum_[static_cast<std::size_t>(r)] + y;
      csq_[static_cast<std::size_t>(r + 1)] = csq_[static_cast<std::size_t>(r)] + y * y;
    }
  }
}

ChainState GibbsSampler::initial_state() const {
  ChainState s;
  const Index n = design_.rows();
  s.segmentation = Segmentation(n);
  s.mask = InclusionMask(design_.num_candidates());
  for (Index j = 0; j < s.mask.dimension(); ++j) {
    // Degenerate priors pin the indicator from the start.
    if (inclusion_logit_[static_cast<std::size_t>(j)] == kInf && s.mask.size() < cap_) s.mask.set(j, true);
  }
  const double mean = design_.y.mean();
  const double var = (design_.y.array() - mean).square().sum() / static_cast<double>(n);
  const double start = var > 0.0 ? var : 1.0;
  s.tau2 = prior_.tau2;
  if (prior_.sigma2) {
    s.sigma2 = *prior_.sigma2;
  } else {
    s.sigma2 = start;
  }
  return s;
}

bool GibbsSampler::state_is_valid(const ChainState& state) const {
  const auto& seg = state.segmentation;
  if (seg.size() != design_.rows() || seg.size() == 0) return false;
  if (seg.is_changepoint(0)) return false;
  Index blocks = 1;
  for (Index i = 1; i < seg.size(); ++i) blocks += seg.is_changepoint(i) ? 1 : 0;
  if (blocks != seg.num_blocks()) return false;
  for (const Block& b : seg.blocks()) {
    if (b.size() < 1) return false;
  }
  if (state.mask.dimension() != design_.num_candidates() || state.mask.size() > cap_) return false;
  return state.sigma2 > 0.0 && state.tau2 > 0.0;
}

void GibbsSampler::ensure_mask(const InclusionMask& mask) {
  if (prior_.kind == ModelKind::MeanShift) return;
  if (has_cache_ && cached_mask_ == mask) return;
  cached_mask_ = mask;
  has_cache_ = true;
  cols_ = active_columns(design_, mask);
  const Index k = static_cast<Index>(cols_.size());
  width_ = k + 1;
  const Index n = design_.rows();
  const Index stride = width_ * width_;
  prefix_.assign(static_cast<std::size_t>((n + 1) * stride), 0.0);
  std::vector<double> z(static_cast<std::size_t>(width_));
  for (Index r = 0; r < n; ++r) {
    for (Index a = 0; a < k; ++a) z[static_cast<std::size_t>(a)] = design_.columns(r, cols_[static_cast<std::size_t>(a)]);
    z[static_cast<std::size_t>(k)] = design_.y(r);
    const double* prev = prefix_.data() + r * stride;
    double* cur = prefix_.data() + (r + 1) * stride;
    for (Index a = 0; a < width_; ++a) {
      for (Index b = 0; b < width_; ++b) {
        cur[a * width_ + b] = prev[a * width_ + b] + z[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(b)];
      }
    }
  }
}

GramStats GibbsSampler::prefix_gram(Block blk) const {
  const Index k = width_ - 1;
  const Index stride = width_ * width_;
  const double* lo = prefix_.data() + blk.begin * stride;
  const double* hi = prefix_.data() + blk.end * stride;
  GramStats s;
  s.xtx.resize(k, k);
  s.xty.resize(k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) s.xtx(a, b) = hi[a * width_ + b] - lo[a * width_ + b];
    s.xty(a) = hi[a * width_ + k] - lo[a * width_ + k];
  }
  s.yty = hi[k * width_ + k] - lo[k * width_ + k];
  s.n = blk.size();
  return s;
}

double GibbsSampler::mean_block(Block b, double sigma2, double tau2) const {
  const auto lo = static_cast<std::size_t>(b.begin);
  const auto hi = static_cast<std::size_t>(b.end);
  return mean_block_log_marginal(b.size(), csum_[hi] - csum_[lo], csq_[hi] - csq_[lo], sigma2, tau2,
                                 prior_.mean_var);
}

double GibbsSampler::total_mean_marginal(const std::vector<Block>& blocks, double sigma2, double tau2) const {
  double out = 0.0;
  for (const Block& b : blocks) out += mean_block(b, sigma2, tau2);
  return out;
}

double GibbsSampler::block_log_marginal(Block b, const ChainState& state) const {
  if (prior_.kind == ModelKind::MeanShift) return mean_block(b, state.sigma2, state.tau2);
  return regression_block_log_marginal(prefix_gram(b), state.sigma2, state.tau2);
}

double GibbsSampler::changepoint_log_odds(const ChainState& state, Index i) {
  ensure_mask(state.mask);
  const auto& seg = state.segmentation;
  const Index a = seg.block_start(i - 1);
  const Index b = seg.block_end(i);
  const double split = block_log_marginal({a, i}, state) + block_log_marginal({i, b}, state);
  const double merged = block_log_marginal({a, b}, state);
  return changepoint_logit_ + split - merged;
}

void GibbsSampler::sweep_changepoints(ChainState& state, CounterRng& rng) {
  ensure_mask(state.mask);
  for (Index i = 1; i < state.segmentation.size(); ++i) {
    const double odds = changepoint_log_odds(state, i);
    state.segmentation.set(i, draw_bernoulli(odds, rng));
  }
}

double GibbsSampler::inclusion_log_odds(const ChainState& state, Index j) {
  ensure_mask(state.mask);
  const double prior_logit = inclusion_logit_[static_cast<std::size_t>(j)];
  const bool on = state.mask.included(j);
  if (!on && state.mask.size() + 1 > cap_) return -kInf;
  if (std::isinf(prior_logit)) return prior_logit;

  const Index k = width_ - 1;
  const Index col = design_.num_fixed + j;
  const auto blocks = state.segmentation.blocks();
  double delta = 0.0;
  if (on) {
    // Drop j's position from the cached Gram.
    const Index pos = static_cast<Index>(std::find(cols_.begin(), cols_.end(), col) - cols_.begin());
    for (const Block& b : blocks) {
      const GramStats full = prefix_gram(b);
      GramStats reduced;
      reduced.n = full.n;
      reduced.yty = full.yty;
      reduced.xtx.resize(k - 1, k - 1);
      reduced.xty.resize(k - 1);
      for (Index r = 0, rr = 0; r < k; ++r) {
        if (r == pos) continue;
        for (Index c = 0, cc = 0; c < k; ++c) {
          if (c == pos) continue;
          reduced.xtx(rr, cc++) = full.xtx(r, c);
        }
        reduced.xty(rr++) = full.xty(r);
      }
      delta += regression_block_log_marginal(full, state.sigma2, state.tau2) -
               regression_block_log_marginal(reduced, state.sigma2, state.tau2);
    }
  } else {
    for (const Block& b : blocks) {
      const GramStats base = prefix_gram(b);
      GramStats grown;
      grown.n = base.n;
      grown.yty = base.yty;
      grown.xtx.resize(k + 1, k + 1);
      grown.xty.resize(k + 1);
      grown.xtx.topLeftCorner(k, k) = base.xtx;
      grown.xty.head(k) = base.xty;
      VectorXd cross = VectorXd::Zero(k);
      double sq = 0.0;
      double xy = 0.0;
      for (Index r = b.begin; r < b.end; ++r) {
        const double v = design_.columns(r, col);
        for (Index a = 0; a < k; ++a) cross(a) += v * design_.columns(r, cols_[static_cast<std::size_t>(a)]);
        sq += v * v;
        xy += v * design_.y(r);
      }
      grown.xtx.block(k, 0, 1, k) = cross.transpose();
      grown.xtx.block(0, k, k, 1) = cross;
      grown.xtx(k, k) = sq;
      grown.xty(k) = xy;
      delta += regression_block_log_marginal(grown, state.sigma2, state.tau2) -
               regression_block_log_marginal(base, state.sigma2, state.tau2);
    }
  }
  return prior_logit + delta;
}

void GibbsSampler::sweep_inclusion(ChainState& state, CounterRng& rng) {
  if (prior_.kind == ModelKind::MeanShift) return;
  for (Index j = 0; j < state.mask.dimension(); ++j) {
    const double odds = inclusion_log_odds(state, j);
    const bool on = draw_bernoulli(odds, rng);
    if (on != state.mask.included(j)) state.mask.set(j, on);
  }
}

double GibbsSampler::draw_from_grid(const std::vector<double>& log_weights, CounterRng& rng) const {
  double hi = -kInf;
  for (double w : log_weights) hi = std::max(hi, w);
  if (!std::isfinite(hi)) throw NonFinite("variance grid weights are not finite");
  std::vector<double> cdf(log_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    total += std::exp(log_weights[k] - hi);
    cdf[k] = total;
  }
  const double u = rng.uniform() * total;
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), grid_.size() - 1);
  return grid_[k];
}

void GibbsSampler::update_sigma2(ChainState& state, CounterRng& rng) {
  if (prior_.sigma2) {
    state.sigma2 = *prior_.sigma2;
    return;
  }
  const auto blocks = state.segmentation.blocks();
  if (prior_.kind == ModelKind::MeanShift) {
    // Jeffreys prior on a log-spaced grid puts equal mass on every point.
    std::vector<double> lw(grid_.size());
    for (std::size_t k = 0; k < grid_.size(); ++k) lw[k] = total_mean_marginal(blocks, grid_[k], state.tau2);
    state.sigma2 = draw_from_grid(lw, rng);
    return;
  }
  ensure_mask(state.mask);
  double quad = 0.0;
  for (const Block& b : blocks) {
    const GramStats stats = prefix_gram(b);
    quad += fit_from_gram(stats, VectorXd::Constant(stats.xtx.rows(), 1.0 / state.tau2)).quad;
  }
  const double shape = 0.5 * static_cast<double>(design_.rows());
  std::gamma_distribution<double> gamma(shape, 1.0);
  const double g = gamma(rng);
  // Exact-fit data gives quad == 0; keep the draw strictly positive.
  const double scale = std::max(0.5 * quad, std::numeric_limits<double>::min());
  state.sigma2 = std::max(scale / g, std::numeric_limits<double>::min());
}

void GibbsSampler::update_tau2(ChainState& state, CounterRng& rng) {
  if (prior_.kind != ModelKind::MeanShift || !prior_.sample_tau2) return;
  const auto blocks = state.segmentation.blocks();
  std::vector<double> lw(grid_.size());
  for (std::size_t k = 0; k < grid_.size(); ++k) lw[k] = total_mean_marginal(blocks, state.sigma2, grid_[k]);
  state.tau2 = draw_from_grid(lw, rng);
}

void GibbsSampler::sweep(ChainState& state, CounterRng& rng) {
  sweep_changepoints(state, rng);
  if (design_.num_candidates() > 0) sweep_inclusion(state, rng);
  update_sigma2(state, rng);
  update_tau2(state, rng);
  ++state.iteration;
}

VectorXd GibbsSampler::conditional_fitted_mean(const ChainState& state) {
  ensure_mask(state.mask);
  VectorXd out(design_.rows());
  for (const Block& b : state.segmentation.blocks()) {
    if (prior_.kind == ModelKind::MeanShift) {
      const double s = state.sigma2 + state.tau2;
      const double sum = csum_[static_cast<std::size_t>(b.end)] - csum_[static_cast<std::size_t>(b.begin)];
      const double mu = prior_.mean_var * sum / (s + static_cast<double>(b.size()) * prior_.mean_var);
      for (Index r = b.begin; r < b.end; ++r) out(r) = (state.tau2 * design_.y(r) + state.sigma2 * mu) / s;
    } else {
      const GramStats stats = prefix_gram(b);
      const SegmentFit fit = fit_from_gram(stats, VectorXd::Constant(stats.xtx.rows(), 1.0 / state.tau2));
      for (Index r = b.begin; r < b.end; ++r) {
        double v = 0.0;
        for (std::size_t a = 0; a < cols_.size(); ++a) v += design_.columns(r, cols_[a]) * fit.beta_hat(static_cast<Index>(a));
        out(r) = v;
      }
    }
  }
  return out;
}

double GibbsSampler::log_score(const ChainState& state) {
  ensure_mask(state.mask);
  const Index n = design_.rows();
  const Index cps = state.segmentation.num_blocks() - 1;
  const double pn = prior_.changepoint_probability(n);
  double prior = static_cast<double>(cps) * log_bernoulli(pn, true) +
                 static_cast<double>(n - 1 - cps) * log_bernoulli(pn, false);
  for (Index j = 0; j < state.mask.dimension(); ++j) {
    prior += log_bernoulli(prior_.inclusion_probability(j, n), state.mask.included(j));
  }
  const auto blocks = state.segmentation.blocks();
  if (prior_.kind == ModelKind::Regression && !prior_.sigma2) {
    double det_terms = 0.0;
    double quad = 0.0;
    for (const Block& b : blocks) {
      const GramStats stats = prefix_gram(b);
      const SegmentFit fit = fit_from_gram(stats, VectorXd::Constant(stats.xtx.rows(), 1.0 / state.tau2));
      det_terms += 0.5 * (fit.logdet_prior - fit.logdet_posterior);
      quad += fit.quad;
    }
    const double half_n = 0.5 * static_cast<double>(n);
    return prior - half_n * kLog2Pi + det_terms + std::lgamma(half_n) -
           half_n * std::log(std::max(0.5 * quad, std::numeric_limits<double>::min()));
  }
  double lm = 0.0;
  for (const Block& b : blocks) lm += block_log_marginal(b, state);
  return prior + lm;
}

// ---------------------------------------------------------------------------

ChainState gibbs_sweep_changepoints(ChainState state, const Dataset& data, const PriorConfig& prior,
                                    CounterRng& rng) {
  GibbsSampler sampler(data, prior);
  sampler.sweep_changepoints(state, rng);
  return state;
}

ChainState gibbs_sweep_inclusion(ChainState state, const Dataset& data, const PriorConfig& prior, CounterRng& rng) {
  GibbsSampler sampler(data, prior);
  sampler.sweep_inclusion(state, rng);
  return state;
}

ChainState update_sigma2(ChainState state, const Dataset& data, const PriorConfig& prior, CounterRng& rng) {
  GibbsSampler sampler(data, prior);
  sampler.update_sigma2(state, rng);
  return state;
}

PosteriorSummary run_chain(const Dataset& data, const PriorConfig& prior, const SamplerConfig& config) {
  config.validate();
  prior.validate(data.n_eff(), data.num_candidates());
  const auto chains = static_cast<std::size_t>(config.chains);
  std::vector<PosteriorSummary> results(chains);
  const auto workers = std::min<std::size_t>(chains, static_cast<std::size_t>(config.threads));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chains; ++c) results[c] = run_single_chain(data, prior, config, static_cast<Index>(c));
  } else {
    std::vector<std::exception_ptr> errors(chains);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < chains; c += workers) {
          try {
            results[c] = run_single_chain(data, prior, config, static_cast<Index>(c));
          } catch (...) {
            errors[c] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return pool_chains(results);
}

std::vector<double> fitted_means(const std::vector<ChainState>& samples, const Dataset& data,
                                 const PriorConfig& prior) {
  GibbsSampler sampler(data, prior);
  const Index offset = data.first_observation();
  std::vector<double> out(static_cast<std::size_t>(data.n()), 0.0);
  if (samples.empty()) return out;
  for (const auto& s : samples) {
    const VectorXd fit = sampler.conditional_fitted_mean(s);
    for (Index r = 0; r < fit.size(); ++r) out[static_cast<std::size_t>(r + offset)] += fit(r);
    for (Index r = 0; r < offset; ++r) out[static_cast<std::size_t>(r)] += data.y(r);
  }
  for (auto& v : out) v /= static_cast<double>(samples.size());
  return out;
}

}  // namespace bcpvs
