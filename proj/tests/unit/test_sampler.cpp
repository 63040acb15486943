#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "bcpvs/errors.hpp"
#include "bcpvs/model.hpp"
#include "bcpvs/oracle.hpp"
#include "bcpvs/report.hpp"
#include "bcpvs/sampler.hpp"
#include "bcpvs/simgen.hpp"

using namespace bcpvs;

namespace {

Dataset series(std::vector<double> y) {
  Dataset d;
  d.y = Eigen::Map<const VectorXd>(y.data(), static_cast<Index>(y.size()));
  d.X = MatrixXd(d.n(), 0);
  return d;
}

PriorConfig known(double sigma2, double pn) {
  PriorConfig p;
  p.sigma2 = sigma2;
  p.changepoint_prob = pn;
  return p;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_CASE("changepoint conditional matches the marginal-likelihood ratio") {
  const Dataset d = series({0, 0, 0, 10, 10, 10});
  const PriorConfig prior = known(1.0, 0.1);
  GibbsSampler sampler(d, prior);
  const ChainState empty = sampler.initial_state();
  const std::vector<Index> at3{3};
  const ModelId split{Segmentation::from_changepoints(6, at3), InclusionMask(0)};
  const ModelId none{Segmentation(6), InclusionMask(0)};
  const double expected = logit(0.1) + log_marginal(d, split, prior) - log_marginal(d, none, prior);
  CHECK(sampler.changepoint_log_odds(empty, 3) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected > std::log(999.0));

  int hits = 0;
  constexpr int kRepeats = 10000;
  for (int r = 0; r < kRepeats; ++r) {
    CounterRng rng(17, static_cast<std::uint64_t>(r));
    const ChainState s = gibbs_sweep_changepoints(empty, d, prior, rng);
    hits += s.segmentation.is_changepoint(3) ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / kRepeats > 0.999);
}

TEST_CASE("constant data never favours a split") {
  const Dataset d = series(std::vector<double>(12, 0.0));
  const PriorConfig prior = known(1.0, 0.2);
  GibbsSampler sampler(d, prior);
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    ChainState s = sampler.initial_state();
    for (Index i = 1; i < 12; ++i) s.segmentation.set(i, gen() % 3 == 0);
    for (Index i = 1; i < 12; ++i) CHECK(sampler.changepoint_log_odds(s, i) < logit(0.2));
  }
}

TEST_CASE("sweeps keep the state valid") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal;
  Dataset d;
  d.y.resize(30);
  d.X.resize(30, 3);
  for (Index i = 0; i < 30; ++i) {
    d.y(i) = normal(gen) + (i > 15 ? 2.0 : 0.0);
    for (Index j = 0; j < 3; ++j) d.X(i, j) = normal(gen);
  }
  PriorConfig prior;
  prior.changepoint_prob = 0.3;
  prior.inclusion_prob = 0.5;
  prior.max_covariates = 2;
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  CounterRng rng(5);
  for (int it = 0; it < 500; ++it) {
    sampler.sweep(s, rng);
    REQUIRE(sampler.state_is_valid(s));
    CHECK(s.mask.size() <= 2);
  }
}

TEST_CASE("a zero covariate leaves the inclusion odds at the prior odds") {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> normal;
  Dataset d;
  d.y.resize(20);
  d.X = MatrixXd::Zero(20, 2);
  for (Index i = 0; i < 20; ++i) {
    d.y(i) = normal(gen);
    d.X(i, 1) = normal(gen);
  }
  PriorConfig prior;
  prior.inclusion_prob = 0.3;
  prior.tau2 = 2.5;
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  s.sigma2 = 0.8;
  s.segmentation.set(7, true);
  CHECK(sampler.inclusion_log_odds(s, 0) == doctest::Approx(logit(0.3)).epsilon(1e-10));
  s.mask.set(1, true);
  CHECK(sampler.inclusion_log_odds(s, 0) == doctest::Approx(logit(0.3)).epsilon(1e-10));
  s.mask.set(0, true);
  CHECK(sampler.inclusion_log_odds(s, 0) == doctest::Approx(logit(0.3)).epsilon(1e-10));
}

TEST_CASE("inclusion conditional matches the marginal-likelihood ratio") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  Dataset d;
  d.y.resize(25);
  d.X.resize(25, 3);
  for (Index i = 0; i < 25; ++i) {
    for (Index j = 0; j < 3; ++j) d.X(i, j) = normal(gen);
    d.y(i) = d.X(i, 0) - 0.5 * d.X(i, 2) + normal(gen);
  }
  PriorConfig prior;
  prior.inclusion_prob = 0.4;
  prior.tau2 = 1.7;
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  s.sigma2 = 1.2;
  s.segmentation.set(10, true);
  s.mask.set(2, true);
  PriorConfig at = prior;
  at.sigma2 = 1.2;
  for (Index j = 0; j < 3; ++j) {
    ModelId with{s.segmentation, s.mask};
    with.mask.set(j, true);
    ModelId without{s.segmentation, s.mask};
    without.mask.set(j, false);
    const double expected = logit(0.4) + log_marginal(d, with, at) - log_marginal(d, without, at);
    CHECK(sampler.inclusion_log_odds(s, j) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("a strong covariate is included given the true segmentation") {
  const Simulation sim = gen_example2(1);
  PriorConfig prior;
  GibbsSampler sampler(sim.data, prior);
  ChainState s = sampler.initial_state();
  for (Index c : sim.truth.changepoints) s.segmentation.set(c, true);
  s.mask.set(2, true);
  s.mask.set(11, true);
  s.sigma2 = 1.0;
  const double odds = sampler.inclusion_log_odds(s, 1);
  CHECK(1.0 / (1.0 + std::exp(-odds)) > 0.99);
}

TEST_CASE("a unit prior inclusion probability pins the covariate") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> normal;
  Dataset d;
  d.y.resize(20);
  d.X.resize(20, 2);
  for (Index i = 0; i < 20; ++i) {
    d.y(i) = normal(gen);
    for (Index j = 0; j < 2; ++j) d.X(i, j) = normal(gen);
  }
  PriorConfig prior;
  prior.inclusion_probs = {1.0, 0.5};
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  CounterRng rng(9);
  for (int it = 0; it < 200; ++it) {
    sampler.sweep(s, rng);
    CHECK(s.mask.included(0));
  }
}

TEST_CASE("the size cap truncates the inclusion conditional") {
  std::mt19937_64 gen(10);
  std::normal_distribution<double> normal;
  Dataset d;
  d.y.resize(20);
  d.X.resize(20, 3);
  for (Index i = 0; i < 20; ++i) {
    for (Index j = 0; j < 3; ++j) d.X(i, j) = normal(gen);
    d.y(i) = d.X.row(i).sum();
  }
  PriorConfig prior;
  prior.max_covariates = 1;
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  s.mask.set(0, true);
  CHECK(sampler.inclusion_log_odds(s, 1) == -INFINITY);
  CHECK(std::isfinite(sampler.inclusion_log_odds(s, 0)));
}

TEST_CASE("variance draws collapse on exactly fitted data") {
  std::vector<double> y(100, 0.0);
  for (std::size_t i = 50; i < 100; ++i) y[i] = 1.0;
  const Dataset d = series(y);
  PriorConfig prior;
  prior.tau2 = 100.0;  // a nearly flat slab leaves no shrinkage residual
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  s.segmentation.set(50, true);
  CounterRng rng(11);
  int small = 0;
  for (int r = 0; r < 10000; ++r) {
    sampler.update_sigma2(s, rng);
    small += s.sigma2 < 0.01 ? 1 : 0;
  }
  CHECK(small > 9900);
}

TEST_CASE("variance draws concentrate at the noise variance") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::vector<double> y(1000);
  for (auto& v : y) v = normal(gen);
  const Dataset d = series(y);
  GibbsSampler sampler(d, PriorConfig{});
  ChainState s = sampler.initial_state();
  CounterRng rng(13);
  double sum = 0.0;
  for (int r = 0; r < 4000; ++r) {
    sampler.update_sigma2(s, rng);
    sum += s.sigma2;
  }
  const double mean = sum / 4000.0;
  CHECK(mean >= 3.5);
  CHECK(mean <= 4.5);
}

TEST_CASE("variance draws scale with the square of the response") {
  std::mt19937_64 gen(14);
  std::normal_distribution<double> normal;
  std::vector<double> y(60);
  for (auto& v : y) v = 1.0 + normal(gen);
  std::vector<double> y3 = y;
  for (auto& v : y3) v *= 3.0;
  auto draws = [](const Dataset& d) {
    GibbsSampler sampler(d, PriorConfig{});
    ChainState s = sampler.initial_state();
    s.segmentation.set(30, true);
    CounterRng rng(15);
    std::vector<double> out;
    for (int r = 0; r < 10000; ++r) {
      sampler.update_sigma2(s, rng);
      out.push_back(s.sigma2);
    }
    return out;
  };
  const auto a = draws(series(y));
  const auto b = draws(series(y3));
  for (double q : {0.1, 0.5, 0.9}) {
    CHECK(quantile(b, q) == doctest::Approx(9.0 * quantile(a, q)).epsilon(0.05));
  }
}

TEST_CASE("known variance is left unchanged by the variance step") {
  const Dataset d = series({1, 2, 3, 4});
  const PriorConfig prior = known(0.3, 0.2);
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  CounterRng rng(1);
  const ChainState after = update_sigma2(s, d, prior, rng);
  CHECK(after.sigma2 == 0.3);
}

TEST_CASE("summaries are deterministic and independent of the thread count") {
  const Simulation sim = gen_example1(3);
  SamplerConfig config;
  config.iterations = 600;
  config.burn_in = 200;
  config.seed = 99;
  config.chains = 3;
  PriorConfig prior;
  prior.kind = ModelKind::MeanShift;
  config.threads = 1;
  const std::string a = to_json(run_chain(sim.data, prior, config)).dump();
  const std::string b = to_json(run_chain(sim.data, prior, config)).dump();
  config.threads = 3;
  const std::string c = to_json(run_chain(sim.data, prior, config)).dump();
  CHECK(a == b);
  CHECK(a == c);
  config.seed = 100;
  CHECK(to_json(run_chain(sim.data, prior, config)).dump() != a);
}

TEST_CASE("summary invariants") {
  const Simulation sim = gen_example3(2);
  Dataset d = sim.data;
  d.X.conservativeResize(Eigen::NoChange, 15);
  SamplerConfig config;
  config.iterations = 300;
  config.burn_in = 100;
  config.thin = 3;
  config.seed = 1;
  config.chains = 2;
  const PosteriorSummary s = run_chain(d, PriorConfig{}, config);
  CHECK(s.n_samples == 2 * config.retained());
  CHECK(s.cp_prob.size() == 300);
  CHECK(s.cp_prob[0] == 0.0);
  CHECK(s.cp_prob[1] == 0.0);  // the first modelled row cannot start a block
  CHECK(s.fitted_mean.size() == 300);
  CHECK(s.fitted_mean[0] == doctest::Approx(d.y(0)).epsilon(1e-12));
  CHECK(s.pip.size() == 16);
  double total = 0.0;
  for (auto [k, v] : s.partition_count_dist) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : s.cp_prob) CHECK((v >= 0.0 && v <= 1.0));
  for (double v : s.pip) CHECK((v >= 0.0 && v <= 1.0));
  CHECK(s.per_chain.size() == 2);
}

TEST_CASE("fitted means on constant-mean data match the sample mean") {
  std::mt19937_64 gen(16);
  std::normal_distribution<double> normal(2.0, 1.0);
  std::vector<double> y(40);
  for (auto& v : y) v = normal(gen);
  const Dataset d = series(y);
  PriorConfig prior = known(1.0, 1.0 / 40.0);
  prior.tau2 = 1e6;
  GibbsSampler sampler(d, prior);
  ChainState s = sampler.initial_state();
  CounterRng rng(17);
  constexpr int kBatches = 20;
  constexpr int kPerBatch = 200;
  std::vector<VectorXd> batch(kBatches, VectorXd::Zero(40));
  for (int it = 0; it < 500; ++it) sampler.sweep(s, rng);
  for (int b = 0; b < kBatches; ++b) {
    for (int it = 0; it < kPerBatch; ++it) {
      sampler.sweep(s, rng);
      batch[static_cast<std::size_t>(b)] += sampler.conditional_fitted_mean(s) / kPerBatch;
    }
  }
  const double ybar = d.y.mean();
  for (Index i = 0; i < 40; ++i) {
    double mean = 0.0;
    for (const auto& v : batch) mean += v(i) / kBatches;
    double var = 0.0;
    for (const auto& v : batch) var += (v(i) - mean) * (v(i) - mean) / (kBatches - 1);
    const double se = std::sqrt(var / kBatches);
    CHECK(std::abs(mean - ybar) <= 2.0 * se + 1e-5);
  }
}

TEST_CASE("fitted means recover a noise-free step") {
  std::vector<double> y(60, 0.0);
  for (std::size_t i = 30; i < 60; ++i) y[i] = 1.0;
  const Dataset d = series(y);
  SamplerConfig config;
  config.iterations = 2000;
  config.burn_in = 1000;
  config.seed = 3;
  const PosteriorSummary s = run_chain(d, PriorConfig{}, config);
  for (std::size_t i = 0; i < 60; ++i) CHECK(std::abs(s.fitted_mean[i] - y[i]) < 0.05);

  std::vector<ChainState> states;
  GibbsSampler sampler(d, PriorConfig{});
  ChainState st = sampler.initial_state();
  st.segmentation.set(30, true);
  states.push_back(st);
  const auto direct = fitted_means(states, d, PriorConfig{});
  CHECK(direct[0] == doctest::Approx(0.0));
  CHECK(direct[59] == doctest::Approx(30.0 / 31.0));
}

TEST_CASE("fitted means beat the raw data on the piecewise-constant study") {
  SamplerConfig config;
  config.iterations = 2000;
  config.burn_in = 1000;
  PriorConfig prior;
  prior.kind = ModelKind::MeanShift;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Simulation sim = gen_example1(seed);
    config.seed = seed;
    const PosteriorSummary s = run_chain(sim.data, prior, config);
    double fit = 0.0;
    double raw = 0.0;
    for (Index i = 0; i < sim.data.n(); ++i) {
      const double t = sim.truth.theta[static_cast<std::size_t>(i)];
      fit += std::pow(s.fitted_mean[static_cast<std::size_t>(i)] - t, 2);
      raw += std::pow(sim.data.y(i) - t, 2);
    }
    CHECK(fit < raw);
  }
}

TEST_CASE("sampler marginals match enumeration on a toy series") {
  const Dataset d = series({0.1, -0.3, 0.2, 1.4, 1.1, 1.6});
  for (ModelKind kind : {ModelKind::Regression, ModelKind::MeanShift}) {
    PriorConfig prior;
    prior.kind = kind;
    prior.changepoint_prob = 0.3;
    SamplerConfig config;
    config.iterations = 60000;
    config.burn_in = 1000;
    config.seed = 5;
    const PosteriorSummary s = run_chain(d, prior, config);
    const ExactPosterior exact = enumerate_exact(d, prior);
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(s.cp_prob[i] - exact.marginals.cp_prob[i]) < 0.02);
    for (auto [k, v] : exact.marginals.partition_count_dist) {
      const double got = s.partition_count_dist.count(k) ? s.partition_count_dist.at(k) : 0.0;
      CHECK(std::abs(got - v) < 0.02);
    }
  }
}

TEST_CASE("invalid sampler configuration") {
  SamplerConfig c;
  c.burn_in = c.iterations;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SamplerConfig{};
  c.thin = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SamplerConfig{};
  c.chains = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
