#include "bcpvs/bench.hpp"

#include <cmath>
#include <random>

#include "bcpvs/errors.hpp"
#include "bcpvs/rng.hpp"

namespace bcpvs {

namespace {

struct ScenarioName {
  BenchScenario scenario;
  const char* name;
};

constexpr ScenarioName kNames[] = {
    {BenchScenario::WrongCount, "wrong-count"},
    {BenchScenario::ShiftedEps, "shifted-eps"},
    {BenchScenario::WrongCovariates, "wrong-covariates"},
    {BenchScenario::EstSigma, "est-sigma"},
    {BenchScenario::MisspecVar, "misspec-var"},
    {BenchScenario::Truth, "truth"},
};

}  // namespace

BenchScenario parse_scenario(const std::string& name) {
  for (const auto& s : kNames) {
    if (name == s.name) return s.scenario;
  }
  throw ConfigError("unknown bench scenario '" + name +
                    "'; expected wrong-count, shifted-eps, wrong-covariates, est-sigma, misspec-var or truth");
}

std::string scenario_name(BenchScenario s) {
  for (const auto& e : kNames) {
    if (e.scenario == s) return e.name;
  }
  return "unknown";
}

std::vector<BenchScenario> consistency_scenarios() {
  return {BenchScenario::WrongCount, BenchScenario::ShiftedEps, BenchScenario::WrongCovariates,
          BenchScenario::EstSigma, BenchScenario::MisspecVar};
}

bool BenchResult::strictly_decreasing() const {
  for (std::size_t i = 1; i < summary.size(); ++i) {
    if (!(summary[i].mean_log_bf < summary[i - 1].mean_log_bf)) return false;
  }
  return true;
}

Simulation bench_dataset(Index n, Index covariates, bool unequal_noise, std::uint64_t seed) {
  if (covariates < 12) throw ConfigError("the bench design needs at least 12 covariates");
  if (n < 20) throw ConfigError("bench series must have at least 20 rows");
  const auto t1 = static_cast<Index>(std::floor(0.3 * static_cast<double>(n)));
  const auto t2 = static_cast<Index>(std::floor(0.7 * static_cast<double>(n)));
  const double sd1 = unequal_noise ? 1.2 : 1.0;
  const double sd2 = unequal_noise ? 0.8 : 1.0;

  CounterRng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Simulation sim;
  Dataset& d = sim.data;
  d.X.resize(n, covariates);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < covariates; ++j) d.X(i, j) = normal(rng);
  }
  d.y.resize(n);
  GroundTruth& t = sim.truth;
  t.seed = seed;
  t.changepoints = {t1, t2};
  t.segments = {{0, t1, 3.0, {{2, 1.0}, {12, 2.0}}, sd1},
                {t1, t2, 1.0, {{2, 2.0}}, sd2},
                {t2, n, -2.5, {{2, 2.0}, {3, -1.0}}, 1.0}};
  t.active_set = {2, 3, 12};
  for (const auto& s : t.segments) {
    for (Index i = s.begin; i < s.end; ++i) {
      double mean = s.intercept;
      for (auto [j, c] : s.coefficients) mean += c * d.X(i, j - 1);
      d.y(i) = mean + s.noise_sd * normal(rng);
    }
  }
  return sim;
}

Index shift_rows(const BenchOptions& options, Index n) {
  if (options.shift_rule == ShiftRule::Constant) return options.shift_rows;
  const double l = std::log(static_cast<double>(n));
  return static_cast<Index>(std::ceil(l * l));
}

BenchPair bench_pair(BenchScenario scenario, const Simulation& sim, const BenchOptions& options) {
  const Dataset& d = sim.data;
  const Index n = d.n();
  const Index P = d.num_candidates();
  std::vector<Index> active;
  for (Index j : sim.truth.active_set) active.push_back(j - 1);

  BenchPair out;
  out.truth = {Segmentation::from_changepoints(n, sim.truth.changepoints), InclusionMask::from_indices(P, active)};
  out.prior.tau2 = options.tau2;
  out.prior.max_covariates = P;
  out.prior.sigma2 = 1.0;
  out.alternative = out.truth;

  const Index t1 = sim.truth.changepoints[0];
  const Index t2 = sim.truth.changepoints[1];
  auto shifted = [&] {
    const Index moved = std::min(t1 + shift_rows(options, n), t2 - 1);
    const std::vector<Index> cps{moved, t2};
    return Segmentation::from_changepoints(n, cps);
  };

  switch (scenario) {
    case BenchScenario::WrongCount: {
      const std::vector<Index> cps{t1, (t1 + t2) / 2, t2};
      out.alternative.segmentation = Segmentation::from_changepoints(n, cps);
      break;
    }
    case BenchScenario::ShiftedEps:
      out.alternative.segmentation = shifted();
      break;
    case BenchScenario::WrongCovariates:
      out.alternative.mask.set(11, false);  // x12
      break;
    case BenchScenario::EstSigma: {
      out.prior.sigma2.reset();
      const std::vector<Index> cps{t1};
      out.alternative.segmentation = Segmentation::from_changepoints(n, cps);
      break;
    }
    case BenchScenario::MisspecVar:
      out.prior.sigma2.reset();
      out.alternative.segmentation = shifted();
      break;
    case BenchScenario::Truth:
      break;
  }
  return out;
}

BenchResult bench_consistency(BenchScenario scenario, const std::vector<Index>& n_grid, Index replicates,
                              std::uint64_t seed, const BenchOptions& options) {
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (n_grid.empty()) throw ConfigError("n grid is empty");
  BenchResult result;
  const CounterRng root(seed);
  for (std::size_t g = 0; g < n_grid.size(); ++g) {
    const Index n = n_grid[g];
    double sum = 0.0;
    double sum_sq = 0.0;
    for (Index r = 0; r < replicates; ++r) {
      // Replicate r at grid point g gets the same data for every scenario.
      CounterRng stream = root.split(g * 100003U + static_cast<std::uint64_t>(r));
      const std::uint64_t data_seed = stream();
      const Simulation sim =
          bench_dataset(n, options.covariates, scenario == BenchScenario::MisspecVar, data_seed);
      const BenchPair pair = bench_pair(scenario, sim, options);
      const double lbf = log_bayes_factor(sim.data, pair.alternative, pair.truth, pair.prior);
      result.rows.push_back({scenario, n, r, lbf});
      sum += lbf;
      sum_sq += lbf * lbf;
    }
    const double k = static_cast<double>(replicates);
    const double mean = sum / k;
    const double var = replicates > 1 ? std::max(0.0, (sum_sq - k * mean * mean) / (k - 1.0)) : 0.0;
    result.summary.push_back({scenario, n, mean, std::sqrt(var)});
  }
  return result;
}

std::string bench_csv(const BenchResult& result) {
  std::string out = "scenario,n,replicate,log_bf\n";
  for (const auto& row : result.rows) {
    out += scenario_name(row.scenario) + "," + std::to_string(row.n) + "," + std::to_string(row.replicate) + "," +
           format_double(row.log_bf) + "\n";
  }
  return out;
}

}  // namespace bcpvs
