// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bcpvs/bench.hpp"
#include "bcpvs/model.hpp"
#include "bcpvs/oracle.hpp"
#include "bcpvs/pelt.hpp"
#include "bcpvs/report.hpp"
#include "bcpvs/sampler.hpp"
#include "bcpvs/simgen.hpp"
#include "../support/oracles.hpp"

using namespace bcpvs;

namespace {

constexpr int kSeeds = 10;

// Posterior changepoint mass within +-5 of a 0-based index.
double mass_near(const std::vector<double>& cp_prob, Index centre) {
  double m = 0.0;
  for (Index i = std::max<Index>(0, centre - 5); i <= std::min<Index>(cp_prob.size() - 1, centre + 5); ++i) {
    m += cp_prob[static_cast<std::size_t>(i)];
  }
  return m;
}

bool all_peaks(const PosteriorSummary& s, const std::vector<Index>& truth) {
  return std::all_of(truth.begin(), truth.end(), [&](Index c) { return mass_near(s.cp_prob, c) >= 0.5; });
}

SamplerConfig default_sampler(std::uint64_t seed) {
  SamplerConfig c;
  c.seed = seed;
  return c;
}

std::string criterion_ex1(bool& ok) {
  int mode7 = 0, peaks = 0;
  for (int s = 1; s <= kSeeds; ++s) {
    const Simulation sim = gen_example1(static_cast<std::uint64_t>(s));
    PriorConfig prior;
    prior.kind = ModelKind::MeanShift;
    const PosteriorSummary post = run_chain(sim.data, prior, default_sampler(1000 + s));
    mode7 += post.partition_count_mode() == 7 ? 1 : 0;
    peaks += all_peaks(post, sim.truth.changepoints) ? 1 : 0;
  }
  ok = mode7 >= 8 && peaks >= 8;
  return "mode=7 in " + std::to_string(mode7) + "/10, all six peaks in " + std::to_string(peaks) + "/10";
}

std::string criterion_ex2(bool& ok) {
  double p3 = 0.0;
  int exact = 0;
  for (int s = 1; s <= kSeeds; ++s) {
    const Simulation sim = gen_example2(static_cast<std::uint64_t>(s));
    const PosteriorSummary post = run_chain(sim.data, PriorConfig{}, default_sampler(2000 + s));
    const auto it = post.partition_count_dist.find(3);
    p3 += it == post.partition_count_dist.end() ? 0.0 : it->second;
    std::vector<Index> selected;
    for (std::size_t j = 0; j < post.pip.size(); ++j) {
      if (post.pip[j] > 0.5) selected.push_back(static_cast<Index>(j) + 1);
    }
    exact += selected == sim.truth.active_set ? 1 : 0;
  }
  p3 /= kSeeds;
  ok = p3 >= 0.80 && exact >= 8;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "mean P(3 partitions)=%.3f, exact selection in %d/10", p3, exact);
  return buf;
}

std::string criterion_ex3(bool& ok) {
  int lag = 0, cps = 0;
  for (int s = 1; s <= kSeeds; ++s) {
    const Simulation sim = gen_example3(static_cast<std::uint64_t>(s));
    const PosteriorSummary post = run_chain(sim.data, PriorConfig{}, default_sampler(3000 + s));
    lag += post.pip.back() >= 0.95 ? 1 : 0;
    cps += all_peaks(post, sim.truth.changepoints) ? 1 : 0;
  }
  ok = lag >= 9 && cps >= 9;
  return "lag PIP>=0.95 in " + std::to_string(lag) + "/10, both changepoints in " + std::to_string(cps) + "/10";
}

double max_dev(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_dev(const std::map<Index, double>& a, const std::map<Index, double>& b) {
  std::set<Index> keys;
  for (auto [k, v] : a) keys.insert(k);
  for (auto [k, v] : b) keys.insert(k);
  double m = 0.0;
  for (Index k : keys) m = std::max(m, std::abs((a.count(k) ? a.at(k) : 0.0) - (b.count(k) ? b.at(k) : 0.0)));
  return m;
}

std::string criterion_oracle(bool& ok) {
  std::mt19937_64 gen(4242);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int inst = 0; inst < 25; ++inst) {
    const Index n = 4 + static_cast<Index>(gen() % 5);
    const Index p = static_cast<Index>(gen() % 3);
    Dataset d;
    d.y.resize(n);
    d.X.resize(n, p);
    const Index cut = 1 + static_cast<Index>(gen() % static_cast<std::uint64_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
      for (Index j = 0; j < p; ++j) d.X(i, j) = normal(gen);
      d.y(i) = (i >= cut ? 1.5 : 0.0) + (p > 0 ? 0.8 * d.X(i, 0) : 0.0) + 0.7 * normal(gen);
    }
    PriorConfig prior;
    prior.kind = p == 0 && inst % 2 == 0 ? ModelKind::MeanShift : ModelKind::Regression;
    prior.changepoint_prob = 0.3;
    prior.inclusion_prob = 0.4;
    if (inst % 3 != 0) prior.sigma2 = 0.5;
    const ExactPosterior exact = enumerate_exact(d, prior);
    SamplerConfig cfg;
    cfg.burn_in = 2000;
    cfg.iterations = cfg.burn_in + 200000;
    cfg.seed = 500 + static_cast<std::uint64_t>(inst);
    const PosteriorSummary s = run_chain(d, prior, cfg);
    worst = std::max({worst, max_dev(s.cp_prob, exact.marginals.cp_prob), max_dev(s.pip, exact.marginals.pip),
                      max_dev(s.partition_count_dist, exact.marginals.partition_count_dist)});
  }
  ok = worst <= 0.02;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |deviation| over 25 instances = %.4f", worst);
  return buf;
}

std::string criterion_quadrature(bool& ok) {
  std::mt19937_64 gen(77);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int inst = 0; inst < 10; ++inst) {
    const Index n = 2 + static_cast<Index>(gen() % 9);
    const bool slope = inst % 2 == 1;
    Dataset d;
    d.y.resize(n);
    d.X.resize(n, 1);
    MatrixXd design(n, slope ? 2 : 1);
    for (Index i = 0; i < n; ++i) {
      d.X(i, 0) = normal(gen);
      d.y(i) = 0.5 + (slope ? 1.2 * d.X(i, 0) : 0.0) + normal(gen);
      design(i, 0) = 1.0;
      if (slope) design(i, 1) = d.X(i, 0);
    }
    PriorConfig prior;
    prior.sigma2 = 0.5 + 0.25 * inst;
    prior.tau2 = 0.3 + 0.4 * inst;
    const std::vector<Index> cols = slope ? std::vector<Index>{0} : std::vector<Index>{};
    const ModelId model{Segmentation(n), InclusionMask::from_indices(1, cols)};
    const double closed = log_marginal(d, model, prior);
    const double numeric = oracle::regression_block_quadrature(design, d.y, *prior.sigma2, prior.tau2);
    worst = std::max(worst, std::abs(closed - numeric));
  }
  ok = worst <= 1e-6;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |closed form - quadrature| = %.2e", worst);
  return buf;
}

std::string criterion_bench(bool& ok) {
  ok = true;
  std::string detail;
  for (BenchScenario s : consistency_scenarios()) {
    const BenchResult r = bench_consistency(s, {100, 200, 400, 800}, 20, 9);
    const bool dec = r.strictly_decreasing();
    ok = ok && dec;
    detail += scenario_name(s) + (dec ? "=decreasing " : "=NOT-decreasing ");
  }
  detail.pop_back();
  return detail;
}

std::string criterion_pelt(bool& ok) {
  std::mt19937_64 gen(31337);
  std::normal_distribution<double> normal;
  int equal = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Index min_seg = 1 + static_cast<Index>(gen() % 3);
    const Index n = 2 * min_seg + static_cast<Index>(gen() % static_cast<std::uint64_t>(201 - 2 * min_seg));
    std::vector<double> y(static_cast<std::size_t>(n));
    double level = 0.0;
    for (auto& v : y) {
      if (gen() % 20 == 0) level = 2.0 * normal(gen);
      v = level + normal(gen);
    }
    const double penalty = default_penalty(y.size(), mad_variance(y).value);
    const PeltResult a = pelt_detect(y, penalty, min_seg);
    const PeltResult b = optimal_partition_dp(y, penalty, min_seg);
    equal += a.changepoints == b.changepoints && a.total_cost == b.total_cost ? 1 : 0;
  }
  int recovered = 0;
  for (int s = 1; s <= kSeeds; ++s) {
    const Simulation sim = gen_example1(static_cast<std::uint64_t>(s));
    const std::vector<double> y(sim.data.y.data(), sim.data.y.data() + sim.data.n());
    const double var = mad_variance(y).value;
    const PeltResult r = pelt_detect(y, default_penalty(y.size(), var), 2, var);
    bool hit = r.changepoints.size() == sim.truth.changepoints.size();
    for (std::size_t k = 0; hit && k < r.changepoints.size(); ++k) {
      hit = std::abs(r.changepoints[k] - sim.truth.changepoints[k]) <= 5;
    }
    recovered += hit ? 1 : 0;
  }
  ok = equal == 200 && recovered >= 8;
  return "PELT == DP on " + std::to_string(equal) + "/200, Example-1 recovery in " + std::to_string(recovered) + "/10";
}

std::string criterion_invariants(bool& ok) {
  std::vector<std::string> failed;
  auto check = [&](bool cond, const char* name) {
    if (!cond) failed.emplace_back(name);
  };
  const Simulation sim = gen_example2(5);
  const std::vector<Index> active{1, 2, 11};
  const InclusionMask mask = InclusionMask::from_indices(250, active);
  const ModelId truth{Segmentation::from_changepoints(250, sim.truth.changepoints), mask};
  const ModelId flat{Segmentation(250), mask};
  PriorConfig prior;
  prior.sigma2 = 1.0;

  // Flat-prior limit: the log BF between models of equal dimension settles as tau2 grows.
  const std::vector<Index> moved{80, 175};
  const ModelId shifted{Segmentation::from_changepoints(250, moved), mask};
  std::vector<double> bfs;
  for (double t : {1e2, 1e4, 1e6}) {
    prior.tau2 = t;
    bfs.push_back(log_bayes_factor(sim.data, truth, shifted, prior));
  }
  prior.tau2 = 1.0;
  check(std::abs(bfs[2] - bfs[1]) < 1e-3 && std::abs(bfs[2] - bfs[1]) < std::abs(bfs[1] - bfs[0]), "flat-prior");

  // Decomposability: the whole-series marginal is the sum of block marginals.
  double sum = 0.0;
  for (const Block& b : truth.segmentation.blocks()) {
    Dataset part;
    part.y = sim.data.y.segment(b.begin, b.size());
    part.X = sim.data.X.middleRows(b.begin, b.size());
    sum += log_marginal(part, ModelId{Segmentation(b.size()), mask}, prior);
  }
  check(std::abs(sum - log_marginal(sim.data, truth, prior)) < 1e-8 * std::abs(sum), "decomposability");

  const double ab = log_bayes_factor(sim.data, truth, flat, prior);
  const double ba = log_bayes_factor(sim.data, flat, truth, prior);
  check(ab == -ba, "antisymmetry");

  SamplerConfig cfg;
  cfg.iterations = 300;
  cfg.burn_in = 100;
  cfg.seed = 17;
  cfg.chains = 2;
  const Json one = to_json(run_chain(sim.data, PriorConfig{}, cfg));
  cfg.threads = 2;
  const Json two = to_json(run_chain(sim.data, PriorConfig{}, cfg));
  check(one == two, "determinism");

  const LoadedCsv back = parse_csv(to_csv(sim.data), CsvSchema{});
  check(back.data.y == sim.data.y && back.data.X == sim.data.X, "csv-round-trip");

  ok = failed.empty();
  if (ok) return "flat-prior, decomposability, antisymmetry, determinism, csv-round-trip";
  std::string out = "failed:";
  for (const auto& f : failed) out += " " + f;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<std::pair<const char*, std::function<std::string(bool&)>>> criteria = {
      {"1 example-1 reproduction", criterion_ex1},
      {"2 example-2 reproduction", criterion_ex2},
      {"3 example-3 reproduction", criterion_ex3},
      {"4 oracle equivalence", criterion_oracle},
      {"5 marginal likelihood exactness", criterion_quadrature},
      {"6 consistency trends", criterion_bench},
      {"7 PELT correctness", criterion_pelt},
      {"8 invariant suite", criterion_invariants},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && only.count(std::atoi(name)) == 0) continue;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    std::string detail;
    try {
      detail = run(ok);
    } catch (const std::exception& e) {
      ok = false;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s: %s (%s; %.1fs)\n", ok ? "PASS" : "FAIL", name, detail.c_str(), secs);
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
