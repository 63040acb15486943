#ifndef BCPVS_BENCH_HPP
#define BCPVS_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bcpvs/model.hpp"
#include "bcpvs/simgen.hpp"

namespace bcpvs {

/// Alternative-vs-truth comparisons for the Bayes-factor consistency bench.
enum class BenchScenario {
  WrongCount,       // one spurious extra changepoint, known variance
  ShiftedEps,       // first changepoint displaced, known variance
  WrongCovariates,  // a truly active covariate dropped, known variance
  EstSigma,         // one true changepoint missing, empirical variance
  MisspecVar,       // unequal segment noise, empirical variance, displaced changepoint
  Truth,            // alternative equals the true model
};

BenchScenario parse_scenario(const std::string& name);
std::string scenario_name(BenchScenario s);
std::vector<BenchScenario> consistency_scenarios();

enum class ShiftRule {
  LogSquared,  // ceil((log n)^2) rows
  Constant,    // a fixed number of rows
};

struct BenchOptions {
  ShiftRule shift_rule = ShiftRule::LogSquared;
  Index shift_rows = 10;  // used by ShiftRule::Constant
  Index covariates = 15;
  double tau2 = 1.0;
};

struct BenchRow {
  BenchScenario scenario;
  Index n = 0;
  Index replicate = 0;
  double log_bf = 0.0;  // log BF(alternative, truth)
};

struct BenchSummary {
  BenchScenario scenario;
  Index n = 0;
  double mean_log_bf = 0.0;
  double sd_log_bf = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<BenchSummary> summary;  // one per n, in grid order
  bool strictly_decreasing() const;
};

/// Synthetic changing regression of length n: changepoints at 0.3n and 0.7n,
/// the Example-2 coefficients, optional unequal noise.
Simulation bench_dataset(Index n, Index covariates, bool unequal_noise, std::uint64_t seed);

/// True and alternative models plus the prior for one bench scenario.
struct BenchPair {
  ModelId truth;
  ModelId alternative;
  PriorConfig prior;
};
BenchPair bench_pair(BenchScenario scenario, const Simulation& sim, const BenchOptions& options);

Index shift_rows(const BenchOptions& options, Index n);

BenchResult bench_consistency(BenchScenario scenario, const std::vector<Index>& n_grid, Index replicates,
                              std::uint64_t seed, const BenchOptions& options = {});

std::string bench_csv(const BenchResult& result);

}  // namespace bcpvs

#endif  // BCPVS_BENCH_HPP
