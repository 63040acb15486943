#ifndef BCPVS_ORACLE_HPP
#define BCPVS_ORACLE_HPP

#include <utility>
#include <vector>

#include "bcpvs/model.hpp"
#include "bcpvs/sampler.hpp"

namespace bcpvs {

/// Exhaustive posterior over every segmentation and every admissible mask.
struct ExactPosterior {
  std::vector<std::pair<ModelId, double>> table;  // log unnormalised posterior
  double normalizer = 0.0;                        // log-sum-exp of the table
  PosteriorSummary marginals;                     // fitted_mean left empty
};

/// Scores each model with the same target the Gibbs sampler leaves
/// invariant: known variances are plugged in, an unknown regression variance
/// is integrated in closed form, and the mean-shift variances are summed over
/// the sampler's grid.
ExactPosterior enumerate_exact(const Dataset& data, const PriorConfig& prior, Index n_max = 12, Index p_max = 3,
                               Index threads = 1);

}  // namespace bcpvs

#endif  // BCPVS_ORACLE_HPP
