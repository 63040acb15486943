#ifndef BCPVS_PELT_HPP
#define BCPVS_PELT_HPP

#include <optional>
#include <span>
#include <vector>

#include "bcpvs/numerics.hpp"

namespace bcpvs {

/// Penalised Gaussian mean-change segmentation.
///
/// The segment cost is the Gaussian negative log-likelihood with the block
/// MLE mean, scaled by 2 sigma^2 and with constants dropped, i.e. the block
/// residual sum of squares. Penalties are in the same units, so the BIC-type
/// default is 2 sigma^2 log n per changepoint.
struct PeltResult {
  std::vector<Index> changepoints;  // 0-based block starts, strictly increasing
  double total_cost = 0.0;          // sum of segment costs + penalty * #changepoints
  std::vector<double> segment_means;
  std::vector<double> segment_variances;  // per-block MLE variance
  double variance = 1.0;            // global variance used for the default penalty
  bool variance_fallback = false;   // true when the MAD estimate was zero
  double penalty = 0.0;
  Index min_seg = 1;
};

struct VarianceEstimate {
  double value = 1.0;
  bool fallback = false;
};

/// Difference-based MAD estimate of the noise variance; falls back to 1 on
/// constant input.
VarianceEstimate mad_variance(std::span<const double> y);

/// 2 * sigma^2 * log(n).
double default_penalty(std::size_t n, double variance);

/// PELT with delayed pruning so that a minimum segment length keeps the
/// optimum exact.
PeltResult pelt_detect(std::span<const double> y, double penalty, Index min_seg = 1,
                       std::optional<double> variance = std::nullopt);

/// Unpruned O(n^2) optimal partitioning with the same objective.
PeltResult optimal_partition_dp(std::span<const double> y, double penalty, Index min_seg = 1,
                                std::optional<double> variance = std::nullopt);

}  // namespace bcpvs

#endif  // BCPVS_PELT_HPP
