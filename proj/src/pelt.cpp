#include "bcpvs/pelt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bcpvs/errors.hpp"

namespace bcpvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPruneSlack = 1e-9;

/// Prefix sums of the globally centred series, so that block RSS is
/// location invariant up to rounding.
class SegmentCost {
 public:
  explicit SegmentCost(std::span<const double> y) : s1_(y.size() + 1, 0.0), s2_(y.size() + 1, 0.0) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double c = y[i] - mean;
      s1_[i + 1] = s1_[i] + c;
      s2_[i + 1] = s2_[i] + c * c;
    }
  }

  /// RSS of rows [t, s).
  double operator()(Index t, Index s) const {
    const auto a = static_cast<std::size_t>(t);
    const auto b = static_cast<std::size_t>(s);
    const double sum = s1_[b] - s1_[a];
    return std::max(0.0, s2_[b] - s2_[a] - sum * sum / static_cast<double>(s - t));
  }

 private:
  std::vector<double> s1_;
  std::vector<double> s2_;
};

void check_inputs(std::span<const double> y, double penalty, Index min_seg) {
  if (min_seg < 1) throw ConfigError("minimum segment length must be at least 1");
  if (static_cast<Index>(y.size()) < 2 * min_seg) {
    throw ConfigError("series of length " + std::to_string(y.size()) + " is shorter than twice the minimum segment");
  }
  if (!(penalty >= 0.0) || !std::isfinite(penalty)) throw ConfigError("penalty must be finite and non-negative");
  for (double v : y) {
    if (!std::isfinite(v)) throw NonFinite("series contains non-finite values");
  }
}

PeltResult finish(std::span<const double> y, const std::vector<double>& F, const std::vector<Index>& last,
                  double penalty, Index min_seg, std::optional<double> variance) {
  const auto n = static_cast<Index>(y.size());
  PeltResult out;
  out.penalty = penalty;
  out.min_seg = min_seg;
  if (variance) {
    out.variance = *variance;
  } else {
    const auto v = mad_variance(y);
    out.variance = v.value;
    out.variance_fallback = v.fallback;
  }
  for (Index s = last[static_cast<std::size_t>(n)]; s > 0; s = last[static_cast<std::size_t>(s)]) {
    out.changepoints.push_back(s);
  }
  std::reverse(out.changepoints.begin(), out.changepoints.end());
  out.total_cost = F[static_cast<std::size_t>(n)];

  std::vector<Index> bounds{0};
  bounds.insert(bounds.end(), out.changepoints.begin(), out.changepoints.end());
  bounds.push_back(n);
  for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
    double mean = 0.0;
    const Index lo = bounds[b];
    const Index hi = bounds[b + 1];
    for (Index i = lo; i < hi; ++i) mean += y[static_cast<std::size_t>(i)];
    mean /= static_cast<double>(hi - lo);
    double var = 0.0;
    for (Index i = lo; i < hi; ++i) {
      const double d = y[static_cast<std::size_t>(i)] - mean;
      var += d * d;
    }
    out.segment_means.push_back(mean);
    out.segment_variances.push_back(var / static_cast<double>(hi - lo));
  }
  return out;
}

}  // namespace

VarianceEstimate mad_variance(std::span<const double> y) {
  VarianceEstimate out;
  if (y.size() < 3) {
    out.fallback = true;
    return out;
  }
  std::vector<double> d(y.size() - 1);
  for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = y[i + 1] - y[i];
  auto median = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
      m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    }
    return m;
  };
  const double med = median(d);
  for (auto& v : d) v = std::abs(v - med);
  // 1.4826 * MAD estimates the sd of the differences, which is sqrt(2) sigma.
  const double sd = 1.4826 * median(d) / std::sqrt(2.0);
  if (!(sd > 0.0)) {
    out.fallback = true;
    return out;
  }
  out.value = sd * sd;
  return out;
}

double default_penalty(std::size_t n, double variance) {
  return 2.0 * variance * std::log(static_cast<double>(n));
}

PeltResult optimal_partition_dp(std::span<const double> y, double penalty, Index min_seg,
                                std::optional<double> variance) {
  check_inputs(y, penalty, min_seg);
  const auto n = static_cast<Index>(y.size());
  const SegmentCost cost(y);
  std::vector<double> F(static_cast<std::size_t>(n + 1), kInf);
  std::vector<Index> last(static_cast<std::size_t>(n + 1), 0);
  F[0] = -penalty;
  for (Index s = min_seg; s <= n; ++s) {
    double best = kInf;
    Index arg = 0;
    for (Index t = 0; t <= s - min_seg; ++t) {
      if (t != 0 && t < min_seg) continue;
      const double v = F[static_cast<std::size_t>(t)] + cost(t, s) + penalty;
      if (v < best) {
        best = v;
        arg = t;
      }
    }
    F[static_cast<std::size_t>(s)] = best;
    last[static_cast<std::size_t>(s)] = arg;
  }
  return finish(y, F, last, penalty, min_seg, variance);
}

PeltResult pelt_detect(std::span<const double> y, double penalty, Index min_seg, std::optional<double> variance) {
  check_inputs(y, penalty, min_seg);
  const auto n = static_cast<Index>(y.size());
  const SegmentCost cost(y);
  std::vector<double> F(static_cast<std::size_t>(n + 1), kInf);
  std::vector<Index> last(static_cast<std::size_t>(n + 1), 0);
  F[0] = -penalty;

  // Candidate last-changepoints with the step from which they are pruned.
  // A candidate beaten at step s is only provably useless from s + min_seg
  // on, because s itself cannot end a segment earlier than that.
  struct Candidate {
    Index t;
    Index expires;
  };
  std::vector<Candidate> R{{0, n + 1}};
  std::vector<Candidate> next;
  for (Index s = min_seg; s <= n; ++s) {
    const Index fresh = s - min_seg;
    if (fresh >= min_seg) R.push_back({fresh, n + 1});

    double best = kInf;
    Index arg = 0;
    for (const Candidate& c : R) {
      const double v = F[static_cast<std::size_t>(c.t)] + cost(c.t, s) + penalty;
      if (v < best) {
        best = v;
        arg = c.t;
      }
    }
    F[static_cast<std::size_t>(s)] = best;
    last[static_cast<std::size_t>(s)] = arg;

    next.clear();
    const double bound = best + kPruneSlack * (1.0 + std::abs(best));
    for (Candidate c : R) {
      if (F[static_cast<std::size_t>(c.t)] + cost(c.t, s) > bound) c.expires = std::min(c.expires, s + min_seg);
      if (c.expires > s + 1) next.push_back(c);
    }
    R.swap(next);
  }
  return finish(y, F, last, penalty, min_seg, variance);
}

}  // namespace bcpvs
