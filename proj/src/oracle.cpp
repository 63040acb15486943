#include "bcpvs/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <string>
#include <thread>

#include "bcpvs/errors.hpp"

namespace bcpvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Segmentation segmentation_from_code(Index n, std::uint64_t code) {
  Segmentation s(n);
  for (Index i = 1; i < n; ++i) {
    if ((code >> (i - 1)) & 1U) s.set(i, true);
  }
  return s;
}

class Scorer {
 public:
  Scorer(const Dataset& data, const PriorConfig& prior)
      : data_(data), prior_(prior), design_(data.design()), grid_(variance_grid()) {}

  double score(const ModelId& model) const {
    const Index n = design_.rows();
    const double lp = log_prior(model, prior_, n, design_.num_candidates());
    if (lp == -kInf) return -kInf;
    if (prior_.kind == ModelKind::Regression) {
      if (prior_.sigma2) return lp + log_marginal_at(data_, model, prior_, *prior_.sigma2, prior_.tau2);
      return lp + log_marginal_sigma2_integrated(data_, model, prior_);
    }
    return lp + mean_shift_marginal(model.segmentation);
  }

 private:
  double mean_shift_marginal(const Segmentation& seg) const {
    const auto blocks = seg.blocks();
    std::vector<std::array<double, 3>> stats;
    for (const Block& b : blocks) {
      const auto y = design_.y.segment(b.begin, b.size());
      stats.push_back({static_cast<double>(b.size()), y.sum(), y.squaredNorm()});
    }
    auto total = [&](double s2, double t2) {
      double out = 0.0;
      for (const auto& st : stats) {
        out += mean_block_log_marginal(static_cast<Index>(st[0]), st[1], st[2], s2, t2, prior_.mean_var);
      }
      return out;
    };
    const std::vector<double> fixed_s2 = prior_.sigma2 ? std::vector<double>{*prior_.sigma2} : grid_;
    const std::vector<double> fixed_t2 = prior_.sample_tau2 ? grid_ : std::vector<double>{prior_.tau2};
    // Uniform mass on each grid point, matching the griddy Gibbs steps.
    double acc = -kInf;
    for (double s2 : fixed_s2) {
      for (double t2 : fixed_t2) acc = log_add_exp(acc, total(s2, t2));
    }
    return acc - std::log(static_cast<double>(fixed_s2.size())) - std::log(static_cast<double>(fixed_t2.size()));
  }

  const Dataset& data_;
  const PriorConfig& prior_;
  Design design_;
  std::vector<double> grid_;
};

}  // namespace

ExactPosterior enumerate_exact(const Dataset& data, const PriorConfig& prior, Index n_max, Index p_max,
                               Index threads) {
  const Index n = data.n_eff();
  const Index P = data.num_candidates();
  if (n > n_max) {
    throw TooLarge("exact enumeration supports at most " + std::to_string(n_max) + " modelled rows, got " +
                   std::to_string(n));
  }
  if (P > p_max) {
    throw TooLarge("exact enumeration supports at most " + std::to_string(p_max) + " candidate columns, got " +
                   std::to_string(P));
  }
  if (n > 62) throw TooLarge("segmentation space too large");
  prior.validate(n, P);
  const Index cap = prior.covariate_cap(n, P);

  std::vector<InclusionMask> masks;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << P); ++code) {
    InclusionMask m(P);
    for (Index j = 0; j < P; ++j) {
      if ((code >> j) & 1U) m.set(j, true);
    }
    if (m.size() <= cap) masks.push_back(std::move(m));
  }

  const std::uint64_t num_segs = std::uint64_t{1} << (n - 1);
  const std::size_t total = static_cast<std::size_t>(num_segs) * masks.size();
  ExactPosterior out;
  out.table.resize(total);

  const Scorer scorer(data, prior);
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t code = begin; code < end; ++code) {
      const Segmentation seg = segmentation_from_code(n, code);
      for (std::size_t m = 0; m < masks.size(); ++m) {
        ModelId id{seg, masks[m]};
        const double s = scorer.score(id);
        out.table[static_cast<std::size_t>(code) * masks.size() + m] = {std::move(id), s};
      }
    }
  };
  const auto workers = static_cast<std::uint64_t>(std::max<Index>(1, std::min<Index>(threads, 16)));
  if (workers == 1) {
    work(0, num_segs);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    const std::uint64_t chunk = (num_segs + workers - 1) / workers;
    for (std::uint64_t w = 0; w < workers; ++w) {
      const std::uint64_t lo = std::min(num_segs, w * chunk);
      const std::uint64_t hi = std::min(num_segs, lo + chunk);
      pool.emplace_back([&, w, lo, hi] {
        try {
          work(lo, hi);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Sequential reduction keeps the result independent of the thread count.
  double norm = -kInf;
  for (const auto& [id, s] : out.table) norm = log_add_exp(norm, s);
  if (!std::isfinite(norm)) throw NonFinite("exact posterior normaliser is not finite");
  out.normalizer = norm;

  PosteriorSummary& sum = out.marginals;
  const Index offset = data.first_observation();
  sum.cp_prob.assign(static_cast<std::size_t>(data.n()), 0.0);
  sum.pip.assign(static_cast<std::size_t>(P), 0.0);
  sum.map_log_posterior = -kInf;
  for (const auto& [id, s] : out.table) {
    const double w = std::exp(s - norm);
    for (Index i = 1; i < n; ++i) {
      if (id.segmentation.is_changepoint(i)) sum.cp_prob[static_cast<std::size_t>(i + offset)] += w;
    }
    for (Index j = 0; j < P; ++j) {
      if (id.mask.included(j)) sum.pip[static_cast<std::size_t>(j)] += w;
    }
    sum.partition_count_dist[id.segmentation.num_blocks()] += w;
    sum.model_size_dist[id.mask.size()] += w;
    if (s > sum.map_log_posterior) {
      sum.map_log_posterior = s;
      sum.map_model = id;
    }
  }
  for (auto& v : sum.cp_prob) v = std::clamp(v, 0.0, 1.0);
  for (auto& v : sum.pip) v = std::clamp(v, 0.0, 1.0);
  sum.n_samples = static_cast<Index>(out.table.size());
  return out;
}

}  // namespace bcpvs
