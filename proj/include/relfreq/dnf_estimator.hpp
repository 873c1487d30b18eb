#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "relfreq/component_mask.hpp"
#include "relfreq/cutset_engine.hpp"
#include "relfreq/error.hpp"
#include "relfreq/estimate.hpp"
#include "relfreq/random.hpp"
#include "relfreq/system_model.hpp"

namespace relfreq {

/// Positive DNF over component-unavailability literals. With `exposure` on,
/// every clause additionally requires the exposed component (one component
/// drawn with probability mu_i / mu) to lie outside the clause.
struct DnfInstance {
  std::vector<ComponentMask> clauses;
  bool exposure = false;
  std::vector<double> clause_prob;  // P_Z(j)
  double q = 0.0;                   // sum of clause_prob
  double mu_total = 0.0;
  std::vector<double> p;   // unavailability by component index id - 1
  std::vector<double> mu;  // repair rate by component index id - 1

  int clause_count() const noexcept { return static_cast<int>(clauses.size()); }
  int component_count() const noexcept { return static_cast<int>(p.size()); }
};

/// Builds an instance from raw clauses and per-component p_i, mu_i.
inline DnfInstance make_dnf(std::vector<ComponentMask> clauses, bool exposure,
                            std::vector<double> p, std::vector<double> mu) {
  if (clauses.empty()) throw Error(ErrorKind::invalid_argument, "a DNF needs at least one clause");
  if (p.size() != mu.size() || p.empty() || p.size() > kMaxComponents) {
    throw Error(ErrorKind::invalid_argument, "p and mu must have the same length in [1, 64]");
  }
  const ComponentMask all = full_mask(static_cast<int>(p.size()));
  DnfInstance dnf;
  dnf.exposure = exposure;
  for (double x : mu) dnf.mu_total += x;
  for (ComponentMask c : clauses) {
    if (c == 0 || !is_subset(c, all)) {
      throw Error(ErrorKind::invalid_argument, "clause members must be a nonempty subset of [1, m]");
    }
    double prob = 1.0;
    for_each_id(c, [&](int id) { prob *= p[static_cast<std::size_t>(id - 1)]; });
    if (exposure) {
      // 1 - mu(C)/mu, written over the complement so it is exactly 0 when C = [m].
      double outside = 0.0;
      for_each_id(all & ~c, [&](int id) { outside += mu[static_cast<std::size_t>(id - 1)]; });
      prob *= outside / dnf.mu_total;
    }
    dnf.clause_prob.push_back(prob);
    dnf.q += prob;
  }
  dnf.clauses = std::move(clauses);
  dnf.p = std::move(p);
  dnf.mu = std::move(mu);
  return dnf;
}

namespace detail {

inline DnfInstance dnf_from_cutsets(const CutsetCollection& cutsets, const ReliabilitySystem& sys,
                                    bool exposure) {
  if (cutsets.empty()) throw Error(ErrorKind::invalid_argument, "cutset collection is empty");
  std::vector<ComponentMask> clauses;
  clauses.reserve(cutsets.count());
  for (const auto& c : cutsets.cutsets) clauses.push_back(c.mask);
  std::vector<double> p;
  std::vector<double> mu;
  for (const auto& c : sys.components()) {
    p.push_back(c.p());
    mu.push_back(c.mu);
  }
  return make_dnf(std::move(clauses), exposure, std::move(p), std::move(mu));
}

}  // namespace detail

/// Clause j is "all members of cutset j unavailable".
inline DnfInstance build_pf_dnf(const CutsetCollection& cutsets, const ReliabilitySystem& sys) {
  return detail::dnf_from_cutsets(cutsets, sys, false);
}

/// Clause j is "cutset j unavailable and the exposed component outside it".
inline DnfInstance build_p_dnf(const CutsetCollection& cutsets, const ReliabilitySystem& sys) {
  return detail::dnf_from_cutsets(cutsets, sys, true);
}

struct Assignment {
  ComponentMask unavailable = 0;
  std::optional<int> exposed;
};

inline int count_satisfied(const DnfInstance& dnf, const Assignment& a) {
  int n = 0;
  for (ComponentMask c : dnf.clauses) {
    if (!is_subset(c, a.unavailable)) continue;
    if (dnf.exposure && a.exposed && contains(c, *a.exposed)) continue;
    ++n;
  }
  return n;
}

struct EstimatorParams {
  double xi = 0.0;
  double delta = 0.0;
  std::uint64_t S = 1;
  std::uint64_t T = 1;
  std::uint64_t seed = 0;
};

/// S = ceil(4(M-1)/xi^2) (1 when M = 1), T = ceil(12 ln(1/delta)).
inline EstimatorParams make_params(int clause_count, double xi, double delta,
                                   std::uint64_t seed = 0) {
  if (!(xi > 0.0) || !std::isfinite(xi)) throw Error(ErrorKind::invalid_argument, "xi must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_argument, "delta must be in (0,1)");
  if (clause_count < 1) throw Error(ErrorKind::invalid_argument, "a DNF needs at least one clause");
  EstimatorParams params;
  params.xi = xi;
  params.delta = delta;
  params.seed = seed;
  if (clause_count > 1) {
    const double s = 4.0 * (clause_count - 1) / (xi * xi);
    if (!(s < 1e18)) throw Error(ErrorKind::cap_exceeded, "KLM sample size overflows");
    params.S = std::max<std::uint64_t>(1, guarded_ceil(s));
  }
  params.T = batches_for(delta);
  return params;
}

struct KlmTraceEntry {
  std::uint64_t batch;
  int clause;  // 0-based
  int satisfied;
  double pi;
};

struct KlmOptions {
  SamplingMode mode = SamplingMode::grouped;
  /// Called for every trial; forces per-trial sampling.
  std::function<void(const KlmTraceEntry&)> trace;
};

namespace detail {

/// Per-clause tables shared by both sampling modes.
class KlmSampler {
 public:
  explicit KlmSampler(const DnfInstance& dnf) : dnf_(dnf) {
    const int m = dnf.component_count();
    const ComponentMask all = full_mask(m);
    double running = 0.0;
    for (int j = 0; j < dnf.clause_count(); ++j) {
      if (dnf.clause_prob[static_cast<std::size_t>(j)] > 0.0) {
        running += dnf.clause_prob[static_cast<std::size_t>(j)];
        selectable_.push_back(j);
        select_cum_.push_back(running);
      }
    }
    select_total_ = running;
    tables_.resize(dnf.clauses.size());
    for (std::size_t j = 0; j < dnf.clauses.size(); ++j) {
      auto& t = tables_[j];
      const ComponentMask c = dnf.clauses[j];
      for (ComponentMask other : dnf.clauses) {
        if (is_subset(other, c)) ++t.self_count;
      }
      double stay_up = 1.0;
      double first = 0.0;
      double exposure = 0.0;
      for_each_id(all & ~c, [&](int id) {
        const auto i = static_cast<std::size_t>(id - 1);
        t.outside.push_back(id);
        first += stay_up * dnf.p[i];
        t.first_down_cum.push_back(first);
        stay_up *= 1.0 - dnf.p[i];
        exposure += dnf.mu[i];
        t.exposure_cum.push_back(exposure);
      });
      t.extra_prob = first;
    }
  }

  double q() const noexcept { return dnf_.q; }
  const std::vector<int>& selectable() const noexcept { return selectable_; }
  int self_count(int j) const { return tables_[static_cast<std::size_t>(j)].self_count; }
  double extra_prob(int j) const { return tables_[static_cast<std::size_t>(j)].extra_prob; }

  template <Random64 Rng>
  int pick_clause(Rng& rng) const {
    const double u = uniform01(rng) * select_total_;
    auto it = std::upper_bound(select_cum_.begin(), select_cum_.end(), u);
    if (it == select_cum_.end()) --it;
    return selectable_[static_cast<std::size_t>(it - select_cum_.begin())];
  }

  /// Assignment conditioned on clause j holding.
  template <Random64 Rng>
  Assignment sample(int j, Rng& rng) const {
    const auto& t = tables_[static_cast<std::size_t>(j)];
    Assignment a;
    a.unavailable = dnf_.clauses[static_cast<std::size_t>(j)];
    for (int id : t.outside) {
      if (uniform01(rng) < dnf_.p[static_cast<std::size_t>(id - 1)]) a.unavailable |= bit_of(id);
    }
    expose(t, a, rng);
    return a;
  }

  /// Assignment conditioned on clause j holding and at least one non-member
  /// being unavailable: the first such non-member comes from its exact
  /// conditional law, later ones are independent.
  template <Random64 Rng>
  Assignment sample_extra(int j, Rng& rng) const {
    const auto& t = tables_[static_cast<std::size_t>(j)];
    Assignment a;
    a.unavailable = dnf_.clauses[static_cast<std::size_t>(j)];
    const double u = uniform01(rng) * t.extra_prob;
    auto it = std::upper_bound(t.first_down_cum.begin(), t.first_down_cum.end(), u);
    if (it == t.first_down_cum.end()) --it;
    const std::size_t k = static_cast<std::size_t>(it - t.first_down_cum.begin());
    a.unavailable |= bit_of(t.outside[k]);
    for (std::size_t l = k + 1; l < t.outside.size(); ++l) {
      const int id = t.outside[l];
      if (uniform01(rng) < dnf_.p[static_cast<std::size_t>(id - 1)]) a.unavailable |= bit_of(id);
    }
    expose(t, a, rng);
    return a;
  }

 private:
  struct ClauseTable {
    int self_count = 0;  // clauses whose members all lie in this clause
    std::vector<int> outside;
    std::vector<double> first_down_cum;
    std::vector<double> exposure_cum;
    double extra_prob = 0.0;
  };

  template <Random64 Rng>
  void expose(const ClauseTable& t, Assignment& a, Rng& rng) const {
    if (!dnf_.exposure) return;
    const double u = uniform01(rng) * t.exposure_cum.back();
    auto it = std::upper_bound(t.exposure_cum.begin(), t.exposure_cum.end(), u);
    if (it == t.exposure_cum.end()) --it;
    a.exposed = t.outside[static_cast<std::size_t>(it - t.exposure_cum.begin())];
  }

  const DnfInstance& dnf_;
  std::vector<int> selectable_;
  std::vector<double> select_cum_;
  double select_total_ = 0.0;
  std::vector<ClauseTable> tables_;
};

}  // namespace detail

/// Karp-Luby-Madras estimate of the truth probability of `dnf`: the lower
/// median of T batch means, each over S trials of q / N(z).
template <Random64 Rng>
Estimate klm_estimate(const DnfInstance& dnf, const EstimatorParams& params, Rng& rng,
                      const KlmOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (!(dnf.q > 0.0)) {
    throw Error(ErrorKind::formula_false, "every clause has probability zero");
  }
  if (params.S < 1 || params.T < 1) throw Error(ErrorKind::invalid_argument, "S and T must be >= 1");
  const detail::KlmSampler sampler(dnf);
  const double q = sampler.q();
  const bool grouped = options.mode == SamplingMode::grouped && !options.trace;

  // Selection probabilities of the selectable clauses as suffix sums, for the
  // sequential-binomial multinomial draw.
  const auto& sel = sampler.selectable();
  std::vector<double> suffix(sel.size() + 1, 0.0);
  for (std::size_t k = sel.size(); k-- > 0;) {
    suffix[k] = suffix[k + 1] + dnf.clause_prob[static_cast<std::size_t>(sel[k])];
  }

  std::vector<double> means;
  means.reserve(params.T);
  for (std::uint64_t t = 0; t < params.T; ++t) {
    double sum = 0.0;
    if (!grouped) {
      for (std::uint64_t s = 0; s < params.S; ++s) {
        const int j = sampler.pick_clause(rng);
        const Assignment a = sampler.sample(j, rng);
        const int n = count_satisfied(dnf, a);
        const double pi = q / n;
        if (options.trace) options.trace({t, j, n, pi});
        sum += pi;
      }
    } else {
      auto remaining = static_cast<std::int64_t>(params.S);
      for (std::size_t k = 0; k < sel.size() && remaining > 0; ++k) {
        const int j = sel[k];
        const double share = dnf.clause_prob[static_cast<std::size_t>(j)] / suffix[k];
        const std::int64_t picked =
            k + 1 == sel.size() ? remaining : binomial(rng, remaining, std::min(1.0, share));
        remaining -= picked;
        if (picked == 0) continue;
        // Trials where no non-member is unavailable satisfy exactly the
        // clauses contained in clause j.
        const std::int64_t extra = binomial(rng, picked, sampler.extra_prob(j));
        sum += static_cast<double>(picked - extra) * (q / sampler.self_count(j));
        for (std::int64_t e = 0; e < extra; ++e) {
          const Assignment a = sampler.sample_extra(j, rng);
          sum += q / count_satisfied(dnf, a);
        }
      }
    }
    means.push_back(sum / static_cast<double>(params.S));
  }

  Estimate est;
  est.value = lower_median(std::move(means));
  est.error_mode = ErrorMode::multiplicative;
  est.epsilon = params.xi;
  est.delta = params.delta;
  est.samples = params.S * params.T;
  est.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return est;
}

/// Same as above with a stream seeded from params.seed.
inline Estimate klm_estimate(const DnfInstance& dnf, const EstimatorParams& params,
                             const KlmOptions& options = {}) {
  RandomStream rng = make_stream(params.seed);
  return klm_estimate(dnf, params, rng, options);
}

}  // namespace relfreq
