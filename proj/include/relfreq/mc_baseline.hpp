#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include "relfreq/component_mask.hpp"
#include "relfreq/cutset_engine.hpp"
#include "relfreq/error.hpp"
#include "relfreq/estimate.hpp"
#include "relfreq/random.hpp"
#include "relfreq/system_model.hpp"

namespace relfreq {

struct SystemState {
  ComponentMask down = 0;
  double prob = 0.0;  // p(s)
  double flux = 0.0;  // sum of mu over down components minus sum of lambda over up ones
};

inline SystemState make_state(const ReliabilitySystem& sys, ComponentMask down) {
  SystemState s;
  s.down = down;
  s.prob = 1.0;
  for (const auto& c : sys.components()) {
    if (contains(down, c.id)) {
      s.prob *= c.p();
      s.flux += c.mu;
    } else {
      s.prob *= c.availability();
      s.flux -= c.lambda;
    }
  }
  return s;
}

/// Fewest components whose joint failure disconnects the terminals: the
/// minimum over terminals t of the number of edge-disjoint paths from the
/// first terminal to t.
inline int min_failure_cardinality(const ReliabilitySystem& sys) {
  const int n = sys.node_count();
  const int root = sys.terminals().front();
  int best = sys.component_count();
  for (int t : sys.terminals()) {
    if (t == root) continue;
    // Residual capacity per arc; arc 2k is u->v and 2k+1 is v->u of component k.
    std::vector<int> cap(2 * sys.components().size(), 1);
    std::vector<std::vector<std::pair<int, std::size_t>>> adj(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k < sys.components().size(); ++k) {
      const auto& c = sys.components()[k];
      adj[static_cast<std::size_t>(c.u)].push_back({c.v, 2 * k});
      adj[static_cast<std::size_t>(c.v)].push_back({c.u, 2 * k + 1});
    }
    int flow = 0;
    while (flow < best) {
      std::vector<std::size_t> via(static_cast<std::size_t>(n), SIZE_MAX);
      std::vector<bool> seen(static_cast<std::size_t>(n), false);
      std::queue<int> frontier;
      frontier.push(root);
      seen[static_cast<std::size_t>(root)] = true;
      while (!frontier.empty() && !seen[static_cast<std::size_t>(t)]) {
        const int x = frontier.front();
        frontier.pop();
        for (auto [y, arc] : adj[static_cast<std::size_t>(x)]) {
          if (seen[static_cast<std::size_t>(y)] || cap[arc] == 0) continue;
          seen[static_cast<std::size_t>(y)] = true;
          via[static_cast<std::size_t>(y)] = arc;
          frontier.push(y);
        }
      }
      if (!seen[static_cast<std::size_t>(t)]) break;
      for (int y = t; y != root;) {
        const std::size_t arc = via[static_cast<std::size_t>(y)];
        --cap[arc];
        ++cap[arc ^ 1U];
        const auto& c = sys.components()[arc / 2];
        y = (arc % 2 == 0) ? c.u : c.v;
      }
      ++flow;
    }
    best = std::min(best, flow);
  }
  return best;
}

struct McsResult {
  Estimate P_f;
  Estimate F_f;
  std::uint64_t failures_observed = 0;
  bool no_failure_observed() const noexcept { return failures_observed == 0; }
};

struct McsParams {
  std::uint64_t S = 1;
  std::uint64_t T = 1;
};

namespace detail {

inline std::uint64_t checked_samples(double s) {
  if (!(s < 1e18)) throw Error(ErrorKind::cap_exceeded, "MCS sample size overflows");
  return std::max<std::uint64_t>(1, guarded_ceil(s));
}

/// Draws down-sets conditioned on their size via the table
/// Q[i][r] = P(exactly r of components i..m-1 are down).
class DownCountSampler {
 public:
  explicit DownCountSampler(const ReliabilitySystem& sys) {
    const auto m = static_cast<std::size_t>(sys.component_count());
    for (const auto& c : sys.components()) {
      p_.push_back(c.p());
      q_.push_back(c.availability());
    }
    table_.assign(m + 1, std::vector<long double>(m + 1, 0.0L));
    table_[m][0] = 1.0L;
    for (std::size_t i = m; i-- > 0;) {
      for (std::size_t r = 0; r <= m - i; ++r) {
        long double v = static_cast<long double>(q_[i]) * table_[i + 1][r];
        if (r > 0) v += static_cast<long double>(p_[i]) * table_[i + 1][r - 1];
        table_[i][r] = v;
      }
    }
  }

  /// P(exactly d components down).
  long double pmf(std::size_t d) const { return table_[0][d]; }
  std::size_t size() const noexcept { return p_.size(); }

  template <Random64 Rng>
  ComponentMask sample(std::size_t d, Rng& rng) const {
    ComponentMask down = 0;
    std::size_t r = d;
    for (std::size_t i = 0; i < p_.size() && r > 0; ++i) {
      const long double take = static_cast<long double>(p_[i]) * table_[i + 1][r - 1] / table_[i][r];
      if (static_cast<long double>(uniform01(rng)) < take) {
        down |= ComponentMask{1} << i;
        --r;
      }
    }
    return down;
  }

 private:
  std::vector<double> p_;
  std::vector<double> q_;
  std::vector<std::vector<long double>> table_;
};

}  // namespace detail

/// MCS sized for a multiplicative (epsilon, delta) estimate:
/// S = ceil(mu (2 + eps) ln 8 / (p* rho eps^2)), T = ceil(12 ln(1/delta)).
inline McsParams mcs_multiplicative_params(const ReliabilitySystem& sys, double epsilon,
                                           double delta, double p_star, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::plan_invalid, "rho must be positive");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_argument, "delta must be in (0,1)");
  if (!(p_star > 0.0 && p_star < 1.0)) throw Error(ErrorKind::invalid_argument, "p* must be in (0,1)");
  const double mu = detail::rate_stats(sys).mu;
  const double s = mu * (2.0 + epsilon) * std::log(8.0) / (p_star * rho * epsilon * epsilon);
  return {detail::checked_samples(s), batches_for(delta)};
}

/// MCS sized for an additive (epsilon, delta) estimate of F_f, using F_f <= mu:
/// S = ceil(mu (2 mu + eps) ln 8 / eps^2).
inline McsParams mcs_additive_params(const ReliabilitySystem& sys, double epsilon, double delta) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_argument, "delta must be in (0,1)");
  const double mu = detail::rate_stats(sys).mu;
  const double s = mu * (2.0 * mu + epsilon) * std::log(8.0) / (epsilon * epsilon);
  return {detail::checked_samples(s), batches_for(delta)};
}

/// Monte Carlo over component states: T batches of S trials; each trial
/// scores (1, flux) on a failure state and (0, 0) otherwise. Returns the lower
/// medians of the batch means.
template <Random64 Rng>
McsResult mcs_run(const ReliabilitySystem& sys, std::uint64_t S, std::uint64_t T, Rng& rng,
                  SamplingMode mode = SamplingMode::grouped) {
  if (S < 1 || T < 1) throw Error(ErrorKind::invalid_argument, "S and T must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  const int m = sys.component_count();
  std::vector<double> p;
  std::vector<double> both;  // mu_i + lambda_i
  double lambda_total = 0.0;
  for (const auto& c : sys.components()) {
    p.push_back(c.p());
    both.push_back(c.mu + c.lambda);
    lambda_total += c.lambda;
  }
  auto flux_of = [&](ComponentMask down) {
    double f = -lambda_total;
    for_each_id(down, [&](int id) { f += both[static_cast<std::size_t>(id - 1)]; });
    return f;
  };
  ConnectivityOracle oracle(sys);
  McsResult out;

  // Grouped mode: states with fewer than L down components cannot fail, so
  // only the Bin(S, P(D >= L)) trials with D >= L are simulated, with D drawn
  // from its conditional law and the down-set drawn given |down| = D.
  std::vector<double> tail_cum;
  double tail = 0.0;
  std::size_t first = 0;
  std::optional<detail::DownCountSampler> by_count;
  if (mode == SamplingMode::grouped) {
    by_count.emplace(sys);
    first = static_cast<std::size_t>(min_failure_cardinality(sys));
    long double acc = 0.0L;
    for (std::size_t d = first; d <= static_cast<std::size_t>(m); ++d) {
      acc += by_count->pmf(d);
      tail_cum.push_back(static_cast<double>(acc));
    }
    tail = static_cast<double>(acc);
  }

  std::vector<double> pi_means;
  std::vector<double> phi_means;
  for (std::uint64_t t = 0; t < T; ++t) {
    double pi_sum = 0.0;
    double phi_sum = 0.0;
    auto score = [&](ComponentMask down) {
      if (oracle.fails(down)) {
        pi_sum += 1.0;
        phi_sum += flux_of(down);
        ++out.failures_observed;
      }
    };
    if (mode == SamplingMode::per_trial) {
      for (std::uint64_t s = 0; s < S; ++s) {
        ComponentMask down = 0;
        for (int i = 0; i < m; ++i) {
          if (uniform01(rng) < p[static_cast<std::size_t>(i)]) down |= ComponentMask{1} << i;
        }
        score(down);
      }
    } else {
      const std::int64_t k = binomial(rng, static_cast<std::int64_t>(S), tail);
      for (std::int64_t e = 0; e < k; ++e) {
        const double u = uniform01(rng) * tail;
        auto it = std::upper_bound(tail_cum.begin(), tail_cum.end(), u);
        if (it == tail_cum.end()) --it;
        const std::size_t d = first + static_cast<std::size_t>(it - tail_cum.begin());
        score(by_count->sample(d, rng));
      }
    }
    pi_means.push_back(pi_sum / static_cast<double>(S));
    phi_means.push_back(phi_sum / static_cast<double>(S));
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (Estimate* e : {&out.P_f, &out.F_f}) {
    e->samples = S * T;
    e->elapsed = elapsed;
    if (out.no_failure_observed()) e->notes.push_back("no failure observed");
  }
  out.P_f.value = lower_median(std::move(pi_means));
  out.F_f.value = lower_median(std::move(phi_means));
  return out;
}

/// Per-trial MCS sized to take roughly `seconds` of wall time: the trial rate
/// is measured on a short calibration run, then T batches share the budget.
template <Random64 Rng>
McsResult mcs_run_timed(const ReliabilitySystem& sys, double seconds, std::uint64_t T, Rng& rng) {
  if (!(seconds > 0.0)) throw Error(ErrorKind::invalid_argument, "time budget must be positive");
  constexpr std::uint64_t kCalibration = 20'000;
  const auto start = std::chrono::steady_clock::now();
  mcs_run(sys, kCalibration, 1, rng, SamplingMode::per_trial);
  const double spent = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rate = static_cast<double>(kCalibration) / std::max(spent, 1e-9);
  const double remaining = std::max(0.0, seconds - spent);
  const auto total = static_cast<std::uint64_t>(rate * remaining);
  const std::uint64_t S = std::max<std::uint64_t>(1, total / std::max<std::uint64_t>(T, 1));
  return mcs_run(sys, S, T, rng, SamplingMode::per_trial);
}

}  // namespace relfreq
