#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "relfreq/cutset_engine.hpp"
#include "relfreq/dnf_estimator.hpp"
#include "relfreq/error.hpp"
#include "relfreq/estimate.hpp"
#include "relfreq/mc_baseline.hpp"
#include "relfreq/random.hpp"
#include "relfreq/system_model.hpp"

namespace relfreq {

struct ApproxOptions {
  SamplingMode mode = SamplingMode::grouped;
  int bruteforce_cap = 25;
  double threshold_exponent = 4.0;  // MCS branch iff p* > n^-threshold_exponent
  double rgc_c = 2.0;
  std::uint64_t rgc_budget = 10'000'000;
};

namespace detail {

inline void check_accuracy(double epsilon, double delta) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw Error(ErrorKind::invalid_argument, "epsilon must be positive");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_argument, "delta must be in (0,1)");
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// (P_f estimate, P estimate) for the cutset formulas at (xi, delta) each.
template <Random64 Rng>
std::pair<Estimate, Estimate> klm_pair(const CutsetCollection& cutsets, const ReliabilitySystem& sys,
                                       double xi, double delta, Rng& rng, SamplingMode mode) {
  const DnfInstance pf_dnf = build_pf_dnf(cutsets, sys);
  const DnfInstance p_dnf = build_p_dnf(cutsets, sys);
  RandomStream pf_rng = make_stream(rng(), 1);
  RandomStream p_rng = make_stream(rng(), 2);
  KlmOptions opts;
  opts.mode = mode;
  Estimate pf = klm_estimate(pf_dnf, make_params(pf_dnf.clause_count(), xi, delta), pf_rng, opts);
  Estimate p;
  if (p_dnf.q > 0.0) {
    p = klm_estimate(p_dnf, make_params(p_dnf.clause_count(), xi, delta), p_rng, opts);
  } else {
    // Every cutset covers all components (a single edge): P is exactly 0.
    p.epsilon = xi;
    p.delta = delta;
    p.notes.push_back("unexposed formula is identically false; P = 0");
  }
  return {pf, p};
}

inline Estimate combine_frequency(const Estimate& pf, const Estimate& p, double mu,
                                  double epsilon, double delta) {
  Estimate ff;
  ff.value = (pf.value - p.value) * mu;
  ff.error_mode = ErrorMode::multiplicative;
  ff.epsilon = epsilon;
  ff.delta = delta;
  ff.samples = pf.samples + p.samples;
  ff.notes = p.notes;
  if (ff.value < 0.0) {
    ff.value = 0.0;
    ff.notes.push_back("negative difference of estimates clamped to 0");
  }
  return ff;
}

}  // namespace detail

struct PolyNPlan {
  double epsilon = 0.0;
  double delta = 0.0;
  double xi = 0.0;  // (eps/2)(rho/mu)
  double rho = 0.0;
  double mu = 0.0;
  int s_star = 0;
  double delta_split = 0.0;  // delta/2 per KLM call
  std::size_t cutset_count = 0;
};

inline PolyNPlan plan_polyN(const ReliabilitySystem& sys, const CutsetCollection& cutsets,
                            double epsilon, double delta) {
  detail::check_accuracy(epsilon, delta);
  if (cutsets.empty()) throw Error(ErrorKind::invalid_argument, "cutset collection is empty");
  const SystemStats st = system_stats(sys, cutsets.s_star);
  if (!validate_rho(st)) {
    throw Error(ErrorKind::plan_invalid, "rho = " + std::to_string(st.rho) +
                                             " <= 0; the rates violate mu_min/lambda_max > m - 1");
  }
  PolyNPlan plan;
  plan.epsilon = epsilon;
  plan.delta = delta;
  plan.rho = st.rho;
  plan.mu = st.mu;
  plan.s_star = cutsets.s_star;
  plan.xi = 0.5 * epsilon * st.rho / st.mu;
  plan.delta_split = delta / 2.0;
  plan.cutset_count = cutsets.count();
  return plan;
}

struct PolyNResult {
  Estimate F_f;
  Estimate P_f;  // KLM estimate on the failure formula
  Estimate P;    // KLM estimate on the unexposed formula
  PolyNPlan plan;
};

/// F_f from all N minimal cutsets: (P_f~ - P~) mu with both KLM calls run at
/// (xi, delta/2).
template <Random64 Rng>
PolyNResult approx_ff_polyN_detailed(const ReliabilitySystem& sys, const CutsetCollection& cutsets,
                                     double epsilon, double delta, Rng& rng,
                                     const ApproxOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  PolyNResult out;
  out.plan = plan_polyN(sys, cutsets, epsilon, delta);
  auto [pf, p] = detail::klm_pair(cutsets, sys, out.plan.xi, out.plan.delta_split, rng, options.mode);
  out.P_f = std::move(pf);
  out.P = std::move(p);
  out.F_f = detail::combine_frequency(out.P_f, out.P, out.plan.mu, epsilon, delta);
  out.F_f.elapsed = detail::seconds_since(start);
  return out;
}

template <Random64 Rng>
PolyNResult approx_ff_polyN_detailed(const ReliabilitySystem& sys, double epsilon, double delta,
                                     Rng& rng, const ApproxOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  const CutsetCollection cutsets = enumerate_bruteforce(sys, {.max_weight = std::nullopt,
                                                              .cap = options.bruteforce_cap});
  PolyNResult out = approx_ff_polyN_detailed(sys, cutsets, epsilon, delta, rng, options);
  out.F_f.elapsed = detail::seconds_since(start);
  return out;
}

template <Random64 Rng>
Estimate approx_ff_polyN(const ReliabilitySystem& sys, double epsilon, double delta, Rng& rng,
                         const ApproxOptions& options = {}) {
  return approx_ff_polyN_detailed(sys, epsilon, delta, rng, options).F_f;
}

/// P_f by KLM on the failure formula of all minimal cutsets at (eps, delta).
template <Random64 Rng>
Estimate approx_pf_polyN(const ReliabilitySystem& sys, double epsilon, double delta, Rng& rng,
                         const ApproxOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  detail::check_accuracy(epsilon, delta);
  const CutsetCollection cutsets = enumerate_bruteforce(sys, {.max_weight = std::nullopt,
                                                              .cap = options.bruteforce_cap});
  const DnfInstance dnf = build_pf_dnf(cutsets, sys);
  KlmOptions opts;
  opts.mode = options.mode;
  Estimate est = klm_estimate(dnf, make_params(dnf.clause_count(), epsilon, delta), rng, opts);
  est.elapsed = detail::seconds_since(start);
  return est;
}

enum class Branch { mcs, alpha_min };

inline const char* to_string(Branch b) noexcept { return b == Branch::mcs ? "MCS" : "ALPHA_MIN"; }

struct PolyNPlanAllTerminal {
  double epsilon = 0.0;
  double delta = 0.0;
  Cutset min_cutset;
  double p_star = 0.0;
  double w_star = 0.0;
  double mu_star = 0.0;  // repair-rate sum over the min cutset
  double s_star_surrogate = 0.0;
  double rho = 0.0;
  double mu = 0.0;
  double xi = 0.0;
  double gamma = 0.0;
  double alpha = 1.0;  // meaningful in the ALPHA_MIN branch
  double threshold = 0.0;
  Branch branch = Branch::alpha_min;
  McsParams mcs;  // meaningful in the MCS branch
};

namespace detail {

/// alpha such that the exposure-weighted mass of cutsets heavier than
/// alpha w* is at most (xi/2) P; clamped to >= 1.
inline double alpha_for(double gamma, double xi, int n, const SystemStats& st, double mu_star) {
  const double spare = st.mu - mu_star;
  if (!(spare > 1e-12 * st.mu)) return 1.0;  // the min cutset holds every component
  const double log_n = std::log(static_cast<double>(n));
  const double arg = 2.0 * (gamma + 2.0) * (st.mu - st.s_star * st.mu_min) / (xi * gamma * spare);
  const double alpha = 1.0 + 2.0 / gamma + std::log(arg) / (gamma * log_n);
  if (!std::isfinite(alpha) || alpha < 1.0) return 1.0;
  return alpha;
}

}  // namespace detail

inline PolyNPlanAllTerminal plan_all_terminal(const ReliabilitySystem& sys, double epsilon,
                                              double delta, double threshold_exponent = 4.0) {
  detail::check_accuracy(epsilon, delta);
  if (!sys.is_all_terminal()) {
    throw Error(ErrorKind::not_all_terminal, "the poly(n) algorithm needs an all-terminal system");
  }
  if (!(threshold_exponent > 2.0)) {
    throw Error(ErrorKind::invalid_argument, "threshold exponent must exceed 2 so that gamma > 0");
  }
  PolyNPlanAllTerminal plan;
  plan.epsilon = epsilon;
  plan.delta = delta;
  plan.min_cutset = min_cut(sys);
  plan.w_star = plan.min_cutset.weight;
  plan.p_star = plan.min_cutset.prob;
  for (int id : plan.min_cutset.members) plan.mu_star += sys.component(id).mu;

  const int n = sys.node_count();
  const int m = sys.component_count();
  const SystemStats base = detail::rate_stats(sys);
  plan.s_star_surrogate = std::min(std::max(plan.w_star / base.w_max, 1.0), static_cast<double>(m));
  const SystemStats st = system_stats(sys, plan.s_star_surrogate);
  plan.rho = st.rho;
  plan.mu = st.mu;
  if (!validate_rho(st)) {
    throw Error(ErrorKind::plan_invalid, "rho = " + std::to_string(st.rho) +
                                             " <= 0; the rates violate mu_min/lambda_max > m - 1");
  }
  plan.xi = 0.5 * epsilon * st.rho / st.mu;
  plan.threshold = std::pow(static_cast<double>(n), -threshold_exponent);
  plan.gamma = plan.w_star / std::log(static_cast<double>(n)) - 2.0;
  if (plan.p_star > plan.threshold) {
    plan.branch = Branch::mcs;
    plan.mcs = mcs_multiplicative_params(sys, epsilon, delta, plan.p_star, plan.rho);
  } else {
    plan.branch = Branch::alpha_min;
    plan.alpha = detail::alpha_for(plan.gamma, plan.xi, n, st, plan.mu_star);
  }
  return plan;
}

struct AllTerminalResult {
  Estimate F_f;
  PolyNPlanAllTerminal plan;
  std::optional<Estimate> P_f;  // ALPHA_MIN branch: KLM estimate of P_f^(alpha)
  std::optional<Estimate> P;    // ALPHA_MIN branch: KLM estimate of P^(alpha)
  std::optional<CutsetCollection> cutsets;  // ALPHA_MIN branch: the alpha-min cutsets
  std::optional<McsResult> mcs;             // MCS branch
};

template <Random64 Rng>
AllTerminalResult approx_ff_all_terminal_detailed(const ReliabilitySystem& sys, double epsilon,
                                                  double delta, Rng& rng,
                                                  const ApproxOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  AllTerminalResult out;
  out.plan = plan_all_terminal(sys, epsilon, delta, options.threshold_exponent);
  const auto& plan = out.plan;
  if (plan.branch == Branch::mcs) {
    RandomStream mcs_rng = make_stream(rng(), 3);
    out.mcs = mcs_run(sys, plan.mcs.S, plan.mcs.T, mcs_rng, options.mode);
    out.F_f = out.mcs->F_f;
    out.F_f.error_mode = ErrorMode::multiplicative;
    out.F_f.epsilon = epsilon;
    out.F_f.delta = delta;
  } else {
    RandomStream rgc_rng = make_stream(rng(), 4);
    out.cutsets = enumerate_alpha_min(sys, plan.alpha, {.c = options.rgc_c, .run_budget = options.rgc_budget},
                                      rgc_rng);
    auto [pf, p] = detail::klm_pair(*out.cutsets, sys, plan.xi / 2.0, delta / 2.0, rng, options.mode);
    out.F_f = detail::combine_frequency(pf, p, plan.mu, epsilon, delta);
    for (const auto& w : out.cutsets->warnings) out.F_f.notes.push_back(w);
    out.P_f = std::move(pf);
    out.P = std::move(p);
  }
  out.F_f.elapsed = detail::seconds_since(start);
  return out;
}

template <Random64 Rng>
Estimate approx_ff_all_terminal(const ReliabilitySystem& sys, double epsilon, double delta, Rng& rng,
                                const ApproxOptions& options = {}) {
  return approx_ff_all_terminal_detailed(sys, epsilon, delta, rng, options).F_f;
}

/// Smallest epsilon whose poly(N) plan keeps each KLM batch at or below
/// `sample_budget` trials: xi = sqrt(4(N-1)/budget), eps = 2 xi mu / rho.
inline double auto_epsilon_polyN(const ReliabilitySystem& sys, const CutsetCollection& cutsets,
                                 double sample_budget) {
  if (!(sample_budget >= 1.0)) throw Error(ErrorKind::invalid_argument, "sample budget must be >= 1");
  const SystemStats st = system_stats(sys, cutsets.s_star);
  if (!validate_rho(st)) throw Error(ErrorKind::plan_invalid, "rho <= 0");
  const double n = static_cast<double>(cutsets.count());
  const double xi = std::sqrt(4.0 * std::max(n - 1.0, 0.0) / sample_budget);
  return std::max(2.0 * xi * st.mu / st.rho, 1e-4);
}

/// Smallest epsilon (searched over [1e-4, 1e3]) whose all-terminal plan keeps
/// the per-batch trial count at or below `sample_budget`. N^(alpha) is counted
/// exactly when the system is small enough for brute force, otherwise bounded
/// by n^{2 alpha}.
inline double auto_epsilon_all_terminal(const ReliabilitySystem& sys, double delta,
                                        double sample_budget, double threshold_exponent = 4.0,
                                        int bruteforce_cap = 25) {
  if (!(sample_budget >= 1.0)) throw Error(ErrorKind::invalid_argument, "sample budget must be >= 1");
  const PolyNPlanAllTerminal probe = plan_all_terminal(sys, 1.0, delta, threshold_exponent);
  if (probe.branch == Branch::mcs) {
    // S = mu (2 + eps) ln 8 / (p* rho eps^2) solved for eps at S = budget.
    const double a = sample_budget * probe.p_star * probe.rho;
    const double b = probe.mu * std::log(8.0);
    return (b + std::sqrt(b * b + 8.0 * a * b)) / (2.0 * a);
  }
  std::optional<CutsetCollection> all;
  if (sys.component_count() <= bruteforce_cap) all = enumerate_bruteforce(sys, {.max_weight = std::nullopt, .cap = bruteforce_cap});
  auto trials = [&](double eps) {
    const PolyNPlanAllTerminal plan = plan_all_terminal(sys, eps, delta, threshold_exponent);
    double count = 0.0;
    if (all) {
      for (const auto& c : all->cutsets) {
        if (within_weight(c.weight, plan.alpha * plan.w_star)) count += 1.0;
      }
    } else {
      count = std::pow(static_cast<double>(sys.node_count()), 2.0 * plan.alpha);
    }
    const double half = plan.xi / 2.0;
    return 4.0 * std::max(count - 1.0, 0.0) / (half * half);
  };
  double lo = std::log(1e-4);
  double hi = std::log(1e3);
  if (trials(std::exp(lo)) <= sample_budget) return std::exp(lo);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (trials(std::exp(mid)) <= sample_budget) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::exp(hi);
}

}  // namespace relfreq
