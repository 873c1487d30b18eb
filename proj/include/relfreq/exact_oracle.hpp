#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relfreq/component_mask.hpp"
#include "relfreq/cutset_engine.hpp"
#include "relfreq/dnf_estimator.hpp"
#include "relfreq/error.hpp"
#include "relfreq/system_model.hpp"

namespace relfreq {

/// Neumaier's variant of compensated summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct StateTotals {
  double P_f = 0.0;
  double F_f = 0.0;
};

/// P_f and F_f by summing p(s) and p(s) * flux(s) over all 2^m failure states.
inline StateTotals exact_by_states(const ReliabilitySystem& sys, int cap = 25) {
  const int m = sys.component_count();
  if (m > cap) {
    throw Error(ErrorKind::cap_exceeded, "state enumeration limited to " + std::to_string(cap) +
                                             " components, got " + std::to_string(m));
  }
  std::vector<double> down_p;
  std::vector<double> up_p;
  std::vector<double> mu;
  std::vector<double> lambda;
  for (const auto& c : sys.components()) {
    down_p.push_back(c.p());
    up_p.push_back(c.availability());
    mu.push_back(c.mu);
    lambda.push_back(c.lambda);
  }
  ConnectivityOracle oracle(sys);
  CompensatedSum pf;
  CompensatedSum ff;
  const std::uint64_t states = std::uint64_t{1} << m;
  for (std::uint64_t down = 1; down < states; ++down) {
    if (!oracle.fails(down)) continue;
    double prob = 1.0;
    double flux = 0.0;
    for (int i = 0; i < m; ++i) {
      if ((down >> i) & 1U) {
        prob *= down_p[static_cast<std::size_t>(i)];
        flux += mu[static_cast<std::size_t>(i)];
      } else {
        prob *= up_p[static_cast<std::size_t>(i)];
        flux -= lambda[static_cast<std::size_t>(i)];
      }
    }
    pf.add(prob);
    ff.add(prob * flux);
  }
  return {pf.value(), ff.value()};
}

struct InclusionExclusionTotals {
  double P_f = 0.0;
  double F_f = 0.0;
  double P = 0.0;  // probability that some cutset is down and unexposed
};

namespace detail {

/// Visits every nonempty subset of `masks` as (union mask, subset size).
template <class F>
void for_each_union(const std::vector<ComponentMask>& masks, F&& f) {
  struct Frame {
    std::size_t next;
    ComponentMask uni;
    int size;
  };
  std::vector<Frame> stack{{0, 0, 0}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    for (std::size_t k = fr.next; k < masks.size(); ++k) {
      const ComponentMask uni = fr.uni | masks[k];
      f(uni, fr.size + 1);
      stack.push_back({k + 1, uni, fr.size + 1});
    }
  }
}

}  // namespace detail

/// P_f, F_f and P by inclusion-exclusion over the union of cutset events.
inline InclusionExclusionTotals exact_by_inclusion_exclusion(const CutsetCollection& cutsets,
                                                             const ReliabilitySystem& sys,
                                                             int cap = 20) {
  if (cutsets.empty()) throw Error(ErrorKind::invalid_argument, "cutset collection is empty");
  if (static_cast<int>(cutsets.count()) > cap) {
    throw Error(ErrorKind::cap_exceeded, "inclusion-exclusion limited to " + std::to_string(cap) +
                                             " cutsets, got " + std::to_string(cutsets.count()));
  }
  std::vector<double> w;
  std::vector<double> mu;
  double mu_total = 0.0;
  for (const auto& c : sys.components()) {
    w.push_back(c.weight());
    mu.push_back(c.mu);
    mu_total += c.mu;
  }
  const ComponentMask all = sys.all_components();
  std::vector<ComponentMask> masks;
  for (const auto& c : cutsets.cutsets) masks.push_back(c.mask);

  CompensatedSum pf;
  CompensatedSum ff;
  CompensatedSum pp;
  detail::for_each_union(masks, [&](ComponentMask uni, int size) {
    double weight = 0.0;
    double mu_in = 0.0;
    double mu_out = 0.0;
    for (int i = 0; i < sys.component_count(); ++i) {
      if ((uni >> i) & 1U) {
        weight += w[static_cast<std::size_t>(i)];
        mu_in += mu[static_cast<std::size_t>(i)];
      } else if ((all >> i) & 1U) {
        mu_out += mu[static_cast<std::size_t>(i)];
      }
    }
    const double sign = size % 2 == 1 ? 1.0 : -1.0;
    const double prob = std::exp(-weight);
    pf.add(sign * prob);
    ff.add(sign * prob * mu_in);
    pp.add(sign * prob * (mu_out / mu_total));
  });
  return {pf.value(), ff.value(), pp.value()};
}

/// Exact truth probability of a DNF instance by inclusion-exclusion over its
/// clauses.
inline double dnf_truth_by_inclusion_exclusion(const DnfInstance& dnf, int cap = 20) {
  if (dnf.clause_count() > cap) {
    throw Error(ErrorKind::cap_exceeded, "inclusion-exclusion limited to " + std::to_string(cap) +
                                             " clauses");
  }
  const int m = dnf.component_count();
  CompensatedSum total;
  detail::for_each_union(dnf.clauses, [&](ComponentMask uni, int size) {
    double prob = 1.0;
    double mu_out = 0.0;
    for (int i = 0; i < m; ++i) {
      if ((uni >> i) & 1U) {
        prob *= dnf.p[static_cast<std::size_t>(i)];
      } else {
        mu_out += dnf.mu[static_cast<std::size_t>(i)];
      }
    }
    if (dnf.exposure) prob *= mu_out / dnf.mu_total;
    total.add(size % 2 == 1 ? prob : -prob);
  });
  return total.value();
}

struct FirstOrderBounds {
  double lower = 0.0;
  double upper = 0.0;
  int matched_decimals = 0;
  std::optional<double> truncated;  // common truncation when matched_decimals > 0
};

namespace detail {

/// Decimal position of the 17th significant digit of x (the last digit a
/// double carries).
inline int precision_decimals(double x) {
  if (!(x > 0.0)) return 17;
  return std::max(0, 16 - static_cast<int>(std::floor(std::log10(x))));
}

inline std::string fixed_decimal(double x) {
  char buf[400];
  std::snprintf(buf, sizeof buf, "%.60f", x);
  return buf;
}

inline FirstOrderBounds matched_bounds(double lower, double upper) {
  FirstOrderBounds b;
  b.lower = lower;
  b.upper = upper;
  const int cap = precision_decimals(std::abs(upper));
  std::string lo;
  std::string hi;
  if (std::abs(upper - lower) <= std::abs(std::nextafter(upper, 0.0) - upper)) {
    // Equal within one ulp: agreement up to the precision of a double.
    b.matched_decimals = cap;
    lo = hi = fixed_decimal(upper);
  } else {
    lo = fixed_decimal(lower);
    hi = fixed_decimal(upper);
    const auto point = hi.find('.');
    if (lo.find('.') != point || lo.compare(0, point, hi, 0, point) != 0) {
      b.matched_decimals = 0;
    } else {
      int d = 0;
      while (point + 1 + static_cast<std::size_t>(d) < hi.size() &&
             lo[point + 1 + static_cast<std::size_t>(d)] == hi[point + 1 + static_cast<std::size_t>(d)]) {
        ++d;
      }
      b.matched_decimals = std::min(d, cap);
    }
  }
  if (b.matched_decimals > 0) {
    const auto point = hi.find('.');
    b.truncated = std::stod(hi.substr(0, point + 1 + static_cast<std::size_t>(b.matched_decimals)));
  }
  return b;
}

}  // namespace detail

struct FirstOrderResult {
  FirstOrderBounds P_f;
  FirstOrderBounds F_f;
};

/// Inclusion-exclusion truncated after the singleton terms (upper bound) and
/// after the pairwise terms (lower bound), for both P_f and F_f.
inline FirstOrderResult first_order_bounds(const CutsetCollection& cutsets,
                                           const ReliabilitySystem& sys) {
  if (cutsets.empty()) throw Error(ErrorKind::invalid_argument, "cutset collection is empty");
  std::vector<double> w;
  std::vector<double> mu;
  for (const auto& c : sys.components()) {
    w.push_back(c.weight());
    mu.push_back(c.mu);
  }
  auto terms = [&](ComponentMask mask) {
    double weight = 0.0;
    double rate = 0.0;
    for_each_id(mask, [&](int id) {
      weight += w[static_cast<std::size_t>(id - 1)];
      rate += mu[static_cast<std::size_t>(id - 1)];
    });
    const double prob = std::exp(-weight);
    return std::pair{prob, prob * rate};
  };
  CompensatedSum p1;
  CompensatedSum f1;
  CompensatedSum p2;
  CompensatedSum f2;
  const auto& cs = cutsets.cutsets;
  for (std::size_t a = 0; a < cs.size(); ++a) {
    const auto [p, f] = terms(cs[a].mask);
    p1.add(p);
    f1.add(f);
    for (std::size_t b = a + 1; b < cs.size(); ++b) {
      const auto [pu, fu] = terms(cs[a].mask | cs[b].mask);
      p2.add(pu);
      f2.add(fu);
    }
  }
  FirstOrderResult out;
  out.P_f = detail::matched_bounds(p1.value() - p2.value(), p1.value());
  out.F_f = detail::matched_bounds(f1.value() - f2.value(), f1.value());
  return out;
}

}  // namespace relfreq
