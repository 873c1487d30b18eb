#pragma once

// Reference computations used only by the tests. They deliberately avoid the
// library's connectivity and summation code: connectivity is a plain BFS and
// sums run in long double.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "relfreq/relfreq.hpp"

namespace oracle {

using relfreq::ComponentMask;
using relfreq::ReliabilitySystem;

inline bool connected_bfs(const ReliabilitySystem& sys, ComponentMask down) {
  const auto n = static_cast<std::size_t>(sys.node_count());
  std::vector<std::vector<int>> adj(n);
  for (const auto& c : sys.components()) {
    if ((down >> (c.id - 1)) & 1U) continue;
    adj[static_cast<std::size_t>(c.u)].push_back(c.v);
    adj[static_cast<std::size_t>(c.v)].push_back(c.u);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(sys.terminals().front());
  seen[static_cast<std::size_t>(sys.terminals().front())] = true;
  while (!q.empty()) {
    const int x = q.front();
    q.pop();
    for (int y : adj[static_cast<std::size_t>(x)]) {
      if (!seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = true;
        q.push(y);
      }
    }
  }
  for (int t : sys.terminals()) {
    if (!seen[static_cast<std::size_t>(t)]) return false;
  }
  return true;
}

/// All minimal cutsets by scanning every subset of components.
inline std::set<ComponentMask> minimal_cutsets(const ReliabilitySystem& sys) {
  const int m = sys.component_count();
  std::vector<bool> fails(std::size_t{1} << m);
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << m); ++s) fails[s] = !connected_bfs(sys, s);
  std::set<ComponentMask> out;
  for (std::uint64_t s = 1; s < (std::uint64_t{1} << m); ++s) {
    if (!fails[s]) continue;
    bool minimal = true;
    for (int i = 0; i < m && minimal; ++i) {
      if (((s >> i) & 1U) && fails[s & ~(std::uint64_t{1} << i)]) minimal = false;
    }
    if (minimal) out.insert(s);
  }
  return out;
}

struct Totals {
  long double P_f = 0;
  long double F_f = 0;
};

inline Totals state_totals(const ReliabilitySystem& sys) {
  const int m = sys.component_count();
  Totals t;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << m); ++s) {
    if (connected_bfs(sys, s)) continue;
    long double prob = 1;
    long double flux = 0;
    for (const auto& c : sys.components()) {
      const long double lam = c.lambda;
      const long double mu = c.mu;
      if ((s >> (c.id - 1)) & 1U) {
        prob *= lam / (lam + mu);
        flux += mu;
      } else {
        prob *= mu / (lam + mu);
        flux -= lam;
      }
    }
    t.P_f += prob;
    t.F_f += prob * flux;
  }
  return t;
}

/// Truth probability of a DNF instance, summing over every unavailability
/// pattern and (with exposure) every exposed component.
inline long double dnf_truth(const relfreq::DnfInstance& dnf) {
  const int m = dnf.component_count();
  long double mu_total = 0;
  for (double x : dnf.mu) mu_total += x;
  long double total = 0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << m); ++s) {
    long double prob = 1;
    for (int i = 0; i < m; ++i) {
      const long double p = dnf.p[static_cast<std::size_t>(i)];
      prob *= ((s >> i) & 1U) ? p : 1 - p;
    }
    if (!dnf.exposure) {
      for (ComponentMask c : dnf.clauses) {
        if ((c & ~s) == 0) {
          total += prob;
          break;
        }
      }
      continue;
    }
    for (int e = 0; e < m; ++e) {
      for (ComponentMask c : dnf.clauses) {
        if ((c & ~s) == 0 && !((c >> e) & 1U)) {
          total += prob * dnf.mu[static_cast<std::size_t>(e)] / mu_total;
          break;
        }
      }
    }
  }
  return total;
}

/// Connected system with n in [3, max_nodes] and m <= max_edges, random
/// terminals (all of them with probability 1/3) and rates satisfying
/// mu_min / lambda_max > m - 1.
inline ReliabilitySystem random_system(std::mt19937_64& rng, int max_nodes = 7, int max_edges = 14) {
  std::uniform_int_distribution<int> node_count(3, max_nodes);
  const int n = node_count(rng);
  std::vector<std::pair<int, int>> edges;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> parent(0, v - 1);
    edges.emplace_back(parent(rng), v);
  }
  std::uniform_int_distribution<int> extra(0, std::max(0, max_edges - (n - 1)));
  const int more = std::min(extra(rng), n * (n - 1) / 2 - (n - 1));
  std::uniform_int_distribution<int> any(0, n - 1);
  for (int k = 0; k < more; ++k) {
    for (int tries = 0; tries < 100; ++tries) {
      int a = any(rng);
      int b = any(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      if (std::find(edges.begin(), edges.end(), std::pair{a, b}) != edges.end()) continue;
      edges.emplace_back(a, b);
      break;
    }
  }
  const int m = static_cast<int>(edges.size());
  std::uniform_real_distribution<double> mu_dist(1.0, 3.0);
  std::vector<double> mu;
  for (int i = 0; i < m; ++i) mu.push_back(mu_dist(rng));
  const double mu_min = *std::min_element(mu.begin(), mu.end());
  std::uniform_real_distribution<double> lam_dist(0.05, 0.95);
  std::vector<relfreq::Component> comps;
  for (int i = 0; i < m; ++i) {
    const double lam = lam_dist(rng) * mu_min / std::max(1, m - 1);
    comps.push_back({i + 1, edges[static_cast<std::size_t>(i)].first,
                     edges[static_cast<std::size_t>(i)].second, lam, mu[static_cast<std::size_t>(i)]});
  }
  std::vector<relfreq::NodeLabel> labels;
  for (int v = 0; v < n; ++v) labels.push_back(10 * (v + 1));
  std::vector<int> terminals;
  std::uniform_int_distribution<int> coin(0, 2);
  if (coin(rng) == 0) {
    for (int v = 0; v < n; ++v) terminals.push_back(v);
  } else {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) order[static_cast<std::size_t>(v)] = v;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<int> k_dist(2, n);
    order.resize(static_cast<std::size_t>(k_dist(rng)));
    terminals = order;
  }
  return ReliabilitySystem(std::move(labels), std::move(terminals), std::move(comps));
}

/// Random positive DNF over m components with M clauses.
inline relfreq::DnfInstance random_dnf(std::mt19937_64& rng, int m, int clauses, bool exposure) {
  std::uniform_real_distribution<double> p_dist(0.05, 0.6);
  std::uniform_real_distribution<double> mu_dist(0.5, 2.0);
  std::vector<double> p;
  std::vector<double> mu;
  for (int i = 0; i < m; ++i) {
    p.push_back(p_dist(rng));
    mu.push_back(mu_dist(rng));
  }
  std::uniform_int_distribution<int> size_dist(1, std::min(3, m - 1));
  std::uniform_int_distribution<int> comp(0, m - 1);
  std::vector<ComponentMask> cs;
  for (int j = 0; j < clauses; ++j) {
    ComponentMask c = 0;
    const int k = size_dist(rng);
    while (relfreq::cardinality(c) < k) c |= ComponentMask{1} << comp(rng);
    cs.push_back(c);
  }
  return relfreq::make_dnf(std::move(cs), exposure, std::move(p), std::move(mu));
}

inline ComponentMask mask(std::initializer_list<int> ids) {
  ComponentMask m = 0;
  for (int id : ids) m |= ComponentMask{1} << (id - 1);
  return m;
}

/// Minimal cutsets of size 2 and 3 of the unit-weight 3x3 grid (components
/// numbered row by row, horizontal edges before the vertical ones below them).
inline std::set<ComponentMask> grid_small_cutsets() {
  return {mask({1, 3}),     mask({2, 5}),     mask({8, 11}),    mask({10, 12}),
          mask({1, 2, 4}),  mask({2, 3, 4}),  mask({1, 4, 5}),  mask({3, 4, 5}),
          mask({1, 6, 8}),  mask({3, 6, 8}),  mask({2, 7, 10}), mask({5, 7, 10}),
          mask({8, 9, 10}), mask({1, 6, 11}), mask({3, 6, 11}), mask({9, 10, 11}),
          mask({2, 7, 12}), mask({5, 7, 12}), mask({8, 9, 12}), mask({9, 11, 12})};
}

/// Single edge between two terminals.
inline ReliabilitySystem single_edge(double lambda, double mu) {
  return ReliabilitySystem({1, 2}, {0, 1}, {{1, 0, 1, lambda, mu}});
}

/// Path 1 - 2 - 3 with terminals {1, 3}.
inline ReliabilitySystem two_edge_series(double p, double mu) {
  const double lam = relfreq::failure_rate_for(p, mu);
  return ReliabilitySystem({1, 2, 3}, {0, 2}, {{1, 0, 1, lam, mu}, {2, 1, 2, lam, mu}});
}

/// 4-cycle with every node a terminal.
inline ReliabilitySystem four_cycle(double p, double mu) {
  return relfreq::grid_system(2, 2, p, mu);
}

}  // namespace oracle
