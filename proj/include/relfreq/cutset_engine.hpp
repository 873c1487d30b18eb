#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "relfreq/component_mask.hpp"
#include "relfreq/error.hpp"
#include "relfreq/random.hpp"
#include "relfreq/system_model.hpp"

namespace relfreq {

/// Relative slack used whenever a weight is compared against a weight limit,
/// so that e.g. 3*w0 <= 1.5*(2*w0) holds despite rounding.
inline constexpr double kWeightTolerance = 1e-12;

inline bool within_weight(double weight, double limit) noexcept {
  return weight <= limit * (1.0 + kWeightTolerance);
}

/// Reusable terminal-connectivity check over component states. Holds scratch
/// space, so one instance must not be shared between threads.
class ConnectivityOracle {
 public:
  explicit ConnectivityOracle(const ReliabilitySystem& sys)
      : terminals_(sys.terminals()),
        parent_(static_cast<std::size_t>(sys.node_count())),
        all_(sys.all_components()) {
    ends_.reserve(sys.components().size());
    for (const auto& c : sys.components()) ends_.push_back({c.u, c.v});
  }

  /// True iff the components in `down` being unavailable disconnects some
  /// terminal pair.
  bool fails(ComponentMask down) {
    std::iota(parent_.begin(), parent_.end(), 0);
    ComponentMask up = all_ & ~down;
    while (up != 0) {
      const auto& e = ends_[static_cast<std::size_t>(std::countr_zero(up))];
      up &= up - 1;
      const int a = find(e.first);
      const int b = find(e.second);
      if (a != b) parent_[static_cast<std::size_t>(a)] = b;
    }
    const int root = find(terminals_.front());
    for (int t : terminals_) {
      if (find(t) != root) return true;
    }
    return false;
  }

  /// Minimality of a cutset: no single member can be restored while keeping
  /// the system failed.
  bool minimal(ComponentMask down) {
    if (!fails(down)) return false;
    ComponentMask rest = down;
    while (rest != 0) {
      const ComponentMask b = rest & (~rest + 1);
      rest &= rest - 1;
      if (fails(down & ~b)) return false;
    }
    return true;
  }

 private:
  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& px = parent_[static_cast<std::size_t>(x)];
      px = parent_[static_cast<std::size_t>(px)];
      x = px;
    }
    return x;
  }

  std::vector<int> terminals_;
  std::vector<std::pair<int, int>> ends_;
  std::vector<int> parent_;
  ComponentMask all_;
};

struct Cutset {
  std::vector<int> members;  // sorted component ids
  ComponentMask mask = 0;
  double weight = 0.0;  // sum of member weights
  double prob = 0.0;    // product of member unavailabilities, exp(-weight)

  std::size_t size() const noexcept { return members.size(); }
  friend bool operator==(const Cutset& a, const Cutset& b) { return a.mask == b.mask; }
};

inline Cutset make_cutset(const ReliabilitySystem& sys, ComponentMask mask) {
  Cutset c;
  c.mask = mask;
  c.members = ids_of(mask);
  for (int id : c.members) c.weight += sys.component(id).weight();
  c.prob = std::exp(-c.weight);
  return c;
}

struct CutsetCollection {
  std::vector<Cutset> cutsets;  // sorted by weight, then members
  double w_star = std::numeric_limits<double>::infinity();
  double p_star = 0.0;
  int s_star = 0;
  std::uint64_t contraction_runs = 0;  // 0 for exhaustive enumeration
  bool complete_guarantee = true;
  std::vector<std::string> warnings;

  std::size_t count() const noexcept { return cutsets.size(); }
  bool empty() const noexcept { return cutsets.empty(); }
};

/// Deduplicates, sorts (weight, then lexicographic members) and fills the
/// aggregates. The first minimum-weight cutset in that order defines w*.
inline CutsetCollection make_collection(const ReliabilitySystem& sys,
                                        std::vector<ComponentMask> masks) {
  std::sort(masks.begin(), masks.end());
  masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
  CutsetCollection out;
  out.cutsets.reserve(masks.size());
  for (ComponentMask m : masks) out.cutsets.push_back(make_cutset(sys, m));
  std::sort(out.cutsets.begin(), out.cutsets.end(), [](const Cutset& a, const Cutset& b) {
    if (a.weight != b.weight) return a.weight < b.weight;
    return a.members < b.members;
  });
  if (!out.cutsets.empty()) {
    out.w_star = out.cutsets.front().weight;
    out.p_star = std::exp(-out.w_star);
    out.s_star = static_cast<int>(out.cutsets.front().size());
    for (const auto& c : out.cutsets) out.s_star = std::min(out.s_star, static_cast<int>(c.size()));
  }
  return out;
}

/// Cutsets of the collection with weight <= limit.
inline CutsetCollection filter_by_weight(const ReliabilitySystem& sys,
                                         const CutsetCollection& all, double limit) {
  std::vector<ComponentMask> keep;
  for (const auto& c : all.cutsets) {
    if (within_weight(c.weight, limit)) keep.push_back(c.mask);
  }
  return make_collection(sys, std::move(keep));
}

inline bool is_cutset(const ReliabilitySystem& sys, ComponentMask members) {
  if (!is_subset(members, sys.all_components())) {
    throw Error(ErrorKind::invalid_argument, "cutset members outside [1, m]");
  }
  return !sys.terminals_connected(sys.all_components() & ~members);
}

inline bool is_minimal(const ReliabilitySystem& sys, ComponentMask members) {
  if (!is_cutset(sys, members)) return false;
  ConnectivityOracle oracle(sys);
  return oracle.minimal(members);
}

struct BruteForceOptions {
  std::optional<double> max_weight;
  int cap = 25;
};

/// Every minimal cutset (of weight <= max_weight when given). Subsets are
/// generated in increasing-id order; a branch stops as soon as it becomes a
/// cutset (its supersets cannot be minimal) or exceeds the weight limit.
inline CutsetCollection enumerate_bruteforce(const ReliabilitySystem& sys,
                                             const BruteForceOptions& options = {}) {
  const int m = sys.component_count();
  if (m > options.cap) {
    throw Error(ErrorKind::cap_exceeded, "brute-force enumeration limited to " +
                                             std::to_string(options.cap) + " components, got " +
                                             std::to_string(m));
  }
  std::vector<double> w(static_cast<std::size_t>(m));
  for (const auto& c : sys.components()) w[static_cast<std::size_t>(c.id - 1)] = c.weight();
  const double limit = options.max_weight.value_or(std::numeric_limits<double>::infinity());

  ConnectivityOracle oracle(sys);
  std::vector<ComponentMask> found;
  // Explicit stack of (subset, next id to try, weight).
  struct Frame {
    ComponentMask set;
    int next;
    double weight;
  };
  std::vector<Frame> stack{{0, 1, 0.0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    for (int id = f.next; id <= m; ++id) {
      const double weight = f.weight + w[static_cast<std::size_t>(id - 1)];
      if (!within_weight(weight, limit)) continue;
      const ComponentMask set = f.set | bit_of(id);
      if (oracle.fails(set)) {
        if (oracle.minimal(set)) found.push_back(set);
      } else {
        stack.push_back({set, id + 1, weight});
      }
    }
  }
  return make_collection(sys, std::move(found));
}

/// Global minimum-weight cut (Stoer-Wagner) under component weights w_i.
/// Phases start from the lowest-index node and break key ties by lower index;
/// the first strictly smallest phase cut wins.
inline Cutset min_cut(const ReliabilitySystem& sys) {
  if (!sys.is_all_terminal()) {
    throw Error(ErrorKind::not_all_terminal, "min_cut requires every node to be a terminal");
  }
  const auto n = static_cast<std::size_t>(sys.node_count());
  std::vector<std::vector<double>> adj(n, std::vector<double>(n, 0.0));
  for (const auto& c : sys.components()) {
    const auto u = static_cast<std::size_t>(c.u);
    const auto v = static_cast<std::size_t>(c.v);
    adj[u][v] += c.weight();
    adj[v][u] += c.weight();
  }
  std::vector<std::vector<int>> group(n);
  for (std::size_t i = 0; i < n; ++i) group[i] = {static_cast<int>(i)};
  std::vector<bool> merged(n, false);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_side;

  for (std::size_t phase = 0; phase + 1 < n; ++phase) {
    std::vector<double> key(n, 0.0);
    std::vector<bool> added(n, false);
    std::size_t prev = n;
    const std::size_t active = n - phase;
    for (std::size_t step = 0; step < active; ++step) {
      std::size_t sel = n;
      for (std::size_t v = 0; v < n; ++v) {
        if (merged[v] || added[v]) continue;
        if (sel == n || key[v] > key[sel]) sel = v;
      }
      added[sel] = true;
      if (step + 1 == active) {
        if (key[sel] < best) {
          best = key[sel];
          best_side = group[sel];
        }
        group[prev].insert(group[prev].end(), group[sel].begin(), group[sel].end());
        for (std::size_t x = 0; x < n; ++x) {
          adj[prev][x] += adj[sel][x];
          adj[x][prev] = adj[prev][x];
        }
        merged[sel] = true;
      } else {
        prev = sel;
        for (std::size_t v = 0; v < n; ++v) key[v] += adj[sel][v];
      }
    }
  }
  std::vector<bool> side(n, false);
  for (int v : best_side) side[static_cast<std::size_t>(v)] = true;
  ComponentMask mask = 0;
  for (const auto& c : sys.components()) {
    if (side[static_cast<std::size_t>(c.u)] != side[static_cast<std::size_t>(c.v)]) {
      mask |= bit_of(c.id);
    }
  }
  return make_cutset(sys, mask);
}

/// Generalized contraction on a fixed all-terminal system: contract random
/// components (probability proportional to weight within the current
/// multigraph) until ceil(2 alpha) meta-nodes remain, then cut along a
/// uniformly random nonempty proper bipartition of the meta-nodes.
class Contractor {
 public:
  explicit Contractor(const ReliabilitySystem& sys)
      : n_(sys.node_count()), oracle_(sys) {
    if (!sys.is_all_terminal()) {
      throw Error(ErrorKind::not_all_terminal, "contraction requires an all-terminal system");
    }
    for (const auto& c : sys.components()) edges_.push_back({c.u, c.v, c.weight(), c.id});
    parent_.resize(static_cast<std::size_t>(n_));
    meta_.resize(static_cast<std::size_t>(n_));
  }

  /// Crossing set of one run, before the minimality filter.
  template <Random64 Rng>
  ComponentMask raw_cut(double alpha, Rng& rng) {
    std::iota(parent_.begin(), parent_.end(), 0);
    live_.resize(edges_.size());
    std::iota(live_.begin(), live_.end(), std::size_t{0});
    const int target = std::min(n_, static_cast<int>(std::ceil(2.0 * alpha)));
    int nodes = n_;
    while (nodes > target) {
      double total = 0.0;
      for (std::size_t e : live_) total += edges_[e].weight;
      double u = uniform01(rng) * total;
      std::size_t pick = live_.back();
      for (std::size_t e : live_) {
        u -= edges_[e].weight;
        if (u < 0.0) {
          pick = e;
          break;
        }
      }
      parent_[static_cast<std::size_t>(find(edges_[pick].u))] = find(edges_[pick].v);
      --nodes;
      std::erase_if(live_, [&](std::size_t e) { return find(edges_[e].u) == find(edges_[e].v); });
    }
    // Meta-node index by first appearance of its root.
    std::fill(meta_.begin(), meta_.end(), -1);
    int groups = 0;
    for (int v = 0; v < n_; ++v) {
      auto& slot = meta_[static_cast<std::size_t>(find(v))];
      if (slot < 0) slot = groups++;
    }
    // Unordered bipartition: the last meta-node always sits on side 0, the
    // others join side 1 according to a uniform nonzero bit pattern.
    const std::uint64_t patterns = (std::uint64_t{1} << (groups - 1)) - 1;
    const std::uint64_t pattern = 1 + static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(patterns));
    const std::uint64_t side = std::min(pattern, patterns);
    ComponentMask cut = 0;
    for (const auto& e : edges_) {
      const int a = meta_[static_cast<std::size_t>(find(e.u))];
      const int b = meta_[static_cast<std::size_t>(find(e.v))];
      const bool sa = a < groups - 1 && ((side >> a) & 1U);
      const bool sb = b < groups - 1 && ((side >> b) & 1U);
      if (sa != sb) cut |= bit_of(e.id);
    }
    return cut;
  }

  /// One run; nullopt when the bipartition cut is not a minimal cutset.
  template <Random64 Rng>
  std::optional<ComponentMask> run(double alpha, Rng& rng) {
    const ComponentMask cut = raw_cut(alpha, rng);
    if (cut == 0 || !oracle_.minimal(cut)) return std::nullopt;
    return cut;
  }

  bool minimal(ComponentMask mask) { return oracle_.minimal(mask); }

 private:
  struct Edge {
    int u;
    int v;
    double weight;
    int id;
  };

  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& px = parent_[static_cast<std::size_t>(x)];
      px = parent_[static_cast<std::size_t>(px)];
      x = px;
    }
    return x;
  }

  int n_;
  std::vector<Edge> edges_;
  std::vector<int> parent_;
  std::vector<int> meta_;
  std::vector<std::size_t> live_;
  ConnectivityOracle oracle_;
};

template <Random64 Rng>
std::optional<Cutset> contraction_run(const ReliabilitySystem& sys, double alpha, Rng& rng) {
  if (!(alpha >= 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must be >= 1");
  Contractor contractor(sys);
  auto mask = contractor.run(alpha, rng);
  if (!mask) return std::nullopt;
  return make_cutset(sys, *mask);
}

struct AlphaMinOptions {
  double c = 2.0;
  std::uint64_t run_budget = 10'000'000;
};

/// n^{2 alpha} ln(n^{2 alpha + c}): runs after which every alpha-min cutset
/// has been seen with probability >= 1 - n^{-c}.
inline double alpha_min_run_count(int n, double alpha, double c) {
  const double log_n = std::log(static_cast<double>(n));
  return std::exp(2.0 * alpha * log_n) * (2.0 * alpha + c) * log_n;
}

/// alpha-min cutsets of an all-terminal system by repeated contraction. The
/// Stoer-Wagner min cut defines w* and is always part of the result.
template <Random64 Rng>
CutsetCollection enumerate_alpha_min(const ReliabilitySystem& sys, double alpha,
                                     const AlphaMinOptions& options, Rng& rng) {
  if (!(alpha >= 1.0)) throw Error(ErrorKind::invalid_argument, "alpha must be >= 1");
  if (!(options.c > 0.0)) throw Error(ErrorKind::invalid_argument, "c must be positive");
  const Cutset best = min_cut(sys);
  const double limit = alpha * best.weight;

  const double wanted = alpha_min_run_count(sys.node_count(), alpha, options.c);
  std::uint64_t runs = options.run_budget;
  bool capped = true;
  if (std::isfinite(wanted) && wanted <= static_cast<double>(options.run_budget)) {
    runs = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(wanted)));
    capped = false;
  }

  std::vector<double> w(static_cast<std::size_t>(sys.component_count()));
  for (const auto& c : sys.components()) w[static_cast<std::size_t>(c.id - 1)] = c.weight();
  auto weight_of = [&](ComponentMask mask) {
    double total = 0.0;
    for_each_id(mask, [&](int id) { total += w[static_cast<std::size_t>(id - 1)]; });
    return total;
  };

  Contractor contractor(sys);
  std::unordered_map<ComponentMask, bool> verdict;
  std::vector<ComponentMask> accepted{best.mask};
  verdict.emplace(best.mask, true);
  for (std::uint64_t r = 0; r < runs; ++r) {
    const ComponentMask cut = contractor.raw_cut(alpha, rng);
    auto [it, inserted] = verdict.try_emplace(cut, false);
    if (!inserted) continue;
    if (within_weight(weight_of(cut), limit) && contractor.minimal(cut)) {
      it->second = true;
      accepted.push_back(cut);
    }
  }
  CutsetCollection out = make_collection(sys, std::move(accepted));
  out.contraction_runs = runs;
  if (capped) {
    out.complete_guarantee = false;
    out.warnings.push_back("contraction runs capped at " + std::to_string(runs) +
                           "; the completeness guarantee 1 - n^-c no longer holds");
  }
  return out;
}

/// One JSON object per line: {"members": [...], "weight": w, "prob": p}.
inline void write_jsonl(std::ostream& out, const CutsetCollection& cutsets) {
  for (const auto& c : cutsets.cutsets) {
    nlohmann::json line = {{"members", c.members}, {"weight", c.weight}, {"prob", c.prob}};
    out << line.dump() << '\n';
  }
}

}  // namespace relfreq
