#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relfreq/component_mask.hpp"
#include "relfreq/error.hpp"

namespace relfreq {

using NodeLabel = std::int64_t;

/// Two-state component with stationary failure rate `lambda` and repair rate
/// `mu`. Unavailability and weight are derived on demand.
struct Component {
  int id = 0;  // 1-based
  int u = 0;   // internal node index
  int v = 0;   // internal node index
  double lambda = 0.0;
  double mu = 0.0;

  double p() const noexcept { return lambda / (lambda + mu); }
  /// 1 - p computed without cancellation.
  double availability() const noexcept { return mu / (lambda + mu); }
  double weight() const noexcept { return -std::log(p()); }
};

/// Lambda for a component parameterized by unavailability p and repair rate mu.
inline double failure_rate_for(double p, double mu) { return p * mu / (1.0 - p); }

/// k-terminal reliability system. Immutable once constructed; construction
/// validates rates, node references, the terminal set and terminal
/// connectivity. Parallel components are allowed here; see merge_parallel.
class ReliabilitySystem {
 public:
  ReliabilitySystem() = default;

  ReliabilitySystem(std::vector<NodeLabel> node_labels, std::vector<int> terminals,
                    std::vector<Component> components)
      : labels_(std::move(node_labels)),
        terminals_(std::move(terminals)),
        components_(std::move(components)) {
    validate();
  }

  int node_count() const noexcept { return static_cast<int>(labels_.size()); }
  int terminal_count() const noexcept { return static_cast<int>(terminals_.size()); }
  int component_count() const noexcept { return static_cast<int>(components_.size()); }
  bool is_all_terminal() const noexcept { return terminal_count() == node_count(); }

  const std::vector<NodeLabel>& node_labels() const noexcept { return labels_; }
  NodeLabel node_label(int index) const { return labels_.at(static_cast<std::size_t>(index)); }
  /// Internal node indices of the terminals, ascending.
  const std::vector<int>& terminals() const noexcept { return terminals_; }
  const std::vector<Component>& components() const noexcept { return components_; }
  const Component& component(int id) const {
    return components_.at(static_cast<std::size_t>(id - 1));
  }

  ComponentMask all_components() const noexcept { return full_mask(component_count()); }

  bool has_parallel_components() const {
    std::vector<std::pair<int, int>> keys;
    keys.reserve(components_.size());
    for (const auto& c : components_) keys.emplace_back(std::minmax(c.u, c.v));
    std::sort(keys.begin(), keys.end());
    return std::adjacent_find(keys.begin(), keys.end()) != keys.end();
  }

  /// True iff the components in `up` connect every terminal.
  bool terminals_connected(ComponentMask up) const {
    std::vector<int> parent(labels_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) {
        auto& px = parent[static_cast<std::size_t>(x)];
        px = parent[static_cast<std::size_t>(px)];
        x = px;
      }
      return x;
    };
    for_each_id(up, [&](int id) {
      const auto& c = components_[static_cast<std::size_t>(id - 1)];
      parent[static_cast<std::size_t>(find(c.u))] = find(c.v);
    });
    const int root = find(terminals_.front());
    return std::all_of(terminals_.begin(), terminals_.end(),
                       [&](int t) { return find(t) == root; });
  }

 private:
  void validate() {
    const int n = node_count();
    if (n < 2) throw Error(ErrorKind::invalid_argument, "a system needs at least 2 nodes");
    {
      auto sorted = labels_;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw Error(ErrorKind::invalid_argument, "duplicate node label");
      }
    }
    std::sort(terminals_.begin(), terminals_.end());
    if (std::adjacent_find(terminals_.begin(), terminals_.end()) != terminals_.end()) {
      throw Error(ErrorKind::invalid_argument, "duplicate terminal");
    }
    if (terminals_.size() < 2) {
      throw Error(ErrorKind::invalid_argument, "terminal set must contain at least 2 nodes");
    }
    for (int t : terminals_) {
      if (t < 0 || t >= n) {
        throw Error(ErrorKind::unknown_node, "terminal index " + std::to_string(t));
      }
    }
    if (components_.empty()) {
      throw Error(ErrorKind::disconnected_terminals, "system has no components");
    }
    if (component_count() > kMaxComponents) {
      throw Error(ErrorKind::invalid_argument,
                  "at most " + std::to_string(kMaxComponents) + " components are supported");
    }
    for (std::size_t i = 0; i < components_.size(); ++i) {
      auto& c = components_[i];
      if (c.id != static_cast<int>(i) + 1) {
        throw Error(ErrorKind::invalid_argument, "component ids must be contiguous 1..m");
      }
      if (c.u < 0 || c.u >= n || c.v < 0 || c.v >= n) {
        throw Error(ErrorKind::unknown_node,
                    "component " + std::to_string(c.id) + " references a missing node");
      }
      if (c.u == c.v) {
        throw Error(ErrorKind::invalid_argument,
                    "component " + std::to_string(c.id) + " is a self-loop");
      }
      if (!(c.lambda > 0.0) || !(c.mu > 0.0) || !std::isfinite(c.lambda) ||
          !std::isfinite(c.mu)) {
        throw Error(ErrorKind::nonpositive_rate,
                    "component " + std::to_string(c.id) + " needs lambda > 0 and mu > 0");
      }
      const double p = c.p();
      if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorKind::invalid_probability,
                    "component " + std::to_string(c.id) + " has unavailability outside (0,1)");
      }
    }
    if (!terminals_connected(all_components())) {
      throw Error(ErrorKind::disconnected_terminals,
                  "terminals are not connected even with every component available");
    }
  }

  std::vector<NodeLabel> labels_;
  std::vector<int> terminals_;
  std::vector<Component> components_;
};

/// Replaces every bundle of parallel components by one component with
/// p = prod p_j, repair rate sum mu_j and failure rate p * sum mu_j / (1 - p).
/// Bundles are ordered by first appearance; singleton bundles are copied
/// unchanged, so the operation is idempotent.
inline ReliabilitySystem merge_parallel(const ReliabilitySystem& raw) {
  std::map<std::pair<int, int>, std::size_t> bundle_of;
  std::vector<std::vector<const Component*>> bundles;
  for (const auto& c : raw.components()) {
    const auto key = std::minmax(c.u, c.v);
    auto [it, inserted] = bundle_of.try_emplace(key, bundles.size());
    if (inserted) bundles.emplace_back();
    bundles[it->second].push_back(&c);
  }
  std::vector<Component> merged;
  merged.reserve(bundles.size());
  for (const auto& bundle : bundles) {
    Component c = *bundle.front();
    c.id = static_cast<int>(merged.size()) + 1;
    if (bundle.size() > 1) {
      double p = 1.0;
      double mu = 0.0;
      for (const Component* part : bundle) {
        p *= part->p();
        mu += part->mu;
      }
      c.mu = mu;
      c.lambda = failure_rate_for(p, mu);
    }
    merged.push_back(c);
  }
  return ReliabilitySystem(raw.node_labels(), raw.terminals(), std::move(merged));
}

/// Aggregate rate statistics. `rho` is mu_min * s - lambda_max * (m - s) for
/// the cutset size s the stats were computed with.
struct SystemStats {
  double lambda_max = 0.0;
  double mu_min = 0.0;
  double w_max = 0.0;
  double lambda = 0.0;  // sum of failure rates
  double mu = 0.0;      // sum of repair rates
  double w = 0.0;       // sum of weights
  double s_star = 0.0;
  double rho = 0.0;
};

inline double rho_for(const SystemStats& stats, int m, double s_star) {
  return stats.mu_min * s_star - stats.lambda_max * (static_cast<double>(m) - s_star);
}

namespace detail {

inline SystemStats rate_stats(const ReliabilitySystem& sys) {
  SystemStats st;
  st.mu_min = std::numeric_limits<double>::infinity();
  for (const auto& c : sys.components()) {
    st.lambda_max = std::max(st.lambda_max, c.lambda);
    st.mu_min = std::min(st.mu_min, c.mu);
    st.w_max = std::max(st.w_max, c.weight());
    st.lambda += c.lambda;
    st.mu += c.mu;
    st.w += c.weight();
  }
  return st;
}

}  // namespace detail

/// Stats with rho for a real-valued cutset size (the all-terminal path uses a
/// weight-based surrogate for s*).
inline SystemStats system_stats(const ReliabilitySystem& sys, double s_star) {
  const int m = sys.component_count();
  if (!(s_star >= 1.0 && s_star <= static_cast<double>(m))) {
    throw Error(ErrorKind::invalid_argument, "s_star must lie in [1, m]");
  }
  SystemStats st = detail::rate_stats(sys);
  st.s_star = s_star;
  st.rho = rho_for(st, m, s_star);
  return st;
}

inline SystemStats system_stats(const ReliabilitySystem& sys, int s_star) {
  return system_stats(sys, static_cast<double>(s_star));
}

/// rho > 0 is required by the frequency approximations.
inline bool validate_rho(const SystemStats& stats) noexcept { return stats.rho > 0.0; }

/// mu_min / lambda_max > m - 1, which makes rho > 0 for every s* >= 1.
inline bool rate_assumption_holds(const ReliabilitySystem& sys) {
  const SystemStats st = detail::rate_stats(sys);
  return st.mu_min / st.lambda_max > static_cast<double>(sys.component_count() - 1);
}

/// rows x cols grid, every node a terminal. Nodes are labelled 1..rows*cols
/// row-major. Components are numbered row by row: the horizontal edges of a
/// row, then the vertical edges from that row to the next.
inline ReliabilitySystem grid_system(int rows, int cols, double p, double mu) {
  if (rows < 2 || cols < 2) throw Error(ErrorKind::invalid_argument, "grid needs rows, cols >= 2");
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::invalid_probability, "grid p must be in (0,1)");
  if (!(mu > 0.0)) throw Error(ErrorKind::nonpositive_rate, "grid mu must be positive");
  const int n = rows * cols;
  std::vector<NodeLabel> labels(static_cast<std::size_t>(n));
  std::iota(labels.begin(), labels.end(), NodeLabel{1});
  std::vector<int> terminals(static_cast<std::size_t>(n));
  std::iota(terminals.begin(), terminals.end(), 0);
  const double lambda = failure_rate_for(p, mu);
  std::vector<Component> comps;
  auto add = [&](int a, int b) {
    comps.push_back(Component{static_cast<int>(comps.size()) + 1, a, b, lambda, mu});
  };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c + 1 < cols; ++c) add(r * cols + c, r * cols + c + 1);
    if (r + 1 < rows) {
      for (int c = 0; c < cols; ++c) add(r * cols + c, (r + 1) * cols + c);
    }
  }
  return ReliabilitySystem(std::move(labels), std::move(terminals), std::move(comps));
}

/// Common unavailability if every component shares it, otherwise nullopt.
inline std::optional<double> uniform_unavailability(const ReliabilitySystem& sys) {
  const double p0 = sys.components().front().p();
  for (const auto& c : sys.components()) {
    if (std::abs(c.p() - p0) > 1e-12 * p0) return std::nullopt;
  }
  return p0;
}

}  // namespace relfreq
