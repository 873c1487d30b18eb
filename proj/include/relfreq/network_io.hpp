#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "relfreq/error.hpp"
#include "relfreq/system_model.hpp"

namespace relfreq {

inline constexpr const char* kNetworkFormat = "relfreq.network";
inline constexpr int kNetworkVersion = 1;

using Diagnostics = std::vector<std::string>;

/// Network document:
///   {"format": "relfreq.network", "version": 1,
///    "nodes": [1, 2, ...],
///    "terminals": [1, 2, ...] | "all",
///    "edges": [{"u": 1, "v": 2, "lambda": 0.1, "mu": 1.0},
///              {"u": 2, "v": 3, "p": 0.01, "mu": 1.0}, ...]}
/// An edge gives either lambda or p (then lambda = p mu / (1 - p)).
/// Parallel edges are merged; component ids follow document order.
inline ReliabilitySystem load_system(const nlohmann::json& doc, Diagnostics* diagnostics = nullptr) {
  auto fail = [](const std::string& what) -> void { throw Error(ErrorKind::parse, what); };
  if (!doc.is_object()) fail("document must be a JSON object");
  if (doc.contains("format") && doc["format"] != kNetworkFormat) fail("unexpected format tag");
  if (doc.contains("version")) {
    if (!doc["version"].is_number_integer() || doc["version"].get<int>() != kNetworkVersion) {
      fail("unsupported version");
    }
  }
  for (const char* key : {"nodes", "terminals", "edges"}) {
    if (!doc.contains(key)) fail(std::string("missing field '") + key + "'");
  }
  const auto& nodes = doc["nodes"];
  if (!nodes.is_array()) fail("'nodes' must be an array of integers");
  std::vector<NodeLabel> labels;
  std::unordered_map<NodeLabel, int> index;
  for (const auto& node : nodes) {
    if (!node.is_number_integer()) fail("node ids must be integers");
    const auto label = node.get<NodeLabel>();
    if (!index.emplace(label, static_cast<int>(labels.size())).second) {
      fail("duplicate node id " + std::to_string(label));
    }
    labels.push_back(label);
  }
  auto lookup = [&](const nlohmann::json& ref) {
    if (!ref.is_number_integer()) fail("node references must be integers");
    const auto label = ref.get<NodeLabel>();
    auto it = index.find(label);
    if (it == index.end()) {
      throw Error(ErrorKind::unknown_node, "node " + std::to_string(label) + " is not declared");
    }
    return it->second;
  };

  std::vector<int> terminals;
  const auto& term = doc["terminals"];
  if (term.is_string() && term.get<std::string>() == "all") {
    for (int i = 0; i < static_cast<int>(labels.size()); ++i) terminals.push_back(i);
  } else if (term.is_array()) {
    for (const auto& t : term) terminals.push_back(lookup(t));
  } else {
    fail("'terminals' must be an array or \"all\"");
  }
  if (terminals.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "terminal set must contain at least 2 nodes");
  }

  const auto& edges = doc["edges"];
  if (!edges.is_array()) fail("'edges' must be an array");
  std::vector<Component> comps;
  for (const auto& e : edges) {
    if (!e.is_object() || !e.contains("u") || !e.contains("v") || !e.contains("mu")) {
      fail("each edge needs u, v and mu");
    }
    const bool has_lambda = e.contains("lambda");
    const bool has_p = e.contains("p");
    if (has_lambda == has_p) fail("each edge needs exactly one of lambda or p");
    auto number = [&](const char* key) {
      if (!e[key].is_number()) fail(std::string("edge field '") + key + "' must be numeric");
      return e[key].get<double>();
    };
    Component c;
    c.id = static_cast<int>(comps.size()) + 1;
    c.u = lookup(e["u"]);
    c.v = lookup(e["v"]);
    c.mu = number("mu");
    if (!(c.mu > 0.0)) {
      throw Error(ErrorKind::nonpositive_rate, "edge " + std::to_string(c.id) + " has mu <= 0");
    }
    if (has_lambda) {
      c.lambda = number("lambda");
      if (!(c.lambda > 0.0)) {
        throw Error(ErrorKind::nonpositive_rate, "edge " + std::to_string(c.id) + " has lambda <= 0");
      }
    } else {
      const double p = number("p");
      if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorKind::invalid_probability,
                    "edge " + std::to_string(c.id) + " has p outside (0,1)");
      }
      c.lambda = failure_rate_for(p, c.mu);
    }
    comps.push_back(c);
  }
  ReliabilitySystem raw(std::move(labels), std::move(terminals), std::move(comps));
  ReliabilitySystem sys = raw.has_parallel_components() ? merge_parallel(raw) : raw;
  if (diagnostics != nullptr) {
    if (raw.component_count() != sys.component_count()) {
      diagnostics->push_back("merged " +
                             std::to_string(raw.component_count() - sys.component_count()) +
                             " parallel component(s)");
    }
    if (!rate_assumption_holds(sys)) {
      diagnostics->push_back(
          "warning: mu_min/lambda_max <= m-1; frequency approximations may reject this system");
    }
  }
  return sys;
}

inline ReliabilitySystem load_system_text(const std::string& text, Diagnostics* diagnostics = nullptr) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::parse, e.what());
  }
  return load_system(doc, diagnostics);
}

inline ReliabilitySystem load_system_file(const std::string& path, Diagnostics* diagnostics = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_system_text(buffer.str(), diagnostics);
}

/// Serializes rates as (lambda, mu); reloading reproduces the system exactly.
inline nlohmann::json to_json(const ReliabilitySystem& sys) {
  nlohmann::json doc;
  doc["format"] = kNetworkFormat;
  doc["version"] = kNetworkVersion;
  doc["nodes"] = sys.node_labels();
  if (sys.is_all_terminal()) {
    doc["terminals"] = "all";
  } else {
    auto terms = nlohmann::json::array();
    for (int t : sys.terminals()) terms.push_back(sys.node_label(t));
    doc["terminals"] = terms;
  }
  auto edges = nlohmann::json::array();
  for (const auto& c : sys.components()) {
    edges.push_back({{"u", sys.node_label(c.u)},
                     {"v", sys.node_label(c.v)},
                     {"lambda", c.lambda},
                     {"mu", c.mu}});
  }
  doc["edges"] = edges;
  return doc;
}

/// Grid document in the (p, mu) parameterization.
inline nlohmann::json grid_document(int rows, int cols, double p, double mu) {
  const ReliabilitySystem grid = grid_system(rows, cols, p, mu);
  nlohmann::json doc = to_json(grid);
  for (auto& e : doc["edges"]) {
    e.erase("lambda");
    e["p"] = p;
  }
  return doc;
}

inline void save_json(const nlohmann::json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

}  // namespace relfreq
