#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "relfreq/error.hpp"

namespace relfreq {

/// One estimator or oracle output for one quantity of one system.
struct RunReportRow {
  std::string system;
  std::optional<double> p;  // common unavailability, when uniform
  std::string method;       // polyN | all_terminal | mcs | bounds | exact
  std::string quantity;     // F_f | P_f
  double value = 0.0;
  std::optional<double> lower;
  std::optional<double> upper;
  double runtime = 0.0;
  std::optional<double> epsilon;
  std::optional<double> actual_error;
  std::optional<double> p_star;
  std::optional<double> alpha;
  std::optional<std::uint64_t> n_alpha;
  std::string branch;
  bool no_failure = false;
  std::uint64_t samples = 0;
  std::optional<std::uint64_t> seed;
};

inline const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "system", "p",       "method", "quantity", "value",  "lower",      "upper",   "runtime_s",
      "epsilon", "actual_error", "p_star", "alpha", "n_alpha", "branch", "no_failure", "samples",
      "seed"};
  return cols;
}

inline bool is_known_method(const std::string& m) {
  return m == "polyN" || m == "all_terminal" || m == "mcs" || m == "bounds" || m == "exact";
}

/// max{|v - lower|, |v - upper|} / lower.
inline std::optional<double> actual_error_factor(double value, double lower, double upper) {
  if (!(lower > 0.0)) return std::nullopt;
  return std::max(std::abs(value - lower), std::abs(value - upper)) / lower;
}

namespace detail {

inline std::string format_number(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

inline std::string cell(const std::optional<double>& x, int digits) {
  return x ? format_number(*x, digits) : std::string();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::schema_mismatch, "column " + column + " holds non-numeric '" + s + "'");
}

inline std::optional<double> parse_optional(const std::string& s, const std::string& column) {
  if (s.empty()) return std::nullopt;
  return parse_double(s, column);
}

inline std::uint64_t parse_count(const std::string& s, const std::string& column) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::schema_mismatch, "column " + column + " holds non-integer '" + s + "'");
}

inline void check_row(const RunReportRow& row) {
  if (!is_known_method(row.method)) {
    throw Error(ErrorKind::schema_mismatch, "unknown method '" + row.method + "'");
  }
  if (row.quantity != "F_f" && row.quantity != "P_f") {
    throw Error(ErrorKind::schema_mismatch, "unknown quantity '" + row.quantity + "'");
  }
  if (row.system.empty() || row.system.find(',') != std::string::npos) {
    throw Error(ErrorKind::schema_mismatch, "system id must be nonempty and comma-free");
  }
}

}  // namespace detail

/// Header line followed by one line per row; numbers carry 17 significant digits.
inline void write_csv(std::ostream& out, const std::vector<RunReportRow>& rows, bool header = true) {
  if (header) {
    const auto& cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
  }
  for (const auto& r : rows) {
    detail::check_row(r);
    out << r.system << ',' << detail::cell(r.p, 17) << ',' << r.method << ',' << r.quantity << ','
        << detail::format_number(r.value, 17) << ',' << detail::cell(r.lower, 17) << ','
        << detail::cell(r.upper, 17) << ',' << detail::format_number(r.runtime, 17) << ','
        << detail::cell(r.epsilon, 17) << ',' << detail::cell(r.actual_error, 17) << ','
        << detail::cell(r.p_star, 17) << ',' << detail::cell(r.alpha, 17) << ','
        << (r.n_alpha ? std::to_string(*r.n_alpha) : "") << ',' << r.branch << ','
        << (r.no_failure ? "1" : "0") << ',' << r.samples << ','
        << (r.seed ? std::to_string(*r.seed) : "") << '\n';
  }
}

inline nlohmann::json to_json(const RunReportRow& r) {
  auto opt = [](const auto& x) -> nlohmann::json {
    if (x) return *x;
    return nullptr;
  };
  return {{"system", r.system},         {"p", opt(r.p)},
          {"method", r.method},         {"quantity", r.quantity},
          {"value", r.value},           {"lower", opt(r.lower)},
          {"upper", opt(r.upper)},      {"runtime_s", r.runtime},
          {"epsilon", opt(r.epsilon)},  {"actual_error", opt(r.actual_error)},
          {"p_star", opt(r.p_star)},    {"alpha", opt(r.alpha)},
          {"n_alpha", opt(r.n_alpha)},  {"branch", r.branch},
          {"no_failure", r.no_failure}, {"samples", r.samples},
          {"seed", opt(r.seed)}};
}

inline RunReportRow row_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::schema_mismatch, "report row must be an object");
  for (const auto& key : report_columns()) {
    if (!j.contains(key)) throw Error(ErrorKind::schema_mismatch, "report row lacks '" + key + "'");
  }
  try {
    auto opt = [&](const char* key) -> std::optional<double> {
      if (j.at(key).is_null()) return std::nullopt;
      return j.at(key).get<double>();
    };
    RunReportRow r;
    r.system = j.at("system").get<std::string>();
    r.p = opt("p");
    r.method = j.at("method").get<std::string>();
    r.quantity = j.at("quantity").get<std::string>();
    r.value = j.at("value").get<double>();
    r.lower = opt("lower");
    r.upper = opt("upper");
    r.runtime = j.at("runtime_s").get<double>();
    r.epsilon = opt("epsilon");
    r.actual_error = opt("actual_error");
    r.p_star = opt("p_star");
    r.alpha = opt("alpha");
    if (!j.at("n_alpha").is_null()) r.n_alpha = j.at("n_alpha").get<std::uint64_t>();
    r.branch = j.at("branch").get<std::string>();
    r.no_failure = j.at("no_failure").get<bool>();
    r.samples = j.at("samples").get<std::uint64_t>();
    if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
    detail::check_row(r);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::schema_mismatch, e.what());
  }
}

/// Rows from CSV (header required) or from a JSON array of row objects.
inline std::vector<RunReportRow> read_rows(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  std::vector<RunReportRow> rows;
  if (first == std::string::npos) return rows;
  if (text[first] == '[') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::parse, e.what());
    }
    for (const auto& j : doc) rows.push_back(row_from_json(j));
    return rows;
  }
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  if (detail::split_csv_line(line) != report_columns()) {
    throw Error(ErrorKind::schema_mismatch, "unexpected report header '" + line + "'");
  }
  while (std::getline(lines, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != report_columns().size()) {
      throw Error(ErrorKind::schema_mismatch, "row has " + std::to_string(f.size()) + " fields");
    }
    RunReportRow r;
    r.system = f[0];
    r.p = detail::parse_optional(f[1], "p");
    r.method = f[2];
    r.quantity = f[3];
    r.value = detail::parse_double(f[4], "value");
    r.lower = detail::parse_optional(f[5], "lower");
    r.upper = detail::parse_optional(f[6], "upper");
    r.runtime = detail::parse_double(f[7], "runtime_s");
    r.epsilon = detail::parse_optional(f[8], "epsilon");
    r.actual_error = detail::parse_optional(f[9], "actual_error");
    r.p_star = detail::parse_optional(f[10], "p_star");
    r.alpha = detail::parse_optional(f[11], "alpha");
    if (!f[12].empty()) r.n_alpha = detail::parse_count(f[12], "n_alpha");
    r.branch = f[13];
    if (f[14] != "0" && f[14] != "1") throw Error(ErrorKind::schema_mismatch, "no_failure must be 0 or 1");
    r.no_failure = f[14] == "1";
    r.samples = detail::parse_count(f[15], "samples");
    if (!f[16].empty()) r.seed = detail::parse_count(f[16], "seed");
    detail::check_row(r);
    rows.push_back(std::move(r));
  }
  return rows;
}

/// One line of the bounds / proposed / MCS comparison for a (system, p, quantity).
struct ComparisonRow {
  std::string system;
  std::optional<double> p;
  std::string quantity;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> exact;
  std::optional<RunReportRow> proposed;
  std::optional<RunReportRow> mcs;
};

inline std::optional<double> comparison_error(const ComparisonRow& row, const RunReportRow& est) {
  if (est.method == "mcs" && est.no_failure) return std::nullopt;
  if (row.lower && row.upper) return actual_error_factor(est.value, *row.lower, *row.upper);
  return est.actual_error;
}

/// Groups rows by (system, p, quantity) in order of first appearance.
inline std::vector<ComparisonRow> merge_report(const std::vector<RunReportRow>& rows) {
  std::vector<ComparisonRow> out;
  std::map<std::string, std::size_t> index;
  auto key_of = [](const RunReportRow& r) {
    return r.system + '|' + (r.p ? detail::format_number(*r.p, 17) : "") + '|' + r.quantity;
  };
  std::map<std::string, bool> seen_method;
  for (const auto& r : rows) {
    detail::check_row(r);
    const std::string key = key_of(r);
    if (!seen_method.emplace(key + '|' + r.method, true).second) {
      throw Error(ErrorKind::schema_mismatch, "duplicate " + r.method + " row for " + key);
    }
    auto [it, inserted] = index.try_emplace(key, out.size());
    if (inserted) out.push_back({r.system, r.p, r.quantity, {}, {}, {}, {}, {}});
    ComparisonRow& c = out[it->second];
    if (r.method == "bounds") {
      c.lower = r.lower;
      c.upper = r.upper;
    } else if (r.method == "exact") {
      c.exact = r.value;
    } else if (r.method == "mcs") {
      c.mcs = r;
    } else {
      if (c.proposed) throw Error(ErrorKind::schema_mismatch, "two proposed-method rows for " + key);
      c.proposed = r;
    }
  }
  return out;
}

inline const std::vector<std::string>& comparison_columns() {
  static const std::vector<std::string> cols = {
      "system",          "p",           "quantity",     "lower",         "upper",
      "exact",           "proposed",    "proposed_method", "proposed_runtime_s", "proposed_epsilon",
      "proposed_actual_error", "mcs",   "mcs_runtime_s", "mcs_epsilon",  "mcs_actual_error",
      "p_star",          "alpha",       "n_alpha"};
  return cols;
}

/// CSV rendering at `digits` significant digits. An MCS run that saw no
/// failures shows "--" as its actual error.
inline void write_comparison(std::ostream& out, const std::vector<ComparisonRow>& rows, int digits = 6) {
  const auto& cols = comparison_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  using detail::cell;
  using detail::format_number;
  for (const auto& c : rows) {
    out << c.system << ',' << cell(c.p, digits) << ',' << c.quantity << ',' << cell(c.lower, digits)
        << ',' << cell(c.upper, digits) << ',' << cell(c.exact, digits) << ',';
    if (c.proposed) {
      out << format_number(c.proposed->value, digits) << ',' << c.proposed->method << ','
          << format_number(c.proposed->runtime, digits) << ',' << cell(c.proposed->epsilon, digits)
          << ',' << cell(comparison_error(c, *c.proposed), digits) << ',';
    } else {
      out << ",,,,,";
    }
    if (c.mcs) {
      const auto err = comparison_error(c, *c.mcs);
      out << format_number(c.mcs->value, digits) << ',' << format_number(c.mcs->runtime, digits) << ','
          << cell(c.mcs->epsilon, digits) << ','
          << (c.mcs->no_failure ? std::string("--") : cell(err, digits)) << ',';
    } else {
      out << ",,,,";
    }
    const RunReportRow* aux = c.proposed ? &*c.proposed : nullptr;
    if (aux) {
      out << cell(aux->p_star, digits) << ',' << cell(aux->alpha, digits) << ','
          << (aux->n_alpha ? std::to_string(*aux->n_alpha) : "");
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

}  // namespace relfreq
