#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "relfreq/relfreq.hpp"

using namespace relfreq;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitPlan = 3;
constexpr int kExitBudget = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::plan_invalid: return kExitPlan;
    case ErrorKind::cap_exceeded: return kExitBudget;
    default: return kExitInput;
  }
}

struct EstimateFlags {
  std::vector<std::string> systems;
  std::string method;
  std::optional<double> epsilon;
  bool epsilon_auto = false;
  double delta = 1e-2;
  std::uint64_t seed = 1;
  double threshold_exponent = 4.0;
  double rgc_c = 2.0;
  double rgc_budget = 1e7;
  std::string format = "csv";
  int jobs = 1;
  std::string quantity;
  bool with_bounds = false;
  std::optional<std::uint64_t> mcs_samples;
  std::optional<std::uint64_t> mcs_batches;
  std::string cutsets_out;
  double sample_budget = 1e6;
  int bruteforce_cap = 25;
  bool per_trial = false;
};

RunReportRow base_row(const std::string& id, const ReliabilitySystem& sys, const std::string& method,
                      const std::string& quantity) {
  RunReportRow row;
  row.system = id;
  row.p = uniform_unavailability(sys);
  row.method = method;
  row.quantity = quantity;
  return row;
}

void write_cutsets(const std::string& path, const CutsetCollection& cutsets) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  write_jsonl(out, cutsets);
}

CutsetCollection all_cutsets(const ReliabilitySystem& sys, const EstimateFlags& f) {
  return enumerate_bruteforce(sys, {.max_weight = std::nullopt, .cap = f.bruteforce_cap});
}

void attach_bounds(std::vector<RunReportRow>& rows, const ReliabilitySystem& sys, const EstimateFlags& f) {
  const auto b = first_order_bounds(all_cutsets(sys, f), sys);
  for (auto& r : rows) {
    const auto& fb = r.quantity == "F_f" ? b.F_f : b.P_f;
    r.lower = fb.lower;
    r.upper = fb.upper;
    if (!r.no_failure) r.actual_error = actual_error_factor(r.value, fb.lower, fb.upper);
  }
}

std::vector<RunReportRow> run_one(const std::string& path, const EstimateFlags& f, const std::string& cutsets_out) {
  Diagnostics diagnostics;
  const ReliabilitySystem sys = load_system_file(path, &diagnostics);
  const std::string id = std::filesystem::path(path).stem().string();
  for (const auto& d : diagnostics) std::cerr << id << ": " << d << '\n';
  const bool want_f = f.quantity != "P_f";
  const bool want_p = f.quantity == "P_f" || f.quantity == "both";
  ApproxOptions options;
  options.mode = f.per_trial ? SamplingMode::per_trial : SamplingMode::grouped;
  options.bruteforce_cap = f.bruteforce_cap;
  options.threshold_exponent = f.threshold_exponent;
  options.rgc_c = f.rgc_c;
  options.rgc_budget = static_cast<std::uint64_t>(f.rgc_budget);
  auto rng = make_stream(f.seed);
  std::vector<RunReportRow> rows;

  auto stamp = [&](RunReportRow& r, const Estimate& e) {
    r.value = e.value;
    r.runtime = e.elapsed;
    r.epsilon = e.epsilon;
    r.samples = e.samples;
    r.seed = f.seed;
  };

  if (f.method == "exact") {
    const auto start = std::chrono::steady_clock::now();
    const auto t = exact_by_states(sys, f.bruteforce_cap);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (want_p) {
      auto r = base_row(id, sys, "exact", "P_f");
      r.value = t.P_f;
      r.runtime = elapsed;
      rows.push_back(r);
    }
    if (want_f) {
      auto r = base_row(id, sys, "exact", "F_f");
      r.value = t.F_f;
      r.runtime = elapsed;
      rows.push_back(r);
    }
  } else if (f.method == "bounds") {
    const auto start = std::chrono::steady_clock::now();
    const auto cutsets = all_cutsets(sys, f);
    const auto b = first_order_bounds(cutsets, sys);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_cutsets(cutsets_out, cutsets);
    auto emit = [&](const std::string& q, const FirstOrderBounds& fb) {
      auto r = base_row(id, sys, "bounds", q);
      r.value = fb.truncated.value_or(0.5 * (fb.lower + fb.upper));
      r.lower = fb.lower;
      r.upper = fb.upper;
      r.runtime = elapsed;
      r.p_star = cutsets.p_star;
      rows.push_back(r);
    };
    if (want_p) emit("P_f", b.P_f);
    if (want_f) emit("F_f", b.F_f);
  } else if (f.method == "polyN") {
    const auto cutsets = all_cutsets(sys, f);
    write_cutsets(cutsets_out, cutsets);
    const double eps = f.epsilon_auto ? auto_epsilon_polyN(sys, cutsets, f.sample_budget) : *f.epsilon;
    const auto res = approx_ff_polyN_detailed(sys, cutsets, eps, f.delta, rng, options);
    if (want_p) {
      auto r = base_row(id, sys, "polyN", "P_f");
      auto pf_rng = make_stream(f.seed, 5);
      stamp(r, approx_pf_polyN(sys, eps, f.delta, pf_rng, options));
      r.p_star = cutsets.p_star;
      rows.push_back(r);
    }
    if (want_f) {
      auto r = base_row(id, sys, "polyN", "F_f");
      stamp(r, res.F_f);
      r.samples = res.P_f.samples + res.P.samples;
      r.p_star = cutsets.p_star;
      rows.push_back(r);
    }
  } else if (f.method == "all_terminal") {
    if (want_p) throw Error(ErrorKind::invalid_argument, "all_terminal estimates F_f only");
    const double eps = f.epsilon_auto
                           ? auto_epsilon_all_terminal(sys, f.delta, f.sample_budget, f.threshold_exponent,
                                                       f.bruteforce_cap)
                           : *f.epsilon;
    const auto res = approx_ff_all_terminal_detailed(sys, eps, f.delta, rng, options);
    auto r = base_row(id, sys, "all_terminal", "F_f");
    stamp(r, res.F_f);
    r.p_star = res.plan.p_star;
    r.branch = to_string(res.plan.branch);
    if (res.plan.branch == Branch::alpha_min) {
      r.alpha = res.plan.alpha;
      r.n_alpha = res.cutsets->count();
      r.samples = res.P_f->samples + res.P->samples;
      write_cutsets(cutsets_out, *res.cutsets);
    } else {
      r.no_failure = res.mcs->no_failure_observed();
    }
    for (const auto& note : res.F_f.notes) std::cerr << id << ": " << note << '\n';
    rows.push_back(r);
  } else if (f.method == "mcs") {
    McsParams params;
    std::optional<double> eps;
    if (f.mcs_samples) {
      params.S = *f.mcs_samples;
      params.T = f.mcs_batches.value_or(batches_for(f.delta));
    } else if (f.epsilon_auto) {
      params.S = static_cast<std::uint64_t>(f.sample_budget);
      params.T = f.mcs_batches.value_or(batches_for(f.delta));
    } else {
      const int s_star = min_failure_cardinality(sys);
      const double p_star = sys.is_all_terminal() ? min_cut(sys).prob : all_cutsets(sys, f).p_star;
      const auto st = system_stats(sys, s_star);
      params = mcs_multiplicative_params(sys, *f.epsilon, f.delta, p_star, st.rho);
      eps = f.epsilon;
    }
    const auto res = mcs_run(sys, params.S, params.T, rng, options.mode);
    auto emit = [&](const std::string& q, const Estimate& e) {
      auto r = base_row(id, sys, "mcs", q);
      stamp(r, e);
      r.epsilon = eps;
      r.no_failure = res.no_failure_observed();
      rows.push_back(r);
    };
    if (want_p) emit("P_f", res.P_f);
    if (want_f) emit("F_f", res.F_f);
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown method " + f.method);
  }
  if (f.with_bounds && f.method != "bounds") attach_bounds(rows, sys, f);
  return rows;
}

int cmd_estimate(EstimateFlags& f) {
  if (f.epsilon_auto == f.epsilon.has_value() && f.method != "exact" && f.method != "bounds" &&
      !(f.method == "mcs" && f.mcs_samples)) {
    throw Error(ErrorKind::invalid_argument, "give exactly one of --epsilon and --epsilon-auto");
  }
  if (f.quantity.empty()) f.quantity = (f.method == "exact" || f.method == "bounds") ? "both" : "F_f";
  if (!f.cutsets_out.empty() && f.systems.size() > 1) {
    throw Error(ErrorKind::invalid_argument, "--cutsets-out takes a single system");
  }

  std::vector<std::vector<RunReportRow>> results(f.systems.size());
  std::vector<std::optional<Error>> errors(f.systems.size());
  std::size_t next = 0;
  std::mutex lock;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> guard(lock);
        if (next == f.systems.size()) return;
        i = next++;
      }
      try {
        results[i] = run_one(f.systems[i], f, f.cutsets_out);
      } catch (const Error& e) {
        errors[i] = e;
      }
    }
  };
  const int jobs = std::clamp<int>(f.jobs, 1, static_cast<int>(f.systems.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      std::cerr << "error: " << f.systems[i] << ": " << errors[i]->what() << '\n';
      return exit_code_for(errors[i]->kind());
    }
  }
  std::vector<RunReportRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  if (f.format == "json") {
    auto arr = nlohmann::json::array();
    for (const auto& r : rows) arr.push_back(to_json(r));
    std::cout << arr.dump(2) << '\n';
  } else {
    write_csv(std::cout, rows);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path, int digits) {
  std::vector<RunReportRow> rows;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot read " + path);
    auto part = read_rows(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto merged = merge_report(rows);
  if (out_path.empty() || out_path == "-") {
    write_comparison(std::cout, merged, digits);
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + out_path);
    write_comparison(out, merged, digits);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Failure probability and failure frequency of k-terminal reliability systems"};
  app.require_subcommand(1);

  int rows = 0;
  int cols = 0;
  double grid_p = 0.0;
  double grid_mu = 0.0;
  std::string grid_out;
  auto* gen = app.add_subcommand("gen-grid", "Write a rows x cols all-terminal grid network");
  gen->add_option("rows", rows)->required();
  gen->add_option("cols", cols)->required();
  gen->add_option("p", grid_p, "Unavailability of every component")->required();
  gen->add_option("mu", grid_mu, "Repair rate of every component")->required();
  gen->add_option("-o,--out", grid_out, "Output path (stdout when omitted)");

  EstimateFlags f;
  auto* est = app.add_subcommand("estimate", "Run an estimator or exact method and print report rows");
  est->add_option("systems", f.systems, "Network documents")->required()->check(CLI::ExistingFile);
  est->add_option("-m,--method", f.method)
      ->required()
      ->check(CLI::IsMember({"polyN", "all_terminal", "mcs", "bounds", "exact"}));
  auto* eps_opt = est->add_option("--epsilon", f.epsilon, "Multiplicative error factor");
  est->add_flag("--epsilon-auto", f.epsilon_auto, "Pick the smallest epsilon that fits --sample-budget")
      ->excludes(eps_opt);
  est->add_option("--delta", f.delta, "Error probability")->capture_default_str();
  est->add_option("--seed", f.seed)->capture_default_str();
  est->add_option("--threshold-exponent", f.threshold_exponent, "Branch threshold is n^-x")
      ->capture_default_str();
  est->add_option("--rgc-c", f.rgc_c, "Contraction completeness exponent")->capture_default_str();
  est->add_option("--rgc-budget", f.rgc_budget, "Maximum contraction runs")->capture_default_str();
  est->add_option("--format", f.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  est->add_option("--jobs", f.jobs, "Systems processed in parallel")->capture_default_str();
  est->add_option("--quantity", f.quantity)->check(CLI::IsMember({"F_f", "P_f", "both"}));
  est->add_flag("--with-bounds", f.with_bounds, "Attach first-order bounds and the actual error factor");
  est->add_option("--mcs-samples", f.mcs_samples, "MCS trials per batch");
  est->add_option("--mcs-batches", f.mcs_batches, "MCS batch count");
  est->add_option("--cutsets-out", f.cutsets_out, "Write the cutsets used as JSON lines");
  est->add_option("--sample-budget", f.sample_budget, "Trials per batch targeted by --epsilon-auto")
      ->capture_default_str();
  est->add_option("--bruteforce-cap", f.bruteforce_cap, "Largest m for exhaustive enumeration")
      ->capture_default_str();
  est->add_flag("--per-trial", f.per_trial, "Simulate every trial instead of grouped sampling");

  std::vector<std::string> report_inputs;
  std::string report_out;
  int digits = 6;
  auto* rep = app.add_subcommand("report", "Merge report rows into a comparison table");
  rep->add_option("rows", report_inputs, "CSV or JSON row files")->check(CLI::ExistingFile);
  rep->add_option("-o,--out", report_out, "Output path (stdout when omitted)");
  rep->add_option("--digits", digits, "Significant digits shown")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*gen) {
      const auto doc = grid_document(rows, cols, grid_p, grid_mu);
      load_system(doc);
      if (grid_out.empty() || grid_out == "-") {
        std::cout << doc.dump(2) << '\n';
      } else {
        save_json(doc, grid_out);
      }
      return 0;
    }
    if (*est) return cmd_estimate(f);
    return cmd_report(report_inputs, report_out, digits);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
}
