#include <gtest/gtest.h>

#include <sstream>

#include "relfreq/report.hpp"

using namespace relfreq;

namespace {

RunReportRow row(const std::string& method, double value) {
  RunReportRow r;
  r.system = "S1";
  r.p = 1e-3;
  r.method = method;
  r.quantity = "F_f";
  r.value = value;
  r.runtime = 0.5;
  return r;
}

std::string render(const std::vector<RunReportRow>& rows) {
  std::ostringstream out;
  write_comparison(out, merge_report(rows));
  return out.str();
}

}  // namespace

TEST(Report, ActualErrorFactor) {
  EXPECT_NEAR(*actual_error_factor(1.1, 1.0, 1.2), 0.1, 1e-15);
  EXPECT_NEAR(*actual_error_factor(0.9, 1.0, 1.2), 0.3, 1e-15);
  EXPECT_FALSE(actual_error_factor(1.0, 0.0, 1.0).has_value());
}

TEST(Report, CsvRoundTripIsExact) {
  auto b = row("bounds", 8.0479e-6);
  b.lower = 8.04785e-6;
  b.upper = 8.04807e-6;
  auto a = row("all_terminal", 8.0479612345678901e-6);
  a.epsilon = 0.23;
  a.p_star = 1e-6;
  a.alpha = 2.0012;
  a.n_alpha = 37;
  a.branch = "ALPHA_MIN";
  a.seed = 7;
  a.samples = 123;
  std::ostringstream out;
  write_csv(out, {b, a});
  std::istringstream in(out.str());
  const auto back = read_rows(in);
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[1].value, a.value);
  EXPECT_EQ(back[1].alpha, a.alpha);
  EXPECT_EQ(back[1].n_alpha, a.n_alpha);
  EXPECT_EQ(back[1].seed, a.seed);
  EXPECT_EQ(back[0].lower, b.lower);
  std::ostringstream again;
  write_csv(again, back);
  EXPECT_EQ(again.str(), out.str());
}

TEST(Report, JsonRoundTrip) {
  auto a = row("mcs", 0.0);
  a.no_failure = true;
  nlohmann::json arr = nlohmann::json::array({to_json(a)});
  std::istringstream in(arr.dump());
  const auto back = read_rows(in);
  ASSERT_EQ(back.size(), 1U);
  EXPECT_TRUE(back[0].no_failure);
  EXPECT_EQ(back[0].method, "mcs");
}

TEST(Report, MergedTable) {
  auto b = row("bounds", 0.0);
  b.lower = 1.0;
  b.upper = 1.2;
  auto prop = row("polyN", 1.1);
  prop.epsilon = 0.23;
  auto mcs = row("mcs", 0.0);
  mcs.no_failure = true;
  const auto merged = merge_report({b, prop, mcs});
  ASSERT_EQ(merged.size(), 1U);
  EXPECT_NEAR(*comparison_error(merged[0], *merged[0].proposed), 0.1, 1e-15);
  EXPECT_FALSE(comparison_error(merged[0], *merged[0].mcs).has_value());
  const std::string text = render({b, prop, mcs});
  EXPECT_NE(text.find(",--,"), std::string::npos);
}

TEST(Report, SweepShape) {
  std::vector<RunReportRow> rows;
  for (int k = 0; k < 10; ++k) {
    for (const char* m : {"bounds", "all_terminal", "mcs"}) {
      auto r = row(m, 1.0);
      r.p = std::pow(10.0, -2.0 - 0.2 * k);
      if (std::string(m) == "bounds") {
        r.lower = 1.0;
        r.upper = 1.0;
      }
      rows.push_back(r);
    }
  }
  EXPECT_EQ(merge_report(rows).size(), 10U);
}

TEST(Report, EmptyInput) {
  std::istringstream in("");
  EXPECT_TRUE(read_rows(in).empty());
  const std::string text = render({});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
}

TEST(Report, SchemaMismatch) {
  std::istringstream bad_header("system,p,value\nS1,0.1,1\n");
  try {
    read_rows(bad_header);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema_mismatch);
  }
  auto dup = row("polyN", 1.0);
  try {
    merge_report({dup, dup});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schema_mismatch);
  }
  auto unknown = row("magic", 1.0);
  EXPECT_THROW(merge_report({unknown}), Error);
}
