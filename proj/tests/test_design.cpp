#include <doctest.h>

#include <stdexcept>

#include <algorithm>

#include "helpers.hpp"
#include "splitplot/design.hpp"
#include "splitplot/simulation.hpp"

using namespace splitplot;
using testing::two_by_two;

namespace {

bool mentions(const std::vector<std::string>& violations, const std::string& needle) {
  return std::any_of(violations.begin(), violations.end(), [&](const std::string& v) {
    return v.find(needle) != std::string::npos;
  });
}

}  // namespace

TEST_CASE("school design validates") {
  const SplitPlotDesign d = school_design();
  CHECK(validate_design(d).empty());
  CHECK(d.num_units() == 40);
  CHECK(d.num_whole_plots() == 4);
}

TEST_CASE("whole-plot replication must sum to W") {
  SplitPlotDesign d = school_design();
  d.r1 = {2, 1};  // sums to 3, W = 4
  const auto violations = validate_design(d);
  CHECK(!violations.empty());
  CHECK(mentions(violations, "whole-plot replication sum"));
}

TEST_CASE("sub-plot replication must sum to the plot size") {
  SplitPlotDesign d = two_by_two({8, 8, 5, 12}, {2, 2}, {{4, 4}, {4, 4}, {2, 2}, {6, 6}});
  const auto violations = validate_design(d);
  CHECK(mentions(violations, "sub-plot replication sum"));
}

TEST_CASE("degenerate level sets and plot sizes are reported") {
  SplitPlotDesign d = two_by_two({8, 1}, {1, 1}, {{4, 4}, {1, 0}});
  d.structure.z2_levels = {{0}};
  d.r2 = {{8}, {1}};
  const auto violations = validate_design(d);
  CHECK(mentions(violations, "z2 level set"));
  CHECK(mentions(violations, "at least 2"));
}

TEST_CASE("is_balanced") {
  CHECK_FALSE(is_balanced(school_design()));

  const SplitPlotDesign equal =
      two_by_two({10, 10, 10, 10}, {2, 2}, {{5, 5}, {5, 5}, {5, 5}, {5, 5}});
  REQUIRE(validate_design(equal).empty());
  CHECK(is_balanced(equal));

  // Same sizes but one plot splits its units differently.
  const SplitPlotDesign skewed =
      two_by_two({10, 10, 10, 10}, {2, 2}, {{4, 6}, {5, 5}, {5, 5}, {5, 5}});
  REQUIRE(validate_design(skewed).empty());
  CHECK_FALSE(is_balanced(skewed));
}

TEST_CASE("balanced implies valid") {
  Pcg32 rng(11, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const SplitPlotDesign d = testing::random_design(rng);
    if (is_balanced(d)) CHECK(validate_design(d).empty());
  }
}

TEST_CASE("mean whole-plot size") {
  CHECK(mean_whole_plot_size(school_design()) == doctest::Approx(10.0).epsilon(1e-15));

  const SplitPlotDesign equal =
      two_by_two({7, 7, 7, 7}, {2, 2}, {{3, 4}, {3, 4}, {3, 4}, {3, 4}});
  CHECK(mean_whole_plot_size(equal) == doctest::Approx(7.0).epsilon(1e-15));

  const SplitPlotDesign d = two_by_two({2, 2, 3, 3}, {2, 2}, {{1, 1}, {1, 1}, {1, 2}, {1, 2}});
  CHECK(mean_whole_plot_size(d) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("mean size times W recovers N exactly") {
  Pcg32 rng(12, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const SplitPlotDesign d = testing::random_design(rng);
    int n = 0;
    for (int m : d.whole_plot_sizes) n += m;
    CHECK(n == d.num_units());
    CHECK(mean_whole_plot_size(d) * d.num_whole_plots() == static_cast<double>(n));
  }
}

TEST_CASE("contrast coefficients must sum to zero and not all vanish") {
  const FactorialStructure st = school_design().structure;
  CHECK_THROWS_AS(ContrastSpec(st, {0, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(ContrastSpec(st, {0.5, 0.25, -0.25, -0.25}), std::invalid_argument);
  const ContrastSpec ok(st, {0.25, -0.25, -0.25, 0.25});
  CHECK(ok.g(0, 0) == 0.25);
  CHECK(ok.g(1, 0) == -0.25);
}

TEST_CASE("level keys round-trip") {
  CHECK(level_key({0, 1}) == "0-1");
  CHECK(level_key({3}) == "3");
  CHECK(parse_level_key("0-1") == std::vector<int>{0, 1});
  CHECK(parse_level_key("7") == std::vector<int>{7});
  CHECK_THROWS_AS(parse_level_key("a-b"), std::invalid_argument);
  CHECK_THROWS_AS(parse_level_key(""), std::invalid_argument);
}
