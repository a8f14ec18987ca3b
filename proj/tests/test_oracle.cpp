#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "helpers.hpp"
#include "splitplot/estimators.hpp"
#include "splitplot/oracle.hpp"

using namespace splitplot;

TEST_CASE("expectation of the unit statistic is one") {
  const OracleFixture fixture = random_integer_fixture(oracle_design_a(), 1, 0);
  const double one = exact_expectation(fixture, [](const ObservedDataset&) { return 1.0; });
  CHECK(one == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("point estimator is unbiased on both reference designs") {
  for (const auto& design : {oracle_design_a(), oracle_design_b()}) {
    for (uint64_t s = 0; s < 5; ++s) {
      const OracleFixture fixture = random_integer_fixture(design, 7 + s, s);
      CHECK(check_prop1(fixture).pass);
    }
  }
}

TEST_CASE("constant tables make every check trivially pass") {
  const SplitPlotDesign design = oracle_design_b();
  OracleFixture fixture{testing::constant_table(design, 3.0),
                        interaction_contrast(design.structure),
                        minimax_b(design.whole_plot_sizes)};
  for (const auto& check : run_all_checks(fixture)) {
    CHECK(check.pass);
  }
  CHECK(exact_variance(fixture) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("all identities hold on random integer tables") {
  for (const auto& design : {oracle_design_a(), oracle_design_b()}) {
    for (uint64_t s = 0; s < 4; ++s) {
      const OracleFixture fixture = random_integer_fixture(design, 101, s);
      for (const auto& check : run_all_checks(fixture)) {
        INFO(check.name, " enum=", check.enumerated, " formula=", check.formula);
        CHECK(check.pass);
      }
    }
  }
}

TEST_CASE("expected s_hat decomposes into within and between parts") {
  const OracleFixture fixture = random_integer_fixture(oracle_design_b(), 55, 3);
  const auto& table = fixture.table;
  const auto& d = table.design();
  const double mbar = mean_whole_plot_size(d);
  for (int z1 = 0; z1 < 2; ++z1) {
    for (int z2 = 0; z2 < 2; ++z2) {
      for (int z2s = 0; z2s < 2; ++z2s) {
        const double enumerated = exact_expectation(
            fixture,
            [&](const ObservedDataset& data) { return s_hat(data, z1, z2, z2s); });
        double within = 0.0;
        for (int w = 0; w < d.num_whole_plots(); ++w) {
          const double m = d.whole_plot_sizes[w];
          const double r = d.r2[w][z2];
          const double same = (z2 == z2s) ? m : 0.0;
          within += s_within(table, w, z1, z2, z1, z2s) * (same - r) /
                    (d.num_whole_plots() * m * r);
        }
        const double formula = within + s_between(table, z1, z2, z1, z2s) / mbar;
        CHECK(enumerated == doctest::Approx(formula).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("revealed combination means agree between raw and adjusted forms") {
  const OracleFixture fixture = random_integer_fixture(oracle_design_b(), 77, 1);
  AssignmentEnumerator en(fixture.table.design());
  const double mbar = mean_whole_plot_size(fixture.table.design());
  while (auto a = en.next()) {
    const ObservedDataset data = observe(fixture.table, *a);
    for (int z1 = 0; z1 < 2; ++z1) {
      for (int z2 = 0; z2 < 2; ++z2) {
        const auto& plots = data.plots_assigned(z1);
        double u = 0.0;
        for (int w : plots) {
          u += fixture.table.design().whole_plot_sizes[w] / mbar * ybar_w_obs(data, w, z2);
        }
        u /= static_cast<double>(plots.size());
        CHECK(ybar_obs(data, z1, z2) == doctest::Approx(u).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("zero plot contrast forces a zero expected pair product") {
  // Plot 0's outcomes are symmetric under the interaction contrast, so its
  // plot-level contrast vanishes whatever is assigned.
  const SplitPlotDesign design = oracle_design_a();
  std::vector<int> unit_plot = {0, 0, 1, 1, 2, 2, 3, 3};
  std::vector<std::vector<double>> y(8, std::vector<double>(4, 0.0));
  Pcg32 rng(5, 9);
  for (int i = 2; i < 8; ++i) {
    for (int c = 0; c < 4; ++c) y[i][c] = static_cast<double>(rng.bounded(10));
  }
  // Units 0 and 1: identical constant rows make tau_0 = 0.
  for (int c = 0; c < 4; ++c) {
    y[0][c] = 3.0;
    y[1][c] = 5.0;
  }
  OracleFixture fixture{PotentialOutcomeTable(design, unit_plot, y),
                        interaction_contrast(design.structure), std::nullopt};
  const auto tau_w = whole_plot_contrasts(fixture.table, fixture.contrast);
  REQUIRE(tau_w[0] == doctest::Approx(0.0).epsilon(1e-15));
  for (int ws = 1; ws < 4; ++ws) {
    const auto check = check_prop2(fixture, 0, ws);
    CHECK(check.pass);
    CHECK(std::abs(check.formula) < 1e-15);
    CHECK(std::abs(check.enumerated) < 1e-9);
  }
}

TEST_CASE("between-plot-additive tables give the corrected estimator zero bias") {
  const SplitPlotDesign design = oracle_design_b();
  Pcg32 rng(6, 2);
  std::vector<std::vector<double>> noise(design.num_units(), std::vector<double>(4));
  for (auto& row : noise) {
    for (auto& v : row) v = static_cast<double>(rng.bounded(7));
  }
  OracleFixture fixture{
      make_between_wp_additive(design, {4, 1, 0, 1}, {0, 2, 5, 1}, &noise),
      interaction_contrast(design.structure),
      minimax_b(design.whole_plot_sizes),
  };
  const double var = exact_variance(fixture);
  const double ev_tilde = exact_expectation(fixture, [&](const ObservedDataset& d) {
    return v_tilde(d, fixture.contrast, *fixture.b);
  });
  CHECK(std::abs(ev_tilde - var) < 1e-10);

  // The uncorrected estimator keeps its heterogeneity bias.
  const double ev_hat = exact_expectation(
      fixture, [&](const ObservedDataset& d) { return v_hat(d, fixture.contrast); });
  const double bias = delta(fixture.table, fixture.contrast);
  CHECK(bias > 0.0);
  CHECK(ev_hat - var == doctest::Approx(bias).epsilon(1e-9));
}

TEST_CASE("enumeration guard propagates") {
  const OracleFixture fixture = random_integer_fixture(oracle_design_b(), 1, 0);
  CHECK_THROWS_AS(exact_expectation(fixture, [](const ObservedDataset&) { return 0.0; }, 10.0),
                  std::domain_error);
}
