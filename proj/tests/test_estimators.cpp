#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "helpers.hpp"
#include "splitplot/estimators.hpp"
#include "splitplot/numeric.hpp"
#include "splitplot/oracle.hpp"
#include "splitplot/simulation.hpp"

using namespace splitplot;

namespace {

ObservedDataset observed_from(const PotentialOutcomeTable& table, uint64_t seed, uint64_t stream) {
  return observe(table, draw_assignment(table.design(), seed, stream));
}

}  // namespace

TEST_CASE("observed means on constant data follow the size-weighted formula") {
  const SplitPlotDesign d = school_design();
  const double c = 7.5;
  const ObservedDataset data = observed_from(testing::constant_table(d, c), 17, 0);

  for (int w = 0; w < d.num_whole_plots(); ++w) {
    CHECK(ybar_w_obs(data, w, 0) == doctest::Approx(c).epsilon(1e-15));
  }
  // On unbalanced designs the combination mean is c scaled by the realized
  // share of units, not c itself.
  const double mbar = mean_whole_plot_size(d);
  for (int z1 = 0; z1 < 2; ++z1) {
    const auto& plots = data.plots_assigned(z1);
    double size_sum = 0.0;
    for (int w : plots) size_sum += d.whole_plot_sizes[w];
    const double expected = c * size_sum / (plots.size() * mbar);
    CHECK(ybar_obs(data, z1, 0) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("plot mean with a single observed unit returns that unit's outcome") {
  const SplitPlotDesign d = oracle_design_b();
  Pcg32 rng(33, 0);
  const auto table = testing::random_integer_table(d, rng);
  const Assignment a = draw_assignment(d, 3, 1);
  const ObservedDataset data = observe(table, a);
  for (int w = 0; w < d.num_whole_plots(); ++w) {
    for (int z2 = 0; z2 < 2; ++z2) {
      if (d.r2[w][z2] == 1) {
        CHECK(ybar_w_obs(data, w, z2) == data.ys(w, z2)[0]);
      }
    }
  }
}

TEST_CASE("combination mean equals the plain average of adjusted plot means") {
  Pcg32 rng(34, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const SplitPlotDesign d = testing::random_design(rng);
    const auto table = testing::random_integer_table(d, rng);
    const ObservedDataset data = observed_from(table, 55, rep);
    const double mbar = mean_whole_plot_size(d);
    for (int z1 = 0; z1 < 2; ++z1) {
      for (int z2 = 0; z2 < 2; ++z2) {
        const auto& plots = data.plots_assigned(z1);
        CompensatedSum s;
        for (int w : plots) s.add(d.whole_plot_sizes[w] / mbar * ybar_w_obs(data, w, z2));
        CHECK(ybar_obs(data, z1, z2) ==
              doctest::Approx(s.value() / plots.size()).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("requesting an unassigned combination fails") {
  SplitPlotDesign d = testing::two_by_two({2, 2, 2}, {3, 0}, {{1, 1}, {1, 1}, {1, 1}});
  const auto table = testing::constant_table(d, 1.0);
  const ObservedDataset data = observed_from(table, 2, 0);
  CHECK_THROWS_AS(ybar_obs(data, 1, 0), std::domain_error);
}

TEST_CASE("baseline variance estimate: zero on constant data, nonnegative always") {
  const SplitPlotDesign balanced =
      testing::two_by_two({4, 4, 4, 4}, {2, 2}, {{2, 2}, {2, 2}, {2, 2}, {2, 2}});
  const auto g = interaction_contrast(balanced.structure);
  const ObservedDataset flat = observed_from(testing::constant_table(balanced, 3.0), 4, 0);
  CHECK(v_hat(flat, g) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(s_hat(flat, 0, 0, 0) == doctest::Approx(0.0).epsilon(1e-15));

  Pcg32 rng(35, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const SplitPlotDesign d = testing::random_design(rng);
    if (d.r1[0] < 2 || d.r1[1] < 2) continue;
    const auto table = testing::random_integer_table(d, rng);
    const ObservedDataset data = observed_from(table, 70, rep);
    const auto gd = interaction_contrast(d.structure);
    CHECK(v_hat(data, gd) >= -1e-12);
    CHECK(s_hat(data, 0, 0, 0) >= -1e-12);
    CHECK(s_hat(data, 1, 1, 1) >= -1e-12);
  }
}

TEST_CASE("variance estimation requires whole-plot replication of at least two") {
  // r1 = (1, 3): the first combination is observed on a single plot.
  SplitPlotDesign d =
      testing::two_by_two({2, 2, 2, 2}, {1, 3}, {{1, 1}, {1, 1}, {1, 1}, {1, 1}});
  REQUIRE(validate_design(d).empty());
  const auto table = testing::constant_table(d, 1.0);
  const ObservedDataset data = observed_from(table, 6, 0);
  const auto g = interaction_contrast(d.structure);
  CHECK_THROWS_AS(v_hat(data, g), std::domain_error);
  CHECK_THROWS_AS(s_hat(data, 0, 0, 1), std::domain_error);
  // The point estimate itself is fine.
  CHECK(point_estimate(data, g) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("plot-level observed contrast uses the plot's assigned combination") {
  const SplitPlotDesign d = oracle_design_b();
  Pcg32 rng(36, 0);
  const auto table = testing::random_integer_table(d, rng);
  const ObservedDataset data = observed_from(table, 8, 2);
  const auto g = interaction_contrast(d.structure);
  for (int w = 0; w < d.num_whole_plots(); ++w) {
    const int z1 = data.plot_z1(w);
    CompensatedSum s;
    for (int z2 = 0; z2 < 2; ++z2) s.add(g.g(z1, z2) * ybar_w_obs(data, w, z2));
    CHECK(g_w_obs(data, g, w) == doctest::Approx(s.value()).epsilon(1e-12));
  }
}

TEST_CASE("pair products use the replication-dependent divisor") {
  const SplitPlotDesign d = oracle_design_b();
  Pcg32 rng(37, 0);
  const auto table = testing::random_integer_table(d, rng);
  const ObservedDataset data = observed_from(table, 9, 4);
  const auto g = interaction_contrast(d.structure);
  const double w_count = 4.0;
  for (int w = 0; w < 4; ++w) {
    for (int ws = 0; ws < 4; ++ws) {
      if (w == ws) continue;
      const double gw = g_w_obs(data, g, w);
      const double gws = g_w_obs(data, g, ws);
      const bool same = data.plot_z1(w) == data.plot_z1(ws);
      const double divisor = same ? 2.0 * (2.0 - 1.0) : 2.0 * 2.0;
      CHECK(h_ww(data, g, w, ws) ==
            doctest::Approx(w_count * (w_count - 1.0) * gw * gws / divisor).epsilon(1e-12));
      CHECK(h_ww(data, g, w, ws) == doctest::Approx(h_ww(data, g, ws, w)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(h_ww(data, g, 1, 1), std::domain_error);
}

TEST_CASE("balanced designs cancel the correction exactly") {
  const SplitPlotDesign balanced =
      testing::two_by_two({4, 4, 4, 4}, {2, 2}, {{2, 2}, {2, 2}, {2, 2}, {2, 2}});
  const BMatrix b = b_balanced(4, 4);
  const auto g = interaction_contrast(balanced.structure);
  Pcg32 rng(38, 0);
  for (int rep = 0; rep < 10; ++rep) {
    const auto table = testing::random_integer_table(balanced, rng);
    const ObservedDataset data = observed_from(table, 80, rep);
    // Coefficients b + M^2/(W-1) vanish entrywise, so both estimates agree.
    CHECK(v_tilde(data, g, b) == doctest::Approx(v_hat(data, g)).epsilon(1e-12));
  }
}

TEST_CASE("corrected estimate rejects a diagonal mismatch") {
  const SplitPlotDesign d = oracle_design_b();
  const auto table = testing::constant_table(d, 2.0);
  const ObservedDataset data = observed_from(table, 10, 0);
  const auto g = interaction_contrast(d.structure);
  const BMatrix wrong = b_balanced(5, 4);  // diagonal 25, sizes are (2,2,3,3)
  CHECK_THROWS_AS(v_tilde(data, g, wrong), std::domain_error);
}

TEST_CASE("analyze bundles estimates and diagnostics") {
  const SplitPlotDesign d = oracle_design_b();
  Pcg32 rng(39, 0);
  const auto table = testing::random_integer_table(d, rng);
  const ObservedDataset data = observed_from(table, 11, 1);
  const auto g = interaction_contrast(d.structure);
  const BMatrix b = minimax_b(d.whole_plot_sizes);

  const EstimateReport plain = analyze(data, g);
  CHECK_FALSE(plain.v_tilde.has_value());
  CHECK(plain.cell_means.size() == 4);
  CHECK(plain.tau_hat == doctest::Approx(point_estimate(data, g)).epsilon(1e-15));

  const EstimateReport full = analyze(data, g, &b, true);
  REQUIRE(full.v_tilde.has_value());
  CHECK(*full.v_tilde == doctest::Approx(v_tilde(data, g, b)).epsilon(1e-15));
  REQUIRE(full.v_tilde_clamped.has_value());
  CHECK(*full.v_tilde_clamped >= 0.0);
}
