// Acceptance suite: runs every release criterion at its pinned tolerance and
// prints one pass/fail line per criterion. Exits nonzero if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "splitplot/bmatrix.hpp"
#include "splitplot/estimators.hpp"
#include "splitplot/io.hpp"
#include "splitplot/numeric.hpp"
#include "splitplot/oracle.hpp"
#include "splitplot/randomize.hpp"
#include "splitplot/simulation.hpp"

using namespace splitplot;

namespace {

struct Criterion {
  int index;
  std::string label;
  bool pass;
  std::string detail;
  double seconds;
};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// --- criterion 1: enumerated expectations match the closed forms ----------

Criterion criterion1() {
  const double t0 = now_seconds();
  double worst_margin = 0.0;  // error over tolerance; below 1 passes
  bool pass = true;
  int fixtures = 0;
  for (const auto& design : {oracle_design_a(), oracle_design_b()}) {
    for (uint64_t s = 0; s < 20; ++s) {
      const OracleFixture fixture = random_integer_fixture(design, 12345, s);
      for (const auto& check : run_all_checks(fixture)) {
        pass = pass && check.pass;
        const double scale = std::max(std::abs(check.enumerated), std::abs(check.formula));
        worst_margin =
            std::max(worst_margin, check.abs_err / std::max(1e-12, 1e-9 * scale));
      }
      ++fixtures;
    }
  }
  const double dt = now_seconds() - t0;
  pass = pass && dt < 10.0;
  return {1, "oracle exactness (96- and 216-assignment designs, 20 tables each)", pass,
          std::to_string(fixtures) + " fixtures, worst error at " + fmt(100.0 * worst_margin) +
              "% of the 1e-9 tolerance, " + fmt(dt) + " s (budget 10 s)",
          dt};
}

// --- criterion 2: zero bias under between-plot additivity ------------------

Criterion criterion2() {
  const double t0 = now_seconds();
  const SplitPlotDesign design = oracle_design_b();
  const ContrastSpec g = interaction_contrast(design.structure);
  const BMatrix b = minimax_b(design.whole_plot_sizes);
  bool pass = true;
  std::string detail;
  Pcg32 rng(777, 0);
  double worst_tilde = 0.0, worst_hat = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::vector<double>> noise(design.num_units(), std::vector<double>(4));
    for (auto& row : noise) {
      for (auto& v : row) v = static_cast<double>(rng.bounded(9));
    }
    const std::vector<double> base = {4.0 + rng.bounded(3), 1.0, 0.0, 2.0};
    const std::vector<double> shifts = {0.0, static_cast<double>(rng.bounded(4)), 2.0, 5.0};
    OracleFixture fixture{make_between_wp_additive(design, base, shifts, &noise), g, b};

    const double var = exact_variance(fixture);
    const double ev_tilde = exact_expectation(fixture, [&](const ObservedDataset& d) {
      return v_tilde(d, g, b);
    });
    const double ev_hat = exact_expectation(fixture, [&](const ObservedDataset& d) {
      return v_hat(d, g);
    });
    worst_tilde = std::max(worst_tilde, std::abs(ev_tilde - var));
    pass = pass && std::abs(ev_tilde - var) <= 1e-10;

    // Remark-style closed form: with equal plot contrasts tau, the bias is
    // tau^2 sum (M_w - Mbar)^2 / (W (W-1) Mbar^2) = tau^2 / 75 here.
    const double tau = finite_population_contrast(fixture.table, g);
    const double expected_bias = tau * tau / 75.0;
    const double observed_bias = ev_hat - var;
    worst_hat = std::max(worst_hat, std::abs(observed_bias - expected_bias));
    pass = pass && observed_bias > 0.0;
    pass = pass && std::abs(observed_bias - expected_bias) <=
                       std::max(1e-12, 1e-9 * expected_bias);
  }
  const double dt = now_seconds() - t0;
  return {2, "zero bias of the corrected estimator under between-plot additivity", pass,
          "max |E[v_tilde] - var| " + fmt(worst_tilde) + " (tol 1e-10), max bias error " +
              fmt(worst_hat),
          dt};
}

// --- criterion 3: reference construction reproduced ------------------------

Criterion criterion3() {
  const double t0 = now_seconds();
  const BMatrix b = minimax_b({8, 8, 12, 12});
  const double expected[4][4] = {{64, 32, -48, -48},
                                 {32, 64, -48, -48},
                                 {-48, -48, 144, -48},
                                 {-48, -48, -48, 144}};
  bool pass = true;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) pass = pass && b.entry(i, j) == expected[i][j];
  }
  pass = pass && std::abs(b.lambda_max() - 192.0) <= 1e-9;
  return {3, "minimax construction for sizes (8,8,12,12)", pass,
          "entries integer-exact, lambda_max = " + std::to_string(b.lambda_max()),
          now_seconds() - t0};
}

// --- criterion 4: existence boundary and the naive extension ----------------

Criterion criterion4() {
  const double t0 = now_seconds();
  bool pass = !exists_b({1, 1, 5});

  Pcg32 rng(4444, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const int w = 3 + static_cast<int>(rng.bounded(4));
    std::vector<int> sizes(w);
    long long rest = 0;
    for (int i = 0; i + 1 < w; ++i) {
      sizes[i] = 1 + static_cast<int>(rng.bounded(8));
      rest += sizes[i];
    }
    sizes[w - 1] = static_cast<int>(rest + rng.bounded(6));
    std::sort(sizes.begin(), sizes.end());
    long long rest_sorted = 0;
    for (int i = 0; i + 1 < w; ++i) rest_sorted += sizes[i];
    if (sizes[w - 1] < rest_sorted) continue;
    pass = pass && !exists_b(sizes);
  }

  const auto [bad, bad_psd] = b_naive({6, 6, 14, 14});
  pass = pass && !bad_psd && bad.eigenvalues().front() < 0.0;

  const auto [good, good_psd] = b_naive({8, 8, 12, 12});
  double trace = 0.0;
  for (int i = 0; i < 4; ++i) trace += good.entry(i, i);
  int positive = 0;
  for (double lam : good.eigenvalues()) {
    if (lam > 1e-8 * trace) ++positive;
  }
  pass = pass && good_psd && positive == 3;

  return {4, "existence boundary and definiteness of the naive extension", pass,
          "naive(6,6,14,14) min eig " + fmt(bad.eigenvalues().front()) +
              ", naive(8,8,12,12) rank " + std::to_string(positive),
          now_seconds() - t0};
}

// --- criterion 5: spectral lower bound --------------------------------------

Criterion criterion5() {
  const double t0 = now_seconds();
  Pcg32 rng(5555, 0);
  bool pass = true;
  int unequal = 0, equal = 0;
  double min_margin = 1e300;
  while (unequal + equal < 100) {
    const int w = 3 + static_cast<int>(rng.bounded(4));
    std::vector<int> sizes(w);
    const bool make_equal = (unequal + equal) % 5 == 4;
    if (make_equal) {
      const int m = 2 + static_cast<int>(rng.bounded(10));
      std::fill(sizes.begin(), sizes.end(), m);
    } else {
      for (auto& m : sizes) m = 2 + static_cast<int>(rng.bounded(12));
      std::sort(sizes.begin(), sizes.end());
      long long rest = 0;
      for (int i = 0; i + 1 < w; ++i) rest += sizes[i];
      if (sizes[w - 1] >= rest) continue;
      if (sizes.front() == sizes.back()) continue;
    }
    const BMatrix b = minimax_b(sizes);
    const double bound = lambda_lower_bound(sizes);
    pass = pass && b.lambda_max() >= bound - 1e-9;
    if (make_equal) {
      pass = pass && std::abs(b.lambda_max() - bound) <= 1e-9 * std::max(1.0, bound);
      ++equal;
    } else {
      min_margin = std::min(min_margin, (b.lambda_max() - bound) / bound);
      pass = pass && b.lambda_max() - bound > 1e-6 * bound;
      ++unequal;
    }
  }
  return {5, "spectral lower bound over 100 random size vectors", pass,
          std::to_string(unequal) + " unequal (min relative margin " + fmt(min_margin) + "), " +
              std::to_string(equal) + " equal (bound attained)",
          now_seconds() - t0};
}

// --- criterion 6: deterministic populations ---------------------------------

Criterion criterion6() {
  const double t0 = now_seconds();
  bool pass = true;
  double worst_delta = 0.0, worst_tilde = 0.0;
  for (const char* name : {"I", "II"}) {
    const StudyResult result = run_bias_study(settings_from_preset(preset(name), 200, 20240901));
    for (const auto& rec : result.records) {
      worst_delta = std::max(worst_delta, std::abs(rec.delta - 16.0 / 1200.0));
      worst_tilde = std::max(worst_tilde, std::abs(rec.delta_tilde));
      pass = pass && std::abs(rec.delta - 16.0 / 1200.0) < 5e-5;  // 0.0133 to 4 decimals
      pass = pass && rec.delta_tilde >= 0.0 && rec.delta_tilde <= 1e-24;
    }
  }
  const double dt = now_seconds() - t0;
  pass = pass && dt < 5.0;
  return {6, "populations I-II: delta = 0.0133, corrected bias zero, every replicate", pass,
          "max |delta - 16/1200| " + fmt(worst_delta) + ", max delta_tilde " + fmt(worst_tilde) +
              ", " + fmt(dt) + " s (budget 5 s)",
          dt};
}

// --- criterion 7: stochastic populations ------------------------------------

Criterion criterion7() {
  const double t0 = now_seconds();
  const std::vector<std::pair<std::string, double>> targets = {
      {"III", 0.804}, {"IV", 0.811}, {"V", 0.811},
      {"VI", 0.810},  {"VII", 0.822}, {"VIII", 0.817}};
  bool pass = true;
  std::string detail;
  std::vector<StudyResult> results;
  for (const auto& [name, target] : targets) {
    StudyResult result = run_bias_study(settings_from_preset(preset(name), 200, 20240901));
    if (!result.median_ratio) {
      pass = false;
      continue;
    }
    const double med = *result.median_ratio;
    pass = pass && std::abs(med - target) <= 0.05;
    detail += name + "=" + fmt(med) + " ";
    results.push_back(std::move(result));
  }
  const auto dir = std::filesystem::temp_directory_path() / "splitplot_acceptance";
  std::filesystem::create_directories(dir);
  {
    std::ofstream box(dir / "boxplot.csv");
    boxplot_to_csv(box, results);
    for (const auto& r : results) {
      std::ofstream reps(dir / ("replicates_" + r.population_name + ".csv"));
      replicates_to_csv(reps, r);
    }
  }
  pass = pass && std::filesystem::file_size(dir / "boxplot.csv") > 0;
  const double dt = now_seconds() - t0;
  pass = pass && dt < 30.0;
  return {7, "populations III-VIII: median bias ratios within 0.05 of the reference", pass,
          detail + "(targets 0.804 0.811 0.811 0.810 0.822 0.817), boxplot CSV at " +
              (dir / "boxplot.csv").string() + ", " + fmt(dt) + " s (budget 30 s)",
          dt};
}

// --- criterion 8: randomized property sweep ---------------------------------

Criterion criterion8() {
  const double t0 = now_seconds();
  bool pass = true;
  int cases = 0;
  Pcg32 rng(8888, 0);

  // Aggregation identities, sign properties, per-realization nonnegativity.
  for (int rep = 0; rep < 250; ++rep) {
    const SplitPlotDesign d = testing::random_design(rng);
    const auto table = testing::random_integer_table(d, rng);
    const auto g = interaction_contrast(d.structure);
    const double mbar = mean_whole_plot_size(d);
    const int w_count = d.num_whole_plots();

    const auto tau_w = whole_plot_contrasts(table, g);
    CompensatedSum s;
    for (int w = 0; w < w_count; ++w) s.add(d.whole_plot_sizes[w] / mbar * tau_w[w]);
    pass = pass && std::abs(finite_population_contrast(table, g) - s.value() / w_count) <= 1e-12;
    ++cases;

    for (int z1 = 0; z1 < 2; ++z1) {
      for (int z2 = 0; z2 < 2; ++z2) {
        pass = pass && std::abs(adjusted_population_mean(table, z1, z2) -
                                population_mean(table, z1, z2)) <= 1e-12;
        ++cases;
      }
    }

    pass = pass && delta(table, g) >= 0.0;
    const BMatrix b = minimax_b(d.whole_plot_sizes);
    pass = pass && delta_tilde(table, g, b) >= 0.0;
    cases += 2;

    const ObservedDataset data = observe(table, draw_assignment(d, 8100, rep));
    pass = pass && v_hat(data, g) >= -1e-12;
    ++cases;
    const double mbar2 = mean_whole_plot_size(d);
    for (int z1 = 0; z1 < 2; ++z1) {
      const auto& plots = data.plots_assigned(z1);
      for (int z2 = 0; z2 < 2; ++z2) {
        CompensatedSum u;
        for (int w : plots) u.add(d.whole_plot_sizes[w] / mbar2 * ybar_w_obs(data, w, z2));
        pass = pass && std::abs(ybar_obs(data, z1, z2) - u.value() / plots.size()) <= 1e-12;
        ++cases;
      }
    }
  }

  // Construction verification across the feasible family.
  for (int rep = 0; rep < 60; ++rep) {
    const int w = 3 + static_cast<int>(rng.bounded(4));
    std::vector<int> sizes(w);
    for (auto& m : sizes) m = 2 + static_cast<int>(rng.bounded(12));
    std::sort(sizes.begin(), sizes.end());
    long long rest = 0;
    for (int i = 0; i + 1 < w; ++i) rest += sizes[i];
    if (sizes[w - 1] >= rest || sizes.front() == sizes.back()) continue;
    auto xs = find_sign_vectors(sizes);
    if (xs.size() > 3) xs.resize(3);
    for (const auto& x : xs) {
      const ASegment seg = solve_a_segment(x, sizes);
      for (double t : {0.0, 0.5, 0.9}) {
        const auto [a1, a2] = seg.at(t);
        pass = pass && verify_c1_c2_c3(assemble_b(x, a1, a2, sizes), sizes).all_pass();
        ++cases;
      }
    }
  }

  // Eigensolver contracts.
  for (int rep = 0; rep < 60; ++rep) {
    const int n = 2 + static_cast<int>(rng.bounded(6));
    DenseMatrix a(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const double v = (static_cast<double>(rng.bounded(2001)) - 1000.0) / 50.0;
        a[i][j] = a[j][i] = v;
      }
    }
    const auto eig = eigen_sym(a);
    double trace = 0.0, sum = 0.0;
    for (int i = 0; i < n; ++i) trace += a[i][i];
    for (double lam : eig.values) sum += lam;
    pass = pass && std::abs(sum - trace) <= 1e-9 * std::max(1.0, std::abs(trace));
    ++cases;
    for (int k = 0; k < n; ++k) {
      for (int l = k; l < n; ++l) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += eig.vectors[k][i] * eig.vectors[l][i];
        pass = pass && std::abs(dot - (k == l ? 1.0 : 0.0)) <= 1e-10;
        ++cases;
      }
    }
  }

  const double dt = now_seconds() - t0;
  pass = pass && cases >= 1000 && dt < 60.0;
  return {8, "randomized property sweep", pass,
          std::to_string(cases) + " cases, " + fmt(dt) + " s (budget 60 s)", dt};
}

}  // namespace

int main() {
  std::vector<Criterion> results;
  results.push_back(criterion1());
  results.push_back(criterion2());
  results.push_back(criterion3());
  results.push_back(criterion4());
  results.push_back(criterion5());
  results.push_back(criterion6());
  results.push_back(criterion7());
  results.push_back(criterion8());

  bool all = true;
  for (const auto& c : results) {
    all = all && c.pass;
    std::printf("criterion %d: %s — %s [%s]\n", c.index, c.pass ? "PASS" : "FAIL",
                c.label.c_str(), c.detail.c_str());
  }
  std::printf(all ? "ALL ACCEPTANCE CRITERIA PASSED\n" : "ACCEPTANCE FAILURES PRESENT\n");
  return all ? 0 : 1;
}
