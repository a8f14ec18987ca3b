#include "splitplot/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "splitplot/estimators.hpp"
#include "splitplot/numeric.hpp"
#include "splitplot/rng.hpp"

namespace splitplot {

namespace {

SplitPlotDesign two_by_two_design(std::vector<int> sizes, std::vector<std::vector<int>> r2) {
  SplitPlotDesign d;
  d.structure.z1_levels = {{0}, {1}};
  d.structure.z2_levels = {{0}, {1}};
  d.whole_plot_sizes = std::move(sizes);
  d.r1 = {2, 2};
  d.r2 = std::move(r2);
  require_valid(d);
  return d;
}

}  // namespace

SplitPlotDesign oracle_design_a() {
  return two_by_two_design({2, 2, 2, 2}, {{1, 1}, {1, 1}, {1, 1}, {1, 1}});
}

SplitPlotDesign oracle_design_b() {
  return two_by_two_design({2, 2, 3, 3}, {{1, 1}, {1, 1}, {1, 2}, {1, 2}});
}

OracleFixture random_integer_fixture(const SplitPlotDesign& design, uint64_t seed,
                                     uint64_t stream) {
  require_valid(design);
  Pcg32 rng(seed, stream);
  const int n = design.num_units();
  const int cells = design.structure.n_cells();

  std::vector<int> unit_plot;
  unit_plot.reserve(n);
  for (int w = 0; w < design.num_whole_plots(); ++w) {
    unit_plot.insert(unit_plot.end(), design.whole_plot_sizes[w], w);
  }
  std::vector<std::vector<double>> y(n, std::vector<double>(cells, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < cells; ++c) y[i][c] = static_cast<double>(rng.bounded(10));
  }

  std::vector<double> g(cells, 0.0);
  const auto& st = design.structure;
  if (st.n_z1() == 2 && st.n_z2() == 2) {
    g[st.cell(0, 0)] = 0.25;
    g[st.cell(0, 1)] = -0.25;
    g[st.cell(1, 0)] = -0.25;
    g[st.cell(1, 1)] = 0.25;
  } else {
    g.front() = 1.0;
    g.back() = -1.0;
  }

  OracleFixture fixture{
      PotentialOutcomeTable(design, std::move(unit_plot), std::move(y)),
      ContrastSpec(design.structure, std::move(g)),
      std::nullopt,
  };
  fixture.b = minimax_b(design.whole_plot_sizes);
  return fixture;
}

double exact_expectation(const OracleFixture& fixture,
                         const std::function<double(const ObservedDataset&)>& statistic,
                         double guard) {
  AssignmentEnumerator en(fixture.table.design(), guard);
  const double p = en.probability();
  CompensatedSum s;
  while (auto a = en.next()) {
    s.add(p * statistic(observe(fixture.table, *a)));
  }
  return s.value();
}

double exact_variance(const OracleFixture& fixture, double guard) {
  const auto stat = [&fixture](const ObservedDataset& data) {
    return point_estimate(data, fixture.contrast);
  };
  const double mean = exact_expectation(fixture, stat, guard);
  AssignmentEnumerator en(fixture.table.design(), guard);
  const double p = en.probability();
  CompensatedSum s;
  while (auto a = en.next()) {
    const double dev = stat(observe(fixture.table, *a)) - mean;
    s.add(p * dev * dev);
  }
  return s.value();
}

OracleCheck make_check(const std::string& name, double enumerated, double formula) {
  OracleCheck c;
  c.name = name;
  c.enumerated = enumerated;
  c.formula = formula;
  c.abs_err = std::abs(enumerated - formula);
  const double scale = std::max(std::abs(enumerated), std::abs(formula));
  c.rel_err = scale > 0.0 ? c.abs_err / scale : 0.0;
  c.pass = c.abs_err <= std::max(1e-12, 1e-9 * scale);
  return c;
}

OracleCheck check_prop1(const OracleFixture& fixture, double guard) {
  const double enumerated = exact_expectation(
      fixture,
      [&fixture](const ObservedDataset& d) { return point_estimate(d, fixture.contrast); },
      guard);
  return make_check("point_estimate_unbiased", enumerated,
                    finite_population_contrast(fixture.table, fixture.contrast));
}

OracleCheck check_theorem1(const OracleFixture& fixture, double guard) {
  return make_check("sampling_variance_formula", exact_variance(fixture, guard),
                    theoretical_variance(fixture.table, fixture.contrast));
}

OracleCheck check_theorem2(const OracleFixture& fixture, double guard) {
  const double enumerated = exact_expectation(
      fixture, [&fixture](const ObservedDataset& d) { return v_hat(d, fixture.contrast); },
      guard);
  const double formula = theoretical_variance(fixture.table, fixture.contrast) +
                         delta(fixture.table, fixture.contrast);
  return make_check("v_hat_bias", enumerated, formula);
}

OracleCheck check_theorem3(const OracleFixture& fixture, double guard) {
  if (!fixture.b) throw std::invalid_argument("fixture carries no correction matrix");
  const auto& b = *fixture.b;
  const double enumerated = exact_expectation(
      fixture,
      [&fixture, &b](const ObservedDataset& d) { return v_tilde(d, fixture.contrast, b); },
      guard);
  const double formula = theoretical_variance(fixture.table, fixture.contrast) +
                         delta_tilde(fixture.table, fixture.contrast, b);
  return make_check("v_tilde_bias", enumerated, formula);
}

OracleCheck check_prop2(const OracleFixture& fixture, int w, int ws, double guard) {
  const double enumerated = exact_expectation(
      fixture,
      [&fixture, w, ws](const ObservedDataset& d) { return h_ww(d, fixture.contrast, w, ws); },
      guard);
  const auto tau_w = whole_plot_contrasts(fixture.table, fixture.contrast);
  return make_check("h_" + std::to_string(w) + std::to_string(ws) + "_unbiased", enumerated,
                    tau_w[w] * tau_w[ws]);
}

std::vector<OracleCheck> run_all_checks(const OracleFixture& fixture, double guard) {
  std::vector<OracleCheck> out;
  out.push_back(check_prop1(fixture, guard));
  out.push_back(check_theorem1(fixture, guard));
  out.push_back(check_theorem2(fixture, guard));
  if (fixture.b) out.push_back(check_theorem3(fixture, guard));
  const int w_count = fixture.table.design().num_whole_plots();
  for (int w = 0; w < w_count; ++w) {
    for (int ws = w + 1; ws < w_count; ++ws) {
      out.push_back(check_prop2(fixture, w, ws, guard));
    }
  }
  return out;
}

}  // namespace splitplot
