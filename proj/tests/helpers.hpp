#pragma once

#include <vector>

#include "splitplot/design.hpp"
#include "splitplot/outcomes.hpp"
#include "splitplot/rng.hpp"
#include "splitplot/simulation.hpp"

namespace splitplot::testing {

inline SplitPlotDesign two_by_two(std::vector<int> sizes, std::vector<int> r1,
                                  std::vector<std::vector<int>> r2) {
  SplitPlotDesign d;
  d.structure.z1_levels = {{0}, {1}};
  d.structure.z2_levels = {{0}, {1}};
  d.whole_plot_sizes = std::move(sizes);
  d.r1 = std::move(r1);
  d.r2 = std::move(r2);
  return d;
}

/// Small random design with two z1 and two z2 combinations; whole plots get
/// 2..4 units split across the z2 combinations.
inline SplitPlotDesign random_design(Pcg32& rng, int min_plots = 4, int max_plots = 6) {
  const int w_count = min_plots + static_cast<int>(rng.bounded(max_plots - min_plots + 1));
  std::vector<int> sizes, r1{0, 0};
  std::vector<std::vector<int>> r2;
  for (int w = 0; w < w_count; ++w) {
    const int a = 1 + static_cast<int>(rng.bounded(2));
    const int b = 1 + static_cast<int>(rng.bounded(2));
    r2.push_back({a, b});
    sizes.push_back(a + b);
  }
  r1[0] = 2 + static_cast<int>(rng.bounded(w_count - 3));
  r1[1] = w_count - r1[0];
  return two_by_two(std::move(sizes), std::move(r1), std::move(r2));
}

inline PotentialOutcomeTable random_integer_table(const SplitPlotDesign& design, Pcg32& rng,
                                                  int hi = 10) {
  std::vector<int> unit_plot;
  for (int w = 0; w < design.num_whole_plots(); ++w) {
    unit_plot.insert(unit_plot.end(), design.whole_plot_sizes[w], w);
  }
  std::vector<std::vector<double>> y(design.num_units(),
                                     std::vector<double>(design.structure.n_cells()));
  for (auto& row : y) {
    for (auto& v : row) v = static_cast<double>(rng.bounded(hi));
  }
  return PotentialOutcomeTable(design, std::move(unit_plot), std::move(y));
}

inline PotentialOutcomeTable constant_table(const SplitPlotDesign& design, double value) {
  std::vector<int> unit_plot;
  for (int w = 0; w < design.num_whole_plots(); ++w) {
    unit_plot.insert(unit_plot.end(), design.whole_plot_sizes[w], w);
  }
  std::vector<std::vector<double>> y(design.num_units(),
                                     std::vector<double>(design.structure.n_cells(), value));
  return PotentialOutcomeTable(design, std::move(unit_plot), std::move(y));
}

/// Strictly additive table: Y_i(cell) = u_i + effect(cell), so every unit's
/// contrast equals sum(g * effect).
inline PotentialOutcomeTable strictly_additive_table(const SplitPlotDesign& design,
                                                     const std::vector<double>& effects,
                                                     Pcg32& rng) {
  std::vector<int> unit_plot;
  for (int w = 0; w < design.num_whole_plots(); ++w) {
    unit_plot.insert(unit_plot.end(), design.whole_plot_sizes[w], w);
  }
  std::vector<std::vector<double>> y;
  for (int i = 0; i < design.num_units(); ++i) {
    const double u = static_cast<double>(rng.bounded(20));
    std::vector<double> row(effects.size());
    for (size_t c = 0; c < effects.size(); ++c) row[c] = u + effects[c];
    y.push_back(std::move(row));
  }
  return PotentialOutcomeTable(design, std::move(unit_plot), std::move(y));
}

}  // namespace splitplot::testing
