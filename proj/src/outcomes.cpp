#include "splitplot/outcomes.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "splitplot/numeric.hpp"

namespace splitplot {

PotentialOutcomeTable::PotentialOutcomeTable(SplitPlotDesign design,
                                             std::vector<int> unit_whole_plot,
                                             std::vector<std::vector<double>> outcomes)
    : design_(std::move(design)),
      unit_whole_plot_(std::move(unit_whole_plot)),
      outcomes_(std::move(outcomes)) {
  require_valid(design_);
  const int n = design_.num_units();
  const int w_count = design_.num_whole_plots();
  if (static_cast<int>(unit_whole_plot_.size()) != n) {
    throw std::invalid_argument("unit -> whole-plot map must cover all " + std::to_string(n) +
                                " units");
  }
  if (static_cast<int>(outcomes_.size()) != n) {
    throw std::invalid_argument("outcome table must have one row per unit");
  }
  rosters_.assign(w_count, {});
  for (int i = 0; i < n; ++i) {
    const int w = unit_whole_plot_[i];
    if (w < 0 || w >= w_count) {
      throw std::invalid_argument("unit " + std::to_string(i) + " maps to unknown whole plot");
    }
    rosters_[w].push_back(i);  // ascending since i is
    if (static_cast<int>(outcomes_[i].size()) != design_.structure.n_cells()) {
      throw std::invalid_argument("unit " + std::to_string(i) +
                                  " must have an outcome for every treatment combination");
    }
  }
  for (int w = 0; w < w_count; ++w) {
    if (static_cast<int>(rosters_[w].size()) != design_.whole_plot_sizes[w]) {
      throw std::invalid_argument("whole plot " + std::to_string(w) + " has " +
                                  std::to_string(rosters_[w].size()) + " units, expected " +
                                  std::to_string(design_.whole_plot_sizes[w]));
    }
  }
}

namespace {

void check_cell(const PotentialOutcomeTable& table, int z1, int z2) {
  const auto& st = table.design().structure;
  if (z1 < 0 || z1 >= st.n_z1() || z2 < 0 || z2 >= st.n_z2()) {
    throw std::domain_error("unknown treatment combination (" + std::to_string(z1) + ", " +
                            std::to_string(z2) + ")");
  }
}

void check_same_structure(const PotentialOutcomeTable& table, const ContrastSpec& contrast) {
  const auto& a = table.design().structure;
  const auto& b = contrast.structure();
  if (a.n_z1() != b.n_z1() || a.n_z2() != b.n_z2()) {
    throw std::invalid_argument("contrast and design factorial structures differ");
  }
}

}  // namespace

double adjusted_outcome(const PotentialOutcomeTable& table, int unit, int z1, int z2) {
  if (unit < 0 || unit >= table.num_units()) {
    throw std::domain_error("unknown unit " + std::to_string(unit));
  }
  check_cell(table, z1, z2);
  const int w = table.whole_plot_of(unit);
  const double ratio = table.design().whole_plot_sizes[w] / mean_whole_plot_size(table.design());
  return ratio * table.outcome(unit, z1, z2);
}

double population_mean(const PotentialOutcomeTable& table, int z1, int z2) {
  check_cell(table, z1, z2);
  CompensatedSum s;
  for (int i = 0; i < table.num_units(); ++i) s.add(table.outcome(i, z1, z2));
  return s.value() / table.num_units();
}

double whole_plot_mean(const PotentialOutcomeTable& table, int w, int z1, int z2) {
  check_cell(table, z1, z2);
  const auto& units = table.units_in_plot(w);
  CompensatedSum s;
  for (int i : units) s.add(table.outcome(i, z1, z2));
  return s.value() / static_cast<double>(units.size());
}

double adjusted_whole_plot_mean(const PotentialOutcomeTable& table, int w, int z1, int z2) {
  const double ratio = table.design().whole_plot_sizes[w] / mean_whole_plot_size(table.design());
  return ratio * whole_plot_mean(table, w, z1, z2);
}

double adjusted_population_mean(const PotentialOutcomeTable& table, int z1, int z2) {
  const int w_count = table.design().num_whole_plots();
  CompensatedSum s;
  for (int w = 0; w < w_count; ++w) s.add(adjusted_whole_plot_mean(table, w, z1, z2));
  return s.value() / w_count;
}

double unit_contrast(const PotentialOutcomeTable& table, const ContrastSpec& contrast, int unit) {
  check_same_structure(table, contrast);
  const auto& st = table.design().structure;
  CompensatedSum s;
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    for (int z2 = 0; z2 < st.n_z2(); ++z2) {
      s.add(contrast.g(z1, z2) * table.outcome(unit, z1, z2));
    }
  }
  return s.value();
}

double finite_population_contrast(const PotentialOutcomeTable& table,
                                  const ContrastSpec& contrast) {
  check_same_structure(table, contrast);
  const auto& st = table.design().structure;
  CompensatedSum s;
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    for (int z2 = 0; z2 < st.n_z2(); ++z2) {
      const double g = contrast.g(z1, z2);
      if (g != 0.0) s.add(g * population_mean(table, z1, z2));
    }
  }
  return s.value();
}

std::vector<double> whole_plot_contrasts(const PotentialOutcomeTable& table,
                                         const ContrastSpec& contrast) {
  check_same_structure(table, contrast);
  const auto& st = table.design().structure;
  const int w_count = table.design().num_whole_plots();
  std::vector<double> out(w_count, 0.0);
  for (int w = 0; w < w_count; ++w) {
    CompensatedSum s;
    for (int z1 = 0; z1 < st.n_z1(); ++z1) {
      for (int z2 = 0; z2 < st.n_z2(); ++z2) {
        const double g = contrast.g(z1, z2);
        if (g != 0.0) s.add(g * whole_plot_mean(table, w, z1, z2));
      }
    }
    out[w] = s.value();
  }
  return out;
}

double s_between(const PotentialOutcomeTable& table, int z1, int z2, int z1s, int z2s) {
  check_cell(table, z1, z2);
  check_cell(table, z1s, z2s);
  const int w_count = table.design().num_whole_plots();
  if (w_count < 2) throw std::domain_error("between-plot products need at least 2 whole plots");
  const double mbar = mean_whole_plot_size(table.design());
  const double ubar_a = adjusted_population_mean(table, z1, z2);
  const double ubar_b = adjusted_population_mean(table, z1s, z2s);
  CompensatedSum s;
  for (int w = 0; w < w_count; ++w) {
    s.add((adjusted_whole_plot_mean(table, w, z1, z2) - ubar_a) *
          (adjusted_whole_plot_mean(table, w, z1s, z2s) - ubar_b));
  }
  return mbar / (w_count - 1) * s.value();
}

double s_within(const PotentialOutcomeTable& table, int w, int z1, int z2, int z1s, int z2s) {
  check_cell(table, z1, z2);
  check_cell(table, z1s, z2s);
  const auto& units = table.units_in_plot(w);
  const int m = static_cast<int>(units.size());
  if (m < 2) throw std::domain_error("within-plot products need at least 2 units in the plot");
  const double ua = adjusted_whole_plot_mean(table, w, z1, z2);
  const double ub = adjusted_whole_plot_mean(table, w, z1s, z2s);
  CompensatedSum s;
  for (int i : units) {
    s.add((adjusted_outcome(table, i, z1, z2) - ua) * (adjusted_outcome(table, i, z1s, z2s) - ub));
  }
  return s.value() / (m - 1);
}

double delta(const PotentialOutcomeTable& table, const ContrastSpec& contrast) {
  const int w_count = table.design().num_whole_plots();
  const double mbar = mean_whole_plot_size(table.design());
  const double tau = finite_population_contrast(table, contrast);
  const std::vector<double> tau_w = whole_plot_contrasts(table, contrast);
  CompensatedSum s;
  for (int w = 0; w < w_count; ++w) {
    const double dev = (table.design().whole_plot_sizes[w] / mbar) * tau_w[w] - tau;
    s.add(dev * dev);
  }
  return s.value() / (static_cast<double>(w_count) * (w_count - 1));
}

double delta_tilde(const PotentialOutcomeTable& table, const ContrastSpec& contrast,
                   const BMatrix& b) {
  const int w_count = table.design().num_whole_plots();
  if (b.order() != w_count) {
    throw std::domain_error("correction matrix order " + std::to_string(b.order()) +
                            " does not match the " + std::to_string(w_count) + "-plot design");
  }
  const std::vector<double> tau_w = whole_plot_contrasts(table, contrast);
  const double n = static_cast<double>(table.num_units());

  double max_abs_eig = 0.0;
  for (double lam : b.eigenvalues()) max_abs_eig = std::max(max_abs_eig, std::abs(lam));
  const double drop = 1e-12 * max_abs_eig;

  CompensatedSum quad;
  for (int k = 0; k < w_count; ++k) {
    const double lam = b.eigenvalues()[k];
    if (std::abs(lam) <= drop) continue;
    CompensatedSum proj;
    for (int i = 0; i < w_count; ++i) proj.add(b.eigenvectors()[k][i] * tau_w[i]);
    quad.add(lam * proj.value() * proj.value());
  }
  return quad.value() / (n * n);
}

double theoretical_variance(const PotentialOutcomeTable& table, const ContrastSpec& contrast) {
  check_same_structure(table, contrast);
  const auto& d = table.design();
  const auto& st = d.structure;
  const int w_count = d.num_whole_plots();
  const double mbar = mean_whole_plot_size(d);

  CompensatedSum total;
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    if (d.r1[z1] == 0) {
      for (int z2 = 0; z2 < st.n_z2(); ++z2) {
        if (contrast.g(z1, z2) != 0.0) {
          throw std::domain_error("z1 " + level_key(st.z1_levels[z1]) +
                                  " carries contrast weight but is never assigned");
        }
      }
      continue;
    }
    const double r1 = d.r1[z1];
    for (int z2 = 0; z2 < st.n_z2(); ++z2) {
      const double g_a = contrast.g(z1, z2);
      if (g_a == 0.0) continue;
      for (int z2s = 0; z2s < st.n_z2(); ++z2s) {
        const double g_b = contrast.g(z1, z2s);
        if (g_b == 0.0) continue;
        CompensatedSum within_avg;
        for (int w = 0; w < w_count; ++w) {
          within_avg.add(s_within(table, w, z1, z2, z1, z2s) /
                         (static_cast<double>(w_count) * d.whole_plot_sizes[w]));
        }
        total.add(g_a * g_b / r1 *
                  (s_between(table, z1, z2, z1, z2s) / mbar - within_avg.value()));
      }
      CompensatedSum within_rep;
      for (int w = 0; w < w_count; ++w) {
        if (d.r2[w][z2] == 0) {
          throw std::domain_error("z2 " + level_key(st.z2_levels[z2]) +
                                  " carries contrast weight but is never assigned in plot " +
                                  std::to_string(w));
        }
        within_rep.add(s_within(table, w, z1, z2, z1, z2) / d.r2[w][z2]);
      }
      total.add(g_a * g_a / (w_count * r1) * within_rep.value());
    }
  }
  total.add(-delta(table, contrast));
  return total.value();
}

bool check_between_wp_additivity(const PotentialOutcomeTable& table, double tol) {
  const auto& st = table.design().structure;
  const int w_count = table.design().num_whole_plots();
  const int cells = st.n_cells();
  std::vector<std::vector<double>> means(w_count, std::vector<double>(cells, 0.0));
  for (int w = 0; w < w_count; ++w) {
    for (int z1 = 0; z1 < st.n_z1(); ++z1) {
      for (int z2 = 0; z2 < st.n_z2(); ++z2) {
        means[w][st.cell(z1, z2)] = whole_plot_mean(table, w, z1, z2);
      }
    }
  }
  for (int a = 0; a < cells; ++a) {
    for (int b = a + 1; b < cells; ++b) {
      const double ref = means[0][a] - means[0][b];
      for (int w = 1; w < w_count; ++w) {
        if (std::abs((means[w][a] - means[w][b]) - ref) > tol) return false;
      }
    }
  }
  return true;
}

PotentialOutcomeTable make_between_wp_additive(const SplitPlotDesign& design,
                                               const std::vector<double>& base_by_cell,
                                               const std::vector<double>& wp_shifts,
                                               const std::vector<std::vector<double>>* noise) {
  require_valid(design);
  const int cells = design.structure.n_cells();
  const int w_count = design.num_whole_plots();
  const int n = design.num_units();
  if (static_cast<int>(base_by_cell.size()) != cells) {
    throw std::invalid_argument("base row must supply one mean per treatment combination");
  }
  if (static_cast<int>(wp_shifts.size()) != w_count) {
    throw std::invalid_argument("one shift per whole plot required");
  }
  if (noise && static_cast<int>(noise->size()) != n) {
    throw std::invalid_argument("noise must have one row per unit");
  }

  std::vector<int> unit_plot;
  unit_plot.reserve(n);
  for (int w = 0; w < w_count; ++w) {
    unit_plot.insert(unit_plot.end(), design.whole_plot_sizes[w], w);
  }

  std::vector<std::vector<double>> y(n, std::vector<double>(cells, 0.0));
  int offset = 0;
  for (int w = 0; w < w_count; ++w) {
    const int m = design.whole_plot_sizes[w];
    for (int c = 0; c < cells; ++c) {
      // Residuals are centered within the (plot, cell) group so the plot
      // mean stays exactly base + shift.
      double group_mean = 0.0;
      if (noise) {
        CompensatedSum gs;
        for (int k = 0; k < m; ++k) gs.add((*noise)[offset + k][c]);
        group_mean = gs.value() / m;
      }
      for (int k = 0; k < m; ++k) {
        double v = base_by_cell[c] + wp_shifts[w];
        if (noise) v += (*noise)[offset + k][c] - group_mean;
        y[offset + k][c] = v;
      }
    }
    offset += m;
  }
  return PotentialOutcomeTable(design, std::move(unit_plot), std::move(y));
}

}  // namespace splitplot
