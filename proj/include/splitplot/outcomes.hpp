#pragma once

#include <vector>

#include "splitplot/bmatrix.hpp"
#include "splitplot/design.hpp"

namespace splitplot {

/// Full science table: one potential outcome per unit and treatment
/// combination, plus the unit -> whole-plot map. Immutable after
/// construction; construction validates that every whole plot receives
/// exactly M_w units and that the outcome table is total.
class PotentialOutcomeTable {
 public:
  /// `outcomes[i]` holds unit i's potential outcomes indexed by
  /// FactorialStructure::cell(z1, z2).
  PotentialOutcomeTable(SplitPlotDesign design, std::vector<int> unit_whole_plot,
                        std::vector<std::vector<double>> outcomes);

  const SplitPlotDesign& design() const noexcept { return design_; }
  int num_units() const noexcept { return static_cast<int>(unit_whole_plot_.size()); }
  int whole_plot_of(int unit) const { return unit_whole_plot_.at(unit); }
  double outcome(int unit, int z1, int z2) const {
    return outcomes_.at(unit)[design_.structure.cell(z1, z2)];
  }
  /// Units of plot w in ascending unit order.
  const std::vector<int>& units_in_plot(int w) const { return rosters_.at(w); }

 private:
  SplitPlotDesign design_;
  std::vector<int> unit_whole_plot_;
  std::vector<std::vector<double>> outcomes_;
  std::vector<std::vector<int>> rosters_;
};

/// Size-adjusted outcome (M_w / Mbar) * Y_i(z1 z2); the adjustment absorbs
/// unequal whole-plot sizes so that plot-level averages aggregate like the
/// balanced case.
double adjusted_outcome(const PotentialOutcomeTable& table, int unit, int z1, int z2);

double population_mean(const PotentialOutcomeTable& table, int z1, int z2);
double whole_plot_mean(const PotentialOutcomeTable& table, int w, int z1, int z2);

/// Plot-level mean of adjusted outcomes, and its equally-weighted average
/// over plots (which coincides with the raw population mean).
double adjusted_whole_plot_mean(const PotentialOutcomeTable& table, int w, int z1, int z2);
double adjusted_population_mean(const PotentialOutcomeTable& table, int z1, int z2);

/// Unit-level contrast sum(g(z1 z2) Y_i(z1 z2)).
double unit_contrast(const PotentialOutcomeTable& table, const ContrastSpec& contrast, int unit);

/// The estimand: sum over treatment combinations of g times the population
/// mean potential outcome.
double finite_population_contrast(const PotentialOutcomeTable& table,
                                  const ContrastSpec& contrast);

/// Plot-level contrasts, one per whole plot.
std::vector<double> whole_plot_contrasts(const PotentialOutcomeTable& table,
                                         const ContrastSpec& contrast);

/// Between- and within-plot mean products of adjusted outcomes, with
/// divisors W-1 and M_w-1 respectively.
double s_between(const PotentialOutcomeTable& table, int z1, int z2, int z1s, int z2s);
double s_within(const PotentialOutcomeTable& table, int w, int z1, int z2, int z1s, int z2s);

/// Heterogeneity of plot-level contrasts:
///   (1/(W(W-1))) sum_w ((M_w/Mbar) tau_w - tau)^2.
/// This is the bias of the baseline variance estimator.
double delta(const PotentialOutcomeTable& table, const ContrastSpec& contrast);

/// Bias of the corrected variance estimator: (1/N^2) tau' B tau, evaluated
/// through B's spectral decomposition so the result is exactly nonnegative
/// for positive semidefinite B. Eigenvalues below 1e-12 of the largest
/// magnitude are treated as kernel noise and dropped.
double delta_tilde(const PotentialOutcomeTable& table, const ContrastSpec& contrast,
                   const BMatrix& b);

/// Exact sampling variance of the point estimator under the two-stage
/// randomization: between-plot term, within-plot term, minus delta.
double theoretical_variance(const PotentialOutcomeTable& table, const ContrastSpec& contrast);

/// True iff plot-level mean differences Ybar_w(z) - Ybar_w(z*) agree across
/// plots for every pair of treatment combinations (within `tol`).
bool check_between_wp_additivity(const PotentialOutcomeTable& table, double tol = 1e-9);

/// Builds a table whose plot means are base(cell) + shift_w, which satisfies
/// between-whole-plot additivity by construction. `noise`, when supplied,
/// must contain per-unit, per-cell residuals; they are re-centered within
/// each (plot, cell) group so the plot means are preserved exactly.
PotentialOutcomeTable make_between_wp_additive(
    const SplitPlotDesign& design, const std::vector<double>& base_by_cell,
    const std::vector<double>& wp_shifts,
    const std::vector<std::vector<double>>* noise = nullptr);

}  // namespace splitplot
