#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "splitplot/design.hpp"
#include "splitplot/outcomes.hpp"

namespace splitplot {

/// A realized two-stage randomization. `plot_z1[w]` is the z1 combination
/// assigned to whole plot w; `slot_z2[w][k]` is the z2 combination assigned
/// to the k-th unit of plot w in ascending unit order.
struct Assignment {
  std::vector<int> plot_z1;
  std::vector<std::vector<int>> slot_z2;
};

/// Plots assigned to each z1 combination (the stage-one index sets).
std::vector<std::vector<int>> t1_sets(const Assignment& assignment, int n_z1);

/// Uniform draw over the two-stage randomization: a Fisher-Yates shuffle of
/// the plot indices sliced into the r1 group sizes, then an independent
/// shuffle-and-slice of each plot's unit slots into the r2 group sizes.
/// Deterministic given (seed, stream).
Assignment draw_assignment(const SplitPlotDesign& design, uint64_t seed, uint64_t stream);

struct ObservedRow {
  int unit;
  int whole_plot;
  int z1;
  int z2;
  double y;
};

/// The data revealed by one assignment: per unit, its whole plot, assigned
/// treatment combination and observed outcome. Construction validates group
/// counts against the design. Carries no other potential outcomes, so
/// estimators built on it cannot peek at the science table.
class ObservedDataset {
 public:
  ObservedDataset(SplitPlotDesign design, std::vector<ObservedRow> rows);

  const SplitPlotDesign& design() const noexcept { return design_; }
  const std::vector<ObservedRow>& rows() const noexcept { return rows_; }
  int plot_z1(int w) const { return plot_z1_.at(w); }
  /// T1(z1): plots assigned to z1, ascending.
  const std::vector<int>& plots_assigned(int z1) const { return t1_.at(z1); }
  /// Observed outcomes of the (plot, z2) group.
  const std::vector<double>& ys(int w, int z2) const { return group_ys_.at(w).at(z2); }

 private:
  SplitPlotDesign design_;
  std::vector<ObservedRow> rows_;
  std::vector<int> plot_z1_;
  std::vector<std::vector<int>> t1_;
  std::vector<std::vector<std::vector<double>>> group_ys_;
};

/// Reveals the outcomes selected by the assignment. Throws std::domain_error
/// when the assignment shape is inconsistent with the table's design.
ObservedDataset observe(const PotentialOutcomeTable& table, const Assignment& assignment);

/// Exact number of distinct assignments: the product of the stage-one
/// multinomial coefficient and one multinomial per plot.
double enumeration_count(const SplitPlotDesign& design);

/// Streams every distinct assignment exactly once, each with probability
/// 1/count. Construction refuses designs whose count exceeds the guard.
/// The walk keeps one labeling per stage and advances them odometer-style
/// through multiset permutations, so memory stays O(N).
class AssignmentEnumerator {
 public:
  explicit AssignmentEnumerator(const SplitPlotDesign& design, double guard = 1e7);

  std::optional<Assignment> next();
  double probability() const noexcept { return 1.0 / count_; }
  double count() const noexcept { return count_; }
  void reset();

 private:
  SplitPlotDesign design_;
  double count_ = 0.0;
  std::vector<int> stage1_;
  std::vector<std::vector<int>> stage2_;
  bool exhausted_ = false;
  bool started_ = false;
};

}  // namespace splitplot
