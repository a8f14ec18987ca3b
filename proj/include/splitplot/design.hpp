#pragma once

#include <string>
#include <vector>

namespace splitplot {

/// Level combinations of the first-stage (whole-plot) factors and of the
/// second-stage (sub-plot) factors. Each combination is an ordered tuple of
/// 0-based per-factor level indices; combinations are identified by their
/// position in the declared ordering.
struct FactorialStructure {
  std::vector<std::vector<int>> z1_levels;
  std::vector<std::vector<int>> z2_levels;

  int n_z1() const noexcept { return static_cast<int>(z1_levels.size()); }
  int n_z2() const noexcept { return static_cast<int>(z2_levels.size()); }
  int n_cells() const noexcept { return n_z1() * n_z2(); }
  int cell(int z1, int z2) const noexcept { return z1 * n_z2() + z2; }
};

/// Canonical serialization of a level tuple: hyphen-joined indices, e.g.
/// the two-factor combination (0, 1) serializes as "0-1".
std::string level_key(const std::vector<int>& level);
std::vector<int> parse_level_key(const std::string& key);

/// A two-stage (split-plot) experimental design: W whole plots of sizes
/// M_1..M_W, whole-plot replication r1 (how many plots each z1 combination
/// receives) and per-plot sub-plot replication r2 (how many units inside
/// plot w each z2 combination receives).
struct SplitPlotDesign {
  FactorialStructure structure;
  std::vector<int> whole_plot_sizes;   // M_w, indexed by plot
  std::vector<int> r1;                 // indexed by z1
  std::vector<std::vector<int>> r2;    // [plot][z2]

  int num_whole_plots() const noexcept { return static_cast<int>(whole_plot_sizes.size()); }
  int num_units() const noexcept {
    int n = 0;
    for (int m : whole_plot_sizes) n += m;
    return n;
  }
};

/// Report-style validation: returns one diagnostic string per violated
/// constraint, empty when the design is valid. Checked constraints:
/// at least two level combinations per stage and all distinct, W >= 2,
/// M_w >= 2, r1/r2 entries nonnegative, sum of r1 equal to W, and the
/// r2 row of every plot summing to M_w.
std::vector<std::string> validate_design(const SplitPlotDesign& design);

/// Throws std::invalid_argument listing all violations if invalid.
void require_valid(const SplitPlotDesign& design);

/// True iff all whole plots have the same size and every z2 combination has
/// the same sub-plot replication in every whole plot.
bool is_balanced(const SplitPlotDesign& design);

/// Average whole-plot size N/W.
double mean_whole_plot_size(const SplitPlotDesign& design);

/// Coefficients g(z1 z2) of a treatment contrast. The coefficients must sum
/// to zero (within 1e-12 after compensated summation) and not all vanish.
class ContrastSpec {
 public:
  /// `coefficients` is indexed by FactorialStructure::cell(z1, z2).
  ContrastSpec(FactorialStructure structure, std::vector<double> coefficients);

  double g(int z1, int z2) const { return g_[structure_.cell(z1, z2)]; }
  const std::vector<double>& coefficients() const noexcept { return g_; }
  const FactorialStructure& structure() const noexcept { return structure_; }

 private:
  FactorialStructure structure_;
  std::vector<double> g_;
};

}  // namespace splitplot
