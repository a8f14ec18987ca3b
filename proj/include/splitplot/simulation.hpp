#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitplot/bmatrix.hpp"
#include "splitplot/design.hpp"
#include "splitplot/outcomes.hpp"

namespace splitplot {

/// Compound-symmetry normal model for generating science tables: unit i in
/// plot w draws its vector of potential outcomes from N(theta_w, Sigma_w)
/// with Sigma_w = sigma2_w ((1 - rho_w) I + rho_w J). rho = 1 is treated as
/// the rank-one limit (one shared normal per unit).
struct PopulationSpec {
  std::vector<std::vector<double>> theta;  // [plot][cell]
  std::vector<double> sigma2;              // [plot]
  std::vector<double> rho;                 // [plot]
  /// When set, plot-level contrasts are forced to this value after sampling.
  std::optional<double> enforce_wp_means;
};

/// The 40-unit, 4-plot reference design with plot sizes (8, 8, 12, 12),
/// whole-plot replication (2, 2) and sub-plot replication (4,4)/(6,6).
SplitPlotDesign school_design();

/// The 2x2 interaction contrast (1/4, -1/4, -1/4, 1/4).
ContrastSpec interaction_contrast(const FactorialStructure& structure);

struct Preset {
  std::string name;
  SplitPlotDesign design;
  ContrastSpec contrast;
  PopulationSpec population;
};

/// Named populations I..VIII on the school design with the interaction
/// contrast. Population II enforces plot-level contrasts equal to one.
Preset preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// One sampled science table; deterministic given (seed, replicate), with
/// the replicate index selecting the RNG substream.
PotentialOutcomeTable sample_population(const PopulationSpec& spec,
                                        const SplitPlotDesign& design, uint64_t seed,
                                        int replicate);

/// Adds a plot-wise constant to the outcomes of one treatment combination
/// (by default the last one, the 2x2 cell "1|1") so every plot-level
/// contrast equals `target` exactly. The contrast must place nonzero weight
/// on the adjustment cell; all other combinations are untouched.
PotentialOutcomeTable enforce_wp_means(const PotentialOutcomeTable& table,
                                       const ContrastSpec& contrast, double target,
                                       std::optional<int> channel_z1 = std::nullopt,
                                       std::optional<int> channel_z2 = std::nullopt);

struct SimulationSettings {
  std::string population_name;
  SplitPlotDesign design;
  ContrastSpec contrast;
  PopulationSpec population;
  int replicates = 200;
  uint64_t seed = 0;
  /// Correction matrix; when absent the minimax matrix for the design's
  /// plot sizes is used.
  std::optional<BMatrix> b;
};

SimulationSettings settings_from_preset(const Preset& p, int replicates, uint64_t seed);

struct FiveNumber {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Quantile by linear interpolation of order statistics (inclusive): the
/// p-quantile of n sorted values sits at position (n-1)p.
double quantile_linear(std::vector<double> values, double p);
FiveNumber five_number_summary(const std::vector<double>& values);

struct ReplicateRecord {
  int replicate = 0;
  double delta = 0.0;
  double delta_tilde = 0.0;
  std::optional<double> ratio;  // absent when delta < 1e-15
};

struct StudyResult {
  std::string population_name;
  uint64_t seed = 0;
  std::vector<ReplicateRecord> records;
  FiveNumber delta_summary;
  FiveNumber delta_tilde_summary;
  std::optional<double> median_ratio;
  int n_ratio_defined = 0;
  BMatrix b;
};

/// Per replicate: sample a table (enforcing plot means if requested), then
/// record the biases of the two variance estimators and their ratio.
StudyResult run_bias_study(const SimulationSettings& settings);

}  // namespace splitplot
