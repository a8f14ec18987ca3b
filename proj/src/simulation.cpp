#include "splitplot/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "splitplot/numeric.hpp"
#include "splitplot/rng.hpp"

namespace splitplot {

SplitPlotDesign school_design() {
  SplitPlotDesign d;
  d.structure.z1_levels = {{0}, {1}};
  d.structure.z2_levels = {{0}, {1}};
  d.whole_plot_sizes = {8, 8, 12, 12};
  d.r1 = {2, 2};
  d.r2 = {{4, 4}, {4, 4}, {6, 6}, {6, 6}};
  require_valid(d);
  return d;
}

ContrastSpec interaction_contrast(const FactorialStructure& structure) {
  if (structure.n_z1() != 2 || structure.n_z2() != 2) {
    throw std::invalid_argument("interaction contrast requires a 2 x 2 structure");
  }
  std::vector<double> g(4, 0.0);
  g[structure.cell(0, 0)] = 0.25;
  g[structure.cell(0, 1)] = -0.25;
  g[structure.cell(1, 0)] = -0.25;
  g[structure.cell(1, 1)] = 0.25;
  return ContrastSpec(structure, std::move(g));
}

namespace {

const std::vector<std::string> kPresetNames = {"I", "II", "III", "IV", "V", "VI", "VII", "VIII"};

// Plot means over the combinations (00, 01, 10, 11).
const std::vector<std::vector<double>> kThetaHomogeneous = {
    {10, 5, 9, 8}, {10, 5, 9, 8}, {10, 5, 9, 8}, {10, 5, 9, 8}};
const std::vector<std::vector<double>> kThetaPopulationTwo = {
    {10, 5, 9, 8}, {9, 7, 4, 6}, {11, 8, 7, 8}, {8, 7, 6, 9}};
const std::vector<std::vector<double>> kThetaHeterogeneous = {
    {10, 5, 9, 8}, {5, 9, 10, 8}, {10, 9, 8, 5}, {10, 5, 8, 9}};

PopulationSpec population_for(const std::string& name) {
  PopulationSpec p;
  if (name == "I") {
    p.theta = kThetaHomogeneous;
    p.sigma2 = {2, 2, 2, 2};
    p.rho = {1, 1, 1, 1};
  } else if (name == "II") {
    p.theta = kThetaPopulationTwo;
    p.sigma2 = {2.5, 2, 2, 3};
    p.rho = {0.5, 0.5, 0.5, 0.5};
    p.enforce_wp_means = 1.0;
  } else if (name == "III") {
    p.theta = kThetaHeterogeneous;
    p.sigma2 = {2.5, 2, 2, 3};
    p.rho = {1, 1, 1, 1};
  } else if (name == "IV") {
    p.theta = kThetaHeterogeneous;
    p.sigma2 = {2.5, 2, 2, 3};
    p.rho = {0.5, 0.5, 0.5, 0.5};
  } else if (name == "V") {
    p.theta = kThetaHeterogeneous;
    p.sigma2 = {2.5, 2, 2, 3};
    p.rho = {0.2, 0.4, 0.6, 0.8};
  } else if (name == "VI") {
    p.theta = kThetaHeterogeneous;
    p.sigma2 = {2.5, 2, 2, 3};
    p.rho = {0, 0, 0, 0};
  } else if (name == "VII") {
    p.theta = kThetaHeterogeneous;
    p.sigma2 = {2.5, 2, 2, 3};
    p.rho = {-0.3, -0.3, -0.3, -0.3};
  } else if (name == "VIII") {
    p.theta = kThetaHeterogeneous;
    p.sigma2 = {2.5, 2, 2, 3};
    p.rho = {-0.3, 0.3, -0.3, 0.3};
  } else {
    throw std::invalid_argument("unknown population preset '" + name + "'");
  }
  return p;
}

void validate_population(const PopulationSpec& spec, const SplitPlotDesign& design) {
  const int w_count = design.num_whole_plots();
  const int cells = design.structure.n_cells();
  if (static_cast<int>(spec.theta.size()) != w_count ||
      static_cast<int>(spec.sigma2.size()) != w_count ||
      static_cast<int>(spec.rho.size()) != w_count) {
    throw std::invalid_argument("population parameters must cover every whole plot");
  }
  for (int w = 0; w < w_count; ++w) {
    if (static_cast<int>(spec.theta[w].size()) != cells) {
      throw std::invalid_argument("theta row " + std::to_string(w) +
                                  " must have one mean per treatment combination");
    }
    if (spec.sigma2[w] < 0.0) {
      throw std::domain_error("sigma2 must be nonnegative");
    }
    const double rho = spec.rho[w];
    if (rho > 1.0 || 1.0 + (cells - 1) * rho <= 0.0) {
      throw std::domain_error("covariance for plot " + std::to_string(w) +
                              " is not positive semidefinite: rho = " + std::to_string(rho));
    }
  }
  if (spec.enforce_wp_means && !std::isfinite(*spec.enforce_wp_means)) {
    throw std::domain_error("plot-mean target must be finite");
  }
}

DenseMatrix cholesky_lower(const DenseMatrix& a) {
  const int n = static_cast<int>(a.size());
  DenseMatrix l(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (s <= 0.0) throw std::domain_error("covariance matrix is not positive definite");
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return l;
}

}  // namespace

const std::vector<std::string>& preset_names() { return kPresetNames; }

Preset preset(const std::string& name) {
  PopulationSpec population = population_for(name);  // validates the name first
  SplitPlotDesign design = school_design();
  ContrastSpec contrast = interaction_contrast(design.structure);
  return Preset{name, std::move(design), std::move(contrast), std::move(population)};
}

PotentialOutcomeTable sample_population(const PopulationSpec& spec,
                                        const SplitPlotDesign& design, uint64_t seed,
                                        int replicate) {
  require_valid(design);
  validate_population(spec, design);
  const int cells = design.structure.n_cells();
  const int w_count = design.num_whole_plots();
  Pcg32 rng(seed, static_cast<uint64_t>(replicate));

  std::vector<int> unit_plot;
  unit_plot.reserve(design.num_units());
  std::vector<std::vector<double>> y;
  y.reserve(design.num_units());
  std::vector<double> eps(cells);

  for (int w = 0; w < w_count; ++w) {
    const double sigma = std::sqrt(spec.sigma2[w]);
    const double rho = spec.rho[w];
    DenseMatrix l;
    if (rho < 1.0) {
      DenseMatrix cov(cells, std::vector<double>(cells, spec.sigma2[w] * rho));
      for (int c = 0; c < cells; ++c) cov[c][c] = spec.sigma2[w];
      l = cholesky_lower(cov);
    }
    for (int k = 0; k < design.whole_plot_sizes[w]; ++k) {
      unit_plot.push_back(w);
      std::vector<double> row(cells, 0.0);
      if (rho == 1.0) {
        // Rank-one limit: one shared deviation across all combinations.
        const double shared = sigma * rng.next_normal();
        for (int c = 0; c < cells; ++c) row[c] = spec.theta[w][c] + shared;
      } else {
        for (int c = 0; c < cells; ++c) eps[c] = rng.next_normal();
        for (int c = 0; c < cells; ++c) {
          double v = spec.theta[w][c];
          for (int j = 0; j <= c; ++j) v += l[c][j] * eps[j];
          row[c] = v;
        }
      }
      y.push_back(std::move(row));
    }
  }
  return PotentialOutcomeTable(design, std::move(unit_plot), std::move(y));
}

PotentialOutcomeTable enforce_wp_means(const PotentialOutcomeTable& table,
                                       const ContrastSpec& contrast, double target,
                                       std::optional<int> channel_z1,
                                       std::optional<int> channel_z2) {
  const auto& design = table.design();
  const auto& st = design.structure;
  const int z1 = channel_z1.value_or(st.n_z1() - 1);
  const int z2 = channel_z2.value_or(st.n_z2() - 1);
  const double g = contrast.g(z1, z2);
  if (g == 0.0) {
    throw std::domain_error("adjustment channel (" + level_key(st.z1_levels[z1]) + ", " +
                            level_key(st.z2_levels[z2]) + ") carries zero contrast weight");
  }
  const int cell = st.cell(z1, z2);
  const auto tau_w = whole_plot_contrasts(table, contrast);

  const int n = table.num_units();
  std::vector<int> unit_plot(n);
  std::vector<std::vector<double>> y(n, std::vector<double>(st.n_cells(), 0.0));
  for (int i = 0; i < n; ++i) {
    const int w = table.whole_plot_of(i);
    unit_plot[i] = w;
    const double shift = (target - tau_w[w]) / g;
    for (int c = 0; c < st.n_cells(); ++c) {
      const int cz1 = c / st.n_z2();
      const int cz2 = c % st.n_z2();
      y[i][c] = table.outcome(i, cz1, cz2) + (c == cell ? shift : 0.0);
    }
  }
  return PotentialOutcomeTable(design, std::move(unit_plot), std::move(y));
}

SimulationSettings settings_from_preset(const Preset& p, int replicates, uint64_t seed) {
  SimulationSettings s{p.name, p.design, p.contrast, p.population, replicates, seed, std::nullopt};
  return s;
}

double quantile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

FiveNumber five_number_summary(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summary of empty sample");
  FiveNumber f;
  f.min = *std::min_element(values.begin(), values.end());
  f.max = *std::max_element(values.begin(), values.end());
  f.q1 = quantile_linear(values, 0.25);
  f.median = quantile_linear(values, 0.5);
  f.q3 = quantile_linear(values, 0.75);
  return f;
}

StudyResult run_bias_study(const SimulationSettings& settings) {
  require_valid(settings.design);
  validate_population(settings.population, settings.design);
  if (settings.replicates < 1) throw std::invalid_argument("need at least one replicate");

  BMatrix b = settings.b ? *settings.b : minimax_b(settings.design.whole_plot_sizes);

  StudyResult result{settings.population_name, settings.seed, {}, {}, {}, std::nullopt, 0,
                     std::move(b)};
  result.records.reserve(settings.replicates);

  std::vector<double> deltas, delta_tildes, ratios;
  deltas.reserve(settings.replicates);
  delta_tildes.reserve(settings.replicates);
  for (int rep = 0; rep < settings.replicates; ++rep) {
    PotentialOutcomeTable table =
        sample_population(settings.population, settings.design, settings.seed, rep);
    if (settings.population.enforce_wp_means) {
      table = enforce_wp_means(table, settings.contrast, *settings.population.enforce_wp_means);
    }
    ReplicateRecord rec;
    rec.replicate = rep;
    rec.delta = delta(table, settings.contrast);
    rec.delta_tilde = delta_tilde(table, settings.contrast, result.b);
    if (rec.delta >= 1e-15) {
      rec.ratio = rec.delta_tilde / rec.delta;
      ratios.push_back(*rec.ratio);
    }
    deltas.push_back(rec.delta);
    delta_tildes.push_back(rec.delta_tilde);
    result.records.push_back(rec);
  }

  result.delta_summary = five_number_summary(deltas);
  result.delta_tilde_summary = five_number_summary(delta_tildes);
  result.n_ratio_defined = static_cast<int>(ratios.size());
  if (!ratios.empty()) result.median_ratio = quantile_linear(ratios, 0.5);
  return result;
}

}  // namespace splitplot
