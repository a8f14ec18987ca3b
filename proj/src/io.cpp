#include "splitplot/io.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace splitplot {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

int parse_int_field(const std::string& s) {
  try {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed integer field '" + s + "' in CSV");
  }
}

double parse_double_field(const std::string& s) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed numeric field '" + s + "' in CSV");
  }
}

std::vector<std::vector<int>> levels_from_json(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw std::invalid_argument(std::string("design JSON missing array field '") + field + "'");
  }
  std::vector<std::vector<int>> out;
  for (const auto& lv : j[field]) {
    if (!lv.is_array()) throw std::invalid_argument("level combinations must be arrays");
    std::vector<int> tuple;
    for (const auto& v : lv) tuple.push_back(v.get<int>());
    out.push_back(std::move(tuple));
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::pair<std::string, std::string> split_cell_key(const std::string& key) {
  const auto bar = key.find('|');
  if (bar == std::string::npos) {
    throw std::invalid_argument("treatment combination key '" + key + "' must look like 'z1|z2'");
  }
  return {key.substr(0, bar), key.substr(bar + 1)};
}

int level_index(const std::vector<std::vector<int>>& levels, const std::vector<int>& tuple,
                const std::string& key) {
  for (size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == tuple) return static_cast<int>(i);
  }
  throw std::invalid_argument("unknown level combination '" + key + "'");
}

}  // namespace

SplitPlotDesign design_from_json(const nlohmann::json& j) {
  SplitPlotDesign d;
  d.structure.z1_levels = levels_from_json(j, "z1_levels");
  d.structure.z2_levels = levels_from_json(j, "z2_levels");
  if (!j.contains("whole_plot_sizes") || !j["whole_plot_sizes"].is_array()) {
    throw std::invalid_argument("design JSON missing array field 'whole_plot_sizes'");
  }
  for (const auto& v : j["whole_plot_sizes"]) d.whole_plot_sizes.push_back(v.get<int>());

  if (!j.contains("r1") || !j["r1"].is_object()) {
    throw std::invalid_argument("design JSON missing object field 'r1'");
  }
  d.r1.assign(d.structure.n_z1(), 0);
  std::set<std::string> seen;
  for (const auto& [key, v] : j["r1"].items()) {
    const int idx = level_index(d.structure.z1_levels, parse_level_key(key), key);
    if (!seen.insert(key).second) throw std::invalid_argument("duplicate r1 key '" + key + "'");
    d.r1[idx] = v.get<int>();
  }

  if (!j.contains("r2") || !j["r2"].is_array()) {
    throw std::invalid_argument("design JSON missing array field 'r2'");
  }
  for (const auto& row : j["r2"]) {
    if (!row.is_object()) throw std::invalid_argument("r2 rows must be objects");
    std::vector<int> r2row(d.structure.n_z2(), 0);
    for (const auto& [key, v] : row.items()) {
      const int idx = level_index(d.structure.z2_levels, parse_level_key(key), key);
      r2row[idx] = v.get<int>();
    }
    d.r2.push_back(std::move(r2row));
  }
  require_valid(d);
  return d;
}

nlohmann::ordered_json design_to_json(const SplitPlotDesign& design) {
  nlohmann::ordered_json j;
  j["z1_levels"] = design.structure.z1_levels;
  j["z2_levels"] = design.structure.z2_levels;
  j["whole_plot_sizes"] = design.whole_plot_sizes;
  nlohmann::ordered_json r1;
  for (int z1 = 0; z1 < design.structure.n_z1(); ++z1) {
    r1[level_key(design.structure.z1_levels[z1])] = design.r1[z1];
  }
  j["r1"] = std::move(r1);
  nlohmann::ordered_json r2 = nlohmann::ordered_json::array();
  for (int w = 0; w < design.num_whole_plots(); ++w) {
    nlohmann::ordered_json row;
    for (int z2 = 0; z2 < design.structure.n_z2(); ++z2) {
      row[level_key(design.structure.z2_levels[z2])] = design.r2[w][z2];
    }
    r2.push_back(std::move(row));
  }
  j["r2"] = std::move(r2);
  return j;
}

ContrastSpec contrast_from_json(const nlohmann::json& j, const FactorialStructure& structure) {
  if (!j.contains("g") || !j["g"].is_object()) {
    throw std::invalid_argument("contrast JSON must contain an object field 'g'");
  }
  std::vector<double> g(structure.n_cells(), 0.0);
  for (const auto& [key, v] : j["g"].items()) {
    const auto [k1, k2] = split_cell_key(key);
    const int z1 = level_index(structure.z1_levels, parse_level_key(k1), k1);
    const int z2 = level_index(structure.z2_levels, parse_level_key(k2), k2);
    g[structure.cell(z1, z2)] = v.get<double>();
  }
  return ContrastSpec(structure, std::move(g));
}

nlohmann::ordered_json contrast_to_json(const ContrastSpec& contrast) {
  const auto& st = contrast.structure();
  nlohmann::ordered_json g;
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    for (int z2 = 0; z2 < st.n_z2(); ++z2) {
      g[level_key(st.z1_levels[z1]) + "|" + level_key(st.z2_levels[z2])] = contrast.g(z1, z2);
    }
  }
  nlohmann::ordered_json j;
  j["g"] = std::move(g);
  return j;
}

PotentialOutcomeTable table_from_csv(std::istream& in, const SplitPlotDesign& design) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty science-table CSV");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "unit" || header[1] != "whole_plot") {
    throw std::invalid_argument("science-table CSV must start with columns unit,whole_plot");
  }
  const auto& st = design.structure;
  std::vector<int> col_cell(header.size() - 2, -1);
  std::vector<bool> covered(st.n_cells(), false);
  for (size_t c = 2; c < header.size(); ++c) {
    const auto [k1, k2] = split_cell_key(header[c]);
    const int z1 = level_index(st.z1_levels, parse_level_key(k1), k1);
    const int z2 = level_index(st.z2_levels, parse_level_key(k2), k2);
    col_cell[c - 2] = st.cell(z1, z2);
    covered[st.cell(z1, z2)] = true;
  }
  for (int c = 0; c < st.n_cells(); ++c) {
    if (!covered[c]) {
      throw std::invalid_argument("science-table CSV is missing a treatment combination column");
    }
  }

  const int n = design.num_units();
  std::vector<int> unit_plot(n, -1);
  std::vector<std::vector<double>> y(n, std::vector<double>(st.n_cells(), 0.0));
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::invalid_argument("science-table CSV row has wrong field count");
    }
    const int unit = parse_int_field(fields[0]);
    if (unit < 0 || unit >= n) throw std::invalid_argument("unit index out of range in CSV");
    unit_plot[unit] = parse_int_field(fields[1]);
    for (size_t c = 2; c < fields.size(); ++c) {
      y[unit][col_cell[c - 2]] = parse_double_field(fields[c]);
    }
    ++rows;
  }
  if (rows != n) {
    throw std::invalid_argument("science-table CSV has " + std::to_string(rows) +
                                " rows, expected " + std::to_string(n));
  }
  return PotentialOutcomeTable(design, std::move(unit_plot), std::move(y));
}

void table_to_csv(std::ostream& out, const PotentialOutcomeTable& table) {
  const auto& st = table.design().structure;
  out << "unit,whole_plot";
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    for (int z2 = 0; z2 < st.n_z2(); ++z2) {
      out << ',' << level_key(st.z1_levels[z1]) << '|' << level_key(st.z2_levels[z2]);
    }
  }
  out << '\n';
  for (int i = 0; i < table.num_units(); ++i) {
    out << i << ',' << table.whole_plot_of(i);
    for (int z1 = 0; z1 < st.n_z1(); ++z1) {
      for (int z2 = 0; z2 < st.n_z2(); ++z2) {
        out << ',' << format_double(table.outcome(i, z1, z2));
      }
    }
    out << '\n';
  }
}

namespace {

struct RawObservedRow {
  int unit;
  int whole_plot;
  std::vector<int> z1;
  std::vector<int> z2;
  double y;
};

}  // namespace

ObservedDataset observed_from_csv(std::istream& in,
                                  const std::optional<SplitPlotDesign>& design) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty observed-data CSV");
  const auto header = split_csv_line(line);
  if (header != std::vector<std::string>{"unit", "whole_plot", "z1", "z2", "y"}) {
    throw std::invalid_argument("observed-data CSV must have header unit,whole_plot,z1,z2,y");
  }
  std::vector<RawObservedRow> raw;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) throw std::invalid_argument("observed-data CSV row has wrong field count");
    raw.push_back({parse_int_field(fields[0]), parse_int_field(fields[1]),
                   parse_level_key(fields[2]), parse_level_key(fields[3]),
                   parse_double_field(fields[4])});
  }
  if (raw.empty()) throw std::invalid_argument("observed-data CSV has no rows");

  SplitPlotDesign d;
  if (design) {
    d = *design;
  } else {
    // Infer the design: levels are the sorted distinct tuples, plot sizes the
    // per-plot row counts, and r1/r2 the realized assignment counts.
    std::set<std::vector<int>> z1s, z2s;
    int max_plot = -1;
    for (const auto& r : raw) {
      z1s.insert(r.z1);
      z2s.insert(r.z2);
      max_plot = std::max(max_plot, r.whole_plot);
    }
    d.structure.z1_levels.assign(z1s.begin(), z1s.end());
    d.structure.z2_levels.assign(z2s.begin(), z2s.end());
    const int w_count = max_plot + 1;
    d.whole_plot_sizes.assign(w_count, 0);
    d.r2.assign(w_count, std::vector<int>(d.structure.n_z2(), 0));
    d.r1.assign(d.structure.n_z1(), 0);
    std::vector<int> plot_z1(w_count, -1);
    for (const auto& r : raw) {
      if (r.whole_plot < 0) throw std::invalid_argument("negative whole-plot index in CSV");
      ++d.whole_plot_sizes[r.whole_plot];
      const int z1 = level_index(d.structure.z1_levels, r.z1, level_key(r.z1));
      const int z2 = level_index(d.structure.z2_levels, r.z2, level_key(r.z2));
      ++d.r2[r.whole_plot][z2];
      plot_z1[r.whole_plot] = z1;
    }
    for (int w = 0; w < w_count; ++w) {
      if (plot_z1[w] < 0) throw std::invalid_argument("whole plot " + std::to_string(w) +
                                                      " has no observed rows");
      ++d.r1[plot_z1[w]];
    }
    require_valid(d);
  }

  std::vector<ObservedRow> rows;
  rows.reserve(raw.size());
  for (const auto& r : raw) {
    rows.push_back({r.unit, r.whole_plot,
                    level_index(d.structure.z1_levels, r.z1, level_key(r.z1)),
                    level_index(d.structure.z2_levels, r.z2, level_key(r.z2)), r.y});
  }
  return ObservedDataset(std::move(d), std::move(rows));
}

void observed_to_csv(std::ostream& out, const ObservedDataset& data) {
  const auto& st = data.design().structure;
  out << "unit,whole_plot,z1,z2,y\n";
  for (const auto& r : data.rows()) {
    out << r.unit << ',' << r.whole_plot << ',' << level_key(st.z1_levels[r.z1]) << ','
        << level_key(st.z2_levels[r.z2]) << ',' << format_double(r.y) << '\n';
  }
}

nlohmann::ordered_json bmatrix_to_json(const BMatrix& b, const std::vector<int>& sizes) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["order"] = b.order();
  j["sizes"] = sizes;
  j["entries"] = b.dense();
  j["eigenvalues"] = b.eigenvalues();
  j["lambda_max"] = b.lambda_max();
  j["lambda_lower_bound"] = lambda_lower_bound(sizes);
  nlohmann::ordered_json prov;
  prov["kind"] = to_string(b.provenance());
  if (b.step_params()) {
    prov["x"] = b.step_params()->x;
    prov["a1"] = b.step_params()->a1;
    prov["a2"] = b.step_params()->a2;
    prov["ascending_order"] = b.step_params()->sort_order;
    if (!b.step_params()->search.empty()) prov["search"] = b.step_params()->search;
  }
  j["provenance"] = std::move(prov);
  const auto rep = verify_c1_c2_c3(b, sizes);
  nlohmann::ordered_json checks;
  checks["c1_diagonal"] = rep.c1_diagonal;
  checks["c2_row_sums"] = rep.c2_row_sums;
  checks["psd"] = rep.psd;
  checks["c3_rank"] = rep.c3_rank;
  checks["kernel_contains_ones"] = rep.kernel_contains_ones;
  checks["max_diag_error"] = rep.max_diag_error;
  checks["max_row_sum_abs"] = rep.max_row_sum_abs;
  checks["min_eigenvalue"] = rep.min_eigenvalue;
  checks["second_smallest_eigenvalue"] = rep.second_smallest_eigenvalue;
  j["checks"] = std::move(checks);
  return j;
}

BMatrix bmatrix_from_json(const nlohmann::json& j) {
  if (!j.contains("entries") || !j["entries"].is_array()) {
    throw std::invalid_argument("correction-matrix JSON must contain 'entries'");
  }
  DenseMatrix entries;
  for (const auto& row : j["entries"]) {
    entries.emplace_back();
    for (const auto& v : row) entries.back().push_back(v.get<double>());
  }
  std::vector<int> sizes;
  if (j.contains("sizes")) {
    for (const auto& v : j["sizes"]) sizes.push_back(v.get<int>());
  }
  return BMatrix::from_dense(entries, BProvenance::explicit_entries, sizes);
}

nlohmann::ordered_json estimate_report_to_json(const EstimateReport& report,
                                               const FactorialStructure& structure) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["tau_hat"] = report.tau_hat;
  j["v_hat"] = report.v_hat;
  if (report.v_tilde) j["v_tilde"] = *report.v_tilde;
  if (report.v_tilde_clamped) j["v_tilde_clamped"] = *report.v_tilde_clamped;
  if (report.b_provenance) {
    nlohmann::ordered_json b;
    b["provenance"] = *report.b_provenance;
    b["lambda_max"] = *report.b_lambda_max;
    j["b"] = std::move(b);
  }
  nlohmann::ordered_json means;
  int idx = 0;
  for (int z1 = 0; z1 < structure.n_z1(); ++z1) {
    for (int z2 = 0; z2 < structure.n_z2(); ++z2) {
      means[level_key(structure.z1_levels[z1]) + "|" + level_key(structure.z2_levels[z2])] =
          report.cell_means[idx++];
    }
  }
  j["observed_means"] = std::move(means);
  return j;
}

nlohmann::ordered_json study_result_to_json(const StudyResult& result, int replicates) {
  nlohmann::ordered_json j;
  j["population"] = result.population_name;
  j["replicates"] = replicates;
  j["seed"] = result.seed;
  const auto fivenum = [](const FiveNumber& f) {
    nlohmann::ordered_json s;
    s["min"] = f.min;
    s["q1"] = f.q1;
    s["median"] = f.median;
    s["q3"] = f.q3;
    s["max"] = f.max;
    return s;
  };
  j["delta"] = fivenum(result.delta_summary);
  j["delta_tilde"] = fivenum(result.delta_tilde_summary);
  if (result.median_ratio) {
    j["median_bias_ratio"] = *result.median_ratio;
  } else {
    j["median_bias_ratio"] = nullptr;
  }
  j["n_ratio_defined"] = result.n_ratio_defined;
  j["b_lambda_max"] = result.b.lambda_max();
  return j;
}

void replicates_to_csv(std::ostream& out, const StudyResult& result) {
  out << "replicate,delta,delta_tilde,ratio\n";
  for (const auto& r : result.records) {
    out << r.replicate << ',' << format_double(r.delta) << ',' << format_double(r.delta_tilde)
        << ',';
    if (r.ratio) {
      out << format_double(*r.ratio);
    } else {
      out << "NA";
    }
    out << '\n';
  }
}

void boxplot_to_csv(std::ostream& out, const std::vector<StudyResult>& results) {
  out << "population,estimator,min,q1,median,q3,max\n";
  const auto row = [&out](const std::string& pop, const char* est, const FiveNumber& f) {
    out << pop << ',' << est << ',' << format_double(f.min) << ',' << format_double(f.q1) << ','
        << format_double(f.median) << ',' << format_double(f.q3) << ',' << format_double(f.max)
        << '\n';
  };
  for (const auto& r : results) {
    row(r.population_name, "delta", r.delta_summary);
    row(r.population_name, "delta_tilde", r.delta_tilde_summary);
  }
}

}  // namespace splitplot
