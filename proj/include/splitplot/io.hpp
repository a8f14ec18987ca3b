#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "splitplot/bmatrix.hpp"
#include "splitplot/design.hpp"
#include "splitplot/estimators.hpp"
#include "splitplot/outcomes.hpp"
#include "splitplot/randomize.hpp"
#include "splitplot/simulation.hpp"

namespace splitplot {

/// Design JSON schema:
///   {"z1_levels": [[...]], "z2_levels": [[...]], "whole_plot_sizes": [...],
///    "r1": {"<level key>": int}, "r2": [{"<level key>": int}, ...]}
/// Keys are hyphen-joined level tuples. Serialization is canonical (fixed
/// key order, keys in declared level order), so load-then-serialize of a
/// canonical document is byte-identical.
SplitPlotDesign design_from_json(const nlohmann::json& j);
nlohmann::ordered_json design_to_json(const SplitPlotDesign& design);

/// Contrast JSON: {"g": {"<z1 key>|<z2 key>": coefficient}}. Combinations
/// missing from the map get coefficient zero.
ContrastSpec contrast_from_json(const nlohmann::json& j, const FactorialStructure& structure);
nlohmann::ordered_json contrast_to_json(const ContrastSpec& contrast);

/// Science-table CSV: header `unit,whole_plot,<one column per combination>`
/// with combination columns labeled "<z1 key>|<z2 key>"; one row per unit.
PotentialOutcomeTable table_from_csv(std::istream& in, const SplitPlotDesign& design);
void table_to_csv(std::ostream& out, const PotentialOutcomeTable& table);

/// Observed-data CSV: header `unit,whole_plot,z1,z2,y`. When no design is
/// supplied it is inferred from the rows: levels are the sorted distinct
/// tuples, plot sizes are row counts, r1/r2 are the realized counts.
ObservedDataset observed_from_csv(std::istream& in,
                                  const std::optional<SplitPlotDesign>& design = std::nullopt);
void observed_to_csv(std::ostream& out, const ObservedDataset& data);

/// Correction-matrix JSON with entries, spectrum, provenance and the
/// verification report against the given sizes.
nlohmann::ordered_json bmatrix_to_json(const BMatrix& b, const std::vector<int>& sizes);
BMatrix bmatrix_from_json(const nlohmann::json& j);

nlohmann::ordered_json estimate_report_to_json(const EstimateReport& report,
                                               const FactorialStructure& structure);

nlohmann::ordered_json study_result_to_json(const StudyResult& result, int replicates);
void replicates_to_csv(std::ostream& out, const StudyResult& result);
void boxplot_to_csv(std::ostream& out, const std::vector<StudyResult>& results);

/// Doubles in CSV output are printed with "%.17g" so values round-trip.
std::string format_double(double v);

}  // namespace splitplot
