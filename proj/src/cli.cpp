#include "splitplot/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitplot/bmatrix.hpp"
#include "splitplot/estimators.hpp"
#include "splitplot/io.hpp"
#include "splitplot/oracle.hpp"
#include "splitplot/simulation.hpp"

namespace splitplot {

namespace {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j;
}

void emit(const nlohmann::ordered_json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    std::ofstream f(out_path);
    if (!f) throw std::invalid_argument("cannot write '" + out_path + "'");
    f << j.dump(2) << '\n';
  }
}

std::vector<int> parse_sizes(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    out.push_back(std::stoi(part));
  }
  if (out.empty()) throw std::invalid_argument("--sizes must list at least one integer");
  return out;
}

std::vector<int> parse_signs(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    const int v = std::stoi(part);
    if (v != 1 && v != -1) throw std::invalid_argument("--x entries must be 1 or -1");
    out.push_back(v);
  }
  return out;
}

struct ConstructBOptions {
  std::string sizes_csv;
  std::string design_path;
  std::string mode = "minimax";
  std::string x_csv;
  double a1 = 0.0;
  double a2 = 0.0;
  std::string out_path;
};

int run_construct_b(const ConstructBOptions& opt, std::ostream& out) {
  std::vector<int> sizes;
  if (!opt.design_path.empty()) {
    sizes = design_from_json(load_json_file(opt.design_path)).whole_plot_sizes;
  } else if (!opt.sizes_csv.empty()) {
    sizes = parse_sizes(opt.sizes_csv);
  } else {
    throw std::invalid_argument("construct-b needs --sizes or --design");
  }

  nlohmann::ordered_json j;
  if (opt.mode == "minimax") {
    j = bmatrix_to_json(minimax_b(sizes), sizes);
  } else if (opt.mode == "balanced") {
    for (int m : sizes) {
      if (m != sizes[0]) {
        throw std::invalid_argument("balanced mode requires equal whole-plot sizes");
      }
    }
    j = bmatrix_to_json(b_balanced(sizes[0], static_cast<int>(sizes.size())), sizes);
  } else if (opt.mode == "three") {
    if (sizes.size() != 3) throw std::invalid_argument("three mode requires exactly 3 sizes");
    j = bmatrix_to_json(b_three(sizes[0], sizes[1], sizes[2]), sizes);
  } else if (opt.mode == "naive") {
    auto [b, psd] = b_naive(sizes);
    j = bmatrix_to_json(b, sizes);
    j["psd"] = psd;
  } else if (opt.mode == "steps") {
    if (opt.x_csv.empty()) throw std::invalid_argument("steps mode requires --x");
    j = bmatrix_to_json(assemble_b(parse_signs(opt.x_csv), opt.a1, opt.a2, sizes), sizes);
  } else {
    throw std::invalid_argument("unknown mode '" + opt.mode + "'");
  }
  j["mode"] = opt.mode;
  emit(j, opt.out_path, out);
  return 0;
}

struct AnalyzeOptions {
  std::string data_path;
  std::string contrast_path;
  std::string design_path;
  std::string b_path;
  std::string b_mode = "none";
  bool clamp = false;
  std::string out_path;
};

int run_analyze(const AnalyzeOptions& opt, std::ostream& out) {
  std::optional<SplitPlotDesign> design;
  if (!opt.design_path.empty()) design = design_from_json(load_json_file(opt.design_path));
  std::ifstream data_in(opt.data_path);
  if (!data_in) throw std::invalid_argument("cannot open '" + opt.data_path + "'");
  const ObservedDataset data = observed_from_csv(data_in, design);
  const ContrastSpec contrast =
      contrast_from_json(load_json_file(opt.contrast_path), data.design().structure);

  std::optional<BMatrix> b;
  if (!opt.b_path.empty()) {
    b = bmatrix_from_json(load_json_file(opt.b_path));
  } else if (opt.b_mode == "minimax") {
    b = minimax_b(data.design().whole_plot_sizes);
  } else if (opt.b_mode == "balanced") {
    const auto& sizes = data.design().whole_plot_sizes;
    for (int m : sizes) {
      if (m != sizes[0]) {
        throw std::invalid_argument("balanced mode requires equal whole-plot sizes");
      }
    }
    b = b_balanced(sizes[0], data.design().num_whole_plots());
  } else if (opt.b_mode == "naive") {
    b = b_naive(data.design().whole_plot_sizes).first;
  } else if (opt.b_mode != "none") {
    throw std::invalid_argument("unknown --b-mode '" + opt.b_mode + "'");
  }

  const EstimateReport rep = analyze(data, contrast, b ? &*b : nullptr, opt.clamp);
  emit(estimate_report_to_json(rep, data.design().structure), opt.out_path, out);
  return 0;
}

struct OracleOptions {
  std::string design = "B";
  int fixtures = 20;
  uint64_t seed = kDefaultSeed;
  double guard = 1e7;
  std::string out_path;
};

int run_oracle(const OracleOptions& opt, std::ostream& out) {
  SplitPlotDesign design;
  if (opt.design == "A") {
    design = oracle_design_a();
  } else if (opt.design == "B") {
    design = oracle_design_b();
  } else {
    design = design_from_json(load_json_file(opt.design));
  }

  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["design"] = opt.design;
  j["seed"] = opt.seed;
  j["assignments"] = enumeration_count(design);
  bool all_pass = true;
  nlohmann::ordered_json fixtures = nlohmann::ordered_json::array();
  for (int k = 0; k < opt.fixtures; ++k) {
    const OracleFixture fixture = random_integer_fixture(design, opt.seed, k);
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const auto& c : run_all_checks(fixture, opt.guard)) {
      nlohmann::ordered_json cj;
      cj["name"] = c.name;
      cj["enumerated"] = c.enumerated;
      cj["formula"] = c.formula;
      cj["abs_err"] = c.abs_err;
      cj["rel_err"] = c.rel_err;
      cj["pass"] = c.pass;
      all_pass = all_pass && c.pass;
      checks.push_back(std::move(cj));
    }
    nlohmann::ordered_json fj;
    fj["index"] = k;
    fj["checks"] = std::move(checks);
    fixtures.push_back(std::move(fj));
  }
  j["fixtures"] = std::move(fixtures);
  j["all_pass"] = all_pass;
  emit(j, opt.out_path, out);
  return 0;
}

struct SimulateOptions {
  std::string presets_csv;
  std::string config_path;
  int replicates = 200;
  uint64_t seed = kDefaultSeed;
  std::string out_dir;
};

SimulationSettings settings_from_config(const nlohmann::json& cfg, int replicates,
                                        uint64_t seed) {
  SplitPlotDesign design =
      cfg.contains("design") ? design_from_json(cfg["design"]) : school_design();
  ContrastSpec contrast = cfg.contains("contrast")
                              ? contrast_from_json(cfg["contrast"], design.structure)
                              : interaction_contrast(design.structure);
  if (!cfg.contains("population")) {
    throw std::invalid_argument("simulate config must contain 'population'");
  }
  const auto& p = cfg["population"];
  PopulationSpec population;
  for (const auto& row : p.at("theta")) {
    population.theta.emplace_back();
    for (const auto& v : row) population.theta.back().push_back(v.get<double>());
  }
  for (const auto& v : p.at("sigma2")) population.sigma2.push_back(v.get<double>());
  for (const auto& v : p.at("rho")) population.rho.push_back(v.get<double>());
  if (p.contains("enforce_wp_means") && !p["enforce_wp_means"].is_null()) {
    population.enforce_wp_means = p["enforce_wp_means"].get<double>();
  }
  return SimulationSettings{cfg.value("name", "custom"), std::move(design), std::move(contrast),
                            std::move(population),       replicates,        seed,
                            std::nullopt};
}

int run_simulate(const SimulateOptions& opt, std::ostream& out) {
  std::vector<SimulationSettings> runs;
  if (!opt.config_path.empty()) {
    runs.push_back(settings_from_config(load_json_file(opt.config_path), opt.replicates,
                                        opt.seed));
  } else {
    std::vector<std::string> names;
    if (opt.presets_csv.empty() || opt.presets_csv == "all") {
      names = preset_names();
    } else {
      std::stringstream ss(opt.presets_csv);
      std::string part;
      while (std::getline(ss, part, ',')) {
        if (!part.empty()) names.push_back(part);
      }
    }
    for (const auto& name : names) {
      runs.push_back(settings_from_preset(preset(name), opt.replicates, opt.seed));
    }
  }
  if (runs.empty()) throw std::invalid_argument("simulate needs --preset or --config");

  const std::filesystem::path dir = opt.out_dir.empty() ? "." : opt.out_dir;
  std::filesystem::create_directories(dir);

  std::vector<StudyResult> results;
  nlohmann::ordered_json populations = nlohmann::ordered_json::array();
  for (const auto& settings : runs) {
    StudyResult result = run_bias_study(settings);
    const std::string rep_name = runs.size() == 1
                                     ? "replicates.csv"
                                     : "replicates_" + result.population_name + ".csv";
    std::ofstream rep_out(dir / rep_name);
    if (!rep_out) throw std::invalid_argument("cannot write replicates CSV");
    replicates_to_csv(rep_out, result);
    populations.push_back(study_result_to_json(result, settings.replicates));
    results.push_back(std::move(result));
  }
  {
    std::ofstream box(dir / "boxplot.csv");
    if (!box) throw std::invalid_argument("cannot write boxplot.csv");
    boxplot_to_csv(box, results);
  }
  nlohmann::ordered_json summary;
  summary["schema_version"] = 1;
  summary["seed"] = opt.seed;
  summary["replicates"] = opt.replicates;
  summary["quartile_method"] = "linear interpolation of order statistics (inclusive)";
  summary["populations"] = std::move(populations);
  {
    std::ofstream sj(dir / "summary.json");
    if (!sj) throw std::invalid_argument("cannot write summary.json");
    sj << summary.dump(2) << '\n';
  }
  out << "wrote " << (dir / "summary.json").string() << '\n';
  return 0;
}

int run_presets(const std::string& out_path, std::ostream& out) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const auto& name : preset_names()) {
    const Preset p = preset(name);
    nlohmann::ordered_json pj;
    pj["name"] = p.name;
    pj["theta"] = p.population.theta;
    pj["sigma2"] = p.population.sigma2;
    pj["rho"] = p.population.rho;
    if (p.population.enforce_wp_means) {
      pj["enforce_wp_means"] = *p.population.enforce_wp_means;
    } else {
      pj["enforce_wp_means"] = nullptr;
    }
    items.push_back(std::move(pj));
  }
  j["presets"] = std::move(items);
  emit(j, out_path, out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"randomization inference for possibly-unbalanced split-plot experiments"};
  app.require_subcommand(1);

  ConstructBOptions cb;
  auto* sc_cb = app.add_subcommand("construct-b", "build a variance-correction matrix");
  sc_cb->add_option("--sizes", cb.sizes_csv, "comma-separated whole-plot sizes");
  sc_cb->add_option("--design", cb.design_path, "design JSON (sizes are taken from it)");
  sc_cb->add_option("--mode", cb.mode, "balanced|three|naive|minimax|steps")
      ->check(CLI::IsMember({"balanced", "three", "naive", "minimax", "steps"}));
  sc_cb->add_option("--x", cb.x_csv, "sign vector for steps mode, e.g. 1,1,-1");
  sc_cb->add_option("--a1", cb.a1, "first constant for steps mode");
  sc_cb->add_option("--a2", cb.a2, "second constant for steps mode");
  sc_cb->add_option("--out", cb.out_path, "output JSON path (default stdout)");

  AnalyzeOptions an;
  auto* sc_an = app.add_subcommand("analyze", "estimate a contrast from observed data");
  sc_an->add_option("--data", an.data_path, "observed-data CSV")->required();
  sc_an->add_option("--contrast", an.contrast_path, "contrast JSON")->required();
  sc_an->add_option("--design", an.design_path, "design JSON (otherwise inferred from data)");
  sc_an->add_option("--b", an.b_path, "correction-matrix JSON");
  sc_an->add_option("--b-mode", an.b_mode, "none|minimax|balanced|naive")
      ->check(CLI::IsMember({"none", "minimax", "balanced", "naive"}));
  sc_an->add_flag("--clamp", an.clamp, "also report max(v_tilde, 0)");
  sc_an->add_option("--out", an.out_path, "output JSON path (default stdout)");

  OracleOptions oc;
  auto* sc_oc = app.add_subcommand("oracle", "enumeration checks of the estimator identities");
  sc_oc->add_option("--design", oc.design, "A, B, or a design JSON path");
  sc_oc->add_option("--fixtures", oc.fixtures, "number of random tables")
      ->check(CLI::PositiveNumber);
  sc_oc->add_option("--seed", oc.seed, "RNG seed");
  sc_oc->add_option("--guard", oc.guard, "maximum number of assignments to enumerate");
  sc_oc->add_option("--out", oc.out_path, "output JSON path (default stdout)");

  SimulateOptions sim;
  auto* sc_sim = app.add_subcommand("simulate", "bias study of the two variance estimators");
  sc_sim->add_option("--preset", sim.presets_csv, "population preset(s): I..VIII, comma list, or 'all'");
  sc_sim->add_option("--config", sim.config_path, "custom study config JSON");
  sc_sim->add_option("--replicates", sim.replicates, "tables per population")
      ->check(CLI::PositiveNumber);
  sc_sim->add_option("--seed", sim.seed, "RNG seed");
  sc_sim->add_option("--out", sim.out_dir, "output directory (default .)");

  std::string presets_out;
  auto* sc_pr = app.add_subcommand("presets", "print the simulation population table");
  sc_pr->add_option("--out", presets_out, "output JSON path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (sc_cb->parsed()) return run_construct_b(cb, out);
    if (sc_an->parsed()) return run_analyze(an, out);
    if (sc_oc->parsed()) return run_oracle(oc, out);
    if (sc_sim->parsed()) return run_simulate(sim, out);
    if (sc_pr->parsed()) return run_presets(presets_out, out);
    err << "error: no subcommand given\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace splitplot
