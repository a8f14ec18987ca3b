#include "splitplot/design.hpp"

#include <cstdlib>
#include <set>
#include <sstream>
#include <stdexcept>

#include "splitplot/numeric.hpp"

namespace splitplot {

std::string level_key(const std::vector<int>& level) {
  std::string out;
  for (size_t i = 0; i < level.size(); ++i) {
    if (i > 0) out += '-';
    out += std::to_string(level[i]);
  }
  return out;
}

std::vector<int> parse_level_key(const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '-')) {
    size_t pos = 0;
    int v = -1;
    try {
      if (!part.empty()) v = std::stoi(part, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (part.empty() || pos != part.size() || v < 0) {
      throw std::invalid_argument("malformed level key '" + key + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty level key");
  return out;
}

namespace {

void check_level_set(const std::vector<std::vector<int>>& levels, const char* which,
                     std::vector<std::string>& out) {
  if (levels.size() < 2) {
    out.push_back(std::string(which) + " level set must contain at least 2 combinations");
  }
  std::set<std::vector<int>> seen;
  for (const auto& lv : levels) {
    if (!seen.insert(lv).second) {
      out.push_back(std::string(which) + " level set contains duplicate combination " + level_key(lv));
    }
  }
}

}  // namespace

std::vector<std::string> validate_design(const SplitPlotDesign& d) {
  std::vector<std::string> out;
  check_level_set(d.structure.z1_levels, "z1", out);
  check_level_set(d.structure.z2_levels, "z2", out);

  const int w_count = d.num_whole_plots();
  if (w_count < 2) out.push_back("whole-plot count W must be at least 2");
  for (int w = 0; w < w_count; ++w) {
    if (d.whole_plot_sizes[w] < 2) {
      out.push_back("whole-plot size M_" + std::to_string(w) + " must be at least 2");
    }
  }

  if (static_cast<int>(d.r1.size()) != d.structure.n_z1()) {
    out.push_back("r1 must have one entry per z1 combination");
  } else {
    long long sum = 0;
    for (int z1 = 0; z1 < d.structure.n_z1(); ++z1) {
      if (d.r1[z1] < 0) {
        out.push_back("whole-plot replication r1 must be nonnegative for z1 " +
                      level_key(d.structure.z1_levels[z1]));
      }
      sum += d.r1[z1];
    }
    if (sum != w_count) {
      out.push_back("whole-plot replication sum: r1 totals " + std::to_string(sum) +
                    ", expected W = " + std::to_string(w_count));
    }
  }

  if (static_cast<int>(d.r2.size()) != w_count) {
    out.push_back("r2 must have one row per whole plot");
  } else {
    for (int w = 0; w < w_count; ++w) {
      if (static_cast<int>(d.r2[w].size()) != d.structure.n_z2()) {
        out.push_back("r2 row for plot " + std::to_string(w) +
                      " must have one entry per z2 combination");
        continue;
      }
      long long sum = 0;
      for (int z2 = 0; z2 < d.structure.n_z2(); ++z2) {
        if (d.r2[w][z2] < 0) {
          out.push_back("sub-plot replication r2 must be nonnegative (plot " + std::to_string(w) +
                        ", z2 " + level_key(d.structure.z2_levels[z2]) + ")");
        }
        sum += d.r2[w][z2];
      }
      if (w < static_cast<int>(d.whole_plot_sizes.size()) && sum != d.whole_plot_sizes[w]) {
        out.push_back("sub-plot replication sum: plot " + std::to_string(w) + " totals " +
                      std::to_string(sum) + ", expected M = " +
                      std::to_string(d.whole_plot_sizes[w]));
      }
    }
  }
  return out;
}

void require_valid(const SplitPlotDesign& d) {
  const auto violations = validate_design(d);
  if (violations.empty()) return;
  std::string msg = "invalid design:";
  for (const auto& v : violations) msg += "\n  - " + v;
  throw std::invalid_argument(msg);
}

bool is_balanced(const SplitPlotDesign& d) {
  const int w_count = d.num_whole_plots();
  if (w_count == 0) return false;
  for (int w = 1; w < w_count; ++w) {
    if (d.whole_plot_sizes[w] != d.whole_plot_sizes[0]) return false;
  }
  for (int z2 = 0; z2 < d.structure.n_z2(); ++z2) {
    for (int w = 1; w < w_count; ++w) {
      if (d.r2[w][z2] != d.r2[0][z2]) return false;
    }
  }
  return true;
}

double mean_whole_plot_size(const SplitPlotDesign& d) {
  return static_cast<double>(d.num_units()) / static_cast<double>(d.num_whole_plots());
}

ContrastSpec::ContrastSpec(FactorialStructure structure, std::vector<double> coefficients)
    : structure_(std::move(structure)), g_(std::move(coefficients)) {
  if (static_cast<int>(g_.size()) != structure_.n_cells()) {
    throw std::invalid_argument("contrast must supply one coefficient per treatment combination");
  }
  CompensatedSum total;
  bool any_nonzero = false;
  for (double c : g_) {
    total.add(c);
    if (c != 0.0) any_nonzero = true;
  }
  if (!any_nonzero) {
    throw std::invalid_argument("contrast coefficients must not all be zero");
  }
  if (std::abs(total.value()) > 1e-12) {
    throw std::invalid_argument("contrast coefficients must sum to zero (got " +
                                std::to_string(total.value()) + ")");
  }
}

}  // namespace splitplot
