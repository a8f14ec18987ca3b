#include "splitplot/randomize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "splitplot/rng.hpp"

namespace splitplot {

std::vector<std::vector<int>> t1_sets(const Assignment& assignment, int n_z1) {
  std::vector<std::vector<int>> out(n_z1);
  for (int w = 0; w < static_cast<int>(assignment.plot_z1.size()); ++w) {
    const int z1 = assignment.plot_z1[w];
    if (z1 < 0 || z1 >= n_z1) throw std::domain_error("assignment references unknown z1 index");
    out[z1].push_back(w);
  }
  return out;
}

namespace {

void shuffle_in_place(std::vector<int>& xs, Pcg32& rng) {
  for (int i = static_cast<int>(xs.size()) - 1; i >= 1; --i) {
    std::swap(xs[i], xs[rng.bounded(static_cast<uint32_t>(i + 1))]);
  }
}

}  // namespace

Assignment draw_assignment(const SplitPlotDesign& design, uint64_t seed, uint64_t stream) {
  require_valid(design);
  Pcg32 rng(seed, stream);
  const int w_count = design.num_whole_plots();

  Assignment out;
  out.plot_z1.assign(w_count, -1);
  std::vector<int> plots(w_count);
  std::iota(plots.begin(), plots.end(), 0);
  shuffle_in_place(plots, rng);
  int pos = 0;
  for (int z1 = 0; z1 < design.structure.n_z1(); ++z1) {
    for (int k = 0; k < design.r1[z1]; ++k) out.plot_z1[plots[pos++]] = z1;
  }

  out.slot_z2.resize(w_count);
  for (int w = 0; w < w_count; ++w) {
    const int m = design.whole_plot_sizes[w];
    std::vector<int> slots(m);
    std::iota(slots.begin(), slots.end(), 0);
    shuffle_in_place(slots, rng);
    out.slot_z2[w].assign(m, -1);
    int at = 0;
    for (int z2 = 0; z2 < design.structure.n_z2(); ++z2) {
      for (int k = 0; k < design.r2[w][z2]; ++k) out.slot_z2[w][slots[at++]] = z2;
    }
  }
  return out;
}

namespace {

void check_assignment_shape(const SplitPlotDesign& design, const Assignment& a) {
  const int w_count = design.num_whole_plots();
  if (static_cast<int>(a.plot_z1.size()) != w_count ||
      static_cast<int>(a.slot_z2.size()) != w_count) {
    throw std::domain_error("assignment inconsistent with design: wrong number of whole plots");
  }
  std::vector<int> z1_counts(design.structure.n_z1(), 0);
  for (int z1 : a.plot_z1) {
    if (z1 < 0 || z1 >= design.structure.n_z1()) {
      throw std::domain_error("assignment inconsistent with design: unknown z1 index");
    }
    ++z1_counts[z1];
  }
  for (int z1 = 0; z1 < design.structure.n_z1(); ++z1) {
    if (z1_counts[z1] != design.r1[z1]) {
      throw std::domain_error("assignment inconsistent with design: z1 " +
                              level_key(design.structure.z1_levels[z1]) + " assigned to " +
                              std::to_string(z1_counts[z1]) + " plots, expected " +
                              std::to_string(design.r1[z1]));
    }
  }
  for (int w = 0; w < w_count; ++w) {
    if (static_cast<int>(a.slot_z2[w].size()) != design.whole_plot_sizes[w]) {
      throw std::domain_error("assignment inconsistent with design: plot " + std::to_string(w) +
                              " slot count differs from its size");
    }
    std::vector<int> z2_counts(design.structure.n_z2(), 0);
    for (int z2 : a.slot_z2[w]) {
      if (z2 < 0 || z2 >= design.structure.n_z2()) {
        throw std::domain_error("assignment inconsistent with design: unknown z2 index");
      }
      ++z2_counts[z2];
    }
    for (int z2 = 0; z2 < design.structure.n_z2(); ++z2) {
      if (z2_counts[z2] != design.r2[w][z2]) {
        throw std::domain_error("assignment inconsistent with design: plot " + std::to_string(w) +
                                " gives z2 " + level_key(design.structure.z2_levels[z2]) + " to " +
                                std::to_string(z2_counts[z2]) + " units, expected " +
                                std::to_string(design.r2[w][z2]));
      }
    }
  }
}

}  // namespace

ObservedDataset::ObservedDataset(SplitPlotDesign design, std::vector<ObservedRow> rows)
    : design_(std::move(design)), rows_(std::move(rows)) {
  require_valid(design_);
  const int n = design_.num_units();
  const int w_count = design_.num_whole_plots();
  if (static_cast<int>(rows_.size()) != n) {
    throw std::invalid_argument("observed data must have one row per unit");
  }
  std::sort(rows_.begin(), rows_.end(),
            [](const ObservedRow& a, const ObservedRow& b) { return a.unit < b.unit; });

  plot_z1_.assign(w_count, -1);
  group_ys_.assign(w_count, std::vector<std::vector<double>>(design_.structure.n_z2()));
  std::vector<int> plot_unit_counts(w_count, 0);
  for (int i = 0; i < n; ++i) {
    const auto& r = rows_[i];
    if (r.unit != i) {
      throw std::invalid_argument("observed units must be exactly 0.." + std::to_string(n - 1));
    }
    if (r.whole_plot < 0 || r.whole_plot >= w_count) {
      throw std::invalid_argument("row for unit " + std::to_string(i) +
                                  " references unknown whole plot");
    }
    if (r.z1 < 0 || r.z1 >= design_.structure.n_z1() || r.z2 < 0 ||
        r.z2 >= design_.structure.n_z2()) {
      throw std::invalid_argument("row for unit " + std::to_string(i) +
                                  " references unknown treatment combination");
    }
    if (plot_z1_[r.whole_plot] == -1) {
      plot_z1_[r.whole_plot] = r.z1;
    } else if (plot_z1_[r.whole_plot] != r.z1) {
      throw std::invalid_argument("whole plot " + std::to_string(r.whole_plot) +
                                  " mixes z1 assignments");
    }
    ++plot_unit_counts[r.whole_plot];
    group_ys_[r.whole_plot][r.z2].push_back(r.y);
  }
  for (int w = 0; w < w_count; ++w) {
    if (plot_unit_counts[w] != design_.whole_plot_sizes[w]) {
      throw std::invalid_argument("whole plot " + std::to_string(w) + " has " +
                                  std::to_string(plot_unit_counts[w]) + " rows, expected " +
                                  std::to_string(design_.whole_plot_sizes[w]));
    }
    for (int z2 = 0; z2 < design_.structure.n_z2(); ++z2) {
      if (static_cast<int>(group_ys_[w][z2].size()) != design_.r2[w][z2]) {
        throw std::invalid_argument("whole plot " + std::to_string(w) + " observed " +
                                    std::to_string(group_ys_[w][z2].size()) + " units at z2 " +
                                    level_key(design_.structure.z2_levels[z2]) + ", expected " +
                                    std::to_string(design_.r2[w][z2]));
      }
    }
  }

  t1_.assign(design_.structure.n_z1(), {});
  std::vector<int> z1_counts(design_.structure.n_z1(), 0);
  for (int w = 0; w < w_count; ++w) {
    t1_[plot_z1_[w]].push_back(w);
    ++z1_counts[plot_z1_[w]];
  }
  for (int z1 = 0; z1 < design_.structure.n_z1(); ++z1) {
    if (z1_counts[z1] != design_.r1[z1]) {
      throw std::invalid_argument("z1 " + level_key(design_.structure.z1_levels[z1]) +
                                  " observed on " + std::to_string(z1_counts[z1]) +
                                  " plots, expected " + std::to_string(design_.r1[z1]));
    }
  }
}

ObservedDataset observe(const PotentialOutcomeTable& table, const Assignment& assignment) {
  const auto& design = table.design();
  check_assignment_shape(design, assignment);
  std::vector<ObservedRow> rows;
  rows.reserve(table.num_units());
  for (int w = 0; w < design.num_whole_plots(); ++w) {
    const auto& roster = table.units_in_plot(w);
    const int z1 = assignment.plot_z1[w];
    for (int k = 0; k < static_cast<int>(roster.size()); ++k) {
      const int unit = roster[k];
      const int z2 = assignment.slot_z2[w][k];
      rows.push_back({unit, w, z1, z2, table.outcome(unit, z1, z2)});
    }
  }
  return ObservedDataset(design, std::move(rows));
}

namespace {

double multinomial(int total, const std::vector<int>& groups) {
  // Product of binomial coefficients, each computed exactly in doubles for
  // the sizes seen here.
  double result = 1.0;
  int remaining = total;
  for (int g : groups) {
    for (int k = 1; k <= g; ++k) {
      result *= static_cast<double>(remaining - g + k) / static_cast<double>(k);
    }
    remaining -= g;
  }
  return std::round(result);
}

}  // namespace

double enumeration_count(const SplitPlotDesign& design) {
  require_valid(design);
  double count = multinomial(design.num_whole_plots(), design.r1);
  for (int w = 0; w < design.num_whole_plots(); ++w) {
    count *= multinomial(design.whole_plot_sizes[w], design.r2[w]);
  }
  return count;
}

AssignmentEnumerator::AssignmentEnumerator(const SplitPlotDesign& design, double guard)
    : design_(design) {
  require_valid(design_);
  count_ = enumeration_count(design_);
  if (count_ > guard) {
    std::ostringstream msg;
    msg << "refusing to enumerate " << count_ << " assignments (guard " << guard << ")";
    throw std::domain_error(msg.str());
  }
  reset();
}

void AssignmentEnumerator::reset() {
  stage1_.clear();
  for (int z1 = 0; z1 < design_.structure.n_z1(); ++z1) {
    stage1_.insert(stage1_.end(), design_.r1[z1], z1);
  }
  stage2_.assign(design_.num_whole_plots(), {});
  for (int w = 0; w < design_.num_whole_plots(); ++w) {
    for (int z2 = 0; z2 < design_.structure.n_z2(); ++z2) {
      stage2_[w].insert(stage2_[w].end(), design_.r2[w][z2], z2);
    }
  }
  exhausted_ = false;
  started_ = false;
}

std::optional<Assignment> AssignmentEnumerator::next() {
  if (exhausted_) return std::nullopt;
  if (started_) {
    // Advance the odometer: the last stage spins fastest. next_permutation
    // over an initially sorted labeling visits each distinct labeling once,
    // and wrapping back to sorted order carries into the previous stage.
    int stage = design_.num_whole_plots() - 1;
    bool advanced = false;
    while (stage >= -1) {
      auto& labels = (stage >= 0) ? stage2_[stage] : stage1_;
      if (std::next_permutation(labels.begin(), labels.end())) {
        advanced = true;
        break;
      }
      --stage;
    }
    if (!advanced) {
      exhausted_ = true;
      return std::nullopt;
    }
  }
  started_ = true;
  Assignment a;
  a.plot_z1 = stage1_;
  a.slot_z2 = stage2_;
  return a;
}

}  // namespace splitplot
