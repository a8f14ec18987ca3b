#include "splitplot/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "splitplot/numeric.hpp"

namespace splitplot {

namespace {

void check_structure(const ObservedDataset& data, const ContrastSpec& contrast) {
  const auto& a = data.design().structure;
  const auto& b = contrast.structure();
  if (a.n_z1() != b.n_z1() || a.n_z2() != b.n_z2()) {
    throw std::invalid_argument("contrast and design factorial structures differ");
  }
}

double adjusted_plot_obs_mean(const ObservedDataset& data, int w, int z2) {
  const double ratio =
      data.design().whole_plot_sizes[w] / mean_whole_plot_size(data.design());
  return ratio * ybar_w_obs(data, w, z2);
}

}  // namespace

double ybar_w_obs(const ObservedDataset& data, int w, int z2) {
  const auto& d = data.design();
  if (w < 0 || w >= d.num_whole_plots()) {
    throw std::domain_error("unknown whole plot " + std::to_string(w));
  }
  if (z2 < 0 || z2 >= d.structure.n_z2()) {
    throw std::domain_error("unknown z2 index " + std::to_string(z2));
  }
  const auto& ys = data.ys(w, z2);
  if (ys.empty()) {
    throw std::domain_error("no observed units for z2 " + level_key(d.structure.z2_levels[z2]) +
                            " in whole plot " + std::to_string(w));
  }
  return compensated_mean(ys);
}

double ybar_obs(const ObservedDataset& data, int z1, int z2) {
  const auto& d = data.design();
  if (z1 < 0 || z1 >= d.structure.n_z1()) {
    throw std::domain_error("unknown z1 index " + std::to_string(z1));
  }
  const auto& plots = data.plots_assigned(z1);
  if (plots.empty()) {
    throw std::domain_error("z1 " + level_key(d.structure.z1_levels[z1]) +
                            " is not assigned to any whole plot");
  }
  const double n = d.num_units();
  const double w_count = d.num_whole_plots();
  CompensatedSum s;
  for (int w : plots) s.add(d.whole_plot_sizes[w] * ybar_w_obs(data, w, z2));
  return w_count / (n * plots.size()) * s.value();
}

double point_estimate(const ObservedDataset& data, const ContrastSpec& contrast) {
  check_structure(data, contrast);
  const auto& st = data.design().structure;
  CompensatedSum s;
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    for (int z2 = 0; z2 < st.n_z2(); ++z2) {
      const double g = contrast.g(z1, z2);
      if (g != 0.0) s.add(g * ybar_obs(data, z1, z2));
    }
  }
  return s.value();
}

double s_hat(const ObservedDataset& data, int z1, int z2, int z2s) {
  const auto& d = data.design();
  if (z1 < 0 || z1 >= d.structure.n_z1()) {
    throw std::domain_error("unknown z1 index " + std::to_string(z1));
  }
  const auto& plots = data.plots_assigned(z1);
  const int r1 = static_cast<int>(plots.size());
  if (r1 < 2) {
    throw std::domain_error("variance not estimable at whole-plot level: z1 " +
                            level_key(d.structure.z1_levels[z1]) + " has replication " +
                            std::to_string(r1));
  }
  std::vector<double> ua(r1), ub(r1);
  for (int k = 0; k < r1; ++k) {
    ua[k] = adjusted_plot_obs_mean(data, plots[k], z2);
    ub[k] = adjusted_plot_obs_mean(data, plots[k], z2s);
  }
  const double ma = compensated_mean(ua);
  const double mb = compensated_mean(ub);
  CompensatedSum s;
  for (int k = 0; k < r1; ++k) s.add((ua[k] - ma) * (ub[k] - mb));
  return s.value() / (r1 - 1);
}

double v_hat(const ObservedDataset& data, const ContrastSpec& contrast) {
  check_structure(data, contrast);
  const auto& st = data.design().structure;
  CompensatedSum total;
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    bool any = false;
    for (int z2 = 0; z2 < st.n_z2(); ++z2) any = any || contrast.g(z1, z2) != 0.0;
    if (!any) continue;
    const auto& plots = data.plots_assigned(z1);
    if (plots.size() < 2) {
      throw std::domain_error("variance not estimable at whole-plot level: z1 " +
                              level_key(st.z1_levels[z1]) + " has replication " +
                              std::to_string(plots.size()) + " but carries contrast weight");
    }
    const double r1 = static_cast<double>(plots.size());
    for (int z2 = 0; z2 < st.n_z2(); ++z2) {
      const double ga = contrast.g(z1, z2);
      if (ga == 0.0) continue;
      for (int z2s = 0; z2s < st.n_z2(); ++z2s) {
        const double gb = contrast.g(z1, z2s);
        if (gb == 0.0) continue;
        total.add(ga * gb / r1 * s_hat(data, z1, z2, z2s));
      }
    }
  }
  return total.value();
}

double g_w_obs(const ObservedDataset& data, const ContrastSpec& contrast, int w) {
  check_structure(data, contrast);
  const auto& st = data.design().structure;
  if (w < 0 || w >= data.design().num_whole_plots()) {
    throw std::domain_error("unknown whole plot " + std::to_string(w));
  }
  const int z1 = data.plot_z1(w);
  CompensatedSum s;
  for (int z2 = 0; z2 < st.n_z2(); ++z2) {
    const double g = contrast.g(z1, z2);
    if (g != 0.0) s.add(g * ybar_w_obs(data, w, z2));
  }
  return s.value();
}

double h_ww(const ObservedDataset& data, const ContrastSpec& contrast, int w, int ws) {
  if (w == ws) {
    throw std::domain_error("plot-contrast products are only estimable for distinct plots");
  }
  const auto& d = data.design();
  const double w_count = d.num_whole_plots();
  const int z1a = data.plot_z1(w);
  const int z1b = data.plot_z1(ws);
  const double r1a = static_cast<double>(d.r1[z1a]);
  const double r1b = static_cast<double>(d.r1[z1b]);
  const double delta_same = (z1a == z1b) ? 1.0 : 0.0;
  const double denom = r1a * (r1b - delta_same);
  if (denom <= 0.0) {
    throw std::domain_error("plot-contrast product undefined: insufficient replication");
  }
  return w_count * (w_count - 1.0) * g_w_obs(data, contrast, w) * g_w_obs(data, contrast, ws) /
         denom;
}

double v_tilde(const ObservedDataset& data, const ContrastSpec& contrast, const BMatrix& b) {
  const auto& d = data.design();
  const int w_count = d.num_whole_plots();
  if (b.order() != w_count) {
    throw std::domain_error("correction matrix order does not match the design");
  }
  double max_m2 = 1.0;
  for (int w = 0; w < w_count; ++w) {
    const double m2 = static_cast<double>(d.whole_plot_sizes[w]) * d.whole_plot_sizes[w];
    max_m2 = std::max(max_m2, m2);
  }
  for (int w = 0; w < w_count; ++w) {
    const double m2 = static_cast<double>(d.whole_plot_sizes[w]) * d.whole_plot_sizes[w];
    if (std::abs(b.entry(w, w) - m2) > 1e-9 * max_m2) {
      throw std::domain_error("correction matrix diagonal does not equal the squared plot sizes");
    }
  }

  const double n = static_cast<double>(d.num_units());
  std::vector<double> gw(w_count);
  for (int w = 0; w < w_count; ++w) gw[w] = g_w_obs(data, contrast, w);

  CompensatedSum corr;
  for (int w = 0; w < w_count; ++w) {
    for (int ws = 0; ws < w_count; ++ws) {
      if (w == ws) continue;
      const double coeff =
          b.entry(w, ws) + static_cast<double>(d.whole_plot_sizes[w]) * d.whole_plot_sizes[ws] /
                               (static_cast<double>(w_count) - 1.0);
      if (coeff == 0.0) continue;
      corr.add(coeff * h_ww(data, contrast, w, ws));
    }
  }
  return v_hat(data, contrast) + corr.value() / (n * n);
}

EstimateReport analyze(const ObservedDataset& data, const ContrastSpec& contrast,
                       const BMatrix* b, bool clamp) {
  check_structure(data, contrast);
  EstimateReport rep;
  rep.tau_hat = point_estimate(data, contrast);
  rep.v_hat = v_hat(data, contrast);
  if (rep.v_hat < -1e-12 * std::max(1.0, std::abs(rep.tau_hat))) {
    throw std::logic_error("internal error: baseline variance estimate came out negative");
  }
  const auto& st = data.design().structure;
  rep.cell_means.reserve(st.n_cells());
  for (int z1 = 0; z1 < st.n_z1(); ++z1) {
    for (int z2 = 0; z2 < st.n_z2(); ++z2) rep.cell_means.push_back(ybar_obs(data, z1, z2));
  }
  if (b != nullptr) {
    rep.v_tilde = v_tilde(data, contrast, *b);
    if (clamp) rep.v_tilde_clamped = std::max(0.0, *rep.v_tilde);
    rep.b_provenance = to_string(b->provenance());
    rep.b_lambda_max = b->lambda_max();
  }
  return rep;
}

}  // namespace splitplot
