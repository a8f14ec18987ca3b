#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splitplot/bmatrix.hpp"
#include "splitplot/design.hpp"
#include "splitplot/randomize.hpp"

namespace splitplot {

/// Mean observed outcome of the (plot, z2) group. The plot's assigned z1 is
/// implicit. Throws std::domain_error when the group is empty.
double ybar_w_obs(const ObservedDataset& data, int w, int z2);

/// Size-weighted treatment-combination mean:
///   (W / (N r1(z1))) sum over assigned plots of M_w * plot mean.
double ybar_obs(const ObservedDataset& data, int z1, int z2);

/// The point estimate: sum over treatment combinations of g times ybar_obs.
/// Every combination with nonzero weight must be observable.
double point_estimate(const ObservedDataset& data, const ContrastSpec& contrast);

/// Sample covariance, over the plots assigned to z1, of the plot means of
/// adjusted observed outcomes at z2 and z2*, with divisor r1(z1) - 1.
/// Requires r1(z1) >= 2.
double s_hat(const ObservedDataset& data, int z1, int z2, int z2s);

/// Baseline variance estimate: the triple sum of g g / r1 times s_hat.
/// Nonnegative on every realization; conservative in expectation.
double v_hat(const ObservedDataset& data, const ContrastSpec& contrast);

/// Plot-level observed contrast at the plot's assigned z1.
double g_w_obs(const ObservedDataset& data, const ContrastSpec& contrast, int w);

/// Unbiased estimator of the product of plot-level contrasts for two
/// distinct plots: W(W-1) G_w G_w* / (r1(z1w) (r1(z1w*) - [z1w == z1w*])).
double h_ww(const ObservedDataset& data, const ContrastSpec& contrast, int w, int ws);

/// Corrected variance estimate: v_hat plus the off-diagonal correction built
/// from the matrix B, whose diagonal must equal the squared plot sizes.
/// Individual realizations may be negative; the value is reported raw.
double v_tilde(const ObservedDataset& data, const ContrastSpec& contrast, const BMatrix& b);

struct EstimateReport {
  double tau_hat = 0.0;
  double v_hat = 0.0;
  std::optional<double> v_tilde;
  std::optional<double> v_tilde_clamped;  // max(v_tilde, 0), on request
  std::optional<std::string> b_provenance;
  std::optional<double> b_lambda_max;
  std::vector<double> cell_means;  // ybar_obs per treatment combination
};

/// Bundles the point estimate, variance estimates and per-combination
/// diagnostics. `b` enables the corrected estimate; `clamp` additionally
/// reports max(v_tilde, 0).
EstimateReport analyze(const ObservedDataset& data, const ContrastSpec& contrast,
                       const BMatrix* b = nullptr, bool clamp = false);

}  // namespace splitplot
