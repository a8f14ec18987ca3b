#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "splitplot/bmatrix.hpp"
#include "splitplot/design.hpp"
#include "splitplot/outcomes.hpp"
#include "splitplot/randomize.hpp"

namespace splitplot {

/// A small, fully enumerable science table plus the contrast (and optional
/// correction matrix) under test.
struct OracleFixture {
  PotentialOutcomeTable table;
  ContrastSpec contrast;
  std::optional<BMatrix> b;
};

/// The two reference designs used for enumeration checks. A is balanced
/// (4 plots of 2 units, 96 assignments); B is unbalanced (plot sizes
/// 2,2,3,3, 216 assignments). Both use two z1 and two z2 combinations with
/// whole-plot replication (2, 2).
SplitPlotDesign oracle_design_a();
SplitPlotDesign oracle_design_b();

/// Fixture with integer outcomes drawn uniformly from {0..9}; combined with
/// exact enumeration this keeps expectations exactly representable up to
/// division rounding. The contrast is the 2x2 interaction when applicable,
/// otherwise first-vs-last combination. `b` is the minimax correction
/// matrix for the design's sizes.
OracleFixture random_integer_fixture(const SplitPlotDesign& design, uint64_t seed,
                                     uint64_t stream);

/// Expectation of a statistic over the full randomization distribution:
/// sum over enumerated assignments of probability times the statistic of
/// the revealed data.
double exact_expectation(const OracleFixture& fixture,
                         const std::function<double(const ObservedDataset&)>& statistic,
                         double guard = 1e7);

/// Exact sampling variance of the point estimator by enumeration (two-pass).
double exact_variance(const OracleFixture& fixture, double guard = 1e7);

struct OracleCheck {
  std::string name;
  double enumerated = 0.0;
  double formula = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  bool pass = false;
};

/// Pass/fail at 1e-9 relative error with a 1e-12 absolute floor.
OracleCheck make_check(const std::string& name, double enumerated, double formula);

/// Unbiasedness of the point estimator: E[tau_hat] vs the estimand.
OracleCheck check_prop1(const OracleFixture& fixture, double guard = 1e7);
/// Enumerated variance vs the closed-form sampling variance.
OracleCheck check_theorem1(const OracleFixture& fixture, double guard = 1e7);
/// E[v_hat] vs variance + delta.
OracleCheck check_theorem2(const OracleFixture& fixture, double guard = 1e7);
/// E[v_tilde] vs variance + delta_tilde; requires the fixture's matrix.
OracleCheck check_theorem3(const OracleFixture& fixture, double guard = 1e7);
/// E[H_{w w*}] vs tau_w tau_w* for one pair of distinct plots.
OracleCheck check_prop2(const OracleFixture& fixture, int w, int ws, double guard = 1e7);

/// Every check above (prop2 over all unordered plot pairs).
std::vector<OracleCheck> run_all_checks(const OracleFixture& fixture, double guard = 1e7);

}  // namespace splitplot
