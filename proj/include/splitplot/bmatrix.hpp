#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace splitplot {

using DenseMatrix = std::vector<std::vector<double>>;

struct EigenResult {
  std::vector<double> values;        // ascending
  DenseMatrix vectors;               // vectors[k] is the eigenvector for values[k]
};

/// Eigendecomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Sweeps run until the off-diagonal Frobenius norm falls below
/// 1e-12 of its initial value. Throws std::domain_error when the input is
/// not symmetric (asymmetry above 1e-12 of the largest entry magnitude).
EigenResult eigen_sym(const DenseMatrix& a, bool with_vectors = true);

enum class BProvenance { balanced, three_plot, naive_extension, constructed, explicit_entries };

std::string to_string(BProvenance p);

/// Parameters of the two-step construction behind a `constructed` matrix.
/// `x`, `a1`, `a2` refer to the ascending-size ordering; `sort_order[k]` is
/// the original position of the k-th smallest size. `search` records whether
/// the sign-vector search was exhaustive or used the constructive fallback.
struct BStepParams {
  std::vector<int> x;
  double a1 = 0.0;
  double a2 = 0.0;
  std::vector<int> sort_order;
  std::string search;
};

/// Symmetric W x W correction matrix with its spectral decomposition.
/// Only the upper triangle is stored, so symmetry is exact by construction.
/// Matrices with provenance balanced / three_plot / constructed are verified
/// at construction to satisfy: diagonal equal to the squared plot sizes,
/// zero row sums, and positive semidefiniteness of rank W-1.
class BMatrix {
 public:
  static BMatrix from_dense(const DenseMatrix& entries, BProvenance provenance,
                            const std::vector<int>& sizes,
                            std::optional<BStepParams> steps = std::nullopt);

  int order() const noexcept { return w_; }
  double entry(int i, int j) const {
    return i <= j ? upper_[index(i, j)] : upper_[index(j, i)];
  }
  DenseMatrix dense() const;

  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  const DenseMatrix& eigenvectors() const noexcept { return eigenvectors_; }
  double lambda_max() const noexcept { return eigenvalues_.back(); }

  BProvenance provenance() const noexcept { return provenance_; }
  const std::optional<BStepParams>& step_params() const noexcept { return steps_; }
  const std::vector<int>& sizes() const noexcept { return sizes_; }

 private:
  BMatrix() = default;
  int index(int i, int j) const { return i * w_ - i * (i - 1) / 2 + (j - i); }

  int w_ = 0;
  std::vector<double> upper_;
  std::vector<double> eigenvalues_;
  DenseMatrix eigenvectors_;
  BProvenance provenance_ = BProvenance::explicit_entries;
  std::optional<BStepParams> steps_;
  std::vector<int> sizes_;
};

/// Existence test for a correction matrix: with the sizes sorted ascending,
/// a valid matrix exists iff the largest size is strictly below the sum of
/// the others. Requires W >= 3 (throws std::domain_error otherwise).
bool exists_b(const std::vector<int>& sizes);

/// Equal-size matrix: diagonal M^2, off-diagonal -M^2/(W-1).
BMatrix b_balanced(int size, int w);

/// W = 3 case, where the diagonal and zero-row-sum requirements determine the
/// matrix uniquely. Throws std::domain_error when the existence condition
/// fails (largest size at least the sum of the other two).
BMatrix b_three(int m1, int m2, int m3);

/// Direct extension of the three-plot formula to general W. Not guaranteed
/// positive semidefinite; the returned flag reports whether it is (smallest
/// eigenvalue at least -1e-9 of the trace).
std::pair<BMatrix, bool> b_naive(const std::vector<int>& sizes);

/// All +/-1 vectors x of length W-1 with last entry +1 (the two sign classes
/// coincide) such that |mu'x| < M_W, where mu holds the W-1 smallest sizes.
/// Requires ascending sizes that are not all equal. Exhaustive for
/// W-1 <= 20; beyond that a constructive walk returns a single witness.
std::vector<std::vector<int>> find_sign_vectors(const std::vector<int>& ascending_sizes);

/// Constructive single-witness procedure (always succeeds for ascending,
/// not-all-equal sizes); exposed separately so it can be tested directly.
std::vector<int> constructive_sign_vector(const std::vector<int>& ascending_sizes);

/// The feasible (a1, a2) pairs for a given sign vector form a segment of the
/// line a1*phi1 + a2*phi2 = phi inside {a1, a2 >= 0, a1 + a2 < 1}. The open
/// constraint is clipped by an interior margin of 1e-9.
struct ASegment {
  double a1_start, a2_start;
  double a1_end, a2_end;
  double phi1, phi2, phi;
  std::pair<double, double> at(double t) const {
    return {a1_start + t * (a1_end - a1_start), a2_start + t * (a2_end - a2_start)};
  }
};

ASegment solve_a_segment(const std::vector<int>& x, const std::vector<int>& ascending_sizes);

/// Assemble the correction matrix from construction parameters:
///   A = D (a1 xx' + a2 ee' + (1 - a1 - a2) I) D,  D = diag(M_1..M_{W-1})
///   B = [[A, -Ae], [-e'A, e'Ae]]
/// Sizes must be ascending. The result is verified; failure raises
/// std::logic_error since it indicates a construction bug.
BMatrix assemble_b(const std::vector<int>& x, double a1, double a2,
                   const std::vector<int>& ascending_sizes);

struct BCheckReport {
  bool c1_diagonal = false;
  bool c2_row_sums = false;
  bool psd = false;
  bool c3_rank = false;
  bool kernel_contains_ones = false;
  double max_diag_error = 0.0;
  double max_row_sum_abs = 0.0;
  double min_eigenvalue = 0.0;
  double second_smallest_eigenvalue = 0.0;
  double kernel_residual = 0.0;
  bool all_pass() const {
    return c1_diagonal && c2_row_sums && psd && c3_rank && kernel_contains_ones;
  }
};

/// Checks, against the given sizes: diagonal equal to M_w^2 and row sums zero
/// (both to 1e-9 of max M^2), positive semidefiniteness (smallest eigenvalue
/// >= -1e-9 of trace), rank W-1 (second-smallest eigenvalue > 1e-8 of trace),
/// and that the all-ones vector lies in the kernel (|Be| <= 1e-9 of trace).
BCheckReport verify_c1_c2_c3(const BMatrix& b, const std::vector<int>& sizes);

/// Minimizer of the largest eigenvalue over the construction family: every
/// admissible sign vector, and along each one the full feasible (a1, a2)
/// segment (golden-section line search, 60 iterations, then a 1e-6 grid
/// polish; ties broken toward the lexicographically smallest sign vector).
/// Equal sizes short-circuit to b_balanced. Throws std::domain_error when no
/// valid matrix exists. Sizes may be given in any order; the result is
/// permuted back to the caller's ordering.
BMatrix minimax_b(const std::vector<int>& sizes);

/// Lower bound sum(M_w^2)/(W-1) for the largest eigenvalue of any valid
/// correction matrix; attained only when all sizes are equal.
double lambda_lower_bound(const std::vector<int>& sizes);

}  // namespace splitplot
