#include "splitplot/bmatrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "splitplot/numeric.hpp"

namespace splitplot {

namespace {

double off_diagonal_norm(const DenseMatrix& a) {
  const int n = static_cast<int>(a.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) s += a[i][j] * a[i][j];
    }
  }
  return std::sqrt(s);
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (const auto& row : a) {
    for (double v : row) s += v * v;
  }
  return std::sqrt(s);
}

std::string sizes_to_string(const std::vector<int>& sizes) {
  std::string out = "(";
  for (size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(sizes[i]);
  }
  return out + ")";
}

void require_positive_sizes(const std::vector<int>& sizes) {
  for (int m : sizes) {
    if (m < 1) throw std::invalid_argument("whole-plot sizes must be positive");
  }
}

void require_ascending(const std::vector<int>& sizes) {
  if (!std::is_sorted(sizes.begin(), sizes.end())) {
    throw std::invalid_argument("sizes must be in ascending order");
  }
}

bool all_equal(const std::vector<int>& sizes) {
  return std::adjacent_find(sizes.begin(), sizes.end(), std::not_equal_to<>()) == sizes.end();
}

}  // namespace

EigenResult eigen_sym(const DenseMatrix& a, bool with_vectors) {
  const int n = static_cast<int>(a.size());
  if (n == 0) throw std::domain_error("eigen_sym: empty matrix");
  double max_abs = 0.0;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(a[i].size()) != n) throw std::domain_error("eigen_sym: matrix not square");
    for (int j = 0; j < n; ++j) max_abs = std::max(max_abs, std::abs(a[i][j]));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(a[i][j] - a[j][i]) > 1e-12 * std::max(1.0, max_abs)) {
        throw std::domain_error("eigen_sym: matrix not symmetric");
      }
    }
  }

  DenseMatrix m = a;
  DenseMatrix v;
  if (with_vectors) {
    v.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) v[i][i] = 1.0;  // v[i][k]: component i of eigenvector k
  }

  const double off0 = off_diagonal_norm(m);
  const double target = 1e-12 * off0;
  if (off0 > 0.0) {
    bool converged = false;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
      for (int p = 0; p < n - 1; ++p) {
        for (int q = p + 1; q < n; ++q) {
          const double apq = m[p][q];
          if (apq == 0.0) continue;
          const double theta = (m[q][q] - m[p][p]) / (2.0 * apq);
          double t;
          if (std::abs(theta) > 1e150) {
            t = 1.0 / (2.0 * theta);
          } else {
            t = ((theta >= 0.0) ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          }
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          const double tau = s / (1.0 + c);

          m[p][p] -= t * apq;
          m[q][q] += t * apq;
          m[p][q] = 0.0;
          m[q][p] = 0.0;
          for (int i = 0; i < n; ++i) {
            if (i == p || i == q) continue;
            const double aip = m[i][p];
            const double aiq = m[i][q];
            m[i][p] = aip - s * (aiq + tau * aip);
            m[p][i] = m[i][p];
            m[i][q] = aiq + s * (aip - tau * aiq);
            m[q][i] = m[i][q];
          }
          if (with_vectors) {
            for (int i = 0; i < n; ++i) {
              const double vip = v[i][p];
              const double viq = v[i][q];
              v[i][p] = vip - s * (viq + tau * vip);
              v[i][q] = viq + s * (vip - tau * viq);
            }
          }
        }
      }
      converged = off_diagonal_norm(m) <= target;
    }
    if (!converged && off_diagonal_norm(m) > 1e-10 * std::max(off0, 1.0)) {
      throw std::runtime_error("eigen_sym: Jacobi sweeps failed to converge");
    }
  }

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int i, int j) { return m[i][i] < m[j][j]; });

  EigenResult out;
  out.values.resize(n);
  for (int k = 0; k < n; ++k) out.values[k] = m[idx[k]][idx[k]];
  if (with_vectors) {
    out.vectors.assign(n, std::vector<double>(n, 0.0));
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) out.vectors[k][i] = v[i][idx[k]];
    }
  }

  double trace = 0.0;
  for (int i = 0; i < n; ++i) trace += a[i][i];
  CompensatedSum eig_sum;
  for (double lam : out.values) eig_sum.add(lam);
  const double tol = 1e-9 * std::max({std::abs(trace), frobenius_norm(a), 1e-30});
  if (std::abs(eig_sum.value() - trace) > tol) {
    throw std::runtime_error("eigen_sym: eigenvalue sum drifted from trace");
  }
  return out;
}

std::string to_string(BProvenance p) {
  switch (p) {
    case BProvenance::balanced: return "balanced";
    case BProvenance::three_plot: return "three_plot";
    case BProvenance::naive_extension: return "naive_extension";
    case BProvenance::constructed: return "constructed";
    case BProvenance::explicit_entries: return "explicit";
  }
  return "unknown";
}

BMatrix BMatrix::from_dense(const DenseMatrix& entries, BProvenance provenance,
                            const std::vector<int>& sizes, std::optional<BStepParams> steps) {
  const int n = static_cast<int>(entries.size());
  if (n < 2) throw std::domain_error("correction matrix must have order at least 2");
  double max_abs = 0.0;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(entries[i].size()) != n) {
      throw std::domain_error("correction matrix must be square");
    }
    for (int j = 0; j < n; ++j) max_abs = std::max(max_abs, std::abs(entries[i][j]));
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(entries[i][j] - entries[j][i]) > 1e-12 * std::max(1.0, max_abs)) {
        throw std::domain_error("correction matrix must be symmetric");
      }
    }
  }
  if (!sizes.empty() && static_cast<int>(sizes.size()) != n) {
    throw std::invalid_argument("sizes must match the matrix order");
  }

  BMatrix b;
  b.w_ = n;
  b.upper_.reserve(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) b.upper_.push_back(entries[i][j]);
  }
  auto eig = eigen_sym(entries, true);
  b.eigenvalues_ = std::move(eig.values);
  b.eigenvectors_ = std::move(eig.vectors);
  b.provenance_ = provenance;
  b.steps_ = std::move(steps);
  b.sizes_ = sizes;

  const bool must_verify = provenance == BProvenance::balanced ||
                           provenance == BProvenance::three_plot ||
                           provenance == BProvenance::constructed;
  if (must_verify) {
    if (sizes.empty()) throw std::invalid_argument("constructed matrices require their sizes");
    if (!verify_c1_c2_c3(b, sizes).all_pass()) {
      throw std::logic_error("internal error: constructed correction matrix failed verification");
    }
    // At most W-1 nonzero eigenvalues share the whole trace, so the largest
    // one can never fall below trace/(W-1).
    double trace = 0.0;
    for (int i = 0; i < n; ++i) trace += entries[i][i];
    if (b.lambda_max() < trace / (n - 1) - 1e-9 * std::abs(trace)) {
      throw std::logic_error("internal error: largest eigenvalue below its spectral floor");
    }
  }
  return b;
}

DenseMatrix BMatrix::dense() const {
  DenseMatrix out(w_, std::vector<double>(w_, 0.0));
  for (int i = 0; i < w_; ++i) {
    for (int j = 0; j < w_; ++j) out[i][j] = entry(i, j);
  }
  return out;
}

bool exists_b(const std::vector<int>& sizes) {
  if (sizes.size() < 3) {
    throw std::domain_error("existence test requires at least 3 whole plots");
  }
  require_positive_sizes(sizes);
  long long total = 0;
  long long biggest = 0;
  for (int m : sizes) {
    total += m;
    biggest = std::max<long long>(biggest, m);
  }
  return biggest < total - biggest;
}

BMatrix b_balanced(int size, int w) {
  if (w < 2) throw std::invalid_argument("balanced matrix requires at least 2 whole plots");
  if (size < 1) throw std::invalid_argument("whole-plot sizes must be positive");
  const double m2 = static_cast<double>(size) * size;
  const double off = -m2 / static_cast<double>(w - 1);
  DenseMatrix d(w, std::vector<double>(w, off));
  for (int i = 0; i < w; ++i) d[i][i] = m2;
  return BMatrix::from_dense(d, BProvenance::balanced, std::vector<int>(w, size));
}

BMatrix b_three(int m1, int m2, int m3) {
  const std::vector<int> sizes = {m1, m2, m3};
  require_positive_sizes(sizes);
  if (!exists_b(sizes)) {
    std::vector<int> s = sizes;
    std::sort(s.begin(), s.end());
    throw std::domain_error("no positive semidefinite completion for sizes " +
                            sizes_to_string(sizes) + ": largest size " + std::to_string(s[2]) +
                            " is not below " + std::to_string(s[0] + s[1]) +
                            ", the sum of the others");
  }
  // b_ij = (M_k^2 - M_i^2 - M_j^2)/2 with k the remaining index; this form is
  // permutation-equivariant so no sorting is needed.
  const double sq[3] = {static_cast<double>(m1) * m1, static_cast<double>(m2) * m2,
                        static_cast<double>(m3) * m3};
  DenseMatrix d(3, std::vector<double>(3, 0.0));
  for (int i = 0; i < 3; ++i) d[i][i] = sq[i];
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const int k = 3 - i - j;
      d[i][j] = d[j][i] = 0.5 * (sq[k] - sq[i] - sq[j]);
    }
  }
  return BMatrix::from_dense(d, BProvenance::three_plot, sizes);
}

std::pair<BMatrix, bool> b_naive(const std::vector<int>& sizes) {
  const int w = static_cast<int>(sizes.size());
  if (w < 3) throw std::invalid_argument("naive extension requires at least 3 whole plots");
  require_positive_sizes(sizes);
  std::vector<double> sq(w);
  double total_sq = 0.0;
  for (int i = 0; i < w; ++i) {
    sq[i] = static_cast<double>(sizes[i]) * sizes[i];
    total_sq += sq[i];
  }
  DenseMatrix d(w, std::vector<double>(w, 0.0));
  for (int i = 0; i < w; ++i) d[i][i] = sq[i];
  const double shared = total_sq / (static_cast<double>(w - 1) * (w - 2));
  for (int i = 0; i < w; ++i) {
    for (int j = i + 1; j < w; ++j) {
      d[i][j] = d[j][i] = shared - (sq[i] + sq[j]) / static_cast<double>(w - 2);
    }
  }
  BMatrix b = BMatrix::from_dense(d, BProvenance::naive_extension, sizes);
  double trace = 0.0;
  for (int i = 0; i < w; ++i) trace += sq[i];
  const bool psd = b.eigenvalues().front() >= -1e-9 * trace;
  return {std::move(b), psd};
}

std::vector<int> constructive_sign_vector(const std::vector<int>& sizes) {
  require_ascending(sizes);
  if (all_equal(sizes)) throw std::invalid_argument("sign vector requires unequal sizes");
  const int w = static_cast<int>(sizes.size());
  if (w < 3) throw std::invalid_argument("sign vector requires at least 3 whole plots");
  const int n = w - 1;
  std::vector<int> x(n, 0);

  // h pairs of maximal sizes at the top cancel each other.
  int h = 0;
  while (w - 3 - 2 * h >= 1 && sizes[w - 3 - 2 * h] == sizes[w - 1]) ++h;
  for (int j = w - 1 - h; j <= w - 2; ++j) x[j] = 1;
  for (int j = w - 1 - 2 * h; j <= w - 2 - h; ++j) x[j] = -1;

  const int free_len = w - 1 - 2 * h;  // indices 0 .. free_len-1 remain
  if (free_len == 1) {
    x[0] = 1;
  } else {
    std::vector<long long> prefix(free_len + 1, 0);
    for (int i = 0; i < free_len; ++i) prefix[i + 1] = prefix[i] + sizes[i];
    const long long total = prefix[free_len];
    int k1 = -1;
    for (int k = 0; k <= free_len - 2; ++k) {
      if (prefix[k + 1] <= total - prefix[k + 1]) k1 = k;
    }
    if (k1 < 0) throw std::logic_error("internal error: no balanced split point found");
    if (k1 == free_len - 2) {
      for (int i = 0; i < free_len - 1; ++i) x[i] = -1;
      x[free_len - 1] = 1;
    } else {
      const long long diff1 = (total - prefix[k1 + 1]) - prefix[k1 + 1];
      if (diff1 < sizes[w - 1]) {
        for (int i = 0; i <= k1; ++i) x[i] = -1;
        for (int i = k1 + 1; i < free_len; ++i) x[i] = 1;
      } else {
        const long long diff2 = std::llabs(prefix[k1 + 2] - (total - prefix[k1 + 2]));
        if (diff2 >= sizes[w - 1]) {
          throw std::logic_error("internal error: split walk produced no witness");
        }
        for (int i = 0; i <= k1 + 1; ++i) x[i] = -1;
        for (int i = k1 + 2; i < free_len; ++i) x[i] = 1;
      }
    }
  }

  long long dot = 0;
  for (int i = 0; i < n; ++i) dot += static_cast<long long>(sizes[i]) * x[i];
  if (std::llabs(dot) >= sizes[w - 1] || x[n - 1] != 1) {
    throw std::logic_error("internal error: constructive sign vector failed its contract");
  }
  return x;
}

std::vector<std::vector<int>> find_sign_vectors(const std::vector<int>& sizes) {
  require_ascending(sizes);
  require_positive_sizes(sizes);
  if (all_equal(sizes)) {
    throw std::invalid_argument("sign-vector search requires unequal sizes (equal sizes use the balanced matrix)");
  }
  const int w = static_cast<int>(sizes.size());
  if (w < 3) throw std::invalid_argument("sign-vector search requires at least 3 whole plots");
  const int n = w - 1;

  if (n > 20) return {constructive_sign_vector(sizes)};

  std::vector<std::vector<int>> out;
  const uint64_t limit = 1ULL << (n - 1);
  for (uint64_t bits = 0; bits < limit; ++bits) {
    std::vector<int> x(n, 1);
    long long dot = sizes[n - 1];  // x[n-1] fixed at +1
    for (int i = 0; i < n - 1; ++i) {
      // high bit drives x[0] so the enumeration is lexicographic with -1 < +1
      const int sign = (bits >> (n - 2 - i)) & 1u ? 1 : -1;
      x[i] = sign;
      dot += static_cast<long long>(sizes[i]) * sign;
    }
    if (std::llabs(dot) < sizes[w - 1]) out.push_back(std::move(x));
  }
  return out;
}

ASegment solve_a_segment(const std::vector<int>& x, const std::vector<int>& sizes) {
  require_ascending(sizes);
  require_positive_sizes(sizes);
  const int w = static_cast<int>(sizes.size());
  if (w < 3) throw std::invalid_argument("segment solve requires at least 3 whole plots");
  const int n = w - 1;
  if (static_cast<int>(x.size()) != n) {
    throw std::invalid_argument("sign vector length must be one below the number of plots");
  }
  long long dot_x = 0, dot_e = 0, dot_mu = 0;
  for (int i = 0; i < n; ++i) {
    if (x[i] != 1 && x[i] != -1) throw std::invalid_argument("sign vector entries must be +1 or -1");
    dot_x += static_cast<long long>(sizes[i]) * x[i];
    dot_e += sizes[i];
    dot_mu += static_cast<long long>(sizes[i]) * sizes[i];
  }
  const long long mw = sizes[w - 1];
  if (std::llabs(dot_x) >= mw) {
    throw std::domain_error("sign vector does not satisfy |mu'x| < M_W");
  }
  if (mw >= dot_e) {
    throw std::domain_error("no feasible constants: largest whole-plot size " + std::to_string(mw) +
                            " is not below " + std::to_string(dot_e) + ", the sum of the others");
  }

  ASegment seg;
  seg.phi1 = static_cast<double>(dot_x) * dot_x - static_cast<double>(dot_mu);
  seg.phi2 = static_cast<double>(dot_e) * dot_e - static_cast<double>(dot_mu);
  seg.phi = static_cast<double>(mw) * mw - static_cast<double>(dot_mu);

  double lo = 0.0;
  double hi = (seg.phi2 - seg.phi) / (seg.phi2 - seg.phi1) - 1e-9;  // interior margin
  if (seg.phi1 < 0.0) {
    lo = std::max(lo, seg.phi / seg.phi1);
  } else if (seg.phi1 > 0.0) {
    hi = std::min(hi, seg.phi / seg.phi1);
  }
  if (hi < lo) hi = lo;
  const auto a2_of = [&seg](double a1) {
    return std::max(0.0, (seg.phi - a1 * seg.phi1) / seg.phi2);
  };
  seg.a1_start = lo;
  seg.a2_start = a2_of(lo);
  seg.a1_end = hi;
  seg.a2_end = a2_of(hi);

  for (double t : {0.0, 1.0}) {
    const auto [a1, a2] = seg.at(t);
    if (a1 < -1e-12 || a2 < -1e-12 || a1 + a2 >= 1.0 ||
        std::abs(a1 * seg.phi1 + a2 * seg.phi2 - seg.phi) >
            1e-9 * std::max({1.0, std::abs(seg.phi), std::abs(seg.phi2)})) {
      throw std::logic_error("internal error: empty feasible segment");
    }
  }
  return seg;
}

namespace {

DenseMatrix build_construction_dense(const std::vector<int>& x, double a1, double a2,
                                     const std::vector<int>& sizes) {
  const int w = static_cast<int>(sizes.size());
  const int n = w - 1;
  DenseMatrix b(w, std::vector<double>(w, 0.0));
  const double a0 = 1.0 - a1 - a2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double core = a1 * x[i] * x[j] + a2;
      if (i == j) core += a0;
      b[i][j] = static_cast<double>(sizes[i]) * sizes[j] * core;
    }
  }
  for (int i = 0; i < n; ++i) {
    CompensatedSum row;
    for (int j = 0; j < n; ++j) row.add(b[i][j]);
    b[i][n] = -row.value();
    b[n][i] = b[i][n];
  }
  CompensatedSum corner;
  for (int i = 0; i < n; ++i) corner.add(-b[i][n]);
  b[n][n] = corner.value();
  return b;
}

double lambda_max_of_construction(const std::vector<int>& x, double a1, double a2,
                                  const std::vector<int>& sizes) {
  return eigen_sym(build_construction_dense(x, a1, a2, sizes), false).values.back();
}

}  // namespace

BMatrix assemble_b(const std::vector<int>& x, double a1, double a2,
                   const std::vector<int>& sizes) {
  require_ascending(sizes);
  require_positive_sizes(sizes);
  const int w = static_cast<int>(sizes.size());
  if (w < 3) throw std::invalid_argument("assembly requires at least 3 whole plots");
  if (static_cast<int>(x.size()) != w - 1) {
    throw std::invalid_argument("sign vector length must be one below the number of plots");
  }
  for (int xi : x) {
    if (xi != 1 && xi != -1) throw std::invalid_argument("sign vector entries must be +1 or -1");
  }
  if (a1 < 0.0 || a2 < 0.0 || a1 + a2 >= 1.0) {
    throw std::domain_error("constants must satisfy a1 >= 0, a2 >= 0, a1 + a2 < 1");
  }
  long long dot_x = 0, dot_e = 0, dot_mu = 0;
  for (int i = 0; i < w - 1; ++i) {
    dot_x += static_cast<long long>(sizes[i]) * x[i];
    dot_e += sizes[i];
    dot_mu += static_cast<long long>(sizes[i]) * sizes[i];
  }
  const double phi1 = static_cast<double>(dot_x) * dot_x - static_cast<double>(dot_mu);
  const double phi2 = static_cast<double>(dot_e) * dot_e - static_cast<double>(dot_mu);
  const double phi = static_cast<double>(sizes[w - 1]) * sizes[w - 1] - static_cast<double>(dot_mu);
  const double mw2 = static_cast<double>(sizes[w - 1]) * sizes[w - 1];
  if (std::abs(a1 * phi1 + a2 * phi2 - phi) > 1e-10 * std::max(1.0, mw2)) {
    throw std::domain_error("constants do not satisfy the defining equation for the corner entry");
  }

  BStepParams steps;
  steps.x = x;
  steps.a1 = a1;
  steps.a2 = a2;
  steps.sort_order.resize(w);
  std::iota(steps.sort_order.begin(), steps.sort_order.end(), 0);
  return BMatrix::from_dense(build_construction_dense(x, a1, a2, sizes),
                             BProvenance::constructed, sizes, std::move(steps));
}

BCheckReport verify_c1_c2_c3(const BMatrix& b, const std::vector<int>& sizes) {
  const int w = b.order();
  if (static_cast<int>(sizes.size()) != w) {
    throw std::invalid_argument("sizes must match the matrix order");
  }
  BCheckReport rep;
  double max_m2 = 0.0;
  double trace = 0.0;
  for (int i = 0; i < w; ++i) {
    const double m2 = static_cast<double>(sizes[i]) * sizes[i];
    max_m2 = std::max(max_m2, m2);
    trace += b.entry(i, i);
    rep.max_diag_error = std::max(rep.max_diag_error, std::abs(b.entry(i, i) - m2));
  }
  const double tr = std::max(std::abs(trace), 1e-300);

  double kernel_sq = 0.0;
  for (int i = 0; i < w; ++i) {
    CompensatedSum row;
    for (int j = 0; j < w; ++j) row.add(b.entry(i, j));
    const double rs = row.value();
    rep.max_row_sum_abs = std::max(rep.max_row_sum_abs, std::abs(rs));
    kernel_sq += rs * rs;
  }
  rep.kernel_residual = std::sqrt(kernel_sq);

  const auto& eig = b.eigenvalues();
  rep.min_eigenvalue = eig.front();
  rep.second_smallest_eigenvalue = eig.size() > 1 ? eig[1] : eig[0];

  rep.c1_diagonal = rep.max_diag_error <= 1e-9 * std::max(1.0, max_m2);
  rep.c2_row_sums = rep.max_row_sum_abs <= 1e-9 * std::max(1.0, max_m2);
  rep.psd = rep.min_eigenvalue >= -1e-9 * tr;
  rep.c3_rank = rep.second_smallest_eigenvalue > 1e-8 * tr;
  rep.kernel_contains_ones = rep.kernel_residual <= 1e-9 * tr;
  return rep;
}

double lambda_lower_bound(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::domain_error("lower bound requires at least 2 whole plots");
  require_positive_sizes(sizes);
  double s = 0.0;
  for (int m : sizes) s += static_cast<double>(m) * m;
  return s / static_cast<double>(sizes.size() - 1);
}

BMatrix minimax_b(const std::vector<int>& sizes) {
  const int w = static_cast<int>(sizes.size());
  if (w < 2) throw std::invalid_argument("need at least 2 whole plots");
  require_positive_sizes(sizes);

  if (all_equal(sizes)) return b_balanced(sizes[0], w);

  if (w < 3 || !exists_b(sizes)) {
    std::vector<int> s = sizes;
    std::sort(s.begin(), s.end());
    long long rest = 0;
    for (int i = 0; i < w - 1; ++i) rest += s[i];
    throw std::domain_error("no valid correction matrix exists for sizes " +
                            sizes_to_string(sizes) + ": largest whole-plot size " +
                            std::to_string(s[w - 1]) + " must be below " + std::to_string(rest) +
                            ", the sum of the others");
  }

  std::vector<int> order(w);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return sizes[i] < sizes[j]; });
  std::vector<int> sorted(w);
  for (int k = 0; k < w; ++k) sorted[k] = sizes[order[k]];

  const auto candidates = find_sign_vectors(sorted);
  const std::string search = (w - 1 <= 20) ? "exhaustive" : "constructive";

  struct Best {
    double lambda = std::numeric_limits<double>::infinity();
    std::vector<int> x;
    double a1 = 0.0, a2 = 0.0;
    double t = 0.0;
  } best;

  constexpr double inv_phi = 0.6180339887498949;
  for (const auto& x : candidates) {
    const ASegment seg = solve_a_segment(x, sorted);
    const auto lambda_at = [&](double t) {
      const auto [a1, a2] = seg.at(t);
      return lambda_max_of_construction(x, a1, a2, sorted);
    };

    // Golden-section line search; lambda_max is convex along the affine
    // family, so it is unimodal on the segment.
    double lo = 0.0, hi = 1.0;
    double c = hi - inv_phi * (hi - lo);
    double d = lo + inv_phi * (hi - lo);
    double fc = lambda_at(c);
    double fd = lambda_at(d);
    for (int it = 0; it < 60; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - inv_phi * (hi - lo);
        fc = lambda_at(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + inv_phi * (hi - lo);
        fd = lambda_at(d);
      }
    }
    double t_min = (fc < fd) ? c : d;
    double f_min = std::min(fc, fd);

    // Grid polish around the optimum, plus the exact segment endpoints.
    std::vector<double> ts = {0.0, 1.0};
    for (int k = -50; k <= 50; ++k) {
      const double t = t_min + 1e-6 * k;
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
    std::sort(ts.begin(), ts.end());
    for (double t : ts) {
      const double f = lambda_at(t);
      if (f < f_min) {
        f_min = f;
        t_min = t;
      }
    }
    // Snap to an endpoint when it ties the interior optimum, so boundary
    // solutions come out with exact parameter values.
    const double tie = 1e-9 * (1.0 + std::abs(f_min));
    if (lambda_at(0.0) <= f_min + tie) {
      t_min = 0.0;
      f_min = lambda_at(0.0);
    } else if (lambda_at(1.0) <= f_min + tie) {
      t_min = 1.0;
      f_min = lambda_at(1.0);
    }

    const double tie_x = 1e-9 * (1.0 + std::abs(f_min));
    if (!std::isfinite(best.lambda) || f_min < best.lambda - tie_x) {
      const auto [a1, a2] = seg.at(t_min);
      best = {f_min, x, a1, a2, t_min};
    }
  }
  if (best.x.empty()) throw std::logic_error("internal error: no admissible sign vector found");

  // Near a1 + a2 = 1 the family degenerates: the matrix loses rank in the
  // limit, which the strict constraint excludes. If the optimum landed that
  // close to the clipped boundary and fails the rank margin, back off along
  // the segment; convexity keeps the objective within a vanishing distance
  // of the boundary infimum.
  const ASegment best_seg = solve_a_segment(best.x, sorted);
  BMatrix sorted_b = [&] {
    for (double backoff : {0.0, 1e-6, 1e-4, 1e-2}) {
      const double t = std::max(0.0, best.t - backoff);
      const auto [a1, a2] = best_seg.at(t);
      try {
        BMatrix candidate = assemble_b(best.x, a1, a2, sorted);
        best.a1 = a1;
        best.a2 = a2;
        return candidate;
      } catch (const std::logic_error&) {
        continue;  // rank margin failed; retreat further into the interior
      }
    }
    return assemble_b(best.x, best.a1, best.a2, sorted);
  }();

  std::vector<int> rank(w);  // user index -> position in ascending order
  for (int k = 0; k < w; ++k) rank[order[k]] = k;
  DenseMatrix user(w, std::vector<double>(w, 0.0));
  for (int i = 0; i < w; ++i) {
    for (int j = 0; j < w; ++j) user[i][j] = sorted_b.entry(rank[i], rank[j]);
  }

  BStepParams steps;
  steps.x = best.x;
  steps.a1 = best.a1;
  steps.a2 = best.a2;
  steps.sort_order = order;
  steps.search = search;
  return BMatrix::from_dense(user, BProvenance::constructed, sizes, std::move(steps));
}

}  // namespace splitplot
