#pragma once

// n-th order scalar moment equations <-> first order n x n systems.
//
//   d_m^n y + a_1 d_m^{n-1} y + ... + a_n y = 0
//
// corresponds to d_m Y = B(z) Y with B the companion matrix: ones on the
// superdiagonal, last row (-a_n, ..., -a_1).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mde/cauchy.hpp"
#include "mde/errors.hpp"
#include "mde/moment_derivative.hpp"
#include "mde/moment_sequence.hpp"
#include "mde/series.hpp"

namespace mde {

struct CompanionForm {
  std::vector<TruncatedSeries> a;  // a[0] = a_1, ..., a[n-1] = a_n
  MatrixSeries B;
  Eigen::MatrixXcd T;              // rows v0 A0^j; identity from equation_to_system
  double T_condition = 1.0;
  std::optional<Eigen::RowVectorXcd> v0;
};

inline CompanionForm equation_to_system(const std::vector<TruncatedSeries>& a) {
  if (a.empty()) throw invalid_input("equation_to_system needs at least one coefficient a_1");
  const std::size_t n = a.size();
  const std::size_t N = a[0].order();
  for (std::size_t j = 0; j < n; ++j)
    if (a[j].order() != N) throw dimension_mismatch("coefficients a_j must share one truncation order");
  CompanionForm cf;
  cf.a = a;
  cf.B = MatrixSeries(n, n, N);
  for (std::size_t i = 0; i + 1 < n; ++i) cf.B[0](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 1.0;
  for (std::size_t p = 0; p <= N; ++p)
    for (std::size_t k = 0; k < n; ++k)  // column k holds -a_{n-k}
      cf.B[p](static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(k)) = -a[n - 1 - k][p];
  cf.T = Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  return cf;
}

/// Initial vector of the companion system for Cauchy data d_m^j y(0) = data[j]:
/// component j holds the z^0 coefficient of d_m^j y, which is exactly data[j].
inline Eigen::VectorXcd companion_initial_vector(const std::vector<cplx>& cauchy) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(cauchy.size()));
  for (std::size_t j = 0; j < cauchy.size(); ++j) v(static_cast<Eigen::Index>(j)) = cauchy[j];
  return v;
}

// ---------------------------------------------------------------------------
// Cyclic vectors
// ---------------------------------------------------------------------------

/// Rows v, vA, ..., vA^{n-1}.
inline Eigen::MatrixXcd krylov_rows(const Eigen::MatrixXcd& A0, const Eigen::RowVectorXcd& v) {
  const auto n = A0.rows();
  Eigen::MatrixXcd K(n, n);
  Eigen::RowVectorXcd w = v;
  for (Eigen::Index j = 0; j < n; ++j) {
    K.row(j) = w;
    w = w * A0;
  }
  return K;
}

inline constexpr double krylov_rank_tol = 1e-10;

inline Eigen::Index krylov_rank(const Eigen::MatrixXcd& A0, const Eigen::RowVectorXcd& v) {
  Eigen::MatrixXcd K = krylov_rows(A0, v);
  for (Eigen::Index j = 0; j < K.rows(); ++j) {
    const double nrm = K.row(j).norm();
    if (nrm == 0.0) return j;  // the orbit died: rank is j
    K.row(j) /= nrm;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(K);
  qr.setThreshold(krylov_rank_tol);
  return qr.rank();
}

inline bool is_cyclic(const Eigen::MatrixXcd& A0, const Eigen::RowVectorXcd& v) {
  return A0.rows() == A0.cols() && v.size() == A0.rows() && krylov_rank(A0, v) == A0.rows();
}

struct CyclicVector {
  Eigen::RowVectorXcd v0;
  Eigen::MatrixXcd basis;  // rows v0 A0^j
};

inline constexpr std::uint64_t cyclic_seed = 0x5EED;
inline constexpr int cyclic_random_starts = 32;

namespace detail {

// Scales v so that its first non-negligible entry is 1.
inline Eigen::RowVectorXcd normalize_leading(Eigen::RowVectorXcd v) {
  const double big = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12 * big) {
      v /= v(i);
      break;
    }
  }
  return v;
}

// Candidate starts: the rows of `span` (an orthonormal basis of the search
// space, one vector per row) followed by seeded random combinations of them.
inline std::optional<CyclicVector> search_cyclic(const Eigen::MatrixXcd& A0, const Eigen::MatrixXcd& span) {
  auto accept = [&](const Eigen::RowVectorXcd& v) -> std::optional<CyclicVector> {
    if (!is_cyclic(A0, v)) return std::nullopt;
    CyclicVector cv;
    cv.v0 = normalize_leading(v);
    cv.basis = krylov_rows(A0, cv.v0);
    return cv;
  };
  for (Eigen::Index i = 0; i < span.rows(); ++i)
    if (auto cv = accept(span.row(i))) return cv;
  std::mt19937_64 rng(cyclic_seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int t = 0; t < cyclic_random_starts; ++t) {
    Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(A0.cols());
    for (Eigen::Index i = 0; i < span.rows(); ++i) {
      const double re = unif(rng);
      const double im = unif(rng);
      w += cplx(re, im) * span.row(i);
    }
    if (auto cv = accept(w)) return cv;
  }
  return std::nullopt;
}

}  // namespace detail

/// First cyclic vector in the order e_1..e_n, then 32 seeded random vectors.
inline std::optional<CyclicVector> find_cyclic_vector(const Eigen::MatrixXcd& A0) {
  if (A0.rows() != A0.cols() || A0.rows() == 0) throw dimension_mismatch("find_cyclic_vector needs a square matrix");
  return detail::search_cyclic(A0, Eigen::MatrixXcd::Identity(A0.rows(), A0.cols()));
}

// ---------------------------------------------------------------------------
// Condition (ii): v0 A0^j A_p = 0 for 1 <= p <= N, 0 <= j <= n - 2
// ---------------------------------------------------------------------------

struct ConditionII {
  bool holds = true;
  std::optional<std::size_t> j;  // first violation, p outer and j inner
  std::optional<std::size_t> p;
  double max_defect = 0.0;       // max |entry| / (||A_p|| ||v0 A0^j||)
};

inline constexpr double condition_ii_tol = 1e-10;

inline ConditionII check_condition_ii(const MatrixSeries& A, const Eigen::RowVectorXcd& v0) {
  if (!A.square() || static_cast<std::size_t>(v0.size()) != A.rows())
    throw dimension_mismatch("check_condition_ii: v0 length must match the square matrix series");
  const std::size_t n = A.rows();
  std::vector<Eigen::RowVectorXcd> rows;
  Eigen::RowVectorXcd w = v0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    rows.push_back(w);
    w = w * A[0];
  }
  ConditionII out;
  for (std::size_t p = 1; p <= A.order(); ++p) {
    const double ap = A[p].cwiseAbs().maxCoeff();
    if (ap == 0.0) continue;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const double scale = ap * rows[j].cwiseAbs().maxCoeff() * static_cast<double>(n);
      if (scale == 0.0) continue;
      const double rel = (rows[j] * A[p]).cwiseAbs().maxCoeff() / scale;
      out.max_defect = std::max(out.max_defect, rel);
      if (rel > condition_ii_tol && out.holds) {
        out.holds = false;
        out.j = j;
        out.p = p;
      }
    }
  }
  return out;
}

namespace detail {

// Orthonormal basis (rows) of {v : v A0^j A_p = 0 for all p >= 1, j <= n-2}.
inline Eigen::MatrixXcd admissible_space(const MatrixSeries& A) {
  const auto n = static_cast<Eigen::Index>(A.rows());
  std::vector<Eigen::MatrixXcd> blocks;
  for (std::size_t p = 1; p <= A.order(); ++p) {
    if (A[p].cwiseAbs().maxCoeff() == 0.0) continue;
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(n, n);
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      blocks.push_back(P * A[p]);
      P = P * A[0];
    }
  }
  if (blocks.empty()) return Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd M(n, n * static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const double s = blocks[b].cwiseAbs().maxCoeff();
    M.middleCols(n * static_cast<Eigen::Index>(b), n) = s > 0.0 ? Eigen::MatrixXcd(blocks[b] / s) : blocks[b];
  }
  // v M = 0  <=>  M^H v^H = 0; null space from the SVD of M^H
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M.adjoint(), Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-10 * std::max(smax, 1.0)) ++rank;
  const Eigen::MatrixXcd V = svd.matrixV();
  // null vectors w of M^H are columns of V; v = w^H
  return V.rightCols(n - rank).adjoint();
}

inline void require_companion_pattern(const Eigen::MatrixXcd& Bp, std::size_t p, double scale) {
  const auto n = Bp.rows();
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    for (Eigen::Index k = 0; k < n; ++k) {
      const cplx expected = (p == 0 && k == i + 1) ? cplx(1.0) : cplx(0.0);
      if (std::abs(Bp(i, k) - expected) > 1e-8 * scale)
        throw math_error("transformed matrix lost the companion pattern at degree " + std::to_string(p) + ", entry (" +
                         std::to_string(i + 1) + "," + std::to_string(k + 1) + ")");
    }
  }
}

}  // namespace detail

/// System -> equation. Without an explicit v0 the cyclic vector is searched in
/// the subspace where condition (ii) holds.
inline CompanionForm system_to_equation(const MatrixSeries& A, std::optional<Eigen::RowVectorXcd> v0 = std::nullopt) {
  if (!A.square() || A.rows() == 0) throw dimension_mismatch("system_to_equation needs a square matrix series");
  const std::size_t n = A.rows();
  const std::size_t N = A.order();
  const Eigen::MatrixXcd& A0 = A[0];

  Eigen::RowVectorXcd v;
  if (v0) {
    if (static_cast<std::size_t>(v0->size()) != n) throw dimension_mismatch("cyclic vector override has wrong length");
    if (!is_cyclic(A0, *v0)) throw no_cyclic_vector("the supplied vector is not cyclic for A(0)");
    v = *v0;
  } else {
    auto cv = detail::search_cyclic(A0, detail::admissible_space(A));
    if (!cv) {
      const auto plain = find_cyclic_vector(A0);
      if (!plain)
        throw no_cyclic_vector("A(0) admits no cyclic vector (Krylov rank < " + std::to_string(n) + " for all probes)");
      const auto c = check_condition_ii(A, plain->v0);
      throw condition_ii_violation("no cyclic vector of A(0) satisfies condition (ii); the first cyclic candidate "
                                   "fails at j=" + std::to_string(c.j.value_or(0)) +
                                       ", p=" + std::to_string(c.p.value_or(1)),
                                   c.j.value_or(0), c.p.value_or(1));
    }
    v = cv->v0;
  }
  const auto cond = check_condition_ii(A, v);
  if (!cond.holds)
    throw condition_ii_violation("condition (ii) fails: v0 A0^" + std::to_string(*cond.j) + " A_" + std::to_string(*cond.p) +
                                     " != 0",
                                 *cond.j, *cond.p);

  CompanionForm cf;
  cf.v0 = v;
  cf.T = krylov_rows(A0, v);
  cf.T_condition = condition_number(cf.T);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(cf.T);
  if (!lu.isInvertible()) throw no_cyclic_vector("transition matrix T is singular");
  const Eigen::MatrixXcd Tinv = lu.inverse();
  const double scale = 1.0 + cf.T.cwiseAbs().maxCoeff() * Tinv.cwiseAbs().maxCoeff() * static_cast<double>(n);

  cf.B = MatrixSeries(n, n, N);
  cf.a.assign(n, TruncatedSeries::zero(N));
  for (std::size_t p = 0; p <= N; ++p) {
    const Eigen::MatrixXcd Bp = cf.T * A[p] * Tinv;
    detail::require_companion_pattern(Bp, p, scale * (1.0 + A[p].cwiseAbs().maxCoeff()));
    Eigen::MatrixXcd exact = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    if (p == 0)
      for (std::size_t i = 0; i + 1 < n; ++i) exact(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 1.0;
    exact.row(static_cast<Eigen::Index>(n - 1)) = Bp.row(static_cast<Eigen::Index>(n - 1));
    cf.B[p] = exact;
    for (std::size_t j = 1; j <= n; ++j) cf.a[j - 1][p] = -Bp(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n - j));
  }
  return cf;
}

// ---------------------------------------------------------------------------
// Fundamental matrices
// ---------------------------------------------------------------------------

/// Columns solve d_m y = A y with y(0) = e_j.
inline MatrixSeries fundamental_matrix(const CauchyProblem& pb) {
  if (pb.b) throw invalid_input("fundamental_matrix needs a homogeneous problem (b = 0)");
  const std::size_t n = pb.dim();
  std::vector<VectorSeries> cols;
  CauchyProblem q = pb;
  for (std::size_t j = 0; j < n; ++j) {
    q.y0 = Eigen::VectorXcd::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j));
    cols.push_back(solve_coefficients(q));
  }
  return MatrixSeries::from_columns(cols);
}

/// A = (d_m Y) Y^{-1}, of order N - 1.
inline MatrixSeries recover_matrix_from_fundamental(const MatrixSeries& Y, const MomentSequence& seq,
                                                    const Tolerances& tol = {}) {
  if (!Y.square()) throw dimension_mismatch("fundamental matrix must be square");
  if (Y.order() == 0) throw invalid_input("fundamental matrix must have order >= 1");
  const auto inv = invert(Y.truncated(Y.order() - 1), tol);
  return moment_derivative(Y, seq) * inv.inverse;
}

}  // namespace mde
