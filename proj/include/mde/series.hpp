#pragma once

// Truncated power series with complex coefficients: scalar, vector and matrix.
// Coefficient p multiplies z^p; a series of order N stores N + 1 coefficients.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mde/errors.hpp"

namespace mde {

using cplx = std::complex<double>;

inline constexpr std::size_t max_order = 4096;

struct Tolerances {
  double residual = 1e-9;
  double inverse = 1e-10;
  double condition_cap = 1e10;
};

inline void check_order(std::size_t N) {
  if (N > max_order)
    throw invalid_input("truncation order " + std::to_string(N) + " exceeds the cap " + std::to_string(max_order));
}

class TruncatedSeries {
 public:
  TruncatedSeries() : c_(1, cplx{}) {}
  explicit TruncatedSeries(std::vector<cplx> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw invalid_input("a truncated series needs at least one coefficient");
    check_order(c_.size() - 1);
    for (std::size_t p = 0; p < c_.size(); ++p)
      if (!std::isfinite(c_[p].real()) || !std::isfinite(c_[p].imag()))
        throw invalid_input("series coefficient " + std::to_string(p) + " is not finite");
  }
  TruncatedSeries(std::initializer_list<cplx> coeffs) : TruncatedSeries(std::vector<cplx>(coeffs)) {}

  static TruncatedSeries zero(std::size_t N) {
    check_order(N);
    return TruncatedSeries(std::vector<cplx>(N + 1, cplx{}));
  }

  static TruncatedSeries constant(cplx v, std::size_t N) {
    auto s = zero(N);
    s.c_[0] = v;
    return s;
  }

  // c z^k, truncated at N (zero series when k > N).
  static TruncatedSeries monomial(std::size_t k, std::size_t N, cplx c = 1.0) {
    auto s = zero(N);
    if (k <= N) s.c_[k] = c;
    return s;
  }

  std::size_t order() const noexcept { return c_.size() - 1; }
  const std::vector<cplx>& coeffs() const noexcept { return c_; }
  std::vector<cplx>& coeffs() noexcept { return c_; }
  cplx operator[](std::size_t p) const { return c_.at(p); }
  cplx& operator[](std::size_t p) { return c_.at(p); }

  // Coefficient p, zero past the stored order.
  cplx coeff_or_zero(std::size_t p) const noexcept { return p < c_.size() ? c_[p] : cplx{}; }

  TruncatedSeries truncated(std::size_t N) const {
    std::vector<cplx> c(N + 1, cplx{});
    std::copy_n(c_.begin(), std::min(c.size(), c_.size()), c.begin());
    return TruncatedSeries(std::move(c));
  }

  cplx evaluate(cplx z) const {
    cplx acc{};
    for (std::size_t p = c_.size(); p-- > 0;) acc = acc * z + c_[p];
    return acc;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : c_) m = std::max(m, std::abs(v));
    return m;
  }

  TruncatedSeries& operator+=(const TruncatedSeries& o) {
    const std::size_t N = std::min(order(), o.order());
    c_.resize(N + 1);
    for (std::size_t p = 0; p <= N; ++p) c_[p] += o.c_[p];
    return *this;
  }
  TruncatedSeries& operator-=(const TruncatedSeries& o) {
    const std::size_t N = std::min(order(), o.order());
    c_.resize(N + 1);
    for (std::size_t p = 0; p <= N; ++p) c_[p] -= o.c_[p];
    return *this;
  }
  TruncatedSeries& operator*=(cplx s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend TruncatedSeries operator+(TruncatedSeries a, const TruncatedSeries& b) { return a += b; }
  friend TruncatedSeries operator-(TruncatedSeries a, const TruncatedSeries& b) { return a -= b; }
  friend TruncatedSeries operator*(TruncatedSeries a, cplx s) { return a *= s; }
  friend TruncatedSeries operator*(cplx s, TruncatedSeries a) { return a *= s; }

  // Cauchy product truncated at the smaller order.
  friend TruncatedSeries operator*(const TruncatedSeries& f, const TruncatedSeries& g) {
    const std::size_t N = std::min(f.order(), g.order());
    std::vector<cplx> c(N + 1, cplx{});
    for (std::size_t p = 0; p <= N; ++p)
      for (std::size_t k = 0; k <= p; ++k) c[p] += f.c_[k] * g.c_[p - k];
    return TruncatedSeries(std::move(c));
  }

 private:
  std::vector<cplx> c_;
};

inline TruncatedSeries multiply(const TruncatedSeries& f, const TruncatedSeries& g) { return f * g; }
inline TruncatedSeries add(const TruncatedSeries& f, const TruncatedSeries& g) { return f + g; }
inline TruncatedSeries scale(const TruncatedSeries& f, cplx s) { return f * s; }

/// 1/f to the order of f. Throws singular_at_origin when f(0) = 0.
inline TruncatedSeries invert(const TruncatedSeries& f) {
  if (f[0] == cplx{}) throw singular_at_origin("series vanishes at the origin and has no inverse");
  const std::size_t N = f.order();
  std::vector<cplx> g(N + 1, cplx{});
  const cplx inv0 = 1.0 / f[0];
  g[0] = inv0;
  for (std::size_t p = 1; p <= N; ++p) {
    cplx s{};
    for (std::size_t k = 1; k <= p; ++k) s += f[k] * g[p - k];
    g[p] = -s * inv0;
  }
  return TruncatedSeries(std::move(g));
}

namespace detail {

inline constexpr std::size_t pascal_rows = 64;

// Pascal triangle through row 64; exact in double up to row 56.
inline const std::vector<std::vector<double>>& pascal() {
  static const auto table = [] {
    std::vector<std::vector<double>> t(pascal_rows + 1);
    for (std::size_t n = 0; n <= pascal_rows; ++n) {
      t[n].assign(n + 1, 1.0);
      for (std::size_t k = 1; k < n; ++k) t[n][k] = t[n - 1][k - 1] + t[n - 1][k];
    }
    return t;
  }();
  return table;
}

inline double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace detail

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  if (n <= detail::pascal_rows) return detail::pascal()[n][k];
  return std::exp(detail::log_binomial(n, k));
}

/// g(z) = f(z - z0) re-expanded at the origin; exact for polynomials.
inline TruncatedSeries shift_expand(const TruncatedSeries& f, cplx z0) {
  const std::size_t N = f.order();
  std::vector<cplx> g(N + 1, cplx{});
  if (z0 == cplx{}) return f;
  const cplx w = -z0;
  const double log_abs_w = std::log(std::abs(w));
  const double arg_w = std::arg(w);
  for (std::size_t p = 0; p <= N; ++p) {
    const cplx a = f[p];
    if (a == cplx{}) continue;
    if (p <= detail::pascal_rows) {
      // (z + w)^p = sum_k C(p,k) w^(p-k) z^k
      cplx wp = 1.0;
      for (std::size_t j = 0; j <= p; ++j) {
        g[p - j] += a * detail::pascal()[p][j] * wp;
        wp *= w;
      }
    } else {
      for (std::size_t k = 0; k <= p; ++k) {
        const double e = static_cast<double>(p - k);
        const double mag = std::exp(detail::log_binomial(p, k) + e * log_abs_w);
        g[k] += a * std::polar(mag, e * arg_w);
      }
    }
  }
  return TruncatedSeries(std::move(g));
}

// ---------------------------------------------------------------------------
// Vector and matrix series: one Eigen coefficient per degree.
// ---------------------------------------------------------------------------

class VectorSeries {
 public:
  VectorSeries() = default;
  VectorSeries(std::size_t n, std::size_t N) : n_(n), c_(N + 1, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n))) {}
  explicit VectorSeries(std::vector<Eigen::VectorXcd> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw invalid_input("vector series needs at least one coefficient");
    n_ = static_cast<std::size_t>(c_[0].size());
    for (std::size_t p = 0; p < c_.size(); ++p)
      if (static_cast<std::size_t>(c_[p].size()) != n_)
        throw dimension_mismatch("vector series coefficient " + std::to_string(p) + " has inconsistent length");
  }

  std::size_t dim() const noexcept { return n_; }
  std::size_t order() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }
  const Eigen::VectorXcd& operator[](std::size_t p) const { return c_.at(p); }
  Eigen::VectorXcd& operator[](std::size_t p) { return c_.at(p); }
  const std::vector<Eigen::VectorXcd>& coeffs() const noexcept { return c_; }

  TruncatedSeries component(std::size_t i) const {
    if (i >= n_) throw dimension_mismatch("component index out of range");
    std::vector<cplx> c(c_.size());
    for (std::size_t p = 0; p < c_.size(); ++p) c[p] = c_[p](static_cast<Eigen::Index>(i));
    return TruncatedSeries(std::move(c));
  }

  static VectorSeries from_components(const std::vector<TruncatedSeries>& comps) {
    if (comps.empty()) throw invalid_input("vector series needs at least one component");
    const std::size_t N = comps[0].order();
    VectorSeries v(comps.size(), N);
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (comps[i].order() != N) throw dimension_mismatch("components have different orders");
      for (std::size_t p = 0; p <= N; ++p) v.c_[p](static_cast<Eigen::Index>(i)) = comps[i][p];
    }
    return v;
  }

  VectorSeries truncated(std::size_t N) const {
    VectorSeries v(n_, N);
    for (std::size_t p = 0; p <= std::min(N, order()); ++p) v.c_[p] = c_[p];
    return v;
  }

  Eigen::VectorXcd evaluate(cplx z) const {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_));
    for (std::size_t p = c_.size(); p-- > 0;) acc = acc * z + c_[p];
    return acc;
  }

  VectorSeries& operator+=(const VectorSeries& o) {
    if (o.n_ != n_) throw dimension_mismatch("vector series dimensions differ");
    c_.resize(std::min(c_.size(), o.c_.size()));
    for (std::size_t p = 0; p < c_.size(); ++p) c_[p] += o.c_[p];
    return *this;
  }
  VectorSeries& operator-=(const VectorSeries& o) {
    if (o.n_ != n_) throw dimension_mismatch("vector series dimensions differ");
    c_.resize(std::min(c_.size(), o.c_.size()));
    for (std::size_t p = 0; p < c_.size(); ++p) c_[p] -= o.c_[p];
    return *this;
  }
  friend VectorSeries operator+(VectorSeries a, const VectorSeries& b) { return a += b; }
  friend VectorSeries operator-(VectorSeries a, const VectorSeries& b) { return a -= b; }

 private:
  std::size_t n_ = 0;
  std::vector<Eigen::VectorXcd> c_;
};

class MatrixSeries {
 public:
  MatrixSeries() = default;
  MatrixSeries(std::size_t rows, std::size_t cols, std::size_t N)
      : rows_(rows), cols_(cols), c_(N + 1, Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {}
  explicit MatrixSeries(std::vector<Eigen::MatrixXcd> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw invalid_input("matrix series needs at least one coefficient");
    rows_ = static_cast<std::size_t>(c_[0].rows());
    cols_ = static_cast<std::size_t>(c_[0].cols());
    for (std::size_t p = 0; p < c_.size(); ++p)
      if (static_cast<std::size_t>(c_[p].rows()) != rows_ || static_cast<std::size_t>(c_[p].cols()) != cols_)
        throw dimension_mismatch("matrix series coefficient " + std::to_string(p) + " has inconsistent shape");
  }

  static MatrixSeries identity(std::size_t n, std::size_t N) {
    MatrixSeries m(n, n, N);
    m.c_[0].setIdentity();
    return m;
  }

  static MatrixSeries constant(const Eigen::MatrixXcd& A, std::size_t N) {
    MatrixSeries m(static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(A.cols()), N);
    m.c_[0] = A;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  std::size_t order() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }
  const Eigen::MatrixXcd& operator[](std::size_t p) const { return c_.at(p); }
  Eigen::MatrixXcd& operator[](std::size_t p) { return c_.at(p); }
  const std::vector<Eigen::MatrixXcd>& coeffs() const noexcept { return c_; }

  TruncatedSeries entry(std::size_t i, std::size_t j) const {
    std::vector<cplx> c(c_.size());
    for (std::size_t p = 0; p < c_.size(); ++p) c[p] = c_[p](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return TruncatedSeries(std::move(c));
  }

  VectorSeries column(std::size_t j) const {
    std::vector<Eigen::VectorXcd> c(c_.size());
    for (std::size_t p = 0; p < c_.size(); ++p) c[p] = c_[p].col(static_cast<Eigen::Index>(j));
    return VectorSeries(std::move(c));
  }

  static MatrixSeries from_columns(const std::vector<VectorSeries>& cols) {
    if (cols.empty()) throw invalid_input("matrix series needs at least one column");
    const std::size_t N = cols[0].order();
    MatrixSeries m(cols[0].dim(), cols.size(), N);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (cols[j].order() != N || cols[j].dim() != m.rows_) throw dimension_mismatch("columns have inconsistent shape");
      for (std::size_t p = 0; p <= N; ++p) m.c_[p].col(static_cast<Eigen::Index>(j)) = cols[j][p];
    }
    return m;
  }

  MatrixSeries truncated(std::size_t N) const {
    MatrixSeries m(rows_, cols_, N);
    for (std::size_t p = 0; p <= std::min(N, order()); ++p) m.c_[p] = c_[p];
    return m;
  }

  // Degree p coefficient, zero past the stored order.
  Eigen::MatrixXcd coeff_or_zero(std::size_t p) const {
    if (p < c_.size()) return c_[p];
    return Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  }

  Eigen::MatrixXcd evaluate(cplx z) const {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
    for (std::size_t p = c_.size(); p-- > 0;) acc = acc * z + c_[p];
    return acc;
  }

  MatrixSeries& operator+=(const MatrixSeries& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw dimension_mismatch("matrix series shapes differ");
    c_.resize(std::min(c_.size(), o.c_.size()));
    for (std::size_t p = 0; p < c_.size(); ++p) c_[p] += o.c_[p];
    return *this;
  }
  MatrixSeries& operator-=(const MatrixSeries& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw dimension_mismatch("matrix series shapes differ");
    c_.resize(std::min(c_.size(), o.c_.size()));
    for (std::size_t p = 0; p < c_.size(); ++p) c_[p] -= o.c_[p];
    return *this;
  }
  friend MatrixSeries operator+(MatrixSeries a, const MatrixSeries& b) { return a += b; }
  friend MatrixSeries operator-(MatrixSeries a, const MatrixSeries& b) { return a -= b; }

  friend MatrixSeries operator*(const MatrixSeries& A, const MatrixSeries& B) {
    if (A.cols_ != B.rows_) throw dimension_mismatch("matrix series product: inner dimensions differ");
    const std::size_t N = std::min(A.order(), B.order());
    MatrixSeries C(A.rows_, B.cols_, N);
    for (std::size_t p = 0; p <= N; ++p)
      for (std::size_t k = 0; k <= p; ++k) C.c_[p].noalias() += A.c_[k] * B.c_[p - k];
    return C;
  }

  friend VectorSeries operator*(const MatrixSeries& A, const VectorSeries& y) {
    if (A.cols_ != y.dim()) throw dimension_mismatch("matrix-vector series product: dimensions differ");
    const std::size_t N = std::min(A.order(), y.order());
    VectorSeries r(A.rows_, N);
    for (std::size_t p = 0; p <= N; ++p)
      for (std::size_t k = 0; k <= p; ++k) r[p].noalias() += A.c_[p - k] * y[k];
    return r;
  }

  // Constant matrix on either side.
  friend MatrixSeries operator*(const Eigen::MatrixXcd& T, const MatrixSeries& A) {
    MatrixSeries r(static_cast<std::size_t>(T.rows()), A.cols_, A.order());
    for (std::size_t p = 0; p <= A.order(); ++p) r.c_[p] = T * A.c_[p];
    return r;
  }
  friend MatrixSeries operator*(const MatrixSeries& A, const Eigen::MatrixXcd& T) {
    MatrixSeries r(A.rows_, static_cast<std::size_t>(T.cols()), A.order());
    for (std::size_t p = 0; p <= A.order(); ++p) r.c_[p] = A.c_[p] * T;
    return r;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Eigen::MatrixXcd> c_;
};

// Max-absolute-row-sum norm, and the matching vector infinity norm.
inline double row_sum_norm(const Eigen::MatrixXcd& A) {
  if (A.size() == 0) return 0.0;
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double inf_norm(const Eigen::VectorXcd& v) {
  if (v.size() == 0) return 0.0;
  return v.cwiseAbs().maxCoeff();
}

inline double condition_number(const Eigen::MatrixXcd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  const double smin = s(s.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

struct MatrixInverse {
  MatrixSeries inverse;
  double condition = 1.0;
  bool ill_conditioned = false;  // condition above the configured cap
  double residual = 0.0;         // max |(Y Y^{-1} - I)_p| entry
};

/// Y^{-1} to the order of Y. Throws singular_at_origin when Y(0) is singular
/// (rank deficient or condition above 1e14); flags condition above the cap.
inline MatrixInverse invert(const MatrixSeries& Y, const Tolerances& tol = {}) {
  if (!Y.square()) throw dimension_mismatch("only square matrix series can be inverted");
  const std::size_t n = Y.rows();
  const std::size_t N = Y.order();
  MatrixInverse out;
  out.condition = condition_number(Y[0]);
  if (!std::isfinite(out.condition) || out.condition > 1e14)
    throw singular_at_origin("matrix series is singular at the origin (condition number " +
                             std::to_string(out.condition) + ")");
  out.ill_conditioned = out.condition > tol.condition_cap;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Y[0]);
  const Eigen::MatrixXcd Y0inv = lu.inverse();
  MatrixSeries X(n, n, N);
  X[0] = Y0inv;
  for (std::size_t p = 1; p <= N; ++p) {
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k <= p; ++k) s.noalias() += Y[k] * X[p - k];
    X[p] = -Y0inv * s;
  }
  const MatrixSeries prod = Y * X;
  for (std::size_t p = 0; p <= N; ++p) {
    Eigen::MatrixXcd d = prod[p];
    if (p == 0) d -= Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    out.residual = std::max(out.residual, d.cwiseAbs().maxCoeff());
  }
  out.inverse = std::move(X);
  return out;
}

}  // namespace mde
