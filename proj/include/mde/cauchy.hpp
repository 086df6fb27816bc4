#pragma once

// Cauchy problem d_m y = A(z) y + b(z), y(0) = y0, solved by coefficient
// recursion, with majorant-based radius certificates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mde/detail/fit.hpp"
#include "mde/errors.hpp"
#include "mde/moment_derivative.hpp"
#include "mde/moment_sequence.hpp"
#include "mde/series.hpp"

namespace mde {

struct CauchyProblem {
  MomentSequence seq = MomentSequence::factorial();
  MatrixSeries A;                  // n x n; degrees past A.order() are zero
  std::optional<VectorSeries> b;   // forcing; absent means b = 0
  Eigen::VectorXcd y0;
  double radius = 1.0;             // A and b are asserted analytic on D(0, radius)
  std::size_t order = 64;

  std::size_t dim() const noexcept { return A.rows(); }
};

inline void validate(const CauchyProblem& pb) {
  if (!pb.A.square() || pb.A.rows() == 0) throw dimension_mismatch("A must be a nonempty square matrix series");
  const std::size_t n = pb.A.rows();
  if (static_cast<std::size_t>(pb.y0.size()) != n)
    throw dimension_mismatch("y0 has length " + std::to_string(pb.y0.size()) + ", expected " + std::to_string(n));
  if (pb.b && pb.b->dim() != n)
    throw dimension_mismatch("b has dimension " + std::to_string(pb.b->dim()) + ", expected " + std::to_string(n));
  if (!(pb.radius > 0.0) || !std::isfinite(pb.radius)) throw invalid_input("radius must be a positive finite number");
  if (pb.order < 1) throw invalid_input("order must be at least 1");
  check_order(pb.order);
}

/// Coefficients y_0..y_N from y_{p+1} (m_{p+1}/m_p) = sum_{k<=p} A_{p-k} y_k + b_p.
inline VectorSeries solve_coefficients(const CauchyProblem& pb) {
  validate(pb);
  const std::size_t n = pb.dim();
  const std::size_t N = pb.order;
  const std::size_t degA = pb.A.order();
  VectorSeries y(n, N);
  y[0] = pb.y0;
  Eigen::VectorXcd acc(static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < N; ++p) {
    acc.setZero();
    const std::size_t k0 = p > degA ? p - degA : 0;
    for (std::size_t k = k0; k <= p; ++k) acc.noalias() += pb.A[p - k] * y[k];
    if (pb.b && p <= pb.b->order()) acc += (*pb.b)[p];
    y[p + 1] = acc / pb.seq.ratio(p + 1);
  }
  return y;
}

struct Residual {
  double max_abs = 0.0;       // max |coeff(d_m y - A y - b)|
  double max_relative = 0.0;  // max of |defect_p| / (1 + max operand magnitude at degree p)
};

/// Residual of d_m y - A y - b over degrees 0..N-1.
inline Residual residual(const CauchyProblem& pb, const VectorSeries& y) {
  const std::size_t N = y.order();
  const std::size_t degA = pb.A.order();
  Residual r;
  if (N == 0) return r;
  const VectorSeries dy = moment_derivative(y, pb.seq);
  for (std::size_t p = 0; p < N; ++p) {
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(y.dim()));
    const std::size_t k0 = p > degA ? p - degA : 0;
    for (std::size_t k = k0; k <= p; ++k) rhs.noalias() += pb.A[p - k] * y[k];
    if (pb.b && p <= pb.b->order()) rhs += (*pb.b)[p];
    const double defect = inf_norm(dy[p] - rhs);
    const double scale = 1.0 + std::max(inf_norm(dy[p]), inf_norm(rhs));
    r.max_abs = std::max(r.max_abs, defect);
    r.max_relative = std::max(r.max_relative, defect / scale);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Bounds and certificates
// ---------------------------------------------------------------------------

struct GeometricBound {
  double c = 0.0;
  double K = 1.0;
};

inline constexpr double default_K_margin = 1e-2;

/// ||A_p|| <= c K^p with K = (1 + margin)/r and the row-sum norm.
inline GeometricBound fit_geometric_bound(const MatrixSeries& A, double r, double margin = default_K_margin) {
  if (!(r > 0.0) || !std::isfinite(r)) throw invalid_input("fit_geometric_bound requires a positive radius");
  GeometricBound g;
  g.K = (1.0 + margin) / r;
  const double logK = std::log(g.K);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p <= A.order(); ++p) {
    const double nrm = row_sum_norm(A[p]);
    if (nrm == 0.0) continue;
    best = std::max(best, std::log(nrm) - static_cast<double>(p) * logK);
  }
  g.c = std::isfinite(best) ? std::exp(best) : 0.0;
  return g;
}

// g_alpha(p) = Gamma(1 + alpha p) / Gamma(1 + alpha (p - 1)); g_1(p) = p.
inline double gamma_step(double alpha, std::size_t p) {
  if (alpha == 1.0) return static_cast<double>(p);
  return detail::gamma_ratio_alpha(alpha, p);
}

/// c~_0 = c0, c~_{p+1} = [c C~ sum_{k<=p} K^{p-k} c~_k + b~_p] / g_alpha(p+1).
/// With alpha = 1 the divisor is p + 1.
inline std::vector<double> majorant_sequence(double c0, double c, double C_tilde, double K, double alpha, std::size_t N,
                                             const std::vector<double>& b_tilde = {}) {
  std::vector<double> out(N + 1, 0.0);
  out[0] = c0;
  const double cc = c * C_tilde;
  // s_p = sum_{k<=p} K^{p-k} c~_k, updated as s_p = K s_{p-1} + c~_p
  double s = 0.0;
  for (std::size_t p = 0; p < N; ++p) {
    s = K * s + out[p];
    const double bp = p < b_tilde.size() ? b_tilde[p] : 0.0;
    out[p + 1] = (cc * s + bp) / gamma_step(alpha, p + 1);
  }
  return out;
}

struct RadiusCertificate {
  AssumptionPath path = AssumptionPath::none;
  double alpha = 1.0;  // 1 on path A
  double C_tilde = 1.0;
  GeometricBound bound;
  std::optional<double> radius_guaranteed;  // empty when no assumption holds
  double r1_bound = 0.0;                    // supremum of admissible r1 windows
};

/// Path A keeps r; path B gives r0 = 1 / (c C~ / Gamma(1 + alpha) + 1/r).
inline RadiusCertificate radius_certificate(const CauchyProblem& pb, const SequenceDiagnostics& diag) {
  RadiusCertificate cert;
  cert.path = diag.preferred();
  cert.bound = fit_geometric_bound(pb.A, pb.radius);
  const double r = pb.radius;
  switch (cert.path) {
    case AssumptionPath::A:
      cert.alpha = 1.0;
      cert.C_tilde = std::max(1.0, diag.assumption_A.C_estimate);
      cert.radius_guaranteed = r;
      break;
    case AssumptionPath::B:
      cert.alpha = diag.assumption_B.alpha_estimate.value();
      cert.C_tilde = std::max(1.0, diag.assumption_B.C_estimate);
      cert.radius_guaranteed = 1.0 / (cert.bound.c * cert.C_tilde / std::tgamma(1.0 + cert.alpha) + 1.0 / r);
      break;
    case AssumptionPath::none:
      return cert;
  }
  const double g = std::tgamma(cert.alpha + 1.0);
  const double n = static_cast<double>(pb.dim());
  cert.r1_bound = std::pow(g / (n * cert.bound.c * cert.C_tilde + cert.bound.K * g), 1.0 / cert.alpha);
  return cert;
}

struct EmpiricalRadius {
  bool unbounded = false;
  double radius = std::numeric_limits<double>::infinity();
};

/// Cauchy-Hadamard estimate from coefficient magnitudes |y_p|, p = 0..N.
/// Fits ln|y_p| ~ a + b p + c ln p on the upper hull of the last half;
/// super-geometric decay (hull slope falling by more than 0.1 between the
/// third and fourth quarter) is reported as unbounded.
inline EmpiricalRadius empirical_radius(const std::vector<double>& magnitudes) {
  if (magnitudes.size() < 17) throw invalid_input("empirical_radius requires order N >= 16");
  const std::size_t N = magnitudes.size() - 1;
  EmpiricalRadius out;
  std::vector<detail::Point> pts;
  for (std::size_t p = N / 2; p <= N; ++p)
    if (magnitudes[p] > 0.0 && std::isfinite(magnitudes[p]))
      pts.push_back({static_cast<double>(p), std::log(magnitudes[p])});
  if (pts.size() < 4) {
    out.unbounded = true;
    return out;
  }
  const auto hull = detail::upper_hull(pts);
  const double mid = static_cast<double>(N / 2 + N / 4);
  std::vector<detail::Point> early, late;
  for (const auto& h : hull) {
    if (h.x <= mid) early.push_back(h);
    if (h.x >= mid) late.push_back(h);
  }
  if (early.size() >= 2 && late.size() >= 2 && detail::slope(late) - detail::slope(early) < -0.1) {
    out.unbounded = true;
    return out;
  }
  double b = 0.0;
  if (hull.size() >= 4) {
    b = detail::least_squares(hull, {[](double) { return 1.0; }, [](double x) { return x; },
                                     [](double x) { return std::log(x); }})(1);
  } else {
    b = detail::slope(hull);
  }
  out.radius = std::exp(-b);
  return out;
}

inline EmpiricalRadius empirical_radius(const VectorSeries& y) {
  std::vector<double> mags(y.order() + 1);
  for (std::size_t p = 0; p <= y.order(); ++p) mags[p] = inf_norm(y[p]);
  return empirical_radius(mags);
}

inline EmpiricalRadius empirical_radius(const TruncatedSeries& f) {
  std::vector<double> mags(f.order() + 1);
  for (std::size_t p = 0; p <= f.order(); ++p) mags[p] = std::abs(f[p]);
  return empirical_radius(mags);
}

// ---------------------------------------------------------------------------
// Full solve
// ---------------------------------------------------------------------------

struct SolutionResult {
  VectorSeries y;
  SequenceDiagnostics diagnostics;
  RadiusCertificate certificate;
  std::vector<double> majorant;    // c~_p; empty without a certificate
  std::vector<double> normalized;  // W_p = ratio(p) ||y_p|| / g_alpha(p), W_0 = ||y_0||
  bool majorant_dominates = false;
  std::optional<EmpiricalRadius> radius_empirical;  // needs N >= 16
  Residual residual;
  bool residual_ok = false;
};

/// W_p for the given path exponent. On path A this is m_p ||y_p|| / (m_{p-1} p).
inline std::vector<double> normalized_magnitudes(const VectorSeries& y, const MomentSequence& seq, double alpha) {
  std::vector<double> w(y.order() + 1);
  w[0] = inf_norm(y[0]);
  for (std::size_t p = 1; p <= y.order(); ++p) w[p] = seq.ratio(p) * inf_norm(y[p]) / gamma_step(alpha, p);
  return w;
}

inline std::vector<double> forcing_norms(const CauchyProblem& pb) {
  std::vector<double> bt;
  if (!pb.b) return bt;
  bt.resize(pb.b->order() + 1);
  for (std::size_t p = 0; p <= pb.b->order(); ++p) bt[p] = inf_norm((*pb.b)[p]);
  return bt;
}

inline SolutionResult solve(const CauchyProblem& pb, const Tolerances& tol = {}) {
  SolutionResult res;
  res.y = solve_coefficients(pb);
  res.residual = residual(pb, res.y);
  res.residual_ok = res.residual.max_relative <= tol.residual;

  try {
    res.diagnostics = diagnose(pb.seq, std::max<std::size_t>(pb.order, 8));
  } catch (const invalid_input&) {
    res.diagnostics = SequenceDiagnostics{};
  }
  res.certificate = radius_certificate(pb, res.diagnostics);
  if (res.certificate.path != AssumptionPath::none) {
    const auto& cert = res.certificate;
    res.majorant = majorant_sequence(inf_norm(pb.y0), cert.bound.c, cert.C_tilde, cert.bound.K, cert.alpha, pb.order,
                                     forcing_norms(pb));
    res.normalized = normalized_magnitudes(res.y, pb.seq, cert.alpha);
    res.majorant_dominates = true;
    for (std::size_t p = 0; p <= pb.order; ++p)
      if (res.normalized[p] > res.majorant[p] * (1.0 + 1e-12) + 1e-12) res.majorant_dominates = false;
  }
  if (pb.order >= 16) res.radius_empirical = empirical_radius(res.y);
  return res;
}

}  // namespace mde
