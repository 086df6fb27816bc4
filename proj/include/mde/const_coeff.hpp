#pragma once

// Constant coefficient moment equations
//
//   d_m^n y + a_1 d_m^{n-1} y + ... + a_n y = 0,   d_m^j y(0) = y_0^j,
//
// solved on the basis Delta_h E(lambda, z) = sum_{p>=h} C(p,h) lambda^{p-h} z^p / m_p.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
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

namespace detail {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log|lambda^e| with lambda^0 = 1 also for lambda = 0.
inline double log_power(double log_abs_lambda, std::size_t e) {
  if (e == 0) return 0.0;
  return static_cast<double>(e) * log_abs_lambda;
}

inline double log_binom(std::size_t n, std::size_t k) {
  if (k > n) return neg_inf;
  if (n <= pascal_rows) return std::log(pascal()[n][k]);
  return log_binomial(n, k);
}

}  // namespace detail

struct DeltaE {
  cplx lambda;
  std::size_t h = 0;
  MomentSequence seq = MomentSequence::factorial();
  TruncatedSeries series;       // materialized; entries may underflow to 0
  std::vector<double> log_abs;  // ln|coefficient p|, -inf for exact zeros
};

/// Coefficient p of Delta_h E(lambda, .) as (log magnitude, phase).
inline std::pair<double, double> delta_e_log_coeff(const MomentSequence& seq, cplx lambda, std::size_t h, std::size_t p) {
  if (p < h) return {detail::neg_inf, 0.0};
  const std::size_t e = p - h;
  if (lambda == cplx{} && e > 0) return {detail::neg_inf, 0.0};
  const double la = lambda == cplx{} ? 0.0 : std::log(std::abs(lambda));
  return {detail::log_binom(p, h) + detail::log_power(la, e) - seq.log_value(p),
          static_cast<double>(e) * std::arg(lambda)};
}

inline DeltaE delta_e(const MomentSequence& seq, cplx lambda, std::size_t h, std::size_t N) {
  if (h > N) throw invalid_input("delta_e requires h <= N");
  check_order(N);
  DeltaE d{lambda, h, seq, TruncatedSeries::zero(N), std::vector<double>(N + 1, detail::neg_inf)};
  for (std::size_t p = h; p <= N; ++p) {
    const auto [lg, ph] = delta_e_log_coeff(seq, lambda, h, p);
    d.log_abs[p] = lg;
    d.series[p] = std::isfinite(lg) ? std::polar(std::exp(lg), ph) : cplx{};
  }
  return d;
}

struct LadderCheck {
  double max_relative = 0.0;  // max_p |defect_p| / max operand magnitude at p
  std::size_t degrees = 0;    // degrees with a nonzero operand
};

/// (d_m - lambda) Delta_h - Delta_{h-1} through degree N - 1, h >= 1. Each
/// degree is rescaled by its largest operand before subtracting, so values
/// far outside the double range are checked too.
inline LadderCheck ladder_defect(const MomentSequence& seq, cplx lambda, std::size_t h, std::size_t N) {
  if (h == 0) throw invalid_input("ladder identity needs h >= 1");
  LadderCheck out;
  for (std::size_t p = 0; p < N; ++p) {
    auto [l1, a1] = delta_e_log_coeff(seq, lambda, h, p + 1);
    if (std::isfinite(l1)) l1 += std::log(seq.ratio(p + 1));
    auto [l2, a2] = delta_e_log_coeff(seq, lambda, h, p);
    if (std::isfinite(l2)) {
      l2 += std::log(std::abs(lambda));
      a2 += std::arg(lambda);
    }
    const auto [l3, a3] = delta_e_log_coeff(seq, lambda, h - 1, p);
    const double top = std::max({l1, l2, l3});
    if (!std::isfinite(top)) continue;
    auto term = [top](double l, double a) { return std::isfinite(l) ? std::polar(std::exp(l - top), a) : cplx{}; };
    const cplx defect = term(l1, a1) - term(l2, a2) - term(l3, a3);
    out.max_relative = std::max(out.max_relative, std::abs(defect));
    ++out.degrees;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Characteristic roots
// ---------------------------------------------------------------------------

struct CharRoot {
  cplx lambda;
  std::size_t multiplicity = 1;
};

inline constexpr double root_merge_tol = 1e-6;
inline constexpr double root_ambiguity_tol = 1e-3;

struct RootClusters {
  std::vector<CharRoot> roots;
  bool ambiguous = false;  // two distinct clusters closer than the ambiguity radius
  double min_separation = std::numeric_limits<double>::infinity();
};

/// Roots of x^n + a_1 x^{n-1} + ... + a_n from the companion eigenvalues,
/// merged when within 1e-6 (1 + max|root|) of each other.
inline RootClusters characteristic_roots(const std::vector<cplx>& a) {
  const std::size_t n = a.size();
  if (n == 0) throw invalid_input("characteristic polynomial needs degree >= 1");
  std::vector<cplx> raw;
  if (n == 1) {
    raw.push_back(-a[0]);
  } else {
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i + 1 < n; ++i) C(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1)) = 1.0;
    for (std::size_t k = 0; k < n; ++k) C(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(k)) = -a[n - 1 - k];
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    if (es.info() != Eigen::Success) throw math_error("eigenvalue iteration for the characteristic roots did not converge");
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) raw.push_back(es.eigenvalues()(i));
  }
  double big = 0.0;
  for (const auto& r : raw) big = std::max(big, std::abs(r));
  const double merge = root_merge_tol * (1.0 + big);

  // single-linkage clusters
  std::vector<std::size_t> parent(raw.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < raw.size(); ++i)
    for (std::size_t j = i + 1; j < raw.size(); ++j)
      if (std::abs(raw[i] - raw[j]) <= merge) parent[find(i)] = find(j);

  RootClusters out;
  std::vector<std::size_t> heads;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::size_t r = find(i);
    auto it = std::find(heads.begin(), heads.end(), r);
    if (it == heads.end()) {
      heads.push_back(r);
      out.roots.push_back({raw[i], 1});
    } else {
      auto& root = out.roots[static_cast<std::size_t>(it - heads.begin())];
      root.lambda += raw[i];
      ++root.multiplicity;
    }
  }
  for (auto& r : out.roots) r.lambda /= static_cast<double>(r.multiplicity);
  for (std::size_t i = 0; i < out.roots.size(); ++i)
    for (std::size_t j = i + 1; j < out.roots.size(); ++j)
      out.min_separation = std::min(out.min_separation, std::abs(out.roots[i].lambda - out.roots[j].lambda));
  out.ambiguous = out.min_separation <= root_ambiguity_tol * (1.0 + big);
  return out;
}

// ---------------------------------------------------------------------------
// Solution
// ---------------------------------------------------------------------------

struct ConstCoeffSolution {
  std::vector<CharRoot> roots;
  std::vector<std::vector<cplx>> coeffs;  // coeffs[j][k-1] = c_{j,k}
  TruncatedSeries y;
  std::vector<double> log_abs;            // ln|y_p| without underflow
  std::vector<cplx> cauchy_data;
  MomentSequence seq = MomentSequence::factorial();
  double fit_condition = 1.0;
  bool ambiguous_roots = false;
  std::vector<std::string> warnings;
  double residual = 0.0;       // max relative equation defect through degree N - n
  double cauchy_defect = 0.0;  // max |d_m^i y(0) - y_0^i|
};

inline ConstCoeffSolution solve_const(const std::vector<cplx>& a, const std::vector<cplx>& cauchy,
                                      const MomentSequence& seq, std::size_t N) {
  const std::size_t n = a.size();
  if (n == 0) throw invalid_input("solve_const needs n >= 1 coefficients");
  if (cauchy.size() != n)
    throw dimension_mismatch("expected " + std::to_string(n) + " Cauchy data values, got " + std::to_string(cauchy.size()));
  if (N < n) throw invalid_input("order N must be at least n");
  check_order(N);

  ConstCoeffSolution sol;
  sol.seq = seq;
  sol.cauchy_data = cauchy;
  const auto clusters = characteristic_roots(a);
  sol.roots = clusters.roots;
  sol.ambiguous_roots = clusters.ambiguous;

  // Column (j, h) holds d_m^i Delta_h E(lambda_j, .)(0) = C(i,h) lambda_j^{i-h} m_0^{-1}.
  const double inv_m0 = std::exp(-seq.log_value(0));
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::Index col = 0;
  for (const auto& r : sol.roots) {
    for (std::size_t h = 0; h < r.multiplicity; ++h, ++col) {
      for (std::size_t i = h; i < n; ++i) {
        cplx pw = 1.0;
        for (std::size_t e = 0; e < i - h; ++e) pw *= r.lambda;
        F(static_cast<Eigen::Index>(i), col) = binomial(i, h) * pw * inv_m0;
      }
    }
  }
  sol.fit_condition = condition_number(F);
  if (sol.ambiguous_roots)
    sol.warnings.push_back("root clusters closer than " + std::to_string(root_ambiguity_tol) +
                           "(1+max|root|) were kept apart; fitting condition number " + std::to_string(sol.fit_condition));
  if (!std::isfinite(sol.fit_condition) || sol.fit_condition > 1e14)
    throw math_error("Cauchy-data fitting matrix is singular (condition number " + std::to_string(sol.fit_condition) + ")");
  Eigen::VectorXcd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) rhs(static_cast<Eigen::Index>(i)) = cauchy[i];
  const Eigen::VectorXcd c = F.fullPivLu().solve(rhs);

  // y_p = m_p^{-1} sum_{j,h} c_{j,h} C(p,h) lambda_j^{p-h}; the sum s_p is formed
  // relative to its largest term so that the magnitude survives in log form.
  sol.coeffs.clear();
  col = 0;
  for (const auto& r : sol.roots) {
    sol.coeffs.emplace_back();
    for (std::size_t h = 0; h < r.multiplicity; ++h, ++col) sol.coeffs.back().push_back(c(col));
  }
  sol.y = TruncatedSeries::zero(N);
  sol.log_abs.assign(N + 1, detail::neg_inf);
  std::vector<double> log_gross(N + 1, detail::neg_inf);  // ln of sum |term_p| / m_p, before cancellation
  std::vector<double> phase(N + 1, 0.0);
  for (std::size_t p = 0; p <= N; ++p) {
    std::vector<std::pair<double, cplx>> terms;  // (log |term|, phase-carrying unit factor)
    for (std::size_t j = 0; j < sol.roots.size(); ++j) {
      const cplx lam = sol.roots[j].lambda;
      for (std::size_t h = 0; h < sol.roots[j].multiplicity; ++h) {
        const cplx cjh = sol.coeffs[j][h];
        if (cjh == cplx{} || p < h) continue;
        const std::size_t e = p - h;
        if (lam == cplx{} && e > 0) continue;
        const double la = lam == cplx{} ? 0.0 : std::log(std::abs(lam));
        const double lg = std::log(std::abs(cjh)) + detail::log_binom(p, h) + detail::log_power(la, e);
        const double ph = std::arg(cjh) + static_cast<double>(e) * std::arg(lam);
        terms.push_back({lg, std::polar(1.0, ph)});
      }
    }
    if (terms.empty()) continue;
    double top = detail::neg_inf;
    for (const auto& t : terms) top = std::max(top, t.first);
    cplx s{};
    double gross = 0.0;
    for (const auto& t : terms) {
      s += std::exp(t.first - top) * t.second;
      gross += std::exp(t.first - top);
    }
    log_gross[p] = top + std::log(gross) - seq.log_value(p);
    if (s == cplx{}) continue;
    const double lg = top + std::log(std::abs(s)) - seq.log_value(p);
    sol.log_abs[p] = lg;
    phase[p] = std::arg(s);
    sol.y[p] = std::polar(std::exp(lg), phase[p]);
  }

  // Cauchy data: d_m^i y(0) = y_i m_i / m_0
  for (std::size_t i = 0; i < n; ++i) {
    const cplx di = sol.y[i] * std::exp(seq.log_value(i) - seq.log_value(0));
    sol.cauchy_defect = std::max(sol.cauchy_defect, std::abs(di - cauchy[i]));
  }

  // d_m^n y + sum_j a_j d_m^{n-j} y through degree N - n, relative to the
  // uncancelled magnitude of the terms at each degree. Coefficient p of d_m^i y
  // is y_{p+i} m_{p+i} / m_p; everything stays in log form so that rapidly
  // growing sequences do not underflow y before the check.
  for (std::size_t p = 0; p + n <= N; ++p) {
    auto lshift = [&](std::size_t i) { return seq.log_value(p + i) - seq.log_value(p); };
    double top = detail::neg_inf;
    for (std::size_t i = 0; i <= n; ++i) {
      const double la = i == n ? 0.0 : (a[n - 1 - i] == cplx{} ? detail::neg_inf : std::log(std::abs(a[n - 1 - i])));
      top = std::max(top, la + log_gross[p + i] + lshift(i));
    }
    if (!std::isfinite(top)) continue;
    cplx acc{};
    double scale = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      const cplx w = i == n ? cplx{1.0} : a[n - 1 - i];
      if (w == cplx{}) continue;
      scale = std::max(scale, std::abs(w) * std::exp(log_gross[p + i] + lshift(i) - top));
      if (std::isfinite(sol.log_abs[p + i]))
        acc += w * std::polar(std::exp(sol.log_abs[p + i] + lshift(i) - top), phase[p + i]);
    }
    if (scale > 0.0) sol.residual = std::max(sol.residual, std::abs(acc) / scale);
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Order and type of entire functions from Taylor coefficients
// ---------------------------------------------------------------------------

struct OrderType {
  bool polynomial = false;  // tail identically zero: rho = sigma = 0
  bool entire = true;       // false when the decay is only geometric
  double rho = 0.0;
  double sigma = 0.0;
};

inline constexpr double min_inverse_order = 0.02;

/// From ln|a_p|: the upper hull of the last half of nonzero degrees is fitted
/// by -ln|a_p| = u p ln p + v p + s ln p + w, giving rho = 1/u and
/// sigma = exp(-v rho) / (e rho).
inline OrderType estimate_order_type(const std::vector<double>& log_abs) {
  if (log_abs.size() < 9) throw invalid_input("estimate_order_type needs order N >= 8");
  const std::size_t N = log_abs.size() - 1;
  std::vector<detail::Point> pts;
  for (std::size_t p = std::max<std::size_t>(N / 2, 1); p <= N; ++p)
    if (std::isfinite(log_abs[p])) pts.push_back({static_cast<double>(p), log_abs[p]});
  OrderType out;
  if (pts.empty()) {
    out.polynomial = true;
    return out;
  }
  auto hull = detail::upper_hull(pts);
  if (hull.size() < 4) hull = pts;
  if (hull.size() < 4) {
    out.entire = false;
    return out;
  }
  for (auto& h : hull) h.y = -h.y;
  const auto beta = detail::least_squares(hull, {[](double x) { return x * std::log(x); }, [](double x) { return x; },
                                                 [](double x) { return std::log(x); }, [](double) { return 1.0; }});
  const double u = beta(0);
  const double v = beta(1);
  if (!(u >= min_inverse_order)) {
    out.entire = false;
    return out;
  }
  out.rho = 1.0 / u;
  out.sigma = std::exp(-v * out.rho) / (std::exp(1.0) * out.rho);
  return out;
}

inline OrderType estimate_order_type(const TruncatedSeries& f) {
  std::vector<double> la(f.order() + 1);
  for (std::size_t p = 0; p <= f.order(); ++p) {
    const double m = std::abs(f[p]);
    la[p] = m > 0.0 ? std::log(m) : detail::neg_inf;
  }
  return estimate_order_type(la);
}

struct TypeBound {
  double rho = 1.0;          // kernel order of the sequence
  double sigma = 0.0;        // (max |lambda_j|)^rho
  OrderType estimate;        // estimator on the materialized solution
  bool consistent = false;   // estimate.sigma <= sigma (1 + 0.2), or polynomial
};

inline constexpr double type_bound_slack = 0.2;

/// Type bound (max_j |lambda_j|)^rho with rho from the sequence's kernel.
/// Only kernel moment sequences (factorial, gamma_moment) carry an order.
inline TypeBound max_root_type_bound(const ConstCoeffSolution& sol) {
  const auto rho = sol.seq.kernel_order();
  if (!rho)
    throw invalid_input("type bound needs a kernel moment sequence (factorial or gamma_moment), got " +
                        to_string(sol.seq.kind()));
  TypeBound tb;
  tb.rho = *rho;
  double big = 0.0;
  for (const auto& r : sol.roots) big = std::max(big, std::abs(r.lambda));
  tb.sigma = std::pow(big, tb.rho);
  tb.estimate = estimate_order_type(sol.log_abs);
  tb.consistent = tb.estimate.polynomial || (tb.estimate.entire && tb.estimate.sigma <= tb.sigma * (1.0 + type_bound_slack));
  return tb;
}

}  // namespace mde
