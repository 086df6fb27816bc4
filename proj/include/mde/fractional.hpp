#pragma once

// Caputo derivative and Riemann-Liouville integral acting termwise on Puiseux
// series sum_p c_p x^{alpha p}, and the fixed-point oracle
//
//   h(x) = c0 + c C~ I^alpha[ h(t) / (1 - K t^alpha) ] + I^alpha[ B(t^alpha) ].

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mde/errors.hpp"
#include "mde/moment_derivative.hpp"
#include "mde/moment_sequence.hpp"
#include "mde/rational.hpp"
#include "mde/series.hpp"

namespace mde {

struct PuiseuxSeries {
  Rational alpha{1, 1};
  std::vector<cplx> coeffs{cplx{}};  // coeffs[p] multiplies x^{alpha p}

  std::size_t order() const noexcept { return coeffs.size() - 1; }

  static PuiseuxSeries zero(Rational alpha, std::size_t N) { return {alpha, std::vector<cplx>(N + 1, cplx{})}; }

  PuiseuxSeries truncated(std::size_t N) const {
    PuiseuxSeries r = zero(alpha, N);
    std::copy_n(coeffs.begin(), std::min(coeffs.size(), N + 1), r.coeffs.begin());
    return r;
  }

  // Value at x >= 0.
  cplx evaluate(double x) const {
    const double t = std::pow(x, alpha.value());
    cplx acc{};
    for (std::size_t p = coeffs.size(); p-- > 0;) acc = acc * t + coeffs[p];
    return acc;
  }
};

namespace detail {

inline void check_alpha_positive(Rational a) {
  if (a.num <= 0 || a.den <= 0) throw invalid_input("Puiseux exponent alpha must be a positive rational");
}

// Gamma(1 + a) / Gamma(1 + b) via log-gamma.
inline double gamma_quotient(double a, double b) { return std::exp(std::lgamma(1.0 + a) - std::lgamma(1.0 + b)); }

}  // namespace detail

/// x^{alpha p} -> Gamma(1 + alpha p) / Gamma(1 + alpha (p - 1)) x^{alpha (p - 1)}; constants vanish.
inline PuiseuxSeries caputo_derivative(const PuiseuxSeries& f) {
  detail::check_alpha_positive(f.alpha);
  const std::size_t N = f.order();
  if (N == 0) return PuiseuxSeries::zero(f.alpha, 0);
  const double a = f.alpha.value();
  PuiseuxSeries r = PuiseuxSeries::zero(f.alpha, N - 1);
  for (std::size_t p = 1; p <= N; ++p) {
    const double pd = static_cast<double>(p);
    r.coeffs[p - 1] = f.coeffs[p] * detail::gamma_quotient(a * pd, a * (pd - 1.0));
  }
  return r;
}

/// x^beta -> Gamma(1 + beta) / Gamma(1 + alpha + beta) x^{alpha + beta}, beta = alpha p.
/// The result has order N + 1.
inline PuiseuxSeries rl_integral(const PuiseuxSeries& f) {
  detail::check_alpha_positive(f.alpha);
  const std::size_t N = f.order();
  const double a = f.alpha.value();
  PuiseuxSeries r = PuiseuxSeries::zero(f.alpha, N + 1);
  for (std::size_t p = 0; p <= N; ++p) {
    const double beta = a * static_cast<double>(p);
    r.coeffs[p + 1] = f.coeffs[p] * detail::gamma_quotient(beta, a + beta);
  }
  return r;
}

/// Product truncated at the smaller order; both series must share alpha.
inline PuiseuxSeries multiply(const PuiseuxSeries& f, const PuiseuxSeries& g) {
  if (!(f.alpha == g.alpha)) throw invalid_input("Puiseux product needs equal exponents alpha");
  const std::size_t N = std::min(f.order(), g.order());
  PuiseuxSeries r = PuiseuxSeries::zero(f.alpha, N);
  for (std::size_t p = 0; p <= N; ++p)
    for (std::size_t k = 0; k <= p; ++k) r.coeffs[p] += f.coeffs[k] * g.coeffs[p - k];
  return r;
}

/// f(z^alpha) as a Puiseux series.
inline PuiseuxSeries compose_power(const TruncatedSeries& f, Rational alpha) {
  detail::check_alpha_positive(alpha);
  return {alpha, f.coeffs()};
}

/// max_p |[(d_m f)(z^alpha)]_p - [D^alpha_C f(z^alpha)]_p| for m = Gamma(1 + alpha p).
inline double check_moment_caputo_identity(const TruncatedSeries& f, Rational alpha) {
  const auto seq = MomentSequence::gamma_moment(alpha);
  const PuiseuxSeries lhs = compose_power(moment_derivative(f, seq), alpha);
  const PuiseuxSeries rhs = caputo_derivative(compose_power(f, alpha));
  double d = 0.0;
  for (std::size_t p = 0; p <= std::min(lhs.order(), rhs.order()); ++p)
    d = std::max(d, std::abs(lhs.coeffs[p] - rhs.coeffs[p]));
  return d;
}

// ---------------------------------------------------------------------------
// Picard oracle
// ---------------------------------------------------------------------------

struct PicardParams {
  double c0 = 1.0;
  double c = 1.0;
  double C_tilde = 1.0;
  double K = 1.0;
  Rational alpha{1, 1};
  std::vector<double> forcing;  // b~_p, B(t^alpha) = sum_p b~_p t^{alpha p}
};

/// J Picard sweeps of the integral equation, each truncated at order N. The
/// first min(J, N) coefficients are final after J sweeps.
inline PuiseuxSeries picard_oracle(const PicardParams& prm, std::size_t J, std::size_t N) {
  if (J < 1) throw invalid_input("picard_oracle needs at least one iteration");
  detail::check_alpha_positive(prm.alpha);
  check_order(N);
  PuiseuxSeries kernel = PuiseuxSeries::zero(prm.alpha, N);
  double kp = 1.0;
  for (std::size_t p = 0; p <= N; ++p, kp *= prm.K) kernel.coeffs[p] = kp;

  PuiseuxSeries forcing_term = PuiseuxSeries::zero(prm.alpha, N);
  if (!prm.forcing.empty()) {
    PuiseuxSeries B = PuiseuxSeries::zero(prm.alpha, N);
    for (std::size_t p = 0; p <= N && p < prm.forcing.size(); ++p) B.coeffs[p] = prm.forcing[p];
    forcing_term = rl_integral(B).truncated(N);
  }

  PuiseuxSeries h = PuiseuxSeries::zero(prm.alpha, N);
  h.coeffs[0] = prm.c0;
  const double cc = prm.c * prm.C_tilde;
  for (std::size_t j = 0; j < J; ++j) {
    PuiseuxSeries next = rl_integral(multiply(h, kernel)).truncated(N);
    for (auto& v : next.coeffs) v *= cc;
    next.coeffs[0] += prm.c0;
    for (std::size_t p = 0; p <= N; ++p) next.coeffs[p] += forcing_term.coeffs[p];
    h = std::move(next);
  }
  return h;
}

/// Coefficients of c0 (1 - K z)^{-c C~ / K}: c0 (beta)_p K^p / p!, beta = c C~ / K.
inline std::vector<double> binomial_majorant(double c0, double cC, double K, std::size_t N) {
  std::vector<double> out(N + 1);
  const double beta = cC / K;
  out[0] = c0;
  for (std::size_t p = 0; p < N; ++p)
    out[p + 1] = out[p] * (beta + static_cast<double>(p)) * K / static_cast<double>(p + 1);
  return out;
}

// ---------------------------------------------------------------------------
// Bounded partial sums on [0, r1]
// ---------------------------------------------------------------------------

/// Supremum of admissible windows: (Gamma(a+1) / (n c C~ + K Gamma(a+1)))^{1/a}.
inline double r1_supremum(std::size_t n, double c, double C_tilde, double K, double alpha) {
  const double g = std::tgamma(alpha + 1.0);
  return std::pow(g / (static_cast<double>(n) * c * C_tilde + K * g), 1.0 / alpha);
}

/// Delta = max{c0, (c0 + B1 r1^a / Gamma(a)) / (1 - c C~ r1^a / (Gamma(a+1)(1 - K r1^a)))}.
inline double delta_constant(double c0, double c, double C_tilde, double K, double alpha, double r1, double B1 = 0.0) {
  const double ra = std::pow(r1, alpha);
  const double denom = 1.0 - c * C_tilde / std::tgamma(alpha + 1.0) * ra / (1.0 - K * ra);
  if (!(denom > 0.0) || !(K * ra < 1.0)) throw invalid_input("r1 lies outside the admissible window");
  return std::max(c0, (c0 + B1 * ra / std::tgamma(alpha)) / denom);
}

struct DeltaBoundCheck {
  double r1 = 0.0;
  double Delta = 0.0;
  double B1 = 0.0;
  double sup_partial = 0.0;  // max over p <= N and grid x of omega_p(x)
  bool holds = false;
};

/// Partial sums omega_p(x) = sum_{k<=p} c~_k x^{alpha k} of the oracle
/// solution on a uniform grid of [0, r1], r1 = fraction * r1_supremum(n = 1).
inline DeltaBoundCheck check_delta_bound(const PicardParams& prm, std::size_t N, double fraction = 0.9,
                                         std::size_t grid = 256) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw invalid_input("r1 fraction must lie in (0, 1)");
  if (grid < 2) throw invalid_input("grid needs at least two points");
  const double a = prm.alpha.value();
  DeltaBoundCheck out;
  out.r1 = fraction * r1_supremum(1, prm.c, prm.C_tilde, prm.K, a);
  const double ra = std::pow(out.r1, a);
  double t = 1.0;
  for (double b : prm.forcing) {
    out.B1 += b * t;
    t *= ra;
  }
  out.Delta = delta_constant(prm.c0, prm.c, prm.C_tilde, prm.K, a, out.r1, out.B1);
  const PuiseuxSeries h = picard_oracle(prm, std::max<std::size_t>(N, 1), N);
  for (std::size_t i = 0; i < grid; ++i) {
    const double x = out.r1 * static_cast<double>(i) / static_cast<double>(grid - 1);
    const double xa = std::pow(x, a);
    double partial = 0.0, pw = 1.0;
    for (std::size_t p = 0; p <= N; ++p, pw *= xa) {
      partial += h.coeffs[p].real() * pw;
      out.sup_partial = std::max(out.sup_partial, std::abs(partial));
    }
  }
  out.holds = out.sup_partial <= out.Delta * (1.0 + 1e-9);
  return out;
}

}  // namespace mde
