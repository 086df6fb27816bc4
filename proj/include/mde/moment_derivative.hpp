#pragma once

// The moment derivative: d_m z^p = (m_p / m_{p-1}) z^{p-1}, d_m 1 = 0.

#include <cstddef>
#include <string>
#include <vector>

#include "mde/errors.hpp"
#include "mde/moment_sequence.hpp"
#include "mde/series.hpp"

namespace mde {

/// Order drops by one; an order-0 input gives the zero series of order 0.
inline TruncatedSeries moment_derivative(const TruncatedSeries& f, const MomentSequence& seq) {
  const std::size_t N = f.order();
  if (N == 0) return TruncatedSeries::zero(0);
  std::vector<cplx> c(N);
  for (std::size_t p = 0; p < N; ++p) c[p] = f[p + 1] * seq.ratio(p + 1);
  return TruncatedSeries(std::move(c));
}

inline TruncatedSeries iterated_moment_derivative(const TruncatedSeries& f, const MomentSequence& seq, std::size_t j) {
  if (j > f.order())
    throw order_exhausted("cannot take " + std::to_string(j) + " moment derivatives of a series of order " +
                          std::to_string(f.order()));
  TruncatedSeries g = f;
  for (std::size_t i = 0; i < j; ++i) g = moment_derivative(g, seq);
  return g;
}

inline VectorSeries moment_derivative(const VectorSeries& y, const MomentSequence& seq) {
  const std::size_t N = y.order();
  if (N == 0) return VectorSeries(y.dim(), 0);
  VectorSeries r(y.dim(), N - 1);
  for (std::size_t p = 0; p < N; ++p) r[p] = y[p + 1] * seq.ratio(p + 1);
  return r;
}

inline MatrixSeries moment_derivative(const MatrixSeries& Y, const MomentSequence& seq) {
  const std::size_t N = Y.order();
  if (N == 0) return MatrixSeries(Y.rows(), Y.cols(), 0);
  MatrixSeries r(Y.rows(), Y.cols(), N - 1);
  for (std::size_t p = 0; p < N; ++p) r[p] = Y[p + 1] * seq.ratio(p + 1);
  return r;
}

/// (d_m z^p)(z - z0) - d_m((z - z0)^p), a polynomial of degree p - 1. It
/// vanishes identically only for sequences proportional to factorials.
inline TruncatedSeries shift_commutation_defect(const MomentSequence& seq, std::size_t p, cplx z0) {
  if (p == 0) throw invalid_input("shift_commutation_defect requires p >= 1");
  if (z0 == cplx{}) throw invalid_input("shift_commutation_defect requires z0 != 0");
  const TruncatedSeries lhs = shift_expand(TruncatedSeries::monomial(p - 1, p - 1, seq.ratio(p)), z0);
  const TruncatedSeries rhs = moment_derivative(shift_expand(TruncatedSeries::monomial(p, p), z0), seq);
  return lhs - rhs;
}

}  // namespace mde
