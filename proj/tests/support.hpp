#pragma once

// Shared generators for the randomized suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mde/mde.hpp"

namespace mde::testing {

inline constexpr std::uint64_t suite_seed = 20240601;

inline std::vector<std::pair<std::string, MomentSequence>> suite_sequences() {
  return {{"factorial", MomentSequence::factorial()},
          {"gevrey(2)", MomentSequence::gevrey({2, 1})},
          {"gamma_moment(1/2)", MomentSequence::gamma_moment({1, 2})},
          {"q_gevrey(2)", MomentSequence::q_gevrey(2.0)}};
}

inline cplx random_complex(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double re = u(rng);
  const double im = u(rng);
  return {re, im};
}

inline Eigen::MatrixXcd random_matrix(std::mt19937_64& rng, std::size_t n) {
  Eigen::MatrixXcd M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = random_complex(rng);
  return M;
}

// A_p = M_p r^{-p} with random M_p, so A is analytic exactly on D(0, r).
// Every third problem carries a forcing term of the same shape.
inline CauchyProblem random_problem(std::mt19937_64& rng, const MomentSequence& seq, std::size_t N, std::size_t index) {
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  std::uniform_real_distribution<double> rad(0.5, 2.0);
  CauchyProblem pb;
  pb.seq = seq;
  pb.order = N;
  pb.radius = rad(rng);
  const std::size_t n = dim(rng);
  std::vector<Eigen::MatrixXcd> A;
  double s = 1.0;
  for (std::size_t p = 0; p <= N; ++p, s /= pb.radius) A.push_back(random_matrix(rng, n) * s);
  pb.A = MatrixSeries(std::move(A));
  pb.y0 = Eigen::VectorXcd(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < pb.y0.size(); ++i) pb.y0(i) = random_complex(rng);
  if (index % 3 == 2) {
    std::vector<Eigen::VectorXcd> b;
    s = 1.0;
    for (std::size_t p = 0; p <= N; ++p, s /= pb.radius) {
      Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = random_complex(rng) * s;
      b.push_back(v);
    }
    pb.b = VectorSeries(std::move(b));
  }
  return pb;
}

inline TruncatedSeries random_series(std::mt19937_64& rng, std::size_t N) {
  TruncatedSeries f = TruncatedSeries::zero(N);
  for (std::size_t p = 0; p <= N; ++p) f[p] = random_complex(rng);
  return f;
}

}  // namespace mde::testing
