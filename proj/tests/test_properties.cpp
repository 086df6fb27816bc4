#include <catch_amalgamated.hpp>

#include <chrono>
#include <random>

#include "mde/mde.hpp"
#include "support.hpp"

using namespace mde;

// 100 problems: n <= 4, N = 32, 25 per sequence kind.
TEST_CASE("randomized residual suite", "[properties]") {
  std::mt19937_64 rng(testing::suite_seed);
  const auto seqs = testing::suite_sequences();
  const auto start = std::chrono::steady_clock::now();
  std::size_t index = 0;
  for (const auto& [name, seq] : seqs)
    for (int t = 0; t < 25; ++t, ++index) {
      const auto pb = testing::random_problem(rng, seq, 32, index);
      const auto res = solve(pb);
      INFO(name << " problem " << index << " n = " << pb.dim());
      REQUIRE(res.residual.max_relative <= 1e-9);
      REQUIRE(res.majorant_dominates);
      REQUIRE(res.certificate.radius_guaranteed);
      REQUIRE(res.radius_empirical);
      if (!res.radius_empirical->unbounded)
        REQUIRE(res.radius_empirical->radius >= 0.9 * *res.certificate.radius_guaranteed);
    }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs <= 30.0);
}

TEST_CASE("solutions are linear in the data", "[properties]") {
  std::mt19937_64 rng(testing::suite_seed + 8);
  for (const auto& [name, seq] : testing::suite_sequences()) {
    auto p1 = testing::random_problem(rng, seq, 16, 0);
    auto p2 = p1;
    p2.y0 = Eigen::VectorXcd::Random(static_cast<Eigen::Index>(p1.dim()));
    auto p3 = p1;
    const cplx s{0.5, -2.0};
    p3.y0 = p1.y0 + s * p2.y0;
    const auto y1 = solve_coefficients(p1), y2 = solve_coefficients(p2), y3 = solve_coefficients(p3);
    for (std::size_t p = 0; p <= 16; ++p) {
      const Eigen::VectorXcd comb = y1[p] + s * y2[p];
      REQUIRE((y3[p] - comb).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + comb.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("r/(r - z) example keeps a dominated majorant on both paths", "[properties]") {
  std::vector<Eigen::MatrixXcd> A;
  for (std::size_t p = 0; p <= 32; ++p) A.push_back(Eigen::MatrixXcd::Constant(1, 1, std::pow(0.5, static_cast<double>(p))));
  for (const auto& seq : {MomentSequence::gamma_moment({1, 1}), MomentSequence::gamma_moment({1, 2})}) {
    CauchyProblem pb{seq, MatrixSeries(A), std::nullopt, Eigen::VectorXcd::Ones(1), 2.0, 32};
    const auto res = solve(pb);
    CHECK(res.residual_ok);
    CHECK(res.majorant_dominates);
  }
}
