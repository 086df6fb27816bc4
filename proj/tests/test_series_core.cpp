#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mde/moment_derivative.hpp"
#include "mde/series.hpp"
#include "support.hpp"

using namespace mde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double max_diff(const TruncatedSeries& a, const TruncatedSeries& b) {
  REQUIRE(a.order() == b.order());
  double d = 0.0;
  for (std::size_t p = 0; p <= a.order(); ++p) d = std::max(d, std::abs(a[p] - b[p]));
  return d;
}

}  // namespace

TEST_CASE("moment derivative on monomials", "[series_core]") {
  const auto d1 = moment_derivative(TruncatedSeries{0.0, 0.0, 1.0}, MomentSequence::factorial());
  CHECK(d1.order() == 1);
  CHECK(d1[0] == cplx{});
  CHECK(d1[1] == cplx{2.0});

  // ratio(1) = Gamma(3/2), mpmath
  const auto d2 = moment_derivative(TruncatedSeries{0.0, 1.0}, MomentSequence::gamma_moment({1, 2}));
  CHECK_THAT(d2[0].real(), WithinRel(0.88622692545275801, 1e-13));

  const auto d3 = moment_derivative(TruncatedSeries::monomial(3, 3), MomentSequence::gevrey({2, 1}));
  CHECK_THAT(d3[2].real(), WithinRel(9.0, 1e-13));
}

TEST_CASE("moment derivative of constants and order 0", "[series_core]") {
  const auto d = moment_derivative(TruncatedSeries::constant(5.0, 4), MomentSequence::factorial());
  CHECK(d.max_abs() == 0.0);
  const auto z = moment_derivative(TruncatedSeries{7.0}, MomentSequence::factorial());
  CHECK(z.order() == 0);
  CHECK(z[0] == cplx{});
}

TEST_CASE("iterated moment derivative", "[series_core]") {
  for (const auto& [name, seq] : testing::suite_sequences()) {
    INFO(name);
    for (std::size_t j = 0; j <= 6; ++j) {
      const auto d = iterated_moment_derivative(TruncatedSeries::monomial(j, 8), seq, j);
      // telescoping product of ratios: m_j / m_0
      REQUIRE_THAT(d.evaluate(0.0).real(), WithinRel(std::exp(seq.log_value(j) - seq.log_value(0)), 1e-12));
    }
  }
  std::mt19937_64 rng(7);
  const auto f = testing::random_series(rng, 6);
  CHECK(max_diff(iterated_moment_derivative(f, MomentSequence::factorial(), 0), f) == 0.0);

  TruncatedSeries e = TruncatedSeries::zero(20);
  for (std::size_t p = 0; p <= 20; ++p) e[p] = std::exp(-std::lgamma(p + 1.0));
  CHECK(max_diff(iterated_moment_derivative(e, MomentSequence::factorial(), 3), e.truncated(17)) < 1e-15);
  CHECK_THROWS_AS(iterated_moment_derivative(e, MomentSequence::factorial(), 21), order_exhausted);
}

TEST_CASE("products", "[series_core]") {
  const auto p = TruncatedSeries{1.0, 1.0, 0.0} * TruncatedSeries{1.0, -1.0, 0.0};
  CHECK(max_diff(p, TruncatedSeries{1.0, 0.0, -1.0}) == 0.0);

  TruncatedSeries g = TruncatedSeries::constant(1.0, 8);
  for (std::size_t k = 0; k <= 8; ++k) g[k] = 1.0;
  const auto q = g * TruncatedSeries{1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  CHECK(max_diff(q, TruncatedSeries::constant(1.0, 8)) == 0.0);

  // truncation to the smaller order
  CHECK((TruncatedSeries{1.0, 2.0, 3.0} * TruncatedSeries{1.0, 1.0}).order() == 1);
}

TEST_CASE("matrix times vector series at degree 0", "[series_core]") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXcd A0 = testing::random_matrix(rng, 3);
  const Eigen::MatrixXcd A1 = testing::random_matrix(rng, 3);
  const MatrixSeries A(std::vector<Eigen::MatrixXcd>{A0, A1});
  VectorSeries y(3, 1);
  y[0] = Eigen::VectorXcd::Ones(3);
  const auto Ay = A * y;
  CHECK((Ay[0] - A0 * y[0]).norm() < 1e-15);
  CHECK((Ay[1] - A1 * y[0]).norm() < 1e-15);
}

TEST_CASE("scalar inversion", "[series_core]") {
  const auto inv = invert(TruncatedSeries{1.0, -1.0, 0.0, 0.0, 0.0, 0.0});
  for (std::size_t p = 0; p <= 5; ++p) CHECK(inv[p] == cplx{1.0});
  CHECK_THROWS_AS(invert(TruncatedSeries{0.0, 1.0}), singular_at_origin);
}

TEST_CASE("matrix inversion", "[series_core]") {
  Eigen::MatrixXcd Nil = Eigen::MatrixXcd::Zero(2, 2);
  Nil(0, 1) = 1.0;
  const MatrixSeries Y(std::vector<Eigen::MatrixXcd>{Eigen::MatrixXcd::Identity(2, 2), Nil, Eigen::MatrixXcd::Zero(2, 2)});
  const auto inv = invert(Y);
  CHECK((inv.inverse[0] - Eigen::MatrixXcd::Identity(2, 2)).norm() == 0.0);
  CHECK((inv.inverse[1] + Nil).norm() == 0.0);
  CHECK(inv.inverse[2].norm() == 0.0);
  CHECK_FALSE(inv.ill_conditioned);

  const MatrixSeries S(std::vector<Eigen::MatrixXcd>{Eigen::MatrixXcd::Ones(2, 2)});
  CHECK_THROWS_AS(invert(S), singular_at_origin);
}

TEST_CASE("inverse times series is the identity", "[series_core][property]") {
  std::mt19937_64 rng(testing::suite_seed);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::MatrixXcd> c;
    for (int p = 0; p <= 12; ++p) c.push_back(testing::random_matrix(rng, 3) + (p == 0 ? 3.0 : 0.0) * Eigen::MatrixXcd::Identity(3, 3));
    const MatrixSeries Y(std::move(c));
    const auto inv = invert(Y);
    const auto prod = Y * inv.inverse;
    for (std::size_t p = 0; p <= 12; ++p) {
      const Eigen::MatrixXcd expected = Eigen::MatrixXcd::Identity(3, 3) * (p == 0 ? 1.0 : 0.0);
      REQUIRE((prod[p] - expected).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("shift_expand", "[series_core]") {
  const auto s = shift_expand(TruncatedSeries{0.0, 0.0, 1.0}, 1.0);
  CHECK(max_diff(s, TruncatedSeries{1.0, -2.0, 1.0}) < 1e-15);

  std::mt19937_64 rng(3);
  const auto f = testing::random_series(rng, 9);
  CHECK(max_diff(shift_expand(f, 0.0), f) == 0.0);

  // the re-expansion of f(z - z0) evaluated at 2 equals f(2 - z0)
  const TruncatedSeries g{1.0, 1.0, 1.0};
  const cplx z0{0.0, 1.0};
  CHECK(std::abs(shift_expand(g, z0).evaluate(2.0) - g.evaluate(2.0 - z0)) < 1e-13);
}

TEST_CASE("shift_expand stays accurate past the Pascal table", "[series_core]") {
  const std::size_t N = 100;
  const auto s = shift_expand(TruncatedSeries::monomial(N, N), -0.5);
  // (z + 1/2)^100: coefficient k is C(100, k) 2^{k - 100}
  for (std::size_t k = 0; k <= N; k += 10)
    CHECK_THAT(s[k].real(), WithinRel(std::exp(detail::log_binomial(N, k) + (static_cast<double>(k) - 100.0) * std::log(2.0)), 1e-11));
}

TEST_CASE("translation commutes with the classical derivative", "[series_core]") {
  for (std::size_t p = 1; p <= 8; ++p)
    for (const cplx z0 : {cplx{1.0}, cplx{2.0, 1.0}}) {
      CHECK(shift_commutation_defect(MomentSequence::factorial(), p, z0).max_abs() < 1e-12);
      CHECK(shift_commutation_defect(MomentSequence::factorial(3.0), p, z0).max_abs() < 1e-12);
    }
  CHECK(shift_commutation_defect(MomentSequence::factorial(), 7, 1.0).max_abs() < 1e-12);
  const auto custom = MomentSequence::custom({3.0, 3.0, 6.0, 18.0, 72.0});
  CHECK(shift_commutation_defect(custom, 4, 2.0).max_abs() < 1e-12);
}

TEST_CASE("translation fails to commute for other sequences", "[series_core]") {
  // ratios 1 and 4: 4(z - 1) - d_m(z^2 - 2z + 1) = (4z - 4) - (4z - 2)
  const auto d = shift_commutation_defect(MomentSequence::gevrey({2, 1}), 2, 1.0);
  CHECK_THAT(d[0].real(), WithinAbs(-2.0, 1e-13));
  for (std::size_t k = 1; k <= d.order(); ++k) CHECK(std::abs(d[k]) < 1e-13);
  CHECK(shift_commutation_defect(MomentSequence::gamma_moment({1, 2}), 2, 1.0).max_abs() >= 0.5);
}

TEST_CASE("order limits", "[series_core]") {
  CHECK_THROWS_AS(TruncatedSeries::zero(max_order + 1), invalid_input);
  CHECK_THROWS_AS(TruncatedSeries(std::vector<cplx>{}), invalid_input);
  CHECK_THROWS_AS(TruncatedSeries({cplx{std::nan(""), 0.0}}), invalid_input);
}
