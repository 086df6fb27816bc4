#include <catch_amalgamated.hpp>

#include <cmath>

#include "mde/moment_sequence.hpp"

using namespace mde;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("values of the built-in kinds", "[moment_sequences]") {
  CHECK_THAT(MomentSequence::factorial().value(4), WithinRel(24.0, 1e-14));
  CHECK_THAT(MomentSequence::gevrey({2, 1}).value(3), WithinRel(36.0, 1e-14));
  CHECK_THAT(MomentSequence::gamma_moment({1, 2}).value(2), WithinRel(1.0, 1e-14));
  CHECK_THAT(MomentSequence::q_gevrey(2.0).value(3), WithinRel(512.0, 1e-14));
  CHECK_THAT(MomentSequence::factorial(3.0).value(0), WithinRel(3.0, 1e-15));
}

TEST_CASE("ratios", "[moment_sequences]") {
  CHECK_THAT(MomentSequence::factorial().ratio(5), WithinRel(5.0, 1e-14));
  // Gamma(2) / Gamma(3/2), mpmath
  CHECK_THAT(MomentSequence::gamma_moment({1, 2}).ratio(2), WithinRel(1.1283791670955126, 1e-13));
  CHECK_THAT(MomentSequence::q_gevrey(2.0).ratio(3), WithinRel(32.0, 1e-13));
  CHECK_THAT(MomentSequence::gevrey({2, 1}).ratio(3), WithinRel(9.0, 1e-13));
}

TEST_CASE("log values stay finite far beyond double overflow", "[moment_sequences]") {
  const auto g = MomentSequence::gamma_moment({1, 3});
  const double lv = g.log_value(10000);
  CHECK(std::isfinite(lv));
  CHECK_THAT(lv, WithinRel(std::lgamma(1.0 + 10000.0 / 3.0), 1e-14));
  CHECK(std::isfinite(MomentSequence::factorial().log_value(10000)));
}

TEST_CASE("value(p) = value(p-1) * ratio(p) for p <= 200", "[moment_sequences][property]") {
  for (const auto& seq : {MomentSequence::factorial(), MomentSequence::gevrey({3, 2}), MomentSequence::gamma_moment({1, 2}),
                          MomentSequence::gamma_moment({2, 1})}) {
    for (std::size_t p = 1; p <= 200; ++p) {
      const double lhs = seq.log_value(p);
      const double rhs = seq.log_value(p - 1) + std::log(seq.ratio(p));
      REQUIRE_THAT(lhs, WithinAbs(rhs, 1e-12 * std::max(1.0, std::abs(lhs))));
    }
  }
}

TEST_CASE("custom tables", "[moment_sequences]") {
  const auto s = MomentSequence::custom({1.0, 2.0, 8.0});
  CHECK_THAT(s.ratio(2), WithinRel(4.0, 1e-14));
  CHECK_THROWS_AS(s.value(3), out_of_range_error);
  try {
    (void)s.value(5);
  } catch (const out_of_range_error& e) {
    CHECK(e.index() == 5);
    CHECK(e.available() == 3);
  }
  const auto ext = MomentSequence::custom({1.0, 2.0, 8.0}, ExtensionRule::constant_ratio);
  CHECK_THAT(ext.value(4), WithinRel(128.0, 1e-12));
  CHECK_THROWS_AS(MomentSequence::custom({1.0, -2.0}), invalid_input);
  CHECK_THROWS_AS(MomentSequence::q_gevrey(1.0), invalid_input);
}

TEST_CASE("diagnose: factorial satisfies (A) with C = 1", "[moment_sequences]") {
  const auto d = diagnose(MomentSequence::factorial(), 50);
  CHECK(d.assumption_A.holds_on_window);
  CHECK(d.assumption_A.C_estimate == 1.0);
  CHECK(d.preferred() == AssumptionPath::A);
  CHECK(d.lc_ok);
  CHECK(d.mg_ok);
}

TEST_CASE("diagnose: gamma_moment(1/2) fails (A) and satisfies (B) with alpha 1/2, C = 1", "[moment_sequences]") {
  const auto d = diagnose(MomentSequence::gamma_moment({1, 2}), 100);
  CHECK_FALSE(d.assumption_A.holds_on_window);
  CHECK(d.assumption_B.holds_on_window);
  CHECK(d.assumption_B.alpha_estimate == Rational{1, 2});
  CHECK_THAT(d.assumption_B.C_estimate, WithinAbs(1.0, 1e-12));
  CHECK(d.preferred() == AssumptionPath::B);
}

TEST_CASE("diagnose: Gevrey kinds and q-Gevrey satisfy (A)", "[moment_sequences]") {
  CHECK(diagnose(MomentSequence::gevrey({1, 1}), 50).assumption_A.holds_on_window);
  CHECK(diagnose(MomentSequence::gevrey({2, 1}), 50).assumption_A.holds_on_window);
  const auto q = diagnose(MomentSequence::q_gevrey(2.0), 50);
  CHECK(q.assumption_A.holds_on_window);
  CHECK_FALSE(q.mg_ok);
}

TEST_CASE("gamma_moment(alpha >= 1) passes (A) on every window up to 200", "[moment_sequences][property]") {
  for (const Rational a : {Rational{1, 1}, Rational{3, 2}, Rational{2, 1}})
    for (std::size_t P : {8u, 16u, 50u, 100u, 200u}) {
      INFO("alpha = " << a.str() << ", P = " << P);
      const auto seq = MomentSequence::gamma_moment(a);
      const auto d = diagnose(seq, P);
      REQUIRE(d.assumption_A.holds_on_window);
      for (std::size_t p = 1; p <= P; ++p)
        REQUIRE(seq.ratio(p) >= static_cast<double>(p) / d.assumption_A.C_estimate * (1.0 - 1e-12));
    }
}

TEST_CASE("log-convexity holds for Gevrey sequences", "[moment_sequences][property]") {
  for (const Rational a : {Rational{1, 2}, Rational{1, 1}, Rational{5, 2}}) {
    const auto seq = MomentSequence::gevrey(a);
    for (std::size_t p = 1; p < 100; ++p)
      REQUIRE(seq.log_value(p - 1) + seq.log_value(p + 1) - 2.0 * seq.log_value(p) >= -1e-12);
    CHECK(diagnose(seq, 64).lc_ok);
  }
}

TEST_CASE("diagnose rejects windows below 8", "[moment_sequences]") {
  CHECK_THROWS_AS(diagnose(MomentSequence::factorial(), 7), invalid_input);
}

TEST_CASE("eval_M", "[moment_sequences]") {
  const auto f = MomentSequence::factorial();
  CHECK(eval_M(f, 0.0) == 0.0);
  CHECK(eval_M(MomentSequence::gevrey({2, 1}), 0.0) == 0.0);
  CHECK_THAT(eval_M(f, 1.0), WithinAbs(0.0, 1e-15));
  // brute-force scan of p - ln p! over p <= 20 (mpmath): attained at p = 2
  CHECK_THAT(eval_M(f, std::exp(1.0)), WithinRel(1.3068528194400547, 1e-13));
  CHECK_THROWS_AS(eval_M(f, std::nan("")), invalid_input);
}

TEST_CASE("eval_M is nondecreasing and dominates every probed term", "[moment_sequences][property]") {
  for (const auto& seq : {MomentSequence::factorial(), MomentSequence::gamma_moment({1, 2}), MomentSequence::gevrey({2, 1})}) {
    double prev = 0.0;
    for (double t = 0.0; t <= 50.0; t += 0.25) {
      const double m = eval_M(seq, t);
      REQUIRE(m >= prev - 1e-12);
      if (t > 0.0)
        for (std::size_t p = 0; p <= 60; ++p)
          REQUIRE(m >= static_cast<double>(p) * std::log(t) - (seq.log_value(p) - seq.log_value(0)) - 1e-9);
      prev = m;
    }
  }
}
