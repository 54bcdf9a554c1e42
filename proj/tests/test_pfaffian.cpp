#include <cmath>
#include <functional>
#include <numbers>

#include "gtest/gtest.h"
#include "holohj/hgm.hpp"
#include "generators.hpp"
#include "random_gen.hpp"

namespace holohj {
namespace {

const VarNames kNames1 = VarNames::phase_space(1);
const VarNames kNames2 = VarNames::phase_space(2, {"a", "b"});

DiffOperator Op1(const std::string& s) { return parse_operator(s, kNames1, 2); }
RationalFunction R(const std::string& s) { return parse_rf(s, kNames2); }

NumPoint<Extended> point(std::vector<double> coords, std::vector<double> params = {}) {
  NumPoint<Extended> z;
  for (double c : coords) z.coords.push_back(Extended(c));
  for (double c : params) z.params.push_back(Extended(c));
  return z;
}

NumPoint<double> dpoint(std::vector<double> coords, std::vector<double> params = {}) { return {coords, params}; }

TEST(PfaffianFromGb, ExponentialOfProduct) {
  const GroebnerBasis G = buchberger({{Op1("dx1 - p1"), Op1("dp1 - x1")}, TermOrder{}, 2});
  const PfaffianSystem S = pfaffian_from_gb(G);
  ASSERT_EQ(S.dim, 1u);
  EXPECT_EQ(S.A[0](0, 0), RationalFunction::variable(1));
  EXPECT_EQ(S.A[1](0, 0), RationalFunction::variable(0));
}

TEST(PfaffianFromGb, Companion) {
  const GroebnerBasis G = buchberger({{Op1("dx1^2 + 1"), Op1("dp1")}, TermOrder{}, 2});
  const PfaffianSystem S = pfaffian_from_gb(G);
  ASSERT_EQ(S.dim, 2u);
  EXPECT_EQ(S.basis, (std::vector<Monomial>{Monomial{}, Monomial::unit(0)}));
  EXPECT_EQ(S.A[0](0, 1), RationalFunction(1));
  EXPECT_EQ(S.A[0](1, 0), RationalFunction(-1));
  EXPECT_TRUE(S.A[0](0, 0).is_zero() && S.A[0](1, 1).is_zero());
  EXPECT_TRUE(S.A[1].is_zero());
}

TEST(PfaffianFromGb, RequiresZeroDimensional) {
  const GroebnerBasis G = buchberger({{Op1("dx1^2 + 1")}, TermOrder{}, 2});
  EXPECT_THROW(pfaffian_from_gb(G), NotZeroDimensional);
}

TEST(Integrability, Examples) {
  PfaffianSystem S = PfaffianSystem::zero(2, 2);
  S.A[0](0, 1) = RationalFunction(1);
  S.A[0](1, 0) = RationalFunction(-1);
  EXPECT_TRUE(check_integrability(S));

  PfaffianSystem E = PfaffianSystem::zero(1, 2);
  E.A[0](0, 0) = RationalFunction::variable(1);
  E.A[1](0, 0) = RationalFunction::variable(0);
  EXPECT_TRUE(check_integrability(E));
  E.A[1](0, 0) = RationalFunction{};
  EXPECT_FALSE(check_integrability(E));
}

TEST(Hgm, SineCosineQuarterTurn) {
  PfaffianSystem S = PfaffianSystem::zero(2, 1);
  S.A[0](0, 1) = RationalFunction(1);
  S.A[0](1, 0) = RationalFunction(-1);
  Vec<double> q0(2);
  q0 << 0, 1;
  const auto q = hgm_integrate(S, dpoint({0}), q0, {dpoint({std::numbers::pi / 2})});
  EXPECT_NEAR(q[0], 1.0, 1e-9);
  EXPECT_NEAR(q[1], 0.0, 1e-9);
}

TEST(Hgm, ExponentialOfProduct) {
  PfaffianSystem S = PfaffianSystem::zero(1, 2);
  S.A[0](0, 0) = RationalFunction::variable(1);
  S.A[1](0, 0) = RationalFunction::variable(0);
  Vec<double> q0(1);
  q0 << 1;
  const auto q = hgm_integrate(S, dpoint({0, 0}), q0, {dpoint({1, 1})});
  EXPECT_LT(std::abs(q[0] - std::numbers::e) / std::numbers::e, 1e-9);
  // A detour through another waypoint gives the same endpoint.
  const auto q2 = hgm_integrate(S, dpoint({0, 0}), q0, {dpoint({1, 0}), dpoint({1, 1})});
  EXPECT_LT(std::abs(q2[0] - q[0]), 1e-9);
}

TEST(Hgm, ExtendedPrecision) {
  PfaffianSystem S = PfaffianSystem::zero(1, 2);
  S.A[0](0, 0) = RationalFunction::variable(1);
  S.A[1](0, 0) = RationalFunction::variable(0);
  Vec<Extended> q0(1);
  q0 << Extended(1);
  PathConfig cfg;
  cfg.integrator.rtol = 1e-20;
  cfg.integrator.atol = 1e-22;
  const auto q = hgm_integrate(S, point({0, 0}), q0, {point({1, 1})}, cfg);
  EXPECT_LT(abs(q[0] - exp(Extended(1))), Extended("1e-18"));
}

TEST(Hgm, SingularCrossingDetected) {
  PfaffianSystem S = PfaffianSystem::zero(1, 1);
  S.A[0](0, 0) = R("2/x1");
  S.update_singular_locus();
  Vec<double> q0(1);
  q0 << 1;
  EXPECT_THROW(hgm_integrate(S, dpoint({1}), q0, {dpoint({-1})}), SingularPathCrossing);
}

TEST(Hgm, LinearInBoundaryValues) {
  PfaffianSystem S = PfaffianSystem::zero(2, 1);
  S.A[0](0, 1) = RationalFunction(1);
  S.A[0](1, 0) = R("-1 - x1");
  Vec<double> qa(2), qb(2);
  qa << 1, 0.5;
  qb << -0.3, 2;
  const double lambda = 1.7;
  const auto ra = hgm_integrate(S, dpoint({0.1}), qa, {dpoint({1.3})});
  const auto rb = hgm_integrate(S, dpoint({0.1}), qb, {dpoint({1.3})});
  const auto rs = hgm_integrate(S, dpoint({0.1}), Vec<double>(qa + lambda * qb), {dpoint({1.3})});
  EXPECT_LT((rs - ra - lambda * rb).norm(), 1e-9);
}

TEST(Closure, SumWithZero) {
  const auto z = point({0.4, 0.9});
  const auto f = trig_function(TrigKind::sin, 0, 2, z);
  const auto zero = closure_scale(constant_function(2, z), RationalFunction{});
  const auto g = closure_sum(f, zero);
  EXPECT_EQ(g.dim(), 3u);
  EXPECT_LT(abs(g.value_at_base() - sin(Extended(0.4))), Extended("1e-40"));
}

TEST(Closure, SinePlusIdentity) {
  const auto z = point({0.5, 1.0});
  const auto f = closure_sum(trig_function(TrigKind::sin, 0, 2, z), monomial_function(0, 1, 2, z));
  EXPECT_TRUE(check_integrability(f.system));
  const double v = hgm_value(f, dpoint({0.7, 1.0}));
  EXPECT_NEAR(v, std::sin(0.7) + 0.7, 1e-10);
}

TEST(Closure, ProductMomentumSine) {
  const auto z = point({0.3, 1.0});
  const auto f = closure_prod(monomial_function(1, 1, 2, z), trig_function(TrigKind::sin, 0, 2, z));
  EXPECT_EQ(f.dim(), 2u);
  const double v = hgm_value(f, dpoint({0.5, 2.0}));
  EXPECT_NEAR(v, 2 * std::sin(0.5), 1e-10);
}

TEST(Closure, ProductOfMonomialsIsPolynomial) {
  const auto z = point({1.0, 1.0, 1.0, 1.0}, {1, 1});
  const auto f = closure_prod(monomial_function(1, 1, 4, z), monomial_function(3, 1, 4, z));
  const auto c = canonicalize(f).function;
  EXPECT_EQ(c.dim(), 1u);
  testing::Gen gen(9);
  for (int k = 0; k < 3; ++k) {
    const double x2 = gen.real(0.5, 2), p2 = gen.real(0.5, 2);
    EXPECT_NEAR(hgm_value(c, dpoint({1.0, x2, 1.0, p2}, {1, 1})), x2 * p2, 1e-10);
  }
  // Gradient rows: d/dx2 and d/dp2.
  EXPECT_EQ(c.system.A[1](0, 0), R("1/x2"));
  EXPECT_EQ(c.system.A[3](0, 0), R("1/p2"));
}

TEST(Closure, DiffOfConstant) {
  const auto f = closure_diff(constant_function(2, point({1, 1})), 0);
  EXPECT_TRUE(is_zero_row(f.extract));
}

TEST(Closure, DiffOfSineAtOrigin) {
  const auto f = closure_diff(trig_function(TrigKind::sin, 0, 2, point({0, 1})), 0);
  EXPECT_LT(abs(f.value_at_base() - 1), Extended("1e-40"));
}

TEST(Closure, BasePointMismatch) {
  EXPECT_THROW(closure_sum(constant_function(2, point({0, 1})), constant_function(2, point({1, 1}))),
               BasePointMismatch);
}

TEST(Canonicalize, SineFromProduct) {
  const auto z = point({0.2, 1.0});
  const auto f = closure_prod(trig_function(TrigKind::sin, 0, 2, z), constant_function(2, z));
  const auto c = canonicalize(f);
  ASSERT_EQ(c.function.dim(), 2u);
  EXPECT_EQ(c.function.system.basis, (std::vector<Monomial>{Monomial{}, Monomial::unit(0)}));
  EXPECT_EQ(c.function.system.A[0](0, 1), RationalFunction(1));
  EXPECT_EQ(c.function.system.A[0](1, 0), RationalFunction(-1));
  EXPECT_TRUE(c.function.system.A[1].is_zero());
  EXPECT_LT(abs(c.function.qbar[0] - sin(Extended(0.2))), Extended("1e-40"));
  // Annihilators: d_x1^2 + 1 and d_p1.
  const GroebnerBasis G = buchberger({c.annihilators, TermOrder{}, 2});
  EXPECT_EQ(standard_monomials(G), c.function.system.basis);
}

TEST(Canonicalize, Idempotent) {
  const auto z = point({0.2, 1.0});
  const auto once = canonicalize(trig_function(TrigKind::cos, 0, 2, z)).function;
  const auto twice = canonicalize(once).function;
  EXPECT_EQ(once.system.basis, twice.system.basis);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(once.system.A[i], twice.system.A[i]);
}

TEST(Canonicalize, ZeroExtractRejected) {
  auto f = constant_function(2, point({0, 1}));
  f.extract[0] = RationalFunction{};
  EXPECT_THROW(canonicalize(f), RankDeficientExtract);
}

TEST(Canonicalize, NilpotentMonomial) {
  const auto f = monomial_function(0, 1, 2, point({0.0, 1.0}), MonomialForm::nilpotent);
  const auto c = canonicalize(f).function;
  EXPECT_EQ(c.dim(), 2u);
  EXPECT_TRUE(c.system.singular_locus.is_constant());
}

TEST(ClosureProperty, RandomCompositionsMatchClosedForm) {
  testing::Gen gen(2024);
  const std::size_t nvars = 2;
  const auto z = point({0.8, 1.1});
  for (int iter = 0; iter < 50; ++iter) {
    const testing::Composite c = testing::random_composite(gen, z, nvars, 2);
    ASSERT_TRUE(check_integrability(c.f.system)) << c.text;
    ASSERT_NEAR(static_cast<double>(c.f.value_at_base()), c.value({0.8, 1.1}), 1e-12) << c.text;
    for (int k = 0; k < 5; ++k) {
      const std::vector<double> p = {gen.real(0.5, 1.5), gen.real(0.5, 1.5)};
      const double hv = hgm_value(c.f, dpoint(p));
      const double exact = c.value(p);
      ASSERT_LT(std::abs(hv - exact), 1e-8 * std::max(1.0, std::abs(exact))) << c.text;
    }
    // Canonical form preserves values and never grows. It may add apparent
    // singularities, so sample points whose straight path crosses one are
    // skipped.
    const auto canon = canonicalize(c.f).function;
    ASSERT_LE(canon.dim(), c.f.dim());
    ASSERT_TRUE(canon.system.basis[0].is_one());
    int checked = 0;
    for (int k = 0; k < 20 && checked < 5; ++k) {
      const std::vector<double> p = {gen.real(0.5, 1.5), gen.real(0.5, 1.5)};
      double hv;
      try {
        hv = hgm_value(canon, dpoint(p));
      } catch (const SingularPathCrossing&) {
        continue;
      }
      ++checked;
      ASSERT_LT(std::abs(hv - c.value(p)), 1e-8 * std::max(1.0, std::abs(c.value(p)))) << c.text;
    }
    ASSERT_GT(checked, 0) << c.text;
  }
}

}  // namespace
}  // namespace holohj
