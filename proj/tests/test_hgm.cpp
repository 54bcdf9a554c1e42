#include <cmath>

#include "gtest/gtest.h"
#include "example_fixture.hpp"
#include "holohj/verify.hpp"
#include "random_gen.hpp"

namespace holohj {
namespace {

using testing::example;
using testing::example_point;

NumPoint<double> to_double(const NumPoint<Extended>& z) { return z.cast<double>(); }

// Closed-form boundary vector [d^beta h] from the expression oracle.
Vec<double> closed_form_q(const Hamiltonian& h, const PfaffianSystem& S, const NumPoint<double>& z) {
  Vec<double> q(static_cast<Eigen::Index>(S.dim));
  for (std::size_t k = 0; k < S.dim; ++k) q[static_cast<Eigen::Index>(k)] = evaluate(oracle_diff(h, S.basis[k]), z);
  return q;
}

// Seeded points in {x1, p1, p2 > 0} within distance r of the centre.
std::vector<NumPoint<double>> orthant_points(const NumPoint<double>& c, double r, int count, std::uint64_t seed) {
  testing::Gen gen(seed);
  std::vector<NumPoint<double>> out;
  while (static_cast<int>(out.size()) < count) {
    NumPoint<double> z = c;
    double norm = 0;
    for (auto& x : z.coords) {
      const double d = gen.real(-r, r);
      x += d;
      norm += d * d;
    }
    if (std::sqrt(norm) <= r && z.coords[0] > 0 && z.coords[2] > 0 && z.coords[3] > 0) out.push_back(z);
  }
  return out;
}

const Vec<double> kQ2 = (Vec<double>(5) << 0, 1, 0, -2, 0).finished();

TEST(Hgm, ExampleEndpointMatchesClosedForm) {
  const auto& p = example(1, 1);
  const NumPoint<double> zbar = to_double(example_point(1, 1));
  const Vec<double> qbar = to_vec<double>(p.canon.function.qbar);
  for (const auto& z : orthant_points(zbar, 0.5, 5, 21)) {
    const Vec<double> q = hgm_integrate(p.system(), zbar, qbar, {z});
    const double h = evaluate(p.h, z);
    EXPECT_NEAR(q[0], h, 1e-7 * std::max(1.0, std::abs(h)));
    EXPECT_LT((q - closed_form_q(p.h, p.system(), z)).norm(), 1e-7 * q.norm());
  }
}

TEST(Hgm, PathIndependence) {
  const auto& p = example(1, 1);
  const NumPoint<double> zbar = to_double(example_point(1, 1));
  const Vec<double> qbar = to_vec<double>(p.canon.function.qbar);
  NumPoint<double> target = zbar, via1 = zbar, via2 = zbar;
  target.coords = {0.8, 1.3, 0.3, 1.7};
  via1.coords = {0.8, 1.0, 0.0752, 2.0};
  via2.coords = {0.5, 1.3, 0.3, 2.2};
  PathConfig cfg;
  const Vec<double> a = hgm_integrate(p.system(), zbar, qbar, {via1, target}, cfg);
  const Vec<double> b = hgm_integrate(p.system(), zbar, qbar, {via2, target}, cfg);
  EXPECT_LT((a - b).norm() / a.norm(), 10 * cfg.integrator.rtol);
}

TEST(Gradients, ExampleBoundary) {
  const auto& p = example(2, 1);
  const NumPoint<Extended> z = example_point(2, 1);
  const Gradients<Extended> g = eval_gradients(p.sym, to_vec<Extended>(p.canon.function.qbar), z);
  EXPECT_LT(abs(g.p[0] + 1), Extended("1e-40"));
  EXPECT_LT(abs(g.p[1] + 2), Extended("1e-40"));
  const Gradients<Extended> zero = eval_gradients(p.sym, Vec<Extended>(Vec<Extended>::Zero(5)), z);
  EXPECT_TRUE(zero.x.isZero() && zero.p.isZero());
}

TEST(Gradients, FiniteDifferencesOfHgmValues) {
  const auto& p = example(1, 1);
  const NumPoint<double> zbar = to_double(example_point(1, 1));
  const Vec<double> qbar = to_vec<double>(p.canon.function.qbar);
  PathConfig cfg;
  cfg.integrator.rtol = 1e-13;
  cfg.integrator.atol = 1e-15;
  auto f_at = [&](const NumPoint<double>& z) { return hgm_integrate(p.system(), zbar, qbar, {z}, cfg); };
  const double step = 1e-5;
  for (const auto& z : orthant_points(zbar, 0.4, 5, 5)) {
    const Gradients<double> g = eval_gradients(p.sym, f_at(z), z);
    for (std::size_t i = 0; i < 4; ++i) {
      NumPoint<double> a = z, b = z;
      a.coords[i] += step;
      b.coords[i] -= step;
      const double fd = (f_at(a)[0] - f_at(b)[0]) / (2 * step);
      const double an = i < 2 ? g.x[static_cast<Eigen::Index>(i)] : g.p[static_cast<Eigen::Index>(i - 2)];
      EXPECT_NEAR(fd, an, 1e-5 * std::max(1.0, std::abs(an))) << "direction " << i;
    }
  }
}

TEST(Poisson, SmallCases) {
  Gradients<double> f{Vec<double>::Random(3), Vec<double>::Random(3)};
  EXPECT_EQ(poisson_numeric(f, f), 0.0);
  const Gradients<double> x1{Vec<double>::Unit(1, 0), Vec<double>::Zero(1)};
  const Gradients<double> p1{Vec<double>::Zero(1), Vec<double>::Unit(1, 0)};
  EXPECT_EQ(poisson_numeric(x1, p1), -1.0);
  EXPECT_EQ(poisson_numeric(p1, x1), 1.0);
}

TEST(Poisson, ExamplePairVanishes) {
  const auto& p = example(1, 1);
  const NumPoint<double> zbar = to_double(example_point(1, 1));
  const Vec<double> q1 = to_vec<double>(p.canon.function.qbar);
  NumericSymplectic<double> ns(p.sym);
  for (const auto& z : orthant_points(zbar, 0.5, 20, 77)) {
    const Vec<double> a = hgm_integrate(p.system(), zbar, q1, {z});
    const Vec<double> b = hgm_integrate(p.system(), zbar, kQ2, {z});
    EXPECT_LT(std::abs(poisson_numeric(ns.gradients(a, z.ring_values()), ns.gradients(b, z.ring_values()))), 1e-6);
  }
}

// (p1^2 + x1^2)/2 with polynomial atoms: the canonical system is constant.
TEST(Flow, HarmonicOscillator) {
  const Hamiltonian h = parse_hamiltonian("(p1^2 + x1^2)/2");
  BuildOptions opt;
  opt.monomial_form = MonomialForm::nilpotent;
  const NumPoint<Extended> z0{{1, 0}, {}};
  const CanonicalForm c = build_h(h, z0, opt);
  EXPECT_TRUE(c.function.system.singular_locus.is_constant());
  const SymplecticData sym = extract_symplectic(c.function.system);
  const PfaffianProvider<double> prov(c.function.system, sym, {to_vec<double>(c.function.qbar)});
  IntegratorConfig cfg;
  const FlowResult<double> r = hamiltonian_flow(prov, to_double(z0), 2 * M_PI, cfg);
  EXPECT_NEAR(r.states.back()[0], 1.0, 1e-6);
  EXPECT_NEAR(r.states.back()[1], 0.0, 1e-6);
  EXPECT_LT(r.max_drift(0), 1e-7);
  for (std::size_t k = 1; k < r.times.size(); ++k) ASSERT_GT(r.times[k], r.times[k - 1]);
  for (std::size_t k = 0; k < r.times.size(); ++k)
    ASSERT_NEAR(r.states[k][0], std::cos(r.times[k]), 1e-7);
}

TEST(Flow, DirectProviderMatchesPfaffian) {
  const DirectProvider<double> prov(
      [](const NumPoint<double>& z) {
        return Gradients<double>{Vec<double>::Constant(1, z.coords[0]), Vec<double>::Constant(1, z.coords[1])};
      },
      {[](const NumPoint<double>& z) { return (z.coords[0] * z.coords[0] + z.coords[1] * z.coords[1]) / 2; }});
  const FlowResult<double> r = hamiltonian_flow<double>(prov, NumPoint<double>{{1, 0}, {}}, Vec<double>(0), M_PI / 2);
  EXPECT_NEAR(r.states.back()[0], 0.0, 1e-8);
  EXPECT_NEAR(r.states.back()[1], -1.0, 1e-8);
  EXPECT_LT(r.max_drift(0), 1e-9);
}

TEST(Flow, ExampleConservesBothIntegrals) {
  const auto& p = example(1, 1);
  const NumPoint<double> zbar = to_double(example_point(1, 1));
  const PfaffianProvider<double> prov(p.system(), p.sym, {to_vec<double>(p.canon.function.qbar), kQ2});
  IntegratorConfig cfg;
  cfg.rtol = 1e-12;
  cfg.atol = 1e-14;
  const FlowResult<double> r = hamiltonian_flow(prov, zbar, 0.5, cfg);
  EXPECT_LT(std::abs(r.integrals.front()[0]), 1e-8);
  EXPECT_LT(std::abs(r.integrals.front()[1]), 1e-8);
  EXPECT_LT(r.max_drift(0), 1e-7);
  EXPECT_LT(r.max_drift(1), 1e-6);
  // The recorded h agrees with the closed form along the trajectory.
  for (std::size_t k = 0; k < r.states.size(); k += 7) {
    NumPoint<double> z = zbar;
    z.coords = r.states[k];
    ASSERT_NEAR(r.residual[k], evaluate(p.h, z), 1e-8);
  }
}

TEST(Flow, SeveralHamiltoniansConserveH) {
  const char* cases[] = {"p1^2/2 - cos(x1)", "x1*p2 + exp(x2)*p1 - p1^2", "p1*p2 + sin(x1)*x2"};
  for (const char* text : cases) {
    const Hamiltonian h = parse_hamiltonian(text);
    const std::size_t n = h.n();
    NumPoint<Extended> z0;
    for (std::size_t i = 0; i < 2 * n; ++i) z0.coords.push_back(Extended(0.4 + 0.15 * static_cast<double>(i)));
    BuildOptions opt;
    opt.monomial_form = MonomialForm::nilpotent;
    const CanonicalForm c = build_h(h, z0, opt);
    const SymplecticData sym = extract_symplectic(c.function.system);
    const PfaffianProvider<double> prov(c.function.system, sym, {to_vec<double>(c.function.qbar)});
    const FlowResult<double> r = hamiltonian_flow(prov, to_double(z0), 1.0);
    EXPECT_LT(r.max_drift(0), 1e-7) << text;
  }
}

TEST(Reconstruct, HyperbolicBranch) {
  // h = (p^2 - x^2)/2 on the branch p = x: v = x^2/2 - x0^2/2.
  const Hamiltonian h = parse_hamiltonian("(p1^2 - x1^2)/2");
  BuildOptions opt;
  opt.monomial_form = MonomialForm::nilpotent;
  const NumPoint<Extended> z0{{0.5, 0.5}, {}};
  const CanonicalForm c = build_h(h, z0, opt);
  const SymplecticData sym = extract_symplectic(c.function.system);
  PfaffianTracker<double> ev(c.function.system, sym, to_double(z0), {to_vec<double>(c.function.qbar)});
  std::vector<std::vector<double>> path;
  for (int j = 0; j <= 10; ++j) path.push_back({0.5 + 0.1 * j});
  const Reconstruction<double> r = reconstruct_v(ev, path, Vec<double>::Constant(1, 0.5));
  EXPECT_LT(r.max_residual(), 1e-8);
  for (std::size_t j = 0; j < path.size(); ++j) {
    EXPECT_NEAR(r.p[j][0], path[j][0], 1e-9);
    EXPECT_NEAR(r.v[j], path[j][0] * path[j][0] / 2 - 0.125, 1e-9);
  }
}

TEST(Reconstruct, ConstantMomentumGivesAffineV) {
  const std::vector<double> c = {0.3, -1.2};
  DirectIntegrals<double> ev(2, [&](const NumPoint<double>& z, std::vector<double>& f, std::vector<Gradients<double>>& g) {
    f = {z.coords[2] - c[0], z.coords[3] - c[1]};
    g = {{Vec<double>::Zero(2), Vec<double>::Unit(2, 0)}, {Vec<double>::Zero(2), Vec<double>::Unit(2, 1)}};
  });
  std::vector<std::vector<double>> path;
  for (int j = 0; j <= 9; ++j) path.push_back({0.1 * j, 1 - 0.05 * j});
  const Reconstruction<double> r = reconstruct_v(ev, path, (Vec<double>(2) << c[0], c[1]).finished());
  for (std::size_t j = 1; j + 1 < path.size(); ++j) EXPECT_LT(std::abs(r.v[j + 1] - 2 * r.v[j] + r.v[j - 1]), 1e-9);
  EXPECT_LT(r.max_symmetry_defect(), 1e-9);
}

TEST(Reconstruct, ExampleManifold) {
  const auto& p = example(1, 1);
  const NumPoint<double> zbar = to_double(example_point(1, 1));
  PathConfig cfg;
  cfg.integrator.rtol = 1e-12;
  cfg.integrator.atol = 1e-14;
  PfaffianTracker<double> ev(p.system(), p.sym, zbar, {to_vec<double>(p.canon.function.qbar), kQ2}, cfg);
  std::vector<std::vector<double>> path;
  for (int j = 0; j < 10; ++j) path.push_back({zbar.coords[0] + 0.01 * j, zbar.coords[1] + 0.02 * j});
  const Reconstruction<double> r =
      reconstruct_v(ev, path, (Vec<double>(2) << zbar.coords[2], zbar.coords[3]).finished(), zbar.params);
  EXPECT_LT(r.max_residual(), 1e-6);
  EXPECT_LT(r.max_symmetry_defect(), 1e-4);
  for (std::size_t j = 0; j < path.size(); ++j) {
    NumPoint<double> z = zbar;
    z.coords = {path[j][0], path[j][1], r.p[j][0], r.p[j][1]};
    EXPECT_LT(std::abs(evaluate(p.h, z)), 1e-6);
  }
}

TEST(Reconstruct, Errors) {
  const Hamiltonian h = parse_hamiltonian("(p1^2 - x1^2)/2");
  BuildOptions opt;
  opt.monomial_form = MonomialForm::nilpotent;
  const NumPoint<Extended> z0{{0, 0}, {}};
  const CanonicalForm c = build_h(h, z0, opt);
  const SymplecticData sym = extract_symplectic(c.function.system);
  PfaffianTracker<double> ev(c.function.system, sym, to_double(z0), {to_vec<double>(c.function.qbar)});
  EXPECT_THROW(reconstruct_v(ev, {{0.0}, {0.1}}, Vec<double>::Zero(1)), JacobianSingular);
  EXPECT_THROW(reconstruct_v(ev, {{0.0}, {0.1}}, Vec<double>::Constant(1, 0.3)), InputError);

  // f = cbrt(p - x): Newton overshoots by a factor -2 each step.
  DirectIntegrals<double> cube(1, [](const NumPoint<double>& z, std::vector<double>& f, std::vector<Gradients<double>>& g) {
    const double e = z.coords[1] - z.coords[0];
    f = {std::cbrt(e)};
    g = {{Vec<double>::Constant(1, 0), Vec<double>::Constant(1, 1.0 / (3 * std::cbrt(e) * std::cbrt(e)))}};
  });
  EXPECT_THROW(reconstruct_v(cube, {{0.0}, {0.1}}, Vec<double>::Zero(1)), NewtonDivergence);
}

}  // namespace
}  // namespace holohj
