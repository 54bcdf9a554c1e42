#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <type_traits>
#include <vector>

#include "holohj/hgm.hpp"
#include "holohj/hje.hpp"

namespace holohj {

template <class Real>
struct Gradients {
  Vec<Real> x, p;
};

/// B_x and B_p compiled for repeated evaluation.
template <class Real>
class NumericSymplectic {
 public:
  explicit NumericSymplectic(const SymplecticData& sym) : n_(sym.n) {
    for (const RFMatrix* B : {&sym.Bx, &sym.Bp}) {
      std::vector<Entry> e;
      for (std::size_t i = 0; i < B->rows(); ++i)
        for (std::size_t l = 0; l < B->cols(); ++l)
          if (!(*B)(i, l).is_zero()) e.push_back({i, l, CompiledRF<Real>((*B)(i, l))});
      (B == &sym.Bx ? bx_ : bp_) = std::move(e);
    }
  }

  std::size_t n() const { return n_; }

  Gradients<Real> gradients(const Vec<Real>& q, const std::vector<Real>& vals) const {
    return {apply(bx_, q, vals), apply(bp_, q, vals)};
  }

 private:
  struct Entry {
    std::size_t i, l;
    CompiledRF<Real> f;
  };

  Vec<Real> apply(const std::vector<Entry>& es, const Vec<Real>& q, const std::vector<Real>& vals) const {
    Vec<Real> r = Vec<Real>::Zero(static_cast<Eigen::Index>(n_));
    for (const auto& e : es) r[static_cast<Eigen::Index>(e.i)] += e.f.eval(vals) * q[static_cast<Eigen::Index>(e.l)];
    return r;
  }

  std::size_t n_ = 0;
  std::vector<Entry> bx_, bp_;
};

/// (grad_x f, grad_p f) at z for the function whose vector at z is q.
template <class Real>
Gradients<Real> eval_gradients(const SymplecticData& sym, const Vec<Real>& q, const NumPoint<Real>& z) {
  return NumericSymplectic<Real>(sym).gradients(q, z.ring_values());
}

/// {f, g} = grad_p f . grad_x g - grad_x f . grad_p g
template <class Real>
Real poisson_numeric(const Gradients<Real>& f, const Gradients<Real>& g) {
  return f.p.dot(g.x) - f.x.dot(g.p);
}

// ---------------------------------------------------------------------------
// Hamiltonian flow

/// Supplies grad h along a trajectory. Implementations may carry auxiliary
/// state (e.g. Pfaffian vectors) that is integrated alongside z.
template <class Real>
class GradientProvider {
 public:
  virtual ~GradientProvider() = default;
  virtual std::size_t aux_size() const { return 0; }
  virtual Gradients<Real> grad_h(const NumPoint<Real>& z, const Vec<Real>& aux) const = 0;
  /// d(aux)/dt given zdot.
  virtual Vec<Real> aux_rate(const NumPoint<Real>&, const Vec<Real>&, const std::vector<Real>&) const {
    return Vec<Real>(0);
  }
  /// Recorded first-integral values; the first one is h.
  virtual std::vector<Real> observe(const NumPoint<Real>& z, const Vec<Real>& aux) const = 0;
  /// Throws SingularPathCrossing if the step from a to b meets a singularity.
  virtual void check_step(const NumPoint<Real>&, const NumPoint<Real>&) const {}
};

/// Closed-form provider: grad h and the integrals are plain callables.
template <class Real>
class DirectProvider : public GradientProvider<Real> {
 public:
  using Grad = std::function<Gradients<Real>(const NumPoint<Real>&)>;
  using Scalar = std::function<Real(const NumPoint<Real>&)>;

  DirectProvider(Grad grad, std::vector<Scalar> integrals) : grad_(std::move(grad)), fs_(std::move(integrals)) {}

  Gradients<Real> grad_h(const NumPoint<Real>& z, const Vec<Real>&) const override { return grad_(z); }
  std::vector<Real> observe(const NumPoint<Real>& z, const Vec<Real>&) const override {
    std::vector<Real> r;
    for (const auto& f : fs_) r.push_back(f(z));
    return r;
  }

 private:
  Grad grad_;
  std::vector<Scalar> fs_;
};

/// Integrals given by Pfaffian vectors q_k at z0 (q_0 is h's). The vectors
/// are carried along the flow: dq_k/dt = (sum_i zdot_i A_i) q_k.
template <class Real>
class PfaffianProvider : public GradientProvider<Real> {
 public:
  PfaffianProvider(const PfaffianSystem& S, const SymplecticData& sym, std::vector<Vec<Real>> q0)
      : sys_(S), sym_(sym), q0_(std::move(q0)), d_(S.dim) {
    if (q0_.empty()) throw InputError("flow needs at least the Hamiltonian's vector");
    for (const auto& q : q0_)
      if (static_cast<std::size_t>(q.size()) != d_) throw InputError("vector length does not match the system rank");
  }

  Vec<Real> initial_aux() const {
    Vec<Real> a(static_cast<Eigen::Index>(d_ * q0_.size()));
    for (std::size_t k = 0; k < q0_.size(); ++k) a.segment(offset(k), static_cast<Eigen::Index>(d_)) = q0_[k];
    return a;
  }

  std::size_t aux_size() const override { return d_ * q0_.size(); }

  Gradients<Real> grad_h(const NumPoint<Real>& z, const Vec<Real>& aux) const override {
    return guarded(z, [&] { return sym_.gradients(aux.segment(0, static_cast<Eigen::Index>(d_)), z.ring_values()); });
  }

  Vec<Real> aux_rate(const NumPoint<Real>& z, const Vec<Real>& aux, const std::vector<Real>& zdot) const override {
    return guarded(z, [&] {
      const Mat<Real> A = sys_.directional(zdot, z.ring_values());
      Vec<Real> r(aux.size());
      for (std::size_t k = 0; k < q0_.size(); ++k)
        r.segment(offset(k), static_cast<Eigen::Index>(d_)) = A * aux.segment(offset(k), static_cast<Eigen::Index>(d_));
      return r;
    });
  }

  // The basis is canonical, so f_k is the first component of q_k.
  std::vector<Real> observe(const NumPoint<Real>&, const Vec<Real>& aux) const override {
    std::vector<Real> r;
    for (std::size_t k = 0; k < q0_.size(); ++k) r.push_back(aux[offset(k)]);
    return r;
  }

  void check_step(const NumPoint<Real>& a, const NumPoint<Real>& b) const override {
    PathConfig cfg;
    cfg.samples_per_segment = 2;
    detail::check_segment(sys_, a, b, cfg);
  }

 private:
  Eigen::Index offset(std::size_t k) const { return static_cast<Eigen::Index>(k * d_); }

  template <class F>
  static auto guarded(const NumPoint<Real>& z, F&& f) {
    try {
      return f();
    } catch (const SingularPoint&) {
      throw SingularPathCrossing("flow reached the singular locus at " + detail::describe_point(z.coords));
    }
  }

  NumericSystem<Real> sys_;
  NumericSymplectic<Real> sym_;
  std::vector<Vec<Real>> q0_;
  std::size_t d_;
};

template <class Real>
struct FlowResult {
  std::vector<Real> times;
  std::vector<std::vector<Real>> states;
  std::vector<std::vector<Real>> integrals;  // f_k(z(t)); integrals[.][0] is h
  std::vector<Real> residual;                // h(z(t))

  /// max_t |f_k(t) - f_k(0)|
  Real max_drift(std::size_t k) const {
    Real m = 0;
    for (const auto& f : integrals) m = std::max(m, Real(abs(f.at(k) - integrals.front().at(k))));
    return m;
  }
};

/// Integrates xdot = grad_p h, pdot = -grad_x h from z0 over [0, T].
template <class Real>
FlowResult<Real> hamiltonian_flow(const GradientProvider<Real>& prov, const NumPoint<Real>& z0, const Vec<Real>& aux0,
                                  const Real& T, const IntegratorConfig& cfg = {}) {
  const std::size_t m = z0.coords.size();
  if (m % 2 != 0) throw InputError("phase-space point must have even dimension");
  if (static_cast<std::size_t>(aux0.size()) != prov.aux_size()) throw InputError("auxiliary state has the wrong size");
  const std::size_t n = m / 2;
  auto split = [&](const Vec<Real>& y) {
    NumPoint<Real> z = z0;
    for (std::size_t i = 0; i < m; ++i) z.coords[i] = y[static_cast<Eigen::Index>(i)];
    return std::make_pair(z, Vec<Real>(y.tail(static_cast<Eigen::Index>(prov.aux_size()))));
  };
  auto rhs = [&](const Real&, const Vec<Real>& y) -> Vec<Real> {
    const auto [z, aux] = split(y);
    const Gradients<Real> g = prov.grad_h(z, aux);
    std::vector<Real> zdot(m);
    for (std::size_t i = 0; i < n; ++i) {
      zdot[i] = g.p[static_cast<Eigen::Index>(i)];
      zdot[n + i] = -g.x[static_cast<Eigen::Index>(i)];
    }
    Vec<Real> r(y.size());
    for (std::size_t i = 0; i < m; ++i) r[static_cast<Eigen::Index>(i)] = zdot[i];
    if (prov.aux_size() > 0) r.tail(static_cast<Eigen::Index>(prov.aux_size())) = prov.aux_rate(z, aux, zdot);
    return r;
  };

  FlowResult<Real> out;
  auto record = [&](const Real& t, const Vec<Real>& y) {
    const auto [z, aux] = split(y);
    if (!out.states.empty()) {
      NumPoint<Real> prev = z0;
      prev.coords = out.states.back();
      prov.check_step(prev, z);
    }
    out.times.push_back(t);
    out.states.push_back(z.coords);
    out.integrals.push_back(prov.observe(z, aux));
    out.residual.push_back(out.integrals.back().at(0));
  };
  Vec<Real> y(static_cast<Eigen::Index>(m + prov.aux_size()));
  for (std::size_t i = 0; i < m; ++i) y[static_cast<Eigen::Index>(i)] = z0.coords[i];
  if (prov.aux_size() > 0) y.tail(static_cast<Eigen::Index>(prov.aux_size())) = aux0;
  record(Real(0), y);
  Dopri5<Real> ode(cfg);
  ode.integrate(rhs, Real(0), T, y, record);
  return out;
}

template <class Real>
FlowResult<Real> hamiltonian_flow(const PfaffianProvider<Real>& prov, const NumPoint<Real>& z0, const Real& T,
                                  const IntegratorConfig& cfg = {}) {
  return hamiltonian_flow<Real>(prov, z0, prov.initial_aux(), T, cfg);
}

// ---------------------------------------------------------------------------
// Local reconstruction of v

/// Values and gradients of n first integrals f_1..f_n (f_1 = h) at any z.
template <class Real>
class IntegralEvaluator {
 public:
  virtual ~IntegralEvaluator() = default;
  virtual std::size_t count() const = 0;
  virtual void eval(const NumPoint<Real>& z, std::vector<Real>& f, std::vector<Gradients<Real>>& grads) = 0;
};

/// Closed-form integrals.
template <class Real>
class DirectIntegrals : public IntegralEvaluator<Real> {
 public:
  using Fn = std::function<void(const NumPoint<Real>&, std::vector<Real>&, std::vector<Gradients<Real>>&)>;
  DirectIntegrals(std::size_t n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  std::size_t count() const override { return n_; }
  void eval(const NumPoint<Real>& z, std::vector<Real>& f, std::vector<Gradients<Real>>& g) override { fn_(z, f, g); }

 private:
  std::size_t n_;
  Fn fn_;
};

/// Pfaffian integrals evaluated by continuation: the vectors are moved
/// from the last evaluation point to the next one along a straight segment.
template <class Real>
class PfaffianTracker : public IntegralEvaluator<Real> {
 public:
  PfaffianTracker(const PfaffianSystem& S, const SymplecticData& sym, const NumPoint<Real>& z0, std::vector<Vec<Real>> q0,
                  PathConfig cfg = {})
      : sys_(S), sym_(sym), z_(z0), q_(std::move(q0)), cfg_(cfg) {}

  std::size_t count() const override { return q_.size(); }

  void eval(const NumPoint<Real>& z, std::vector<Real>& f, std::vector<Gradients<Real>>& g) override {
    if (z.coords != z_.coords) {
      for (auto& q : q_) q = hgm_integrate(sys_, z_, q, {z}, cfg_);
      z_ = z;
    }
    f.clear();
    g.clear();
    const auto vals = z.ring_values();
    for (const auto& q : q_) {
      f.push_back(q[0]);
      g.push_back(sym_.gradients(q, vals));
    }
  }

 private:
  NumericSystem<Real> sys_;
  NumericSymplectic<Real> sym_;
  NumPoint<Real> z_;
  std::vector<Vec<Real>> q_;
  PathConfig cfg_;
};

struct NewtonConfig {
  std::size_t max_iterations = 25;
  double tolerance = 1e-11;        // on max |f_k| and on the relative step
  double jacobian_tolerance = 1e-12;  // on |det| of the row-normalized Jacobian
  double symmetry_step = 1e-4;     // 0 disables the symmetry estimate
};

template <class Real>
struct Reconstruction {
  std::vector<std::vector<Real>> x, p;
  std::vector<Real> v;
  std::vector<Real> residual;         // h(x, p(x))
  std::vector<std::size_t> iterations;
  std::vector<Real> symmetry_defect;  // max |dp_i/dx_j - dp_j/dx_i| by central differences

  Real max_residual() const {
    Real m = 0;
    for (const auto& r : residual) m = std::max(m, Real(abs(r)));
    return m;
  }
  Real max_symmetry_defect() const {
    Real m = 0;
    for (const auto& r : symmetry_defect) m = std::max(m, r);
    return m;
  }
};

namespace detail {

template <class Real>
NumPoint<Real> phase_point(const std::vector<Real>& x, const Vec<Real>& p, const std::vector<Real>& params) {
  NumPoint<Real> z;
  z.coords = x;
  for (Eigen::Index i = 0; i < p.size(); ++i) z.coords.push_back(p[i]);
  z.params = params;
  return z;
}

// Solves f(x, p) = 0 for p starting at p; returns the iteration count.
template <class Real>
std::size_t newton_p(IntegralEvaluator<Real>& ev, const std::vector<Real>& x, Vec<Real>& p,
                     const std::vector<Real>& params, const NewtonConfig& cfg) {
  const auto n = static_cast<Eigen::Index>(x.size());
  std::vector<Real> f;
  std::vector<Gradients<Real>> g;
  for (std::size_t it = 0; it <= cfg.max_iterations; ++it) {
    ev.eval(phase_point(x, p, params), f, g);
    Vec<Real> F(n);
    Mat<Real> J(n, n);
    Real fmax = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      F[k] = f[static_cast<std::size_t>(k)];
      J.row(k) = g[static_cast<std::size_t>(k)].p.transpose();
      fmax = std::max(fmax, Real(abs(F[k])));
    }
    if (fmax <= Real(cfg.tolerance)) return it;
    Mat<Real> Jn = J;
    for (Eigen::Index k = 0; k < n; ++k) {
      const Real s = Jn.row(k).norm();
      if (s == 0) throw JacobianSingular("grad_p of an integral vanishes at " + describe_point(phase_point(x, p, params).coords));
      Jn.row(k) /= s;
    }
    if (abs(Jn.determinant()) <= Real(cfg.jacobian_tolerance))
      throw JacobianSingular("implicit-function condition fails at " + describe_point(phase_point(x, p, params).coords));
    const Vec<Real> dp = J.fullPivLu().solve(F);
    p -= dp;
    if (dp.norm() <= Real(cfg.tolerance) * (Real(1) + p.norm())) {
      ev.eval(phase_point(x, p, params), f, g);
      return it + 1;
    }
  }
  throw NewtonDivergence("Newton iteration did not converge in " + std::to_string(cfg.max_iterations) + " steps");
}

}  // namespace detail

/// Continues p(x) along the x-path from (x_path[0], p0) on {f = 0} and
/// accumulates v by the trapezoidal rule, with v(x_path[0]) = 0.
template <class Real>
Reconstruction<Real> reconstruct_v(IntegralEvaluator<Real>& ev,
                                   const std::type_identity_t<std::vector<std::vector<Real>>>& x_path,
                                   const std::type_identity_t<Vec<Real>>& p0,
                                   const std::type_identity_t<std::vector<Real>>& params = {},
                                   const NewtonConfig& cfg = {}) {
  if (x_path.empty()) throw InputError("x-path is empty");
  const std::size_t n = x_path[0].size();
  if (static_cast<std::size_t>(p0.size()) != n || ev.count() != n)
    throw InputError("x-path, p0 and the integral count must share the dimension n");
  {
    std::vector<Real> f;
    std::vector<Gradients<Real>> g;
    ev.eval(detail::phase_point(x_path[0], p0, params), f, g);
    for (const auto& fk : f)
      if (abs(fk) >= Real(1e-8)) throw InputError("start point is not on the level set: |f_k| = " + format_real(Real(abs(fk)), 3));
  }
  Reconstruction<Real> out;
  Vec<Real> p = p0;
  for (std::size_t j = 0; j < x_path.size(); ++j) {
    const auto& x = x_path[j];
    if (x.size() != n) throw InputError("x-path points must all have dimension n");
    out.iterations.push_back(j == 0 ? 0 : detail::newton_p(ev, x, p, params, cfg));
    std::vector<Real> f;
    std::vector<Gradients<Real>> g;
    ev.eval(detail::phase_point(x, p, params), f, g);
    out.residual.push_back(f.at(0));
    if (j == 0) {
      out.v.push_back(Real(0));
    } else {
      Real dv = 0;
      for (std::size_t i = 0; i < n; ++i)
        dv += (out.p.back()[i] + p[static_cast<Eigen::Index>(i)]) * (x[i] - out.x.back()[i]) / Real(2);
      out.v.push_back(out.v.back() + dv);
    }
    out.x.push_back(x);
    out.p.emplace_back(p.data(), p.data() + p.size());

    if (cfg.symmetry_step > 0 && n > 1) {
      const Real h = Real(cfg.symmetry_step);
      Mat<Real> P(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
      for (std::size_t l = 0; l < n; ++l) {
        std::vector<Real> xp = x, xm = x;
        xp[l] += h;
        xm[l] -= h;
        Vec<Real> pp = p, pm = p;
        detail::newton_p(ev, xp, pp, params, cfg);
        detail::newton_p(ev, xm, pm, params, cfg);
        P.col(static_cast<Eigen::Index>(l)) = (pp - pm) / (Real(2) * h);
      }
      out.symmetry_defect.push_back(Real((P - P.transpose()).cwiseAbs().maxCoeff()));
      // Return the evaluator to the sample point.
      ev.eval(detail::phase_point(x, p, params), f, g);
    }
  }
  return out;
}

}  // namespace holohj
