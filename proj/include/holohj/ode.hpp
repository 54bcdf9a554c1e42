#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "holohj/numeric.hpp"

namespace holohj {

struct IntegratorConfig {
  double rtol = 1e-10;
  double atol = 1e-12;
  std::size_t max_steps = 200000;
  double initial_step = 0;  // 0: automatic
};

/// Dormand-Prince 5(4) with PI step-size control.
template <class Real>
class Dopri5 {
 public:
  using State = Vec<Real>;
  using Rhs = std::function<State(const Real&, const State&)>;
  /// Called after every accepted step with (t, y).
  using Observer = std::function<void(const Real&, const State&)>;

  explicit Dopri5(IntegratorConfig cfg = {}) : cfg_(cfg) {}

  std::size_t steps_taken() const { return steps_; }

  State integrate(const Rhs& f, Real t0, const Real& t1, State y, const Observer& observe = {}) {
    steps_ = 0;
    if (t1 == t0) return y;
    const Real dir = t1 > t0 ? Real(1) : Real(-1);
    const Real span = abs(t1 - t0);
    State k1 = f(t0, y);
    Real h = cfg_.initial_step > 0 ? Real(cfg_.initial_step) : initial_step(f, t0, y, k1, span);
    h = std::min(h, span);
    Real err_prev = 1e-4;
    Real t = t0;
    while (dir * (t1 - t) > Real(0)) {
      if (++steps_ > cfg_.max_steps) throw StepLimitExceeded("integrator exceeded " + std::to_string(cfg_.max_steps) + " steps");
      if (h > abs(t1 - t)) h = abs(t1 - t);
      const Real hs = dir * h;
      const State k2 = f(t + c2 * hs, y + hs * (a21 * k1));
      const State k3 = f(t + c3 * hs, y + hs * (a31 * k1 + a32 * k2));
      const State k4 = f(t + c4 * hs, y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
      const State k5 = f(t + c5 * hs, y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const State k6 = f(t + hs, y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const State y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const State k7 = f(t + hs, y5);
      const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      Real sum = 0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        using std::max;
        const Real sc = Real(cfg_.atol) + Real(cfg_.rtol) * max(abs(y[i]), abs(y5[i]));
        const Real r = err[i] / sc;
        sum += r * r;
      }
      const Real en = sqrt(sum / Real(std::max<Eigen::Index>(1, y.size())));
      if (!(en == en)) throw StepLimitExceeded("integrator produced a non-finite error estimate");
      if (en <= Real(1)) {
        t = (abs(t1 - (t + hs)) <= Real(1e-15) * span) ? t1 : t + hs;
        y = y5;
        k1 = k7;
        if (observe) observe(t, y);
        const Real e = std::max(en, Real(1e-10));
        Real fac = Real(0.9) * pow(e, Real(-0.7 / 5)) * pow(err_prev, Real(0.4 / 5));
        fac = std::clamp(fac, Real(0.2), Real(5));
        h *= fac;
        err_prev = std::max(en, Real(1e-4));
      } else {
        Real fac = Real(0.9) * pow(en, Real(-0.2));
        h *= std::max(fac, Real(0.2));
      }
      if (h < span * Real(1e-18)) throw StepLimitExceeded("step size underflow");
    }
    return y;
  }

 private:
  Real initial_step(const Rhs& f, const Real& t0, const State& y0, const State& f0, const Real& span) const {
    auto norm = [&](const State& v) {
      Real s = 0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const Real sc = Real(cfg_.atol) + Real(cfg_.rtol) * abs(y0[i]);
        s += (v[i] / sc) * (v[i] / sc);
      }
      return sqrt(s / Real(std::max<Eigen::Index>(1, v.size())));
    };
    const Real d0 = norm(y0), d1 = norm(f0);
    Real h0 = (d0 < Real(1e-5) || d1 < Real(1e-5)) ? Real(1e-6) : Real(0.01) * d0 / d1;
    h0 = std::min(h0, span);
    const State y1 = y0 + h0 * f0;
    const State f1 = f(t0 + h0, y1);
    const Real d2 = norm(State(f1 - f0)) / h0;
    using std::max;
    const Real m = max(d1, d2);
    const Real h1 = m <= Real(1e-15) ? max(Real(1e-6), h0 * Real(1e-3)) : pow(Real(0.01) / m, Real(0.2));
    return std::min(Real(100) * h0, h1);
  }

  IntegratorConfig cfg_;
  std::size_t steps_ = 0;

  static inline const Real c2 = Real(1) / 5, c3 = Real(3) / 10, c4 = Real(4) / 5, c5 = Real(8) / 9;
  static inline const Real a21 = Real(1) / 5;
  static inline const Real a31 = Real(3) / 40, a32 = Real(9) / 40;
  static inline const Real a41 = Real(44) / 45, a42 = Real(-56) / 15, a43 = Real(32) / 9;
  static inline const Real a51 = Real(19372) / 6561, a52 = Real(-25360) / 2187, a53 = Real(64448) / 6561,
                           a54 = Real(-212) / 729;
  static inline const Real a61 = Real(9017) / 3168, a62 = Real(-355) / 33, a63 = Real(46732) / 5247,
                           a64 = Real(49) / 176, a65 = Real(-5103) / 18656;
  static inline const Real b1 = Real(35) / 384, b3 = Real(500) / 1113, b4 = Real(125) / 192, b5 = Real(-2187) / 6784,
                           b6 = Real(11) / 84;
  // b - b*, the embedded error weights
  static inline const Real e1 = Real(71) / 57600, e3 = Real(-71) / 16695, e4 = Real(71) / 1920,
                           e5 = Real(-17253) / 339200, e6 = Real(22) / 525, e7 = Real(-1) / 40;
};

}  // namespace holohj
