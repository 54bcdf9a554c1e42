#pragma once

#include <string>
#include <vector>

#include "holohj/holonomic.hpp"
#include "holohj/ode.hpp"

namespace holohj {

/// Pfaffian matrices compiled for numeric evaluation.
template <class Real>
class NumericSystem {
 public:
  NumericSystem() = default;
  explicit NumericSystem(const PfaffianSystem& S)
      : dim_(S.dim), locus_(S.singular_locus), regular_(S.singular_locus.is_constant()) {
    entries_.resize(S.nvars());
    for (std::size_t i = 0; i < S.nvars(); ++i)
      for (std::size_t k = 0; k < S.dim; ++k)
        for (std::size_t l = 0; l < S.dim; ++l)
          if (!S.A[i](k, l).is_zero()) entries_[i].push_back({k, l, CompiledRF<Real>(S.A[i](k, l))});
  }

  std::size_t dim() const { return dim_; }
  std::size_t nvars() const { return entries_.size(); }

  Mat<Real> A(std::size_t i, const std::vector<Real>& vals) const {
    Mat<Real> m = Mat<Real>::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    add_scaled(m, i, Real(1), vals);
    return m;
  }

  /// sum_i dir_i A_i(z)
  Mat<Real> directional(const std::vector<Real>& dir, const std::vector<Real>& vals) const {
    Mat<Real> m = Mat<Real>::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < entries_.size() && i < dir.size(); ++i)
      if (dir[i] != 0) add_scaled(m, i, dir[i], vals);
    return m;
  }

  bool regular() const { return regular_; }

  /// D(z) and the sum of its term magnitudes.
  std::pair<Real, Real> locus_value(const std::vector<Real>& vals) const {
    if (regular_) return {Real(1), Real(1)};
    return locus_.eval_with_scale(vals);
  }

 private:
  struct Entry {
    std::size_t k, l;
    CompiledRF<Real> f;
  };

  void add_scaled(Mat<Real>& m, std::size_t i, const Real& s, const std::vector<Real>& vals) const {
    for (const auto& e : entries_[i])
      m(static_cast<Eigen::Index>(e.k), static_cast<Eigen::Index>(e.l)) += s * e.f.eval(vals);
  }

  std::size_t dim_ = 0;
  CompiledPoly<Real> locus_;
  bool regular_ = true;
  std::vector<std::vector<Entry>> entries_;
};

struct PathConfig {
  IntegratorConfig integrator;
  std::size_t samples_per_segment = 64;
  double singular_tolerance = 1e-8;
};

namespace detail {

template <class Real>
std::string describe_point(const std::vector<Real>& coords) {
  std::string s = "(";
  for (std::size_t i = 0; i < coords.size(); ++i) s += (i ? ", " : "") + format_real(coords[i], 8);
  return s + ")";
}

// Samples D along the segment; a sign change or a value that is tiny
// relative to the largest term magnitude seen counts as a crossing.
template <class Real>
void check_segment(const NumericSystem<Real>& sys, const NumPoint<Real>& a, const NumPoint<Real>& b,
                   const PathConfig& cfg) {
  if (sys.regular()) return;
  const std::size_t n = std::max<std::size_t>(cfg.samples_per_segment, 2);
  std::vector<Real> values;
  std::vector<std::vector<Real>> points;
  Real scale = 0;
  for (std::size_t s = 0; s < n; ++s) {
    const Real t = Real(static_cast<double>(s)) / Real(static_cast<double>(n - 1));
    NumPoint<Real> z = a;
    for (std::size_t i = 0; i < z.coords.size(); ++i) z.coords[i] = a.coords[i] + t * (b.coords[i] - a.coords[i]);
    auto [v, sc] = sys.locus_value(z.ring_values());
    values.push_back(v);
    points.push_back(z.coords);
    if (sc > scale) scale = sc;
  }
  for (std::size_t s = 0; s < n; ++s) {
    const bool tiny = abs(values[s]) <= Real(cfg.singular_tolerance) * scale;
    const bool flips = s > 0 && ((values[s] > 0) != (values[s - 1] > 0));
    if (tiny || flips) {
      std::vector<Real> detour = points[s];
      for (auto& c : detour) c *= Real(1.25);
      throw SingularPathCrossing("path meets the singular locus near " + describe_point(points[s]) +
                                 "; try a detour waypoint such as " + describe_point(detour));
    }
  }
}

}  // namespace detail

/// Value of q at the end of a piecewise-linear path starting at zbar.
template <class Real>
Vec<Real> hgm_integrate(const NumericSystem<Real>& sys, const NumPoint<Real>& zbar, const Vec<Real>& qbar,
                        const std::vector<NumPoint<Real>>& waypoints, const PathConfig& cfg = {}) {
  std::vector<NumPoint<Real>> path{zbar};
  for (const auto& w : waypoints)
    if (w.coords != path.back().coords) path.push_back(w);
  Vec<Real> q = qbar;
  Dopri5<Real> ode(cfg.integrator);
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const NumPoint<Real>& a = path[s];
    const NumPoint<Real>& b = path[s + 1];
    detail::check_segment(sys, a, b, cfg);
    std::vector<Real> dir(a.coords.size());
    for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = b.coords[i] - a.coords[i];
    auto rhs = [&](const Real& t, const Vec<Real>& y) -> Vec<Real> {
      NumPoint<Real> z = a;
      for (std::size_t i = 0; i < dir.size(); ++i) z.coords[i] = a.coords[i] + t * dir[i];
      try {
        return sys.directional(dir, z.ring_values()) * y;
      } catch (const SingularPoint&) {
        throw SingularPathCrossing("Pfaffian matrices are singular at " + detail::describe_point(z.coords));
      }
    };
    q = ode.integrate(rhs, Real(0), Real(1), q);
  }
  return q;
}

template <class Real>
Vec<Real> hgm_integrate(const PfaffianSystem& S, const NumPoint<Real>& zbar, const Vec<Real>& qbar,
                        const std::vector<NumPoint<Real>>& waypoints, const PathConfig& cfg = {}) {
  return hgm_integrate(NumericSystem<Real>(S), zbar, qbar, waypoints, cfg);
}

template <class Real>
Vec<Real> to_vec(const std::vector<Extended>& v) {
  Vec<Real> r(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) r[static_cast<Eigen::Index>(i)] = static_cast<Real>(v[i]);
  return r;
}

/// Value of a holonomic function at `target`, reached along the given
/// intermediate waypoints (the base point is prepended).
template <class Real>
Real hgm_value(const HolonomicFunction& F, const NumPoint<Real>& target, std::vector<NumPoint<Real>> via = {},
               const PathConfig& cfg = {}) {
  const NumPoint<Real> zbar = F.base.template cast<Real>();
  via.push_back(target);
  const Vec<Real> q = hgm_integrate(F.system, zbar, to_vec<Real>(F.qbar), via, cfg);
  const auto vals = target.ring_values();
  Real acc = 0;
  for (std::size_t k = 0; k < F.extract.size(); ++k)
    if (!F.extract[k].is_zero()) acc += CompiledRF<Real>(F.extract[k]).eval(vals) * q[static_cast<Eigen::Index>(k)];
  return acc;
}

}  // namespace holohj
