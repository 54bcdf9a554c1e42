#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "holohj/ratfun.hpp"

namespace holohj {

/// Extended working precision (50 significant decimal digits).
using Extended = boost::multiprecision::cpp_bin_float_50;

enum class Precision { binary64, extended };

template <class Real>
using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
template <class Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

template <class Real>
Real from_rational(const Rational& q) {
  if constexpr (std::is_same_v<Real, double>) {
    return q.get_d();
  } else {
    return Real(q.get_num().get_str()) / Real(q.get_den().get_str());
  }
}

using std::abs;
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using boost::multiprecision::abs;

/// A point z = (x, p) of phase space together with numeric values of the
/// free parameters. Coordinates are laid out exactly as the variables of the
/// polynomial ring: phase-space coordinates first, then parameters.
template <class Real>
struct NumPoint {
  std::vector<Real> coords;  // 2n phase-space values
  std::vector<Real> params;  // parameter values, in ring order

  std::size_t dim() const { return coords.size(); }

  /// All ring-variable values in index order.
  std::vector<Real> ring_values() const {
    std::vector<Real> v = coords;
    v.insert(v.end(), params.begin(), params.end());
    return v;
  }

  template <class Other>
  NumPoint<Other> cast() const {
    NumPoint<Other> r;
    for (const auto& c : coords) r.coords.push_back(static_cast<Other>(c));
    for (const auto& c : params) r.params.push_back(static_cast<Other>(c));
    return r;
  }
};

/// Polynomial with numeric coefficients, ready for repeated evaluation.
template <class Real>
class CompiledPoly {
 public:
  CompiledPoly() = default;
  explicit CompiledPoly(const Poly& p) {
    for (const auto& t : p.terms()) {
      Entry e;
      e.coeff = from_rational<Real>(t.coeff);
      for (std::size_t v = 0; v < kMaxVars; ++v)
        if (t.mono[v] != 0) e.powers.emplace_back(static_cast<int>(v), static_cast<int>(t.mono[v]));
      entries_.push_back(std::move(e));
    }
  }

  bool is_zero() const { return entries_.empty(); }

  /// Value and the sum of absolute term values (the cancellation scale).
  std::pair<Real, Real> eval_with_scale(const std::vector<Real>& values) const {
    Real acc = 0, scale = 0;
    for (const auto& e : entries_) {
      Real t = e.coeff;
      for (auto [v, k] : e.powers) {
        if (static_cast<std::size_t>(v) >= values.size())
          throw SingularPoint("no value for variable index " + std::to_string(v));
        Real x = values[static_cast<std::size_t>(v)];
        Real pw = x;
        for (int j = 1; j < k; ++j) pw *= x;
        t *= pw;
      }
      acc += t;
      scale += abs(t);
    }
    return {acc, scale};
  }

  Real eval(const std::vector<Real>& values) const { return eval_with_scale(values).first; }

 private:
  struct Entry {
    Real coeff;
    std::vector<std::pair<int, int>> powers;
  };
  std::vector<Entry> entries_;
};

/// Default relative threshold below which a denominator counts as vanishing.
inline constexpr double kSingularTolerance = 1e-12;

template <class Real>
class CompiledRF {
 public:
  CompiledRF() = default;
  explicit CompiledRF(const RationalFunction& f) : num_(f.num()), den_(f.den()), zero_(f.is_zero()) {}

  bool is_zero() const { return zero_; }

  Real eval(const std::vector<Real>& values, double tol = kSingularTolerance) const {
    if (zero_) return Real(0);
    auto [d, scale] = den_.eval_with_scale(values);
    if (abs(d) <= Real(tol) * scale || d == 0)
      throw SingularPoint("denominator vanishes at evaluation point");
    return num_.eval(values) / d;
  }

 private:
  CompiledPoly<Real> num_;
  CompiledPoly<Real> den_;
  bool zero_ = true;
};

/// Numeric value of f at z.
template <class Real>
Real rf_eval(const RationalFunction& f, const NumPoint<Real>& z, double tol = kSingularTolerance) {
  return CompiledRF<Real>(f).eval(z.ring_values(), tol);
}

/// Relative magnitude |p(z)| / sum |terms|, used for singular-locus checks.
template <class Real>
Real relative_magnitude(const CompiledPoly<Real>& p, const std::vector<Real>& values) {
  auto [v, scale] = p.eval_with_scale(values);
  if (scale == 0) return Real(0);
  return abs(v) / scale;
}

template <class Real>
std::string format_real(const Real& x, int digits = 17) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

}  // namespace holohj
