#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "holohj/errors.hpp"
#include "holohj/monomial.hpp"

namespace holohj {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational parse_rational(const std::string& text) {
  Rational q;
  if (q.set_str(text, 10) != 0) throw ParseError("not an exact rational: '" + text + "'");
  if (q.get_den() == 0) throw ZeroDenominator("rational with zero denominator: '" + text + "'");
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(10); }

/// Names of the variables of a polynomial ring. The phase-space layout puts
/// x1..xn at indices 0..n-1, p1..pn at n..2n-1, and free parameters after.
class VarNames {
 public:
  VarNames() = default;
  explicit VarNames(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.size() > kMaxVars) throw InputError("too many variables");
  }

  static VarNames phase_space(int n, const std::vector<std::string>& params = {}) {
    std::vector<std::string> names;
    for (int i = 1; i <= n; ++i) names.push_back("x" + std::to_string(i));
    for (int i = 1; i <= n; ++i) names.push_back("p" + std::to_string(i));
    for (const auto& p : params) names.push_back(p);
    return VarNames(std::move(names));
  }

  std::size_t size() const { return names_.size(); }
  const std::string& operator[](std::size_t i) const { return names_[i]; }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  bool operator==(const VarNames&) const = default;

 private:
  std::vector<std::string> names_;
};

/// Sparse multivariate polynomial with exact rational coefficients. Terms are
/// kept sorted by descending grevlex order with no zero coefficients, so
/// structural equality is polynomial equality.
class Poly {
 public:
  struct Term {
    Monomial mono;
    Rational coeff;
  };

  Poly() = default;
  Poly(const Rational& c) {  // NOLINT: implicit constant embedding
    if (c != 0) terms_.push_back({Monomial{}, c});
  }
  Poly(long c) : Poly(Rational(c)) {}  // NOLINT
  Poly(int c) : Poly(Rational(c)) {}   // NOLINT

  static Poly variable(std::size_t var, unsigned power = 1) {
    return monomial(Monomial::unit(var, power));
  }

  static Poly monomial(const Monomial& m, const Rational& c = 1) {
    Poly p;
    if (c != 0) p.terms_.push_back({m, c});
    return p;
  }

  /// Builds a polynomial from arbitrary (possibly repeated) terms.
  static Poly from_terms(std::vector<Term> terms) {
    Poly p;
    p.terms_ = std::move(terms);
    p.canonicalize();
    return p;
  }

  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].mono.is_one()); }
  bool is_monomial() const { return terms_.size() == 1; }

  Rational constant_value() const {
    for (const auto& t : terms_)
      if (t.mono.is_one()) return t.coeff;
    return 0;
  }

  const Term& leading() const { return terms_.front(); }
  const Rational& leading_coeff() const { return terms_.front().coeff; }

  unsigned total_degree() const {
    unsigned d = 0;
    for (const auto& t : terms_) d = std::max(d, t.mono.degree());
    return d;
  }

  unsigned degree_in(std::size_t var) const {
    unsigned d = 0;
    for (const auto& t : terms_) d = std::max<unsigned>(d, t.mono[var]);
    return d;
  }

  std::uint32_t support() const {
    std::uint32_t s = 0;
    for (const auto& t : terms_) s |= t.mono.support();
    return s;
  }

  /// Componentwise minimum exponent over all terms.
  Monomial min_exponents() const {
    if (terms_.empty()) return {};
    Monomial m = terms_[0].mono;
    for (const auto& t : terms_) m = gcd(m, t.mono);
    return m;
  }

  Poly operator-() const {
    Poly r = *this;
    for (auto& t : r.terms_) t.coeff = -t.coeff;
    return r;
  }

  friend Poly operator+(const Poly& a, const Poly& b) { return merge(a, b, false); }
  friend Poly operator-(const Poly& a, const Poly& b) { return merge(a, b, true); }

  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    if (a.size() == 1) return b.mul_term(a.terms_[0].mono, a.terms_[0].coeff);
    if (b.size() == 1) return a.mul_term(b.terms_[0].mono, b.terms_[0].coeff);
    std::map<Monomial, Rational, GrevlexGreater> acc;
    for (const auto& s : a.terms_)
      for (const auto& t : b.terms_) acc[s.mono * t.mono] += s.coeff * t.coeff;
    Poly r;
    r.terms_.reserve(acc.size());
    for (auto& [m, c] : acc)
      if (c != 0) r.terms_.push_back({m, std::move(c)});
    return r;
  }

  friend Poly operator*(const Poly& a, const Rational& c) { return a.mul_term(Monomial{}, c); }
  friend Poly operator*(const Rational& c, const Poly& a) { return a.mul_term(Monomial{}, c); }

  Poly& operator+=(const Poly& o) { return *this = *this + o; }
  Poly& operator-=(const Poly& o) { return *this = *this - o; }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }

  Poly mul_term(const Monomial& m, const Rational& c) const {
    if (c == 0) return {};
    Poly r;
    r.terms_.reserve(terms_.size());
    for (const auto& t : terms_) r.terms_.push_back({t.mono * m, t.coeff * c});
    return r;
  }

  Poly pow(unsigned k) const {
    Poly r(1), base = *this;
    while (k) {
      if (k & 1u) r *= base;
      k >>= 1u;
      if (k) base *= base;
    }
    return r;
  }

  /// Requires m to divide every term.
  Poly divide_monomial(const Monomial& m) const {
    Poly r = *this;
    for (auto& t : r.terms_) t.mono = t.mono / m;
    return r;
  }

  Poly derivative(std::size_t var) const {
    std::vector<Term> out;
    for (const auto& t : terms_) {
      const unsigned e = t.mono[var];
      if (e == 0) continue;
      Monomial m = t.mono;
      m.set(var, e - 1);
      out.push_back({m, t.coeff * e});
    }
    Poly r;
    r.terms_ = std::move(out);
    r.canonicalize();
    return r;
  }

  /// Scaled so that the leading coefficient is one.
  Poly monic() const {
    if (is_zero()) return {};
    return *this * (Rational(1) / leading_coeff());
  }

  /// Integer coefficients with unit content and positive leading coefficient.
  Poly primitive() const {
    if (is_zero()) return {};
    Integer num_gcd = 0, den_lcm = 1;
    for (const auto& t : terms_) {
      mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), t.coeff.get_num_mpz_t());
      mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), t.coeff.get_den_mpz_t());
    }
    Rational scale(den_lcm, num_gcd);
    scale.canonicalize();
    if (leading_coeff() < 0) scale = -scale;
    return *this * scale;
  }

  /// Substitutes exact values for a subset of variables.
  Poly substitute(const std::vector<std::pair<std::size_t, Rational>>& values) const {
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) {
      Monomial m = t.mono;
      Rational c = t.coeff;
      for (const auto& [var, val] : values) {
        const unsigned e = m[var];
        if (e == 0) continue;
        Rational v;
        mpz_pow_ui(v.get_num_mpz_t(), val.get_num_mpz_t(), e);
        mpz_pow_ui(v.get_den_mpz_t(), val.get_den_mpz_t(), e);
        c *= v;
        m.set(var, 0);
      }
      out.push_back({m, c});
    }
    return from_terms(std::move(out));
  }

  /// Exact evaluation; `point[i]` is the value of variable i.
  Rational eval_exact(std::span<const Rational> point) const {
    Rational acc = 0;
    for (const auto& t : terms_) {
      Rational v = t.coeff;
      for (std::size_t i = 0; i < point.size(); ++i) {
        const unsigned e = t.mono[i];
        if (e == 0) continue;
        Rational pw;
        mpz_pow_ui(pw.get_num_mpz_t(), point[i].get_num_mpz_t(), e);
        mpz_pow_ui(pw.get_den_mpz_t(), point[i].get_den_mpz_t(), e);
        v *= pw;
      }
      acc += v;
    }
    return acc;
  }

  std::string to_string(const VarNames& names) const;

  friend bool operator==(const Poly& a, const Poly& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t i = 0; i < a.terms_.size(); ++i)
      if (a.terms_[i].mono != b.terms_[i].mono || a.terms_[i].coeff != b.terms_[i].coeff) return false;
    return true;
  }

 private:
  struct GrevlexGreater {
    bool operator()(const Monomial& a, const Monomial& b) const { return grevlex_less(b, a); }
  };

  static Poly merge(const Poly& a, const Poly& b, bool subtract) {
    Poly r;
    r.terms_.reserve(a.terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() ||
          (i < a.terms_.size() && grevlex_less(b.terms_[j].mono, a.terms_[i].mono))) {
        r.terms_.push_back(a.terms_[i++]);
      } else if (i == a.terms_.size() || grevlex_less(a.terms_[i].mono, b.terms_[j].mono)) {
        r.terms_.push_back(b.terms_[j++]);
        if (subtract) r.terms_.back().coeff = -r.terms_.back().coeff;
      } else {
        Rational c = subtract ? Rational(a.terms_[i].coeff - b.terms_[j].coeff) : Rational(a.terms_[i].coeff + b.terms_[j].coeff);
        if (c != 0) r.terms_.push_back({a.terms_[i].mono, std::move(c)});
        ++i;
        ++j;
      }
    }
    return r;
  }

  void canonicalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const Term& a, const Term& b) { return grevlex_less(b.mono, a.mono); });
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (auto& t : terms_) {
      if (!out.empty() && out.back().mono == t.mono) {
        out.back().coeff += t.coeff;
      } else {
        out.push_back(std::move(t));
      }
    }
    std::erase_if(out, [](const Term& t) { return t.coeff == 0; });
    terms_ = std::move(out);
  }

  std::vector<Term> terms_;
};

inline std::string monomial_to_string(const Monomial& m, const VarNames& names) {
  std::string out;
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    if (m[i] == 0) continue;
    if (!out.empty()) out += "*";
    out += i < names.size() ? names[i] : "v" + std::to_string(i);
    if (m[i] > 1) out += "^" + std::to_string(m[i]);
  }
  return out;
}

inline std::string Poly::to_string(const VarNames& names) const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto& t = terms_[k];
    const bool neg = t.coeff < 0;
    if (k == 0) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    const Rational mag = neg ? Rational(-t.coeff) : t.coeff;
    const std::string mono = monomial_to_string(t.mono, names);
    if (mono.empty()) {
      out += holohj::to_string(mag);
    } else {
      if (mag != 1) out += holohj::to_string(mag) + "*";
      out += mono;
    }
  }
  return out;
}

/// Exact quotient f / g, or nullopt when g does not divide f.
inline std::optional<Poly> divide_exact(const Poly& f, const Poly& g) {
  if (g.is_zero()) throw ZeroDenominator("polynomial division by zero");
  if (f.is_zero()) return Poly{};
  if (g.is_constant()) return f * (Rational(1) / g.leading_coeff());
  if (g.is_monomial()) {
    const auto& lt = g.leading();
    for (const auto& t : f.terms())
      if (!lt.mono.divides(t.mono)) return std::nullopt;
    return f.divide_monomial(lt.mono) * (Rational(1) / lt.coeff);
  }
  const auto& glt = g.leading();
  // Cheap rejection on per-variable degrees.
  for (std::size_t v = 0; v < kMaxVars; ++v)
    if (g.degree_in(v) > f.degree_in(v)) return std::nullopt;
  std::vector<Poly::Term> quotient;
  Poly r = f;
  while (!r.is_zero()) {
    const auto& rlt = r.leading();
    if (!glt.mono.divides(rlt.mono)) return std::nullopt;
    Monomial m = rlt.mono / glt.mono;
    Rational c = rlt.coeff / glt.coeff;
    quotient.push_back({m, c});
    r -= g.mul_term(m, c);
  }
  return Poly::from_terms(std::move(quotient));
}

}  // namespace holohj
