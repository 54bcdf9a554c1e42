#pragma once

#include <bit>
#include <cctype>
#include <string>
#include <string_view>
#include <utility>

#include "holohj/poly_gcd.hpp"

namespace holohj {

/// Element of the fraction field Q(z): num/den in lowest terms with a monic
/// denominator (leading coefficient 1 under grevlex). Zero is 0/1.
class RationalFunction {
 public:
  RationalFunction() : den_(1) {}
  RationalFunction(const Poly& p) : num_(p), den_(1) {}           // NOLINT
  RationalFunction(const Rational& c) : num_(c), den_(1) {}       // NOLINT
  RationalFunction(long c) : num_(Rational(c)), den_(1) {}        // NOLINT
  RationalFunction(int c) : num_(Rational(c)), den_(1) {}         // NOLINT

  /// Canonical reduced form of num/den.
  static RationalFunction normalize(const Poly& num, const Poly& den) {
    if (den.is_zero()) throw ZeroDenominator("rational function with zero denominator");
    RationalFunction r;
    if (num.is_zero()) return r;
    if (den.is_constant()) {
      r.num_ = num * (Rational(1) / den.leading_coeff());
      return r;
    }
    const Poly g = gcd(num, den);
    Poly n = g.is_constant() ? num : *divide_exact(num, g);
    Poly d = g.is_constant() ? den : *divide_exact(den, g);
    const Rational lc = d.leading_coeff();
    r.num_ = n * (Rational(1) / lc);
    r.den_ = d * (Rational(1) / lc);
    return r;
  }

  static RationalFunction variable(std::size_t var) { return Poly::variable(var); }

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  bool is_polynomial() const { return den_.is_constant(); }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }
  Rational constant_value() const { return num_.constant_value(); }
  std::uint32_t support() const { return num_.support() | den_.support(); }

  RationalFunction operator-() const {
    RationalFunction r = *this;
    r.num_ = -r.num_;
    return r;
  }

  friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.den_.is_constant() && b.den_.is_constant()) return RationalFunction(a.num_ + b.num_);
    if (a.den_ == b.den_) return normalize(a.num_ + b.num_, a.den_);
    const Poly g = gcd(a.den_, b.den_);
    if (g.is_constant()) return from_parts_unchecked(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    const Poly bg = *divide_exact(b.den_, g);
    const Poly ag = *divide_exact(a.den_, g);
    Poly num = a.num_ * bg + b.num_ * ag;
    Poly den = a.den_ * bg;
    if (num.is_zero()) return {};
    const Poly h = gcd(num, g);
    if (!h.is_constant()) {
      num = *divide_exact(num, h);
      den = *divide_exact(den, h);
    }
    return from_parts_unchecked(std::move(num), std::move(den));
  }

  friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) { return a + (-b); }

  friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_zero() || b.is_zero()) return {};
    if (a.den_.is_constant() && b.den_.is_constant()) return RationalFunction(a.num_ * b.num_);
    const Poly g1 = gcd(a.num_, b.den_);
    const Poly g2 = gcd(b.num_, a.den_);
    const Poly an = g1.is_constant() ? a.num_ : *divide_exact(a.num_, g1);
    const Poly bd = g1.is_constant() ? b.den_ : *divide_exact(b.den_, g1);
    const Poly bn = g2.is_constant() ? b.num_ : *divide_exact(b.num_, g2);
    const Poly ad = g2.is_constant() ? a.den_ : *divide_exact(a.den_, g2);
    return from_parts_unchecked(an * bn, ad * bd);
  }

  RationalFunction inverse() const {
    if (is_zero()) throw ZeroDenominator("inverse of zero rational function");
    return from_parts_unchecked(den_, num_);
  }

  friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
    return a * b.inverse();
  }

  RationalFunction& operator+=(const RationalFunction& o) { return *this = *this + o; }
  RationalFunction& operator-=(const RationalFunction& o) { return *this = *this - o; }
  RationalFunction& operator*=(const RationalFunction& o) { return *this = *this * o; }

  RationalFunction pow(int k) const {
    if (k < 0) return inverse().pow(-k);
    return from_parts_unchecked(num_.pow(static_cast<unsigned>(k)), den_.pow(static_cast<unsigned>(k)));
  }

  /// Partial derivative by the quotient rule.
  RationalFunction diff(std::size_t var) const {
    if (is_zero()) return {};
    if (den_.is_constant()) return RationalFunction(num_.derivative(var));
    const Poly dn = num_.derivative(var), dd = den_.derivative(var);
    if (dd.is_zero()) return normalize(dn, den_);
    return normalize(dn * den_ - num_ * dd, den_ * den_);
  }

  RationalFunction substitute(const std::vector<std::pair<std::size_t, Rational>>& values) const {
    return normalize(num_.substitute(values), den_.substitute(values));
  }

  std::string to_string(const VarNames& names) const {
    if (den_.is_constant()) return num_.to_string(names);
    const std::string n = num_.to_string(names), d = den_.to_string(names);
    const bool bare_den = den_.is_monomial() && den_.leading_coeff() == 1 &&
                          std::popcount(den_.leading().mono.support()) == 1;
    return (num_.size() > 1 ? "(" + n + ")" : n) + "/" + (bare_den ? d : "(" + d + ")");
  }

  friend bool operator==(const RationalFunction& a, const RationalFunction& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }

 private:
  // Takes coprime parts; only the denominator scaling is fixed here.
  static RationalFunction from_parts_unchecked(Poly num, Poly den) {
    if (den.is_zero()) throw ZeroDenominator("rational function with zero denominator");
    RationalFunction r;
    if (num.is_zero()) return r;
    const Rational lc = den.leading_coeff();
    if (lc == 1) {
      r.num_ = std::move(num);
      r.den_ = std::move(den);
    } else {
      const Rational s = Rational(1) / lc;
      r.num_ = num * s;
      r.den_ = den * s;
    }
    return r;
  }

  Poly num_;
  Poly den_;
};

using RF = RationalFunction;

/// Parses the canonical text form (and any expression over + - * / ^ with
/// integer exponents, parentheses, exact rationals and named variables).
class RationalFunctionParser {
 public:
  RationalFunctionParser(std::string_view text, const VarNames& names) : s_(text), names_(names) {}

  RationalFunction parse() {
    RationalFunction r = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at position " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  RationalFunction expr() {
    RationalFunction acc = term();
    while (true) {
      if (eat('+')) acc += term();
      else if (eat('-')) acc -= term();
      else return acc;
    }
  }

  RationalFunction term() {
    RationalFunction acc = unary();
    while (true) {
      if (eat('*')) acc *= unary();
      else if (eat('/')) {
        RationalFunction d = unary();
        if (d.is_zero()) fail("division by zero");
        acc = acc / d;
      } else {
        return acc;
      }
    }
  }

  RationalFunction unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    RationalFunction base = primary();
    if (eat('^')) {
      skip();
      bool neg = eat('-');
      skip();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      const int k = std::stoi(std::string(s_.substr(start, pos_ - start)));
      if (neg && base.is_zero()) fail("division by zero");
      return base.pow(neg ? -k : k);
    }
    return base;
  }

  RationalFunction primary() {
    skip();
    if (eat('(')) {
      RationalFunction r = expr();
      if (!eat(')')) fail("expected ')'");
      return r;
    }
    if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return RationalFunction(parse_rational(std::string(s_.substr(start, pos_ - start))));
    }
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name(s_.substr(start, pos_ - start));
      auto idx = names_.find(name);
      if (!idx) fail("unknown variable '" + name + "'");
      return RationalFunction::variable(*idx);
    }
    fail("expected a number, variable or '('");
  }

  std::string_view s_;
  const VarNames& names_;
  std::size_t pos_ = 0;
};

inline RationalFunction parse_rf(std::string_view text, const VarNames& names) {
  return RationalFunctionParser(text, names).parse();
}

inline Poly parse_poly(std::string_view text, const VarNames& names) {
  RationalFunction r = parse_rf(text, names);
  if (!r.is_polynomial()) throw ParseError("expected a polynomial: '" + std::string(text) + "'");
  return r.num();
}

}  // namespace holohj
