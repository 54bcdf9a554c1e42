#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace holohj {

/// Hard upper bound on the number of variables (phase-space coordinates plus
/// symbolic parameters) a polynomial may involve.
inline constexpr std::size_t kMaxVars = 16;

/// Exponent vector. Used both for polynomial monomials z^e and for
/// derivation monomials d^alpha.
class Monomial {
 public:
  using Exponent = std::uint16_t;

  Monomial() = default;

  static Monomial unit(std::size_t var, unsigned power = 1) {
    Monomial m;
    m.set(var, power);
    return m;
  }

  static Monomial from(const std::vector<int>& exps) {
    if (exps.size() > kMaxVars) throw std::out_of_range("too many variables");
    Monomial m;
    for (std::size_t i = 0; i < exps.size(); ++i) {
      if (exps[i] < 0) throw std::invalid_argument("negative exponent");
      m.set(i, static_cast<unsigned>(exps[i]));
    }
    return m;
  }

  Exponent operator[](std::size_t i) const { return e_[i]; }

  void set(std::size_t i, unsigned power) {
    if (i >= kMaxVars) throw std::out_of_range("variable index exceeds kMaxVars");
    e_[i] = static_cast<Exponent>(power);
  }

  unsigned degree() const {
    unsigned d = 0;
    for (auto x : e_) d += x;
    return d;
  }

  bool is_one() const {
    return std::all_of(e_.begin(), e_.end(), [](Exponent x) { return x == 0; });
  }

  bool divides(const Monomial& other) const {
    for (std::size_t i = 0; i < kMaxVars; ++i)
      if (e_[i] > other.e_[i]) return false;
    return true;
  }

  Monomial operator*(const Monomial& o) const {
    Monomial r;
    for (std::size_t i = 0; i < kMaxVars; ++i) r.e_[i] = static_cast<Exponent>(e_[i] + o.e_[i]);
    return r;
  }

  /// Requires o.divides(*this).
  Monomial operator/(const Monomial& o) const {
    Monomial r;
    for (std::size_t i = 0; i < kMaxVars; ++i) r.e_[i] = static_cast<Exponent>(e_[i] - o.e_[i]);
    return r;
  }

  friend Monomial lcm(const Monomial& a, const Monomial& b) {
    Monomial r;
    for (std::size_t i = 0; i < kMaxVars; ++i) r.e_[i] = std::max(a.e_[i], b.e_[i]);
    return r;
  }

  friend Monomial gcd(const Monomial& a, const Monomial& b) {
    Monomial r;
    for (std::size_t i = 0; i < kMaxVars; ++i) r.e_[i] = std::min(a.e_[i], b.e_[i]);
    return r;
  }

  bool coprime(const Monomial& o) const {
    for (std::size_t i = 0; i < kMaxVars; ++i)
      if (e_[i] != 0 && o.e_[i] != 0) return false;
    return true;
  }

  /// Variables with nonzero exponent, as a bit mask.
  std::uint32_t support() const {
    std::uint32_t s = 0;
    for (std::size_t i = 0; i < kMaxVars; ++i)
      if (e_[i] != 0) s |= (1u << i);
    return s;
  }

  std::vector<int> to_vector(std::size_t nvars) const {
    return std::vector<int>(e_.begin(), e_.begin() + static_cast<std::ptrdiff_t>(nvars));
  }

  // Structural (lexicographic) comparison; used for map keys only.
  auto operator<=>(const Monomial&) const = default;
  bool operator==(const Monomial&) const = default;

 private:
  std::array<Exponent, kMaxVars> e_{};
};

/// Graded reverse lexicographic comparison with variable 0 the most
/// significant. Returns true when a < b.
inline bool grevlex_less(const Monomial& a, const Monomial& b) {
  const unsigned da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  for (std::size_t i = kMaxVars; i-- > 0;) {
    if (a[i] != b[i]) return a[i] > b[i];
  }
  return false;
}

/// Configurable monomial order on derivation monomials.
///
/// `precedence` lists variable indices from most to least significant; an
/// empty list means identity order (x1 > x2 > ... > p_n).
struct TermOrder {
  enum class Kind { grevlex, deglex, lex };

  Kind kind = Kind::grevlex;
  std::vector<int> precedence;

  bool less(const Monomial& a, const Monomial& b) const {
    if (kind != Kind::lex) {
      const unsigned da = a.degree(), db = b.degree();
      if (da != db) return da < db;
    }
    const std::size_t m = precedence.empty() ? kMaxVars : precedence.size();
    auto var = [&](std::size_t k) {
      return precedence.empty() ? k : static_cast<std::size_t>(precedence[k]);
    };
    if (kind == Kind::grevlex) {
      for (std::size_t k = m; k-- > 0;) {
        const auto v = var(k);
        if (a[v] != b[v]) return a[v] > b[v];
      }
      return false;
    }
    for (std::size_t k = 0; k < m; ++k) {
      const auto v = var(k);
      if (a[v] != b[v]) return a[v] < b[v];
    }
    return false;
  }

  std::string name() const {
    switch (kind) {
      case Kind::grevlex: return "grevlex";
      case Kind::deglex: return "deglex";
      case Kind::lex: return "lex";
    }
    return "grevlex";
  }

  static TermOrder parse(const std::string& text, std::vector<int> precedence = {}) {
    TermOrder o;
    if (text == "grevlex") o.kind = Kind::grevlex;
    else if (text == "deglex") o.kind = Kind::deglex;
    else if (text == "lex") o.kind = Kind::lex;
    else throw std::invalid_argument("unknown term order '" + text + "'");
    o.precedence = std::move(precedence);
    return o;
  }
};

}  // namespace holohj
