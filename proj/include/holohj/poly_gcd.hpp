#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "holohj/poly.hpp"

namespace holohj {

Poly gcd(const Poly& f, const Poly& g);

namespace detail {

// Coefficients of f viewed as a univariate polynomial in `var`.
inline std::vector<Poly> coefficients_in(const Poly& f, std::size_t var) {
  std::vector<std::vector<Poly::Term>> buckets(f.degree_in(var) + 1);
  for (const auto& t : f.terms()) {
    Monomial m = t.mono;
    const unsigned e = m[var];
    m.set(var, 0);
    buckets[e].push_back({m, t.coeff});
  }
  std::vector<Poly> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.push_back(Poly::from_terms(std::move(b)));
  return out;
}

inline Poly leading_coeff_in(const Poly& f, std::size_t var) {
  const unsigned d = f.degree_in(var);
  std::vector<Poly::Term> terms;
  for (const auto& t : f.terms()) {
    if (t.mono[var] != d) continue;
    Monomial m = t.mono;
    m.set(var, 0);
    terms.push_back({m, t.coeff});
  }
  return Poly::from_terms(std::move(terms));
}

inline Poly content_in(const Poly& f, std::size_t var) {
  Poly c;
  for (const auto& coeff : coefficients_in(f, var)) {
    if (coeff.is_zero()) continue;
    c = c.is_zero() ? coeff.primitive() : gcd(c, coeff);
    if (c.is_constant()) return Poly(1);
  }
  return c;
}

inline Poly primitive_part_in(const Poly& f, std::size_t var) {
  if (f.is_zero()) return f;
  const Poly c = content_in(f, var);
  if (c.is_constant()) return f.primitive();
  return divide_exact(f, c)->primitive();
}

// Sparse pseudo-remainder of a by b with respect to `var`, made primitive
// over the integers at every step.
inline Poly pseudo_remainder(Poly a, const Poly& b, std::size_t var) {
  const unsigned db = b.degree_in(var);
  const Poly lb = leading_coeff_in(b, var);
  while (!a.is_zero() && a.degree_in(var) >= db) {
    const unsigned da = a.degree_in(var);
    const Poly la = leading_coeff_in(a, var);
    a = lb * a - (la * b).mul_term(Monomial::unit(var, da - db), 1);
    a = a.primitive();
  }
  return a;
}

inline Integer max_norm(const Poly& f) {
  Integer m = 0;
  for (const auto& t : f.terms()) {
    const Integer a = abs(t.coeff.get_num());
    if (a > m) m = a;
  }
  return m;
}

inline Integer integer_content(const Poly& f) {
  Integer g = 0;
  for (const auto& t : f.terms()) mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), t.coeff.get_num_mpz_t());
  return g;
}

// Symmetric residue of every coefficient of h modulo xi.
inline Poly symmetric_mod(const Poly& h, const Integer& xi) {
  std::vector<Poly::Term> out;
  const Integer half = xi / 2;
  for (const auto& t : h.terms()) {
    Integer r;
    mpz_fdiv_r(r.get_mpz_t(), t.coeff.get_num_mpz_t(), xi.get_mpz_t());
    if (r > half) r -= xi;
    if (r != 0) out.push_back({t.mono, Rational(r)});
  }
  return Poly::from_terms(std::move(out));
}

inline constexpr std::size_t kHeuristicBitLimit = 4000000;

// Heuristic gcd over Z of polynomials with integer coefficients: evaluate the
// main variable at a large integer, recurse, and recover the gcd by xi-adic
// expansion. Returns nullopt when every attempt fails the division test.
inline std::optional<Poly> heuristic_gcd(const Poly& f, const Poly& g) {
  if (f.is_zero()) return g;
  if (g.is_zero()) return f;
  if (f.is_constant() || g.is_constant()) {
    Integer c = integer_content(f);
    mpz_gcd(c.get_mpz_t(), c.get_mpz_t(), integer_content(g).get_mpz_t());
    return Poly(Rational(c));
  }
  const std::uint32_t s = f.support() | g.support();
  std::size_t var = 0;
  while (!(s & (1u << var))) ++var;

  const Integer cf = integer_content(f), cg = integer_content(g);
  Integer content;
  mpz_gcd(content.get_mpz_t(), cf.get_mpz_t(), cg.get_mpz_t());
  const Poly fp = f * Rational(Integer(1), cf);
  const Poly gp = g * Rational(Integer(1), cg);

  Integer xi = 2 * std::min(max_norm(fp), max_norm(gp)) + 29;
  for (int attempt = 0; attempt < 6; ++attempt) {
    if (mpz_sizeinbase(xi.get_mpz_t(), 2) * std::max(fp.degree_in(var), gp.degree_in(var)) > kHeuristicBitLimit)
      return std::nullopt;
    const Rational xr(xi);
    auto h = heuristic_gcd(fp.substitute({{var, xr}}), gp.substitute({{var, xr}}));
    if (h) {
      std::vector<Poly::Term> terms;
      Poly rest = *h;
      unsigned power = 0;
      while (!rest.is_zero()) {
        const Poly c = symmetric_mod(rest, xi);
        for (const auto& t : c.terms()) terms.push_back({t.mono * Monomial::unit(var, power), t.coeff});
        rest = (rest - c) * Rational(Integer(1), xi);
        ++power;
      }
      const Poly cand = Poly::from_terms(std::move(terms));
      if (!cand.is_zero()) {
        const Poly G = cand.primitive();
        if (divide_exact(fp, G) && divide_exact(gp, G)) return G * Rational(content);
      }
    }
    xi = xi * 73794 / 27011;
  }
  return std::nullopt;
}

// gcd of integer-primitive polynomials without monomial content.
inline Poly gcd_core(Poly f, Poly g) {
  if (f.is_constant() || g.is_constant()) return Poly(1);
  if (f == g) return f;
  if (f.size() <= g.size()) {
    if (divide_exact(g, f)) return f;
  } else if (divide_exact(f, g)) {
    return g;
  }
  const std::uint32_t sf = f.support(), sg = g.support();
  // A variable present in only one argument can only contribute through the
  // content with respect to that variable.
  for (std::size_t v = 0; v < kMaxVars; ++v) {
    const std::uint32_t bit = 1u << v;
    if ((sf & bit) && !(sg & bit)) return gcd(content_in(f, v), g);
    if ((sg & bit) && !(sf & bit)) return gcd(f, content_in(g, v));
  }
  // Main variable: the common one of least degree.
  std::size_t var = kMaxVars;
  unsigned best = ~0u;
  for (std::size_t v = 0; v < kMaxVars; ++v) {
    if (!(sf & (1u << v))) continue;
    const unsigned d = std::max(f.degree_in(v), g.degree_in(v));
    if (d < best) {
      best = d;
      var = v;
    }
  }
  const Poly cf = content_in(f, var), cg = content_in(g, var);
  const Poly content = gcd(cf, cg);
  Poly a = cf.is_constant() ? f : *divide_exact(f, cf);
  Poly b = cg.is_constant() ? g : *divide_exact(g, cg);
  if (a.degree_in(var) < b.degree_in(var)) std::swap(a, b);
  while (true) {
    Poly r = pseudo_remainder(a, b, var);
    if (r.is_zero()) break;
    if (r.degree_in(var) == 0) {
      b = Poly(1);
      break;
    }
    a = std::move(b);
    b = primitive_part_in(r, var);
  }
  return (content * primitive_part_in(b, var)).primitive();
}

}  // namespace detail

/// Greatest common divisor over Q, normalized to leading coefficient 1.
inline Poly gcd(const Poly& f, const Poly& g) {
  if (f.is_zero()) return g.monic();
  if (g.is_zero()) return f.monic();
  if (f.is_constant() || g.is_constant()) return Poly(1);
  const Monomial mf = f.min_exponents(), mg = g.min_exponents();
  const Monomial common = gcd(mf, mg);
  const Poly a = f.divide_monomial(mf).primitive(), b = g.divide_monomial(mg).primitive();
  std::optional<Poly> core = detail::heuristic_gcd(a, b);
  if (!core) core = detail::gcd_core(a, b);
  return (core->mul_term(common, 1)).monic();
}

inline Poly lcm(const Poly& f, const Poly& g) {
  if (f.is_zero() || g.is_zero()) return {};
  const Poly d = gcd(f, g);
  return (*divide_exact(f, d) * g).monic();
}

}  // namespace holohj
