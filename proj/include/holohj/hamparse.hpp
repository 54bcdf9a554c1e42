#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <boost/math/constants/constants.hpp>

#include "holohj/holonomic.hpp"

namespace holohj {

enum class AtomKind { sin, cos, exp };

inline const char* atom_name(AtomKind k) {
  switch (k) {
    case AtomKind::sin: return "sin";
    case AtomKind::cos: return "cos";
    case AtomKind::exp: return "exp";
  }
  return "?";
}

/// A transcendental factor f(v) of one phase-space variable.
struct Atom {
  AtomKind kind;
  std::size_t var;

  friend auto operator<=>(const Atom& a, const Atom& b) {
    return std::tie(a.var, a.kind) <=> std::tie(b.var, b.kind);
  }
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// coeff * z^mono * prod atoms^k, with coeff depending on parameters only.
struct HamTerm {
  RationalFunction coeff;
  Monomial mono;                  // phase-space exponents
  std::map<Atom, unsigned> atoms;  // multiplicity of each transcendental factor

  bool same_shape(const HamTerm& o) const { return mono == o.mono && atoms == o.atoms; }
  bool is_constant() const { return mono.is_one() && atoms.empty(); }
};

/// Sum-of-products expression over the atom family: polynomials in z and the
/// parameters, sin/cos/exp of a single phase-space variable. Terms keep their
/// first-appearance order; terms of the same shape are merged.
class Hamiltonian {
 public:
  Hamiltonian() = default;
  Hamiltonian(std::size_t n, VarNames names) : n_(n), names_(std::move(names)) {}

  std::size_t n() const { return n_; }
  std::size_t nderiv() const { return 2 * n_; }
  const VarNames& names() const { return names_; }
  std::vector<std::string> params() const {
    return {names_.names().begin() + static_cast<std::ptrdiff_t>(2 * n_), names_.names().end()};
  }
  const std::vector<HamTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  Hamiltonian empty() const { return Hamiltonian(n_, names_); }

  Hamiltonian constant(const RationalFunction& c) const {
    Hamiltonian h = empty();
    h.add({c, Monomial{}, {}});
    return h;
  }

  /// Embeds a polynomial in z and the parameters.
  Hamiltonian from_poly(const Poly& p) const {
    Hamiltonian h = empty();
    for (const auto& t : p.terms()) {
      Monomial phase, par;
      for (std::size_t v = 0; v < kMaxVars; ++v) {
        if (t.mono[v] == 0) continue;
        if (v < 2 * n_) phase.set(v, t.mono[v]);
        else par.set(v, t.mono[v]);
      }
      h.add({RationalFunction(Poly::monomial(par, t.coeff)), phase, {}});
    }
    return h;
  }

  void add(HamTerm t) {
    if (t.coeff.is_zero()) return;
    for (auto it = terms_.begin(); it != terms_.end(); ++it) {
      if (!it->same_shape(t)) continue;
      it->coeff += t.coeff;
      if (it->coeff.is_zero()) terms_.erase(it);
      return;
    }
    terms_.push_back(std::move(t));
  }

  Hamiltonian operator-() const { return scale(RationalFunction(-1)); }

  Hamiltonian scale(const RationalFunction& c) const {
    Hamiltonian r = empty();
    for (const auto& t : terms_) r.add({t.coeff * c, t.mono, t.atoms});
    return r;
  }

  friend Hamiltonian operator+(const Hamiltonian& a, const Hamiltonian& b) {
    Hamiltonian r = a;
    for (const auto& t : b.terms_) r.add(t);
    return r;
  }
  friend Hamiltonian operator-(const Hamiltonian& a, const Hamiltonian& b) { return a + (-b); }

  friend Hamiltonian operator*(const Hamiltonian& a, const Hamiltonian& b) {
    Hamiltonian r = a.empty();
    for (const auto& s : a.terms_)
      for (const auto& t : b.terms_) {
        HamTerm u{s.coeff * t.coeff, s.mono * t.mono, s.atoms};
        for (const auto& [atom, k] : t.atoms) u.atoms[atom] += k;
        r.add(std::move(u));
      }
    return r;
  }

  Hamiltonian pow(unsigned k) const {
    Hamiltonian r = constant(RationalFunction(1));
    for (unsigned i = 0; i < k; ++i) r = r * *this;
    return r;
  }

  /// The parameter-only value when every term is constant in z.
  std::optional<RationalFunction> as_constant() const {
    RationalFunction c;
    for (const auto& t : terms_) {
      if (!t.is_constant()) return std::nullopt;
      c += t.coeff;
    }
    return c;
  }

  /// Equality as expressions (term order ignored).
  friend bool operator==(const Hamiltonian& a, const Hamiltonian& b) {
    if (a.terms_.size() != b.terms_.size()) return false;
    for (const auto& t : a.terms_) {
      auto it = std::find_if(b.terms_.begin(), b.terms_.end(), [&](const HamTerm& u) { return u.same_shape(t); });
      if (it == b.terms_.end() || !(it->coeff == t.coeff)) return false;
    }
    return true;
  }

  std::string to_string() const;

 private:
  std::size_t n_ = 0;
  VarNames names_;
  std::vector<HamTerm> terms_;
};

namespace detail {

inline bool looks_negative(const RationalFunction& c) { return c.num().leading_coeff() < 0; }

// Magnitude of a coefficient as a leading factor, or "" when it is 1.
inline std::string coeff_text(const RationalFunction& m, const VarNames& names) {
  if (m == RationalFunction(1)) return "";
  const std::string s = m.to_string(names);
  if (m.den().is_constant() && m.num().is_monomial()) return s;
  return "(" + s + ")";
}

}  // namespace detail

inline std::string Hamiltonian::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const HamTerm& t = terms_[k];
    const bool neg = detail::looks_negative(t.coeff);
    if (k == 0) out += neg ? "-" : "";
    else out += neg ? " - " : " + ";
    std::vector<std::string> factors;
    if (auto c = detail::coeff_text(neg ? -t.coeff : t.coeff, names_); !c.empty()) factors.push_back(c);
    if (!t.mono.is_one()) factors.push_back(monomial_to_string(t.mono, names_));
    for (const auto& [atom, mult] : t.atoms) {
      std::string a = std::string(atom_name(atom.kind)) + "(" + names_[atom.var] + ")";
      if (mult > 1) a += "^" + std::to_string(mult);
      factors.push_back(a);
    }
    if (factors.empty()) factors.push_back("1");
    for (std::size_t j = 0; j < factors.size(); ++j) out += (j ? "*" : "") + factors[j];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parsing.

struct ParseOptions {
  std::size_t n = 0;                // 0: infer from the highest xk/pk index
  std::vector<std::string> params;  // empty: collect unknown names, sorted
};

namespace detail {

inline bool is_function_name(const std::string& s) { return s == "sin" || s == "cos" || s == "exp"; }

// Index k of "x<k>" / "p<k>", or 0.
inline std::size_t phase_index(const std::string& s, char prefix) {
  if (s.size() < 2 || s[0] != prefix || s[1] == '0') return 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return 0;
  return std::stoul(s.substr(1));
}

class HamiltonianParser {
 public:
  HamiltonianParser(std::string_view text, const Hamiltonian& proto) : s_(text), proto_(proto) {}

  Hamiltonian parse() {
    Hamiltonian h = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return h;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg + " at position " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
  }
  [[noreturn]] void unsupported(const std::string& msg, std::size_t at) const {
    throw UnsupportedAtom(msg + " at position " + std::to_string(at) + " in '" + std::string(s_) + "'");
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

  Hamiltonian expr() {
    Hamiltonian acc = term();
    while (true) {
      if (eat('+')) acc = acc + term();
      else if (eat('-')) acc = acc - term();
      else return acc;
    }
  }

  Hamiltonian term() {
    Hamiltonian acc = unary();
    while (true) {
      if (eat('*')) {
        acc = acc * unary();
      } else if (eat('/')) {
        const std::size_t at = pos_;
        const Hamiltonian d = unary();
        auto c = d.as_constant();
        if (!c) unsupported("division by a non-constant expression", at);
        if (c->is_zero()) fail("division by zero");
        acc = acc.scale(c->inverse());
      } else {
        return acc;
      }
    }
  }

  Hamiltonian unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    const std::size_t at = pos_;
    Hamiltonian base = primary();
    if (!eat('^')) return base;
    skip();
    const bool neg = eat('-');
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer exponent");
    const unsigned k = static_cast<unsigned>(std::stoul(std::string(s_.substr(start, pos_ - start))));
    if (!neg) return base.pow(k);
    auto c = base.as_constant();
    if (!c) unsupported("negative power of a non-constant expression", at);
    if (c->is_zero()) fail("division by zero");
    return proto_.constant(c->inverse().pow(static_cast<int>(k)));
  }

  Hamiltonian primary() {
    skip();
    if (eat('(')) {
      Hamiltonian h = expr();
      if (!eat(')')) fail("expected ')'");
      return h;
    }
    if (pos_ >= s_.size()) fail("unexpected end of input");
    if (std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ < s_.size() && s_[pos_] == '.') fail("decimal numbers are not exact; write a fraction");
      return proto_.constant(RationalFunction(parse_rational(std::string(s_.substr(start, pos_ - start)))));
    }
    if (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name(s_.substr(start, pos_ - start));
      skip();
      if (pos_ < s_.size() && s_[pos_] == '(') return call(name, start);
      auto idx = proto_.names().find(name);
      if (!idx) fail("unknown name '" + name + "'");
      return proto_.from_poly(Poly::variable(*idx));
    }
    fail(std::string("unexpected character '") + s_[pos_] + "'");
  }

  Hamiltonian call(const std::string& name, std::size_t at) {
    if (!is_function_name(name)) unsupported("unsupported function '" + name + "'", at);
    eat('(');
    const Hamiltonian arg = expr();
    if (!eat(')')) fail("expected ')'");
    const auto& ts = arg.terms();
    const bool single_var = ts.size() == 1 && ts[0].atoms.empty() && ts[0].coeff == RationalFunction(1) &&
                            ts[0].mono.degree() == 1;
    if (!single_var) unsupported(name + " of '" + arg.to_string() + "' (argument must be one phase-space variable)", at);
    std::size_t var = 0;
    while (ts[0].mono[var] == 0) ++var;
    const AtomKind kind = name == "sin" ? AtomKind::sin : name == "cos" ? AtomKind::cos : AtomKind::exp;
    Hamiltonian h = proto_.empty();
    h.add({RationalFunction(1), Monomial{}, {{Atom{kind, var}, 1u}}});
    return h;
  }

  std::string_view s_;
  const Hamiltonian& proto_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a Hamiltonian over x1..xn, p1..pn and free parameters.
inline Hamiltonian parse_hamiltonian(std::string_view text, const ParseOptions& opt = {}) {
  // Pre-scan identifiers to fix n and the parameter list.
  std::size_t n = 0;
  std::set<std::string> found;
  for (std::size_t i = 0; i < text.size();) {
    if (std::isalpha(static_cast<unsigned char>(text[i])) || text[i] == '_') {
      std::size_t j = i;
      while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      const std::string name(text.substr(i, j - i));
      if (const std::size_t k = std::max(detail::phase_index(name, 'x'), detail::phase_index(name, 'p'))) {
        n = std::max(n, k);
      } else if (!detail::is_function_name(name)) {
        std::size_t after = j;
        while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
        if (after >= text.size() || text[after] != '(') found.insert(name);
      }
      i = j;
    } else {
      ++i;
    }
  }
  if (opt.n) {
    if (n > opt.n)
      throw SyntaxError("expression uses phase-space index " + std::to_string(n) + " but n = " + std::to_string(opt.n));
    n = opt.n;
  }
  if (n == 0) n = 1;
  std::vector<std::string> params = opt.params;
  if (params.empty()) params.assign(found.begin(), found.end());
  if (2 * n + params.size() > kMaxVars) throw InputError("too many variables");
  const Hamiltonian proto(n, VarNames::phase_space(static_cast<int>(n), params));
  return detail::HamiltonianParser(text, proto).parse();
}

// ---------------------------------------------------------------------------
// Exact differentiation oracle.

namespace detail {

inline void diff_term_into(const HamTerm& t, std::size_t v, Hamiltonian& out) {
  if (t.mono[v] > 0) {
    Monomial m = t.mono;
    m.set(v, t.mono[v] - 1);
    out.add({t.coeff * RationalFunction(Rational(t.mono[v])), m, t.atoms});
  }
  for (const auto& [atom, k] : t.atoms) {
    if (atom.var != v) continue;
    HamTerm u{t.coeff * RationalFunction(Rational(k)), t.mono, t.atoms};
    if (atom.kind == AtomKind::exp) {
      out.add(std::move(u));
      continue;
    }
    if (--u.atoms[atom] == 0) u.atoms.erase(atom);
    const Atom partner{atom.kind == AtomKind::sin ? AtomKind::cos : AtomKind::sin, v};
    ++u.atoms[partner];
    if (atom.kind == AtomKind::cos) u.coeff = -u.coeff;
    out.add(std::move(u));
  }
}

}  // namespace detail

/// Exact partial derivative d/dz_v (v < 2n).
inline Hamiltonian oracle_diff(const Hamiltonian& h, std::size_t v) {
  Hamiltonian out = h.empty();
  for (const auto& t : h.terms()) detail::diff_term_into(t, v, out);
  return out;
}

/// Exact d^alpha h.
inline Hamiltonian oracle_diff(const Hamiltonian& h, const Monomial& alpha) {
  Hamiltonian r = h;
  for (std::size_t v = 0; v < h.nderiv(); ++v)
    for (unsigned k = 0; k < alpha[v]; ++k) r = oracle_diff(r, v);
  return r;
}

/// L * (P . h) where L is the lcm of the coefficient denominators of P;
/// the result is again in the atom family.
inline Hamiltonian apply_cleared(const DiffOperator& P, const Hamiltonian& h) {
  Poly L(1);
  for (const auto& [alpha, c] : P.terms()) L = lcm(L, c.den());
  Hamiltonian out = h.empty();
  for (const auto& [alpha, c] : P.terms()) {
    const Poly scale = *divide_exact(L, c.den()) * c.num();
    out = out + h.from_poly(scale) * oracle_diff(h, alpha);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Numeric evaluation.

template <class Real>
Real evaluate(const Hamiltonian& h, const NumPoint<Real>& z) {
  const auto vals = z.ring_values();
  Real acc = 0;
  for (const auto& t : h.terms()) {
    Real v = CompiledRF<Real>(t.coeff).eval(vals);
    for (std::size_t i = 0; i < h.nderiv(); ++i)
      if (t.mono[i]) v *= pow(vals.at(i), static_cast<int>(t.mono[i]));
    for (const auto& [atom, k] : t.atoms) {
      const Real x = vals.at(atom.var);
      const Real f = atom.kind == AtomKind::sin ? sin(x) : atom.kind == AtomKind::cos ? cos(x) : exp(x);
      v *= pow(f, static_cast<int>(k));
    }
    acc += v;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Atom annihilators.

/// One factor of a term: a power v^k, or sin/cos/exp of v.
struct AtomSpec {
  enum class Kind { power, sin, cos, exp } kind;
  std::size_t var;
  unsigned power = 1;  // only for Kind::power
};

struct AtomAnnihilator {
  AtomSpec atom;
  std::vector<DiffOperator> operators;  // own-variable operator first, then d_j for the others
  PfaffianSystem system;                // lifted to all 2n directions
};

inline AtomAnnihilator atom_annihilator(const AtomSpec& a, std::size_t nderiv,
                                        MonomialForm form = MonomialForm::first_order) {
  AtomAnnihilator r{a, {}, {}};
  const NumPoint<Extended> none;
  DiffOperator own;
  HolonomicFunction f;
  switch (a.kind) {
    case AtomSpec::Kind::power:
      if (a.power == 0) {
        own = DiffOperator::derivation(a.var);
      } else if (form == MonomialForm::first_order) {
        own = DiffOperator::monomial(Monomial::unit(a.var), RationalFunction::variable(a.var)) -
              DiffOperator(RationalFunction(Rational(a.power)));
      } else {
        own = DiffOperator::derivation(a.var, a.power + 1);
      }
      f = monomial_function(a.var, a.power, nderiv, none, form, false);
      break;
    case AtomSpec::Kind::sin:
    case AtomSpec::Kind::cos:
      own = DiffOperator::derivation(a.var, 2) + DiffOperator(RationalFunction(1));
      f = trig_function(a.kind == AtomSpec::Kind::sin ? TrigKind::sin : TrigKind::cos, a.var, nderiv, none, false);
      break;
    case AtomSpec::Kind::exp:
      own = DiffOperator::derivation(a.var) - DiffOperator(RationalFunction(1));
      f = exp_function(a.var, nderiv, none, false);
      break;
  }
  r.operators.push_back(std::move(own));
  for (std::size_t j = 0; j < nderiv; ++j)
    if (j != a.var) r.operators.push_back(DiffOperator::derivation(j));
  r.system = std::move(f.system);
  return r;
}

/// The atom as an expression, for oracle checks.
inline Hamiltonian atom_expression(const AtomSpec& a, const Hamiltonian& proto) {
  Hamiltonian h = proto.empty();
  switch (a.kind) {
    case AtomSpec::Kind::power: h.add({RationalFunction(1), Monomial::unit(a.var, a.power), {}}); break;
    case AtomSpec::Kind::sin: h.add({RationalFunction(1), Monomial{}, {{Atom{AtomKind::sin, a.var}, 1u}}}); break;
    case AtomSpec::Kind::cos: h.add({RationalFunction(1), Monomial{}, {{Atom{AtomKind::cos, a.var}, 1u}}}); break;
    case AtomSpec::Kind::exp: h.add({RationalFunction(1), Monomial{}, {{Atom{AtomKind::exp, a.var}, 1u}}}); break;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Assembly.

struct BuildOptions {
  MonomialForm monomial_form = MonomialForm::first_order;
  TermOrder order;
};

/// Closure product of the factors of one term (coefficient included).
inline HolonomicFunction term_function(const HamTerm& t, const Hamiltonian& h, const NumPoint<Extended>& base,
                                       const BuildOptions& opt = {}) {
  const std::size_t m = h.nderiv();
  HolonomicFunction f = closure_scale(constant_function(m, base), t.coeff);
  for (std::size_t v = 0; v < m; ++v)
    if (t.mono[v]) f = closure_prod(f, monomial_function(v, t.mono[v], m, base, opt.monomial_form));
  for (const auto& [atom, k] : t.atoms)
    for (unsigned j = 0; j < k; ++j) {
      HolonomicFunction g = atom.kind == AtomKind::exp
                                ? exp_function(atom.var, m, base)
                                : trig_function(atom.kind == AtomKind::sin ? TrigKind::sin : TrigKind::cos, atom.var, m, base);
      f = closure_prod(f, g);
    }
  return f;
}

/// h as a holonomic function: closure product within terms, closure sum
/// across terms, then canonical form with basis starting at 1.
inline CanonicalForm build_h(const Hamiltonian& h, const NumPoint<Extended>& base, const BuildOptions& opt = {}) {
  if (base.coords.size() != h.nderiv())
    throw InputError("base point has " + std::to_string(base.coords.size()) + " coordinates, expected " +
                     std::to_string(h.nderiv()));
  if (base.params.size() != h.params().size())
    throw InputError("base point binds " + std::to_string(base.params.size()) + " parameters, expected " +
                     std::to_string(h.params().size()));
  if (h.is_zero()) throw RankDeficientExtract("the zero Hamiltonian has no canonical system");
  HolonomicFunction f;
  bool first = true;
  for (const auto& t : h.terms()) {
    HolonomicFunction g = term_function(t, h, base, opt);
    f = first ? std::move(g) : closure_sum(f, g);
    first = false;
  }
  return canonicalize(f, opt.order, h.nderiv());
}

// ---------------------------------------------------------------------------
// Numeric constant expressions, used for base points and parameter values.

namespace detail {

class ConstantParser {
 public:
  ConstantParser(std::string_view text, const std::map<std::string, Extended>& vars) : s_(text), vars_(vars) {}

  Extended parse() {
    Extended v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg + " at position " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
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

  Extended expr() {
    Extended acc = term();
    while (true) {
      if (eat('+')) acc += term();
      else if (eat('-')) acc -= term();
      else return acc;
    }
  }
  Extended term() {
    Extended acc = unary();
    while (true) {
      if (eat('*')) acc *= unary();
      else if (eat('/')) acc /= unary();
      else return acc;
    }
  }
  Extended unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    Extended base = primary();
    if (eat('^')) return pow(base, unary());
    return base;
  }
  Extended primary() {
    skip();
    if (eat('(')) {
      Extended v = expr();
      if (!eat(')')) fail("expected ')'");
      return v;
    }
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
        std::size_t p = pos_ + 1;
        if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
        if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
          pos_ = p;
          while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }
      }
      return Extended(std::string(s_.substr(start, pos_ - start)));
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name(s_.substr(start, pos_ - start));
      if (eat('(')) {
        Extended a = expr();
        if (!eat(')')) fail("expected ')'");
        if (name == "sin") return sin(a);
        if (name == "cos") return cos(a);
        if (name == "exp") return exp(a);
        if (name == "log") return log(a);
        if (name == "sqrt") return sqrt(a);
        fail("unknown function '" + name + "'");
      }
      if (auto it = vars_.find(name); it != vars_.end()) return it->second;
      if (name == "pi") return boost::math::constants::pi<Extended>();
      if (name == "e") return boost::math::constants::e<Extended>();
      fail("unknown name '" + name + "'");
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  const std::map<std::string, Extended>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Evaluates a real constant such as "b*(pi/6)^4" in extended precision.
inline Extended evaluate_constant(std::string_view text, const std::map<std::string, Extended>& vars = {}) {
  return detail::ConstantParser(text, vars).parse();
}

}  // namespace holohj
