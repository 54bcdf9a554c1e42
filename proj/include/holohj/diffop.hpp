#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "holohj/ratfun.hpp"

namespace holohj {

/// Element of Q(z)<d> in left-normal form: a finite sum of c_alpha(z) d^alpha
/// with every coefficient written to the left of the derivations.
class DiffOperator {
 public:
  using Terms = std::map<Monomial, RationalFunction>;

  DiffOperator() = default;
  DiffOperator(const RationalFunction& c) {  // NOLINT: coefficient embedding
    if (!c.is_zero()) terms_.emplace(Monomial{}, c);
  }

  static DiffOperator monomial(const Monomial& alpha, const RationalFunction& c = RationalFunction(1)) {
    DiffOperator d;
    if (!c.is_zero()) d.terms_.emplace(alpha, c);
    return d;
  }

  static DiffOperator derivation(std::size_t var, unsigned power = 1) {
    return monomial(Monomial::unit(var, power));
  }

  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  RationalFunction coefficient(const Monomial& alpha) const {
    auto it = terms_.find(alpha);
    return it == terms_.end() ? RationalFunction{} : it->second;
  }

  /// Largest total derivation degree |alpha|.
  unsigned order() const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }

  std::pair<Monomial, RationalFunction> leading(const TermOrder& order) const {
    auto best = terms_.begin();
    for (auto it = terms_.begin(); it != terms_.end(); ++it)
      if (order.less(best->first, it->first)) best = it;
    return *best;
  }

  Monomial leading_monomial(const TermOrder& order) const { return leading(order).first; }

  DiffOperator monic(const TermOrder& order) const {
    return scale(leading(order).second.inverse());
  }

  /// c * P (left multiplication by a coefficient).
  DiffOperator scale(const RationalFunction& c) const {
    if (c.is_zero()) return {};
    DiffOperator r;
    for (const auto& [m, a] : terms_) r.terms_.emplace(m, c * a);
    return r;
  }

  DiffOperator operator-() const { return scale(RationalFunction(-1)); }

  DiffOperator& operator+=(const DiffOperator& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  DiffOperator& operator-=(const DiffOperator& o) {
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  friend DiffOperator operator+(DiffOperator a, const DiffOperator& b) { return a += b; }
  friend DiffOperator operator-(DiffOperator a, const DiffOperator& b) { return a -= b; }

  void add_term(const Monomial& m, const RationalFunction& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  std::string to_string(const VarNames& names) const;

  friend bool operator==(const DiffOperator& a, const DiffOperator& b) { return a.terms_ == b.terms_; }

 private:
  Terms terms_;
};

namespace detail {

inline Integer binomial(unsigned n, unsigned k) {
  Integer r;
  mpz_bin_uiui(r.get_mpz_t(), n, k);
  return r;
}

/// d^mu applied to a coefficient, memoized per coefficient.
class DerivativeCache {
 public:
  explicit DerivativeCache(const RationalFunction& f) { cache_.emplace(Monomial{}, f); }

  const RationalFunction& get(const Monomial& mu) {
    if (auto it = cache_.find(mu); it != cache_.end()) return it->second;
    std::size_t var = 0;
    while (mu[var] == 0) ++var;
    Monomial parent = mu;
    parent.set(var, mu[var] - 1u);
    RationalFunction d = get(parent).diff(var);
    return cache_.emplace(mu, std::move(d)).first->second;
  }

 private:
  std::map<Monomial, RationalFunction> cache_;
};

// All mu <= alpha componentwise.
inline void for_each_divisor(const Monomial& alpha, std::size_t nvars,
                             const std::function<void(const Monomial&)>& fn) {
  Monomial mu;
  while (true) {
    fn(mu);
    std::size_t v = 0;
    while (v < nvars) {
      if (mu[v] < alpha[v]) {
        mu.set(v, mu[v] + 1u);
        break;
      }
      mu.set(v, 0);
      ++v;
    }
    if (v == nvars) return;
  }
}

inline std::size_t support_extent(const Monomial& m) {
  std::size_t n = 0;
  for (std::size_t v = 0; v < kMaxVars; ++v)
    if (m[v] != 0) n = v + 1;
  return n;
}

}  // namespace detail

/// d^alpha composed with c: sum over mu <= alpha of binom(alpha, mu) (d^mu c) d^(alpha - mu).
inline DiffOperator derivation_times_coefficient(const Monomial& alpha, detail::DerivativeCache& c) {
  DiffOperator r;
  const std::size_t nv = detail::support_extent(alpha);
  detail::for_each_divisor(alpha, nv, [&](const Monomial& mu) {
    Integer b = 1;
    for (std::size_t v = 0; v < nv; ++v) b *= detail::binomial(alpha[v], mu[v]);
    const RationalFunction& dc = c.get(mu);
    if (!dc.is_zero()) r.add_term(alpha / mu, dc * RationalFunction(Rational(b)));
  });
  return r;
}

/// Product P * Q in Q(z)<d>, using d_i c = c d_i + (d c / d z_i).
inline DiffOperator op_mul(const DiffOperator& P, const DiffOperator& Q) {
  DiffOperator r;
  for (const auto& [beta, b] : Q.terms()) {
    detail::DerivativeCache cache(b);
    for (const auto& [alpha, a] : P.terms()) {
      if (alpha.is_one()) {
        r.add_term(beta, a * b);
        continue;
      }
      const DiffOperator moved = derivation_times_coefficient(alpha, cache);
      for (const auto& [gamma, c] : moved.terms()) r.add_term(gamma * beta, a * c);
    }
  }
  return r;
}

/// d^delta * P.
inline DiffOperator shift(const Monomial& delta, const DiffOperator& P) {
  if (delta.is_one()) return P;
  DiffOperator r;
  for (const auto& [beta, b] : P.terms()) {
    detail::DerivativeCache cache(b);
    const DiffOperator moved = derivation_times_coefficient(delta, cache);
    for (const auto& [gamma, c] : moved.terms()) r.add_term(gamma * beta, c);
  }
  return r;
}

/// Action of P on a rational function: sum c_alpha * d^alpha f.
inline RationalFunction apply(const DiffOperator& P, const RationalFunction& f) {
  detail::DerivativeCache cache(f);
  RationalFunction acc;
  for (const auto& [alpha, c] : P.terms()) acc += c * cache.get(alpha);
  return acc;
}

/// Normal form of P modulo G: P - R lies in the left ideal generated by G and
/// no derivation monomial of R is divisible by a leading monomial of G.
inline DiffOperator reduce(const DiffOperator& P, const std::vector<DiffOperator>& G, const TermOrder& order) {
  std::vector<std::pair<Monomial, RationalFunction>> leads;
  leads.reserve(G.size());
  for (const auto& g : G) leads.push_back(g.leading(order));
  DiffOperator rest = P, remainder;
  while (!rest.is_zero()) {
    auto [lm, lc] = rest.leading(order);
    bool reduced = false;
    for (std::size_t k = 0; k < G.size(); ++k) {
      if (!leads[k].first.divides(lm)) continue;
      const DiffOperator q = shift(lm / leads[k].first, G[k]);
      rest -= q.scale(lc / leads[k].second);
      reduced = true;
      break;
    }
    if (!reduced) {
      remainder.add_term(lm, lc);
      rest.add_term(lm, -lc);
    }
  }
  return remainder;
}

inline std::string derivation_to_string(const Monomial& m, const VarNames& names) {
  std::string out;
  for (std::size_t i = 0; i < kMaxVars; ++i) {
    if (m[i] == 0) continue;
    if (!out.empty()) out += "*";
    out += "d" + (i < names.size() ? names[i] : "v" + std::to_string(i));
    if (m[i] > 1) out += "^" + std::to_string(m[i]);
  }
  return out;
}

inline std::string DiffOperator::to_string(const VarNames& names) const {
  if (terms_.empty()) return "0";
  // Highest derivations first, under grevlex.
  std::vector<const Terms::value_type*> items;
  for (const auto& kv : terms_) items.push_back(&kv);
  std::sort(items.begin(), items.end(), [](auto a, auto b) { return grevlex_less(b->first, a->first); });
  std::string out;
  bool first = true;
  for (const auto* kv : items) {
    const auto& [m, c] = *kv;
    RationalFunction mag = c;
    bool neg = false;
    if (c.num().size() == 1 && c.num().leading_coeff() < 0) {
      neg = true;
      mag = -c;
    }
    out += first ? (neg ? "-" : "") : (neg ? " - " : " + ");
    first = false;
    const std::string d = derivation_to_string(m, names);
    std::string cs = mag.to_string(names);
    if (mag.is_polynomial() && mag.num().size() > 1) cs = "(" + cs + ")";
    if (d.empty()) out += cs;
    else if (mag == RationalFunction(1)) out += d;
    else out += cs + "*" + d;
  }
  return out;
}

/// Parser for operator text: names "d<var>" are derivations, other names are
/// ring variables. Products compose left to right in Q(z)<d>.
class DiffOperatorParser {
 public:
  DiffOperatorParser(std::string_view text, const VarNames& names, std::size_t nderiv)
      : s_(text), names_(names), nderiv_(nderiv) {}

  DiffOperator parse() {
    DiffOperator r = expr();
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

  DiffOperator expr() {
    DiffOperator acc = term();
    while (true) {
      if (eat('+')) acc += term();
      else if (eat('-')) acc -= term();
      else return acc;
    }
  }

  DiffOperator term() {
    DiffOperator acc = unary();
    while (true) {
      if (eat('*')) {
        acc = op_mul(acc, unary());
      } else if (eat('/')) {
        DiffOperator d = unary();
        if (d.size() != 1 || !d.terms().begin()->first.is_one()) fail("division by an operator");
        acc = acc.scale(d.terms().begin()->second.inverse());
      } else {
        return acc;
      }
    }
  }

  DiffOperator unary() {
    if (eat('-')) return -unary();
    DiffOperator base = primary();
    if (eat('^')) {
      skip();
      const bool neg = eat('-');
      skip();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected integer exponent");
      const int k = std::stoi(std::string(s_.substr(start, pos_ - start)));
      if (neg) {
        if (base.size() != 1 || !base.terms().begin()->first.is_one()) fail("negative power of an operator");
        return DiffOperator(base.terms().begin()->second.pow(-k));
      }
      DiffOperator r(RationalFunction(1));
      for (int i = 0; i < k; ++i) r = op_mul(r, base);
      return r;
    }
    return base;
  }

  DiffOperator primary() {
    skip();
    if (eat('(')) {
      DiffOperator r = expr();
      if (!eat(')')) fail("expected ')'");
      return r;
    }
    if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      return DiffOperator(RationalFunction(parse_rational(std::string(s_.substr(start, pos_ - start)))));
    }
    if (pos_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      const std::string name(s_.substr(start, pos_ - start));
      if (auto idx = names_.find(name)) return DiffOperator(RationalFunction::variable(*idx));
      if (name.size() > 1 && name[0] == 'd') {
        if (auto idx = names_.find(name.substr(1)); idx && *idx < nderiv_) return DiffOperator::derivation(*idx);
      }
      fail("unknown name '" + name + "'");
    }
    fail("expected a number, name or '('");
  }

  std::string_view s_;
  const VarNames& names_;
  std::size_t nderiv_;
  std::size_t pos_ = 0;
};

inline DiffOperator parse_operator(std::string_view text, const VarNames& names, std::size_t nderiv) {
  return DiffOperatorParser(text, names, nderiv).parse();
}

}  // namespace holohj
