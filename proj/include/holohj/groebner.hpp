#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "holohj/diffop.hpp"

namespace holohj {

struct OperatorIdeal {
  std::vector<DiffOperator> generators;
  TermOrder order;
  std::size_t nderiv = 0;  // number of derivations d_1..d_m
};

struct GroebnerLimits {
  std::size_t max_pairs = 20000;   // S-pairs processed
  unsigned max_degree = 24;        // total derivation degree of any element
  std::size_t max_elements = 500;
};

/// Reduced Groebner basis of a left ideal of Q(z)<d>.
struct GroebnerBasis {
  std::vector<DiffOperator> elements;  // monic, inter-reduced
  TermOrder order;
  std::size_t nderiv = 0;

  std::vector<Monomial> staircase() const {
    std::vector<Monomial> s;
    for (const auto& g : elements) s.push_back(g.leading_monomial(order));
    return s;
  }

  bool is_unit() const {
    return elements.size() == 1 && elements[0].order() == 0;
  }

  bool contains(const DiffOperator& P) const { return reduce(P, elements, order).is_zero(); }
};

namespace detail {

inline bool commute(const DiffOperator& a, const DiffOperator& b) {
  return op_mul(a, b) == op_mul(b, a);
}

inline unsigned sugar_of(const DiffOperator& p) { return p.order(); }

}  // namespace detail

/// Buchberger's algorithm in Q(z)<d> with sugar selection.
///
/// Pairs with coprime leading monomials are skipped only when the two
/// operators commute; in this ring coprime leading monomials alone do not
/// imply that the S-operator reduces to zero (d_1 + z_2 and d_2 generate the
/// unit ideal).
inline GroebnerBasis buchberger(const OperatorIdeal& ideal, const GroebnerLimits& limits = {}) {
  const TermOrder& order = ideal.order;
  GroebnerBasis out{{}, order, ideal.nderiv};
  auto unit = [&] {
    out.elements = {DiffOperator(RationalFunction(1))};
    return out;
  };

  std::vector<DiffOperator> G;
  std::vector<unsigned> sugar;
  struct Pair {
    std::size_t i, j;
    unsigned sugar;
    Monomial lcm;
    std::size_t seq;
  };
  std::vector<Pair> pairs;
  std::size_t seq = 0;

  auto add = [&](DiffOperator p, unsigned s) -> bool {
    p = p.monic(order);
    if (p.order() == 0) return false;  // unit ideal
    if (p.order() > limits.max_degree)
      throw ResourceLimit("Groebner element exceeds derivation degree budget " + std::to_string(limits.max_degree));
    const Monomial lp = p.leading_monomial(order);
    for (std::size_t k = 0; k < G.size(); ++k) {
      const Monomial lk = G[k].leading_monomial(order);
      const Monomial l = lcm(lk, lp);
      const unsigned sg = std::max(sugar[k] + (l / lk).degree(), s + (l / lp).degree());
      pairs.push_back({k, G.size(), sg, l, seq++});
    }
    G.push_back(std::move(p));
    sugar.push_back(s);
    if (G.size() > limits.max_elements) throw ResourceLimit("Groebner basis exceeds element budget");
    return true;
  };

  for (const auto& gen : ideal.generators) {
    if (gen.is_zero()) continue;
    DiffOperator r = G.empty() ? gen : reduce(gen, G, order);
    if (r.is_zero()) continue;
    if (!add(r, detail::sugar_of(r))) return unit();
  }
  if (G.empty()) return out;

  std::size_t processed = 0;
  while (!pairs.empty()) {
    auto best = std::min_element(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
      if (a.sugar != b.sugar) return a.sugar < b.sugar;
      if (a.lcm != b.lcm) return order.less(a.lcm, b.lcm);
      return a.seq < b.seq;
    });
    const Pair pr = *best;
    pairs.erase(best);
    if (++processed > limits.max_pairs) throw ResourceLimit("S-pair budget exhausted");

    const DiffOperator& gi = G[pr.i];
    const DiffOperator& gj = G[pr.j];
    const Monomial li = gi.leading_monomial(order), lj = gj.leading_monomial(order);
    if (li.coprime(lj) && detail::commute(gi, gj)) continue;
    const DiffOperator s = shift(pr.lcm / li, gi) - shift(pr.lcm / lj, gj);
    DiffOperator r = reduce(s, G, order);
    if (r.is_zero()) continue;
    if (!add(std::move(r), pr.sugar)) return unit();
  }

  // Minimalize, then inter-reduce.
  std::vector<DiffOperator> minimal;
  for (std::size_t k = 0; k < G.size(); ++k) {
    const Monomial lk = G[k].leading_monomial(order);
    bool redundant = false;
    for (std::size_t m = 0; m < G.size() && !redundant; ++m) {
      if (m == k) continue;
      const Monomial lm = G[m].leading_monomial(order);
      if (lm.divides(lk) && (lm != lk || m < k)) redundant = true;
    }
    if (!redundant) minimal.push_back(G[k]);
  }
  std::vector<DiffOperator> reduced;
  for (std::size_t k = 0; k < minimal.size(); ++k) {
    std::vector<DiffOperator> others;
    for (std::size_t m = 0; m < minimal.size(); ++m)
      if (m != k) others.push_back(minimal[m]);
    const auto [lm, lc] = minimal[k].leading(order);
    DiffOperator tail = minimal[k];
    tail.add_term(lm, -lc);
    DiffOperator r = DiffOperator::monomial(lm, lc) + (others.empty() ? tail : reduce(tail, others, order));
    reduced.push_back(r.monic(order));
  }
  std::sort(reduced.begin(), reduced.end(), [&](const DiffOperator& a, const DiffOperator& b) {
    return order.less(a.leading_monomial(order), b.leading_monomial(order));
  });
  out.elements = std::move(reduced);
  return out;
}

/// Derivation monomials outside the staircase, ascending in the term order.
/// The first element is always the monomial 1.
inline std::vector<Monomial> standard_monomials(const GroebnerBasis& G) {
  if (G.is_unit()) return {};
  const auto stairs = G.staircase();
  std::vector<unsigned> bound(G.nderiv, 0);
  for (std::size_t i = 0; i < G.nderiv; ++i) {
    for (const auto& s : stairs) {
      if (s.degree() == s[i] && s[i] > 0) {
        bound[i] = bound[i] == 0 ? s[i] : std::min<unsigned>(bound[i], s[i]);
      }
    }
    if (bound[i] == 0)
      throw NotZeroDimensional("no pure power of derivation " + std::to_string(i + 1) + " leads the basis");
  }
  std::vector<Monomial> out;
  Monomial m;
  while (true) {
    const bool standard = std::none_of(stairs.begin(), stairs.end(), [&](const Monomial& s) { return s.divides(m); });
    if (standard) out.push_back(m);
    std::size_t v = 0;
    while (v < G.nderiv) {
      if (m[v] + 1u < bound[v]) {
        m.set(v, m[v] + 1u);
        break;
      }
      m.set(v, 0);
      ++v;
    }
    if (v == G.nderiv) break;
  }
  std::sort(out.begin(), out.end(), [&](const Monomial& a, const Monomial& b) { return G.order.less(a, b); });
  return out;
}

inline bool is_zero_dimensional(const GroebnerBasis& G) {
  try {
    standard_monomials(G);
    return true;
  } catch (const NotZeroDimensional&) {
    return false;
  }
}

}  // namespace holohj
