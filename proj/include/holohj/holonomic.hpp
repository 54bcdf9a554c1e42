#pragma once

#include <map>
#include <set>
#include <vector>

#include "holohj/numeric.hpp"
#include "holohj/pfaffian.hpp"

namespace holohj {

/// A function f = extract . q where q solves `system`, together with the
/// value qbar of q at the base point. `qbar` is empty when no boundary data is
/// attached (purely symbolic use).
struct HolonomicFunction {
  PfaffianSystem system;
  RFRow extract;
  NumPoint<Extended> base;
  std::vector<Extended> qbar;

  std::size_t dim() const { return system.dim; }
  bool has_boundary() const { return !qbar.empty(); }

  /// extract(base) . qbar
  Extended value_at_base() const {
    const auto vals = base.ring_values();
    Extended acc = 0;
    for (std::size_t k = 0; k < extract.size(); ++k)
      if (!extract[k].is_zero()) acc += CompiledRF<Extended>(extract[k]).eval(vals) * qbar[k];
    return acc;
  }
};

inline bool same_point(const NumPoint<Extended>& a, const NumPoint<Extended>& b) {
  return a.coords == b.coords && a.params == b.params;
}

inline RFRow unit_row(std::size_t dim, std::size_t k) {
  RFRow r(dim);
  r[k] = RationalFunction(1);
  return r;
}

// ---------------------------------------------------------------------------
// Atoms. Each is a function of one phase-space variable `var` in a system of
// `nvars` directions; the other directions have zero matrices.

/// Monomial form used for polynomial atoms v^k.
enum class MonomialForm {
  first_order,  // (v d_v - k) f = 0: d = 1, singular at v = 0
  nilpotent,    // d_v^(k+1) f = 0: d = k + 1, no singularities
};

namespace detail {

inline Extended point_value(const NumPoint<Extended>& z, std::size_t var) {
  if (z.coords.empty()) return Extended(0);
  return z.coords.at(var);
}

}  // namespace detail

inline HolonomicFunction constant_function(std::size_t nvars, const NumPoint<Extended>& base, bool with_boundary = true) {
  HolonomicFunction f;
  f.system = PfaffianSystem::zero(1, nvars);
  f.system.basis = {Monomial{}};
  f.extract = unit_row(1, 0);
  f.base = base;
  if (with_boundary) f.qbar = {Extended(1)};
  return f;
}

inline HolonomicFunction monomial_function(std::size_t var, unsigned k, std::size_t nvars, const NumPoint<Extended>& base,
                                           MonomialForm form = MonomialForm::first_order, bool with_boundary = true) {
  if (k == 0) return constant_function(nvars, base, with_boundary);
  const Extended v = detail::point_value(base, var);
  HolonomicFunction f;
  f.base = base;
  if (form == MonomialForm::first_order) {
    f.system = PfaffianSystem::zero(1, nvars);
    f.system.basis = {Monomial{}};
    f.system.A[var](0, 0) = RationalFunction(Rational(k)) / RationalFunction::variable(var);
    f.extract = unit_row(1, 0);
    if (with_boundary) f.qbar = {pow(v, static_cast<int>(k))};
  } else {
    const std::size_t d = k + 1;
    f.system = PfaffianSystem::zero(d, nvars);
    for (std::size_t j = 0; j < d; ++j) f.system.basis.push_back(Monomial::unit(var, static_cast<unsigned>(j)));
    for (std::size_t j = 0; j + 1 < d; ++j) f.system.A[var](j, j + 1) = RationalFunction(1);
    f.extract = unit_row(d, 0);
    if (with_boundary) {
      // q_j = k!/(k-j)! v^(k-j)
      Extended falling = 1;
      for (std::size_t j = 0; j < d; ++j) {
        f.qbar.push_back(falling * pow(v, static_cast<int>(k - j)));
        falling *= Extended(static_cast<int>(k - j));
      }
    }
  }
  f.system.update_singular_locus();
  return f;
}

enum class TrigKind { sin, cos };

/// sin(v) or cos(v): q = (f, d_v f), d_v q = [[0,1],[-1,0]] q.
inline HolonomicFunction trig_function(TrigKind kind, std::size_t var, std::size_t nvars, const NumPoint<Extended>& base,
                                       bool with_boundary = true) {
  HolonomicFunction f;
  f.base = base;
  f.system = PfaffianSystem::zero(2, nvars);
  f.system.basis = {Monomial{}, Monomial::unit(var)};
  f.system.A[var](0, 1) = RationalFunction(1);
  f.system.A[var](1, 0) = RationalFunction(-1);
  f.extract = unit_row(2, 0);
  if (with_boundary) {
    const Extended v = detail::point_value(base, var);
    if (kind == TrigKind::sin) f.qbar = {sin(v), cos(v)};
    else f.qbar = {cos(v), -sin(v)};
  }
  return f;
}

/// exp(v): d_v q = q.
inline HolonomicFunction exp_function(std::size_t var, std::size_t nvars, const NumPoint<Extended>& base,
                                      bool with_boundary = true) {
  HolonomicFunction f;
  f.base = base;
  f.system = PfaffianSystem::zero(1, nvars);
  f.system.basis = {Monomial{}};
  f.system.A[var](0, 0) = RationalFunction(1);
  f.extract = unit_row(1, 0);
  if (with_boundary) f.qbar = {exp(detail::point_value(base, var))};
  return f;
}

// ---------------------------------------------------------------------------
// Closure.

namespace detail {

inline void require_compatible(const HolonomicFunction& F, const HolonomicFunction& G) {
  if (F.system.nvars() != G.system.nvars()) throw BasePointMismatch("functions live in different variable contexts");
  if (!same_point(F.base, G.base)) throw BasePointMismatch("functions carry different base points");
  if (F.has_boundary() != G.has_boundary()) throw BasePointMismatch("only one operand carries boundary values");
}

}  // namespace detail

/// f + g on the direct sum of the two systems.
inline HolonomicFunction closure_sum(const HolonomicFunction& F, const HolonomicFunction& G) {
  detail::require_compatible(F, G);
  const std::size_t a = F.dim(), b = G.dim();
  HolonomicFunction r;
  r.base = F.base;
  r.system = PfaffianSystem::zero(a + b, F.system.nvars());
  for (std::size_t i = 0; i < r.system.nvars(); ++i) {
    RFMatrix& M = r.system.A[i];
    for (std::size_t k = 0; k < a; ++k)
      for (std::size_t l = 0; l < a; ++l) M(k, l) = F.system.A[i](k, l);
    for (std::size_t k = 0; k < b; ++k)
      for (std::size_t l = 0; l < b; ++l) M(a + k, a + l) = G.system.A[i](k, l);
  }
  r.extract = F.extract;
  r.extract.insert(r.extract.end(), G.extract.begin(), G.extract.end());
  r.qbar = F.qbar;
  r.qbar.insert(r.qbar.end(), G.qbar.begin(), G.qbar.end());
  r.system.update_singular_locus();
  return r;
}

/// f * g on the tensor product (F index outer).
inline HolonomicFunction closure_prod(const HolonomicFunction& F, const HolonomicFunction& G) {
  detail::require_compatible(F, G);
  const std::size_t a = F.dim(), b = G.dim();
  HolonomicFunction r;
  r.base = F.base;
  r.system = PfaffianSystem::zero(a * b, F.system.nvars());
  const RFMatrix Ia = RFMatrix::identity(a), Ib = RFMatrix::identity(b);
  for (std::size_t i = 0; i < r.system.nvars(); ++i) {
    const bool fz = F.system.A[i].is_zero(), gz = G.system.A[i].is_zero();
    if (fz && gz) continue;
    if (fz) r.system.A[i] = kron(Ia, G.system.A[i]);
    else if (gz) r.system.A[i] = kron(F.system.A[i], Ib);
    else r.system.A[i] = kron(F.system.A[i], Ib) + kron(Ia, G.system.A[i]);
  }
  r.extract.resize(a * b);
  for (std::size_t k = 0; k < a; ++k)
    for (std::size_t l = 0; l < b; ++l)
      if (!F.extract[k].is_zero() && !G.extract[l].is_zero()) r.extract[k * b + l] = F.extract[k] * G.extract[l];
  if (F.has_boundary()) {
    r.qbar.resize(a * b);
    for (std::size_t k = 0; k < a; ++k)
      for (std::size_t l = 0; l < b; ++l) r.qbar[k * b + l] = F.qbar[k] * G.qbar[l];
  }
  r.system.update_singular_locus();
  return r;
}

/// d f / d z_i: extract' = d_i extract + extract A_i.
inline HolonomicFunction closure_diff(const HolonomicFunction& F, std::size_t i) {
  HolonomicFunction r = F;
  RFRow e = row_times(F.extract, F.system.A[i]);
  for (std::size_t k = 0; k < e.size(); ++k) e[k] += F.extract[k].diff(i);
  r.extract = std::move(e);
  return r;
}

/// c * f for a rational function c (typically a constant or parameter).
inline HolonomicFunction closure_scale(const HolonomicFunction& F, const RationalFunction& c) {
  HolonomicFunction r = F;
  for (auto& x : r.extract) x = c * x;
  return r;
}

// ---------------------------------------------------------------------------
// Canonical form.

struct CanonicalForm {
  HolonomicFunction function;              // basis starts at 1, extract = e_1
  std::vector<DiffOperator> annihilators;  // d^beta - sum c_k d^alpha_k, one per staircase corner
};

/// Rows r_alpha with d^alpha f = r_alpha . q, enumerated in increasing term
/// order; a maximal independent set becomes the new basis.
///
/// `nparams_from`: first ring variable that is a free parameter; such entries
/// are avoided as elimination pivots.
inline CanonicalForm canonicalize(const HolonomicFunction& F, const TermOrder& order = {},
                                  std::size_t nparams_from = kMaxVars) {
  if (is_zero_row(F.extract)) throw RankDeficientExtract("extract row is zero");
  const std::size_t m = F.system.nvars();
  auto cmp = [&](const Monomial& a, const Monomial& b) { return order.less(a, b); };
  std::set<Monomial, decltype(cmp)> candidates(cmp);
  std::map<Monomial, std::pair<Monomial, std::size_t>> parent;
  std::map<Monomial, RFRow> rows;
  std::vector<Monomial> basis, leads;
  std::vector<DiffOperator> relations;
  Echelon ech(nparams_from);

  auto derived = [&](const RFRow& r, std::size_t i) {
    RFRow e = row_times(r, F.system.A[i]);
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += r[k].diff(i);
    return e;
  };

  candidates.insert(Monomial{});
  while (!candidates.empty()) {
    const Monomial alpha = *candidates.begin();
    candidates.erase(candidates.begin());
    if (std::any_of(leads.begin(), leads.end(), [&](const Monomial& l) { return l.divides(alpha); })) continue;
    RFRow r = alpha.is_one() ? F.extract : derived(rows.at(parent.at(alpha).first), parent.at(alpha).second);
    if (auto dep = ech.insert(r)) {
      DiffOperator rel = DiffOperator::monomial(alpha);
      for (std::size_t k = 0; k < basis.size(); ++k) rel.add_term(basis[k], -(*dep)[k]);
      relations.push_back(std::move(rel));
      leads.push_back(alpha);
      continue;
    }
    basis.push_back(alpha);
    rows.emplace(alpha, std::move(r));
    if (basis.size() > F.dim()) throw IntegrabilityViolation("derived rows exceed the system dimension");
    for (std::size_t i = 0; i < m; ++i) {
      const Monomial next = alpha * Monomial::unit(i);
      if (!parent.count(next)) parent.emplace(next, std::make_pair(alpha, i));
      candidates.insert(next);
    }
  }

  CanonicalForm out;
  HolonomicFunction& G = out.function;
  const std::size_t d = basis.size();
  G.system.dim = d;
  G.system.basis = basis;
  for (std::size_t i = 0; i < m; ++i) {
    RFMatrix Ai(d, d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto coords = ech.express(derived(rows.at(basis[k]), i));
      if (!coords) throw IntegrabilityViolation("derived row escapes the canonical span");
      for (std::size_t l = 0; l < d; ++l) Ai(k, l) = (*coords)[l];
    }
    G.system.A.push_back(std::move(Ai));
  }
  G.system.update_singular_locus();
  require_integrable(G.system);
  G.extract = unit_row(d, 0);
  G.base = F.base;
  if (F.has_boundary()) {
    const auto vals = F.base.ring_values();
    for (const auto& alpha : basis) {
      const RFRow& r = rows.at(alpha);
      Extended acc = 0;
      for (std::size_t k = 0; k < r.size(); ++k)
        if (!r[k].is_zero()) acc += CompiledRF<Extended>(r[k]).eval(vals) * F.qbar[k];
      G.qbar.push_back(acc);
    }
  }
  for (auto& rel : relations) out.annihilators.push_back(std::move(rel));
  return out;
}

}  // namespace holohj
