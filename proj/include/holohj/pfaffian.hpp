#pragma once

#include <algorithm>
#include <vector>

#include "holohj/groebner.hpp"
#include "holohj/rfmatrix.hpp"

namespace holohj {

/// dq/dz_i = A_i q for i = 1..m.
///
/// `basis` lists the derivation monomials whose action on one function gives
/// the coordinates of q. It is empty for systems assembled by closure, whose
/// coordinates are not derivatives of a single function.
struct PfaffianSystem {
  std::size_t dim = 0;
  std::vector<Monomial> basis;
  std::vector<RFMatrix> A;
  Poly singular_locus{1};

  std::size_t nvars() const { return A.size(); }
  bool is_canonical() const { return !basis.empty() && basis[0].is_one(); }

  void update_singular_locus() {
    Poly l(1);
    for (const auto& a : A) l = lcm(l, a.denominator_lcm());
    singular_locus = l;
  }

  static PfaffianSystem zero(std::size_t dim, std::size_t nvars) {
    PfaffianSystem s;
    s.dim = dim;
    s.A.assign(nvars, RFMatrix(dim, dim));
    return s;
  }
};

/// First pair (i, j) violating d_j A_i + A_i A_j = d_i A_j + A_j A_i, if any.
inline std::optional<std::pair<std::size_t, std::size_t>> integrability_defect(const PfaffianSystem& S) {
  for (std::size_t i = 0; i < S.nvars(); ++i)
    for (std::size_t j = i + 1; j < S.nvars(); ++j) {
      if (S.A[i].is_zero() && S.A[j].is_zero()) continue;
      if (S.A[i].diff(j) + S.A[i] * S.A[j] != S.A[j].diff(i) + S.A[j] * S.A[i]) return std::make_pair(i, j);
    }
  return std::nullopt;
}

inline bool check_integrability(const PfaffianSystem& S) { return !integrability_defect(S).has_value(); }

inline void require_integrable(const PfaffianSystem& S) {
  if (auto bad = integrability_defect(S))
    throw IntegrabilityViolation("integrability fails for directions " + std::to_string(bad->first + 1) + " and " +
                                 std::to_string(bad->second + 1));
}

/// Pfaffian system of the quotient by a zero-dimensional left ideal, in the
/// basis of standard monomials.
inline PfaffianSystem pfaffian_from_gb(const GroebnerBasis& G) {
  PfaffianSystem S;
  S.basis = standard_monomials(G);
  S.dim = S.basis.size();
  auto index_of = [&](const Monomial& m) -> std::size_t {
    auto it = std::find(S.basis.begin(), S.basis.end(), m);
    if (it == S.basis.end()) throw IntegrabilityViolation("normal form leaves the standard monomials");
    return static_cast<std::size_t>(it - S.basis.begin());
  };
  for (std::size_t i = 0; i < G.nderiv; ++i) {
    RFMatrix Ai(S.dim, S.dim);
    for (std::size_t k = 0; k < S.dim; ++k) {
      const DiffOperator r = reduce(DiffOperator::monomial(S.basis[k] * Monomial::unit(i)), G.elements, G.order);
      for (const auto& [m, c] : r.terms()) Ai(k, index_of(m)) = c;
    }
    S.A.push_back(std::move(Ai));
  }
  S.update_singular_locus();
  require_integrable(S);
  return S;
}

}  // namespace holohj
