#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "holohj/hgm.hpp"

namespace holohj {

/// Gradient maps and the skew form of the canonical system:
/// grad_x f = B_x q, grad_p f = B_p q, Omega = B_p^T B_x - B_x^T B_p.
struct SymplecticData {
  std::size_t n = 0;
  RFMatrix Bx, Bp, Omega;
};

inline bool is_skew(const RFMatrix& W) {
  for (std::size_t i = 0; i < W.rows(); ++i)
    for (std::size_t j = i; j < W.cols(); ++j)
      if (!(W(i, j) == -W(j, i))) return false;
  return true;
}

inline SymplecticData extract_symplectic(const PfaffianSystem& S) {
  if (!S.is_canonical()) throw BasisNotCanonical("the basis must start with the operator 1");
  if (S.nvars() % 2 != 0) throw InputError("expected 2n directions, got " + std::to_string(S.nvars()));
  SymplecticData sym;
  sym.n = S.nvars() / 2;
  sym.Bx = RFMatrix(sym.n, S.dim);
  sym.Bp = RFMatrix(sym.n, S.dim);
  for (std::size_t i = 0; i < sym.n; ++i)
    for (std::size_t l = 0; l < S.dim; ++l) {
      sym.Bx(i, l) = S.A[i](0, l);
      sym.Bp(i, l) = S.A[sym.n + i](0, l);
    }
  sym.Omega = sym.Bp.transpose() * sym.Bx - sym.Bx.transpose() * sym.Bp;
  if (!is_skew(sym.Omega)) throw IntegrabilityViolation("Omega is not skew-symmetric");
  return sym;
}

/// D_i W = A_i^T W + W A_i + d_i W.
inline RFMatrix apply_D(std::size_t i, const RFMatrix& W, const PfaffianSystem& S) {
  return S.A[i].transpose() * W + W * S.A[i] + W.diff(i);
}

struct GammaLimits {
  unsigned max_level = 6;
  GroebnerLimits groebner;
};

struct GammaCertificate {
  std::vector<Monomial> gamma;         // gamma[0] = 0
  std::vector<RFMatrix> DOmega;        // D^gamma Omega
  std::vector<RFMatrix> T;             // D_i D^gamma_k Omega = sum_l T_i(k, l) D^gamma_l Omega
  Poly E{1};                           // lcm of the denominators of T
  std::vector<DiffOperator> relations;  // operators annihilating every bracket
  unsigned level = 0;                  // generation depth that succeeded

  std::size_t t() const { return gamma.size(); }
};

namespace detail {

inline RFRow skew_vector(const RFMatrix& W) {
  RFRow v;
  for (std::size_t i = 0; i < W.rows(); ++i)
    for (std::size_t j = i + 1; j < W.cols(); ++j) v.push_back(W(i, j));
  return v;
}

// D^alpha Omega, computed on demand through a parent chain.
class DOmegaCache {
 public:
  DOmegaCache(const PfaffianSystem& S, const RFMatrix& omega) : S_(S) { cache_.emplace(Monomial{}, omega); }

  const RFMatrix& get(const Monomial& alpha) {
    if (auto it = cache_.find(alpha); it != cache_.end()) return it->second;
    std::size_t i = 0;
    while (alpha[i] == 0) ++i;
    const RFMatrix parent = get(alpha / Monomial::unit(i));
    return cache_.emplace(alpha, apply_D(i, parent, S_)).first->second;
  }

 private:
  const PfaffianSystem& S_;
  std::map<Monomial, RFMatrix> cache_;
};

inline std::vector<Monomial> monomials_up_to(std::size_t nvars, unsigned level, const TermOrder& order) {
  std::vector<Monomial> out{Monomial{}};
  std::vector<Monomial> frontier{Monomial{}};
  for (unsigned L = 1; L <= level; ++L) {
    std::vector<Monomial> next;
    for (const auto& m : frontier)
      for (std::size_t i = 0; i < nvars; ++i) next.push_back(m * Monomial::unit(i));
    std::sort(next.begin(), next.end(), [&](const Monomial& a, const Monomial& b) { return order.less(a, b); });
    next.erase(std::unique(next.begin(), next.end()), next.end());
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace detail

/// Finite set Gamma whose matrices D^gamma Omega span all D^alpha Omega.
///
/// Level L generates every D^alpha Omega with |alpha| <= L, collects the
/// linear relations among them as operators, and accepts once those
/// operators generate a zero-dimensional ideal. The standard monomials of
/// that ideal give a spanning set; its first maximal independent subset
/// (in term order) is Gamma.
inline GammaCertificate gamma_basis(const PfaffianSystem& S, const SymplecticData& sym, const GammaLimits& lim = {},
                                    const TermOrder& order = {}, std::size_t nparams_from = kMaxVars) {
  const std::size_t m = S.nvars();
  GammaCertificate cert;
  if (sym.Omega.is_zero()) {
    cert.gamma = {Monomial{}};
    cert.DOmega = {sym.Omega};
    cert.T.assign(m, RFMatrix(1, 1));
    return cert;
  }
  detail::DOmegaCache cache(S, sym.Omega);
  for (unsigned L = 1; L <= lim.max_level; ++L) {
    Echelon ech(nparams_from);
    std::vector<Monomial> independent;
    std::vector<DiffOperator> relations;
    std::vector<Monomial> leads;
    for (const auto& alpha : detail::monomials_up_to(m, L, order)) {
      if (std::any_of(leads.begin(), leads.end(), [&](const Monomial& l) { return l.divides(alpha); })) continue;
      if (auto dep = ech.insert(detail::skew_vector(cache.get(alpha)))) {
        DiffOperator Q = DiffOperator::monomial(alpha);
        for (std::size_t k = 0; k < independent.size(); ++k) Q.add_term(independent[k], -(*dep)[k]);
        relations.push_back(std::move(Q));
        leads.push_back(alpha);
      } else {
        independent.push_back(alpha);
      }
    }
    if (relations.empty()) continue;
    const GroebnerBasis G = buchberger({relations, order, m}, lim.groebner);
    if (!is_zero_dimensional(G)) continue;

    // Minimal independent subset of {D^beta Omega : beta standard}.
    Echelon span(nparams_from);
    for (const auto& beta : standard_monomials(G)) {
      const RFMatrix& W = cache.get(beta);
      if (span.insert(detail::skew_vector(W))) continue;
      cert.gamma.push_back(beta);
      cert.DOmega.push_back(W);
    }
    const std::size_t t = cert.gamma.size();
    for (std::size_t i = 0; i < m; ++i) {
      RFMatrix Ti(t, t);
      for (std::size_t k = 0; k < t; ++k) {
        const auto c = span.express(detail::skew_vector(apply_D(i, cert.DOmega[k], S)));
        if (!c) throw IntegrabilityViolation("D_i D^gamma Omega leaves the span of Gamma");
        for (std::size_t l = 0; l < t; ++l) Ti(k, l) = (*c)[l];
      }
      cert.E = lcm(cert.E, Ti.denominator_lcm());
      cert.T.push_back(std::move(Ti));
    }
    PfaffianSystem check;
    check.dim = t;
    check.A = cert.T;
    require_integrable(check);
    cert.relations = G.elements;
    cert.level = L;
    return cert;
  }
  throw ResourceLimit("relations among D^alpha Omega stay non-zero-dimensional up to level " +
                      std::to_string(lim.max_level));
}

// ---------------------------------------------------------------------------
// Conditions at a base point.

struct ConditionSet {
  NumPoint<Extended> zbar;
  std::vector<Mat<Extended>> M;  // (D^gamma Omega)(zbar)
  std::vector<Extended> qbar1;
  Mat<Extended> Bp;              // B_p(zbar), n x d
};

template <class Real>
Mat<Real> eval_matrix(const RFMatrix& A, const std::vector<Real>& vals) {
  Mat<Real> r = Mat<Real>::Zero(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(A.cols()));
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j)
      if (!A(i, j).is_zero())
        r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = CompiledRF<Real>(A(i, j)).eval(vals);
  return r;
}

inline constexpr double kBaseTolerance = 1e-10;

/// Evaluates the Gamma conditions at zbar; qbar1 is h's boundary vector there.
inline ConditionSet condition_set(const GammaCertificate& cert, const SymplecticData& sym, const PfaffianSystem& S,
                                  const HolonomicFunction& h, const NumPoint<Extended>& zbar) {
  const auto vals = zbar.ring_values();
  auto regular = [&](const Poly& p, const char* what) {
    if (p.is_constant()) return;
    if (relative_magnitude(CompiledPoly<Extended>(p), vals) < Extended(kBaseTolerance))
      throw SingularBasePoint(std::string("base point lies on ") + what);
  };
  regular(S.singular_locus, "the singular locus");
  regular(cert.E, "the zero set of E");
  ConditionSet c;
  c.zbar = zbar;
  try {
    for (const auto& W : cert.DOmega) c.M.push_back(eval_matrix(W, vals));
    c.Bp = eval_matrix(sym.Bp, vals);
  } catch (const SingularPoint& e) {
    throw SingularBasePoint(e.what());
  }
  if (!h.has_boundary()) throw InputError("the Hamiltonian carries no boundary vector");
  if (same_point(h.base, zbar)) {
    c.qbar1 = h.qbar;
  } else {
    PathConfig cfg;
    cfg.integrator.rtol = 1e-20;
    cfg.integrator.atol = 1e-24;
    const Vec<Extended> q = hgm_integrate(h.system, h.base, to_vec<Extended>(h.qbar), {zbar}, cfg);
    c.qbar1.assign(q.data(), q.data() + q.size());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Solving the bilinear conditions.

struct Projectivity {
  bool ok = false;
  Extended det = 0;             // det(B_p [q1 ... qn])
  Extended normalized_det = 0;  // with every q scaled to unit norm
};

inline constexpr double kProjectivityTolerance = 1e-9;

inline Projectivity check_projectivity(const Mat<Extended>& Bp, const Mat<Extended>& Q) {
  Projectivity p;
  if (Bp.rows() != Q.cols() || Bp.cols() != Q.rows()) throw InputError("projectivity check: inconsistent dimensions");
  p.det = (Bp * Q).determinant();
  Mat<Extended> Qn = Q;
  for (Eigen::Index j = 0; j < Qn.cols(); ++j) {
    const Extended nrm = Qn.col(j).norm();
    if (nrm > 0) Qn.col(j) /= nrm;
  }
  p.normalized_det = (Bp * Qn).determinant();
  p.ok = abs(p.normalized_det) > Extended(kProjectivityTolerance);
  return p;
}

namespace detail {

// Null space of a dense matrix by Gauss-Jordan elimination with partial
// pivoting; entries below tol * max|entry| count as zero.
inline std::vector<Vec<Extended>> null_space(Mat<Extended> A, double tol = 1e-30) {
  const Eigen::Index rows = A.rows(), cols = A.cols();
  Extended scale = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) scale = std::max(scale, Extended(abs(A(i, j))));
  const Extended eps = Extended(tol) * std::max(scale, Extended(1));
  std::vector<Eigen::Index> pivots;
  Eigen::Index r = 0;
  for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
    Eigen::Index best = r;
    for (Eigen::Index i = r + 1; i < rows; ++i)
      if (abs(A(i, c)) > abs(A(best, c))) best = i;
    if (abs(A(best, c)) <= eps) continue;
    A.row(r).swap(A.row(best));
    A.row(r) /= A(r, c);
    for (Eigen::Index i = 0; i < rows; ++i)
      if (i != r && A(i, c) != 0) A.row(i) -= A(i, c) * A.row(r);
    pivots.push_back(c);
    ++r;
  }
  std::vector<Vec<Extended>> basis;
  for (Eigen::Index f = 0; f < cols; ++f) {
    if (std::find(pivots.begin(), pivots.end(), f) != pivots.end()) continue;
    Vec<Extended> v = Vec<Extended>::Zero(cols);
    v[f] = 1;
    for (std::size_t k = 0; k < pivots.size(); ++k) v[pivots[k]] = -A(static_cast<Eigen::Index>(k), f);
    basis.push_back(std::move(v));
  }
  return basis;
}

// Rational approximation p/q of x with q <= max_den, if within tol.
inline std::optional<Rational> as_small_rational(const Extended& x, long max_den, const Extended& tol) {
  Extended y = x;
  Integer h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  for (int it = 0; it < 64; ++it) {
    const Extended fl = floor(y);
    if (abs(fl) > Extended(max_den)) break;
    const Integer a(fl.convert_to<long>());
    const Integer h2 = a * h1 + h0, k2 = a * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    const Extended approx = Extended(h1.get_str()) / Extended(k1.get_str());
    if (abs(approx - x) <= tol) return Rational(h1, k1);
    const Extended frac = y - fl;
    if (frac == 0) break;
    y = 1 / frac;
  }
  return std::nullopt;
}

}  // namespace detail

/// Integer-scaled (primitive, first nonzero entry positive) when every entry
/// is a small rational multiple of the largest one; unit norm otherwise.
inline Vec<Extended> normalize_solution(const Vec<Extended>& v) {
  Eigen::Index big = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (abs(v[i]) > abs(v[big])) big = i;
  if (v.size() == 0 || v[big] == 0) return v;
  const Vec<Extended> u = v / v[big];
  std::vector<Rational> q;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    auto r = detail::as_small_rational(u[i], 1000, Extended("1e-35"));
    if (!r) {
      Vec<Extended> w = v / v.norm();
      for (Eigen::Index j = 0; j < w.size(); ++j)
        if (abs(w[j]) > Extended("1e-40")) {
          if (w[j] < 0) w = -w;
          break;
        }
      return w;
    }
    q.push_back(*r);
  }
  Integer l = 1, g = 0;
  for (const auto& r : q) l = lcm(l, Integer(r.get_den()));
  for (const auto& r : q) g = gcd(g, Integer(r.get_num() * (l / r.get_den())));
  Vec<Extended> w(v.size());
  int sign = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Integer k = q[i].get_num() * (l / q[i].get_den()) / g;
    if (!sign && k != 0) sign = k > 0 ? 1 : -1;
    w[static_cast<Eigen::Index>(i)] = Extended(Integer(k * sign).get_str());
  }
  return w;
}

struct SolveResult {
  std::size_t n = 0;
  std::vector<Vec<Extended>> nullspace;   // for n = 2: basis of admissible directions for q2
  std::vector<Projectivity> projectivity;  // per nullspace vector (n = 2)
  std::vector<std::vector<Vec<Extended>>> tuples;  // admissible (q2, ..., qn)
  std::string strategy;
};

/// Max over gamma of |qa^T M_gamma qb| with both vectors at unit norm.
inline Extended condition_residual(const ConditionSet& c, const Vec<Extended>& qa, const Vec<Extended>& qb) {
  const Vec<Extended> a = qa / qa.norm(), b = qb / qb.norm();
  Extended worst = 0;
  for (const auto& M : c.M) worst = std::max(worst, Extended(abs(a.dot(M * b))));
  return worst;
}

inline Vec<Extended> qbar1_vector(const ConditionSet& c) {
  Vec<Extended> q(static_cast<Eigen::Index>(c.qbar1.size()));
  for (std::size_t i = 0; i < c.qbar1.size(); ++i) q[static_cast<Eigen::Index>(i)] = c.qbar1[i];
  return q;
}

namespace detail {

// Rows q^T M_gamma for each previous q and each gamma.
inline Mat<Extended> condition_rows(const ConditionSet& c, const std::vector<Vec<Extended>>& prev) {
  const Eigen::Index d = static_cast<Eigen::Index>(c.qbar1.size());
  Mat<Extended> rows(static_cast<Eigen::Index>(prev.size() * c.M.size()), d);
  Eigen::Index r = 0;
  for (const auto& q : prev)
    for (const auto& M : c.M) rows.row(r++) = (q.transpose() * M) / q.norm();
  return rows;
}

}  // namespace detail

/// Boundary vectors q2..qn with q_k^T (D^gamma Omega)(zbar) q_l = 0 for all
/// gamma and k < l, and det(B_p [q1 ... qn]) != 0.
inline SolveResult solve_qbars(const ConditionSet& c, std::size_t n) {
  if (n == 0) throw InputError("n must be at least 1");
  SolveResult res;
  res.n = n;
  const Vec<Extended> q1 = qbar1_vector(c);
  if (n == 1) {
    res.strategy = "none";
    res.tuples.push_back({});
    return res;
  }
  if (n == 2) {
    res.strategy = "nullspace";
    for (const auto& v : detail::null_space(detail::condition_rows(c, {q1}))) {
      const Vec<Extended> w = normalize_solution(v);
      Mat<Extended> Q(q1.size(), 2);
      Q.col(0) = q1;
      Q.col(1) = w;
      res.nullspace.push_back(w);
      res.projectivity.push_back(check_projectivity(c.Bp, Q));
      if (res.projectivity.back().ok) res.tuples.push_back({w});
    }
    if (res.nullspace.empty()) throw NoSolution("the conditions only admit q2 = 0");
    if (res.tuples.empty()) throw NoSolution("no solution of the conditions satisfies the projectivity condition");
    return res;
  }
  // n > 2: each new vector solves the conditions against all previous ones;
  // the first null-space vector that keeps the leading minor of B_p Q
  // nonsingular is kept.
  res.strategy = "greedy";
  std::vector<Vec<Extended>> chosen{q1};
  for (std::size_t k = 1; k < n; ++k) {
    bool found = false;
    for (const auto& v : detail::null_space(detail::condition_rows(c, chosen))) {
      const Vec<Extended> w = normalize_solution(v);
      Mat<Extended> Q(q1.size(), static_cast<Eigen::Index>(k + 1));
      for (std::size_t j = 0; j < k; ++j) Q.col(static_cast<Eigen::Index>(j)) = chosen[j];
      Q.col(static_cast<Eigen::Index>(k)) = w;
      const Projectivity pr = check_projectivity(c.Bp.topRows(static_cast<Eigen::Index>(k + 1)), Q);
      if (!pr.ok) continue;
      chosen.push_back(w);
      found = true;
      break;
    }
    if (!found)
      throw NoSolution("greedy search found no admissible q" + std::to_string(k + 1) +
                       " (the conditions for n > 2 may still have non-greedy solutions)");
  }
  res.tuples.push_back({chosen.begin() + 1, chosen.end()});
  Mat<Extended> Q(q1.size(), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) Q.col(static_cast<Eigen::Index>(j)) = chosen[j];
  res.projectivity.push_back(check_projectivity(c.Bp, Q));
  return res;
}

}  // namespace holohj
