#pragma once

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "holohj/hamparse.hpp"
#include "holohj/hje.hpp"
#include "holohj/verify.hpp"
#include "json.hpp"

namespace holohj::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kInternal = 1, kInputError = 2, kResourceLimit = 3, kNoSolution = 4, kVerifyFailed = 5 };

inline int exit_code_for(const Error& e) {
  const std::string& c = e.code();
  if (c == "ResourceLimit" || c == "StepLimitExceeded" || c == "NotZeroDimensional") return kResourceLimit;
  if (c == "NoSolution") return kNoSolution;
  if (c == "VerificationFailure") return kVerifyFailed;
  if (c == "InputError" || c == "SyntaxError" || c == "UnsupportedAtom" || c == "ParseError" ||
      c == "SingularBasePoint" || c == "BasisNotCanonical" || c == "BasePointMismatch" || c == "ZeroDenominator" ||
      c == "SingularPoint")
    return kInputError;
  return kInternal;
}

// ---------------------------------------------------------------------------
// Configuration

struct Tolerances {
  double poisson = 1e-6;
  double conservation = 1e-6;
  double hje_residual = 1e-6;
  double symmetry = 1e-4;
  double negative_control = 1e-3;  // the control must exceed this
};

struct VerifySettings {
  int samples = 20;
  double radius = 0.5;
  std::vector<std::string> positive;  // coordinates kept positive when sampling
  double flow_time = 0.5;
  int path_points = 10;
  std::vector<double> path_step;  // x-increment per path point; default 0.01 per coordinate
  bool negative_control = true;
  double rtol = 1e-12;
  double atol = 1e-14;
};

struct PipelineConfig {
  std::string hamiltonian;
  int n = 0;  // 0: inferred
  std::map<std::string, std::string> parameters;
  std::vector<std::string> base_point;
  std::string term_order = "grevlex";
  std::string monomial_form = "first_order";
  int max_level = 6;
  GroebnerLimits groebner;
  Tolerances tol;
  VerifySettings verify;
  std::vector<std::vector<std::string>> partners;  // optional q2..qn override
  std::uint64_t seed = 1;
  std::string precision = "double";

  static PipelineConfig from_json(const json& j) {
    PipelineConfig c;
    auto req = [&](const char* k) -> const json& {
      if (!j.contains(k)) throw InputError(std::string("config is missing '") + k + "'");
      return j.at(k);
    };
    try {
      c.hamiltonian = req("hamiltonian").get<std::string>();
      c.n = j.value("n", 0);
      if (j.contains("parameters"))
        for (const auto& [k, v] : j.at("parameters").items()) c.parameters[k] = v.is_string() ? v.get<std::string>() : v.dump();
      for (const auto& v : req("base_point")) c.base_point.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      c.term_order = j.value("term_order", c.term_order);
      c.monomial_form = j.value("monomial_form", c.monomial_form);
      if (j.contains("budgets")) {
        const json& b = j.at("budgets");
        c.max_level = b.value("max_level", c.max_level);
        c.groebner.max_pairs = b.value("max_pairs", c.groebner.max_pairs);
        c.groebner.max_degree = b.value("max_degree", c.groebner.max_degree);
        c.groebner.max_elements = b.value("max_elements", c.groebner.max_elements);
      }
      if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        c.tol.poisson = t.value("poisson", c.tol.poisson);
        c.tol.conservation = t.value("conservation", c.tol.conservation);
        c.tol.hje_residual = t.value("hje_residual", c.tol.hje_residual);
        c.tol.symmetry = t.value("symmetry", c.tol.symmetry);
        c.tol.negative_control = t.value("negative_control", c.tol.negative_control);
      }
      if (j.contains("verify")) {
        const json& v = j.at("verify");
        VerifySettings& s = c.verify;
        s.samples = v.value("samples", s.samples);
        s.radius = v.value("radius", s.radius);
        s.positive = v.value("positive", s.positive);
        s.flow_time = v.value("flow_time", s.flow_time);
        s.path_points = v.value("path_points", s.path_points);
        s.path_step = v.value("path_step", s.path_step);
        s.negative_control = v.value("negative_control", s.negative_control);
        s.rtol = v.value("rtol", s.rtol);
        s.atol = v.value("atol", s.atol);
      }
      if (j.contains("partners"))
        for (const auto& q : j.at("partners")) {
          std::vector<std::string> row;
          for (const auto& v : q) row.push_back(v.is_string() ? v.get<std::string>() : v.dump());
          c.partners.push_back(row);
        }
      c.seed = j.value("seed", c.seed);
      c.precision = j.value("precision", c.precision);
    } catch (const json::exception& e) {
      throw InputError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
  }

  void validate() const {
    if (n < 0) throw InputError("n must be positive");
    for (double t : {tol.poisson, tol.conservation, tol.hje_residual, tol.symmetry, tol.negative_control, verify.rtol,
                     verify.atol})
      if (!(t > 0)) throw InputError("tolerances must be positive");
    if (precision != "double" && precision != "extended") throw InputError("precision must be 'double' or 'extended'");
    if (monomial_form != "first_order" && monomial_form != "nilpotent")
      throw InputError("monomial_form must be 'first_order' or 'nilpotent'");
    if (verify.samples < 0 || verify.path_points < 1) throw InputError("verify sample counts must be positive");
  }

  /// Fields each stage depends on; the stage's config hash covers these.
  json stage_inputs(const std::string& stage) const {
    json j;
    j["hamiltonian"] = hamiltonian;
    j["n"] = n;
    j["parameters"] = parameters;
    j["base_point"] = base_point;
    j["term_order"] = term_order;
    j["monomial_form"] = monomial_form;
    if (stage == "annihilate" || stage == "pfaffian") return j;
    j["max_level"] = max_level;
    j["groebner"] = {groebner.max_pairs, groebner.max_degree, groebner.max_elements};
    if (stage == "gamma") return j;
    j["partners"] = partners;
    if (stage == "solve") return j;
    j["tolerances"] = {tol.poisson, tol.conservation, tol.hje_residual, tol.symmetry, tol.negative_control};
    j["verify"] = {verify.samples,     verify.radius, verify.positive, verify.flow_time, verify.path_points,
                   verify.path_step,   verify.negative_control, num_key(verify.rtol), num_key(verify.atol)};
    j["seed"] = seed;
    j["precision"] = precision;
    return j;
  }

 private:
  static std::string num_key(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
  }
};

// ---------------------------------------------------------------------------
// Formatting and hashing

/// Fixed 17-significant-digit text.
template <class Real>
std::string num17(const Real& x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(16) << Extended(x);
  return os.str();
}

template <class Real>
json num_vector(const Vec<Real>& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num17(v[i]));
  return a;
}

template <class Real>
json num_matrix(const Mat<Real>& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(num_vector<Real>(m.row(i).transpose()));
  return a;
}

inline Vec<Extended> parse_num_vector(const json& a) {
  Vec<Extended> v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = Extended(a[i].get<std::string>());
  return v;
}

inline std::string sha256(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

// ---------------------------------------------------------------------------
// Exact objects <-> JSON

inline json monomial_json(const Monomial& m, std::size_t nvars) { return m.to_vector(nvars); }

inline Monomial monomial_from(const json& j) { return Monomial::from(j.get<std::vector<int>>()); }

inline json rf_matrix_json(const RFMatrix& A, const VarNames& names) {
  json rows = json::array();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    json r = json::array();
    for (std::size_t l = 0; l < A.cols(); ++l) r.push_back(A(i, l).to_string(names));
    rows.push_back(r);
  }
  return rows;
}

inline RFMatrix rf_matrix_from(const json& j, const VarNames& names) {
  const std::size_t rows = j.size(), cols = rows ? j[0].size() : 0;
  RFMatrix A(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t l = 0; l < cols; ++l) A(i, l) = parse_rf(j[i][l].get<std::string>(), names);
  return A;
}

inline json system_json(const PfaffianSystem& S, const VarNames& names, std::size_t nderiv) {
  json j;
  j["dimension"] = S.dim;
  json basis = json::array(), basis_names = json::array();
  for (const auto& b : S.basis) {
    basis.push_back(monomial_json(b, nderiv));
    basis_names.push_back(b.is_one() ? std::string("1") : derivation_to_string(b, names));
  }
  j["basis"] = basis;
  j["basis_names"] = basis_names;
  json A = json::object();
  for (std::size_t i = 0; i < S.nvars(); ++i) A[names[i]] = rf_matrix_json(S.A[i], names);
  j["A"] = A;
  j["singular_locus"] = S.singular_locus.to_string(names);
  return j;
}

inline PfaffianSystem system_from(const json& j, const VarNames& names, std::size_t nderiv) {
  PfaffianSystem S = PfaffianSystem::zero(j.at("dimension").get<std::size_t>(), nderiv);
  for (const auto& b : j.at("basis")) S.basis.push_back(monomial_from(b));
  for (std::size_t i = 0; i < nderiv; ++i) S.A[i] = rf_matrix_from(j.at("A").at(names[i]), names);
  S.update_singular_locus();
  return S;
}

// ---------------------------------------------------------------------------
// Problem setup shared by the stages

struct Problem {
  Hamiltonian h;
  std::size_t n = 0;
  NumPoint<Extended> zbar;
  std::vector<std::string> params;

  VarNames names() const { return h.names(); }
  std::size_t nderiv() const { return 2 * n; }
};

inline Problem make_problem(const PipelineConfig& cfg) {
  Problem p;
  ParseOptions po;
  po.n = static_cast<std::size_t>(cfg.n);
  for (const auto& [k, v] : cfg.parameters) po.params.push_back(k);
  p.h = parse_hamiltonian(cfg.hamiltonian, po);
  p.n = p.h.n();
  p.params = p.h.params();
  if (p.n == 0) throw InputError("n must be at least 1");
  std::map<std::string, Extended> values;
  for (const auto& name : p.params) {
    auto it = cfg.parameters.find(name);
    if (it == cfg.parameters.end()) throw InputError("no value bound for parameter '" + name + "'");
    values[name] = evaluate_constant(it->second);
    p.zbar.params.push_back(values[name]);
  }
  if (cfg.base_point.size() != 2 * p.n)
    throw InputError("base point has " + std::to_string(cfg.base_point.size()) + " coordinates, expected " +
                     std::to_string(2 * p.n));
  for (const auto& s : cfg.base_point) p.zbar.coords.push_back(evaluate_constant(s, values));
  return p;
}

inline TermOrder term_order(const PipelineConfig& cfg) {
  try {
    return TermOrder::parse(cfg.term_order);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

/// [d^beta h](zbar) for the canonical basis, from the expression oracle.
template <class Real>
Vec<Real> boundary_vector(const Problem& p, const PfaffianSystem& S, const NumPoint<Real>& z) {
  Vec<Real> q(static_cast<Eigen::Index>(S.dim));
  for (std::size_t k = 0; k < S.dim; ++k) q[static_cast<Eigen::Index>(k)] = evaluate(oracle_diff(p.h, S.basis[k]), z);
  return q;
}

// ---------------------------------------------------------------------------
// Artifacts

struct Artifact {
  std::string stage;
  json header;
  json body;
  std::string hash;

  json to_json() const { return {{"header", header}, {"body", body}, {"hash", hash}}; }
};

inline std::string artifact_hash(const json& header, const json& body) {
  return sha256(json{{"header", header}, {"body", body}}.dump());
}

inline fs::path artifact_path(const fs::path& out, const std::string& stage) { return out / (stage + ".json"); }

inline std::optional<Artifact> read_artifact(const fs::path& out, const std::string& stage) {
  const fs::path path = artifact_path(out, stage);
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("cannot parse " + path.string() + ": " + e.what());
  }
  Artifact a{stage, j.value("header", json()), j.value("body", json()), j.value("hash", std::string())};
  if (a.hash != artifact_hash(a.header, a.body))
    throw InputError("artifact " + path.string() + " does not match its recorded hash");
  return a;
}

inline void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw InputError("cannot write " + path.string());
}

struct StageContext {
  PipelineConfig cfg;
  fs::path out = "out";
  bool force = false;
  std::ostream* log = &std::cout;
};

inline std::string config_hash(const PipelineConfig& cfg, const std::string& stage) {
  return sha256(cfg.stage_inputs(stage).dump());
}

inline const std::map<std::string, std::vector<std::string>>& upstream_stages() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"annihilate", {}},
      {"pfaffian", {"annihilate"}},
      {"gamma", {"annihilate", "pfaffian"}},
      {"solve", {"annihilate", "pfaffian", "gamma"}},
      {"verify", {"annihilate", "pfaffian", "solve"}},
  };
  return m;
}

/// Loads and validates the upstream artifacts of `stage`.
inline std::map<std::string, Artifact> load_upstream(const StageContext& ctx, const std::string& stage) {
  std::map<std::string, Artifact> ups;
  for (const auto& u : upstream_stages().at(stage)) {
    auto a = read_artifact(ctx.out, u);
    if (!a) throw InputError("missing upstream artifact " + artifact_path(ctx.out, u).string() + "; run '" + u + "' first");
    if (a->header.value("config_hash", std::string()) != config_hash(ctx.cfg, u))
      throw InputError("upstream artifact " + u + ".json was produced from a different configuration; rerun '" + u + "'");
    ups.emplace(u, std::move(*a));
  }
  return ups;
}

inline json make_header(const StageContext& ctx, const std::string& stage, const std::map<std::string, Artifact>& ups) {
  json h;
  h["stage"] = stage;
  h["format"] = 1;
  h["config_hash"] = config_hash(ctx.cfg, stage);
  json u = json::object();
  for (const auto& [name, a] : ups) u[name] = a.hash;
  h["upstream"] = u;
  return h;
}

using StageBody = std::function<json(const StageContext&, const std::map<std::string, Artifact>&)>;

/// Runs one stage unless an artifact with the same inputs already exists.
inline Artifact run_stage(const StageContext& ctx, const std::string& stage, const StageBody& body) {
  const auto ups = load_upstream(ctx, stage);
  const json header = make_header(ctx, stage, ups);
  if (!ctx.force) {
    try {
      if (auto old = read_artifact(ctx.out, stage); old && old->header == header) {
        *ctx.log << stage << ": up to date (" << artifact_path(ctx.out, stage).string() << ")\n";
        return *old;
      }
    } catch (const InputError&) {
      // A corrupt artifact is recomputed.
    }
  }
  Artifact a{stage, header, body(ctx, ups), {}};
  a.hash = artifact_hash(a.header, a.body);
  write_text(artifact_path(ctx.out, stage), a.to_json().dump(2) + "\n");
  return a;
}

// ---------------------------------------------------------------------------
// Stages

inline json annihilate_body(const StageContext& ctx, const std::map<std::string, Artifact>&) {
  const Problem p = make_problem(ctx.cfg);
  BuildOptions opt;
  opt.monomial_form = ctx.cfg.monomial_form == "nilpotent" ? MonomialForm::nilpotent : MonomialForm::first_order;
  opt.order = term_order(ctx.cfg);
  const CanonicalForm c = build_h(p.h, p.zbar, opt);
  const VarNames names = p.names();
  json j;
  j["hamiltonian"] = p.h.to_string();
  j["n"] = p.n;
  j["variables"] = names.names();
  j["parameters"] = p.params;
  j["parameter_values"] = json::array();
  for (const auto& v : p.zbar.params) j["parameter_values"].push_back(num17(v));
  j["base_point"] = json::array();
  for (const auto& v : p.zbar.coords) j["base_point"].push_back(num17(v));
  j["system"] = system_json(c.function.system, names, p.nderiv());
  j["annihilators"] = json::array();
  for (const auto& P : c.annihilators) j["annihilators"].push_back(P.to_string(names));
  json q = json::array();
  for (const auto& v : c.function.qbar) q.push_back(num17(v));
  j["boundary_vector"] = q;
  *ctx.log << "annihilate: d = " << c.function.dim() << ", basis " << j["system"]["basis_names"].dump() << "\n";
  return j;
}

inline PfaffianSystem system_of(const Problem& p, const std::map<std::string, Artifact>& ups) {
  return system_from(ups.at("annihilate").body.at("system"), p.names(), p.nderiv());
}

inline SymplecticData symplectic_of(const Problem& p, const std::map<std::string, Artifact>& ups) {
  const json& b = ups.at("pfaffian").body;
  SymplecticData s;
  s.n = p.n;
  s.Bx = rf_matrix_from(b.at("Bx"), p.names());
  s.Bp = rf_matrix_from(b.at("Bp"), p.names());
  s.Omega = rf_matrix_from(b.at("Omega"), p.names());
  return s;
}

inline json pfaffian_body(const StageContext& ctx, const std::map<std::string, Artifact>& ups) {
  const Problem p = make_problem(ctx.cfg);
  const PfaffianSystem S = system_of(p, ups);
  if (auto bad = integrability_defect(S))
    throw IntegrabilityViolation("Pfaffian system fails integrability for directions " + std::to_string(bad->first) +
                                 ", " + std::to_string(bad->second));
  const SymplecticData sym = extract_symplectic(S);
  const VarNames names = p.names();
  json j;
  j["integrable"] = true;
  j["singular_locus"] = S.singular_locus.to_string(names);
  j["Bx"] = rf_matrix_json(sym.Bx, names);
  j["Bp"] = rf_matrix_json(sym.Bp, names);
  j["Omega"] = rf_matrix_json(sym.Omega, names);
  j["omega_is_zero"] = sym.Omega.is_zero();
  *ctx.log << "pfaffian: integrable, singular locus " << j["singular_locus"].get<std::string>() << "\n";
  return j;
}

inline GammaCertificate certificate_of(const Problem& p, const std::map<std::string, Artifact>& ups) {
  const json& b = ups.at("gamma").body;
  GammaCertificate c;
  for (const auto& g : b.at("gamma")) c.gamma.push_back(monomial_from(g));
  for (const auto& W : b.at("DOmega")) c.DOmega.push_back(rf_matrix_from(W, p.names()));
  for (const auto& T : b.at("T")) c.T.push_back(rf_matrix_from(T, p.names()));
  c.E = parse_poly(b.at("E").get<std::string>(), p.names());
  c.level = b.at("level").get<unsigned>();
  return c;
}

inline json gamma_body(const StageContext& ctx, const std::map<std::string, Artifact>& ups) {
  const Problem p = make_problem(ctx.cfg);
  const PfaffianSystem S = system_of(p, ups);
  const SymplecticData sym = symplectic_of(p, ups);
  GammaLimits lim;
  if (ctx.cfg.max_level < 0) throw InputError("max_level must be non-negative");
  lim.max_level = static_cast<unsigned>(ctx.cfg.max_level);
  lim.groebner = ctx.cfg.groebner;
  const GammaCertificate c = gamma_basis(S, sym, lim, term_order(ctx.cfg), p.nderiv());
  const VarNames names = p.names();
  json j;
  j["t"] = c.t();
  j["level"] = c.level;
  j["gamma"] = json::array();
  j["gamma_names"] = json::array();
  for (const auto& g : c.gamma) {
    j["gamma"].push_back(monomial_json(g, p.nderiv()));
    j["gamma_names"].push_back(g.is_one() ? std::string("0") : derivation_to_string(g, names));
  }
  j["DOmega"] = json::array();
  for (const auto& W : c.DOmega) j["DOmega"].push_back(rf_matrix_json(W, names));
  j["T"] = json::array();
  for (const auto& T : c.T) j["T"].push_back(rf_matrix_json(T, names));
  j["E"] = c.E.to_string(names);
  j["relations"] = json::array();
  for (const auto& r : c.relations) j["relations"].push_back(r.to_string(names));
  *ctx.log << "gamma: t = " << c.t() << ", Gamma = " << j["gamma_names"].dump() << "\n";
  return j;
}

inline ConditionSet conditions_of(const Problem& p, const std::map<std::string, Artifact>& ups,
                                  const GammaCertificate& cert) {
  const PfaffianSystem S = system_of(p, ups);
  HolonomicFunction h;
  h.system = S;
  h.extract = unit_row(S.dim, 0);
  h.base = p.zbar;
  const Vec<Extended> q = boundary_vector(p, S, p.zbar);
  h.qbar.assign(q.data(), q.data() + q.size());
  return condition_set(cert, symplectic_of(p, ups), S, h, p.zbar);
}

inline json solve_body(const StageContext& ctx, const std::map<std::string, Artifact>& ups) {
  const Problem p = make_problem(ctx.cfg);
  const GammaCertificate cert = certificate_of(p, ups);
  const ConditionSet c = conditions_of(p, ups, cert);
  const Vec<Extended> q1 = qbar1_vector(c);
  const auto d = q1.size();
  json j;
  j["zbar"] = json::array();
  for (const auto& v : c.zbar.coords) j["zbar"].push_back(num17(v));
  j["qbar1"] = num_vector(q1);
  j["conditions"] = json::array();
  for (const auto& M : c.M) j["conditions"].push_back(num_matrix(M));
  j["Bp"] = num_matrix(c.Bp);

  std::vector<Vec<Extended>> selected;
  if (!ctx.cfg.partners.empty()) {
    if (ctx.cfg.partners.size() + 1 != p.n) throw InputError("'partners' must list n - 1 vectors");
    for (const auto& row : ctx.cfg.partners) {
      if (static_cast<Eigen::Index>(row.size()) != d) throw InputError("partner vector has the wrong length");
      Vec<Extended> v(d);
      for (Eigen::Index k = 0; k < d; ++k) v[k] = evaluate_constant(row[static_cast<std::size_t>(k)]);
      selected.push_back(v);
    }
    j["strategy"] = "configured";
  } else {
    const SolveResult r = solve_qbars(c, p.n);
    j["strategy"] = r.strategy;
    j["nullspace"] = json::array();
    for (const auto& v : r.nullspace) j["nullspace"].push_back(num_vector(v));
    j["projectivity"] = json::array();
    for (const auto& pr : r.projectivity)
      j["projectivity"].push_back({{"ok", pr.ok}, {"det", num17(pr.det)}, {"normalized_det", num17(pr.normalized_det)}});
    j["tuples"] = json::array();
    for (const auto& t : r.tuples) {
      json tj = json::array();
      for (const auto& v : t) tj.push_back(num_vector(v));
      j["tuples"].push_back(tj);
    }
    selected = r.tuples.at(0);
  }
  Mat<Extended> Q(d, static_cast<Eigen::Index>(p.n));
  Q.col(0) = q1;
  json sel = json::array(), residuals = json::array();
  for (std::size_t k = 0; k < selected.size(); ++k) {
    Q.col(static_cast<Eigen::Index>(k + 1)) = selected[k];
    sel.push_back(num_vector(selected[k]));
    residuals.push_back(num17(condition_residual(c, q1, selected[k])));
  }
  j["selected"] = sel;
  j["selected_residuals"] = residuals;
  const Projectivity pr = check_projectivity(c.Bp, Q);
  j["selected_projectivity"] = {{"ok", pr.ok}, {"det", num17(pr.det)}, {"normalized_det", num17(pr.normalized_det)}};
  *ctx.log << "solve: " << j["strategy"].get<std::string>() << ", selected " << sel.dump() << ", det "
           << num17(pr.det) << "\n";
  return j;
}

// ---------------------------------------------------------------------------
// Verification

struct Metric {
  std::string name;
  double value;
  double tolerance;
  bool below;  // pass if value < tolerance, else pass if value > tolerance
  bool pass() const { return below ? value < tolerance : value > tolerance; }
};

template <class Real>
NumPoint<Real> cast_point(const NumPoint<Extended>& z) {
  return z.template cast<Real>();
}

template <class Real>
struct VerifyRun {
  json report;
  std::vector<Metric> metrics;
};

// Seeded sample points within `radius` of zbar whose straight path from
// zbar avoids the singular locus.
template <class Real>
std::vector<NumPoint<Real>> sample_points(const Problem& p, const NumericSystem<Real>& sys, const PipelineConfig& cfg,
                                          std::mt19937_64& rng, std::size_t& rejected) {
  const NumPoint<Real> zbar = cast_point<Real>(p.zbar);
  const VarNames names = p.names();
  std::vector<std::size_t> positive;
  for (const auto& s : cfg.verify.positive) {
    auto idx = names.find(s);
    if (!idx || *idx >= 2 * p.n) throw InputError("unknown coordinate '" + s + "' in verify.positive");
    positive.push_back(*idx);
  }
  std::uniform_real_distribution<double> u(-cfg.verify.radius, cfg.verify.radius);
  std::vector<NumPoint<Real>> out;
  rejected = 0;
  while (out.size() < static_cast<std::size_t>(cfg.verify.samples)) {
    if (rejected > 100000) throw InputError("could not sample regular points around the base point");
    NumPoint<Real> z = zbar;
    double norm = 0;
    for (auto& c : z.coords) {
      const double d = u(rng);
      c += Real(d);
      norm += d * d;
    }
    bool ok = std::sqrt(norm) <= cfg.verify.radius;
    for (auto i : positive) ok = ok && z.coords[i] > 0;
    if (ok) {
      try {
        PathConfig pc;
        detail::check_segment(sys, zbar, z, pc);
      } catch (const SingularPathCrossing&) {
        ok = false;
      }
    }
    if (ok) out.push_back(z);
    else ++rejected;
  }
  return out;
}

template <class Real>
Real max_bracket(const std::vector<Vec<Real>>& qs, const NumericSymplectic<Real>& ns, const std::vector<Real>& vals) {
  std::vector<Gradients<Real>> g;
  for (const auto& q : qs) g.push_back(ns.gradients(q, vals));
  Real m = 0;
  for (std::size_t a = 0; a < g.size(); ++a)
    for (std::size_t b = a + 1; b < g.size(); ++b) m = std::max(m, Real(abs(poisson_numeric(g[a], g[b]))));
  return m;
}

template <class Real>
VerifyRun<Real> verify_numerics(const StageContext& ctx, const std::map<std::string, Artifact>& ups) {
  const PipelineConfig& cfg = ctx.cfg;
  const Problem p = make_problem(cfg);
  const PfaffianSystem S = system_of(p, ups);
  const SymplecticData sym = symplectic_of(p, ups);
  const json& sol = ups.at("solve").body;
  const NumericSystem<Real> sys(S);
  const NumericSymplectic<Real> ns(sym);
  const NumPoint<Real> zbar = cast_point<Real>(p.zbar);
  PathConfig pc;
  pc.integrator.rtol = cfg.verify.rtol;
  pc.integrator.atol = cfg.verify.atol;

  std::vector<Vec<Real>> q0{boundary_vector(p, S, zbar)};
  for (const auto& v : sol.at("selected")) q0.push_back(parse_num_vector(v).template cast<Real>());

  VerifyRun<Real> run;
  json& rep = run.report;
  rep["seed"] = cfg.seed;
  rep["precision"] = cfg.precision;
  std::mt19937_64 rng(cfg.seed);

  // Poisson brackets and HGM values at sampled points.
  std::size_t rejected = 0;
  const auto points = sample_points(p, sys, cfg, rng, rejected);
  rep["samples"] = points.size();
  rep["rejected_samples"] = rejected;
  struct Sample {
    Real bracket = 0, control = 0, value_error = 0;
  };
  std::optional<Vec<Real>> control;
  if (cfg.verify.negative_control && p.n >= 2) {
    // Push q2 off the first condition: add the normalized row q1^T M_0.
    const Mat<Real> M0 = eval_matrix(sym.Omega, zbar.ring_values());
    Vec<Real> w = M0.transpose() * q0[0];
    if (w.norm() > Real(0)) {
      w /= w.norm();
      control = Vec<Real>(q0[1] + w * q0[1].norm());
    }
  }
  std::vector<std::future<Sample>> jobs;
  for (const auto& z : points)
    jobs.push_back(std::async(std::launch::async, [&, z] {
      Sample s;
      std::vector<Vec<Real>> qs;
      for (const auto& q : q0) qs.push_back(hgm_integrate(sys, zbar, q, {z}, pc));
      const auto vals = z.ring_values();
      s.bracket = max_bracket(qs, ns, vals);
      const Real hv = evaluate(p.h, z);
      s.value_error = abs(qs[0][0] - hv) / std::max(Real(1), Real(abs(hv)));
      if (control) {
        std::vector<Vec<Real>> cq{qs[0], hgm_integrate(sys, zbar, *control, {z}, pc)};
        s.control = max_bracket(cq, ns, vals);
      }
      return s;
    }));
  std::ostringstream csv;
  csv << "sample";
  for (std::size_t i = 0; i < 2 * p.n; ++i) csv << "," << p.names()[i];
  csv << ",bracket,control_bracket,value_error\n";
  Real max_b = 0, max_c = 0, max_v = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const Sample s = jobs[k].get();
    max_b = std::max(max_b, s.bracket);
    max_c = std::max(max_c, s.control);
    max_v = std::max(max_v, s.value_error);
    csv << k;
    for (const auto& c : points[k].coords) csv << "," << num17(c);
    csv << "," << num17(s.bracket) << "," << num17(s.control) << "," << num17(s.value_error) << "\n";
  }
  write_text(ctx.out / "verify_poisson.csv", csv.str());
  if (p.n >= 2) run.metrics.push_back({"poisson_max", static_cast<double>(max_b), cfg.tol.poisson, true});
  run.metrics.push_back({"hgm_value_rel_error_max", static_cast<double>(max_v), 1e-7, true});
  if (control) run.metrics.push_back({"negative_control_poisson_max", static_cast<double>(max_c), cfg.tol.negative_control, false});

  // Flow conservation from zbar.
  IntegratorConfig ic = pc.integrator;
  const PfaffianProvider<Real> prov(S, sym, q0);
  const FlowResult<Real> flow = hamiltonian_flow(prov, zbar, Real(cfg.verify.flow_time), ic);
  std::ostringstream fcsv;
  fcsv << "t";
  for (std::size_t i = 0; i < 2 * p.n; ++i) fcsv << "," << p.names()[i];
  for (std::size_t k = 0; k < q0.size(); ++k) fcsv << ",f" << k + 1;
  fcsv << ",h_residual\n";
  for (std::size_t s = 0; s < flow.times.size(); ++s) {
    fcsv << num17(flow.times[s]);
    for (const auto& c : flow.states[s]) fcsv << "," << num17(c);
    for (const auto& f : flow.integrals[s]) fcsv << "," << num17(f);
    NumPoint<Real> z = zbar;
    z.coords = flow.states[s];
    fcsv << "," << num17(evaluate(p.h, z)) << "\n";
  }
  write_text(ctx.out / "verify_flow.csv", fcsv.str());
  rep["flow_steps"] = flow.times.size();
  for (std::size_t k = 0; k < q0.size(); ++k)
    run.metrics.push_back({"flow_drift_f" + std::to_string(k + 1), static_cast<double>(flow.max_drift(k)),
                           cfg.tol.conservation, true});

  // Local reconstruction of v.
  const Real h0 = evaluate(p.h, zbar);
  bool on_manifold = abs(h0) < Real(1e-8);
  for (const auto& q : q0) on_manifold = on_manifold && abs(q[0]) < Real(1e-8);
  if (on_manifold) {
    std::vector<double> step = cfg.verify.path_step;
    if (step.empty()) step.assign(p.n, 0.01);
    if (step.size() != p.n) throw InputError("verify.path_step must have n entries");
    std::vector<std::vector<Real>> path;
    for (int j = 0; j < cfg.verify.path_points; ++j) {
      std::vector<Real> x;
      for (std::size_t i = 0; i < p.n; ++i) x.push_back(zbar.coords[i] + Real(j) * Real(step[i]));
      path.push_back(x);
    }
    Vec<Real> p0(static_cast<Eigen::Index>(p.n));
    for (std::size_t i = 0; i < p.n; ++i) p0[static_cast<Eigen::Index>(i)] = zbar.coords[p.n + i];
    PfaffianTracker<Real> ev(S, sym, zbar, q0, pc);
    const Reconstruction<Real> r = reconstruct_v(ev, path, p0, zbar.params);
    std::ostringstream vcsv;
    vcsv << "index";
    for (std::size_t i = 0; i < 2 * p.n; ++i) vcsv << "," << p.names()[i];
    vcsv << ",v,h_residual,symmetry_defect\n";
    Real max_h = 0;
    for (std::size_t j = 0; j < r.x.size(); ++j) {
      NumPoint<Real> z = zbar;
      z.coords = r.x[j];
      z.coords.insert(z.coords.end(), r.p[j].begin(), r.p[j].end());
      const Real hv = evaluate(p.h, z);
      max_h = std::max(max_h, Real(abs(hv)));
      vcsv << j;
      for (const auto& c : z.coords) vcsv << "," << num17(c);
      vcsv << "," << num17(r.v[j]) << "," << num17(hv) << ","
           << (j < r.symmetry_defect.size() ? num17(r.symmetry_defect[j]) : std::string("")) << "\n";
    }
    write_text(ctx.out / "verify_v.csv", vcsv.str());
    run.metrics.push_back({"hje_residual_max", static_cast<double>(max_h), cfg.tol.hje_residual, true});
    if (p.n > 1)
      run.metrics.push_back({"symmetry_defect_max", static_cast<double>(r.max_symmetry_defect()), cfg.tol.symmetry, true});
  } else {
    rep["reconstruction"] = "skipped: base point is not on {f_k = 0}";
  }
  return run;
}

inline json verify_body(const StageContext& ctx, const std::map<std::string, Artifact>& ups) {
  json rep;
  std::vector<Metric> metrics;
  if (ctx.cfg.precision == "extended") {
    auto r = verify_numerics<Extended>(ctx, ups);
    rep = r.report;
    metrics = r.metrics;
  } else {
    auto r = verify_numerics<double>(ctx, ups);
    rep = r.report;
    metrics = r.metrics;
  }
  bool all = true;
  json m = json::array();
  for (const auto& x : metrics) {
    m.push_back({{"name", x.name},
                 {"value", num17(x.value)},
                 {"tolerance", num17(x.tolerance)},
                 {"criterion", x.below ? "below" : "above"},
                 {"pass", x.pass()}});
    *ctx.log << "verify: " << x.name << " = " << num17(x.value) << (x.pass() ? " ok" : " FAILED") << "\n";
    all = all && x.pass();
  }
  rep["metrics"] = m;
  rep["pass"] = all;
  rep["csv"] = {"verify_poisson.csv", "verify_flow.csv", "verify_v.csv"};
  return rep;
}

inline const std::map<std::string, StageBody>& stage_bodies() {
  static const std::map<std::string, StageBody> m = {
      {"annihilate", annihilate_body}, {"pfaffian", pfaffian_body}, {"gamma", gamma_body},
      {"solve", solve_body},           {"verify", verify_body},
  };
  return m;
}

inline const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> s = {"annihilate", "pfaffian", "gamma", "solve", "verify"};
  return s;
}

/// Runs a stage; a failed verification raises VerificationFailure after
/// the report is written.
inline Artifact run_named_stage(const StageContext& ctx, const std::string& stage) {
  Artifact a = run_stage(ctx, stage, stage_bodies().at(stage));
  if (stage == "verify" && !a.body.value("pass", false)) {
    std::string failing;
    for (const auto& m : a.body.at("metrics"))
      if (!m.at("pass").get<bool>()) failing += (failing.empty() ? "" : ", ") + m.at("name").get<std::string>();
    throw VerificationFailure("failing metrics: " + failing);
  }
  return a;
}

inline PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError("config is not valid JSON: " + std::string(e.what()));
  }
  return PipelineConfig::from_json(j);
}

inline json error_json(const std::string& stage, const std::string& code, const std::string& message, int exit_code) {
  return {{"stage", stage}, {"error", code}, {"message", message}, {"exit_code", exit_code}};
}

}  // namespace holohj::cli
