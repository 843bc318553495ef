#include "consensus_rhc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/linalg.hpp"

namespace crhc::scenario {

namespace {

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string child(const std::string& ptr, std::size_t idx) {
  return ptr + "/" + std::to_string(idx);
}

const Json& require(const Json& j, const std::string& ptr, const char* key) {
  if (!j.is_object()) throw Error::schema(ptr, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error::schema(child(ptr, key), "missing required field");
  return *it;
}

const Json* optional_field(const Json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

double number(const Json& j, const std::string& ptr) {
  if (!j.is_number()) throw Error::schema(ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error::schema(ptr, "must be finite");
  return v;
}

double positive(const Json& j, const std::string& ptr) {
  const double v = number(j, ptr);
  if (!(v > 0.0)) throw Error::schema(ptr, "must be positive");
  return v;
}

std::size_t count(const Json& j, const std::string& ptr, std::size_t min) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw Error::schema(ptr, "expected an integer");
  const long long v = j.get<long long>();
  if (v < static_cast<long long>(min))
    throw Error::schema(ptr, "must be at least " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

bool boolean(const Json& j, const std::string& ptr) {
  if (!j.is_boolean()) throw Error::schema(ptr, "expected a boolean");
  return j.get<bool>();
}

Vector vector_from_json(const Json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) throw Error::schema(ptr, "expected a non-empty array of numbers");
  Vector v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], child(ptr, i)));
  return v;
}

void expect_shape(const RealMatrix& m, std::size_t r, std::size_t c, const std::string& ptr) {
  if (m.rows() != r || m.cols() != c)
    throw Error::schema(ptr, "expected " + std::to_string(r) + "x" + std::to_string(c) +
                                 ", got " + m.shape_string());
}

// m-vector applied to all agents, or one row per agent.
std::vector<Vector> per_agent(const Json& j, const std::string& ptr, std::size_t M,
                              std::size_t m) {
  if (!j.is_array() || j.empty()) throw Error::schema(ptr, "expected an array");
  if (j[0].is_array()) {
    const RealMatrix b = matrix_from_json(j, ptr);
    expect_shape(b, M, m, ptr);
    return b.to_rows();
  }
  const Vector v = vector_from_json(j, ptr);
  if (v.size() != m)
    throw Error::schema(ptr, "expected " + std::to_string(m) + " entries, got " +
                                 std::to_string(v.size()));
  return std::vector<Vector>(M, v);
}

Json rows_json(const std::vector<Vector>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) out.push_back(r);
  return out;
}

RealMatrix design_matrix(const Json& j, const char* key, std::size_t r, std::size_t c) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorKind::MalformedDesign, std::string("missing field ") + key);
  RealMatrix m;
  try {
    m = matrix_from_json(*it, std::string("/design/") + key);
  } catch (const Error& e) {
    throw Error(ErrorKind::MalformedDesign, e.what());
  }
  if (m.rows() != r || m.cols() != c)
    throw Error(ErrorKind::MalformedDesign, std::string(key) + " must be " + std::to_string(r) +
                                                "x" + std::to_string(c) + ", got " +
                                                m.shape_string());
  return m;
}

double design_scalar(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number())
    throw Error(ErrorKind::MalformedDesign, std::string("missing numeric field ") + key);
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw Error(ErrorKind::MalformedDesign, std::string(key) + " not finite");
  return v;
}

Json read_json(const std::filesystem::path& path, ErrorKind kind) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    if (kind == ErrorKind::SchemaError) throw Error::schema("", std::string("invalid JSON: ") + e.what());
    throw Error(kind, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

Json matrix_to_json(const RealMatrix& m) { return rows_json(m.to_rows()); }

RealMatrix matrix_from_json(const Json& j, const std::string& ptr) {
  if (!j.is_array() || j.empty()) throw Error::schema(ptr, "expected a non-empty array of rows");
  std::vector<Vector> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string rp = child(ptr, i);
    if (!j[i].is_array()) throw Error::schema(rp, "expected a row array");
    rows.push_back(vector_from_json(j[i], rp));
    if (rows.back().size() != rows.front().size()) throw Error::schema(rp, "ragged matrix row");
  }
  return RealMatrix::from_rows(rows);
}

ScenarioConfig parse_config(const Json& j) {
  if (!j.is_object()) throw Error::schema("", "config must be a JSON object");
  ScenarioConfig cfg;
  if (const Json* nm = optional_field(j, "name")) {
    if (!nm->is_string()) throw Error::schema("/name", "expected a string");
    cfg.name = nm->get<std::string>();
  }

  const Json& sys = require(j, "", "system");
  cfg.A = matrix_from_json(require(sys, "/system", "A"), "/system/A");
  if (!cfg.A.is_square()) throw Error::schema("/system/A", "A must be square");
  const std::size_t n = cfg.A.rows();
  cfg.B = matrix_from_json(require(sys, "/system", "B"), "/system/B");
  if (cfg.B.rows() != n)
    throw Error::schema("/system/B", "B must have " + std::to_string(n) + " rows");
  const std::size_t m = cfg.B.cols();

  const Json& gr = require(j, "", "graph");
  cfg.adjacency = matrix_from_json(require(gr, "/graph", "adjacency"), "/graph/adjacency");
  if (!cfg.adjacency.is_square()) throw Error::schema("/graph/adjacency", "adjacency must be square");
  const std::size_t M = cfg.adjacency.rows();

  const Json& pr = require(j, "", "params");
  auto& p = cfg.params;
  p.alpha = positive(require(pr, "/params", "alpha"), "/params/alpha");
  p.c = positive(require(pr, "/params", "c"), "/params/c");
  p.mu = 1.0;
  if (const Json* v = optional_field(pr, "mu")) p.mu = positive(*v, "/params/mu");
  if (const Json* v = optional_field(pr, "a")) p.a = number(*v, "/params/a");
  if (const Json* v = optional_field(pr, "delta")) p.delta = positive(*v, "/params/delta");
  p.Q2 = matrix_from_json(require(pr, "/params", "Q2"), "/params/Q2");
  expect_shape(p.Q2, n, n, "/params/Q2");
  if (const Json* v = optional_field(pr, "W")) {
    p.W = matrix_from_json(*v, "/params/W");
    expect_shape(*p.W, M, M, "/params/W");
  }
  if (const Json* v = optional_field(pr, "mode")) {
    const std::string s = v->is_string() ? v->get<std::string>() : "";
    if (s == "semistable") cfg.design_mode = protocol::Mode::Semistable;
    else if (s == "unstable") cfg.design_mode = protocol::Mode::Unstable;
    else throw Error::schema("/params/mode", "expected \"semistable\" or \"unstable\"");
  }

  const Json& cons = require(j, "", "constraints");
  cfg.boxes.lo = per_agent(require(cons, "/constraints", "u_lo"), "/constraints/u_lo", M, m);
  cfg.boxes.hi = per_agent(require(cons, "/constraints", "u_hi"), "/constraints/u_hi", M, m);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t r = 0; r < m; ++r)
      if (!(cfg.boxes.lo[i][r] < 0.0 && cfg.boxes.hi[i][r] > 0.0))
        throw Error::schema("/constraints", "every box must contain 0 in its interior");

  const Json& rh = require(j, "", "rhc");
  cfg.horizon = count(require(rh, "/rhc", "horizon"), "/rhc/horizon", 1);
  cfg.steps = count(require(rh, "/rhc", "steps"), "/rhc/steps", 1);
  if (const Json* v = optional_field(rh, "mode")) {
    const std::string s = v->is_string() ? v->get<std::string>() : "";
    if (s == "centralized") cfg.rhc_mode = rhc::Mode::Centralized;
    else if (s == "distributed") cfg.rhc_mode = rhc::Mode::Distributed;
    else throw Error::schema("/rhc/mode", "expected \"centralized\" or \"distributed\"");
  }
  if (const Json* v = optional_field(rh, "controller")) {
    const std::string s = v->is_string() ? v->get<std::string>() : "";
    if (s == "rhc") cfg.controller = sim::ControllerKind::Rhc;
    else if (s == "linear") cfg.controller = sim::ControllerKind::Linear;
    else throw Error::schema("/rhc/controller", "expected \"rhc\" or \"linear\"");
  }
  const Json& x0 = require(rh, "/rhc", "X0");
  if (x0.is_array() && !x0.empty() && x0[0].is_array()) {
    const RealMatrix X = matrix_from_json(x0, "/rhc/X0");
    expect_shape(X, M, n, "/rhc/X0");
    cfg.X0 = X.values();
  } else {
    cfg.X0 = vector_from_json(x0, "/rhc/X0");
    if (cfg.X0.size() != M * n)
      throw Error::schema("/rhc/X0", "expected " + std::to_string(M * n) + " entries, got " +
                                         std::to_string(cfg.X0.size()));
  }

  if (const Json* so = optional_field(j, "solver")) {
    if (!so->is_object()) throw Error::schema("/solver", "expected an object");
    auto& s = cfg.solver;
    if (const Json* v = optional_field(*so, "gap_tol")) s.gap_tol = positive(*v, "/solver/gap_tol");
    if (const Json* v = optional_field(*so, "grad_tol")) s.grad_tol = positive(*v, "/solver/grad_tol");
    if (const Json* v = optional_field(*so, "regularization"))
      s.regularization = positive(*v, "/solver/regularization");
    if (const Json* v = optional_field(*so, "max_newton_per_stage"))
      s.max_newton_per_stage = static_cast<int>(count(*v, "/solver/max_newton_per_stage", 1));
    if (const Json* v = optional_field(*so, "max_newton_total"))
      s.max_newton_total = static_cast<int>(count(*v, "/solver/max_newton_total", 1));
    if (const Json* v = optional_field(*so, "phase1_cap"))
      s.phase1_cap = static_cast<int>(count(*v, "/solver/phase1_cap", 1));
  }
  if (const Json* ov = optional_field(j, "overrides")) {
    if (!ov->is_object()) throw Error::schema("/overrides", "expected an object");
    if (const Json* v = optional_field(*ov, "allow_boundary_c"))
      p.allow_boundary_c = boolean(*v, "/overrides/allow_boundary_c");
    if (const Json* v = optional_field(*ov, "override_conditions"))
      p.override_conditions = boolean(*v, "/overrides/override_conditions");
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_json(path, ErrorKind::SchemaError));
}

Json config_to_json(const ScenarioConfig& cfg) {
  Json j;
  if (!cfg.name.empty()) j["name"] = cfg.name;
  j["system"] = {{"A", matrix_to_json(cfg.A)}, {"B", matrix_to_json(cfg.B)}};
  j["graph"] = {{"adjacency", matrix_to_json(cfg.adjacency)}};
  const auto& p = cfg.params;
  Json pr = {{"alpha", p.alpha}, {"c", p.c}, {"mu", p.mu}, {"a", p.a}, {"Q2", matrix_to_json(p.Q2)}};
  if (p.delta) pr["delta"] = *p.delta;
  if (p.W) pr["W"] = matrix_to_json(*p.W);
  if (cfg.design_mode) pr["mode"] = protocol::to_string(*cfg.design_mode);
  j["params"] = pr;
  j["constraints"] = {{"u_lo", rows_json(cfg.boxes.lo)}, {"u_hi", rows_json(cfg.boxes.hi)}};
  const std::size_t M = cfg.adjacency.rows(), n = cfg.A.rows();
  std::vector<Vector> x0;
  for (std::size_t i = 0; i < M; ++i)
    x0.emplace_back(cfg.X0.begin() + static_cast<std::ptrdiff_t>(i * n),
                    cfg.X0.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  j["rhc"] = {{"horizon", cfg.horizon},
              {"mode", rhc::to_string(cfg.rhc_mode)},
              {"controller", cfg.controller == sim::ControllerKind::Rhc ? "rhc" : "linear"},
              {"steps", cfg.steps},
              {"X0", rows_json(x0)}};
  j["solver"] = {{"gap_tol", cfg.solver.gap_tol},
                 {"grad_tol", cfg.solver.grad_tol},
                 {"regularization", cfg.solver.regularization},
                 {"max_newton_per_stage", cfg.solver.max_newton_per_stage},
                 {"max_newton_total", cfg.solver.max_newton_total},
                 {"phase1_cap", cfg.solver.phase1_cap}};
  j["overrides"] = {{"allow_boundary_c", p.allow_boundary_c},
                    {"override_conditions", p.override_conditions}};
  return j;
}

Model build_model(const ScenarioConfig& cfg) {
  Model m;
  m.sys = protocol::make_subsystem(cfg.A, cfg.B);
  m.graph = graph::build_graph(cfg.adjacency);
  if (cfg.design_mode) m.mode = *cfg.design_mode;
  else
    m.mode = m.sys.classification == protocol::Classification::Unstable ? protocol::Mode::Unstable
                                                                         : protocol::Mode::Semistable;
  return m;
}

protocol::DesignOutcome run_design(const ScenarioConfig& cfg, const Model& model) {
  return protocol::synthesize(model.sys, model.graph, cfg.params, model.mode);
}

Json report_to_json(const protocol::ConditionReport& r) {
  Json j;
  j["mode"] = protocol::to_string(r.mode);
  Json conds = Json::array();
  for (const auto& c : r.conditions)
    conds.push_back({{"index", c.index},
                     {"name", c.name},
                     {"passed", c.passed},
                     {"detail", c.detail},
                     {"error_kind", to_string(c.kind)}});
  j["conditions"] = conds;
  j["all_passed"] = r.all_passed();
  j["sigma_min"] = r.sigma_min;
  j["sigma_max"] = r.sigma_max;
  j["sigma_from_directed_graph"] = r.sigma_from_directed_graph;
  j["coupling_bounds"] = {r.c_lower, r.c_upper};
  j["c"] = r.c;
  j["c_on_boundary"] = r.c_on_boundary;
  j["delta"] = r.delta ? Json(*r.delta) : Json();
  j["delta_c"] = r.delta_c ? Json(*r.delta_c) : Json();
  j["r1_ridge"] = r.r1_ridge;
  j["are_residual"] = r.are_residual ? Json(*r.are_residual) : Json();
  j["notes"] = r.notes;
  return j;
}

Json design_to_json(const protocol::ProtocolDesign& d, const ScenarioConfig& cfg) {
  Json j;
  j["format"] = "consensus-rhc-design";
  j["version"] = 1;
  j["system"] = {{"A", matrix_to_json(cfg.A)}, {"B", matrix_to_json(cfg.B)}};
  j["graph"] = {{"adjacency", matrix_to_json(cfg.adjacency)}};
  j["constraints"] = {{"u_lo", rows_json(cfg.boxes.lo)}, {"u_hi", rows_json(cfg.boxes.hi)}};
  Json dj;
  dj["mode"] = protocol::to_string(d.mode);
  dj["K2"] = matrix_to_json(d.K2);
  dj["S2"] = matrix_to_json(d.S2);
  dj["Q2"] = matrix_to_json(d.Q2);
  dj["R2"] = matrix_to_json(d.R2);
  dj["H"] = matrix_to_json(d.H);
  dj["S1"] = matrix_to_json(d.S1);
  dj["R1"] = matrix_to_json(d.R1);
  dj["W"] = matrix_to_json(d.W);
  dj["Qg"] = matrix_to_json(d.Qg);
  dj["Rg"] = matrix_to_json(d.Rg);
  dj["Sg"] = matrix_to_json(d.Sg);
  dj["Kg"] = matrix_to_json(d.Kg);
  dj["laplacian"] = matrix_to_json(d.laplacian);
  dj["alpha"] = d.alpha;
  dj["c"] = d.c;
  dj["delta"] = d.delta;
  dj["mu"] = d.mu;
  dj["a"] = d.a;
  dj["r1_ridge"] = d.r1_ridge;
  dj["are_residual"] = d.are_residual;
  j["design"] = dj;
  return j;
}

LoadedDesign parse_design(const Json& j) {
  if (!j.is_object() || !j.contains("design") || !j.contains("system") || !j.contains("graph") ||
      !j.contains("constraints"))
    throw Error(ErrorKind::MalformedDesign,
                "design document needs design, system, graph and constraints sections");
  LoadedDesign out;
  try {
    const RealMatrix A = matrix_from_json(require(j["system"], "/system", "A"), "/system/A");
    const RealMatrix B = matrix_from_json(require(j["system"], "/system", "B"), "/system/B");
    out.sys = protocol::make_subsystem(A, B);
    out.graph = graph::build_graph(
        matrix_from_json(require(j["graph"], "/graph", "adjacency"), "/graph/adjacency"));
    const std::size_t M = out.graph.num_agents;
    out.boxes.lo = per_agent(require(j["constraints"], "/constraints", "u_lo"),
                             "/constraints/u_lo", M, out.sys.m);
    out.boxes.hi = per_agent(require(j["constraints"], "/constraints", "u_hi"),
                             "/constraints/u_hi", M, out.sys.m);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::MalformedDesign) throw;
    throw Error(ErrorKind::MalformedDesign, e.what());
  }
  const std::size_t n = out.sys.n, m = out.sys.m, M = out.graph.num_agents;
  const Json& dj = j["design"];
  if (!dj.is_object()) throw Error(ErrorKind::MalformedDesign, "design section must be an object");
  protocol::ProtocolDesign& d = out.design;
  const std::string mode = dj.value("mode", std::string());
  if (mode == "semistable") d.mode = protocol::Mode::Semistable;
  else if (mode == "unstable") d.mode = protocol::Mode::Unstable;
  else throw Error(ErrorKind::MalformedDesign, "design mode must be semistable or unstable");
  d.K2 = design_matrix(dj, "K2", m, n);
  d.S2 = design_matrix(dj, "S2", n, n);
  d.Q2 = design_matrix(dj, "Q2", n, n);
  d.R2 = design_matrix(dj, "R2", m, m);
  d.H = design_matrix(dj, "H", n, n);
  d.S1 = design_matrix(dj, "S1", M, M);
  d.R1 = design_matrix(dj, "R1", M, M);
  d.W = design_matrix(dj, "W", M, M);
  d.laplacian = design_matrix(dj, "laplacian", M, M);
  if (!approx_equal(d.laplacian, out.graph.laplacian))
    throw Error(ErrorKind::MalformedDesign, "laplacian does not match the adjacency matrix");
  d.alpha = design_scalar(dj, "alpha");
  d.c = design_scalar(dj, "c");
  d.delta = design_scalar(dj, "delta");
  d.mu = design_scalar(dj, "mu");
  d.a = design_scalar(dj, "a");
  d.r1_ridge = design_scalar(dj, "r1_ridge");
  d.are_residual = design_scalar(dj, "are_residual");
  protocol::assemble_globals(d);
  return out;
}

LoadedDesign load_design(const std::filesystem::path& path) {
  return parse_design(read_json(path, ErrorKind::MalformedDesign));
}

Json verify_design(const LoadedDesign& ld, const VerifyOptions& opt) {
  const auto& d = ld.design;
  const std::size_t M = ld.graph.num_agents, n = ld.sys.n, m = ld.sys.m;
  Json j;
  bool ok = true;

  double are = std::numeric_limits<double>::infinity();
  try {
    are = protocol::verify_global_are(d, ld.sys, ld.graph);
  } catch (const Error&) {
  }
  j["are_residual"] = std::isfinite(are) ? Json(are) : Json();
  j["are_ok"] = are <= opt.are_tol;
  ok = ok && are <= opt.are_tol;
  try {
    const RealMatrix K = protocol::optimal_global_gain(d, ld.sys, M);
    const double gain_err = max_abs(K - d.Kg) / (1.0 + max_abs(d.Kg));
    j["gain_residual"] = gain_err;
    j["gain_ok"] = gain_err <= 1e-6;
    ok = ok && gain_err <= 1e-6;
  } catch (const Error&) {
    j["gain_residual"] = Json();
    j["gain_ok"] = false;
    ok = false;
  }

  const RealMatrix LI = linalg::kron(d.laplacian, RealMatrix::identity(n));
  const std::size_t kq = M * n - linalg::rank(d.Qg);
  const std::size_t ks = M * n - linalg::rank(d.Sg);
  const std::size_t kl = M * n - linalg::rank(LI);
  const bool kern_ok = kq == kl && ks == kl && kl == n;
  j["kernel"] = {{"dim_ker_Qg", kq}, {"dim_ker_Sg", ks}, {"dim_ker_L_kron_I", kl}, {"ok", kern_ok}};
  ok = ok && kern_ok;
  const bool psd = linalg::is_psd(d.Qg) && linalg::is_psd(d.Sg) && linalg::is_pd(d.Rg);
  j["definiteness_ok"] = psd;
  ok = ok && psd;

  try {
    const rhc::TerminalSet t = rhc::compute_beta(d, ld.boxes);
    const auto inv = rhc::check_terminal_invariance_detailed(ld.sys, d, t, ld.boxes,
                                                             opt.invariance_samples, opt.seed);
    j["terminal"] = {{"beta", t.beta},
                     {"unbounded", t.unbounded},
                     {"samples", inv.samples},
                     {"set_violations", inv.set_violations},
                     {"input_violations", inv.input_violations},
                     {"invariant", inv.passed}};
    ok = ok && inv.passed;
  } catch (const Error& e) {
    j["terminal"] = {{"invariant", false}, {"error", e.what()}};
    ok = false;
  }

  if (d.mu > 0.0 && is_symmetric(ld.graph.laplacian, 0.0) && M >= 2) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> N01;
    double worst = 0.0;
    for (std::size_t trial = 0; trial < opt.decomposition_trials; ++trial) {
      std::vector<Vector> xs, us;
      for (std::size_t l = 0; l <= opt.decomposition_horizon; ++l) {
        Vector x(M * n), u(M * m);
        for (double& v : x) v = N01(rng);
        for (double& v : u) v = N01(rng);
        xs.push_back(std::move(x));
        if (l < opt.decomposition_horizon) us.push_back(std::move(u));
      }
      const auto cd = rhc::decompose_cost(d, xs, us);
      double sum = 0.0;
      for (double v : cd.per_agent) sum += v;
      worst = std::max(worst, std::abs(sum - cd.global) / (1.0 + std::abs(cd.global)));
    }
    j["decomposition"] = {{"applicable", true},
                          {"trials", opt.decomposition_trials},
                          {"max_relative_error", worst},
                          {"ok", worst <= 1e-10}};
    ok = ok && worst <= 1e-10;
  } else {
    j["decomposition"] = {{"applicable", false}};
  }
  j["passed"] = ok;
  return j;
}

rhc::RhcController make_controller(const ScenarioConfig& cfg, const Model& model,
                                   const protocol::ProtocolDesign& d) {
  rhc::RhcController c =
      rhc::make_controller(model.sys, model.graph, d, cfg.horizon, cfg.boxes, cfg.rhc_mode);
  c.solver = cfg.solver;
  return c;
}

Json summary_to_json(const sim::SimResult& r, const sim::VerdictReport& v) {
  Json j;
  j["consensus_verdict"] = sim::to_string(v.verdict);
  j["unbounded_growth"] = v.unbounded_growth;
  j["terminal_entry_step"] = r.terminal_entry_step ? Json(*r.terminal_entry_step) : Json();
  j["max_input_magnitude"] = r.max_abs_input();
  j["feasible_all"] = r.feasible_all;
  j["steps_run"] = r.inputs.size();
  j["final_disagreement"] = r.disagreement.empty() ? 0.0 : r.disagreement.back();
  j["final_state_norm"] = r.states.empty() ? 0.0 : norm2(r.states.back());
  if (r.halted_at) {
    j["halted_at"] = *r.halted_at;
    j["halt_reason"] = r.halt_reason;
  }
  std::size_t cand_fail = 0;
  for (bool b : r.candidate_feasible) cand_fail += b ? 0 : 1;
  j["candidate_failures"] = cand_fail;
  double worst = -std::numeric_limits<double>::infinity();
  for (double v2 : r.cost_decrease_margin) worst = std::max(worst, v2);
  j["max_cost_decrease_margin"] = r.cost_decrease_margin.empty() ? Json() : Json(worst);
  return j;
}

}  // namespace crhc::scenario
