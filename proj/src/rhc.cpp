#include "consensus_rhc/rhc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/linalg.hpp"
#include "consensus_rhc/log.hpp"

namespace crhc::rhc {

using linalg::kron;

namespace {

constexpr const char* kPattern =
    "delayed: neighbour plans from step k-1, shifted by one and extended with Kg";

Vector tile(const Vector& v, std::size_t times) {
  Vector out;
  out.reserve(v.size() * times);
  for (std::size_t k = 0; k < times; ++k) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::span<const double> block_of(std::span<const double> v, std::size_t k, std::size_t len) {
  return v.subspan(k * len, len);
}

Vector rollout_step(const LiftedModel& m, std::span<const double> x, std::span<const double> u) {
  Vector next = m.A * x;
  const Vector bu = m.B * u;
  for (std::size_t i = 0; i < next.size(); ++i) next[i] += bu[i];
  return next;
}

std::vector<Vector> rollout(const LiftedModel& m, std::span<const double> x0,
                            std::span<const double> u, std::size_t N) {
  const std::size_t nu = m.B.cols();
  std::vector<Vector> xs;
  xs.reserve(N + 1);
  xs.emplace_back(x0.begin(), x0.end());
  for (std::size_t l = 0; l < N; ++l) xs.push_back(rollout_step(m, xs.back(), block_of(u, l, nu)));
  return xs;
}

void check_boxes(const InputBoxes& boxes, std::size_t agents, std::size_t m) {
  if (boxes.lo.size() != agents || boxes.hi.size() != agents)
    throw Error(ErrorKind::DimensionMismatch, "input boxes must list every agent");
  for (std::size_t i = 0; i < agents; ++i) {
    if (boxes.lo[i].size() != m || boxes.hi[i].size() != m)
      throw Error(ErrorKind::DimensionMismatch, "input box width must equal m");
    for (std::size_t r = 0; r < m; ++r)
      if (!(boxes.lo[i][r] < 0.0 && boxes.hi[i][r] > 0.0))
        throw Error(ErrorKind::DegenerateBox,
                    "input box of agent " + std::to_string(i) + " must contain 0 in its interior");
  }
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::Centralized ? "centralized" : "distributed"; }

bool TerminalSet::contains(std::span<const double> x, double tol) const {
  const double v = agents > 0 ? quad_form(Sg, consensus_residual(x, agents)) : quad_form(Sg, x);
  return v <= beta * beta * (1.0 + tol) + tol;
}

InputBoxes InputBoxes::uniform(std::size_t agents, const Vector& lo, const Vector& hi) {
  return InputBoxes{std::vector<Vector>(agents, lo), std::vector<Vector>(agents, hi)};
}

Vector InputBoxes::stacked_lo() const {
  Vector out;
  for (const auto& v : lo) out.insert(out.end(), v.begin(), v.end());
  return out;
}

Vector InputBoxes::stacked_hi() const {
  Vector out;
  for (const auto& v : hi) out.insert(out.end(), v.begin(), v.end());
  return out;
}

TerminalSet compute_beta(const RealMatrix& Kg, const RealMatrix& Sg, const Vector& lo,
                         const Vector& hi) {
  if (Kg.cols() != Sg.rows() || !Sg.is_square() || lo.size() != Kg.rows() ||
      hi.size() != Kg.rows())
    throw Error(ErrorKind::DimensionMismatch, "compute_beta shapes");
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!(lo[j] < 0.0 && hi[j] > 0.0))
      throw Error(ErrorKind::DegenerateBox, "box row " + std::to_string(j) + " excludes 0");
  const RealMatrix sp = linalg::pinv(Sg);
  const RealMatrix proj = Sg * sp;
  TerminalSet t{Sg, kBetaCap, false};
  bool any = false;
  for (std::size_t j = 0; j < Kg.rows(); ++j) {
    const auto k = Kg.row(j);
    const double kn = norm2(k);
    if (kn == 0.0) continue;
    const Vector pk = proj * k;
    if (norm2(sub(k, pk)) > 1e-8 * (1.0 + kn))
      throw Error(ErrorKind::RowOutsideRange,
                  "gain row " + std::to_string(j) + " is not in range(Sg)");
    const double v = quad_form(sp, k);
    if (v <= 0.0) continue;
    const double bound = std::min(hi[j], -lo[j]);
    t.beta = std::min(t.beta, bound / std::sqrt(v));
    any = true;
  }
  t.unbounded = !any;
  if (!any) log::warn("all gain rows vanish; terminal radius clamped to 1e6");
  return t;
}

TerminalSet compute_beta(const protocol::ProtocolDesign& d, const InputBoxes& boxes) {
  TerminalSet t = compute_beta(d.Kg, d.Sg, boxes.stacked_lo(), boxes.stacked_hi());
  t.agents = d.laplacian.rows();
  return t;
}

LiftedModel lift(const protocol::SubsystemModel& sys, const protocol::ProtocolDesign& d,
                 std::size_t agents) {
  const RealMatrix I = RealMatrix::identity(agents);
  return LiftedModel{kron(I, sys.A), kron(I, sys.B), d.Qg, d.Rg, d.Sg};
}

Vector consensus_residual(std::span<const double> x, std::size_t agents) {
  if (agents == 0 || x.size() % agents != 0)
    throw Error(ErrorKind::DimensionMismatch, "state length not divisible by agent count");
  const std::size_t n = x.size() / agents;
  // mean taken relative to agent 0 so that identical agents give an exact zero
  Vector mean(n, 0.0);
  for (std::size_t i = 1; i < agents; ++i)
    for (std::size_t k = 0; k < n; ++k) mean[k] += x[i * n + k] - x[k];
  for (std::size_t k = 0; k < n; ++k) mean[k] = x[k] + mean[k] / static_cast<double>(agents);
  Vector out(x.begin(), x.end());
  for (std::size_t i = 0; i < agents; ++i)
    for (std::size_t k = 0; k < n; ++k) out[i * n + k] -= mean[k];
  return out;
}

CondensedTemplate make_template(const LiftedModel& m, std::size_t N) {
  if (N == 0) throw Error(ErrorKind::InvalidInput, "horizon must be at least 1");
  const std::size_t nx = m.A.rows(), nu = m.B.cols();
  if (!m.A.is_square() || m.B.rows() != nx || m.Q.rows() != nx || m.S.rows() != nx ||
      m.R.rows() != nu)
    throw Error(ErrorKind::DimensionMismatch, "lifted model shapes");
  CondensedTemplate t;
  t.horizon = N;
  t.nx = nx;
  t.nu = nu;
  std::vector<RealMatrix> apow{RealMatrix::identity(nx)};
  for (std::size_t k = 1; k <= N; ++k) apow.push_back(m.A * apow.back());
  std::vector<RealMatrix> ab;
  for (std::size_t k = 0; k < N; ++k) ab.push_back(apow[k] * m.B);

  t.gamma = RealMatrix(N * nx, N * nu);
  t.phi = RealMatrix(N * nx, nx);
  for (std::size_t i = 0; i < N; ++i) {
    t.phi.set_block(i * nx, 0, apow[i + 1]);
    for (std::size_t j = 0; j <= i; ++j) t.gamma.set_block(i * nx, j * nu, ab[i - j]);
  }
  RealMatrix qg(N * nx, N * nu);
  t.qbar_phi = RealMatrix(N * nx, nx);
  for (std::size_t i = 0; i < N; ++i) {
    const RealMatrix& w = (i + 1 == N) ? m.S : m.Q;
    qg.set_block(i * nx, 0, w * t.gamma.block(i * nx, 0, nx, N * nu));
    t.qbar_phi.set_block(i * nx, 0, w * apow[i + 1]);
  }
  t.hessian = transpose_times(t.gamma, qg);
  for (std::size_t i = 0; i < N; ++i) t.hessian.add_block(i * nu, i * nu, m.R);
  t.hessian = symmetrize(t.hessian);
  t.cross = transpose_times(t.gamma, t.qbar_phi);
  t.terminal_map = t.gamma.block((N - 1) * nx, 0, nx, N * nu);
  t.terminal_phi = apow[N];
  return t;
}

qcqp::CondensedProblem condense(const LiftedModel& m, const CondensedTemplate& t,
                                std::span<const double> x0, const Vector& lo_per_step,
                                const Vector& hi_per_step, const RealMatrix* terminal_weight,
                                double beta) {
  if (x0.size() != t.nx || lo_per_step.size() != t.nu || hi_per_step.size() != t.nu)
    throw Error(ErrorKind::DimensionMismatch, "condense: state or box length");
  qcqp::CondensedProblem p;
  p.dim = t.horizon * t.nu;
  p.hessian = t.hessian;
  p.linear = t.cross * x0;
  const Vector qpx = t.qbar_phi * x0;
  const Vector px = t.phi * x0;
  p.constant = 0.5 * (quad_form(m.Q, x0) + dot(px, qpx));
  p.box_lo = tile(lo_per_step, t.horizon);
  p.box_hi = tile(hi_per_step, t.horizon);
  if (terminal_weight) {
    p.has_quad = true;
    p.quad_map = t.terminal_map;
    p.offset = t.terminal_phi * x0;
    p.weight = *terminal_weight;
    p.radius = beta;
  }
  return p;
}

qcqp::CondensedProblem condense(const protocol::SubsystemModel& sys,
                                const graph::GraphModel& g, const protocol::ProtocolDesign& d,
                                std::span<const double> x0, std::size_t N,
                                const InputBoxes& boxes, const TerminalSet& terminal) {
  const std::size_t M = g.num_agents;
  if (x0.size() != M * sys.n) throw Error(ErrorKind::DimensionMismatch, "x0 length");
  check_boxes(boxes, M, sys.m);
  const LiftedModel lm = lift(sys, d, M);
  const CondensedTemplate t = make_template(lm, N);
  const Vector x = consensus_residual(x0, M);
  return condense(lm, t, x, boxes.stacked_lo(), boxes.stacked_hi(), &terminal.Sg, terminal.beta);
}

double rollout_cost(const LiftedModel& m, std::span<const double> x0, std::span<const double> u,
                    std::size_t N) {
  const std::size_t nu = m.B.cols();
  if (u.size() != N * nu) throw Error(ErrorKind::DimensionMismatch, "rollout_cost input length");
  const auto xs = rollout(m, x0, u, N);
  double J = quad_form(m.S, xs[N]);
  for (std::size_t l = 0; l < N; ++l) J += quad_form(m.Q, xs[l]) + quad_form(m.R, block_of(u, l, nu));
  return J;
}

RhcController make_controller(const protocol::SubsystemModel& sys, const graph::GraphModel& g,
                              const protocol::ProtocolDesign& d, std::size_t N,
                              const InputBoxes& boxes, Mode mode, std::optional<double> beta) {
  if (N == 0) throw Error(ErrorKind::InvalidInput, "horizon must be at least 1");
  const std::size_t M = g.num_agents;
  if (d.laplacian.rows() != M || d.S2.rows() != sys.n || d.K2.rows() != sys.m)
    throw Error(ErrorKind::DimensionMismatch, "design does not match system/graph");
  check_boxes(boxes, M, sys.m);
  if (mode == Mode::Distributed) {
    if (!(d.mu > 0.0))
      throw Error(ErrorKind::ModeUnsupported, "distributed mode requires W = mu*I");
    if (!is_symmetric(g.laplacian, 0.0))
      throw Error(ErrorKind::ModeUnsupported, "distributed mode requires a symmetric Laplacian");
  }
  RhcController c;
  c.sys = sys;
  c.graph = g;
  c.design = d;
  c.horizon = N;
  c.boxes = boxes;
  c.mode = mode;
  c.terminal = compute_beta(d, boxes);
  if (beta) {
    if (!(*beta >= 0.0)) throw Error(ErrorKind::InvalidInput, "beta must be nonnegative");
    c.terminal.beta = *beta;
  }
  c.lifted = lift(sys, d, M);
  c.tmpl = make_template(c.lifted, N);
  return c;
}

StepResult step_centralized(const RhcController& ctrl, std::span<const double> Xk) {
  const std::size_t M = ctrl.graph.num_agents;
  const std::size_t nu = ctrl.tmpl.nu;
  if (Xk.size() != ctrl.tmpl.nx) throw Error(ErrorKind::DimensionMismatch, "state length");
  const Vector x = consensus_residual(Xk, M);
  const qcqp::CondensedProblem p =
      condense(ctrl.lifted, ctrl.tmpl, x, ctrl.boxes.stacked_lo(), ctrl.boxes.stacked_hi(),
               &ctrl.terminal.Sg, ctrl.terminal.beta);
  const qcqp::SolveReport sol = qcqp::solve(p, ctrl.solver);
  if (sol.status == qcqp::Status::Infeasible)
    throw Error(ErrorKind::Infeasible, "terminal constraint cannot be met within the horizon");
  if (sol.status == qcqp::Status::MaxIter) log::warn("barrier solver hit its iteration cap");

  StepResult out;
  out.U.assign(sol.z.begin(), sol.z.begin() + static_cast<std::ptrdiff_t>(nu));
  StepReport& r = out.report;
  r.mode = Mode::Centralized;
  r.J_star = 2.0 * sol.objective;
  r.solver_iters = sol.iterations;
  r.kkt_residual = sol.kkt_residual;
  r.status = sol.status;
  r.plan_inputs = sol.z;
  r.plan_states = rollout(ctrl.lifted, x, sol.z, ctrl.horizon);
  const double beta2 = ctrl.terminal.beta * ctrl.terminal.beta;
  r.terminal_slack = beta2 - quad_form(ctrl.terminal.Sg, r.plan_states.back());
  r.feasible = true;
  return out;
}

std::vector<AgentPlan> initial_plans(const RhcController& ctrl, std::span<const double> Xk) {
  const std::size_t M = ctrl.graph.num_agents, n = ctrl.sys.n, m = ctrl.sys.m, N = ctrl.horizon;
  std::vector<AgentPlan> plans(M);
  for (std::size_t i = 0; i < M; ++i) {
    plans[i].agent = i;
    plans[i].states.emplace_back(Xk.begin() + static_cast<std::ptrdiff_t>(i * n),
                                 Xk.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    for (std::size_t l = 0; l < N; ++l) {
      plans[i].inputs.emplace_back(m, 0.0);
      plans[i].states.push_back(ctrl.sys.A * plans[i].states.back());
    }
  }
  return plans;
}

std::vector<AgentPlan> shift_plans(const RhcController& ctrl, const std::vector<AgentPlan>& plans,
                                   std::span<const double> Xk) {
  const std::size_t M = ctrl.graph.num_agents, n = ctrl.sys.n, m = ctrl.sys.m, N = ctrl.horizon;
  if (plans.size() != M) throw Error(ErrorKind::DimensionMismatch, "one plan per agent required");
  Vector xN(M * n);
  for (std::size_t j = 0; j < M; ++j) {
    if (plans[j].states.size() != N + 1 || plans[j].inputs.size() != N)
      throw Error(ErrorKind::DimensionMismatch, "plan length must match the horizon");
    std::copy(plans[j].states[N].begin(), plans[j].states[N].end(), xN.begin() + j * n);
  }
  const Vector tail = ctrl.design.Kg * xN;
  std::vector<AgentPlan> out(M);
  for (std::size_t i = 0; i < M; ++i) {
    out[i].agent = i;
    for (std::size_t l = 1; l < N; ++l) out[i].inputs.push_back(plans[i].inputs[l]);
    out[i].inputs.emplace_back(tail.begin() + i * m, tail.begin() + (i + 1) * m);
    out[i].states.emplace_back(Xk.begin() + i * n, Xk.begin() + (i + 1) * n);
    for (std::size_t l = 0; l < N; ++l) {
      Vector nx = ctrl.sys.A * out[i].states.back();
      axpy(1.0, ctrl.sys.B * out[i].inputs[l], nx);
      out[i].states.push_back(std::move(nx));
    }
  }
  return out;
}

DistributedStepResult step_distributed(const RhcController& ctrl,
                                       const std::vector<AgentPlan>& plans,
                                       std::span<const double> Xk) {
  if (ctrl.mode != Mode::Distributed)
    throw Error(ErrorKind::ModeUnsupported, "controller is not in distributed mode");
  const std::size_t M = ctrl.graph.num_agents, n = ctrl.sys.n, m = ctrl.sys.m, N = ctrl.horizon;
  const std::size_t nu = M * m;
  if (Xk.size() != M * n) throw Error(ErrorKind::DimensionMismatch, "state length");
  const std::vector<AgentPlan> snap =
      plans.empty() ? initial_plans(ctrl, Xk) : shift_plans(ctrl, plans, Xk);

  // Global condensed objective in disagreement coordinates.
  const Vector x = consensus_residual(Xk, M);
  const Vector fc = ctrl.tmpl.cross * x;
  const qcqp::CondensedProblem full =
      condense(ctrl.lifted, ctrl.tmpl, x, ctrl.boxes.stacked_lo(), ctrl.boxes.stacked_hi(),
               nullptr, 0.0);
  Vector z(N * nu);
  for (std::size_t l = 0; l < N; ++l)
    for (std::size_t j = 0; j < M; ++j)
      std::copy(snap[j].inputs[l].begin(), snap[j].inputs[l].end(), z.begin() + l * nu + j * m);

  // Agent-local terminal map: x_N = Aᴺ x + Σ_l A^{N−1−l} B u_l.
  std::vector<RealMatrix> apow{RealMatrix::identity(n)};
  for (std::size_t k = 1; k <= N; ++k) apow.push_back(ctrl.sys.A * apow.back());
  RealMatrix local_map(n, N * m);
  for (std::size_t l = 0; l < N; ++l) local_map.set_block(0, l * m, apow[N - 1 - l] * ctrl.sys.B);

  // Per-agent terminal terms are taken relative to the drifted agent average.
  // Their sum is unchanged by a common shift, and this avoids cancellation
  // when the consensus component is large.
  Vector mean(n, 0.0);
  for (std::size_t j = 0; j < M; ++j) axpy(1.0 / static_cast<double>(M), Xk.subspan(j * n, n), mean);
  const Vector drift = apow[N] * mean;

  const protocol::ProtocolDesign& d = ctrl.design;
  const double beta2 = ctrl.terminal.beta * ctrl.terminal.beta;
  DistributedStepResult out;
  out.plans.resize(M);
  StepReport& rep = out.report;
  rep.mode = Mode::Distributed;
  rep.information_pattern = kPattern;
  rep.agent_costs.resize(M);
  Vector znew = z;

  for (std::size_t i = 0; i < M; ++i) {
    std::vector<std::size_t> idx;
    for (std::size_t l = 0; l < N; ++l)
      for (std::size_t r = 0; r < m; ++r) idx.push_back(l * nu + i * m + r);
    const std::size_t dim = idx.size();
    qcqp::CondensedProblem p;
    p.dim = dim;
    p.hessian = RealMatrix(dim, dim);
    p.linear.assign(dim, 0.0);
    Vector zo = z;
    for (std::size_t a : idx) zo[a] = 0.0;
    const Vector hz = full.hessian * zo;
    for (std::size_t a = 0; a < dim; ++a) {
      p.linear[a] = fc[idx[a]] + hz[idx[a]];
      for (std::size_t b = 0; b < dim; ++b) p.hessian(a, b) = full.hessian(idx[a], idx[b]);
    }
    p.constant = full.constant + dot(fc, zo) + 0.5 * dot(zo, hz);
    p.box_lo = tile(ctrl.boxes.lo[i], N);
    p.box_hi = tile(ctrl.boxes.hi[i], N);

    // μ Σ_j a_ij x_iᵀS2(x_i − x_j) ≤ β²/M, rewritten as a ball around x̂.
    double deg = 0.0;
    Vector xhat(n, 0.0);
    for (std::size_t j = 0; j < M; ++j) {
      if (j == i || d.laplacian(i, j) == 0.0) continue;
      const double aij = -d.laplacian(i, j);
      deg += aij;
      axpy(aij, sub(snap[j].states[N], drift), xhat);
    }
    if (deg > 0.0) {
      for (double& v : xhat) v /= 2.0 * deg;
      p.has_quad = true;
      p.quad_map = local_map;
      p.offset = apow[N] * sub(Xk.subspan(i * n, n), mean);
      axpy(-1.0, xhat, p.offset);
      p.weight = (d.mu * deg) * d.S2;
      p.radius = std::sqrt(beta2 / static_cast<double>(M) + d.mu * deg * quad_form(d.S2, xhat));
    }
    const qcqp::SolveReport sol = qcqp::solve(p, ctrl.solver);
    if (sol.status == qcqp::Status::Infeasible)
      throw Error::agent(static_cast<int>(i), "local terminal constraint infeasible");
    rep.solver_iters += sol.iterations;
    rep.kkt_residual = std::max(rep.kkt_residual, sol.kkt_residual);
    rep.agent_costs[i] = 2.0 * sol.objective;
    for (std::size_t a = 0; a < dim; ++a) znew[idx[a]] = sol.z[a];

    AgentPlan& plan = out.plans[i];
    plan.agent = i;
    plan.states.emplace_back(Xk.begin() + i * n, Xk.begin() + (i + 1) * n);
    for (std::size_t l = 0; l < N; ++l) {
      plan.inputs.emplace_back(sol.z.begin() + l * m, sol.z.begin() + (l + 1) * m);
      Vector nx = ctrl.sys.A * plan.states.back();
      axpy(1.0, ctrl.sys.B * plan.inputs.back(), nx);
      plan.states.push_back(std::move(nx));
    }
  }

  out.U.assign(znew.begin(), znew.begin() + static_cast<std::ptrdiff_t>(nu));
  rep.plan_inputs = znew;
  rep.plan_states = rollout(ctrl.lifted, x, znew, N);
  rep.J_star = 2.0 * full.objective(znew);
  rep.terminal_slack = beta2 - quad_form(ctrl.terminal.Sg, rep.plan_states.back());
  rep.feasible = true;
  return out;
}

CostDecomposition decompose_cost(const protocol::ProtocolDesign& d,
                                 const std::vector<Vector>& states,
                                 const std::vector<Vector>& inputs) {
  const std::size_t M = d.laplacian.rows();
  if (M < 2) throw Error(ErrorKind::AssumptionViolated, "at least two agents are required");
  if (!(d.mu > 0.0)) throw Error(ErrorKind::ModeUnsupported, "decomposition requires W = mu*I");
  if (!is_symmetric(d.laplacian, 0.0))
    throw Error(ErrorKind::ModeUnsupported, "decomposition requires a symmetric Laplacian");
  if (states.size() != inputs.size() + 1)
    throw Error(ErrorKind::DimensionMismatch, "need N+1 states for N inputs");
  const std::size_t n = d.S2.rows(), m = d.R2.rows(), N = inputs.size();
  const double k = 1.0 / (1.0 + d.alpha);
  const RealMatrix qt = d.Q2 - (d.delta * k) * d.H;
  const double r_self = d.mu * (1.0 + d.alpha) / (d.c * d.alpha) + d.r1_ridge;
  const double r_cross = d.mu / d.alpha;

  CostDecomposition out;
  out.per_agent.assign(M, 0.0);
  auto agent_block = [](const Vector& v, std::size_t i, std::size_t w) {
    return std::span<const double>(v.data() + i * w, w);
  };
  for (std::size_t l = 0; l <= N; ++l) {
    const Vector& X = states[l];
    if (X.size() != M * n) throw Error(ErrorKind::DimensionMismatch, "state length");
    const bool terminal = l == N;
    out.global += quad_form(terminal ? d.Sg : d.Qg, X);
    if (!terminal) {
      if (inputs[l].size() != M * m) throw Error(ErrorKind::DimensionMismatch, "input length");
      out.global += quad_form(d.Rg, inputs[l]);
    }
    for (std::size_t i = 0; i < M; ++i) {
      const auto xi = agent_block(X, i, n);
      Vector e(n, 0.0);
      for (std::size_t j = 0; j < M; ++j) {
        if (j == i || d.laplacian(i, j) == 0.0) continue;
        const double aij = -d.laplacian(i, j);
        axpy(aij, sub(xi, agent_block(X, j, n)), e);
      }
      if (terminal) {
        out.per_agent[i] += d.mu * dot(xi, d.S2 * e);
        continue;
      }
      out.per_agent[i] += d.mu * dot(xi, qt * e) + d.c * d.mu * k * quad_form(d.H, e);
      const auto ui = agent_block(inputs[l], i, m);
      Vector eu(m, 0.0);
      for (std::size_t j = 0; j < M; ++j) {
        if (j == i || d.laplacian(i, j) == 0.0) continue;
        axpy(-d.laplacian(i, j), sub(ui, agent_block(inputs[l], j, m)), eu);
      }
      out.per_agent[i] += r_self * quad_form(d.R2, ui) - r_cross * dot(ui, d.R2 * eu);
    }
  }
  return out;
}

TerminalSampler::TerminalSampler(const TerminalSet& t, unsigned seed)
    : t_(t), state_(0x9E3779B97F4A7C15ULL ^ (static_cast<unsigned long long>(seed) * 0xBF58476D1CE4E5B9ULL)) {
  const linalg::SymEig e = linalg::sym_eig(t.Sg);
  const double top = e.values.empty() ? 0.0 : e.values.back();
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < e.values.size(); ++k)
    if (top > 0.0 && e.values[k] > 1e-10 * top) keep.push_back(k);
  rank_ = keep.size();
  basis_ = RealMatrix(t.Sg.rows(), rank_);
  for (std::size_t c = 0; c < rank_; ++c) {
    const double s = 1.0 / std::sqrt(e.values[keep[c]]);
    for (std::size_t i = 0; i < t.Sg.rows(); ++i) basis_(i, c) = s * e.vectors(i, keep[c]);
  }
}

double TerminalSampler::uniform() {
  // splitmix64
  state_ += 0x9E3779B97F4A7C15ULL;
  unsigned long long z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return (static_cast<double>(z >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double TerminalSampler::gauss() {
  const double u1 = uniform(), u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vector TerminalSampler::sample(bool on_boundary) {
  if (rank_ == 0 || t_.beta == 0.0) return Vector(t_.Sg.rows(), 0.0);
  Vector y(rank_);
  for (double& v : y) v = gauss();
  const double yn = norm2(y);
  const double radius =
      t_.beta * (on_boundary ? 1.0 : std::pow(uniform(), 1.0 / static_cast<double>(rank_)));
  for (double& v : y) v *= radius / yn;
  return basis_ * y;
}

InvarianceResult check_terminal_invariance_detailed(const protocol::SubsystemModel& sys,
                                                    const protocol::ProtocolDesign& d,
                                                    const TerminalSet& t, const InputBoxes& boxes,
                                                    std::size_t samples, unsigned seed) {
  const std::size_t M = d.laplacian.rows();
  const LiftedModel lm = lift(sys, d, M);
  const RealMatrix closed = lm.A + lm.B * d.Kg;
  const Vector lo = boxes.stacked_lo(), hi = boxes.stacked_hi();
  InvarianceResult res;
  auto check = [&](const Vector& X) {
    ++res.samples;
    const Vector u = d.Kg * X;
    for (std::size_t j = 0; j < u.size(); ++j) {
      const double tol = 1e-9 * std::max(1.0, std::max(std::abs(lo[j]), std::abs(hi[j])));
      if (u[j] < lo[j] - tol || u[j] > hi[j] + tol) {
        ++res.input_violations;
        break;
      }
    }
    const double before = std::sqrt(std::max(0.0, quad_form(t.Sg, X)));
    const double after = std::sqrt(std::max(0.0, quad_form(t.Sg, closed * X)));
    if (after > t.beta * (1.0 + 1e-9) + 1e-12 || after > before * (1.0 + 1e-9) + 1e-12)
      ++res.set_violations;
  };
  // Maximisers of each gain row over the set.
  if (t.beta > 0.0) {
    const RealMatrix sp = linalg::pinv(t.Sg);
    for (std::size_t j = 0; j < d.Kg.rows(); ++j) {
      const Vector sk = sp * d.Kg.row(j);
      const double v = dot(d.Kg.row(j), sk);
      if (v <= 0.0) continue;
      const Vector X = scaled(sk, t.beta / std::sqrt(v));
      check(X);
      check(scaled(X, -1.0));
    }
  }
  TerminalSampler sampler(t, seed);
  for (std::size_t s = 0; s < samples; ++s) check(sampler.sample(s % 2 == 0));
  res.passed = res.set_violations == 0 && res.input_violations == 0;
  return res;
}

bool check_terminal_invariance(const protocol::SubsystemModel& sys,
                               const protocol::ProtocolDesign& d, const TerminalSet& t,
                               const InputBoxes& boxes, std::size_t samples, unsigned seed) {
  return check_terminal_invariance_detailed(sys, d, t, boxes, samples, seed).passed;
}

Candidate shifted_candidate(const RhcController& ctrl, const StepReport& previous) {
  const std::size_t N = ctrl.horizon, nu = ctrl.tmpl.nu;
  if (previous.plan_inputs.size() != N * nu || previous.plan_states.size() != N + 1)
    throw Error(ErrorKind::DimensionMismatch, "previous plan has the wrong length");
  Candidate c;
  c.inputs.assign(previous.plan_inputs.begin() + static_cast<std::ptrdiff_t>(nu),
                  previous.plan_inputs.end());
  const Vector tail = ctrl.design.Kg * previous.plan_states[N];
  c.inputs.insert(c.inputs.end(), tail.begin(), tail.end());
  c.states = rollout(ctrl.lifted, previous.plan_states[1], c.inputs, N);
  return c;
}

bool candidate_feasible(const RhcController& ctrl, const Candidate& c, double tol) {
  const Vector lo = ctrl.boxes.stacked_lo(), hi = ctrl.boxes.stacked_hi();
  const std::size_t nu = lo.size();
  for (std::size_t l = 0; l < ctrl.horizon; ++l)
    for (std::size_t j = 0; j < nu; ++j) {
      const double u = c.inputs[l * nu + j];
      const double slack = tol * std::max(1.0, std::max(std::abs(lo[j]), std::abs(hi[j])));
      if (u < lo[j] - slack || u > hi[j] + slack) return false;
    }
  const double beta2 = ctrl.terminal.beta * ctrl.terminal.beta;
  return quad_form(ctrl.terminal.Sg, c.states.back()) <= beta2 * (1.0 + tol) + tol;
}

}  // namespace crhc::rhc
