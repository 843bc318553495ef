#include "consensus_rhc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/log.hpp"

namespace crhc::sim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string json_num(double v) { return std::isfinite(v) ? fmt(v) : "null"; }

bool any_saturated(const Vector& U, const rhc::InputBoxes& boxes) {
  const Vector lo = boxes.stacked_lo(), hi = boxes.stacked_hi();
  for (std::size_t j = 0; j < U.size(); ++j)
    if (U[j] <= lo[j] + 1e-9 || U[j] >= hi[j] - 1e-9) return true;
  return false;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double med = v[mid];
  if (v.size() % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + lower);
  }
  return med;
}

}  // namespace

SimConfig linear_config(const rhc::RhcController& ctrl, const Vector& X0, std::size_t steps) {
  SimConfig cfg;
  cfg.steps = steps;
  cfg.X0 = X0;
  cfg.controller = ControllerKind::Linear;
  cfg.rhc = ctrl;
  cfg.check_candidates = false;
  return cfg;
}

double SimResult::max_abs_input() const {
  double m = 0.0;
  for (const auto& u : inputs) m = std::max(m, norm_inf(u));
  return m;
}

Vector propagate(const protocol::SubsystemModel& sys, std::span<const double> X,
                 std::span<const double> U) {
  const std::size_t n = sys.n, m = sys.m;
  if (X.size() % n != 0 || U.size() / m != X.size() / n || U.size() % m != 0)
    throw Error(ErrorKind::DimensionMismatch, "propagate: state/input length");
  const std::size_t M = X.size() / n;
  Vector out(X.size());
  for (std::size_t i = 0; i < M; ++i) {
    const Vector ax = sys.A * X.subspan(i * n, n);
    const Vector bu = sys.B * U.subspan(i * m, m);
    for (std::size_t r = 0; r < n; ++r) out[i * n + r] = ax[r] + bu[r];
  }
  return out;
}

std::vector<Vector> resimulate(const protocol::SubsystemModel& sys, const Vector& X0,
                               const std::vector<Vector>& inputs) {
  std::vector<Vector> xs{X0};
  for (const auto& u : inputs) xs.push_back(propagate(sys, xs.back(), u));
  return xs;
}

double disagreement(std::span<const double> X, std::size_t agents) {
  if (agents == 0 || X.size() % agents != 0)
    throw Error(ErrorKind::DimensionMismatch, "disagreement: state length");
  const std::size_t n = X.size() / agents;
  double best = 0.0;
  for (std::size_t i = 0; i < agents; ++i)
    for (std::size_t j = i + 1; j < agents; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        const double d = X[i * n + r] - X[j * n + r];
        s += d * d;
      }
      best = std::max(best, std::sqrt(s));
    }
  return best;
}

SimResult run(const SimConfig& cfg) {
  const rhc::RhcController& ctrl = cfg.rhc;
  const std::size_t M = ctrl.graph.num_agents, n = ctrl.sys.n;
  if (cfg.steps == 0) throw Error(ErrorKind::InvalidInput, "steps must be at least 1");
  if (cfg.X0.size() != M * n) throw Error(ErrorKind::DimensionMismatch, "X0 length must be M·n");

  SimResult r;
  r.num_agents = M;
  r.n = n;
  r.m = ctrl.sys.m;
  r.controller = cfg.controller;
  r.mode = ctrl.mode;
  r.states.push_back(cfg.X0);
  r.disagreement.push_back(disagreement(cfg.X0, M));
  if (ctrl.terminal.contains(cfg.X0, 1e-9)) r.terminal_entry_step = 0;

  std::vector<rhc::AgentPlan> plans;
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const Vector& X = r.states.back();
    Vector U;
    if (cfg.controller == ControllerKind::Linear) {
      U = ctrl.design.Kg * rhc::consensus_residual(X, M);
    } else {
      try {
        if (ctrl.mode == rhc::Mode::Centralized) {
          auto res = rhc::step_centralized(ctrl, X);
          U = std::move(res.U);
          r.reports.push_back(std::move(res.report));
        } else {
          auto res = rhc::step_distributed(ctrl, plans, X);
          U = std::move(res.U);
          plans = std::move(res.plans);
          if (cfg.record_plans) r.plans.push_back(plans);
          r.reports.push_back(std::move(res.report));
        }
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Infeasible || e.kind() == ErrorKind::AgentInfeasible) {
          r.feasible_all = false;
          r.halted_at = k;
          r.halt_reason = e.what();
          log::warn("simulation halted at step " + std::to_string(k) + ": " + e.what());
          break;
        }
        throw Error(e.kind(), "step " + std::to_string(k) + ": " + e.what());
      }
      const rhc::StepReport& rep = r.reports.back();
      r.costs.push_back(rep.J_star);
      if (k > 0) {
        const rhc::StepReport& prev = r.reports[k - 1];
        if (cfg.check_candidates) {
          const rhc::Candidate cand = rhc::shifted_candidate(ctrl, prev);
          r.candidate_feasible.push_back(rhc::candidate_feasible(ctrl, cand));
        }
        const Vector xr = rhc::consensus_residual(r.states[k - 1], M);
        r.cost_decrease_margin.push_back(rep.J_star - prev.J_star +
                                         quad_form(ctrl.design.Qg, xr));
      }
    }
    r.saturated.push_back(any_saturated(U, ctrl.boxes));
    r.states.push_back(propagate(ctrl.sys, X, U));
    r.inputs.push_back(std::move(U));
    r.disagreement.push_back(disagreement(r.states.back(), M));
    if (!r.terminal_entry_step && ctrl.terminal.contains(r.states.back(), 1e-9))
      r.terminal_entry_step = k + 1;
  }
  return r;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::ConvergentConsensus: return "convergent_consensus";
    case Verdict::Consensus: return "consensus";
    case Verdict::NoConsensus: return "no_consensus";
  }
  return "no_consensus";
}

VerdictReport consensus_verdict(const SimResult& r, double tol, std::size_t window) {
  VerdictReport v;
  const std::size_t len = r.disagreement.size();
  if (window == 0 || window > len) throw Error(ErrorKind::InvalidInput, "window exceeds run length");
  std::vector<double> norms;
  for (const auto& x : r.states) norms.push_back(norm2(x));
  v.median_norm = median(norms);
  for (std::size_t k = len - window; k < len; ++k) v.window_max_norm = std::max(v.window_max_norm, norms[k]);
  v.unbounded_growth = v.window_max_norm > 10.0 * v.median_norm;
  bool consensus = true;
  for (std::size_t k = len - window; k < len; ++k)
    if (!(r.disagreement[k] < tol)) consensus = false;
  if (!consensus) v.verdict = Verdict::NoConsensus;
  else v.verdict = v.unbounded_growth ? Verdict::Consensus : Verdict::ConvergentConsensus;
  return v;
}

bool lyapunov_certificate(const std::vector<double>& seq, std::size_t from, double slack) {
  for (std::size_t k = from; k + 1 < seq.size(); ++k)
    if (seq[k + 1] - seq[k] > slack) return false;
  return true;
}

bool lyapunov_certificate(const SimResult& r, const protocol::ProtocolDesign& d, double slack) {
  if (r.controller == ControllerKind::Linear) {
    std::vector<double> v;
    for (const auto& x : r.states) v.push_back(quad_form(d.Sg, rhc::consensus_residual(x, r.num_agents)));
    return lyapunov_certificate(v, 0, slack);
  }
  if (!r.terminal_entry_step) return false;
  return lyapunov_certificate(r.costs, *r.terminal_entry_step, slack);
}

void write_csv(std::ostream& os, const SimResult& r) {
  os << "step,agent";
  for (std::size_t k = 1; k <= r.n; ++k) os << ",x_" << k;
  for (std::size_t k = 1; k <= r.m; ++k) os << ",u_" << k;
  os << ",disagreement,J_star,feasible\n";
  const bool rhc_mode = r.controller == ControllerKind::Rhc;
  for (std::size_t k = 0; k < r.states.size(); ++k) {
    const bool has_input = k < r.inputs.size();
    const bool feasible = has_input ? (!rhc_mode || r.reports[k].feasible) : r.feasible_all;
    for (std::size_t i = 0; i < r.num_agents; ++i) {
      os << k << ',' << i;
      for (std::size_t c = 0; c < r.n; ++c) os << ',' << fmt(r.states[k][i * r.n + c]);
      for (std::size_t c = 0; c < r.m; ++c) {
        os << ',';
        if (has_input) os << fmt(r.inputs[k][i * r.m + c]);
      }
      os << ',' << fmt(r.disagreement[k]) << ',';
      if (has_input && rhc_mode) os << fmt(r.costs[k]);
      os << ',' << (feasible ? 1 : 0) << '\n';
    }
  }
}

void write_jsonl(std::ostream& os, const SimResult& r) {
  if (r.controller == ControllerKind::Linear) {
    for (std::size_t k = 0; k < r.inputs.size(); ++k)
      os << "{\"step\":" << k
         << ",\"mode\":\"linear\",\"J_star\":null,\"terminal_slack\":null,\"feasible\":true,"
            "\"solver_iters\":0}\n";
    return;
  }
  for (std::size_t k = 0; k < r.reports.size(); ++k) {
    const auto& rep = r.reports[k];
    os << "{\"step\":" << k << ",\"mode\":\"" << rhc::to_string(rep.mode)
       << "\",\"J_star\":" << json_num(rep.J_star)
       << ",\"terminal_slack\":" << json_num(rep.terminal_slack)
       << ",\"feasible\":" << (rep.feasible ? "true" : "false")
       << ",\"solver_iters\":" << rep.solver_iters << "}\n";
  }
  if (r.halted_at)
    os << "{\"step\":" << *r.halted_at << ",\"mode\":\"" << rhc::to_string(r.mode)
       << "\",\"J_star\":null,\"terminal_slack\":null,\"feasible\":false,\"solver_iters\":0}\n";
}

}  // namespace crhc::sim
