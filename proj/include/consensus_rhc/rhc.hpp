#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "consensus_rhc/graph.hpp"
#include "consensus_rhc/protocol.hpp"
#include "consensus_rhc/qcqp.hpp"

namespace crhc::rhc {

inline constexpr double kBetaCap = 1e6;

struct TerminalSet {
  RealMatrix Sg;
  double beta = 0.0;
  bool unbounded = false;  // every gain row vanished; beta clamped to kBetaCap
  std::size_t agents = 0;  // when set, membership ignores the agent-average component

  bool contains(std::span<const double> x, double tol = 0.0) const;
};

// Per-agent input box, u_lo^i ≤ u^i ≤ u_hi^i.
struct InputBoxes {
  std::vector<Vector> lo;
  std::vector<Vector> hi;

  static InputBoxes uniform(std::size_t agents, const Vector& lo, const Vector& hi);
  Vector stacked_lo() const;
  Vector stacked_hi() const;
};

enum class Mode { Centralized, Distributed };
std::string to_string(Mode m);

// β = min_j bound_j / sqrt(k_jᵀ S⁺ k_j)
TerminalSet compute_beta(const RealMatrix& Kg, const RealMatrix& Sg, const Vector& lo,
                         const Vector& hi);
TerminalSet compute_beta(const protocol::ProtocolDesign& d, const InputBoxes& boxes);

// Generic stacked MPC data: x⁺ = A x + B u, stage cost ‖x‖²_Q + ‖u‖²_R, terminal ‖x_N‖²_S.
struct LiftedModel {
  RealMatrix A, B, Q, R, S;
};

// Input-independent parts of the condensed problem.
struct CondensedTemplate {
  std::size_t horizon = 0;
  std::size_t nx = 0;
  std::size_t nu = 0;
  RealMatrix gamma;        // N·nx × N·nu, predicted X_1..X_N
  RealMatrix phi;          // N·nx × nx
  RealMatrix hessian;      // ΓᵀQ̄Γ + R̄
  RealMatrix cross;        // ΓᵀQ̄Φ
  RealMatrix qbar_phi;     // Q̄Φ, for the constant term
  RealMatrix terminal_map; // last block row of Γ
  RealMatrix terminal_phi; // Aᴺ
};

CondensedTemplate make_template(const LiftedModel& m, std::size_t N);
// Objective ½zᵀHz + fᵀz + c0 equals half the horizon cost J.
qcqp::CondensedProblem condense(const LiftedModel& m, const CondensedTemplate& t,
                                std::span<const double> x0, const Vector& lo_per_step,
                                const Vector& hi_per_step, const RealMatrix* terminal_weight,
                                double beta);
qcqp::CondensedProblem condense(const protocol::SubsystemModel& sys,
                                const graph::GraphModel& g, const protocol::ProtocolDesign& d,
                                std::span<const double> x0, std::size_t N,
                                const InputBoxes& boxes, const TerminalSet& terminal);
LiftedModel lift(const protocol::SubsystemModel& sys, const protocol::ProtocolDesign& d,
                 std::size_t agents);
// x minus the agent-average, which lies in the kernel of every consensus cost.
Vector consensus_residual(std::span<const double> x, std::size_t agents);
// J = Σ_{l<N} ‖X_l‖²_Q + ‖U_l‖²_R + ‖X_N‖²_S along the simulated rollout.
double rollout_cost(const LiftedModel& m, std::span<const double> x0, std::span<const double> u,
                    std::size_t N);

struct AgentPlan {
  std::size_t agent = 0;
  std::vector<Vector> states;  // N+1
  std::vector<Vector> inputs;  // N
};

struct RhcController {
  protocol::SubsystemModel sys;
  graph::GraphModel graph;
  protocol::ProtocolDesign design;
  std::size_t horizon = 1;
  InputBoxes boxes;
  TerminalSet terminal;
  Mode mode = Mode::Centralized;
  qcqp::SolverSettings solver;
  LiftedModel lifted;
  CondensedTemplate tmpl;
};

RhcController make_controller(const protocol::SubsystemModel& sys, const graph::GraphModel& g,
                              const protocol::ProtocolDesign& d, std::size_t N,
                              const InputBoxes& boxes, Mode mode,
                              std::optional<double> beta = std::nullopt);

struct StepReport {
  Mode mode = Mode::Centralized;
  double J_star = 0.0;
  double terminal_slack = 0.0;  // β² − ‖X_N‖²_Sg
  bool feasible = true;
  int solver_iters = 0;
  double kkt_residual = 0.0;
  qcqp::Status status = qcqp::Status::Optimal;
  Vector plan_inputs;            // stacked Ū, N·M·m
  // Predicted X_0..X_N in disagreement coordinates (agent-average removed from X_0);
  // they differ from the true prediction only inside Ker(Qg) ∩ Ker(Sg) ∩ Ker(Kg).
  std::vector<Vector> plan_states;
  std::vector<double> agent_costs;  // distributed: per-agent optimal objective (J scale)
  std::string information_pattern;
};

struct StepResult {
  Vector U;
  StepReport report;
};

StepResult step_centralized(const RhcController& ctrl, std::span<const double> Xk);

struct DistributedStepResult {
  Vector U;
  std::vector<AgentPlan> plans;
  StepReport report;
};

// Plans for k = 0: zero-input open-loop rollouts.
std::vector<AgentPlan> initial_plans(const RhcController& ctrl, std::span<const double> Xk);
// Shift by one and append the terminal-gain input (Kg·X_N).
std::vector<AgentPlan> shift_plans(const RhcController& ctrl, const std::vector<AgentPlan>& plans,
                                   std::span<const double> Xk);
DistributedStepResult step_distributed(const RhcController& ctrl,
                                       const std::vector<AgentPlan>& plans,
                                       std::span<const double> Xk);

struct CostDecomposition {
  double global = 0.0;
  std::vector<double> per_agent;
};
// states: N+1 stacked X, inputs: N stacked U.
CostDecomposition decompose_cost(const protocol::ProtocolDesign& d,
                                 const std::vector<Vector>& states,
                                 const std::vector<Vector>& inputs);

struct InvarianceResult {
  bool passed = true;
  std::size_t samples = 0;
  std::size_t set_violations = 0;
  std::size_t input_violations = 0;
};
InvarianceResult check_terminal_invariance_detailed(const protocol::SubsystemModel& sys,
                                                    const protocol::ProtocolDesign& d,
                                                    const TerminalSet& t, const InputBoxes& boxes,
                                                    std::size_t samples, unsigned seed = 1);
bool check_terminal_invariance(const protocol::SubsystemModel& sys,
                               const protocol::ProtocolDesign& d, const TerminalSet& t,
                               const InputBoxes& boxes, std::size_t samples, unsigned seed = 1);
// Uniform-radius sample from {X ∈ range(Sg) : ‖X‖_Sg ≤ β}; on_boundary pins ‖X‖_Sg = β.
class TerminalSampler {
 public:
  TerminalSampler(const TerminalSet& t, unsigned seed);
  Vector sample(bool on_boundary);

 private:
  TerminalSet t_;
  RealMatrix basis_;  // columns scaled so ‖basis·y‖_Sg = ‖y‖
  std::size_t rank_ = 0;
  unsigned long long state_;
  double gauss();
  double uniform();
};

// Shifted candidate Ū^f = (U_1..U_{N−1}, Kg·X_N) and its rollout from X_1.
struct Candidate {
  Vector inputs;
  std::vector<Vector> states;
};
Candidate shifted_candidate(const RhcController& ctrl, const StepReport& previous);
// Box and terminal feasibility of a candidate.
bool candidate_feasible(const RhcController& ctrl, const Candidate& c, double tol = 1e-9);

}  // namespace crhc::rhc
