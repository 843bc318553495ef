#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "consensus_rhc/rhc.hpp"

namespace crhc::sim {

enum class ControllerKind { Rhc, Linear };

struct SimConfig {
  std::size_t steps = 1;
  Vector X0;
  ControllerKind controller = ControllerKind::Rhc;
  rhc::RhcController rhc;  // also supplies sys, graph and design in linear mode
  bool record_plans = false;
  bool check_candidates = true;
  unsigned seed = 1;
};

// Builds a linear-protocol config U = Kg·X from an existing controller.
SimConfig linear_config(const rhc::RhcController& ctrl, const Vector& X0, std::size_t steps);

struct SimResult {
  std::size_t num_agents = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  ControllerKind controller = ControllerKind::Rhc;
  rhc::Mode mode = rhc::Mode::Centralized;
  std::vector<Vector> states;        // T+1 (fewer after an early halt)
  std::vector<Vector> inputs;        // T
  std::vector<double> costs;         // J*_k, RHC mode only
  std::vector<double> disagreement;  // one per recorded state
  std::vector<bool> saturated;       // some input coordinate at its bound
  std::vector<rhc::StepReport> reports;
  std::optional<std::size_t> terminal_entry_step;
  bool feasible_all = true;
  std::optional<std::size_t> halted_at;
  std::string halt_reason;
  // Shifted candidate from step k−1 feasible at step k (entry k−1).
  std::vector<bool> candidate_feasible;
  // J*(k+1) − J*(k) + ‖X_k‖²_Qg, per step pair.
  std::vector<double> cost_decrease_margin;
  std::vector<std::vector<rhc::AgentPlan>> plans;

  double max_abs_input() const;
};

// X⁺ = (I⊗A)X + (I⊗B)U, agent by agent.
Vector propagate(const protocol::SubsystemModel& sys, std::span<const double> X,
                 std::span<const double> U);
std::vector<Vector> resimulate(const protocol::SubsystemModel& sys, const Vector& X0,
                               const std::vector<Vector>& inputs);

// max_{i<j} ‖x^i − x^j‖
double disagreement(std::span<const double> X, std::size_t agents);

SimResult run(const SimConfig& cfg);

enum class Verdict { ConvergentConsensus, Consensus, NoConsensus };
std::string to_string(Verdict v);

struct VerdictReport {
  Verdict verdict = Verdict::NoConsensus;
  bool unbounded_growth = false;
  double window_max_norm = 0.0;
  double median_norm = 0.0;
};
VerdictReport consensus_verdict(const SimResult& r, double tol = 1e-3, std::size_t window = 20);

// Per-step decrease within slack: ‖X‖²_Sg in linear mode from step 0,
// J* in RHC mode from the terminal-entry step on.
bool lyapunov_certificate(const SimResult& r, const protocol::ProtocolDesign& d,
                          double slack = 1e-6);
bool lyapunov_certificate(const std::vector<double>& sequence, std::size_t from,
                          double slack = 1e-6);

void write_csv(std::ostream& os, const SimResult& r);
void write_jsonl(std::ostream& os, const SimResult& r);

}  // namespace crhc::sim
