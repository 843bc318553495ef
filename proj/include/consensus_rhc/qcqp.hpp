#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "consensus_rhc/matrix.hpp"

namespace crhc::qcqp {

// minimise ½zᵀHz + fᵀz + c0  s.t.  lo ≤ z ≤ hi,  ‖Gz + h‖²_Sq ≤ β²
struct CondensedProblem {
  std::size_t dim = 0;
  RealMatrix hessian;
  Vector linear;
  double constant = 0.0;
  Vector box_lo;
  Vector box_hi;
  bool has_quad = false;
  RealMatrix quad_map;    // p×dim
  Vector offset;          // p
  RealMatrix weight;      // p×p
  double radius = 0.0;

  void validate() const;
  double objective(std::span<const double> z) const;
  // ‖Gz + h‖²_Sq
  double quad_value(std::span<const double> z) const;
};

enum class Status { Optimal, Infeasible, MaxIter };
std::string to_string(Status s);

struct SolveReport {
  Vector z;
  double objective = 0.0;
  int iterations = 0;  // Newton steps over all barrier stages
  Status status = Status::Optimal;
  double kkt_residual = 0.0;
  // Recovered multipliers: box lower, box upper, quadratic.
  Vector mult_lo;
  Vector mult_hi;
  double mult_quad = 0.0;
  std::vector<double> stage_objectives;
};

struct SolverSettings {
  double gap_tol = 1e-9;
  double t0 = 1.0;
  double t_factor = 10.0;
  double armijo = 0.25;
  double shrink = 0.5;
  double grad_tol = 1e-10;
  double regularization = 1e-10;
  int max_newton_per_stage = 200;
  int max_newton_total = 4000;
  int phase1_cap = 10000;
};

SolveReport solve(const CondensedProblem& p, const SolverSettings& s = {});
// Strictly feasible start; throws Error(Infeasible) when none exists.
Vector phase1(const CondensedProblem& p, const SolverSettings& s = {});

}  // namespace crhc::qcqp
