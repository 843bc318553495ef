#pragma once

#include <optional>
#include <string>
#include <vector>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/graph.hpp"
#include "consensus_rhc/matrix.hpp"

namespace crhc::protocol {

enum class Classification { Stable, Semistable, Unstable };
enum class Mode { Semistable, Unstable };

std::string to_string(Classification c);
std::string to_string(Mode m);

// Agent dynamics x⁺ = A x + B u.
struct SubsystemModel {
  RealMatrix A;
  RealMatrix B;
  std::size_t n = 0;
  std::size_t m = 0;
  Classification classification = Classification::Stable;
};

// Validates shapes, controllability and full column rank of B.
SubsystemModel make_subsystem(const RealMatrix& A, const RealMatrix& B);

struct DesignParams {
  double alpha = 1.0;
  double c = 0.1;
  double mu = 1.0;
  double a = 1.0;                  // series weight of the kernel correction
  std::optional<double> delta;     // unstable mode only
  RealMatrix Q2;
  std::optional<RealMatrix> W;     // defaults to mu·I
  bool allow_boundary_c = false;
  bool override_conditions = false;
};

struct ConditionResult {
  int index = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  ErrorKind kind = ErrorKind::ConditionViolated;  // raised when this condition fails
};

struct ConditionReport {
  Mode mode = Mode::Semistable;
  std::vector<ConditionResult> conditions;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool sigma_from_directed_graph = false;
  double c_lower = 0.0;
  double c_upper = 0.0;
  double c = 0.0;
  bool c_on_boundary = false;
  std::optional<double> delta;
  std::optional<double> delta_c;
  double r1_ridge = 0.0;
  std::optional<double> are_residual;
  std::vector<std::string> notes;

  bool all_passed() const;
  const ConditionResult* first_failure() const;
};

struct ProtocolDesign {
  Mode mode = Mode::Semistable;
  RealMatrix K2, S2, Q2, R2, H, S1, R1, W;
  RealMatrix Qg, Rg, Sg, Kg;
  RealMatrix laplacian;
  double alpha = 0.0;
  double c = 0.0;
  double delta = 0.0;   // 0 in semistable mode
  double mu = 0.0;      // 0 when W is not a multiple of I
  double a = 0.0;
  double r1_ridge = 0.0;
  double are_residual = 0.0;
};

struct DesignOutcome {
  ConditionReport report;
  std::optional<ProtocolDesign> design;
};

bool check_semi_observable(const RealMatrix& C, const RealMatrix& A);

// L = I − (A−I)(A−I)^#
RealMatrix kernel_projector(const RealMatrix& A);
RealMatrix solve_semistable_lyapunov(const SubsystemModel& sys, const RealMatrix& Q2, double a);
// ‖AᵀSA − S + Q‖_F / (1 + ‖S‖_F)
double lyapunov_residual(const RealMatrix& A, const RealMatrix& Q, const RealMatrix& S);
// Least-squares a for target ≈ stein_series(A, Q2) + a·LᵀL.
double fit_series_weight(const RealMatrix& A, const RealMatrix& Q2, const RealMatrix& target);

double compute_delta_c(const SubsystemModel& sys, double alpha);

struct ModifiedAreStats {
  int iterations = 0;
  // min over k of λ_min(S_{k+1} − S_k); filled when track_monotonicity is set.
  double min_increment_eig = 0.0;
  bool track_monotonicity = false;
};
RealMatrix solve_modified_are(const SubsystemModel& sys, const RealMatrix& Q2, double alpha,
                              double delta, ModifiedAreStats* stats = nullptr);
double modified_are_residual(const SubsystemModel& sys, const RealMatrix& Q2, double alpha,
                             double delta, const RealMatrix& S);

// Evaluates every design condition and builds the design when they hold
// (or when override_conditions is set). Throws only on broken preconditions.
DesignOutcome synthesize(const SubsystemModel& sys, const graph::GraphModel& g,
                         const DesignParams& p, Mode mode);
ProtocolDesign design_semistable(const SubsystemModel& sys, const graph::GraphModel& g,
                                 const DesignParams& p);
ProtocolDesign design_unstable(const SubsystemModel& sys, const graph::GraphModel& g,
                               const DesignParams& p);

// Rebuilds Qg, Rg, Sg, Kg from the block matrices and scalars.
void assemble_globals(ProtocolDesign& d);
double verify_global_are(const ProtocolDesign& d, const SubsystemModel& sys,
                         const graph::GraphModel& g);
// −[(I⊗B)ᵀSg(I⊗B) + Rg]⁻¹ (I⊗B)ᵀSg(I⊗A)
RealMatrix optimal_global_gain(const ProtocolDesign& d, const SubsystemModel& sys,
                               std::size_t num_agents);
// Spectral radii of A + c·λ·B·K2 over the nonzero Laplacian eigenvalues.
std::vector<double> consensus_mode_radii(const ProtocolDesign& d, const SubsystemModel& sys);

}  // namespace crhc::protocol
