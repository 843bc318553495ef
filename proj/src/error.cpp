#include "consensus_rhc/error.hpp"

namespace crhc {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NonSquare: return "NonSquare";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::IndexTooHigh: return "IndexTooHigh";
    case ErrorKind::SingularCore: return "SingularCore";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::SeriesDiverged: return "SeriesDiverged";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::NonBinaryWeight: return "NonBinaryWeight";
    case ErrorKind::NotSemistable: return "NotSemistable";
    case ErrorKind::NotSemiObservable: return "NotSemiObservable";
    case ErrorKind::NotObservable: return "NotObservable";
    case ErrorKind::NotControllable: return "NotControllable";
    case ErrorKind::RankDeficientB: return "RankDeficientB";
    case ErrorKind::RankDeficientQ2: return "RankDeficientQ2";
    case ErrorKind::AssumptionViolated: return "AssumptionViolated";
    case ErrorKind::ConditionViolated: return "ConditionViolated";
    case ErrorKind::InfeasibleCoupling: return "InfeasibleCoupling";
    case ErrorKind::GeneralBUnsupported: return "GeneralBUnsupported";
    case ErrorKind::NoUnstableEigenvalue: return "NoUnstableEigenvalue";
    case ErrorKind::Infeasible: return "Infeasible";
    case ErrorKind::AgentInfeasible: return "AgentInfeasible";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::RowOutsideRange: return "RowOutsideRange";
    case ErrorKind::DegenerateBox: return "DegenerateBox";
    case ErrorKind::ModeUnsupported: return "ModeUnsupported";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::MalformedDesign: return "MalformedDesign";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

Error Error::condition(int index, const std::string& message, ErrorKind kind) {
  Error e(kind, "condition " + std::to_string(index) + ": " + message);
  e.condition_ = index;
  return e;
}

Error Error::agent(int agent_index, const std::string& message) {
  Error e(ErrorKind::AgentInfeasible, "agent " + std::to_string(agent_index) + ": " + message);
  e.agent_ = agent_index;
  return e;
}

Error Error::schema(const std::string& pointer, const std::string& message) {
  Error e(ErrorKind::SchemaError, (pointer.empty() ? "/" : pointer) + ": " + message);
  e.pointer_ = pointer.empty() ? "/" : pointer;
  return e;
}

}  // namespace crhc
