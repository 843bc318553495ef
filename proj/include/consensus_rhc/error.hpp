#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace crhc {

enum class ErrorKind {
  InvalidInput,
  NonSquare,
  DimensionMismatch,
  NoConvergence,
  IndexTooHigh,
  SingularCore,
  Diverged,
  SeriesDiverged,
  SelfLoop,
  NonBinaryWeight,
  NotSemistable,
  NotSemiObservable,
  NotObservable,
  NotControllable,
  RankDeficientB,
  RankDeficientQ2,
  AssumptionViolated,
  ConditionViolated,
  InfeasibleCoupling,
  GeneralBUnsupported,
  NoUnstableEigenvalue,
  Infeasible,
  AgentInfeasible,
  NumericalFailure,
  RowOutsideRange,
  DegenerateBox,
  ModeUnsupported,
  SchemaError,
  MalformedDesign,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  static Error condition(int index, const std::string& message,
                         ErrorKind kind = ErrorKind::ConditionViolated);
  static Error agent(int agent_index, const std::string& message);
  static Error schema(const std::string& pointer, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // Which design condition (1..6) failed, when applicable.
  std::optional<int> condition_index() const noexcept { return condition_; }
  std::optional<int> agent_index() const noexcept { return agent_; }
  // JSON pointer of the offending config entry.
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  ErrorKind kind_;
  std::optional<int> condition_;
  std::optional<int> agent_;
  std::string pointer_;
};

}  // namespace crhc
