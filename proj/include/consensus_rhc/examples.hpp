#pragma once

#include <optional>
#include <string>
#include <vector>

#include "consensus_rhc/scenario.hpp"

namespace crhc::examples {

struct BuiltinExample {
  std::string name;
  scenario::ScenarioConfig config;
  RealMatrix reference_S2;           // reference S2 used as the fixture target
  std::vector<std::string> notes;    // adjustments and inconsistencies found in the stated data
};

// Five agents on a ring, semistable 5-state subsystem, |u| ≤ 0.3.
BuiltinExample semistable();
// Five agents on K5, unstable 3-state chain, |u| ≤ 1.
BuiltinExample unstable();
std::optional<BuiltinExample> by_name(const std::string& name);

// Stated values kept next to the fixtures.
inline constexpr double kUnstableStatedDelta = 0.1634;
inline constexpr double kSemistableStatedC = 10.0;

}  // namespace crhc::examples
