#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "consensus_rhc/protocol.hpp"
#include "consensus_rhc/rhc.hpp"
#include "consensus_rhc/sim.hpp"

namespace crhc::scenario {

using Json = nlohmann::json;

struct ScenarioConfig {
  std::string name;
  RealMatrix A, B, adjacency;
  protocol::DesignParams params;
  std::optional<protocol::Mode> design_mode;  // inferred from A when absent
  rhc::InputBoxes boxes;
  std::size_t horizon = 9;
  rhc::Mode rhc_mode = rhc::Mode::Centralized;
  sim::ControllerKind controller = sim::ControllerKind::Rhc;
  std::size_t steps = 1;
  Vector X0;
  qcqp::SolverSettings solver;
};

// Schema and dimension checks; errors are SchemaError with a JSON pointer.
ScenarioConfig parse_config(const Json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
Json config_to_json(const ScenarioConfig& cfg);

struct Model {
  protocol::SubsystemModel sys;
  graph::GraphModel graph;
  protocol::Mode mode = protocol::Mode::Semistable;
};
Model build_model(const ScenarioConfig& cfg);
protocol::DesignOutcome run_design(const ScenarioConfig& cfg, const Model& model);

Json report_to_json(const protocol::ConditionReport& r);
// Design document: designed matrices plus the system, graph and constraints it belongs to.
Json design_to_json(const protocol::ProtocolDesign& d, const ScenarioConfig& cfg);

struct LoadedDesign {
  protocol::SubsystemModel sys;
  graph::GraphModel graph;
  protocol::ProtocolDesign design;
  rhc::InputBoxes boxes;
};
// Global matrices are rebuilt from the block matrices; throws MalformedDesign.
LoadedDesign parse_design(const Json& j);
LoadedDesign load_design(const std::filesystem::path& path);

struct VerifyOptions {
  std::size_t invariance_samples = 10000;
  std::size_t decomposition_trials = 100;
  std::size_t decomposition_horizon = 9;
  unsigned seed = 7;
  double are_tol = 1e-7;
};
Json verify_design(const LoadedDesign& d, const VerifyOptions& opt = {});

rhc::RhcController make_controller(const ScenarioConfig& cfg, const Model& model,
                                   const protocol::ProtocolDesign& d);
Json summary_to_json(const sim::SimResult& r, const sim::VerdictReport& v);

Json matrix_to_json(const RealMatrix& m);
RealMatrix matrix_from_json(const Json& j, const std::string& pointer);

}  // namespace crhc::scenario
