#include "consensus_rhc/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <ostream>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/examples.hpp"
#include "consensus_rhc/log.hpp"
#include "consensus_rhc/scenario.hpp"
#include "consensus_rhc/sim.hpp"

namespace crhc::cli {

namespace fs = std::filesystem;
using scenario::Json;

namespace {

struct Options {
  std::string config;
  std::string design;
  std::string out_dir = ".";
  std::string example;
  bool allow_boundary_c = false;
  bool override_conditions = false;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write " + path.string());
  f << text;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::InvalidInput, "cannot create " + dir + ": " + ec.message());
  return p;
}

void print_report(std::ostream& out, const protocol::ConditionReport& r) {
  out << "design mode: " << protocol::to_string(r.mode) << "\n";
  for (const auto& c : r.conditions)
    out << "  condition " << c.index << " [" << (c.passed ? "pass" : "FAIL") << "] " << c.name
        << ": " << c.detail << "\n";
  out << "  coupling bounds: [" << r.c_lower << ", " << r.c_upper << "], c = " << r.c << "\n";
  if (r.delta_c) out << "  delta_c = " << *r.delta_c << "\n";
  for (const auto& n : r.notes) out << "  note: " << n << "\n";
}

void apply_flags(scenario::ScenarioConfig& cfg, const Options& o) {
  if (o.allow_boundary_c) cfg.params.allow_boundary_c = true;
  if (o.override_conditions) cfg.params.override_conditions = true;
}

// Returns the exit code; design written only when one was produced.
int do_design(const scenario::ScenarioConfig& cfg, const fs::path& dir, std::ostream& out,
              std::ostream& err, std::optional<protocol::ProtocolDesign>* result) {
  const scenario::Model model = scenario::build_model(cfg);
  const protocol::DesignOutcome outcome = scenario::run_design(cfg, model);
  print_report(out, outcome.report);
  write_file(dir / "design_report.json", scenario::report_to_json(outcome.report).dump(2) + "\n");
  if (!outcome.design) {
    const auto* f = outcome.report.first_failure();
    err << "error: " << to_string(f ? f->kind : ErrorKind::ConditionViolated) << ": condition "
        << (f ? f->index : 0) << " violated" << (f ? ": " + f->detail : std::string()) << "\n";
    return kConditionViolated;
  }
  if (!outcome.report.all_passed())
    log::warn("design conditions violated; continuing because of --override-conditions");
  write_file(dir / "design.json", scenario::design_to_json(*outcome.design, cfg).dump(2) + "\n");
  out << "wrote " << (dir / "design.json").string() << "\n";
  if (result) *result = outcome.design;
  return kOk;
}

void check_matches(const scenario::ScenarioConfig& cfg, const scenario::LoadedDesign& ld) {
  if (!approx_equal(cfg.A, ld.sys.A) || !approx_equal(cfg.B, ld.sys.B))
    throw Error(ErrorKind::MalformedDesign, "design was made for a different (A, B)");
  if (!approx_equal(cfg.adjacency, ld.graph.adjacency))
    throw Error(ErrorKind::MalformedDesign, "design was made for a different graph");
}

int do_simulate(const scenario::ScenarioConfig& cfg, const protocol::ProtocolDesign& d,
                const fs::path& dir, std::ostream& out) {
  const scenario::Model model = scenario::build_model(cfg);
  const rhc::RhcController ctrl = scenario::make_controller(cfg, model, d);
  sim::SimConfig sc;
  sc.rhc = ctrl;
  sc.X0 = cfg.X0;
  sc.steps = cfg.steps;
  sc.controller = cfg.controller;
  sc.check_candidates = cfg.rhc_mode == rhc::Mode::Centralized;
  const sim::SimResult r = sim::run(sc);
  {
    std::ofstream f(dir / "trajectory.csv");
    sim::write_csv(f, r);
  }
  {
    std::ofstream f(dir / "reports.jsonl");
    sim::write_jsonl(f, r);
  }
  const std::size_t window = std::min<std::size_t>(20, r.disagreement.size());
  const sim::VerdictReport v = sim::consensus_verdict(r, 1e-3, window);
  Json summary = scenario::summary_to_json(r, v);
  summary["beta"] = ctrl.terminal.beta;
  summary["mode"] = cfg.controller == sim::ControllerKind::Linear ? "linear"
                                                                   : rhc::to_string(cfg.rhc_mode);
  summary["lyapunov_certificate"] = sim::lyapunov_certificate(r, d);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  out << "verdict: " << sim::to_string(v.verdict) << ", max |u| = " << r.max_abs_input()
      << ", terminal entry step = "
      << (r.terminal_entry_step ? std::to_string(*r.terminal_entry_step) : "none") << "\n";
  out << "wrote " << (dir / "trajectory.csv").string() << ", reports.jsonl, summary.json\n";
  if (!r.feasible_all) {
    out << "halted at step " << *r.halted_at << ": " << r.halt_reason << "\n";
    return kInfeasible;
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Inverse-optimal consensus protocols and receding-horizon consensus control",
               "consensus-rhc"};
  app.require_subcommand(1);
  Options o;
  auto* design = app.add_subcommand("design", "design a protocol from a scenario config");
  design->add_option("--config", o.config, "scenario config (JSON)")->required();
  design->add_option("--out-dir", o.out_dir, "output directory");
  design->add_flag("--allow-boundary-c", o.allow_boundary_c, "admit c = 1/sigma_max(L)");
  design->add_flag("--override-conditions", o.override_conditions,
                   "emit a design even if conditions fail");

  auto* simulate = app.add_subcommand("simulate", "simulate the closed loop");
  simulate->add_option("--config", o.config, "scenario config (JSON)")->required();
  simulate->add_option("--design", o.design, "design document (JSON)")->required();
  simulate->add_option("--out-dir", o.out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "check a design document");
  verify->add_option("--design", o.design, "design document (JSON)")->required();
  verify->add_option("--out-dir", o.out_dir, "output directory");

  auto* example = app.add_subcommand("example", "run a built-in scenario end to end");
  example->add_option("name", o.example, "semistable | unstable")->required();
  example->add_option("--out-dir", o.out_dir, "output directory");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kRuntimeFailure;
  }

  try {
    const fs::path dir = prepare_dir(o.out_dir);
    if (design->parsed()) {
      scenario::ScenarioConfig cfg = scenario::load_config(o.config);
      apply_flags(cfg, o);
      return do_design(cfg, dir, out, err, nullptr);
    }
    if (simulate->parsed()) {
      const scenario::ScenarioConfig cfg = scenario::load_config(o.config);
      const scenario::LoadedDesign ld = scenario::load_design(o.design);
      check_matches(cfg, ld);
      return do_simulate(cfg, ld.design, dir, out);
    }
    if (verify->parsed()) {
      const scenario::LoadedDesign ld = scenario::load_design(o.design);
      const Json rep = scenario::verify_design(ld);
      out << rep.dump(2) << "\n";
      if (verify->count("--out-dir")) write_file(dir / "verify.json", rep.dump(2) + "\n");
      return rep.at("passed").get<bool>() ? kOk : kConditionViolated;
    }
    if (example->parsed()) {
      const auto ex = examples::by_name(o.example);
      if (!ex) {
        err << "usage error: unknown example '" << o.example
            << "' (expected semistable or unstable)\n";
        return kRuntimeFailure;
      }
      out << "example " << ex->name << "\n";
      for (const auto& n : ex->notes) out << "  note: " << n << "\n";
      log::warn("built-in example '" + ex->name + "' deviates from the stated parameters; see notes");
      write_file(dir / "config.json", scenario::config_to_json(ex->config).dump(2) + "\n");
      std::optional<protocol::ProtocolDesign> d;
      const int rc = do_design(ex->config, dir, out, err, &d);
      if (rc != kOk) return rc;
      return do_simulate(ex->config, *d, dir, out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ConditionViolated:
      case ErrorKind::InfeasibleCoupling:
        return kConditionViolated;
      case ErrorKind::Infeasible:
      case ErrorKind::AgentInfeasible:
        return kInfeasible;
      default:
        return kRuntimeFailure;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return kRuntimeFailure;
}

}  // namespace crhc::cli
