#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "consensus_rhc/cli.hpp"
#include "consensus_rhc/error.hpp"
#include "consensus_rhc/examples.hpp"
#include "consensus_rhc/scenario.hpp"

using namespace crhc;
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

const fs::path kFixtures = CRHC_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("crhc_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code = 0;
  std::string out, err;
};

Run invoke(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  Run r;
  r.code = crhc::cli::run(args, o, e);
  r.out = o.str();
  r.err = e.str();
  return r;
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  return Json::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_config(const fs::path& dir, const scenario::ScenarioConfig& cfg) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << scenario::config_to_json(cfg).dump(1);
  return p;
}

}  // namespace

TEST_CASE("malformed configs are rejected with a pointer") {
  const Json expected = read_json(kFixtures / "malformed_expected.json");
  CHECK(expected.size() >= 10);
  const fs::path out = scratch("malformed");
  for (const auto& [name, ptr] : expected.items()) {
    CAPTURE(name);
    const fs::path file = kFixtures / "malformed" / (name + ".json");
    REQUIRE(fs::exists(file));
    try {
      scenario::load_config(file);
      FAIL("accepted " << name);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SchemaError);
      const std::string want = ptr.get<std::string>();
      const std::string got = e.pointer().empty() ? "/" : e.pointer();
      CHECK(got.rfind(want, 0) == 0);
    }
    const Run r = invoke({"design", "--config", file.string(), "--out-dir", out.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("SchemaError") != std::string::npos);
  }
  // the valid base fixture parses
  CHECK_NOTHROW(scenario::load_config(kFixtures / "unstable.json"));
}

TEST_CASE("config round trip") {
  const auto cfg = examples::unstable().config;
  const auto back = scenario::parse_config(scenario::config_to_json(cfg));
  CHECK(scenario::config_to_json(back) == scenario::config_to_json(cfg));
}

TEST_CASE("stated coupling gain of the ring example is rejected") {
  const fs::path dir = scratch("c10");
  auto cfg = examples::semistable().config;
  cfg.params.c = examples::kSemistableStatedC;
  const Run r = invoke({"design", "--config", write_config(dir, cfg).string(), "--out-dir", dir.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("condition 6") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "design.json"));
  const Json rep = read_json(dir / "design_report.json");
  CHECK_FALSE(rep["all_passed"].get<bool>());
  bool six_failed = false;
  for (const auto& c : rep["conditions"])
    if (c["index"] == 6) six_failed = !c["passed"].get<bool>();
  CHECK(six_failed);

  // the override lets it through
  const Run o = invoke({"design", "--config", (dir / "config.json").string(), "--out-dir", dir.string(),
                     "--override-conditions"});
  CHECK(o.code == 0);
  CHECK(fs::exists(dir / "design.json"));
}

TEST_CASE("complete-graph example: coupling bounds in the report") {
  const fs::path dir = scratch("bounds");
  auto cfg = examples::unstable().config;
  const Run ok = invoke({"design", "--config", write_config(dir, cfg).string(), "--out-dir", dir.string()});
  CHECK(ok.code == 0);
  Json rep = read_json(dir / "design_report.json");
  CHECK(rep["coupling_bounds"][1].get<double>() == doctest::Approx(0.2));

  cfg.params.delta = examples::kUnstableStatedDelta;
  const Run bad = invoke({"design", "--config", write_config(dir, cfg).string(), "--out-dir", dir.string()});
  CHECK(bad.code == 2);
  rep = read_json(dir / "design_report.json");
  CHECK(rep["coupling_bounds"][0].get<double>() == doctest::Approx(0.0327).epsilon(1e-3));
  CHECK(rep["coupling_bounds"][1].get<double>() == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("verify: round trip and negative control") {
  const fs::path dir = scratch("verify");
  const Run d = invoke({"design", "--config", (kFixtures / "unstable.json").string(), "--out-dir", dir.string()});
  REQUIRE(d.code == 0);
  const fs::path design = dir / "design.json";
  const fs::path a = dir / "a", b = dir / "b";
  REQUIRE(invoke({"verify", "--design", design.string(), "--out-dir", a.string()}).code == 0);
  REQUIRE(invoke({"verify", "--design", design.string(), "--out-dir", b.string()}).code == 0);
  CHECK(read_text(a / "verify.json") == read_text(b / "verify.json"));
  const Json v = read_json(a / "verify.json");
  CHECK(v["passed"].get<bool>());
  CHECK(v["are_residual"].get<double>() <= 1e-7);
  CHECK(v["terminal"]["invariant"].get<bool>());
  CHECK(v["terminal"]["samples"].get<int>() >= 10000);
  CHECK(v["decomposition"]["max_relative_error"].get<double>() <= 1e-10);

  // re-reading the design reproduces the design-time residual
  const Json dj = read_json(design);
  const auto loaded = scenario::parse_design(dj);
  CHECK(scenario::verify_design(loaded)["are_residual"] == v["are_residual"]);

  Json bad = dj;
  bad["design"]["S2"][0][0] = bad["design"]["S2"][0][0].get<double>() * 1.05;
  bad["design"]["S2"][1][1] = bad["design"]["S2"][1][1].get<double>() * 0.95;
  const fs::path corrupt = dir / "corrupt.json";
  std::ofstream(corrupt) << bad.dump(1);
  const Run c = invoke({"verify", "--design", corrupt.string(), "--out-dir", (dir / "c").string()});
  CHECK(c.code == 2);
  const Json cv = read_json(dir / "c" / "verify.json");
  CHECK(cv["are_residual"].get<double>() > 1e-3);
  CHECK_FALSE(cv["are_ok"].get<bool>());
  CHECK_FALSE(cv["passed"].get<bool>());

  Json broken = dj;
  broken["design"].erase("S2");
  std::ofstream(dir / "broken.json") << broken.dump();
  const Run m = invoke({"verify", "--design", (dir / "broken.json").string(), "--out-dir", dir.string()});
  CHECK(m.code == 1);
  CHECK(m.err.find("MalformedDesign") != std::string::npos);
}

TEST_CASE("verify: semistable kernel dimension") {
  const fs::path dir = scratch("kernel");
  const auto cfg = examples::semistable().config;
  REQUIRE(invoke({"design", "--config", write_config(dir, cfg).string(), "--out-dir", dir.string()}).code == 0);
  REQUIRE(invoke({"verify", "--design", (dir / "design.json").string(), "--out-dir", dir.string()}).code == 0);
  const Json v = read_json(dir / "verify.json");
  const int n = static_cast<int>(cfg.A.rows());
  CHECK(v["kernel"]["dim_ker_Qg"] == n);
  CHECK(v["kernel"]["dim_ker_L_kron_I"] == n);
  CHECK(v["kernel"]["ok"].get<bool>());
}

TEST_CASE("simulate end to end") {
  const fs::path dir = scratch("simulate");
  const std::string config = (kFixtures / "unstable.json").string();
  REQUIRE(invoke({"design", "--config", config, "--out-dir", dir.string()}).code == 0);
  const Run s = invoke({"simulate", "--config", config, "--design", (dir / "design.json").string(),
                     "--out-dir", dir.string()});
  CHECK(s.code == 0);
  const Json sum = read_json(dir / "summary.json");
  CHECK(sum["consensus_verdict"] == "consensus");
  CHECK(sum["max_input_magnitude"].get<double>() <= 1.0 + 1e-9);
  CHECK(sum["feasible_all"].get<bool>());
  std::ifstream csv(dir / "trajectory.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "step,agent,x_1,x_2,x_3,u_1,disagreement,J_star,feasible");

  // a design for another graph is refused
  const fs::path other = scratch("simulate_other");
  const auto semi = examples::semistable().config;
  REQUIRE(invoke({"design", "--config", write_config(other, semi).string(), "--out-dir", other.string()}).code == 0);
  const Run mismatch = invoke({"simulate", "--config", config, "--design", (other / "design.json").string(),
                            "--out-dir", other.string()});
  CHECK(mismatch.code == 1);

  // T = 0 is a schema error
  const Run zero = invoke({"simulate", "--config", (kFixtures / "malformed" / "zero_steps.json").string(), "--design",
                        (dir / "design.json").string(), "--out-dir", dir.string()});
  CHECK(zero.code == 1);
  CHECK(zero.err.find("/rhc/steps") != std::string::npos);
}

TEST_CASE("infeasible start exits with code 3") {
  const fs::path dir = scratch("infeasible");
  auto cfg = examples::unstable().config;
  cfg.horizon = 1;
  for (auto& v : cfg.X0) v *= 50.0;
  cfg.steps = 5;
  const std::string config = write_config(dir, cfg).string();
  REQUIRE(invoke({"design", "--config", config, "--out-dir", dir.string()}).code == 0);
  const Run s = invoke({"simulate", "--config", config, "--design", (dir / "design.json").string(),
                     "--out-dir", dir.string()});
  CHECK(s.code == 3);
  CHECK_FALSE(read_json(dir / "summary.json")["feasible_all"].get<bool>());
}

TEST_CASE("built-in examples") {
  const fs::path dir = scratch("examples");
  const Run semi = invoke({"example", "semistable", "--out-dir", (dir / "semi").string()});
  CHECK(semi.code == 0);
  CHECK(read_json(dir / "semi" / "summary.json")["consensus_verdict"] == "convergent_consensus");
  CHECK(semi.out.find("condition 6") != std::string::npos);

  const Run uns = invoke({"example", "unstable", "--out-dir", (dir / "uns").string()});
  CHECK(uns.code == 0);
  const Json s = read_json(dir / "uns" / "summary.json");
  CHECK(s["consensus_verdict"] == "consensus");
  CHECK(s["max_input_magnitude"].get<double>() <= 1.0 + 1e-9);
  CHECK(uns.out.find("0.1634") != std::string::npos);

  const Run bad = invoke({"example", "bogus", "--out-dir", dir.string()});
  CHECK(bad.code == 1);
  CHECK(invoke({"frobnicate"}).code == 1);
  CHECK(invoke({}).code == 1);
}

TEST_CASE("installed binary propagates exit codes") {
  const fs::path dir = scratch("binary");
  const std::string bin = CRHC_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status(bin + " example bogus") == 1);
  CHECK(status(bin + " design --config " + (kFixtures / "malformed" / "missing_B.json").string() + " --out-dir " +
               dir.string()) == 1);
  CHECK(status(bin + " design --config " + (kFixtures / "unstable.json").string() + " --out-dir " + dir.string()) == 0);
}
