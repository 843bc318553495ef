#include "consensus_rhc/examples.hpp"

#include <cstdio>
#include <random>

#include "consensus_rhc/graph.hpp"
#include "consensus_rhc/protocol.hpp"

namespace crhc::examples {

namespace {

// mt19937_64 output is fully specified; the mapping to [lo, hi) is done here
// so the seeded X0 is identical across standard libraries.
class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : rng_(seed) {}
  double operator()(double lo, double hi) {
    const double u = static_cast<double>(rng_() >> 11) * (1.0 / 9007199254740992.0);
    return lo + (hi - lo) * u;
  }

 private:
  std::mt19937_64 rng_;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

RealMatrix adjacency_from_laplacian(const RealMatrix& L) {
  RealMatrix adj(L.rows(), L.cols());
  for (std::size_t i = 0; i < L.rows(); ++i)
    for (std::size_t j = 0; j < L.cols(); ++j)
      if (i != j && L(i, j) != 0.0) adj(i, j) = 1.0;
  return adj;
}

}  // namespace

BuiltinExample semistable() {
  BuiltinExample ex;
  ex.name = "semistable";
  auto& cfg = ex.config;
  cfg.name = "semistable";
  cfg.A = RealMatrix{{0.8, 0.1, 0.1, 0.0, 0.0},
                     {0.0, 0.9, 0.0, 0.1, 0.0},
                     {0.1, 0.1, 0.6, 0.1, 0.1},
                     {0.0, 0.1, 0.1, 0.8, 0.0},
                     {0.1, 0.1, 0.0, 0.0, 0.8}};
  cfg.B = RealMatrix{{-0.1, 0.1}, {0.1, -0.2}, {0.0, -0.3}, {0.08, 0.1}, {0.2, 0.08}};
  const RealMatrix L{{2, -1, 0, -1, 0},
                     {-1, 2, -1, 0, 0},
                     {0, -1, 2, 0, -1},
                     {-1, 0, 0, 2, -1},
                     {0, 0, -1, -1, 2}};
  cfg.adjacency = adjacency_from_laplacian(L);
  ex.reference_S2 = RealMatrix{{2.551, -0.447, 0.119, -0.813, -1.069},
                               {-0.447, 4.028, 0.227, 1.356, -2.664},
                               {0.119, 0.227, 1.799, 0.740, -2.431},
                               {-0.813, 1.356, 0.740, 3.884, -3.689},
                               {-1.069, -2.664, -2.431, -3.689, 10.081}};
  auto& p = cfg.params;
  p.Q2 = RealMatrix{{1, 0, 0, 0, -1},
                    {0, 1, 0, 0, -1},
                    {0, 0, 1, 0, -1},
                    {0, 0, 0, 1, -1},
                    {-1, -1, -1, -1, 4}};
  p.alpha = 10.0;
  p.mu = 0.5;
  p.a = protocol::fit_series_weight(cfg.A, p.Q2, ex.reference_S2);
  const auto spec = graph::analyze_spectrum(graph::build_graph(cfg.adjacency));
  const double c_max = 1.0 / spec.sigma_max;
  p.c = 0.99 * c_max;
  ex.notes.push_back(fmt("stated coupling gain c = %g violates c <= 1/sigma_max(L) = %.5f; "
                         "using c = 0.99/sigma_max(L) = %.5f",
                         kSemistableStatedC, c_max, p.c));
  ex.notes.push_back(fmt("series weight a = %.6f fitted to the reference S2", p.a));
  cfg.design_mode = protocol::Mode::Semistable;

  const std::size_t M = 5, n = 5;
  cfg.boxes = rhc::InputBoxes::uniform(M, {-0.3, -0.3}, {0.3, 0.3});
  cfg.horizon = 9;
  cfg.steps = 150;
  // The slowest disagreement mode contracts by ~0.992 per step, so the
  // initial spread is kept small enough to settle inside the run.
  Uniform u(20240501);
  Vector common(n);
  for (double& v : common) v = u(-1.0, 1.0);
  cfg.X0.resize(M * n);
  for (std::size_t i = 0; i < M; ++i)
    for (std::size_t k = 0; k < n; ++k) cfg.X0[i * n + k] = common[k] + u(-1e-3, 1e-3);
  ex.notes.push_back("X0: seeded common offset in [-1,1] plus per-agent spread in [-1e-3,1e-3]");
  return ex;
}

BuiltinExample unstable() {
  BuiltinExample ex;
  ex.name = "unstable";
  auto& cfg = ex.config;
  cfg.name = "unstable";
  cfg.A = RealMatrix{{0, 1, 0}, {0, 0, 1}, {-0.2, 0.2, 1.1}};
  cfg.B = RealMatrix{{0}, {0}, {1}};
  cfg.adjacency = graph::complete_graph(5);
  ex.reference_S2 = RealMatrix{{4, 1, 3}, {1, 6, 2}, {3, 2, 10}};
  auto& p = cfg.params;
  p.Q2 = RealMatrix{{3.990, 1.027, 3.069}, {1.027, 2.833, 1.426}, {3.069, 1.426, 3.949}};
  p.alpha = 0.0274;
  p.mu = 0.5;
  p.c = 0.2;
  p.delta = 1.0;
  p.allow_boundary_c = true;
  cfg.design_mode = protocol::Mode::Unstable;

  const auto sys = protocol::make_subsystem(cfg.A, cfg.B);
  const auto spec = graph::analyze_spectrum(graph::build_graph(cfg.adjacency));
  const double dc = protocol::compute_delta_c(sys, p.alpha);
  const double res_stated =
      protocol::modified_are_residual(sys, p.Q2, p.alpha, kUnstableStatedDelta, ex.reference_S2);
  const double res_one = protocol::modified_are_residual(sys, p.Q2, p.alpha, 1.0, ex.reference_S2);
  ex.notes.push_back(fmt("stated delta = %.4f gives coupling interval [%.4f, %.4f]",
                         kUnstableStatedDelta, kUnstableStatedDelta / spec.sigma_min_nonzero,
                         1.0 / spec.sigma_max));
  ex.notes.push_back(fmt("stated delta = %.4f is below the critical value delta_c = %.4f; "
                         "the modified Riccati iteration diverges for it",
                         kUnstableStatedDelta, dc));
  ex.notes.push_back(fmt("reference S2 has modified-ARE residual %.3g at delta = %.4f and %.3g at "
                         "delta = 1; the design uses delta = 1",
                         res_stated, kUnstableStatedDelta, res_one));
  ex.notes.push_back("with delta = 1 the coupling interval collapses to c = 1/sigma_max(L) = 0.2, "
                     "so the boundary value is admitted with a ridge on R1");

  const std::size_t M = 5, n = 3;
  cfg.boxes = rhc::InputBoxes::uniform(M, {-1.0}, {1.0});
  cfg.horizon = 9;
  cfg.steps = 150;
  Uniform u(20240502);
  cfg.X0.resize(M * n);
  for (double& v : cfg.X0) v = u(-2.0, 2.0);
  ex.notes.push_back("X0: seeded uniform in [-2,2]; horizon N = 9");
  return ex;
}

std::optional<BuiltinExample> by_name(const std::string& name) {
  if (name == "semistable") return semistable();
  if (name == "unstable") return unstable();
  return std::nullopt;
}

}  // namespace crhc::examples
