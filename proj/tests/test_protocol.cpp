#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/examples.hpp"
#include "consensus_rhc/graph.hpp"
#include "consensus_rhc/linalg.hpp"
#include "consensus_rhc/protocol.hpp"
#include "oracles.hpp"

using namespace crhc;
using protocol::DesignParams;

namespace {

template <class F>
Error catch_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(ErrorKind::InvalidInput, "");
}

struct Fixture {
  examples::BuiltinExample ex;
  protocol::SubsystemModel sys;
  graph::GraphModel g;
  explicit Fixture(examples::BuiltinExample e)
      : ex(std::move(e)),
        sys(protocol::make_subsystem(ex.config.A, ex.config.B)),
        g(graph::build_graph(ex.config.adjacency)) {}
};

std::size_t kernel_dim(const RealMatrix& m) { return m.cols() - linalg::rank(m); }

}  // namespace

TEST_CASE("subsystem validation") {
  CHECK(catch_error([] { protocol::make_subsystem(RealMatrix::identity(2), RealMatrix{{1}, {0}}); }).kind() ==
        ErrorKind::NotControllable);
  CHECK(catch_error([] { protocol::make_subsystem(RealMatrix::identity(2), RealMatrix{{1, 2}, {2, 4}}); }).kind() ==
        ErrorKind::RankDeficientB);
  CHECK(protocol::make_subsystem(RealMatrix{{0.5}}, RealMatrix{{1}}).classification ==
        protocol::Classification::Stable);
  CHECK(protocol::make_subsystem(RealMatrix{{2}}, RealMatrix{{1}}).classification ==
        protocol::Classification::Unstable);
}

TEST_CASE("semi-observability") {
  CHECK(protocol::check_semi_observable(RealMatrix::identity(2), RealMatrix{{0.5, 0}, {0, 0.2}}));
  CHECK_FALSE(protocol::check_semi_observable(RealMatrix{{1, 0}}, RealMatrix::identity(2)));
  Fixture f(examples::semistable());
  const RealMatrix c2 = linalg::psd_factor(f.ex.config.params.Q2);
  CHECK(c2.rows() == 4);
  CHECK(protocol::check_semi_observable(c2, f.ex.config.A));
}

TEST_CASE("semistable Lyapunov-like equation") {
  {
    const auto sys = protocol::make_subsystem(RealMatrix{{0}}, RealMatrix{{1}});
    CHECK(approx_equal(protocol::solve_semistable_lyapunov(sys, RealMatrix{{1}}, 1.0), RealMatrix{{1}}));
  }
  {
    const auto sys = protocol::make_subsystem(RealMatrix{{1}}, RealMatrix{{1}});
    CHECK(approx_equal(protocol::solve_semistable_lyapunov(sys, RealMatrix{{0}}, 2.0), RealMatrix{{2}}));
  }
  Fixture f(examples::semistable());
  const RealMatrix S2 = protocol::solve_semistable_lyapunov(f.sys, f.ex.config.params.Q2, f.ex.config.params.a);
  CHECK(max_abs(S2 - f.ex.reference_S2) <= 5e-3);
  CHECK(protocol::lyapunov_residual(f.sys.A, f.ex.config.params.Q2, S2) <= 1e-7);
  CHECK(linalg::min_eigenvalue_sym(S2) > 0.0);
  CHECK(f.ex.config.params.a == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(catch_error([] {
          const auto sys = protocol::make_subsystem(RealMatrix{{2}}, RealMatrix{{1}});
          protocol::solve_semistable_lyapunov(sys, RealMatrix{{1}}, 1.0);
        }).kind() == ErrorKind::NotSemistable);
}

TEST_CASE("semistable design on the ring example") {
  Fixture f(examples::semistable());
  const auto d = protocol::design_semistable(f.sys, f.g, f.ex.config.params);
  CHECK(d.are_residual <= 1e-7);
  CHECK(protocol::verify_global_are(d, f.sys, f.g) <= 1e-7);

  const RealMatrix K2b = (-1.0 / (1.0 + d.alpha)) *
                         linalg::Lu(transpose_times(f.sys.B, d.S2 * f.sys.B)).solve(transpose_times(f.sys.B, d.S2 * f.sys.A));
  CHECK(max_abs(d.K2 - K2b) <= 1e-10);
  const RealMatrix lhs = linalg::inverse(d.S1 + d.alpha * d.R1) * d.S1;
  CHECK(max_abs(lhs - (d.c / (1.0 + d.alpha)) * d.laplacian) <= 1e-9);
  CHECK(max_abs(protocol::optimal_global_gain(d, f.sys, 5) - d.Kg) <= 1e-7);

  Vector consensus;
  for (int i = 0; i < 5; ++i)
    for (double v : {0.3, -1.0, 2.0, 0.5, 1.5}) consensus.push_back(v);
  CHECK(norm_inf(d.Qg * consensus) <= 1e-10);
  CHECK(norm_inf(d.Kg * consensus) <= 1e-10);
  CHECK(linalg::is_psd(d.Qg));
  CHECK(kernel_dim(d.Qg) == 5);
  for (double r : protocol::consensus_mode_radii(d, f.sys)) CHECK(r < 1.0 - 1e-9);

  // stated c = 10 violates the coupling bound
  DesignParams p = f.ex.config.params;
  p.c = examples::kSemistableStatedC;
  const Error e = catch_error([&] { protocol::design_semistable(f.sys, f.g, p); });
  CHECK(e.condition_index() == 6);
  const auto out = protocol::synthesize(f.sys, f.g, p, protocol::Mode::Semistable);
  CHECK_FALSE(out.design);
  CHECK(out.report.first_failure()->index == 6);
}

TEST_CASE("semistable design edge cases") {
  // n = 1: rank(C2) = n-1 = 0 forces Q2 = 0.
  const auto sys = protocol::make_subsystem(RealMatrix{{1}}, RealMatrix{{1}});
  const auto g = graph::build_graph(graph::path_graph(2));
  DesignParams p;
  p.alpha = 1;
  p.c = 0.1;
  p.Q2 = RealMatrix{{0}};
  const Error e = catch_error([&] { protocol::design_semistable(sys, g, p); });
  CHECK(e.condition_index() == 1);

  // random strictly stable A on K3
  std::mt19937_64 rng(21);
  const auto k3 = graph::build_graph(graph::complete_graph(3));
  for (int trial = 0; trial < 10; ++trial) {
    RealMatrix A = oracle::random_matrix(rng, 3, 3);
    A *= 0.8 / linalg::eig(A).spectral_radius;
    const RealMatrix B = oracle::random_matrix(rng, 3, 1);
    const auto s = protocol::make_subsystem(A, B);
    DesignParams q;
    q.alpha = 2.0;
    q.c = 0.2;
    q.Q2 = oracle::random_spd(rng, 3, 0.2);
    const auto d = protocol::design_semistable(s, k3, q);
    CHECK(d.are_residual <= 1e-7);
    CHECK(linalg::is_psd(d.Qg));
  }

  // directed chain with W = I fails condition 3
  const auto chain = graph::build_graph(RealMatrix{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
  Fixture f(examples::semistable());
  DesignParams q = f.ex.config.params;
  q.c = 0.1;
  const auto sys3 = protocol::make_subsystem(RealMatrix{{0.5}}, RealMatrix{{1}});
  q.Q2 = RealMatrix{{1}};
  const auto out = protocol::synthesize(sys3, chain, q, protocol::Mode::Semistable);
  CHECK(out.report.first_failure()->index == 3);
}

TEST_CASE("critical delta closed forms") {
  {
    const auto sys = protocol::make_subsystem(RealMatrix{{2}}, RealMatrix{{1}});
    CHECK(protocol::compute_delta_c(sys, 0.0) == doctest::Approx(0.75));
    CHECK(protocol::compute_delta_c(sys, 0.5) == doctest::Approx(1.5 * 0.75));
  }
  {
    const auto sys = protocol::make_subsystem(RealMatrix{{2, 0}, {0, 0.5}}, RealMatrix::identity(2));
    CHECK(protocol::compute_delta_c(sys, 0.0) == doctest::Approx(0.75));
  }
  Fixture f(examples::unstable());
  const auto roots = oracle::real_roots({1.0, -1.1, -0.2, 0.2}, 1.0, 3.0);
  REQUIRE(roots.size() == 1);
  const double alpha = f.ex.config.params.alpha;
  const double expect = (1.0 + alpha) * (1.0 - 1.0 / (roots[0] * roots[0]));
  CHECK(protocol::compute_delta_c(f.sys, alpha) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(protocol::compute_delta_c(f.sys, alpha) > examples::kUnstableStatedDelta);

  CHECK(catch_error([] {
          protocol::compute_delta_c(protocol::make_subsystem(RealMatrix{{0.5}}, RealMatrix{{1}}), 0.1);
        }).kind() == ErrorKind::NoUnstableEigenvalue);
  CHECK(catch_error([] {
          const RealMatrix A{{1.5, 0, 0}, {0, 1.2, 0}, {0, 0, 0.3}};
          const RealMatrix B{{1, 0}, {0, 1}, {1, 1}};
          protocol::compute_delta_c(protocol::make_subsystem(A, B), 0.1);
        }).kind() == ErrorKind::GeneralBUnsupported);
}

TEST_CASE("modified Riccati equation") {
  {
    // scalar: S = a²S + q − γa²S  ⇒  S = q / (1 − a²(1 − γ))
    const auto sys = protocol::make_subsystem(RealMatrix{{0.5}}, RealMatrix{{1}});
    for (double delta : {1.0, 0.6, 0.0}) {
      const RealMatrix S = protocol::solve_modified_are(sys, RealMatrix{{1}}, 0.0, delta);
      CHECK(S(0, 0) == doctest::Approx(1.0 / (1.0 - 0.25 * (1.0 - delta))).epsilon(1e-10));
      CHECK(protocol::modified_are_residual(sys, RealMatrix{{1}}, 0.0, delta, S) <= 1e-10);
    }
  }
  {
    std::mt19937_64 rng(22);
    RealMatrix A = oracle::random_matrix(rng, 3, 3);
    A *= 0.7 / linalg::eig(A).spectral_radius;
    const auto sys = protocol::make_subsystem(A, oracle::random_matrix(rng, 3, 1));
    const RealMatrix Q = oracle::random_spd(rng, 3, 0.3);
    CHECK(max_abs(protocol::solve_modified_are(sys, Q, 0.3, 0.0) - linalg::stein_series(A, Q)) <= 1e-9);
  }
  Fixture f(examples::unstable());
  const auto& p = f.ex.config.params;
  protocol::ModifiedAreStats stats;
  stats.track_monotonicity = true;
  const RealMatrix S = protocol::solve_modified_are(f.sys, p.Q2, p.alpha, 1.0, &stats);
  CHECK(stats.min_increment_eig >= -1e-9);
  CHECK(protocol::modified_are_residual(f.sys, p.Q2, p.alpha, 1.0, S) <= 1e-8);
  CHECK(max_abs(S - f.ex.reference_S2) <= 5e-3);
  // the stated delta sits below delta_c
  CHECK(catch_error([&] {
          protocol::solve_modified_are(f.sys, p.Q2, p.alpha, examples::kUnstableStatedDelta);
        }).kind() == ErrorKind::Diverged);
}

TEST_CASE("unstable design on K5") {
  Fixture f(examples::unstable());
  const auto d = protocol::design_unstable(f.sys, f.g, f.ex.config.params);
  CHECK(d.are_residual <= 1e-7);
  CHECK(d.r1_ridge == 1e-8);
  CHECK(kernel_dim(d.Qg) == 3);
  CHECK(kernel_dim(linalg::kron(d.laplacian, RealMatrix::identity(3))) == 3);
  CHECK(linalg::is_psd(d.Qg));
  CHECK(max_abs(protocol::optimal_global_gain(d, f.sys, 5) - d.Kg) <= 1e-7);

  // boundary c without the override is rejected
  DesignParams strict = f.ex.config.params;
  strict.allow_boundary_c = false;
  CHECK(catch_error([&] { protocol::design_unstable(f.sys, f.g, strict); }).condition_index() == 6);

  // stated delta: coupling interval [0.0327, 0.2]
  DesignParams stated = f.ex.config.params;
  stated.delta = examples::kUnstableStatedDelta;
  const auto out = protocol::synthesize(f.sys, f.g, stated, protocol::Mode::Unstable);
  CHECK(out.report.c_lower == doctest::Approx(0.0327).epsilon(1e-3));
  CHECK(out.report.c_upper == doctest::Approx(0.2).epsilon(1e-9));
  CHECK_FALSE(out.report.conditions[1].passed);

  // crossing bounds: path graph P3 has sigma_min = 1, sigma_max = 3
  const auto p3 = graph::build_graph(graph::path_graph(3));
  DesignParams cross = f.ex.config.params;
  cross.delta = 0.5;
  cross.c = 0.3;
  const Error e = catch_error([&] { protocol::design_unstable(f.sys, p3, cross); });
  CHECK(e.kind() == ErrorKind::InfeasibleCoupling);
}

TEST_CASE("random unstable rank-one systems on K3") {
  std::mt19937_64 rng(23);
  const auto k3 = graph::build_graph(graph::complete_graph(3));
  int built = 0;
  for (int trial = 0; trial < 30 && built < 10; ++trial) {
    const RealMatrix A{{1.0 + 0.2 * std::uniform_real_distribution<double>(0, 1)(rng), 0.3},
                       {0.0, std::uniform_real_distribution<double>(-0.8, 0.8)(rng)}};
    const RealMatrix B = oracle::random_matrix(rng, 2, 1);
    protocol::SubsystemModel sys;
    try {
      sys = protocol::make_subsystem(A, B);
    } catch (const Error&) {
      continue;
    }
    DesignParams p;
    p.alpha = 0.1;
    p.mu = 1.0;
    const double dc = protocol::compute_delta_c(sys, p.alpha);
    if (dc + 0.05 > 1.0) continue;
    p.delta = dc + 0.05;
    p.c = 0.5 * (*p.delta / 3.0 + 1.0 / 3.0);
    p.Q2 = oracle::random_spd(rng, 2, 0.5);
    const auto d = protocol::design_unstable(sys, k3, p);
    CHECK(d.are_residual <= 1e-7);
    ++built;
  }
  CHECK(built >= 5);
}

TEST_CASE("global ARE residual reacts to perturbation") {
  Fixture f(examples::unstable());
  auto d = protocol::design_unstable(f.sys, f.g, f.ex.config.params);
  const double base = protocol::verify_global_are(d, f.sys, f.g);
  d.Sg *= 1.01;
  CHECK(protocol::verify_global_are(d, f.sys, f.g) >= 10.0 * std::max(base, 1e-12));

  protocol::ProtocolDesign z;
  z.Sg = RealMatrix(4, 4);
  z.Qg = RealMatrix(4, 4);
  z.Rg = RealMatrix::identity(2);
  const auto sys = protocol::make_subsystem(RealMatrix{{0.5, 0}, {0.1, 0.3}}, RealMatrix{{1}, {0}});
  CHECK(protocol::verify_global_are(z, sys, graph::build_graph(graph::path_graph(2))) == 0.0);
}
