#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/graph.hpp"
#include "consensus_rhc/linalg.hpp"
#include "oracles.hpp"

using namespace crhc;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidInput;
}

const RealMatrix kRingL{{2, -1, 0, -1, 0},
                        {-1, 2, -1, 0, 0},
                        {0, -1, 2, 0, -1},
                        {-1, 0, 0, 2, -1},
                        {0, 0, -1, -1, 2}};

RealMatrix adjacency_of(const RealMatrix& L) {
  RealMatrix a(L.rows(), L.cols());
  for (std::size_t i = 0; i < L.rows(); ++i)
    for (std::size_t j = 0; j < L.cols(); ++j)
      if (i != j && L(i, j) != 0) a(i, j) = 1;
  return a;
}

}  // namespace

TEST_CASE("two agents with one edge") {
  const auto g = graph::build_graph(RealMatrix{{0, 1}, {1, 0}});
  CHECK(approx_equal(g.laplacian, RealMatrix{{1, -1}, {-1, 1}}));
  CHECK(g.num_agents == 2);
}

TEST_CASE("complete graph K5") {
  const auto g = graph::build_graph(graph::complete_graph(5));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(g.laplacian(i, j) == (i == j ? 4.0 : -1.0));
  const auto s = graph::analyze_spectrum(g);
  CHECK(s.has_spanning_tree);
  CHECK(s.zero_multiplicity == 1);
  CHECK(s.sigma_min_nonzero == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(s.sigma_max == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(0.1634 / s.sigma_min_nonzero == doctest::Approx(0.0327).epsilon(1e-3));
}

TEST_CASE("five-agent ring reproduces its Laplacian and spectrum") {
  const auto g = graph::build_graph(adjacency_of(kRingL));
  CHECK(approx_equal(g.laplacian, kRingL));
  for (std::size_t i = 0; i < 5; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < 5; ++j) row += g.laplacian(i, j);
    CHECK(row == 0.0);
  }
  const auto s = graph::analyze_spectrum(g);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(oracle::to_eigen(kRingL));
  CHECK(s.sigma_max == doctest::Approx(es.eigenvalues()[4]).epsilon(1e-12));
  CHECK(s.sigma_min_nonzero == doctest::Approx(es.eigenvalues()[1]).epsilon(1e-12));
  CHECK(s.is_symmetric);
  CHECK(1.0 / s.sigma_max < 10.0);  // the stated c = 10 violates the coupling bound
  for (const auto& l : s.eigenvalues) CHECK(l.real() >= -1e-10);
}

TEST_CASE("disconnected graph has no spanning tree") {
  RealMatrix a(4, 4);
  a(0, 1) = a(1, 0) = 1;
  a(2, 3) = a(3, 2) = 1;
  const auto s = graph::analyze_spectrum(graph::build_graph(a));
  CHECK(s.zero_multiplicity == 2);
  CHECK_FALSE(s.has_spanning_tree);
}

TEST_CASE("directed path has a spanning tree") {
  const auto s = graph::analyze_spectrum(graph::build_graph(RealMatrix{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}));
  CHECK(s.has_spanning_tree);
  CHECK_FALSE(s.is_symmetric);
}

TEST_CASE("invalid adjacency matrices") {
  CHECK(kind_of([] { graph::build_graph(RealMatrix(2, 3)); }) == ErrorKind::NonSquare);
  CHECK(kind_of([] { graph::build_graph(RealMatrix{{1, 0}, {0, 0}}); }) == ErrorKind::SelfLoop);
  CHECK(kind_of([] { graph::build_graph(RealMatrix{{0, 0.5}, {1, 0}}); }) == ErrorKind::NonBinaryWeight);
}

TEST_CASE("W*L symmetrizability") {
  const auto g = graph::build_graph(adjacency_of(kRingL));
  CHECK(graph::check_WL_symmetrizable(g, 0.5 * RealMatrix::identity(5)));
  CHECK_FALSE(graph::check_WL_symmetrizable(RealMatrix{{0, 0}, {-1, 1}}, RealMatrix::identity(2)));
  CHECK(kind_of([&] { graph::check_WL_symmetrizable(g, RealMatrix::identity(3)); }) ==
        ErrorKind::DimensionMismatch);

  // Detailed balance λ_i a_ij = λ_j a_ji with weights: L = D − A_w, W = diag(λ).
  const RealMatrix aw{{0, 2, 0}, {1, 0, 3}, {0, 1.5, 0}};
  const Vector lambda{1, 2, 4};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) REQUIRE(lambda[i] * aw(i, j) == lambda[j] * aw(j, i));
  RealMatrix L(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      L(i, j) = -aw(i, j);
      L(i, i) += aw(i, j);
    }
  const RealMatrix W = RealMatrix::diagonal(lambda);
  CHECK(graph::check_WL_symmetrizable(L, W));
  CHECK(is_symmetric(W * L * L));
  CHECK_FALSE(graph::check_WL_symmetrizable(L, RealMatrix::identity(3)));
}

TEST_CASE("graph helpers") {
  CHECK(graph::analyze_spectrum(graph::build_graph(graph::ring_graph(6))).has_spanning_tree);
  CHECK(graph::analyze_spectrum(graph::build_graph(graph::path_graph(4))).has_spanning_tree);
}
