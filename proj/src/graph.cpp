#include "consensus_rhc/graph.hpp"

#include <cmath>

#include "consensus_rhc/error.hpp"

namespace crhc::graph {

namespace {

bool symmetric_within(const RealMatrix& x) {
  return frobenius_norm(x - x.transpose()) <= 1e-9 * (1.0 + frobenius_norm(x));
}

}  // namespace

GraphModel build_graph(const RealMatrix& adjacency) {
  if (!adjacency.is_square())
    throw Error(ErrorKind::NonSquare, "adjacency " + adjacency.shape_string());
  const std::size_t m = adjacency.rows();
  GraphModel g;
  g.num_agents = m;
  g.adjacency = adjacency;
  g.laplacian = RealMatrix(m, m);
  g.degree.assign(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    if (adjacency(i, i) != 0.0)
      throw Error(ErrorKind::SelfLoop, "self loop at agent " + std::to_string(i));
    for (std::size_t j = 0; j < m; ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0)
        throw Error(ErrorKind::NonBinaryWeight,
                    "adjacency(" + std::to_string(i) + "," + std::to_string(j) + ") is not 0/1");
      if (a == 1.0) {
        ++g.degree[i];
        g.laplacian(i, j) = -1.0;
      }
    }
    g.laplacian(i, i) = g.degree[i];
  }
  return g;
}

LaplacianSpectrum analyze_spectrum(const GraphModel& g) {
  LaplacianSpectrum s;
  s.is_symmetric = is_symmetric(g.laplacian, 0.0);
  s.eigenvalues = linalg::eigenvalues(g.laplacian);
  double lo = 0.0, hi = 0.0;
  for (const auto& l : s.eigenvalues) {
    const double mod = std::abs(l);
    if (mod <= linalg::kClusterTol) {
      ++s.zero_multiplicity;
      continue;
    }
    hi = std::max(hi, mod);
    lo = (lo == 0.0) ? mod : std::min(lo, mod);
  }
  s.sigma_min_nonzero = lo;
  s.sigma_max = hi;
  s.has_spanning_tree = s.zero_multiplicity == 1;
  return s;
}

bool check_WL_symmetrizable(const RealMatrix& laplacian, const RealMatrix& w) {
  if (w.rows() != laplacian.rows() || w.cols() != laplacian.cols())
    throw Error(ErrorKind::DimensionMismatch,
                "W " + w.shape_string() + " vs L " + laplacian.shape_string());
  if (!symmetric_within(w)) throw Error(ErrorKind::InvalidInput, "W must be symmetric");
  const RealMatrix wl = w * laplacian;
  if (!symmetric_within(wl)) return false;
  return symmetric_within(wl * laplacian);
}

bool check_WL_symmetrizable(const GraphModel& g, const RealMatrix& w) {
  return check_WL_symmetrizable(g.laplacian, w);
}

RealMatrix complete_graph(std::size_t m) {
  RealMatrix a(m, m, 1.0);
  for (std::size_t i = 0; i < m; ++i) a(i, i) = 0.0;
  return a;
}

RealMatrix ring_graph(std::size_t m) {
  RealMatrix a(m, m);
  if (m < 2) return a;
  for (std::size_t i = 0; i < m; ++i) {
    a(i, (i + 1) % m) = 1.0;
    a((i + 1) % m, i) = 1.0;
  }
  return a;
}

RealMatrix path_graph(std::size_t m) {
  RealMatrix a(m, m);
  for (std::size_t i = 0; i + 1 < m; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
  return a;
}

}  // namespace crhc::graph
