#pragma once

#include <cstddef>
#include <vector>

#include "consensus_rhc/linalg.hpp"
#include "consensus_rhc/matrix.hpp"

namespace crhc::graph {

// a(i,j) = 1 means agent i receives information from agent j.
struct GraphModel {
  std::size_t num_agents = 0;
  RealMatrix adjacency;
  RealMatrix laplacian;
  std::vector<int> degree;
};

struct LaplacianSpectrum {
  std::vector<linalg::Complex> eigenvalues;
  double sigma_min_nonzero = 0.0;
  double sigma_max = 0.0;
  bool has_spanning_tree = false;
  bool is_symmetric = false;
  int zero_multiplicity = 0;
};

GraphModel build_graph(const RealMatrix& adjacency);
LaplacianSpectrum analyze_spectrum(const GraphModel& g);

// True iff W·L is symmetric (and then W·L² as well).
bool check_WL_symmetrizable(const GraphModel& g, const RealMatrix& w);
bool check_WL_symmetrizable(const RealMatrix& laplacian, const RealMatrix& w);

// Undirected helpers used by tests and built-in scenarios.
RealMatrix complete_graph(std::size_t m);
RealMatrix ring_graph(std::size_t m);
RealMatrix path_graph(std::size_t m);

}  // namespace crhc::graph
