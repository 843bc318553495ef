#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "consensus_rhc/matrix.hpp"

namespace crhc::linalg {

inline constexpr double kEigTol = 1e-10;
// Eigenvalues closer than this are treated as one cluster.
inline constexpr double kClusterTol = 1e-7;
// Singular values below this fraction of σ_max count as zero.
inline constexpr double kRankTol = 1e-9;

using Complex = std::complex<double>;

struct SpectralSummary {
  std::vector<Complex> eigenvalues;
  double spectral_radius = 0.0;
  bool is_semistable = false;
  std::vector<Complex> unstable_eigenvalues;
};

SpectralSummary eig(const RealMatrix& m);
// Eigenvalues of a general square matrix, sorted by descending modulus.
std::vector<Complex> eigenvalues(const RealMatrix& m);
// Eigenvalues of an n×n complex matrix Re + i·Im via the real 2n×2n embedding.
std::vector<Complex> complex_eigenvalues(const RealMatrix& re, const RealMatrix& im);
bool is_semistable(const std::vector<Complex>& eigs);

struct SymEig {
  Vector values;        // ascending
  RealMatrix vectors;   // columns are orthonormal eigenvectors
};
SymEig sym_eig(const RealMatrix& m);
double min_eigenvalue_sym(const RealMatrix& m);
double max_eigenvalue_sym(const RealMatrix& m);

struct Svd {
  RealMatrix u;    // m×k
  Vector sigma;    // k, descending
  RealMatrix v;    // n×k
};
// Thin SVD, k = min(rows, cols).
Svd svd(const RealMatrix& m);
std::size_t rank(const RealMatrix& m, double rel_cutoff = kRankTol);
// Orthonormal basis of Ker(m) as columns.
RealMatrix null_space(const RealMatrix& m, double rel_cutoff = kRankTol);

class Lu {
 public:
  explicit Lu(const RealMatrix& m);
  bool singular() const noexcept { return singular_; }
  double determinant() const;
  Vector solve(std::span<const double> b) const;
  RealMatrix solve(const RealMatrix& b) const;

 private:
  RealMatrix lu_;
  std::vector<std::size_t> perm_;
  int sign_ = 1;
  bool singular_ = false;
};

RealMatrix inverse(const RealMatrix& m);
double determinant(const RealMatrix& m);

// Lower-triangular L with L·Lᵀ = m; nullopt when m is not numerically PD.
std::optional<RealMatrix> cholesky(const RealMatrix& m);
Vector cholesky_solve(const RealMatrix& l, std::span<const double> b);

RealMatrix group_inverse(const RealMatrix& m);
RealMatrix kron(const RealMatrix& a, const RealMatrix& b);
// Σ_k (aᵏ)ᵀ q aᵏ by Smith doubling.
RealMatrix stein_series(const RealMatrix& a, const RealMatrix& q);
RealMatrix pinv(const RealMatrix& m);
RealMatrix matrix_power(const RealMatrix& m, unsigned p);

// C with CᵀC = m for symmetric PSD m; rows = numerical rank.
RealMatrix psd_factor(const RealMatrix& m, double drop = 1e-10);
bool is_psd(const RealMatrix& m, double tol = 1e-9);
bool is_pd(const RealMatrix& m, double tol = 0.0);

// rank [B, AB, …, Aⁿ⁻¹B]
std::size_t controllability_rank(const RealMatrix& a, const RealMatrix& b);
// rank [C; CA; …; CAⁿ⁻¹]
std::size_t observability_rank(const RealMatrix& c, const RealMatrix& a);

}  // namespace crhc::linalg
