#include "consensus_rhc/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "consensus_rhc/error.hpp"

namespace crhc::linalg {

namespace {

void require_square(const RealMatrix& m, const char* what) {
  if (!m.is_square()) throw Error(ErrorKind::NonSquare, std::string(what) + " " + m.shape_string());
}

}  // namespace

bool is_semistable(const std::vector<Complex>& eigs) {
  std::size_t at_one = 0;
  for (const Complex& l : eigs) {
    const double mod = std::abs(l);
    if (mod > 1.0 + kEigTol) return false;
    if (std::abs(l - 1.0) <= kClusterTol) {
      ++at_one;
    } else if (mod >= 1.0 - kEigTol) {
      return false;  // on the unit circle away from 1
    }
  }
  return at_one <= 1;
}

SpectralSummary eig(const RealMatrix& m) {
  SpectralSummary s;
  s.eigenvalues = eigenvalues(m);
  for (const Complex& l : s.eigenvalues) {
    s.spectral_radius = std::max(s.spectral_radius, std::abs(l));
    if (std::abs(l) > 1.0 + kEigTol) s.unstable_eigenvalues.push_back(l);
  }
  s.is_semistable = is_semistable(s.eigenvalues);
  return s;
}

double min_eigenvalue_sym(const RealMatrix& m) {
  if (m.rows() == 0) return 0.0;
  return sym_eig(m).values.front();
}

double max_eigenvalue_sym(const RealMatrix& m) {
  if (m.rows() == 0) return 0.0;
  return sym_eig(m).values.back();
}

std::size_t rank(const RealMatrix& m, double rel_cutoff) {
  if (m.empty()) return 0;
  const Svd s = svd(m);
  if (s.sigma.empty() || s.sigma.front() == 0.0) return 0;
  const double cut = rel_cutoff * s.sigma.front();
  return static_cast<std::size_t>(
      std::count_if(s.sigma.begin(), s.sigma.end(), [cut](double v) { return v > cut; }));
}

RealMatrix null_space(const RealMatrix& m, double rel_cutoff) {
  const std::size_t n = m.cols();
  if (n == 0) return RealMatrix(0, 0);
  RealMatrix padded = m;
  if (m.rows() < n) {
    padded = RealMatrix(n, n);
    padded.set_block(0, 0, m);
  }
  const Svd s = svd(padded);
  const double cut = s.sigma.front() > 0.0 ? rel_cutoff * s.sigma.front() : 0.0;
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < s.sigma.size(); ++k)
    if (s.sigma[k] <= cut) keep.push_back(k);
  RealMatrix basis(n, keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) basis(i, c) = s.v(i, keep[c]);
  return basis;
}

Lu::Lu(const RealMatrix& m) : lu_(m), perm_(m.rows()) {
  require_square(m, "lu");
  const std::size_t n = m.rows();
  for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
  const double scale = std::max(max_abs(m), 1e-300);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(lu_(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        piv = i;
      }
    }
    if (best <= 1e-14 * scale) {
      singular_ = true;
      if (best == 0.0) continue;
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
      std::swap(perm_[k], perm_[piv]);
      sign_ = -sign_;
    }
    const double inv = 1.0 / lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu_(i, k) * inv;
      lu_(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
}

double Lu::determinant() const {
  double d = sign_;
  for (std::size_t i = 0; i < lu_.rows(); ++i) d *= lu_(i, i);
  return d;
}

Vector Lu::solve(std::span<const double> b) const {
  if (singular_) throw Error(ErrorKind::NumericalFailure, "LU solve with singular matrix");
  const std::size_t n = lu_.rows();
  if (b.size() != n) throw Error(ErrorKind::DimensionMismatch, "lu solve");
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t j = ii + 1; j < n; ++j) x[ii] -= lu_(ii, j) * x[j];
    x[ii] /= lu_(ii, ii);
  }
  return x;
}

RealMatrix Lu::solve(const RealMatrix& b) const {
  if (b.rows() != lu_.rows()) throw Error(ErrorKind::DimensionMismatch, "lu solve");
  RealMatrix x(b.rows(), b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    const Vector col = solve(b.col(c));
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, c) = col[i];
  }
  return x;
}

RealMatrix inverse(const RealMatrix& m) {
  return Lu(m).solve(RealMatrix::identity(m.rows()));
}

double determinant(const RealMatrix& m) { return Lu(m).determinant(); }

std::optional<RealMatrix> cholesky(const RealMatrix& m) {
  require_square(m, "cholesky");
  const std::size_t n = m.rows();
  RealMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = m(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Vector cholesky_solve(const RealMatrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) x[i] -= l(i, k) * x[k];
    x[i] /= l(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) x[ii] -= l(k, ii) * x[k];
    x[ii] /= l(ii, ii);
  }
  return x;
}

RealMatrix group_inverse(const RealMatrix& m) {
  require_square(m, "group_inverse");
  const std::size_t n = m.rows();
  const Svd s = svd(m);
  const double cut = s.sigma.empty() ? 0.0 : kRankTol * s.sigma.front();
  std::size_t r = 0;
  while (r < s.sigma.size() && s.sigma[r] > cut && s.sigma[r] > 0.0) ++r;
  if (r == 0) return RealMatrix(n, n);
  if (rank(m * m) != r)
    throw Error(ErrorKind::IndexTooHigh, "rank(m) != rank(m^2); index exceeds 1");
  RealMatrix f(n, r), g(r, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < r; ++k) {
      f(i, k) = s.u(i, k) * s.sigma[k];
      g(k, i) = s.v(i, k);
    }
  const RealMatrix gf = g * f;
  const Svd core = svd(gf);
  if (core.sigma.back() <= 1e-12 * core.sigma.front())
    throw Error(ErrorKind::SingularCore, "G*F numerically singular");
  const RealMatrix gf_inv = inverse(gf);
  return f * (gf_inv * gf_inv) * g;
}

RealMatrix kron(const RealMatrix& a, const RealMatrix& b) {
  RealMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return k;
}

RealMatrix stein_series(const RealMatrix& a, const RealMatrix& q) {
  require_square(a, "stein_series");
  if (q.rows() != a.rows() || q.cols() != a.cols())
    throw Error(ErrorKind::DimensionMismatch, "stein_series q shape");
  const double qn = frobenius_norm(q);
  RealMatrix sigma = symmetrize(q);
  RealMatrix p = a;
  bool converged = false;
  for (int k = 0; k < 60; ++k) {
    const RealMatrix inc = symmetrize(transpose_times(p, sigma * p));
    sigma += inc;
    p = p * p;
    const double sn = frobenius_norm(sigma);
    if (!sigma.all_finite() || sn > 1e15 * (1.0 + qn))
      throw Error(ErrorKind::Diverged, "Stein series diverges");
    if (frobenius_norm(inc) < 1e-13 * std::max(1.0, sn)) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorKind::Diverged, "Stein series did not converge in 60 doublings");
  const RealMatrix res = transpose_times(a, sigma * a) - sigma + q;
  if (frobenius_norm(res) > 1e-8 * (1.0 + frobenius_norm(sigma)))
    throw Error(ErrorKind::Diverged, "Stein series residual too large");
  return sigma;
}

RealMatrix pinv(const RealMatrix& m) {
  if (m.empty()) return RealMatrix(m.cols(), m.rows());
  if (is_symmetric(m, 1e-12)) {
    const SymEig e = sym_eig(m);
    double big = 0.0;
    for (double v : e.values) big = std::max(big, std::abs(v));
    const std::size_t n = m.rows();
    RealMatrix out(n, n);
    if (big == 0.0) return out;
    for (std::size_t k = 0; k < n; ++k) {
      const double lam = e.values[k];
      if (std::abs(lam) < 1e-10 * big) continue;
      const double inv = 1.0 / lam;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(i, j) += inv * e.vectors(i, k) * e.vectors(j, k);
    }
    return symmetrize(out);
  }
  const Svd s = svd(m);
  RealMatrix out(m.cols(), m.rows());
  if (s.sigma.front() == 0.0) return out;
  for (std::size_t k = 0; k < s.sigma.size(); ++k) {
    if (s.sigma[k] < 1e-10 * s.sigma.front()) continue;
    const double inv = 1.0 / s.sigma[k];
    for (std::size_t i = 0; i < m.cols(); ++i)
      for (std::size_t j = 0; j < m.rows(); ++j) out(i, j) += inv * s.v(i, k) * s.u(j, k);
  }
  return out;
}

RealMatrix matrix_power(const RealMatrix& m, unsigned p) {
  require_square(m, "matrix_power");
  RealMatrix result = RealMatrix::identity(m.rows());
  RealMatrix base = m;
  while (p > 0) {
    if (p & 1u) result = result * base;
    p >>= 1u;
    if (p > 0) base = base * base;
  }
  return result;
}

RealMatrix psd_factor(const RealMatrix& m, double drop) {
  require_square(m, "psd_factor");
  const SymEig e = sym_eig(m);
  std::vector<std::size_t> keep;
  for (std::size_t k = e.values.size(); k-- > 0;)
    if (e.values[k] >= drop) keep.push_back(k);
  RealMatrix c(keep.size(), m.rows());
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const double s = std::sqrt(e.values[keep[r]]);
    for (std::size_t j = 0; j < m.rows(); ++j) c(r, j) = s * e.vectors(j, keep[r]);
  }
  return c;
}

bool is_psd(const RealMatrix& m, double tol) {
  if (!is_symmetric(m)) return false;
  return min_eigenvalue_sym(m) >= -tol * std::max(1.0, max_abs(m));
}

bool is_pd(const RealMatrix& m, double tol) {
  if (!is_symmetric(m)) return false;
  return min_eigenvalue_sym(m) > tol;
}

std::size_t controllability_rank(const RealMatrix& a, const RealMatrix& b) {
  require_square(a, "controllability");
  if (b.rows() != a.rows()) throw Error(ErrorKind::DimensionMismatch, "controllability B rows");
  const std::size_t n = a.rows(), m = b.cols();
  RealMatrix ctrb(n, n * m);
  RealMatrix blk = b;
  for (std::size_t k = 0; k < n; ++k) {
    ctrb.set_block(0, k * m, blk);
    blk = a * blk;
  }
  return rank(ctrb);
}

std::size_t observability_rank(const RealMatrix& c, const RealMatrix& a) {
  return controllability_rank(a.transpose(), c.transpose());
}

}  // namespace crhc::linalg
