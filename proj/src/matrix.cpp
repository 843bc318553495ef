#include "consensus_rhc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "consensus_rhc/error.hpp"
#include "consensus_rhc/simd.hpp"

namespace crhc {

namespace {

void require_same_shape(const RealMatrix& a, const RealMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
}

}  // namespace

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

RealMatrix::RealMatrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorKind::DimensionMismatch, "ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

RealMatrix RealMatrix::identity(std::size_t n) {
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

RealMatrix RealMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  RealMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != m.cols_) throw Error(ErrorKind::DimensionMismatch, "ragged rows");
    std::copy(rows[i].begin(), rows[i].end(), m.data_.begin() + i * m.cols_);
  }
  return m;
}

RealMatrix RealMatrix::column(std::span<const double> v) {
  RealMatrix m(v.size(), 1);
  std::copy(v.begin(), v.end(), m.data_.begin());
  return m;
}

RealMatrix RealMatrix::diagonal(std::span<const double> d) {
  RealMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vector RealMatrix::col(std::size_t j) const {
  Vector v(rows_);
  for (std::size_t i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
  return v;
}

RealMatrix RealMatrix::transpose() const {
  RealMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

RealMatrix RealMatrix::block(std::size_t r0, std::size_t c0, std::size_t nr,
                             std::size_t nc) const {
  if (r0 + nr > rows_ || c0 + nc > cols_)
    throw Error(ErrorKind::DimensionMismatch, "block out of range");
  RealMatrix b(nr, nc);
  for (std::size_t i = 0; i < nr; ++i)
    std::copy_n(data_.begin() + (r0 + i) * cols_ + c0, nc, b.data_.begin() + i * nc);
  return b;
}

void RealMatrix::set_block(std::size_t r0, std::size_t c0, const RealMatrix& b) {
  if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_)
    throw Error(ErrorKind::DimensionMismatch, "set_block out of range");
  for (std::size_t i = 0; i < b.rows_; ++i)
    std::copy_n(b.data_.begin() + i * b.cols_, b.cols_, data_.begin() + (r0 + i) * cols_ + c0);
}

void RealMatrix::add_block(std::size_t r0, std::size_t c0, const RealMatrix& b, double scale) {
  if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_)
    throw Error(ErrorKind::DimensionMismatch, "add_block out of range");
  for (std::size_t i = 0; i < b.rows_; ++i)
    for (std::size_t j = 0; j < b.cols_; ++j) (*this)(r0 + i, c0 + j) += scale * b(i, j);
}

std::vector<std::vector<double>> RealMatrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

RealMatrix& RealMatrix::operator+=(const RealMatrix& o) {
  require_same_shape(*this, o, "operator+");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

RealMatrix& RealMatrix::operator-=(const RealMatrix& o) {
  require_same_shape(*this, o, "operator-");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

RealMatrix& RealMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

bool RealMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string RealMatrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

RealMatrix operator+(RealMatrix a, const RealMatrix& b) { return a += b; }
RealMatrix operator-(RealMatrix a, const RealMatrix& b) { return a -= b; }
RealMatrix operator-(RealMatrix a) { return a *= -1.0; }
RealMatrix operator*(double s, RealMatrix a) { return a *= s; }
RealMatrix operator*(RealMatrix a, double s) { return a *= s; }

RealMatrix operator*(const RealMatrix& a, const RealMatrix& b) {
  if (a.cols() != b.rows())
    throw Error(ErrorKind::DimensionMismatch,
                "matmul " + a.shape_string() + " * " + b.shape_string());
  RealMatrix c(a.rows(), b.cols());
  if (c.empty() || a.cols() == 0) return c;
  simd::gemm(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  return c;
}

Vector operator*(const RealMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size())
    throw Error(ErrorKind::DimensionMismatch, "matvec " + a.shape_string());
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = simd::dot(a.row(i).data(), x.data(), x.size());
  return y;
}

RealMatrix transpose_times(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows())
    throw Error(ErrorKind::DimensionMismatch, "transpose_times shape");
  RealMatrix c(a.cols(), b.cols());
  for (std::size_t p = 0; p < a.rows(); ++p) {
    const double* bp = b.row(p).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double api = a(p, i);
      if (api != 0.0) simd::axpy(api, bp, c.row(i).data(), b.cols());
    }
  }
  return c;
}

Vector transpose_times(const RealMatrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw Error(ErrorKind::DimensionMismatch, "transpose_times vec");
  Vector y(a.cols(), 0.0);
  for (std::size_t p = 0; p < a.rows(); ++p)
    if (x[p] != 0.0) simd::axpy(x[p], a.row(p).data(), y.data(), a.cols());
  return y;
}

double frobenius_norm(const RealMatrix& m) {
  return std::sqrt(simd::dot(m.data(), m.data(), m.size()));
}

double max_abs(const RealMatrix& m) {
  double r = 0.0;
  for (double v : m.values()) r = std::max(r, std::abs(v));
  return r;
}

double trace(const RealMatrix& m) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
  return t;
}

bool is_symmetric(const RealMatrix& m, double rel_tol) {
  if (!m.is_square()) return false;
  double diff = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double d = m(i, j) - m(j, i);
      diff += 2.0 * d * d;
    }
  return std::sqrt(diff) <= rel_tol * (1.0 + frobenius_norm(m));
}

RealMatrix symmetrize(const RealMatrix& m) {
  if (!m.is_square()) throw Error(ErrorKind::NonSquare, "symmetrize");
  RealMatrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

double quad_form(const RealMatrix& m, std::span<const double> x) {
  if (m.rows() != x.size() || m.cols() != x.size())
    throw Error(ErrorKind::DimensionMismatch, "quad_form");
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    if (x[i] != 0.0) s += x[i] * simd::dot(m.row(i).data(), x.data(), x.size());
  return s;
}

bool approx_equal(const RealMatrix& a, const RealMatrix& b, double abs_tol, double rel_tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return frobenius_norm(a - b) <= abs_tol + rel_tol * frobenius_norm(b);
}

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "dot");
  return simd::dot(x.data(), y.data(), x.size());
}

double norm2(std::span<const double> x) { return std::sqrt(simd::dot(x.data(), x.data(), x.size())); }

double norm_inf(std::span<const double> x) {
  double r = 0.0;
  for (double v : x) r = std::max(r, std::abs(v));
  return r;
}

Vector add(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "add");
  Vector r(x.begin(), x.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += y[i];
  return r;
}

Vector sub(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "sub");
  Vector r(x.begin(), x.end());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
  return r;
}

Vector scaled(std::span<const double> x, double s) {
  Vector r(x.begin(), x.end());
  for (double& v : r) v *= s;
  return r;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "axpy");
  simd::axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace crhc
