#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace crhc {

using Vector = std::vector<double>;

// Dense row-major real matrix. Zero-sized shapes are allowed for
// intermediate results such as an empty kernel basis.
class RealMatrix {
 public:
  RealMatrix() = default;
  RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  RealMatrix(std::initializer_list<std::initializer_list<double>> rows);

  static RealMatrix identity(std::size_t n);
  static RealMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static RealMatrix column(std::span<const double> v);
  static RealMatrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector col(std::size_t j) const;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  const std::vector<double>& values() const noexcept { return data_; }

  RealMatrix transpose() const;
  RealMatrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const RealMatrix& b);
  void add_block(std::size_t r0, std::size_t c0, const RealMatrix& b, double scale = 1.0);
  std::vector<std::vector<double>> to_rows() const;

  RealMatrix& operator+=(const RealMatrix& o);
  RealMatrix& operator-=(const RealMatrix& o);
  RealMatrix& operator*=(double s);

  bool all_finite() const;
  std::string shape_string() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

RealMatrix operator+(RealMatrix a, const RealMatrix& b);
RealMatrix operator-(RealMatrix a, const RealMatrix& b);
RealMatrix operator-(RealMatrix a);
RealMatrix operator*(const RealMatrix& a, const RealMatrix& b);
RealMatrix operator*(double s, RealMatrix a);
RealMatrix operator*(RealMatrix a, double s);
Vector operator*(const RealMatrix& a, std::span<const double> x);

// aᵀ·b without materialising the transpose.
RealMatrix transpose_times(const RealMatrix& a, const RealMatrix& b);
// aᵀ·x
Vector transpose_times(const RealMatrix& a, std::span<const double> x);

double frobenius_norm(const RealMatrix& m);
double max_abs(const RealMatrix& m);
double trace(const RealMatrix& m);
bool is_symmetric(const RealMatrix& m, double rel_tol = 1e-9);
RealMatrix symmetrize(const RealMatrix& m);
// xᵀ m x
double quad_form(const RealMatrix& m, std::span<const double> x);
// ‖a − b‖_F ≤ abs_tol + rel_tol·‖b‖_F
bool approx_equal(const RealMatrix& a, const RealMatrix& b, double abs_tol = 1e-10,
                  double rel_tol = 1e-8);

double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);
Vector add(std::span<const double> x, std::span<const double> y);
Vector sub(std::span<const double> x, std::span<const double> y);
Vector scaled(std::span<const double> x, double s);
void axpy(double alpha, std::span<const double> x, std::span<double> y);

}  // namespace crhc
