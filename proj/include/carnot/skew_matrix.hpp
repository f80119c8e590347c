#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace carnot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised when an eigen-solver or least-squares step cannot be trusted.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Skew-symmetric n x n matrix held as its strict upper triangle in
// row-major pair order (0,1), (0,2), ..., (0,n-1), (1,2), ..., (n-2,n-1).
// This order is also the serialization order.
class SkewMatrix {
 public:
  SkewMatrix() = default;
  explicit SkewMatrix(int n);
  SkewMatrix(int n, std::vector<double> upper);

  // Reads the strict upper triangle; throws if m is not skew to within tol.
  static SkewMatrix from_dense(const Matrix& m, double tol = 1e-10);

  static std::size_t pair_count(int n) {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2;
  }
  // Position of (i, j), i < j, in the storage order.
  static std::size_t pair_index(int n, int i, int j) {
    return static_cast<std::size_t>(i) * (2 * static_cast<std::size_t>(n) - i - 1) / 2 +
           static_cast<std::size_t>(j - i - 1);
  }

  int dim() const { return n_; }
  std::size_t size() const { return upper_.size(); }

  // Full-matrix semantics: (i, i) = 0 and (j, i) = -(i, j).
  double operator()(int i, int j) const;
  void set(int i, int j, double value);

  std::span<const double> upper() const { return upper_; }
  std::span<double> upper() { return upper_; }
  double& at_pair(std::size_t k) { return upper_[k]; }
  double at_pair(std::size_t k) const { return upper_[k]; }

  double norm2() const;
  double norm_p(double p) const;
  bool is_zero() const;

  Matrix dense() const;
  // P z P^t
  SkewMatrix conjugated(const Matrix& p) const;

  // Sets row and column i to zero.
  void clear_line(int i);
  // Entries (i, j) for j != i, in increasing j, as an (n-1)-vector.
  Vector line(int i) const;

  SkewMatrix& operator+=(const SkewMatrix& o);
  SkewMatrix& operator-=(const SkewMatrix& o);
  SkewMatrix& operator*=(double s);
  friend SkewMatrix operator+(SkewMatrix a, const SkewMatrix& b) { return a += b; }
  friend SkewMatrix operator-(SkewMatrix a, const SkewMatrix& b) { return a -= b; }
  friend SkewMatrix operator*(double s, SkewMatrix a) { return a *= s; }
  friend SkewMatrix operator-(SkewMatrix a) { return a *= -1.0; }
  bool operator==(const SkewMatrix& o) const = default;

 private:
  void check_same(const SkewMatrix& o) const;
  int n_ = 0;
  std::vector<double> upper_;
};

// x y^t - y x^t
SkewMatrix symplectic(const Vector& x, const Vector& y);

}  // namespace carnot
