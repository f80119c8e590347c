#include "carnot/skew_matrix.hpp"

#include <cmath>
#include <string>

namespace carnot {

SkewMatrix::SkewMatrix(int n) : n_(n) {
  if (n < 2) throw std::invalid_argument("skew matrix dimension must be >= 2, got " + std::to_string(n));
  upper_.assign(pair_count(n), 0.0);
}

SkewMatrix::SkewMatrix(int n, std::vector<double> upper) : n_(n), upper_(std::move(upper)) {
  if (n < 2) throw std::invalid_argument("skew matrix dimension must be >= 2, got " + std::to_string(n));
  if (upper_.size() != pair_count(n))
    throw std::invalid_argument("skew matrix of dimension " + std::to_string(n) + " needs " +
                                std::to_string(pair_count(n)) + " entries, got " +
                                std::to_string(upper_.size()));
}

SkewMatrix SkewMatrix::from_dense(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("skew matrix must be square");
  const int n = static_cast<int>(m.rows());
  SkewMatrix out(n);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  for (int i = 0; i < n; ++i) {
    if (std::abs(m(i, i)) > tol * scale) throw std::invalid_argument("matrix has nonzero diagonal");
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(m(i, j) + m(j, i)) > tol * scale) throw std::invalid_argument("matrix is not skew-symmetric");
      out.upper_[pair_index(n, i, j)] = 0.5 * (m(i, j) - m(j, i));
    }
  }
  return out;
}

double SkewMatrix::operator()(int i, int j) const {
  if (i == j) return 0.0;
  if (i < j) return upper_[pair_index(n_, i, j)];
  return -upper_[pair_index(n_, j, i)];
}

void SkewMatrix::set(int i, int j, double value) {
  if (i == j) throw std::invalid_argument("cannot set a diagonal entry of a skew matrix");
  if (i < j)
    upper_[pair_index(n_, i, j)] = value;
  else
    upper_[pair_index(n_, j, i)] = -value;
}

double SkewMatrix::norm2() const {
  double s = 0.0;
  for (double v : upper_) s += v * v;
  return std::sqrt(s);
}

double SkewMatrix::norm_p(double p) const {
  if (!(p > 0.0)) throw std::invalid_argument("norm order must be positive");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : upper_) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (double v : upper_) s += std::pow(std::abs(v), p);
  return std::pow(s, 1.0 / p);
}

bool SkewMatrix::is_zero() const {
  for (double v : upper_)
    if (v != 0.0) return false;
  return true;
}

Matrix SkewMatrix::dense() const {
  Matrix m = Matrix::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) {
      const double v = upper_[pair_index(n_, i, j)];
      m(i, j) = v;
      m(j, i) = -v;
    }
  return m;
}

SkewMatrix SkewMatrix::conjugated(const Matrix& p) const {
  if (p.rows() != n_ || p.cols() != n_) throw std::invalid_argument("conjugating matrix has wrong shape");
  const Matrix c = p * dense() * p.transpose();
  SkewMatrix out(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) out.upper_[pair_index(n_, i, j)] = 0.5 * (c(i, j) - c(j, i));
  return out;
}

void SkewMatrix::clear_line(int i) {
  for (int j = 0; j < n_; ++j)
    if (j != i) set(i, j, 0.0);
}

Vector SkewMatrix::line(int i) const {
  Vector v(n_ - 1);
  int k = 0;
  for (int j = 0; j < n_; ++j)
    if (j != i) v(k++) = (*this)(i, j);
  return v;
}

void SkewMatrix::check_same(const SkewMatrix& o) const {
  if (o.n_ != n_)
    throw std::invalid_argument("skew matrix dimension mismatch: " + std::to_string(n_) + " vs " +
                                std::to_string(o.n_));
}

SkewMatrix& SkewMatrix::operator+=(const SkewMatrix& o) {
  check_same(o);
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] += o.upper_[k];
  return *this;
}

SkewMatrix& SkewMatrix::operator-=(const SkewMatrix& o) {
  check_same(o);
  for (std::size_t k = 0; k < upper_.size(); ++k) upper_[k] -= o.upper_[k];
  return *this;
}

SkewMatrix& SkewMatrix::operator*=(double s) {
  for (double& v : upper_) v *= s;
  return *this;
}

SkewMatrix symplectic(const Vector& x, const Vector& y) {
  if (x.size() != y.size())
    throw std::invalid_argument("symplectic: dimension mismatch " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  const int n = static_cast<int>(x.size());
  SkewMatrix out(n);
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.at_pair(k++) = x(i) * y(j) - x(j) * y(i);
  return out;
}

}  // namespace carnot
