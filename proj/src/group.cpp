#include "carnot/group.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace carnot {

GroupElement::GroupElement(Vector x_, SkewMatrix z_) : x(std::move(x_)), z(std::move(z_)) {
  if (x.size() != z.dim())
    throw std::invalid_argument("group element: x has length " + std::to_string(x.size()) +
                                " but z has dimension " + std::to_string(z.dim()));
}

GroupElement GroupElement::identity(int n) { return GroupElement(Vector::Zero(n), SkewMatrix(n)); }

void require_same_dim(const GroupElement& g, const GroupElement& h, const char* what) {
  if (g.dim() != h.dim())
    throw std::invalid_argument(std::string(what) + ": dimension mismatch " + std::to_string(g.dim()) + " vs " +
                                std::to_string(h.dim()));
}

GroupElement group_mul(const GroupElement& g, const GroupElement& h) {
  require_same_dim(g, h, "group_mul");
  GroupElement out(g.x + h.x, g.z + h.z);
  const int n = g.dim();
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.z.at_pair(k++) += 0.5 * (g.x(i) * h.x(j) - g.x(j) * h.x(i));
  return out;
}

GroupElement group_inv(const GroupElement& g) { return GroupElement(-g.x, -g.z); }

GroupElement fiber_defect(const GroupElement& g, const GroupElement& h) {
  require_same_dim(g, h, "fiber_defect");
  GroupElement out(h.x - g.x, h.z - g.z);
  const int n = g.dim();
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out.z.at_pair(k++) -= 0.5 * (g.x(i) * h.x(j) - g.x(j) * h.x(i));
  return out;
}

double pseudo_norm(const GroupElement& g) { return std::sqrt(g.x.squaredNorm() + g.z.norm2()); }

double pseudo_distance(const GroupElement& g, const GroupElement& h) { return pseudo_norm(fiber_defect(g, h)); }

std::vector<double> skew_spectrum(const SkewMatrix& z) {
  const double scale = z.norm2();
  if (scale == 0.0) return {};
  const Matrix a = z.dense();
  // z^t z is symmetric PSD with eigenvalues λ^2, each nonzero one twice.
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.transpose() * a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("skew_spectrum: eigen-solver failed");
  std::vector<double> mod;
  for (int i = 0; i < es.eigenvalues().size(); ++i) mod.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i))));
  std::sort(mod.begin(), mod.end(), std::greater<>());
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < mod.size(); i += 2) {
    const double lam = 0.5 * (mod[i] + mod[i + 1]);
    if (lam > 1e-12 * scale) out.push_back(lam);
  }
  return out;
}

double vertical_dcc(const SkewMatrix& z) {
  const auto lam = skew_spectrum(z);
  double s = 0.0;
  for (std::size_t i = 0; i < lam.size(); ++i) s += static_cast<double>(i + 1) * lam[i];
  return std::sqrt(4.0 * std::numbers::pi * s);
}

CanonicalForm block_diagonalize(const SkewMatrix& z) {
  const int n = z.dim();
  const double scale = z.norm2();
  if (scale == 0.0) return {Matrix::Identity(n, n), SkewMatrix(n)};

  Eigen::RealSchur<Matrix> schur(z.dense());
  if (schur.info() != Eigen::Success) throw NumericalError("block_diagonalize: real Schur decomposition failed");
  const Matrix& t = schur.matrixT();
  const Matrix& u = schur.matrixU();

  // Rotation blocks first, zero eigenvalues last.
  std::vector<int> order, tail;
  for (int i = 0; i < n;) {
    if (i + 1 < n && std::abs(t(i + 1, i)) > 1e-14 * scale) {
      order.push_back(i);
      order.push_back(i + 1);
      i += 2;
    } else {
      tail.push_back(i);
      i += 1;
    }
  }
  order.insert(order.end(), tail.begin(), tail.end());
  Matrix p(n, n);
  for (int c = 0; c < n; ++c) p.col(c) = u.col(order[c]);

  const Matrix c = p.transpose() * z.dense() * p;
  SkewMatrix canon(n);
  double off = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (c(i, j) - c(j, i));
      if (i % 2 == 0 && j == i + 1)
        canon.set(i, j, v);
      else
        off = std::max(off, std::abs(v));
    }
  if (off > 1e-9 * scale)
    throw NumericalError("block_diagonalize: off-block residual " + std::to_string(off) + " too large");
  return {p, canon};
}

Matrix horizontal_alignment(const Vector& d) {
  const int n = static_cast<int>(d.size());
  const double nd = d.norm();
  Matrix q = Matrix::Identity(n, n);
  if (nd == 0.0) return q;
  Vector v = d;
  const double tail2 = d.tail(n - 1).squaredNorm();
  if (tail2 == 0.0 && d(0) > 0.0) return q;
  // v = d - |d| e_1 without cancellation when d_1 > 0
  v(0) = d(0) > 0.0 ? -tail2 / (d(0) + nd) : d(0) - nd;
  q -= 2.0 * v * v.transpose() / v.squaredNorm();
  return q;
}

GroupElement apply_orthogonal(const Matrix& p, const GroupElement& g) {
  return GroupElement(p * g.x, g.z.conjugated(p));
}

}  // namespace carnot
