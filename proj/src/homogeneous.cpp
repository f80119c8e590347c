#include "carnot/homogeneous.hpp"

#include <cmath>
#include <string>

namespace carnot {

namespace {

double upper_inner(const Matrix& d, const SkewMatrix& z) {
  const int n = z.dim();
  double s = 0.0;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s += d(i, j) * z.at_pair(k++);
  return s;
}

}  // namespace

HomogeneousGroupSpec::HomogeneousGroupSpec(std::vector<Matrix> c) : c_(std::move(c)) {
  if (c_.empty()) throw std::invalid_argument("homogeneous group needs at least one vertical coordinate");
  n_ = static_cast<int>(c_.front().rows());
  if (n_ < 2) throw std::invalid_argument("homogeneous group rank must be >= 2");
  const std::size_t pairs = SkewMatrix::pair_count(n_);
  if (c_.size() > pairs)
    throw std::invalid_argument("homogeneous group: m = " + std::to_string(c_.size()) + " exceeds n(n-1)/2 = " +
                                std::to_string(pairs));
  for (const auto& ck : c_)
    if (ck.rows() != n_ || ck.cols() != n_)
      throw std::invalid_argument("homogeneous group: every C_k must be " + std::to_string(n_) + "x" +
                                  std::to_string(n_));

  Matrix raw(c_.size(), pairs);
  for (std::size_t k = 0; k < c_.size(); ++k) {
    d_.push_back(0.5 * (c_[k] - c_[k].transpose()));
    s_.push_back(0.5 * (c_[k] + c_[k].transpose()));
    std::size_t p = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) raw(k, p++) = d_[k](i, j);
  }
  Eigen::FullPivLU<Matrix> lu(raw);
  lu.setThreshold(1e-10);
  if (lu.rank() != static_cast<int>(c_.size()))
    throw std::invalid_argument("homogeneous group: skew parts of C are linearly dependent (rank " +
                                std::to_string(lu.rank()) + " < m = " + std::to_string(c_.size()) + ")");

  // Morphism identity on generators (e_i, e_j), i < j:
  //   coef * <D_k, e_i⊙e_j> = e_j^t D_k e_i.
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < c_.size(); ++k)
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) {
        const double a = d_[k](i, j);
        const double b = d_[k](j, i);
        num += a * b;
        den += a * a;
      }
  lift_coef_ = num / den;
  double resid = 0.0;
  for (std::size_t k = 0; k < c_.size(); ++k)
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j) resid = std::max(resid, std::abs(lift_coef_ * d_[k](i, j) - d_[k](j, i)));
  if (resid > 1e-12 * std::sqrt(den)) throw NumericalError("homogeneous group: lift coefficient is inconsistent");

  a_ = lift_coef_ * raw;
  a_solver_.compute(a_);
}

HomogeneousGroupSpec HomogeneousGroupSpec::heisenberg() {
  Matrix c(2, 2);
  c << 0.0, -1.0, 1.0, 0.0;
  return HomogeneousGroupSpec({c});
}

HomogeneousElement HomogeneousElement::identity(const HomogeneousGroupSpec& spec) {
  return {Vector::Zero(spec.n()), Vector::Zero(spec.m())};
}

void require_member(const HomogeneousGroupSpec& spec, const HomogeneousElement& a) {
  if (a.x.size() != spec.n() || a.z.size() != spec.m())
    throw std::invalid_argument("homogeneous element has shape (" + std::to_string(a.x.size()) + ", " +
                                std::to_string(a.z.size()) + "), group expects (" + std::to_string(spec.n()) + ", " +
                                std::to_string(spec.m()) + ")");
}

HomogeneousElement homog_mul(const HomogeneousGroupSpec& spec, const HomogeneousElement& a,
                             const HomogeneousElement& b) {
  require_member(spec, a);
  require_member(spec, b);
  HomogeneousElement out{a.x + b.x, a.z + b.z};
  for (int k = 0; k < spec.m(); ++k) out.z(k) += 0.5 * b.x.dot(spec.c()[k] * a.x);
  return out;
}

HomogeneousElement homog_inv(const HomogeneousGroupSpec& spec, const HomogeneousElement& a) {
  require_member(spec, a);
  HomogeneousElement out{-a.x, -a.z};
  for (int k = 0; k < spec.m(); ++k) out.z(k) += 0.5 * a.x.dot(spec.s()[k] * a.x);
  return out;
}

HomogeneousElement lift_morphism(const HomogeneousGroupSpec& spec, const GroupElement& g) {
  if (g.dim() != spec.n())
    throw std::invalid_argument("lift_morphism: element has n = " + std::to_string(g.dim()) + ", group has n = " +
                                std::to_string(spec.n()));
  HomogeneousElement out{g.x, Vector(spec.m())};
  for (int k = 0; k < spec.m(); ++k)
    out.z(k) = spec.lift_coefficient() * upper_inner(spec.d()[k], g.z) + 0.25 * g.x.dot(spec.s()[k] * g.x);
  return out;
}

Vector min_norm_vertical(const HomogeneousGroupSpec& spec, const Vector& target) {
  if (target.size() != spec.m()) throw std::invalid_argument("min_norm_vertical: target has wrong length");
  return spec.a_solver_.solve(target);
}

namespace {

SkewMatrix vertical_preimage(const HomogeneousGroupSpec& spec, const Vector& x, const Vector& z) {
  Vector target = z;
  for (int k = 0; k < spec.m(); ++k) target(k) -= 0.25 * x.dot(spec.s()[k] * x);
  const Vector sol = min_norm_vertical(spec, target);
  return SkewMatrix(spec.n(), std::vector<double>(sol.data(), sol.data() + sol.size()));
}

}  // namespace

GroupElement lift_point(const HomogeneousGroupSpec& spec, const HomogeneousElement& a) {
  require_member(spec, a);
  return GroupElement(a.x, vertical_preimage(spec, a.x, a.z));
}

GroupElement lift_partner(const HomogeneousGroupSpec& spec, const GroupElement& g, const HomogeneousElement& a,
                          const HomogeneousElement& b) {
  const HomogeneousElement rel = homog_mul(spec, homog_inv(spec, a), b);
  const GroupElement step(rel.x, vertical_preimage(spec, rel.x, rel.z));
  return group_mul(g, step);
}

}  // namespace carnot
