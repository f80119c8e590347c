#pragma once

#include "carnot/group.hpp"

#include <vector>

namespace carnot {

// Step-2 homogeneous group on R^n x R^m with law
//   (x, z)∘(y, w) = (x + y, z_k + w_k + ½ y^t C_k x).
// Validated at construction: the skew parts D_k must be linearly independent.
class HomogeneousGroupSpec {
 public:
  explicit HomogeneousGroupSpec(std::vector<Matrix> c);

  static HomogeneousGroupSpec heisenberg();

  int n() const { return n_; }
  int m() const { return static_cast<int>(c_.size()); }
  const std::vector<Matrix>& c() const { return c_; }
  const std::vector<Matrix>& d() const { return d_; }
  const std::vector<Matrix>& s() const { return s_; }
  // Coefficient in front of <D_k, z> (upper-triangle inner product) that
  // makes the lift a homomorphism; solved at construction.
  double lift_coefficient() const { return lift_coef_; }
  // Rows: k; columns: pairs in SkewMatrix order. lift vertical = A z + q(x).
  const Matrix& lift_matrix() const { return a_; }

 private:
  int n_ = 0;
  std::vector<Matrix> c_, d_, s_;
  double lift_coef_ = 0.0;
  Matrix a_;
  Eigen::CompleteOrthogonalDecomposition<Matrix> a_solver_;
  friend Eigen::VectorXd min_norm_vertical(const HomogeneousGroupSpec&, const Eigen::VectorXd&);
};

struct HomogeneousElement {
  Vector x;
  Vector z;
  static HomogeneousElement identity(const HomogeneousGroupSpec& spec);
};

HomogeneousElement homog_mul(const HomogeneousGroupSpec& spec, const HomogeneousElement& a,
                             const HomogeneousElement& b);
HomogeneousElement homog_inv(const HomogeneousGroupSpec& spec, const HomogeneousElement& a);

// Surjective morphism from the free group onto the homogeneous group.
HomogeneousElement lift_morphism(const HomogeneousGroupSpec& spec, const GroupElement& g);

// Minimum-norm z with A z = target.
Vector min_norm_vertical(const HomogeneousGroupSpec& spec, const Vector& target);

// Preimage of a with minimum-norm vertical part.
GroupElement lift_point(const HomogeneousGroupSpec& spec, const HomogeneousElement& a);

// Given a lift g of a, returns g~ = g ⋆ (Δx, ζ) with minimum-norm ζ and
// lift_morphism(g~) = b.
GroupElement lift_partner(const HomogeneousGroupSpec& spec, const GroupElement& g, const HomogeneousElement& a,
                          const HomogeneousElement& b);

void require_member(const HomogeneousGroupSpec& spec, const HomogeneousElement& a);

}  // namespace carnot
