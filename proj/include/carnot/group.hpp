#pragma once

#include "carnot/skew_matrix.hpp"

namespace carnot {

// Point (x, z) of the free step-2 Carnot group on R^n.
struct GroupElement {
  Vector x;
  SkewMatrix z;

  GroupElement() = default;
  GroupElement(Vector x_, SkewMatrix z_);
  static GroupElement identity(int n);

  int dim() const { return static_cast<int>(x.size()); }
  bool operator==(const GroupElement& o) const { return x == o.x && z == o.z; }
};

// (x + y, z + w + x⊙y / 2)
GroupElement group_mul(const GroupElement& g, const GroupElement& h);
GroupElement group_inv(const GroupElement& g);

// g^{-1} h = (x~ - x, z~ - z - x⊙x~ / 2), returned as a group element.
GroupElement fiber_defect(const GroupElement& g, const GroupElement& h);

// sqrt(|x|^2 + |z|_2)
double pseudo_norm(const GroupElement& g);
double pseudo_distance(const GroupElement& g, const GroupElement& h);

// Carnot-Caratheodory distance from the identity to (0, z).
double vertical_dcc(const SkewMatrix& z);

// Moduli of the eigenvalue pairs ±iλ of z, descending, each pair counted
// once, values below 1e-12 |z|_2 dropped.
std::vector<double> skew_spectrum(const SkewMatrix& z);

struct CanonicalForm {
  Matrix p;             // orthogonal; canonical = p^t z p
  SkewMatrix canonical; // nonzero only at pairs (2k, 2k+1)
};
CanonicalForm block_diagonalize(const SkewMatrix& z);

// Orthogonal Q (a Householder reflection or the identity) with
// Q d = |d| e_1 up to rounding.
Matrix horizontal_alignment(const Vector& d);

// (P x, P z P^t) for orthogonal P; a group automorphism.
GroupElement apply_orthogonal(const Matrix& p, const GroupElement& g);

void require_same_dim(const GroupElement& g, const GroupElement& h, const char* what);

}  // namespace carnot
