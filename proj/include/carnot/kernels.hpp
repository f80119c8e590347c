#pragma once

#include "carnot/rng.hpp"
#include "carnot/skew_matrix.hpp"

#include <span>
#include <vector>

namespace carnot {

// Time for standard Brownian motion to first reach level a > 0.
double sample_first_passage(double level, RngStream& rng);

struct EndpointHit {
  bool hit;
  double stopped;   // W at min(σ, 1), σ the hitting time of the level
  double terminal;  // W at 1
};

// Exact joint draw of (1{max W ≤ 1 reaches L}, W_{σ∧1}, W_1) on [0, 1].
// The running maximum given W_1 = z is drawn by inverting its conditional
// law, so the cost does not depend on L.
EndpointHit sample_endpoint_and_hit(double level, RngStream& rng);

Matrix gaussian_matrix(int rows, int cols, RngStream& rng);

struct WishartDraw {
  Matrix r;                 // (n-1) x m
  Vector w;                 // min-norm solution of r w = v
  double sigma_inv_w_norm;  // sqrt(sum_j j^2 w_j^2), j = 1..m
  double residual;          // |r w - v|
};

double sigma_inv_norm(const Vector& w);

// Least-squares solve through a QR factorization of r^t. Throws
// NumericalError if r is numerically rank deficient or the residual
// exceeds 1e-10.
WishartDraw wishart_from_matrix(Matrix r, const Vector& v);

// Draws r with i.i.d. N(0,1) entries; one resample on rank deficiency.
WishartDraw sample_wishart_vector(int n, int m, const Vector& v, RngStream& rng);

// j-th sine basis function of the bridge on [0, T], j >= 1:
// sqrt(2T)/(jπ) sin(jπ t/T)
double kl_basis(int j, double t, double T);

// sin(π j k / K) with exact zeros at k = 0 and k = K (multiples of π).
double grid_sine(long long j, long long k, long long K);

// Coefficients of one bridge block. Both paths share coefficient 0 and
// the residual; coefficients 1..m may differ.
struct KLBlock {
  double T = 0.0;
  int m = 0;
  Vector xi;        // length m + 1
  Vector xi_tilde;  // length m + 1
  // Residual bridge on the uniform grid t_k = k T / K, k = 0..K: a bridge
  // with its first m sine projections removed.
  std::vector<double> residual;

  long long steps() const { return static_cast<long long>(residual.size()) - 1; }
  double grid_time(long long k) const { return T * static_cast<double>(k) / static_cast<double>(steps()); }
};

// Brownian bridge on the uniform grid with `steps` steps, exact in law.
std::vector<double> sample_bridge(double T, long long steps, RngStream& rng);

// Trapezoid projections of a grid function onto the normalized KL
// coordinates: returns c_j, j = 1..m, with f ≈ sum c_j kl_basis(j, ., T).
Vector kl_projections(std::span<const double> f, double T, int m);

// Independent coefficients, xi_tilde = xi, residual on a grid with
// `steps` steps.
KLBlock sample_kl_block(double T, int m, long long steps, RngStream& rng);

}  // namespace carnot
