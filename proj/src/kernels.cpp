#include "carnot/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace carnot {

double sample_first_passage(double level, RngStream& rng) {
  if (!(level > 0.0)) throw std::invalid_argument("first passage level must be > 0, got " + std::to_string(level));
  const double z = rng.normal();
  return level * level / (z * z);
}

EndpointHit sample_endpoint_and_hit(double level, RngStream& rng) {
  if (!(level > 0.0)) throw std::invalid_argument("hit level must be > 0, got " + std::to_string(level));
  const double z = rng.normal();
  const double u = rng.uniform();
  // P(max >= y | W_1 = z) = exp(-2 y (y - z)) for y >= max(z, 0)
  const double running_max = 0.5 * (z + std::sqrt(z * z - 2.0 * std::log(u)));
  const bool hit = running_max >= level;
  return {hit, hit ? level : z, z};
}

Matrix gaussian_matrix(int rows, int cols, RngStream& rng) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("gaussian_matrix needs positive shape");
  Matrix r(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) r(i, j) = rng.normal();
  return r;
}

double sigma_inv_norm(const Vector& w) {
  double s = 0.0;
  for (int j = 0; j < w.size(); ++j) {
    const double jw = static_cast<double>(j + 1) * w(j);
    s += jw * jw;
  }
  return std::sqrt(s);
}

WishartDraw wishart_from_matrix(Matrix r, const Vector& v) {
  if (v.size() != r.rows()) throw std::invalid_argument("wishart: target length does not match rows of R");
  const Eigen::HouseholderQR<Matrix> qr(r.transpose());
  const int k = static_cast<int>(r.rows());
  const Matrix u = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const double dmax = u.diagonal().cwiseAbs().maxCoeff();
  const double dmin = u.diagonal().cwiseAbs().minCoeff();
  if (!(dmin > 1e-12 * dmax)) throw NumericalError("wishart: R R^t is numerically singular");
  const Vector y = u.transpose().triangularView<Eigen::Lower>().solve(v);
  Vector w = Vector::Zero(r.cols());
  w.head(k) = y;
  w = qr.householderQ() * w;
  const double residual = (r * w - v).norm();
  if (!(residual <= 1e-10)) throw NumericalError("wishart: residual " + std::to_string(residual) + " exceeds 1e-10");
  const double s = sigma_inv_norm(w);
  return {std::move(r), std::move(w), s, residual};
}

WishartDraw sample_wishart_vector(int n, int m, const Vector& v, RngStream& rng) {
  if (n < 2) throw std::invalid_argument("wishart: n must be >= 2");
  if (m < n + 1) throw std::invalid_argument("wishart: m must be >= n + 1, got m = " + std::to_string(m));
  if (v.size() != n - 1) throw std::invalid_argument("wishart: target must have length n - 1");
  if (std::abs(v.norm() - 1.0) > 1e-12) throw std::invalid_argument("wishart: target must be a unit vector");
  try {
    return wishart_from_matrix(gaussian_matrix(n - 1, m, rng), v);
  } catch (const NumericalError&) {
    return wishart_from_matrix(gaussian_matrix(n - 1, m, rng), v);
  }
}

double kl_basis(int j, double t, double T) {
  return std::sqrt(2.0 * T) / (j * std::numbers::pi) * std::sin(j * std::numbers::pi * t / T);
}

double grid_sine(long long j, long long k, long long K) {
  const long long r = (j * k) % (2 * K);
  if (r == 0 || r == K) return 0.0;
  return std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(K));
}

std::vector<double> sample_bridge(double T, long long steps, RngStream& rng) {
  if (!(T > 0.0) || steps < 1) throw std::invalid_argument("bridge needs T > 0 and at least one step");
  std::vector<double> w(steps + 1, 0.0);
  const double sd = std::sqrt(T / static_cast<double>(steps));
  for (long long k = 1; k <= steps; ++k) w[k] = w[k - 1] + sd * rng.normal();
  const double end = w[steps];
  for (long long k = 0; k <= steps; ++k) w[k] -= end * static_cast<double>(k) / static_cast<double>(steps);
  w[0] = 0.0;
  w[steps] = 0.0;
  return w;
}

Vector kl_projections(std::span<const double> f, double T, int m) {
  const long long K = static_cast<long long>(f.size()) - 1;
  if (K < 1) throw std::invalid_argument("kl_projections needs at least two grid points");
  Vector c = Vector::Zero(m);
  // Endpoint terms of the trapezoid rule vanish because the sines do.
  for (long long k = 1; k < K; ++k)
    for (int j = 1; j <= m; ++j) c(j - 1) += f[k] * grid_sine(j, k, K);
  for (int j = 1; j <= m; ++j)
    c(j - 1) *= j * std::numbers::pi * std::sqrt(2.0) / (static_cast<double>(K) * std::sqrt(T));
  return c;
}

KLBlock sample_kl_block(double T, int m, long long steps, RngStream& rng) {
  if (!(T > 0.0)) throw std::invalid_argument("KL block length must be > 0");
  if (m < 2) throw std::invalid_argument("KL truncation order must be >= 2");
  KLBlock b;
  b.T = T;
  b.m = m;
  b.xi.resize(m + 1);
  for (int j = 0; j <= m; ++j) b.xi(j) = rng.normal();
  b.xi_tilde = b.xi;
  b.residual = sample_bridge(T, steps, rng);
  const Vector c = kl_projections(b.residual, T, m);
  const long long K = steps;
  for (long long k = 1; k < K; ++k) {
    double s = 0.0;
    for (int j = 1; j <= m; ++j)
      s += c(j - 1) * std::sqrt(2.0 * T) / (j * std::numbers::pi) * grid_sine(j, k, K);
    b.residual[k] -= s;
  }
  return b;
}

}  // namespace carnot
