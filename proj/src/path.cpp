#include "carnot/path.hpp"

#include "carnot/io.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>

namespace carnot {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void step_in_place(GroupElement& state, const Vector& dw) {
  const int n = state.dim();
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) state.z.at_pair(k++) += 0.5 * (state.x(i) * dw(j) - state.x(j) * dw(i));
  state.x += dw;
}

GroupElement step_brownian(const GroupElement& state, const Vector& dw, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("step_brownian: h must be > 0");
  if (dw.size() != state.dim()) throw std::invalid_argument("step_brownian: increment has wrong length");
  GroupElement out = state;
  step_in_place(out, dw);
  return out;
}

namespace {

long long step_count(double T, double h) {
  if (!(T > 0.0)) throw std::invalid_argument("path length T must be > 0");
  if (!(h > 0.0) || h > T) throw std::invalid_argument("step h must satisfy 0 < h <= T");
  return static_cast<long long>(std::ceil(T / h - 1e-9));
}

}  // namespace

PathSample simulate_path(const GroupElement& start, double T, double h, RngStream& rng) {
  const long long k_steps = step_count(T, h);
  const double dt = T / static_cast<double>(k_steps);
  const double sd = std::sqrt(dt);
  PathSample p;
  p.grid.reserve(k_steps + 1);
  p.points.reserve(k_steps + 1);
  p.grid.push_back(0.0);
  p.points.push_back(start);
  GroupElement g = start;
  Vector dw(start.dim());
  for (long long k = 1; k <= k_steps; ++k) {
    for (int i = 0; i < dw.size(); ++i) dw(i) = sd * rng.normal();
    step_in_place(g, dw);
    p.grid.push_back(T * static_cast<double>(k) / static_cast<double>(k_steps));
    p.points.push_back(g);
  }
  return p;
}

GroupElement simulate_endpoint(const GroupElement& start, double T, double h, RngStream& rng) {
  const long long k_steps = step_count(T, h);
  const double sd = std::sqrt(T / static_cast<double>(k_steps));
  GroupElement g = start;
  Vector dw(start.dim());
  for (long long k = 1; k <= k_steps; ++k) {
    for (int i = 0; i < dw.size(); ++i) dw(i) = sd * rng.normal();
    step_in_place(g, dw);
  }
  return g;
}

std::pair<std::vector<double>, std::vector<double>> reconstruct_block_paths(const KLBlock& block, double x_start) {
  const long long K = block.steps();
  if (K < 1) throw std::invalid_argument("KL block has no grid");
  std::vector<double> a(K + 1), b(K + 1);
  const double root_t = std::sqrt(block.T);
  for (long long k = 0; k <= K; ++k) {
    double sa = 0.0, sb = 0.0;
    for (int j = 1; j <= block.m; ++j) {
      const double phi = std::sqrt(2.0 * block.T) / (j * std::numbers::pi) * grid_sine(j, k, K);
      sa += block.xi(j) * phi;
      sb += block.xi_tilde(j) * phi;
    }
    const double common = x_start + block.residual[k] + block.grid_time(k) * block.xi(0) / root_t;
    a[k] = common + sa;
    b[k] = common + sb;
  }
  return {std::move(a), std::move(b)};
}

PseudoCube PseudoCube::midpoint(const GroupElement& g, const GroupElement& g_tilde, double alpha, double gamma) {
  require_same_dim(g, g_tilde, "PseudoCube::midpoint");
  if (!(alpha > 0.0) || !(gamma > 0.0)) throw std::invalid_argument("pseudo-cube needs alpha, gamma > 0");
  PseudoCube c;
  c.center_x = 0.5 * (g.x + g_tilde.x);
  c.center_z = 0.5 * (g.z + g_tilde.z);
  c.alpha = alpha;
  c.gamma = gamma;
  return c;
}

ExitReason cube_violation(const PseudoCube& cube, const GroupElement& g) {
  if ((g.x - cube.center_x).norm() >= cube.alpha) return ExitReason::Horizontal;
  const int n = g.dim();
  double s = 0.0;
  std::size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double u = g.z.at_pair(k) - cube.center_z.at_pair(k) -
                       0.5 * (cube.center_x(i) * g.x(j) - cube.center_x(j) * g.x(i));
      s += u * u;
      ++k;
    }
  if (std::sqrt(s) >= cube.gamma * cube.gamma) return ExitReason::Vertical;
  return ExitReason::None;
}

ExitEvent detect_exit_cube(const PathSample& path, const PseudoCube& cube) {
  if (!(cube.alpha > 0.0) || !(cube.gamma > 0.0)) throw std::invalid_argument("pseudo-cube needs alpha, gamma > 0");
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    const ExitReason r = cube_violation(cube, path.points[k]);
    if (r != ExitReason::None) return {path.grid[k], r, true};
  }
  return {path.grid.empty() ? 0.0 : path.grid.back(), ExitReason::None, false};
}

const char* to_string(ExitReason r) {
  switch (r) {
    case ExitReason::Horizontal: return "horizontal";
    case ExitReason::Vertical: return "vertical";
    default: return "none";
  }
}

void write_path_csv(std::ostream& out, const PathSample& path) {
  if (path.points.empty()) return;
  const int n = path.points.front().dim();
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) out << ",z_" << i << "_" << j;
  out << "\n";
  for (std::size_t k = 0; k < path.points.size(); ++k) {
    out << format_double(path.grid[k]);
    for (int i = 0; i < n; ++i) out << ',' << format_double(path.points[k].x(i));
    for (double v : path.points[k].z.upper()) out << ',' << format_double(v);
    out << "\n";
  }
}

}  // namespace carnot
