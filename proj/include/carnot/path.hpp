#pragma once

#include "carnot/group.hpp"
#include "carnot/kernels.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace carnot {

// One step along a straight horizontal chord: state ⋆ (dW, 0). This is the
// midpoint rule for the areas, exact for piecewise-linear paths.
GroupElement step_brownian(const GroupElement& state, const Vector& dw, double h);
void step_in_place(GroupElement& state, const Vector& dw);

struct PathSample {
  std::vector<double> grid;
  std::vector<GroupElement> points;
};

// ceil(T/h) steps of equal length T / ceil(T/h).
PathSample simulate_path(const GroupElement& start, double T, double h, RngStream& rng);
// Same law and same draws as simulate_path, keeping only the endpoint.
GroupElement simulate_endpoint(const GroupElement& start, double T, double h, RngStream& rng);

// Coordinate paths for both sides of a KL block on its own grid.
std::pair<std::vector<double>, std::vector<double>> reconstruct_block_paths(const KLBlock& block, double x_start);

// Q(α, γ) = { |y - x̂| < α, |v - ẑ - ½ x̂⊙y|_2 < γ^2 }
struct PseudoCube {
  Vector center_x;
  SkewMatrix center_z;
  double alpha = 1.0;
  double gamma = 1.0;

  // Center chosen as the midpoint configuration of g and g~.
  static PseudoCube midpoint(const GroupElement& g, const GroupElement& g_tilde, double alpha, double gamma);
};

enum class ExitReason { None, Horizontal, Vertical };

struct ExitEvent {
  double time = 0.0;
  ExitReason reason = ExitReason::None;
  bool crossed = false;
};

// Which constraint of the cube g violates, if any.
ExitReason cube_violation(const PseudoCube& cube, const GroupElement& g);
ExitEvent detect_exit_cube(const PathSample& path, const PseudoCube& cube);

const char* to_string(ExitReason r);

// Header t, x_1..x_n, z_(i,j) in pair order.
void write_path_csv(std::ostream& out, const PathSample& path);

}  // namespace carnot
