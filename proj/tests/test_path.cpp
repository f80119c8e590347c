#include <doctest.h>

#include "carnot/path.hpp"
#include "carnot/stats.hpp"
#include "test_util.hpp"

#include <cmath>
#include <sstream>

using namespace carnot;

TEST_CASE("a step is right multiplication by a horizontal element") {
  RngStream rng(41, 0);
  for (int n = 2; n <= 6; ++n)
    for (int k = 0; k < 50; ++k) {
      const GroupElement g = carnot::testing::random_element(n, rng);
      const Vector dw = Vector::NullaryExpr(n, [&] { return rng.normal(); });
      const GroupElement expect = group_mul(g, GroupElement(dw, SkewMatrix(n)));
      CHECK(carnot::testing::max_abs_diff(step_brownian(g, dw, 0.1), expect) < 1e-14);
    }
  CHECK_THROWS_AS(step_brownian(GroupElement::identity(2), Vector::Zero(2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(step_brownian(GroupElement::identity(2), Vector::Zero(3), 0.1), std::invalid_argument);
}

TEST_CASE("path grid and endpoint agree") {
  RngStream a(42, 3), b(42, 3);
  const GroupElement start = GroupElement::identity(3);
  const PathSample p = simulate_path(start, 1.0, 0.3, a);
  CHECK(p.points.size() == 5);  // ceil(1 / 0.3) = 4 steps
  CHECK(p.grid.back() == 1.0);
  CHECK(p.grid[1] == 0.25);
  CHECK(p.points.back() == simulate_endpoint(start, 1.0, 0.3, b));
  CHECK(simulate_path(start, 1.0, 0.001, a).points.size() == 1001);
  CHECK_THROWS_AS(simulate_path(start, 1.0, 2.0, a), std::invalid_argument);
}

TEST_CASE("levy area moments") {
  // Var(2 z_12) = T^2 for the planar area.
  RngStream rng(43, 0);
  const int N = 20000;
  const double T = 1.5;
  std::vector<double> area(N);
  for (auto& v : area) v = 2.0 * simulate_endpoint(GroupElement::identity(2), T, 0.01, rng).z(0, 1);
  const MeanEstimate sq = [&] {
    std::vector<double> s(N);
    for (int i = 0; i < N; ++i) s[i] = area[i] * area[i];
    return estimate_mean(s);
  }();
  CHECK(std::abs(sq.mean - T * T) < 3.0 * sq.standard_error());
  const MeanEstimate m = estimate_mean(area);
  CHECK(std::abs(m.mean) < 3.0 * m.standard_error());
}

TEST_CASE("kl block paths are brownian on the grid") {
  RngStream rng(44, 0);
  const int N = 20000;
  const double T = 2.0;
  const long long K = 100;
  std::vector<double> at_a(N), at_b(N), prod(N);
  for (int r = 0; r < N; ++r) {
    const KLBlock b = sample_kl_block(T, 4, K, rng);
    const auto [pa, pb] = reconstruct_block_paths(b, 0.5);
    CHECK(pa == pb);
    at_a[r] = pa[30] - 0.5;
    at_b[r] = pa[K] - 0.5;
    prod[r] = at_a[r] * at_b[r];
  }
  std::vector<double> sa(N), sb(N);
  for (int r = 0; r < N; ++r) {
    sa[r] = at_a[r] * at_a[r];
    sb[r] = at_b[r] * at_b[r];
  }
  const double s = T * 30 / K;
  CHECK(std::abs(estimate_mean(sa).mean - s) < 3.0 * estimate_mean(sa).standard_error());
  CHECK(std::abs(estimate_mean(sb).mean - T) < 3.0 * estimate_mean(sb).standard_error());
  CHECK(std::abs(estimate_mean(prod).mean - s) < 3.0 * estimate_mean(prod).standard_error());
}

TEST_CASE("pseudo-cube") {
  GroupElement g(Vector::Zero(2), SkewMatrix(2, {0.0}));
  GroupElement gt(Vector::Zero(2), SkewMatrix(2, {0.0}));
  g.x << -0.25, 0.0;
  gt.x << 0.25, 0.0;
  const PseudoCube c = PseudoCube::midpoint(g, gt, 1.0, 1.0);
  CHECK(c.center_x.norm() == 0.0);
  CHECK(cube_violation(c, g) == ExitReason::None);
  GroupElement far = g;
  far.x(1) = 1.0;
  CHECK(cube_violation(c, far) == ExitReason::Horizontal);
  GroupElement high = g;
  high.z.set(0, 1, 1.0);
  CHECK(cube_violation(c, high) == ExitReason::Vertical);
  CHECK_THROWS_AS(PseudoCube::midpoint(g, gt, 0.0, 1.0), std::invalid_argument);

  PathSample p;
  p.grid = {0.0, 0.5, 1.0};
  p.points = {g, g, far};
  const ExitEvent e = detect_exit_cube(p, c);
  CHECK(e.crossed);
  CHECK(e.time == 1.0);
  CHECK(std::string(to_string(e.reason)) == "horizontal");
  p.points.back() = g;
  CHECK_FALSE(detect_exit_cube(p, c).crossed);
}

TEST_CASE("path csv header and rows") {
  PathSample p;
  p.grid = {0.0, 0.5};
  GroupElement g(Vector::Zero(3), SkewMatrix(3, {1.0, 2.0, 0.25}));
  p.points = {GroupElement::identity(3), g};
  std::ostringstream s;
  write_path_csv(s, p);
  CHECK(s.str() == "t,x_1,x_2,x_3,z_1_2,z_1_3,z_2_3\n0,0,0,0,0,0,0\n0.5,0,0,0,1,2,0.25\n");
}
