#include <doctest.h>

#include "carnot/coupling.hpp"
#include "carnot/path.hpp"
#include "carnot/stats.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace carnot;
using carnot::testing::max_abs_diff;
using carnot::testing::random_element;

namespace {

GroupElement vertical(int n, std::vector<double> z) { return GroupElement(Vector::Zero(n), SkewMatrix(n, std::move(z))); }

}  // namespace

TEST_CASE("coupling constants") {
  const double pi = std::numbers::pi;
  const auto c2 = constants(2);
  CHECK(c2.b_n == doctest::Approx(2 * pi));
  CHECK(c2.beta_n == doctest::Approx(2 * pi));
  CHECK(c2.c1 == doctest::Approx(4 * std::sqrt(2 * pi) + 1 / std::sqrt(pi)));
  CHECK(c2.c2 == doctest::Approx(4 * pi));
  const auto c3 = constants(3);
  CHECK(c3.b_n == doctest::Approx(2 * std::sqrt(6 * pi)));
  CHECK(c3.beta_n == doctest::Approx(std::pow(2.0, 1.5) * 2 * std::sqrt(6 * pi)));
  CHECK_THROWS_AS(constants(1), std::invalid_argument);
  CHECK(parse_fidelity("path") == Fidelity::Path);
  CHECK_THROWS_AS(parse_fidelity("exact"), std::invalid_argument);
  CouplingOptions o;
  CHECK(o.truncation(3) == 6);
  o.m = 3;
  CHECK_THROWS_AS(o.truncation(3), std::invalid_argument);
}

TEST_CASE("coupled pair tracks both states through the defect") {
  RngStream rng(51, 0);
  for (int n = 2; n <= 5; ++n) {
    GroupElement g = random_element(n, rng), gt = random_element(n, rng);
    CoupledPair pair(g, gt);
    for (int k = 0; k < 200; ++k) {
      const Vector d = Vector::NullaryExpr(n, [&] { return 0.1 * rng.normal(); });
      const Vector dt = Vector::NullaryExpr(n, [&] { return 0.1 * rng.normal(); });
      pair.advance(d, dt, 0.01);
      step_in_place(g, d);
      step_in_place(gt, dt);
    }
    CHECK(max_abs_diff(pair.first(), g) < 1e-12);
    CHECK(max_abs_diff(pair.second(), gt) < 1e-10);
    CHECK(pair.elapsed() == doctest::Approx(2.0));
    const Matrix q = horizontal_alignment(Vector::Ones(n));
    pair.rotate(q);
    CHECK(max_abs_diff(pair.first_original(), g) < 1e-12);
    CHECK(max_abs_diff(pair.second_original(), gt) < 1e-10);
    CHECK(max_abs_diff(pair.defect_original(), fiber_defect(g, gt)) < 1e-10);
  }
}

TEST_CASE("entries away from the active coordinate stay bitwise fixed") {
  RngStream rng(52, 0);
  const int n = 4, a = 1;
  GroupElement g = random_element(n, rng), gt = g;
  gt.x(a) += 0.7;
  CoupledPair pair(g, gt);
  const SkewMatrix before = pair.defect().z;
  for (int k = 0; k < 1000; ++k) {
    Vector d = Vector::NullaryExpr(n, [&] { return rng.normal(); });
    Vector dt = d;
    dt(a) = -d(a);
    pair.advance(d, dt, 1e-3);
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (i != a && j != a) CHECK(pair.defect().z(i, j) == before(i, j));
  CHECK(pair.defect().x(0) == 0.0);
  CHECK(pair.defect().x(2) == 0.0);
}

TEST_CASE("reflection meets exactly and matches the first-passage law") {
  RngStream rng(53, 0);
  CouplingOptions o;
  o.h = 1e-3;
  std::vector<double> grid_times, exact_times;
  for (int r = 0; r < 2000; ++r) {
    GroupElement g = random_element(3, rng), gt = g;
    gt.x(0) += 0.3;
    gt.x(2) -= 0.4;  // separation 0.5
    CoupledPair pair(g, gt);
    o.horizon = 50.0;
    const ReflectionOutcome out = run_reflection(pair, rng, o);
    if (out.flags.censored) {
      CHECK(pair.elapsed() == doctest::Approx(50.0));
      grid_times.push_back(std::numeric_limits<double>::infinity());
    } else {
      CHECK(pair.defect().x.lpNorm<Eigen::Infinity>() == 0.0);
      CHECK((pair.first_original().x - pair.second_original().x).norm() < 1e-12);
      grid_times.push_back(out.tau0);
    }
    const double e = sample_reflection_time(0.5, rng);
    exact_times.push_back(e > 50.0 ? std::numeric_limits<double>::infinity() : e);
  }
  CHECK(ks_two_sample(grid_times, exact_times).p_value > 0.001);
}

TEST_CASE("event blocks land on the geometric grid") {
  RngStream rng(54, 0);
  CouplingOptions o;
  for (int r = 0; r < 500; ++r) {
    CoupledPair pair(GroupElement::identity(3), vertical(3, {0.6, -0.8, 0.0}));
    const LineOutcome lo = line_coupling(pair, 0, rng, o);
    CHECK(lo.trace.v0_norm == doctest::Approx(1.0));
    CHECK(pair.defect().z.line(0).norm() == 0.0);
    CHECK(pair.defect().z(1, 2) == 0.0);
    const double grid = (std::ldexp(1.0, lo.trace.blocks) - 1.0) / 3.0;
    CHECK(lo.trace.tau_line == grid);
    CHECK(pair.elapsed() == doctest::Approx(grid).epsilon(1e-12));
  }
}

TEST_CASE("failed blocks keep the line direction") {
  RngStream rng(55, 0);
  CouplingOptions o;
  CoupledPair pair(GroupElement::identity(3), vertical(3, {0.6, -0.8, 0.0}));
  LineContext ctx = LineContext::start(pair.defect().z, 0);
  for (int k = 0; k < 64; ++k) {
    const BlockOutcome b = line_block(pair, ctx, rng, o);
    const Vector line = pair.defect().z.line(0);
    if (b.success) {
      CHECK(b.m_next == 0.0);
      CHECK(line.norm() == 0.0);
      break;
    }
    CHECK(line(0) == doctest::Approx(0.6 * b.m_next));
    CHECK(line(1) == doctest::Approx(-0.8 * b.m_next));
    CHECK(ctx.block_length() == doctest::Approx(std::ldexp(1.0 / 3.0, k + 1)));
  }
}

TEST_CASE("path blocks satisfy the block identity and couple the tracked states") {
  RngStream rng(56, 0);
  CouplingOptions o;
  o.mode = Fidelity::Path;
  o.h = 1e-3;
  o.horizon = 300.0;
  int coupled = 0;
  for (int r = 0; r < 40; ++r) {
    const GroupElement g = random_element(3, rng);
    const GroupElement gt = group_mul(g, vertical(3, {0.2, -0.1, 0.15}));
    CouplingResult res = global_coupling(g, gt, rng, o);
    for (const auto& l : res.trace.per_line) CHECK(l.max_identity_residual < 1e-9);
    if (res.trace.flags.censored) {
      CHECK(std::isinf(res.tau));
      continue;
    }
    ++coupled;
    const GroupElement a = res.pair.first_original(), b = res.pair.second_original();
    CHECK(max_abs_diff(a, b) < 1e-9);
    CHECK(res.pair.phase() == PhaseKind::Coupled);
    CHECK(res.pair.elapsed() == doctest::Approx(res.tau).epsilon(1e-9));
  }
  CHECK(coupled > 20);
}

TEST_CASE("global coupling from a general start") {
  RngStream rng(57, 0);
  CouplingOptions o;
  o.mode = Fidelity::Path;
  o.h = 1e-2;
  o.horizon = 500.0;
  for (int r = 0; r < 30; ++r) {
    const GroupElement g = random_element(2, rng);
    const GroupElement gt = random_element(2, rng);
    CouplingResult res = global_coupling(g, gt, rng, o);
    if (!res.trace.flags.ended()) {
      CHECK(res.tau >= res.trace.tau0);
      CHECK(max_abs_diff(res.pair.first_original(), res.pair.second_original()) < 1e-8);
    }
  }
  // identical starts couple at time zero
  const GroupElement g = random_element(3, rng);
  CHECK(global_coupling(g, g, rng, o).tau == 0.0);
}

TEST_CASE("horizon and block budget") {
  RngStream rng(58, 0);
  CouplingOptions o;
  o.horizon = 1e-3;
  const CouplingResult res = global_coupling(GroupElement::identity(2), vertical(2, {1.0}), rng, o);
  CHECK(res.trace.flags.censored);
  CHECK(std::isinf(res.trace.tau));

  CouplingOptions tight;
  tight.max_blocks = 1;
  bool thrown = false;
  for (int r = 0; r < 200 && !thrown; ++r) {
    try {
      global_coupling(GroupElement::identity(2), vertical(2, {1.0}), rng, tight);
    } catch (const CouplingDiagnostic&) {
      thrown = true;
    }
  }
  CHECK(thrown);
}

TEST_CASE("observer can stop a run") {
  RngStream rng(59, 0);
  CouplingOptions o;
  o.mode = Fidelity::Path;
  int calls = 0;
  o.observer = [&](const CoupledPair&) { return ++calls < 10; };
  GroupElement gt = GroupElement::identity(2);
  gt.x(0) = 3.0;
  const CouplingResult res = global_coupling(GroupElement::identity(2), gt, rng, o);
  CHECK(res.trace.flags.stopped);
  CHECK(calls == 10);
  CHECK(std::isinf(res.tau));
}

TEST_CASE("orientation does not matter for the fiber phase") {
  // Both signs of the defect take the same number of blocks in law.
  RngStream rng(60, 0);
  CouplingOptions o;
  std::vector<double> plus, minus;
  for (int r = 0; r < 3000; ++r) {
    CoupledPair a(GroupElement::identity(2), vertical(2, {1.0}));
    CoupledPair b(GroupElement::identity(2), vertical(2, {-1.0}));
    plus.push_back(fiber_coupling(a, rng, o).tau);
    minus.push_back(fiber_coupling(b, rng, o).tau);
  }
  CHECK(ks_two_sample(plus, minus).p_value > 0.001);
}

TEST_CASE("lifted coupling meets in the quotient") {
  RngStream rng(61, 0);
  const auto spec = HomogeneousGroupSpec::heisenberg();
  CouplingOptions o;
  o.mode = Fidelity::Path;
  o.h = 1e-2;
  o.horizon = 300.0;
  HomogeneousElement a{Vector::Zero(2), Vector::Zero(1)}, b{Vector::Zero(2), Vector::Zero(1)};
  b.x << 0.5, 0.0;
  b.z << 0.3;
  for (int r = 0; r < 10; ++r) {
    LiftedResult lr = lifted_coupling(spec, a, b, rng, o);
    CHECK(lift_morphism(spec, lr.lift_tilde).z(0) == doctest::Approx(0.3));
    if (lr.coupling.trace.flags.ended()) continue;
    const auto pa = lift_morphism(spec, lr.coupling.pair.first_original());
    const auto pb = lift_morphism(spec, lr.coupling.pair.second_original());
    CHECK((pa.x - pb.x).norm() < 1e-9);
    CHECK((pa.z - pb.z).norm() < 1e-8);
  }
}
