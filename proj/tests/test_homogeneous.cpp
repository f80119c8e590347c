#include <doctest.h>

#include "carnot/homogeneous.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace carnot;
using carnot::testing::random_element;

namespace {

HomogeneousGroupSpec random_spec(int n, int m, RngStream& rng) {
  std::vector<Matrix> c;
  for (int k = 0; k < m; ++k) {
    Matrix ck(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ck(i, j) = rng.normal();
    c.push_back(ck);
  }
  return HomogeneousGroupSpec(c);
}

HomogeneousElement random_homog(const HomogeneousGroupSpec& s, RngStream& rng) {
  HomogeneousElement a{Vector(s.n()), Vector(s.m())};
  for (int i = 0; i < s.n(); ++i) a.x(i) = rng.normal();
  for (int k = 0; k < s.m(); ++k) a.z(k) = rng.normal();
  return a;
}

double diff(const HomogeneousElement& a, const HomogeneousElement& b) {
  return std::max((a.x - b.x).cwiseAbs().maxCoeff(), (a.z - b.z).cwiseAbs().maxCoeff());
}

}  // namespace

TEST_CASE("heisenberg lift is the identity on coordinates") {
  const auto spec = HomogeneousGroupSpec::heisenberg();
  CHECK(spec.lift_coefficient() == doctest::Approx(-1.0));
  RngStream rng(21, 0);
  for (int k = 0; k < 100; ++k) {
    const GroupElement g = random_element(2, rng);
    const HomogeneousElement a = lift_morphism(spec, g);
    CHECK(a.x == g.x);
    CHECK(a.z(0) == doctest::Approx(g.z(0, 1)).epsilon(1e-14));
  }
}

TEST_CASE("homogeneous group laws") {
  RngStream rng(22, 0);
  for (int n = 2; n <= 5; ++n) {
    const int m = 1 + static_cast<int>(rng() % SkewMatrix::pair_count(n));
    const auto spec = random_spec(n, m, rng);
    for (int k = 0; k < 50; ++k) {
      const auto a = random_homog(spec, rng), b = random_homog(spec, rng), c = random_homog(spec, rng);
      CHECK(diff(homog_mul(spec, homog_mul(spec, a, b), c), homog_mul(spec, a, homog_mul(spec, b, c))) < 1e-12);
      CHECK(diff(homog_mul(spec, homog_inv(spec, a), a), HomogeneousElement::identity(spec)) < 1e-12);
      CHECK(diff(homog_mul(spec, a, homog_inv(spec, a)), HomogeneousElement::identity(spec)) < 1e-12);
    }
  }
}

TEST_CASE("lift_morphism is a homomorphism with minimum-norm sections") {
  RngStream rng(23, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const int m = 1 + static_cast<int>(rng() % SkewMatrix::pair_count(n));
    const auto spec = random_spec(n, m, rng);
    for (int k = 0; k < 25; ++k) {
      const GroupElement g = random_element(n, rng), h = random_element(n, rng);
      CHECK(diff(lift_morphism(spec, group_mul(g, h)),
                 homog_mul(spec, lift_morphism(spec, g), lift_morphism(spec, h))) < 1e-12);
      const auto a = random_homog(spec, rng), b = random_homog(spec, rng);
      const GroupElement la = lift_point(spec, a);
      CHECK(diff(lift_morphism(spec, la), a) < 1e-10);
      const GroupElement lb = lift_partner(spec, la, a, b);
      CHECK(diff(lift_morphism(spec, lb), b) < 1e-10);
      // The defect of the partner is orthogonal to the kernel: no smaller
      // vertical part has the same image.
      const GroupElement d = fiber_defect(la, lb);
      const Vector zd = Eigen::Map<const Vector>(d.z.upper().data(), static_cast<Eigen::Index>(d.z.size()));
      const Eigen::FullPivLU<Matrix> lu(spec.lift_matrix());
      const Matrix kernel = lu.kernel();
      if (lu.dimensionOfKernel() > 0) CHECK((kernel.transpose() * zd).norm() < 1e-9 * (1 + zd.norm()));
    }
  }
}

TEST_CASE("homogeneous group validation") {
  CHECK_THROWS_AS(HomogeneousGroupSpec(std::vector<Matrix>{}), std::invalid_argument);
  Matrix sym = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(HomogeneousGroupSpec({sym}), std::invalid_argument);
  Matrix c(2, 2);
  c << 0, -1, 1, 0;
  CHECK_THROWS_AS(HomogeneousGroupSpec({c, c}), std::invalid_argument);
  CHECK_THROWS_AS(HomogeneousGroupSpec({Matrix::Zero(2, 3)}), std::invalid_argument);
  const auto spec = HomogeneousGroupSpec::heisenberg();
  CHECK_THROWS_AS(lift_morphism(spec, GroupElement::identity(3)), std::invalid_argument);
  CHECK_THROWS_AS(require_member(spec, HomogeneousElement{Vector::Zero(2), Vector::Zero(2)}), std::invalid_argument);
}
