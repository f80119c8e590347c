#include <doctest.h>

#include "carnot/kernels.hpp"
#include "carnot/stats.hpp"

#include <cmath>
#include <numbers>
#include <set>

using namespace carnot;

TEST_CASE("philox known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxBlock{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxBlock{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxBlock{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("rng streams are reproducible and distinct") {
  RngStream a(5, 1), b(5, 1), c(5, 2), d(6, 1);
  std::set<std::uint64_t> seen;
  for (int k = 0; k < 1000; ++k) {
    const auto va = a();
    CHECK(va == b());
    seen.insert(va);
    seen.insert(c());
    seen.insert(d());
  }
  CHECK(seen.size() == 3000);
  RngStream u(1, 0);
  double lo = 1, hi = 0, sum = 0;
  for (int k = 0; k < 100000; ++k) {
    const double x = u.uniform();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    sum += x;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / 1e5 - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / 1e5));
}

TEST_CASE("first passage survival") {
  RngStream rng(31, 0);
  const int N = 20000;
  const double a = 0.7;
  std::vector<double> taus(N);
  for (auto& t : taus) t = sample_first_passage(a, rng);
  for (double t : {0.1, 0.5, 1.0, 4.0, 20.0}) {
    const double p = 2.0 * normal_cdf(a / std::sqrt(t)) - 1.0;
    double k = 0;
    for (double x : taus) k += x > t;
    CHECK(std::abs(k / N - p) < 3.0 * std::sqrt(p * (1 - p) / N) + 1e-12);
  }
  CHECK_THROWS_AS(sample_first_passage(0.0, rng), std::invalid_argument);
}

TEST_CASE("endpoint and hit joint law") {
  RngStream rng(32, 0);
  const int N = 40000;
  for (double L : {0.05, 0.5, 1.0, 2.5}) {
    double hits = 0, hit_low = 0, mean = 0, sq = 0;
    const double y = L - 1.0;  // reflection: P(hit, W_1 <= y) = Φ(y - 2L)
    for (int k = 0; k < N; ++k) {
      const EndpointHit e = sample_endpoint_and_hit(L, rng);
      mean += e.terminal;
      sq += e.terminal * e.terminal;
      if (e.hit) {
        ++hits;
        CHECK(e.stopped == L);
        if (e.terminal <= y) ++hit_low;
      } else {
        CHECK(e.stopped == e.terminal);
        CHECK(e.terminal < L);
      }
    }
    const double p = 2.0 * (1.0 - normal_cdf(L));
    CHECK(std::abs(hits / N - p) < 3.0 * std::sqrt(p * (1 - p) / N));
    const double q = normal_cdf(y - 2 * L);
    CHECK(std::abs(hit_low / N - q) < 3.0 * std::sqrt(q * (1 - q) / N) + 1e-12);
    CHECK(std::abs(mean / N) < 3.0 / std::sqrt(N));
    CHECK(std::abs(sq / N - 1.0) < 3.0 * std::sqrt(2.0 / N));
  }
}

TEST_CASE("wishart vector solves the constraint with minimum norm") {
  RngStream rng(33, 0);
  for (int n = 2; n <= 6; ++n) {
    const int m = 2 * n;
    Vector v = Vector::Zero(n - 1);
    v(0) = 1.0;
    for (int k = 0; k < 20; ++k) {
      const WishartDraw d = sample_wishart_vector(n, m, v, rng);
      CHECK((d.r * d.w - v).norm() < 1e-12);
      CHECK(d.residual < 1e-10);
      // minimum norm: w lies in the row space of r
      const Vector coeff = (d.r * d.r.transpose()).ldlt().solve(d.r * d.w);
      CHECK((d.r.transpose() * coeff - d.w).norm() < 1e-10);
      double s = 0;
      for (int j = 0; j < m; ++j) s += (j + 1.0) * (j + 1.0) * d.w(j) * d.w(j);
      CHECK(d.sigma_inv_w_norm == doctest::Approx(std::sqrt(s)));
    }
  }
  CHECK_THROWS_AS(sample_wishart_vector(3, 3, Vector::Unit(2, 0), rng), std::invalid_argument);
  CHECK_THROWS_AS(sample_wishart_vector(3, 6, Vector::Ones(2), rng), std::invalid_argument);
  CHECK_THROWS_AS(wishart_from_matrix(Matrix::Zero(2, 5), Vector::Unit(2, 0)), NumericalError);
}

TEST_CASE("grid sine has exact zeros") {
  CHECK(grid_sine(3, 0, 10) == 0.0);
  CHECK(grid_sine(3, 10, 10) == 0.0);
  CHECK(grid_sine(5, 2, 10) == 0.0);
  CHECK(grid_sine(1, 5, 10) == 1.0);
  CHECK(grid_sine(7, 3, 10) == doctest::Approx(std::sin(std::numbers::pi * 2.1)));
}

TEST_CASE("sine projections invert the basis on the grid") {
  const double T = 2.5;
  const long long K = 64;
  for (int j = 1; j <= 6; ++j) {
    std::vector<double> f(K + 1);
    for (long long k = 0; k <= K; ++k) f[k] = kl_basis(j, T * k / K, T);
    const Vector c = kl_projections(f, T, 6);
    for (int i = 1; i <= 6; ++i) CHECK(c(i - 1) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("bridge covariance") {
  RngStream rng(34, 0);
  const double T = 2.0;
  const long long K = 10;
  const int N = 20000;
  Matrix s2 = Matrix::Zero(K + 1, K + 1);
  for (int r = 0; r < N; ++r) {
    const auto b = sample_bridge(T, K, rng);
    CHECK(b.front() == 0.0);
    CHECK(b.back() == 0.0);
    for (long long i = 0; i <= K; ++i)
      for (long long j = 0; j <= K; ++j) s2(i, j) += b[i] * b[j];
  }
  for (long long i = 2; i < K; i += 3)
    for (long long j = 2; j < K; j += 3) {
      const double s = T * i / K, t = T * j / K;
      const double cov = std::min(s, t) - s * t / T;
      const double var = std::sqrt((std::min(s, s) - s * s / T) * (std::min(t, t) - t * t / T));
      // Var of the product of two jointly Gaussian variables: σ_s²σ_t² + cov²
      const double se = std::sqrt((var * var + cov * cov) / N);
      CHECK(std::abs(s2(i, j) / N - cov) < 3.5 * se);
    }
}

TEST_CASE("kl block residual has no low modes") {
  RngStream rng(35, 0);
  const KLBlock b = sample_kl_block(1.5, 4, 200, rng);
  CHECK(b.xi.size() == 5);
  CHECK(b.xi == b.xi_tilde);
  CHECK(b.steps() == 200);
  CHECK(b.grid_time(200) == 1.5);
  CHECK(kl_projections(b.residual, b.T, 4).cwiseAbs().maxCoeff() < 1e-12);
  // higher modes are untouched
  CHECK(kl_projections(b.residual, b.T, 8).tail(4).cwiseAbs().maxCoeff() > 1e-3);
}
