// Quadrature, root finding, differentiation, and the counter RNG.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "core/numeric.hpp"

using namespace lm;

TEST_CASE("gauss-legendre panel integrates polynomials exactly") {
  // 16 nodes are exact through degree 31.
  const double got = gl_panel(gl16(), [](double x) { return std::pow(x, 8); },
                              0.0, 1.0);
  CHECK(got == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  const double lin = gl_panel(gl64(), [](double x) { return 3.0 * x - 1.0; },
                              -2.0, 5.0);
  CHECK(lin == doctest::Approx(0.5 * 3.0 * (25.0 - 4.0) - 7.0).epsilon(1e-14));
}

TEST_CASE("adaptive integrate matches closed forms") {
  const double e2 = integrate([](double x) { return std::exp(x); }, 0.0, 2.0);
  CHECK(e2 == doctest::Approx(std::exp(2.0) - 1.0).epsilon(1e-10));
  // Kink at 1: piecewise integration still converges via splitting.
  const double kink =
      integrate([](double x) { return std::abs(x - 1.0); }, 0.0, 2.0);
  CHECK(kink == doctest::Approx(1.0).epsilon(1e-8));
  // Degenerate interval.
  CHECK(integrate([](double) { return 5.0; }, 1.0, 1.0) == 0.0);
}

TEST_CASE("integrate_pieces splits at the supplied breaks") {
  const std::vector<double> breaks = {0.0, 1.0, 2.0};
  const double got = integrate_pieces(
      [](double x) { return x < 1.0 ? 1.0 : 3.0; }, breaks, 1e-10);
  CHECK(got == doctest::Approx(4.0).epsilon(1e-10));
  // Unsorted or duplicated breaks must not change the answer.
  const std::vector<double> messy = {2.0, 0.0, 1.0, 1.0};
  const double got2 = integrate_pieces(
      [](double x) { return x < 1.0 ? 1.0 : 3.0; }, messy, 1e-10);
  CHECK(got2 == doctest::Approx(4.0).epsilon(1e-10));
}

TEST_CASE("bisect finds the cosine fixed point") {
  const double root =
      bisect([](double x) { return std::cos(x) - x; }, 0.0, 1.0, 1e-14);
  CHECK(root == doctest::Approx(0.7390851332151607).epsilon(1e-12));
}

TEST_CASE("central_diff differentiates a cubic") {
  auto cube = [](double x) { return x * x * x; };
  const double d = central_diff(cube, 2.0, 1e-5, 0.0, 10.0);
  CHECK(d == doctest::Approx(12.0).epsilon(1e-8));
  // One-sided fallback at an interval edge still converges (O(h)).
  const double edge = central_diff(cube, 0.0, 1e-6, 0.0, 10.0);
  CHECK(edge == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("counter rng is a pure function of its coordinates") {
  counter_rng a(42, 7, 13), b(42, 7, 13);
  for (int k = 0; k < 16; ++k) CHECK(a.next_u64() == b.next_u64());

  // Distinct coordinates decorrelate: no collisions across a small lattice.
  std::set<uint64_t> seen;
  for (uint64_t rep = 0; rep < 8; ++rep)
    for (uint64_t agent = 0; agent < 8; ++agent)
      seen.insert(counter_rng(42, rep, agent).next_u64());
  CHECK(seen.size() == 64);
}

TEST_CASE("unit draws live in [0,1) and are roughly uniform") {
  counter_rng r(1, 0, 0);
  double sum = 0.0;
  const int n = 20000;
  for (int k = 0; k < n; ++k) {
    const double u = r.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // Mean of n uniforms has sd 1/sqrt(12 n) ~ 0.002; allow 5 sigma.
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.022));
}
