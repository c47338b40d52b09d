#include "doctest.h"

#include "conic/numerics.hpp"

using namespace conic;

TEST_CASE("gauss-legendre integrates polynomials of degree 2n-1 exactly") {
  for (int n : {1, 2, 5, 16, 40}) {
    const int deg = 2 * n - 1;
    double got = gl_integrate([&](double x) { return std::pow(x, deg - (deg % 2 ? 1 : 0)); }, -1, 1, n);
    const int e = deg - (deg % 2 ? 1 : 0);
    CHECK(got == doctest::Approx(2.0 / (e + 1)).epsilon(1e-13));
    double w = 0;
    for (double v : gauss_legendre(n).w) w += v;
    CHECK(w == doctest::Approx(2.0).epsilon(1e-14));
  }
}

TEST_CASE("jet derivatives match closed forms") {
  const double x = 0.7;
  Jet j = Jet::variable(x);
  Jet f = sqrt(Jet(1.0) + j * j);
  const double s = std::sqrt(1 + x * x);
  CHECK(f.d(1) == doctest::Approx(x / s).epsilon(1e-14));
  CHECK(f.d(2) == doctest::Approx(1 / (s * s * s)).epsilon(1e-14));
  CHECK(f.d(3) == doctest::Approx(-3 * x / std::pow(s, 5)).epsilon(1e-14));
  Jet g = log(exp(j) / j);
  CHECK(g.d(1) == doctest::Approx(1 - 1 / x).epsilon(1e-14));
  CHECK(g.d(2) == doctest::Approx(1 / (x * x)).epsilon(1e-14));
  CHECK(g.d(3) == doctest::Approx(-2 / (x * x * x)).epsilon(1e-13));
}

TEST_CASE("smooth step is a C-infinity partition") {
  CHECK(smooth_step(-0.1) == 0.0);
  CHECK(smooth_step(1.2) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  for (double x : {0.1, 0.3, 0.77}) CHECK(smooth_step(x) + smooth_step(1 - x) == doctest::Approx(1.0));
}

TEST_CASE("piecewise chebyshev reproduces a smooth function") {
  auto f = [](double x) { return std::log(1 + x * x) * std::cos(x); };
  PiecewiseCheb<double> p(f, geometric_breaks(-100, 100, 0.5, 1.5), 17, 1e-14, 1e-15);
  double err = 0;
  for (double x : linspace(-99.9, 99.9, 1001)) err = std::max(err, std::abs(p(x) - f(x)));
  CHECK(err < 1e-11);
  CHECK_THROWS_AS(p(200.0), ConicError);
}

TEST_CASE("least squares recovers exact coefficients") {
  std::vector<double> x = linspace(0, 1, 20), one(20, 1.0), y;
  for (double v : x) y.push_back(3 - 2 * v);
  LinearFit f = least_squares({one, x}, y);
  CHECK(f.coef[0] == doctest::Approx(3).epsilon(1e-13));
  CHECK(f.coef[1] == doctest::Approx(-2).epsilon(1e-13));
  CHECK(f.r2 == doctest::Approx(1.0));
}

TEST_CASE("parallel_for visits every index and propagates errors") {
  std::vector<int> hit(100, 0);
  parallel_for(100, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) CHECK(h == 1);
  CHECK_THROWS(parallel_for(10, [](std::size_t i) {
    if (i == 3) throw ConicError("boom");
  }));
}
