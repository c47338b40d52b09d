#include "doctest.h"

#include "conic/geometry.hpp"
#include "conic/volterra.hpp"

using namespace conic;

namespace {

VolterraProblem backward_cubic(double b) {
  VolterraProblem p;
  p.direction = VolterraDirection::backward;
  p.kernel = [](double x, double s) { return cd(s >= 1 ? (s - x) / (s * s * s) : 0.0); };
  p.forcing = [](double) { return cd(1.0); };
  p.a = 1;
  p.b = b;
  p.tail_exponent = 2;
  return p;
}

// f'' = x^-3 f with f -> 1 at infinity, integrated in t = log x by RK4.
double cubic_ode_at_one() {
  const double X = 1e8;
  double t = std::log(X), y1 = 1 + 1 / (2 * X), y2 = -1 / (2 * X);
  auto rhs = [](double t, double a, double b, double& da, double& db) {
    da = b;
    db = b + std::exp(-t) * a;
  };
  const int n = 40000;
  const double h = -t / n;
  for (int i = 0; i < n; ++i) {
    double k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
    rhs(t, y1, y2, k1a, k1b);
    rhs(t + h / 2, y1 + h / 2 * k1a, y2 + h / 2 * k1b, k2a, k2b);
    rhs(t + h / 2, y1 + h / 2 * k2a, y2 + h / 2 * k2b, k3a, k3b);
    rhs(t + h, y1 + h * k3a, y2 + h * k3b, k4a, k4b);
    y1 += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
    y2 += h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b);
    t += h;
  }
  return y1;
}

}  // namespace

TEST_CASE("zero kernel returns the forcing") {
  VolterraProblem p;
  p.kernel = [](double, double) { return cd{}; };
  p.forcing = [](double x) { return cd(std::sin(x), x); };
  p.a = 0;
  p.b = 3;
  CHECK(estimate_mu(p) == 0.0);
  auto f = volterra_solve(p, 1e-12);
  for (std::size_t i = 0; i < f.nodes.size(); ++i) {
    CHECK(f.values[i] == p.forcing(f.nodes[i]));
  }
  CHECK(f.sweeps == 1);
}

TEST_CASE("forward unit kernel gives the exponential") {
  VolterraProblem p;
  p.kernel = [](double, double) { return cd(1.0); };
  p.forcing = [](double) { return cd(1.0); };
  p.a = 0;
  p.b = 1;
  auto f = volterra_solve(p, 1e-13);
  CHECK(std::abs(f(1.0) - std::exp(1.0)) < 1e-8);
  CHECK(std::abs(f(0.37) - std::exp(0.37)) < 1e-8);
  CHECK(std::abs(f.nystrom(0.81) - std::exp(0.81)) < 1e-8);
  CHECK(f.mu == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(f.residual < 10 * 1e-13 * f.g_norm);
}

TEST_CASE("backward inverse-cube kernel on the half line") {
  auto p = backward_cubic(INFINITY);
  const double mu = estimate_mu(p, 1e-12);
  CHECK(mu == doctest::Approx(0.5).epsilon(1e-6));
  auto f = volterra_solve(p, 1e-12);
  CHECK(f.f_norm <= std::exp(f.mu) * f.g_norm);
  CHECK(std::isfinite(f.b_eff));
  const double oracle = cubic_ode_at_one();
  CHECK(std::abs(f(1.0).real() - oracle) < 1e-9);
  CHECK(std::abs(f(1.0).imag()) < 1e-15);
}

TEST_CASE("mu of an indicator kernel") {
  VolterraProblem p;
  p.kernel = [](double, double s) { return cd(s <= 1 ? 1.0 : 0.0); };
  p.forcing = [](double) { return cd(1.0); };
  p.a = 0;
  p.b = 2;
  p.breaks = {1.0};
  CHECK(std::abs(estimate_mu(p) - 1.0) <= 0.01);
}

TEST_CASE("mu for the hyperboloid Jost kernel") {
  ProfileConfig c;
  c.kind = "hyperboloid";
  c.params = {{"a", 1.0}};
  c.x_max = 5e3;
  auto pot = build_potential(c);
  const double lambda = 1.0;
  auto make = [&](double b) {
    VolterraProblem p;
    p.direction = VolterraDirection::backward;
    p.kernel = [pot, lambda](double x, double s) {
      return cd(std::sin(lambda * (s - x)) / lambda * pot->V(s));
    };
    p.forcing = [](double) { return cd(1.0); };
    p.a = 0;
    p.b = b;
    return p;
  };
  // sup over x in [0, s] of |sin(lambda (s - x))| is known in closed form
  auto sup = [&](double s) {
    const double m = lambda * s < kPi / 2 ? std::sin(lambda * s) : 1.0;
    return m / lambda * std::abs(pot->V(s));
  };
  auto oracle = [&](double b) {
    double acc = 0;
    for (double lo = 0, h = 0.01; lo < b; lo += h, h = std::min(h * 1.05, 1.0))
      acc += gl_integrate(sup, lo, std::min(lo + h, b), 20);
    return acc;
  };
  const double m1 = estimate_mu(make(1e3)), m2 = estimate_mu(make(2e3));
  CHECK(std::isfinite(m1));
  CHECK(m1 >= oracle(1e3) * (1 - 1e-6));
  CHECK(m1 <= oracle(1e3) * 1.05);
  CHECK(std::abs(m2 - m1) <= 1e-3 * m1);
}

TEST_CASE("linearity in the forcing") {
  VolterraProblem p;
  p.kernel = [](double x, double s) { return cd(std::cos(x - s), 0.3 * s); };
  p.a = 0;
  p.b = 2;
  const double tol = 1e-12;
  p.forcing = [](double x) { return cd(std::sin(x)); };
  auto f1 = volterra_solve(p, tol);
  p.forcing = [](double x) { return cd(x * x, 1.0); };
  auto f2 = volterra_solve(p, tol);
  p.forcing = [](double x) { return cd(std::sin(x) + x * x, 1.0); };
  auto f3 = volterra_solve(p, tol);
  for (double x : {0.0, 0.4, 1.3, 2.0}) {
    CHECK(std::abs(f3(x) - f1(x) - f2(x)) < 10 * tol * f3.g_norm);
  }
}

TEST_CASE("truncation consistency when the domain doubles") {
  auto p10 = backward_cubic(10);
  auto p20 = backward_cubic(20);
  auto f10 = volterra_solve(p10, 1e-12);
  auto f20 = volterra_solve(p20, 1e-12);
  // int_10^20 sup|K| ds with sup over x in [1, s]
  const double tail = gl_integrate([](double s) { return (s - 1) / (s * s * s); }, 10, 20, 30);
  const double bound = tail * std::exp(f20.mu) * f20.g_norm;
  for (double x : {1.0, 2.5, 7.0, 10.0}) {
    const double diff = std::abs(f10(x) - f20(x));
    CHECK(diff <= bound);
    CHECK(diff > 0);
  }
}

TEST_CASE("mu estimate is stable under panel refinement") {
  auto p = backward_cubic(INFINITY);
  const double coarse = estimate_mu(p);
  p.breaks = linspace(1, 40, 157);
  const double fine = estimate_mu(p);
  CHECK(std::abs(fine - coarse) <= 0.05 * fine);
}

TEST_CASE("guards") {
  VolterraProblem big;
  big.kernel = [](double, double) { return cd(60.0); };
  big.forcing = [](double) { return cd(1.0); };
  big.a = 0;
  big.b = 1;
  CHECK_THROWS_AS(volterra_solve(big, 1e-10), ConicError);
  CHECK_THROWS_AS(volterra_solve(big, 0.0), ConicError);

  VolterraProblem flat;
  flat.direction = VolterraDirection::backward;
  flat.kernel = [](double, double) { return cd(1.0); };
  flat.forcing = [](double) { return cd(1.0); };
  flat.a = 0;
  flat.b = INFINITY;
  flat.tail_exponent = 2;
  CHECK_THROWS_AS(estimate_mu(flat), ConicError);
  flat.tail_exponent = 0;
  CHECK_THROWS_AS(estimate_mu(flat), ConicError);
}
