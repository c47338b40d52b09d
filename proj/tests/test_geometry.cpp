#include "doctest.h"

#include <random>

#include "conic/geometry.hpp"

using namespace conic;

namespace {

ProfileConfig cfg(const std::string& kind, std::map<std::string, double> params = {}, int d = 1,
                  double x_max = 1e5) {
  ProfileConfig c;
  c.kind = kind;
  c.params = std::move(params);
  c.d = d;
  c.x_max = x_max;
  return c;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * f(a + i * h);
  return s * h / 3;
}

}  // namespace

TEST_CASE("make_profile") {
  Profile c = make_profile(cfg("cylinder"));
  CHECK(c.derivs(3.0).r == 1.0);
  CHECK(c.derivs(3.0).r1 == 0.0);
  Profile h = make_profile(cfg("hyperboloid", {{"a", 1.0}}));
  for (double x : {-3.0, 0.0, 0.5, 20.0}) {
    CHECK(h.derivs(x).r == doctest::Approx(std::sqrt(1 + x * x)).epsilon(1e-15));
    CHECK(h.derivs(x).r1 == doctest::Approx(x / std::sqrt(1 + x * x)).epsilon(1e-15));
  }
  CHECK(h.conical_left());
  CHECK(h.conical_right());
  CHECK_THROWS_AS(make_profile(cfg("hyperboloid", {{"a", 0.0}})), ConicError);
  CHECK_THROWS_AS(make_profile(cfg("paraboloid")), ConicError);
  CHECK_THROWS_AS(make_profile(cfg("hyperboloid", {{"b", 1.0}})), ConicError);
  Profile s = make_profile(cfg("two-sided-cone-smoothed", {{"width", 1.0}}));
  CHECK(s.derivs(2.5).r == 2.5);
  CHECK(s.derivs(-4.0).r1 == -1.0);
  ProfileCheck chk = check_profile(s, 100);
  CHECK(chk.ok);
  CHECK(chk.min_r > 0);
}

TEST_CASE("tabulated profile rejects bad data and tracks the analytic one") {
  ProfileConfig c = cfg("custom-tabulated", {{"conical_left", 1}, {"conical_right", 1}});
  c.table_x = linspace(-60, 60, 24001);
  for (double x : c.table_x) c.table_r.push_back(std::sqrt(1 + x * x));
  Profile t = make_profile(c);
  Profile h = Profile::hyperboloid(1.0, 1);
  for (double x : {-30.3, -1.0, 0.0, 0.37, 12.0}) {
    RDerivs a = t.derivs(x), b = h.derivs(x);
    CHECK(std::abs(a.r - b.r) < 1e-7);
    CHECK(std::abs(a.r1 - b.r1) < 1e-6);
    CHECK(std::abs(a.r2 - b.r2) < 1e-4);
  }
  c.table_r[100] = -1;
  CHECK_THROWS_AS(make_profile(c), ConicError);
}

TEST_CASE("arclength chart") {
  ArclengthChart cyl(make_profile(cfg("cylinder")), 1e3);
  CHECK(cyl.arclength_of(2.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cyl.x_of_arclength(-3.0) == doctest::Approx(-3.0).epsilon(1e-14));

  ArclengthChart hyp(make_profile(cfg("hyperboloid", {{"a", 1.0}})), 1e5);
  auto speed = [](double y) { return std::sqrt(1 + y * y / (1 + y * y)); };
  CHECK(std::abs(hyp.arclength_of(1.0) - simpson(speed, 0, 1, 1000000)) < 1e-8);
  const double d3 = hyp.arclength_of(1e3) - std::sqrt(2.0) * 1e3;
  const double d4 = hyp.arclength_of(1e4) - std::sqrt(2.0) * 1e4;
  CHECK(std::abs(d3 - d4) < 1e-3);
  CHECK(std::abs(hyp.x_of_arclength(hyp.arclength_of(7.0)) - 7.0) < 1e-9);
  CHECK_THROWS_AS(hyp.x_of_arclength(2 * hyp.xi_hi()), ConicError);
  CHECK_THROWS_AS(hyp.arclength_of(2 * hyp.x_hi()), ConicError);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  double prev = -INFINITY;
  for (double x : linspace(hyp.x_lo(), hyp.x_hi(), 2001)) {
    double xi = hyp.arclength_of(x);
    CHECK(xi > prev);
    prev = xi;
  }
  for (int i = 0; i < 300; ++i) {
    const double x = u(rng) * std::pow(10.0, 4.8 * std::abs(u(rng)));
    CHECK(std::abs(hyp.x_of_arclength(hyp.arclength_of(x)) - x) <= 1e-9 * (1 + std::abs(x)));
    CHECK(hyp.arclength_of(-x) == doctest::Approx(-hyp.arclength_of(x)).epsilon(1e-13));
    const double xi = u(rng) * 1e5;
    CHECK(std::abs(hyp.arclength_of(hyp.x_of_arclength(xi)) - xi) <= 1e-9 * (1 + std::abs(xi)));
  }
  CHECK(hyp.arclength_of(0.0) == 0.0);
}

TEST_CASE("potential") {
  auto cyl = build_potential(cfg("cylinder"));
  for (double xi : {-50.0, 0.0, 3.0}) {
    CHECK(cyl->at(xi).rho == 0.0);
    CHECK(cyl->at(xi).V == 0.0);
  }
  auto hyp = build_potential(cfg("hyperboloid", {{"a", 1.0}}));
  const double v50 = 2500 * hyp->V(50.0);
  CHECK(v50 >= -0.27);
  CHECK(v50 <= -0.23);
  auto hyp2 = build_potential(cfg("hyperboloid", {{"a", 1.0}}, 2));
  CHECK(std::abs(2500 * hyp2->V(50.0)) <= 0.05);

  // V = rho' + rho^2 against a finite difference of rho
  for (auto* p : {hyp.get(), hyp2.get()})
    for (double xi : {-20.0, -1.0, 0.3, 2.0, 9.0, 80.0}) {
      const double h = 1e-3 * japanese(xi);
      const double drho = (-p->at(xi + 2 * h).rho + 8 * p->at(xi + h).rho - 8 * p->at(xi - h).rho +
                           p->at(xi - 2 * h).rho) / (12 * h);
      const PotentialSample s = p->at(xi);
      CHECK(std::abs(drho + s.rho * s.rho - s.V) <= 1e-6 * std::abs(s.V));
    }
  for (double xi : linspace(0, 300, 61)) CHECK(std::abs(hyp->V(-xi) - hyp->V(xi)) < 1e-9);
  CHECK_THROWS_AS(hyp->V1(2.0), ConicError);
  // r sqrt2 / xi -> 1 on the conical side
  CHECK(std::abs(hyp->at(1e4).r * std::sqrt(2.0) / 1e4 - 1) < 1e-3);
}

TEST_CASE("conical constants") {
  auto cyl = build_potential(cfg("cylinder"));
  CHECK_THROWS_AS(cyl->fit_conical_constants(), ConicError);

  auto cone = build_potential(cfg("two-sided-cone-smoothed", {{"width", 1.0}}));
  TailReport t = cone->fit_conical_constants(true);
  const Profile& p = cone->profile();
  const double oracle = adaptive_integrate(
      [&](double x) { return std::sqrt(1 + std::pow(p.derivs(x).r1, 2)) - std::sqrt(2.0); }, 0, 1,
      1e-15);
  CHECK(std::abs(t.c_inf - oracle) < 1e-6);
  TailReport again = build_potential(cfg("two-sided-cone-smoothed", {{"width", 1.0}}))->fit_conical_constants(true);
  CHECK(std::abs(again.c_inf - t.c_inf) < 1e-6);
  TailReport left = cone->fit_conical_constants(false);
  CHECK(std::abs(left.c_inf - t.c_inf) < 1e-8);

  auto hyp = build_potential(cfg("hyperboloid", {{"a", 1.0}}));
  TailReport th = hyp->fit_conical_constants(true);
  for (double x : logspace(100, hyp->chart().x_hi(), 30))
    CHECK(std::abs(hyp->chart().arclength_of(x) - std::sqrt(2.0) * x - th.c_inf) <= th.decay_constant / x * (1 + 1e-9));
  CHECK(th.decay_constant < 1.0);
  // tail bound is stable when the chart doubles
  auto hyp_big = build_potential(cfg("hyperboloid", {{"a", 1.0}}, 1, 2e5));
  TailReport tb = hyp_big->fit_conical_constants(true);
  CHECK(std::abs(tb.C3 / th.C3 - 1) < 0.2);
  CHECK(th.C2 == doctest::Approx(0.25).epsilon(0.05));
  // short chart cannot certify the tail
  auto tiny = build_potential(cfg("hyperboloid", {{"a", 1.0}}, 1, 30));
  CHECK_THROWS_AS(tiny->fit_conical_constants(true), ConicError);
}
