#include "conic/geometry.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace conic {

const char* profile_kind_name(ProfileKind k) {
  switch (k) {
    case ProfileKind::cylinder: return "cylinder";
    case ProfileKind::hyperboloid: return "hyperboloid";
    case ProfileKind::cone_smoothed: return "two-sided-cone-smoothed";
    case ProfileKind::tabulated: return "custom-tabulated";
  }
  return "?";
}

namespace {

RDerivs from_jet(const Jet& j) { return {j.d(0), j.d(1), j.d(2), j.d(3)}; }

// Natural cubic spline second derivatives on a uniform grid.
std::vector<double> spline_moments(const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
  if (n < 3) return m;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double rhs = 6.0 * (y[i + 1] - 2 * y[i] + y[i - 1]) / (h * h);
    double denom = 4.0 - c[i - 1];
    c[i] = 1.0 / denom;
    d[i] = (rhs - d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m[i] = d[i] - c[i] * m[i + 1];
    if (i == 1) break;
  }
  return m;
}

double spline_eval(const std::vector<double>& y, const std::vector<double>& m, double x0,
                   double h, double x, double* dy = nullptr) {
  const std::size_t n = y.size();
  double u = (x - x0) / h;
  std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, double(n - 2)));
  double t = u - double(i);
  double a = 1 - t, b = t;
  double v = a * y[i] + b * y[i + 1] +
             ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
  if (dy)
    *dy = (y[i + 1] - y[i]) / h +
          ((3 * b * b - 1) * m[i + 1] - (3 * a * a - 1) * m[i]) * h / 6.0;
  return v;
}

}  // namespace

Profile Profile::cylinder(double radius, int d) {
  if (!(radius > 0)) throw ConicError("cylinder: radius must be positive");
  Profile p;
  p.kind_ = ProfileKind::cylinder;
  p.d_ = d;
  p.params_["radius"] = radius;
  return p;
}

Profile Profile::hyperboloid(double a, int d) {
  if (!(a > 0)) throw ConicError("hyperboloid: scale a must be positive");
  Profile p;
  p.kind_ = ProfileKind::hyperboloid;
  p.d_ = d;
  p.conical_left_ = p.conical_right_ = true;
  p.params_["a"] = a;
  return p;
}

Profile Profile::cone_smoothed(double width, int d) {
  if (!(width > 0)) throw ConicError("two-sided-cone-smoothed: width must be positive");
  Profile p;
  p.kind_ = ProfileKind::cone_smoothed;
  p.d_ = d;
  p.conical_left_ = p.conical_right_ = true;
  p.params_["width"] = width;
  return p;
}

Profile Profile::tabulated(std::vector<double> x, std::vector<double> r, int d,
                           bool conical_left, bool conical_right) {
  const std::size_t n = x.size();
  if (n < 8 || r.size() != n) throw ConicError("custom-tabulated: need >= 8 matching samples");
  const double h = (x.back() - x.front()) / double(n - 1);
  if (!(h > 0)) throw ConicError("custom-tabulated: grid must increase");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(x[i] - (x.front() + h * double(i))) > 1e-9 * (1 + std::abs(x[i])))
      throw ConicError("custom-tabulated: grid must be uniform");
    if (!(r[i] > 0)) throw ConicError("custom-tabulated: non-positive r in table");
  }
  if (!(x.front() < 0 && x.back() > 0)) throw ConicError("custom-tabulated: grid must contain 0");
  Profile p;
  p.kind_ = ProfileKind::tabulated;
  p.d_ = d;
  p.conical_left_ = conical_left;
  p.conical_right_ = conical_right;
  p.t0_ = x.front();
  p.th_ = h;
  // the outermost two cells lack centred stencils
  p.x_lo_ = x[2];
  p.x_hi_ = x[n - 3];
  p.tr_ = r;
  p.t1_.assign(n, 0);
  p.t2_.assign(n, 0);
  p.t3_.assign(n, 0);
  auto at = [&](long i) { return r[static_cast<std::size_t>(std::clamp<long>(i, 0, long(n) - 1))]; };
  for (std::size_t k = 0; k < n; ++k) {
    // keep the 5-point stencil inside the table
    long i = std::clamp<long>(long(k), 2, long(n) - 3);
    double fm2 = at(i - 2), fm1 = at(i - 1), f0 = at(i), f1 = at(i + 1), f2 = at(i + 2);
    p.t1_[k] = (fm2 - 8 * fm1 + 8 * f1 - f2) / (12 * h);
    p.t2_[k] = (-fm2 + 16 * fm1 - 30 * f0 + 16 * f1 - f2) / (12 * h * h);
    p.t3_[k] = (-fm2 + 2 * fm1 - 2 * f1 + f2) / (2 * h * h * h);
  }
  p.s0_ = spline_moments(p.tr_, h);
  p.s1_ = spline_moments(p.t1_, h);
  p.s2_ = spline_moments(p.t2_, h);
  p.s3_ = spline_moments(p.t3_, h);
  p.symmetric_ = false;
  return p;
}

RDerivs Profile::derivs(double x) const {
  switch (kind_) {
    case ProfileKind::cylinder: return {params_.at("radius"), 0, 0, 0};
    case ProfileKind::hyperboloid: {
      const double a = params_.at("a");
      Jet j = Jet::variable(x);
      return from_jet(sqrt(Jet(a * a) + j * j));
    }
    case ProfileKind::cone_smoothed: {
      const double w = params_.at("width");
      Jet u = Jet::variable(x) / Jet(w);
      Jet au = x < 0 ? -u : u;
      Jet s = smooth_step(Jet(2.0) * au - Jet(1.0));
      Jet q = (Jet(1.0) - s) * (Jet(0.5) + Jet(0.5) * u * u) + s * au;
      return from_jet(Jet(w) * q);
    }
    case ProfileKind::tabulated: {
      if (x < x_lo_ || x > x_hi_) throw ConicError("custom-tabulated: x outside table");
      return {spline_eval(tr_, s0_, t0_, th_, x), spline_eval(t1_, s1_, t0_, th_, x),
              spline_eval(t2_, s2_, t0_, th_, x), spline_eval(t3_, s3_, t0_, th_, x)};
    }
  }
  return {1, 0, 0, 0};
}

ProfileCheck check_profile(const Profile& p, double x_extent) {
  ProfileCheck c;
  const double lo = std::max(-x_extent, p.x_lo()), hi = std::min(x_extent, p.x_hi());
  std::vector<double> xs;
  for (double v : geometric_breaks(lo, hi, 0.05, 1.1)) xs.push_back(v);
  c.min_r = INFINITY;
  const double tol = p.derivative_tolerance();
  for (double x : xs) {
    RDerivs d = p.derivs(x);
    c.min_r = std::min(c.min_r, d.r);
    const double h = (p.kind() == ProfileKind::tabulated ? 0.5 * 1e-2 : 2e-4) * japanese(x);
    if (x - 2 * h < p.x_lo() || x + 2 * h > p.x_hi()) continue;
    RDerivs m2 = p.derivs(x - 2 * h), m1 = p.derivs(x - h), p1 = p.derivs(x + h),
            p2 = p.derivs(x + 2 * h);
    auto fd = [&](double a, double b, double cc, double dd) {
      return (a - 8 * b + 8 * cc - dd) / (12 * h);
    };
    const double num[3] = {fd(m2.r, m1.r, p1.r, p2.r), fd(m2.r1, m1.r1, p1.r1, p2.r1),
                           fd(m2.r2, m1.r2, p1.r2, p2.r2)};
    const double ex[3] = {d.r1, d.r2, d.r3};
    for (int k = 0; k < 3; ++k) {
      double floor = 1e-4 * std::pow(japanese(x), -double(k + 1)) * d.r;
      // stencil derivatives of tabulated data are roundoff limited: compare
      // r' and r'' above the noise level eps r / h^(k+1), skip the third
      if (p.kind() == ProfileKind::tabulated) {
        if (k == 2) continue;
        floor = std::max(floor, 1.2e-11 * d.r / std::pow(p.table_step(), k + 1));
      }
      double mis = std::abs(num[k] - ex[k]) / std::max(std::abs(ex[k]), floor);
      if (mis > c.max_derivative_mismatch) {
        c.max_derivative_mismatch = mis;
        c.worst_x = x;
        c.worst_order = k + 1;
      }
    }
  }
  auto conical_sup = [&](double sign) {
    double near = 0, far = 0;
    for (double ax : logspace(10.0, std::max(20.0, x_extent), 60)) {
      double x = sign * ax;
      if (x < p.x_lo() || x > p.x_hi()) continue;
      double v = ax * ax * std::abs(p.r(x) / ax - 1.0);
      (ax <= std::sqrt(10.0 * std::max(20.0, x_extent)) ? near : far) =
          std::max(ax <= std::sqrt(10.0 * std::max(20.0, x_extent)) ? near : far, v);
    }
    return std::pair{near, far};
  };
  if (!(c.min_r > 0)) {
    c.ok = false;
    c.message = "inf r must be positive";
  }
  if (c.max_derivative_mismatch > tol) {
    c.ok = false;
    c.message = "derivative evaluators disagree with finite differences (order " + std::to_string(c.worst_order) +
                " at x = " + std::to_string(c.worst_x) + ", relative mismatch " + std::to_string(c.max_derivative_mismatch) + ")";
  }
  if (p.conical_left()) {
    auto [n, f] = conical_sup(-1);
    c.conical_left_bound = std::max(n, f);
    if (f > 2 * n + 1) {
      c.ok = false;
      c.message = "left end is not conical";
    }
  }
  if (p.conical_right()) {
    auto [n, f] = conical_sup(1);
    c.conical_right_bound = std::max(n, f);
    if (f > 2 * n + 1) {
      c.ok = false;
      c.message = "right end is not conical";
    }
  }
  return c;
}

Profile make_profile(const ProfileConfig& cfg) {
  if (cfg.d < 1) throw ConicError("profile: d must be a positive integer");
  auto take = [&](std::set<std::string> allowed) {
    for (auto& [k, v] : cfg.params)
      if (!allowed.count(k)) throw ConicError("profile: unknown parameter '" + k + "' for kind " + cfg.kind);
  };
  auto param = [&](const char* key, double def) {
    auto it = cfg.params.find(key);
    return it == cfg.params.end() ? def : it->second;
  };
  Profile p;
  if (cfg.kind == "cylinder") {
    take({"radius"});
    p = Profile::cylinder(param("radius", 1.0), cfg.d);
  } else if (cfg.kind == "hyperboloid") {
    take({"a"});
    p = Profile::hyperboloid(param("a", 1.0), cfg.d);
  } else if (cfg.kind == "two-sided-cone-smoothed") {
    take({"width"});
    p = Profile::cone_smoothed(param("width", 1.0), cfg.d);
  } else if (cfg.kind == "custom-tabulated") {
    take({"conical_left", "conical_right"});
    p = Profile::tabulated(cfg.table_x, cfg.table_r, cfg.d, param("conical_left", 0) != 0,
                           param("conical_right", 0) != 0);
  } else {
    throw ConicError("profile: unknown kind '" + cfg.kind + "'");
  }
  if (cfg.kind != "custom-tabulated" && (!cfg.table_x.empty() || !cfg.table_r.empty()))
    throw ConicError("profile: table given for analytic kind");
  ProfileCheck chk = check_profile(p, 1e4);
  if (!chk.ok) throw ConicError("profile: " + chk.message);
  return p;
}

// ---------------- chart ----------------

ArclengthChart::ArclengthChart(Profile profile, double xi_max, double quad_tol)
    : profile_(std::move(profile)), quad_tol_(quad_tol) {
  if (!(xi_max > 0)) throw ConicError("chart: x_max must be positive");
  auto march = [&](double sign, double x_end) {
    std::vector<double> xs{0.0}, xis{0.0};
    double x = 0, xi = 0;
    double h = 0.0625;
    while (xi < xi_max && x < x_end) {
      h = std::min({h, x_end - x, std::max(0.0625, 0.25 * x)});
      for (;;) {
        double a = sign * x, b = sign * (x + h);
        double i10 = gl_integrate([&](double t) { return speed(t); }, a, b, 10);
        double i20 = gl_integrate([&](double t) { return speed(t); }, a, b, 20);
        if (std::abs(i20 - i10) <= quad_tol_ || h < 1e-6) {
          x += h;
          xi += sign * i20;
          break;
        }
        h *= 0.5;
      }
      xs.push_back(x);
      xis.push_back(xi);
      h *= 2;
    }
    return std::pair{xs, xis};
  };
  auto [rx, rxi] = march(1.0, profile_.x_hi());
  auto [lx, lxi] = march(-1.0, -profile_.x_lo());
  for (std::size_t i = lx.size(); i-- > 1;) {
    nx_.push_back(-lx[i]);
    nxi_.push_back(-lxi[i]);
  }
  for (std::size_t i = 0; i < rx.size(); ++i) {
    nx_.push_back(rx[i]);
    nxi_.push_back(rxi[i]);
  }
  for (double x : nx_) nds_.push_back(speed(x));
  xi_max_right_ = std::min(xi_max, nxi_.back());
  xi_max_left_ = std::min(xi_max, -nxi_.front());
  x_lo_ = nx_.front();
  x_hi_ = nx_.back();
  x_hi_ = x_of_arclength(xi_max_right_);
  x_lo_ = x_of_arclength(-xi_max_left_);
}

double ArclengthChart::speed(double x) const {
  double r1 = profile_.derivs(x).r1;
  return std::sqrt(1.0 + r1 * r1);
}

std::size_t ArclengthChart::node_index(double x) const {
  auto it = std::upper_bound(nx_.begin(), nx_.end(), x);
  if (it == nx_.begin()) return 0;
  std::size_t k = static_cast<std::size_t>(it - nx_.begin()) - 1;
  return std::min(k, nx_.size() - 2);
}

double ArclengthChart::integrate_piece(double a, double b) const {
  if (a == b) return 0.0;
  return gl_integrate([&](double t) { return speed(t); }, a, b, 20);
}

double ArclengthChart::arclength_of(double x) const {
  if (x < x_lo_ - 1e-12 * (1 - x_lo_) || x > x_hi_ + 1e-12 * (1 + x_hi_))
    throw ConicError("arclength_of: x=" + std::to_string(x) + " outside chart domain");
  if (x == 0) return 0.0;
  x = std::clamp(x, nx_.front(), nx_.back());
  std::size_t k = node_index(x);
  // integrate from the node nearer to x
  if (x - nx_[k] <= nx_[k + 1] - x) return nxi_[k] + integrate_piece(nx_[k], x);
  return nxi_[k + 1] - integrate_piece(x, nx_[k + 1]);
}

double ArclengthChart::x_of_arclength(double xi) const {
  if (xi < -xi_max_left_ * (1 + 1e-15) || xi > xi_max_right_ * (1 + 1e-15))
    throw ConicError("x_of_arclength: xi=" + std::to_string(xi) + " outside chart image");
  if (xi == 0) return 0.0;
  auto it = std::upper_bound(nxi_.begin(), nxi_.end(), xi);
  std::size_t k = it == nxi_.begin() ? 0 : static_cast<std::size_t>(it - nxi_.begin()) - 1;
  k = std::min(k, nxi_.size() - 2);
  const double xa = nx_[k], xb = nx_[k + 1];
  double a = xa, b = xb;
  double x = a + (b - a) * (xi - nxi_[k]) / (nxi_[k + 1] - nxi_[k]);
  for (int it2 = 0; it2 < 60; ++it2) {
    double f = (x - xa <= xb - x) ? nxi_[k] + integrate_piece(xa, x) - xi
                                  : nxi_[k + 1] - integrate_piece(x, xb) - xi;
    if (f > 0) b = x;
    else a = x;
    double xn = x - f / speed(x);
    if (!(xn >= a && xn <= b)) xn = 0.5 * (a + b);
    if (std::abs(xn - x) <= 1e-16 * (1 + std::abs(x))) {
      x = xn;
      break;
    }
    x = xn;
  }
  return x;
}

// ---------------- potential ----------------

Potential::Potential(std::shared_ptr<const ArclengthChart> chart, double xi_tail)
    : chart_(std::move(chart)), xi_tail_(xi_tail) {}

double Potential::inverse_square_coefficient() const {
  const double d = profile().d();
  return d * d / 4.0 - d / 2.0;
}

PotentialSample Potential::at(double xi) const {
  const double x = chart_->x_of_arclength(xi);
  const RDerivs r = profile().derivs(x);
  const double d = profile().d();
  const double s2 = 1.0 + r.r1 * r.r1;
  const double s = std::sqrt(s2);
  const double rdot = r.r1 / s;
  const double rddot = r.r2 / (s2 * s2);
  PotentialSample p;
  p.xi = xi;
  p.r = r.r;
  p.rdot = rdot;
  p.rho = 0.5 * d * rdot / r.r;
  const double q = rdot / r.r;
  p.V = 0.5 * d * rddot / r.r + inverse_square_coefficient() * q * q;
  return p;
}

double Potential::V1(double xi) const {
  if (std::abs(xi) < xi_tail_) throw ConicError("V1 undefined below xi_tail");
  return V(xi) - inverse_square_coefficient() / (xi * xi);
}

TailReport Potential::fit_conical_constants(bool right_side) const {
  const Profile& p = profile();
  if (right_side ? !p.conical_right() : !p.conical_left())
    throw ConicError("fit_conical_constants: side is not conical");
  const double sign = right_side ? 1.0 : -1.0;
  const double X = right_side ? chart_->x_hi() : -chart_->x_lo();
  const double XI = right_side ? chart_->xi_hi() : -chart_->xi_lo();
  if (X < 400 || XI < 20) throw ConicError("fit_conical_constants: chart too short for tail fit");
  TailReport t;
  t.right = right_side;
  // xi - sqrt2 x cancels about log10(x) digits, so the fit window is capped
  const double Xf = std::min(X, 1e6);
  std::vector<double> xs = logspace(Xf / 4, Xf, 40), y, c0, c1, c2;
  for (double x : xs) {
    y.push_back(sign * chart_->arclength_of(sign * x) - std::sqrt(2.0) * x);
    c0.push_back(1.0);
    c1.push_back(1.0 / x);
    c2.push_back(1.0 / (x * x));
  }
  LinearFit f = least_squares({c0, c1, c2}, y);
  t.c_inf = f.coef[0];
  t.fit_max_residual = f.max_abs_residual;
  if (t.fit_max_residual > 1e-7 * std::max(1.0, std::abs(t.c_inf)))
    throw ConicError("fit_conical_constants: residual fails to decay (x_max misconfigured)");
  for (double x : logspace(100.0, Xf, 80)) {
    double r = sign * chart_->arclength_of(sign * x) - std::sqrt(2.0) * x - t.c_inf;
    t.decay_constant = std::max(t.decay_constant, x * std::abs(r));
  }
  for (double xi : logspace(10.0, XI, 200)) {
    double v = V(sign * xi);
    t.C2 = std::max(t.C2, xi * xi * std::abs(v));
    t.C3 = std::max(t.C3, xi * xi * xi * std::abs(v - inverse_square_coefficient() / (xi * xi)));
  }
  return t;
}

std::shared_ptr<const Potential> build_potential(const ProfileConfig& cfg) {
  Profile p = make_profile(cfg);
  auto chart = std::make_shared<const ArclengthChart>(std::move(p), cfg.x_max.value_or(1e5));
  return std::make_shared<const Potential>(chart);
}

}  // namespace conic
