#include "conic/jost.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <mutex>
#include <unordered_map>

#include "conic/hankel.hpp"

namespace conic {

namespace {

double legendre(int n, double x) {
  double p0 = 1, p1 = x;
  if (n == 0) return p0;
  for (int k = 1; k < n; ++k) {
    const double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

RadauTableau build_radau(int s) {
  // right Radau points: roots of P_s(2x-1) - P_{s-1}(2x-1) on (0, 1]
  auto q = [s](double x) { return legendre(s, 2 * x - 1) - legendre(s - 1, 2 * x - 1); };
  RadauTableau t;
  const int n = 4000;
  for (int i = 0; i < n - 1; ++i) {
    double a = static_cast<double>(i) / n, b = static_cast<double>(i + 1) / n;
    if (q(a) * q(b) < 0) {
      for (int it = 0; it < 200 && b - a > 1e-17; ++it) {
        const double m = 0.5 * (a + b);
        (q(a) * q(m) <= 0 ? b : a) = m;
      }
      t.c.push_back(0.5 * (a + b));
    }
  }
  t.c.push_back(1.0);
  if (static_cast<int>(t.c.size()) != s) throw ConicError("radau_iia: root search failed");
  const std::vector<double> bw = bary_weights(t.c);
  const GaussRule& g = gauss_legendre(s + 2);
  t.A.assign(s, std::vector<double>(s, 0.0));
  std::vector<double> L(s);
  for (int i = 0; i < s; ++i)
    for (int k = 0; k < s + 2; ++k) {
      const double tau = 0.5 * t.c[i] * (1 + g.x[k]);
      lagrange_basis(t.c, bw, tau, L.data());
      for (int j = 0; j < s; ++j) t.A[i][j] += 0.5 * t.c[i] * g.w[k] * L[j];
    }
  return t;
}

// One collocation step of y' = [[0, 1], [V, -2 i lambda]] y from eta0 with signed step h.
template <class VF>
std::pair<cd, cd> radau_step(const RadauTableau& t, const VF& V, double lambda, double eta0, double h,
                             cd m0, cd dm0) {
  const int s = static_cast<int>(t.c.size());
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(2 * s, 2 * s);
  const cd damp(0, -2 * lambda);
  for (int j = 0; j < s; ++j) {
    const double v = V(eta0 + t.c[j] * h);
    for (int i = 0; i < s; ++i) {
      const double ha = h * t.A[i][j];
      M(2 * i, 2 * j + 1) -= ha;
      M(2 * i + 1, 2 * j) -= ha * v;
      M(2 * i + 1, 2 * j + 1) -= ha * damp;
    }
  }
  Eigen::VectorXcd rhs(2 * s);
  for (int i = 0; i < s; ++i) {
    rhs(2 * i) = m0;
    rhs(2 * i + 1) = dm0;
  }
  Eigen::VectorXcd Y = M.partialPivLu().solve(rhs);
  return {Y(2 * s - 2), Y(2 * s - 1)};
}

}  // namespace

const RadauTableau& radau_iia(int stages) {
  if (stages < 1 || stages > 9) throw ConicError("radau_iia: stages must be in [1, 9]");
  static std::once_flag flags[10];
  static RadauTableau tabs[10];
  std::call_once(flags[stages], [stages] { tabs[stages] = build_radau(stages); });
  return tabs[stages];
}

WaveSample ZeroEnergyBasis::u0(double xi) const {
  WaveSample w;
  w.xi = xi;
  w.value = u0_(xi);
  w.dvalue = du0_(xi);
  w.regime = Regime::low_energy_basis;
  return w;
}

WaveSample ZeroEnergyBasis::u1(double xi) const {
  const double a = u0_(xi), da = du0_(xi), y = y1_(xi);
  WaveSample w;
  w.xi = xi;
  w.value = a * y;
  w.dvalue = da * y + 1.0 / a;
  w.regime = Regime::low_energy_basis;
  return w;
}

ScatteringModel::ScatteringModel(std::shared_ptr<const Potential> potential)
    : potential_(std::move(potential)) {
  if (!potential_) throw ConicError("ScatteringModel: null potential");
  const ArclengthChart& ch = potential_->chart();
  const double lo = ch.xi_lo(), hi = ch.xi_hi();
  const bool tab = potential_->profile().kind() == ProfileKind::tabulated;
  const double rtol = tab ? 1e-11 : 1e-13;
  const int depth = tab ? 6 : 30;
  vbreaks_ = geometric_breaks(lo, hi, 0.25, 1.5);
  if (tab) {
    // spline data is only piecewise smooth: panels follow the knots
    const Profile& pr = potential_->profile();
    const double h = pr.table_step();
    const long n = std::lround((pr.x_hi() - pr.x_lo()) / h);
    for (long k = 0; k <= n; ++k) {
      const double x = pr.x_lo() + k * h;
      if (x <= ch.x_lo() || x >= ch.x_hi()) continue;
      vbreaks_.push_back(ch.arclength_of(x));
    }
    std::sort(vbreaks_.begin(), vbreaks_.end());
    std::vector<double> merged;
    for (double b : vbreaks_)
      if (merged.empty() || b - merged.back() > 1e-9 * h) merged.push_back(b);
    if (merged.back() != hi) merged.back() = hi;
    vbreaks_ = std::move(merged);
  }
  const Potential& P = *potential_;
  // the four tables share breaks and nodes, so samples are computed once
  std::unordered_map<double, PotentialSample> memo;
  auto at = [&P, &memo](double x) -> const PotentialSample& {
    auto it = memo.find(x);
    if (it == memo.end()) it = memo.emplace(x, P.at(x)).first;
    return it->second;
  };
  vt_ = PiecewiseCheb<double>([&at](double x) { return at(x).V; }, vbreaks_, 16, rtol, 1e-300, depth);

  const double d = P.profile().d();
  zero_.u0_ = PiecewiseCheb<double>(
      [&at, d](double x) { return std::pow(at(x).r, d / 2); }, vbreaks_, 16, rtol, 1e-300, depth);
  zero_.du0_ = PiecewiseCheb<double>(
      [&at, d](double x) {
        const PotentialSample& s = at(x);
        return 0.5 * d * std::pow(s.r, d / 2 - 1) * s.rdot;
      },
      vbreaks_, 16, rtol, 1e-300, depth);
  PiecewiseCheb<double> g([&at, d](double x) { return std::pow(at(x).r, -d); }, vbreaks_, 16, rtol,
                          1e-300, depth);
  // cumulative int_0^xi r^{-d} at the breaks, anchored at the break nearest 0
  std::vector<double> cum(vbreaks_.size(), 0.0);
  auto zero_it = std::lower_bound(vbreaks_.begin(), vbreaks_.end(), 0.0);
  if (zero_it == vbreaks_.end() || *zero_it != 0.0)
    throw ConicError("ScatteringModel: chart must contain xi = 0");
  const std::size_t z = static_cast<std::size_t>(zero_it - vbreaks_.begin());
  auto piece = [&g](double a, double b) {
    const double m = 0.5 * (a + b);
    return gl_integrate([&g](double x) { return g(x); }, a, m, 40) +
           gl_integrate([&g](double x) { return g(x); }, m, b, 40);
  };
  for (std::size_t k = z + 1; k < vbreaks_.size(); ++k) cum[k] = cum[k - 1] + piece(vbreaks_[k - 1], vbreaks_[k]);
  for (std::size_t k = z; k-- > 0;) cum[k] = cum[k + 1] - piece(vbreaks_[k], vbreaks_[k + 1]);
  const std::vector<double>& vb = vbreaks_;
  zero_.y1_ = PiecewiseCheb<double>(
      [&](double x) {
        auto it = std::upper_bound(vb.begin(), vb.end(), x);
        std::size_t k = it == vb.begin() ? 0 : static_cast<std::size_t>(it - vb.begin()) - 1;
        k = std::min(k, vb.size() - 2);
        return cum[k] + gl_integrate([&g](double u) { return g(u); }, vb[k], x, 30);
      },
      vbreaks_, 16, 1e-14, 1e-300, depth);
  grid_plus_ = grid(1, JostOptions{}.step_fraction);
  grid_minus_ = grid(-1, JostOptions{}.step_fraction);
}

std::vector<double> ScatteringModel::grid(int sigma, double c) const {
  if (!(c > 0 && c <= 0.5)) throw ConicError("jost: step_fraction must be in (0, 0.5]");
  const double end = sigma > 0 ? xi_hi() : -xi_lo();
  std::vector<double> g{0.0};
  double x = 0;
  while (x < end) {
    double h = c * std::sqrt(1 + x * x);
    h = std::min(h, 0.5 * vt_.panel_width(std::clamp(sigma * x, xi_lo(), xi_hi())));
    const double probe = sigma * std::min(x + h, end);
    h = std::min(h, 0.5 * vt_.panel_width(std::clamp(probe, xi_lo(), xi_hi())));
    x += h;
    if (end - x < 0.25 * h) x = end;
    g.push_back(x);
  }
  return g;
}

double ScatteringModel::lambda_min() const { return 4.0 / std::min(xi_hi(), -xi_lo()); }

HalfLine ScatteringModel::integrate_side(int sigma, double lambda, const JostOptions& opts) const {
  const std::vector<double>& nodes =
      opts.step_fraction == JostOptions{}.step_fraction ? (sigma > 0 ? grid_plus_ : grid_minus_)
                                                         : grid(sigma, opts.step_fraction);
  const double E = nodes.back();
  if (E * lambda < 4)
    throw ConicError("jost: lambda=" + std::to_string(lambda) + " gives xi_max*lambda < 4; enlarge x_max");
  const RadauTableau& tab = radau_iia(opts.stages);
  const Profile& prof = potential_->profile();
  const bool conical = sigma > 0 ? prof.conical_right() : prof.conical_left();
  HalfLine h;
  h.sigma = sigma;
  h.lambda = lambda;
  cd m = 1.0, dm = 0.0;
  const double vE = V(sigma * E);
  if (conical && prof.d() == 1) {
    auto [a, b] = m0_reference(E, lambda);
    m = a;
    dm = b;
    h.hankel_start = true;
    h.init_error = std::abs(vE + 0.25 / (E * E)) * E / (2 * lambda);
  } else {
    h.init_error = std::abs(vE) * E / lambda;
  }
  auto Vs = [this, sigma](double eta) { return V(sigma * eta); };
  const std::size_t n = nodes.size();
  h.eta.resize(n);
  h.m.resize(n);
  h.dm.resize(n);
  h.eta[n - 1] = E;
  h.m[n - 1] = m;
  h.dm[n - 1] = dm;
  for (std::size_t k = n - 1; k-- > 0;) {
    const double a = nodes[k + 1], b = nodes[k];
    int sub = 1;
    if (std::isfinite(opts.phase_step)) sub = std::max(1, static_cast<int>(std::ceil((a - b) * lambda / opts.phase_step)));
    const double hs = (b - a) / sub;
    for (int i = 0; i < sub; ++i) std::tie(m, dm) = radau_step(tab, Vs, lambda, a + i * hs, hs, m, dm);
    h.eta[k] = b;
    h.m[k] = m;
    h.dm[k] = dm;
  }
  return h;
}

std::pair<cd, cd> JostSolution::side(const HalfLine& h, double eta) const {
  if (eta < 0 || eta > h.eta.back() * (1 + 1e-14))
    throw ConicError("jost: xi=" + std::to_string(h.sigma * eta) + " outside the computed range");
  auto it = std::lower_bound(h.eta.begin(), h.eta.end(), eta);
  std::size_t k = static_cast<std::size_t>(it - h.eta.begin());
  if (k == h.eta.size()) k = h.eta.size() - 1;
  if (k > 0 && eta - h.eta[k - 1] < h.eta[k] - eta) --k;
  cd m = h.m[k], dm = h.dm[k];
  const double d = eta - h.eta[k];
  if (d != 0) {
    const RadauTableau& tab = radau_iia(opts_.stages);
    const int sigma = h.sigma;
    const ScatteringModel* md = model_;
    auto Vs = [md, sigma](double e) { return md->V(sigma * e); };
    int sub = 1;
    if (std::isfinite(opts_.phase_step))
      sub = std::max(1, static_cast<int>(std::ceil(std::abs(d) * lambda_ / opts_.phase_step)));
    const double hs = d / sub;
    for (int i = 0; i < sub; ++i) std::tie(m, dm) = radau_step(tab, Vs, lambda_, h.eta[k] + i * hs, hs, m, dm);
  }
  const cd ph = std::polar(1.0, lambda_ * eta);
  return {ph * m, ph * (dm + cd(0, lambda_) * m)};
}

namespace {

WaveSample make_sample(double xi, double lambda, cd v, cd dv, bool conj) {
  WaveSample w;
  w.xi = xi;
  w.lambda = conj ? -lambda : lambda;
  w.value = conj ? std::conj(v) : v;
  w.dvalue = conj ? std::conj(dv) : dv;
  w.regime = Regime::oscillatory;
  return w;
}

}  // namespace

WaveSample JostSolution::f_plus(double xi) const {
  if (xi >= 0) {
    auto [g, dg] = side(plus_, xi);
    return make_sample(xi, lambda_, g, dg, conj_);
  }
  auto [g, dg] = side(minus_, -xi);
  const cd fm = g, dfm = -dg;
  const cd v = alpha_p_ * fm + beta_m_ * std::conj(fm);
  const cd dv = alpha_p_ * dfm + beta_m_ * std::conj(dfm);
  return make_sample(xi, lambda_, v, dv, conj_);
}

WaveSample JostSolution::f_minus(double xi) const {
  if (xi <= 0) {
    auto [g, dg] = side(minus_, -xi);
    return make_sample(xi, lambda_, g, -dg, conj_);
  }
  auto [g, dg] = side(plus_, xi);
  const cd v = alpha_m_ * g + beta_m_ * std::conj(g);
  const cd dv = alpha_m_ * dg + beta_m_ * std::conj(dg);
  return make_sample(xi, lambda_, v, dv, conj_);
}

WaveSample JostSolution::m_plus(double xi) const {
  WaveSample f = f_plus(xi);
  const double l = f.lambda;
  const cd ph = std::polar(1.0, -l * xi);
  WaveSample m = f;
  m.value = ph * f.value;
  m.dvalue = ph * (f.dvalue - cd(0, l) * f.value);
  return m;
}

WaveSample JostSolution::m_minus(double xi) const {
  WaveSample f = f_minus(xi);
  const double l = f.lambda;
  const cd ph = std::polar(1.0, l * xi);
  WaveSample m = f;
  m.value = ph * f.value;
  m.dvalue = ph * (f.dvalue + cd(0, l) * f.value);
  return m;
}

JostSolution ScatteringModel::jost(double lambda, const JostOptions& opts) const {
  if (lambda == 0 || !std::isfinite(lambda)) throw ConicError("jost: lambda must be nonzero and finite");
  JostSolution s;
  s.model_ = this;
  s.opts_ = opts;
  s.conj_ = lambda < 0;
  s.lambda_ = std::abs(lambda);
  const double l = s.lambda_;
  s.plus_ = integrate_side(1, l, opts);
  s.minus_ = integrate_side(-1, l, opts);
  // values at xi = 0 (unconjugated)
  const cd fp = s.plus_.m.front(), dfp = s.plus_.dm.front() + cd(0, l) * fp;
  const cd fm = s.minus_.m.front(), dfm = -(s.minus_.dm.front() + cd(0, l) * fm);
  const cd W = fp * dfm - dfp * fm;
  const cd two_il(0, 2 * l);
  s.W_ = W;
  s.beta_m_ = W / (-two_il);
  s.alpha_m_ = (fm * std::conj(dfp) - dfm * std::conj(fp)) / (-two_il);
  s.alpha_p_ = (fp * std::conj(dfm) - dfp * std::conj(fm)) / two_il;
  return s;
}

LowEnergyBasis ScatteringModel::low_energy(double lambda, double tol) const {
  if (!(lambda > 0)) throw ConicError("low_energy_basis: lambda must be positive");
  const double w = 4.0 / lambda;
  if (w > xi_hi() || -w < xi_lo())
    throw ConicError("low_energy_basis: window 4/lambda=" + std::to_string(w) + " exceeds the chart");
  LowEnergyBasis B;
  B.model_ = this;
  B.lambda_ = lambda;
  B.w_ = w;
  const ZeroEnergyBasis* z = &zero_;
  const double l2 = lambda * lambda;
  std::vector<double> fwd = geometric_breaks(0, w, 0.25, 2.0), bwd;
  for (auto it = fwd.rbegin(); it != fwd.rend(); ++it) bwd.push_back(-*it);
  VolterraOptions o;
  for (int j = 0; j < 2; ++j)
    for (int side = 0; side < 2; ++side) {
      VolterraProblem p;
      p.direction = side == 0 ? VolterraDirection::forward : VolterraDirection::backward;
      p.a = side == 0 ? 0 : -w;
      p.b = side == 0 ? w : 0;
      p.breaks = side == 0 ? fwd : bwd;
      const double sign = side == 0 ? -1 : 1;
      p.kernel = [z, l2, j, sign](double x, double s) {
        const double u = z->u0_(s), ys = z->y1_(s), yx = z->y1_(x);
        double k = sign * l2 * u * u * (yx - ys);
        if (j == 1) k *= ys / yx;
        return cd(k);
      };
      p.forcing = [](double) { return cd(1.0); };
      try {
        B.h_.push_back(volterra_solve(p, tol, o));
      } catch (const ConicError& e) {
        throw ConicError(std::string("low_energy_basis: lambda=") + std::to_string(lambda) + ": " + e.what());
      }
      B.mu_ = std::max(B.mu_, B.h_.back().mu);
    }
  for (double x : {std::min(1.0, w), w / 100, w / 10, w / 2, w}) {
    for (double sx : {x, -x}) {
      const cd W = wronskian(B.u0(sx), B.u1(sx));
      B.w_defect_ = std::max(B.w_defect_, std::abs(W - 1.0));
    }
  }
  return B;
}

WaveSample LowEnergyBasis::u(int j, double xi) const {
  if (j != 0 && j != 1) throw ConicError("low_energy_basis: index must be 0 or 1");
  if (std::abs(xi) > w_ * (1 + 1e-12))
    throw ConicError("low_energy_basis: xi=" + std::to_string(xi) + " outside the window");
  const ZeroEnergyBasis& z = model_->zero_energy();
  WaveSample out = j == 0 ? z.u0(xi) : z.u1(xi);
  out.lambda = lambda_;
  if (xi == 0) return out;
  const int side = xi > 0 ? 0 : 1;
  const VolterraSolution& h = h_[2 * j + side];
  const double l2 = lambda_ * lambda_, sign = side == 0 ? -1 : 1;
  const double ux = z.u0(xi).value.real(), dux = z.u0(xi).dvalue.real(), yx = z.y1(xi);
  auto uj = [&z, j](double s) {
    const double u = z.u0(s).value.real();
    return j == 0 ? u : u * z.y1(s);
  };
  const Kernel2 kv = [&](double, double s) {
    return cd(sign * l2 * ux * z.u0(s).value.real() * (yx - z.y1(s)) * uj(s));
  };
  const Kernel2 kd = [&](double, double s) {
    const double u = z.u0(s).value.real();
    return cd(sign * l2 * u * (dux * (yx - z.y1(s)) + 1.0 / ux) * uj(s));
  };
  out.value += h.integrate(xi, kv);
  out.dvalue += h.integrate(xi, kd);
  return out;
}

namespace {

struct Coeffs {
  cd ap, bp, am, bm;
};

Coeffs coeffs_at(const JostSolution& J, const LowEnergyBasis& L, double xm) {
  Coeffs c;
  const WaveSample fp = J.f_plus(xm), fm = J.f_minus(-xm);
  c.ap = wronskian(fp, L.u1(xm));
  c.bp = -wronskian(fp, L.u0(xm));
  c.am = wronskian(fm, L.u1(-xm));
  c.bm = -wronskian(fm, L.u0(-xm));
  return c;
}

double rel(cd a, cd b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

}  // namespace

ScatteringData ScatteringModel::scattering(double lambda) const {
  if (!(lambda > 0)) throw ConicError("scattering: lambda must be positive");
  const JostSolution J = jost(lambda);
  ScatteringData d;
  d.lambda = lambda;
  d.W_direct = J.W();
  d.alpha_minus = J.alpha_minus();
  d.beta_minus = J.beta_minus();
  d.W = d.W_direct;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  d.a_plus = d.b_plus = d.a_minus = d.b_minus = cd(nan, nan);
  const bool low_ok = lambda <= 4 && 4.0 / lambda <= std::min(xi_hi(), -xi_lo());
  if (low_ok) {
    const LowEnergyBasis L = low_energy(lambda);
    const double xm = 1.0 / std::sqrt(lambda);
    const Coeffs c = coeffs_at(J, L, xm);
    d.a_plus = c.ap;
    d.b_plus = c.bp;
    d.a_minus = c.am;
    d.b_minus = c.bm;
    double spread = 0;
    for (double f : {0.5, 2.0}) {
      const Coeffs o = coeffs_at(J, L, f * xm);
      spread = std::max({spread, rel(o.ap, c.ap), rel(o.bp, c.bp), rel(o.am, c.am), rel(o.bm, c.bm)});
    }
    d.residuals["wronskian_constancy"] = spread;
    d.residuals["u_wronskian"] = L.wronskian_defect();
    const cd Wlow = c.ap * c.bm - c.am * c.bp;
    d.residuals["W_low_vs_direct"] = rel(Wlow, d.W_direct);
    if (lambda <= kLambdaLow) d.W = Wlow;
  }
  d.beta_minus = d.W / cd(0, -2 * lambda);
  d.residuals["beta_vs_direct"] = rel(d.beta_minus, J.beta_minus());
  d.residuals["unitarity"] = std::abs(std::norm(d.beta_minus) - std::norm(d.alpha_minus) - 1.0);
  d.residuals["unitarity_direct"] = std::abs(std::norm(J.beta_minus()) - std::norm(J.alpha_minus()) - 1.0);
  d.residuals["start_error"] = J.init_error();
  return d;
}

JostSolution jost_plus(const ScatteringModel& m, double lambda, const JostOptions& opts) {
  return m.jost(lambda, opts);
}

JostSolution jost_minus(const ScatteringModel& m, double lambda, const JostOptions& opts) {
  return m.jost(lambda, opts);
}

const ZeroEnergyBasis& zero_energy_basis(const ScatteringModel& m) { return m.zero_energy(); }

LowEnergyBasis low_energy_basis(const ScatteringModel& m, double lambda) {
  if (lambda > kLambdaLow) throw ConicError("low_energy_basis: lambda above lambda_low");
  return m.low_energy(lambda);
}

ConnectionCoefficients connection_coefficients(const ScatteringModel& m, double lambda) {
  const ScatteringData d = m.scattering(lambda);
  if (std::isnan(d.a_plus.real())) throw ConicError("connection_coefficients: no overlap window");
  ConnectionCoefficients c;
  c.a_plus = d.a_plus;
  c.b_plus = d.b_plus;
  c.a_minus = d.a_minus;
  c.b_minus = d.b_minus;
  c.xi_match = 1.0 / std::sqrt(lambda);
  c.constancy = d.residuals.at("wronskian_constancy");
  return c;
}

cd wronskian(const ScatteringModel& m, double lambda) {
  return std::abs(lambda) > kLambdaLow ? m.jost(lambda).W() : m.scattering(lambda).W;
}

std::pair<cd, cd> reflection_transmission(const ScatteringModel& m, double lambda) {
  const ScatteringData d = m.scattering(lambda);
  return {d.alpha_minus, d.beta_minus};
}

}  // namespace conic
