#include "conic/volterra.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <functional>

namespace conic {

namespace {

bool forward(const VolterraProblem& p) { return p.direction == VolterraDirection::forward; }

// Sampled sup over the admissible x of |K(x, s)|.
double sup_over_x(const VolterraProblem& p, double s, double lo, double hi,
                  const std::vector<double>& extra) {
  double xlo = forward(p) ? s : lo;
  double xhi = forward(p) ? hi : s;
  static const double fr[] = {0,   1e-3, 1e-2, 0.05, 0.1,  0.2,  0.3,  0.4,  0.5,
                              0.6, 0.7,  0.8,  0.9,  0.95, 0.99, 0.999, 1};
  std::vector<double> xs;
  for (double f : fr) xs.push_back(xlo + f * (xhi - xlo));
  for (double x : extra)
    if (x > xlo && x < xhi) xs.push_back(x);
  std::sort(xs.begin(), xs.end());
  std::vector<double> v(xs.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    v[i] = std::abs(p.kernel(xs[i], s));
    if (v[i] > v[best]) best = i;
  }
  double m = v[best];
  // golden-section refinement of the peak between the neighbouring samples
  double glo = xs[best == 0 ? 0 : best - 1], ghi = xs[std::min(best + 1, xs.size() - 1)];
  const double g = 0.5 * (std::sqrt(5.0) - 1);
  double c = ghi - g * (ghi - glo), d = glo + g * (ghi - glo);
  double fc = std::abs(p.kernel(c, s)), fd = std::abs(p.kernel(d, s));
  for (int it = 0; it < 40 && ghi - glo > 1e-12 * (1 + std::abs(ghi)); ++it) {
    if (fc > fd) {
      ghi = d, d = c, fd = fc;
      c = ghi - g * (ghi - glo), fc = std::abs(p.kernel(c, s));
    } else {
      glo = c, c = d, fc = fd;
      d = glo + g * (ghi - glo), fd = std::abs(p.kernel(d, s));
    }
  }
  return std::max({m, fc, fd});
}

double truncate_upper(const VolterraProblem& p, double tail_tol, double& tail) {
  if (std::isfinite(p.b)) {
    tail = 0;
    return p.b;
  }
  if (forward(p)) throw ConicError("volterra: infinite limit requires the backward form");
  if (!(p.tail_exponent > 1)) throw ConicError("volterra: infinite limit needs tail exponent > 1");
  double b = std::max(p.a + 1.0, 2 * std::abs(p.a));
  for (double x : p.breaks)
    if (std::isfinite(x)) b = std::max(b, x);
  for (int it = 0; it < 200; ++it) {
    const double s = sup_over_x(p, b, p.a, b, {});
    tail = s * b / (p.tail_exponent - 1);
    if (tail < tail_tol) return b;
    b *= 2;
    if (b > 1e18) break;
  }
  throw ConicError("volterra: kernel tail does not decay (divergent mu)");
}

std::vector<double> make_breaks(const VolterraProblem& p, double b) {
  std::vector<double> br;
  br.push_back(p.a);
  for (double x : p.breaks)
    if (x > p.a && x < b) br.push_back(x);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  if (br.size() == 1) {
    const double L = b - p.a;
    if (L <= 8) {
      const int n = std::max(1, static_cast<int>(std::ceil(L)));
      for (int i = 1; i < n; ++i) br.push_back(p.a + L * i / n);
    } else {
      for (double d = 0.5; d < L * 0.75; d *= 2) br.push_back(p.a + d);
    }
  } else {
    double last = br.back();
    double step = last - br[br.size() - 2];
    while (b - last > 1.5 * step) {
      step = std::max(step, 0.5 * (last - p.a));
      last += step;
      if (b - last < 0.5 * step) break;
      br.push_back(last);
    }
  }
  br.push_back(b);
  std::vector<double> out{br.front()};
  for (std::size_t i = 1; i < br.size(); ++i) {
    const double w = br[i] - out.back();
    const int k = std::isfinite(p.max_panel_width)
                      ? std::max(1, static_cast<int>(std::ceil(w / p.max_panel_width)))
                      : 1;
    const double start = out.back();
    for (int j = 1; j <= k; ++j) out.push_back(j == k ? br[i] : start + w * j / k);
  }
  return out;
}

struct Grid {
  std::vector<double> breaks;
  int n;
  const GaussRule* rule;
  std::vector<double> unit_bw;
  std::size_t size() const { return (breaks.size() - 1) * static_cast<std::size_t>(n); }
  double node(std::size_t q, int j) const {
    const double c = 0.5 * (breaks[q] + breaks[q + 1]), h = 0.5 * (breaks[q + 1] - breaks[q]);
    return c + h * rule->x[j];
  }
  std::size_t panel_of(double x) const {
    auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
    std::size_t q = it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
    return std::min(q, breaks.size() - 2);
  }
  // Adds weights of int_range k(x,s) f(s) ds onto row (indexed like the nodes).
  template <class K>
  void row(double x, bool fwd, const K& k, cd* out) const {
    const std::size_t p = panel_of(x);
    const std::size_t P = breaks.size() - 1;
    auto full = [&](std::size_t q) {
      const double h = 0.5 * (breaks[q + 1] - breaks[q]);
      for (int j = 0; j < n; ++j) out[q * n + j] += h * rule->w[j] * k(x, node(q, j));
    };
    if (fwd)
      for (std::size_t q = 0; q < p; ++q) full(q);
    else
      for (std::size_t q = p + 1; q < P; ++q) full(q);
    const double lo = fwd ? breaks[p] : x, hi = fwd ? x : breaks[p + 1];
    if (hi <= lo) return;
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    const double pc = 0.5 * (breaks[p] + breaks[p + 1]), ph = 0.5 * (breaks[p + 1] - breaks[p]);
    std::vector<double> L(n);
    for (int l = 0; l < n; ++l) {
      const double s = c + h * rule->x[l];
      lagrange_basis(rule->x, unit_bw, (s - pc) / ph, L.data());
      const cd kv = h * rule->w[l] * k(x, s);
      for (int j = 0; j < n; ++j) out[p * n + j] += kv * L[j];
    }
  }
};

}  // namespace

double estimate_mu(const VolterraProblem& p, double tail_tol) {
  if (!p.kernel) throw ConicError("volterra: kernel missing");
  double tail = 0;
  const double b = truncate_upper(p, tail_tol, tail);
  const std::vector<double> br = make_breaks(p, b);
  std::vector<double> extra;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    extra.push_back(br[i]);
    extra.push_back(0.5 * (br[i] + br[i + 1]));
  }
  extra.push_back(br.back());
  auto sup = [&](double s) { return sup_over_x(p, s, p.a, b, extra); };
  // adaptive in s: a kink of the sup curve must not bias the sum low
  std::function<double(double, double, double, int)> adapt = [&](double lo, double hi, double coarse,
                                                                  int depth) -> double {
    const double m = 0.5 * (lo + hi);
    const double l = gl_integrate(sup, lo, m, 8), r = gl_integrate(sup, m, hi, 8);
    if (std::abs(l + r - coarse) <= 1e-9 * std::abs(l + r) + 1e-14 || depth >= 14) return l + r;
    return adapt(lo, m, l, depth + 1) + adapt(m, hi, r, depth + 1);
  };
  double mu = 0;
  std::vector<double> contrib;
  for (std::size_t q = 0; q + 1 < br.size(); ++q) {
    const double part = adapt(br[q], br[q + 1], gl_integrate(sup, br[q], br[q + 1], 8), 0);
    contrib.push_back(part);
    mu += part;
  }
  if (!std::isfinite(p.b) && contrib.size() >= 4) {
    // geometric tail panels must shrink for the integral to converge
    const std::size_t m = contrib.size();
    if (contrib[m - 1] > contrib[m - 2] && contrib[m - 2] > contrib[m - 3] && contrib[m - 1] > tail_tol)
      throw ConicError("estimate_mu: panel sums are not Cauchy (divergent mu)");
  }
  if (!std::isfinite(mu)) throw ConicError("estimate_mu: divergent integral");
  return mu + tail;
}

VolterraSolution volterra_solve(const VolterraProblem& p, double tol, const VolterraOptions& opts) {
  if (!(tol > 0)) throw ConicError("volterra_solve: tol must be positive");
  if (!p.kernel || !p.forcing) throw ConicError("volterra_solve: kernel and forcing required");
  if (!(p.b > p.a)) throw ConicError("volterra_solve: empty domain");
  double tail = 0;
  const double b = truncate_upper(p, tol / 10, tail);
  VolterraProblem pt = p;
  pt.b = b;
  const double mu = estimate_mu(pt);
  if (mu > opts.mu_limit)
    throw ConicError("volterra_solve: mu=" + std::to_string(mu) + " exceeds overflow guard");
  const bool fwd = forward(p);

  Grid grid;
  grid.n = opts.nodes;
  grid.rule = &gauss_legendre(opts.nodes);
  grid.unit_bw = bary_weights(grid.rule->x);
  grid.breaks = make_breaks(p, b);

  for (int round = 0;; ++round) {
    const std::size_t N = grid.size();
    if (N > opts.max_unknowns) throw ConicError("volterra_solve: panel budget exhausted");
    std::vector<double> xs(N);
    for (std::size_t q = 0; q + 1 < grid.breaks.size(); ++q)
      for (int j = 0; j < grid.n; ++j) xs[q * grid.n + j] = grid.node(q, j);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
    Eigen::VectorXcd g(N);
    std::vector<cd> rowbuf(N);
    for (std::size_t i = 0; i < N; ++i) {
      g(i) = p.forcing(xs[i]);
      std::fill(rowbuf.begin(), rowbuf.end(), cd{});
      grid.row(xs[i], fwd, p.kernel, rowbuf.data());
      for (std::size_t j = 0; j < N; ++j) A(i, j) = rowbuf[j];
    }
    const double gn = g.cwiseAbs().maxCoeff();
    Eigen::VectorXcd f = g;
    int sweeps = 0;
    if (gn > 0) {
      for (;;) {
        Eigen::VectorXcd fn = g + A * f;
        const double diff = (fn - f).cwiseAbs().maxCoeff();
        f = fn;
        ++sweeps;
        if (diff < tol * gn) break;
        if (sweeps >= opts.max_sweeps)
          throw ConicError("volterra_solve: no convergence within " + std::to_string(opts.max_sweeps) + " sweeps");
      }
    }
    VolterraSolution sol;
    sol.n_ = grid.n;
    sol.bw_ = grid.unit_bw;
    sol.kernel_ = p.kernel;
    sol.forcing_ = p.forcing;
    sol.breaks = grid.breaks;
    sol.nodes = xs;
    sol.values.assign(f.data(), f.data() + N);
    sol.mu = mu;
    sol.g_norm = gn;
    sol.f_norm = f.cwiseAbs().maxCoeff();
    sol.b_eff = b;
    sol.tail_bound = tail;
    sol.sweeps = sweeps;
    sol.direction = p.direction;
    sol.a = p.a;
    // Nystrom consistency on off-node check points
    double res = 0;
    for (std::size_t q = 0; q + 1 < grid.breaks.size(); ++q)
      for (double fr : {0.31, 0.77}) {
        const double x = grid.breaks[q] + fr * (grid.breaks[q + 1] - grid.breaks[q]);
        res = std::max(res, std::abs(sol(x) - sol.nystrom(x)));
      }
    sol.residual = res;
    if (res <= 10 * tol * std::max(gn, 1e-300) || gn == 0 || round >= opts.max_doublings) {
      if (res > 10 * tol * gn && gn > 0)
        throw ConicError("volterra_solve: residual " + std::to_string(res / gn) +
                         " above tolerance after panel doubling");
      if (sol.f_norm > std::exp(mu) * gn * (1 + 1e-6) + 10 * tol * gn)
        throw ConicError("volterra_solve: bound |f| <= e^mu |g| violated");
      return sol;
    }
    std::vector<double> nb{grid.breaks.front()};
    for (std::size_t q = 0; q + 1 < grid.breaks.size(); ++q) {
      nb.push_back(0.5 * (grid.breaks[q] + grid.breaks[q + 1]));
      nb.push_back(grid.breaks[q + 1]);
    }
    grid.breaks = nb;
  }
}

std::size_t VolterraSolution::panel_of(double x) const {
  auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  std::size_t q = it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
  return std::min(q, breaks.size() - 2);
}

cd VolterraSolution::operator()(double x) const {
  if (x < breaks.front() - 1e-12 * (1 + std::abs(breaks.front())) ||
      x > breaks.back() + 1e-12 * (1 + std::abs(breaks.back())))
    throw ConicError("VolterraSolution: x outside solved domain");
  const std::size_t q = panel_of(x);
  const double c = 0.5 * (breaks[q] + breaks[q + 1]), h = 0.5 * (breaks[q + 1] - breaks[q]);
  std::vector<double> L(n_);
  lagrange_basis(gauss_legendre(n_).x, bw_, (x - c) / h, L.data());
  cd v{};
  for (int j = 0; j < n_; ++j) v += L[j] * values[q * n_ + j];
  return v;
}

cd VolterraSolution::integrate(double x, const Kernel2& k2) const {
  Grid grid;
  grid.n = n_;
  grid.rule = &gauss_legendre(n_);
  grid.unit_bw = bw_;
  grid.breaks = breaks;
  std::vector<cd> row(nodes.size());
  grid.row(x, direction == VolterraDirection::forward, k2, row.data());
  cd acc{};
  for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * values[j];
  return acc;
}

cd VolterraSolution::nystrom(double x) const { return forcing_(x) + integrate(x, kernel_); }

}  // namespace conic
