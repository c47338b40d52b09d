#include "conic/kernel.hpp"

#include <algorithm>
#include <boost/math/special_functions/bessel.hpp>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace conic {

const char* kernel_kind_name(KernelKind k) {
  switch (k) {
    case KernelKind::schrodinger: return "schrodinger";
    case KernelKind::wave_plus: return "wave_plus";
    case KernelKind::wave_minus: return "wave_minus";
  }
  return "?";
}

const char* band_name(Band b) {
  switch (b) {
    case Band::full: return "full";
    case Band::low_low: return "low_low";
    case Band::osc_osc: return "osc_osc";
    case Band::osc_low: return "osc_low";
    case Band::same_side_osc: return "same_side_osc";
    case Band::high_energy: return "high_energy";
  }
  return "?";
}

KernelKind parse_kernel_kind(const std::string& s) {
  for (KernelKind k : {KernelKind::schrodinger, KernelKind::wave_plus, KernelKind::wave_minus})
    if (s == kernel_kind_name(k)) return k;
  throw ConicError("unknown kernel kind '" + s + "'");
}

Band parse_band(const std::string& s) {
  for (Band b : {Band::full, Band::low_low, Band::osc_osc, Band::osc_low, Band::same_side_osc,
                 Band::high_energy})
    if (s == band_name(b)) return b;
  throw ConicError("unknown band '" + s + "'");
}

double spectral_density(const ScatteringModel& m, double xi, double xi_prime, double lambda) {
  if (!(lambda > 0)) throw ConicError("spectral_density: lambda must be positive");
  const double x = std::max(xi, xi_prime), y = std::min(xi, xi_prime);
  const JostSolution j = m.jost(lambda);
  const cd F = j.f_plus(x).value * j.f_minus(y).value / j.W();
  return 2 * lambda * F.imag();
}

double chi_energy(double lambda, double lambda_low) {
  return 1.0 - smooth_step(2.0 * lambda / lambda_low - 1.0);
}

double chi_space(double s) { return 1.0 - smooth_step(2.0 * s - 1.0); }

bool band_applies(Band b, double xi, double xi_prime) {
  if (b == Band::osc_osc) return xi * xi_prime <= 0;
  if (b == Band::same_side_osc) return xi * xi_prime >= 0;
  return true;
}

double band_weight(Band b, double lambda, double xi, double xi_prime, double lambda_low) {
  if (b == Band::full) return 1.0;
  const double e = chi_energy(lambda, lambda_low);
  if (b == Band::high_energy) return 1.0 - e;
  if (!band_applies(b, xi, xi_prime)) return 0.0;
  const double cx = chi_space(std::abs(xi) * lambda), cy = chi_space(std::abs(xi_prime) * lambda);
  switch (b) {
    case Band::low_low: return e * cx * cy;
    case Band::osc_osc:
    case Band::same_side_osc: return e * (1 - cx) * (1 - cy);
    case Band::osc_low: return e * ((1 - cx) * cy + cx * (1 - cy));
    default: return 0.0;
  }
}

// ---- scattering table ----

ScatteringTable::ScatteringTable(std::shared_ptr<const ScatteringModel> model,
                                 const KernelOptions& opts)
    : model_(std::move(model)), order_(opts.table_order) {
  const double lo = model_->lambda_min(), hi = opts.lambda_max;
  if (!(hi > lo)) throw ConicError("scattering table: lambda_max must exceed lambda_min");
  if (!(opts.panel_ratio > 1)) throw ConicError("scattering table: panel_ratio must exceed 1");
  if (order_ < 4) throw ConicError("scattering table: order must be at least 4");
  const int np = std::max(1, int(std::ceil(std::log(hi / lo) / std::log(opts.panel_ratio))));
  for (int k = 0; k <= np; ++k) breaks_.push_back(lo * std::pow(hi / lo, double(k) / np));
  breaks_.back() = hi;
  unit_.resize(order_);
  for (int k = 0; k < order_; ++k) unit_[k] = -std::cos(kPi * (2 * k + 1) / (2.0 * order_));
  bw_ = bary_weights(unit_);
  for (int p = 0; p < np; ++p) {
    const double c = 0.5 * (breaks_[p] + breaks_[p + 1]), h = 0.5 * (breaks_[p + 1] - breaks_[p]);
    for (int k = 0; k < order_; ++k) lambdas_.push_back(c + h * unit_[k]);
    check_.push_back(c + h * 0.5 * (unit_[0] + unit_[1]));
    check_.push_back(c + h * 0.5 * (unit_[order_ - 2] + unit_[order_ - 1]));
  }
  sols_.resize(lambdas_.size());
  check_sols_.resize(check_.size());
  const std::size_t n = lambdas_.size();
  parallel_for(n + check_.size(), [&](std::size_t i) {
    if (i < n)
      sols_[i] = model_->jost(lambdas_[i]);
    else
      check_sols_[i - n] = model_->jost(check_[i - n]);
  });
}

std::size_t ScatteringTable::panel_of(double lambda) const {
  auto it = std::upper_bound(breaks_.begin(), breaks_.end(), lambda);
  const std::size_t i = it == breaks_.begin() ? 0 : std::size_t(it - breaks_.begin()) - 1;
  return std::min(i, breaks_.size() - 2);
}

std::shared_ptr<const std::vector<cd>> ScatteringTable::spatial(double xi) const {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(xi);
    if (it != memo_.end()) return it->second;
  }
  if (xi > model_->xi_hi() || xi < model_->xi_lo())
    throw ConicError("kernel: xi=" + std::to_string(xi) + " outside the chart");
  auto v = std::make_shared<std::vector<cd>>(sols_.size() + check_sols_.size());
  auto eval = [&](const JostSolution& s) {
    return xi >= 0 ? s.m_plus(xi).value : s.m_minus(xi).value;
  };
  for (std::size_t i = 0; i < sols_.size(); ++i) (*v)[i] = eval(sols_[i]);
  for (std::size_t i = 0; i < check_sols_.size(); ++i) (*v)[sols_.size() + i] = eval(check_sols_[i]);
  std::lock_guard<std::mutex> lock(mu_);
  return memo_.emplace(xi, std::move(v)).first->second;
}

double ScatteringTable::weight(double xi) const {
  const double r = model_->potential().at(xi).r;
  return std::pow(r, -0.5 * model_->potential().profile().d());
}

std::vector<DensityTerm> density_terms(const ScatteringTable& tab, double xi, double xi_prime) {
  const double x = std::max(xi, xi_prime), y = std::min(xi, xi_prime);
  const auto Mx = tab.spatial(x), My = tab.spatial(y);
  const double scale = tab.weight(x) * tab.weight(y) / kPi;
  const std::size_t nn = tab.nodes().size(), n = nn + tab.check_nodes().size();
  std::vector<DensityTerm> out;
  // F = sum_k e^{i nu_k lambda} B_k and density = 2 lambda Im F
  auto add = [&](double nu, const std::function<cd(std::size_t)>& B) {
    DensityTerm p{nu, std::vector<cd>(n)}, q{-nu, std::vector<cd>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const double lam = i < nn ? tab.nodes()[i] : tab.check_nodes()[i - nn];
      const cd b = B(i);
      p.amp[i] = -kI * lam * b * scale;
      q.amp[i] = kI * lam * std::conj(b) * scale;
    }
    for (DensityTerm* d : {&p, &q}) {
      auto it = std::find_if(out.begin(), out.end(), [&](const DensityTerm& e) {
        return std::abs(e.nu - d->nu) <= 1e-12 * (1 + std::abs(d->nu));
      });
      if (it == out.end()) {
        out.push_back(std::move(*d));
      } else {
        for (std::size_t i = 0; i < n; ++i) it->amp[i] += d->amp[i];
      }
    }
  };
  auto sol = [&](std::size_t i) -> const JostSolution& {
    return i < nn ? tab.solution(i) : tab.check_solution(i - nn);
  };
  auto lam = [&](std::size_t i) { return i < nn ? tab.nodes()[i] : tab.check_nodes()[i - nn]; };
  const std::vector<cd>& mx = *Mx;
  const std::vector<cd>& my = *My;
  if (x >= 0 && y < 0) {
    add(x - y, [&](std::size_t i) { return mx[i] * my[i] / sol(i).W(); });
  } else if (y >= 0) {
    add(x + y, [&](std::size_t i) { return sol(i).alpha_minus() * mx[i] * my[i] / sol(i).W(); });
    add(x - y, [&](std::size_t i) { return kI * mx[i] * std::conj(my[i]) / (2 * lam(i)); });
  } else {
    add(-(x + y), [&](std::size_t i) { return sol(i).alpha_plus() * mx[i] * my[i] / sol(i).W(); });
    add(x - y, [&](std::size_t i) { return kI * std::conj(mx[i]) * my[i] / (2 * lam(i)); });
  }
  return out;
}

// ---- Filon quadrature ----

namespace {

// Legendre projection on Gauss nodes: Q[l n + j] = (2l+1)/2 w_j P_l(x_j).
struct FilonRule {
  int n = 0;
  std::vector<double> x, w, Q;
};

const FilonRule& filon_rule(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<FilonRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto r = std::make_unique<FilonRule>();
    const GaussRule& g = gauss_legendre(n);
    r->n = n;
    r->x = g.x;
    r->w = g.w;
    r->Q.assign(std::size_t(n) * n, 0.0);
    for (int j = 0; j < n; ++j) {
      double p0 = 1, p1 = g.x[j];
      for (int l = 0; l < n; ++l) {
        const double pl = l == 0 ? 1.0 : (l == 1 ? g.x[j] : 0.0);
        double p = pl;
        if (l >= 2) {
          p = ((2 * l - 1) * g.x[j] * p1 - (l - 1) * p0) / l;
          p0 = p1;
          p1 = p;
        }
        r->Q[std::size_t(l) * n + j] = 0.5 * (2 * l + 1) * g.w[j] * p;
      }
    }
    slot = std::move(r);
  }
  return *slot;
}

// mu_l = int_{-1}^{1} P_l(x) e^{i kappa x} dx = 2 i^l j_l(kappa).
void legendre_moments(double kappa, int n, cd* mu) {
  std::vector<double> j(n, 0.0);
  const double ak = std::abs(kappa);
  if (ak == 0) {
    j[0] = 1;
  } else if (ak > n) {
    j[0] = std::sin(ak) / ak;
    if (n > 1) j[1] = std::sin(ak) / (ak * ak) - std::cos(ak) / ak;
    for (int l = 1; l + 1 < n; ++l) j[l + 1] = (2 * l + 1) / ak * j[l] - j[l - 1];
  } else {
    for (int l = 0; l < n; ++l) j[l] = boost::math::sph_bessel(unsigned(l), ak);
  }
  cd il = 1;
  for (int l = 0; l < n; ++l) {
    const double s = (kappa < 0 && (l & 1)) ? -1.0 : 1.0;
    mu[l] = 2.0 * il * s * j[l];
    il *= kI;
  }
}

constexpr double kFoldLimit = 6.0;      // |t| h^2 for the folded quadratic phase
constexpr double kResidualPhase = 3.0;  // h |rho| for residual frequencies inside a family
const double kGrading[] = {0, .02, .04, .08, .16, .3, .5, .7, .84, .92, .96, .98, 1};

struct Member {
  double rho = 0;
  std::vector<cd> amp;  // table layout
};

// sum_m e^{i rho_m lambda} amp_m(lambda), integrated against e^{i (phase + c lambda)}.
struct Family {
  double c = 0;
  double rho_max = 0;
  std::vector<Member> members;
};

struct QuadResult {
  cd value{};
  double err = 0;
  int panels = 0;
};

class Integrator {
 public:
  Integrator(const ScatteringTable& tab, const std::vector<Family>& fam, KernelKind kind, double t,
             std::function<double(double)> cutoff, int order)
      : tab_(tab), fam_(fam), kind_(kind), t_(t), cutoff_(std::move(cutoff)), rule_(filon_rule(order)) {
    for (const Family& f : fam_) rho_max_ = std::max(rho_max_, f.rho_max);
  }

  // Family amplitudes times the cutoff at lambda.
  void amplitudes(double lam, cd* out) const {
    const std::size_t p = tab_.panel_of(lam);
    const double a = tab_.breaks()[p], b = tab_.breaks()[p + 1];
    const int n = tab_.order();
    std::vector<double> L(n);
    lagrange_basis(tab_.unit_nodes(), tab_.bary(), (2 * lam - a - b) / (b - a), L.data());
    const double cut = cutoff_(lam);
    const std::size_t base = p * n;
    for (std::size_t f = 0; f < fam_.size(); ++f) {
      cd acc = 0;
      if (cut != 0)
        for (const Member& m : fam_[f].members) {
          cd v = 0;
          for (int i = 0; i < n; ++i) v += L[i] * m.amp[base + i];
          acc += m.rho == 0 ? v : v * std::polar(1.0, m.rho * lam);
        }
      out[f] = acc * cut;
    }
  }

  double linear_frequency(double m, const Family& f) const {
    switch (kind_) {
      case KernelKind::schrodinger: return 2 * t_ * m + f.c;
      case KernelKind::wave_plus: return t_ + f.c;
      case KernelKind::wave_minus: return -t_ + f.c;
    }
    return 0;
  }
  double phase(double lam, const Family& f) const {
    switch (kind_) {
      case KernelKind::schrodinger: return t_ * lam * lam + f.c * lam;
      case KernelKind::wave_plus: return (t_ + f.c) * lam;
      case KernelKind::wave_minus: return (-t_ + f.c) * lam;
    }
    return 0;
  }
  // d phase / d lambda and its derivative
  std::pair<double, double> phase_rate(double lam, const Family& f) const {
    if (kind_ == KernelKind::schrodinger) return {2 * t_ * lam + f.c, 2 * t_};
    return {linear_frequency(lam, f), 0.0};
  }

  // Filon on one panel; the panel lies inside one table panel.
  void panel(double l, double r, cd& value, double& err) const {
    const int n = rule_.n;
    const double m = 0.5 * (l + r), h = 0.5 * (r - l);
    const std::size_t nf = fam_.size();
    std::vector<cd> G(nf * n), tmp(nf), mu(n), c(n);
    for (int j = 0; j < n; ++j) {
      amplitudes(m + h * rule_.x[j], tmp.data());
      for (std::size_t f = 0; f < nf; ++f) G[f * n + j] = tmp[f];
    }
    value = 0;
    err = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      cd* g = &G[f * n];
      if (kind_ == KernelKind::schrodinger)
        for (int j = 0; j < n; ++j) g[j] *= std::polar(1.0, t_ * h * h * rule_.x[j] * rule_.x[j]);
      for (int k = 0; k < n; ++k) {
        cd s = 0;
        for (int j = 0; j < n; ++j) s += rule_.Q[std::size_t(k) * n + j] * g[j];
        c[k] = s;
      }
      const double w = linear_frequency(m, fam_[f]);
      legendre_moments(w * h, n, mu.data());
      cd s = 0;
      for (int k = 0; k < n; ++k) s += c[k] * mu[k];
      const double ph = kind_ == KernelKind::schrodinger ? t_ * m * m + fam_[f].c * m : w * m;
      value += h * std::polar(1.0, ph) * s;
      err += 2 * h * (std::abs(c[n - 1]) + std::abs(c[n - 2]));
    }
  }

  // Adaptive Filon on [a, b] with the given interior breakpoints.
  QuadResult integrate(double a, double b, std::vector<double> brk, double tol, int budget) const {
    QuadResult q;
    if (!(b > a)) return q;
    for (double x : tab_.breaks()) brk.push_back(x);
    brk.push_back(a);
    brk.push_back(b);
    std::sort(brk.begin(), brk.end());
    std::vector<double> pts;
    for (double x : brk)
      if (x >= a && x <= b && (pts.empty() || x - pts.back() > 1e-14 * std::max(1.0, x))) pts.push_back(x);
    if (pts.back() < b) pts.back() = b;
    double hmax = INFINITY;
    if (kind_ == KernelKind::schrodinger) hmax = std::sqrt(kFoldLimit / std::abs(t_));
    if (rho_max_ > 0) hmax = std::min(hmax, kResidualPhase / rho_max_);
    const double len = b - a;
    struct Item {
      double l, r;
      int depth;
    };
    std::vector<Item> stack;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double w = pts[i + 1] - pts[i];
      const int k = std::max(1, int(std::ceil(w / (2 * hmax))));
      for (int j = 0; j < k; ++j)
        stack.push_back({pts[i] + w * j / k, j + 1 == k ? pts[i + 1] : pts[i] + w * (j + 1) / k, 0});
    }
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
      Item it = stack.back();
      stack.pop_back();
      cd v;
      double e;
      panel(it.l, it.r, v, e);
      ++q.panels;
      if (q.panels > budget)
        throw ConicError("kernel: error target unreachable within the panel budget");
      const double allowed = tol * (it.r - it.l) / len;
      if (e > allowed && it.depth < 40 && it.r - it.l > 1e-12 * it.r) {
        const double mid = 0.5 * (it.l + it.r);
        stack.push_back({mid, it.r, it.depth + 1});
        stack.push_back({it.l, mid, it.depth + 1});
        continue;
      }
      q.value += v;
      q.err += e;
    }
    return q;
  }

  // Interpolation error of the table against the check solutions, weighted by overlap length.
  double table_error(double a, double b) const {
    const std::size_t nn = tab_.nodes().size();
    const int n = tab_.order();
    std::vector<double> L(n);
    double err = 0;
    for (std::size_t p = 0; p + 1 < tab_.breaks().size(); ++p) {
      const double pa = tab_.breaks()[p], pb = tab_.breaks()[p + 1];
      const double ov = std::min(b, pb) - std::max(a, pa);
      if (ov <= 0) continue;
      double worst = 0;
      for (int k = 0; k < 2; ++k) {
        const std::size_t ci = 2 * p + k;
        const double lam = tab_.check_nodes()[ci];
        lagrange_basis(tab_.unit_nodes(), tab_.bary(), (2 * lam - pa - pb) / (pb - pa), L.data());
        double d = 0;
        for (const Family& f : fam_)
          for (const Member& m : f.members) {
            cd v = 0;
            for (int i = 0; i < n; ++i) v += L[i] * m.amp[p * n + i];
            d += std::abs(v - m.amp[nn + ci]);
          }
        worst = std::max(worst, d);
      }
      err += worst * ov;
    }
    return err;
  }

  const std::vector<Family>& families() const { return fam_; }

 private:
  const ScatteringTable& tab_;
  const std::vector<Family>& fam_;
  KernelKind kind_;
  double t_;
  std::function<double(double)> cutoff_;
  const FilonRule& rule_;
  double rho_max_ = 0;
};

void add_grading(std::vector<double>& brk, double lo, double hi) {
  for (double u : kGrading) brk.push_back(lo + (hi - lo) * u);
}

// Support [lo, hi] of the band weight in lambda.
std::pair<double, double> band_support(Band b, double xi, double xi_prime, double lambda_low) {
  const double ax = std::abs(xi), ay = std::abs(xi_prime);
  const double amin = std::min(ax, ay), amax = std::max(ax, ay);
  auto inv = [](double s) { return s > 0 ? 1.0 / s : INFINITY; };
  switch (b) {
    case Band::full: return {0.0, INFINITY};
    case Band::high_energy: return {0.5 * lambda_low, INFINITY};
    case Band::low_low: return {0.0, std::min(lambda_low, inv(amax))};
    case Band::osc_osc:
    case Band::same_side_osc:
      if (!band_applies(b, xi, xi_prime) || amin == 0) return {1.0, 0.0};
      return {0.5 * inv(amin), lambda_low};
    case Band::osc_low:
      if (amax == 0) return {1.0, 0.0};
      return {0.5 * inv(amax), std::min(lambda_low, inv(amin))};
  }
  return {1.0, 0.0};
}

double target_exponent(KernelKind kind, Band band, int d) {
  if (kind == KernelKind::schrodinger) return band == Band::full ? 0.5 * (d + 1) : 1.0;
  if (band == Band::full) return 0.5 * d;
  return band == Band::low_low ? 1.0 : 0.5;
}

}  // namespace

// ---- kernel evaluation ----

KernelEvaluator::KernelEvaluator(std::shared_ptr<const ScatteringTable> table, KernelOptions opts)
    : table_(std::move(table)), opts_(opts) {}

KernelEvaluator::KernelEvaluator(std::shared_ptr<const ScatteringModel> model, KernelOptions opts)
    : table_(std::make_shared<ScatteringTable>(std::move(model), opts)), opts_(opts) {}

KernelSample KernelEvaluator::evolution_kernel(KernelKind kind, double t, double xi,
                                               double xi_prime) const {
  return band_kernel(kind, Band::full, t, xi, xi_prime);
}

KernelSample KernelEvaluator::band_kernel(KernelKind kind, Band band, double t, double xi,
                                          double xi_prime) const {
  if (t == 0 || !std::isfinite(t)) throw ConicError("kernel: t must be finite and nonzero");
  const ScatteringTable& tab = *table_;
  KernelSample out;
  out.kind = kind;
  out.band = band;
  out.t = t;
  out.xi = xi;
  out.xi_prime = xi_prime;
  out.weight = tab.weight(xi) * tab.weight(xi_prime);
  const double ll = opts_.lambda_low;
  auto [s_lo, s_hi] = band_support(band, xi, xi_prime, ll);
  if (!(s_hi > s_lo)) return out;

  std::vector<Family> fam;
  for (DensityTerm& d : density_terms(tab, xi, xi_prime)) {
    Family f;
    f.c = d.nu;
    f.members.push_back({0.0, std::move(d.amp)});
    fam.push_back(std::move(f));
  }
  auto cutoff = [band, xi, xi_prime, ll](double lam) {
    return band_weight(band, lam, xi, xi_prime, ll);
  };
  Integrator in(tab, fam, kind, t, cutoff, opts_.filon_order);
  std::vector<double> brk;
  if (band != Band::full) add_grading(brk, 0.5 * ll, ll);
  if (band != Band::full && band != Band::high_energy)
    for (double a : {std::abs(xi), std::abs(xi_prime)})
      if (a > 0) add_grading(brk, 0.5 / a, 1.0 / a);

  const std::size_t nn = tab.nodes().size();
  double lo = std::max(s_lo, tab.lambda_min());
  double hi = s_hi;
  const bool tail = !std::isfinite(s_hi);
  const double tol = opts_.tol;
  std::vector<double> g(fam.size(), 0.0);
  if (tail) {
    for (std::size_t f = 0; f < fam.size(); ++f)
      for (std::size_t i = 0; i < nn; ++i)
        if (tab.nodes()[i] >= 1) g[f] = std::max(g[f], std::abs(fam[f].members[0].amp[i]));
    hi = std::max(2 * ll, lo);
    if (kind == KernelKind::schrodinger) {
      const double tt = std::abs(t), tol_tail = tol / (4.0 * fam.size());
      for (std::size_t f = 0; f < fam.size(); ++f) {
        const double U = std::pow(12 * tt * tt * std::max(g[f], 1e-300) / tol_tail, 0.2);
        hi = std::max(hi, std::max(0.0, -fam[f].c / (2 * t)) + U / (2 * tt));
      }
      if (hi > tab.lambda_max()) {
        std::ostringstream msg;
        msg << "kernel: error target unreachable, the tail needs lambda_max >= " << hi
            << " (t=" << t << ", xi=" << xi << ", xi'=" << xi_prime << ")";
        throw ConicError(msg.str());
      }
    } else {
      hi = tab.lambda_max();
    }
  }
  if (hi > tab.lambda_max()) hi = tab.lambda_max();
  out.lambda_max = hi;

  QuadResult q = in.integrate(lo, hi, brk, 0.5 * tol, opts_.panel_budget);
  cd value = q.value;
  double err = q.err + in.table_error(lo, hi);
  out.panels = q.panels;

  std::vector<cd> amp(fam.size());
  if (s_lo < tab.lambda_min()) {
    // [0, lambda_min]: the density is continued as a power law fitted on the first table panel.
    const double lm = tab.lambda_min();
    double sv[3] = {0, 0, 0}, ph = 0;
    const double ls[3] = {lm, 1.05 * lm, 1.25 * lm};
    for (int k = 0; k < 3; ++k) {
      in.amplitudes(ls[k], amp.data());
      for (std::size_t f = 0; f < fam.size(); ++f) {
        sv[k] += (amp[f] * std::polar(1.0, fam[f].c * ls[k])).real();
        if (k == 0) ph = std::max(ph, std::abs(in.phase(lm, fam[f])));
      }
    }
    auto slope = [&](int k) {
      const double q = sv[0] != 0 ? sv[k] / sv[0] : 0.0;
      return std::clamp(q > 0 ? std::log(q) / std::log(ls[k] / lm) : 0.0, -0.5, 4.0);
    };
    const double p = slope(1), drift = std::abs(slope(2) - p);
    const int q = kind == KernelKind::schrodinger ? 2 : 1;
    const double s = (kind == KernelKind::wave_minus ? -t : t) * std::pow(lm, q);
    cd piece = sv[0] * lm / (p + 1);
    double miss = ph;
    if (std::abs(s) <= 4) {
      // series of e^{i s (lambda/lm)^q} against the power law
      piece = 0;
      cd c = 1;
      for (int k = 0; k < 60 && std::abs(c) > 1e-17; ++k) {
        piece += c / (p + q * k + 1.0);
        c *= kI * s / (k + 1.0);
      }
      piece *= sv[0] * lm;
      miss = 0;
    }
    err += std::abs(sv[0] * lm) * (drift / (p + 1) + miss);
    value += piece;
  }
  if (tail) {
    // Three integrations by parts from hi to infinity; the last term is also the error estimate.
    const double dl = 1e-3 * hi;
    std::vector<cd> ap(fam.size()), am(fam.size());
    in.amplitudes(hi, amp.data());
    in.amplitudes(hi + dl, ap.data());
    in.amplitudes(hi - dl, am.data());
    for (std::size_t f = 0; f < fam.size(); ++f) {
      const auto [u, du] = in.phase_rate(hi, fam[f]);
      if (std::abs(u) <= 1e-12 * (std::abs(t) + std::abs(fam[f].c) + 1)) {
        std::ostringstream msg;
        msg << "kernel: light cone at t=" << t << ", xi=" << xi << ", xi'=" << xi_prime;
        throw ConicError(msg.str());
      }
      const cd A = amp[f], dA = (ap[f] - am[f]) / (2 * dl);
      const cd d2A = (ap[f] - 2.0 * A + am[f]) / (dl * dl);
      const double u2 = u * u, u3 = u2 * u;
      const cd B1 = A / (kI * u);
      const cd B2 = -dA / u2 + A * du / u3;
      const cd B3 = kI * (d2A / u3 - 3.0 * dA * du / (u3 * u) + 3.0 * A * du * du / (u3 * u2));
      value += std::polar(1.0, in.phase(hi, fam[f])) * (-B1 + B2 - B3);
      err += std::abs(B3);
    }
  }
  out.value = value;
  out.err_est = err;
  return out;
}

SmearedWave KernelEvaluator::wave_smeared(double xi, double t, const TestFunction& phi) const {
  const std::size_t np = phi.xi.size();
  bool ok = np >= 2 && phi.value.size() == np && phi.deriv.size() == np;
  for (std::size_t i = 0; ok && i < np; ++i) {
    ok = std::isfinite(phi.xi[i]) && std::isfinite(phi.value[i]) && std::isfinite(phi.deriv[i]);
    if (i > 0) ok = ok && phi.xi[i] > phi.xi[i - 1];
  }
  if (!ok) throw ConicError("wave_smeared: phi is not integrable on its grid");
  if (!(t > 0)) throw ConicError("wave_smeared: t must be positive");
  const ScatteringTable& tab = *table_;

  struct Node {
    double x, w, v, dv;
  };
  auto hermite = [&](std::size_t c, double s) {
    const double h = phi.xi[c + 1] - phi.xi[c];
    const double f0 = phi.value[c], f1 = phi.value[c + 1], d0 = phi.deriv[c], d1 = phi.deriv[c + 1];
    const double v = (2 * s * s * s - 3 * s * s + 1) * f0 + (s * s * s - 2 * s * s + s) * h * d0 +
                     (-2 * s * s * s + 3 * s * s) * f1 + (s * s * s - s * s) * h * d1;
    const double dv = (6 * s * s - 6 * s) / h * f0 + (3 * s * s - 4 * s + 1) * d0 +
                      (-6 * s * s + 6 * s) / h * f1 + (3 * s * s - 2 * s) * d1;
    return std::pair<double, double>{v, dv};
  };
  std::vector<Node> nodes;
  SmearedWave out;
  double sup_lo = INFINITY, sup_hi = -INFINITY;
  const GaussRule& g6 = gauss_legendre(6);
  const GaussRule& g16 = gauss_legendre(16);
  for (std::size_t c = 0; c + 1 < np; ++c) {
    if (phi.value[c] == 0 && phi.value[c + 1] == 0 && phi.deriv[c] == 0 && phi.deriv[c + 1] == 0)
      continue;
    const double a = phi.xi[c], h = phi.xi[c + 1] - a;
    sup_lo = std::min(sup_lo, a);
    sup_hi = std::max(sup_hi, a + h);
    for (int j = 0; j < 16; ++j) {
      auto [v, dv] = hermite(c, 0.5 * (1 + g16.x[j]));
      out.norm += 0.5 * h * g16.w[j] * (std::abs(v) + std::abs(dv));
    }
    for (int j = 0; j < 6; ++j) {
      const double s = 0.5 * (1 + g6.x[j]);
      auto [v, dv] = hermite(c, s);
      nodes.push_back({a + h * s, 0.5 * h * g6.w[j], v, dv});
    }
  }
  if (nodes.empty() || out.norm == 0) return out;
  const double center = 0.5 * (sup_lo + sup_hi);

  // Families nu = a xi + b xi' with a, b = +-1, factored at the support center.
  std::vector<Family> fam(4);
  const int sa[4] = {1, 1, -1, -1}, sb[4] = {1, -1, 1, -1};
  for (int k = 0; k < 4; ++k) fam[k].c = sa[k] * xi + sb[k] * center;
  for (const Node& nd : nodes) {
    if (nd.v == 0) continue;
    for (DensityTerm& d : density_terms(tab, xi, nd.x)) {
      int k = 0;
      while (k < 4 && std::abs(d.nu - (sa[k] * xi + sb[k] * nd.x)) >
                          1e-9 * (1 + std::abs(xi) + std::abs(nd.x)))
        ++k;
      if (k == 4) throw ConicError("wave_smeared: unexpected frequency");
      for (cd& z : d.amp) z *= nd.w * nd.v;
      const double rho = d.nu - fam[k].c;
      fam[k].rho_max = std::max(fam[k].rho_max, std::abs(rho));
      fam[k].members.push_back({rho, std::move(d.amp)});
    }
  }
  fam.erase(std::remove_if(fam.begin(), fam.end(), [](const Family& f) { return f.members.empty(); }),
            fam.end());
  const double ll = opts_.lambda_low;
  auto cutoff = [ll](double lam) { return 1.0 - chi_energy(lam, ll); };
  Integrator in(tab, fam, KernelKind::wave_plus, t, cutoff, opts_.filon_order);
  std::vector<double> brk;
  add_grading(brk, 0.5 * ll, ll);
  const double hi = tab.lambda_max();
  QuadResult q = in.integrate(0.5 * ll, hi, brk, 0.5 * opts_.tol, opts_.panel_budget);
  std::vector<cd> amp(fam.size());
  in.amplitudes(hi, amp.data());
  double tail = 0;
  for (const cd& a : amp) tail += std::abs(a);
  out.value_abs = std::abs(q.value);
  out.err_est = q.err + in.table_error(0.5 * ll, hi) + tail * hi;
  out.ratio = out.value_abs * std::sqrt(t) / out.norm;
  return out;
}

// ---- stationary phase ----

StationaryPhaseResult stationary_phase_check(const StationaryPhaseCase& c) {
  if (!(c.t > 0)) throw ConicError("stationary_phase_check: t must be positive");
  if (!(c.hi > c.lo)) throw ConicError("stationary_phase_check: empty support");
  if (std::abs(c.phi(0.0)) > 1e-12 || std::abs(c.dphi(0.0)) > 1e-12)
    throw ConicError("stationary_phase_check: phi(0) and phi'(0) must vanish");
  for (double x : linspace(std::min(c.lo, -1.0), std::max(c.hi, 1.0), 801)) {
    if (c.d2phi(x) < 1 - 1e-12) {
      std::ostringstream msg;
      msg << "stationary_phase_check: phi''(" << x << ") = " << c.d2phi(x) << " < 1";
      throw ConicError(msg.str());
    }
  }
  StationaryPhaseResult r;
  double amax = 0;
  for (double x : linspace(c.lo, c.hi, 801)) amax = std::max(amax, std::abs(c.a(x)));
  if (amax == 0) return r;

  // lhs: Gauss-Legendre panels that resolve the phase, refined by 10 vs 20 nodes.
  const double tol = 1e-12 * amax * (c.hi - c.lo);
  const double t = c.t;
  auto rule = [&](double l, double rr, int n) {
    return gl_integrate([&](double x) { return std::polar(1.0, t * c.phi(x)) * c.a(x); }, l, rr, n);
  };
  std::vector<double> pts{c.lo};
  {
    double x = c.lo;
    while (x < c.hi) {
      const double rate = t * std::max(std::abs(c.dphi(x)), 1e-300);
      double w = std::min(8.0 / rate, c.hi - c.lo);
      w = std::min(w, 4.0 / std::sqrt(t));  // near the critical point
      w = std::min(w, 0.05 * (c.hi - c.lo));
      x = std::min(c.hi, x + w);
      pts.push_back(x);
    }
  }
  struct Item {
    double l, r;
    int depth;
  };
  std::vector<Item> stack;
  for (std::size_t i = pts.size() - 1; i > 0; --i) stack.push_back({pts[i - 1], pts[i], 0});
  cd sum = 0;
  double err = 0;
  while (!stack.empty()) {
    Item it = stack.back();
    stack.pop_back();
    const cd fine = rule(it.l, it.r, 20), coarse = rule(it.l, it.r, 10);
    const double e = std::abs(fine - coarse);
    if (e > tol * std::max(1e-6, (it.r - it.l) / (c.hi - c.lo)) && it.depth < 16) {
      const double mid = 0.5 * (it.l + it.r);
      stack.push_back({mid, it.r, it.depth + 1});
      stack.push_back({it.l, mid, it.depth + 1});
      continue;
    }
    sum += fine;
    err += e;
  }
  r.integral = sum;
  r.lhs = std::abs(sum);
  r.lhs_err = err;

  // rhs
  const double delta = 1.0 / std::sqrt(t);
  std::vector<double> br{c.lo, c.hi};
  for (double x : {-delta, 0.0, delta})
    if (x > c.lo && x < c.hi) br.push_back(x);
  std::sort(br.begin(), br.end());
  double i1 = 0, i2 = 0;
  const double atol = 1e-12 * amax * (c.hi - c.lo);
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double a = br[i], b = br[i + 1];
    i1 += adaptive_integrate([&](double x) { return std::abs(c.a(x)) / (delta * delta + x * x); }, a,
                             b, atol / (delta * delta));
    if (0.5 * (a + b) > delta || 0.5 * (a + b) < -delta)
      i2 += adaptive_integrate([&](double x) { return std::abs(c.da(x)) / std::abs(x); }, a, b,
                               atol / delta);
  }
  r.rhs = delta * delta * (i1 + i2);
  return r;
}

std::vector<StationaryPhaseCase> stationary_phase_library() {
  struct Phase {
    const char* name;
    double k;  // phi = k x^2 when k > 0
    std::function<double(double)> phi, dphi, d2phi;
  };
  const std::vector<Phase> phases{
      {"x2", 1.0, [](double x) { return x * x; }, [](double x) { return 2 * x; }, [](double) { return 2.0; }},
      {"quartic", 0.0, [](double x) { return 0.5 * x * x + x * x * x * x / 12; },
       [](double x) { return x + x * x * x / 3; }, [](double x) { return 1 + x * x; }},
      {"cosh", 0.0, [](double x) { return std::cosh(x) - 1; }, [](double x) { return std::sinh(x); },
       [](double x) { return std::cosh(x); }},
      {"half_x2", 0.5, [](double x) { return 0.5 * x * x; }, [](double x) { return x; },
       [](double) { return 1.0; }},
  };
  const double mu = 0.3, sg = 0.5;
  auto bump = [](double l, double r) {
    auto a = [=](double x) {
      if (!(x > l && x < r)) return cd(0);
      return cd(std::exp(-(r - l) * (r - l) / (4 * (x - l) * (r - x))));
    };
    auto da = [=](double x) {
      if (!(x > l && x < r)) return cd(0);
      const double q = (x - l) * (r - x), w = (r - l) * (r - l) / 4;
      return cd(std::exp(-w / q) * w * (r + l - 2 * x) / (q * q));
    };
    return std::pair<std::function<cd(double)>, std::function<cd(double)>>{a, da};
  };
  const double ts[3] = {1e2, 1e3, 1e4};
  std::vector<StationaryPhaseCase> out;
  for (std::size_t p = 0; p < phases.size(); ++p)
    for (int j = 0; j < 3; ++j) {
      StationaryPhaseCase c;
      c.phi = phases[p].phi;
      c.dphi = phases[p].dphi;
      c.d2phi = phases[p].d2phi;
      c.t = ts[(p + j) % 3];
      if (j == 0) {
        c.a = [=](double x) { return cd(std::exp(-(x - mu) * (x - mu) / (2 * sg * sg))); };
        c.da = [=](double x) { return cd(-(x - mu) / (sg * sg) * std::exp(-(x - mu) * (x - mu) / (2 * sg * sg))); };
        c.lo = mu - 8 * sg;
        c.hi = mu + 8 * sg;
        if (phases[p].k > 0) {
          // int e^{i t k x^2 - (x - mu)^2/(2 s^2)} dx over the line
          const cd A = 1 / (2 * sg * sg) - kI * c.t * phases[p].k;
          const double B = mu / (sg * sg);
          c.exact = std::sqrt(kPi / A) * std::exp(B * B / (4.0 * A) - mu * mu / (2 * sg * sg));
        }
      } else {
        const double l = j == 1 ? -1.0 : 1.0, r = j == 1 ? 1.0 : 2.0;
        std::tie(c.a, c.da) = bump(l, r);
        c.lo = l;
        c.hi = r;
      }
      std::ostringstream name;
      name << phases[p].name << (j == 0 ? "_gauss" : j == 1 ? "_bump_inside" : "_bump_outside") << "_t"
           << c.t;
      c.name = name.str();
      out.push_back(std::move(c));
    }
  return out;
}

// ---- decay scans ----

std::vector<std::pair<double, double>> default_spatial_grid(Band band, double t, double xi_cap) {
  std::vector<double> s{0};
  for (double v : {1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0}) {
    s.push_back(v);
    s.push_back(-v);
  }
  std::sort(s.begin(), s.end());
  std::vector<std::pair<double, double>> out;
  auto push = [&](double a, double b) {
    if (std::abs(a) > xi_cap || std::abs(b) > xi_cap) return;
    if (!band_applies(band, a, b)) return;
    out.emplace_back(std::max(a, b), std::min(a, b));
  };
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) push(s[i], s[j]);
  push(0, 2 * t);
  push(0, -2 * t);
  push(t, -t);
  return out;
}

DecayReport decay_scan(const KernelEvaluator& ev, KernelKind kind, Band band,
                       const std::vector<double>& t_grid, const SpatialGrid& grid) {
  if (t_grid.size() < 3) throw ConicError("decay_scan: need at least 3 times");
  const double tmin = *std::min_element(t_grid.begin(), t_grid.end());
  const double tmax = *std::max_element(t_grid.begin(), t_grid.end());
  if (!(tmin > 0) || tmax < 100 * tmin * (1 - 1e-12))
    throw ConicError("decay_scan: t grid must be positive and span two decades");
  DecayReport rep;
  rep.kind = kind;
  rep.band = band;
  rep.t_grid = t_grid;
  rep.target = target_exponent(kind, band, ev.table().model().potential().profile().d());
  std::vector<std::pair<double, std::pair<double, double>>> jobs;
  for (double t : t_grid)
    for (auto p : grid(t)) jobs.push_back({t, p});
  std::vector<KernelSample> samples(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t i) {
    const double t = jobs[i].first;
    const auto [x, y] = jobs[i].second;
    try {
      samples[i] = ev.band_kernel(kind, band, t, x, y);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "decay_scan failed at t=" << t << ", xi=" << x << ", xi'=" << y << ": " << e.what();
      failures[i] = msg.str();
    }
  });
  for (const std::string& f : failures)
    if (!f.empty()) throw ConicError(f);
  for (double t : t_grid) {
    double best = 0, bx = 0, by = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i)
      if (jobs[i].first == t && std::abs(samples[i].value) >= best) {
        best = std::abs(samples[i].value);
        bx = samples[i].xi;
        by = samples[i].xi_prime;
      }
    rep.sup_abs.push_back(best);
    rep.argsup_xi.push_back(bx);
    rep.argsup_xi_prime.push_back(by);
  }
  std::vector<double> one, lt, ls;
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (t_grid[i] >= tmax / 10 * (1 - 1e-12) && rep.sup_abs[i] > 0) {
      one.push_back(1.0);
      lt.push_back(std::log(t_grid[i]));
      ls.push_back(std::log(rep.sup_abs[i]));
    }
  if (ls.size() >= 2) {
    LinearFit f = least_squares({one, lt}, ls);
    rep.alpha = -f.coef[1];
    rep.C = std::exp(f.coef[0]);
    rep.r2 = f.r2;
  }
  rep.samples = std::move(samples);
  return rep;
}

// ---- CSV ----

void write_kernel_csv(std::ostream& os, const std::vector<KernelSample>& samples) {
  os << "kind,t,xi,xi_prime,re_value,im_value,abs_weighted,err_est\n";
  os << std::setprecision(17);
  for (const KernelSample& s : samples) {
    os << kernel_kind_name(s.kind);
    if (s.band != Band::full) os << ':' << band_name(s.band);
    os << ',' << s.t << ',' << s.xi << ',' << s.xi_prime << ',' << s.value.real() << ','
       << s.value.imag() << ',' << std::abs(s.value) << ',' << s.err_est << '\n';
  }
}

void write_decay_csv(std::ostream& os, const std::vector<DecayReport>& reports) {
  os << "kind,t,sup_abs,fit_alpha,fit_C,fit_R2\n";
  os << std::setprecision(17);
  for (const DecayReport& r : reports)
    for (std::size_t i = 0; i < r.t_grid.size(); ++i) {
      os << kernel_kind_name(r.kind);
      if (r.band != Band::full) os << ':' << band_name(r.band);
      os << ',' << r.t_grid[i] << ',' << r.sup_abs[i] << ',' << r.alpha << ',' << r.C << ','
         << r.r2 << '\n';
    }
}

}  // namespace conic
