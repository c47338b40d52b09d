#include "conic/numerics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace conic {

namespace {

GaussRule build_gauss(int n) {
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = n * (x * p1 - p0) / (x * x - 1);
    }
    double w = 2.0 / ((1 - x * x) * dp * dp);
    g.x[i] = -x;
    g.x[n - 1 - i] = x;
    g.w[i] = g.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) g.x[n / 2] = 0.0;
  return g;
}

constexpr int kMaxGauss = 256;

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::array<GaussRule, kMaxGauss + 1> rules;
  static std::array<std::once_flag, kMaxGauss + 1> flags;
  if (n < 1 || n > kMaxGauss) throw ConicError("gauss_legendre: unsupported order");
  std::call_once(flags[n], [n] { rules[n] = build_gauss(n); });
  return rules[n];
}

namespace {
double adaptive_rec(const std::function<double(double)>& f, double a, double b, double atol,
                    int depth, double whole) {
  double mid = 0.5 * (a + b);
  double i10 = gl_integrate(f, a, b, 10);
  double i20 = gl_integrate(f, a, b, 20);
  (void)whole;
  if (std::abs(i20 - i10) <= atol || depth <= 0) return i20;
  return adaptive_rec(f, a, mid, 0.5 * atol, depth - 1, i20) +
         adaptive_rec(f, mid, b, 0.5 * atol, depth - 1, i20);
}
}  // namespace

double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double atol, int max_depth) {
  return adaptive_rec(f, a, b, atol, max_depth, 0.0);
}

// ---- Jet arithmetic (Taylor coefficients) ----

Jet operator+(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k < 4; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}
Jet operator-(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k < 4; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}
Jet operator-(const Jet& a) {
  Jet r;
  for (int k = 0; k < 4; ++k) r.c[k] = -a.c[k];
  return r;
}
Jet operator*(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j <= k; ++j) r.c[k] += a.c[j] * b.c[k - j];
  return r;
}
Jet operator/(const Jet& a, const Jet& b) {
  Jet r;
  for (int k = 0; k < 4; ++k) {
    double s = a.c[k];
    for (int j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}
Jet sqrt(const Jet& a) {
  Jet r;
  r.c[0] = std::sqrt(a.c[0]);
  for (int k = 1; k < 4; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= r.c[j] * r.c[k - j];
    r.c[k] = s / (2 * r.c[0]);
  }
  return r;
}
Jet exp(const Jet& a) {
  Jet r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k < 4; ++k) {
    double s = 0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * r.c[k - j];
    r.c[k] = s / k;
  }
  return r;
}
Jet log(const Jet& a) {
  Jet r;
  r.c[0] = std::log(a.c[0]);
  for (int k = 1; k < 4; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= (double(j) / k) * r.c[j] * a.c[k - j];
    r.c[k] = s / a.c[0];
  }
  return r;
}

namespace {
Jet mollifier(const Jet& x) {
  if (x.c[0] <= 0) return Jet(0.0);
  return exp(Jet(-1.0) / x);
}
}  // namespace

Jet smooth_step(const Jet& x) {
  if (x.c[0] <= 0) return Jet(0.0);
  if (x.c[0] >= 1) return Jet(1.0);
  Jet f = mollifier(x), g = mollifier(Jet(1.0) - x);
  return f / (f + g);
}

double smooth_step(double x) { return smooth_step(Jet(x)).value(); }

// ---- Chebyshev panels ----

namespace {
std::vector<double> cheb_unit_nodes(int n) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = -std::cos(kPi * k / (n - 1));
  return t;
}
// Cached unit nodes for orders up to 64.
const std::vector<double>& cached_nodes(int n) {
  static const std::vector<std::vector<double>> all = [] {
    std::vector<std::vector<double>> v(65);
    for (int k = 2; k <= 64; ++k) v[k] = cheb_unit_nodes(k);
    return v;
  }();
  if (n < 2 || n > 64) throw ConicError("ChebPanel: order must be in [2, 64]");
  return all[n];
}
}  // namespace

template <class T>
T ChebPanel<T>::operator()(double x) const {
  const int n = static_cast<int>(f.size());
  const double t = (2 * x - a - b) / (b - a);
  const std::vector<double>& nodes = cached_nodes(n);
  T num{};
  double den = 0;
  for (int k = 0; k < n; ++k) {
    double tk = nodes[k];
    double diff = t - tk;
    if (diff == 0) return f[k];
    double w = (k % 2 ? -1.0 : 1.0) * ((k == 0 || k == n - 1) ? 0.5 : 1.0) / diff;
    num += w * f[k];
    den += w;
  }
  return num / den;
}

template <class T>
PiecewiseCheb<T>::PiecewiseCheb(const std::function<T(double)>& f, std::vector<double> breaks,
                                int order, double rtol, double atol, int max_depth) {
  if (breaks.size() < 2) throw ConicError("PiecewiseCheb: need at least two breaks");
  const std::vector<double> t = cheb_unit_nodes(order);
  std::function<void(double, double, int)> build = [&](double a, double b, int depth) {
    ChebPanel<T> p;
    p.a = a;
    p.b = b;
    p.f.resize(order);
    double fmax = 0;
    for (int k = 0; k < order; ++k) {
      p.f[k] = f(0.5 * (a + b) + 0.5 * (b - a) * t[k]);
      fmax = std::max(fmax, std::abs(p.f[k]));
    }
    double err = 0;
    for (int k = 0; k + 1 < order; ++k) {
      double th = kPi * (k + 0.5) / (order - 1);
      double x = 0.5 * (a + b) - 0.5 * (b - a) * std::cos(th);
      err = std::max(err, std::abs(p(x) - f(x)));
    }
    if (err > atol + rtol * fmax && depth < max_depth) {
      double m = 0.5 * (a + b);
      build(a, m, depth + 1);
      build(m, b, depth + 1);
      return;
    }
    panels_.push_back(std::move(p));
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) build(breaks[i], breaks[i + 1], 0);
  starts_.reserve(panels_.size());
  for (auto& p : panels_) starts_.push_back(p.a);
}

template <class T>
T PiecewiseCheb<T>::operator()(double x) const {
  if (x < panels_.front().a || x > panels_.back().b)
    throw ConicError("PiecewiseCheb: argument " + std::to_string(x) + " outside table");
  auto it = std::upper_bound(starts_.begin(), starts_.end(), x);
  std::size_t i = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
  return panels_[i](x);
}

template <class T>
double PiecewiseCheb<T>::panel_width(double x) const {
  auto it = std::upper_bound(starts_.begin(), starts_.end(), x);
  std::size_t i = it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin()) - 1;
  i = std::min(i, panels_.size() - 1);
  return panels_[i].b - panels_[i].a;
}

template struct ChebPanel<double>;
template struct ChebPanel<cd>;
template class PiecewiseCheb<double>;
template class PiecewiseCheb<cd>;

std::vector<double> geometric_breaks(double lo, double hi, double h0, double q) {
  // Symmetric about 0 when lo < 0 < hi; one-sided otherwise.
  auto side = [&](double end) {
    std::vector<double> v{0.0};
    double x = 0;
    double e = std::abs(end);
    while (x < e) {
      double step = x < 1.0 ? h0 : (q - 1.0) * x;
      x = std::min(e, x + step);
      if (e - x < 0.25 * step) x = e;
      v.push_back(x);
    }
    return v;
  };
  std::vector<double> out;
  if (lo < 0 && hi > 0) {
    auto l = side(lo), r = side(hi);
    for (auto it = l.rbegin(); it != l.rend(); ++it) out.push_back(-*it);
    out.insert(out.end(), r.begin() + 1, r.end());
  } else if (lo >= 0) {
    for (double v : side(hi))
      if (v >= lo) out.push_back(v);
    if (out.empty() || out.front() > lo) out.insert(out.begin(), lo);
  } else {
    auto l = side(lo);
    for (auto it = l.rbegin(); it != l.rend(); ++it)
      if (-*it <= hi) out.push_back(-*it);
    if (out.back() < hi) out.push_back(hi);
  }
  return out;
}

std::vector<double> bary_weights(const std::vector<double>& nodes) {
  const std::size_t n = nodes.size();
  std::vector<double> w(n, 1.0);
  double scale = 0.5 * (nodes.back() - nodes.front());
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      if (k != j) w[j] /= (nodes[j] - nodes[k]) / scale;
  return w;
}

void lagrange_basis(const std::vector<double>& nodes, const std::vector<double>& bw, double x,
                    double* out) {
  const std::size_t n = nodes.size();
  double den = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double d = x - nodes[j];
    if (d == 0) {
      for (std::size_t k = 0; k < n; ++k) out[k] = k == j ? 1.0 : 0.0;
      return;
    }
    out[j] = bw[j] / d;
    den += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= den;
}

LinearFit least_squares(const std::vector<std::vector<double>>& columns,
                        const std::vector<double>& y) {
  const Eigen::Index m = static_cast<Eigen::Index>(y.size());
  const Eigen::Index k = static_cast<Eigen::Index>(columns.size());
  if (m < k) throw ConicError("least_squares: underdetermined");
  Eigen::MatrixXd A(m, k);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    b(i) = y[i];
    for (Eigen::Index j = 0; j < k; ++j) A(i, j) = columns[j][i];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  LinearFit out;
  out.coef.assign(c.data(), c.data() + k);
  Eigen::VectorXd r = b - A * c;
  out.max_abs_residual = r.cwiseAbs().maxCoeff();
  double mean = b.mean();
  double ss_tot = (b.array() - mean).square().sum();
  out.r2 = ss_tot > 0 ? 1.0 - r.squaredNorm() / ss_tot : 1.0;
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, int n) {
  std::vector<double> v(n);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : std::exp(la + (lb - la) * i / (n - 1));
  if (n > 1) {
    v.front() = a;
    v.back() = b;
  }
  return v;
}

unsigned thread_cap() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CONIC_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(thread_cap(), n));
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace conic
