#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace conic {

using cd = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846264338327950288;
inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;
inline constexpr cd kI{0.0, 1.0};

inline double japanese(double x) { return std::sqrt(1.0 + x * x); }

// Error raised by every module; carries a human readable location.
class ConicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Gauss-Legendre rule with n nodes, cached; thread safe.
const GaussRule& gauss_legendre(int n);

// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
template <class F>
auto gl_integrate(F&& f, double a, double b, int n = 20) {
  const GaussRule& g = gauss_legendre(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  decltype(f(a)) acc{};
  for (int i = 0; i < n; ++i) acc += g.w[i] * f(c + h * g.x[i]);
  return acc * h;
}

// Adaptive Gauss-Legendre (10 vs 20 nodes) on [a, b].
double adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                          double atol, int max_depth = 40);

// Truncated Taylor series in one variable, coefficients f^(k)/k! for k <= 3.
struct Jet {
  std::array<double, 4> c{};
  Jet() = default;
  Jet(double v) { c[0] = v; }
  static Jet variable(double x) {
    Jet j(x);
    j.c[1] = 1.0;
    return j;
  }
  double value() const { return c[0]; }
  double d(int k) const {
    static constexpr double fact[4] = {1, 1, 2, 6};
    return c[k] * fact[k];
  }
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet sqrt(const Jet& a);
Jet exp(const Jet& a);
Jet log(const Jet& a);

// C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x).
double smooth_step(double x);
Jet smooth_step(const Jet& x);

// Chebyshev interpolant on [a, b] at second-kind points, barycentric evaluation.
template <class T>
struct ChebPanel {
  double a = 0, b = 0;
  std::vector<T> f;
  T operator()(double x) const;
};

// Piecewise Chebyshev approximation built adaptively from a callable.
template <class T>
class PiecewiseCheb {
 public:
  PiecewiseCheb() = default;
  // breaks: initial panel boundaries (sorted); panels are bisected until the
  // interpolant reproduces f at panel midpoints within atol + rtol*max|f|.
  PiecewiseCheb(const std::function<T(double)>& f, std::vector<double> breaks, int order,
                double rtol, double atol, int max_depth = 30);
  T operator()(double x) const;
  double lo() const { return panels_.front().a; }
  double hi() const { return panels_.back().b; }
  std::size_t panel_count() const { return panels_.size(); }
  // Width of the panel containing x.
  double panel_width(double x) const;

 private:
  std::vector<ChebPanel<T>> panels_;
  std::vector<double> starts_;
};

extern template class PiecewiseCheb<double>;
extern template class PiecewiseCheb<cd>;

// Break points for a symmetric geometric partition of [-R, R]: uniform of width
// h0 on [-1, 1], then ratio q.
std::vector<double> geometric_breaks(double lo, double hi, double h0, double q);

// Barycentric Lagrange weights and evaluation of the basis at x.
std::vector<double> bary_weights(const std::vector<double>& nodes);
void lagrange_basis(const std::vector<double>& nodes, const std::vector<double>& bw, double x,
                    double* out);

struct LinearFit {
  std::vector<double> coef;
  double max_abs_residual = 0;
  double r2 = 0;
};

// Least squares y ~ sum_k coef_k * X[k]; X given as columns.
LinearFit least_squares(const std::vector<std::vector<double>>& columns,
                        const std::vector<double>& y);

std::vector<double> linspace(double a, double b, int n);
std::vector<double> logspace(double a, double b, int n);

// Thread cap from CONIC_THREADS (defaults to hardware concurrency).
unsigned thread_cap();
// Runs body(i) for i in [0, n) on up to thread_cap() threads; rethrows the
// first exception.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace conic
