#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "conic/numerics.hpp"

namespace conic {

// forward:  f(x) = g(x) + int_a^x K(x,s) f(s) ds
// backward: f(x) = g(x) + int_x^b K(x,s) f(s) ds
enum class VolterraDirection { backward, forward };

using Kernel2 = std::function<cd(double x, double s)>;

struct VolterraProblem {
  VolterraDirection direction = VolterraDirection::forward;
  Kernel2 kernel;
  std::function<cd(double)> forcing;
  double a = 0;
  double b = 1;  // may be +infinity for the backward form
  // Initial panel boundaries inside [a, b]; a default grid is used when empty.
  std::vector<double> breaks;
  // For infinite b: sup_x |K(x, s)| decays like s^-p with p > 1.
  double tail_exponent = 0;
  double max_panel_width = std::numeric_limits<double>::infinity();
};

struct VolterraOptions {
  int nodes = 16;
  int max_sweeps = 200;
  int max_doublings = 5;
  double mu_limit = 50;
  std::size_t max_unknowns = 8000;
};

class VolterraSolution {
 public:
  // Polynomial interpolation of the nodal solution inside its panel.
  cd operator()(double x) const;
  // Nystrom extension g(x) + int K(x,s) f(s) ds at an arbitrary point.
  cd nystrom(double x) const;
  // int over the direction's range of k2(x, s) f(s) ds, same quadrature as the solve.
  cd integrate(double x, const Kernel2& k2) const;

  double mu = 0;
  double residual = 0;  // Nystrom vs interpolation mismatch on check nodes
  double g_norm = 0;
  double f_norm = 0;
  double b_eff = 0;       // truncated upper limit
  double tail_bound = 0;  // int_{b_eff}^inf sup|K|
  int sweeps = 0;
  std::vector<double> breaks;
  std::vector<double> nodes;
  std::vector<cd> values;
  VolterraDirection direction = VolterraDirection::forward;
  double a = 0;

 private:
  friend VolterraSolution volterra_solve(const VolterraProblem&, double, const VolterraOptions&);
  std::size_t panel_of(double x) const;
  int n_ = 16;
  std::vector<double> bw_;  // barycentric weights of the unit panel nodes
  Kernel2 kernel_;
  std::function<cd(double)> forcing_;
};

VolterraSolution volterra_solve(const VolterraProblem& problem, double tol,
                                const VolterraOptions& opts = {});

// Upper estimate of mu = int sup_x |K(x,s)| ds by sampling x per s-panel.
double estimate_mu(const VolterraProblem& problem, double tail_tol = 1e-10);

}  // namespace conic
