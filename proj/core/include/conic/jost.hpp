#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "conic/geometry.hpp"
#include "conic/volterra.hpp"
#include "conic/wave.hpp"

namespace conic {

inline constexpr double kLambdaLow = 1e-2;

struct JostOptions {
  int stages = 5;               // Radau IIA collocation stages
  double step_fraction = 0.05;  // step <= step_fraction * <xi>
  // When finite, every step also obeys h * lambda <= phase_step (resolved oscillation).
  double phase_step = INFINITY;
};

// Zero-energy solutions u0 = r^{d/2}, u1 = u0 * int_0^xi r^{-d}.
class ZeroEnergyBasis {
 public:
  WaveSample u0(double xi) const;
  WaveSample u1(double xi) const;
  // int_0^xi r^{-d}
  double y1(double xi) const { return y1_(xi); }
  double lo() const { return y1_.lo(); }
  double hi() const { return y1_.hi(); }

 private:
  friend class ScatteringModel;
  PiecewiseCheb<double> u0_, du0_, y1_;
};

// Side solution g(eta), eta >= 0, of -g'' + V(sigma eta) g = lambda^2 g with g ~ e^{i lambda eta};
// stored as m = e^{-i lambda eta} g on increasing nodes; eta.back() is the start point.
struct HalfLine {
  int sigma = 1;
  double lambda = 0;
  bool hankel_start = false;
  double init_error = 0;  // bound on the start-value error propagated to m
  std::vector<double> eta;
  std::vector<cd> m, dm;
};

class ScatteringModel;

class JostSolution {
 public:
  double lambda() const { return lambda_; }
  // Jost solutions normalized by f_+ ~ e^{i lambda xi} (xi -> +inf), f_- ~ e^{-i lambda xi} (xi -> -inf).
  WaveSample f_plus(double xi) const;
  WaveSample f_minus(double xi) const;
  // m_+ = e^{-i lambda xi} f_+, m_- = e^{i lambda xi} f_-, with xi-derivatives.
  WaveSample m_plus(double xi) const;
  WaveSample m_minus(double xi) const;

  // W = W(f_+, f_-) = -2 i lambda beta_-
  // Coefficients follow the conjugation convention for negative lambda.
  cd W() const { return cj(W_); }
  cd alpha_minus() const { return cj(alpha_m_); }
  cd beta_minus() const { return cj(beta_m_); }
  cd alpha_plus() const { return cj(alpha_p_); }
  cd beta_plus() const { return cj(beta_m_); }
  double start_plus() const { return plus_.eta.back(); }
  double start_minus() const { return -minus_.eta.back(); }
  double init_error() const { return std::max(plus_.init_error, minus_.init_error); }
  bool conjugated() const { return conj_; }
  std::size_t steps() const { return plus_.eta.size() + minus_.eta.size(); }

 private:
  friend class ScatteringModel;
  // g and g' on one side at eta >= 0
  std::pair<cd, cd> side(const HalfLine& h, double eta) const;
  cd cj(cd z) const { return conj_ ? std::conj(z) : z; }
  const ScatteringModel* model_ = nullptr;
  JostOptions opts_;
  double lambda_ = 0;
  bool conj_ = false;
  HalfLine plus_, minus_;
  cd W_{}, alpha_m_{}, beta_m_{}, alpha_p_{};
};

// Perturbed zero-energy basis u_j(., lambda) on [-w, w], w = min(4/lambda, chart).
class LowEnergyBasis {
 public:
  double lambda() const { return lambda_; }
  double window() const { return w_; }
  WaveSample u(int j, double xi) const;
  WaveSample u0(double xi) const { return u(0, xi); }
  WaveSample u1(double xi) const { return u(1, xi); }
  // max |W(u0(.,lambda), u1(.,lambda)) - 1| over check points
  double wronskian_defect() const { return w_defect_; }
  double mu() const { return mu_; }

 private:
  friend class ScatteringModel;
  const ScatteringModel* model_ = nullptr;
  double lambda_ = 0, w_ = 0, w_defect_ = 0, mu_ = 0;
  // [j][side]: side 0 forward on [0, w], side 1 backward on [-w, 0]; solutions are h_j = u_j(., lambda)/u_j
  std::vector<VolterraSolution> h_;
};

struct ScatteringData {
  double lambda = 0;
  cd a_plus{}, b_plus{}, a_minus{}, b_minus{};
  cd W{};         // low-energy formula a_+ b_- - a_- b_+ for lambda <= lambda_low, else direct
  cd W_direct{};  // W(f_+, f_-) at xi = 0
  cd alpha_minus{}, beta_minus{};
  std::map<std::string, double> residuals;
};

class ScatteringModel {
 public:
  explicit ScatteringModel(std::shared_ptr<const Potential> potential);

  const Potential& potential() const { return *potential_; }
  std::shared_ptr<const Potential> potential_ptr() const { return potential_; }
  // Tabulated V (piecewise Chebyshev).
  double V(double xi) const { return vt_(xi); }
  double xi_lo() const { return vt_.lo(); }
  double xi_hi() const { return vt_.hi(); }
  bool symmetric() const { return potential_->profile().symmetric(); }
  double lambda_min() const;

  const ZeroEnergyBasis& zero_energy() const { return zero_; }
  JostSolution jost(double lambda, const JostOptions& opts = {}) const;
  LowEnergyBasis low_energy(double lambda, double tol = 1e-13) const;
  ScatteringData scattering(double lambda) const;

 private:
  friend class JostSolution;
  HalfLine integrate_side(int sigma, double lambda, const JostOptions& opts) const;
  std::vector<double> grid(int sigma, double step_fraction) const;

  std::shared_ptr<const Potential> potential_;
  PiecewiseCheb<double> vt_;
  std::vector<double> vbreaks_;
  std::vector<double> grid_plus_, grid_minus_;  // universal nodes for the default step
  ZeroEnergyBasis zero_;
};

// Module entry points.
JostSolution jost_plus(const ScatteringModel& m, double lambda, const JostOptions& opts = {});
JostSolution jost_minus(const ScatteringModel& m, double lambda, const JostOptions& opts = {});
const ZeroEnergyBasis& zero_energy_basis(const ScatteringModel& m);
LowEnergyBasis low_energy_basis(const ScatteringModel& m, double lambda);

struct ConnectionCoefficients {
  cd a_plus, b_plus, a_minus, b_minus;
  double xi_match = 0;
  double constancy = 0;  // relative spread of the Wronskians across matching points
};
ConnectionCoefficients connection_coefficients(const ScatteringModel& m, double lambda);
cd wronskian(const ScatteringModel& m, double lambda);
std::pair<cd, cd> reflection_transmission(const ScatteringModel& m, double lambda);

struct LawCheck {
  std::string name;
  std::string law;
  double value = 0;      // statistic (ratio, fitted rate, constant)
  double residual = 0;   // worst residual
  double threshold = 0;  // pass if residual <= threshold
  bool pass = false;
};

struct AsymptoticConstants {
  cd c0{};
  double c1 = 0, kappa = 0;
  double c2 = 0, c3 = 0, c3_from_W = 0, c3_tilde = 0, c4 = 0, c5 = 0;
  double gamma0 = 0, gamma1 = 0;
  std::map<std::string, double> fit_residuals;
};

struct LowEnergyReport {
  AsymptoticConstants constants;
  std::vector<LawCheck> checks;
  bool all_pass() const;
};

struct HighEnergyReport {
  std::vector<LawCheck> checks;
  std::map<std::string, double> constants;
  bool all_pass() const;
};

// c2 in sigma y1(sigma xi) = sqrt2 (log xi + c2) + o(1), xi -> +inf (conical end, d = 1).
double fit_c2(const ScatteringModel& m, double* residual = nullptr, int sigma = 1);
// First:  u1(xi) int_0^xi u0^2 - u0(xi) int_0^xi u0 u1
// Second: u1(xi) int_0^xi u0 u1 - u0(xi) int_0^xi u1^2
std::pair<double, double> zero_energy_moments(const ScatteringModel& m, double xi);

LowEnergyReport validate_low_energy(const ScatteringModel& m, const std::vector<double>& lambdas);
HighEnergyReport validate_high_energy(const ScatteringModel& m, const std::vector<double>& lambdas,
                                      const std::vector<double>& xis);

// Radau IIA collocation nodes c and matrix A for s stages.
struct RadauTableau {
  std::vector<double> c;
  std::vector<std::vector<double>> A;
};
const RadauTableau& radau_iia(int stages);

}  // namespace conic
