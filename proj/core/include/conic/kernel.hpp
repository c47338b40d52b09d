#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "conic/jost.hpp"

namespace conic {

enum class KernelKind { schrodinger, wave_plus, wave_minus };
// Energy and spatial cutoffs inserted into the kernel integral; full means no cutoff.
enum class Band { full, low_low, osc_osc, osc_low, same_side_osc, high_energy };

const char* kernel_kind_name(KernelKind k);
const char* band_name(Band b);
KernelKind parse_kernel_kind(const std::string& s);
Band parse_band(const std::string& s);

struct KernelSample {
  KernelKind kind = KernelKind::schrodinger;
  Band band = Band::full;
  double t = 0;
  double xi = 0, xi_prime = 0;
  cd value{};         // weighted kernel
  double weight = 0;  // (r(xi) r(xi'))^{-d/2}
  double err_est = 0;
  double lambda_max = 0;  // upper quadrature limit before the tail correction
  int panels = 0;
};

// 2 lambda Im[f_+(max) f_-(min) / W(lambda)].
double spectral_density(const ScatteringModel& m, double xi, double xi_prime, double lambda);

// C-infinity cutoffs: chi_energy is 1 on [0, lambda_low/2] and 0 beyond lambda_low;
// chi_space(s) is 1 for s <= 1/2 and 0 for s >= 1.
double chi_energy(double lambda, double lambda_low);
double chi_space(double s);
// Band weight at (lambda; xi, xi'). Bands that do not match the sign configuration are 0.
double band_weight(Band b, double lambda, double xi, double xi_prime, double lambda_low);
bool band_applies(Band b, double xi, double xi_prime);

struct KernelOptions {
  double lambda_low = kLambdaLow;
  double lambda_max = 400;  // top of the scattering table
  double panel_ratio = 1.5;  // geometric table panels in lambda
  int table_order = 20;      // Chebyshev nodes per table panel
  int filon_order = 24;
  double tol = 1e-9;  // absolute target for the weighted value
  int panel_budget = 40000;
};

// Jost solutions on geometric lambda panels from lambda_min to lambda_max, shared by
// every kernel evaluation. Spatial samples M(xi, .) are memoized per xi.
class ScatteringTable {
 public:
  ScatteringTable(std::shared_ptr<const ScatteringModel> model, const KernelOptions& opts = {});

  const ScatteringModel& model() const { return *model_; }
  double lambda_min() const { return breaks_.front(); }
  double lambda_max() const { return breaks_.back(); }
  const std::vector<double>& breaks() const { return breaks_; }
  int order() const { return order_; }
  // Node k of panel p.
  double node(std::size_t p, int k) const { return lambdas_[p * order_ + k]; }
  const std::vector<double>& nodes() const { return lambdas_; }
  const std::vector<double>& check_nodes() const { return check_; }
  const JostSolution& solution(std::size_t i) const { return sols_[i]; }
  const JostSolution& check_solution(std::size_t p) const { return check_sols_[p]; }
  std::size_t panel_of(double lambda) const;
  const std::vector<double>& unit_nodes() const { return unit_; }
  const std::vector<double>& bary() const { return bw_; }
  // M(xi, lambda) = m_+(xi) for xi >= 0, m_-(xi) for xi < 0, at every node then every check node.
  std::shared_ptr<const std::vector<cd>> spatial(double xi) const;
  double weight(double xi) const;

 private:
  std::shared_ptr<const ScatteringModel> model_;
  int order_;
  std::vector<double> breaks_, lambdas_, check_, unit_, bw_;
  std::vector<JostSolution> sols_, check_sols_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const std::vector<cd>>> memo_;
};

// density(xi, xi', lambda) * weight / pi = sum_k amp_k(lambda) e^{i nu_k lambda}; amp_k is sampled
// at every table node then every check node.
struct DensityTerm {
  double nu = 0;
  std::vector<cd> amp;
};
std::vector<DensityTerm> density_terms(const ScatteringTable& table, double xi, double xi_prime);

// Test function for the smeared wave kernel: cubic Hermite data on an increasing grid.
struct TestFunction {
  std::vector<double> xi, value, deriv;
};

struct SmearedWave {
  double value_abs = 0;
  double ratio = 0;  // |value| / (t^{-1/2} (|phi|_1 + |phi'|_1))
  double norm = 0;   // |phi|_1 + |phi'|_1
  double err_est = 0;
};

class KernelEvaluator {
 public:
  explicit KernelEvaluator(std::shared_ptr<const ScatteringTable> table, KernelOptions opts = {});
  KernelEvaluator(std::shared_ptr<const ScatteringModel> model, KernelOptions opts = {});

  // (1/pi) int_0^inf e^{i t lambda^p} density(xi, xi', lambda) dlambda times the weight;
  // p = 2 for schrodinger, p = 1 for wave_plus, and wave_minus uses e^{-i t lambda}.
  KernelSample evolution_kernel(KernelKind kind, double t, double xi, double xi_prime) const;
  KernelSample band_kernel(KernelKind kind, Band band, double t, double xi, double xi_prime) const;
  // High-energy wave_plus kernel smeared against phi in xi'.
  SmearedWave wave_smeared(double xi, double t, const TestFunction& phi) const;

  const ScatteringTable& table() const { return *table_; }
  const KernelOptions& options() const { return opts_; }

 private:
  std::shared_ptr<const ScatteringTable> table_;
  KernelOptions opts_;
};

struct StationaryPhaseCase {
  std::string name;
  std::function<double(double)> phi, dphi, d2phi;
  std::function<cd(double)> a, da;
  double t = 1;
  double lo = -1, hi = 1;  // support of a
  // Critical-point shift when the phase is lambda^2 + lambda (xi - xi')/t, so x = lambda - lambda0.
  double lambda0 = 0;
  std::optional<cd> exact;  // closed form of the integral when known
};

struct StationaryPhaseResult {
  double lhs = 0, rhs = 0;
  double lhs_err = 0;
  cd integral{};
};

// lhs = |int e^{i t phi} a|, rhs = delta^2 { int |a|/(delta^2 + x^2) + int_{|x|>delta} |a'|/|x| },
// delta = t^{-1/2}.
StationaryPhaseResult stationary_phase_check(const StationaryPhaseCase& c);
// Twelve cases: four phases with phi'' >= 1 against Gaussian, centered bump and off-center bump
// amplitudes, t in {1e2, 1e3, 1e4}.
std::vector<StationaryPhaseCase> stationary_phase_library();
// Global constant for lhs <= C_sp rhs over the library.
inline constexpr double kStationaryPhaseConstant = 1.0;

struct DecayReport {
  KernelKind kind = KernelKind::schrodinger;
  Band band = Band::full;
  std::vector<double> t_grid;
  std::vector<double> sup_abs;
  std::vector<double> argsup_xi, argsup_xi_prime;
  double alpha = 0, C = 0, r2 = 0;
  double target = 0;  // expected exponent
  std::vector<KernelSample> samples;
};

// +-{0, 1, 3, 10, 30, 100, 300, 1000} squared, ordered xi >= xi', plus (0, +-2t) and (t, -t),
// restricted to the band's sign configuration and to |xi| <= xi_cap.
std::vector<std::pair<double, double>> default_spatial_grid(Band band, double t, double xi_cap);

using SpatialGrid = std::function<std::vector<std::pair<double, double>>(double t)>;

DecayReport decay_scan(const KernelEvaluator& ev, KernelKind kind, Band band,
                       const std::vector<double>& t_grid, const SpatialGrid& grid);

void write_kernel_csv(std::ostream& os, const std::vector<KernelSample>& samples);
void write_decay_csv(std::ostream& os, const std::vector<DecayReport>& reports);

}  // namespace conic
