// Acceptance suite: one PASS/FAIL line per criterion.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "conic/harness.hpp"

using namespace conic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::shared_ptr<const ScatteringModel> make_model(const std::string& kind, double x_max) {
  ProfileConfig c;
  c.kind = kind;
  if (kind == "hyperboloid") c.params = {{"a", 1.0}};
  c.x_max = x_max;
  return std::make_shared<const ScatteringModel>(build_potential(c));
}

// Deep chart for the low-energy laws (lambda down to 1e-6).
const ScatteringModel& deep() {
  static const auto m = make_model("hyperboloid", 1e8);
  return *m;
}

const LowEnergyReport& low_report() {
  static const LowEnergyReport r = validate_low_energy(deep(), logspace(1e-6, 1e-3, 40));
  return r;
}

const KernelEvaluator& kernels() {
  static const KernelEvaluator ev(make_model("hyperboloid", 1e5));
  return ev;
}

std::string g(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

const LawCheck& find(const std::vector<LawCheck>& cs, const std::string& name) {
  for (const LawCheck& c : cs)
    if (c.name == name) return c;
  throw ConicError("acceptance: missing check " + name);
}

Outcome cylinder_exactness() {
  auto m = make_model("cylinder", 1e4);
  double v = 0, f = 0, w = 0, a = 0, b = 0;
  for (double x : linspace(-5e3, 5e3, 4001)) v = std::max(v, std::abs(m->V(x)));
  for (double l : {0.01, 0.5, 3.0, 20.0}) {
    const JostSolution J = m->jost(l);
    for (double x : linspace(-50, 50, 21)) {
      f = std::max(f, std::abs(J.f_plus(x).value - std::polar(1.0, l * x)));
      f = std::max(f, std::abs(J.f_minus(x).value - std::polar(1.0, -l * x)));
    }
    w = std::max(w, std::abs(std::abs(J.W()) - 2 * l));
    a = std::max(a, std::abs(J.alpha_minus()));
    b = std::max(b, std::abs(std::abs(J.beta_minus()) - 1));
  }
  return {v <= 1e-12 && f <= 1e-10 && w <= 1e-10 && a <= 1e-10 && b <= 1e-10,
          "|V| " + g(v) + ", |f - plane| " + g(f) + ", ||W| - 2l| " + g(w) + ", |a-| " + g(a) + ", ||b-| - 1| " + g(b)};
}

Outcome potential_tail() {
  const auto a = make_model("hyperboloid", 1e4), b = make_model("hyperboloid", 2e4);
  const TailReport ta = a->potential().fit_conical_constants(true), tb = b->potential().fit_conical_constants(true);
  double s = 0;
  for (double x : logspace(10, 1e4, 200)) s = std::max(s, x * x * x * std::abs(a->V(x) + 0.25 / (x * x)));
  const double drift = std::abs(tb.C3 / ta.C3 - 1);
  return {drift <= 0.2 && s <= ta.C3 * (1 + 1e-9),
          "C3 " + g(ta.C3) + " -> " + g(tb.C3) + " under doubling (drift " + g(drift) + "), sup xi^3|V1| " + g(s)};
}

Outcome wronskian_law() {
  const LowEnergyReport& r = low_report();
  const LawCheck& w = find(r.checks, "W_low_energy");
  const LawCheck& s = find(r.checks, "W_log_slope");
  return {w.pass && s.pass, "max rel residual " + g(w.residual) + ", slope " + g(s.value) + " vs 2/pi (rel " +
                                g(s.residual) + ")"};
}

Outcome coefficient_laws() {
  const LowEnergyReport& r = low_report();
  bool ok = true;
  std::string d;
  for (const char* n : {"b_plus_ratio", "b_plus_rate", "a_plus_derivative", "b_plus_derivative", "W_derivative"}) {
    const LawCheck& c = find(r.checks, n);
    ok = ok && c.pass;
    d += std::string(d.empty() ? "" : ", ") + n + " " + g(c.residual) + "/" + g(c.threshold);
  }
  return {ok, d + ", b_+ rate value " + g(find(r.checks, "b_plus_rate").value)};
}

Outcome unitarity() {
  const std::vector<double> ls = logspace(1e-6, 100, 33);
  std::vector<double> u(ls.size());
  parallel_for(ls.size(), [&](std::size_t i) {
    const ScatteringData d = deep().scattering(ls[i]);
    u[i] = std::max(d.residuals.at("unitarity"), d.residuals.at("unitarity_direct"));
  });
  const double worst = *std::max_element(u.begin(), u.end());
  return {worst <= 1e-5, "max ||b-|^2 - |a-|^2 - 1| " + g(worst) + " over lambda in [1e-6, 100]"};
}

Outcome high_energy() {
  const HighEnergyReport r = validate_high_energy(*make_model("hyperboloid", 1e5), logspace(1, 100, 9), logspace(1, 1e3, 13));
  std::string d;
  for (const LawCheck& c : r.checks) d += std::string(d.empty() ? "" : ", ") + c.name + " C=" + g(c.value);
  return {r.all_pass(), d};
}

Outcome schrodinger_decay() {
  const DecayReport r = decay_scan(kernels(), KernelKind::schrodinger, Band::full, logspace(10, 1e4, 13),
                                   [](double t) { return default_spatial_grid(Band::full, t, 9e4); });
  return {std::abs(r.alpha - 1.0) <= 0.15 && r.r2 >= 0.95,
          "alpha " + g(r.alpha) + ", C " + g(r.C) + ", R2 " + g(r.r2)};
}

Outcome band_bounds() {
  struct Item {
    KernelKind kind;
    Band band;
    bool deep_t;
  };
  const std::vector<Item> items{
      {KernelKind::schrodinger, Band::low_low, true},        {KernelKind::wave_plus, Band::low_low, false},
      {KernelKind::schrodinger, Band::osc_osc, true},        {KernelKind::wave_plus, Band::osc_osc, false},
      {KernelKind::schrodinger, Band::same_side_osc, true},  {KernelKind::wave_plus, Band::same_side_osc, false},
      {KernelKind::schrodinger, Band::osc_low, true},        {KernelKind::wave_plus, Band::osc_low, false},
      {KernelKind::schrodinger, Band::high_energy, false},
  };
  bool ok = true;
  std::string d;
  for (const Item& it : items) {
    // the low-energy Schrodinger bands reach their rate only once t lambda_low^2 >> 1
    const std::vector<double> ts = it.deep_t ? logspace(1e4, 1e8, 9) : logspace(10, 1e4, 13);
    const Band band = it.band;
    const DecayReport r = decay_scan(kernels(), it.kind, band, ts,
                                     [&](double t) { return default_spatial_grid(band, t, 5e4); });
    const double growth = rate_growth(r);
    ok = ok && growth <= 2;
    d += std::string(d.empty() ? "" : "; ") + kernel_kind_name(it.kind) + ":" + band_name(band) +
         " t^" + g(r.target) + " growth " + g(growth);
  }
  // smeared high-energy wave kernel, ratio already carries t^{1/2}
  for (double c : {0.0, 50.0}) {
    TestFunction f;
    for (double x : linspace(c - 2, c + 2, 101)) {
      const double s = (x - c) / 2;
      const double v = std::abs(s) < 1 ? std::exp(-1 / (1 - s * s)) : 0.0;
      f.xi.push_back(x);
      f.value.push_back(v);
      f.deriv.push_back(std::abs(s) < 1 ? -v * s / ((1 - s * s) * (1 - s * s)) : 0.0);
    }
    std::vector<double> ratio;
    for (double t : logspace(100, 1000, 4)) ratio.push_back(kernels().wave_smeared(0, t, f).ratio);
    double growth = 0;
    for (std::size_t i = 0; i < ratio.size(); ++i)
      for (std::size_t j = i + 1; j < ratio.size(); ++j) growth = std::max(growth, ratio[j] / ratio[i]);
    ok = ok && growth <= 2;
    d += "; smeared wave bump@" + g(c) + " growth " + g(growth);
  }
  return {ok, d};
}

Outcome stationary_phase() {
  double worst = 0, oracle = 0;
  int n = 0;
  for (const StationaryPhaseCase& c : stationary_phase_library()) {
    const StationaryPhaseResult r = stationary_phase_check(c);
    worst = std::max(worst, r.lhs / r.rhs);
    if (c.exact) {
      oracle = std::max(oracle, std::abs(r.integral - *c.exact) / std::abs(*c.exact));
      ++n;
    }
  }
  return {worst <= kStationaryPhaseConstant && oracle <= 1e-6 && n > 0,
          "max lhs/rhs " + g(worst) + " <= C_sp " + g(kStationaryPhaseConstant) + ", oracle rel err " + g(oracle)};
}

Outcome pipeline_overlap() {
  double rep_err = 0;
  for (double l : {1e-3, 3e-3, 1e-2}) {
    const ScatteringData s = deep().scattering(l);
    const LowEnergyBasis b = deep().low_energy(l);
    const JostSolution J = deep().jost(l);
    for (double u : {2.0, 2.5, 3.0, 3.5, 4.0}) {
      const double x = u / l;
      const cd rep = s.a_plus * b.u0(x).value + s.b_plus * b.u1(x).value;
      rep_err = std::max(rep_err, std::abs(rep - J.f_plus(x).value) / std::abs(J.f_plus(x).value));
    }
  }
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0, 1);
  double band_err = 0;
  for (int i = 0; i < 20; ++i) {
    const double t = std::pow(10.0, 3 * U(rng)), x = 400 * (U(rng) - 0.5), y = 400 * (U(rng) - 0.5);
    const cd full = kernels().evolution_kernel(KernelKind::schrodinger, t, x, y).value;
    const Band mid = band_applies(Band::osc_osc, x, y) ? Band::osc_osc : Band::same_side_osc;
    cd sum = 0;
    for (Band b : {Band::low_low, Band::osc_low, mid, Band::high_energy})
      sum += kernels().band_kernel(KernelKind::schrodinger, b, t, x, y).value;
    band_err = std::max(band_err, std::abs(sum - full) / std::abs(full));
  }
  return {rep_err <= 1e-4 && band_err <= 1e-5,
          "low-energy vs oscillatory f_+ rel " + g(rep_err) + ", band reconstruction rel " + g(band_err)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"cylinder exactness", cylinder_exactness},
      {"potential tail", potential_tail},
      {"low-energy Wronskian law", wronskian_law},
      {"coefficient asymptotics", coefficient_laws},
      {"unitarity identity", unitarity},
      {"high-energy m bounds", high_energy},
      {"Schrodinger decay", schrodinger_decay},
      {"per-band bounds", band_bounds},
      {"stationary-phase majorant", stationary_phase},
      {"pipeline overlap", pipeline_overlap},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("criterion %zu %s: %s (%s) [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                o.detail.c_str(), sec);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
