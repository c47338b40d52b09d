#include "conic/harness.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace conic {

using nlohmann::json;

std::vector<double> GridSpec::values() const {
  if (count == 1) return {min};
  return log ? logspace(min, max, count) : linspace(min, max, count);
}

namespace {

const char* kCommandNames[] = {"describe", "potential", "jost",  "coeffs",   "validate-low",
                               "validate-high", "kernel", "decay", "statphase"};

void strict_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConicError("config: " + where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConicError("config: unknown key '" + it.key() + "' in " + where);
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ConicError("config: " + where + " must be a number");
  return j.get<double>();
}

GridSpec parse_grid(const json& j, const std::string& where) {
  strict_keys(j, where, {"min", "max", "count", "scale"});
  for (const char* k : {"min", "max", "count"})
    if (!j.contains(k)) throw ConicError("config: " + where + " needs '" + k + "'");
  GridSpec g;
  g.min = number(j["min"], where + ".min");
  g.max = number(j["max"], where + ".max");
  if (!j["count"].is_number_integer()) throw ConicError("config: " + where + ".count must be an integer");
  g.count = j["count"].get<int>();
  if (j.contains("scale")) {
    if (!j["scale"].is_string()) throw ConicError("config: " + where + ".scale must be a string");
    const std::string s = j["scale"].get<std::string>();
    if (s != "linear" && s != "log") throw ConicError("config: " + where + ".scale must be linear or log");
    g.log = s == "log";
  }
  if (g.count < 1) throw ConicError("config: " + where + " is empty");
  if (!(g.min < g.max)) throw ConicError("config: " + where + " needs min < max");
  if (g.log && !(g.min > 0)) throw ConicError("config: " + where + " is log-scaled and needs min > 0");
  return g;
}

ProfileConfig parse_profile(const json& j) {
  strict_keys(j, "profile", {"kind", "params", "d", "x_max", "table"});
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConicError("config: profile.kind must be a string");
  ProfileConfig p;
  p.kind = j["kind"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConicError("config: profile.params must be an object");
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
      p.params[it.key()] = number(it.value(), "profile.params." + it.key());
  }
  if (j.contains("d")) {
    if (!j["d"].is_number_integer()) throw ConicError("config: profile.d must be an integer");
    p.d = j["d"].get<int>();
  }
  if (j.contains("x_max")) p.x_max = number(j["x_max"], "profile.x_max");
  if (j.contains("table")) {
    const json& t = j["table"];
    strict_keys(t, "profile.table", {"x", "r"});
    for (const char* k : {"x", "r"}) {
      if (!t.contains(k) || !t[k].is_array()) throw ConicError(std::string("config: profile.table.") + k + " must be an array");
      auto& dst = k[0] == 'x' ? p.table_x : p.table_r;
      for (const json& v : t[k]) dst.push_back(number(v, std::string("profile.table.") + k));
    }
  }
  return p;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path p = std::filesystem::path(cfg.out_dir) / name;
  std::ofstream os(p);
  if (!os) throw ConicError("run: cannot write " + p.string());
  os << std::setprecision(17);
  return os;
}

LawCheck make_check(std::string name, std::string law, double value, double residual, double threshold) {
  LawCheck c;
  c.name = std::move(name);
  c.law = std::move(law);
  c.value = value;
  c.residual = residual;
  c.threshold = threshold;
  c.pass = residual <= threshold;
  return c;
}

std::string coords(double t, double xi, double xi_prime) {
  std::ostringstream os;
  os << std::setprecision(17) << " (t=" << t << ", xi=" << xi << ", xi'=" << xi_prime << ")";
  return os.str();
}

int finish(const RunConfig& cfg, const ValidationSummary& s, const std::string& stem, std::ostream& log) {
  {
    std::ofstream os = open_out(cfg, stem + ".csv");
    write_summary_csv(os, s);
  }
  {
    std::ofstream os = open_out(cfg, stem + ".txt");
    write_summary_text(os, s);
  }
  write_summary_text(log, s);
  return s.all_pass() ? 0 : 2;
}

double half_width(const ScatteringModel& m) { return std::min(m.xi_hi(), -m.xi_lo()); }

int run_describe(const RunConfig& cfg, const ScatteringModel& m, std::ostream& log) {
  const Potential& P = m.potential();
  std::ostringstream os;
  os << std::setprecision(17);
  os << "profile " << cfg.profile.kind << "\n";
  for (auto& [k, v] : P.profile().params()) os << "param " << k << " " << v << "\n";
  os << "d " << P.profile().d() << "\n";
  os << "xi_range " << m.xi_lo() << " " << m.xi_hi() << "\n";
  os << "conical " << P.profile().conical_left() << " " << P.profile().conical_right() << "\n";
  if (P.profile().conical_left() || P.profile().conical_right())
    os << "inverse_square_coefficient " << P.inverse_square_coefficient() << "\n";
  os << "lambda_min " << m.lambda_min() << "\n";
  for (bool right : {false, true}) {
    if (!(right ? P.profile().conical_right() : P.profile().conical_left())) continue;
    const TailReport t = P.fit_conical_constants(right);
    const char* side = right ? "right" : "left";
    os << side << "_c_inf " << t.c_inf << "\n";
    os << side << "_C2 " << t.C2 << "\n";
    os << side << "_C3 " << t.C3 << "\n";
  }
  std::ofstream f = open_out(cfg, "describe.txt");
  f << os.str();
  log << os.str();
  return 0;
}

int run_potential(const RunConfig& cfg, const ScatteringModel& m) {
  const std::vector<double> xs =
      cfg.xi ? cfg.xi->values() : logspace(1.0, 0.99 * m.xi_hi(), 200);
  std::ofstream os = open_out(cfg, "potential.csv");
  os << "xi,rho,V,xi2V\n";
  for (double x : xs) {
    const PotentialSample s = m.potential().at(x);
    os << fmt(x) << ',' << fmt(s.rho) << ',' << fmt(s.V) << ',' << fmt(x * x * s.V) << '\n';
  }
  return 0;
}

int run_jost(const RunConfig& cfg, const ScatteringModel& m) {
  const std::vector<double> ls = cfg.lambda ? cfg.lambda->values() : logspace(0.01, 100, 9);
  const std::vector<double> xs = cfg.xi ? cfg.xi->values() : linspace(-100, 100, 21);
  std::vector<JostSolution> sols(ls.size());
  parallel_for(ls.size(), [&](std::size_t i) { sols[i] = m.jost(ls[i]); });
  std::ofstream os = open_out(cfg, "jost.csv");
  os << "lambda,xi,re_f_plus,im_f_plus,re_f_minus,im_f_minus,re_m_plus,im_m_plus,re_m_minus,im_m_minus\n";
  for (std::size_t i = 0; i < ls.size(); ++i)
    for (double x : xs) {
      const cd fp = sols[i].f_plus(x).value, fm = sols[i].f_minus(x).value;
      const cd mp = sols[i].m_plus(x).value, mm = sols[i].m_minus(x).value;
      os << fmt(ls[i]) << ',' << fmt(x);
      for (cd z : {fp, fm, mp, mm}) os << ',' << fmt(z.real()) << ',' << fmt(z.imag());
      os << '\n';
    }
  return 0;
}

int run_coeffs(const RunConfig& cfg, const ScatteringModel& m) {
  const std::vector<double> ls = cfg.lambda ? cfg.lambda->values() : logspace(m.lambda_min(), 100, 40);
  std::vector<ScatteringData> data(ls.size());
  parallel_for(ls.size(), [&](std::size_t i) { data[i] = m.scattering(ls[i]); });
  std::ofstream os = open_out(cfg, "coeffs.csv");
  os << "lambda,re_W,im_W,re_alpha_minus,im_alpha_minus,re_beta_minus,im_beta_minus,"
        "re_a_plus,im_a_plus,re_b_plus,im_b_plus,unitarity\n";
  for (const ScatteringData& d : data) {
    os << fmt(d.lambda);
    for (cd z : {d.W, d.alpha_minus, d.beta_minus, d.a_plus, d.b_plus}) os << ',' << fmt(z.real()) << ',' << fmt(z.imag());
    os << ',' << fmt(d.residuals.at("unitarity")) << '\n';
  }
  return 0;
}

int run_validate_low(const RunConfig& cfg, const ScatteringModel& m, std::ostream& log) {
  const std::vector<double> ls = cfg.lambda ? cfg.lambda->values() : logspace(1e-6, 1e-3, 40);
  const LowEnergyReport r = validate_low_energy(m, ls);
  ValidationSummary s;
  s.title = "validate-low";
  s.checks = r.checks;
  const AsymptoticConstants& K = r.constants;
  s.constants = {{"re_c0", K.c0.real()}, {"im_c0", K.c0.imag()}, {"c1", K.c1}, {"kappa", K.kappa},
                 {"c2", K.c2},           {"c3", K.c3},           {"c3_from_W", K.c3_from_W},
                 {"c3_tilde", K.c3_tilde}, {"c4", K.c4},         {"c5", K.c5},
                 {"gamma0", K.gamma0},   {"gamma1", K.gamma1}};
  return finish(cfg, s, "validate_low", log);
}

int run_validate_high(const RunConfig& cfg, const ScatteringModel& m, std::ostream& log) {
  const std::vector<double> ls = cfg.lambda ? cfg.lambda->values() : logspace(1, 100, 9);
  const std::vector<double> xs = cfg.xi ? cfg.xi->values() : logspace(1, 1e3, 13);
  const HighEnergyReport r = validate_high_energy(m, ls, xs);
  ValidationSummary s;
  s.title = "validate-high";
  s.checks = r.checks;
  for (auto& [k, v] : r.constants) s.constants.emplace_back(k, v);
  return finish(cfg, s, "validate_high", log);
}

int run_kernel(const RunConfig& cfg, std::shared_ptr<const ScatteringModel> m) {
  const std::vector<double> ts = cfg.t ? cfg.t->values() : logspace(10, 1000, 3);
  const std::vector<double> xs = cfg.xi ? cfg.xi->values() : linspace(-10, 10, 5);
  const std::vector<double> ys = cfg.xi_prime ? cfg.xi_prime->values() : linspace(-10, 10, 5);
  const KernelEvaluator ev(m, cfg.kernel);
  std::vector<KernelSample> out(ts.size() * xs.size() * ys.size());
  parallel_for(out.size(), [&](std::size_t i) {
    const double t = ts[i / (xs.size() * ys.size())], x = xs[i / ys.size() % xs.size()], y = ys[i % ys.size()];
    try {
      out[i] = ev.band_kernel(cfg.kind, cfg.band, t, x, y);
    } catch (const std::exception& e) {
      throw ConicError(e.what() + coords(t, x, y));
    }
  });
  std::ofstream os = open_out(cfg, "kernel.csv");
  write_kernel_csv(os, out);
  return 0;
}

int run_decay(const RunConfig& cfg, std::shared_ptr<const ScatteringModel> m, std::ostream& log) {
  const std::vector<double> ts = cfg.t ? cfg.t->values() : logspace(10, 1e4, 13);
  const double cap = cfg.xi_cap.value_or(0.9 * half_width(*m));
  const KernelEvaluator ev(m, cfg.kernel);
  const bool wave = cfg.kind != KernelKind::schrodinger;
  const Band band = cfg.band;
  const DecayReport r = decay_scan(ev, cfg.kind, band, ts, [&](double t) {
    auto g = default_spatial_grid(band, t, cap);
    // the wave kernel is singular on the light cone |xi - xi'| = t
    if (wave) std::erase_if(g, [&](auto p) { return std::abs(std::abs(p.first - p.second) - t) < 1.0; });
    return g;
  });
  {
    std::ofstream os = open_out(cfg, "decay.csv");
    write_decay_csv(os, {r});
  }
  {
    std::ofstream os = open_out(cfg, "decay_samples.csv");
    write_kernel_csv(os, r.samples);
  }
  ValidationSummary s;
  s.title = "decay";
  std::ostringstream rate;
  rate << "t^" << r.target << " sup |K| non-increasing within a factor over the last decade";
  s.checks.push_back(make_check("rate_growth", rate.str(), rate_growth(r), rate_growth(r), cfg.rate_growth_max));
  if (band == Band::full) {
    std::ostringstream law;
    law << "sup |K| ~ C t^-" << r.target;
    s.checks.push_back(make_check("fit_alpha", law.str(), r.alpha, std::abs(r.alpha - r.target), cfg.fit_alpha_tol));
    s.checks.push_back(make_check("fit_r2", "log-log fit quality", r.r2, std::max(0.0, cfg.fit_r2_min - r.r2), 0.0));
  }
  s.constants = {{"alpha", r.alpha}, {"C", r.C}, {"R2", r.r2}, {"target", r.target}};
  return finish(cfg, s, "decay_summary", log);
}

int run_statphase(const RunConfig& cfg, std::ostream& log) {
  const std::vector<StationaryPhaseCase> lib = stationary_phase_library();
  std::vector<StationaryPhaseResult> res(lib.size());
  parallel_for(lib.size(), [&](std::size_t i) { res[i] = stationary_phase_check(lib[i]); });
  std::ofstream os = open_out(cfg, "statphase.csv");
  os << "case,t,lhs,rhs,ratio,lhs_err,oracle_rel_err\n";
  double worst = 0, oracle = 0;
  for (std::size_t i = 0; i < lib.size(); ++i) {
    const double ratio = res[i].rhs > 0 ? res[i].lhs / res[i].rhs : 0.0;
    worst = std::max(worst, ratio);
    double rel = 0;
    if (lib[i].exact) {
      rel = std::abs(res[i].integral - *lib[i].exact) / std::abs(*lib[i].exact);
      oracle = std::max(oracle, rel);
    }
    os << lib[i].name << ',' << fmt(lib[i].t) << ',' << fmt(res[i].lhs) << ',' << fmt(res[i].rhs) << ','
       << fmt(ratio) << ',' << fmt(res[i].lhs_err) << ',' << fmt(rel) << '\n';
  }
  ValidationSummary s;
  s.title = "statphase";
  s.checks.push_back(make_check("majorant", "|int e^{it phi} a| <= C_sp delta^2 {...}, delta = t^-1/2", worst,
                                worst, kStationaryPhaseConstant));
  s.checks.push_back(make_check("oracle", "Gaussian amplitude against the closed form", oracle, oracle, 1e-6));
  s.constants = {{"C_sp", kStationaryPhaseConstant}, {"max_ratio", worst}};
  return finish(cfg, s, "statphase_summary", log);
}

}  // namespace

const char* command_name(Command c) { return kCommandNames[static_cast<int>(c)]; }

Command parse_command(const std::string& s) {
  for (int i = 0; i < 9; ++i)
    if (s == kCommandNames[i]) return static_cast<Command>(i);
  throw ConicError("config: unknown command '" + s + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  try {
    const json j = json::parse(text);
    strict_keys(j, "config", {"profile", "command", "out", "lambda", "xi", "xi_prime", "t", "kind", "band",
                              "xi_cap", "tolerances"});
    if (!j.contains("profile")) throw ConicError("config: missing 'profile'");
    cfg.profile = parse_profile(j["profile"]);
    if (!j.contains("command") || !j["command"].is_string()) throw ConicError("config: 'command' must be a string");
    cfg.command = parse_command(j["command"].get<std::string>());
    if (j.contains("out")) {
      if (!j["out"].is_string()) throw ConicError("config: 'out' must be a string");
      cfg.out_dir = j["out"].get<std::string>();
    }
    if (j.contains("lambda")) cfg.lambda = parse_grid(j["lambda"], "lambda");
    if (j.contains("xi")) cfg.xi = parse_grid(j["xi"], "xi");
    if (j.contains("xi_prime")) cfg.xi_prime = parse_grid(j["xi_prime"], "xi_prime");
    if (j.contains("t")) cfg.t = parse_grid(j["t"], "t");
    if (j.contains("kind")) {
      if (!j["kind"].is_string()) throw ConicError("config: 'kind' must be a string");
      cfg.kind = parse_kernel_kind(j["kind"].get<std::string>());
    }
    if (j.contains("band")) {
      if (!j["band"].is_string()) throw ConicError("config: 'band' must be a string");
      cfg.band = parse_band(j["band"].get<std::string>());
    }
    if (j.contains("xi_cap")) {
      cfg.xi_cap = number(j["xi_cap"], "xi_cap");
      if (!(*cfg.xi_cap > 0)) throw ConicError("config: xi_cap must be positive");
    }
    if (j.contains("tolerances")) {
      const json& t = j["tolerances"];
      strict_keys(t, "tolerances", {"kernel_tol", "lambda_max", "panel_budget", "fit_alpha", "fit_r2", "rate_growth"});
      if (t.contains("kernel_tol")) cfg.kernel.tol = number(t["kernel_tol"], "tolerances.kernel_tol");
      if (t.contains("lambda_max")) cfg.kernel.lambda_max = number(t["lambda_max"], "tolerances.lambda_max");
      if (t.contains("panel_budget")) {
        if (!t["panel_budget"].is_number_integer()) throw ConicError("config: tolerances.panel_budget must be an integer");
        cfg.kernel.panel_budget = t["panel_budget"].get<int>();
      }
      if (t.contains("fit_alpha")) cfg.fit_alpha_tol = number(t["fit_alpha"], "tolerances.fit_alpha");
      if (t.contains("fit_r2")) cfg.fit_r2_min = number(t["fit_r2"], "tolerances.fit_r2");
      if (t.contains("rate_growth")) cfg.rate_growth_max = number(t["rate_growth"], "tolerances.rate_growth");
      if (!(cfg.kernel.tol > 0) || !(cfg.kernel.lambda_max > 0) || cfg.kernel.panel_budget < 1)
        throw ConicError("config: tolerances must be positive");
    }
  } catch (const json::exception& e) {
    throw ConicError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConicError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

bool ValidationSummary::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const LawCheck& c) { return c.pass; });
}

void write_summary_csv(std::ostream& os, const ValidationSummary& s) {
  os << "check,law,value,residual,threshold,status\n";
  for (const LawCheck& c : s.checks)
    os << c.name << ",\"" << c.law << "\"," << fmt(c.value) << ',' << fmt(c.residual) << ',' << fmt(c.threshold)
       << ',' << (c.pass ? "pass" : "flag") << '\n';
}

void write_summary_text(std::ostream& os, const ValidationSummary& s) {
  os << s.title << ": " << (s.all_pass() ? "all checks pass" : "flagged residuals") << '\n';
  for (const LawCheck& c : s.checks)
    os << "  " << (c.pass ? "PASS " : "FLAG ") << c.name << "  residual " << fmt(c.residual) << " <= "
       << fmt(c.threshold) << "  value " << fmt(c.value) << "  [" << c.law << "]\n";
  for (auto& [k, v] : s.constants) os << "  " << k << " = " << fmt(v) << '\n';
}

double rate_growth(const DecayReport& r) {
  if (r.t_grid.empty()) return 0;
  const double lo = r.t_grid.back() / 10 * (1 - 1e-12);
  double worst = 0;
  for (std::size_t i = 0; i < r.t_grid.size(); ++i) {
    if (r.t_grid[i] < lo) continue;
    const double si = std::pow(r.t_grid[i], r.target) * r.sup_abs[i];
    for (std::size_t j = i + 1; j < r.t_grid.size(); ++j)
      worst = std::max(worst, std::pow(r.t_grid[j], r.target) * r.sup_abs[j] / si);
  }
  return worst;
}

int run(const RunConfig& cfg, std::ostream& log) {
  if (cfg.command == Command::statphase) return run_statphase(cfg, log);
  auto m = std::make_shared<const ScatteringModel>(build_potential(cfg.profile));
  switch (cfg.command) {
    case Command::describe: return run_describe(cfg, *m, log);
    case Command::potential: return run_potential(cfg, *m);
    case Command::jost: return run_jost(cfg, *m);
    case Command::coeffs: return run_coeffs(cfg, *m);
    case Command::validate_low: return run_validate_low(cfg, *m, log);
    case Command::validate_high: return run_validate_high(cfg, *m, log);
    case Command::kernel: return run_kernel(cfg, m);
    case Command::decay: return run_decay(cfg, m, log);
    case Command::statphase: break;
  }
  return 0;
}

}  // namespace conic
