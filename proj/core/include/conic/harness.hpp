#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conic/kernel.hpp"

namespace conic {

struct GridSpec {
  double min = 0, max = 1;
  int count = 1;
  bool log = false;
  std::vector<double> values() const;
};

enum class Command { describe, potential, jost, coeffs, validate_low, validate_high, kernel, decay, statphase };

const char* command_name(Command c);
Command parse_command(const std::string& s);

struct RunConfig {
  ProfileConfig profile;
  Command command = Command::describe;
  std::string out_dir = ".";
  std::optional<GridSpec> lambda, xi, xi_prime, t;
  KernelKind kind = KernelKind::schrodinger;
  Band band = Band::full;
  std::optional<double> xi_cap;  // decay: bound on |xi| in the spatial grid
  KernelOptions kernel;
  double fit_alpha_tol = 0.15;
  double fit_r2_min = 0.95;
  double rate_growth_max = 2.0;
};

// Strict JSON loading: unknown keys, bad grids and wrong types raise ConicError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

struct ValidationSummary {
  std::string title;
  std::vector<LawCheck> checks;
  std::vector<std::pair<std::string, double>> constants;
  bool all_pass() const;
};

void write_summary_csv(std::ostream& os, const ValidationSummary& s);
void write_summary_text(std::ostream& os, const ValidationSummary& s);

// Worst growth max_{i<j} s_j/s_i of s = t^target * sup over the last decade of t.
double rate_growth(const DecayReport& r);

// Writes the command's artifacts into out_dir. Returns 0 when every check passes, 2 when
// a check is flagged; module errors propagate as ConicError.
int run(const RunConfig& cfg, std::ostream& log);

}  // namespace conic
