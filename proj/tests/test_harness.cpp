#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "conic/harness.hpp"

using namespace conic;
namespace fs = std::filesystem;

namespace {

const std::string kHyp = R"("profile": {"kind": "hyperboloid", "params": {"a": 1}, "x_max": 1e4})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conic_harness_" + name);
  fs::remove_all(p);
  return p;
}

int run_quiet(RunConfig cfg, const fs::path& out) {
  cfg.out_dir = out.string();
  std::ostringstream log;
  return run(cfg, log);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const RunConfig c = parse_config(R"({"profile": {"kind": "cylinder"}, "command": "describe"})");
  CHECK(c.command == Command::describe);
  CHECK(c.profile.kind == "cylinder");
  CHECK(c.profile.d == 1);
  CHECK(!c.profile.x_max);
  CHECK(c.out_dir == ".");
  CHECK(!c.lambda);
  CHECK(c.kind == KernelKind::schrodinger);
  CHECK(c.band == Band::full);
  CHECK(c.kernel.tol == 1e-9);
}

TEST_CASE("grids") {
  const RunConfig c = parse_config(R"({"profile": {"kind": "cylinder"}, "command": "coeffs",
      "lambda": {"min": 1e-6, "max": 1e-3, "count": 40, "scale": "log"},
      "xi": {"min": -2, "max": 2, "count": 5}})");
  const std::vector<double> l = c.lambda->values();
  REQUIRE(l.size() == 40);
  CHECK(l.front() == doctest::Approx(1e-6).epsilon(1e-14));
  CHECK(l.back() == doctest::Approx(1e-3).epsilon(1e-14));
  for (std::size_t i = 1; i < l.size(); ++i) CHECK(std::log(l[i] / l[i - 1]) == doctest::Approx(std::log(10.0) / 13));
  CHECK(c.xi->values() == std::vector<double>{-2, -1, 0, 1, 2});
}

TEST_CASE("strict config rejection") {
  auto bad = [](const std::string& body) {
    CHECK_THROWS_AS(parse_config(R"({"profile": {"kind": "cylinder"}, "command": "coeffs", )" + body + "}"),
                    ConicError);
  };
  bad(R"("lambda": {"min": 0, "max": 1, "count": 3, "scale": "log"})");
  bad(R"("lambda": {"min": 2, "max": 1, "count": 3})");
  bad(R"("lambda": {"min": 1, "max": 2, "count": 0})");
  bad(R"("lambda": {"min": 1, "max": 2, "count": 2.5})");
  bad(R"("lambda": {"min": 1, "max": 2, "count": 3, "scale": "ln"})");
  bad(R"("lambda": {"min": 1, "max": 2, "count": 3, "step": 1})");
  bad(R"("lamda": {"min": 1, "max": 2, "count": 3})");
  bad(R"("tolerances": {"kernel_tl": 1e-8})");
  bad(R"("kind": "heat")");
  bad(R"("band": "mid")");
  bad(R"("xi_cap": "big")");
  CHECK_THROWS_AS(parse_config(R"({"profile": {"kind": "cylinder", "radius": 2}, "command": "describe"})"), ConicError);
  CHECK_THROWS_AS(parse_config(R"({"profile": {"kind": "cylinder"}, "command": "plot"})"), ConicError);
  CHECK_THROWS_AS(parse_config(R"({"profile": {"kind": "cylinder"}})"), ConicError);
  CHECK_THROWS_AS(parse_config(R"({"profile": {"kind": "cylinder"}, "command": "describe",})"), ConicError);
  CHECK_THROWS_AS(parse_config(R"({"profile": {"kind": "cylinder", "d": 1.5}, "command": "describe"})"), ConicError);
  CHECK_THROWS_AS(load_config("/nonexistent/conic.json"), ConicError);
  for (int i = 0; i < 9; ++i) CHECK(parse_command(command_name(static_cast<Command>(i))) == static_cast<Command>(i));
}

TEST_CASE("potential tail") {
  const RunConfig c = parse_config("{" + kHyp + R"(, "command": "potential",
      "xi": {"min": 10, "max": 9000, "count": 30, "scale": "log"}})");
  const fs::path out = scratch("potential");
  CHECK(run_quiet(c, out) == 0);
  const auto rows = read_csv(out / "potential.csv");
  CHECK(rows[0] == std::vector<std::string>{"xi", "rho", "V", "xi2V"});
  REQUIRE(rows.size() == 31);
  const double xi = std::stod(rows.back()[0]), xi2v = std::stod(rows.back()[3]);
  CHECK(std::abs(xi2v + 0.25) < 1e-3);
  CHECK(std::abs(xi2v + 0.25) * xi < 1.0);
  CHECK(std::abs(std::stod(rows[1][3]) + 0.25) > std::abs(xi2v + 0.25));
}

TEST_CASE("validation summaries list every check once") {
  const RunConfig c = parse_config("{" + kHyp + R"(, "command": "validate-high"})");
  const fs::path out = scratch("high");
  const int rc = run_quiet(c, out);
  CHECK(rc == 0);
  const auto rows = read_csv(out / "validate_high.csv");
  CHECK(rows[0][0] == "check");
  std::set<std::string> names;
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(names.insert(rows[i][0]).second);
  CHECK(names.size() == 5);
  CHECK(fs::exists(out / "validate_high.txt"));
}

TEST_CASE("deterministic artifacts") {
  const RunConfig c = parse_config("{" + kHyp + R"(, "command": "kernel", "kind": "wave_plus", "band": "osc_low",
      "t": {"min": 10, "max": 100, "count": 2, "scale": "log"},
      "xi": {"min": -300, "max": 300, "count": 3}, "xi_prime": {"min": -40, "max": 0, "count": 2}})");
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  setenv("CONIC_THREADS", "1", 1);
  CHECK(run_quiet(c, a) == 0);
  setenv("CONIC_THREADS", "4", 1);
  CHECK(run_quiet(c, b) == 0);
  unsetenv("CONIC_THREADS");
  const std::string sa = slurp(a / "kernel.csv");
  CHECK(sa == slurp(b / "kernel.csv"));
  CHECK(sa.rfind("kind,t,xi,xi_prime,re_value,im_value,abs_weighted,err_est\n", 0) == 0);
  CHECK(read_csv(a / "kernel.csv").size() == 13);
}

TEST_CASE("decay and statphase artifacts") {
  RunConfig c = parse_config("{" + kHyp + R"(, "command": "decay", "band": "high_energy",
      "t": {"min": 10, "max": 1000, "count": 5, "scale": "log"}})");
  const fs::path out = scratch("decay");
  CHECK(run_quiet(c, out) == 0);
  const auto rows = read_csv(out / "decay.csv");
  CHECK(rows[0] == std::vector<std::string>{"kind", "t", "sup_abs", "fit_alpha", "fit_C", "fit_R2"});
  CHECK(rows.size() == 6);
  CHECK(rows[1][0] == "schrodinger:high_energy");
  CHECK(std::abs(std::stod(rows[1][3]) - 1.0) < 0.15);
  // a tighter growth tolerance than the data supports flags the run
  c.rate_growth_max = 0.5;
  CHECK(run_quiet(c, scratch("decay_flag")) == 2);

  const RunConfig s = parse_config(R"({"profile": {"kind": "cylinder"}, "command": "statphase"})");
  const fs::path so = scratch("statphase");
  CHECK(run_quiet(s, so) == 0);
  CHECK(read_csv(so / "statphase.csv").size() == 13);
}

TEST_CASE("errors carry coordinates") {
  const RunConfig c = parse_config("{" + kHyp + R"(, "command": "kernel",
      "t": {"min": 1, "max": 2, "count": 1}, "xi": {"min": 2e4, "max": 3e4, "count": 1},
      "xi_prime": {"min": 0, "max": 1, "count": 1}})");
  CHECK_THROWS_WITH_AS(run_quiet(c, scratch("err")), doctest::Contains("xi=20000"), ConicError);
}
