#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conic/numerics.hpp"

namespace conic {

enum class ProfileKind { cylinder, hyperboloid, cone_smoothed, tabulated };

const char* profile_kind_name(ProfileKind k);

struct ProfileConfig {
  std::string kind = "cylinder";
  std::map<std::string, double> params;
  int d = 1;
  std::optional<double> x_max;  // chart half-width in arclength units
  // custom-tabulated only: uniform grid of x with values of r.
  std::vector<double> table_x;
  std::vector<double> table_r;
};

// r and its first three x-derivatives.
struct RDerivs {
  double r, r1, r2, r3;
};

class Profile {
 public:
  static Profile cylinder(double radius, int d);
  static Profile hyperboloid(double a, int d);
  // r = w q(x/w): exactly |x| for |x| >= w, smooth and positive inside.
  static Profile cone_smoothed(double width, int d);
  static Profile tabulated(std::vector<double> x, std::vector<double> r, int d,
                           bool conical_left, bool conical_right);

  RDerivs derivs(double x) const;
  double r(double x) const { return derivs(x).r; }

  ProfileKind kind() const { return kind_; }
  int d() const { return d_; }
  bool conical_left() const { return conical_left_; }
  bool conical_right() const { return conical_right_; }
  bool symmetric() const { return symmetric_; }
  // Domain where r is defined (infinite for analytic kinds).
  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  // Tolerance used by the finite-difference consistency check.
  double derivative_tolerance() const { return kind_ == ProfileKind::tabulated ? 1e-4 : 1e-6; }
  const std::map<std::string, double>& params() const { return params_; }
  double table_step() const { return th_; }

 private:
  ProfileKind kind_ = ProfileKind::cylinder;
  int d_ = 1;
  bool conical_left_ = false, conical_right_ = false, symmetric_ = true;
  double x_lo_ = -INFINITY, x_hi_ = INFINITY;
  std::map<std::string, double> params_;
  // tabulated data: values and stencil derivatives on a uniform grid
  double t0_ = 0, th_ = 0;
  std::vector<double> tr_, t1_, t2_, t3_;
  std::vector<double> s0_, s1_, s2_, s3_;  // spline second derivatives
};

struct ProfileCheck {
  double min_r = 0;
  double max_derivative_mismatch = 0;
  double worst_x = 0;
  int worst_order = 0;
  double conical_left_bound = 0, conical_right_bound = 0;
  bool ok = true;
  std::string message;
};

// Samples the profile invariants on a grid.
ProfileCheck check_profile(const Profile& p, double x_extent);

Profile make_profile(const ProfileConfig& cfg);

class ArclengthChart {
 public:
  ArclengthChart(Profile profile, double xi_max = 1e5, double quad_tol = 1e-12);

  double arclength_of(double x) const;
  double x_of_arclength(double xi) const;
  // d xi / dx = sqrt(1 + r'^2)
  double speed(double x) const;

  const Profile& profile() const { return profile_; }
  double xi_lo() const { return -xi_max_left_; }
  double xi_hi() const { return xi_max_right_; }
  double x_lo() const { return x_lo_; }
  double x_hi() const { return x_hi_; }
  double quad_tol() const { return quad_tol_; }
  const std::vector<double>& nodes_x() const { return nx_; }
  const std::vector<double>& nodes_xi() const { return nxi_; }

 private:
  double integrate_piece(double a, double b) const;
  std::size_t node_index(double x) const;

  Profile profile_;
  double quad_tol_;
  double xi_max_left_ = 0, xi_max_right_ = 0;
  double x_lo_ = 0, x_hi_ = 0;
  std::vector<double> nx_, nxi_, nds_;  // nodes, xi(nodes), slopes
};

struct PotentialSample {
  double xi = 0;
  double rho = 0;
  double V = 0;
  double rdot = 0;  // dr/dxi
  double r = 0;
};

struct TailReport {
  bool right = true;
  double c_inf = 0;
  double fit_max_residual = 0;  // model misfit on [X/4, X]
  double decay_constant = 0;    // sup x |xi - sqrt2 x - c_inf| on [100, min(X, 1e6)]
  double C2 = 0;                // sup |xi^2 V| on [10, X_max]
  double C3 = 0;                // sup |xi^3 V1| on [10, X_max]
};

class Potential {
 public:
  explicit Potential(std::shared_ptr<const ArclengthChart> chart, double xi_tail = 5.0);

  PotentialSample at(double xi) const;
  double V(double xi) const { return at(xi).V; }
  // V - (d^2/4 - d/2)/xi^2, defined only for |xi| >= xi_tail.
  double V1(double xi) const;
  double inverse_square_coefficient() const;
  double xi_tail() const { return xi_tail_; }

  const ArclengthChart& chart() const { return *chart_; }
  std::shared_ptr<const ArclengthChart> chart_ptr() const { return chart_; }
  const Profile& profile() const { return chart_->profile(); }

  // Fits c_inf on the requested side and bounds the tail.
  TailReport fit_conical_constants(bool right_side = true) const;

 private:
  std::shared_ptr<const ArclengthChart> chart_;
  double xi_tail_;
};

// Convenience: profile + chart + potential from a config.
std::shared_ptr<const Potential> build_potential(const ProfileConfig& cfg);

}  // namespace conic
