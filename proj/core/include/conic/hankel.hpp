#pragma once

#include "conic/numerics.hpp"
#include "conic/wave.hpp"

namespace conic {

// 2/pi, the log coefficient of Y0.
inline constexpr double kC1 = 2.0 / kPi;
// kappa = (2/pi)(gamma - log 2): constant term of Y0 at small argument.
inline const double kKappa = (2.0 / kPi) * (kEulerGamma - std::log(2.0));
// c0 = sqrt(pi/2) exp(i pi/4).
inline const cd kC0 = std::sqrt(kPi / 2) * std::polar(1.0, kPi / 4);

struct HankelEval {
  double z = 0;
  cd value{};       // H0+(z) = J0 + i Y0
  cd derivative{};  // d/dz
  double z_cut = 6.0;
};

struct BesselPair {
  double j0, y0, j1, y1;
};

// J0, Y0, J1, Y1 at z > 0.
BesselPair bessel01(double z, double z_cut = 6.0);

HankelEval hankel0_plus(double z, double z_cut = 6.0);

// exp(-i z) H0+(z) and its z-derivative; avoids phase loss at large z.
std::pair<cd, cd> hankel0_plus_scaled(double z, double z_cut = 6.0);

// f0(xi, lambda) = c0 sqrt(xi lambda) H0+(xi lambda), solves
// -f'' - f/(4 xi^2) = lambda^2 f.
WaveSample f0_reference(double xi, double lambda);

// exp(-i lambda xi) f0 and its xi-derivative.
std::pair<cd, cd> m0_reference(double xi, double lambda);

// G0(xi, eta) = [conj f0(xi) f0(eta) - f0(xi) conj f0(eta)] / (2 i lambda), 0 < xi <= eta.
cd g0_green(double xi, double eta, double lambda);

}  // namespace conic
