#include "conic/hankel.hpp"

namespace conic {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::oscillatory: return "oscillatory";
    case Regime::low_energy_basis: return "low_energy_basis";
    case Regime::hankel_reference: return "hankel_reference";
  }
  return "?";
}

namespace {

constexpr double kAsymptoticFrom = 25.0;

BesselPair ascending(double zd) {
  using ld = long double;
  const ld z = zd, q = z * z / 4;
  const ld g = 0.577215664901532860606512090082402431L;
  const ld pi = 3.141592653589793238462643383279502884L;
  ld j0 = 0, j1s = 0, y0s = 0, y1s = 0;
  ld t0 = 1;  // (-q)^k / (k!)^2
  ld t1 = 1;  // (-q)^k / (k! (k+1)!)
  ld hk = 0;  // harmonic number H_k
  for (int k = 0; k < 80; ++k) {
    if (k > 0) {
      t0 *= -q / (ld(k) * k);
      t1 *= -q / (ld(k) * (k + 1));
      hk += 1.0L / k;
    }
    j0 += t0;
    j1s += t1;
    y0s += -hk * t0;                    // (-1)^{k+1} H_k q^k/(k!)^2
    y1s += (hk + hk + 1.0L / (k + 1)) * t1;  // H_k + H_{k+1}
    if (k > 4 && std::abs(t0) < 1e-22L && std::abs(t1) < 1e-22L) break;
  }
  const ld lz = std::log(z / 2) + g;
  const ld j1 = z / 2 * j1s;
  const ld y0 = 2 / pi * (lz * j0 + y0s);
  // psi(k+1) + psi(k+2) = -2 gamma + H_k + H_{k+1}
  const ld y1 = -2 / (pi * z) + 2 / pi * std::log(z / 2) * j1 -
                (1 / pi) * (z / 2) * (y1s - 2 * g * j1s);
  return {double(j0), double(y0), double(j1), double(y1)};
}

BesselPair miller(double z) {
  const int n_top = 2 * (static_cast<int>(z / 2) + 30);
  std::vector<double> j(n_top + 2, 0.0);
  j[n_top + 1] = 0;
  j[n_top] = 1e-30;
  for (int n = n_top; n >= 1; --n) {
    j[n - 1] = 2.0 * n / z * j[n] - j[n + 1];
    if (std::abs(j[n - 1]) > 1e250) {
      for (int k = n - 1; k <= n_top + 1; ++k) j[k] *= 1e-250;
    }
  }
  double norm = j[0];
  for (int k = 2; k <= n_top; k += 2) norm += 2 * j[k];
  for (auto& v : j) v /= norm;
  const double lz = std::log(z / 2) + kEulerGamma;
  double s = 0, ds = 0;
  for (int k = 1; 2 * k <= n_top; ++k) {
    const double sign = k % 2 ? -1.0 : 1.0;
    s += sign * j[2 * k] / k;
    ds += sign * 0.5 * (j[2 * k - 1] - j[2 * k + 1]) / k;
  }
  const double y0 = 2 / kPi * lz * j[0] - 4 / kPi * s;
  const double dy0 = 2 / kPi * (j[0] / z - lz * j[1]) - 4 / kPi * ds;
  return {j[0], y0, j[1], -dy0};
}

// Hankel asymptotic sums S_nu(z) = sum_k i^k a_k(nu) z^-k for nu = 0, 1.
std::pair<cd, cd> hankel_sums(double z) {
  cd s0 = 1, s1 = 1;
  double a0 = 1, a1 = 1;
  cd ik = 1;
  double last0 = 1, last1 = 1;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1;
    a0 *= (0 - odd * odd) / (8.0 * k * z);
    a1 *= (4 - odd * odd) / (8.0 * k * z);
    ik *= kI;
    const double m0 = std::abs(a0), m1 = std::abs(a1);
    if (m0 > last0 && m1 > last1) break;
    s0 += ik * a0;
    s1 += ik * a1;
    last0 = m0;
    last1 = m1;
    if (m0 < 1e-18 && m1 < 1e-18) break;
  }
  return {s0, s1};
}

}  // namespace

BesselPair bessel01(double z, double z_cut) {
  if (!(z > 0)) throw ConicError("bessel01: argument must be positive");
  if (z <= z_cut) return ascending(z);
  if (z < kAsymptoticFrom) return miller(z);
  auto [s0, s1] = hankel_sums(z);
  const double amp = std::sqrt(2 / (kPi * z));
  const cd h0 = amp * std::polar(1.0, z - kPi / 4) * s0;
  const cd h1 = amp * std::polar(1.0, z - 3 * kPi / 4) * s1;
  return {h0.real(), h0.imag(), h1.real(), h1.imag()};
}

HankelEval hankel0_plus(double z, double z_cut) {
  if (!(z > 0)) throw ConicError("hankel0_plus: argument must be positive");
  const BesselPair b = bessel01(z, z_cut);
  HankelEval h;
  h.z = z;
  h.z_cut = z_cut;
  h.value = {b.j0, b.y0};
  h.derivative = {-b.j1, -b.y1};
  return h;
}

std::pair<cd, cd> hankel0_plus_scaled(double z, double z_cut) {
  if (!(z > 0)) throw ConicError("hankel0_plus_scaled: argument must be positive");
  if (z < kAsymptoticFrom) {
    const HankelEval h = hankel0_plus(z, z_cut);
    const cd e = std::polar(1.0, -z);
    return {e * h.value, e * (h.derivative - kI * h.value)};
  }
  auto [s0, s1] = hankel_sums(z);
  const double amp = std::sqrt(2 / (kPi * z));
  const cd e1 = std::polar(1.0, -kPi / 4), e3 = std::polar(1.0, -3 * kPi / 4);
  return {amp * e1 * s0, amp * e3 * (s0 - s1)};
}

WaveSample f0_reference(double xi, double lambda) {
  if (!(xi > 0) || !(lambda > 0)) throw ConicError("f0_reference: xi and lambda must be positive");
  const double z = xi * lambda, rz = std::sqrt(z);
  const HankelEval h = hankel0_plus(z);
  WaveSample s;
  s.xi = xi;
  s.lambda = lambda;
  s.value = kC0 * rz * h.value;
  s.dvalue = kC0 * lambda * (h.value / (2 * rz) + rz * h.derivative);
  s.regime = Regime::hankel_reference;
  return s;
}

std::pair<cd, cd> m0_reference(double xi, double lambda) {
  if (!(xi > 0) || !(lambda > 0)) throw ConicError("m0_reference: xi and lambda must be positive");
  const double z = xi * lambda, rz = std::sqrt(z);
  auto [hs, dhs] = hankel0_plus_scaled(z);
  return {kC0 * rz * hs, kC0 * lambda * (hs / (2 * rz) + rz * dhs)};
}

cd g0_green(double xi, double eta, double lambda) {
  if (!(lambda > 0)) throw ConicError("g0_green: lambda must be positive");
  if (!(xi > 0) || eta < xi) throw ConicError("g0_green: requires 0 < xi <= eta");
  if (eta == xi) return 0.0;
  const cd a = m0_reference(xi, lambda).first;
  const cd b = m0_reference(eta, lambda).first;
  const cd prod = std::conj(a) * b * std::polar(1.0, lambda * (eta - xi));
  return {prod.imag() / lambda, 0.0};
}

}  // namespace conic
