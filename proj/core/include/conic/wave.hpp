#pragma once

#include "conic/numerics.hpp"

namespace conic {

enum class Regime { oscillatory, low_energy_basis, hankel_reference };

// Value and xi-derivative of a solution of H f = lambda^2 f at one point.
struct WaveSample {
  double xi = 0;
  double lambda = 0;
  cd value{};
  cd dvalue{};
  Regime regime = Regime::oscillatory;
};

// W(f, g) = f g' - f' g.
inline cd wronskian(const WaveSample& f, const WaveSample& g) {
  return f.value * g.dvalue - f.dvalue * g.value;
}

inline WaveSample conj(const WaveSample& s) {
  WaveSample c = s;
  c.value = std::conj(s.value);
  c.dvalue = std::conj(s.dvalue);
  return c;
}

const char* regime_name(Regime r);

}  // namespace conic
