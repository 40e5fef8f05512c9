#pragma once

#include "flexbc/harness.hpp"

#include <random>

namespace flexbc::testing {

inline const MorseParams& morse_params() {
  static const MorseParams p;
  return p;
}

inline double ell0() {
  static const double e = morse_equilibrium_spacing(morse_params());
  return e;
}

inline BravaisBasis hex() { return BravaisBasis::hexagonal(ell0()); }

inline AtomisticModel morse_model() { return AtomisticModel::morse2d(morse_params(), hex()); }

inline DomainDecomposition disc(const AtomisticModel& m, double r, double r_a) {
  return decompose(build_disc_domain(m.basis, r * m.basis.ell), m.basis, r * m.basis.ell,
                   r_a * m.basis.ell, m.r_cut);
}

inline Vec random_vec(Eigen::Index n, unsigned seed, double amp = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> U(-amp, amp);
  Vec v(n);
  for (auto& x : v) x = U(rng);
  return v;
}

}  // namespace flexbc::testing
