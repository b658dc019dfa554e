#pragma once

// Classical fall / bounce / time-of-flight mechanics. The bounce is treated
// as instantaneous and relative positions are taken a fixed time after the
// bounce, so gravity is common-mode and drops out.

#include <cmath>
#include <cstdlib>
#include <vector>

#include <fmt/format.h>

#include "tdiff/core.hpp"
#include "tdiff/errors.hpp"

namespace tdiff {

struct ImpactState {
  double speed = 0.0;           ///< downward speed at the mirror [m/s]
  double wavenumber = 0.0;      ///< k = M v / hbar [1/m]
  double de_broglie = 0.0;      ///< 2 pi / k [m]
  double kinetic_energy = 0.0;  ///< M v^2 / 2 [J]
};

struct SidebandKinematics {
  int order = 0;
  double energy_shift = 0.0;   ///< n hbar Omega [J]
  double velocity = 0.0;       ///< upward speed after the bounce [m/s]
  double wavenumber = 0.0;     ///< M v_n / hbar [1/m]
  double rel_position = 0.0;   ///< vertical offset from the carrier at detection [m]
};

inline ImpactState impact_state(double drop_height, const ConstantsTable& c) {
  if (!(drop_height > 0.0)) {
    throw DomainError(fmt::format("drop height must be positive, got {}", drop_height));
  }
  ImpactState s;
  s.speed = std::sqrt(2.0 * c.g * drop_height);
  s.wavenumber = c.atom_mass * s.speed / c.hbar;
  s.de_broglie = kTwoPi / s.wavenumber;
  s.kinetic_energy = 0.5 * c.atom_mass * s.speed * s.speed;
  return s;
}

/// Exact energy conservation: v_n = sqrt(v^2 + 2 n hbar Omega / M).
inline double sideband_velocity(const ImpactState& impact, int n, double omega, const ConstantsTable& c) {
  const double radicand = impact.speed * impact.speed + 2.0 * n * c.hbar * omega / c.atom_mass;
  if (!(radicand > 0.0)) {
    throw DomainError(fmt::format("sideband order {} is energetically forbidden", n));
  }
  return std::sqrt(radicand);
}

/// First-order wavenumber k + n Omega M / (hbar k); only valid while the
/// transferred energy is well below the impact energy.
inline double sideband_wavenumber_linearized(const ImpactState& impact, int n, double omega,
                                             const ConstantsTable& c) {
  const double transfer = std::abs(n) * c.hbar * omega;
  if (!(transfer < 0.5 * impact.kinetic_energy)) {
    throw DomainError(fmt::format(
        "order {} transfers {:.3g} J, not small against the impact energy {:.3g} J",
        n, transfer, impact.kinetic_energy));
  }
  return impact.wavenumber + n * omega * c.atom_mass / (c.hbar * impact.wavenumber);
}

/// Sideband kinematics for orders [first, last] at time bounce_time after the bounce.
inline std::vector<SidebandKinematics> detection_positions(const ExperimentParams& params, int first, int last,
                                                           const ConstantsTable& c) {
  if (first > last) throw DomainError("empty order range");
  if (!(params.bounce_time > 0.0)) throw DomainError("bounce time of flight must be positive");
  const ImpactState impact = impact_state(params.drop_height, c);
  const double omega = params.modulation.omega();
  std::vector<SidebandKinematics> out;
  out.reserve(static_cast<std::size_t>(last - first + 1));
  for (int n = first; n <= last; ++n) {
    SidebandKinematics s;
    s.order = n;
    s.energy_shift = n * c.hbar * omega;
    s.velocity = sideband_velocity(impact, n, omega, c);
    s.wavenumber = c.atom_mass * s.velocity / c.hbar;
    s.rel_position = (s.velocity - impact.speed) * params.bounce_time;
    out.push_back(s);
  }
  return out;
}

}  // namespace tdiff
