#pragma once

// Physical constants, modulation bookkeeping and the Table-style experiment
// presets shared by every other header. All quantities are SI; frequencies
// enter as ordinary frequencies (Hz) and are turned into angular
// frequencies with an exact 2*pi factor.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "tdiff/errors.hpp"

namespace tdiff {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reference mass of a rubidium-87 atom [kg].
inline constexpr double kRb87Mass = 1.44316e-25;

struct ConstantsTable {
  double atom_mass = kRb87Mass;         ///< [kg]
  double hbar = 1.054571817e-34;        ///< [J s]
  double g = 9.81;                      ///< [m/s^2]
  double d2_wavelength = 780.24e-9;     ///< [m]

  /// Throws DomainError when an entry is not strictly positive. Returns
  /// warnings for values that are allowed but unusual.
  std::vector<std::string> validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(fmt::format("constant '{}' must be positive, got {}", name, v));
      }
    };
    positive(atom_mass, "atom_mass");
    positive(hbar, "hbar");
    positive(g, "g");
    positive(d2_wavelength, "d2_wavelength");
    std::vector<std::string> warnings;
    if (std::abs(atom_mass / 1.4432e-25 - 1.0) > 1e-3) {
      warnings.push_back(fmt::format(
          "atom_mass {} kg differs from Rb-87 by more than 0.1%", atom_mass));
    }
    return warnings;
  }
};

/// Raw modulation settings of the mirror laser. The dimensionless depths are
/// derived on demand so that eps_P = dP/P0 and eps_delta = -d(delta)/delta0
/// always hold.
struct ModulationSettings {
  double base_power = 50e-3;          ///< P0 [W]
  double power_swing = 0.0;           ///< dP [W]
  double base_detuning_hz = 2.1e9;    ///< delta0 / 2pi [Hz]
  double detuning_swing_hz = 0.0;     ///< d(delta) / 2pi [Hz]
  double mod_frequency_hz = 500e3;    ///< Omega / 2pi [Hz]

  double power_depth() const {
    if (base_power == 0.0) throw DomainError("base power P0 must be non-zero");
    return power_swing / base_power;
  }
  double detuning_depth() const {
    if (base_detuning_hz == 0.0) throw DomainError("base detuning delta0 must be non-zero");
    return -detuning_swing_hz / base_detuning_hz;
  }
  double omega() const { return kTwoPi * mod_frequency_hz; }
};

/// eps = |eps_P + eps_delta|, restricted to the weak-modulation regime.
inline double modulation_depth(const ModulationSettings& settings) {
  const double eps = std::abs(settings.power_depth() + settings.detuning_depth());
  if (!(eps < 1.0)) {
    throw DomainError(fmt::format("modulation depth {} is outside the weak-modulation regime [0, 1)", eps));
  }
  return eps;
}

/// Vibration amplitude z_M = eps / (2 kappa) of the equivalent translated mirror.
inline double mirror_amplitude(double eps, double kappa) {
  if (!(kappa > 0.0)) throw DomainError(fmt::format("kappa must be positive, got {}", kappa));
  if (!(eps >= 0.0 && eps < 1.0)) {
    throw DomainError(fmt::format("modulation depth must lie in [0, 1), got {}", eps));
  }
  return eps / (2.0 * kappa);
}

/// Single-photon recoil velocity hbar k_L / M on the D2 line.
inline double recoil_velocity(const ConstantsTable& c) {
  return c.hbar * (kTwoPi / c.d2_wavelength) / c.atom_mass;
}

struct MirrorModel {
  double kappa = 0.0;           ///< field decay constant [1/m]; potential decays as 2 kappa
  double barrier_height = 0.0;  ///< U0 [J]
  double mod_depth = 0.0;       ///< eps
  double omega = 0.0;           ///< Omega [rad/s]

  double vib_amplitude() const { return mirror_amplitude(mod_depth, kappa); }

  void validate() const {
    if (!(kappa > 0.0)) throw DomainError("mirror kappa must be positive");
    if (!(barrier_height > 0.0)) throw DomainError("mirror barrier height U0 must be positive");
    if (!(mod_depth >= 0.0 && mod_depth < 1.0)) throw DomainError("mirror modulation depth must lie in [0, 1)");
    if (!(omega >= 0.0)) throw DomainError("mirror modulation frequency must be non-negative");
  }
};

/// Barrier height used when none is configured, as a multiple of the impact
/// kinetic energy.
inline constexpr double kDefaultBarrierOverEnergy = 4.0;

struct ExperimentParams {
  double drop_height = 3.6e-3;          ///< z0 [m]
  double fall_time = 27e-3;             ///< [s]
  double bounce_time = 27e-3;           ///< time of flight after the bounce [s]
  double horizontal_velocity = 30e-3;   ///< [m/s]
  double kappa_inv = 93e-9;             ///< evanescent decay length [m]
  std::optional<double> barrier_height; ///< U0 [J]; defaults to 4x the impact energy
  ModulationSettings modulation;

  double kappa() const { return 1.0 / kappa_inv; }

  /// Impact kinetic energy M g z0.
  double impact_energy(const ConstantsTable& c) const { return c.atom_mass * c.g * drop_height; }

  MirrorModel mirror(const ConstantsTable& c) const {
    MirrorModel m;
    m.kappa = kappa();
    m.barrier_height = barrier_height.value_or(kDefaultBarrierOverEnergy * impact_energy(c));
    m.mod_depth = modulation_depth(modulation);
    m.omega = modulation.omega();
    m.validate();
    return m;
  }

  /// Hard errors throw; soft inconsistencies come back as warnings.
  std::vector<std::string> validate(const ConstantsTable& c) const {
    if (!(drop_height > 0.0)) throw DomainError("drop height must be positive");
    if (!(bounce_time > 0.0)) throw DomainError("bounce time of flight must be positive");
    if (!(fall_time >= 0.0)) throw DomainError("fall time must be non-negative");
    if (!(kappa_inv > 0.0)) throw DomainError("kappa_inv must be positive");
    mirror(c);
    std::vector<std::string> warnings;
    const double t_free = std::sqrt(2.0 * drop_height / c.g);
    if (std::abs(fall_time / t_free - 1.0) > 0.02) {
      warnings.push_back(fmt::format(
          "fall time {:.4g} s differs from free fall sqrt(2 z0/g) = {:.4g} s by more than 2%",
          fall_time, t_free));
    }
    return warnings;
  }
};

/// Built-in experiment rows (a), (b), (c).
inline ExperimentParams experiment_preset(char id) {
  ExperimentParams p;
  p.horizontal_velocity = 30e-3;
  p.kappa_inv = 93e-9;
  p.modulation.base_power = 50e-3;
  p.modulation.power_swing = 0.0;
  p.modulation.mod_frequency_hz = 500e3;
  switch (id) {
    case 'a':
      p.drop_height = 3.6e-3;
      p.fall_time = 27e-3;
      p.bounce_time = 27e-3;
      p.modulation.base_detuning_hz = 2.1e9;
      p.modulation.detuning_swing_hz = 130e6;
      break;
    case 'b':
      p.drop_height = 3.6e-3;
      p.fall_time = 27e-3;
      p.bounce_time = 27e-3;
      p.modulation.base_detuning_hz = 2.1e9;
      p.modulation.detuning_swing_hz = 163e6;
      break;
    case 'c':
      p.drop_height = 2.05e-3;
      p.fall_time = 20.5e-3;
      p.bounce_time = 19.5e-3;
      p.modulation.base_detuning_hz = 1.9e9;
      p.modulation.detuning_swing_hz = 163e6;
      break;
    default:
      throw ConfigError(fmt::format("unknown preset '{}', expected a, b or c", id));
  }
  return p;
}

/// Modulation depths as printed in the parameter table (rounded).
inline double published_mod_depth(char id) {
  switch (id) {
    case 'a': return 0.062;
    case 'b': return 0.078;
    case 'c': return 0.086;
    default: throw ConfigError(fmt::format("unknown preset '{}'", id));
  }
}

/// Expected sideband positions relative to the carrier [um], (order, value).
inline std::vector<std::pair<int, double>> published_expected_positions(char id) {
  switch (id) {
    case 'a':
    case 'b':
      return {{-2, -479.0}, {-1, -235.0}, {0, 0.0}, {1, 228.0}, {2, 449.0}};
    case 'c':
      return {{-1, -228.0}, {0, 0.0}, {1, 216.0}};
    default:
      throw ConfigError(fmt::format("unknown preset '{}'", id));
  }
}

/// Measured sideband positions relative to the carrier [um].
inline std::vector<std::pair<int, double>> published_measured_positions(char id) {
  switch (id) {
    case 'a': return {{-2, -470.0}, {-1, -226.0}, {0, 0.0}, {1, 221.0}, {2, 433.0}};
    case 'b': return {{-2, -460.0}, {-1, -231.0}, {0, 0.0}, {1, 219.0}, {2, 433.0}};
    case 'c': return {{-1, -227.0}, {0, 0.0}, {1, 218.0}};
    default: throw ConfigError(fmt::format("unknown preset '{}'", id));
  }
}

}  // namespace tdiff
