#pragma once

// Closed-form sideband weights for a matter wave reflected by a vibrating
// mirror. A hard wall imprints a phase modulation of index 2 k z_M; the soft
// exponential potential reduces it by beta(Q), Q being the sideband
// wavenumber spacing in units of kappa.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "tdiff/bessel.hpp"
#include "tdiff/core.hpp"
#include "tdiff/errors.hpp"
#include "tdiff/kinematics.hpp"

namespace tdiff {

struct DiffractionInput {
  double k = 0.0;          ///< incident wavenumber [1/m]
  double z_m = 0.0;        ///< vibration amplitude [m]
  double kappa = 0.0;      ///< [1/m]
  double omega = 0.0;      ///< [rad/s]
  double atom_mass = kRb87Mass;
  double hbar = ConstantsTable{}.hbar;
};

/// Weights P(n) for n in [-n_max, n_max].
struct SidebandSpectrum {
  int n_max = 0;
  std::optional<double> modulation_index;  ///< absent for measured spectra
  std::vector<double> weights;             ///< indexed by n + n_max

  double weight(int n) const {
    if (std::abs(n) > n_max) return 0.0;
    return weights[static_cast<std::size_t>(n + n_max)];
  }
  double total() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  static SidebandSpectrum zeros(int n_max) {
    SidebandSpectrum s;
    s.n_max = n_max;
    s.weights.assign(static_cast<std::size_t>(2 * n_max + 1), 0.0);
    return s;
  }
  double& at(int n) { return weights.at(static_cast<std::size_t>(n + n_max)); }
};

inline DiffractionInput diffraction_input(const ExperimentParams& params, const ConstantsTable& c) {
  const ImpactState impact = impact_state(params.drop_height, c);
  const MirrorModel mirror = params.mirror(c);
  DiffractionInput in;
  in.k = impact.wavenumber;
  in.z_m = mirror.vib_amplitude();
  in.kappa = mirror.kappa;
  in.omega = mirror.omega;
  in.atom_mass = c.atom_mass;
  in.hbar = c.hbar;
  return in;
}

/// Soft-mirror reduction beta(Q) = (pi Q / 2) / sinh(pi Q / 2).
inline double beta(double q) {
  if (!(q >= 0.0)) throw DomainError(fmt::format("beta requires Q >= 0, got {}", q));
  const double y = 0.5 * kPi * q;
  if (q < 1e-4) {
    const double y2 = y * y;
    return 1.0 - y2 / 6.0 + 7.0 * y2 * y2 / 360.0;
  }
  if (y > 700.0) return 0.0;
  return y / std::sinh(y);
}

/// Q = (Omega M / hbar k) / kappa.
inline double q_parameter(const DiffractionInput& in) {
  if (!(in.k > 0.0)) throw DomainError("Q requires a positive incident wavenumber");
  if (!(in.kappa > 0.0)) throw DomainError("Q requires a positive kappa");
  return in.omega * in.atom_mass / (in.hbar * in.k) / in.kappa;
}

/// Phase-modulation index A = 2 k z_M beta(Q).
inline double modulation_index(const DiffractionInput& in) {
  return 2.0 * in.k * in.z_m * beta(q_parameter(in));
}

inline int minimum_n_max(double a) { return static_cast<int>(std::ceil(a)) + 10; }
inline int default_n_max(double a) { return static_cast<int>(std::ceil(a)) + 15; }

namespace detail {

inline SidebandSpectrum bessel_spectrum(double a, int n_max) {
  if (!(a >= 0.0)) throw DomainError(fmt::format("modulation index must be non-negative, got {}", a));
  if (n_max < minimum_n_max(a)) {
    throw ContractError(fmt::format("n_max = {} too small for modulation index {:.6g}; need at least {}",
                                    n_max, a, minimum_n_max(a)));
  }
  if (n_max > kBesselMaxOrder) {
    throw DomainError(fmt::format("n_max = {} exceeds supported Bessel order {}", n_max, kBesselMaxOrder));
  }
  SidebandSpectrum s = SidebandSpectrum::zeros(n_max);
  s.modulation_index = a;
  for (int n = 0; n <= n_max; ++n) {
    const double j = bessel_j(n, a);
    s.at(n) = j * j;
    s.at(-n) = j * j;
  }
  return s;
}

}  // namespace detail

/// P(n) = |J_n(A)|^2 with A = 2 k z_M beta(Q).
inline SidebandSpectrum sideband_weights(const DiffractionInput& in, int n_max) {
  return detail::bessel_spectrum(modulation_index(in), n_max);
}

inline SidebandSpectrum sideband_weights(const DiffractionInput& in) {
  const double a = modulation_index(in);
  return detail::bessel_spectrum(a, default_n_max(a));
}

/// Infinitely steep mirror: P(n) = |J_n(2 k z_M)|^2.
inline SidebandSpectrum hard_mirror_weights(double k, double z_m, int n_max) {
  if (!(k > 0.0)) throw DomainError("hard-mirror weights need a positive wavenumber");
  if (!(z_m >= 0.0)) throw DomainError("vibration amplitude must be non-negative");
  return detail::bessel_spectrum(2.0 * k * z_m, n_max);
}

inline constexpr int kSweepOrders = 7;

struct SweepRow {
  double eps = 0.0;
  double modulation_index = 0.0;
  std::array<double, kSweepOrders> weights{};  ///< P(0) .. P(6)
};

/// Weights of orders 0..6 as a function of modulation depth.
inline std::vector<SweepRow> weight_sweep(const ExperimentParams& params, const std::vector<double>& eps_grid,
                                          const ConstantsTable& c) {
  DiffractionInput in = diffraction_input(params, c);
  std::vector<SweepRow> rows;
  rows.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    if (!(eps >= 0.0 && eps <= 0.2)) {
      throw DomainError(fmt::format("sweep modulation depth {} outside [0, 0.2]", eps));
    }
    in.z_m = mirror_amplitude(eps, in.kappa);
    const double a = modulation_index(in);
    const SidebandSpectrum s = detail::bessel_spectrum(a, std::max(default_n_max(a), kSweepOrders));
    SweepRow row;
    row.eps = eps;
    row.modulation_index = a;
    for (int n = 0; n < kSweepOrders; ++n) row.weights[static_cast<std::size_t>(n)] = s.weight(n);
    rows.push_back(row);
  }
  return rows;
}

/// Evenly spaced grid of modulation depths over [0, eps_max] plus extra points, sorted.
inline std::vector<double> sweep_grid(double eps_max, int intervals, const std::vector<double>& extra = {}) {
  std::vector<double> grid;
  for (int i = 0; i <= intervals; ++i) grid.push_back(eps_max * i / intervals);
  grid.insert(grid.end(), extra.begin(), extra.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

/// First positive zero of J_0, located by bracketing root search.
inline double first_j0_zero() {
  boost::math::tools::eps_tolerance<double> tol(52);
  std::uintmax_t iters = 100;
  const auto [lo, hi] = boost::math::tools::toms748_solve(
      [](double x) { return bessel_j(0, x); }, 2.0, 3.0, tol, iters);
  return 0.5 * (lo + hi);
}

struct CarrierNull {
  double eps = 0.0;
  double modulation_index = 0.0;
  double carrier_weight = 0.0;
};

/// Modulation depth at which the carrier vanishes (A at the first zero of J_0).
inline CarrierNull carrier_null(const ExperimentParams& params, const ConstantsTable& c) {
  DiffractionInput in = diffraction_input(params, c);
  in.z_m = mirror_amplitude(1e-3, in.kappa);
  const double a_per_eps = modulation_index(in) / 1e-3;
  CarrierNull out;
  out.modulation_index = first_j0_zero();
  out.eps = out.modulation_index / a_per_eps;
  in.z_m = mirror_amplitude(out.eps, in.kappa);
  const double j0 = bessel_j(0, modulation_index(in));
  out.modulation_index = modulation_index(in);
  out.carrier_weight = j0 * j0;
  return out;
}

}  // namespace tdiff
