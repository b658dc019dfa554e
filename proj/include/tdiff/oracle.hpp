#pragma once

// First-principles check of the sideband weights: a 1D wavepacket bounces on
// U(z,t) = U0 [1 + eps sin(Omega t)] exp(-2 kappa z) and is propagated with a
// symmetric split-operator scheme. The momentum spectrum of the reflected
// packet is then binned around each sideband wavenumber.
//
// Units are dimensionless: hbar = M = kappa = 1. Lengths are in 1/kappa,
// wavenumbers in kappa, energies in hbar^2 kappa^2 / M and times in
// M / (hbar kappa^2). With these units Omega = Q k and z_M = eps / 2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tdiff/core.hpp"
#include "tdiff/diffraction.hpp"
#include "tdiff/errors.hpp"
#include "tdiff/fft.hpp"
#include "tdiff/kinematics.hpp"

namespace tdiff::oracle {

using cplx = std::complex<double>;

/// Uniform periodic grid with n_points (a power of two) samples of spacing dz.
struct Grid {
  double z_min = 0.0;
  double dz = 0.0;
  std::size_t n_points = 0;

  /// Smallest power-of-two grid of spacing dz starting at z_min that reaches z_max.
  static Grid covering(double z_min, double z_max, double dz) {
    if (!(dz > 0.0) || !(z_max > z_min)) throw ContractError("grid needs dz > 0 and z_max > z_min");
    const double cells = std::ceil((z_max - z_min) / dz);
    std::size_t n = 2;
    while (static_cast<double>(n) < cells) n *= 2;
    if (n > (std::size_t{1} << 24)) throw ContractError(fmt::format("grid of {} points is too large", n));
    return Grid{z_min, dz, n};
  }

  double z_max() const { return z_min + static_cast<double>(n_points) * dz; }
  double position(std::size_t i) const { return z_min + static_cast<double>(i) * dz; }
  double dk() const { return kTwoPi / (static_cast<double>(n_points) * dz); }
  double nyquist() const { return kPi / dz; }
  /// Wavenumber of FFT bin j (standard ordering, negative half second).
  double wavenumber(std::size_t j) const {
    const auto n = static_cast<long long>(n_points);
    const auto jj = static_cast<long long>(j);
    return dk() * static_cast<double>(jj < n / 2 ? jj : jj - n);
  }
};

/// U(z, t) = u0 [1 + eps sin(omega t)] exp(-2 z).
struct ExponentialMirror {
  double u0 = 0.0;
  double eps = 0.0;
  double omega = 0.0;

  double amplitude(double t) const { return u0 * (1.0 + eps * std::sin(omega * t)); }
  double value(double z, double t) const { return amplitude(t) * std::exp(-2.0 * z); }
  double peak(double z) const { return u0 * (1.0 + std::abs(eps)) * std::exp(-2.0 * z); }
};

struct Wavepacket {
  Grid grid;
  std::vector<cplx> amplitudes;
  double time = 0.0;

  double norm() const {
    double s = 0.0;
    for (const auto& a : amplitudes) s += std::norm(a);
    return s * grid.dz;
  }
};

/// Cosine-ramp absorbing layers at both grid edges; strength is the
/// fraction removed per step at the outermost point.
struct Absorber {
  double width = 0.0;
  double strength = 0.0;
  bool enabled() const { return width > 0.0 && strength > 0.0; }
};

/// Normalized Gaussian with position spread sigma_z (std of |psi|^2)
/// centered at z_center and moving toward the mirror with wavenumber -k.
inline Wavepacket build_incident_packet(const Grid& grid, double k, double sigma_z, double z_center,
                                        const ExponentialMirror& mirror) {
  if (!(k > 0.0) || !(sigma_z > 0.0)) throw ContractError("incident packet needs k > 0 and sigma_z > 0");
  if (z_center - 3.0 * sigma_z < grid.z_min || z_center + 3.0 * sigma_z > grid.z_max()) {
    throw ContractError(fmt::format("packet center {} +- 3 sigma does not fit in the grid [{}, {}]",
                                    z_center, grid.z_min, grid.z_max()));
  }
  const double energy = 0.5 * k * k;
  if (mirror.peak(z_center) / energy >= 1e-6) {
    throw ContractError(fmt::format("packet starts inside the mirror field (U/E = {:.3g})",
                                    mirror.peak(z_center) / energy));
  }
  if (mirror.omega > 0.0) {
    const double spacing = mirror.omega / k;
    const double spread = 1.0 / (2.0 * sigma_z);
    if (spread > 0.2 * spacing) {
      throw ContractError(fmt::format(
          "momentum spread {:.4g} exceeds 0.2 x sideband spacing {:.4g}; increase sigma_z", spread, spacing));
    }
  }
  Wavepacket p;
  p.grid = grid;
  p.amplitudes.resize(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double z = grid.position(i);
    const double u = (z - z_center) / sigma_z;
    p.amplitudes[i] = std::polar(std::exp(-0.25 * u * u), -k * z);
  }
  const double scale = 1.0 / std::sqrt(p.norm());
  for (auto& a : p.amplitudes) a *= scale;
  return p;
}

/// Symmetric split-operator propagator for one mirror potential on one grid.
class Propagator {
 public:
  /// populated_wavenumber bounds the wavenumbers carried by the packet; the
  /// step-size contract is stated against the matching kinetic energy.
  Propagator(const Grid& grid, const ExponentialMirror& mirror, double populated_wavenumber, Absorber absorber = {})
      : grid_(grid), mirror_(mirror), populated_energy_(0.5 * populated_wavenumber * populated_wavenumber),
        fft_(grid.n_points) {
    shape_.resize(grid.n_points);
    kinetic_.resize(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
      shape_[i] = std::exp(-2.0 * grid.position(i));
      const double kw = grid.wavenumber(i);
      kinetic_[i] = 0.5 * kw * kw;
    }
    if (absorber.enabled()) {
      mask_.assign(grid.n_points, 1.0);
      for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double z = grid.position(i);
        const double depth = std::max(grid.z_min + absorber.width - z, z - (grid.z_max() - absorber.width));
        if (depth > 0.0) {
          const double s = std::sin(0.5 * kPi * std::min(depth / absorber.width, 1.0));
          mask_[i] = 1.0 - absorber.strength * s * s;
        }
      }
    }
  }

  /// Largest step allowed by the phase-advance contract.
  double max_step() const { return 0.5 / populated_energy_; }
  double absorbed_norm() const { return absorbed_; }
  std::size_t steps_taken() const { return steps_; }

  /// One step: half kinetic, potential at mid-time, half kinetic.
  void step(Wavepacket& packet, double dt) {
    check(packet, dt);
    auto& psi = packet.amplitudes;
    fft_.forward(psi);
    apply(psi, kinetic_factor(0.5 * dt));
    fft_.backward(psi);
    potential(psi, packet.time + 0.5 * dt, dt);
    fft_.forward(psi);
    apply(psi, kinetic_factor(0.5 * dt));
    fft_.backward(psi);
    packet.time += dt;
  }

  /// n_steps steps with adjacent half-kinetic factors merged; equal to
  /// repeated step() up to rounding.
  void propagate(Wavepacket& packet, double dt, std::size_t n_steps) {
    if (n_steps == 0) return;
    check(packet, dt);
    auto& psi = packet.amplitudes;
    const std::vector<cplx> half = make_kinetic(0.5 * dt);
    const std::vector<cplx> full = make_kinetic(dt);
    fft_.forward(psi);
    apply(psi, half);
    for (std::size_t s = 0; s < n_steps; ++s) {
      fft_.backward(psi);
      potential(psi, packet.time + 0.5 * dt, dt);
      packet.time += dt;
      fft_.forward(psi);
      apply(psi, s + 1 == n_steps ? half : full);
    }
    fft_.backward(psi);
  }

 private:
  void check(const Wavepacket& packet, double dt) const {
    if (packet.amplitudes.size() != grid_.n_points) throw ContractError("packet does not live on this grid");
    if (!(std::abs(dt) > 0.0)) throw ContractError("time step must be non-zero");
    const double phase = populated_energy_ * std::abs(dt);
    const double potential_phase = std::min(mirror_.peak(grid_.z_min), populated_energy_) * std::abs(dt);
    if (phase >= 0.5 || potential_phase >= 0.5) {
      throw ContractError(fmt::format("time step {:.4g} advances the phase by {:.3g} rad per step (limit 0.5)",
                                      dt, std::max(phase, potential_phase)));
    }
  }

  static void apply(std::vector<cplx>& psi, const std::vector<cplx>& factor) {
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] *= factor[i];
  }

  std::vector<cplx> make_kinetic(double h) const {
    std::vector<cplx> f(grid_.n_points);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::polar(1.0, -kinetic_[i] * h);
    return f;
  }

  const std::vector<cplx>& kinetic_factor(double h) {
    auto it = kinetic_cache_.find(h);
    if (it == kinetic_cache_.end()) {
      if (kinetic_cache_.size() > 4) kinetic_cache_.clear();
      it = kinetic_cache_.emplace(h, make_kinetic(h)).first;
    }
    return it->second;
  }

  void potential(std::vector<cplx>& psi, double t_mid, double dt) {
    const double a = mirror_.amplitude(t_mid) * dt;
    double before = 0.0;
    double after = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      psi[i] *= std::polar(1.0, -a * shape_[i]);
      if (!mask_.empty()) {
        before += std::norm(psi[i]);
        psi[i] *= mask_[i];
        after += std::norm(psi[i]);
      } else {
        after += std::norm(psi[i]);
      }
    }
    ++steps_;
    if (!std::isfinite(after)) {
      throw Error(fmt::format("non-finite amplitude after step {} (t = {:.6g})", steps_, t_mid + 0.5 * dt));
    }
    if (!mask_.empty()) absorbed_ += (before - after) * grid_.dz;
  }

  Grid grid_;
  ExponentialMirror mirror_;
  double populated_energy_;
  FftPlan fft_;
  std::vector<double> shape_;
  std::vector<double> kinetic_;
  std::vector<double> mask_;
  std::map<double, std::vector<cplx>> kinetic_cache_;
  double absorbed_ = 0.0;
  std::size_t steps_ = 0;
};

/// Probability per FFT bin, ordered by increasing wavenumber, summing to 1.
struct MomentumSpectrum {
  std::vector<double> wavenumber;
  std::vector<double> density;

  double mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) m += wavenumber[i] * density[i];
    return m;
  }
};

/// Fraction of the norm inside the region where the mirror potential exceeds
/// 1e-3 of the kinetic energy.
inline double mirror_overlap(const Wavepacket& packet, const ExponentialMirror& mirror, double energy) {
  double inside = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < packet.amplitudes.size(); ++i) {
    const double w = std::norm(packet.amplitudes[i]);
    total += w;
    if (mirror.peak(packet.grid.position(i)) > 1e-3 * energy) inside += w;
  }
  return total > 0.0 ? inside / total : 0.0;
}

inline MomentumSpectrum momentum_spectrum(const Wavepacket& packet, const ExponentialMirror& mirror, double energy) {
  const double overlap = mirror_overlap(packet, mirror, energy);
  if (overlap >= 1e-6) {
    throw ContractError(fmt::format(
        "packet not separated from the mirror: {:.3g} of the norm is inside the potential region", overlap));
  }
  const Grid& g = packet.grid;
  std::vector<cplx> phi = packet.amplitudes;
  FftPlan(g.n_points).forward(phi);
  double total = 0.0;
  for (const auto& a : phi) total += std::norm(a);
  MomentumSpectrum s;
  s.wavenumber.resize(g.n_points);
  s.density.resize(g.n_points);
  const std::size_t half = g.n_points / 2;
  for (std::size_t i = 0; i < g.n_points; ++i) {
    const std::size_t j = (i + half) % g.n_points;  // fftshift
    s.wavenumber[i] = g.wavenumber(j);
    s.density[i] = std::norm(phi[j]) / total;
  }
  return s;
}

struct Populations {
  SidebandSpectrum weights;
  double reflected_norm = 0.0;  ///< spectral weight at positive wavenumber
};

/// Integrates the reflected spectrum over one bin per sideband. Bin centers
/// are sqrt(k^2 + 2 n Omega) and edges the midpoints between neighbours.
/// peak_width is the FWHM of a single sideband peak.
inline Populations extract_populations(const MomentumSpectrum& spectrum, double k, double omega, int n_max,
                                       double peak_width) {
  if (n_max < 0) throw ContractError("n_max must be non-negative");
  if (omega <= 0.0) n_max = 0;
  auto center = [&](int n) -> std::optional<double> {
    const double r = k * k + 2.0 * n * omega;
    if (r <= 0.0) return std::nullopt;
    return std::sqrt(r);
  };
  if (n_max > 0) {
    const double spacing = omega / k;
    if (!(spacing > 4.0 * peak_width)) {
      throw ContractError(fmt::format("sidebands unresolved: spacing {:.4g} <= 4 x peak width {:.4g}",
                                      spacing, peak_width));
    }
  }
  double reflected = 0.0;
  for (std::size_t i = 0; i < spectrum.density.size(); ++i) {
    if (spectrum.wavenumber[i] > 0.0) reflected += spectrum.density[i];
  }
  if (!(reflected > 0.0)) throw ContractError("no reflected spectral weight");

  Populations out;
  out.reflected_norm = reflected;
  out.weights = SidebandSpectrum::zeros(n_max);
  for (int n = -n_max; n <= n_max; ++n) {
    const auto c = center(n);
    if (!c) continue;
    const auto below = n > -n_max ? center(n - 1) : std::nullopt;
    const auto above = n < n_max ? center(n + 1) : std::nullopt;
    double lo = 0.0;
    double hi = 0.0;
    if (n_max == 0) {
      lo = 0.0;
      hi = 2.0 * *c;
    } else {
      lo = below ? 0.5 * (*below + *c) : std::max(0.0, *c - 0.5 * (center(n + 1).value() - *c));
      hi = above ? 0.5 * (*c + *above) : *c + 0.5 * (*c - center(n - 1).value());
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < spectrum.density.size(); ++i) {
      const double kw = spectrum.wavenumber[i];
      if (kw >= lo && kw < hi) sum += spectrum.density[i];
    }
    out.weights.at(n) = sum / reflected;
  }
  return out;
}

struct OracleConfig {
  double k_over_kappa = 20.0;
  double q = 1.0;
  double u0_over_e = kDefaultBarrierOverEnergy;
  double eps = 0.062;
  double sigma_z = 5.0;      ///< position spread of |psi|^2 [1/kappa]
  double z_center = 35.0;    ///< initial packet center [1/kappa]
  double z_min = -1.5;       ///< grid start, inside the barrier [1/kappa]
  double dz = 0.0;           ///< 0 selects the spacing from the grid contract
  double dt = 0.0;           ///< 0 selects the step from the phase contract
  std::size_t steps = 0;     ///< 0 runs until the carrier is back at z_center
  Absorber absorber;
  int n_max = 4;             ///< orders reported
  bool check_convergence = true;

  double k() const { return k_over_kappa; }
  double energy() const { return 0.5 * k_over_kappa * k_over_kappa; }
  double omega() const { return q * k_over_kappa; }
  ExponentialMirror mirror() const { return {u0_over_e * energy(), eps, omega()}; }
  /// Largest wavenumber the packet can populate: order n_max + 1 plus six momentum sigmas.
  double populated_wavenumber() const {
    return std::sqrt(k() * k() + 2.0 * (n_max + 1) * omega()) + 6.0 / (2.0 * sigma_z);
  }

  void validate() const {
    if (!(k_over_kappa >= 10.0)) {
      throw ContractError(fmt::format("k/kappa = {} below the semiclassical regime (>= 10)", k_over_kappa));
    }
    if (!(u0_over_e > 1.0)) throw ContractError(fmt::format("U0/E = {} must exceed 1", u0_over_e));
    if (!(eps >= 0.0 && eps < 1.0)) throw DomainError(fmt::format("eps = {} outside [0, 1)", eps));
    if (!(q >= 0.0)) throw DomainError("Q must be non-negative");
    if (!(sigma_z > 0.0)) throw ContractError("sigma_z must be positive");
    if (n_max < 0) throw ContractError("n_max must be non-negative");
    // mirror speed z_M Omega against the atomic speed k
    const double mirror_speed_ratio = 0.5 * eps * q;
    if (mirror_speed_ratio > 0.2) {
      throw ContractError(fmt::format(
          "mirror velocity ratio z_M Omega / v = {:.3g} exceeds 0.2; outside the model's regime", mirror_speed_ratio));
    }
  }
};

/// Dimensionless benchmark equivalent of an SI experiment.
inline OracleConfig oracle_config_from_experiment(const ExperimentParams& params, const ConstantsTable& c) {
  const ImpactState impact = impact_state(params.drop_height, c);
  const MirrorModel mirror = params.mirror(c);
  const DiffractionInput in = diffraction_input(params, c);
  OracleConfig cfg;
  cfg.k_over_kappa = impact.wavenumber / mirror.kappa;
  cfg.q = q_parameter(in);
  cfg.u0_over_e = mirror.barrier_height / impact.kinetic_energy;
  cfg.eps = mirror.mod_depth;
  return cfg;
}

/// Grid, step and duration derived from a config at refinement level r
/// (dz and dt divided by 2^r, step count multiplied by 2^r).
struct ResolvedRun {
  Grid grid;
  double dt = 0.0;
  std::size_t steps = 0;
};

inline ResolvedRun resolve(const OracleConfig& cfg, int refinement) {
  const double k = cfg.k();
  const double k_pop = cfg.populated_wavenumber();
  const double de_broglie = kTwoPi / k;
  double dz = cfg.dz > 0.0 ? cfg.dz : std::min(de_broglie / 10.0, kPi / (3.5 * k_pop));
  double dt = cfg.dt > 0.0 ? cfg.dt : 0.15 / (0.5 * k_pop * k_pop);
  const double duration = cfg.steps > 0 ? static_cast<double>(cfg.steps) * dt : 2.0 * cfg.z_center / k;
  std::size_t steps = cfg.steps > 0 ? cfg.steps : static_cast<std::size_t>(std::ceil(duration / dt));
  const double scale = std::ldexp(1.0, -refinement);
  dz *= scale;
  dt *= scale;
  steps <<= refinement;

  if (kPi / dz < 3.0 * k_pop) {
    throw ContractError(fmt::format("dz = {:.4g} under-resolves wavenumber {:.4g} (Nyquist must be >= 3x)", dz, k_pop));
  }
  if (dz > de_broglie / 8.0) {
    throw ContractError(fmt::format("dz = {:.4g} exceeds lambda_dB / 8 = {:.4g}", dz, de_broglie / 8.0));
  }
  const double fastest = cfg.populated_wavenumber();
  const double z_max = cfg.z_center + 10.0 * cfg.sigma_z + (fastest - k) * duration;
  return {Grid::covering(cfg.z_min, z_max, dz), dt, steps};
}

struct RunResult {
  ResolvedRun run;
  Populations populations;
  MomentumSpectrum spectrum;
  double absorbed_norm = 0.0;
  double mirror_overlap = 0.0;
  double boundary_norm = 0.0;  ///< norm within 2 sigma_z of the upper grid edge at the end
};

inline RunResult run_single(const OracleConfig& cfg, int refinement) {
  cfg.validate();
  RunResult r;
  r.run = resolve(cfg, refinement);
  const ExponentialMirror mirror = cfg.mirror();
  Wavepacket packet = build_incident_packet(r.run.grid, cfg.k(), cfg.sigma_z, cfg.z_center, mirror);
  Propagator prop(r.run.grid, mirror, cfg.populated_wavenumber(), cfg.absorber);
  prop.propagate(packet, r.run.dt, r.run.steps);
  r.absorbed_norm = prop.absorbed_norm();
  r.mirror_overlap = mirror_overlap(packet, mirror, cfg.energy());
  double edge = 0.0;
  for (std::size_t i = 0; i < r.run.grid.n_points; ++i) {
    if (r.run.grid.position(i) > r.run.grid.z_max() - 2.0 * cfg.sigma_z) edge += std::norm(packet.amplitudes[i]);
  }
  r.boundary_norm = edge * r.run.grid.dz;
  r.spectrum = momentum_spectrum(packet, mirror, cfg.energy());
  const double peak_width = 2.0 * std::sqrt(2.0 * std::log(2.0)) / (2.0 * cfg.sigma_z);
  r.populations = extract_populations(r.spectrum, cfg.k(), cfg.omega(), cfg.n_max, peak_width);
  return r;
}

struct OrderComparison {
  int order = 0;
  double model = 0.0;
  double oracle = 0.0;
  double rel_error = 0.0;  ///< (oracle - model) / model
};

struct OracleReport {
  OracleConfig config;
  Grid grid;
  double dt = 0.0;
  std::size_t steps = 0;
  double beta = 0.0;
  double modulation_index = 0.0;
  SidebandSpectrum model;
  SidebandSpectrum oracle;
  std::vector<OrderComparison> orders;
  double oracle_total = 0.0;
  double reflected_norm = 0.0;
  double absorbed_norm = 0.0;
  double mirror_overlap = 0.0;
  double boundary_norm = 0.0;
  bool convergence_checked = false;
  bool converged = false;
  double max_convergence_change = 0.0;
  std::optional<SidebandSpectrum> refined;
  bool gravity_omitted = true;
  MomentumSpectrum spectrum;

  /// Largest |relative error| over orders whose model weight exceeds threshold.
  double max_rel_error(double threshold = 0.05) const {
    double m = 0.0;
    for (const auto& o : orders) {
      if (o.model > threshold) m = std::max(m, std::abs(o.rel_error));
    }
    return m;
  }
};

/// Change between two weight sets, relative where the weight is at least
/// 1e-3 and absolute (scaled to the 2% threshold at 1e-3) below.
inline double convergence_change(const SidebandSpectrum& a, const SidebandSpectrum& b) {
  double worst = 0.0;
  for (int n = -a.n_max; n <= a.n_max; ++n) {
    const double wa = a.weight(n);
    const double wb = b.weight(n);
    const double scale = std::max(std::max(wa, wb), 1e-3);
    worst = std::max(worst, std::abs(wa - wb) / scale);
  }
  return worst;
}

inline OracleReport run_oracle(const OracleConfig& cfg) {
  cfg.validate();
  OracleReport rep;
  rep.config = cfg;
  const RunResult base = run_single(cfg, 0);
  rep.grid = base.run.grid;
  rep.dt = base.run.dt;
  rep.steps = base.run.steps;
  rep.beta = beta(cfg.q);
  rep.modulation_index = cfg.k() * cfg.eps * rep.beta;  // 2 k z_M beta with z_M = eps / 2
  rep.model = detail::bessel_spectrum(rep.modulation_index, std::max(cfg.n_max, minimum_n_max(rep.modulation_index)));
  rep.oracle = base.populations.weights;
  rep.oracle_total = rep.oracle.total();
  rep.reflected_norm = base.populations.reflected_norm;
  rep.absorbed_norm = base.absorbed_norm;
  rep.mirror_overlap = base.mirror_overlap;
  rep.boundary_norm = base.boundary_norm;
  rep.spectrum = base.spectrum;
  for (int n = -rep.oracle.n_max; n <= rep.oracle.n_max; ++n) {
    OrderComparison o;
    o.order = n;
    o.model = rep.model.weight(n);
    o.oracle = rep.oracle.weight(n);
    o.rel_error = o.model > 0.0 ? (o.oracle - o.model) / o.model : 0.0;
    rep.orders.push_back(o);
  }
  if (cfg.check_convergence) {
    const RunResult fine = run_single(cfg, 1);
    rep.convergence_checked = true;
    rep.refined = fine.populations.weights;
    rep.max_convergence_change = convergence_change(rep.oracle, *rep.refined);
    rep.converged = rep.max_convergence_change < 0.02;
  }
  return rep;
}

}  // namespace tdiff::oracle
