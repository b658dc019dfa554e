#pragma once

// Synthetic absorption images of the bounced cloud and the annular
// weight-extraction procedure applied to them.
//
// Geometry: x horizontal in the image, y along the probe beam (integrated
// out), z vertical with z = 0 on the mirror surface. Each atom leaves the
// bounce point with a velocity on the elastic sphere of its order and flies
// ballistically (gravity on) for the bounce time of flight.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "tdiff/core.hpp"
#include "tdiff/diffraction.hpp"
#include "tdiff/errors.hpp"
#include "tdiff/kinematics.hpp"

namespace tdiff::imaging {

struct AtomSample {
  int order = 0;
  double vx = 0.0;
  double vy = 0.0;
  double vz = 0.0;
};

struct SampleSet {
  std::vector<AtomSample> samples;
  std::size_t redraws = 0;
  double redraw_fraction = 0.0;
};

/// Independent random streams; the atom count is split evenly across them so
/// the result does not depend on how many workers process the partitions.
inline constexpr int kSamplingPartitions = 16;

inline std::mt19937_64 partition_rng(std::uint64_t seed, int partition) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(partition), 0x7d1ffu};
  return std::mt19937_64(seq);
}

/// Total speed of order n on its elastic sphere: vertical sideband speed
/// plus the horizontal drift the atoms carried into the bounce.
inline double elastic_speed(const ImpactState& impact, int n, double omega, double drift, const ConstantsTable& c) {
  const double vn = sideband_velocity(impact, n, omega, c);
  return std::sqrt(vn * vn + drift * drift);
}

inline SampleSet sample_ensemble(const SidebandSpectrum& spectrum, const ExperimentParams& params, double sigma_v,
                                 std::size_t count, std::uint64_t seed, const ConstantsTable& c) {
  if (count == 0) throw ContractError("atom count must be at least 1");
  if (!(sigma_v >= 0.0)) throw ContractError("sigma_v must be non-negative");
  const double total = spectrum.total();
  if (!(std::abs(total - 1.0) < 1e-3)) {
    throw ContractError(fmt::format("spectrum weights sum to {}, expected 1", total));
  }
  const ImpactState impact = impact_state(params.drop_height, c);
  const double omega = params.modulation.omega();
  const double drift = params.horizontal_velocity;

  std::vector<int> orders;
  std::vector<double> weights;
  std::vector<double> speeds;
  for (int n = -spectrum.n_max; n <= spectrum.n_max; ++n) {
    const double w = spectrum.weight(n);
    if (w <= 0.0) continue;
    double speed = 0.0;
    try {
      speed = elastic_speed(impact, n, omega, drift, c);
    } catch (const DomainError&) {
      if (w > 1e-12) throw;
      continue;
    }
    orders.push_back(n);
    weights.push_back(w);
    speeds.push_back(speed);
  }

  SampleSet out;
  out.samples.reserve(count);
  for (int p = 0; p < kSamplingPartitions; ++p) {
    const std::size_t share = count / kSamplingPartitions + (static_cast<std::size_t>(p) < count % kSamplingPartitions ? 1 : 0);
    auto rng = partition_rng(seed, p);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    std::normal_distribution<double> transverse(0.0, 1.0);
    for (std::size_t i = 0; i < share; ++i) {
      const std::size_t idx = pick(rng);
      const double speed = speeds[idx];
      AtomSample a;
      a.order = orders[idx];
      for (;;) {
        a.vx = drift + sigma_v * transverse(rng);
        a.vy = sigma_v * transverse(rng);
        const double vz2 = speed * speed - a.vx * a.vx - a.vy * a.vy;
        if (vz2 > 0.0) {
          a.vz = std::sqrt(vz2);
          break;
        }
        ++out.redraws;
        if (out.redraws > count / 10 + 100) {
          throw DomainError(fmt::format("sigma_v = {:.4g} m/s puts too many atoms off the elastic sphere", sigma_v));
        }
      }
      out.samples.push_back(a);
    }
  }
  out.redraw_fraction = static_cast<double>(out.redraws) / static_cast<double>(count);
  if (out.redraw_fraction > 0.1) {
    throw DomainError(fmt::format("redraw fraction {:.3g} exceeds 10%", out.redraw_fraction));
  }
  return out;
}

struct CameraGeometry {
  double width = 5.5e-3;    ///< horizontal field [m]
  double height = 4.4e-3;   ///< vertical field [m]
  double pitch = 10e-6;     ///< pixel size [m]
  double x_left = 0.0;      ///< x of the left edge relative to the bounce point [m]
  double z_bottom = 0.0;    ///< z of the bottom edge; 0 is the mirror surface [m]

  std::size_t cols() const { return pixels_along(width, "width"); }
  std::size_t rows() const { return pixels_along(height, "height"); }
  double z_top() const { return z_bottom + height; }
  double x_center(std::size_t col) const { return x_left + (static_cast<double>(col) + 0.5) * pitch; }
  double z_center(std::size_t row) const { return z_top() - (static_cast<double>(row) + 0.5) * pitch; }
  bool contains(double x, double z) const {
    return x >= x_left && x < x_left + width && z >= z_bottom && z < z_top();
  }

 private:
  std::size_t pixels_along(double extent, const char* what) const {
    if (!(pitch > 0.0)) throw ContractError("pixel pitch must be positive");
    const double n = extent / pitch;
    const double rounded = std::round(n);
    if (rounded < 1.0 || std::abs(n - rounded) > 1e-6) {
      throw ContractError(fmt::format("camera {} {} m is not a whole number of {} m pixels", what, extent, pitch));
    }
    return static_cast<std::size_t>(rounded);
  }
};

/// Field of view centered horizontally on the carrier, mirror at the bottom edge.
inline CameraGeometry default_camera(const ExperimentParams& params, double pitch = 10e-6) {
  CameraGeometry cam;
  cam.pitch = pitch;
  cam.x_left = params.horizontal_velocity * params.bounce_time - 0.5 * cam.width;
  cam.z_bottom = 0.0;
  cam.cols();
  cam.rows();
  return cam;
}

struct OrderStats {
  std::size_t atoms = 0;
  std::size_t in_field = 0;
  double z_sum = 0.0;  ///< sum of pixel-center heights of in-field atoms

  double z_centroid() const { return in_field > 0 ? z_sum / static_cast<double>(in_field) : 0.0; }
};

struct SyntheticImage {
  CameraGeometry camera;
  std::vector<double> pixels;  ///< column density, row-major from the top-left corner
  std::uint64_t seed = 0;
  std::size_t atom_count = 0;
  std::size_t in_field = 0;
  std::size_t out_of_field = 0;
  std::map<int, OrderStats> orders;

  double& at(std::size_t row, std::size_t col) { return pixels[row * camera.cols() + col]; }
  double at(std::size_t row, std::size_t col) const { return pixels[row * camera.cols() + col]; }
  double total() const {
    double s = 0.0;
    for (double v : pixels) s += v;
    return s;
  }
};

inline SyntheticImage synthesize_image(const std::vector<AtomSample>& samples, const ExperimentParams& params,
                                       const CameraGeometry& camera, const ConstantsTable& c) {
  const double t = params.bounce_time;
  if (!(t > 0.0)) throw DomainError("bounce time of flight must be positive");
  SyntheticImage img;
  img.camera = camera;
  const std::size_t cols = camera.cols();
  const std::size_t rows = camera.rows();
  img.pixels.assign(rows * cols, 0.0);
  img.atom_count = samples.size();
  const double fall = 0.5 * c.g * t * t;
  for (const auto& a : samples) {
    const double x = a.vx * t;
    const double z = a.vz * t - fall;
    OrderStats& stats = img.orders[a.order];
    ++stats.atoms;
    if (!camera.contains(x, z)) {
      ++img.out_of_field;
      continue;
    }
    const auto col = std::min(cols - 1, static_cast<std::size_t>((x - camera.x_left) / camera.pitch));
    const auto row = std::min(rows - 1, static_cast<std::size_t>((camera.z_top() - z) / camera.pitch));
    img.at(row, col) += 1.0;
    ++img.in_field;
    ++stats.in_field;
    stats.z_sum += camera.z_center(row);
  }
  return img;
}

/// Replaces every pixel by a Poisson draw with that mean.
inline void apply_shot_noise(SyntheticImage& img, std::uint64_t seed) {
  auto rng = partition_rng(seed, kSamplingPartitions + 1);
  for (double& v : img.pixels) {
    if (v > 0.0) v = static_cast<double>(std::poisson_distribution<long long>(v)(rng));
  }
}

struct OrderCenter {
  int order = 0;
  double x = 0.0;
  double z = 0.0;
};

/// Predicted position of each order's cloud top (zero transverse scatter).
inline std::vector<OrderCenter> predicted_centers(const ExperimentParams& params, const std::vector<int>& orders,
                                                  const ConstantsTable& c) {
  const ImpactState impact = impact_state(params.drop_height, c);
  const double t = params.bounce_time;
  std::vector<OrderCenter> out;
  for (int n : orders) {
    const double vn = sideband_velocity(impact, n, params.modulation.omega(), c);
    out.push_back({n, params.horizontal_velocity * t, vn * t - 0.5 * c.g * t * t});
  }
  return out;
}

struct RadialProfile {
  OrderCenter center;
  double bin_width = 0.0;
  std::vector<double> bins;  ///< integrated density in [i w, (i + 1) w) from the center

  double total() const {
    double s = 0.0;
    for (double v : bins) s += v;
    return s;
  }
};

namespace detail {

inline void check_centers(const std::vector<OrderCenter>& centers, const CameraGeometry& camera) {
  if (centers.empty()) throw ContractError("annular integration needs at least one center");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    if (!camera.contains(centers[i].x, centers[i].z)) {
      throw ContractError(fmt::format("center of order {} lies outside the field", centers[i].order));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::hypot(centers[i].x - centers[j].x, centers[i].z - centers[j].z) < 1e-3 * camera.pitch) {
        throw ContractError(fmt::format("orders {} and {} share a center", centers[j].order, centers[i].order));
      }
    }
  }
}

inline std::size_t nearest(const std::vector<OrderCenter>& centers, double x, double z) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double dx = x - centers[k].x;
    const double dz = z - centers[k].z;
    const double d2 = dx * dx + dz * dz;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }
  return best;
}

}  // namespace detail

/// Density integrated on circles of growing radius around each order center.
/// Every pixel belongs to the order whose center is nearest.
inline std::vector<RadialProfile> annular_profile(const SyntheticImage& img, const std::vector<OrderCenter>& centers,
                                                  double bin_width) {
  const CameraGeometry& cam = img.camera;
  detail::check_centers(centers, cam);
  if (!(bin_width > 0.0)) throw ContractError("annulus width must be positive");
  std::vector<RadialProfile> profiles;
  for (const auto& ctr : centers) {
    RadialProfile p;
    p.center = ctr;
    p.bin_width = bin_width;
    double half = std::numeric_limits<double>::infinity();
    for (const auto& other : centers) {
      const double d = std::hypot(other.x - ctr.x, other.z - ctr.z);
      if (d > 0.0) half = std::min(half, 0.5 * d);
    }
    if (std::isfinite(half)) p.bins.assign(static_cast<std::size_t>(std::ceil(half / bin_width)), 0.0);
    profiles.push_back(std::move(p));
  }
  for (std::size_t row = 0; row < cam.rows(); ++row) {
    const double z = cam.z_center(row);
    for (std::size_t col = 0; col < cam.cols(); ++col) {
      const double v = img.at(row, col);
      if (v == 0.0) continue;
      const double x = cam.x_center(col);
      const std::size_t k = detail::nearest(centers, x, z);
      const auto bin = static_cast<std::size_t>(std::hypot(x - centers[k].x, z - centers[k].z) / bin_width);
      auto& bins = profiles[k].bins;
      if (bin >= bins.size()) bins.resize(bin + 1, 0.0);
      bins[bin] += v;
    }
  }
  return profiles;
}

/// One center-of-mass pass: each center moves to the density centroid of its
/// own cell within half the distance to its nearest neighbour.
inline std::vector<OrderCenter> refine_centers(const SyntheticImage& img, const std::vector<OrderCenter>& centers) {
  const CameraGeometry& cam = img.camera;
  detail::check_centers(centers, cam);
  std::vector<double> mass(centers.size(), 0.0), mx(centers.size(), 0.0), mz(centers.size(), 0.0);
  std::vector<double> radius(centers.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = 0; j < centers.size(); ++j) {
      if (i != j) {
        radius[i] = std::min(radius[i], 0.5 * std::hypot(centers[i].x - centers[j].x, centers[i].z - centers[j].z));
      }
    }
  }
  for (std::size_t row = 0; row < cam.rows(); ++row) {
    const double z = cam.z_center(row);
    for (std::size_t col = 0; col < cam.cols(); ++col) {
      const double v = img.at(row, col);
      if (v == 0.0) continue;
      const double x = cam.x_center(col);
      const std::size_t k = detail::nearest(centers, x, z);
      if (std::hypot(x - centers[k].x, z - centers[k].z) > radius[k]) continue;
      mass[k] += v;
      mx[k] += v * x;
      mz[k] += v * z;
    }
  }
  std::vector<OrderCenter> out = centers;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (mass[k] > 0.0) {
      out[k].x = mx[k] / mass[k];
      out[k].z = mz[k] / mass[k];
    }
  }
  return out;
}

/// weight(n) = integrated density owned by order n over the total.
inline SidebandSpectrum extract_weights(const std::vector<RadialProfile>& profiles) {
  if (profiles.empty()) throw ContractError("no profiles to extract weights from");
  int n_max = 0;
  double total = 0.0;
  for (const auto& p : profiles) {
    n_max = std::max(n_max, std::abs(p.center.order));
    total += p.total();
  }
  if (!(total > 0.0)) throw ContractError("profiles carry no density");
  SidebandSpectrum s = SidebandSpectrum::zeros(n_max);
  for (const auto& p : profiles) s.at(p.center.order) += p.total() / total;
  return s;
}

/// Fraction of each order's atoms that the annular partition assigns to
/// every order, built from single-order images of the same geometry.
struct ResponseMatrix {
  std::vector<int> orders;
  Eigen::MatrixXd assigned;          ///< (i, j): share of order j's in-field density owned by order i
  std::vector<double> field_fraction;  ///< in-field share of order j's atoms
};

struct ResponseSettings {
  double sigma_v = 0.0;
  std::size_t atoms_per_order = 200000;
  std::uint64_t seed = 1;
  double bin_width = 10e-6;
};

inline ResponseMatrix response_matrix(const ExperimentParams& params, const CameraGeometry& camera,
                                      const std::vector<OrderCenter>& centers, const ResponseSettings& settings,
                                      const ConstantsTable& c) {
  ResponseMatrix r;
  const auto m = static_cast<Eigen::Index>(centers.size());
  r.assigned = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const int n = centers[static_cast<std::size_t>(j)].order;
    r.orders.push_back(n);
    SidebandSpectrum single = SidebandSpectrum::zeros(std::abs(n));
    single.at(n) = 1.0;
    const SampleSet samples = sample_ensemble(single, params, settings.sigma_v, settings.atoms_per_order,
                                              settings.seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(j + 1), c);
    const SyntheticImage img = synthesize_image(samples.samples, params, camera, c);
    const auto profiles = annular_profile(img, centers, settings.bin_width);
    double in_field = 0.0;
    for (const auto& p : profiles) in_field += p.total();
    if (!(in_field > 0.0)) throw DomainError(fmt::format("order {} never reaches the camera field", n));
    for (Eigen::Index i = 0; i < m; ++i) r.assigned(i, j) = profiles[static_cast<std::size_t>(i)].total() / in_field;
    r.field_fraction.push_back(in_field / static_cast<double>(settings.atoms_per_order));
  }
  return r;
}

/// Removes cross-talk between neighbouring annuli: solves assigned * x =
/// measured for the in-field composition x, corrects for field losses,
/// clips negative values and renormalizes.
inline SidebandSpectrum unfold_weights(const SidebandSpectrum& measured, const ResponseMatrix& response) {
  const auto m = static_cast<Eigen::Index>(response.orders.size());
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) b(i) = measured.weight(response.orders[static_cast<std::size_t>(i)]);
  const Eigen::VectorXd x = response.assigned.colPivHouseholderQr().solve(b);
  int n_max = 0;
  for (int n : response.orders) n_max = std::max(n_max, std::abs(n));
  SidebandSpectrum s = SidebandSpectrum::zeros(n_max);
  double total = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double w = std::max(0.0, x(j)) / response.field_fraction[static_cast<std::size_t>(j)];
    s.at(response.orders[static_cast<std::size_t>(j)]) = w;
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("unfolding produced no positive weight");
  for (double& w : s.weights) w /= total;
  return s;
}

/// Orders used for extraction: energetically allowed, |n| <= max_order and
/// predicted inside the camera field.
inline std::vector<int> imaging_orders(const ExperimentParams& params, const CameraGeometry& camera, int max_order,
                                       const ConstantsTable& c) {
  if (max_order < 0) throw ContractError("max_order must be non-negative");
  const ImpactState impact = impact_state(params.drop_height, c);
  const double t = params.bounce_time;
  std::vector<int> out;
  for (int n = -max_order; n <= max_order; ++n) {
    double vn = 0.0;
    try {
      vn = sideband_velocity(impact, n, params.modulation.omega(), c);
    } catch (const DomainError&) {
      continue;
    }
    if (camera.contains(params.horizontal_velocity * t, vn * t - 0.5 * c.g * t * t)) out.push_back(n);
  }
  if (out.empty()) throw DomainError("no diffraction order is predicted inside the camera field");
  return out;
}

struct ImagingSettings {
  double sigma_v_over_recoil = 6.6;
  std::size_t atoms = 100000;
  double pitch = 10e-6;
  int max_order = 4;
  bool shot_noise = false;
  bool refine_centers = false;
  std::size_t response_atoms = 50000;

  void validate() const {
    if (!(sigma_v_over_recoil >= 0.0)) throw ConfigError("imaging sigma_v_over_recoil must be non-negative");
    if (atoms == 0) throw ConfigError("imaging atoms must be at least 1");
    if (!(pitch > 0.0)) throw ConfigError("imaging pitch must be positive");
    if (max_order < 0) throw ConfigError("imaging max_order must be non-negative");
    if (response_atoms == 0) throw ConfigError("imaging response_atoms must be at least 1");
  }
};

struct ImageRun {
  SyntheticImage image;
  SampleSet samples;
  double sigma_v = 0.0;
};

inline ImageRun make_image(const SidebandSpectrum& spectrum, const ExperimentParams& params,
                           const ImagingSettings& settings, std::uint64_t seed, const ConstantsTable& c) {
  settings.validate();
  ImageRun run;
  run.sigma_v = settings.sigma_v_over_recoil * recoil_velocity(c);
  run.samples = sample_ensemble(spectrum, params, run.sigma_v, settings.atoms, seed, c);
  run.image = synthesize_image(run.samples.samples, params, default_camera(params, settings.pitch), c);
  run.image.seed = seed;
  if (settings.shot_noise) apply_shot_noise(run.image, seed);
  return run;
}

struct Extraction {
  std::vector<OrderCenter> centers;
  SidebandSpectrum naive;     ///< plain annular shares
  SidebandSpectrum unfolded;  ///< after removing annulus cross-talk
};

/// Annular extraction of an image. Only geometry and the scattering width
/// enter; the response matrix is rebuilt from single-order images.
inline Extraction extract_from_image(const SyntheticImage& image, const ExperimentParams& params,
                                     const ImagingSettings& settings, std::uint64_t seed, const ConstantsTable& c) {
  settings.validate();
  Extraction ex;
  ex.centers = predicted_centers(params, imaging_orders(params, image.camera, settings.max_order, c), c);
  if (settings.refine_centers) ex.centers = refine_centers(image, ex.centers);
  const double bin = image.camera.pitch;
  ex.naive = extract_weights(annular_profile(image, ex.centers, bin));
  ResponseSettings rs;
  rs.sigma_v = settings.sigma_v_over_recoil * recoil_velocity(c);
  rs.atoms_per_order = settings.response_atoms;
  rs.seed = seed ^ 0x5bd1e995ull;
  rs.bin_width = bin;
  ex.unfolded = unfold_weights(ex.naive, response_matrix(params, image.camera, ex.centers, rs, c));
  return ex;
}

}  // namespace tdiff::imaging
