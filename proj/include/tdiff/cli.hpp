#pragma once

// Command-line front end. Every subcommand produces named artifacts; with
// --out they are written into that directory, otherwise printed to stdout.
// Exit codes: 0 success, 1 domain/contract/runtime error, 2 bad config or
// command line.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "tdiff/config.hpp"
#include "tdiff/core.hpp"
#include "tdiff/diffraction.hpp"
#include "tdiff/errors.hpp"
#include "tdiff/imaging.hpp"
#include "tdiff/io.hpp"
#include "tdiff/kinematics.hpp"
#include "tdiff/oracle.hpp"

namespace tdiff::cli {

using nlohmann::json;
using io::num;

/// Rounded to the printed precision so JSON reports are as stable as CSV.
inline double round6(double v) { return std::stod(num(v)); }

// --- JSON codecs for the image sidecar (full precision) ---------------------

inline json to_json(const ConstantsTable& c) {
  return {{"atom_mass", c.atom_mass}, {"hbar", c.hbar}, {"g", c.g}, {"d2_wavelength", c.d2_wavelength}};
}

inline ConstantsTable constants_from_json(const json& j) {
  ConstantsTable c;
  c.atom_mass = j.at("atom_mass").get<double>();
  c.hbar = j.at("hbar").get<double>();
  c.g = j.at("g").get<double>();
  c.d2_wavelength = j.at("d2_wavelength").get<double>();
  return c;
}

inline json to_json(const ExperimentParams& p) {
  json j = {{"drop_height", p.drop_height},
            {"fall_time", p.fall_time},
            {"bounce_time", p.bounce_time},
            {"horizontal_velocity", p.horizontal_velocity},
            {"kappa_inv", p.kappa_inv},
            {"base_power", p.modulation.base_power},
            {"power_swing", p.modulation.power_swing},
            {"base_detuning_hz", p.modulation.base_detuning_hz},
            {"detuning_swing_hz", p.modulation.detuning_swing_hz},
            {"mod_frequency_hz", p.modulation.mod_frequency_hz}};
  j["barrier_height"] = p.barrier_height ? json(*p.barrier_height) : json(nullptr);
  return j;
}

inline ExperimentParams experiment_from_json(const json& j) {
  ExperimentParams p;
  p.drop_height = j.at("drop_height").get<double>();
  p.fall_time = j.at("fall_time").get<double>();
  p.bounce_time = j.at("bounce_time").get<double>();
  p.horizontal_velocity = j.at("horizontal_velocity").get<double>();
  p.kappa_inv = j.at("kappa_inv").get<double>();
  p.modulation.base_power = j.at("base_power").get<double>();
  p.modulation.power_swing = j.at("power_swing").get<double>();
  p.modulation.base_detuning_hz = j.at("base_detuning_hz").get<double>();
  p.modulation.detuning_swing_hz = j.at("detuning_swing_hz").get<double>();
  p.modulation.mod_frequency_hz = j.at("mod_frequency_hz").get<double>();
  if (!j.at("barrier_height").is_null()) p.barrier_height = j.at("barrier_height").get<double>();
  return p;
}

inline json to_json(const imaging::ImagingSettings& s) {
  return {{"sigma_v_over_recoil", s.sigma_v_over_recoil}, {"atoms", s.atoms},
          {"pitch", s.pitch},
          {"max_order", s.max_order},
          {"shot_noise", s.shot_noise},
          {"refine_centers", s.refine_centers},
          {"response_atoms", s.response_atoms}};
}

inline imaging::ImagingSettings imaging_from_json(const json& j) {
  imaging::ImagingSettings s;
  s.sigma_v_over_recoil = j.at("sigma_v_over_recoil").get<double>();
  s.atoms = j.at("atoms").get<std::size_t>();
  s.pitch = j.at("pitch").get<double>();
  s.max_order = j.at("max_order").get<int>();
  s.shot_noise = j.at("shot_noise").get<bool>();
  s.refine_centers = j.at("refine_centers").get<bool>();
  s.response_atoms = j.at("response_atoms").get<std::size_t>();
  return s;
}

// --- artifacts ---------------------------------------------------------------

inline std::string constants_csv(const RunConfig& cfg) {
  const ConstantsTable& c = cfg.constants;
  const ExperimentParams& p = cfg.experiment;
  const ImpactState impact = impact_state(p.drop_height, c);
  const DiffractionInput in = diffraction_input(p, c);
  const double v_rec = recoil_velocity(c);
  const double v1 = sideband_velocity(impact, 1, p.modulation.omega(), c);
  std::string out = io::csv_row({"quantity", "value", "unit"});
  auto row = [&](const char* name, double v, const char* unit) { out += io::csv_row({name, num(v), unit}); };
  row("atom_mass", c.atom_mass, "kg");
  row("hbar", c.hbar, "J s");
  row("g", c.g, "m/s^2");
  row("d2_wavelength", c.d2_wavelength * 1e9, "nm");
  row("recoil_velocity", v_rec * 1e3, "mm/s");
  row("drop_height", p.drop_height * 1e3, "mm");
  row("free_fall_time", std::sqrt(2.0 * p.drop_height / c.g) * 1e3, "ms");
  row("bounce_time", p.bounce_time * 1e3, "ms");
  row("impact_speed", impact.speed, "m/s");
  row("impact_wavenumber", impact.wavenumber, "1/m");
  row("de_broglie_wavelength", impact.de_broglie * 1e9, "nm");
  row("kappa_inv", p.kappa_inv * 1e9, "nm");
  row("mod_frequency", p.modulation.mod_frequency_hz * 1e-3, "kHz");
  row("mod_depth", modulation_depth(p.modulation), "1");
  row("mirror_amplitude", in.z_m * 1e9, "nm");
  row("q_parameter", q_parameter(in), "1");
  row("beta", beta(q_parameter(in)), "1");
  row("modulation_index", modulation_index(in), "1");
  row("first_sideband_dv_over_recoil", (v1 - impact.speed) / v_rec, "1");
  return out;
}

inline std::string weights_csv(const SidebandSpectrum& s) {
  std::string out = io::csv_row({"order", "weight"});
  for (int n = -s.n_max; n <= s.n_max; ++n) out += io::csv_row({std::to_string(n), num(s.weight(n))});
  return out;
}

inline std::pair<int, int> default_position_range(const RunConfig& cfg) {
  if (cfg.preset) {
    const auto rows = published_expected_positions(*cfg.preset);
    return {rows.front().first, rows.back().first};
  }
  return {-2, 2};
}

inline std::string positions_csv(const RunConfig& cfg, int first, int last) {
  const auto rows = detection_positions(cfg.experiment, first, last, cfg.constants);
  std::vector<std::pair<int, double>> published;
  if (cfg.preset) published = published_expected_positions(*cfg.preset);
  std::string out = io::csv_row({"order", "velocity [m/s]", "wavenumber [1/m]", "rel_position [um]",
                                 "published_expected [um]"});
  for (const auto& r : rows) {
    std::string expected;
    for (const auto& [n, z] : published) {
      if (n == r.order) expected = num(z);
    }
    out += io::csv_row({std::to_string(r.order), num(r.velocity), num(r.wavenumber), num(r.rel_position * 1e6),
                        expected});
  }
  return out;
}

inline std::string sweep_csv(const RunConfig& cfg, double eps_max, int intervals) {
  if (intervals < 1) throw ConfigError("sweep needs at least one interval");
  std::vector<double> extra;
  const CarrierNull null = carrier_null(cfg.experiment, cfg.constants);
  if (null.eps <= eps_max) extra.push_back(null.eps);
  const auto rows = weight_sweep(cfg.experiment, sweep_grid(eps_max, intervals, extra), cfg.constants);
  std::vector<std::string> header = {"eps", "modulation_index"};
  for (int n = 0; n < kSweepOrders; ++n) header.push_back(fmt::format("P{}", n));
  std::string out = io::csv_row(header);
  for (const auto& r : rows) {
    std::vector<std::string> f = {num(r.eps), num(r.modulation_index)};
    for (double w : r.weights) f.push_back(num(w));
    out += io::csv_row(f);
  }
  return out;
}

inline oracle::OracleConfig oracle_config(const RunConfig& cfg) {
  if (!cfg.oracle_from_experiment) return cfg.oracle;
  oracle::OracleConfig o = cfg.oracle;
  const oracle::OracleConfig derived = oracle::oracle_config_from_experiment(cfg.experiment, cfg.constants);
  o.k_over_kappa = derived.k_over_kappa;
  o.q = derived.q;
  o.u0_over_e = derived.u0_over_e;
  o.eps = derived.eps;
  return o;
}

inline json oracle_json(const oracle::OracleReport& r) {
  json orders = json::array();
  for (const auto& o : r.orders) {
    orders.push_back({{"order", o.order}, {"model", round6(o.model)}, {"oracle", round6(o.oracle)},
                      {"rel_error", round6(o.rel_error)}});
  }
  const auto& c = r.config;
  return {{"config",
           {{"k_over_kappa", round6(c.k_over_kappa)}, {"q", round6(c.q)}, {"u0_over_e", round6(c.u0_over_e)},
            {"eps", round6(c.eps)}, {"sigma_z", round6(c.sigma_z)}, {"z_center", round6(c.z_center)},
            {"n_max", c.n_max}}},
          {"units", "hbar = M = kappa = 1"},
          {"grid", {{"z_min", round6(r.grid.z_min)}, {"dz", round6(r.grid.dz)}, {"points", r.grid.n_points}}},
          {"dt", round6(r.dt)},
          {"steps", r.steps},
          {"beta", round6(r.beta)},
          {"modulation_index", round6(r.modulation_index)},
          {"orders", orders},
          {"max_rel_error_above_0.05", round6(r.max_rel_error())},
          {"oracle_total", round6(r.oracle_total)},
          {"reflected_norm", round6(r.reflected_norm)},
          {"absorbed_norm", round6(r.absorbed_norm)},
          {"mirror_overlap", round6(r.mirror_overlap)},
          {"boundary_norm", round6(r.boundary_norm)},
          {"convergence_checked", r.convergence_checked},
          {"converged", r.converged},
          {"max_convergence_change", round6(r.max_convergence_change)},
          {"gravity_omitted", r.gravity_omitted}};
}

inline std::string spectrum_csv(const oracle::MomentumSpectrum& s) {
  std::string out = io::csv_row({"wavenumber [kappa]", "density [1/kappa]"});
  const double dk = s.wavenumber.size() > 1 ? s.wavenumber[1] - s.wavenumber[0] : 1.0;
  for (std::size_t i = 0; i < s.density.size(); ++i) {
    if (s.density[i] / dk < 1e-12) continue;
    out += io::csv_row({num(s.wavenumber[i]), num(s.density[i] / dk)});
  }
  return out;
}

struct ImageArtifacts {
  std::string pgm;
  std::string sidecar;
  std::string summary;
};

inline ImageArtifacts image_artifacts(const RunConfig& cfg, const std::string& pgm_name) {
  const SidebandSpectrum spectrum = sideband_weights(diffraction_input(cfg.experiment, cfg.constants));
  const auto run = imaging::make_image(spectrum, cfg.experiment, cfg.imaging, cfg.seed, cfg.constants);
  const auto& img = run.image;
  double peak = 0.0;
  for (double v : img.pixels) peak = std::max(peak, v);
  const double per_level = std::max(1.0, std::ceil(peak / 65535.0));
  io::Graymap g;
  g.width = img.camera.cols();
  g.height = img.camera.rows();
  g.values.reserve(img.pixels.size());
  for (double v : img.pixels) g.values.push_back(static_cast<std::uint16_t>(std::lround(v / per_level)));

  json weights = json::array();
  for (int n = -spectrum.n_max; n <= spectrum.n_max; ++n) {
    if (spectrum.weight(n) >= 1e-12) weights.push_back({{"order", n}, {"weight", spectrum.weight(n)}});
  }
  json orders = json::array();
  for (const auto& [n, st] : img.orders) {
    orders.push_back({{"order", n}, {"atoms", st.atoms}, {"in_field", st.in_field}, {"z_centroid", st.z_centroid()}});
  }
  json side = {{"format", "tdiff-image/1"},
               {"pgm", pgm_name},
               {"geometry",
                {{"width_px", g.width},
                 {"height_px", g.height},
                 {"pitch_m", img.camera.pitch},
                 {"width_m", img.camera.width},
                 {"height_m", img.camera.height},
                 {"x_left_m", img.camera.x_left},
                 {"z_bottom_m", img.camera.z_bottom},
                 {"row_order", "top to bottom"}}},
               {"seed", cfg.seed},
               {"atoms", img.atom_count},
               {"in_field", img.in_field},
               {"out_of_field", img.out_of_field},
               {"redraw_fraction", run.samples.redraw_fraction},
               {"sigma_v_m_s", run.sigma_v},
               {"atoms_per_level", per_level},
               {"constants", to_json(cfg.constants)},
               {"experiment", to_json(cfg.experiment)},
               {"imaging", to_json(cfg.imaging)},
               {"input_weights", weights},
               {"order_stats", orders}};
  ImageArtifacts a;
  a.pgm = io::encode_pgm(g, cfg.binary_pgm);
  a.sidecar = side.dump(2) + "\n";
  a.summary = fmt::format("{}: {} x {} px, {} atoms, {} in field, {} outside\n", pgm_name, g.width, g.height,
                          img.atom_count, img.in_field, img.out_of_field);
  return a;
}

/// Rebuilds the image and its settings from a PGM and its JSON sidecar.
struct LoadedImage {
  imaging::SyntheticImage image;
  ExperimentParams experiment;
  ConstantsTable constants;
  imaging::ImagingSettings settings;
  std::uint64_t seed = 0;
  std::vector<std::pair<int, double>> input_weights;
};

inline LoadedImage load_image(const std::filesystem::path& pgm_path) {
  std::filesystem::path side_path = pgm_path;
  side_path.replace_extension(".json");
  json side;
  try {
    side = json::parse(io::read_file(side_path));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("sidecar {}: {}", side_path.string(), e.what()));
  }
  LoadedImage out;
  try {
    if (side.at("format") != "tdiff-image/1") throw ConfigError("unsupported sidecar format");
    const auto& geo = side.at("geometry");
    auto& cam = out.image.camera;
    cam.pitch = geo.at("pitch_m").get<double>();
    cam.width = geo.at("width_m").get<double>();
    cam.height = geo.at("height_m").get<double>();
    cam.x_left = geo.at("x_left_m").get<double>();
    cam.z_bottom = geo.at("z_bottom_m").get<double>();
    out.constants = constants_from_json(side.at("constants"));
    out.experiment = experiment_from_json(side.at("experiment"));
    out.settings = imaging_from_json(side.at("imaging"));
    out.seed = side.at("seed").get<std::uint64_t>();
    for (const auto& w : side.at("input_weights")) {
      out.input_weights.emplace_back(w.at("order").get<int>(), w.at("weight").get<double>());
    }
    const double per_level = side.at("atoms_per_level").get<double>();
    const io::Graymap g = io::decode_pgm(io::read_file(pgm_path));
    if (g.width != cam.cols() || g.height != cam.rows()) {
      throw ConfigError("PGM dimensions disagree with the sidecar geometry");
    }
    out.image.pixels.reserve(g.values.size());
    for (auto v : g.values) out.image.pixels.push_back(per_level * v);
    out.image.seed = out.seed;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("sidecar {}: {}", side_path.string(), e.what()));
  }
  return out;
}

inline std::string extraction_csv(const LoadedImage& li) {
  const auto ex = imaging::extract_from_image(li.image, li.experiment, li.settings, li.seed, li.constants);
  std::string out = io::csv_row({"order", "naive_weight", "unfolded_weight", "input_weight"});
  for (const auto& c : ex.centers) {
    std::string input;
    for (const auto& [n, w] : li.input_weights) {
      if (n == c.order) input = num(w);
    }
    out += io::csv_row({std::to_string(c.order), num(ex.naive.weight(c.order)), num(ex.unfolded.weight(c.order)),
                        input});
  }
  return out;
}

inline std::string report_markdown(const RunConfig& cfg, const oracle::OracleReport& oracle_report) {
  const ConstantsTable& c = cfg.constants;
  std::string md = "# Temporal diffraction report\n\n## Parameters\n\n";
  md += "| preset | z0 [mm] | t_fall [ms] | t_bounce [ms] | f_mod [kHz] | delta0/2pi [GHz] | "
        "d(delta)/2pi [MHz] | eps | z_M [nm] | A |\n|---|---|---|---|---|---|---|---|---|---|\n";
  std::vector<std::pair<std::string, ExperimentParams>> rows;
  for (char id : {'a', 'b', 'c'}) rows.emplace_back(std::string(1, id), experiment_preset(id));
  if (!cfg.preset) rows.emplace_back("config", cfg.experiment);
  for (const auto& [name, p] : rows) {
    const DiffractionInput in = diffraction_input(p, c);
    md += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", name, num(p.drop_height * 1e3),
                      num(p.fall_time * 1e3), num(p.bounce_time * 1e3), num(p.modulation.mod_frequency_hz * 1e-3),
                      num(p.modulation.base_detuning_hz * 1e-9), num(p.modulation.detuning_swing_hz * 1e-6),
                      num(modulation_depth(p.modulation)), num(in.z_m * 1e9), num(modulation_index(in)));
  }
  md += "\n## Relative detection positions\n\n";
  for (char id : {'a', 'b', 'c'}) {
    RunConfig one = cfg;
    apply_preset(one, id);
    const auto range = default_position_range(one);
    md += fmt::format("### Preset ({})\n\n```csv\n{}```\n\n", id, positions_csv(one, range.first, range.second));
  }
  md += "## Weights versus modulation depth\n\n";
  md += fmt::format("Experiment: z0 = {} mm, f_mod = {} kHz. The carrier vanishes at eps = {}.\n\n",
                    num(cfg.experiment.drop_height * 1e3), num(cfg.experiment.modulation.mod_frequency_hz * 1e-3),
                    num(carrier_null(cfg.experiment, c).eps));
  md += fmt::format("```csv\n{}```\n\n", sweep_csv(cfg, 0.2, 40));
  md += "## Wavepacket oracle against the closed form\n\n";
  const auto& oc = oracle_report.config;
  md += fmt::format("k/kappa = {}, Q = {}, U0/E = {}, eps = {}; converged: {} (largest change {}).\n\n",
                    num(oc.k_over_kappa), num(oc.q), num(oc.u0_over_e), num(oc.eps),
                    oracle_report.converged ? "yes" : "no", num(oracle_report.max_convergence_change));
  md += "| order | model | oracle | relative error |\n|---|---|---|---|\n";
  for (const auto& o : oracle_report.orders) {
    md += fmt::format("| {} | {} | {} | {} |\n", o.order, num(o.model), num(o.oracle), num(o.rel_error));
  }
  md += fmt::format("\nLargest relative error on orders above 0.05: {}.\n", num(oracle_report.max_rel_error()));
  return md;
}

// --- command line --------------------------------------------------------------

struct Emitter {
  std::optional<std::filesystem::path> dir;
  std::ostream& out;

  void emit(const std::string& name, const std::string& content) const {
    if (dir) {
      io::write_file_atomic(*dir / name, content);
    } else {
      out << content;
    }
  }
};

inline constexpr const char* kConfigKeys = R"(Config keys (INI; SI units unless noted):
  [constants]  atom_mass, hbar, g, d2_wavelength (real)
  [experiment] preset (a|b|c), drop_height, fall_time, bounce_time,
               horizontal_velocity, kappa_inv, barrier_height, base_power,
               power_swing, base_detuning_hz, detuning_swing_hz,
               mod_frequency_hz (real)
  [oracle]     from_experiment (bool), k_over_kappa, q, u0_over_e, eps,
               sigma_z, z_center, z_min, dz, dt (real, units of 1/kappa),
               steps (uint), absorber_width, absorber_strength (real),
               n_max (int), check_convergence (bool)
  [imaging]    seed (uint), sigma_v_over_recoil (real), atoms (uint),
               pitch (real), max_order (int), shot_noise, refine_centers
               (bool), response_atoms (uint), pgm_format (binary|text)
Precedence: preset < config keys < command-line flags.)";

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Temporal diffraction of atoms bouncing on a vibrating evanescent mirror", "tdiff"};
  app.require_subcommand(1);
  app.footer(kConfigKeys);
  app.fallthrough();

  std::string config_path;
  std::string preset_flag;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<double> z0, eps, fmod, kappa_inv;
  std::optional<std::size_t> atoms;
  std::string pgm_format;
  app.add_option("--config", config_path, "INI file with [constants], [experiment], [oracle], [imaging]");
  app.add_option("--preset", preset_flag, "Parameter row a, b or c")->check(CLI::IsMember({"a", "b", "c"}));
  app.add_option("--seed", seed, "Random seed for imaging");
  app.add_option("--out", out_dir, "Directory for artifacts (default: stdout; image: .)");
  app.add_option("--z0", z0, "Drop height [m]");
  app.add_option("--eps", eps, "Modulation depth (sets the detuning swing, no power swing)");
  app.add_option("--fmod", fmod, "Modulation frequency [Hz]");
  app.add_option("--kappa-inv", kappa_inv, "Evanescent decay length [m]");
  app.add_option("--atoms", atoms, "Atoms per synthetic image");
  app.add_option("--pgm", pgm_format, "PGM encoding")->check(CLI::IsMember({"binary", "text"}));

  auto* constants_cmd = app.add_subcommand("constants", "Constants and derived quantities (CSV)");
  auto* weights_cmd = app.add_subcommand("weights", "Sideband weights P(n) (CSV)");
  auto* positions_cmd = app.add_subcommand("positions", "Sideband speeds and relative positions (CSV)");
  std::optional<int> first, last;
  positions_cmd->add_option("--first", first, "Lowest order");
  positions_cmd->add_option("--last", last, "Highest order");
  auto* sweep_cmd = app.add_subcommand("sweep", "Weights of orders 0..6 versus modulation depth (CSV)");
  double eps_max = 0.2;
  int intervals = 200;
  sweep_cmd->add_option("--eps-max", eps_max, "Largest modulation depth")->capture_default_str();
  sweep_cmd->add_option("--intervals", intervals, "Grid intervals")->capture_default_str();
  auto* oracle_cmd = app.add_subcommand("oracle", "Wavepacket oracle against the closed form (JSON)");
  bool from_experiment = false;
  bool with_spectrum = false;
  oracle_cmd->add_flag("--from-experiment", from_experiment, "Use the dimensionless numbers of [experiment]");
  oracle_cmd->add_flag("--spectrum", with_spectrum, "Also emit the momentum spectrum (CSV)");
  auto* image_cmd = app.add_subcommand("image", "Synthetic absorption image (PGM + JSON sidecar)");
  bool shot_noise = false;
  image_cmd->add_flag("--shot-noise", shot_noise, "Poisson noise on every pixel");
  auto* extract_cmd = app.add_subcommand("extract", "Annular weight extraction from a PGM image (CSV)");
  std::string pgm_path;
  extract_cmd->add_option("image", pgm_path, "PGM written by 'image'")->required();
  auto* report_cmd = app.add_subcommand("report", "Parameters, positions, sweep and oracle (Markdown)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg;
    std::optional<char> preset;
    if (!preset_flag.empty()) preset = preset_flag[0];
    if (!config_path.empty()) {
      apply_config_text(cfg, io::read_file(config_path), preset);
    } else if (preset) {
      apply_preset(cfg, *preset);
    }
    if (z0) cfg.experiment.drop_height = *z0;
    if (eps) set_modulation_depth(cfg.experiment.modulation, *eps);
    if (fmod) cfg.experiment.modulation.mod_frequency_hz = *fmod;
    if (kappa_inv) cfg.experiment.kappa_inv = *kappa_inv;
    if (seed) cfg.seed = *seed;
    if (atoms) cfg.imaging.atoms = *atoms;
    if (!pgm_format.empty()) cfg.binary_pgm = pgm_format == "binary";
    if (shot_noise) cfg.imaging.shot_noise = true;
    if (from_experiment) cfg.oracle_from_experiment = true;
    for (const auto& w : validate_config(cfg)) err << "warning: " << w << '\n';

    std::optional<std::filesystem::path> dir;
    if (!out_dir.empty()) dir = out_dir;
    const Emitter emitter{dir, out};

    if (*constants_cmd) {
      emitter.emit("constants.csv", constants_csv(cfg));
    } else if (*weights_cmd) {
      emitter.emit("weights.csv", weights_csv(sideband_weights(diffraction_input(cfg.experiment, cfg.constants))));
    } else if (*positions_cmd) {
      const auto range = default_position_range(cfg);
      emitter.emit("positions.csv", positions_csv(cfg, first.value_or(range.first), last.value_or(range.second)));
    } else if (*sweep_cmd) {
      emitter.emit("sweep.csv", sweep_csv(cfg, eps_max, intervals));
    } else if (*oracle_cmd) {
      const auto report = oracle::run_oracle(oracle_config(cfg));
      emitter.emit("oracle.json", oracle_json(report).dump(2) + "\n");
      if (with_spectrum) emitter.emit("spectrum.csv", spectrum_csv(report.spectrum));
      if (report.convergence_checked && !report.converged) {
        err << "error: oracle did not converge (largest change " << num(report.max_convergence_change) << ")\n";
        return 1;
      }
    } else if (*image_cmd) {
      const std::filesystem::path target = dir.value_or(".");
      const auto a = image_artifacts(cfg, "image.pgm");
      io::write_file_atomic(target / "image.pgm", a.pgm);
      io::write_file_atomic(target / "image.json", a.sidecar);
      out << a.summary;
    } else if (*extract_cmd) {
      emitter.emit("extracted.csv", extraction_csv(load_image(pgm_path)));
    } else if (*report_cmd) {
      const auto report = oracle::run_oracle(oracle_config(cfg));
      emitter.emit("report.md", report_markdown(cfg, report));
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace tdiff::cli
