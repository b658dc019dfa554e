#pragma once

// Run configuration: INI text with sections [constants], [experiment],
// [oracle] and [imaging]. A preset expands first, explicit keys override
// it, and command-line flags override both.

#include <charconv>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "tdiff/core.hpp"
#include "tdiff/errors.hpp"
#include "tdiff/imaging.hpp"
#include "tdiff/oracle.hpp"

namespace tdiff {

struct RunConfig {
  ConstantsTable constants;
  std::optional<char> preset;
  ExperimentParams experiment;
  oracle::OracleConfig oracle;
  bool oracle_from_experiment = false;  ///< derive k/kappa, Q, U0/E and eps from [experiment]
  imaging::ImagingSettings imaging;
  std::uint64_t seed = 1;
  bool binary_pgm = true;
};

/// Sets the modulation so that eps_P = 0 and |eps_delta| = eps.
inline void set_modulation_depth(ModulationSettings& m, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError(fmt::format("modulation depth {} outside [0, 1)", eps));
  m.power_swing = 0.0;
  m.detuning_swing_hz = eps * m.base_detuning_hz;
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(fmt::format("key '{}': '{}' is not a finite number", key, text));
  }
  return v;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("key '{}': '{}' is not a non-negative integer", key, text));
  }
  return v;
}

inline int parse_int(const std::string& key, const std::string& text) {
  int v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(fmt::format("key '{}': '{}' is not an integer", key, text));
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("key '{}': '{}' is not a boolean", key, text));
}

inline char parse_preset(const std::string& text) {
  if (text.size() != 1 || (text[0] != 'a' && text[0] != 'b' && text[0] != 'c')) {
    throw ConfigError(fmt::format("unknown preset '{}', expected a, b or c", text));
  }
  return text[0];
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <class F>
Setter number(F assign) {
  return [assign](RunConfig& cfg, const std::string& key, const std::string& v) { assign(cfg, parse_double(key, v)); };
}

inline const std::map<std::string, std::map<std::string, Setter>>& key_table() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"constants",
       {
           {"atom_mass", number([](RunConfig& c, double v) { c.constants.atom_mass = v; })},
           {"hbar", number([](RunConfig& c, double v) { c.constants.hbar = v; })},
           {"g", number([](RunConfig& c, double v) { c.constants.g = v; })},
           {"d2_wavelength", number([](RunConfig& c, double v) { c.constants.d2_wavelength = v; })},
       }},
      {"experiment",
       {
           // preset is applied before every other key
           {"preset", [](RunConfig&, const std::string&, const std::string&) {}},
           {"drop_height", number([](RunConfig& c, double v) { c.experiment.drop_height = v; })},
           {"fall_time", number([](RunConfig& c, double v) { c.experiment.fall_time = v; })},
           {"bounce_time", number([](RunConfig& c, double v) { c.experiment.bounce_time = v; })},
           {"horizontal_velocity", number([](RunConfig& c, double v) { c.experiment.horizontal_velocity = v; })},
           {"kappa_inv", number([](RunConfig& c, double v) { c.experiment.kappa_inv = v; })},
           {"barrier_height", number([](RunConfig& c, double v) { c.experiment.barrier_height = v; })},
           {"base_power", number([](RunConfig& c, double v) { c.experiment.modulation.base_power = v; })},
           {"power_swing", number([](RunConfig& c, double v) { c.experiment.modulation.power_swing = v; })},
           {"base_detuning_hz", number([](RunConfig& c, double v) { c.experiment.modulation.base_detuning_hz = v; })},
           {"detuning_swing_hz",
            number([](RunConfig& c, double v) { c.experiment.modulation.detuning_swing_hz = v; })},
           {"mod_frequency_hz", number([](RunConfig& c, double v) { c.experiment.modulation.mod_frequency_hz = v; })},
       }},
      {"oracle",
       {
           {"from_experiment",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle_from_experiment = parse_bool(k, v); }},
           {"k_over_kappa", number([](RunConfig& c, double v) { c.oracle.k_over_kappa = v; })},
           {"q", number([](RunConfig& c, double v) { c.oracle.q = v; })},
           {"u0_over_e", number([](RunConfig& c, double v) { c.oracle.u0_over_e = v; })},
           {"eps", number([](RunConfig& c, double v) { c.oracle.eps = v; })},
           {"sigma_z", number([](RunConfig& c, double v) { c.oracle.sigma_z = v; })},
           {"z_center", number([](RunConfig& c, double v) { c.oracle.z_center = v; })},
           {"z_min", number([](RunConfig& c, double v) { c.oracle.z_min = v; })},
           {"dz", number([](RunConfig& c, double v) { c.oracle.dz = v; })},
           {"dt", number([](RunConfig& c, double v) { c.oracle.dt = v; })},
           {"steps",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle.steps = parse_unsigned(k, v); }},
           {"absorber_width", number([](RunConfig& c, double v) { c.oracle.absorber.width = v; })},
           {"absorber_strength", number([](RunConfig& c, double v) { c.oracle.absorber.strength = v; })},
           {"n_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.oracle.n_max = parse_int(k, v); }},
           {"check_convergence",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.oracle.check_convergence = parse_bool(k, v);
            }},
       }},
      {"imaging",
       {
           {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_unsigned(k, v); }},
           {"sigma_v_over_recoil", number([](RunConfig& c, double v) { c.imaging.sigma_v_over_recoil = v; })},
           {"atoms",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.imaging.atoms = parse_unsigned(k, v); }},
           {"pitch", number([](RunConfig& c, double v) { c.imaging.pitch = v; })},
           {"max_order",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.imaging.max_order = parse_int(k, v); }},
           {"shot_noise",
            [](RunConfig& c, const std::string& k, const std::string& v) { c.imaging.shot_noise = parse_bool(k, v); }},
           {"refine_centers",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.imaging.refine_centers = parse_bool(k, v);
            }},
           {"response_atoms",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              c.imaging.response_atoms = parse_unsigned(k, v);
            }},
           {"pgm_format",
            [](RunConfig& c, const std::string& k, const std::string& v) {
              if (v != "binary" && v != "text") {
                throw ConfigError(fmt::format("key '{}': expected binary or text, got '{}'", k, v));
              }
              c.binary_pgm = v == "binary";
            }},
       }},
  };
  return table;
}

}  // namespace detail

/// Expands a preset into the experiment block, leaving other sections alone.
inline void apply_preset(RunConfig& cfg, char id) {
  cfg.preset = id;
  cfg.experiment = experiment_preset(id);
}

/// Parses INI text into cfg. A preset given here is applied before the keys;
/// preset_override (from the command line) wins over the file's preset.
inline void apply_config_text(RunConfig& cfg, const std::string& text, std::optional<char> preset_override = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config parse error at line {}: {}", e.line(), e.message()));
  }
  const auto& table = detail::key_table();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(fmt::format("key '{}' must belong to a section", section));
    const auto sec = table.find(section);
    if (sec == table.end()) throw ConfigError(fmt::format("unknown section [{}]", section));
    for (const auto& [key, node] : body) {
      if (!sec->second.contains(key)) throw ConfigError(fmt::format("unknown key '{}' in [{}]", key, section));
    }
  }
  if (preset_override) {
    apply_preset(cfg, *preset_override);
  } else if (const auto p = tree.get_optional<std::string>("experiment.preset")) {
    apply_preset(cfg, detail::parse_preset(*p));
  }
  for (const auto& [section, body] : tree) {
    const auto& setters = table.at(section);
    for (const auto& [key, node] : body) {
      setters.at(key)(cfg, section + "." + key, node.data());
    }
  }
}

/// Checks cross-field consistency; hard errors throw, soft ones are returned.
inline std::vector<std::string> validate_config(const RunConfig& cfg) {
  std::vector<std::string> warnings = cfg.constants.validate();
  for (auto& w : cfg.experiment.validate(cfg.constants)) warnings.push_back(std::move(w));
  cfg.imaging.validate();
  return warnings;
}

}  // namespace tdiff
