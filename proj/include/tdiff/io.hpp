#pragma once

// Output plumbing: fixed-precision number text, CSV rows and files that
// appear only once completely written.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "tdiff/errors.hpp"

namespace tdiff::io {

/// Six significant digits, the precision of every number we print.
inline std::string num(double v) {
  if (v == 0.0) return "0";  // also folds -0
  return fmt::format("{:.6g}", v);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) line += ',';
    line += csv_field(fields[i]);
  }
  line += "\r\n";
  return line;
}

/// Writes to a sibling temporary and renames it over the target.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error(fmt::format("write to {} failed", tmp.string()));
    }
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// --- NetPBM graymap, always 16 bit (maxval 65535) -------------------------

struct Graymap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint16_t> values;  ///< row-major from the top-left corner
};

inline std::string encode_pgm(const Graymap& g, bool binary) {
  if (g.values.size() != g.width * g.height) throw ContractError("graymap size does not match its dimensions");
  std::string out = fmt::format("{}\n{} {}\n65535\n", binary ? "P5" : "P2", g.width, g.height);
  if (binary) {
    out.reserve(out.size() + 2 * g.values.size());
    for (std::uint16_t v : g.values) {
      out += static_cast<char>(v >> 8);
      out += static_cast<char>(v & 0xff);
    }
    return out;
  }
  for (std::size_t r = 0; r < g.height; ++r) {
    for (std::size_t c = 0; c < g.width; ++c) {
      if (c > 0) out += ' ';
      out += std::to_string(g.values[r * g.width + c]);
    }
    out += '\n';
  }
  return out;
}

inline Graymap decode_pgm(const std::string& data) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto token = [&]() -> std::size_t {
    skip_space();
    const std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
    if (pos == start) throw ConfigError("malformed PGM header");
    return std::stoul(data.substr(start, pos - start));
  };
  if (data.size() < 2 || data[0] != 'P' || (data[1] != '2' && data[1] != '5')) {
    throw ConfigError("not a P2/P5 graymap");
  }
  const bool binary = data[1] == '5';
  pos = 2;
  Graymap g;
  g.width = token();
  g.height = token();
  const std::size_t maxval = token();
  if (g.width == 0 || g.height == 0 || maxval == 0 || maxval > 65535) throw ConfigError("unsupported PGM header");
  const std::size_t count = g.width * g.height;
  g.values.resize(count);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    if (data.size() < pos + count * bytes) throw ConfigError("truncated PGM raster");
    for (std::size_t i = 0; i < count; ++i) {
      const auto* p = reinterpret_cast<const unsigned char*>(data.data() + pos + i * bytes);
      g.values[i] = static_cast<std::uint16_t>(bytes == 2 ? (p[0] << 8) | p[1] : p[0]);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t v = token();
      if (v > maxval) throw ConfigError("PGM sample exceeds maxval");
      g.values[i] = static_cast<std::uint16_t>(v);
    }
  }
  return g;
}

}  // namespace tdiff::io
