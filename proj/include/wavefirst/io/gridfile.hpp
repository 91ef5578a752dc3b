#pragma once

// Plain-text grid files and atomic file output.
//
//   nx ny real|complex
//   v(0,0) v(0,1) ... v(0,ny-1)
//   ...
// One line per x index, y fastest. Complex entries are written "re,im".
// Numbers use the shortest round-trip form, so read(write(v)) == v bit-exact.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "wavefirst/error.hpp"
#include "wavefirst/types.hpp"

namespace wavefirst::io {

/// Writes `text` to a temporary file beside `path`, then renames it over
/// `path`, so a reader never sees a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Parses the whole of `s` as a double (no leading '+', no trailing text).
inline bool parse_double(std::string_view s, double& v) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

struct GridData {
  int nx = 0;
  int ny = 0;
  bool complex = false;
  CVec values;  // nx * ny, index i * ny + j; imaginary parts zero when real
};

inline std::string format_grid(const CVec& v, int nx, int ny, bool complex) {
  if (v.size() != static_cast<Eigen::Index>(nx) * ny) {
    throw Error(ErrorCode::DimensionMismatch, "grid data does not match " + std::to_string(nx) + "x" +
                                                  std::to_string(ny));
  }
  std::string out = std::to_string(nx) + " " + std::to_string(ny) + (complex ? " complex\n" : " real\n");
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const cplx z = v[static_cast<Eigen::Index>(i) * ny + j];
      if (j) out += ' ';
      out += format_double(z.real());
      if (complex) {
        out += ',';
        out += format_double(z.imag());
      }
    }
    out += '\n';
  }
  return out;
}

inline GridData parse_grid(const std::string& text, const std::string& name = "grid") {
  auto fail = [&](const std::string& why) { return Error(ErrorCode::Io, name + ": " + why); };
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) throw fail("empty file");
  std::istringstream hs(header);
  GridData g;
  std::string kind;
  if (!(hs >> g.nx >> g.ny >> kind) || g.nx <= 0 || g.ny <= 0) throw fail("bad header '" + header + "'");
  if (kind == "complex") {
    g.complex = true;
  } else if (kind != "real") {
    throw fail("unknown kind '" + kind + "'");
  }
  g.values.resize(static_cast<Eigen::Index>(g.nx) * g.ny);
  std::string line;
  for (int i = 0; i < g.nx; ++i) {
    if (!std::getline(in, line)) throw fail("expected " + std::to_string(g.nx) + " rows, got " + std::to_string(i));
    std::istringstream ls(line);
    std::string tok;
    int j = 0;
    for (; ls >> tok; ++j) {
      if (j >= g.ny) throw fail("row " + std::to_string(i) + " has more than " + std::to_string(g.ny) + " values");
      double re = 0.0;
      double im = 0.0;
      bool ok = false;
      if (g.complex) {
        const auto comma = tok.find(',');
        ok = comma != std::string::npos && parse_double(std::string_view(tok).substr(0, comma), re) &&
             parse_double(std::string_view(tok).substr(comma + 1), im);
      } else {
        ok = parse_double(tok, re);
      }
      if (!ok) throw fail("bad value '" + tok + "' in row " + std::to_string(i));
      g.values[static_cast<Eigen::Index>(i) * g.ny + j] = {re, im};
    }
    if (j != g.ny) throw fail("row " + std::to_string(i) + " has " + std::to_string(j) + " values");
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw fail("trailing data after the last row");
  }
  return g;
}

inline void write_grid(const std::filesystem::path& path, const CVec& v, int nx, int ny) {
  write_file_atomic(path, format_grid(v, nx, ny, true));
}

inline void write_grid(const std::filesystem::path& path, const RVec& v, int nx, int ny) {
  write_file_atomic(path, format_grid(v.cast<cplx>(), nx, ny, false));
}

inline GridData read_grid(const std::filesystem::path& path) { return parse_grid(read_file(path), path.string()); }

}  // namespace wavefirst::io
