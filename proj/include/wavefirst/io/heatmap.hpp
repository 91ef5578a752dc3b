#pragma once

// PNG heatmaps of grids, for looking at results only. y increases upward.
// Colour maps (fixed):
//   magnitude  |v| / max|v|:           black -> red -> yellow -> white
//   real part  Re v / max|Re v|:       blue (-1) -> white (0) -> red (+1)
//   permittivity (eps - lo) / (hi - lo): white (lo) -> black (hi), clamped

#include <png.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "wavefirst/error.hpp"
#include "wavefirst/io/gridfile.hpp"
#include "wavefirst/types.hpp"

namespace wavefirst::io {

using Rgb = std::array<unsigned char, 3>;

inline unsigned char channel(double v) { return static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5); }

inline Rgb magnitude_colour(double t) {
  t = std::clamp(t, 0.0, 1.0) * 3.0;
  return {channel(t), channel(t - 1.0), channel(t - 2.0)};
}

inline Rgb diverging_colour(double t) {
  t = std::clamp(t, -1.0, 1.0);
  return t >= 0.0 ? Rgb{255, channel(1.0 - t), channel(1.0 - t)} : Rgb{channel(1.0 + t), channel(1.0 + t), 255};
}

inline Rgb grey_colour(double t) {
  const unsigned char v = channel(1.0 - t);
  return {v, v, v};
}

/// Encodes an nx x ny image (pixel(i, j) at column i, row ny - 1 - j) and
/// writes it atomically.
template <class Pixel>
void write_png(const std::filesystem::path& path, int nx, int ny, Pixel pixel) {
  std::vector<unsigned char> rgb(static_cast<std::size_t>(nx) * ny * 3);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const Rgb c = pixel(i, j);
      std::copy(c.begin(), c.end(), rgb.begin() + (static_cast<std::size_t>(ny - 1 - j) * nx + i) * 3);
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(nx);
  image.height = static_cast<png_uint_32>(ny);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::Io, std::string("png encode failed: ") + image.message);
  }
  std::string bytes(size, '\0');
  if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::Io, std::string("png encode failed: ") + image.message);
  }
  bytes.resize(size);
  write_file_atomic(path, bytes);
}

inline void write_field_pngs(const std::filesystem::path& stem, const CVec& v, int nx, int ny) {
  const double max_abs = std::max(v.cwiseAbs().maxCoeff(), 1e-300);
  const double max_re = std::max(v.real().cwiseAbs().maxCoeff(), 1e-300);
  auto at = [&](int i, int j) { return v[static_cast<Eigen::Index>(i) * ny + j]; };
  std::filesystem::path p = stem;
  write_png(p += "_abs.png", nx, ny, [&](int i, int j) { return magnitude_colour(std::abs(at(i, j)) / max_abs); });
  p = stem;
  write_png(p += "_real.png", nx, ny, [&](int i, int j) { return diverging_colour(at(i, j).real() / max_re); });
}

inline void write_eps_png(const std::filesystem::path& path, const RVec& eps, int nx, int ny, double lo, double hi) {
  const double span = hi > lo ? hi - lo : 1.0;
  write_png(path, nx, ny, [&](int i, int j) {
    return grey_colour((eps[static_cast<Eigen::Index>(i) * ny + j] - lo) / span);
  });
}

}  // namespace wavefirst::io
