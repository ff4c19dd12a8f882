#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "vortexdiv/grid.hpp"

namespace vortexdiv {

/// Arbitrary-size single-channel image, used for decoded source pictures
/// before they are resized onto a Grid.
struct Raster {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Raster() = default;
  Raster(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline Raster to_raster(const Image2D& img) {
  Raster r(img.n(), img.n());
  std::copy(img.begin(), img.end(), r.data.begin());
  return r;
}

inline Image2D to_image(const Raster& r) {
  detail::require(r.rows == r.cols, "to_image: raster is not square");
  Image2D img{Grid(r.rows)};
  std::copy(r.data.begin(), r.data.end(), img.begin());
  return img;
}

/// Bilinear resize with pixel-center alignment (src = (dst + 0.5) * scale - 0.5,
/// clamped at the borders). Aspect ratio is not preserved.
inline Raster resize_bilinear(const Raster& src, std::size_t rows, std::size_t cols) {
  detail::require(src.rows > 0 && src.cols > 0 && rows > 0 && cols > 0, "resize: empty raster");
  Raster out(rows, cols);
  const double sy = static_cast<double>(src.rows) / static_cast<double>(rows);
  const double sx = static_cast<double>(src.cols) / static_cast<double>(cols);
  const auto clampd = [](double x, double hi) { return std::clamp(x, 0.0, hi); };
  for (std::size_t i = 0; i < rows; ++i) {
    const double y = clampd((static_cast<double>(i) + 0.5) * sy - 0.5, static_cast<double>(src.rows - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t y1 = std::min(y0 + 1, src.rows - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = clampd((static_cast<double>(j) + 0.5) * sx - 0.5, static_cast<double>(src.cols - 1));
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const std::size_t x1 = std::min(x0 + 1, src.cols - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = src(y0, x0) * (1.0 - fx) + src(y0, x1) * fx;
      const double bot = src(y1, x0) * (1.0 - fx) + src(y1, x1) * fx;
      out(i, j) = top * (1.0 - fy) + bot * fy;
    }
  }
  return out;
}

/// Affine rescale to [0, 1]; a constant raster maps to all zeros.
inline Raster normalize_unit(Raster r) {
  if (r.data.empty()) return r;
  const auto [lo, hi] = std::minmax_element(r.data.begin(), r.data.end());
  const double a = *lo, span = *hi - *lo;
  for (auto& x : r.data) x = span > 0.0 ? (x - a) / span : 0.0;
  return r;
}

}  // namespace vortexdiv
