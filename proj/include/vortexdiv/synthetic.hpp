#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "vortexdiv/random.hpp"
#include "vortexdiv/raster.hpp"

namespace vortexdiv::synthetic {

/// 28x28 garment-like silhouette (shirt, trouser, bag, shoe or dress) with
/// smooth interior shading on a zero background. Stands in for
/// Fashion-MNIST-style sources in tests and demo corpora.
inline Raster garment(std::uint64_t seed) {
  constexpr std::size_t kSize = 28;
  Rng rng(derive_seed(seed, 0x6761726dULL));
  Raster r(kSize, kSize, 0.0);
  const auto fill_rect = [&](double y0, double x0, double y1, double x1, double value) {
    for (std::size_t i = 0; i < kSize; ++i) {
      for (std::size_t j = 0; j < kSize; ++j) {
        if (i >= y0 && i <= y1 && j >= x0 && j <= x1) r(i, j) = std::max(r(i, j), value);
      }
    }
  };
  const auto fill_ellipse = [&](double cy, double cx, double ay, double ax, double value) {
    for (std::size_t i = 0; i < kSize; ++i) {
      for (std::size_t j = 0; j < kSize; ++j) {
        const double dy = (i - cy) / ay, dx = (j - cx) / ax;
        if (dy * dy + dx * dx <= 1.0) r(i, j) = std::max(r(i, j), value);
      }
    }
  };
  const double base = 0.55 + 0.4 * rng.uniform();
  const double jitter = 2.0 * rng.uniform() - 1.0;
  switch (static_cast<int>(rng.uniform() * 5.0)) {
    case 0:  // shirt
      fill_rect(5 + jitter, 8, 24, 19 + jitter, base);
      fill_rect(5, 3 + jitter, 9, 24, 0.8 * base);
      fill_rect(9, 3, 17 + 3 * rng.uniform(), 6, 0.7 * base);
      break;
    case 1:  // trouser
      fill_rect(3, 8 + jitter, 8, 19, base);
      fill_rect(8, 8 + jitter, 25, 12.5, 0.9 * base);
      fill_rect(8, 15, 25 - 2 * rng.uniform(), 19, 0.75 * base);
      break;
    case 2:  // bag
      fill_rect(10, 4, 24, 23 + jitter, base);
      fill_ellipse(9, 13.5, 5, 6 + jitter, 0.5 * base);
      fill_ellipse(9, 13.5, 3, 4, 0.0);
      fill_rect(10, 4, 24, 23 + jitter, base);
      break;
    case 3:  // shoe
      fill_ellipse(15, 11 + jitter, 6, 8, base);
      fill_rect(17, 3, 21, 25, 0.8 * base);
      fill_rect(21, 3, 22, 25, 0.4 * base);
      break;
    default:  // dress
      for (std::size_t i = 4; i < 26; ++i) {
        const double half = 3.0 + (static_cast<double>(i) - 4.0) * (0.35 + 0.1 * rng.uniform());
        fill_rect(static_cast<double>(i), 14 - half + jitter, static_cast<double>(i), 14 + half, base);
      }
      break;
  }
  // Smooth shading so the interior is not piecewise constant.
  const double fy = 0.15 + 0.25 * rng.uniform(), fx = 0.15 + 0.25 * rng.uniform();
  const double py = 6.283 * rng.uniform(), px = 6.283 * rng.uniform();
  for (std::size_t i = 0; i < kSize; ++i) {
    for (std::size_t j = 0; j < kSize; ++j) {
      if (r(i, j) > 0.0) {
        r(i, j) *= 0.8 + 0.2 * std::sin(fy * i + py) * std::cos(fx * j + px);
      }
    }
  }
  return r;
}

/// Vertical bar target: bars of `period` pixels alternating between `lo` and
/// `hi` across the full width.
inline Raster bar_target(std::size_t n, std::size_t period, double lo = 0.25, double hi = 0.75) {
  Raster r(n, n, lo);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j % period < period / 2) r(i, j) = hi;
    }
  }
  return r;
}

/// Smooth natural-image-like scene: a few blurred blobs and gradients in [0, 1].
inline Raster scene(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x7363656eULL));
  Raster r(n, n, 0.0);
  const double gy = rng.uniform(), gx = rng.uniform();
  for (int b = 0; b < 6; ++b) {
    const double cy = rng.uniform() * n, cx = rng.uniform() * n;
    const double s = (0.05 + 0.2 * rng.uniform()) * n;
    const double a = 0.3 + 0.7 * rng.uniform();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d2 = (i - cy) * (i - cy) + (j - cx) * (j - cx);
        r(i, j) += a * std::exp(-d2 / (2 * s * s));
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) r(i, j) += 0.3 * (gy * i + gx * j) / n;
  }
  return normalize_unit(r);
}

}  // namespace vortexdiv::synthetic
