#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "vortexdiv/grid.hpp"

namespace vortexdiv {

/// SSIM settings. Defaults are the canonical Gaussian-window formulation:
/// 11x11 window, sigma 1.5, k1 = 0.01, k2 = 0.03.
///
/// When `dynamic_range` is unset, the range is max - min taken over both
/// images together, which keeps ssim(a, b) == ssim(b, a). Pin it to 1.0 for
/// data normalized to [0, 1].
struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  std::optional<double> dynamic_range;
};

namespace detail {

inline std::vector<double> gaussian_kernel_1d(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (auto& x : k) x /= sum;
  return k;
}

// Valid-mode separable filtering of a rows x cols image.
inline std::vector<double> filter_valid(std::span<const double> img, std::size_t rows, std::size_t cols,
                                        const std::vector<double>& k) {
  const std::size_t w = k.size();
  const std::size_t out_c = cols - w + 1, out_r = rows - w + 1;
  std::vector<double> tmp(rows * out_c, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < out_c; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < w; ++t) s += k[t] * img[i * cols + j + t];
      tmp[i * out_c + j] = s;
    }
  }
  std::vector<double> out(out_r * out_c, 0.0);
  for (std::size_t i = 0; i < out_r; ++i) {
    for (std::size_t j = 0; j < out_c; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < w; ++t) s += k[t] * tmp[(i + t) * out_c + j];
      out[i * out_c + j] = s;
    }
  }
  return out;
}

}  // namespace detail

inline double mse(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size() && !a.empty(), "mse: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

inline double mse(const Image2D& a, const Image2D& b) {
  require_same_grid(a, b, "mse");
  return mse(a.values(), b.values());
}

/// 10 log10(peak^2 / mse). Identical inputs give +infinity.
inline double psnr(const Image2D& a, const Image2D& b, double peak = 1.0) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

/// Mean local SSIM over all valid (fully inside) windows of a rows x cols image.
inline double ssim(std::span<const double> a, std::span<const double> b, std::size_t rows, std::size_t cols,
                   const SsimParams& p = {}) {
  detail::require(a.size() == b.size() && a.size() == rows * cols, "ssim: size mismatch");
  const auto w = static_cast<std::size_t>(p.window);
  detail::require(p.window > 0 && rows >= w && cols >= w, "ssim: image smaller than window");
  detail::require(p.k1 > 0 && p.k2 > 0, "ssim: k1 and k2 must be positive");

  double range = 0.0;
  if (p.dynamic_range) {
    range = *p.dynamic_range;
  } else {
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    range = std::max(*amax, *bmax) - std::min(*amin, *bmin);
  }
  if (!(range > 0.0)) range = 1.0;  // both images constant and equal

  const double c1 = (p.k1 * range) * (p.k1 * range);
  const double c2 = (p.k2 * range) * (p.k2 * range);
  const auto k = detail::gaussian_kernel_1d(p.window, p.sigma);

  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto mu_a = detail::filter_valid(a, rows, cols, k);
  const auto mu_b = detail::filter_valid(b, rows, cols, k);
  const auto e_aa = detail::filter_valid(aa, rows, cols, k);
  const auto e_bb = detail::filter_valid(bb, rows, cols, k);
  const auto e_ab = detail::filter_valid(ab, rows, cols, k);

  double total = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double var_sum = (e_aa[i] - ma * ma) + (e_bb[i] - mb * mb);
    const double cov = e_ab[i] - ma * mb;
    total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_sum + c2));
  }
  return total / static_cast<double>(mu_a.size());
}

inline double ssim(const Image2D& a, const Image2D& b, const SsimParams& p = {}) {
  require_same_grid(a, b, "ssim");
  return ssim(a.values(), b.values(), a.n(), a.n(), p);
}

/// MSE + alpha (1 - SSIM).
inline double hybrid_loss(const Image2D& pred, const Image2D& target, double alpha = 1.0,
                          const SsimParams& p = {}) {
  require_same_grid(pred, target, "hybrid_loss");
  return mse(pred, target) + alpha * (1.0 - ssim(pred, target, p));
}

inline std::vector<double> line_profile(const Image2D& img, std::size_t row) {
  detail::require(row < img.n(), "line_profile: row out of range");
  std::vector<double> out(img.n());
  for (std::size_t j = 0; j < img.n(); ++j) out[j] = img(row, j);
  return out;
}

/// (max - min) / (max + min) over the profile; 0 for a constant profile.
inline double contrast(std::span<const double> profile) {
  detail::require(!profile.empty(), "contrast: empty profile");
  const auto [lo, hi] = std::minmax_element(profile.begin(), profile.end());
  if (*hi == *lo) return 0.0;
  const double denom = *hi + *lo;
  if (denom == 0.0) throw DegenerateInput("contrast: max + min is zero");
  return (*hi - *lo) / denom;
}

}  // namespace vortexdiv
