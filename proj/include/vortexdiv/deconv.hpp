#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vortexdiv/fft.hpp"
#include "vortexdiv/grid.hpp"
#include "vortexdiv/incoherent.hpp"

namespace vortexdiv {

/// Complex multiplier applied to centered spectra.
struct FreqFilter {
  Field2D weights;
};

/// Scalar stand-ins for the noise-to-object spectral ratio: `kappa` for the
/// multi-shot (GW) stage, `kappa_w` for the per-aperture Wiener stage of
/// the cascade.
struct RegSpec {
  double kappa = 1e-2;
  double kappa_w = 1e-3;

  void validate() const {
    detail::require(kappa > 0.0 && std::isfinite(kappa), "kappa must be > 0");
    detail::require(kappa_w > 0.0 && std::isfinite(kappa_w), "kappa_w must be > 0");
  }
};

/// conj(OTF) / (|OTF|^2 + kappa).
inline FreqFilter wiener_filter(const OTF2D& otf, double kappa) {
  detail::require(kappa > 0.0 && std::isfinite(kappa), "wiener_filter: kappa must be > 0");
  Field2D w(otf.grid());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const complex_t h = otf.response[k];
    w[k] = std::conj(h) / (std::norm(h) + kappa);
  }
  return FreqFilter{std::move(w)};
}

/// Generalized Wiener filters W_k = conj(OTF_k) / (sum_j |OTF_j|^2 + kappa)
/// with one shared denominator.
inline std::vector<FreqFilter> gw_filters(std::span<const OTF2D> otfs, double kappa) {
  detail::require(!otfs.empty(), "gw_filters: no OTFs given");
  detail::require(kappa > 0.0 && std::isfinite(kappa), "gw_filters: kappa must be > 0");
  const Grid grid = otfs.front().grid();
  for (const auto& o : otfs) {
    if (!(o.grid() == grid)) throw InvalidArgument("gw_filters: OTF grids differ");
  }
  std::vector<double> denom(grid.size(), kappa);
  for (const auto& o : otfs) {
    for (std::size_t k = 0; k < grid.size(); ++k) denom[k] += std::norm(o.response[k]);
  }
  std::vector<FreqFilter> out;
  out.reserve(otfs.size());
  for (const auto& o : otfs) {
    Field2D w(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) w[k] = std::conj(o.response[k]) / denom[k];
    out.push_back(FreqFilter{std::move(w)});
  }
  return out;
}

/// Reconstruction plus the size of the discarded imaginary part, relative
/// to the real part (both in the L2 sense).
struct FilterOutput {
  Image2D image;
  double imag_residual = 0.0;
};

/// Re F^-1 { sum_k W_k F{y_k} }. The output is signed; no clipping.
inline FilterOutput apply_filters_diag(std::span<const Image2D> ys, std::span<const FreqFilter> filters) {
  detail::require(!ys.empty() && ys.size() == filters.size(), "apply_filters: need one filter per image");
  const Grid grid = ys.front().grid();
  for (std::size_t k = 0; k < ys.size(); ++k) {
    if (!(ys[k].grid() == grid) || !(filters[k].weights.grid() == grid)) {
      throw InvalidArgument("apply_filters: grid mismatch");
    }
  }
  Field2D acc(grid);
  for (std::size_t s = 0; s < ys.size(); ++s) {
    const Field2D spec = fft_centered(ys[s]);
    for (std::size_t k = 0; k < grid.size(); ++k) acc[k] += filters[s].weights[k] * spec[k];
  }
  ifft_centered_inplace(acc);
  FilterOutput out{Image2D(grid), 0.0};
  double re2 = 0.0, im2 = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out.image[k] = acc[k].real();
    re2 += acc[k].real() * acc[k].real();
    im2 += acc[k].imag() * acc[k].imag();
  }
  out.imag_residual = re2 > 0.0 ? std::sqrt(im2 / re2) : std::sqrt(im2);
  return out;
}

inline Image2D apply_filters(std::span<const Image2D> ys, std::span<const FreqFilter> filters) {
  return apply_filters_diag(ys, filters).image;
}

/// Composite filters w_k W_k of the cascade: per-aperture Wiener filters
/// (regularized by kappa_w) multiplied onto the shared-denominator GW filters.
inline std::vector<FreqFilter> cascaded_filters(std::span<const OTF2D> otfs, const RegSpec& reg) {
  reg.validate();
  auto filters = gw_filters(otfs, reg.kappa);
  for (std::size_t s = 0; s < otfs.size(); ++s) {
    const FreqFilter w = wiener_filter(otfs[s], reg.kappa_w);
    for (std::size_t k = 0; k < w.weights.size(); ++k) filters[s].weights[k] *= w.weights[k];
  }
  return filters;
}

inline Image2D cascaded_gw(std::span<const Image2D> ys, std::span<const OTF2D> otfs, const RegSpec& reg) {
  detail::require(ys.size() == otfs.size(), "cascaded_gw: need one OTF per image");
  return apply_filters(ys, cascaded_filters(otfs, reg));
}

/// |sum_k F_k OTF_k| : the spectrum a centered point source acquires after
/// filtering each shot with its filter and summing.
inline Image2D point_source_response(std::span<const OTF2D> otfs, std::span<const FreqFilter> filters) {
  detail::require(!otfs.empty() && otfs.size() == filters.size(), "point_source_response: size mismatch");
  const Grid grid = otfs.front().grid();
  Image2D out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    complex_t s = 0.0;
    for (std::size_t i = 0; i < otfs.size(); ++i) s += filters[i].weights[k] * otfs[i].response[k];
    out[k] = std::abs(s);
  }
  return out;
}

/// Isotropic total variation with forward differences and Neumann boundaries.
inline double total_variation(const Image2D& img, double eps = 0.0) {
  const std::size_t n = img.n();
  double tv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = j + 1 < n ? img(i, j + 1) - img(i, j) : 0.0;
      const double dy = i + 1 < n ? img(i + 1, j) - img(i, j) : 0.0;
      tv += std::sqrt(dx * dx + dy * dy + eps * eps);
    }
  }
  return tv;
}

/// `steps` explicit gradient-descent steps on the (slightly smoothed)
/// isotropic TV. The gradient is -div(grad u / |grad u|_eps) with the
/// adjoint backward-difference divergence.
inline Image2D tv_reduce(const Image2D& img, std::size_t steps, double step_size, double eps = 1e-3) {
  detail::require(step_size > 0.0 && std::isfinite(step_size), "tv_reduce: step_size must be > 0");
  const std::size_t n = img.n();
  Image2D u = img;
  std::vector<double> px(img.size()), py(img.size());
  for (std::size_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double dx = j + 1 < n ? u(i, j + 1) - u(i, j) : 0.0;
        const double dy = i + 1 < n ? u(i + 1, j) - u(i, j) : 0.0;
        const double mag = std::sqrt(dx * dx + dy * dy + eps * eps);
        px[i * n + j] = dx / mag;
        py[i * n + j] = dy / mag;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t k = i * n + j;
        double div = 0.0;
        div += (j + 1 < n ? px[k] : 0.0) - (j > 0 ? px[k - 1] : 0.0);
        div += (i + 1 < n ? py[k] : 0.0) - (i > 0 ? py[k - n] : 0.0);
        u[k] += step_size * div;
      }
    }
  }
  return u;
}

}  // namespace vortexdiv
