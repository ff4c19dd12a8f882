#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include "vortexdiv/aperture.hpp"
#include "vortexdiv/fft.hpp"
#include "vortexdiv/grid.hpp"
#include "vortexdiv/raster.hpp"

namespace vortexdiv {

/// Pure phase object: unit modulus inside `support`, zero outside.
struct PhaseObject {
  Field2D field;
  Mask support;
  Image2D phase;  // radians, 0 outside the support
  double phi_max = 0.0;
};

inline constexpr double kDefaultPhiMax = 2.0 * std::numbers::pi / 3.0;

/// Rescales `img` to [0, 1], resizes it bilinearly to support_size^2 and
/// writes exp(i * phi_max * value) into a centered box of `window`.
inline PhaseObject embed_phase_object(const Raster& img, const Grid& window, std::size_t support_size,
                                      double phi_max = kDefaultPhiMax) {
  if (support_size == 0 || support_size >= window.n()) {
    throw InvalidArgument("support size " + std::to_string(support_size) + " must be in [1, " +
                          std::to_string(window.n()) + ")");
  }
  detail::require(phi_max >= 0.0 && std::isfinite(phi_max), "phi_max must be finite and >= 0");
  const Raster scaled = normalize_unit(resize_bilinear(img, support_size, support_size));

  PhaseObject obj{Field2D(window), centered_box(window, support_size), Image2D(window), phi_max};
  const std::size_t off = window.n() / 2 - support_size / 2;
  for (std::size_t i = 0; i < support_size; ++i) {
    for (std::size_t j = 0; j < support_size; ++j) {
      const double phi = phi_max * std::clamp(scaled(i, j), 0.0, 1.0);
      obj.phase(off + i, off + j) = phi;
      obj.field(off + i, off + j) = std::polar(1.0, phi);
    }
  }
  return obj;
}

inline PhaseObject embed_phase_object(const Image2D& img, const Grid& window, std::size_t support_size,
                                      double phi_max = kDefaultPhiMax) {
  return embed_phase_object(to_raster(img), window, support_size, phi_max);
}

enum class Illumination { plane, vortex };

/// Far-field amplitude |F{obj * modulation}|, modulation = 1 (plane) or the
/// charge-1 spiral phase (vortex). Intensity is the square of this.
inline Image2D fourier_amplitude(const Field2D& obj, Illumination illum) {
  if (illum == Illumination::plane) return modulus(fft_centered(obj));
  return modulus(fft_centered(multiply(obj, spiral_phase(obj.grid()))));
}

inline Image2D fourier_amplitude(const PhaseObject& obj, Illumination illum) {
  return fourier_amplitude(obj.field, illum);
}

/// Dynamic-range compression exponent for stored diffraction data.
class GammaScale {
 public:
  explicit GammaScale(double gamma = 0.1) : gamma_(gamma) {
    detail::require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
  }
  double gamma() const noexcept { return gamma_; }

 private:
  double gamma_;
};

namespace detail {
inline Image2D elementwise_pow(const Image2D& m, double e, const char* what) {
  Image2D out(m.grid());
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (!(m[k] >= 0.0)) throw InvalidArgument(std::string(what) + ": negative or NaN input");
    out[k] = std::pow(m[k], e);
  }
  return out;
}
}  // namespace detail

inline Image2D gamma_scale(const Image2D& m, GammaScale g = GammaScale{}) {
  return detail::elementwise_pow(m, g.gamma(), "gamma_scale");
}

inline Image2D gamma_unscale(const Image2D& d, GammaScale g = GammaScale{}) {
  return detail::elementwise_pow(d, 1.0 / g.gamma(), "gamma_unscale");
}

}  // namespace vortexdiv
