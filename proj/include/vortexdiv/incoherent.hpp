#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "vortexdiv/fft.hpp"
#include "vortexdiv/grid.hpp"
#include "vortexdiv/random.hpp"

namespace vortexdiv {

/// Point spread function normalized to unit sum.
struct PSF {
  Image2D image;
};

/// Optical transfer function on centered frequency coordinates, with
/// value exactly 1 at zero frequency.
struct OTF2D {
  Field2D response;
  const Grid& grid() const noexcept { return response.grid(); }
};

/// Gaussian read noise with sigma = fraction * max(image).
struct NoiseSpec {
  double fraction = 0.0;
  std::uint64_t seed = 0;
};

/// |F{pupil}|^2 normalized to unit sum.
inline PSF psf_from_pupil(const Field2D& pupil) {
  Image2D psf = modulus_squared(fft_centered(pupil));
  double total = 0.0;
  for (double v : psf.values()) total += v;
  if (!(total > 0.0)) throw DegenerateInput("psf_from_pupil: pupil is identically zero");
  for (auto& v : psf) v /= total;
  return PSF{std::move(psf)};
}

inline OTF2D otf_from_psf(const PSF& psf) {
  Field2D otf = fft_centered(psf.image);
  const auto [oi, oj] = otf.grid().origin();
  const complex_t dc = otf(oi, oj);
  for (auto& v : otf) v /= dc;
  otf(oi, oj) = 1.0;
  return OTF2D{std::move(otf)};
}

/// Frequency-domain product with the OTF; the unitary-transform factor n
/// between F{a * b} and F{a} F{b} cancels against the unit-sum PSF scaling.
inline Image2D blur(const Image2D& obj, const OTF2D& otf) {
  require_same_grid(obj, otf.response, "blur");
  Field2D spec = fft_centered(obj);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= otf.response[k];
  Image2D out = real_part(ifft_centered(std::move(spec)));
  for (auto& v : out) v = std::max(v, 0.0);
  return out;
}

/// Circular convolution obj * psf, computed by FFT. Negative round-off is clipped to 0.
inline Image2D blur(const Image2D& obj, const PSF& psf) {
  require_same_grid(obj, psf.image, "blur");
  return blur(obj, otf_from_psf(psf));
}

inline Image2D add_noise(const Image2D& img, const NoiseSpec& spec) {
  detail::require(spec.fraction >= 0.0 && std::isfinite(spec.fraction), "noise fraction must be >= 0");
  if (spec.fraction == 0.0) return img;
  const double peak = *std::max_element(img.begin(), img.end());
  const double sigma = spec.fraction * peak;
  Rng rng(spec.seed);
  Image2D out(img.grid());
  for (std::size_t k = 0; k < img.size(); ++k) out[k] = std::max(img[k] + sigma * rng.normal(), 0.0);
  return out;
}

}  // namespace vortexdiv
