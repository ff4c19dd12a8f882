#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <utility>

#include "vortexdiv/grid.hpp"

namespace vortexdiv {
namespace detail {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once per (size, direction) under a lock and
// then shared. FFTW_ESTIMATE keeps the chosen algorithm, and therefore the
// rounding, identical across runs.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<complex_t> scratch(n * n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

// For even n, shift -> DFT -> shift equals multiplying by the checkerboard
// (-1)^(i+j) before and after the plain DFT (the (-1)^(n/2) factors of the
// two axes cancel). The unitary 1/n scale is folded into the output pass.
inline void transform_in_place(Field2D& f, int sign) {
  const std::size_t n = f.n();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = (i + 1) % 2; j < n; j += 2) f(i, j) = -f(i, j);
  }
  auto* buf = reinterpret_cast<fftw_complex*>(f.raw().data());
  fftw_execute_dft(PlanCache::instance().get(n, sign), buf, buf);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) f(i, j) *= ((i + j) % 2 == 0) ? scale : -scale;
  }
}

}  // namespace detail

/// In-place variants for iterative loops that reuse buffers.
inline void fft_centered_inplace(Field2D& f) { detail::transform_in_place(f, FFTW_FORWARD); }
inline void ifft_centered_inplace(Field2D& f) { detail::transform_in_place(f, FFTW_BACKWARD); }

/// Unitary 2D DFT with the origin at (n/2, n/2) in both domains.
inline Field2D fft_centered(Field2D f) {
  detail::transform_in_place(f, FFTW_FORWARD);
  return f;
}

/// Inverse of fft_centered.
inline Field2D ifft_centered(Field2D f) {
  detail::transform_in_place(f, FFTW_BACKWARD);
  return f;
}

inline Field2D fft_centered(const Image2D& img) { return fft_centered(to_field(img)); }

}  // namespace vortexdiv
