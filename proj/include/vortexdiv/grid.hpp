#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vortexdiv/error.hpp"

namespace vortexdiv {

using complex_t = std::complex<double>;

/// Square, even-sized pixel grid with the zero coordinate at (n/2, n/2).
/// Pixel (i, j) has centered coordinates (u, v) = (j - n/2, i - n/2).
class Grid {
 public:
  static constexpr std::size_t kMinSize = 8;
  static constexpr std::size_t kMaxSize = 8192;

  explicit Grid(std::size_t n) : n_(n) {
    if (n % 2 != 0 || n < kMinSize || n > kMaxSize) {
      throw InvalidArgument("grid size must be even and in [8, 8192], got " + std::to_string(n));
    }
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ * n_; }
  std::pair<std::size_t, std::size_t> origin() const noexcept { return {n_ / 2, n_ / 2}; }

  long u(std::size_t j) const noexcept { return static_cast<long>(j) - static_cast<long>(n_ / 2); }
  long v(std::size_t i) const noexcept { return static_cast<long>(i) - static_cast<long>(n_ / 2); }

  /// Row-major index of the pixel at centered coordinates (u, v), wrapping periodically.
  std::size_t index_of(long u, long v) const noexcept {
    const long n = static_cast<long>(n_);
    const long j = ((u + n / 2) % n + n) % n;
    const long i = ((v + n / 2) % n + n) % n;
    return static_cast<std::size_t>(i) * n_ + static_cast<std::size_t>(j);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t n_;
};

inline Grid make_grid(std::size_t n) { return Grid(n); }

/// Row-major n x n array living on a Grid.
template <class T>
class Array2D {
 public:
  using value_type = T;

  explicit Array2D(Grid grid, T fill = T{}) : grid_(grid), data_(grid.size(), fill) {}
  Array2D(Grid grid, std::vector<T> data) : grid_(grid), data_(std::move(data)) {
    detail::require(data_.size() == grid_.size(), "array data does not match grid shape");
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t n() const noexcept { return grid_.n(); }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * grid_.n() + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * grid_.n() + j]; }
  T& operator[](std::size_t k) noexcept { return data_[k]; }
  const T& operator[](std::size_t k) const noexcept { return data_[k]; }

  /// Access by centered coordinates (periodic).
  T& at_uv(long u, long v) noexcept { return data_[grid_.index_of(u, v)]; }
  const T& at_uv(long u, long v) const noexcept { return data_[grid_.index_of(u, v)]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& raw() noexcept { return data_; }
  const std::vector<T>& raw() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  friend bool operator==(const Array2D&, const Array2D&) = default;

 private:
  Grid grid_;
  std::vector<T> data_;
};

using Field2D = Array2D<complex_t>;
using Image2D = Array2D<double>;
using Mask = Array2D<std::uint8_t>;

template <class A, class B>
void require_same_grid(const Array2D<A>& a, const Array2D<B>& b, const char* what) {
  if (!(a.grid() == b.grid())) {
    throw InvalidArgument(std::string(what) + ": grid mismatch (" + std::to_string(a.n()) + " vs " +
                          std::to_string(b.n()) + ")");
  }
}

inline Field2D to_field(const Image2D& img) {
  Field2D out(img.grid());
  for (std::size_t k = 0; k < img.size(); ++k) out[k] = img[k];
  return out;
}

inline Image2D real_part(const Field2D& f) {
  Image2D out(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k].real();
  return out;
}

inline Image2D modulus(const Field2D& f) {
  Image2D out(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::abs(f[k]);
  return out;
}

inline Image2D modulus_squared(const Field2D& f) {
  Image2D out(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::norm(f[k]);
  return out;
}

/// Elementwise product.
inline Field2D multiply(const Field2D& a, const Field2D& b) {
  require_same_grid(a, b, "multiply");
  Field2D out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

inline Field2D conj(const Field2D& f) {
  Field2D out(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = std::conj(f[k]);
  return out;
}

/// Centered box of side `size`: u, v in [-size/2, size - size/2 - 1].
inline Mask centered_box(const Grid& grid, std::size_t size) {
  detail::require(size >= 1 && size < grid.n(), "support size must be in [1, n)");
  Mask m(grid, 0);
  const long lo = -static_cast<long>(size / 2);
  const long hi = lo + static_cast<long>(size) - 1;
  for (std::size_t i = 0; i < grid.n(); ++i) {
    for (std::size_t j = 0; j < grid.n(); ++j) {
      const long u = grid.u(j), v = grid.v(i);
      if (u >= lo && u <= hi && v >= lo && v <= hi) m(i, j) = 1;
    }
  }
  return m;
}

/// Centered disk u^2 + v^2 <= radius^2.
inline Mask centered_disk(const Grid& grid, double radius) {
  Mask m(grid, 0);
  for (std::size_t i = 0; i < grid.n(); ++i) {
    for (std::size_t j = 0; j < grid.n(); ++j) {
      const double u = static_cast<double>(grid.u(j)), v = static_cast<double>(grid.v(i));
      if (u * u + v * v <= radius * radius) m(i, j) = 1;
    }
  }
  return m;
}

inline std::size_t count(const Mask& m) {
  std::size_t c = 0;
  for (auto x : m) c += x != 0;
  return c;
}

}  // namespace vortexdiv
