#pragma once

#include <cmath>
#include <string>

#include "vortexdiv/grid.hpp"

namespace vortexdiv {

namespace detail {
inline void check_radius(const Grid& grid, double radius) {
  if (!(radius > 0.0) || !(radius < static_cast<double>(grid.n()) / 2.0)) {
    throw InvalidArgument("aperture radius must be in (0, n/2), got " + std::to_string(radius));
  }
}
}  // namespace detail

/// Charge-1 vortex e^{i atan2(v, u)}. The origin pixel, where the angle is
/// undefined, holds 0: a vortex has zero amplitude on its axis, and a zero
/// keeps the field exactly odd under (u, v) -> (-u, -v), which is what makes
/// the on-axis (DC) response of centro-symmetric objects vanish.
inline Field2D spiral_phase(const Grid& grid) {
  Field2D out(grid);
  for (std::size_t i = 0; i < grid.n(); ++i) {
    for (std::size_t j = 0; j < grid.n(); ++j) {
      const long u = grid.u(j), v = grid.v(i);
      // (u + iv) / |u + iv| equals e^{i atan2(v, u)} and negates exactly
      // under (u, v) -> (-u, -v).
      const double r = std::hypot(static_cast<double>(u), static_cast<double>(v));
      out(i, j) = r == 0.0 ? complex_t{0.0, 0.0} : complex_t{u / r, v / r};
    }
  }
  return out;
}

/// 1 inside the disk u^2 + v^2 <= radius^2, 0 outside.
inline Field2D open_aperture(const Grid& grid, double radius) {
  detail::check_radius(grid, radius);
  return to_field([&] {
    Image2D img(grid);
    const Mask disk = centered_disk(grid, radius);
    for (std::size_t k = 0; k < grid.size(); ++k) img[k] = disk[k];
    return img;
  }());
}

/// Spiral phase inside the disk, 0 outside.
inline Field2D spiral_aperture(const Grid& grid, double radius) {
  detail::check_radius(grid, radius);
  Field2D out = spiral_phase(grid);
  const Mask disk = centered_disk(grid, radius);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!disk[k]) out[k] = 0.0;
  }
  return out;
}

enum class ApertureKind { open, vortex };

inline ApertureKind parse_aperture(const std::string& s) {
  if (s == "open") return ApertureKind::open;
  if (s == "vortex" || s == "spiral") return ApertureKind::vortex;
  throw InvalidArgument("unknown aperture '" + s + "' (expected open|vortex)");
}

inline const char* to_string(ApertureKind k) { return k == ApertureKind::open ? "open" : "vortex"; }

inline Field2D make_aperture(const Grid& grid, ApertureKind kind, double radius) {
  return kind == ApertureKind::open ? open_aperture(grid, radius) : spiral_aperture(grid, radius);
}

}  // namespace vortexdiv
