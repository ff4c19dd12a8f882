#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "vortexdiv/aperture.hpp"
#include "vortexdiv/fft.hpp"
#include "vortexdiv/grid.hpp"
#include "vortexdiv/metrics.hpp"
#include "vortexdiv/random.hpp"

namespace vortexdiv {

/// Object-domain constraint applied at every projection.
enum class Constraint {
  support,            // zero outside the support, free inside
  support_unit_modulus  // additionally |x| = 1 inside (pure phase object)
};

inline Constraint parse_constraint(const std::string& s) {
  if (s == "support") return Constraint::support;
  if (s == "support+unit-modulus" || s == "phase") return Constraint::support_unit_modulus;
  throw InvalidArgument("unknown constraint '" + s + "' (expected support|support+unit-modulus)");
}

inline const char* to_string(Constraint c) {
  return c == Constraint::support ? "support" : "support+unit-modulus";
}

struct RetrievalConfig {
  std::size_t total_iters = 500;
  /// Trailing iterations that enforce the y1 amplitude only (error reduction).
  std::size_t final_plain_iters = 25;
  double beta = 0.9;
  std::uint64_t seed = 0;
  Constraint constraint = Constraint::support_unit_modulus;
  /// Every this many diversity iterations the estimate is compared with its
  /// twin against the vortex-plane amplitude and the better one kept. 0 disables.
  std::size_t twin_check_interval = 50;

  void validate() const {
    detail::require(final_plain_iters <= total_iters, "final_plain_iters must not exceed total_iters");
    detail::require(beta > 0.0 && beta < 1.0, "beta must be in (0, 1)");
  }
};

struct RetrievalResult {
  Field2D field;                        // zero outside the support
  std::vector<double> residual_history; // || |F x_t| - y1 || / || y1 ||
  std::size_t iterations_run = 0;
  std::size_t twin_flips = 0;
};

/// x*(-u, -v) about the centered origin.
inline Field2D twin(const Field2D& x) {
  const Grid& g = x.grid();
  Field2D out(g);
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::size_t j = 0; j < g.n(); ++j) {
      out(i, j) = std::conj(x.at_uv(-g.u(j), -g.v(i)));
    }
  }
  return out;
}

/// Multiplies `est` by the unit scalar that makes sum(est * conj(ref)) real
/// and positive.
inline Field2D align_global_phase(const Field2D& est, const Field2D& ref) {
  require_same_grid(est, ref, "align_global_phase");
  complex_t overlap = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) overlap += est[k] * std::conj(ref[k]);
  if (overlap == complex_t{0.0, 0.0}) throw AlignmentUndefined("align_global_phase: zero overlap");
  const complex_t rot = std::polar(1.0, -std::arg(overlap));
  Field2D out(est.grid());
  for (std::size_t k = 0; k < est.size(); ++k) out[k] = est[k] * rot;
  return out;
}

/// Normalized real correlation Re<est, ref> / (|est| |ref|) after alignment.
inline double aligned_correlation(const Field2D& est, const Field2D& ref) {
  const Field2D a = align_global_phase(est, ref);
  double dot = 0.0, ne = 0.0, nr = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += (a[k] * std::conj(ref[k])).real();
    ne += std::norm(a[k]);
    nr += std::norm(ref[k]);
  }
  return dot / std::sqrt(ne * nr);
}

/// Bounding box of a mask, [r0, r1) x [c0, c1).
struct Box {
  std::size_t r0 = 0, r1 = 0, c0 = 0, c1 = 0;
  std::size_t rows() const { return r1 - r0; }
  std::size_t cols() const { return c1 - c0; }
};

inline Box bounding_box(const Mask& m) {
  Box b{m.n(), 0, m.n(), 0};
  for (std::size_t i = 0; i < m.n(); ++i) {
    for (std::size_t j = 0; j < m.n(); ++j) {
      if (!m(i, j)) continue;
      b.r0 = std::min(b.r0, i);
      b.r1 = std::max(b.r1, i + 1);
      b.c0 = std::min(b.c0, j);
      b.c1 = std::max(b.c1, j + 1);
    }
  }
  if (b.r1 == 0) throw InvalidArgument("empty support");
  return b;
}

/// SSIM between the phase of `est` (after global-phase alignment to the
/// pure phase object e^{i truth_phase}) and the true phase, both divided by
/// phi_max and cropped to the support bounding box. Dynamic range is 1.
/// No twin alignment is attempted.
inline double aligned_phase_ssim(const Field2D& est, const Image2D& truth_phase, const Mask& support,
                                 double phi_max) {
  require_same_grid(est, truth_phase, "aligned_phase_ssim");
  require_same_grid(est, support, "aligned_phase_ssim");
  detail::require(phi_max > 0.0, "aligned_phase_ssim: phi_max must be positive");
  Field2D ref(est.grid());
  for (std::size_t k = 0; k < ref.size(); ++k) ref[k] = support[k] ? std::polar(1.0, truth_phase[k]) : 0.0;
  const Field2D a = align_global_phase(est, ref);
  const Box box = bounding_box(support);
  std::vector<double> pa, pb;
  pa.reserve(box.rows() * box.cols());
  pb.reserve(box.rows() * box.cols());
  for (std::size_t i = box.r0; i < box.r1; ++i) {
    for (std::size_t j = box.c0; j < box.c1; ++j) {
      pa.push_back(support(i, j) ? std::arg(a(i, j)) / phi_max : 0.0);
      pb.push_back(support(i, j) ? truth_phase(i, j) / phi_max : 0.0);
    }
  }
  SsimParams p;
  p.dynamic_range = 1.0;
  return ssim(pa, pb, box.rows(), box.cols(), p);
}

namespace detail {

class RetrievalWorkspace {
 public:
  RetrievalWorkspace(const Image2D& y1, const Mask& support, const RetrievalConfig& cfg)
      : y1_(y1), support_(support), cfg_(cfg), buf_(y1.grid()) {
    y1_norm_ = 0.0;
    for (double v : y1.values()) y1_norm_ += v * v;
    y1_norm_ = std::sqrt(y1_norm_);
  }

  // Fourier-domain amplitude replacement, in place.
  static void replace_amplitude(Field2D& spectrum, const Image2D& amp) {
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
      const double a = std::sqrt(std::norm(spectrum[k]));
      spectrum[k] = a > 0.0 ? spectrum[k] * (amp[k] / a) : complex_t{amp[k], 0.0};
    }
  }

  // Object-domain projection onto the constraint set, in place.
  void project(Field2D& x) const {
    const bool unit = cfg_.constraint == Constraint::support_unit_modulus;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (!support_[k]) {
        x[k] = 0.0;
      } else if (unit) {
        const double a = std::sqrt(std::norm(x[k]));
        x[k] = a > 0.0 ? x[k] / a : complex_t{1.0, 0.0};
      }
    }
  }

  // x' = F^-1 [ amp * phase(F{x * mod}) ] * conj(mod); mod omitted when null.
  void magnitude_projection(const Field2D& x, const Image2D& amp, const Field2D* mod, Field2D& out) {
    out = x;
    if (mod) {
      for (std::size_t k = 0; k < out.size(); ++k) out[k] *= (*mod)[k];
    }
    fft_centered_inplace(out);
    replace_amplitude(out, amp);
    ifft_centered_inplace(out);
    if (mod) {
      for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::conj((*mod)[k]);
    }
  }

  // Generalized HIO step: g <- g + P_C((1 + beta) g' - g) - beta g'.
  // With the plain support constraint this is the classic rule: g' inside,
  // g - beta g' outside.
  void feedback_update(Field2D& g, const Field2D& gp) {
    const double beta = cfg_.beta;
    buf_ = gp;
    for (std::size_t k = 0; k < buf_.size(); ++k) buf_[k] = (1.0 + beta) * gp[k] - g[k];
    project(buf_);
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += buf_[k] - beta * gp[k];
  }

  // Relative y1 amplitude residual of a constrained estimate.
  double residual(const Field2D& est) {
    buf_ = est;
    fft_centered_inplace(buf_);
    double e = 0.0;
    for (std::size_t k = 0; k < buf_.size(); ++k) {
      const double d = std::sqrt(std::norm(buf_[k])) - y1_[k];
      e += d * d;
    }
    return y1_norm_ > 0.0 ? std::sqrt(e) / y1_norm_ : std::sqrt(e);
  }

  double amplitude_error(const Field2D& est, const Image2D& amp, const Field2D& mod) {
    buf_ = est;
    for (std::size_t k = 0; k < buf_.size(); ++k) buf_[k] *= mod[k];
    fft_centered_inplace(buf_);
    double e = 0.0;
    for (std::size_t k = 0; k < buf_.size(); ++k) {
      const double d = std::sqrt(std::norm(buf_[k])) - amp[k];
      e += d * d;
    }
    return e;
  }

  Field2D random_start() const {
    Rng rng(cfg_.seed);
    Field2D x(y1_.grid());
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = std::polar(y1_[k], 2.0 * std::numbers::pi * rng.uniform());
    }
    ifft_centered_inplace(x);
    return x;
  }

  Field2D mask_only(Field2D x) const {
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (!support_[k]) x[k] = 0.0;
    }
    return x;
  }

 private:
  const Image2D& y1_;
  const Mask& support_;
  const RetrievalConfig& cfg_;
  Field2D buf_;
  double y1_norm_ = 0.0;
};

inline void check_retrieval_inputs(const Image2D& y1, const Mask& support) {
  require_same_grid(y1, support, "phase retrieval");
  if (count(support) == 0) throw InvalidArgument("phase retrieval: empty support");
  for (double v : y1.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("phase retrieval: amplitudes must be finite and >= 0");
  }
}

}  // namespace detail

/// Single-shot hybrid input-output from the plane-wave amplitude. The
/// initial guess is y1 with uniform random phase, seeded by cfg.seed.
inline RetrievalResult hio(const Image2D& y1_amp, const Mask& support, const RetrievalConfig& cfg = {}) {
  cfg.validate();
  detail::check_retrieval_inputs(y1_amp, support);
  detail::RetrievalWorkspace ws(y1_amp, support, cfg);

  Field2D g = ws.random_start();
  RetrievalResult result{ws.mask_only(g), {}, 0, 0};
  Field2D gp(y1_amp.grid());
  for (std::size_t t = 0; t < cfg.total_iters; ++t) {
    ws.magnitude_projection(g, y1_amp, nullptr, gp);
    ws.feedback_update(g, gp);
    result.field = gp;
    ws.project(result.field);
    result.residual_history.push_back(ws.residual(result.field));
  }
  result.iterations_run = cfg.total_iters;
  return result;
}

/// Two-plane retrieval from plane-wave (y1) and vortex-illuminated (y2)
/// Fourier amplitudes.
///
/// Each iteration visits the y1 plane, then the y2 plane: amplitude
/// replacement with y1, back to the object domain, constraint with
/// feedback, multiply by e^{i theta}, amplitude replacement with y2, back,
/// multiply by e^{-i theta}, constraint with feedback. Because twin(x)
/// matches y1 as well as x does, the estimate is periodically compared with
/// its twin on the y2 amplitude error and replaced when the twin fits
/// better. The last cfg.final_plain_iters iterations drop the vortex plane
/// and run plain error reduction against y1.
inline RetrievalResult diversity_retrieve(const Image2D& y1_amp, const Image2D& y2_amp, const Mask& support,
                                          const RetrievalConfig& cfg = {}) {
  cfg.validate();
  require_same_grid(y1_amp, y2_amp, "diversity_retrieve");
  detail::check_retrieval_inputs(y1_amp, support);
  detail::check_retrieval_inputs(y2_amp, support);
  detail::RetrievalWorkspace ws(y1_amp, support, cfg);
  const Field2D vortex = spiral_phase(y1_amp.grid());

  Field2D g = ws.random_start();
  RetrievalResult result{ws.mask_only(g), {}, 0, 0};
  Field2D gp(y1_amp.grid());
  const std::size_t diversity_iters = cfg.total_iters - cfg.final_plain_iters;

  for (std::size_t t = 0; t < cfg.total_iters; ++t) {
    if (t < diversity_iters) {
      ws.magnitude_projection(g, y1_amp, nullptr, gp);
      ws.feedback_update(g, gp);
      ws.magnitude_projection(g, y2_amp, &vortex, gp);
      ws.feedback_update(g, gp);
      result.field = gp;
      ws.project(result.field);

      if (cfg.twin_check_interval > 0 && (t + 1) % cfg.twin_check_interval == 0 && t + 1 < diversity_iters) {
        Field2D flipped = twin(result.field);
        ws.project(flipped);
        if (ws.amplitude_error(flipped, y2_amp, vortex) < ws.amplitude_error(result.field, y2_amp, vortex)) {
          result.field = flipped;
          g = flipped;
          ++result.twin_flips;
        }
      }
    } else {
      ws.magnitude_projection(g, y1_amp, nullptr, gp);
      ws.project(gp);
      g = gp;
      result.field = gp;
    }
    result.residual_history.push_back(ws.residual(result.field));
  }
  result.field = ws.mask_only(std::move(result.field));
  result.iterations_run = cfg.total_iters;
  return result;
}

}  // namespace vortexdiv
