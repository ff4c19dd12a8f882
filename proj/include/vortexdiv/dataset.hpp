#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vortexdiv/aperture.hpp"
#include "vortexdiv/coherent.hpp"
#include "vortexdiv/image_io.hpp"
#include "vortexdiv/incoherent.hpp"
#include "vortexdiv/metrics.hpp"
#include "vortexdiv/random.hpp"
#include "vortexdiv/tensor_io.hpp"

namespace vortexdiv {

namespace fs = std::filesystem;

enum class Regime { incoherent, coherent };

inline const char* to_string(Regime r) { return r == Regime::incoherent ? "incoherent" : "coherent"; }

inline Regime parse_regime(const std::string& s) {
  if (s == "incoherent") return Regime::incoherent;
  if (s == "coherent") return Regime::coherent;
  throw InvalidArgument("unknown regime '" + s + "' (expected incoherent|coherent)");
}

/// Where generated entries go. `split` divides sources into train/val by
/// the manifest fractions; `test` puts every entry into test/.
enum class Subset { split, test };

struct DatasetParams {
  std::size_t grid_n = 256;
  // incoherent
  double aperture_radius_px = 50.0;
  double noise_fraction = 0.01;
  // coherent
  std::size_t support_size = 100;
  double phi_max = kDefaultPhiMax;
  double gamma = 0.1;

  std::uint64_t seed = 0;
  double train_fraction = 0.85;
  double val_fraction = 0.15;
  Subset subset = Subset::split;
  unsigned threads = 1;
};

struct ManifestEntry {
  std::string id;
  std::string subset;
  std::string source;
  std::string y1_path;
  std::string y2_path;
  std::string truth_path;
  nlohmann::json meta = nlohmann::json::object();
};

struct DatasetManifest {
  Regime regime = Regime::incoherent;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  double train_fraction = 0.85;
  double val_fraction = 0.15;
  std::vector<ManifestEntry> entries;
};

inline constexpr const char* kManifestFormat = "vortexdiv-manifest/1";

inline nlohmann::ordered_json to_json(const DatasetManifest& m) {
  nlohmann::ordered_json j;
  j["format"] = kManifestFormat;
  j["regime"] = to_string(m.regime);
  j["params"] = m.params;
  j["split"] = {{"train_fraction", m.train_fraction}, {"val_fraction", m.val_fraction}};
  j["entries"] = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json je;
    je["id"] = e.id;
    je["subset"] = e.subset;
    je["source"] = e.source;
    je["y1_path"] = e.y1_path;
    je["y2_path"] = e.y2_path;
    je["truth_path"] = e.truth_path;
    je["meta"] = e.meta;
    j["entries"].push_back(std::move(je));
  }
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  try {
    DatasetManifest m;
    if (j.value("format", "") != kManifestFormat) throw FormatError("manifest: unknown format tag");
    m.regime = parse_regime(j.at("regime").get<std::string>());
    m.params = nlohmann::ordered_json::parse(j.at("params").dump());
    m.train_fraction = j.at("split").at("train_fraction").get<double>();
    m.val_fraction = j.at("split").at("val_fraction").get<double>();
    for (const auto& je : j.at("entries")) {
      m.entries.push_back(ManifestEntry{je.at("id").get<std::string>(), je.at("subset").get<std::string>(),
                                        je.value("source", ""), je.at("y1_path").get<std::string>(),
                                        je.at("y2_path").get<std::string>(), je.at("truth_path").get<std::string>(),
                                        je.value("meta", nlohmann::json::object())});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

inline void write_manifest(const fs::path& path, const DatasetManifest& m) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << to_json(m).dump(2) << "\n";
  }
  fs::rename(tmp, path);
}

inline DatasetManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return manifest_from_json(j);
}

/// Regular files with a supported image extension, sorted by name.
inline std::vector<fs::path> list_sources(const fs::path& src_dir) {
  if (!fs::is_directory(src_dir)) throw InputError("source directory '" + src_dir.string() + "' does not exist");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(src_dir)) {
    if (e.is_regular_file() && is_supported_image(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no decodable images in '" + src_dir.string() + "'");
  return out;
}

/// Grayscale source resized (stretched) to n x n and normalized to [0, 1].
inline Image2D prepare_intensity_object(const Raster& src, std::size_t n) {
  return to_image(normalize_unit(resize_bilinear(src, n, n)));
}

inline std::string entry_id(std::size_t index) {
  std::string s = std::to_string(index);
  return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

/// Deterministic train/val assignment: sources are ordered by a seeded
/// hash and the first round(train_fraction * N) go to train.
inline std::vector<std::string> assign_subsets(std::size_t count, const DatasetParams& p) {
  if (p.subset == Subset::test) return std::vector<std::string>(count, "test");
  detail::require(p.train_fraction >= 0.0 && p.val_fraction >= 0.0 &&
                      std::abs(p.train_fraction + p.val_fraction - 1.0) < 1e-9,
                  "train and val fractions must be non-negative and sum to 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ha = derive_seed(p.seed, a, 0x73706c74ULL), hb = derive_seed(p.seed, b, 0x73706c74ULL);
    return ha != hb ? ha < hb : a < b;
  });
  const auto n_train = static_cast<std::size_t>(std::llround(p.train_fraction * static_cast<double>(count)));
  std::vector<std::string> out(count, "val");
  for (std::size_t r = 0; r < std::min(n_train, count); ++r) out[order[r]] = "train";
  return out;
}

namespace detail {

// Runs job(i) for i in [0, count) on `threads` workers; failures are
// collected per index so one bad source does not hide the others.
inline std::vector<std::string> parallel_for(std::size_t count, unsigned threads,
                                             const std::function<void(std::size_t)>& job) {
  std::vector<std::string> errors(count);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        job(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return errors;
}

inline void raise_failures(const std::vector<fs::path>& sources, const std::vector<std::string>& errors) {
  std::string msg;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) msg += "\n  " + sources[i].filename().string() + ": " + errors[i];
  }
  if (!msg.empty()) throw InputError("dataset generation failed for:" + msg);
}

inline DatasetManifest begin_manifest(Regime regime, const DatasetParams& p, const std::vector<fs::path>& sources) {
  DatasetManifest m;
  m.regime = regime;
  m.train_fraction = p.train_fraction;
  m.val_fraction = p.val_fraction;
  const auto subsets = assign_subsets(sources.size(), p);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const std::string id = entry_id(i);
    const std::string& sub = subsets[i];
    m.entries.push_back(ManifestEntry{id, sub, sources[i].filename().string(), sub + "/y1/" + id + ".pdt",
                                      sub + "/y2/" + id + ".pdt", sub + "/truth/" + id + ".pdt",
                                      nlohmann::json::object()});
  }
  return m;
}

}  // namespace detail

/// Per-shot noise seeds derived from (master seed, entry index, shot).
inline NoiseSpec shot_noise(const DatasetParams& p, std::size_t index, int shot) {
  return NoiseSpec{p.noise_fraction, derive_seed(p.seed, index, static_cast<std::uint64_t>(shot))};
}

struct IncoherentSample {
  Image2D truth;
  Image2D y1;
  Image2D y2;
};

inline IncoherentSample make_incoherent_sample(const Image2D& truth, const OTF2D& open, const OTF2D& vortex,
                                               const DatasetParams& p, std::size_t index) {
  return IncoherentSample{truth, add_noise(blur(truth, open), shot_noise(p, index, 1)),
                          add_noise(blur(truth, vortex), shot_noise(p, index, 2))};
}

/// Incoherent pairs: y1 through the open aperture, y2 through the vortex
/// aperture, each with independent Gaussian noise.
inline DatasetManifest gen_incoherent_pairs(const fs::path& src_dir, const fs::path& out_dir, const DatasetParams& p) {
  const Grid grid(p.grid_n);
  const OTF2D open = otf_from_psf(psf_from_pupil(open_aperture(grid, p.aperture_radius_px)));
  const OTF2D vortex = otf_from_psf(psf_from_pupil(spiral_aperture(grid, p.aperture_radius_px)));
  detail::require(p.noise_fraction >= 0.0, "noise fraction must be >= 0");

  const auto sources = list_sources(src_dir);
  DatasetManifest m = detail::begin_manifest(Regime::incoherent, p, sources);
  m.params["grid_n"] = p.grid_n;
  m.params["aperture_radius_px"] = p.aperture_radius_px;
  m.params["noise_fraction"] = p.noise_fraction;
  m.params["seed"] = p.seed;

  const auto errors = detail::parallel_for(sources.size(), p.threads, [&](std::size_t i) {
    const auto& e = m.entries[i];
    const Image2D truth = prepare_intensity_object(load_grayscale(sources[i]), p.grid_n);
    const auto s = make_incoherent_sample(truth, open, vortex, p, i);
    const nlohmann::json base = {{"id", e.id}, {"regime", "incoherent"}, {"source", e.source}};
    auto meta = [&](const char* kind, const char* aperture) {
      nlohmann::json j = base;
      j["kind"] = kind;
      if (aperture) j["aperture"] = aperture;
      return j;
    };
    write_image(out_dir / e.y1_path, s.y1, meta("y1", "open"));
    write_image(out_dir / e.y2_path, s.y2, meta("y2", "vortex"));
    write_image(out_dir / e.truth_path, s.truth, meta("truth", nullptr));
  });
  detail::raise_failures(sources, errors);
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

struct CoherentSample {
  PhaseObject object;
  Image2D y1;  // gamma-scaled plane-wave amplitude
  Image2D y2;  // gamma-scaled vortex amplitude
};

inline CoherentSample make_coherent_sample(const Raster& src, const DatasetParams& p) {
  PhaseObject obj = embed_phase_object(src, Grid(p.grid_n), p.support_size, p.phi_max);
  const GammaScale g(p.gamma);
  Image2D y1 = gamma_scale(fourier_amplitude(obj, Illumination::plane), g);
  Image2D y2 = gamma_scale(fourier_amplitude(obj, Illumination::vortex), g);
  return CoherentSample{std::move(obj), std::move(y1), std::move(y2)};
}

/// Coherent pairs: gamma-scaled Fourier amplitudes of a pure phase object
/// under plane-wave (y1) and vortex (y2) illumination. Truth is the phase
/// map in radians on the full window.
inline DatasetManifest gen_coherent_pairs(const fs::path& src_dir, const fs::path& out_dir, const DatasetParams& p) {
  const Grid grid(p.grid_n);
  detail::require(p.support_size > 0 && p.support_size < grid.n(), "support size must be in [1, grid_n)");
  const GammaScale gamma_check(p.gamma);
  (void)gamma_check;

  const auto sources = list_sources(src_dir);
  DatasetManifest m = detail::begin_manifest(Regime::coherent, p, sources);
  m.params["grid_n"] = p.grid_n;
  m.params["support_size"] = p.support_size;
  m.params["phi_max"] = p.phi_max;
  m.params["gamma"] = p.gamma;
  m.params["seed"] = p.seed;

  const auto errors = detail::parallel_for(sources.size(), p.threads, [&](std::size_t i) {
    const auto& e = m.entries[i];
    const auto s = make_coherent_sample(load_grayscale(sources[i]), p);
    const nlohmann::json base = {{"id", e.id}, {"regime", "coherent"}, {"source", e.source}};
    auto meta = [&](const char* kind, const char* illum) {
      nlohmann::json j = base;
      j["kind"] = kind;
      if (illum) {
        j["illumination"] = illum;
        j["quantity"] = "amplitude^gamma";
        j["gamma"] = p.gamma;
      } else {
        j["quantity"] = "phase_rad";
        j["support_size"] = p.support_size;
        j["phi_max"] = p.phi_max;
      }
      return j;
    };
    write_image(out_dir / e.y1_path, s.y1, meta("y1", "plane"));
    write_image(out_dir / e.y2_path, s.y2, meta("y2", "vortex"));
    write_image(out_dir / e.truth_path, s.object.phase, meta("truth", nullptr));
  });
  detail::raise_failures(sources, errors);
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

inline DatasetManifest generate_dataset(Regime regime, const fs::path& src_dir, const fs::path& out_dir,
                                        const DatasetParams& p) {
  return regime == Regime::incoherent ? gen_incoherent_pairs(src_dir, out_dir, p)
                                      : gen_coherent_pairs(src_dir, out_dir, p);
}

/// Problems found in a manifest directory; empty when every entry's files
/// exist, parse and have the declared grid size, and the params are
/// complete for the regime.
inline std::vector<std::string> check_manifest(const fs::path& manifest_path) {
  std::vector<std::string> problems;
  DatasetManifest m;
  try {
    m = read_manifest(manifest_path);
  } catch (const Error& e) {
    return {e.what()};
  }
  const std::vector<const char*> required =
      m.regime == Regime::incoherent
          ? std::vector<const char*>{"grid_n", "aperture_radius_px", "noise_fraction", "seed"}
          : std::vector<const char*>{"grid_n", "support_size", "phi_max", "gamma", "seed"};
  for (const char* key : required) {
    if (!m.params.contains(key)) problems.push_back(std::string("params missing '") + key + "'");
  }
  if (std::abs(m.train_fraction + m.val_fraction - 1.0) > 1e-9) problems.push_back("split fractions do not sum to 1");
  const std::size_t n = m.params.value("grid_n", std::size_t{0});
  const fs::path root = manifest_path.parent_path();
  for (const auto& e : m.entries) {
    for (const auto* rel : {&e.y1_path, &e.y2_path, &e.truth_path}) {
      try {
        const Tensor t = read_tensor(root / *rel);
        if (t.shape.size() != 2 || t.shape[0] != n || t.shape[1] != n) {
          problems.push_back(e.id + ": " + *rel + " has unexpected shape");
        }
      } catch (const Error& err) {
        problems.push_back(e.id + ": " + err.what());
      }
    }
  }
  return problems;
}

/// Measured first shot plus an externally generated second shot.
struct PseudoPair {
  Image2D y1;
  Image2D y2p;
  std::string provenance;
  std::vector<std::string> warnings;
};

/// Loads and validates pseudo data. Rejects shape mismatch and any
/// non-finite or negative sample in either file. For gamma-scaled coherent
/// data, warns when y2p's spread differs strongly from y1's.
inline PseudoPair ingest_pseudo(const fs::path& y1_path, const fs::path& y2p_path) {
  const Tensor t1 = read_tensor(y1_path);
  const Tensor t2 = read_tensor(y2p_path);
  if (t1.shape != t2.shape) throw FormatError("ingest_pseudo: y1 and y2p shapes differ");
  const auto check = [](const Tensor& t, const fs::path& p) {
    for (std::size_t k = 0; k < t.data.size(); ++k) {
      if (!std::isfinite(t.data[k])) throw FormatError(p.string() + ": non-finite value at index " + std::to_string(k));
      if (t.data[k] < 0.0f) throw FormatError(p.string() + ": negative value at index " + std::to_string(k));
    }
  };
  check(t1, y1_path);
  check(t2, y2p_path);

  PseudoPair pair{image_from_tensor(t1), image_from_tensor(t2), y2p_path.filename().string(), {}};
  if (t2.meta.contains("provenance") && t2.meta["provenance"].is_string()) {
    pair.provenance = t2.meta["provenance"].get<std::string>();
  }
  if (t1.meta.value("regime", "") == "coherent" || t1.meta.contains("gamma")) {
    const auto spread = [](const Image2D& img) {
      double mx = 0.0, sum = 0.0;
      for (double v : img.values()) {
        mx = std::max(mx, v);
        sum += v;
      }
      const double mean = sum / static_cast<double>(img.size());
      return mean > 0.0 ? mx / mean : 0.0;
    };
    const double s1 = spread(pair.y1), s2 = spread(pair.y2p);
    if (s1 > 0.0 && (s2 <= 0.0 || s2 / s1 > 10.0 || s1 / s2 > 10.0)) {
      pair.warnings.push_back("y2p max/mean ratio " + std::to_string(s2) + " is far from y1's " + std::to_string(s1) +
                              "; is it gamma-scaled like y1?");
    }
  }
  return pair;
}

}  // namespace vortexdiv
