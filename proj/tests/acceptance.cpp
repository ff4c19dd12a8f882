// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "vortexdiv/vortexdiv.hpp"

#ifndef VORTEXDIV_CLI_PATH
#error "VORTEXDIV_CLI_PATH must point at the CLI binary"
#endif

using namespace vortexdiv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

OTF2D otf_of(const Grid& g, ApertureKind kind, double radius) {
  return otf_from_psf(psf_from_pupil(make_aperture(g, kind, radius)));
}

// |OTF| along the positive u axis of the central row.
std::vector<double> radial_profile(const OTF2D& otf) {
  const Grid& g = otf.grid();
  std::vector<double> out;
  for (long u = 0; u < static_cast<long>(g.n() / 2); ++u) out.push_back(std::abs(otf.response[g.index_of(u, 0)]));
  return out;
}

Outcome otf_shape() {
  const Grid g(256);
  const OTF2D open = otf_of(g, ApertureKind::open, 50);
  const OTF2D vortex = otf_of(g, ApertureKind::vortex, 50);
  const auto po = radial_profile(open), pv = radial_profile(vortex);

  bool monotone = true;
  for (std::size_t r = 1; r < po.size(); ++r) monotone = monotone && po[r] <= po[r - 1] + 1e-3;

  // A local minimum of the vortex profile inside the passband that dips
  // below 0.05 and is flanked by values above 0.1 on both sides.
  std::size_t rmin = 0;
  double left = 0.0, right = 0.0;
  for (std::size_t r = 1; r + 1 < 100 && rmin == 0; ++r) {
    if (!(pv[r] < 0.05 && pv[r] <= pv[r - 1] && pv[r] <= pv[r + 1])) continue;
    left = *std::max_element(pv.begin(), pv.begin() + static_cast<long>(r));
    right = *std::max_element(pv.begin() + static_cast<long>(r) + 1, pv.begin() + 100);
    if (left > 0.1 && right > 0.1) rmin = r;
  }
  const bool dip = rmin != 0;

  double tail = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::size_t j = 0; j < g.n(); ++j) {
      if (std::hypot(g.u(j), g.v(i)) > 102.0) {
        tail = std::max({tail, std::abs(open.response(i, j)), std::abs(vortex.response(i, j))});
      }
    }
  }
  return {monotone && dip && tail < 1e-6,
          fmt("open monotone=%d, vortex min %.4f at r=%zu (left %.3f, right %.3f), max tail beyond 102 px %.2e",
              monotone, pv[rmin], rmin, left, right, tail)};
}

Outcome gw_perfect_reconstruction() {
  const Grid g(64);
  const Image2D obj = to_image(synthetic::scene(64, 1));
  const std::vector<OTF2D> otfs{otf_of(g, ApertureKind::open, 12), otf_of(g, ApertureKind::vortex, 12)};
  const std::vector<Image2D> ys{blur(obj, otfs[0]), blur(obj, otfs[1])};
  const Image2D rec = apply_filters(ys, gw_filters(otfs, 1e-8));
  const Field2D X = fft_centered(to_field(obj)), R = fft_centered(to_field(rec));
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (std::norm(otfs[0].response[k]) + std::norm(otfs[1].response[k]) <= 1e-3) continue;
    ++checked;
    worst = std::max(worst, std::abs(R[k] - X[k]) / std::abs(X[k]));
  }
  return {worst < 1e-3 && checked > 0, fmt("max relative error %.2e over %zu frequencies", worst, checked)};
}

Outcome cascaded_contrast() {
  const RegSpec reg;
  // Bar target, 1% noise on each shot.
  const Grid gb(128);
  const std::vector<OTF2D> ob{otf_of(gb, ApertureKind::open, 25), otf_of(gb, ApertureKind::vortex, 25)};
  const Image2D bars = to_image(synthetic::bar_target(128, 8));
  const std::vector<Image2D> ys{add_noise(blur(bars, ob[0]), {0.01, 1}), add_noise(blur(bars, ob[1]), {0.01, 2})};
  const Image2D rec_gw = apply_filters(ys, gw_filters(ob, reg.kappa));
  const Image2D rec_cas = cascaded_gw(ys, ob, reg);
  const double c_gw = contrast(line_profile(rec_gw, 64)), c_cas = contrast(line_profile(rec_cas, 64));
  // Ringing can push the cascade below zero; the win must also hold once
  // both rows are clipped to physical (non-negative) intensity.
  const auto clipped = [](std::vector<double> p) {
    for (auto& x : p) x = std::max(x, 0.0);
    return contrast(p);
  };
  const double k_gw = clipped(line_profile(rec_gw, 64)), k_cas = clipped(line_profile(rec_cas, 64));

  // Filter response above half the cutoff, every in-band frequency.
  const Grid g(256);
  const std::vector<OTF2D> otfs{otf_of(g, ApertureKind::open, 50), otf_of(g, ApertureKind::vortex, 50)};
  const Image2D rg = point_source_response(otfs, gw_filters(otfs, reg.kappa));
  const Image2D rc = point_source_response(otfs, cascaded_filters(otfs, reg));
  std::size_t in_band = 0, wins = 0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::size_t j = 0; j < g.n(); ++j) {
      if (std::hypot(g.u(j), g.v(i)) <= 50.0) continue;
      const std::size_t k = i * g.n() + j;
      if (std::norm(otfs[0].response[k]) + std::norm(otfs[1].response[k]) <= 1e-3) continue;
      ++in_band;
      wins += rc[k] > rg[k];
    }
  }
  const double frac = in_band ? static_cast<double>(wins) / static_cast<double>(in_band) : 0.0;
  return {c_cas > c_gw && k_cas > k_gw && frac >= 0.8,
          fmt("contrast cascaded %.4f vs GW %.4f (clipped %.4f vs %.4f); high-frequency wins %zu/%zu (%.1f%%)", c_cas,
              c_gw, k_cas, k_gw, wins, in_band, 100.0 * frac)};
}

Outcome twin_symmetry_and_null() {
  const Grid g(64);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Field2D x = oracle::random_field(g, seed);
    const Image2D a = modulus(fft_centered(x)), b = modulus(fft_centered(twin(x)));
    for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  }
  const Grid w(256);
  const Mask disk = centered_disk(w, 50);
  Field2D obj(w);
  for (std::size_t k = 0; k < w.size(); ++k) obj[k] = disk[k] ? 1.0 : 0.0;
  const double center = fourier_amplitude(obj, Illumination::vortex)[w.index_of(0, 0)];
  const double area = static_cast<double>(count(disk));
  return {worst < 1e-12 && center < 1e-10 * area,
          fmt("twin modulus max diff %.2e; vortex disk center amplitude %.2e (bound %.2e)", worst, center,
              1e-10 * area)};
}

Outcome diversity_quality() {
  const Grid g(256);
  double lowest = 1.0;
  std::size_t ok = 0, total = 0;
  for (std::uint64_t o = 0; o < 5; ++o) {
    const PhaseObject obj = embed_phase_object(synthetic::garment(o), g, 100);
    const Image2D y1 = fourier_amplitude(obj, Illumination::plane);
    const Image2D y2 = fourier_amplitude(obj, Illumination::vortex);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      RetrievalConfig cfg;
      cfg.seed = seed;
      const RetrievalResult r = diversity_retrieve(y1, y2, obj.support, cfg);
      const double s = aligned_phase_ssim(r.field, obj.phase, obj.support, obj.phi_max);
      lowest = std::min(lowest, s);
      ok += s >= 0.95;
      ++total;
    }
  }
  return {ok == total, fmt("%zu/%zu runs with SSIM >= 0.95, lowest %.4f", ok, total, lowest)};
}

Outcome twin_stagnation() {
  const Grid g(128);
  const PhaseObject obj = embed_phase_object(synthetic::scene(64, 7), g, 49);
  const Image2D y1 = fourier_amplitude(obj, Illumination::plane);
  const Image2D y2 = fourier_amplitude(obj, Illumination::vortex);
  const Field2D tw = twin(obj.field);
  std::size_t hio_twin = 0, div_truth = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RetrievalConfig cfg;
    cfg.seed = seed;
    const Field2D h = hio(y1, obj.support, cfg).field;
    hio_twin += aligned_correlation(h, tw) > aligned_correlation(h, obj.field);
    const Field2D d = diversity_retrieve(y1, y2, obj.support, cfg).field;
    div_truth += aligned_correlation(d, obj.field) > aligned_correlation(d, tw);
  }
  return {hio_twin >= 1 && div_truth == 20,
          fmt("HIO closer to twin in %zu/20 runs; diversity closer to truth in %zu/20", hio_twin, div_truth)};
}

Outcome forward_oracles() {
  const Grid g(16);
  double blur_err = 0.0, amp_err = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto kind : {ApertureKind::open, ApertureKind::vortex}) {
      const PSF psf = psf_from_pupil(make_aperture(g, kind, 4));
      const Image2D obj = oracle::random_image(g, seed);
      blur_err = std::max(blur_err, oracle::max_abs_diff(blur(obj, psf), oracle::circular_convolve(obj, psf.image)));
    }
    const Field2D x = oracle::random_field(g, 100 + seed);
    Field2D xv(g);
    for (std::size_t i = 0; i < g.n(); ++i) {
      for (std::size_t j = 0; j < g.n(); ++j) {
        const double u = static_cast<double>(g.u(j)), v = static_cast<double>(g.v(i));
        xv(i, j) = (u == 0.0 && v == 0.0) ? complex_t{} : x(i, j) * std::polar(1.0, std::atan2(v, u));
      }
    }
    const Field2D ref_plane = oracle::dft_centered(x, -1), ref_vortex = oracle::dft_centered(xv, -1);
    const Image2D ap = fourier_amplitude(x, Illumination::plane), av = fourier_amplitude(x, Illumination::vortex);
    for (std::size_t k = 0; k < g.size(); ++k) {
      amp_err = std::max({amp_err, std::abs(ap[k] - std::abs(ref_plane[k])), std::abs(av[k] - std::abs(ref_vortex[k]))});
    }
  }
  return {blur_err < 1e-8 && amp_err < 1e-8,
          fmt("blur vs spatial convolution %.2e; amplitudes vs direct DFT %.2e", blur_err, amp_err)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + VORTEXDIV_CLI_PATH + "\" --log-level error " + args + " > /dev/null";
  return std::system(cmd.c_str());
}

// Every regular file under `dir`, keyed by relative path.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Scratch {
  fs::path root;
  explicit Scratch(const std::string& tag) {
    root = fs::temp_directory_path() / ("vortexdiv_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root / "src");
    for (std::uint64_t i = 0; i < 4; ++i) {
      write_pgm(root / "src" / ("img" + std::to_string(i) + ".pgm"), synthetic::scene(48, i));
    }
  }
  ~Scratch() { fs::remove_all(root); }
};

// Runs the three pipeline stages into `out`; returns false on any non-zero exit.
bool pipeline(const fs::path& src, const fs::path& out) {
  const std::string o = "--seed 5 --output-dir \"" + out.string() + "\" ";
  const std::string inc = (out / "inc").string(), coh = (out / "coh").string();
  return run_cli(o + "gen-dataset --subset test --regime incoherent --grid-n 64 --radius 12 --src \"" + src.string() +
                 "\" --out inc") == 0 &&
         run_cli(o + "gen-dataset --subset test --regime coherent --grid-n 64 --support 25 --src \"" + src.string() +
                 "\" --out coh") == 0 &&
         run_cli(o + "deconvolve --method cascaded --otf-radius 12 --y1 " + inc + "/test/y1/0000.pdt --y2 " + inc +
                 "/test/y2/0000.pdt --truth " + inc + "/test/truth/0000.pdt --name dec") == 0 &&
         run_cli(o + "retrieve --method diversity --support 25 --iters 120 --y1 " + coh + "/test/y1/0000.pdt --y2 " + coh +
                 "/test/y2/0000.pdt --truth " + coh + "/test/truth/0000.pdt --name ret") == 0;
}

Outcome determinism() {
  const Scratch s("det");
  const bool ok_a = pipeline(s.root / "src", s.root / "a");
  const bool ok_b = pipeline(s.root / "src", s.root / "b");
  if (!ok_a || !ok_b) return {false, "a CLI stage exited non-zero"};
  const auto a = snapshot(s.root / "a"), b = snapshot(s.root / "b");
  std::size_t same = 0;
  for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) same += a[k] == b[k];
  return {a.size() == b.size() && same == a.size() && !a.empty(),
          fmt("%zu/%zu output files byte-identical across two runs", same, a.size())};
}

Outcome identity_pseudo() {
  const Scratch s("pseudo");
  const fs::path out = s.root / "out";
  const std::string o = "--seed 3 --output-dir \"" + out.string() + "\" ";
  if (run_cli(o + "gen-dataset --subset test --regime incoherent --grid-n 64 --radius 12 --src \"" + (s.root / "src").string() +
              "\" --out inc") != 0 ||
      run_cli(o + "gen-dataset --subset test --regime coherent --grid-n 64 --support 25 --src \"" + (s.root / "src").string() +
              "\" --out coh") != 0) {
    return {false, "gen-dataset failed"};
  }
  const fs::path inc = out / "inc", coh = out / "coh";

  // Library seam: ingest returns the stored data untouched.
  const PseudoPair pair = ingest_pseudo(coh / "test" / "y1" / "0000.pdt", coh / "test" / "y2" / "0000.pdt");
  const Tensor raw = read_tensor(coh / "test" / "y2" / "0000.pdt");
  bool seam = pair.warnings.empty() && pair.y2p.size() == raw.data.size();
  for (std::size_t k = 0; seam && k < raw.data.size(); ++k) seam = pair.y2p[k] == static_cast<double>(raw.data[k]);

  // CLI seam: same file passed as true and pseudo second shot.
  std::size_t identical = 0, compared = 0;
  const auto both = [&](const std::string& stage, const fs::path& dir, const std::string& stem) {
    const std::string y1 = (dir / "test" / "y1" / "0000.pdt").string(), y2 = (dir / "test" / "y2" / "0000.pdt").string();
    const bool ok = run_cli(o + stage + " --y1 " + y1 + " --y2 " + y2 + " --name " + stem + "_true") == 0 &&
                    run_cli(o + stage + " --y1 " + y1 + " --y2-pseudo " + y2 + " --name " + stem + "_pseudo") == 0;
    if (!ok) return;
    for (const char* suffix : {".pdt", "_metrics.json"}) {
      ++compared;
      identical += slurp(out / (stem + "_true" + suffix)) == slurp(out / (stem + "_pseudo" + suffix));
    }
  };
  both("deconvolve --method cascaded --otf-radius 12", inc, "dec");
  both("retrieve --method diversity --support 25 --iters 120", coh, "ret");
  return {seam && compared == 4 && identical == compared,
          fmt("ingest returns stored values exactly: %s; %zu/%zu reconstruction outputs bit-identical",
              seam ? "yes" : "no", identical, compared)};
}

struct Criterion {
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"otf-shape", 1.0, otf_shape},
      {"gw-perfect-reconstruction", 1.0, gw_perfect_reconstruction},
      {"cascaded-contrast", 5.0, cascaded_contrast},
      {"twin-symmetry-and-vortex-null", 1.0, twin_symmetry_and_null},
      {"diversity-retrieval-quality", 120.0, diversity_quality},
      {"twin-stagnation-contrast", 300.0, twin_stagnation},
      {"forward-model-oracles", 10.0, forward_oracles},
      {"determinism", 0.0, determinism},
      {"identity-pseudo-pass-through", 0.0, identity_pseudo},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s == 0.0 || secs < c.budget_s;
    const bool pass = out.pass && in_time;
    failures += !pass;
    std::string timing = fmt("%.2fs", secs);
    if (c.budget_s > 0.0) timing += fmt(" of %.0fs budget", c.budget_s);
    std::printf("%s %s: %s [%s]\n", pass ? "PASS" : "FAIL", c.name, out.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
