// vortexdiv: dataset generation, deconvolution, phase retrieval and
// evaluation from the command line. See README.md for the flag reference.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vortexdiv/vortexdiv.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vortexdiv;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kInput = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string output_dir = ".";
  std::string log_level = "info";

  Level level() const {
    if (log_level == "error") return Level::error;
    if (log_level == "warn") return Level::warn;
    if (log_level == "debug") return Level::debug;
    return Level::info;
  }
};

Globals g_opts;

void log(Level lvl, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (lvl <= g_opts.level()) std::cerr << "[" << names[static_cast<int>(lvl)] << "] " << msg << "\n";
}

void echo_config(const std::string& subcommand, json options) {
  json cfg;
  cfg["subcommand"] = subcommand;
  cfg["seed"] = g_opts.seed;
  cfg["threads"] = g_opts.threads;
  cfg["output_dir"] = g_opts.output_dir;
  cfg["log_level"] = g_opts.log_level;
  cfg["options"] = std::move(options);
  log(Level::info, "config " + cfg.dump());
}

// Every output path is interpreted relative to --output-dir; absolute paths
// are accepted only when they already point inside it.
fs::path output_path(const fs::path& rel) {
  const fs::path root = fs::absolute(g_opts.output_dir).lexically_normal();
  const fs::path full = (rel.is_absolute() ? rel : root / rel).lexically_normal();
  const auto mismatch = std::mismatch(root.begin(), root.end(), full.begin(), full.end());
  if (mismatch.first != root.end() && !(std::next(mismatch.first) == root.end() && mismatch.first->empty())) {
    throw UsageError("output path '" + rel.string() + "' is outside --output-dir '" + root.string() + "'");
  }
  if (full.has_parent_path()) fs::create_directories(full.parent_path());
  return full;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + tmp.string() + "'");
    out << text;
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no infinity; identical images report PSNR as the string "inf".
json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Image2D first_image(const std::string& path) {
  const Tensor t = read_tensor(path);
  if (t.shape.size() == 3 && t.shape[0] == 2) return modulus(field_from_tensor(t));
  return image_from_tensor(t);
}

// --y2 or --y2-pseudo; the pseudo path goes through ingestion checks.
std::optional<Image2D> second_shot(const std::string& y1, const std::string& y2, const std::string& y2p) {
  if (!y2.empty() && !y2p.empty()) throw UsageError("--y2 and --y2-pseudo are mutually exclusive");
  if (!y2.empty()) return read_image(y2);
  if (!y2p.empty()) {
    PseudoPair pair = ingest_pseudo(y1, y2p);
    for (const auto& w : pair.warnings) log(Level::warn, w);
    log(Level::info, "pseudo second shot from '" + y2p + "' (provenance: " + pair.provenance + ")");
    return std::move(pair.y2p);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- gen-dataset

struct GenOpts {
  std::string regime, src, out;
  DatasetParams p;
  std::string subset = "split";
};

int run_gen_dataset(GenOpts& o) {
  o.p.seed = g_opts.seed;
  o.p.threads = g_opts.threads;
  o.p.val_fraction = 1.0 - o.p.train_fraction;
  if (o.subset != "split" && o.subset != "test") throw UsageError("--subset must be split or test");
  o.p.subset = o.subset == "test" ? Subset::test : Subset::split;
  const Regime regime = parse_regime(o.regime);
  json opts{{"regime", o.regime},         {"src", o.src},
            {"out", o.out},               {"grid_n", o.p.grid_n},
            {"subset", o.subset},         {"train_fraction", o.p.train_fraction}};
  if (regime == Regime::incoherent) {
    opts["aperture_radius_px"] = o.p.aperture_radius_px;
    opts["noise_fraction"] = o.p.noise_fraction;
  } else {
    opts["support_size"] = o.p.support_size;
    opts["phi_max"] = o.p.phi_max;
    opts["gamma"] = o.p.gamma;
  }
  echo_config("gen-dataset", opts);
  const fs::path out = output_path(o.out);
  const DatasetManifest m = generate_dataset(regime, o.src, out, o.p);
  log(Level::info, "wrote " + std::to_string(m.entries.size()) + " entries to " + out.string());
  std::cout << json{{"manifest", (out / "manifest.json").string()}, {"entries", m.entries.size()}}.dump() << "\n";
  return kOk;
}

// ----------------------------------------------------------------- deconvolve

struct DeconvOpts {
  std::string method, y1, y2, y2_pseudo, truth;
  double otf_radius = 50.0;
  RegSpec reg;
  std::size_t tv_steps = 0;
  double tv_step_size = 0.05;
  std::optional<std::size_t> row;
  bool png = false;
  std::string name = "recon";
};

json image_metrics(const Image2D& pred, const Image2D& truth) {
  return json{{"mse", mse(pred, truth)},
              {"psnr_db", number_or_inf(psnr(pred, truth))},
              {"ssim", ssim(pred, truth)},
              {"hybrid_loss", hybrid_loss(pred, truth)}};
}

int run_deconvolve(DeconvOpts& o) {
  if (o.method != "wiener" && o.method != "gw" && o.method != "cascaded") {
    throw UsageError("--method must be wiener, gw or cascaded");
  }
  const bool two_shot = o.method != "wiener";
  const bool has_second = !o.y2.empty() || !o.y2_pseudo.empty();
  if (two_shot && !has_second) throw UsageError("--method " + o.method + " needs --y2 or --y2-pseudo");
  if (!two_shot && has_second) throw UsageError("--method wiener takes a single shot; drop --y2/--y2-pseudo");
  o.reg.validate();

  echo_config("deconvolve", json{{"method", o.method},
                                 {"y1", o.y1},
                                 {"y2", o.y2},
                                 {"y2_pseudo", o.y2_pseudo},
                                 {"truth", o.truth},
                                 {"otf_radius", o.otf_radius},
                                 {"kappa", o.reg.kappa},
                                 {"kappa_w", o.reg.kappa_w},
                                 {"tv_steps", o.tv_steps},
                                 {"tv_step_size", o.tv_step_size},
                                 {"name", o.name}});

  const Image2D y1 = read_image(o.y1);
  const Grid& grid = y1.grid();
  const OTF2D open = otf_from_psf(psf_from_pupil(open_aperture(grid, o.otf_radius)));

  Image2D recon(grid);
  std::optional<Image2D> gw_reference;
  if (!two_shot) {
    const FreqFilter w = wiener_filter(open, o.reg.kappa);
    recon = apply_filters(std::span(&y1, 1), std::span(&w, 1));
  } else {
    const Image2D y2 = *second_shot(o.y1, o.y2, o.y2_pseudo);
    require_same_grid(y1, y2, "deconvolve");
    const OTF2D vortex = otf_from_psf(psf_from_pupil(spiral_aperture(grid, o.otf_radius)));
    const std::vector<OTF2D> otfs{open, vortex};
    const std::vector<Image2D> ys{y1, y2};
    const Image2D gw = apply_filters(ys, gw_filters(otfs, o.reg.kappa));
    if (o.method == "gw") {
      recon = gw;
    } else {
      recon = cascaded_gw(ys, otfs, o.reg);
      gw_reference = gw;
    }
  }
  if (o.tv_steps > 0) {
    recon = tv_reduce(recon, o.tv_steps, o.tv_step_size);
    if (gw_reference) gw_reference = tv_reduce(*gw_reference, o.tv_steps, o.tv_step_size);
  }

  const std::size_t row = o.row.value_or(grid.n() / 2);
  if (row >= grid.n()) throw UsageError("--row is outside the image");
  json metrics;
  metrics["method"] = o.method;
  metrics["profile_row"] = row;
  metrics["contrast"] = contrast(line_profile(recon, row));
  if (gw_reference) metrics["contrast_gw_reference"] = contrast(line_profile(*gw_reference, row));
  if (!o.truth.empty()) {
    const Image2D truth = read_image(o.truth);
    require_same_grid(truth, recon, "deconvolve --truth");
    metrics["truth"] = image_metrics(recon, truth);
  }

  write_image(output_path(o.name + ".pdt"), recon,
              nlohmann::json{{"kind", "reconstruction"}, {"method", o.method}, {"source", fs::path(o.y1).filename()}});
  if (o.png) export_png(output_path(o.name + ".png"), recon);
  write_json(output_path(o.name + "_metrics.json"), metrics);
  std::cout << metrics.dump() << "\n";
  return kOk;
}

// ------------------------------------------------------------------- retrieve

struct RetrieveOpts {
  std::string method, y1, y2, y2_pseudo, truth;
  std::size_t support = 100;
  double gamma = 0.1;
  double phi_max = kDefaultPhiMax;
  double converged_below = 1e-2;
  std::string constraint = "support+unit-modulus";
  RetrievalConfig cfg;
  std::string name = "field";
};

int run_retrieve(RetrieveOpts& o) {
  if (o.method != "hio" && o.method != "diversity") throw UsageError("--method must be hio or diversity");
  const bool has_second = !o.y2.empty() || !o.y2_pseudo.empty();
  if (o.method == "diversity" && !has_second) throw UsageError("--method diversity needs --y2 or --y2-pseudo");
  if (o.method == "hio" && has_second) throw UsageError("--method hio is single-shot; drop --y2/--y2-pseudo");
  o.cfg.seed = g_opts.seed;
  o.cfg.constraint = parse_constraint(o.constraint);
  o.cfg.validate();
  const GammaScale gs(o.gamma);

  echo_config("retrieve", json{{"method", o.method},
                               {"y1", o.y1},
                               {"y2", o.y2},
                               {"y2_pseudo", o.y2_pseudo},
                               {"truth", o.truth},
                               {"support", o.support},
                               {"iters", o.cfg.total_iters},
                               {"final_plain", o.cfg.final_plain_iters},
                               {"beta", o.cfg.beta},
                               {"twin_check", o.cfg.twin_check_interval},
                               {"constraint", o.constraint},
                               {"gamma", o.gamma},
                               {"phi_max", o.phi_max},
                               {"name", o.name}});

  const Image2D y1 = gamma_unscale(read_image(o.y1), gs);
  if (o.support == 0 || o.support >= y1.n()) throw UsageError("--support must be in [1, grid size)");
  const Mask support = centered_box(y1.grid(), o.support);

  const RetrievalResult r = [&] {
    if (o.method == "hio") return hio(y1, support, o.cfg);
    const Image2D y2 = gamma_unscale(*second_shot(o.y1, o.y2, o.y2_pseudo), gs);
    return diversity_retrieve(y1, y2, support, o.cfg);
  }();

  json metrics;
  metrics["method"] = o.method;
  metrics["iterations_run"] = r.iterations_run;
  metrics["final_residual"] = r.residual_history.empty() ? 0.0 : r.residual_history.back();
  metrics["converged"] = !r.residual_history.empty() && r.residual_history.back() < o.converged_below;
  metrics["twin_flips"] = r.twin_flips;
  if (!o.truth.empty()) {
    const Image2D phase = read_image(o.truth);
    require_same_grid(phase, y1, "retrieve --truth");
    Field2D truth_field(phase.grid());
    for (std::size_t k = 0; k < phase.size(); ++k) truth_field[k] = support[k] ? std::polar(1.0, phase[k]) : 0.0;
    const Field2D flipped = twin(r.field);
    metrics["aligned_phase_ssim"] = aligned_phase_ssim(r.field, phase, support, o.phi_max);
    metrics["twin_aligned_phase_ssim"] = aligned_phase_ssim(flipped, phase, support, o.phi_max);
    metrics["truth_correlation"] = aligned_correlation(r.field, truth_field);
    metrics["twin_correlation"] = aligned_correlation(r.field, twin(truth_field));
  }
  if (!metrics["converged"].get<bool>()) log(Level::warn, "retrieval did not reach the residual threshold");

  write_tensor(output_path(o.name + ".pdt"),
               to_tensor(r.field, nlohmann::json{{"kind", "retrieved_field"}, {"method", o.method}}));
  std::string csv = "iteration,residual\n";
  for (std::size_t t = 0; t < r.residual_history.size(); ++t) {
    csv += std::to_string(t + 1) + "," + fmt_double(r.residual_history[t]) + "\n";
  }
  write_text(output_path(o.name + "_residual.csv"), csv);
  write_json(output_path(o.name + "_metrics.json"), metrics);
  std::cout << metrics.dump() << "\n";
  return kOk;
}

// ------------------------------------------------------------------- evaluate

struct EvalOpts {
  std::string pred, ref;
  double alpha = 1.0;
  std::optional<double> dynamic_range;
  std::string name = "evaluate";
};

std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> match_pairs(const fs::path& pred,
                                                                               const fs::path& ref) {
  std::vector<std::pair<std::string, std::pair<fs::path, fs::path>>> out;
  if (!fs::is_directory(pred)) {
    out.push_back({pred.filename().string(), {pred, ref}});
    return out;
  }
  if (!fs::is_directory(ref)) throw UsageError("--pred is a directory, so --ref must be one too");
  std::vector<fs::path> rels;
  for (const auto& e : fs::recursive_directory_iterator(pred)) {
    if (e.is_regular_file() && e.path().extension() == ".pdt") rels.push_back(fs::relative(e.path(), pred));
  }
  std::sort(rels.begin(), rels.end());
  for (const auto& rel : rels) {
    if (!fs::exists(ref / rel)) throw InputError("no reference for '" + rel.string() + "'");
    out.push_back({rel.generic_string(), {pred / rel, ref / rel}});
  }
  if (out.empty()) throw InputError("no .pdt files under '" + pred.string() + "'");
  return out;
}

json mean_sd(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (!std::isfinite(mean)) return json{{"mean", number_or_inf(mean)}, {"sd", nullptr}};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return json{{"mean", mean}, {"sd", sd}};
}

int run_evaluate(EvalOpts& o) {
  echo_config("evaluate", json{{"pred", o.pred},
                               {"ref", o.ref},
                               {"alpha", o.alpha},
                               {"dynamic_range", o.dynamic_range ? json(*o.dynamic_range) : json(nullptr)},
                               {"name", o.name}});
  SsimParams sp;
  sp.dynamic_range = o.dynamic_range;
  std::vector<double> mses, psnrs, ssims, losses;
  json pairs = json::array();
  for (const auto& [name, paths] : match_pairs(o.pred, o.ref)) {
    const Image2D a = first_image(paths.first.string()), b = first_image(paths.second.string());
    require_same_grid(a, b, "evaluate");
    mses.push_back(mse(a, b));
    psnrs.push_back(psnr(a, b));
    ssims.push_back(ssim(a, b, sp));
    losses.push_back(hybrid_loss(a, b, o.alpha, sp));
    pairs.push_back(json{{"name", name},
                         {"mse", mses.back()},
                         {"psnr_db", number_or_inf(psnrs.back())},
                         {"ssim", ssims.back()},
                         {"hybrid_loss", losses.back()}});
  }
  json report;
  report["pairs"] = pairs;
  report["aggregate"] = json{{"count", pairs.size()},
                             {"mse", mean_sd(mses)},
                             {"psnr_db", mean_sd(psnrs)},
                             {"ssim", mean_sd(ssims)},
                             {"hybrid_loss", mean_sd(losses)}};
  write_json(output_path(o.name + ".json"), report);
  std::cout << report["aggregate"].dump() << "\n";
  return kOk;
}

// -------------------------------------------------------------------- profile

struct ProfileOpts {
  std::string input;
  std::optional<std::size_t> row;
  std::string name = "profile";
};

int run_profile(ProfileOpts& o) {
  echo_config("profile", json{{"input", o.input}, {"row", o.row ? json(*o.row) : json(nullptr)}, {"name", o.name}});
  const Image2D img = first_image(o.input);
  const std::size_t row = o.row.value_or(img.n() / 2);
  if (row >= img.n()) throw UsageError("--row is outside the image");
  const auto prof = line_profile(img, row);
  std::string csv = "index,value\n";
  for (std::size_t j = 0; j < prof.size(); ++j) csv += std::to_string(j) + "," + fmt_double(prof[j]) + "\n";
  write_text(output_path(o.name + ".csv"), csv);
  return kOk;
}

// ------------------------------------------------------------------------ psf

struct PsfOpts {
  std::string aperture = "open";
  double radius = 50.0;
  std::size_t grid_n = 256;
  bool png = false;
};

int run_psf(PsfOpts& o) {
  const ApertureKind kind = parse_aperture(o.aperture);
  echo_config("psf", json{{"aperture", to_string(kind)}, {"radius", o.radius}, {"grid_n", o.grid_n}});
  const Grid grid(o.grid_n);
  const PSF psf = psf_from_pupil(make_aperture(grid, kind, o.radius));
  const OTF2D otf = otf_from_psf(psf);
  const nlohmann::json meta{{"aperture", to_string(kind)}, {"radius", o.radius}};
  const std::string stem = std::string(to_string(kind));
  auto with_kind = [&](const char* k) {
    auto m = meta;
    m["kind"] = k;
    return m;
  };
  write_image(output_path(stem + "_psf.pdt"), psf.image, with_kind("psf"));
  write_tensor(output_path(stem + "_otf.pdt"), to_tensor(otf.response, with_kind("otf")));
  if (o.png) {
    export_png(output_path(stem + "_psf.png"), psf.image);
    export_png(output_path(stem + "_otf_abs.png"), modulus(otf.response));
  }
  return kOk;
}

// ------------------------------------------------------------ manifest-check

int run_manifest_check(const std::string& manifest) {
  echo_config("manifest-check", json{{"manifest", manifest}});
  const auto problems = check_manifest(manifest);
  for (const auto& p : problems) std::cout << p << "\n";
  if (!problems.empty()) {
    log(Level::error, std::to_string(problems.size()) + " problem(s) in " + manifest);
    return kInput;
  }
  std::cout << "ok\n";
  return kOk;
}

// --------------------------------------------------------------------- ingest

struct IngestOpts {
  std::string y1, y2p, y2;
  std::string name = "ingest";
};

int run_ingest(IngestOpts& o) {
  echo_config("ingest", json{{"y1", o.y1}, {"y2p", o.y2p}, {"y2", o.y2}, {"name", o.name}});
  const PseudoPair pair = ingest_pseudo(o.y1, o.y2p);
  for (const auto& w : pair.warnings) log(Level::warn, w);
  json report{{"accepted", true}, {"provenance", pair.provenance}, {"warnings", pair.warnings}};
  if (!o.y2.empty()) {
    const Image2D y2 = read_image(o.y2);
    require_same_grid(y2, pair.y2p, "ingest --y2");
    report["ssim_y2_y2p"] = ssim(pair.y2p, y2);
    log(Level::info, "SSIM(y2, y2p) = " + fmt_double(report["ssim_y2_y2p"].get<double>()));
  }
  write_json(output_path(o.name + ".json"), report);
  std::cout << report.dump() << "\n";
  return kOk;
}

int report_error(const char* kind, const std::string& msg, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vortex phase-diversity imaging: datasets, deconvolution, phase retrieval"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  app.add_option("--seed", g_opts.seed, "Master random seed");
  app.add_option("--threads", g_opts.threads, "Worker threads for batch work")->check(CLI::Range(1u, 1024u));
  app.add_option("--output-dir", g_opts.output_dir, "Directory receiving every output file");
  app.add_option("--log-level", g_opts.log_level, "error|warn|info|debug")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  GenOpts gen;
  auto* c_gen = app.add_subcommand("gen-dataset", "Generate paired (y1, y2, truth) tensors from an image folder");
  c_gen->add_option("--regime", gen.regime, "incoherent|coherent")->required()->check(
      CLI::IsMember({"incoherent", "coherent"}));
  c_gen->add_option("--src", gen.src, "Folder of source images")->required();
  c_gen->add_option("--out", gen.out, "Dataset directory (under --output-dir)")->required();
  c_gen->add_option("--grid-n", gen.p.grid_n, "Grid / window size");
  c_gen->add_option("--radius", gen.p.aperture_radius_px, "Aperture radius in pixels (incoherent)");
  c_gen->add_option("--noise", gen.p.noise_fraction, "Noise sigma as a fraction of the image max (incoherent)");
  c_gen->add_option("--support", gen.p.support_size, "Support side length (coherent)");
  c_gen->add_option("--phi-max", gen.p.phi_max, "Maximum phase in radians (coherent)");
  c_gen->add_option("--gamma", gen.p.gamma, "Amplitude exponent for storage (coherent)");
  c_gen->add_option("--train-fraction", gen.p.train_fraction, "Train share of the train/val split");
  c_gen->add_option("--subset", gen.subset, "split (train/val) or test");

  DeconvOpts dec;
  auto* c_dec = app.add_subcommand("deconvolve", "Wiener, generalized Wiener or cascaded deconvolution");
  c_dec->add_option("--method", dec.method, "wiener|gw|cascaded")->required();
  c_dec->add_option("--y1", dec.y1, "Open-aperture measurement")->required();
  c_dec->add_option("--y2", dec.y2, "Vortex-aperture measurement");
  c_dec->add_option("--y2-pseudo", dec.y2_pseudo, "Pseudo second shot (validated on ingest)");
  c_dec->add_option("--truth", dec.truth, "Ground truth for metrics");
  c_dec->add_option("--otf-radius", dec.otf_radius, "Aperture radius used to model the OTFs");
  c_dec->add_option("--kappa", dec.reg.kappa, "Regularization of the multi-shot stage");
  c_dec->add_option("--kappa-w", dec.reg.kappa_w, "Regularization of the per-aperture Wiener stage");
  c_dec->add_option("--tv-steps", dec.tv_steps, "Total-variation descent steps after filtering");
  c_dec->add_option("--tv-step-size", dec.tv_step_size, "Total-variation descent step size");
  c_dec->add_option("--row", dec.row, "Row used for the contrast profile (default: center)");
  c_dec->add_flag("--png", dec.png, "Also export a PNG preview");
  c_dec->add_option("--name", dec.name, "Output file stem");

  RetrieveOpts ret;
  auto* c_ret = app.add_subcommand("retrieve", "Phase retrieval from gamma-scaled Fourier amplitudes");
  c_ret->add_option("--method", ret.method, "hio|diversity")->required();
  c_ret->add_option("--y1", ret.y1, "Plane-wave amplitude (gamma-scaled)")->required();
  c_ret->add_option("--y2", ret.y2, "Vortex amplitude (gamma-scaled)");
  c_ret->add_option("--y2-pseudo", ret.y2_pseudo, "Pseudo vortex amplitude (validated on ingest)");
  c_ret->add_option("--truth", ret.truth, "True phase map for metrics");
  c_ret->add_option("--support", ret.support, "Side of the centered square support");
  c_ret->add_option("--iters", ret.cfg.total_iters, "Total iterations");
  c_ret->add_option("--final-plain", ret.cfg.final_plain_iters, "Trailing y1-only iterations (diversity)");
  c_ret->add_option("--beta", ret.cfg.beta, "Feedback parameter");
  c_ret->add_option("--twin-check", ret.cfg.twin_check_interval, "Twin comparison interval, 0 disables");
  c_ret->add_option("--constraint", ret.constraint, "support|support+unit-modulus");
  c_ret->add_option("--gamma", ret.gamma, "Exponent the inputs were stored with");
  c_ret->add_option("--phi-max", ret.phi_max, "Phase range for SSIM normalization");
  c_ret->add_option("--converged-below", ret.converged_below, "Residual threshold reported as converged");
  c_ret->add_option("--name", ret.name, "Output file stem");

  EvalOpts ev;
  auto* c_ev = app.add_subcommand("evaluate", "MSE, PSNR, SSIM and hybrid loss per pair plus mean and SD");
  c_ev->add_option("--pred", ev.pred, "Prediction tensor or directory")->required();
  c_ev->add_option("--ref", ev.ref, "Reference tensor or directory")->required();
  c_ev->add_option("--alpha", ev.alpha, "Hybrid loss SSIM weight");
  c_ev->add_option("--dynamic-range", ev.dynamic_range, "SSIM dynamic range (default: joint range)");
  c_ev->add_option("--name", ev.name, "Output file stem");

  ProfileOpts pr;
  auto* c_pr = app.add_subcommand("profile", "Row profile of an image or |complex tensor| as CSV");
  c_pr->add_option("--input", pr.input, "Tensor file")->required();
  c_pr->add_option("--row", pr.row, "Row index (default: center)");
  c_pr->add_option("--name", pr.name, "Output file stem");

  PsfOpts ps;
  auto* c_ps = app.add_subcommand("psf", "Write the PSF and OTF of an aperture");
  c_ps->add_option("--aperture", ps.aperture, "open|vortex");
  c_ps->add_option("--radius", ps.radius, "Aperture radius in pixels");
  c_ps->add_option("--grid-n", ps.grid_n, "Grid size");
  c_ps->add_flag("--png", ps.png, "Also export PNG previews");

  std::string manifest;
  auto* c_mc = app.add_subcommand("manifest-check", "Validate a dataset manifest and its files");
  c_mc->add_option("--manifest", manifest, "manifest.json path")->required();

  IngestOpts ing;
  auto* c_in = app.add_subcommand("ingest", "Validate a pseudo second shot against its first shot");
  c_in->add_option("--y1", ing.y1, "First-shot tensor")->required();
  c_in->add_option("--y2p", ing.y2p, "Pseudo second-shot tensor")->required();
  c_in->add_option("--y2", ing.y2, "True second shot, for reporting SSIM");
  c_in->add_option("--name", ing.name, "Output file stem");

  for (auto* sub : app.get_subcommands([](const CLI::App*) { return true; })) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (c_gen->parsed()) return run_gen_dataset(gen);
    if (c_dec->parsed()) return run_deconvolve(dec);
    if (c_ret->parsed()) return run_retrieve(ret);
    if (c_ev->parsed()) return run_evaluate(ev);
    if (c_pr->parsed()) return run_profile(pr);
    if (c_ps->parsed()) return run_psf(ps);
    if (c_mc->parsed()) return run_manifest_check(manifest);
    if (c_in->parsed()) return run_ingest(ing);
  } catch (const UsageError& e) {
    return report_error("usage", e.what(), kUsage);
  } catch (const InvalidArgument& e) {
    return report_error("usage", e.what(), kUsage);
  } catch (const InputError& e) {
    return report_error("input", e.what(), kInput);
  } catch (const FormatError& e) {
    return report_error("format", e.what(), kInput);
  } catch (const Error& e) {
    return report_error("numerical", e.what(), kNumerical);
  } catch (const fs::filesystem_error& e) {
    return report_error("input", e.what(), kInput);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), kNumerical);
  }
  return kUsage;
}
