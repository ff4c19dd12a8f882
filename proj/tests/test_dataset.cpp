#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "oracles.hpp"
#include "vortexdiv/dataset.hpp"
#include "vortexdiv/synthetic.hpp"

using namespace vortexdiv;
namespace fs = std::filesystem;

namespace {

class DatasetTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("vortexdiv_ds_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_ / "src");
  }
  void TearDown() override { fs::remove_all(root_); }

  // Non-square, differently sized sources exercise the resize path.
  void make_corpus(std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      const Raster s = synthetic::scene(40, i);
      write_pgm(root_ / "src" / ("img" + std::to_string(i) + ".pgm"), resize_bilinear(s, 40 + i, 52));
    }
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path root_;
};

DatasetParams small_incoherent() {
  DatasetParams p;
  p.grid_n = 64;
  p.aperture_radius_px = 12;
  p.seed = 7;
  return p;
}

bool within_f32_rounding(float stored, double exact) {
  const double tol = std::max(std::abs(exact) * std::ldexp(1.0, -23), 1e-12);
  return std::abs(static_cast<double>(stored) - exact) <= tol;
}

}  // namespace

TEST_F(DatasetTest, ToyCorpusProducesValidManifest) {
  make_corpus(10);
  const DatasetManifest m = gen_incoherent_pairs(root_ / "src", root_ / "out", small_incoherent());
  ASSERT_EQ(m.entries.size(), 10u);
  std::size_t train = 0, val = 0;
  for (const auto& e : m.entries) {
    train += e.subset == "train";
    val += e.subset == "val";
    for (const auto* rel : {&e.y1_path, &e.y2_path, &e.truth_path}) EXPECT_TRUE(fs::exists(root_ / "out" / *rel));
  }
  EXPECT_EQ(train, 9u);
  EXPECT_EQ(val, 1u);
  EXPECT_EQ(m.entries[3].y1_path, m.entries[3].subset + "/y1/0003.pdt");
  EXPECT_TRUE(check_manifest(root_ / "out" / "manifest.json").empty());

  const DatasetManifest back = read_manifest(root_ / "out" / "manifest.json");
  EXPECT_EQ(back.regime, Regime::incoherent);
  EXPECT_EQ(back.params["grid_n"], 64);
  EXPECT_DOUBLE_EQ(back.params["noise_fraction"].get<double>(), 0.01);
  EXPECT_DOUBLE_EQ(back.train_fraction, 0.85);
  EXPECT_EQ(back.entries.size(), 10u);
}

TEST_F(DatasetTest, TruthIsNormalizedResizedSource) {
  make_corpus(1);
  gen_incoherent_pairs(root_ / "src", root_ / "out", small_incoherent());
  const Image2D truth = read_image(root_ / "out" / "train" / "truth" / "0000.pdt");
  const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
  EXPECT_EQ(*lo, 0.0);
  EXPECT_EQ(*hi, 1.0);
}

TEST_F(DatasetTest, TestSubsetPutsEverythingUnderTest) {
  make_corpus(3);
  DatasetParams p = small_incoherent();
  p.subset = Subset::test;
  const auto m = gen_incoherent_pairs(root_ / "src", root_ / "out", p);
  for (const auto& e : m.entries) EXPECT_EQ(e.subset, "test");
  EXPECT_TRUE(fs::exists(root_ / "out" / "test" / "y2" / "0002.pdt"));
}

TEST_F(DatasetTest, NoiselessFirstShotMatchesSpatialConvolution) {
  make_corpus(1);
  DatasetParams p = small_incoherent();
  p.noise_fraction = 0.0;
  gen_incoherent_pairs(root_ / "src", root_ / "out", p);
  const Tensor y1 = read_tensor(root_ / "out" / "train" / "y1" / "0000.pdt");
  const Tensor y2 = read_tensor(root_ / "out" / "train" / "y2" / "0000.pdt");
  const Grid g(64);
  const Image2D truth = prepare_intensity_object(load_grayscale(root_ / "src" / "img0.pgm"), 64);
  const Image2D psf1 = psf_from_pupil(open_aperture(g, 12)).image;
  const Image2D psf2 = psf_from_pupil(spiral_aperture(g, 12)).image;
  const Image2D ref1 = oracle::circular_convolve(truth, psf1);
  const Image2D ref2 = oracle::circular_convolve(truth, psf2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    ASSERT_TRUE(within_f32_rounding(y1.data[k], ref1[k])) << k << ": " << y1.data[k] << " vs " << ref1[k];
    ASSERT_TRUE(within_f32_rounding(y2.data[k], ref2[k])) << k << ": " << y2.data[k] << " vs " << ref2[k];
  }
}

TEST_F(DatasetTest, ShotNoiseIsIndependent) {
  write_pgm(root_ / "src" / "a.pgm", synthetic::scene(256, 11));
  DatasetParams p;
  p.seed = 3;
  gen_incoherent_pairs(root_ / "src", root_ / "out", p);
  const Grid g(256);
  const Image2D truth = read_image(root_ / "out" / "train" / "truth" / "0000.pdt");
  const Image2D y1 = read_image(root_ / "out" / "train" / "y1" / "0000.pdt");
  const Image2D y2 = read_image(root_ / "out" / "train" / "y2" / "0000.pdt");
  const Image2D b1 = blur(truth, otf_from_psf(psf_from_pupil(open_aperture(g, 50))));
  const Image2D b2 = blur(truth, otf_from_psf(psf_from_pupil(spiral_aperture(g, 50))));
  double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double n1 = y1[k] - b1[k], n2 = y2[k] - b2[k];
    s1 += n1;
    s2 += n2;
    s11 += n1 * n1;
    s22 += n2 * n2;
    s12 += n1 * n2;
  }
  const double n = static_cast<double>(g.size());
  const double r = (s12 / n - s1 * s2 / (n * n)) /
                   std::sqrt((s11 / n - s1 * s1 / (n * n)) * (s22 / n - s2 * s2 / (n * n)));
  EXPECT_LT(std::abs(r), 0.05);
  const double sd1 = std::sqrt(s11 / n - s1 * s1 / (n * n));
  EXPECT_GT(sd1, 0.005);
}

TEST_F(DatasetTest, DeterministicAcrossRunsAndThreadCounts) {
  make_corpus(5);
  DatasetParams p = small_incoherent();
  p.threads = 1;
  gen_incoherent_pairs(root_ / "src", root_ / "a", p);
  p.threads = 3;
  gen_incoherent_pairs(root_ / "src", root_ / "b", p);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(root_ / "a")) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), root_ / "a");
    ASSERT_EQ(slurp(e.path()), slurp(root_ / "b" / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 16u);
  p.seed = 8;
  gen_incoherent_pairs(root_ / "src", root_ / "c", p);
  EXPECT_NE(slurp(root_ / "a" / "manifest.json"), slurp(root_ / "c" / "manifest.json"));
}

TEST_F(DatasetTest, CoherentAmplitudesRoundTripThroughGamma) {
  make_corpus(2);
  DatasetParams p;
  p.grid_n = 32;
  p.support_size = 13;
  const auto m = gen_coherent_pairs(root_ / "src", root_ / "out", p);
  EXPECT_DOUBLE_EQ(read_manifest(root_ / "out" / "manifest.json").params["gamma"].get<double>(), 0.1);
  const auto& e = m.entries[0];
  const PhaseObject obj =
      embed_phase_object(load_grayscale(root_ / "src" / e.source), Grid(32), 13, kDefaultPhiMax);
  const Image2D oracle_amp = modulus(oracle::dft_centered(obj.field));
  const Image2D y1 = gamma_unscale(read_image(root_ / "out" / e.y1_path));
  for (std::size_t k = 0; k < y1.size(); ++k) {
    EXPECT_LE(std::abs(y1[k] - oracle_amp[k]), 1e-6 * oracle_amp[k] + 1e-12) << k;
  }
  const Image2D truth = read_image(root_ / "out" / e.truth_path);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    EXPECT_NEAR(truth[k], obj.phase[k], 1e-6);
  }
  EXPECT_TRUE(check_manifest(root_ / "out" / "manifest.json").empty());
}

TEST_F(DatasetTest, CoherentVortexNullSurvivesGammaScaling) {
  // A constant source becomes a uniform object on an odd (centro-symmetric) box.
  write_pgm(root_ / "src" / "flat.pgm", Raster(20, 20, 0.5));
  DatasetParams p;
  p.grid_n = 64;
  p.support_size = 21;
  gen_coherent_pairs(root_ / "src", root_ / "out", p);
  const Image2D y1 = read_image(root_ / "out" / "train" / "y1" / "0000.pdt");
  const Image2D y2 = read_image(root_ / "out" / "train" / "y2" / "0000.pdt");
  const std::size_t c = Grid(64).index_of(0, 0);
  EXPECT_EQ(y2[c], 0.0);
  EXPECT_GT(y1[c], 1.0);
}

TEST_F(DatasetTest, EmptyOrBrokenSourcesAreInputErrors) {
  EXPECT_THROW(gen_incoherent_pairs(root_ / "src", root_ / "out", small_incoherent()), InputError);
  EXPECT_THROW(gen_incoherent_pairs(root_ / "nope", root_ / "out", small_incoherent()), InputError);
  make_corpus(2);
  std::ofstream(root_ / "src" / "bad.png") << "garbage";
  try {
    gen_incoherent_pairs(root_ / "src", root_ / "out", small_incoherent());
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.png"), std::string::npos) << e.what();
  }
  EXPECT_FALSE(fs::exists(root_ / "out" / "manifest.json"));
}

TEST_F(DatasetTest, ManifestCheckReportsProblems) {
  make_corpus(3);
  gen_incoherent_pairs(root_ / "src", root_ / "out", small_incoherent());
  const auto m = read_manifest(root_ / "out" / "manifest.json");
  fs::remove(root_ / "out" / m.entries[1].y2_path);
  write_image(root_ / "out" / m.entries[2].truth_path, Image2D(Grid(32)));
  const auto problems = check_manifest(root_ / "out" / "manifest.json");
  ASSERT_EQ(problems.size(), 2u);
  EXPECT_NE(problems[0].find("0001"), std::string::npos);
  EXPECT_NE(problems[1].find("unexpected shape"), std::string::npos);

  std::ofstream(root_ / "bad.json") << R"({"format":"vortexdiv-manifest/1","regime":"coherent","params":{},)"
                                    << R"("split":{"train_fraction":0.85,"val_fraction":0.15},"entries":[]})";
  const auto missing = check_manifest(root_ / "bad.json");
  EXPECT_EQ(missing.size(), 5u);
  EXPECT_EQ(check_manifest(root_ / "absent.json").size(), 1u);
}

TEST_F(DatasetTest, SplitFractionsMustSumToOne) {
  make_corpus(1);
  DatasetParams p = small_incoherent();
  p.train_fraction = 0.5;
  EXPECT_THROW(gen_incoherent_pairs(root_ / "src", root_ / "out", p), InvalidArgument);
}

TEST_F(DatasetTest, IngestAcceptsIdentityPseudoData) {
  const Image2D y = oracle::random_image(Grid(16), 1);
  write_image(root_ / "y1.pdt", y);
  write_image(root_ / "y2.pdt", y, nlohmann::json{{"provenance", "oracle pass-through"}});
  const PseudoPair pair = ingest_pseudo(root_ / "y1.pdt", root_ / "y2.pdt");
  EXPECT_EQ(pair.provenance, "oracle pass-through");
  EXPECT_TRUE(pair.warnings.empty());
  EXPECT_EQ(pair.y2p, read_image(root_ / "y2.pdt"));
}

TEST_F(DatasetTest, IngestRejectsBadValuesAndShapes) {
  Image2D y = oracle::random_image(Grid(16), 1);
  write_image(root_ / "y1.pdt", y);
  Image2D bad = y;
  bad[10] = std::numeric_limits<double>::quiet_NaN();
  write_image(root_ / "nan.pdt", bad);
  bad[10] = -0.5;
  write_image(root_ / "neg.pdt", bad);
  bad[10] = std::numeric_limits<double>::infinity();
  write_image(root_ / "inf.pdt", bad);
  write_image(root_ / "small.pdt", Image2D(Grid(8)));
  EXPECT_THROW(ingest_pseudo(root_ / "y1.pdt", root_ / "nan.pdt"), FormatError);
  EXPECT_THROW(ingest_pseudo(root_ / "y1.pdt", root_ / "neg.pdt"), FormatError);
  EXPECT_THROW(ingest_pseudo(root_ / "y1.pdt", root_ / "inf.pdt"), FormatError);
  EXPECT_THROW(ingest_pseudo(root_ / "y1.pdt", root_ / "small.pdt"), FormatError);
  EXPECT_THROW(ingest_pseudo(root_ / "y1.pdt", root_ / "missing.pdt"), InputError);
}

TEST_F(DatasetTest, IngestWarnsWhenCoherentScaleLooksWrong) {
  const Grid g(32);
  const PhaseObject obj = embed_phase_object(synthetic::scene(16, 1), g, 13);
  const Image2D amp = fourier_amplitude(obj, Illumination::vortex);
  write_image(root_ / "y1.pdt", gamma_scale(fourier_amplitude(obj, Illumination::plane)),
              nlohmann::json{{"regime", "coherent"}, {"gamma", 0.1}});
  write_image(root_ / "ok.pdt", gamma_scale(amp));
  write_image(root_ / "raw.pdt", gamma_scale(amp, GammaScale(1.0)));
  EXPECT_TRUE(ingest_pseudo(root_ / "y1.pdt", root_ / "ok.pdt").warnings.empty());
  EXPECT_EQ(ingest_pseudo(root_ / "y1.pdt", root_ / "raw.pdt").warnings.size(), 1u);
}
