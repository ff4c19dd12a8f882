#pragma once

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "vortexdiv/raster.hpp"
#include "vortexdiv/tensor_io.hpp"

namespace vortexdiv {

/// ITU-R BT.601 luminance.
inline double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

namespace detail {

inline std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

inline Raster decode_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw InputError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InputError(path.string() + ": " + image.message);
  }
  Raster r(image.height, image.width);
  for (std::size_t k = 0; k < r.data.size(); ++k) {
    r.data[k] = luminance(buf[3 * k], buf[3 * k + 1], buf[3 * k + 2]) / 255.0;
  }
  return r;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline Raster decode_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw InputError("cannot open '" + path.string() + "'");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  // Only trivially destructible objects live across the setjmp boundary.
  std::vector<unsigned char>* pixels = new std::vector<unsigned char>();
  JDIMENSION width = 0, height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    delete pixels;
    throw InputError(path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = cinfo.output_width;
  height = cinfo.output_height;
  pixels->resize(static_cast<std::size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels->data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  Raster r(height, width);
  for (std::size_t k = 0; k < r.data.size(); ++k) {
    r.data[k] = luminance((*pixels)[3 * k], (*pixels)[3 * k + 1], (*pixels)[3 * k + 2]) / 255.0;
  }
  delete pixels;
  return r;
}

inline void skip_pnm_space(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

// Binary and ASCII PGM/PPM (P2, P3, P5, P6).
inline Raster decode_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    throw InputError(path.string() + ": not a PGM/PPM file");
  }
  std::size_t w = 0, h = 0, maxval = 0;
  skip_pnm_space(in);
  in >> w;
  skip_pnm_space(in);
  in >> h;
  skip_pnm_space(in);
  in >> maxval;
  if (!in || w == 0 || h == 0 || maxval == 0 || maxval > 65535) throw InputError(path.string() + ": bad PNM header");
  in.get();
  const bool color = magic == "P3" || magic == "P6";
  const bool binary = magic == "P5" || magic == "P6";
  const std::size_t channels = color ? 3 : 1;
  std::vector<double> samples(w * h * channels);
  if (binary) {
    const std::size_t bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(samples.size() * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw InputError(path.string() + ": truncated PNM data");
    for (std::size_t k = 0; k < samples.size(); ++k) {
      samples[k] = bytes == 2 ? (raw[2 * k] << 8) | raw[2 * k + 1] : raw[k];
    }
  } else {
    for (auto& s : samples) {
      in >> s;
      if (!in) throw InputError(path.string() + ": truncated PNM data");
    }
  }
  Raster r(h, w);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t k = 0; k < r.data.size(); ++k) {
    r.data[k] = color ? luminance(samples[3 * k], samples[3 * k + 1], samples[3 * k + 2]) * scale : samples[k] * scale;
  }
  return r;
}

}  // namespace detail

inline bool is_supported_image(const std::filesystem::path& p) {
  const auto ext = detail::lower_extension(p);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm" ||
         ext == ".pdt";
}

/// Decodes PNG, JPEG, PGM/PPM or a 2D tensor file into a grayscale raster.
/// Color images are reduced with BT.601 luminance weights; 8-bit formats
/// are scaled to [0, 1].
inline Raster load_grayscale(const std::filesystem::path& path) {
  const auto ext = detail::lower_extension(path);
  if (ext == ".png") return detail::decode_png(path);
  if (ext == ".jpg" || ext == ".jpeg") return detail::decode_jpeg(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return detail::decode_pnm(path);
  if (ext == ".pdt") {
    const Tensor t = read_tensor(path);
    if (t.shape.size() != 2) throw InputError(path.string() + ": expected a 2D tensor");
    Raster r(t.shape[0], t.shape[1]);
    std::copy(t.data.begin(), t.data.end(), r.data.begin());
    return r;
  }
  throw InputError(path.string() + ": unsupported image format");
}

/// Binary 8-bit PGM writer, used for small test corpora.
inline void write_pgm(const std::filesystem::path& path, const Raster& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << r.cols << " " << r.rows << "\n255\n";
  for (double v : r.data) {
    out.put(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(v * 255.0), 0L, 255L))));
  }
}

/// 8-bit grayscale PNG for visualization, min-max normalized. The mapping
/// is written to a sidecar `<path>.json` as {"min": .., "max": ..}.
inline void export_png(const std::filesystem::path& path, const Image2D& img) {
  const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
  const double a = *lo, span = *hi - *lo;
  std::vector<png_byte> px(img.size());
  for (std::size_t k = 0; k < img.size(); ++k) {
    const double t = span > 0.0 ? (img[k] - a) / span : 0.0;
    px[k] = static_cast<png_byte>(std::clamp(std::lround(t * 255.0), 0L, 255L));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.n());
  image.height = static_cast<png_uint_32>(img.n());
  image.format = PNG_FORMAT_GRAY;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&image, path.c_str(), 0, px.data(), 0, nullptr)) {
    throw InputError(path.string() + ": " + image.message);
  }
  nlohmann::ordered_json side;
  side["min"] = a;
  side["max"] = *hi;
  side["mapping"] = "byte = round(255 * (value - min) / (max - min))";
  std::ofstream(path.string() + ".json") << side.dump(2) << "\n";
}

}  // namespace vortexdiv
