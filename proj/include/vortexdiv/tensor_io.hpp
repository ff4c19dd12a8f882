#pragma once

// Self-describing tensor file: one UTF-8 JSON header line
//   {"magic":"PDT1","dtype":"f32","shape":[h,w],"byte_order":"LE","layout":"row-major","meta":{...}}
// terminated by '\n', immediately followed by 4 * prod(shape) bytes of
// little-endian IEEE-754 binary32 values in row-major order.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "vortexdiv/grid.hpp"

namespace vortexdiv {

inline constexpr const char* kTensorMagic = "PDT1";
inline constexpr std::size_t kMaxHeaderBytes = 1 << 20;

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t rows() const { return shape.at(shape.size() - 2); }
  std::size_t cols() const { return shape.back(); }
};

namespace detail {

inline std::size_t checked_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (auto d : shape) {
    if (d == 0) throw FormatError("tensor shape has a zero dimension");
    if (p > std::numeric_limits<std::size_t>::max() / 4 / d) throw FormatError("tensor shape overflows");
    p *= d;
  }
  return p;
}

inline std::uint32_t to_le(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((x & 0xFFu) << 24) | ((x & 0xFF00u) << 8) | ((x >> 8) & 0xFF00u) | (x >> 24);
  }
  return x;
}

}  // namespace detail

/// Writes to a temporary sibling and renames it into place.
inline void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  detail::require(t.shape.size() == 2 || t.shape.size() == 3, "tensor rank must be 2 or 3");
  if (detail::checked_product(t.shape) != t.data.size()) {
    throw InvalidArgument("tensor data size does not match shape");
  }
  nlohmann::ordered_json header;
  header["magic"] = kTensorMagic;
  header["dtype"] = "f32";
  header["shape"] = t.shape;
  header["byte_order"] = "LE";
  header["layout"] = "row-major";
  header["meta"] = t.meta.is_null() ? nlohmann::json::object() : t.meta;

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot open '" + tmp.string() + "' for writing");
    const std::string line = header.dump() + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    std::vector<std::uint32_t> words(t.data.size());
    for (std::size_t k = 0; k < t.data.size(); ++k) {
      words[k] = detail::to_le(std::bit_cast<std::uint32_t>(t.data[k]));
    }
    out.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
    if (!out) throw InputError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

inline Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");

  std::string line;
  char c = 0;
  while (in.get(c) && c != '\n') {
    line.push_back(c);
    if (line.size() > kMaxHeaderBytes) throw FormatError(path.string() + ": header line too long");
  }
  if (c != '\n') throw FormatError(path.string() + ": missing header terminator");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": corrupt header: " + e.what());
  }
  if (!header.is_object()) throw FormatError(path.string() + ": header is not an object");
  if (header.value("magic", "") != kTensorMagic) {
    throw FormatError(path.string() + ": bad magic '" + header.value("magic", "") + "'");
  }
  if (header.value("dtype", "") != "f32") {
    throw FormatError(path.string() + ": unsupported dtype '" + header.value("dtype", "") + "'");
  }
  if (header.value("byte_order", "LE") != "LE" || header.value("layout", "row-major") != "row-major") {
    throw FormatError(path.string() + ": unsupported byte order or layout");
  }
  Tensor t;
  const auto shape_it = header.find("shape");
  if (shape_it == header.end() || !shape_it->is_array()) throw FormatError(path.string() + ": missing shape");
  for (const auto& d : *shape_it) {
    if (!d.is_number_unsigned()) throw FormatError(path.string() + ": shape must be a list of positive integers");
    t.shape.push_back(d.get<std::size_t>());
  }
  if (t.shape.size() != 2 && t.shape.size() != 3) throw FormatError(path.string() + ": rank must be 2 or 3");
  const std::size_t count = detail::checked_product(t.shape);
  if (header.contains("meta")) t.meta = header["meta"];

  std::vector<std::uint32_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * 4));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != count * 4) {
    throw TruncationError(path.string() + ": truncated payload, expected " + std::to_string(count * 4) +
                          " bytes, got " + std::to_string(got));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after payload");
  }
  t.data.resize(count);
  for (std::size_t k = 0; k < count; ++k) t.data[k] = std::bit_cast<float>(detail::to_le(words[k]));
  return t;
}

inline Tensor to_tensor(const Image2D& img, nlohmann::json meta = nlohmann::json::object()) {
  Tensor t{{img.n(), img.n()}, std::vector<float>(img.size()), std::move(meta)};
  for (std::size_t k = 0; k < img.size(); ++k) t.data[k] = static_cast<float>(img[k]);
  return t;
}

/// Complex field as shape [2, h, w]: real plane then imaginary plane.
inline Tensor to_tensor(const Field2D& f, nlohmann::json meta = nlohmann::json::object()) {
  Tensor t{{2, f.n(), f.n()}, std::vector<float>(2 * f.size()), std::move(meta)};
  for (std::size_t k = 0; k < f.size(); ++k) {
    t.data[k] = static_cast<float>(f[k].real());
    t.data[f.size() + k] = static_cast<float>(f[k].imag());
  }
  return t;
}

namespace detail {
inline Grid tensor_grid(std::size_t n) {
  try {
    return Grid(n);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("tensor is not on a valid grid: ") + e.what());
  }
}
}  // namespace detail

inline Image2D image_from_tensor(const Tensor& t) {
  if (t.shape.size() != 2 || t.shape[0] != t.shape[1]) {
    throw FormatError("expected a square 2D tensor");
  }
  Image2D img{detail::tensor_grid(t.shape[0])};
  for (std::size_t k = 0; k < img.size(); ++k) img[k] = static_cast<double>(t.data[k]);
  return img;
}

inline Field2D field_from_tensor(const Tensor& t) {
  if (t.shape.size() == 2) return to_field(image_from_tensor(t));
  if (t.shape.size() != 3 || t.shape[0] != 2 || t.shape[1] != t.shape[2]) {
    throw FormatError("expected a [2, n, n] complex tensor");
  }
  Field2D f{detail::tensor_grid(t.shape[1])};
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = {t.data[k], t.data[f.size() + k]};
  return f;
}

inline Image2D read_image(const std::filesystem::path& path) { return image_from_tensor(read_tensor(path)); }

inline void write_image(const std::filesystem::path& path, const Image2D& img,
                        nlohmann::json meta = nlohmann::json::object()) {
  write_tensor(path, to_tensor(img, std::move(meta)));
}

}  // namespace vortexdiv
