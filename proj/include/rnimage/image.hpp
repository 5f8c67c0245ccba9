#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rnimage/error.hpp"

namespace rnimage {

/// Grayscale image with intensities in [0,1], row-major: pixel (tx, ty) is
/// stored at ty*width + tx.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}

  bool empty() const noexcept { return pixels.empty(); }
  double& at(std::size_t tx, std::size_t ty) { return pixels[ty * width + tx]; }
  double at(std::size_t tx, std::size_t ty) const { return pixels[ty * width + tx]; }
};

/// Byte quantization: round half up, clamped to [0,255].
inline std::uint8_t quantize(double intensity) {
  const double v = std::floor(intensity * 255.0 + 0.5);
  if (!(v > 0.0)) return 0;  // also catches NaN
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v);
}

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long read_number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (value > 1'000'000'000UL) throw IoError(std::string("PGM ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) throw IoError(std::string("PGM header: missing ") + what);
    return value;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance() noexcept { ++pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses a binary (P5) PGM with maxval <= 255.
inline GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw IoError("PGM: bad magic (expected P5)");
  detail::PgmHeaderReader hdr(bytes.subspan(2));
  const auto width = hdr.read_number("width");
  const auto height = hdr.read_number("height");
  const auto maxval = hdr.read_number("maxval");
  if (maxval == 0 || maxval > 255) throw IoError("PGM: maxval must be in [1,255], got " + std::to_string(maxval));
  if (width == 0 || height == 0) throw IoError("PGM: empty image");
  // exactly one whitespace byte separates header from raster
  const std::size_t ws = 2 + hdr.pos();
  if (ws >= bytes.size() || !std::isspace(bytes[ws])) throw IoError("PGM: truncated header");
  const std::size_t data = ws + 1;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  if (bytes.size() - data < count)
    throw IoError("PGM: truncated payload (" + std::to_string(bytes.size() - data) + " of " +
                  std::to_string(count) + " bytes)");
  GrayImage img(width, height);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) img.pixels[i] = std::min(1.0, bytes[data + i] * scale);
  return img;
}

inline GrayImage read_pgm(std::string_view bytes) {
  return read_pgm(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

/// "P5\n<w> <h>\n255\n" followed by quantized bytes.
inline std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
  const std::string header = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + img.pixels.size());
  for (double v : img.pixels) out.push_back(quantize(v));
  return out;
}

inline GrayImage read_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_pgm(bytes);
}

inline void write_pgm_file(const std::string& path, const GrayImage& img) {
  const auto bytes = write_pgm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

struct ImageMetrics {
  double max_abs = 0.0;
  double rmse = 0.0;
  double psnr = std::numeric_limits<double>::infinity();  // +inf when identical
};

inline ImageMetrics image_metrics(const GrayImage& a, const GrayImage& b) {
  if (a.width != b.width || a.height != b.height) throw InvalidArgument("image_metrics: dimension mismatch");
  ImageMetrics m;
  if (a.pixels.empty()) return m;
  double sq = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    m.max_abs = std::max(m.max_abs, std::abs(d));
    sq += d * d;
  }
  m.rmse = std::sqrt(sq / static_cast<double>(a.pixels.size()));
  m.psnr = m.rmse > 0.0 ? 20.0 * std::log10(1.0 / m.rmse) : std::numeric_limits<double>::infinity();
  return m;
}

}  // namespace rnimage
