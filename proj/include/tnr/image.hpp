// 8-bit RGB raster plus PNG read/write through libpng's simplified API.

#ifndef TNR_IMAGE_HPP_
#define TNR_IMAGE_HPP_

#include <png.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace tnr {

/// Interleaved RGB, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(std::size_t(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) {
    return rgb.data() + (std::size_t(y) * width + x) * 3;
  }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (std::size_t(y) * width + x) * 3;
  }

  double mean() const {
    if (rgb.empty()) return 0.0;
    double s = 0.0;
    for (auto v : rgb) s += v;
    return s / static_cast<double>(rgb.size());
  }

  friend bool operator==(const Image&, const Image&) = default;
};

struct StereoImage {
  Image left;
  Image right;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void write_png(const Image& img, const std::string& path) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&pi, path.c_str(), 0, img.rgb.data(), 0,
                               nullptr))
    throw ImageError("write_png '" + path + "': " + pi.message);
}

inline Image read_png(const std::string& path) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str()))
    throw ImageError("read_png '" + path + "': " + pi.message);
  pi.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(pi.width), static_cast<int>(pi.height));
  if (!png_image_finish_read(&pi, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw ImageError("read_png '" + path + "': " + pi.message);
  }
  return img;
}

/// Nearest-neighbour resize; used only when ingesting externally supplied
/// images whose size differs from the network input.
inline Image resize_nearest(const Image& src, int w, int h) {
  if (src.width == w && src.height == h) return src;
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = std::min(src.height - 1, y * src.height / h);
    for (int x = 0; x < w; ++x) {
      const int sx = std::min(src.width - 1, x * src.width / w);
      std::memcpy(out.pixel(x, y), src.pixel(sx, sy), 3);
    }
  }
  return out;
}

}  // namespace tnr

#endif  // TNR_IMAGE_HPP_
