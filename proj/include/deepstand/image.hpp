// Copyright 2026 The DeepStand Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DEEPSTAND_IMAGE_HPP_
#define DEEPSTAND_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "deepstand/tensor.hpp"

namespace deepstand {

/// Planar (C,H,W) image with values in [0, 1].
struct Image {
  int channels = 3;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w),
        pixels(static_cast<std::size_t>(c) * h * w, fill) {
    require(c >= 1 && h >= 1 && w >= 1, "image extents must be >= 1");
  }

  float& at(int c, int y, int x) {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Rounds every value to the nearest k/255 so the image survives an 8-bit
/// round trip unchanged.
inline void quantize8(Image& img) {
  for (auto& v : img.pixels) v = std::round(std::clamp(v, 0.0f, 1.0f) * 255.0f) / 255.0f;
}

/// Bilinear resize by a uniform scale. Output extent is ceil(extent * scale);
/// sample positions follow the continuous mapping x_src = x_dst / scale, so
/// annotations scale by exactly the same factor.
inline Image resize_bilinear(const Image& src, double scale) {
  require(scale > 0.0, "scale must be positive");
  const int oh = static_cast<int>(std::ceil(src.height * scale - 1e-9));
  const int ow = static_cast<int>(std::ceil(src.width * scale - 1e-9));
  require(oh >= 1 && ow >= 1, "scaled image extent < 1");
  Image out(src.channels, oh, ow);
  std::vector<int> x0(ow), x1(ow);
  std::vector<float> fx(ow);
  for (int x = 0; x < ow; ++x) {
    const double sx = std::clamp((x + 0.5) / scale - 0.5, 0.0, src.width - 1.0);
    x0[x] = static_cast<int>(std::floor(sx));
    x1[x] = std::min(x0[x] + 1, src.width - 1);
    fx[x] = static_cast<float>(sx - x0[x]);
  }
  for (int y = 0; y < oh; ++y) {
    const double sy = std::clamp((y + 0.5) / scale - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const float fy = static_cast<float>(sy - y0);
    for (int c = 0; c < src.channels; ++c) {
      for (int x = 0; x < ow; ++x) {
        const float top = src.at(c, y0, x0[x]) * (1 - fx[x]) + src.at(c, y0, x1[x]) * fx[x];
        const float bot = src.at(c, y1, x0[x]) * (1 - fx[x]) + src.at(c, y1, x1[x]) * fx[x];
        out.at(c, y, x) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

inline Image flip_horizontal(const Image& src) {
  Image out = src;
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < src.height; ++y)
      for (int x = 0; x < src.width; ++x) out.at(c, y, x) = src.at(c, y, src.width - 1 - x);
  return out;
}

inline Image crop(const Image& src, int top, int left, int h, int w) {
  require(top >= 0 && left >= 0 && top + h <= src.height && left + w <= src.width,
          "crop window out of range");
  Image out(src.channels, h, w);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = src.at(c, top + y, left + x);
  return out;
}

/// Packs images of identical size into an N,C,H,W tensor.
template <typename T = float>
Tensor<T> to_batch(const std::vector<const Image*>& images) {
  require(!images.empty(), "empty batch");
  const Image& f = *images.front();
  Tensor<T> out({images.size(), static_cast<std::size_t>(f.channels),
                 static_cast<std::size_t>(f.height), static_cast<std::size_t>(f.width)});
  std::size_t off = 0;
  for (const Image* img : images) {
    require(img->channels == f.channels && img->height == f.height && img->width == f.width,
            "batch images differ in size");
    for (float v : img->pixels) out[off++] = static_cast<T>(v);
  }
  return out;
}

template <typename T = float>
Tensor<T> to_tensor(const Image& img) {
  return to_batch<T>({&img});
}

/// Pixel values in [0, 1] are fed to the network as (v - 0.5) / 0.25.
inline constexpr double kInputCenter = 0.5;
inline constexpr double kInputScale = 4.0;

/// Network input for a batch of images: centered and scaled pixels.
template <typename T = float>
Tensor<T> to_network_input(const std::vector<const Image*>& images) {
  Tensor<T> t = to_batch<T>(images);
  for (auto& v : t.data()) v = static_cast<T>((v - kInputCenter) * kInputScale);
  return t;
}

template <typename T = float>
Tensor<T> to_network_input(const Image& img) {
  return to_network_input<T>(std::vector<const Image*>{&img});
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

}  // namespace detail

/// Writes an 8-bit RGB (or gray, for 1 channel) PNG.
inline void write_png(const std::filesystem::path& path, const Image& img) {
  require(img.channels == 1 || img.channels == 3, "PNG output needs 1 or 3 channels");
  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw DataError("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw DataError("libpng initialisation failed");
  }
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<std::size_t>(x) * img.channels + c] = detail::to_byte(img.at(c, y, x));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Reads any PNG as 3-channel RGB in [0, 1].
inline Image read_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw DataError("cannot open image '" + path.string() + "'");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError("'" + path.string() + "' is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng initialisation failed");
  }
  Image img;
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("corrupt PNG '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  buf.resize(stride * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + stride * y;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  img = Image(3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(c, y, x) = rows[y][static_cast<std::size_t>(x) * 3 + c] / 255.0f;
  return img;
}

/// Binary PGM (P5) or PPM (P6), 8-bit; returned as 3-channel RGB.
inline Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image '" + path.string() + "'");
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  auto skip = [&] {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
  };
  in >> magic;
  skip();
  in >> w;
  skip();
  in >> h;
  skip();
  in >> maxval;
  in.get();
  if (!in || (magic != "P5" && magic != "P6") || w < 1 || h < 1 || maxval != 255)
    throw DataError("unsupported PNM file '" + path.string() + "'");
  const int c = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * c);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!in) throw DataError("truncated PNM file '" + path.string() + "'");
  Image img(3, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch)
        img.at(ch, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * c + (c == 3 ? ch : 0)] / 255.0f;
  return img;
}

inline void write_pnm(const std::filesystem::path& path, const Image& img) {
  require(img.channels == 1 || img.channels == 3, "PNM output needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << (img.channels == 3 ? "P6" : "P5") << '\n' << img.width << ' ' << img.height << "\n255\n";
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) out.put(static_cast<char>(detail::to_byte(img.at(c, y, x))));
}

/// Dispatches on extension: .png, otherwise netpbm.
inline Image read_image(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") return read_png(path);
  return read_pnm(path);
}

inline void write_image(const std::filesystem::path& path, const Image& img) {
  const auto ext = path.extension().string();
  if (ext == ".png" || ext == ".PNG") return write_png(path, img);
  write_pnm(path, img);
}

}  // namespace deepstand

#endif  // DEEPSTAND_IMAGE_HPP_
