#include "vlut/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include "vlut/error.hpp"

namespace vlut::io {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(Errc::io_error, "cannot open " + path.string());
  return f;
}

// Decoded PNG in its native bit depth; samples are stored unscaled.
struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;  // 1 or 3 after alpha stripping
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

RawPng read_png_raw(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw Error(Errc::load_error, "not a PNG file: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::load_error, "libpng init failed");
  }
  RawPng out;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::load_error, "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * out.height);
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i)
      out.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = buffer[i];
  }
  return out;
}

void write_png_raw(const std::filesystem::path& path, int width, int height, int channels,
                   int bit_depth, const std::vector<std::uint16_t>& samples) {
  if (bit_depth != 8 && bit_depth != 16)
    throw Error(Errc::invalid_argument, "PNG bit depth must be 8 or 16");
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io_error, "libpng init failed");
  }
  const int bytes = bit_depth / 8;
  const std::size_t rowbytes = static_cast<std::size_t>(width) * channels * bytes;
  std::vector<unsigned char> buffer(rowbytes * height);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (bytes == 2) {
      buffer[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
    } else {
      buffer[i] = static_cast<unsigned char>(samples[i]);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + rowbytes * y;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::io_error, "PNG write failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::uint16_t quantize(float v, int bit_depth) {
  const double maxv = bit_depth == 16 ? 65535.0 : 255.0;
  if (!std::isfinite(v)) return 0;
  return static_cast<std::uint16_t>(std::lround(std::clamp<double>(v, 0.0, 1.0) * maxv));
}

template <int C>
void write_png_image(const std::filesystem::path& path, const Image<C>& img, int bit_depth) {
  std::vector<std::uint16_t> samples(img.data().size());
  std::transform(img.data().begin(), img.data().end(), samples.begin(),
                 [&](float v) { return quantize(v, bit_depth); });
  write_png_raw(path, img.width(), img.height(), C, bit_depth, samples);
}

struct PfmData {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> samples;  // top row first
};

PfmData read_pfm_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::string magic;
  in >> magic;
  PfmData out;
  if (magic == "PF") out.channels = 3;
  else if (magic == "Pf") out.channels = 1;
  else throw Error(Errc::load_error, "not a PFM file: " + path.string());
  double scale = 0.0;
  in >> out.width >> out.height >> scale;
  if (!in || out.width <= 0 || out.height <= 0 || scale == 0.0)
    throw Error(Errc::load_error, "bad PFM header: " + path.string());
  in.get();  // single whitespace byte before the raster
  const bool little = scale < 0.0;
  const std::size_t row = static_cast<std::size_t>(out.width) * out.channels;
  std::vector<float> raster(row * out.height);
  in.read(reinterpret_cast<char*>(raster.data()),
          static_cast<std::streamsize>(raster.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(raster.size() * sizeof(float)))
    throw Error(Errc::load_error, "truncated PFM: " + path.string());
  if (little != (std::endian::native == std::endian::little)) {
    for (float& f : raster) {
      std::uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }
  // PFM stores the bottom row first.
  out.samples.resize(raster.size());
  for (int y = 0; y < out.height; ++y)
    std::copy_n(raster.begin() + row * (out.height - 1 - y), row, out.samples.begin() + row * y);
  return out;
}

template <int C>
void write_pfm_image(const std::filesystem::path& path, const Image<C>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path.string());
  static_assert(std::endian::native == std::endian::little);
  out << (C == 3 ? "PF" : "Pf") << "\n" << img.width() << " " << img.height() << "\n-1.0\n";
  const std::size_t row = static_cast<std::size_t>(img.width()) * C;
  for (int y = img.height() - 1; y >= 0; --y)
    out.write(reinterpret_cast<const char*>(img.data().data() + row * y),
              static_cast<std::streamsize>(row * sizeof(float)));
  if (!out) throw Error(Errc::io_error, "write failed: " + path.string());
}

}  // namespace

ImageRGB read_png_rgb(const std::filesystem::path& path) {
  const RawPng raw = read_png_raw(path);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  ImageRGB img(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src = raw.channels == 1 ? 0 : c;
        img.at(x, y, c) = static_cast<float>(
            raw.samples[(static_cast<std::size_t>(y) * raw.width + x) * raw.channels + src] / scale);
      }
  return img;
}

ImageGray read_png_gray(const std::filesystem::path& path) {
  const RawPng raw = read_png_raw(path);
  const double scale = raw.bit_depth == 16 ? 65535.0 : 255.0;
  ImageGray img(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      img.at(x, y) = static_cast<float>(
          raw.samples[(static_cast<std::size_t>(y) * raw.width + x) * raw.channels] / scale);
  return img;
}

Image<1> read_png_labels(const std::filesystem::path& path) {
  const RawPng raw = read_png_raw(path);
  Image<1> img(raw.width, raw.height);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      img.at(x, y) = raw.samples[(static_cast<std::size_t>(y) * raw.width + x) * raw.channels];
  return img;
}

void write_png(const std::filesystem::path& path, const ImageRGB& img, int bit_depth) {
  write_png_image(path, img, bit_depth);
}

void write_png(const std::filesystem::path& path, const ImageGray& img, int bit_depth) {
  write_png_image(path, img, bit_depth);
}

void write_png_labels(const std::filesystem::path& path, const Image<1>& labels) {
  std::vector<std::uint16_t> samples(labels.data().size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const float v = labels.data()[i];
    if (v < 0.0f || v > 65535.0f) throw Error(Errc::invalid_argument, "label out of 16-bit range");
    samples[i] = static_cast<std::uint16_t>(v);
  }
  write_png_raw(path, labels.width(), labels.height(), 1, 16, samples);
}

ImageRGB read_pfm_rgb(const std::filesystem::path& path) {
  PfmData raw = read_pfm_raw(path);
  ImageRGB img(raw.width, raw.height);
  for (std::size_t i = 0; i < raw.samples.size() / raw.channels; ++i)
    for (int c = 0; c < 3; ++c)
      img.data()[3 * i + c] = raw.samples[i * raw.channels + (raw.channels == 1 ? 0 : c)];
  return img;
}

ImageGray read_pfm_gray(const std::filesystem::path& path) {
  PfmData raw = read_pfm_raw(path);
  if (raw.channels != 1) throw Error(Errc::load_error, "expected grayscale PFM: " + path.string());
  ImageGray img(raw.width, raw.height);
  std::copy(raw.samples.begin(), raw.samples.end(), img.data().begin());
  return img;
}

void write_pfm(const std::filesystem::path& path, const ImageRGB& img) { write_pfm_image(path, img); }
void write_pfm(const std::filesystem::path& path, const ImageGray& img) { write_pfm_image(path, img); }

ImageRGB read_image_rgb(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") return read_pfm_rgb(path);
  if (ext == ".png" || ext == ".PNG") return read_png_rgb(path);
  throw Error(Errc::load_error, "unsupported image format: " + path.string());
}

double srgb_to_linear(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

void linearize_srgb(ImageRGB& img) {
  for (float& v : img.data()) v = static_cast<float>(srgb_to_linear(v));
}

}  // namespace vlut::io
