#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vlut {

using Vec3 = Eigen::Vector3d;
using Rgb = Eigen::Array3d;

// Interleaved, row-major float image; row 0 is the top of the image.
template <int Channels>
class Image {
 public:
  static constexpr int kChannels = Channels;

  Image() = default;
  Image(int width, int height, float fill = 0.0f)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * height * Channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  float& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

using ImageRGB = Image<3>;
using ImageGray = Image<1>;

// Depth maps store camera-frame z in meters; invalid pixels hold NaN.
using DepthMap = Image<1>;

inline Rgb pixel(const ImageRGB& img, int x, int y) {
  return {img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)};
}

inline void set_pixel(ImageRGB& img, int x, int y, const Rgb& v) {
  for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(v[c]);
}

inline bool depth_valid(float z) { return std::isfinite(z) && z > 0.0f; }

constexpr float kInvalid = std::numeric_limits<float>::quiet_NaN();

}  // namespace vlut
