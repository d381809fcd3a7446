#pragma once

#include <filesystem>

#include "vlut/image.hpp"

namespace vlut::io {

// PNG (8/16-bit, gray/RGB/RGBA) loaded as floats scaled to [0,1].
// Gray sources are replicated into three channels by read_png_rgb.
ImageRGB read_png_rgb(const std::filesystem::path& path);
ImageGray read_png_gray(const std::filesystem::path& path);

// Raw integer values (no scaling), for label masks.
Image<1> read_png_labels(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const ImageRGB& img, int bit_depth = 8);
void write_png(const std::filesystem::path& path, const ImageGray& img, int bit_depth = 8);
void write_png_labels(const std::filesystem::path& path, const Image<1>& labels);

// Portable float map. Color ("PF") and grayscale ("Pf"); written little-endian.
ImageRGB read_pfm_rgb(const std::filesystem::path& path);
ImageGray read_pfm_gray(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const ImageRGB& img);
void write_pfm(const std::filesystem::path& path, const ImageGray& img);

// Dispatch on extension (.png / .pfm).
ImageRGB read_image_rgb(const std::filesystem::path& path);

double srgb_to_linear(double v);
double linear_to_srgb(double v);
void linearize_srgb(ImageRGB& img);

}  // namespace vlut::io
