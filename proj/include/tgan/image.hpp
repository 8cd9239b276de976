// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <vector>

namespace tgan {

struct NormStats {
  float mean = 0.f;
  float std = 1.f;
};

enum class PgmFormat { ascii, binary };  // P2 / P5

// Single-channel raster. Pixels are stored as 32-bit floats; un-normalized
// images hold integer sample values in [0, max_value].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;  // row-major
  float max_value = 255.f;
  std::optional<NormStats> norm_stats;
  PgmFormat source_format = PgmFormat::binary;

  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// PGM (P2 ASCII / P5 binary, 8- or 16-bit; 16-bit P5 samples big-endian).
Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

// (x - mean) / std with the population standard deviation; the stats are
// recorded on the result for later inversion. Constant images are rejected.
Image zero_mean_normalize(const Image& img);

// pixel = value * std + mean, clamped to [0, max_value]; clears norm_stats.
Image denormalize(const Image& img);

// Mean over factor x factor blocks. Non-divisible images are center-cropped
// to the largest divisible region first.
Image avg_pool_downsample(const Image& img, int factor = 4);

// Separable bicubic (a = -0.5), half-pixel-centered mapping, edge replication.
// Supported scales: 4/1, 1/4, 2/1, 1/2.
Image bicubic_resize(const Image& img, int scale_num, int scale_den);

// Regular grid of size x size crops at the given stride; partial edge
// windows are discarded.
std::vector<Image> crop_patches(const Image& img, int size, int stride);

// Single crop with explicit origin (bounds-checked).
Image crop_region(const Image& img, int y, int x, int size);

// Drops a border of the given width on all four sides.
Image center_crop_border(const Image& img, int border);

// Resampling core shared with the tensor-facing code paths.
void bicubic_resize_plane(const float* src, int src_h, int src_w, float* dst,
                          int dst_h, int dst_w);

}  // namespace tgan
