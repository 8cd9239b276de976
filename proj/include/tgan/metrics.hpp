// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "tgan/image.hpp"

namespace tgan {

// Pixel-domain metrics; pass denormalized images. MAX is taken from the
// first argument's metadata.
double mse(const Image& x, const Image& y);

// 10*log10(MAX^2 / mse), +infinity when mse == 0.
double psnr(const Image& x, const Image& y);

// Mean SSIM over 11x11 Gaussian (sigma 1.5) windows at valid positions,
// c1 = (0.01 MAX)^2, c2 = (0.03 MAX)^2. Images must be at least 11x11.
double ssim(const Image& x, const Image& y);

struct MetricRow {
  std::string path;
  double psnr = 0.0;
  double ssim = 0.0;
  bool failed = false;
  std::string message;
};

struct MetricReport {
  std::vector<MetricRow> rows;
  double avg_psnr = 0.0;
  double avg_ssim = 0.0;
};

MetricReport make_report(std::vector<MetricRow> rows);

// Fixed-width table in the style of a per-image comparison sheet; ends with
// a single trailing newline.
std::string format_report_table(const MetricReport& report);

// One CSV row per image: path,psnr,ssim ("inf" for infinite PSNR).
std::string format_report_csv(const MetricReport& report);

}  // namespace tgan
