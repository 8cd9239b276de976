// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tgan/error.hpp"

namespace tgan {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

void require_same_dims(const char* tag, const Image& x, const Image& y) {
  if (x.height != y.height || x.width != y.width) {
    throw data_error(std::string(tag) + ": dimension mismatch " +
                     std::to_string(x.height) + "x" + std::to_string(x.width) +
                     " vs " + std::to_string(y.height) + "x" + std::to_string(y.width));
  }
}

// Normalized 1-D Gaussian taps for the SSIM window.
std::vector<double> gaussian_taps() {
  std::vector<double> taps(kSsimWindow);
  const int half = kSsimWindow / 2;
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += taps[static_cast<std::size_t>(i)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

}  // namespace

double mse(const Image& x, const Image& y) {
  require_same_dims("mse", x, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    const double d = static_cast<double>(x.pixels[i]) - y.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.pixels.size());
}

double psnr(const Image& x, const Image& y) {
  const double m = mse(x, y);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  const double mx = static_cast<double>(x.max_value);
  return 10.0 * std::log10(mx * mx / m);
}

double ssim(const Image& x, const Image& y) {
  require_same_dims("ssim", x, y);
  if (x.height < kSsimWindow || x.width < kSsimWindow) {
    throw data_error("ssim: image " + std::to_string(x.height) + "x" +
                     std::to_string(x.width) + " smaller than the " +
                     std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) +
                     " window");
  }
  const double mx = static_cast<double>(x.max_value);
  const double c1 = (0.01 * mx) * (0.01 * mx);
  const double c2 = (0.03 * mx) * (0.03 * mx);
  const std::vector<double> taps = gaussian_taps();

  // Separable window filtering of the five moment planes at valid positions.
  const int h = x.height, w = x.width;
  const int oh = h - kSsimWindow + 1, ow = w - kSsimWindow + 1;
  const std::size_t row_n = static_cast<std::size_t>(h) * ow;
  std::vector<double> rx(row_n), ry(row_n), rxx(row_n), ryy(row_n), rxy(row_n);
  for (int yy = 0; yy < h; ++yy) {
    for (int ox = 0; ox < ow; ++ox) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int k = 0; k < kSsimWindow; ++k) {
        const double a = x.at(yy, ox + k);
        const double b = y.at(yy, ox + k);
        const double t = taps[static_cast<std::size_t>(k)];
        sx += t * a;
        sy += t * b;
        sxx += t * a * a;
        syy += t * b * b;
        sxy += t * a * b;
      }
      const std::size_t i = static_cast<std::size_t>(yy) * ow + ox;
      rx[i] = sx;
      ry[i] = sy;
      rxx[i] = sxx;
      ryy[i] = syy;
      rxy[i] = sxy;
    }
  }

  double total = 0.0;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double mux = 0, muy = 0, mxx = 0, myy = 0, mxy = 0;
      for (int k = 0; k < kSsimWindow; ++k) {
        const std::size_t i = static_cast<std::size_t>(oy + k) * ow + ox;
        const double t = taps[static_cast<std::size_t>(k)];
        mux += t * rx[i];
        muy += t * ry[i];
        mxx += t * rxx[i];
        myy += t * ryy[i];
        mxy += t * rxy[i];
      }
      const double varx = mxx - mux * mux;
      const double vary = myy - muy * muy;
      const double covxy = mxy - mux * muy;
      const double num = (2.0 * mux * muy + c1) * (2.0 * covxy + c2);
      const double den = (mux * mux + muy * muy + c1) * (varx + vary + c2);
      total += num / den;
    }
  }
  return total / (static_cast<double>(oh) * ow);
}

MetricReport make_report(std::vector<MetricRow> rows) {
  MetricReport report;
  report.rows = std::move(rows);
  double sp = 0.0, ss = 0.0;
  std::size_t n = 0;
  for (const auto& r : report.rows) {
    if (r.failed) continue;
    sp += r.psnr;
    ss += r.ssim;
    ++n;
  }
  report.avg_psnr = n ? sp / static_cast<double>(n) : 0.0;
  report.avg_ssim = n ? ss / static_cast<double>(n) : 0.0;
  return report;
}

namespace {

std::string fmt_psnr(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmt_ssim(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

}  // namespace

std::string format_report_table(const MetricReport& report) {
  std::size_t name_w = std::string("Average").size();
  for (const auto& r : report.rows) name_w = std::max(name_w, r.path.size());
  std::ostringstream os;
  auto row = [&](const std::string& name, const std::string& p, const std::string& s) {
    os << name;
    os << std::string(name_w - name.size() + 2, ' ');
    os << p << std::string(p.size() < 12 ? 12 - p.size() : 1, ' ');
    os << s << "\n";
  };
  row("Image", "PSNR(dB)", "SSIM");
  for (const auto& r : report.rows) {
    if (r.failed) {
      row(r.path, "error", r.message);
    } else {
      row(r.path, fmt_psnr(r.psnr), fmt_ssim(r.ssim));
    }
  }
  row("Average", fmt_psnr(report.avg_psnr), fmt_ssim(report.avg_ssim));
  return os.str();
}

std::string format_report_csv(const MetricReport& report) {
  std::ostringstream os;
  for (const auto& r : report.rows) {
    if (r.failed) {
      os << r.path << ",error,error\n";
    } else {
      os << r.path << "," << fmt_psnr(r.psnr) << "," << fmt_ssim(r.ssim) << "\n";
    }
  }
  return os.str();
}

}  // namespace tgan
