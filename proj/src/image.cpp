// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "tgan/error.hpp"

namespace tgan {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c) && c != '#') {
    tok.push_back(static_cast<char>(c));
  }
  if (c == '#') in.unget();
  return tok;
}

int parse_int(const std::string& tok, const char* what) {
  if (tok.empty()) throw data_error(std::string("truncated PGM header: missing ") + what);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw data_error(std::string("invalid PGM header token '") + tok + "' for " + what);
  }
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open image file: " + path.string());

  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (in.gcount() != 2 || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    throw data_error("unsupported format (bad magic) in " + path.string());
  }
  const bool binary = magic[1] == '5';

  const int width = parse_int(next_token(in), "width");
  const int height = parse_int(next_token(in), "height");
  const int maxval = parse_int(next_token(in), "maxval");
  if (width <= 0 || height <= 0) {
    throw data_error("zero or negative dimensions in " + path.string());
  }
  if (maxval <= 0 || maxval > 65535) {
    throw data_error("unsupported PGM maxval " + std::to_string(maxval) + " in " + path.string());
  }

  Image img;
  img.width = width;
  img.height = height;
  img.max_value = static_cast<float>(maxval);
  img.source_format = binary ? PgmFormat::binary : PgmFormat::ascii;
  const std::size_t n = static_cast<std::size_t>(width) * height;
  img.pixels.resize(n);

  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    const bool wide = maxval > 255;
    std::vector<unsigned char> raw(n * (wide ? 2 : 1));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw data_error("truncated PGM raster in " + path.string());
    }
    if (wide) {
      for (std::size_t i = 0; i < n; ++i) {
        img.pixels[i] = static_cast<float>((raw[2 * i] << 8) | raw[2 * i + 1]);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<float>(raw[i]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const int v = parse_int(next_token(in), "pixel");
      if (v < 0 || v > maxval) {
        throw data_error("pixel value " + std::to_string(v) + " out of range in " + path.string());
      }
      img.pixels[i] = static_cast<float>(v);
    }
  }
  return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  if (img.height <= 0 || img.width <= 0) {
    throw data_error("cannot save image with zero dimensions");
  }
  const int maxval = static_cast<int>(std::lround(img.max_value));
  if (maxval <= 0 || maxval > 65535) {
    throw data_error("cannot save image with max_value " + std::to_string(img.max_value));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path.string());

  const bool binary = img.source_format == PgmFormat::binary;
  out << (binary ? "P5" : "P2") << "\n"
      << img.width << " " << img.height << "\n"
      << maxval << "\n";

  const std::size_t n = img.pixels.size();
  auto quantize = [&](float v) {
    const long q = std::lround(v);
    return static_cast<int>(std::clamp<long>(q, 0, maxval));
  };
  if (binary) {
    const bool wide = maxval > 255;
    std::vector<unsigned char> raw(n * (wide ? 2 : 1));
    for (std::size_t i = 0; i < n; ++i) {
      const int q = quantize(img.pixels[i]);
      if (wide) {
        raw[2 * i] = static_cast<unsigned char>(q >> 8);
        raw[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
      } else {
        raw[i] = static_cast<unsigned char>(q);
      }
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  } else {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        out << quantize(img.at(y, x));
        out << (x + 1 == img.width ? '\n' : ' ');
      }
    }
  }
  if (!out) throw data_error("write failed: " + path.string());
}

Image zero_mean_normalize(const Image& img) {
  const std::size_t n = img.pixels.size();
  if (n == 0) throw data_error("cannot normalize an empty image");
  double s = 0.0, s2 = 0.0;
  for (float v : img.pixels) {
    s += v;
    s2 += static_cast<double>(v) * v;
  }
  const double mean = s / static_cast<double>(n);
  const double var = std::max(0.0, s2 / static_cast<double>(n) - mean * mean);
  const double stddev = std::sqrt(var);
  if (stddev <= 0.0) {
    throw data_error("degenerate image: constant pixels, std = 0");
  }
  Image out = img;
  const float fm = static_cast<float>(mean);
  const float inv = static_cast<float>(1.0 / stddev);
  for (float& v : out.pixels) v = (v - fm) * inv;
  out.norm_stats = NormStats{fm, static_cast<float>(stddev)};
  return out;
}

Image denormalize(const Image& img) {
  if (!img.norm_stats) {
    throw data_error("denormalize: image carries no normalization stats");
  }
  Image out = img;
  const float m = img.norm_stats->mean;
  const float s = img.norm_stats->std;
  for (float& v : out.pixels) {
    v = std::clamp(v * s + m, 0.f, img.max_value);
  }
  out.norm_stats.reset();
  return out;
}

Image avg_pool_downsample(const Image& img, int factor) {
  if (factor < 1) throw data_error("avg_pool_downsample: factor must be >= 1");
  const int oh = img.height / factor;
  const int ow = img.width / factor;
  if (oh < 1 || ow < 1) {
    throw data_error("avg_pool_downsample: image smaller than pooling factor");
  }
  const int y0 = (img.height - oh * factor) / 2;
  const int x0 = (img.width - ow * factor) / 2;
  Image out;
  out.height = oh;
  out.width = ow;
  out.max_value = img.max_value;
  out.norm_stats = img.norm_stats;
  out.source_format = img.source_format;
  out.pixels.resize(static_cast<std::size_t>(oh) * ow);
  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      double acc = 0.0;
      for (int fy = 0; fy < factor; ++fy) {
        for (int fx = 0; fx < factor; ++fx) {
          acc += img.at(y0 + oy * factor + fy, x0 + ox * factor + fx);
        }
      }
      out.at(oy, ox) = static_cast<float>(acc * inv);
    }
  }
  return out;
}

namespace {

// Catmull-Rom family cubic with a = -0.5.
inline double cubic_weight(double s) {
  constexpr double a = -0.5;
  s = std::fabs(s);
  if (s <= 1.0) return ((a + 2.0) * s - (a + 3.0)) * s * s + 1.0;
  if (s < 2.0) return ((a * s - 5.0 * a) * s + 8.0 * a) * s - 4.0 * a;
  return 0.0;
}

}  // namespace

void bicubic_resize_plane(const float* src, int src_h, int src_w, float* dst,
                          int dst_h, int dst_w) {
  // Separable: rows first into a scratch of dst_w columns, then columns.
  std::vector<double> scratch(static_cast<std::size_t>(src_h) * dst_w);
  const double sx_ratio = static_cast<double>(src_w) / dst_w;
  const double sy_ratio = static_cast<double>(src_h) / dst_h;

  std::vector<int> xi(static_cast<std::size_t>(dst_w) * 4);
  std::vector<double> xw(static_cast<std::size_t>(dst_w) * 4);
  for (int x = 0; x < dst_w; ++x) {
    const double sx = (x + 0.5) * sx_ratio - 0.5;
    const int base = static_cast<int>(std::floor(sx)) - 1;
    for (int k = 0; k < 4; ++k) {
      xi[static_cast<std::size_t>(x) * 4 + k] = std::clamp(base + k, 0, src_w - 1);
      xw[static_cast<std::size_t>(x) * 4 + k] = cubic_weight(sx - (base + k));
    }
  }
  for (int y = 0; y < src_h; ++y) {
    const float* row = src + static_cast<std::size_t>(y) * src_w;
    double* orow = scratch.data() + static_cast<std::size_t>(y) * dst_w;
    for (int x = 0; x < dst_w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += xw[static_cast<std::size_t>(x) * 4 + k] * row[xi[static_cast<std::size_t>(x) * 4 + k]];
      }
      orow[x] = acc;
    }
  }

  for (int y = 0; y < dst_h; ++y) {
    const double sy = (y + 0.5) * sy_ratio - 0.5;
    const int base = static_cast<int>(std::floor(sy)) - 1;
    int yi[4];
    double yw[4];
    for (int k = 0; k < 4; ++k) {
      yi[k] = std::clamp(base + k, 0, src_h - 1);
      yw[k] = cubic_weight(sy - (base + k));
    }
    float* orow = dst + static_cast<std::size_t>(y) * dst_w;
    for (int x = 0; x < dst_w; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += yw[k] * scratch[static_cast<std::size_t>(yi[k]) * dst_w + x];
      }
      orow[x] = static_cast<float>(acc);
    }
  }
}

Image bicubic_resize(const Image& img, int scale_num, int scale_den) {
  const bool supported = (scale_num == 4 && scale_den == 1) ||
                         (scale_num == 1 && scale_den == 4) ||
                         (scale_num == 2 && scale_den == 1) ||
                         (scale_num == 1 && scale_den == 2);
  if (!supported) {
    throw data_error("bicubic_resize: unsupported scale " + std::to_string(scale_num) +
                     "/" + std::to_string(scale_den));
  }
  const int dh = img.height * scale_num / scale_den;
  const int dw = img.width * scale_num / scale_den;
  if (dh < 1 || dw < 1) {
    throw data_error("bicubic_resize: output dimension would be < 1");
  }
  Image out;
  out.height = dh;
  out.width = dw;
  out.max_value = img.max_value;
  out.norm_stats = img.norm_stats;
  out.source_format = img.source_format;
  out.pixels.resize(static_cast<std::size_t>(dh) * dw);
  bicubic_resize_plane(img.pixels.data(), img.height, img.width,
                       out.pixels.data(), dh, dw);
  return out;
}

std::vector<Image> crop_patches(const Image& img, int size, int stride) {
  if (size < 1 || stride < 1) {
    throw data_error("crop_patches: size and stride must be positive");
  }
  if (size > img.height || size > img.width) {
    throw data_error("crop_patches: crop size " + std::to_string(size) +
                     " exceeds image " + std::to_string(img.height) + "x" +
                     std::to_string(img.width));
  }
  std::vector<Image> out;
  for (int y = 0; y + size <= img.height; y += stride) {
    for (int x = 0; x + size <= img.width; x += stride) {
      out.push_back(crop_region(img, y, x, size));
    }
  }
  return out;
}

Image crop_region(const Image& img, int y, int x, int size) {
  if (y < 0 || x < 0 || y + size > img.height || x + size > img.width) {
    throw data_error("crop_region: window out of bounds");
  }
  Image out;
  out.height = size;
  out.width = size;
  out.max_value = img.max_value;
  out.norm_stats = img.norm_stats;
  out.source_format = img.source_format;
  out.pixels.resize(static_cast<std::size_t>(size) * size);
  for (int yy = 0; yy < size; ++yy) {
    for (int xx = 0; xx < size; ++xx) {
      out.at(yy, xx) = img.at(y + yy, x + xx);
    }
  }
  return out;
}

Image center_crop_border(const Image& img, int border) {
  if (border < 0) throw data_error("center_crop_border: negative border");
  if (border == 0) return img;
  const int h = img.height - 2 * border;
  const int w = img.width - 2 * border;
  if (h < 1 || w < 1) {
    throw data_error("center_crop_border: border " + std::to_string(border) +
                     " consumes the whole image");
  }
  Image out;
  out.height = h;
  out.width = w;
  out.max_value = img.max_value;
  out.norm_stats = img.norm_stats;
  out.source_format = img.source_format;
  out.pixels.resize(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(y, x) = img.at(y + border, x + border);
    }
  }
  return out;
}

}  // namespace tgan
