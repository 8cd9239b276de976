// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <vector>

#include "tgan/image.hpp"
#include "tgan/rng.hpp"

namespace testutil {

// Deterministic band-limited field (a few low-frequency sinusoids) plus a
// couple of hard half-plane edges, quantized to 8-bit gray levels.
inline tgan::Image synthetic_image(int size, std::uint64_t seed) {
  tgan::Xoshiro256 rng(seed);
  constexpr double kPi = 3.14159265358979323846;

  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 6; ++i) {
    Wave w;
    w.fx = static_cast<double>(rng.next_below(4));
    w.fy = static_cast<double>(rng.next_below(4));
    if (w.fx == 0 && w.fy == 0) w.fx = 1;
    w.phase = rng.next_double() * 2.0 * kPi;
    w.amp = 0.3 + rng.next_double();
    waves.push_back(w);
  }
  struct Edge {
    double nx, ny, c, offset;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < 2; ++i) {
    const double angle = rng.next_double() * 2.0 * kPi;
    Edge e;
    e.nx = std::cos(angle);
    e.ny = std::sin(angle);
    e.c = (rng.next_double() - 0.5) * 0.8;
    e.offset = rng.next_double() < 0.5 ? -1.2 : 1.2;
    edges.push_back(e);
  }

  std::vector<double> field(static_cast<std::size_t>(size) * size);
  double lo = 1e30, hi = -1e30;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = (x + 0.5) / size - 0.5;
      const double v = (y + 0.5) / size - 0.5;
      double val = 0.0;
      for (const auto& w : waves) {
        val += w.amp * std::sin(2.0 * kPi * (w.fx * u + w.fy * v) + w.phase);
      }
      for (const auto& e : edges) {
        if (e.nx * u + e.ny * v > e.c) val += e.offset;
      }
      field[static_cast<std::size_t>(y) * size + x] = val;
      lo = std::min(lo, val);
      hi = std::max(hi, val);
    }
  }

  tgan::Image img;
  img.height = size;
  img.width = size;
  img.max_value = 255.f;
  img.pixels.resize(field.size());
  const double span = hi - lo > 1e-9 ? hi - lo : 1.0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double unit = (field[i] - lo) / span;
    img.pixels[i] = static_cast<float>(std::lround(15.0 + unit * 225.0));
  }
  return img;
}

inline std::vector<tgan::Image> synthetic_corpus(int count, int size,
                                                 std::uint64_t seed) {
  std::vector<tgan::Image> corpus;
  corpus.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    corpus.push_back(synthetic_image(size, seed + static_cast<std::uint64_t>(i) * 7919));
  }
  return corpus;
}

}  // namespace testutil
