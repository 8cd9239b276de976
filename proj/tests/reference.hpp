// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
//
// Independent double-precision reference implementations used as oracles.
// Everything here is written as direct nested loops, deliberately sharing no
// code with the library kernels.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tgan/tensor.hpp"

namespace refop {

struct DT {
  std::vector<int> shape;
  std::vector<double> data;

  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  std::size_t size() const { return data.size(); }

  static DT from(const tgan::Tensor& t) {
    DT d;
    d.shape = t.shape();
    d.data.assign(t.data().begin(), t.data().end());
    return d;
  }

  static DT zeros(std::vector<int> shape) {
    DT d;
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    d.shape = std::move(shape);
    d.data.assign(n, 0.0);
    return d;
  }
};

inline DT conv2d(const DT& x, const DT& k, const DT& b, int stride, int pad) {
  const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int cout = k.dim(0), kh = k.dim(2), kw = k.dim(3);
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (w + 2 * pad - kw) / stride + 1;
  DT y = DT::zeros({cout, oh, ow});
  for (int co = 0; co < cout; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = b.data[static_cast<std::size_t>(co)];
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
              const int yy = oy * stride - pad + ky;
              const int xx = ox * stride - pad + kx;
              if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              acc += x.data[(static_cast<std::size_t>(ci) * h + yy) * w + xx] *
                     k.data[((static_cast<std::size_t>(co) * cin + ci) * kh + ky) * kw + kx];
            }
          }
        }
        y.data[(static_cast<std::size_t>(co) * oh + oy) * ow + ox] = acc;
      }
    }
  }
  return y;
}

inline DT batch_norm_train(const DT& x, const DT& gamma, const DT& beta, double eps) {
  const int c = x.dim(0), spatial = x.dim(1) * x.dim(2);
  DT y = DT::zeros(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    double s = 0, s2 = 0;
    for (int i = 0; i < spatial; ++i) {
      const double v = x.data[static_cast<std::size_t>(ch) * spatial + i];
      s += v;
      s2 += v * v;
    }
    const double mu = s / spatial;
    const double var = s2 / spatial - mu * mu;
    const double is = 1.0 / std::sqrt(var + eps);
    for (int i = 0; i < spatial; ++i) {
      const double v = x.data[static_cast<std::size_t>(ch) * spatial + i];
      y.data[static_cast<std::size_t>(ch) * spatial + i] =
          gamma.data[static_cast<std::size_t>(ch)] * (v - mu) * is +
          beta.data[static_cast<std::size_t>(ch)];
    }
  }
  return y;
}

inline DT batch_norm_eval(const DT& x, const DT& gamma, const DT& beta,
                          const DT& rm, const DT& rv, double eps) {
  const int c = x.dim(0), spatial = x.dim(1) * x.dim(2);
  DT y = DT::zeros(x.shape);
  for (int ch = 0; ch < c; ++ch) {
    const double is = 1.0 / std::sqrt(rv.data[static_cast<std::size_t>(ch)] + eps);
    for (int i = 0; i < spatial; ++i) {
      const double v = x.data[static_cast<std::size_t>(ch) * spatial + i];
      y.data[static_cast<std::size_t>(ch) * spatial + i] =
          gamma.data[static_cast<std::size_t>(ch)] *
              (v - rm.data[static_cast<std::size_t>(ch)]) * is +
          beta.data[static_cast<std::size_t>(ch)];
    }
  }
  return y;
}

inline DT relu(DT x) {
  for (double& v : x.data) v = v > 0 ? v : 0;
  return x;
}

inline DT leaky_relu(DT x, double slope) {
  for (double& v : x.data) v = v > 0 ? v : slope * v;
  return x;
}

inline DT sigmoid(DT x) {
  for (double& v : x.data) v = 1.0 / (1.0 + std::exp(-v));
  return x;
}

inline DT add(DT a, const DT& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
  return a;
}

inline DT sub(DT a, const DT& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] -= b.data[i];
  return a;
}

inline DT mul(DT a, const DT& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] *= b.data[i];
  return a;
}

inline DT divide(DT a, const DT& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] /= b.data[i];
  return a;
}

inline DT scale(DT a, double s) {
  for (double& v : a.data) v *= s;
  return a;
}

inline DT matmul(const DT& a, const DT& b) {
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  DT y = DT::zeros({m, n});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int t = 0; t < k; ++t) {
        acc += a.data[static_cast<std::size_t>(i) * k + t] * b.data[static_cast<std::size_t>(t) * n + j];
      }
      y.data[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
  return y;
}

inline DT unfold(const DT& x, int patch, int stride, int pad) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int ny = (h + 2 * pad - patch) / stride + 1;
  const int nx = (w + 2 * pad - patch) / stride + 1;
  DT y = DT::zeros({ny * nx, c * patch * patch});
  std::size_t row = 0;
  for (int gy = 0; gy < ny; ++gy) {
    for (int gx = 0; gx < nx; ++gx, ++row) {
      std::size_t col = 0;
      for (int ch = 0; ch < c; ++ch) {
        for (int py = 0; py < patch; ++py) {
          for (int px = 0; px < patch; ++px, ++col) {
            const int yy = gy * stride - pad + py;
            const int xx = gx * stride - pad + px;
            if (yy >= 0 && yy < h && xx >= 0 && xx < w) {
              y.data[row * y.dim(1) + col] = x.data[(static_cast<std::size_t>(ch) * h + yy) * w + xx];
            }
          }
        }
      }
    }
  }
  return y;
}

// Overlap-averaging fold: every output pixel averages the contributions of
// all windows that cover it.
inline DT fold(const DT& cols, int c, int h, int w, int patch, int stride, int pad) {
  const int ny = (h + 2 * pad - patch) / stride + 1;
  const int nx = (w + 2 * pad - patch) / stride + 1;
  DT y = DT::zeros({c, h, w});
  for (int ch = 0; ch < c; ++ch) {
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        double acc = 0;
        int count = 0;
        for (int gy = 0; gy < ny; ++gy) {
          for (int gx = 0; gx < nx; ++gx) {
            const int py = yy - (gy * stride - pad);
            const int px = xx - (gx * stride - pad);
            if (py < 0 || py >= patch || px < 0 || px >= patch) continue;
            acc += cols.data[(static_cast<std::size_t>(gy) * nx + gx) * cols.dim(1) +
                             (static_cast<std::size_t>(ch) * patch + py) * patch + px];
            ++count;
          }
        }
        y.data[(static_cast<std::size_t>(ch) * h + yy) * w + xx] = count ? acc / count : 0.0;
      }
    }
  }
  return y;
}

inline DT pixel_shuffle(const DT& x, int r) {
  const int cr2 = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int c = cr2 / (r * r);
  DT y = DT::zeros({c, h * r, w * r});
  for (int ch = 0; ch < c; ++ch) {
    for (int yy = 0; yy < h * r; ++yy) {
      for (int xx = 0; xx < w * r; ++xx) {
        const int dy = yy % r, dx = xx % r;
        const int src_c = ch * r * r + dy * r + dx;
        y.data[(static_cast<std::size_t>(ch) * h * r + yy) * w * r + xx] =
            x.data[(static_cast<std::size_t>(src_c) * h + yy / r) * w + xx / r];
      }
    }
  }
  return y;
}

inline DT avg_pool2d(const DT& x, int f) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int oh = h / f, ow = w / f;
  const int y0 = (h - oh * f) / 2, x0 = (w - ow * f) / 2;
  DT y = DT::zeros({c, oh, ow});
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0;
        for (int fy = 0; fy < f; ++fy) {
          for (int fx = 0; fx < f; ++fx) {
            acc += x.data[(static_cast<std::size_t>(ch) * h + y0 + oy * f + fy) * w + x0 + ox * f + fx];
          }
        }
        y.data[(static_cast<std::size_t>(ch) * oh + oy) * ow + ox] = acc / (f * f);
      }
    }
  }
  return y;
}

inline DT concat_channels(const DT& a, const DT& b) {
  DT y = DT::zeros({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return y;
}

inline DT bcast_mul(const DT& t, const DT& gate) {
  const int c = t.dim(0);
  const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
  DT y = t;
  for (int ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) {
      y.data[static_cast<std::size_t>(ch) * plane + i] *= gate.data[i];
    }
  }
  return y;
}

inline std::vector<int> row_argmax(const DT& m) {
  const int rows = m.dim(0), cols = m.dim(1);
  std::vector<int> idx(static_cast<std::size_t>(rows));
  for (int i = 0; i < rows; ++i) {
    int best = 0;
    for (int j = 1; j < cols; ++j) {
      if (m.data[static_cast<std::size_t>(i) * cols + j] >
          m.data[static_cast<std::size_t>(i) * cols + best]) {
        best = j;
      }
    }
    idx[static_cast<std::size_t>(i)] = best;
  }
  return idx;
}

inline DT row_max(const DT& m) {
  const auto idx = row_argmax(m);
  const int cols = m.dim(1);
  DT y = DT::zeros({m.dim(0)});
  for (int i = 0; i < m.dim(0); ++i) {
    y.data[static_cast<std::size_t>(i)] =
        m.data[static_cast<std::size_t>(i) * cols + idx[static_cast<std::size_t>(i)]];
  }
  return y;
}

inline DT gather_rows(const DT& m, const std::vector<int>& idx) {
  const int cols = m.dim(1);
  DT y = DT::zeros({static_cast<int>(idx.size()), cols});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int j = 0; j < cols; ++j) {
      y.data[i * static_cast<std::size_t>(cols) + j] =
          m.data[static_cast<std::size_t>(idx[i]) * cols + j];
    }
  }
  return y;
}

inline DT spatial_mean(const DT& x) {
  const int c = x.dim(0);
  const std::size_t plane = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  DT y = DT::zeros({c});
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0;
    for (std::size_t i = 0; i < plane; ++i) acc += x.data[static_cast<std::size_t>(ch) * plane + i];
    y.data[static_cast<std::size_t>(ch)] = acc / static_cast<double>(plane);
  }
  return y;
}

inline DT log_guarded(DT x, double floor_value) {
  for (double& v : x.data) v = std::log(std::max(v, floor_value));
  return x;
}

inline double total(const DT& x) {
  double acc = 0;
  for (double v : x.data) acc += v;
  return acc;
}

inline double mean_all(const DT& x) { return total(x) / static_cast<double>(x.size()); }

inline double wsum(const DT& x, const DT& w) {
  double acc = 0;
  for (std::size_t i = 0; i < x.data.size(); ++i) acc += x.data[i] * w.data[i];
  return acc;
}

// Exhaustive patch-pair cosine similarity: the brute-force counterpart of
// the library's relevance embedding.
inline DT cosine_matrix(const DT& q, const DT& k, int patch, int stride) {
  const int pad = (patch - 1) / 2;
  const DT uq = unfold(q, patch, stride, pad);
  const DT uk = unfold(k, patch, stride, pad);
  const int n = uq.dim(0), dim = uq.dim(1);
  DT y = DT::zeros({n, n});
  for (int i = 0; i < n; ++i) {
    double ni = 0;
    for (int d = 0; d < dim; ++d) {
      const double v = uq.data[static_cast<std::size_t>(i) * dim + d];
      ni += v * v;
    }
    ni = std::max(std::sqrt(ni), 1e-8);
    for (int j = 0; j < n; ++j) {
      double nj = 0, dot = 0;
      for (int d = 0; d < dim; ++d) {
        const double a = uq.data[static_cast<std::size_t>(i) * dim + d];
        const double b = uk.data[static_cast<std::size_t>(j) * dim + d];
        nj += b * b;
        dot += a * b;
      }
      nj = std::max(std::sqrt(nj), 1e-8);
      y.data[static_cast<std::size_t>(i) * n + j] = dot / (ni * nj);
    }
  }
  return y;
}

// Max absolute elementwise difference between a library tensor and the
// reference value.
inline double max_abs_diff(const tgan::Tensor& t, const DT& ref) {
  double worst = 0;
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    worst = std::max(worst, std::fabs(static_cast<double>(t.data()[i]) - ref.data[i]));
  }
  return worst;
}

}  // namespace refop
