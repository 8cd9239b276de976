// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/texture.hpp"

#include <Eigen/Core>

#include <cmath>

#include "tgan/error.hpp"

namespace tgan {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using ConstMapRM = Eigen::Map<const RowMat>;

constexpr float kNormFloor = 1e-8f;

// Row-normalizes patches in place; returns the guarded divisor per row.
std::vector<float> normalize_rows(std::vector<float>& rows, int n, int dim) {
  std::vector<float> divisors(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    float* r = rows.data() + static_cast<std::size_t>(i) * dim;
    double s2 = 0.0;
    for (int j = 0; j < dim; ++j) s2 += static_cast<double>(r[j]) * r[j];
    const float norm = std::max(static_cast<float>(std::sqrt(s2)), kNormFloor);
    const float inv = 1.f / norm;
    for (int j = 0; j < dim; ++j) r[j] *= inv;
    divisors[static_cast<std::size_t>(i)] = norm;
  }
  return divisors;
}

// Pulls the incoming (typically row-sparse) gradient of the cosine matrix
// back through normalization and patch extraction into one feature map.
void backprop_cosine_side(TensorImpl& target, const std::vector<float>& own_n,
                          const std::vector<float>& own_div,
                          const std::vector<float>& other_n,
                          const float* dcorr, int n, int dim, bool transpose,
                          int channels, int height, int width, int patch,
                          int stride, int pad) {
  std::vector<float> d_normed(static_cast<std::size_t>(n) * dim, 0.f);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const float g = transpose ? dcorr[static_cast<std::size_t>(j) * n + i]
                                : dcorr[static_cast<std::size_t>(i) * n + j];
      if (g == 0.f) continue;
      const float* other = other_n.data() + static_cast<std::size_t>(j) * dim;
      float* acc = d_normed.data() + static_cast<std::size_t>(i) * dim;
      for (int d = 0; d < dim; ++d) acc[d] += g * other[d];
    }
  }
  std::vector<float> d_rows(static_cast<std::size_t>(n) * dim);
  for (int i = 0; i < n; ++i) {
    const float* dn = d_normed.data() + static_cast<std::size_t>(i) * dim;
    const float* hat = own_n.data() + static_cast<std::size_t>(i) * dim;
    float* out = d_rows.data() + static_cast<std::size_t>(i) * dim;
    const float div = own_div[static_cast<std::size_t>(i)];
    const float inv = 1.f / div;
    if (div > kNormFloor) {
      double dot = 0.0;
      for (int d = 0; d < dim; ++d) dot += static_cast<double>(dn[d]) * hat[d];
      const float proj = static_cast<float>(dot);
      for (int d = 0; d < dim; ++d) out[d] = (dn[d] - proj * hat[d]) * inv;
    } else {
      for (int d = 0; d < dim; ++d) out[d] = dn[d] * inv;
    }
  }
  std::vector<float> dmap(target.data.size(), 0.f);
  detail::scatter_patches_add(d_rows.data(), channels, height, width, patch,
                              stride, pad, dmap.data());
  detail::accumulate_grad(target, dmap.data(), dmap.size());
}

}  // namespace

LteParams LteParams::init(int channels, Xoshiro256& rng) {
  LteParams p;
  p.conv1 = Conv2dParams::init(channels, 1, 3, rng);
  p.conv2 = Conv2dParams::init(channels, channels, 3, rng);
  return p;
}

void LteParams::register_into(ParamSet& ps, const std::string& prefix) const {
  conv1.register_into(ps, prefix + ".conv1");
  conv2.register_into(ps, prefix + ".conv2");
}

Tensor lte_apply(const Tensor& image, const LteParams& params) {
  Tensor h = relu(conv2d(image, params.conv1.w, params.conv1.b, 1, 1));
  return conv2d(h, params.conv2.w, params.conv2.b, 1, 1);
}

TextureFeatures lte_extract(const Tensor& lr_up, const Tensor& ref_down_up,
                            const Tensor& ref, const LteParams& params) {
  if (lr_up.shape() != ref_down_up.shape()) {
    throw data_error("lte_extract: LR-up shape " + shape_str(lr_up.shape()) +
                     " does not match Ref-down-up shape " +
                     shape_str(ref_down_up.shape()));
  }
  TextureFeatures f;
  f.q = lte_apply(lr_up, params);
  f.k = lte_apply(ref_down_up, params);
  f.v = lte_apply(ref, params);
  return f;
}

CorrelationMap relevance_embed(const Tensor& q, const Tensor& k, int patch,
                               int stride) {
  if (q.shape() != k.shape()) {
    throw data_error("relevance_embed: Q shape " + shape_str(q.shape()) +
                     " does not match K shape " + shape_str(k.shape()));
  }
  if (q.rank() != 3) {
    throw data_error("relevance_embed: expected [C,H,W] features, got " +
                     shape_str(q.shape()));
  }
  const int channels = q.dim(0), height = q.dim(1), width = q.dim(2);
  const int pad = (patch - 1) / 2;
  const auto grid = detail::patch_grid(height, width, patch, stride, pad);
  const int n = grid.count();
  const int dim = channels * patch * patch;

  std::vector<float> qn(static_cast<std::size_t>(n) * dim);
  std::vector<float> kn(static_cast<std::size_t>(n) * dim);
  detail::extract_patches(q.data().data(), channels, height, width, patch,
                          stride, pad, qn.data());
  detail::extract_patches(k.data().data(), channels, height, width, patch,
                          stride, pad, kn.data());
  std::vector<float> qdiv = normalize_rows(qn, n, dim);
  std::vector<float> kdiv = normalize_rows(kn, n, dim);

  std::vector<float> corr(static_cast<std::size_t>(n) * n);
  MapRM(corr.data(), n, n).noalias() =
      ConstMapRM(qn.data(), n, dim) * ConstMapRM(kn.data(), n, dim).transpose();

  Tensor values = detail::make_op(
      "relevance_embed", {n, n}, std::move(corr), {q, k},
      [qn = std::move(qn), kn = std::move(kn), qdiv = std::move(qdiv),
       kdiv = std::move(kdiv), n, dim, channels, height, width, patch, stride,
       pad](TensorImpl& self) {
        auto& qv = *self.parents[0];
        auto& kv = *self.parents[1];
        if (qv.requires_grad) {
          backprop_cosine_side(qv, qn, qdiv, kn, self.grad.data(), n, dim,
                               /*transpose=*/false, channels, height, width,
                               patch, stride, pad);
        }
        if (kv.requires_grad) {
          backprop_cosine_side(kv, kn, kdiv, qn, self.grad.data(), n, dim,
                               /*transpose=*/true, channels, height, width,
                               patch, stride, pad);
        }
      });

  CorrelationMap map;
  map.values = std::move(values);
  map.q_height = height;
  map.q_width = width;
  map.grid_ny = grid.ny;
  map.grid_nx = grid.nx;
  return map;
}

std::pair<Tensor, HardIndexMap> hard_attention(const CorrelationMap& corr,
                                               const Tensor& v, int patch,
                                               int stride) {
  if (v.rank() != 3) {
    throw data_error("hard_attention: expected [C,H,W] V features, got " +
                     shape_str(v.shape()));
  }
  const int pad = (patch - 1) / 2;
  const auto vgrid = detail::patch_grid(v.dim(1), v.dim(2), patch, stride, pad);
  if (vgrid.count() != corr.cols()) {
    throw data_error("hard_attention: V unfolds into " +
                     std::to_string(vgrid.count()) + " patches but the "
                     "correlation map has " + std::to_string(corr.cols()) +
                     " columns");
  }

  const int rows = corr.rows(), cols = corr.cols();
  HardIndexMap idx;
  idx.index.resize(static_cast<std::size_t>(rows));
  const float* c = corr.values.data().data();
  for (int i = 0; i < rows; ++i) {
    const float* row = c + static_cast<std::size_t>(i) * cols;
    int best = 0;
    for (int j = 1; j < cols; ++j) {
      if (row[j] > row[best]) best = j;
    }
    idx.index[static_cast<std::size_t>(i)] = best;
  }

  Tensor vpatches = unfold(v, patch, stride, pad);
  Tensor gathered = gather_rows(vpatches, idx.index);
  Tensor t = fold(gathered, v.dim(0), corr.q_height, corr.q_width, patch,
                  stride, pad);
  return {std::move(t), std::move(idx)};
}

SoftScoreMap soft_score(const CorrelationMap& corr) {
  SoftScoreMap s;
  s.map = reshape(row_max(corr.values), {1, corr.grid_ny, corr.grid_nx});
  return s;
}

Tensor soft_attention_fuse(const Tensor& f_trunk, const Tensor& t,
                           const Tensor& s, const Conv2dParams& fusion) {
  if (f_trunk.rank() != 3 || t.rank() != 3) {
    throw data_error("soft_attention_fuse: expected [C,H,W] inputs");
  }
  if (f_trunk.dim(1) != t.dim(1) || f_trunk.dim(2) != t.dim(2)) {
    throw data_error("soft_attention_fuse: trunk " + shape_str(f_trunk.shape()) +
                     " and texture " + shape_str(t.shape()) +
                     " spatial sizes differ");
  }
  const int k = fusion.w.dim(2);
  Tensor residual = conv2d(concat_channels(f_trunk, t), fusion.w, fusion.b, 1,
                           (k - 1) / 2);
  return add(f_trunk, mul_channel_broadcast(residual, s));
}

}  // namespace tgan
