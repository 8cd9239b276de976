// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "tgan/layers.hpp"
#include "tgan/tensor.hpp"

namespace tgan {

// Learnable texture extractor: two 3x3 convolutions (1 -> C -> C channels)
// with a ReLU between, sharing one parameter set across the Q/K/V calls.
struct LteParams {
  Conv2dParams conv1;  // 1 -> channels
  Conv2dParams conv2;  // channels -> channels

  static LteParams init(int channels, Xoshiro256& rng);
  void register_into(ParamSet& ps, const std::string& prefix) const;
};

struct TextureFeatures {
  Tensor q, k, v;
};

// Cosine similarities between all Q and K patches; rows index Q patches,
// columns index K patches. Entries lie in [-1, 1] up to rounding.
struct CorrelationMap {
  Tensor values;  // [N_q, N_k]
  int q_height = 0, q_width = 0;    // spatial size of Q
  int grid_ny = 0, grid_nx = 0;     // unfold grid of Q

  int rows() const { return values.dim(0); }
  int cols() const { return values.dim(1); }
};

// Per-Q-patch index of the best-matching K patch.
struct HardIndexMap {
  std::vector<int> index;
};

// Per-Q-patch maximum correlation, on the Q grid.
struct SoftScoreMap {
  Tensor map;  // [1, grid_ny, grid_nx]
};

// Q = E(lr_up), K = E(ref_down_up), V = E(ref), one shared extractor E.
TextureFeatures lte_extract(const Tensor& lr_up, const Tensor& ref_down_up,
                            const Tensor& ref, const LteParams& params);

// Runs the extractor on a single image (the shared E above).
Tensor lte_apply(const Tensor& image, const LteParams& params);

// Normalized inner products over unfolded patches; zero-norm patches use a
// guarded norm max(||.||, 1e-8). Differentiable in Q and K; the backward
// pass exploits the sparsity of the incoming gradient.
CorrelationMap relevance_embed(const Tensor& q, const Tensor& k,
                               int patch = 3, int stride = 1);

// Transfers the best-matching V patch per Q position (ties to the lowest
// index) and folds them back at Q's spatial size with overlap averaging.
// Gradients flow to V; the selection indices are treated as constants.
std::pair<Tensor, HardIndexMap> hard_attention(const CorrelationMap& corr,
                                               const Tensor& v,
                                               int patch = 3, int stride = 1);

SoftScoreMap soft_score(const CorrelationMap& corr);

// F_out = F_trunk + conv(concat(F_trunk, T)) * S, with S broadcast across
// channels.
Tensor soft_attention_fuse(const Tensor& f_trunk, const Tensor& t,
                           const Tensor& s, const Conv2dParams& fusion);

}  // namespace tgan
