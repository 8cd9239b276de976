// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "tgan/layers.hpp"
#include "tgan/texture.hpp"

namespace tgan {

struct GeneratorConfig {
  int blocks = 4;            // residual blocks in the trunk
  int width = 64;            // trunk channels
  int texture_channels = 32; // extractor channels
  int scale = 4;             // fixed x4 (two x2 sub-pixel stages)
};

struct ResBlockParams {
  Conv2dParams conv1;
  BatchNormParams bn1;
  Conv2dParams conv2;
  BatchNormParams bn2;
};

// Two-channel x4 generator: residual trunk at LR scale plus a texture
// channel at LR-up scale (pooled back to trunk scale for fusion), two x2
// sub-pixel stages, and a global bicubic skip.
struct GeneratorParams {
  GeneratorConfig config;
  Conv2dParams head;  // 1 -> width
  std::vector<ResBlockParams> blocks;
  LteParams lte;
  Conv2dParams fusion;  // width+texture_channels -> width
  Conv2dParams up1;     // width -> 4*width
  Conv2dParams up2;     // width -> 4*width
  Conv2dParams tail;    // width -> 1

  static GeneratorParams init(const GeneratorConfig& cfg, Xoshiro256& rng);
  void register_into(ParamSet& ps) const;

  // Learnable scalar count as a closed-form function of the config:
  //   head:    9W + W
  //   block:   2(9W^2 + W) + 4W, times blocks
  //   lte:     (9C + C) + (9C^2 + C)
  //   fusion:  9(W+C)W + W
  //   up1/up2: 2 * (36W^2 + 4W)
  //   tail:    9W + 1
  static std::int64_t parameter_count(const GeneratorConfig& cfg);
};

// out = x + bn2(conv2(relu(bn1(conv1(x))))), x [width,H,W].
Tensor residual_block(const Tensor& x, ResBlockParams& params, bool training);

// lr [1,h,w] (h,w >= 8); ref, when given, must be [1,4h,4w]; absent ref
// defaults to the bicubic LR-up image. Output [1,4h,4w].
Tensor generator_forward(const Tensor& lr, const std::optional<Tensor>& ref,
                         GeneratorParams& params, bool training);

// Bicubic resampling of a [1,H,W] tensor by num/den (no gradient history).
Tensor bicubic_resize_tensor(const Tensor& t, int num, int den);

}  // namespace tgan
