// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "tgan/layers.hpp"

namespace tgan {

// SRGAN-style binary classifier: four conv blocks with x2 downsampling
// (channels 1 -> 32 -> 64 -> 128 -> 256, batch norm on all but the first,
// LeakyReLU 0.2), global average pooling, one affine layer, sigmoid.
//
// Downsampling uses conv(stride 1) + 2x2 average pooling rather than a
// strided convolution: the conv contract requires the output size to divide
// exactly, which no odd kernel satisfies at stride 2 on even inputs.
struct DiscriminatorParams {
  Conv2dParams conv1, conv2, conv3, conv4;
  BatchNormParams bn2, bn3, bn4;
  Tensor affine_w;  // [1, 256]
  Tensor affine_b;  // [1]

  static DiscriminatorParams init(Xoshiro256& rng);
  void register_into(ParamSet& ps) const;
};

// img [1,H,W] with H,W >= 16 -> scalar probability in (0,1), shape [1].
Tensor disc_forward(const Tensor& img, DiscriminatorParams& params, bool training);

}  // namespace tgan
