// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "tgan/params.hpp"
#include "tgan/rng.hpp"
#include "tgan/tensor.hpp"

namespace tgan {

inline constexpr float kBatchNormEps = 1e-5f;
inline constexpr float kBatchNormMomentum = 0.1f;

struct Conv2dParams {
  Tensor w;  // [out, in, k, k]
  Tensor b;  // [out]

  static Conv2dParams init(int out_channels, int in_channels, int k, Xoshiro256& rng);
  void register_into(ParamSet& ps, const std::string& prefix) const;
};

struct BatchNormParams {
  Tensor gamma, beta;              // learnable, [C]
  Tensor running_mean, running_var;  // buffers, [C]

  static BatchNormParams init(int channels);
  void register_into(ParamSet& ps, const std::string& prefix) const;
};

// Kaiming-uniform fan-in fill: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
void kaiming_uniform_fill(Tensor& t, int fan_in, Xoshiro256& rng);

// conv + batch_norm with this module's fixed eps/momentum.
Tensor conv_bn(const Tensor& x, const Conv2dParams& conv, BatchNormParams& bn,
               int stride, int pad, bool training);

}  // namespace tgan
