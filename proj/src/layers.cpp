// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/layers.hpp"

#include <cmath>

namespace tgan {

void kaiming_uniform_fill(Tensor& t, int fan_in, Xoshiro256& rng) {
  const float bound = std::sqrt(6.f / static_cast<float>(fan_in));
  for (float& v : t.mutable_data()) v = rng.uniform(-bound, bound);
}

Conv2dParams Conv2dParams::init(int out_channels, int in_channels, int k,
                                Xoshiro256& rng) {
  Conv2dParams p;
  p.w = Tensor::zeros({out_channels, in_channels, k, k}, true);
  kaiming_uniform_fill(p.w, in_channels * k * k, rng);
  p.b = Tensor::zeros({out_channels}, true);
  return p;
}

void Conv2dParams::register_into(ParamSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".w", w);
  ps.add(prefix + ".b", b);
}

BatchNormParams BatchNormParams::init(int channels) {
  BatchNormParams p;
  p.gamma = Tensor::full({channels}, 1.f, true);
  p.beta = Tensor::zeros({channels}, true);
  p.running_mean = Tensor::zeros({channels});
  p.running_var = Tensor::full({channels}, 1.f);
  return p;
}

void BatchNormParams::register_into(ParamSet& ps, const std::string& prefix) const {
  ps.add(prefix + ".gamma", gamma);
  ps.add(prefix + ".beta", beta);
  ps.add_buffer(prefix + ".running_mean", running_mean);
  ps.add_buffer(prefix + ".running_var", running_var);
}

Tensor conv_bn(const Tensor& x, const Conv2dParams& conv, BatchNormParams& bn,
               int stride, int pad, bool training) {
  Tensor y = conv2d(x, conv.w, conv.b, stride, pad);
  return batch_norm(y, bn.gamma, bn.beta, bn.running_mean, bn.running_var,
                    kBatchNormEps, kBatchNormMomentum, training);
}

}  // namespace tgan
