// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/discriminator.hpp"

#include "tgan/error.hpp"

namespace tgan {

namespace {
constexpr float kLeakySlope = 0.2f;
}

DiscriminatorParams DiscriminatorParams::init(Xoshiro256& rng) {
  DiscriminatorParams p;
  p.conv1 = Conv2dParams::init(32, 1, 3, rng);
  p.conv2 = Conv2dParams::init(64, 32, 3, rng);
  p.conv3 = Conv2dParams::init(128, 64, 3, rng);
  p.conv4 = Conv2dParams::init(256, 128, 3, rng);
  p.bn2 = BatchNormParams::init(64);
  p.bn3 = BatchNormParams::init(128);
  p.bn4 = BatchNormParams::init(256);
  p.affine_w = Tensor::zeros({1, 256}, true);
  kaiming_uniform_fill(p.affine_w, 256, rng);
  p.affine_b = Tensor::zeros({1}, true);
  return p;
}

void DiscriminatorParams::register_into(ParamSet& ps) const {
  conv1.register_into(ps, "disc.conv1");
  conv2.register_into(ps, "disc.conv2");
  bn2.register_into(ps, "disc.bn2");
  conv3.register_into(ps, "disc.conv3");
  bn3.register_into(ps, "disc.bn3");
  conv4.register_into(ps, "disc.conv4");
  bn4.register_into(ps, "disc.bn4");
  ps.add("disc.affine.w", affine_w);
  ps.add("disc.affine.b", affine_b);
}

Tensor disc_forward(const Tensor& img, DiscriminatorParams& params, bool training) {
  if (img.rank() != 3 || img.dim(0) != 1) {
    throw data_error("discriminator: input must be [1,H,W], got " + shape_str(img.shape()));
  }
  if (img.dim(1) < 16 || img.dim(2) < 16) {
    throw data_error("discriminator: input " + std::to_string(img.dim(1)) + "x" +
                     std::to_string(img.dim(2)) + " is below the 16x16 minimum");
  }

  Tensor x = leaky_relu(avg_pool2d(conv2d(img, params.conv1.w, params.conv1.b, 1, 1), 2), kLeakySlope);

  auto block = [&](const Tensor& in, const Conv2dParams& conv, BatchNormParams& bn) {
    Tensor y = avg_pool2d(conv2d(in, conv.w, conv.b, 1, 1), 2);
    y = batch_norm(y, bn.gamma, bn.beta, bn.running_mean, bn.running_var,
                   kBatchNormEps, kBatchNormMomentum, training);
    return leaky_relu(y, kLeakySlope);
  };
  x = block(x, params.conv2, params.bn2);
  x = block(x, params.conv3, params.bn3);
  x = block(x, params.conv4, params.bn4);

  Tensor pooled = reshape(spatial_mean(x), {256, 1});
  Tensor logit = add(matmul(params.affine_w, pooled), reshape(params.affine_b, {1, 1}));
  return reshape(sigmoid(logit), {1});
}

}  // namespace tgan
