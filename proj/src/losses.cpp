// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/losses.hpp"

#include "tgan/error.hpp"

namespace tgan {

namespace {

constexpr float kLogFloor = 1e-8f;
constexpr float kRangeEps = 1e-6f;

void require_probability(const char* tag, const Tensor& d) {
  if (d.size() != 1) {
    throw data_error(std::string(tag) + ": expected a scalar, got shape " +
                     shape_str(d.shape()));
  }
  const float v = d.data()[0];
  if (v < -kRangeEps || v > 1.f + kRangeEps) {
    throw data_error(std::string(tag) + ": probability " + std::to_string(v) +
                     " outside (0,1)");
  }
}

LteParams detach_lte(const LteParams& lte) {
  LteParams d;
  d.conv1.w = lte.conv1.w.detach();
  d.conv1.b = lte.conv1.b.detach();
  d.conv2.w = lte.conv2.w.detach();
  d.conv2.b = lte.conv2.b.detach();
  return d;
}

}  // namespace

Tensor content_mse_loss(const Tensor& sr, const Tensor& hr) {
  if (sr.shape() != hr.shape()) {
    throw data_error("content_mse_loss: shape mismatch " + shape_str(sr.shape()) +
                     " vs " + shape_str(hr.shape()));
  }
  Tensor d = sub(hr, sr);
  return mean(mul(d, d));
}

Tensor feature_loss(const Tensor& sr, const Tensor& hr, const LteParams& lte) {
  if (sr.shape() != hr.shape()) {
    throw data_error("feature_loss: shape mismatch " + shape_str(sr.shape()) +
                     " vs " + shape_str(hr.shape()));
  }
  const LteParams frozen = detach_lte(lte);
  Tensor fs = lte_apply(sr, frozen);
  Tensor fh = lte_apply(hr, frozen);
  return content_mse_loss(fs, fh);
}

Tensor adversarial_gen_loss(const Tensor& d_out) {
  require_probability("adversarial_gen_loss", d_out);
  return mul(log_guarded(d_out, kLogFloor), -1.f);
}

Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake) {
  require_probability("discriminator_loss", d_real);
  require_probability("discriminator_loss", d_fake);
  Tensor real_term = log_guarded(d_real, kLogFloor);
  Tensor fake_term = log_guarded(sub(1.f, d_fake), kLogFloor);
  return mul(add(real_term, fake_term), -1.f);
}

Tensor total_generator_loss(const Tensor& sr, const Tensor& hr,
                            const Tensor& d_fake, const LteParams& lte,
                            const LossWeights& weights) {
  if (weights.content < 0.f || weights.feature < 0.f || weights.adversarial < 0.f) {
    throw data_error("total_generator_loss: weights must be non-negative");
  }
  if (weights.content == 0.f && weights.feature == 0.f && weights.adversarial == 0.f) {
    throw data_error("total_generator_loss: at least one weight must be positive");
  }
  Tensor total = mul(content_mse_loss(sr, hr), weights.content);
  if (weights.feature > 0.f) {
    total = add(total, mul(feature_loss(sr, hr, lte), weights.feature));
  }
  if (weights.adversarial > 0.f) {
    total = add(total, mul(adversarial_gen_loss(d_fake), weights.adversarial));
  }
  return total;
}

}  // namespace tgan
