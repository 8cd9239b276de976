// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "tgan/texture.hpp"

namespace tgan {

struct LossWeights {
  float content = 1.f;
  float feature = 5e-3f;
  float adversarial = 1e-3f;
};

// Mean of squared pixel differences over all elements. Scalar tensor.
Tensor content_mse_loss(const Tensor& sr, const Tensor& hr);

// Mean squared difference between the texture extractor's feature maps of
// hr and sr. Gradients flow to sr only; the extractor weights are detached
// so the loss cannot collapse its own feature space.
Tensor feature_loss(const Tensor& sr, const Tensor& hr, const LteParams& lte);

// -log(max(d_out, 1e-8)); d_out must lie in (0,1) up to a small epsilon.
Tensor adversarial_gen_loss(const Tensor& d_out);

// -log(d_real) - log(1 - d_fake), same guards.
Tensor discriminator_loss(const Tensor& d_real, const Tensor& d_fake);

// weights.content * content + weights.feature * feature + weights.adversarial * adv.
// The feature term is skipped entirely when its weight is zero.
Tensor total_generator_loss(const Tensor& sr, const Tensor& hr,
                            const Tensor& d_fake, const LteParams& lte,
                            const LossWeights& weights);

}  // namespace tgan
