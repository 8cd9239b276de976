// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/generator.hpp"

#include "tgan/error.hpp"
#include "tgan/image.hpp"

namespace tgan {

GeneratorParams GeneratorParams::init(const GeneratorConfig& cfg, Xoshiro256& rng) {
  if (cfg.scale != 4) {
    throw data_error("generator: only scale 4 is supported, got " + std::to_string(cfg.scale));
  }
  GeneratorParams p;
  p.config = cfg;
  const int w = cfg.width, c = cfg.texture_channels;
  p.head = Conv2dParams::init(w, 1, 3, rng);
  p.blocks.reserve(static_cast<std::size_t>(cfg.blocks));
  for (int i = 0; i < cfg.blocks; ++i) {
    ResBlockParams rb;
    rb.conv1 = Conv2dParams::init(w, w, 3, rng);
    rb.bn1 = BatchNormParams::init(w);
    rb.conv2 = Conv2dParams::init(w, w, 3, rng);
    rb.bn2 = BatchNormParams::init(w);
    p.blocks.push_back(std::move(rb));
  }
  p.lte = LteParams::init(c, rng);
  p.fusion = Conv2dParams::init(w, w + c, 3, rng);
  p.up1 = Conv2dParams::init(4 * w, w, 3, rng);
  p.up2 = Conv2dParams::init(4 * w, w, 3, rng);
  p.tail = Conv2dParams::init(1, w, 3, rng);
  return p;
}

void GeneratorParams::register_into(ParamSet& ps) const {
  head.register_into(ps, "gen.head");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = "gen.res" + std::to_string(i);
    blocks[i].conv1.register_into(ps, prefix + ".conv1");
    blocks[i].bn1.register_into(ps, prefix + ".bn1");
    blocks[i].conv2.register_into(ps, prefix + ".conv2");
    blocks[i].bn2.register_into(ps, prefix + ".bn2");
  }
  lte.register_into(ps, "gen.lte");
  fusion.register_into(ps, "gen.fusion");
  up1.register_into(ps, "gen.up1");
  up2.register_into(ps, "gen.up2");
  tail.register_into(ps, "gen.tail");
}

std::int64_t GeneratorParams::parameter_count(const GeneratorConfig& cfg) {
  const std::int64_t w = cfg.width, c = cfg.texture_channels, b = cfg.blocks;
  const std::int64_t head = 9 * w + w;
  const std::int64_t block = 2 * (9 * w * w + w) + 4 * w;
  const std::int64_t lte = (9 * c + c) + (9 * c * c + c);
  const std::int64_t fusion = 9 * (w + c) * w + w;
  const std::int64_t up = 2 * (36 * w * w + 4 * w);
  const std::int64_t tail = 9 * w + 1;
  return head + b * block + lte + fusion + up + tail;
}

Tensor residual_block(const Tensor& x, ResBlockParams& params, bool training) {
  if (x.rank() != 3 || x.dim(0) != params.conv1.w.dim(1)) {
    throw data_error("residual_block: input " + shape_str(x.shape()) +
                     " does not match block width " +
                     std::to_string(params.conv1.w.dim(1)));
  }
  Tensor h = conv_bn(x, params.conv1, params.bn1, 1, 1, training);
  h = relu(h);
  h = conv_bn(h, params.conv2, params.bn2, 1, 1, training);
  return add(x, h);
}

Tensor bicubic_resize_tensor(const Tensor& t, int num, int den) {
  if (t.rank() != 3 || t.dim(0) != 1) {
    throw data_error("bicubic_resize_tensor: expected [1,H,W], got " + shape_str(t.shape()));
  }
  const int h = t.dim(1), w = t.dim(2);
  const int oh = h * num / den, ow = w * num / den;
  if (oh < 1 || ow < 1) throw data_error("bicubic_resize_tensor: output dimension < 1");
  std::vector<float> out(static_cast<std::size_t>(oh) * ow);
  bicubic_resize_plane(t.data().data(), h, w, out.data(), oh, ow);
  return Tensor::from_data({1, oh, ow}, std::move(out));
}

Tensor generator_forward(const Tensor& lr, const std::optional<Tensor>& ref,
                         GeneratorParams& params, bool training) {
  if (lr.rank() != 3 || lr.dim(0) != 1) {
    throw data_error("generator: LR input must be [1,h,w], got " + shape_str(lr.shape()));
  }
  const int h = lr.dim(1), w = lr.dim(2);
  if (h < 8 || w < 8) {
    throw data_error("generator: LR input " + std::to_string(h) + "x" +
                     std::to_string(w) + " is below the 8x8 minimum");
  }
  const int r = params.config.scale;

  Tensor lr_up = bicubic_resize_tensor(lr, r, 1);
  Tensor ref_eff = lr_up;
  if (ref.has_value()) {
    if (ref->rank() != 3 || ref->dim(0) != 1 || ref->dim(1) != r * h ||
        ref->dim(2) != r * w) {
      throw data_error("generator: reference must be [1," + std::to_string(r * h) +
                       "," + std::to_string(r * w) + "], got " +
                       shape_str(ref->shape()));
    }
    ref_eff = *ref;
  }
  Tensor ref_down_up = bicubic_resize_tensor(bicubic_resize_tensor(ref_eff, 1, r), r, 1);

  // Residual trunk at LR scale.
  Tensor x = relu(conv2d(lr, params.head.w, params.head.b, 1, 1));
  for (auto& block : params.blocks) {
    x = residual_block(x, block, training);
  }

  // Texture channel at LR-up scale, pooled back to trunk scale.
  TextureFeatures feats = lte_extract(lr_up, ref_down_up, ref_eff, params.lte);
  CorrelationMap corr = relevance_embed(feats.q, feats.k, 3, 1);
  auto [t_full, idx] = hard_attention(corr, feats.v, 3, 1);
  SoftScoreMap s_full = soft_score(corr);
  Tensor t_small = avg_pool2d(t_full, r);
  Tensor s_small = avg_pool2d(s_full.map, r);

  x = soft_attention_fuse(x, t_small, s_small, params.fusion);

  // Two x2 sub-pixel stages and the global bicubic skip.
  x = relu(pixel_shuffle(conv2d(x, params.up1.w, params.up1.b, 1, 1), 2));
  x = relu(pixel_shuffle(conv2d(x, params.up2.w, params.up2.b, 1, 1), 2));
  Tensor sr = conv2d(x, params.tail.w, params.tail.b, 1, 1);
  return add(sr, lr_up);
}

}  // namespace tgan
