// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "tgan/error.hpp"

namespace tgan {

// ---------------------------------------------------------------------------
// TrainConfig.

void TrainConfig::validate() const {
  if (lr <= 0.f) throw data_error("config: lr must be positive");
  if (beta1 < 0.f || beta1 >= 1.f || beta2 < 0.f || beta2 >= 1.f) {
    throw data_error("config: beta1/beta2 must lie in [0,1)");
  }
  if (adam_eps <= 0.f) throw data_error("config: adam_eps must be positive");
  if (batch < 1) throw data_error("config: batch must be >= 1");
  if (steps < 0) throw data_error("config: steps must be >= 0");
  if (scale != 4) throw data_error("config: only scale 4 is supported");
  if (crop < 8 * scale) {
    throw data_error("config: crop must be at least " + std::to_string(8 * scale));
  }
  if (crop % scale != 0) throw data_error("config: crop must be divisible by the scale");
  if (blocks < 1) throw data_error("config: blocks must be >= 1");
  if (checkpoint_every < 0) throw data_error("config: checkpoint_every must be >= 0");
  if (weights.content < 0.f || weights.feature < 0.f || weights.adversarial < 0.f) {
    throw data_error("config: loss weights must be non-negative");
  }
  if (weights.content == 0.f && weights.feature == 0.f && weights.adversarial == 0.f) {
    throw data_error("config: at least one loss weight must be positive");
  }
}

namespace {

std::string fmt_float(float v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
  return buf;
}

float parse_float(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const float f = std::stof(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return f;
  } catch (const std::exception&) {
    throw usage_error("config: invalid value '" + v + "' for " + key);
  }
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw usage_error("config: invalid value '" + v + "' for " + key);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long i = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw usage_error("config: invalid value '" + v + "' for " + key);
  }
}

}  // namespace

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "lr=" << fmt_float(lr) << "\n";
  os << "beta1=" << fmt_float(beta1) << "\n";
  os << "beta2=" << fmt_float(beta2) << "\n";
  os << "adam_eps=" << fmt_float(adam_eps) << "\n";
  os << "batch=" << batch << "\n";
  os << "steps=" << steps << "\n";
  os << "seed=" << seed << "\n";
  os << "scale=" << scale << "\n";
  os << "crop=" << crop << "\n";
  os << "w_content=" << fmt_float(weights.content) << "\n";
  os << "w_feature=" << fmt_float(weights.feature) << "\n";
  os << "w_adv=" << fmt_float(weights.adversarial) << "\n";
  os << "blocks=" << blocks << "\n";
  os << "checkpoint_every=" << checkpoint_every << "\n";
  os << "ref_mode=" << (ref_mode == RefMode::corpus_crop ? "corpus_crop" : "self") << "\n";
  return os.str();
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "lr") lr = parse_float(key, value);
  else if (key == "beta1") beta1 = parse_float(key, value);
  else if (key == "beta2") beta2 = parse_float(key, value);
  else if (key == "adam_eps") adam_eps = parse_float(key, value);
  else if (key == "batch") batch = static_cast<int>(parse_i64(key, value));
  else if (key == "steps") steps = parse_i64(key, value);
  else if (key == "seed") seed = parse_u64(key, value);
  else if (key == "scale") scale = static_cast<int>(parse_i64(key, value));
  else if (key == "crop") crop = static_cast<int>(parse_i64(key, value));
  else if (key == "w_content") weights.content = parse_float(key, value);
  else if (key == "w_feature") weights.feature = parse_float(key, value);
  else if (key == "w_adv") weights.adversarial = parse_float(key, value);
  else if (key == "blocks") blocks = static_cast<int>(parse_i64(key, value));
  else if (key == "checkpoint_every") checkpoint_every = parse_i64(key, value);
  else if (key == "ref_mode") {
    if (value == "corpus_crop") ref_mode = RefMode::corpus_crop;
    else if (value == "self") ref_mode = RefMode::self;
    else throw usage_error("config: ref_mode must be corpus_crop or self, got '" + value + "'");
  } else {
    throw usage_error("config: unknown key '" + key + "'");
  }
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw usage_error("config line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    }
    cfg.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Adam.

AdamOptimizer::AdamOptimizer(float lr, float beta1, float beta2, float eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::attach(const ParamSet& params) {
  slots_.clear();
  for (const auto& e : params.entries()) {
    if (!e.learnable) continue;
    Slot s;
    s.name = e.name;
    s.m.assign(static_cast<std::size_t>(e.tensor.size()), 0.f);
    s.v.assign(static_cast<std::size_t>(e.tensor.size()), 0.f);
    slots_.push_back(std::move(s));
  }
}

void AdamOptimizer::step(ParamSet& params) {
  if (slots_.empty()) attach(params);
  ++t_;
  const double b1 = beta1_, b2 = beta2_;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  std::size_t slot_i = 0;
  for (auto& e : params.entries()) {
    if (!e.learnable) continue;
    Slot& slot = slots_.at(slot_i++);
    if (slot.name != e.name) {
      throw data_error("adam: state for '" + slot.name + "' does not match parameter '" + e.name + "'");
    }
    Tensor t = e.tensor;
    if (!t.has_grad()) {
      throw data_error("adam: missing gradient for parameter '" + e.name + "'");
    }
    auto g = t.grad();
    auto p = t.mutable_data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      const double m = b1 * slot.m[i] + (1.0 - b1) * gi;
      const double v = b2 * slot.v[i] + (1.0 - b2) * gi * gi;
      slot.m[i] = static_cast<float>(m);
      slot.v[i] = static_cast<float>(v);
      const double mhat = m / bias1;
      const double vhat = v / bias2;
      p[i] = static_cast<float>(p[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
    }
  }
}

// ---------------------------------------------------------------------------
// Trace formatting.

std::string format_trace(const std::vector<TraceRow>& rows) {
  std::ostringstream os;
  for (const auto& r : rows) {
    os << r.step << "," << fmt_float(r.content) << "," << fmt_float(r.feature)
       << "," << fmt_float(r.adversarial) << "," << fmt_float(r.disc) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Session.

void TrainerSession::build_param_sets() {
  gen_params_ = ParamSet();
  disc_params_ = ParamSet();
  generator_.register_into(gen_params_);
  discriminator_.register_into(disc_params_);
}

TrainerSession TrainerSession::initialize(const TrainConfig& cfg) {
  cfg.validate();
  TrainerSession s;
  s.config_ = cfg;
  s.rng_ = Xoshiro256(cfg.seed);
  GeneratorConfig gcfg;
  gcfg.blocks = cfg.blocks;
  gcfg.scale = cfg.scale;
  s.generator_ = GeneratorParams::init(gcfg, s.rng_);
  s.discriminator_ = DiscriminatorParams::init(s.rng_);
  s.build_param_sets();
  s.adam_g_ = AdamOptimizer(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  s.adam_d_ = AdamOptimizer(cfg.lr, cfg.beta1, cfg.beta2, cfg.adam_eps);
  s.adam_g_.attach(s.gen_params_);
  s.adam_d_.attach(s.disc_params_);
  return s;
}

Checkpoint TrainerSession::to_checkpoint() const {
  Checkpoint ckpt;
  ckpt.config_text = config_.to_text();
  for (const ParamSet* ps : {&gen_params_, &disc_params_}) {
    for (const auto& e : ps->entries()) {
      ckpt.tensors.push_back(TensorRecord{
          e.name, e.tensor.shape(),
          std::vector<float>(e.tensor.data().begin(), e.tensor.data().end())});
    }
  }
  auto dump_adam = [&](const AdamOptimizer& opt, const std::string& prefix) {
    for (const auto& slot : opt.slots()) {
      const int n = static_cast<int>(slot.m.size());
      ckpt.adam_tensors.push_back(TensorRecord{prefix + ".m." + slot.name, {n}, slot.m});
      ckpt.adam_tensors.push_back(TensorRecord{prefix + ".v." + slot.name, {n}, slot.v});
    }
    ckpt.adam_tensors.push_back(TensorRecord{
        prefix + ".t", {1}, {static_cast<float>(opt.step_count())}});
  };
  dump_adam(adam_g_, "adam_g");
  dump_adam(adam_d_, "adam_d");
  ckpt.rng_state = rng_.state();
  ckpt.step = static_cast<std::uint64_t>(step_);
  return ckpt;
}

TrainerSession TrainerSession::from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.version != 1) {
    throw data_error("checkpoint version " + std::to_string(ckpt.version) +
                     " is not supported (expected 1)");
  }
  TrainConfig cfg = TrainConfig::from_text(ckpt.config_text);
  TrainerSession s = initialize(cfg);

  for (const auto& rec : ckpt.tensors) {
    Tensor* t = s.gen_params_.find(rec.name);
    if (!t) t = s.disc_params_.find(rec.name);
    if (!t) throw data_error("checkpoint names unknown tensor '" + rec.name + "'");
    if (t->shape() != rec.shape) {
      throw data_error("checkpoint tensor '" + rec.name + "' has shape " +
                       shape_str(rec.shape) + ", expected " + shape_str(t->shape()));
    }
    std::copy(rec.data.begin(), rec.data.end(), t->mutable_data().begin());
  }

  auto load_adam = [&](AdamOptimizer& opt, const std::string& prefix) {
    for (auto& slot : opt.slots()) {
      for (const char* kind : {"m", "v"}) {
        const std::string name = prefix + "." + kind + "." + slot.name;
        const TensorRecord* found = nullptr;
        for (const auto& rec : ckpt.adam_tensors) {
          if (rec.name == name) {
            found = &rec;
            break;
          }
        }
        if (!found) throw data_error("checkpoint is missing optimizer state '" + name + "'");
        auto& dst = kind[0] == 'm' ? slot.m : slot.v;
        if (found->data.size() != dst.size()) {
          throw data_error("checkpoint optimizer state '" + name + "' has wrong length");
        }
        dst = found->data;
      }
    }
    const std::string tname = prefix + ".t";
    for (const auto& rec : ckpt.adam_tensors) {
      if (rec.name == tname) {
        opt.set_step_count(static_cast<std::int64_t>(rec.data.at(0)));
        return;
      }
    }
    throw data_error("checkpoint is missing optimizer state '" + tname + "'");
  };
  load_adam(s.adam_g_, "adam_g");
  load_adam(s.adam_d_, "adam_d");

  s.rng_.set_state(ckpt.rng_state);
  s.step_ = static_cast<std::int64_t>(ckpt.step);
  return s;
}

namespace {

Tensor crop_to_tensor(const Image& img, int y, int x, int size) {
  std::vector<float> data(static_cast<std::size_t>(size) * size);
  for (int yy = 0; yy < size; ++yy) {
    for (int xx = 0; xx < size; ++xx) {
      data[static_cast<std::size_t>(yy) * size + xx] = img.at(y + yy, x + xx);
    }
  }
  return Tensor::from_data({1, size, size}, std::move(data));
}

Tensor downsample_tensor(const Tensor& hr, int factor) {
  NoGradGuard guard;
  return avg_pool2d(hr, factor);
}

}  // namespace

std::vector<TraceRow> TrainerSession::run(
    const std::vector<Image>& hr_corpus, std::int64_t steps,
    const std::function<void(std::int64_t)>& on_checkpoint) {
  if (hr_corpus.empty()) throw data_error("train: corpus is empty");
  const int crop = config_.crop;
  for (std::size_t i = 0; i < hr_corpus.size(); ++i) {
    if (hr_corpus[i].height < crop || hr_corpus[i].width < crop) {
      throw data_error("train: corpus image " + std::to_string(i) + " (" +
                       std::to_string(hr_corpus[i].height) + "x" +
                       std::to_string(hr_corpus[i].width) +
                       ") is smaller than the crop size " + std::to_string(crop));
    }
  }

  std::vector<Image> normalized;
  normalized.reserve(hr_corpus.size());
  for (const auto& img : hr_corpus) normalized.push_back(zero_mean_normalize(img));

  std::vector<TraceRow> trace;
  trace.reserve(static_cast<std::size_t>(steps));
  const int batch = config_.batch;
  const LossWeights& w = config_.weights;

  for (std::int64_t s = 0; s < steps; ++s) {
    ++step_;

    // Sample the batch (fixed RNG consumption order).
    struct Sample {
      Tensor hr, lr;
      std::optional<Tensor> ref;
    };
    std::vector<Sample> samples;
    samples.reserve(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) {
      const auto i = static_cast<std::size_t>(rng_.next_below(normalized.size()));
      const auto& img = normalized[i];
      const int y = static_cast<int>(rng_.next_below(static_cast<std::uint64_t>(img.height - crop + 1)));
      const int x = static_cast<int>(rng_.next_below(static_cast<std::uint64_t>(img.width - crop + 1)));
      Sample smp;
      smp.hr = crop_to_tensor(img, y, x, crop);
      smp.lr = downsample_tensor(smp.hr, config_.scale);
      if (config_.ref_mode == TrainConfig::RefMode::corpus_crop) {
        const auto ri = static_cast<std::size_t>(rng_.next_below(normalized.size()));
        const auto& rimg = normalized[ri];
        const int ry = static_cast<int>(rng_.next_below(static_cast<std::uint64_t>(rimg.height - crop + 1)));
        const int rx = static_cast<int>(rng_.next_below(static_cast<std::uint64_t>(rimg.width - crop + 1)));
        smp.ref = crop_to_tensor(rimg, ry, rx, crop);
      }
      samples.push_back(std::move(smp));
    }

    // Generator forwards.
    std::vector<Tensor> sr;
    sr.reserve(samples.size());
    for (auto& smp : samples) {
      sr.push_back(generator_forward(smp.lr, smp.ref, generator_, /*training=*/true));
    }

    // Discriminator update on real crops vs detached SR outputs.
    Tensor d_loss_sum;
    for (int b = 0; b < batch; ++b) {
      Tensor d_real = disc_forward(samples[static_cast<std::size_t>(b)].hr, discriminator_, true);
      Tensor d_fake = disc_forward(sr[static_cast<std::size_t>(b)].detach(), discriminator_, true);
      Tensor term = discriminator_loss(d_real, d_fake);
      d_loss_sum = b == 0 ? term : add(d_loss_sum, term);
    }
    Tensor d_loss = mul(d_loss_sum, 1.f / static_cast<float>(batch));
    gen_params_.zero_grad();
    disc_params_.zero_grad();
    backward(d_loss);
    adam_d_.step(disc_params_);

    // Generator update against the refreshed discriminator.
    Tensor content_sum, feature_sum, adv_sum;
    for (int b = 0; b < batch; ++b) {
      const Tensor& out = sr[static_cast<std::size_t>(b)];
      const Tensor& hr = samples[static_cast<std::size_t>(b)].hr;
      Tensor c = content_mse_loss(out, hr);
      content_sum = b == 0 ? c : add(content_sum, c);
      if (w.feature > 0.f) {
        Tensor f = feature_loss(out, hr, generator_.lte);
        feature_sum = b == 0 ? f : add(feature_sum, f);
      }
      Tensor d_fake = disc_forward(out, discriminator_, true);
      Tensor a = adversarial_gen_loss(d_fake);
      adv_sum = b == 0 ? a : add(adv_sum, a);
    }
    const float inv_batch = 1.f / static_cast<float>(batch);
    Tensor content_mean = mul(content_sum, inv_batch);
    Tensor feature_mean = w.feature > 0.f ? mul(feature_sum, inv_batch) : Tensor::scalar(0.f);
    // Content and feature terms are batch means; the adversarial term stays a
    // sum over the batch samples.
    Tensor g_loss = mul(content_mean, w.content);
    if (w.feature > 0.f) g_loss = add(g_loss, mul(feature_mean, w.feature));
    if (w.adversarial > 0.f) g_loss = add(g_loss, mul(adv_sum, w.adversarial));

    TraceRow row;
    row.step = step_;
    row.content = content_mean.value();
    row.feature = feature_mean.value();
    row.adversarial = adv_sum.value();
    row.disc = d_loss.value();
    if (!std::isfinite(row.content) || !std::isfinite(row.feature) ||
        !std::isfinite(row.adversarial) || !std::isfinite(row.disc)) {
      throw numeric_error("train: non-finite loss at step " + std::to_string(step_));
    }

    gen_params_.zero_grad();
    disc_params_.zero_grad();
    backward(g_loss);
    adam_g_.step(gen_params_);

    trace.push_back(row);
    if (on_checkpoint && config_.checkpoint_every > 0 &&
        step_ % config_.checkpoint_every == 0) {
      on_checkpoint(step_);
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Image bridges.

Tensor image_to_tensor(const Image& img) {
  return Tensor::from_data({1, img.height, img.width}, img.pixels);
}

Image tensor_to_image(const Tensor& t, float max_value) {
  if (t.rank() != 3 || t.dim(0) != 1) {
    throw data_error("tensor_to_image: expected [1,H,W], got " + shape_str(t.shape()));
  }
  Image img;
  img.height = t.dim(1);
  img.width = t.dim(2);
  img.max_value = max_value;
  img.pixels.assign(t.data().begin(), t.data().end());
  return img;
}

Image super_resolve(const Image& lr, const std::optional<Image>& ref,
                    GeneratorParams& params) {
  const Image lr_norm = zero_mean_normalize(lr);
  std::optional<Tensor> ref_tensor;
  if (ref.has_value()) {
    ref_tensor = image_to_tensor(zero_mean_normalize(*ref));
  }
  NoGradGuard guard;
  Tensor out = generator_forward(image_to_tensor(lr_norm), ref_tensor, params,
                                 /*training=*/false);
  Image sr = tensor_to_image(out, lr.max_value);
  sr.norm_stats = lr_norm.norm_stats;
  return denormalize(sr);
}

}  // namespace tgan
