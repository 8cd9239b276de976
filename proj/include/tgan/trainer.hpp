// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tgan/discriminator.hpp"
#include "tgan/generator.hpp"
#include "tgan/image.hpp"
#include "tgan/losses.hpp"
#include "tgan/rng.hpp"

namespace tgan {

struct TrainConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float adam_eps = 1e-8f;
  int batch = 4;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  int scale = 4;
  int crop = 64;  // HR crop size; must divide by scale
  LossWeights weights;
  int blocks = 4;
  std::int64_t checkpoint_every = 0;  // 0: only on completion
  enum class RefMode { corpus_crop, self };
  RefMode ref_mode = RefMode::corpus_crop;

  void validate() const;
  std::string to_text() const;  // canonical key=value form (checkpoint snapshot)
  static TrainConfig from_text(const std::string& text);
  void set(const std::string& key, const std::string& value);
};

class AdamOptimizer {
 public:
  AdamOptimizer(float lr, float beta1, float beta2, float eps);

  // Allocates zero moment buffers for every learnable entry.
  void attach(const ParamSet& params);

  // m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2;  p <- p - lr mhat/(sqrt(vhat)+eps).
  // Every learnable entry must carry a gradient.
  void step(ParamSet& params);

  struct Slot {
    std::string name;
    std::vector<float> m, v;
  };
  const std::vector<Slot>& slots() const { return slots_; }
  std::vector<Slot>& slots() { return slots_; }
  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }
  float learning_rate() const { return lr_; }

 private:
  float lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Slot> slots_;
};

struct TensorRecord {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  std::uint32_t version = 1;
  std::string config_text;
  std::vector<TensorRecord> tensors;       // model parameters and buffers
  std::vector<TensorRecord> adam_tensors;  // moment buffers plus step counters
  Xoshiro256::State rng_state{};
  std::uint64_t step = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TraceRow {
  std::int64_t step = 0;
  float content = 0.f;
  float feature = 0.f;
  float adversarial = 0.f;
  float disc = 0.f;
};

// "step,l_content,l_feature,l_adv,l_disc" rows, one per line.
std::string format_trace(const std::vector<TraceRow>& rows);

// Owns model parameters, both optimizers, the RNG stream, and the step
// counter; everything round-trips through a checkpoint bit-exactly.
class TrainerSession {
 public:
  static TrainerSession initialize(const TrainConfig& cfg);
  static TrainerSession from_checkpoint(const Checkpoint& ckpt);
  Checkpoint to_checkpoint() const;

  // Runs `steps` further alternating D/G updates on random HR crops from the
  // corpus. on_checkpoint (when set) fires every config.checkpoint_every
  // steps. Aborts with a numeric error if any loss becomes non-finite.
  std::vector<TraceRow> run(const std::vector<Image>& hr_corpus,
                            std::int64_t steps,
                            const std::function<void(std::int64_t)>& on_checkpoint = {});

  const TrainConfig& config() const { return config_; }
  GeneratorParams& generator() { return generator_; }
  DiscriminatorParams& discriminator() { return discriminator_; }
  std::int64_t step() const { return step_; }

 private:
  TrainerSession() = default;
  void build_param_sets();

  TrainConfig config_;
  GeneratorParams generator_;
  DiscriminatorParams discriminator_;
  ParamSet gen_params_;
  ParamSet disc_params_;
  AdamOptimizer adam_g_{1e-4f, 0.9f, 0.999f, 1e-8f};
  AdamOptimizer adam_d_{1e-4f, 0.9f, 0.999f, 1e-8f};
  Xoshiro256 rng_{0};
  std::int64_t step_ = 0;
};

// Image <-> tensor bridges ([1,H,W], pixel values copied as-is).
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, float max_value);

// Normalizes the LR image (and the reference by its own stats, when given),
// runs the generator in inference mode, and denormalizes with the LR stats.
Image super_resolve(const Image& lr, const std::optional<Image>& ref,
                    GeneratorParams& params);

}  // namespace tgan
