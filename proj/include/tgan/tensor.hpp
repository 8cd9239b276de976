// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tgan {

using Shape = std::vector<int>;

std::string shape_str(const Shape& shape);
std::int64_t shape_size(const Shape& shape);

// One node of the differentiation record. Tensors are thin shared handles to
// these; ops that participate in differentiation append nodes in creation
// order, and backward() replays reachable nodes in decreasing id order (a
// valid topological order, as an op's parents always predate it).
struct TensorImpl {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;  // empty until backward touches this node
  bool requires_grad = false;
  bool retain_grad = false;    // keep the grad of a non-leaf after backward
  bool backward_ran = false;   // set on a node used as a backward root
  std::uint64_t id = 0;        // creation order
  const char* op = "leaf";
  std::vector<std::shared_ptr<TensorImpl>> parents;
  // Reads this->grad and accumulates into the parents' grads.
  std::function<void(TensorImpl&)> backward_fn;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<float> data, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::span<const float> data() const { return impl_->data; }
  std::span<float> mutable_data() { return impl_->data; }
  float value() const;  // single-element tensors only

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  void retain_grad() { impl_->retain_grad = true; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const float> grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.assign(impl_->data.size(), 0.f); }
  void clear_grad() { impl_->grad.clear(); }

  // A leaf tensor sharing no history: same values, no parents, no grad.
  Tensor detach() const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// ---------------------------------------------------------------------------
// Global switches.

// Non-finite forward outputs raise a numeric error when enabled. Defaults to
// on in builds without NDEBUG, off otherwise; tests may force either way.
bool debug_checks_enabled();
void set_debug_checks(bool on);

// Ops executed while any NoGradGuard is alive record no differentiation
// history (inference mode).
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---------------------------------------------------------------------------
// Elementwise arithmetic. Tensor/tensor forms require identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, float b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, float b);
Tensor sub(float a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, float b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, float b);

// Dense [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

// input [C_in,H,W], kernels [C_out,C_in,kh,kw] (odd kh/kw), bias [C_out].
// Zero padding, cross-correlation convention, exact output division required.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride = 1, int pad = 0);

Tensor relu(const Tensor& t);
Tensor leaky_relu(const Tensor& t, float negative_slope);
Tensor sigmoid(const Tensor& t);

// x [C,H,W]; gamma/beta/running_* [C]. Training mode normalizes each channel
// over its spatial extent and folds the batch statistics into the running
// buffers with the given momentum; inference mode applies the running stats.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, float eps,
                  float momentum, bool training);

// t [C,H,W] -> [N, C*patch*patch], one row per sliding-window position.
Tensor unfold(const Tensor& t, int patch, int stride, int pad);
inline Tensor unfold(const Tensor& t, int patch, int stride) {
  return unfold(t, patch, stride, (patch - 1) / 2);
}

// Inverse of unfold onto a [channels,height,width] canvas; overlapping
// contributions are averaged.
Tensor fold(const Tensor& cols, int channels, int height, int width,
            int patch, int stride, int pad);
inline Tensor fold(const Tensor& cols, int channels, int height, int width,
                   int patch, int stride) {
  return fold(cols, channels, height, width, patch, stride, (patch - 1) / 2);
}

// [(C*r^2),H,W] -> [C, r*H, r*W] periodic rearrangement.
Tensor pixel_shuffle(const Tensor& t, int r);

// Mean over factor x factor blocks; non-divisible inputs are center-cropped
// to the largest divisible region first.
Tensor avg_pool2d(const Tensor& t, int factor);

Tensor reshape(const Tensor& t, Shape shape);
Tensor concat_channels(const Tensor& a, const Tensor& b);

// t [C,H,W] * gate [1,H,W], gate broadcast across channels.
Tensor mul_channel_broadcast(const Tensor& t, const Tensor& gate);

// m [N,M] -> [N] row maxima; ties resolve to the lowest column index.
Tensor row_max(const Tensor& m);

// m [N,D] -> [len(idx),D]; idx entries must lie in [0,N).
Tensor gather_rows(const Tensor& m, const std::vector<int>& idx);

Tensor sum(const Tensor& t);           // -> [1]
Tensor mean(const Tensor& t);          // -> [1]
Tensor spatial_mean(const Tensor& t);  // [C,H,W] -> [C]

// log(max(x, floor)); the derivative is zero where the floor clamps.
Tensor log_guarded(const Tensor& t, float floor_value);

// Populates grads of every requires_grad tensor reachable from loss.
// Gradients accumulate additively across multiple uses of a tensor.
void backward(const Tensor& loss);

namespace detail {

// Extension point for ops defined outside this module (fused texture kernels).
Tensor make_op(const char* tag, Shape shape, std::vector<float> data,
               std::vector<Tensor> parents,
               std::function<void(TensorImpl&)> backward_fn);

void accumulate_grad(TensorImpl& node, const float* g, std::size_t n);

struct PatchGrid {
  int ny = 0, nx = 0;
  int count() const { return ny * nx; }
};
// Throws unless (H + 2*pad - patch) divides stride exactly on both axes.
PatchGrid patch_grid(int height, int width, int patch, int stride, int pad);

// dst is [grid.count(), C*patch*patch] row-major; out-of-bounds taps read 0.
void extract_patches(const float* src, int channels, int height, int width,
                     int patch, int stride, int pad, float* dst);
// Adjoint of extract_patches: adds each patch row back onto the canvas.
void scatter_patches_add(const float* cols, int channels, int height,
                         int width, int patch, int stride, int pad,
                         float* dst);

}  // namespace detail

}  // namespace tgan
