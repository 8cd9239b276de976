// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>
#include <unordered_set>

#include "tgan/error.hpp"

namespace tgan {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using ConstMapRM = Eigen::Map<const RowMat>;

namespace {

std::atomic<std::uint64_t> g_next_id{1};
std::atomic<bool> g_debug_checks{
#ifdef NDEBUG
    false
#else
    true
#endif
};
thread_local bool g_grad_enabled = true;

void check_finite(const char* tag, const std::vector<float>& data) {
  if (!g_debug_checks.load(std::memory_order_relaxed)) return;
  for (float v : data) {
    if (!std::isfinite(v)) {
      throw numeric_error(std::string("non-finite value produced by op '") +
                          tag + "'");
    }
  }
}

std::shared_ptr<TensorImpl> make_leaf(Shape shape, std::vector<float> data,
                                      bool requires_grad) {
  const auto expect = shape_size(shape);
  if (expect != static_cast<std::int64_t>(data.size())) {
    throw data_error("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  impl->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return impl;
}

void require_same_shape(const char* tag, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw data_error(std::string(tag) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_rank(const char* tag, const Tensor& t, int rank) {
  if (t.rank() != rank) {
    throw data_error(std::string(tag) + ": expected rank " +
                     std::to_string(rank) + " tensor, got shape " +
                     shape_str(t.shape()));
  }
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::int64_t shape_size(const Shape& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw data_error("non-positive dimension in shape " + shape_str(shape));
    n *= d;
  }
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_size(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<float>(static_cast<std::size_t>(n), 0.f), requires_grad));
}

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto n = shape_size(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<float>(static_cast<std::size_t>(n), value), requires_grad));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> data, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

float Tensor::value() const {
  if (size() != 1) {
    throw data_error("value(): tensor has shape " + shape_str(shape()) +
                     ", expected a single element");
  }
  return impl_->data[0];
}

Tensor Tensor::detach() const {
  return from_data(impl_->shape, impl_->data, false);
}

bool debug_checks_enabled() { return g_debug_checks.load(std::memory_order_relaxed); }
void set_debug_checks(bool on) { g_debug_checks.store(on, std::memory_order_relaxed); }

bool grad_enabled() { return g_grad_enabled; }
NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

Tensor make_op(const char* tag, Shape shape, std::vector<float> data,
               std::vector<Tensor> parents,
               std::function<void(TensorImpl&)> backward_fn) {
  check_finite(tag, data);
  auto impl = make_leaf(std::move(shape), std::move(data), false);
  impl->op = tag;
  bool needs_grad = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs_grad = needs_grad || p.requires_grad();
  }
  if (needs_grad) {
    impl->requires_grad = true;
    impl->parents.reserve(parents.size());
    for (const auto& p : parents) impl->parents.push_back(p.impl());
    impl->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(impl));
}

void accumulate_grad(TensorImpl& node, const float* g, std::size_t n) {
  if (!node.requires_grad) return;
  if (node.grad.empty()) node.grad.assign(node.data.size(), 0.f);
  for (std::size_t i = 0; i < n; ++i) node.grad[i] += g[i];
}

PatchGrid patch_grid(int height, int width, int patch, int stride, int pad) {
  if (stride <= 0) throw data_error("patch stride must be positive, got " + std::to_string(stride));
  if (pad < 0) throw data_error("patch pad must be non-negative, got " + std::to_string(pad));
  if (patch > height || patch > width) {
    throw data_error("patch " + std::to_string(patch) + " exceeds input " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  const int sy = height + 2 * pad - patch;
  const int sx = width + 2 * pad - patch;
  if (sy < 0 || sx < 0 || sy % stride != 0 || sx % stride != 0) {
    throw data_error("window size " + std::to_string(patch) + " stride " +
                     std::to_string(stride) + " pad " + std::to_string(pad) +
                     " does not tile input " + std::to_string(height) + "x" +
                     std::to_string(width) + " exactly");
  }
  return PatchGrid{sy / stride + 1, sx / stride + 1};
}

void extract_patches(const float* src, int channels, int height, int width,
                     int patch, int stride, int pad, float* dst) {
  const PatchGrid grid = patch_grid(height, width, patch, stride, pad);
  const int dim = channels * patch * patch;
  float* out = dst;
  for (int gy = 0; gy < grid.ny; ++gy) {
    for (int gx = 0; gx < grid.nx; ++gx) {
      const int y0 = gy * stride - pad;
      const int x0 = gx * stride - pad;
      for (int c = 0; c < channels; ++c) {
        const float* plane = src + static_cast<std::size_t>(c) * height * width;
        for (int py = 0; py < patch; ++py) {
          const int y = y0 + py;
          for (int px = 0; px < patch; ++px) {
            const int x = x0 + px;
            *out++ = (y >= 0 && y < height && x >= 0 && x < width)
                         ? plane[y * width + x]
                         : 0.f;
          }
        }
      }
    }
  }
  (void)dim;
}

void scatter_patches_add(const float* cols, int channels, int height,
                         int width, int patch, int stride, int pad,
                         float* dst) {
  const PatchGrid grid = patch_grid(height, width, patch, stride, pad);
  const float* in = cols;
  for (int gy = 0; gy < grid.ny; ++gy) {
    for (int gx = 0; gx < grid.nx; ++gx) {
      const int y0 = gy * stride - pad;
      const int x0 = gx * stride - pad;
      for (int c = 0; c < channels; ++c) {
        float* plane = dst + static_cast<std::size_t>(c) * height * width;
        for (int py = 0; py < patch; ++py) {
          const int y = y0 + py;
          for (int px = 0; px < patch; ++px) {
            const int x = x0 + px;
            if (y >= 0 && y < height && x >= 0 && x < width) {
              plane[y * width + x] += *in;
            }
            ++in;
          }
        }
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise ops.

namespace {

enum class EwOp { add, sub, mul, divide };

const char* ew_tag(EwOp op) {
  switch (op) {
    case EwOp::add: return "add";
    case EwOp::sub: return "sub";
    case EwOp::mul: return "mul";
    case EwOp::divide: return "div";
  }
  return "?";
}

float ew_eval(EwOp op, float a, float b) {
  switch (op) {
    case EwOp::add: return a + b;
    case EwOp::sub: return a - b;
    case EwOp::mul: return a * b;
    case EwOp::divide: return a / b;
  }
  return 0.f;
}

Tensor ew_tensor(EwOp op, const Tensor& a, const Tensor& b) {
  require_same_shape(ew_tag(op), a, b);
  const std::size_t n = static_cast<std::size_t>(a.size());
  std::vector<float> out(n);
  const float* pa = a.data().data();
  const float* pb = b.data().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = ew_eval(op, pa[i], pb[i]);
  return detail::make_op(ew_tag(op), a.shape(), std::move(out), {a, b},
                         [op](TensorImpl& self) {
    auto& av = *self.parents[0];
    auto& bv = *self.parents[1];
    const std::size_t n = self.grad.size();
    std::vector<float> ga(n), gb(n);
    for (std::size_t i = 0; i < n; ++i) {
      const float g = self.grad[i];
      switch (op) {
        case EwOp::add: ga[i] = g; gb[i] = g; break;
        case EwOp::sub: ga[i] = g; gb[i] = -g; break;
        case EwOp::mul: ga[i] = g * bv.data[i]; gb[i] = g * av.data[i]; break;
        case EwOp::divide: {
          const float inv = 1.f / bv.data[i];
          ga[i] = g * inv;
          gb[i] = -g * av.data[i] * inv * inv;
          break;
        }
      }
    }
    detail::accumulate_grad(av, ga.data(), n);
    detail::accumulate_grad(bv, gb.data(), n);
  });
}

Tensor ew_scalar(EwOp op, const Tensor& a, float b, bool scalar_first) {
  const std::size_t n = static_cast<std::size_t>(a.size());
  std::vector<float> out(n);
  const float* pa = a.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = scalar_first ? ew_eval(op, b, pa[i]) : ew_eval(op, pa[i], b);
  }
  return detail::make_op(ew_tag(op), a.shape(), std::move(out), {a},
                         [op, b, scalar_first](TensorImpl& self) {
    auto& av = *self.parents[0];
    const std::size_t n = self.grad.size();
    std::vector<float> ga(n);
    for (std::size_t i = 0; i < n; ++i) {
      const float g = self.grad[i];
      switch (op) {
        case EwOp::add: ga[i] = g; break;
        case EwOp::sub: ga[i] = scalar_first ? -g : g; break;
        case EwOp::mul: ga[i] = g * b; break;
        case EwOp::divide:
          ga[i] = scalar_first ? -g * b / (av.data[i] * av.data[i]) : g / b;
          break;
      }
    }
    detail::accumulate_grad(av, ga.data(), n);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return ew_tensor(EwOp::add, a, b); }
Tensor add(const Tensor& a, float b) { return ew_scalar(EwOp::add, a, b, false); }
Tensor sub(const Tensor& a, const Tensor& b) { return ew_tensor(EwOp::sub, a, b); }
Tensor sub(const Tensor& a, float b) { return ew_scalar(EwOp::sub, a, b, false); }
Tensor sub(float a, const Tensor& b) { return ew_scalar(EwOp::sub, b, a, true); }
Tensor mul(const Tensor& a, const Tensor& b) { return ew_tensor(EwOp::mul, a, b); }
Tensor mul(const Tensor& a, float b) { return ew_scalar(EwOp::mul, a, b, false); }
Tensor div(const Tensor& a, const Tensor& b) { return ew_tensor(EwOp::divide, a, b); }
Tensor div(const Tensor& a, float b) { return ew_scalar(EwOp::divide, a, b, false); }

// ---------------------------------------------------------------------------
// Matrix product.

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2) {
    throw data_error("matmul: inner dimensions disagree, " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<float> out(static_cast<std::size_t>(m) * n);
  ConstMapRM ma(a.data().data(), m, k);
  ConstMapRM mb(b.data().data(), k, n);
  MapRM mo(out.data(), m, n);
  mo.noalias() = ma * mb;
  return detail::make_op("matmul", {m, n}, std::move(out), {a, b},
                         [m, k, n](TensorImpl& self) {
    auto& av = *self.parents[0];
    auto& bv = *self.parents[1];
    ConstMapRM g(self.grad.data(), m, n);
    ConstMapRM ma(av.data.data(), m, k);
    ConstMapRM mb(bv.data.data(), k, n);
    if (av.requires_grad) {
      std::vector<float> ga(static_cast<std::size_t>(m) * k);
      MapRM(ga.data(), m, k).noalias() = g * mb.transpose();
      detail::accumulate_grad(av, ga.data(), ga.size());
    }
    if (bv.requires_grad) {
      std::vector<float> gb(static_cast<std::size_t>(k) * n);
      MapRM(gb.data(), k, n).noalias() = ma.transpose() * g;
      detail::accumulate_grad(bv, gb.data(), gb.size());
    }
  });
}

// ---------------------------------------------------------------------------
// Convolution (im2col + GEMM; cross-correlation convention).

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias,
              int stride, int pad) {
  require_rank("conv2d", input, 3);
  require_rank("conv2d", kernels, 4);
  require_rank("conv2d", bias, 1);
  const int cin = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int cout = kernels.dim(0), kcin = kernels.dim(1);
  const int kh = kernels.dim(2), kw = kernels.dim(3);
  if (kcin != cin) {
    throw data_error("conv2d: input channels " + std::to_string(cin) +
                     " do not match kernel channels " + std::to_string(kcin));
  }
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw data_error("conv2d: kernel size must be odd, got " +
                     std::to_string(kh) + "x" + std::to_string(kw));
  }
  if (bias.dim(0) != cout) {
    throw data_error("conv2d: bias length " + std::to_string(bias.dim(0)) +
                     " does not match output channels " + std::to_string(cout));
  }
  if (kh != kw) {
    throw data_error("conv2d: only square kernels are supported, got " +
                     std::to_string(kh) + "x" + std::to_string(kw));
  }
  const auto grid = detail::patch_grid(h, w, kh, stride, pad);
  const int npos = grid.count();
  const int dim = cin * kh * kw;

  std::vector<float> cols(static_cast<std::size_t>(npos) * dim);
  detail::extract_patches(input.data().data(), cin, h, w, kh, stride, pad, cols.data());

  std::vector<float> out(static_cast<std::size_t>(cout) * npos);
  {
    ConstMapRM wmat(kernels.data().data(), cout, dim);
    ConstMapRM cmat(cols.data(), npos, dim);
    MapRM omat(out.data(), cout, npos);
    omat.noalias() = wmat * cmat.transpose();
    const float* bp = bias.data().data();
    for (int c = 0; c < cout; ++c) omat.row(c).array() += bp[c];
  }

  return detail::make_op(
      "conv2d", {cout, grid.ny, grid.nx}, std::move(out),
      {input, kernels, bias},
      [cin, h, w, cout, kh, stride, pad, npos, dim](TensorImpl& self) {
    auto& in = *self.parents[0];
    auto& kr = *self.parents[1];
    auto& bs = *self.parents[2];
    ConstMapRM g(self.grad.data(), cout, npos);
    if (kr.requires_grad) {
      std::vector<float> cols(static_cast<std::size_t>(npos) * dim);
      detail::extract_patches(in.data.data(), cin, h, w, kh, stride, pad, cols.data());
      std::vector<float> gw(static_cast<std::size_t>(cout) * dim);
      MapRM(gw.data(), cout, dim).noalias() = g * ConstMapRM(cols.data(), npos, dim);
      detail::accumulate_grad(kr, gw.data(), gw.size());
    }
    if (bs.requires_grad) {
      std::vector<float> gb(static_cast<std::size_t>(cout));
      for (int c = 0; c < cout; ++c) {
        double acc = 0.0;
        for (int p = 0; p < npos; ++p) acc += g(c, p);
        gb[static_cast<std::size_t>(c)] = static_cast<float>(acc);
      }
      detail::accumulate_grad(bs, gb.data(), gb.size());
    }
    if (in.requires_grad) {
      std::vector<float> gcols(static_cast<std::size_t>(npos) * dim);
      ConstMapRM wmat(kr.data.data(), cout, dim);
      MapRM(gcols.data(), npos, dim).noalias() = g.transpose() * wmat;
      std::vector<float> gin(in.data.size(), 0.f);
      detail::scatter_patches_add(gcols.data(), cin, h, w, kh, stride, pad, gin.data());
      detail::accumulate_grad(in, gin.data(), gin.size());
    }
  });
}

// ---------------------------------------------------------------------------
// Activations and normalization.

Tensor relu(const Tensor& t) {
  const std::size_t n = static_cast<std::size_t>(t.size());
  std::vector<float> out(n);
  const float* p = t.data().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] > 0.f ? p[i] : 0.f;
  return detail::make_op("relu", t.shape(), std::move(out), {t},
                         [](TensorImpl& self) {
    auto& x = *self.parents[0];
    const std::size_t n = self.grad.size();
    std::vector<float> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = x.data[i] > 0.f ? self.grad[i] : 0.f;
    detail::accumulate_grad(x, g.data(), n);
  });
}

Tensor leaky_relu(const Tensor& t, float negative_slope) {
  const std::size_t n = static_cast<std::size_t>(t.size());
  std::vector<float> out(n);
  const float* p = t.data().data();
  for (std::size_t i = 0; i < n; ++i) out[i] = p[i] > 0.f ? p[i] : negative_slope * p[i];
  return detail::make_op("leaky_relu", t.shape(), std::move(out), {t},
                         [negative_slope](TensorImpl& self) {
    auto& x = *self.parents[0];
    const std::size_t n = self.grad.size();
    std::vector<float> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = x.data[i] > 0.f ? self.grad[i] : negative_slope * self.grad[i];
    }
    detail::accumulate_grad(x, g.data(), n);
  });
}

Tensor sigmoid(const Tensor& t) {
  const std::size_t n = static_cast<std::size_t>(t.size());
  std::vector<float> out(n);
  const float* p = t.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(p[i]))));
  }
  // Save y itself; dy/dx = y(1-y).
  return detail::make_op("sigmoid", t.shape(), std::move(out), {t},
                         [](TensorImpl& self) {
    auto& x = *self.parents[0];
    const std::size_t n = self.grad.size();
    std::vector<float> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      const float y = self.data[i];
      g[i] = self.grad[i] * y * (1.f - y);
    }
    detail::accumulate_grad(x, g.data(), n);
  });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  Tensor& running_mean, Tensor& running_var, float eps,
                  float momentum, bool training) {
  require_rank("batch_norm", x, 3);
  require_rank("batch_norm", gamma, 1);
  require_rank("batch_norm", beta, 1);
  if (eps <= 0.f) throw data_error("batch_norm: eps must be positive, got " + std::to_string(eps));
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int spatial = h * w;
  if (gamma.dim(0) != c || beta.dim(0) != c || running_mean.dim(0) != c ||
      running_var.dim(0) != c) {
    throw data_error("batch_norm: parameter length does not match " +
                     std::to_string(c) + " channels");
  }

  std::vector<float> mu(static_cast<std::size_t>(c));
  std::vector<float> inv_std(static_cast<std::size_t>(c));
  const float* px = x.data().data();
  if (training) {
    float* rm = running_mean.mutable_data().data();
    float* rv = running_var.mutable_data().data();
    for (int ch = 0; ch < c; ++ch) {
      const float* plane = px + static_cast<std::size_t>(ch) * spatial;
      double s = 0.0, s2 = 0.0;
      for (int i = 0; i < spatial; ++i) {
        s += plane[i];
        s2 += static_cast<double>(plane[i]) * plane[i];
      }
      const double m = s / spatial;
      const double var = std::max(0.0, s2 / spatial - m * m);
      mu[static_cast<std::size_t>(ch)] = static_cast<float>(m);
      inv_std[static_cast<std::size_t>(ch)] =
          static_cast<float>(1.0 / std::sqrt(var + eps));
      rm[ch] = (1.f - momentum) * rm[ch] + momentum * static_cast<float>(m);
      rv[ch] = (1.f - momentum) * rv[ch] + momentum * static_cast<float>(var);
    }
  } else {
    const float* rm = running_mean.data().data();
    const float* rv = running_var.data().data();
    for (int ch = 0; ch < c; ++ch) {
      mu[static_cast<std::size_t>(ch)] = rm[ch];
      inv_std[static_cast<std::size_t>(ch)] =
          static_cast<float>(1.0 / std::sqrt(static_cast<double>(rv[ch]) + eps));
    }
  }

  std::vector<float> out(x.data().size());
  const float* pg = gamma.data().data();
  const float* pb = beta.data().data();
  for (int ch = 0; ch < c; ++ch) {
    const float* plane = px + static_cast<std::size_t>(ch) * spatial;
    float* oplane = out.data() + static_cast<std::size_t>(ch) * spatial;
    const float m = mu[static_cast<std::size_t>(ch)];
    const float is = inv_std[static_cast<std::size_t>(ch)];
    for (int i = 0; i < spatial; ++i) {
      oplane[i] = pg[ch] * (plane[i] - m) * is + pb[ch];
    }
  }

  return detail::make_op(
      "batch_norm", x.shape(), std::move(out), {x, gamma, beta},
      [c, spatial, mu = std::move(mu), inv_std = std::move(inv_std),
       training](TensorImpl& self) {
    auto& xv = *self.parents[0];
    auto& gv = *self.parents[1];
    auto& bv = *self.parents[2];
    std::vector<float> gx(xv.data.size(), 0.f);
    std::vector<float> gg(static_cast<std::size_t>(c), 0.f);
    std::vector<float> gb(static_cast<std::size_t>(c), 0.f);
    for (int ch = 0; ch < c; ++ch) {
      const float* xp = xv.data.data() + static_cast<std::size_t>(ch) * spatial;
      const float* gp = self.grad.data() + static_cast<std::size_t>(ch) * spatial;
      float* gxp = gx.data() + static_cast<std::size_t>(ch) * spatial;
      const float m = mu[static_cast<std::size_t>(ch)];
      const float is = inv_std[static_cast<std::size_t>(ch)];
      const float gamma_c = gv.data[static_cast<std::size_t>(ch)];
      double sum_g = 0.0, sum_gxh = 0.0;
      for (int i = 0; i < spatial; ++i) {
        const float xh = (xp[i] - m) * is;
        sum_g += gp[i];
        sum_gxh += static_cast<double>(gp[i]) * xh;
      }
      gg[static_cast<std::size_t>(ch)] = static_cast<float>(sum_gxh);
      gb[static_cast<std::size_t>(ch)] = static_cast<float>(sum_g);
      if (!xv.requires_grad) continue;
      if (training) {
        const double mean_g = sum_g / spatial;
        const double mean_gxh = sum_gxh / spatial;
        for (int i = 0; i < spatial; ++i) {
          const double xh = (xp[i] - m) * is;
          gxp[i] = static_cast<float>(gamma_c * is *
                                      (gp[i] - mean_g - xh * mean_gxh));
        }
      } else {
        for (int i = 0; i < spatial; ++i) {
          gxp[i] = gamma_c * is * gp[i];
        }
      }
    }
    detail::accumulate_grad(xv, gx.data(), gx.size());
    detail::accumulate_grad(gv, gg.data(), gg.size());
    detail::accumulate_grad(bv, gb.data(), gb.size());
  });
}

// ---------------------------------------------------------------------------
// Patch ops.

Tensor unfold(const Tensor& t, int patch, int stride, int pad) {
  require_rank("unfold", t, 3);
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  const auto grid = detail::patch_grid(h, w, patch, stride, pad);
  const int dim = c * patch * patch;
  std::vector<float> out(static_cast<std::size_t>(grid.count()) * dim);
  detail::extract_patches(t.data().data(), c, h, w, patch, stride, pad, out.data());
  return detail::make_op("unfold", {grid.count(), dim}, std::move(out), {t},
                         [c, h, w, patch, stride, pad](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> gx(x.data.size(), 0.f);
    detail::scatter_patches_add(self.grad.data(), c, h, w, patch, stride, pad, gx.data());
    detail::accumulate_grad(x, gx.data(), gx.size());
  });
}

namespace {

// Number of windows covering each canvas position, as floats for division.
std::vector<float> fold_counts(int height, int width, int patch, int stride, int pad) {
  std::vector<float> counts(static_cast<std::size_t>(height) * width, 0.f);
  std::vector<float> ones(static_cast<std::size_t>(
                              detail::patch_grid(height, width, patch, stride, pad).count()) *
                              patch * patch,
                          1.f);
  detail::scatter_patches_add(ones.data(), 1, height, width, patch, stride, pad, counts.data());
  return counts;
}

}  // namespace

Tensor fold(const Tensor& cols, int channels, int height, int width,
            int patch, int stride, int pad) {
  require_rank("fold", cols, 2);
  const auto grid = detail::patch_grid(height, width, patch, stride, pad);
  const int dim = channels * patch * patch;
  if (cols.dim(0) != grid.count() || cols.dim(1) != dim) {
    throw data_error("fold: column tensor " + shape_str(cols.shape()) +
                     " does not match expected [" + std::to_string(grid.count()) +
                     "," + std::to_string(dim) + "]");
  }
  const std::vector<float> counts = fold_counts(height, width, patch, stride, pad);
  std::vector<float> out(static_cast<std::size_t>(channels) * height * width, 0.f);
  detail::scatter_patches_add(cols.data().data(), channels, height, width,
                              patch, stride, pad, out.data());
  const std::size_t plane = static_cast<std::size_t>(height) * width;
  for (int c = 0; c < channels; ++c) {
    float* o = out.data() + static_cast<std::size_t>(c) * plane;
    for (std::size_t i = 0; i < plane; ++i) o[i] /= counts[i];
  }
  return detail::make_op("fold", {channels, height, width}, std::move(out),
                         {cols},
                         [channels, height, width, patch, stride, pad](TensorImpl& self) {
    auto& x = *self.parents[0];
    const std::vector<float> counts = fold_counts(height, width, patch, stride, pad);
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    std::vector<float> scaled(self.grad.size());
    for (int c = 0; c < channels; ++c) {
      const float* g = self.grad.data() + static_cast<std::size_t>(c) * plane;
      float* s = scaled.data() + static_cast<std::size_t>(c) * plane;
      for (std::size_t i = 0; i < plane; ++i) s[i] = g[i] / counts[i];
    }
    std::vector<float> gx(x.data.size());
    detail::extract_patches(scaled.data(), channels, height, width, patch,
                            stride, pad, gx.data());
    detail::accumulate_grad(x, gx.data(), gx.size());
  });
}

Tensor pixel_shuffle(const Tensor& t, int r) {
  require_rank("pixel_shuffle", t, 3);
  if (r < 1) throw data_error("pixel_shuffle: factor must be >= 1, got " + std::to_string(r));
  const int cr2 = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (cr2 % (r * r) != 0) {
    throw data_error("pixel_shuffle: channels " + std::to_string(cr2) +
                     " not divisible by r^2 = " + std::to_string(r * r));
  }
  const int c = cr2 / (r * r);
  const int oh = h * r, ow = w * r;
  std::vector<float> out(static_cast<std::size_t>(c) * oh * ow);
  const float* p = t.data().data();
  for (int ch = 0; ch < c; ++ch) {
    for (int dy = 0; dy < r; ++dy) {
      for (int dx = 0; dx < r; ++dx) {
        const float* src = p + static_cast<std::size_t>(ch * r * r + dy * r + dx) * h * w;
        for (int y = 0; y < h; ++y) {
          float* dst = out.data() + static_cast<std::size_t>(ch) * oh * ow +
                       static_cast<std::size_t>(y * r + dy) * ow + dx;
          for (int x = 0; x < w; ++x) {
            *dst = src[y * w + x];
            dst += r;
          }
        }
      }
    }
  }
  return detail::make_op("pixel_shuffle", {c, oh, ow}, std::move(out), {t},
                         [c, h, w, r, oh, ow](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> gx(x.data.size());
    for (int ch = 0; ch < c; ++ch) {
      for (int dy = 0; dy < r; ++dy) {
        for (int dx = 0; dx < r; ++dx) {
          float* dst = gx.data() + static_cast<std::size_t>(ch * r * r + dy * r + dx) * h * w;
          for (int y = 0; y < h; ++y) {
            const float* src = self.grad.data() +
                               static_cast<std::size_t>(ch) * oh * ow +
                               static_cast<std::size_t>(y * r + dy) * ow + dx;
            for (int x2 = 0; x2 < w; ++x2) {
              dst[y * w + x2] = *src;
              src += r;
            }
          }
        }
      }
    }
    detail::accumulate_grad(x, gx.data(), gx.size());
  });
}

Tensor avg_pool2d(const Tensor& t, int factor) {
  require_rank("avg_pool2d", t, 3);
  if (factor < 1) throw data_error("avg_pool2d: factor must be >= 1, got " + std::to_string(factor));
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  const int oh = h / factor, ow = w / factor;
  if (oh < 1 || ow < 1) {
    throw data_error("avg_pool2d: input " + std::to_string(h) + "x" +
                     std::to_string(w) + " smaller than factor " + std::to_string(factor));
  }
  const int y0 = (h - oh * factor) / 2;
  const int x0 = (w - ow * factor) / 2;
  const float inv = 1.f / static_cast<float>(factor * factor);
  std::vector<float> out(static_cast<std::size_t>(c) * oh * ow);
  const float* p = t.data().data();
  for (int ch = 0; ch < c; ++ch) {
    const float* plane = p + static_cast<std::size_t>(ch) * h * w;
    float* oplane = out.data() + static_cast<std::size_t>(ch) * oh * ow;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (int fy = 0; fy < factor; ++fy) {
          const float* row = plane + (y0 + oy * factor + fy) * w + x0 + ox * factor;
          for (int fx = 0; fx < factor; ++fx) acc += row[fx];
        }
        oplane[oy * ow + ox] = static_cast<float>(acc * inv);
      }
    }
  }
  return detail::make_op("avg_pool2d", {c, oh, ow}, std::move(out), {t},
                         [c, h, w, oh, ow, factor, y0, x0, inv](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> gx(x.data.size(), 0.f);
    for (int ch = 0; ch < c; ++ch) {
      const float* gplane = self.grad.data() + static_cast<std::size_t>(ch) * oh * ow;
      float* xplane = gx.data() + static_cast<std::size_t>(ch) * h * w;
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const float g = gplane[oy * ow + ox] * inv;
          for (int fy = 0; fy < factor; ++fy) {
            float* row = xplane + (y0 + oy * factor + fy) * w + x0 + ox * factor;
            for (int fx = 0; fx < factor; ++fx) row[fx] += g;
          }
        }
      }
    }
    detail::accumulate_grad(x, gx.data(), gx.size());
  });
}

// ---------------------------------------------------------------------------
// Structure ops.

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_size(shape) != t.size()) {
    throw data_error("reshape: cannot view " + shape_str(t.shape()) + " as " +
                     shape_str(shape));
  }
  std::vector<float> out(t.data().begin(), t.data().end());
  return detail::make_op("reshape", std::move(shape), std::move(out), {t},
                         [](TensorImpl& self) {
    detail::accumulate_grad(*self.parents[0], self.grad.data(), self.grad.size());
  });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank("concat_channels", a, 3);
  require_rank("concat_channels", b, 3);
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw data_error("concat_channels: spatial mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  std::vector<float> out;
  out.reserve(a.data().size() + b.data().size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  const std::size_t na = a.data().size();
  return detail::make_op("concat_channels",
                         {a.dim(0) + b.dim(0), a.dim(1), a.dim(2)},
                         std::move(out), {a, b}, [na](TensorImpl& self) {
    detail::accumulate_grad(*self.parents[0], self.grad.data(), na);
    detail::accumulate_grad(*self.parents[1], self.grad.data() + na,
                            self.grad.size() - na);
  });
}

Tensor mul_channel_broadcast(const Tensor& t, const Tensor& gate) {
  require_rank("mul_channel_broadcast", t, 3);
  require_rank("mul_channel_broadcast", gate, 3);
  if (gate.dim(0) != 1 || gate.dim(1) != t.dim(1) || gate.dim(2) != t.dim(2)) {
    throw data_error("mul_channel_broadcast: gate " + shape_str(gate.shape()) +
                     " does not broadcast over " + shape_str(t.shape()));
  }
  const int c = t.dim(0);
  const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
  std::vector<float> out(t.data().size());
  const float* p = t.data().data();
  const float* s = gate.data().data();
  for (int ch = 0; ch < c; ++ch) {
    const float* tp = p + static_cast<std::size_t>(ch) * plane;
    float* op = out.data() + static_cast<std::size_t>(ch) * plane;
    for (std::size_t i = 0; i < plane; ++i) op[i] = tp[i] * s[i];
  }
  return detail::make_op("mul_channel_broadcast", t.shape(), std::move(out),
                         {t, gate}, [c, plane](TensorImpl& self) {
    auto& tv = *self.parents[0];
    auto& sv = *self.parents[1];
    if (tv.requires_grad) {
      std::vector<float> gt(tv.data.size());
      for (int ch = 0; ch < c; ++ch) {
        const float* g = self.grad.data() + static_cast<std::size_t>(ch) * plane;
        float* o = gt.data() + static_cast<std::size_t>(ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) o[i] = g[i] * sv.data[i];
      }
      detail::accumulate_grad(tv, gt.data(), gt.size());
    }
    if (sv.requires_grad) {
      std::vector<float> gs(plane, 0.f);
      for (int ch = 0; ch < c; ++ch) {
        const float* g = self.grad.data() + static_cast<std::size_t>(ch) * plane;
        const float* tp = tv.data.data() + static_cast<std::size_t>(ch) * plane;
        for (std::size_t i = 0; i < plane; ++i) gs[i] += g[i] * tp[i];
      }
      detail::accumulate_grad(sv, gs.data(), gs.size());
    }
  });
}

Tensor row_max(const Tensor& m) {
  require_rank("row_max", m, 2);
  const int rows = m.dim(0), cols = m.dim(1);
  std::vector<float> out(static_cast<std::size_t>(rows));
  std::vector<int> arg(static_cast<std::size_t>(rows));
  const float* p = m.data().data();
  for (int i = 0; i < rows; ++i) {
    const float* row = p + static_cast<std::size_t>(i) * cols;
    int best = 0;
    for (int j = 1; j < cols; ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[static_cast<std::size_t>(i)] = row[best];
    arg[static_cast<std::size_t>(i)] = best;
  }
  return detail::make_op("row_max", {rows}, std::move(out), {m},
                         [rows, cols, arg = std::move(arg)](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> gx(x.data.size(), 0.f);
    for (int i = 0; i < rows; ++i) {
      gx[static_cast<std::size_t>(i) * cols + arg[static_cast<std::size_t>(i)]] =
          self.grad[static_cast<std::size_t>(i)];
    }
    detail::accumulate_grad(x, gx.data(), gx.size());
  });
}

Tensor gather_rows(const Tensor& m, const std::vector<int>& idx) {
  require_rank("gather_rows", m, 2);
  const int rows = m.dim(0), cols = m.dim(1);
  for (int i : idx) {
    if (i < 0 || i >= rows) {
      throw data_error("gather_rows: index " + std::to_string(i) +
                       " out of range [0," + std::to_string(rows) + ")");
    }
  }
  std::vector<float> out(idx.size() * static_cast<std::size_t>(cols));
  const float* p = m.data().data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::memcpy(out.data() + i * cols,
                p + static_cast<std::size_t>(idx[i]) * cols,
                sizeof(float) * static_cast<std::size_t>(cols));
  }
  return detail::make_op("gather_rows", {static_cast<int>(idx.size()), cols},
                         std::move(out), {m}, [cols, idx](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> gx(x.data.size(), 0.f);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const float* g = self.grad.data() + i * cols;
      float* o = gx.data() + static_cast<std::size_t>(idx[i]) * cols;
      for (int j = 0; j < cols; ++j) o[j] += g[j];
    }
    detail::accumulate_grad(x, gx.data(), gx.size());
  });
}

// ---------------------------------------------------------------------------
// Reductions.

Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (float v : t.data()) acc += v;
  return detail::make_op("sum", {1}, {static_cast<float>(acc)}, {t},
                         [](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> g(x.data.size(), self.grad[0]);
    detail::accumulate_grad(x, g.data(), g.size());
  });
}

Tensor mean(const Tensor& t) {
  double acc = 0.0;
  for (float v : t.data()) acc += v;
  const float inv = 1.f / static_cast<float>(t.size());
  return detail::make_op("mean", {1}, {static_cast<float>(acc / static_cast<double>(t.size()))},
                         {t}, [inv](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> g(x.data.size(), self.grad[0] * inv);
    detail::accumulate_grad(x, g.data(), g.size());
  });
}

Tensor spatial_mean(const Tensor& t) {
  require_rank("spatial_mean", t, 3);
  const int c = t.dim(0);
  const std::size_t plane = static_cast<std::size_t>(t.dim(1)) * t.dim(2);
  std::vector<float> out(static_cast<std::size_t>(c));
  const float* p = t.data().data();
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    const float* tp = p + static_cast<std::size_t>(ch) * plane;
    for (std::size_t i = 0; i < plane; ++i) acc += tp[i];
    out[static_cast<std::size_t>(ch)] = static_cast<float>(acc / static_cast<double>(plane));
  }
  return detail::make_op("spatial_mean", {c}, std::move(out), {t},
                         [c, plane](TensorImpl& self) {
    auto& x = *self.parents[0];
    std::vector<float> g(x.data.size());
    const float inv = 1.f / static_cast<float>(plane);
    for (int ch = 0; ch < c; ++ch) {
      const float gc = self.grad[static_cast<std::size_t>(ch)] * inv;
      float* o = g.data() + static_cast<std::size_t>(ch) * plane;
      for (std::size_t i = 0; i < plane; ++i) o[i] = gc;
    }
    detail::accumulate_grad(x, g.data(), g.size());
  });
}

Tensor log_guarded(const Tensor& t, float floor_value) {
  if (floor_value <= 0.f) {
    throw data_error("log_guarded: floor must be positive, got " + std::to_string(floor_value));
  }
  const std::size_t n = static_cast<std::size_t>(t.size());
  std::vector<float> out(n);
  const float* p = t.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::log(std::max(p[i], floor_value));
  }
  return detail::make_op("log_guarded", t.shape(), std::move(out), {t},
                         [floor_value](TensorImpl& self) {
    auto& x = *self.parents[0];
    const std::size_t n = self.grad.size();
    std::vector<float> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = x.data[i] > floor_value ? self.grad[i] / x.data[i] : 0.f;
    }
    detail::accumulate_grad(x, g.data(), n);
  });
}

// ---------------------------------------------------------------------------
// Backward engine.

void backward(const Tensor& loss) {
  if (!loss.defined()) throw data_error("backward: undefined tensor");
  auto root = loss.impl();
  if (root->data.size() != 1) {
    throw data_error("backward: loss must be a scalar, got shape " +
                     shape_str(root->shape));
  }
  if (!root->requires_grad) {
    throw data_error("backward: loss does not depend on any tensor requiring gradients");
  }
  if (root->backward_ran) {
    throw data_error("backward: already called on this loss; rebuild the graph first");
  }
  root->backward_ran = true;

  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  std::vector<TensorImpl*> stack{root.get()};
  seen.insert(root.get());
  while (!stack.empty()) {
    TensorImpl* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const TensorImpl* a, const TensorImpl* b) { return a->id > b->id; });

  root->grad.assign(1, 1.f);
  for (TensorImpl* n : order) {
    if (!n->backward_fn || n->grad.empty()) continue;
    n->backward_fn(*n);
    if (!n->retain_grad && n != root.get()) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
  // Reachable leaves that never received a contribution still get a zero grad.
  for (TensorImpl* n : order) {
    if (n->requires_grad && !n->backward_fn && n->grad.empty()) {
      n->grad.assign(n->data.size(), 0.f);
    }
  }
}

}  // namespace tgan
