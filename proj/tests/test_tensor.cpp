// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracle_helpers.hpp"
#include "reference.hpp"
#include "tgan/error.hpp"
#include "tgan/tensor.hpp"

using namespace tgan;
using refop::DT;
using testutil::fd_check;
using testutil::random_taps;
using testutil::random_tensor;

namespace {

bool near(float a, float b, float tol) { return std::fabs(a - b) <= tol; }

bool all_near(std::span<const float> got, const std::vector<float>& want, float tol) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!near(got[i], want[i], tol)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("elementwise basics") {
  auto a = Tensor::from_data({2}, {1.f, 2.f});
  auto b = Tensor::from_data({2}, {3.f, 4.f});
  CHECK(all_near(add(a, b).data(), {4.f, 6.f}, 0.f));
  CHECK(all_near(sub(a, b).data(), {-2.f, -2.f}, 0.f));
  CHECK(all_near(mul(a, b).data(), {3.f, 8.f}, 0.f));
  CHECK(all_near(div(a, b).data(), {1.f / 3.f, 0.5f}, 1e-7f));
  CHECK(all_near(sub(1.f, a).data(), {0.f, -1.f}, 0.f));

  Xoshiro256 rng(7);
  auto t = random_tensor({3, 4, 5}, rng);
  auto z = mul(t, 0.f);
  for (float v : z.data()) CHECK(v == 0.f);
}

TEST_CASE("elementwise shape mismatch names both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({3, 2});
  try {
    add(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("[2,3]") != std::string::npos);
    CHECK(std::string(e.what()).find("[3,2]") != std::string::npos);
  }
}

TEST_CASE("division by zero follows IEEE unless checks are armed") {
  auto a = Tensor::from_data({2}, {1.f, 0.f});
  auto b = Tensor::from_data({2}, {0.f, 1.f});
  const bool prev = debug_checks_enabled();
  set_debug_checks(false);
  auto q = div(a, b);
  CHECK(std::isinf(q.data()[0]));
  CHECK(q.data()[1] == 0.f);
  set_debug_checks(true);
  CHECK_THROWS_AS(div(a, b), Error);
  set_debug_checks(prev);
}

TEST_CASE("matmul identity and dot product") {
  auto eye = Tensor::from_data({2, 2}, {1.f, 0.f, 0.f, 1.f});
  auto m = Tensor::from_data({2, 2}, {1.f, 2.f, 3.f, 4.f});
  CHECK(all_near(matmul(eye, m).data(), {1.f, 2.f, 3.f, 4.f}, 0.f));

  auto r = Tensor::from_data({1, 2}, {1.f, 2.f});
  auto c = Tensor::from_data({2, 1}, {3.f, 4.f});
  CHECK(all_near(matmul(r, c).data(), {11.f}, 0.f));

  CHECK_THROWS_AS(matmul(r, r), Error);
}

TEST_CASE("matmul gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Xoshiro256 rng(seed);
    auto a = random_tensor({4, 4}, rng, -1.f, 1.f, true);
    auto b = random_tensor({4, 4}, rng, -1.f, 1.f, true);
    auto report = fd_check(
        {a, b}, [&] { return sum(matmul(a, b)); },
        [&] { return refop::total(refop::matmul(DT::from(a), DT::from(b))); },
        1e-3);
    CAPTURE(seed);
    CAPTURE(report.max_rel);
    CHECK(report.ok(1e-3));
  }
}

TEST_CASE("conv2d identity kernel") {
  Xoshiro256 rng(11);
  auto x = random_tensor({1, 5, 5}, rng);
  auto k = Tensor::from_data({1, 1, 1, 1}, {1.f});
  auto b = Tensor::zeros({1});
  auto y = conv2d(x, k, b, 1, 0);
  CHECK(all_near(y.data(), {x.data().begin(), x.data().end()}, 0.f));
}

TEST_CASE("conv2d all-ones kernel on constant input") {
  const float c = 2.5f;
  auto x = Tensor::full({1, 5, 5}, c);
  auto k = Tensor::full({1, 1, 3, 3}, 1.f);
  auto b = Tensor::zeros({1});
  auto y = conv2d(x, k, b, 1, 1);
  REQUIRE(y.shape() == Shape{1, 5, 5});
  // Sliding window tap counts: corners see 4 pixels, edges 6, interior 9.
  for (int yy = 0; yy < 5; ++yy) {
    for (int xx = 0; xx < 5; ++xx) {
      const bool edge_y = yy == 0 || yy == 4;
      const bool edge_x = xx == 0 || xx == 4;
      const float want = edge_y && edge_x ? 4 * c : (edge_y || edge_x ? 6 * c : 9 * c);
      CHECK(near(y.data()[yy * 5 + xx], want, 1e-5f));
    }
  }
}

TEST_CASE("conv2d rejects bad geometry") {
  auto x = Tensor::zeros({2, 4, 4});
  auto b3 = Tensor::zeros({3});
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({3, 1, 3, 3}), b3, 1, 1), Error);  // channel mismatch
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({3, 2, 3, 3}), b3, 2, 1), Error);  // non-exact output
  CHECK_THROWS_AS(conv2d(x, Tensor::zeros({3, 2, 2, 2}), b3, 1, 0), Error);  // even kernel
}

TEST_CASE("conv2d forward matches the reference and gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Xoshiro256 rng(seed * 101);
    auto x = random_tensor({2, 4, 4}, rng, -1.f, 1.f, true);
    auto k = random_tensor({3, 2, 3, 3}, rng, -0.5f, 0.5f, true);
    auto b = random_tensor({3}, rng, -0.5f, 0.5f, true);
    Xoshiro256 wrng(seed);
    auto w = random_taps({3, 4, 4}, wrng);

    CHECK(refop::max_abs_diff(conv2d(x, k, b, 1, 1),
                              refop::conv2d(DT::from(x), DT::from(k), DT::from(b), 1, 1)) < 1e-5);

    auto report = fd_check(
        {x, k, b}, [&] { return sum(mul(conv2d(x, k, b, 1, 1), w)); },
        [&] {
          return refop::wsum(refop::conv2d(DT::from(x), DT::from(k), DT::from(b), 1, 1),
                             DT::from(w));
        },
        1e-3);
    CAPTURE(seed);
    CAPTURE(report.max_rel);
    CHECK(report.ok(1e-3));
  }
}

TEST_CASE("activation basics") {
  auto x = Tensor::from_data({3}, {-1.f, 0.f, 2.f});
  CHECK(all_near(relu(x).data(), {0.f, 0.f, 2.f}, 0.f));
  CHECK(near(sigmoid(Tensor::scalar(0.f)).value(), 0.5f, 1e-7f));
  CHECK(all_near(leaky_relu(x, 0.2f).data(), {-0.2f, 0.f, 2.f}, 1e-7f));
}

TEST_CASE("batch_norm normalizes per channel in training mode") {
  Xoshiro256 rng(3);
  auto x = random_tensor({4, 6, 6}, rng, -2.f, 3.f);
  auto gamma = Tensor::full({4}, 1.f);
  auto beta = Tensor::zeros({4});
  auto rm = Tensor::zeros({4});
  auto rv = Tensor::full({4}, 1.f);
  auto y = batch_norm(x, gamma, beta, rm, rv, 1e-5f, 0.1f, true);
  for (int c = 0; c < 4; ++c) {
    double s = 0, s2 = 0;
    for (int i = 0; i < 36; ++i) {
      const double v = y.data()[c * 36 + i];
      s += v;
      s2 += v * v;
    }
    const double mean = s / 36;
    const double var = s2 / 36 - mean * mean;
    CHECK(std::fabs(mean) < 1e-5);
    CHECK(std::fabs(var - 1.0) < 1e-3);
  }
  // Running stats moved toward the batch stats.
  CHECK(rm.data()[0] != 0.f);

  CHECK_THROWS_AS(batch_norm(x, gamma, beta, rm, rv, 0.f, 0.1f, true), Error);
}

TEST_CASE("batch_norm gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Xoshiro256 rng(seed * 31);
    auto x = random_tensor({3, 4, 4}, rng, -1.f, 1.f, true);
    auto gamma = random_tensor({3}, rng, 0.5f, 1.5f, true);
    auto beta = random_tensor({3}, rng, -0.5f, 0.5f, true);
    auto rm = random_tensor({3}, rng, -0.2f, 0.2f);
    auto rv = random_tensor({3}, rng, 0.5f, 1.5f);
    Xoshiro256 wrng(seed);
    auto w = random_taps({3, 4, 4}, wrng);
    for (bool training : {true, false}) {
      // Keep the running buffers fixed across FD evaluations.
      auto rm_now = rm.detach();
      auto rv_now = rv.detach();
      auto report = fd_check(
          {x, gamma, beta},
          [&] {
            return sum(mul(batch_norm(x, gamma, beta, rm_now, rv_now, 1e-5f, 0.1f, training), w));
          },
          [&] {
            const DT y = training
                             ? refop::batch_norm_train(DT::from(x), DT::from(gamma),
                                                       DT::from(beta), 1e-5)
                             : refop::batch_norm_eval(DT::from(x), DT::from(gamma),
                                                      DT::from(beta), DT::from(rm_now),
                                                      DT::from(rv_now), 1e-5);
            return refop::wsum(y, DT::from(w));
          },
          1e-3);
      CAPTURE(seed);
      CAPTURE(training);
      CAPTURE(report.max_rel);
      CHECK(report.ok(1e-3));
    }
  }
}

TEST_CASE("unfold non-overlapping tiling") {
  auto x = Tensor::from_data({1, 4, 4}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15});
  auto u = unfold(x, 2, 2);  // default pad (patch-1)/2 = 0
  REQUIRE(u.shape() == Shape{4, 4});
  CHECK(all_near(u.data(), {0, 1, 4, 5, 2, 3, 6, 7, 8, 9, 12, 13, 10, 11, 14, 15}, 0.f));
}

TEST_CASE("fold inverts unfold bit-exactly for non-overlapping windows") {
  Xoshiro256 rng(5);
  auto x = random_tensor({3, 6, 6}, rng);
  auto u = unfold(x, 2, 2);
  auto y = fold(u, 3, 6, 6, 2, 2);
  CHECK(std::equal(x.data().begin(), x.data().end(), y.data().begin()));
}

TEST_CASE("unfold 3x3 with padding enumerates all windows") {
  auto x = Tensor::from_data({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  auto u = unfold(x, 3, 1);  // pad 1
  REQUIRE(u.shape() == Shape{9, 9});
  // Hand enumeration: window centered at (0,0) reads zero padding above/left.
  CHECK(all_near(std::span<const float>(u.data().data(), 9),
                 {0, 0, 0, 0, 1, 2, 0, 4, 5}, 0.f));
  // Center patch equals the full image.
  CHECK(all_near(std::span<const float>(u.data().data() + 4 * 9, 9),
                 {1, 2, 3, 4, 5, 6, 7, 8, 9}, 0.f));

  CHECK_THROWS_AS(unfold(x, 3, 0), Error);
  CHECK_THROWS_AS(unfold(x, 3, -2), Error);
}

TEST_CASE("unfold/fold gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Xoshiro256 rng(seed * 13);
    auto x = random_tensor({2, 4, 4}, rng, -1.f, 1.f, true);
    Xoshiro256 wrng(seed);
    auto w = random_taps({2, 4, 4}, wrng);
    auto report = fd_check(
        {x}, [&] { return sum(mul(fold(unfold(x, 3, 1), 2, 4, 4, 3, 1), w)); },
        [&] {
          return refop::wsum(
              refop::fold(refop::unfold(DT::from(x), 3, 1, 1), 2, 4, 4, 3, 1, 1),
              DT::from(w));
        },
        1e-3);
    CAPTURE(seed);
    CAPTURE(report.max_rel);
    CHECK(report.ok(1e-3));
  }
}

TEST_CASE("pixel_shuffle rearrangement") {
  auto x = Tensor::from_data({4, 1, 1}, {1.f, 2.f, 3.f, 4.f});
  auto y = pixel_shuffle(x, 2);
  REQUIRE(y.shape() == Shape{1, 2, 2});
  CHECK(all_near(y.data(), {1.f, 2.f, 3.f, 4.f}, 0.f));

  Xoshiro256 rng(9);
  auto t = random_tensor({8, 3, 5}, rng);
  auto r1 = pixel_shuffle(t, 1);
  CHECK(std::equal(t.data().begin(), t.data().end(), r1.data().begin()));

  auto s = pixel_shuffle(t, 2);
  double in_sum = 0, out_sum = 0;
  for (float v : t.data()) in_sum += v;
  for (float v : s.data()) out_sum += v;
  CHECK(std::fabs(in_sum - out_sum) < 1e-4);

  CHECK(refop::max_abs_diff(s, refop::pixel_shuffle(DT::from(t), 2)) == 0.0);

  CHECK_THROWS_AS(pixel_shuffle(t, 3), Error);
}

TEST_CASE("pixel_shuffle round-trips through its inverse index map") {
  Xoshiro256 rng(21);
  auto t = random_tensor({12, 4, 3}, rng, -1.f, 1.f, true);
  auto y = pixel_shuffle(t, 2);
  // The backward pass applies the inverse permutation; a quadratic loss
  // through the op must therefore return 2x elementwise.
  auto loss = sum(mul(y, y));
  backward(loss);
  REQUIRE(t.has_grad());
  for (std::size_t i = 0; i < t.data().size(); ++i) {
    CHECK(near(t.grad()[i], 2.f * t.data()[i], 1e-6f));
  }
}

TEST_CASE("avg_pool2d pools blocks and crops non-divisible margins") {
  auto x = Tensor::from_data({1, 2, 2}, {1.f, 2.f, 3.f, 4.f});
  CHECK(near(avg_pool2d(x, 2).value(), 2.5f, 1e-7f));

  Xoshiro256 rng(2);
  auto t = random_tensor({1, 5, 5}, rng);
  auto y = avg_pool2d(t, 2);
  REQUIRE(y.shape() == Shape{1, 2, 2});
  CHECK(refop::max_abs_diff(y, refop::avg_pool2d(DT::from(t), 2)) < 1e-6);
}

TEST_CASE("structure ops gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Xoshiro256 rng(seed * 17);
    Xoshiro256 wrng(seed);

    auto x = random_tensor({4, 4, 4}, rng, -1.f, 1.f, true);
    auto wp = random_taps({4, 2, 2}, wrng);
    auto report = fd_check(
        {x}, [&] { return sum(mul(avg_pool2d(x, 2), wp)); },
        [&] { return refop::wsum(refop::avg_pool2d(DT::from(x), 2), DT::from(wp)); }, 1e-3);
    CAPTURE(seed);
    CHECK(report.ok(1e-3));

    auto a = random_tensor({2, 3, 3}, rng, -1.f, 1.f, true);
    auto b = random_tensor({3, 3, 3}, rng, -1.f, 1.f, true);
    auto wc = random_taps({5, 3, 3}, wrng);
    report = fd_check(
        {a, b}, [&] { return sum(mul(concat_channels(a, b), wc)); },
        [&] {
          return refop::wsum(refop::concat_channels(DT::from(a), DT::from(b)), DT::from(wc));
        },
        1e-3);
    CHECK(report.ok(1e-3));

    auto g = random_tensor({1, 3, 3}, rng, -1.f, 1.f, true);
    auto wb = random_taps({3, 3, 3}, wrng);
    report = fd_check(
        {b, g}, [&] { return sum(mul(mul_channel_broadcast(b, g), wb)); },
        [&] { return refop::wsum(refop::bcast_mul(DT::from(b), DT::from(g)), DT::from(wb)); },
        1e-3);
    CHECK(report.ok(1e-3));

    auto m = random_tensor({5, 4}, rng, -1.f, 1.f, true);
    const std::vector<int> idx{3, 0, 0, 4, 2};
    auto wg = random_taps({5, 4}, wrng);
    report = fd_check(
        {m}, [&] { return sum(mul(gather_rows(m, idx), wg)); },
        [&] { return refop::wsum(refop::gather_rows(DT::from(m), idx), DT::from(wg)); }, 1e-3);
    CHECK(report.ok(1e-3));

    auto p = random_tensor({7}, rng, 0.1f, 2.f, true);
    auto wl = random_taps({7}, wrng);
    report = fd_check(
        {p}, [&] { return sum(mul(log_guarded(p, 1e-8f), wl)); },
        [&] { return refop::wsum(refop::log_guarded(DT::from(p), 1e-8), DT::from(wl)); }, 1e-3);
    CHECK(report.ok(1e-3));

    auto sm = random_tensor({3, 4, 4}, rng, -1.f, 1.f, true);
    auto ws = random_taps({3}, wrng);
    report = fd_check(
        {sm}, [&] { return sum(mul(spatial_mean(sm), ws)); },
        [&] { return refop::wsum(refop::spatial_mean(DT::from(sm)), DT::from(ws)); }, 1e-3);
    CHECK(report.ok(1e-3));

    auto act = random_tensor({2, 4, 4}, rng, -1.f, 1.f, true);
    // Push values away from the ReLU kink so eps never crosses it.
    for (float& v : act.mutable_data()) v += v >= 0.f ? 0.3f : -0.3f;
    auto wa = random_taps({2, 4, 4}, wrng);
    report = fd_check(
        {act}, [&] { return sum(mul(relu(act), wa)); },
        [&] { return refop::wsum(refop::relu(DT::from(act)), DT::from(wa)); }, 1e-3);
    CHECK(report.ok(1e-3));
    report = fd_check(
        {act}, [&] { return sum(mul(sigmoid(act), wa)); },
        [&] { return refop::wsum(refop::sigmoid(DT::from(act)), DT::from(wa)); }, 1e-3);
    CHECK(report.ok(1e-3));
    report = fd_check(
        {act}, [&] { return sum(mul(leaky_relu(act, 0.2f), wa)); },
        [&] { return refop::wsum(refop::leaky_relu(DT::from(act), 0.2), DT::from(wa)); }, 1e-3);
    CHECK(report.ok(1e-3));

    auto ew_a = random_tensor({3, 5}, rng, 0.4f, 1.6f, true);
    auto ew_b = random_tensor({3, 5}, rng, 0.4f, 1.6f, true);
    auto we = random_taps({3, 5}, wrng);
    for (int which = 0; which < 4; ++which) {
      report = fd_check(
          {ew_a, ew_b},
          [&] {
            Tensor y = which == 0   ? add(ew_a, ew_b)
                       : which == 1 ? sub(ew_a, ew_b)
                       : which == 2 ? mul(ew_a, ew_b)
                                    : div(ew_a, ew_b);
            return sum(mul(y, we));
          },
          [&] {
            const DT da = DT::from(ew_a), db = DT::from(ew_b);
            const DT y = which == 0   ? refop::add(da, db)
                         : which == 1 ? refop::sub(da, db)
                         : which == 2 ? refop::mul(da, db)
                                      : refop::divide(da, db);
            return refop::wsum(y, DT::from(we));
          },
          1e-3);
      CAPTURE(which);
      CHECK(report.ok(1e-3));
    }
  }
}

TEST_CASE("row_max picks maxima with lowest-index ties") {
  auto m = Tensor::from_data({2, 3}, {0.1f, 0.9f, 0.3f, 0.7f, 0.2f, 0.7f});
  auto y = row_max(m);
  CHECK(all_near(y.data(), {0.9f, 0.7f}, 0.f));

  m.set_requires_grad(true);
  auto loss = sum(row_max(m));
  backward(loss);
  // Tie in row 1 resolves to column 0.
  CHECK(all_near(m.grad(), {0.f, 1.f, 0.f, 1.f, 0.f, 0.f}, 0.f));
}

TEST_CASE("row_max gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Xoshiro256 rng(seed * 43);
    auto m = random_tensor({6, 8}, rng, -1.f, 1.f, true);
    Xoshiro256 wrng(seed);
    auto w = random_taps({6}, wrng);
    auto report = fd_check(
        {m}, [&] { return sum(mul(row_max(m), w)); },
        [&] { return refop::wsum(refop::row_max(DT::from(m)), DT::from(w)); }, 1e-3);
    CAPTURE(seed);
    CHECK(report.ok(1e-3));
  }
}

TEST_CASE("backward trivials") {
  Xoshiro256 rng(1);
  auto x = random_tensor({2, 3, 4}, rng, -1.f, 1.f, true);
  backward(sum(x));
  REQUIRE(x.has_grad());
  for (float g : x.grad()) CHECK(g == 1.f);

  auto v = Tensor::from_data({3}, {1.f, 2.f, 3.f}, true);
  backward(sum(mul(v, v)));
  CHECK(all_near(v.grad(), {2.f, 4.f, 6.f}, 1e-6f));
}

TEST_CASE("gradients accumulate across multiple uses of a tensor") {
  auto x = Tensor::from_data({2}, {1.f, 2.f}, true);
  auto y = add(mul(x, 3.f), mul(x, x));  // 3x + x^2 -> grad 3 + 2x
  backward(sum(y));
  CHECK(all_near(x.grad(), {5.f, 7.f}, 1e-6f));
}

TEST_CASE("backward error paths") {
  auto x = Tensor::from_data({2}, {1.f, 2.f}, true);
  CHECK_THROWS_AS(backward(mul(x, 2.f)), Error);  // non-scalar loss

  auto loss = sum(x);
  backward(loss);
  CHECK_THROWS_AS(backward(loss), Error);  // second call without rebuilding

  auto constant = Tensor::from_data({1}, {3.f});
  CHECK_THROWS_AS(backward(constant), Error);  // no grad dependency
}

TEST_CASE("no-grad guard suppresses history") {
  auto x = Tensor::from_data({2}, {1.f, 2.f}, true);
  NoGradGuard guard;
  auto y = sum(mul(x, x));
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("forward determinism is bit-exact") {
  Xoshiro256 rng(77);
  auto x = random_tensor({2, 8, 8}, rng, -1.f, 1.f);
  auto k = random_tensor({4, 2, 3, 3}, rng);
  auto b = random_tensor({4}, rng);
  auto y1 = conv2d(x, k, b, 1, 1);
  auto y2 = conv2d(x, k, b, 1, 1);
  CHECK(std::equal(y1.data().begin(), y1.data().end(), y2.data().begin()));
}

// A miniature feed-forward composite: conv -> bn -> sigmoid -> conv ->
// pixel_shuffle -> pool. Every parameter is finite-difference checked,
// exercising the whole tape at once (sigmoid keeps the path kink-free, so
// the check isolates wiring rather than ReLU crossings).
TEST_CASE("composite network: all parameter gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Xoshiro256 rng(seed * 97);
    auto x = random_tensor({1, 8, 8}, rng, -1.f, 1.f);
    auto k1 = random_tensor({4, 1, 3, 3}, rng, -0.5f, 0.5f, true);
    auto b1 = random_tensor({4}, rng, -0.2f, 0.2f, true);
    auto gamma = random_tensor({4}, rng, 0.8f, 1.2f, true);
    auto beta = random_tensor({4}, rng, -0.2f, 0.2f, true);
    auto k2 = random_tensor({8, 4, 3, 3}, rng, -0.5f, 0.5f, true);
    auto b2 = random_tensor({8}, rng, -0.2f, 0.2f, true);
    auto rm = Tensor::zeros({4});
    auto rv = Tensor::full({4}, 1.f);
    Xoshiro256 wrng(seed);
    auto w = random_taps({2, 8, 8}, wrng);
    auto report = fd_check(
        {k1, b1, gamma, beta, k2, b2},
        [&] {
          Tensor h = sigmoid(batch_norm(conv2d(x, k1, b1, 1, 1), gamma, beta, rm, rv,
                                        1e-5f, 0.1f, true));
          Tensor y = avg_pool2d(pixel_shuffle(conv2d(h, k2, b2, 1, 1), 2), 2);
          return sum(mul(y, w));
        },
        [&] {
          DT h = refop::sigmoid(refop::batch_norm_train(
              refop::conv2d(DT::from(x), DT::from(k1), DT::from(b1), 1, 1),
              DT::from(gamma), DT::from(beta), 1e-5));
          DT y = refop::avg_pool2d(
              refop::pixel_shuffle(refop::conv2d(h, DT::from(k2), DT::from(b2), 1, 1), 2), 2);
          return refop::wsum(y, DT::from(w));
        },
        1e-3, 1e-5);
    CAPTURE(seed);
    CAPTURE(report.max_rel);
    CHECK(report.checked > 100);
    CHECK(report.ok(1e-2));
  }
}
