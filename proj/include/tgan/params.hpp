// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tgan/tensor.hpp"

namespace tgan {

// Named, ordered registry of model state. Learnable entries are what the
// optimizer updates; buffers (batch-norm running stats) ride along through
// checkpoints untouched by the optimizer.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool learnable = true;
  };

  void add(std::string name, Tensor t) { insert(std::move(name), std::move(t), true); }
  void add_buffer(std::string name, Tensor t) { insert(std::move(name), std::move(t), false); }

  const std::vector<Entry>& entries() const { return entries_; }
  Tensor* find(std::string_view name);
  const Tensor* find(std::string_view name) const;

  std::int64_t learnable_count() const;
  void zero_grad();

 private:
  void insert(std::string name, Tensor t, bool learnable);

  std::vector<Entry> entries_;
};

}  // namespace tgan
