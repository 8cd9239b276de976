// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include "tgan/params.hpp"

#include "tgan/error.hpp"

namespace tgan {

void ParamSet::insert(std::string name, Tensor t, bool learnable) {
  if (find(name) != nullptr) {
    throw data_error("parameter name registered twice: " + name);
  }
  entries_.push_back(Entry{std::move(name), std::move(t), learnable});
}

Tensor* ParamSet::find(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

const Tensor* ParamSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return &e.tensor;
  }
  return nullptr;
}

std::int64_t ParamSet::learnable_count() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) {
    if (e.learnable) n += e.tensor.size();
  }
  return n;
}

void ParamSet::zero_grad() {
  for (auto& e : entries_) e.tensor.clear_grad();
}

}  // namespace tgan
