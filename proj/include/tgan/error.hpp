// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tgan {

// Single exception type for the whole library. The kind doubles as the CLI
// exit code (usage=1, data=2, numeric=3).
class Error : public std::runtime_error {
 public:
  enum class Kind { usage = 1, data = 2, numeric = 3 };

  Error(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

inline Error usage_error(const std::string& m) { return Error(Error::Kind::usage, m); }
inline Error data_error(const std::string& m) { return Error(Error::Kind::data, m); }
inline Error numeric_error(const std::string& m) { return Error(Error::Kind::numeric, m); }

}  // namespace tgan
