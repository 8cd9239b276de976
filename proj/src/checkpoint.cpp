// Copyright (c) 2026 The tgan authors
// SPDX-License-Identifier: Apache-2.0
#include <cstring>
#include <fstream>

#include "tgan/error.hpp"
#include "tgan/trainer.hpp"

// Checkpoint file layout (all integers little-endian):
//   magic "TGAN" | u32 version=1 | u32 len + config text (UTF-8)
//   u32 count + tensor records (model parameters and buffers)
//   u32 count + tensor records (optimizer moments and step counters)
//   4 x u64 RNG state | u64 step
// Tensor record: u32 name length + bytes | u32 rank | rank x u32 dims |
// raw 32-bit float data.

namespace tgan {

namespace {

constexpr char kMagic[4] = {'T', 'G', 'A', 'N'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_floats(std::ostream& out, const std::vector<float>& data) {
  for (float f : data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw data_error("corrupt checkpoint: truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

void put_record(std::ostream& out, const TensorRecord& rec) {
  put_u32(out, static_cast<std::uint32_t>(rec.name.size()));
  out.write(rec.name.data(), static_cast<std::streamsize>(rec.name.size()));
  put_u32(out, static_cast<std::uint32_t>(rec.shape.size()));
  for (int d : rec.shape) put_u32(out, static_cast<std::uint32_t>(d));
  put_floats(out, rec.data);
}

TensorRecord get_record(std::istream& in) {
  TensorRecord rec;
  const std::uint32_t name_len = get_u32(in);
  if (name_len > 4096) throw data_error("corrupt checkpoint: implausible name length");
  rec.name.resize(name_len);
  in.read(rec.name.data(), name_len);
  if (in.gcount() != static_cast<std::streamsize>(name_len)) {
    throw data_error("corrupt checkpoint: truncated");
  }
  const std::uint32_t rank = get_u32(in);
  if (rank > 8) throw data_error("corrupt checkpoint: implausible rank");
  std::uint64_t count = 1;
  rec.shape.resize(rank);
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = get_u32(in);
    if (d == 0 || d > (1u << 24)) throw data_error("corrupt checkpoint: implausible dimension");
    rec.shape[i] = static_cast<int>(d);
    count *= d;
  }
  if (count > (1ull << 28)) throw data_error("corrupt checkpoint: implausible tensor size");
  rec.data.resize(static_cast<std::size_t>(count));
  for (auto& f : rec.data) {
    const std::uint32_t bits = get_u32(in);
    std::memcpy(&f, &bits, 4);
  }
  return rec;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, 4);
  put_u32(out, ckpt.version);
  put_u32(out, static_cast<std::uint32_t>(ckpt.config_text.size()));
  out.write(ckpt.config_text.data(), static_cast<std::streamsize>(ckpt.config_text.size()));
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& rec : ckpt.tensors) put_record(out, rec);
  put_u32(out, static_cast<std::uint32_t>(ckpt.adam_tensors.size()));
  for (const auto& rec : ckpt.adam_tensors) put_record(out, rec);
  for (std::uint64_t word : ckpt.rng_state) put_u64(out, word);
  put_u64(out, ckpt.step);
  if (!out) throw data_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw data_error("corrupt checkpoint: bad magic in " + path.string());
  }
  Checkpoint ckpt;
  ckpt.version = get_u32(in);
  if (ckpt.version != 1) {
    throw data_error("checkpoint version " + std::to_string(ckpt.version) +
                     " is not supported (expected 1)");
  }
  const std::uint32_t cfg_len = get_u32(in);
  if (cfg_len > (1u << 20)) throw data_error("corrupt checkpoint: implausible config length");
  ckpt.config_text.resize(cfg_len);
  in.read(ckpt.config_text.data(), cfg_len);
  if (in.gcount() != static_cast<std::streamsize>(cfg_len)) {
    throw data_error("corrupt checkpoint: truncated");
  }
  const std::uint32_t n_tensors = get_u32(in);
  if (n_tensors > (1u << 20)) throw data_error("corrupt checkpoint: implausible tensor count");
  ckpt.tensors.reserve(n_tensors);
  for (std::uint32_t i = 0; i < n_tensors; ++i) ckpt.tensors.push_back(get_record(in));
  const std::uint32_t n_adam = get_u32(in);
  if (n_adam > (1u << 20)) throw data_error("corrupt checkpoint: implausible tensor count");
  ckpt.adam_tensors.reserve(n_adam);
  for (std::uint32_t i = 0; i < n_adam; ++i) ckpt.adam_tensors.push_back(get_record(in));
  for (auto& word : ckpt.rng_state) word = get_u64(in);
  ckpt.step = get_u64(in);
  return ckpt;
}

}  // namespace tgan
