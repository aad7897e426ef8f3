#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "epdkit/autodiff/optim.hpp"
#include "epdkit/net/maeiqa.hpp"

namespace epd::net {

struct TrainingMeta {
  int epochs = 0;
  std::uint64_t seed = 0;
  std::string split_hash;
};

struct OptimizerState {
  ad::OptimizerConfig config;
  long steps = 0;
  std::map<std::string, ad::Optimizer<float>::Moments> moments;

  ad::Optimizer<float> make() const;
};

struct Checkpoint {
  Maeiqa<float> model;
  std::optional<OptimizerState> optimizer;
  TrainingMeta meta;
};

// Binary layout, all integers little-endian:
//   "EIQA", u16 version, u32 n + n bytes of JSON (config, meta, optimizer
//   scalars), u32 tensor count, then per tensor: u16 name length, name, u8
//   dtype (0 = f32), u8 rank, u32 dims[rank], f32 payload.
// Optimizer moments are stored as tensors named "adam.m/<param>" and
// "adam.v/<param>".
void save_checkpoint(const std::filesystem::path& path, const Maeiqa<float>& model,
                     const ad::Optimizer<float>* optimizer, const TrainingMeta& meta);

// Throws IoError when the file cannot be read and FormatError when it is
// malformed or truncated.
Checkpoint load_checkpoint(const std::filesystem::path& path);
// As above, and throws ContractError when the stored config differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace epd::net
