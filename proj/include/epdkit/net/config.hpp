#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "epdkit/autodiff/tensor.hpp"

namespace epd::net {

enum class Preset { full, toy };

std::string_view preset_name(Preset preset);
Preset parse_preset(std::string_view name);  // RangeError on unknown names

// Architecture of the quality network. Stage s (0..3) produces C_{s+2} at
// 1/2^{s+2} of the input resolution.
struct ModelConfig {
  int input_size = 128;
  Preset backbone = Preset::full;
  int stem_channels = 64;
  std::array<int, 4> stage_widths{256, 512, 1024, 2048};  // output channels of C2..C5
  std::array<int, 4> stage_blocks{3, 4, 6, 3};
  int expansion = 4;  // bottleneck output / inner width
  int pyramid_channels = 256;
  int fuse_level = 3;  // pyramid level (2..5) whose resolution F_E uses
  int fc_hidden = 345;
  int attention_reduction = 16;
  bool enable_ms = true;
  bool enable_ea = true;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

ModelConfig preset_config(Preset preset, bool enable_ms = true, bool enable_ea = true);

// Throws RangeError describing the first violated constraint.
void validate(const ModelConfig& cfg);

// Spatial side of pyramid level `level` (2..5).
int level_size(const ModelConfig& cfg, int level);

// Channel count and side of the map entering the head.
struct HeadInput {
  int channels;
  int side;
  std::size_t flat() const { return static_cast<std::size_t>(channels) * side * side; }
};
HeadInput head_input(const ModelConfig& cfg);

// Every trainable array, in construction order.
struct ParamSpec {
  std::string name;
  ad::Shape shape;
  enum class Init { he, linear, small, zero, bias_mid } init = Init::he;
  std::size_t fan_in = 1;
};
std::vector<ParamSpec> parameter_specs(const ModelConfig& cfg);

std::size_t count_params(const ModelConfig& cfg);

std::string to_json(const ModelConfig& cfg);
ModelConfig config_from_json(std::string_view text);  // FormatError on bad input

}  // namespace epd::net
