#include "epdkit/net/config.hpp"

#include <json.hpp>

#include "epdkit/core/error.hpp"

namespace epd::net {
namespace {

using Init = ParamSpec::Init;

void add(std::vector<ParamSpec>& out, std::string name, ad::Shape shape, Init init, std::size_t fan_in) {
  out.push_back(ParamSpec{std::move(name), std::move(shape), init, fan_in});
}

void add_conv(std::vector<ParamSpec>& out, const std::string& name, std::size_t out_ch, std::size_t in_ch,
              std::size_t k, Init init) {
  const std::size_t fan_in = in_ch * k * k;
  add(out, name + ".weight", {out_ch, in_ch, k, k}, init, fan_in);
  add(out, name + ".bias", {out_ch}, Init::zero, fan_in);
}

void add_linear(std::vector<ParamSpec>& out, const std::string& name, std::size_t in, std::size_t outs,
                Init init, Init bias_init = Init::zero) {
  add(out, name + ".weight", {in, outs}, init, in);
  add(out, name + ".bias", {outs}, bias_init, in);
}

}  // namespace

std::string_view preset_name(Preset preset) { return preset == Preset::full ? "full" : "toy"; }

Preset parse_preset(std::string_view name) {
  if (name == "full") return Preset::full;
  if (name == "toy") return Preset::toy;
  throw RangeError("unknown backbone preset '" + std::string(name) + "' (expected full or toy)");
}

ModelConfig preset_config(Preset preset, bool enable_ms, bool enable_ea) {
  ModelConfig cfg;
  cfg.backbone = preset;
  if (preset == Preset::toy) {
    cfg.stem_channels = 8;
    cfg.stage_widths = {16, 32, 64, 128};
    cfg.stage_blocks = {1, 1, 1, 1};
    cfg.expansion = 2;
    cfg.pyramid_channels = 32;
    cfg.fc_hidden = 32;
  }
  cfg.enable_ms = enable_ms;
  cfg.enable_ea = enable_ea;
  return cfg;
}

void validate(const ModelConfig& cfg) {
  if (cfg.input_size < 32 || cfg.input_size % 32 != 0)
    throw RangeError("input_size must be a positive multiple of 32, got " + std::to_string(cfg.input_size));
  if (cfg.stem_channels < 1) throw RangeError("stem_channels must be positive");
  for (int s = 0; s < 4; ++s) {
    if (cfg.stage_blocks[s] < 1) throw RangeError("every stage needs at least one block");
    if (cfg.stage_widths[s] < cfg.expansion || cfg.stage_widths[s] % cfg.expansion != 0)
      throw RangeError("stage width " + std::to_string(cfg.stage_widths[s]) + " is not a multiple of expansion " +
                       std::to_string(cfg.expansion));
  }
  if (cfg.expansion < 1) throw RangeError("expansion must be positive");
  if (cfg.pyramid_channels < 1) throw RangeError("pyramid_channels must be positive");
  if (cfg.fuse_level < 2 || cfg.fuse_level > 5)
    throw RangeError("fuse_level must be in 2..5, got " + std::to_string(cfg.fuse_level));
  if (cfg.fc_hidden < 1) throw RangeError("fc_hidden must be positive");
  if (cfg.attention_reduction < 1) throw RangeError("attention_reduction must be positive");
}

int level_size(const ModelConfig& cfg, int level) { return cfg.input_size >> level; }

HeadInput head_input(const ModelConfig& cfg) {
  if (cfg.enable_ms) return {cfg.pyramid_channels, level_size(cfg, cfg.fuse_level)};
  return {cfg.stage_widths[3], level_size(cfg, 5)};
}

std::vector<ParamSpec> parameter_specs(const ModelConfig& cfg) {
  validate(cfg);
  std::vector<ParamSpec> out;
  add_conv(out, "stem", cfg.stem_channels, 3, 7, Init::he);

  std::size_t in = cfg.stem_channels;
  for (int s = 0; s < 4; ++s) {
    const std::size_t width = cfg.stage_widths[s];
    const std::size_t mid = width / cfg.expansion;
    for (int b = 0; b < cfg.stage_blocks[s]; ++b) {
      const std::string block = "stage" + std::to_string(s + 2) + ".block" + std::to_string(b);
      add_conv(out, block + ".conv1", mid, in, 1, Init::he);
      add_conv(out, block + ".conv2", mid, mid, 3, Init::he);
      add_conv(out, block + ".conv3", width, mid, 1, Init::small);
      if (b == 0) add_conv(out, block + ".proj", width, in, 1, Init::linear);
      in = width;
    }
  }

  const std::size_t pc = cfg.pyramid_channels;
  if (cfg.enable_ms) {
    for (int level = 2; level <= 5; ++level)
      add_conv(out, "td.lateral" + std::to_string(level), pc, cfg.stage_widths[level - 2], 1, Init::linear);
    for (int level = 3; level <= 5; ++level)
      add_conv(out, "bu.down" + std::to_string(level), pc, pc, 3, Init::linear);
  }

  const HeadInput head = head_input(cfg);
  if (cfg.enable_ea) {
    const std::size_t c = head.channels;
    const std::size_t hidden = std::max<std::size_t>(1, c / cfg.attention_reduction);
    add_linear(out, "ea.mlp1", c, hidden, Init::he);
    add_linear(out, "ea.mlp2", hidden, c, Init::small);
    add_conv(out, "ea.spatial", 1, 2, 7, Init::small);
  }

  add_linear(out, "head.fc1", head.flat(), cfg.fc_hidden, Init::he);
  add_linear(out, "head.fc2", cfg.fc_hidden, 1, Init::linear, Init::bias_mid);
  return out;
}

std::size_t count_params(const ModelConfig& cfg) {
  std::size_t total = 0;
  for (const auto& spec : parameter_specs(cfg)) total += ad::element_count(spec.shape);
  return total;
}

std::string to_json(const ModelConfig& cfg) {
  nlohmann::json j;
  j["input_size"] = cfg.input_size;
  j["backbone"] = preset_name(cfg.backbone);
  j["stem_channels"] = cfg.stem_channels;
  j["stage_widths"] = cfg.stage_widths;
  j["stage_blocks"] = cfg.stage_blocks;
  j["expansion"] = cfg.expansion;
  j["pyramid_channels"] = cfg.pyramid_channels;
  j["fuse_level"] = cfg.fuse_level;
  j["fc_hidden"] = cfg.fc_hidden;
  j["attention_reduction"] = cfg.attention_reduction;
  j["enable_ms"] = cfg.enable_ms;
  j["enable_ea"] = cfg.enable_ea;
  return j.dump();
}

ModelConfig config_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ModelConfig cfg;
    cfg.input_size = j.at("input_size").get<int>();
    cfg.backbone = parse_preset(j.at("backbone").get<std::string>());
    cfg.stem_channels = j.at("stem_channels").get<int>();
    cfg.stage_widths = j.at("stage_widths").get<std::array<int, 4>>();
    cfg.stage_blocks = j.at("stage_blocks").get<std::array<int, 4>>();
    cfg.expansion = j.at("expansion").get<int>();
    cfg.pyramid_channels = j.at("pyramid_channels").get<int>();
    cfg.fuse_level = j.at("fuse_level").get<int>();
    cfg.fc_hidden = j.at("fc_hidden").get<int>();
    cfg.attention_reduction = j.at("attention_reduction").get<int>();
    cfg.enable_ms = j.at("enable_ms").get<bool>();
    cfg.enable_ea = j.at("enable_ea").get<bool>();
    validate(cfg);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model config: ") + e.what());
  } catch (const RangeError& e) {
    throw FormatError(std::string("bad model config: ") + e.what());
  }
}

}  // namespace epd::net
