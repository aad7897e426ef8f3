#include "epdkit/net/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "epdkit/core/error.hpp"

namespace epd::net {
namespace {

constexpr char kMagic[4] = {'E', 'I', 'Q', 'A'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kDtypeF32 = 0;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void tensor(const std::string& name, const ad::Tensor<float>& t) {
    uint<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    bytes(name.data(), name.size());
    uint<std::uint8_t>(kDtypeF32);
    uint<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) uint<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float v : t.values()) uint<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string data) : buf_(std::move(data)) {}
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw FormatError("checkpoint is truncated at byte " + std::to_string(pos_));
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string out = buf_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  std::pair<std::string, ad::Tensor<float>> tensor() {
    std::string name = bytes(uint<std::uint16_t>());
    if (uint<std::uint8_t>() != kDtypeF32) throw FormatError("tensor '" + name + "' has an unsupported dtype");
    ad::Shape shape(uint<std::uint8_t>());
    for (auto& d : shape) d = uint<std::uint32_t>();
    const std::size_t n = ad::element_count(shape);
    need(n * 4);
    std::vector<float> values(n);
    for (float& v : values) v = std::bit_cast<float>(uint<std::uint32_t>());
    return {std::move(name), ad::Tensor<float>(std::move(shape), std::move(values))};
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

ad::Optimizer<float> OptimizerState::make() const {
  ad::Optimizer<float> opt(config);
  opt.restore(steps, moments);
  return opt;
}

void save_checkpoint(const std::filesystem::path& path, const Maeiqa<float>& model,
                     const ad::Optimizer<float>* optimizer, const TrainingMeta& meta) {
  nlohmann::json header;
  header["config"] = nlohmann::json::parse(to_json(model.config()));
  header["meta"] = {{"epochs", meta.epochs}, {"seed", meta.seed}, {"split_hash", meta.split_hash}};
  if (optimizer) {
    const auto& c = optimizer->config();
    header["optimizer"] = {{"kind", c.kind == ad::OptimizerKind::adam ? "adam" : "sgd"},
                           {"lr", c.lr},
                           {"beta1", c.beta1},
                           {"beta2", c.beta2},
                           {"eps", c.eps},
                           {"steps", optimizer->steps_taken()}};
  }
  const std::string json = header.dump();

  Writer out;
  out.bytes(kMagic, 4);
  out.uint<std::uint16_t>(kVersion);
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(json.size()));
  out.bytes(json.data(), json.size());

  std::size_t count = model.parameters().size();
  if (optimizer) count += 2 * optimizer->moments().size();
  out.uint<std::uint32_t>(static_cast<std::uint32_t>(count));
  for (const auto& p : model.parameters()) out.tensor(p.name, p.value);
  if (optimizer)
    for (const auto& [name, m] : optimizer->moments()) {
      out.tensor("adam.m/" + name, m.first);
      out.tensor("adam.v/" + name, m.second);
    }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write checkpoint " + path.string());
  file.write(out.str().data(), static_cast<std::streamsize>(out.str().size()));
  if (!file) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader in(read_file(path));
  if (in.bytes(4) != std::string(kMagic, 4)) throw FormatError(path.string() + " is not a checkpoint (bad magic)");
  if (const auto v = in.uint<std::uint16_t>(); v != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(v));

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.bytes(in.uint<std::uint32_t>()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }

  try {
    Checkpoint ck{Maeiqa<float>::zeros(config_from_json(header.at("config").dump())), std::nullopt, {}};
    const auto& m = header.at("meta");
    ck.meta = {m.at("epochs").get<int>(), m.at("seed").get<std::uint64_t>(), m.at("split_hash").get<std::string>()};
    if (header.contains("optimizer")) {
      const auto& o = header["optimizer"];
      OptimizerState st;
      st.config.kind = o.at("kind").get<std::string>() == "adam" ? ad::OptimizerKind::adam : ad::OptimizerKind::sgd;
      st.config.lr = o.at("lr").get<double>();
      st.config.beta1 = o.at("beta1").get<double>();
      st.config.beta2 = o.at("beta2").get<double>();
      st.config.eps = o.at("eps").get<double>();
      st.steps = o.at("steps").get<long>();
      ck.optimizer = std::move(st);
    }

    const auto count = in.uint<std::uint32_t>();
    std::size_t loaded = 0;
    for (std::uint32_t k = 0; k < count; ++k) {
      auto [name, tensor] = in.tensor();
      const bool first = name.starts_with("adam.m/");
      if (first || name.starts_with("adam.v/")) {
        if (!ck.optimizer) throw FormatError("moment tensor '" + name + "' without optimizer state");
        auto& slot = ck.optimizer->moments[name.substr(7)];
        (first ? slot.first : slot.second) = std::move(tensor);
        continue;
      }
      auto& p = ck.model.param(name);
      if (p.value.shape() != tensor.shape())
        throw FormatError("parameter '" + name + "' has shape " + ad::to_string(tensor.shape()) + ", expected " +
                          ad::to_string(p.value.shape()));
      p.value = std::move(tensor);
      ++loaded;
    }
    if (loaded != ck.model.parameters().size())
      throw FormatError("checkpoint holds " + std::to_string(loaded) + " of " +
                        std::to_string(ck.model.parameters().size()) + " parameters");
    if (!in.done()) throw FormatError("trailing bytes after checkpoint tensors");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const RangeError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.model.config() == expected))
    throw ContractError("checkpoint config " + to_json(ck.model.config()) + " does not match requested config " +
                        to_json(expected));
  return ck;
}

}  // namespace epd::net
