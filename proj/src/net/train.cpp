#include "epdkit/net/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "epdkit/autodiff/ops.hpp"
#include "epdkit/core/error.hpp"
#include "epdkit/core/rng.hpp"

namespace epd::net {
namespace {

std::vector<ImageBuf> images_of(std::span<const Sample> samples) {
  std::vector<ImageBuf> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.image);
  return out;
}

std::string batch_ids(std::span<const Sample> samples, std::span<const std::size_t> order) {
  std::string out;
  for (std::size_t k : order) out += (out.empty() ? "" : ",") + samples[k].id;
  return out;
}

}  // namespace

double evaluate_mse(const Maeiqa<float>& model, std::span<const Sample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto images = images_of(samples);
  const auto scores = model.predict(images);
  double sq = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) sq += (scores[i] - samples[i].target) * (scores[i] - samples[i].target);
  return sq / static_cast<double>(samples.size());
}

std::vector<EpochStats> train(Maeiqa<float>& model, ad::Optimizer<float>& optimizer,
                              std::span<const Sample> train_set, std::span<const Sample> val_set,
                              const TrainConfig& config, const EpochCallback& on_epoch) {
  if (train_set.empty()) throw RangeError("training split is empty");
  if (config.epochs < 1) throw RangeError("epochs must be positive");
  if (config.batch_size < 1) throw RangeError("batch_size must be positive");
  if (config.warmup_epochs < 0) throw RangeError("warmup_epochs must be non-negative");

  const int size = model.config().input_size;
  const auto params = model.parameter_ptrs();
  std::vector<std::size_t> order(train_set.size());
  std::vector<EpochStats> curve;
  const std::size_t batches = (train_set.size() + config.batch_size - 1) / config.batch_size;
  const double warmup_steps = static_cast<double>(batches) * config.warmup_epochs;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double sq_sum = 0.0;
    for (std::size_t lo = 0, batch = 0; lo < order.size(); lo += config.batch_size, ++batch) {
      const std::size_t n = std::min<std::size_t>(config.batch_size, order.size() - lo);
      const std::span<const std::size_t> idx(order.data() + lo, n);
      std::vector<ImageBuf> images;
      std::vector<float> targets;
      for (std::size_t k : idx) {
        images.push_back(train_set[k].image);
        targets.push_back(static_cast<float>(train_set[k].target));
      }

      ad::Tape<float> tape;
      const auto input = tape.constant(images_to_input<float>(images, size));
      const auto score = ad::reshape(model.forward(tape, input).score, ad::Shape{n});
      const auto loss = ad::mse_loss(score, tape.constant(ad::Tensor<float>(ad::Shape{n}, targets)));
      const double value = loss.value().item();
      if (!std::isfinite(value))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + " (samples " + batch_ids(train_set, idx) + ")");
      sq_sum += value * static_cast<double>(n);

      tape.backward(loss);
      ad::copy_gradients(tape, params);
      const double step = static_cast<double>(optimizer.steps_taken() + 1);
      optimizer.step(params, step < warmup_steps ? step / warmup_steps : 1.0);
    }

    EpochStats stats{epoch, sq_sum / static_cast<double>(order.size()), evaluate_mse(model, val_set)};
    curve.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return curve;
}

}  // namespace epd::net
