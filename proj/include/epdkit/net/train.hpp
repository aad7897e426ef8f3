#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "epdkit/autodiff/optim.hpp"
#include "epdkit/core/image.hpp"
#include "epdkit/net/maeiqa.hpp"

namespace epd::net {

struct Sample {
  std::string id;
  ImageBuf image;
  double target = 0.0;
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  std::uint64_t seed = 0;  // shuffling stream; initialization is the model's own seed
  // Learning rate ramps linearly from lr/steps to lr over this many epochs of
  // optimizer steps. Without normalization layers, full-size early Adam steps
  // can push the head's ReLUs dead and freeze the output at a constant.
  int warmup_epochs = 1;
};

struct EpochStats {
  int epoch = 0;           // 1-based
  double train_mse = 0.0;  // mean squared error of the forward passes made during the epoch
  double val_mse = 0.0;    // after the epoch's last update; NaN when there is no validation data
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Mini-batch MSE regression of model scores onto sample targets. The sample
// order is reshuffled each epoch from (seed, epoch), so identical inputs give
// identical curves. Throws RangeError for an empty training set or bad
// hyper-parameters, and NumericError (naming epoch, batch and sample ids) as
// soon as a batch loss is not finite.
std::vector<EpochStats> train(Maeiqa<float>& model, ad::Optimizer<float>& optimizer,
                              std::span<const Sample> train_set, std::span<const Sample> val_set,
                              const TrainConfig& config, const EpochCallback& on_epoch = {});

// Mean squared error of model predictions over `samples`.
double evaluate_mse(const Maeiqa<float>& model, std::span<const Sample> samples);

}  // namespace epd::net
