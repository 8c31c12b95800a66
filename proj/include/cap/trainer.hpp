#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cap/augment.hpp"
#include "cap/dataset.hpp"
#include "cap/metrics.hpp"
#include "cap/model.hpp"

namespace cap {

struct TrainConfig {
  double lr0 = 1e-2;
  double momentum = 0.9;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_every = 20;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  /// Rescale the averaged batch gradient to this global L2 norm when larger; 0 disables.
  double grad_clip = 0.0;
  AugmentConfig augment;

  /// Throws ConfigError when lr0 <= 0, momentum outside [0, 1), factor outside (0, 1], ...
  void validate() const;
  double lr_at(std::size_t epoch) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_top1 = 0.0;
  double test_top1 = 0.0;
  double test_top2 = 0.0;
  double test_top5 = 0.0;
};

/// "epoch,lr,train_loss,train_top1,test_top1,test_top2,test_top5"
std::string metrics_csv_header();
std::string metrics_csv_row(const EpochRecord& r);

struct ItemResult {
  double loss = 0.0;
  bool correct = false;
};

/// Loss and parameter gradients of one (already transformed) image.
ItemResult item_gradient(const Model& model, const Tensor& image, std::size_t label, ParamSet& grads);

/// Forward every sample (centre-cropped) and score it.
EvalMetrics evaluate(const Model& model, const LabeledDataset& data, const AugmentConfig& aug,
                     std::span<const std::size_t> ns);

struct StepResult {
  double mean_loss = 0.0;
  std::size_t correct = 0;
};

/**
 * Mini-batch SGD driver. Per-item gradients are computed on separate tapes
 * and summed in batch order, then averaged, so results do not depend on how
 * items are scheduled.
 */
class Trainer {
 public:
  Trainer(Model& model, TrainConfig cfg);

  /// One update from already transformed images.
  StepResult step(std::span<const Tensor* const> images, std::span<const std::size_t> labels, double lr);

  /// Shuffled, augmented pass over `train`, then evaluation on `test`.
  EpochRecord run_epoch(std::size_t epoch, const LabeledDataset& train, const LabeledDataset& test);

  const TrainConfig& config() const noexcept { return cfg_; }

 private:
  Model& model_;
  TrainConfig cfg_;
  ParamSet velocity_;
};

}  // namespace cap
