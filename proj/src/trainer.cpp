#include "cap/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cap/optim.hpp"

namespace cap {

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("train.lr0 must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
    throw ConfigError("train.lr_decay_factor must lie in (0, 1]");
  if (lr_decay_every == 0) throw ConfigError("train.lr_decay_every must be >= 1");
  if (!(grad_clip >= 0.0)) throw ConfigError("train.grad_clip must be >= 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (augment.crop_to == 0 || augment.crop_to > augment.crop_from)
    throw ConfigError("augment.crop_to must lie in [1, augment.crop_from]");
  if (augment.rot_deg < 0.0 || augment.scale_jitter < 0.0 || augment.scale_jitter >= 1.0)
    throw ConfigError("augment.rot_deg must be >= 0 and augment.scale_jitter in [0, 1)");
}

double TrainConfig::lr_at(std::size_t epoch) const {
  return lr_at_epoch(epoch, lr0, lr_decay_factor, lr_decay_every);
}

std::string metrics_csv_header() { return "epoch,lr,train_loss,train_top1,test_top1,test_top2,test_top5"; }

std::string metrics_csv_row(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%.6g,%.8f,%.4f,%.4f,%.4f,%.4f", r.epoch, r.lr, r.train_loss,
                r.train_top1, r.test_top1, r.test_top2, r.test_top5);
  return buf;
}

ItemResult item_gradient(const Model& model, const Tensor& image, std::size_t label, ParamSet& grads) {
  Tape tape;
  Bindings b(tape, model.params());
  ForwardTrace t = model.forward(b, tape.constant(image));
  Var loss = cross_entropy(t.probs, label);
  const Tensor& p = t.probs.value();
  const auto pred = static_cast<std::size_t>(std::max_element(p.data().begin(), p.data().end()) -
                                             p.data().begin());
  ItemResult r{loss.value()[0], pred == label};
  tape.backward(loss);
  grads = b.gradients();
  return r;
}

EvalMetrics evaluate(const Model& model, const LabeledDataset& data, const AugmentConfig& aug,
                     std::span<const std::size_t> ns) {
  if (data.items.empty()) throw ContractViolation("evaluate: empty dataset");
  std::vector<Tensor> probs;
  std::vector<std::size_t> labels;
  probs.reserve(data.items.size());
  for (const auto& s : data.items) {
    probs.push_back(model.predict(center_crop(s.image, aug)));
    labels.push_back(s.label);
  }
  return score_predictions(probs, labels, data.num_classes(), ns);
}

Trainer::Trainer(Model& model, TrainConfig cfg)
    : model_(model), cfg_(std::move(cfg)), velocity_(model.params().zeros_like()) {
  cfg_.validate();
}

StepResult Trainer::step(std::span<const Tensor* const> images, std::span<const std::size_t> labels,
                         double lr) {
  if (images.empty() || images.size() != labels.size())
    throw ContractViolation("Trainer::step: need a non-empty batch with one label per image");
  ParamSet total = model_.params().zeros_like();
  ParamSet item;
  StepResult res;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ItemResult r = item_gradient(model_, *images[i], labels[i], item);
    total.accumulate(item);
    res.mean_loss += r.loss;
    res.correct += r.correct ? 1 : 0;
  }
  double scale = 1.0 / static_cast<double>(images.size());
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto& [_, g] : total.entries())
      for (double v : g.data()) sq += v * v;
    const double norm = std::sqrt(sq) * scale;
    if (norm > cfg_.grad_clip) scale *= cfg_.grad_clip / norm;
  }
  for (auto& [_, g] : total.entries())
    for (auto& v : g.data()) v *= scale;
  res.mean_loss /= static_cast<double>(images.size());
  sgd_step(model_.params(), total, velocity_, lr, cfg_.momentum);
  return res;
}

EpochRecord Trainer::run_epoch(std::size_t epoch, const LabeledDataset& train, const LabeledDataset& test) {
  train.validate();
  test.validate();
  std::vector<std::size_t> order(train.items.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(mix_seed(cfg_.seed, 0x5EED0000 + epoch));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  EpochRecord rec;
  rec.epoch = epoch;
  rec.lr = cfg_.lr_at(epoch);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  const std::uint64_t epoch_seed = mix_seed(cfg_.seed, epoch);
  for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    for (std::size_t k = start; k < end; ++k) {
      const Sample& s = train.items[order[k]];
      // Augmentation randomness is keyed by sample index, not by visiting order.
      Rng rng(mix_seed(epoch_seed, order[k]));
      images.push_back(augment(s.image, cfg_.augment, rng));
      labels.push_back(s.label);
    }
    std::vector<const Tensor*> ptrs;
    for (const auto& im : images) ptrs.push_back(&im);
    const StepResult r = step(ptrs, labels, rec.lr);
    loss_sum += r.mean_loss * static_cast<double>(end - start);
    correct += r.correct;
  }
  rec.train_loss = loss_sum / static_cast<double>(order.size());
  rec.train_top1 = 100.0 * static_cast<double>(correct) / static_cast<double>(order.size());

  const std::size_t ns[] = {1, 2, 5};
  const EvalMetrics m = evaluate(model_, test, cfg_.augment, ns);
  rec.test_top1 = m.top(1);
  rec.test_top2 = m.top(2);
  rec.test_top5 = m.top(5);
  return rec;
}

}  // namespace cap
