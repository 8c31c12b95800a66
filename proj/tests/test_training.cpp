// Loss, optimizer, schedule, augmentation, model assembly, metrics and the synthetic data.
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cap/augment.hpp"
#include "cap/metrics.hpp"
#include "cap/optim.hpp"
#include "cap/trainer.hpp"

using namespace cap;

namespace {

ModelConfig small_model(Mode mode) {
  ModelConfig m;
  m.mode = mode;
  m.backbone.stages = {{4, true}, {8, true}};
  m.backbone.input_h = m.backbone.input_w = 16;
  m.backbone.upsample_h = m.backbone.upsample_w = 6;
  m.regions.delta_x = m.regions.delta_y = 2;
  m.regions.levels = {{1, 2}, {2, 2}, {3, 1}};
  m.pool = {2, 2};
  m.hidden = 6;
  m.clusters = 3;
  m.classes = 4;
  return m;
}

double ce(const Tensor& yhat, std::size_t y) {
  Tape t;
  return cross_entropy(t.constant(yhat), y).value()[0];
}

}  // namespace

TEST(CrossEntropy, Examples) {
  EXPECT_EQ(ce(Tensor::from({0, 1, 0}), 1), 0.0);
  EXPECT_NEAR(ce(Tensor({5}, 0.2), 3), std::log(5.0), 1e-12);
  EXPECT_NEAR(ce(Tensor::from({0.25, 0.75}), 1), 0.28768, 1e-5);
  EXPECT_THROW(ce(Tensor::from({0.5, 0.5}), 2), ContractViolation);
}

TEST(Sgd, VanillaStep) {
  ParamSet p, g;
  p.add("x", Tensor::from({1.0}));
  g.add("x", Tensor::from({2.0}));
  ParamSet v = p.zeros_like();
  sgd_step(p, g, v, 0.1, 0.0);
  EXPECT_NEAR(p.at("x")[0], 0.8, 1e-15);
}

TEST(Sgd, MomentumRecurrence) {
  ParamSet p, g;
  p.add("x", Tensor::from({0.5}));
  g.add("x", Tensor::from({1.0}));
  ParamSet v = p.zeros_like();
  sgd_step(p, g, v, 1e-4, 0.99);
  EXPECT_DOUBLE_EQ(v.at("x")[0], 1.0);
  EXPECT_DOUBLE_EQ(p.at("x")[0], 0.5 - 1e-4);
  sgd_step(p, g, v, 1e-4, 0.99);
  EXPECT_DOUBLE_EQ(v.at("x")[0], 1.99);
  EXPECT_NEAR(p.at("x")[0], 0.5 - 1e-4 - 1.99e-4, 1e-15);
}

TEST(Sgd, ZeroGradientFixedPoint) {
  Rng rng(1);
  ParamSet p;
  p.add("w", uniform({3, 2}, -1, 1, rng));
  const ParamSet before = p;
  ParamSet v = p.zeros_like();
  sgd_step(p, p.zeros_like(), v, 0.5, 0.9);
  EXPECT_EQ(p.at("w"), before.at("w"));
}

TEST(Sgd, ShapeMismatch) {
  ParamSet p, g;
  p.add("x", Tensor({2}));
  g.add("x", Tensor({3}));
  ParamSet v = p.zeros_like();
  EXPECT_THROW(sgd_step(p, g, v, 0.1, 0.0), DimensionError);
}

TEST(Schedule, StepDecay) {
  EXPECT_DOUBLE_EQ(lr_at_epoch(0, 1e-4, 0.1, 50), 1e-4);
  EXPECT_DOUBLE_EQ(lr_at_epoch(49, 1e-4, 0.1, 50), 1e-4);
  EXPECT_NEAR(lr_at_epoch(50, 1e-4, 0.1, 50), 1e-5, 1e-20);
  EXPECT_NEAR(lr_at_epoch(100, 1e-4, 0.1, 50), 1e-6, 1e-21);
  EXPECT_DOUBLE_EQ(lr_at_epoch(1000, 0.3, 1.0, 7), 0.3);
}

TEST(TrainConfig, Invariants) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr0 = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.momentum = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.lr_decay_factor = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.lr_decay_factor = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Augment, DisabledIsIdentity) {
  Rng rng(2), draw(3);
  const Tensor img = uniform({20, 20, 3}, 0, 1, rng);
  AugmentConfig cfg{0.0, 0.0, 20, 20};
  EXPECT_EQ(augment(img, cfg, draw), img);
}

TEST(Augment, SeededDeterminism) {
  Rng rng(4);
  const Tensor img = uniform({24, 24, 3}, 0, 1, rng);
  AugmentConfig cfg{15.0, 0.15, 24, 20};
  Rng a(99), b(99);
  const Tensor x = augment(img, cfg, a);
  EXPECT_EQ(x.shape(), (Shape{20, 20, 3}));
  EXPECT_EQ(x, augment(img, cfg, b));
}

TEST(Augment, QuarterTurnOfMarker) {
  // [[a, b], [c, d]] turned a quarter counter-clockwise as displayed is [[b, d], [a, c]].
  const Tensor img({2, 2, 1}, {1, 2, 3, 4});
  const Tensor rot = rotate_scale(img, 90.0, 1.0);
  const Tensor want({2, 2, 1}, {2, 4, 1, 3});
  EXPECT_LE(max_abs_diff(rot, want), 1e-12);
}

TEST(Augment, OversizedCropRejected) {
  Rng rng(5);
  AugmentConfig cfg{0.0, 0.0, 16, 20};
  EXPECT_THROW(augment(Tensor({16, 16, 3}), cfg, rng), ContractViolation);
}

TEST(Model, ParameterCountGrowsWithComponents) {
  const auto count = [](Mode m) { return Model(ModelConfig{.mode = m}, 1).params().num_scalars(); };
  EXPECT_LT(count(Mode::base), count(Mode::base_cap));
  EXPECT_LT(count(Mode::base_cap), count(Mode::full));
  EXPECT_LT(count(Mode::base), count(Mode::base_encoding));
}

TEST(Model, FullPipelineOutputShape) {
  Rng rng(6);
  const Model m(ModelConfig{}, 1);
  const Tensor p = m.predict(uniform({64, 64, 3}, 0, 1, rng));
  ASSERT_EQ(p.shape(), (Shape{8}));
  EXPECT_NEAR(std::accumulate(p.data().begin(), p.data().end(), 0.0), 1.0, 1e-12);
}

TEST(Model, ModeNames) {
  for (const char* s : {"B", "B+E", "B+C", "B+C+E"}) EXPECT_EQ(to_string(parse_mode(s)), s);
  EXPECT_THROW(parse_mode("bogus"), ConfigError);
}

TEST(Model, AdoptsMatchingParameters) {
  const Model a(small_model(Mode::full), 3);
  const Model b(small_model(Mode::full), a.params());
  Rng rng(7);
  const Tensor img = uniform({16, 16, 3}, 0, 1, rng);
  EXPECT_EQ(a.predict(img), b.predict(img));
  EXPECT_THROW(Model(small_model(Mode::base_cap), a.params()), ConfigError);
}

TEST(Trainer, EveryModeTakesAStepOnSyntheticData) {
  SyntheticSpec spec{4, 2, 16, 0.5, 3};
  const LabeledDataset d = make_synthetic_dataset(spec, Split::train);
  for (Mode mode : {Mode::base, Mode::base_encoding, Mode::base_cap, Mode::full}) {
    Model m(small_model(mode), 5);
    Trainer tr(m, TrainConfig{.lr0 = 0.01, .batch_size = 4, .augment = {0, 0, 16, 16}});
    std::vector<const Tensor*> ims;
    std::vector<std::size_t> ls;
    for (const auto& s : d.items) ims.push_back(&s.image), ls.push_back(s.label);
    const ParamSet before = m.params();
    const StepResult r = tr.step(ims, ls, 0.01);
    EXPECT_TRUE(std::isfinite(r.mean_loss)) << to_string(mode);
    EXPECT_NE(m.params().at("backbone.conv0.w"), before.at("backbone.conv0.w")) << to_string(mode);
  }
}

TEST(Trainer, RepeatedBatchLossDropsWithinFiveSteps) {
  SyntheticSpec spec{4, 2, 16, 0.5, 4};
  const LabeledDataset d = make_synthetic_dataset(spec, Split::train);
  std::vector<const Tensor*> ims;
  std::vector<std::size_t> ls;
  for (const auto& s : d.items) ims.push_back(&s.image), ls.push_back(s.label);
  for (Mode mode : {Mode::base, Mode::base_encoding, Mode::base_cap, Mode::full}) {
    Model m(small_model(mode), 6);
    Trainer tr(m, TrainConfig{.lr0 = 0.02, .augment = {0, 0, 16, 16}});
    const double first = tr.step(ims, ls, 0.02).mean_loss;
    double best = first;
    for (int k = 0; k < 4; ++k) best = std::min(best, tr.step(ims, ls, 0.02).mean_loss);
    EXPECT_LT(best, first) << to_string(mode);
  }
}

TEST(Trainer, GradientClipBoundsTheUpdate) {
  SyntheticSpec spec{4, 2, 16, 0.5, 5};
  const LabeledDataset d = make_synthetic_dataset(spec, Split::train);
  std::vector<const Tensor*> ims;
  std::vector<std::size_t> ls;
  for (const auto& s : d.items) ims.push_back(&s.image), ls.push_back(s.label);
  Model m(small_model(Mode::full), 7);
  const ParamSet before = m.params();
  Trainer tr(m, TrainConfig{.lr0 = 1.0, .momentum = 0.0, .grad_clip = 1e-3, .augment = {0, 0, 16, 16}});
  tr.step(ims, ls, 1.0);
  double sq = 0.0;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const Tensor& a = before.entries()[i].second;
    const Tensor& b = m.params().entries()[i].second;
    for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
  }
  EXPECT_NEAR(std::sqrt(sq), 1e-3, 1e-9);
}

TEST(Metrics, OracleModelScoresPerfectly) {
  std::vector<Tensor> probs;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 20; ++i) {
    Tensor p({5}, 0.05);
    p[i % 5] = 0.8;
    probs.push_back(p);
    labels.push_back(i % 5);
  }
  const std::size_t ns[] = {1, 2, 5};
  const EvalMetrics m = score_predictions(probs, labels, 5, ns);
  EXPECT_EQ(m.top(1), 100.0);
  EXPECT_EQ(m.count, 20u);
  for (double c : m.per_class) EXPECT_EQ(c, 100.0);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(m.confusion[c][c], 4u);
  EXPECT_THROW(m.top(3), ContractViolation);
}

TEST(Metrics, RandomPredictorNearChance) {
  Rng rng(8);
  std::vector<Tensor> probs;
  std::vector<std::size_t> labels;
  Tape t;
  for (std::size_t i = 0; i < 4000; ++i) {
    probs.push_back(softmax(t.constant(uniform({8}, -1, 1, rng)), 0).value());
    labels.push_back(std::uniform_int_distribution<std::size_t>(0, 7)(rng));
  }
  const std::size_t ns[] = {1, 2, 5};
  const EvalMetrics m = score_predictions(probs, labels, 8, ns);
  EXPECT_NEAR(m.top(1), 12.5, 2.5);
  EXPECT_NEAR(m.top(5), 62.5, 3.5);
  EXPECT_LE(m.top(1), m.top(2));
  EXPECT_LE(m.top(2), m.top(5));
}

TEST(Metrics, TiesDoNotBreakMonotonicity) {
  const std::vector<Tensor> probs = {Tensor({4}, 0.25), Tensor::from({0.4, 0.4, 0.1, 0.1})};
  const std::vector<std::size_t> labels = {2, 1};
  const std::size_t ns[] = {1, 2};
  const EvalMetrics m = score_predictions(probs, labels, 4, ns);
  EXPECT_LE(m.top(1), m.top(2));
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticSpec spec{3, 4, 32, 0.3, 11};
  const LabeledDataset a = make_synthetic_dataset(spec, Split::train);
  const LabeledDataset b = make_synthetic_dataset(spec, Split::train);
  ASSERT_EQ(a.items.size(), 12u);
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    EXPECT_EQ(a.items[i].image, b.items[i].image);
    EXPECT_EQ(a.items[i].label, b.items[i].label);
  }
  const LabeledDataset test = make_synthetic_dataset(spec, Split::test);
  EXPECT_NE(test.items[0].image, a.items[0].image);
}

TEST(Synthetic, DegenerateInputsRejected) {
  EXPECT_THROW(make_synthetic_dataset({8, 0, 64, 0.3, 1}, Split::train), ContractViolation);
  EXPECT_THROW(make_synthetic_dataset({8, 2, 64, 0.0, 1}, Split::train), ContractViolation);
  EXPECT_THROW(make_synthetic_dataset({8, 2, 64, 1.5, 1}, Split::train), ContractViolation);
}

TEST(Synthetic, LinearProbeSeparatesTwoClassesAtFullStrength) {
  SyntheticSpec spec{2, 150, 64, 1.0, 12};
  const LabeledDataset train = make_synthetic_dataset(spec, Split::train);
  const LabeledDataset test = make_synthetic_dataset(spec, Split::test);
  const std::size_t dim = train.items[0].image.size();
  // Logistic regression on raw pixels, full-batch gradient descent.
  std::vector<double> w(dim, 0.0);
  double b = 0.0;
  const auto score = [&](const Tensor& x) {
    double z = b;
    for (std::size_t i = 0; i < dim; ++i) z += w[i] * (x[i] - 0.5);
    return z;
  };
  for (int it = 0; it < 300; ++it) {
    std::vector<double> gw(dim, 0.0);
    double gb = 0.0;
    for (const auto& s : train.items) {
      const double err = 1.0 / (1.0 + std::exp(-score(s.image))) - static_cast<double>(s.label);
      for (std::size_t i = 0; i < dim; ++i) gw[i] += err * (s.image[i] - 0.5);
      gb += err;
    }
    const double lr = 0.5 / static_cast<double>(train.items.size());
    for (std::size_t i = 0; i < dim; ++i) w[i] -= lr * gw[i];
    b -= lr * gb;
  }
  std::size_t hits = 0;
  for (const auto& s : test.items) hits += (score(s.image) > 0.0) == (s.label == 1);
  EXPECT_GE(static_cast<double>(hits) / test.items.size(), 0.9);
}
