// Run configuration and checkpoints.
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "cap/checkpoint.hpp"
#include "cap/config.hpp"
#include "cap/ctf.hpp"
#include "cap/run.hpp"

using namespace cap;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cap_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(KeyValues, ParsesCommentsAndQuotes) {
  const KeyValues kv = KeyValues::parse(
      "# run\n"
      "train.mode = B+C   # ablation\n"
      "\n"
      "data.root = \"synthetic\"\n");
  EXPECT_EQ(kv.get("train.mode"), "B+C");
  EXPECT_EQ(kv.get("data.root"), "synthetic");
  EXPECT_FALSE(kv.contains("train.lr0"));
}

TEST(KeyValues, UnknownKeyRejectedWithLocation) {
  try {
    KeyValues::parse("train.mode = B\ntrain.speed = 3\n", "my.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("my.cfg:2"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("train.speed"), std::string::npos) << e.what();
  }
  EXPECT_THROW(KeyValues::parse("just words\n"), ConfigError);
}

TEST(KeyValues, MergeAndRenderRoundTrip) {
  KeyValues kv = preset("desk");
  kv.merge(KeyValues::parse("train.epochs = 3\n"));
  EXPECT_EQ(kv.get("train.epochs"), "3");
  const KeyValues again = KeyValues::parse(kv.render());
  EXPECT_EQ(again.values(), kv.values());
}

TEST(Presets, DeskDefaults) {
  const RunConfig rc = build_run_config(preset("desk"));
  EXPECT_EQ(rc.model.mode, Mode::full);
  EXPECT_EQ(rc.model.backbone.output_shape(), (Shape{12, 12, 64}));
  EXPECT_EQ(enumerate_regions(12, 12, rc.model.regions).size(), 27u);
  EXPECT_EQ(rc.model.hidden, 32u);
  EXPECT_EQ(rc.model.clusters, 8u);
  EXPECT_EQ(rc.train.batch_size, 16u);
  EXPECT_EQ(rc.data.synthetic.num_classes, 8u);
  EXPECT_EQ(rc.data.synthetic.per_class, 200u);
  EXPECT_EQ(rc.data.test_per_class, 50u);
  EXPECT_EQ(rc.data.synthetic.image_size, 64u);
  EXPECT_DOUBLE_EQ(rc.data.synthetic.subtlety, 0.3);
}

TEST(Presets, UnknownPreset) { EXPECT_THROW(preset("laptop"), ConfigError); }

TEST(BuildRunConfig, RejectsInconsistentSettings) {
  const auto with = [](const std::string& key, const std::string& value) {
    KeyValues kv = preset("desk");
    kv.set(key, value);
    return kv;
  };
  EXPECT_THROW(build_run_config(with("train.mode", "bogus")), ConfigError);
  EXPECT_THROW(build_run_config(with("train.lr0", "-1")), ConfigError);
  EXPECT_THROW(build_run_config(with("train.momentum", "1")), ConfigError);
  EXPECT_THROW(build_run_config(with("train.epochs", "three")), ConfigError);
  EXPECT_THROW(build_run_config(with("backbone.input", "32")), ConfigError);
  EXPECT_THROW(build_run_config(with("backbone.downsample", "true,true")), ConfigError);
  EXPECT_THROW(build_run_config(with("regions.mode", "grid")), ConfigError);
  EXPECT_THROW(build_run_config(with("regions.delta", "13")), ConfigError);
  EXPECT_THROW(build_run_config(with("data.train_per_class", "0")), ConfigError);
  KeyValues partial;
  partial.set("train.mode", "B");
  EXPECT_THROW(build_run_config(partial), ConfigError);
}

TEST(BuildRunConfig, ExtentSyntax) {
  KeyValues kv = preset("desk");
  kv.set("pool.size", "3x2");
  const RunConfig rc = build_run_config(kv);
  EXPECT_EQ(rc.model.pool.height, 3u);
  EXPECT_EQ(rc.model.pool.width, 2u);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const fs::path dir = scratch_dir("ckpt_roundtrip");
  const Model m(ModelConfig{}, 17);
  save_checkpoint(dir, m.params(), "train.mode = B+C+E\n");
  const ParamSet loaded = load_checkpoint(dir);
  ASSERT_EQ(loaded.size(), m.params().size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded.entries()[i].first, m.params().entries()[i].first);
    EXPECT_EQ(loaded.entries()[i].second, m.params().entries()[i].second);
  }
  EXPECT_EQ(load_checkpoint_config(dir), "train.mode = B+C+E\n");
  Rng rng(1);
  const Tensor img = uniform({64, 64, 3}, 0, 1, rng);
  EXPECT_EQ(Model(ModelConfig{}, loaded).predict(img), m.predict(img));
}

TEST(Checkpoint, MissingTensorIsNamed) {
  const fs::path dir = scratch_dir("ckpt_missing");
  const Model m(ModelConfig{.mode = Mode::base}, 3);
  save_checkpoint(dir, m.params(), "");
  fs::remove(dir / "head.w.ctf");
  try {
    load_checkpoint(dir);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("head.w"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, CorruptMagicIsAFormatError) {
  const fs::path dir = scratch_dir("ckpt_magic");
  const Model m(ModelConfig{.mode = Mode::base}, 3);
  save_checkpoint(dir, m.params(), "");
  {
    std::fstream f(dir / "head.b.ctf", std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  try {
    load_checkpoint(dir);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("head.b"), std::string::npos) << e.what();
  }
}

TEST(Run, SmallRunIsDeterministic) {
  KeyValues kv = preset("desk");
  kv.merge(KeyValues::parse(
      "train.mode = B+C\ntrain.epochs = 2\ndata.train_per_class = 2\ndata.test_per_class = 1\n"
      "data.num_classes = 4\nrun.checkpoint_every = 1\n"));
  const RunConfig rc = build_run_config(kv);
  const fs::path a = scratch_dir("run_a"), b = scratch_dir("run_b");
  const RunResult ra = run_training(rc, a);
  run_training(rc, b);
  ASSERT_EQ(ra.history.size(), 2u);
  EXPECT_EQ(slurp(a / "metrics.csv"), slurp(b / "metrics.csv"));
  EXPECT_EQ(slurp(a / "config.resolved"), kv.render());
  EXPECT_TRUE(fs::exists(a / "checkpoints" / "epoch_001" / "manifest.txt"));
  EXPECT_FALSE(fs::exists(a / "checkpoints" / "epoch_002"));
  for (const auto& e : fs::directory_iterator(a / "checkpoints" / "final"))
    EXPECT_EQ(slurp(e.path()), slurp(b / "checkpoints" / "final" / e.path().filename()));
}
