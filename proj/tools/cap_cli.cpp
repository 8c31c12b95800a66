#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cap/augment.hpp"
#include "cap/checkpoint.hpp"
#include "cap/config.hpp"
#include "cap/ctf.hpp"
#include "cap/run.hpp"
#include "cap/verify.hpp"

namespace fs = std::filesystem;
using namespace cap;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

const std::vector<std::string> kModes = {"B", "B+E", "B+C", "B+C+E"};

// Settings shared by every subcommand that builds a run configuration.
struct ConfigFlags {
  std::string preset = "desk";
  std::string file;
  std::vector<std::string> sets;
  std::string mode, data;
  std::size_t epochs = 0, seed = 0;
  bool has_epochs = false, has_seed = false;

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "Base settings: desk or large")
        ->check(CLI::IsMember({"desk", "large"}))
        ->capture_default_str();
    app->add_option("--config", file, "Config file of 'section.key = value' lines")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "Override one key, e.g. --set train.lr0=0.01 (repeatable)");
    app->add_option("--mode", mode, "Ablation mode")->check(CLI::IsMember(kModes));
    app->add_option("--data", data, "'synthetic' or an image-folder root");
    app->add_option_function<std::size_t>(
        "--epochs", [this](std::size_t v) { epochs = v, has_epochs = true; }, "Training epochs");
    app->add_option_function<std::size_t>(
        "--seed", [this](std::size_t v) { seed = v, has_seed = true; }, "Training seed");
  }

  // Precedence: base < --config < --set < named flags.
  KeyValues resolve(KeyValues base) const {
    if (!file.empty()) base.merge(KeyValues::load(file));
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      base.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!mode.empty()) base.set("train.mode", mode);
    if (!data.empty()) base.set("data.root", data);
    if (has_epochs) base.set("train.epochs", std::to_string(epochs));
    if (has_seed) base.set("train.seed", std::to_string(seed));
    return base;
  }
  KeyValues resolve() const { return resolve(cap::preset(preset)); }
};

fs::path default_out(const std::string& flag, const std::string& configured) {
  if (!flag.empty()) return flag;
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("CAP_OUT"); env && *env) return env;
  return "cap_out";
}

// Checkpoint settings first, then any command-line overrides on top.
RunConfig checkpoint_run_config(const fs::path& ckpt, const ConfigFlags& flags) {
  return build_run_config(flags.resolve(KeyValues::parse(load_checkpoint_config(ckpt), (ckpt / "config.resolved").string())));
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  ConfigFlags cfg;
  std::string out;
  bool quiet = false;
};

int cmd_train(const TrainArgs& a) {
  const RunConfig rc = build_run_config(a.cfg.resolve());
  const fs::path out = default_out(a.out, rc.out_dir);
  const RunResult r = run_training(rc, out, a.quiet ? nullptr : &std::cout);
  std::cout << "metrics: " << (out / "metrics.csv").string() << "\ncheckpoint: " << r.final_checkpoint.string()
            << '\n';
  return kOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  ConfigFlags cfg;
  std::string checkpoint, report;
  std::vector<std::size_t> ns{1, 2, 5};
};

int cmd_eval(const EvalArgs& a) {
  const RunConfig rc = checkpoint_run_config(a.checkpoint, a.cfg);
  const Model model(rc.model, load_checkpoint(a.checkpoint));
  const LabeledDataset test = rc.data.load(Split::test);
  const EvalMetrics m = evaluate(model, test, rc.train.augment, a.ns);

  nlohmann::json j;
  j["checkpoint"] = a.checkpoint;
  j["mode"] = to_string(rc.model.mode);
  j["count"] = m.count;
  j["mean_loss"] = m.mean_loss;
  for (std::size_t i = 0; i < m.ns.size(); ++i) {
    char v[32];
    std::snprintf(v, sizeof v, "%.4f", m.top_n[i]);
    std::cout << "top" << m.ns[i] << " " << v << '\n';
    j["topN"][std::to_string(m.ns[i])] = m.top_n[i];
  }
  j["per_class"] = nlohmann::json::array();
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    j["per_class"].push_back({{"class", test.class_names[c]}, {"top1", m.per_class[c]}});
    std::cout << "class " << test.class_names[c] << " " << m.per_class[c] << '\n';
  }
  j["confusion"] = m.confusion;

  const fs::path report = a.report.empty() ? fs::path(a.checkpoint) / "eval.json" : fs::path(a.report);
  write_json(report, j);
  std::cout << "report: " << report.string() << '\n';
  return kOk;
}

// ---- verify --------------------------------------------------------------

struct VerifyArgs {
  std::string suite = "all";
  verify::SuiteOptions opt;
};

int cmd_verify(const VerifyArgs& a) {
  std::vector<verify::SuiteReport> reports;
  if (a.suite == "gradcheck" || a.suite == "all") reports.push_back(verify::gradcheck_suite(a.opt));
  if (a.suite == "oracles" || a.suite == "all") reports.push_back(verify::oracle_suite(a.opt));
  if (a.suite == "invariants" || a.suite == "all") reports.push_back(verify::invariant_suite(a.opt));
  bool ok = true;
  for (const auto& r : reports) {
    verify::print_report(std::cout, r);
    ok = ok && r.passed();
  }
  std::cout << (ok ? "ALL PASS" : "FAILURES") << '\n';
  return ok ? kOk : kCheckFailed;
}

// ---- dump ----------------------------------------------------------------

struct DumpArgs {
  ConfigFlags cfg;
  std::string what, checkpoint, out;
  std::vector<std::string> inputs;
  std::size_t count = 4;
};

bool has_cap(Mode m) { return m == Mode::base_cap || m == Mode::full; }
bool has_encoding(Mode m) { return m == Mode::base_encoding || m == Mode::full; }

int cmd_dump(const DumpArgs& a) {
  const RunConfig rc = a.checkpoint.empty() ? build_run_config(a.cfg.resolve()) : checkpoint_run_config(a.checkpoint, a.cfg);
  const fs::path out = default_out(a.out, rc.out_dir) / "dump";
  fs::create_directories(out);

  if (a.what == "regions") {
    const RegionSet regions = enumerate_regions(rc.model.backbone.upsample_w, rc.model.backbone.upsample_h,
                                                rc.model.regions);
    std::ofstream csv(out / "regions.csv");
    write_regions_csv(csv, regions);
    std::cout << regions.size() << " regions -> " << (out / "regions.csv").string() << '\n';
    return kOk;
  }
  if (a.what == "attn" && !has_cap(rc.model.mode))
    throw ConfigError("mode " + to_string(rc.model.mode) + " has no context attention to dump");

  const Model model = a.checkpoint.empty() ? Model(rc.model, model_seed(rc))
                                           : Model(rc.model, load_checkpoint(a.checkpoint));
  // Inputs: the given PNGs, otherwise the first test images of the configured dataset.
  std::vector<std::pair<std::string, Tensor>> images;
  if (!a.inputs.empty()) {
    for (const auto& p : a.inputs) images.emplace_back(fs::path(p).stem().string(), read_png(p));
  } else {
    const LabeledDataset test = rc.data.load(Split::test);
    for (std::size_t i = 0; i < std::min(a.count, test.items.size()); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "test_%04zu", i);
      images.emplace_back(name, test.items[i].image);
    }
  }

  for (const auto& [name, raw] : images) {
    if (raw.shape().size() != 3 || raw.shape()[0] != rc.train.augment.crop_from || raw.shape()[1] != rc.train.augment.crop_from)
      throw ConfigError(name + ": expected a " + std::to_string(rc.train.augment.crop_from) + "x" +
                        std::to_string(rc.train.augment.crop_from) + " image");
    Tape tape;
    const Bindings b(tape, model.params());
    const ForwardTrace t = model.forward(b, tape.constant(center_crop(raw, rc.train.augment)));
    if (a.what == "attn") {
      ctf::save(out / (name + "_alpha.ctf"), t.region_alpha.value());
      ctf::save(out / (name + "_contexts.ctf"), stack(t.contexts).value());
    } else {
      // N_v for the encoding modes, the pooled vector otherwise.
      ctf::save(out / (name + "_features.ctf"), has_encoding(rc.model.mode) ? t.encoding.value() : t.features.value());
    }
  }
  std::cout << images.size() << " image(s) -> " << out.string() << '\n';
  return kOk;
}

// ---- make-dataset --------------------------------------------------------

struct MakeDatasetArgs {
  ConfigFlags cfg;
  std::string out;
};

int cmd_make_dataset(const MakeDatasetArgs& a) {
  RunConfig rc = build_run_config(a.cfg.resolve());
  if (!rc.data.is_synthetic()) throw ConfigError("make-dataset needs data.root = synthetic");
  const fs::path out = default_out(a.out, rc.out_dir) / "dataset";
  for (Split s : {Split::train, Split::test}) write_image_folder(out, rc.data.load(s));
  std::cout << "dataset -> " << out.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CAP fine-grained classifier: training, evaluation and verification"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model, writing metrics.csv and checkpoints");
  train.cfg.attach(t);
  t->add_option("--out", train.out, "Output directory (default: run.out_dir, then $CAP_OUT, then ./cap_out)");
  t->add_flag("--quiet", train.quiet, "No per-epoch progress lines");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  eval.cfg.attach(e);
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--report", eval.report, "JSON report path (default: <checkpoint>/eval.json)");
  e->add_option("--top", eval.ns, "Top-N values to report")->delimiter(',')->capture_default_str();

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "Run the numerical verification suites");
  v->add_option("suite", ver.suite, "gradcheck, oracles, invariants or all")
      ->check(CLI::IsMember({"gradcheck", "oracles", "invariants", "all"}))
      ->capture_default_str();
  v->add_option("--instances", ver.opt.instances, "Random instances per check")->capture_default_str();
  v->add_option("--seed", ver.opt.seed, "Suite seed")->capture_default_str();

  DumpArgs dump;
  auto* d = app.add_subcommand("dump", "Export regions (CSV), attention or features (CTF)");
  dump.cfg.attach(d);
  d->add_option("what", dump.what, "regions, attn or features")
      ->required()
      ->check(CLI::IsMember({"regions", "attn", "features"}));
  d->add_option("--checkpoint", dump.checkpoint, "Checkpoint directory (default: freshly initialised model)")
      ->check(CLI::ExistingDirectory);
  d->add_option("--input", dump.inputs, "PNG image(s); default: the first --count test images")
      ->check(CLI::ExistingFile);
  d->add_option("--count", dump.count, "Test images to dump when no --input is given")->capture_default_str();
  d->add_option("--out", dump.out, "Output root; files go to <out>/dump");

  MakeDatasetArgs mk;
  auto* m = app.add_subcommand("make-dataset", "Write the synthetic dataset as PNG folders");
  mk.cfg.attach(m);
  m->add_option("--out", mk.out, "Output root; images go to <out>/dataset/<split>/<class>/");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(eval);
    if (*v) return cmd_verify(ver);
    if (*d) return cmd_dump(dump);
    if (*m) return cmd_make_dataset(mk);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kUsage;
  } catch (const FormatError& err) {
    std::cerr << "format error: " << err.what() << '\n';
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kCheckFailed;
  }
  return kUsage;
}
