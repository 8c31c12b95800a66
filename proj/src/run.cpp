#include "cap/run.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "cap/checkpoint.hpp"

namespace cap {

namespace fs = std::filesystem;

std::uint64_t model_seed(const RunConfig& rc) { return mix_seed(rc.train.seed, 0x1417); }

RunResult run_training(const RunConfig& rc, const fs::path& out_dir, std::ostream* log) {
  fs::create_directories(out_dir);
  const std::string resolved = rc.source.render();
  std::ofstream(out_dir / "config.resolved") << resolved;

  const LabeledDataset train = rc.data.load(Split::train);
  const LabeledDataset test = rc.data.load(Split::test);
  Model model(rc.model, model_seed(rc));
  Trainer trainer(model, rc.train);

  std::ofstream csv(out_dir / "metrics.csv");
  csv << metrics_csv_header() << '\n';
  RunResult result;
  for (std::size_t epoch = 0; epoch < rc.train.epochs; ++epoch) {
    const EpochRecord rec = trainer.run_epoch(epoch, train, test);
    result.history.push_back(rec);
    csv << metrics_csv_row(rec) << '\n' << std::flush;
    if (log) *log << to_string(rc.model.mode) << " epoch " << epoch << ": " << metrics_csv_row(rec) << std::endl;
    if (rc.checkpoint_every != 0 && (epoch + 1) % rc.checkpoint_every == 0 && epoch + 1 < rc.train.epochs) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%03zu", epoch + 1);
      save_checkpoint(out_dir / "checkpoints" / name, model.params(), resolved);
    }
  }
  result.final_checkpoint = out_dir / "checkpoints" / "final";
  save_checkpoint(result.final_checkpoint, model.params(), resolved);
  return result;
}

}  // namespace cap
