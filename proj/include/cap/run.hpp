#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "cap/config.hpp"

namespace cap {

/// Seed used to initialise the model parameters of a run.
std::uint64_t model_seed(const RunConfig& rc);

struct RunResult {
  std::vector<EpochRecord> history;
  std::filesystem::path final_checkpoint;
};

/**
 * Full training run into `out_dir`:
 *   config.resolved              effective configuration
 *   metrics.csv                  one row per epoch
 *   checkpoints/epoch_NNN/       every rc.checkpoint_every epochs (0 disables)
 *   checkpoints/final/           after the last epoch
 * Progress lines go to `log` when given.
 */
RunResult run_training(const RunConfig& rc, const std::filesystem::path& out_dir,
                       std::ostream* log = nullptr);

}  // namespace cap
