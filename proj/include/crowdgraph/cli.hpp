#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdgraph/evaluator.hpp"
#include "crowdgraph/model.hpp"
#include "crowdgraph/run_config.hpp"
#include "crowdgraph/trajectory_data.hpp"

namespace crowdgraph {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kManifestVersion = 1;

// Entry point for the `crowdgraph` executable.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Writes train/val/test window archives and manifest.json into out_dir and
// returns the manifest.
nlohmann::json cmd_prep(const RunConfig& cfg, const std::filesystem::path& out_dir);

// Rows (ped_id, frame, kind, sample_idx, x, y); frame counts from the window start.
void cmd_export_plot(const Checkpoint& ckpt, const TrajectoryWindow& window, std::size_t samples,
                     std::uint64_t seed, std::ostream& csv);

struct SweepEntry {
  std::string method;
  GraphConfig graph;
};
// The complete-graph baseline followed by the 4 neighborhoods x 2 kernels grid.
std::vector<SweepEntry> sweep_grid(const GraphConfig& base);

struct SweepCell {
  double ade = 0.0;
  double fde = 0.0;
};
struct SweepRow {
  std::string method;
  GraphConfig graph;
  std::vector<SweepCell> cells;  // one per held-out scene
};
struct SweepResult {
  std::vector<std::string> scenes;
  std::vector<SweepRow> rows;
};

// Leave-one-out training and best-of-k evaluation for every grid entry and every
// held-out scene. Checkpoints go to work_dir when it is non-empty.
SweepResult run_sweep(const RunConfig& cfg, const std::vector<std::string>& held_out,
                      const std::filesystem::path& work_dir, std::size_t jobs);
void write_sweep_csv(std::ostream& out, const SweepResult& result);

}  // namespace crowdgraph
