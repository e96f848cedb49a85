#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "crowdgraph/evaluator.hpp"
#include "crowdgraph/interaction_graph.hpp"
#include "crowdgraph/model.hpp"
#include "crowdgraph/trainer.hpp"
#include "crowdgraph/trajectory_data.hpp"

namespace crowdgraph {

// Environment variable consulted when no scene directory is given.
inline constexpr const char* kDataDirEnv = "CROWDGRAPH_DATA_DIR";

struct DataConfig {
  std::string scene_dir;
  std::string held_out = "eth";
  std::size_t t_obs = kDefaultObsFrames;
  std::size_t t_pred = kDefaultPredFrames;
  std::size_t stride = 1;
  double val_fraction = 0.1;
  double subsample = 1.0;  // fraction of each scene's windows kept
};

struct EvalConfig {
  std::size_t samples = kDefaultSamples;
  bool independent_min = false;
};

// Everything a run depends on. Serialized as one JSON document; every field
// has a default and unknown keys are rejected.
struct RunConfig {
  DataConfig data;
  GraphConfig graph;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  std::uint64_t seed = 0;

  // Copies the shared fields (frame counts, seed) into the nested configs and validates.
  RunConfig& finalize();
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
// Overlays `doc` onto `base`.
RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Scene windows honoring stride and subsample; throws DataError("no scene files ...")
// for a directory without trajectory files.
SceneWindows load_scenes(const RunConfig& cfg);
DatasetSplit load_split(const RunConfig& cfg);

}  // namespace crowdgraph
