#include "crowdgraph/run_config.hpp"

#include <fstream>
#include <stdexcept>

namespace crowdgraph {

namespace {

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                    const char* section) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) {
      throw std::invalid_argument(std::string("unknown ") + section + " config key '" + key + "'");
    }
  }
}

}  // namespace

RunConfig& RunConfig::finalize() {
  model.t_obs = data.t_obs;
  model.t_pred = data.t_pred;
  train.seed = seed;
  if (data.t_obs < 2 || data.t_pred < 1 || data.stride < 1) {
    throw std::invalid_argument("need t_obs >= 2, t_pred >= 1, stride >= 1");
  }
  if (!(data.val_fraction >= 0.0 && data.val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must lie in [0, 1)");
  }
  if (!(data.subsample > 0.0 && data.subsample <= 1.0)) {
    throw std::invalid_argument("subsample must lie in (0, 1]");
  }
  if (eval.samples < 1) throw std::invalid_argument("samples must be >= 1");
  graph.validate();
  model.validate();
  train.validate();
  return *this;
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json model = cfg.model;
  model.erase("t_obs");
  model.erase("t_pred");
  nlohmann::json train = cfg.train;
  train.erase("seed");
  return nlohmann::json{
      {"data",
       {{"scene_dir", cfg.data.scene_dir},
        {"held_out", cfg.data.held_out},
        {"t_obs", cfg.data.t_obs},
        {"t_pred", cfg.data.t_pred},
        {"stride", cfg.data.stride},
        {"val_fraction", cfg.data.val_fraction},
        {"subsample", cfg.data.subsample}}},
      {"graph", cfg.graph},
      {"model", std::move(model)},
      {"train", std::move(train)},
      {"eval", {{"samples", cfg.eval.samples}, {"independent_min", cfg.eval.independent_min}}},
      {"seed", cfg.seed}};
}

RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig cfg) {
  if (!doc.is_object()) throw std::invalid_argument("run config must be a JSON object");
  reject_unknown(doc, {"data", "graph", "model", "train", "eval", "seed"}, "run");
  if (doc.contains("data")) {
    const auto& d = doc.at("data");
    reject_unknown(d, {"scene_dir", "held_out", "t_obs", "t_pred", "stride", "val_fraction", "subsample"},
                   "data");
    cfg.data.scene_dir = d.value("scene_dir", cfg.data.scene_dir);
    cfg.data.held_out = d.value("held_out", cfg.data.held_out);
    cfg.data.t_obs = d.value("t_obs", cfg.data.t_obs);
    cfg.data.t_pred = d.value("t_pred", cfg.data.t_pred);
    cfg.data.stride = d.value("stride", cfg.data.stride);
    cfg.data.val_fraction = d.value("val_fraction", cfg.data.val_fraction);
    cfg.data.subsample = d.value("subsample", cfg.data.subsample);
  }
  if (doc.contains("graph")) {
    GraphConfig g = cfg.graph;
    from_json(doc.at("graph"), g);
    cfg.graph = g;
  }
  if (doc.contains("model")) {
    const auto& m = doc.at("model");
    if (m.contains("t_obs") || m.contains("t_pred")) {
      throw std::invalid_argument("frame counts belong in the data section");
    }
    ModelConfig model = cfg.model;
    from_json(m, model);
    cfg.model = model;
  }
  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    if (t.contains("seed")) throw std::invalid_argument("the seed belongs at the top level");
    TrainConfig train = cfg.train;
    from_json(t, train);
    cfg.train = train;
  }
  if (doc.contains("eval")) {
    const auto& e = doc.at("eval");
    reject_unknown(e, {"samples", "independent_min"}, "eval");
    cfg.eval.samples = e.value("samples", cfg.eval.samples);
    cfg.eval.independent_min = e.value("independent_min", cfg.eval.independent_min);
  }
  cfg.seed = doc.value("seed", cfg.seed);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("config file " + path.string() + ": " + e.what());
  }
  return run_config_from_json(doc);
}

SceneWindows load_scenes(const RunConfig& cfg) {
  if (cfg.data.scene_dir.empty()) {
    throw DataError(std::string("no scene directory given (use --scene-dir or ") + kDataDirEnv + ")");
  }
  SceneWindows scenes =
      load_scene_directory(cfg.data.scene_dir, cfg.data.t_obs, cfg.data.t_pred, cfg.data.stride);
  if (scenes.empty()) throw DataError("no scene files in " + cfg.data.scene_dir);
  if (cfg.data.subsample < 1.0) {
    for (auto& [name, windows] : scenes) {
      windows = subsample_windows(windows, cfg.data.subsample,
                                  derive_seed(cfg.seed, "subsample:" + name, 0));
    }
  }
  return scenes;
}

DatasetSplit load_split(const RunConfig& cfg) {
  return leave_one_out_split(load_scenes(cfg), cfg.data.held_out, cfg.data.val_fraction, cfg.seed);
}

}  // namespace crowdgraph
