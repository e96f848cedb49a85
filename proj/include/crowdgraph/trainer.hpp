#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdgraph/interaction_graph.hpp"
#include "crowdgraph/model.hpp"
#include "crowdgraph/trajectory_data.hpp"

namespace crowdgraph {

struct TrainConfig {
  std::size_t epochs = 250;
  std::size_t batch_size = 128;  // windows per update, realized by gradient accumulation
  double lr_initial = 0.01;
  double lr_after = 0.002;
  std::size_t lr_switch_epoch = 150;  // last epoch (1-based) at lr_initial
  std::uint64_t seed = 0;
  std::optional<double> clip_norm;
  double momentum = 0.0;
  double weight_decay = 0.0;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

// Learning rate in effect during `epoch` (1-based).
double learning_rate(const TrainConfig& cfg, std::size_t epoch);

// p <- p - lr * g, after rescaling g to global norm clip_norm if it is larger.
void sgd_step(ModelParameters& params, const ModelParameters& grads, double lr,
              std::optional<double> clip_norm = std::nullopt);

double global_norm(const ModelParameters& grads);

// SGD with optional momentum and L2 weight decay; reduces to sgd_step when both are 0.
class SgdOptimizer {
 public:
  SgdOptimizer(double momentum, double weight_decay)
      : momentum_(momentum), weight_decay_(weight_decay) {}
  void step(ModelParameters& params, const ModelParameters& grads, double lr,
            std::optional<double> clip_norm);

 private:
  double momentum_;
  double weight_decay_;
  std::optional<ModelParameters> velocity_;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_nll = 0.0;  // mean over windows of the per-window loss, before each update
  double val_nll = 0.0;    // after the epoch; NaN when there is no validation data
  double lr = 0.0;
};

struct TrainResult {
  ModelParameters best;   // lowest validation NLL (training NLL without validation data)
  ModelParameters final;
  std::size_t best_epoch = 0;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Visits every training window once per epoch in an order shuffled by
// (seed, epoch). Throws TrainingError on a non-finite loss or gradient.
TrainResult train(const DatasetSplit& split, const GraphConfig& graph_cfg,
                  const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const EpochCallback& on_epoch = {});

// Same, starting from given parameters with pre-built windows.
TrainResult train_prepared(const std::vector<PreparedWindow>& train_windows,
                           const std::vector<PreparedWindow>& val_windows, const TrainConfig& cfg,
                           const ModelConfig& model_cfg, ModelParameters initial,
                           const EpochCallback& on_epoch = {});

// Mean per-window NLL, no sampling.
double mean_nll(const std::vector<PreparedWindow>& windows, const ModelParameters& params,
                const ModelConfig& cfg);

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace crowdgraph
