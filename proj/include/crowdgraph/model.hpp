#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdgraph/autodiff.hpp"
#include "crowdgraph/interaction_graph.hpp"
#include "crowdgraph/tensor.hpp"
#include "crowdgraph/trajectory_data.hpp"

namespace crowdgraph {

// Shape hyperparameters of the network. Defaults are the reference widths.
struct ModelConfig {
  std::size_t t_obs = kDefaultObsFrames;
  std::size_t t_pred = kDefaultPredFrames;
  std::size_t input_channels = 2;
  std::size_t output_channels = 5;  // Gaussian channels
  std::size_t temporal_kernel = 3;  // ST-GCN kernel along frames
  std::size_t txp_layers = 5;
  std::size_t txp_kernel = 3;
  bool st_residual = true;   // 1x1 projection of the input added before the output PReLU
  bool txp_residual = true;  // identity skips on TXP layers 2..txp_layers
  bool bias = true;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
void from_json(const nlohmann::json& j, ModelConfig& cfg);

struct NamedTensor {
  std::string name;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Ordered set of named parameter tensors. Gradients use the same container.
class ModelParameters {
 public:
  ModelParameters() = default;
  explicit ModelParameters(std::vector<NamedTensor> tensors) : tensors_(std::move(tensors)) {}

  std::vector<NamedTensor>& tensors() { return tensors_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t scalar_count() const;
  bool all_finite() const;
  ModelParameters zeros_like() const;

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;

 private:
  std::vector<NamedTensor> tensors_;
};

// PReLU slopes start at 0.25; every weight and bias is uniform in
// +-1/sqrt(fan_in).
ModelParameters init_parameters(const ModelConfig& cfg, std::uint64_t seed);

struct ParameterSummaryRow {
  std::string name;
  Shape shape;
  std::size_t count = 0;
};
struct ParameterSummary {
  std::vector<ParameterSummaryRow> rows;
  std::size_t total = 0;
};
ParameterSummary summary(const ModelParameters& params);
std::string format_summary(const ParameterSummary& s);

// Parameters placed on a tape, index-aligned with ModelParameters::tensors().
struct BoundParameters {
  std::vector<std::string> names;
  std::vector<Var> vars;

  Var operator[](const std::string& name) const;
  // Gradients read back after Tape::backward.
  ModelParameters gradients(const Tape& tape) const;
};

// trainable=false records the parameters as constants (inference only).
BoundParameters bind(Tape& tape, const ModelParameters& params, bool trainable);

// v [T_obs, N, C_in], normalized [T_obs, N, N] -> [T_obs, N, C_out].
Var st_gcn_forward(Tape& tape, Var v, Var normalized, const BoundParameters& p,
                   const ModelConfig& cfg);
// h [T_obs, N, C_out] -> raw Gaussian outputs [T_pred, N, C_out].
Var txp_forward(Tape& tape, Var h, const BoundParameters& p, const ModelConfig& cfg);

Tensor st_gcn_forward(const Tensor& v, const Tensor& normalized, const ModelParameters& params,
                      const ModelConfig& cfg);
Tensor txp_forward(const Tensor& h, const ModelParameters& params, const ModelConfig& cfg);

// Network inputs and targets for one window.
struct PreparedWindow {
  std::string id;
  Tensor features;    // [T_obs, N, 2] observed displacements
  Tensor normalized;  // [T_obs, N, N]
  Tensor target;      // [T_pred, N, 2] future displacements
};
PreparedWindow prepare_window(const TrajectoryWindow& window, const GraphConfig& graph_cfg);

// Raw Gaussian outputs [T_pred, N, 5] for a prepared window.
Var model_forward(Tape& tape, const PreparedWindow& w, const BoundParameters& p,
                  const ModelConfig& cfg);
Tensor predict_raw(const PreparedWindow& w, const ModelParameters& params, const ModelConfig& cfg);

struct LossAndGradient {
  double loss = 0.0;  // mean NLL per (pedestrian, predicted frame)
  ModelParameters grads;
};
LossAndGradient window_loss_and_gradient(const PreparedWindow& w, const ModelParameters& params,
                                         const ModelConfig& cfg);
double window_loss(const PreparedWindow& w, const ModelParameters& params, const ModelConfig& cfg);

// Checkpoint container: a binary file with a JSON header (format version,
// configs, tensor table of name/shape/byte offset) followed by little-endian
// float64 payload.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  GraphConfig graph;
  ModelParameters params;
  nlohmann::json run_config = nlohmann::json::object();
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace crowdgraph
