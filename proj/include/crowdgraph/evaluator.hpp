#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdgraph/gaussian_head.hpp"
#include "crowdgraph/model.hpp"
#include "crowdgraph/tensor.hpp"
#include "crowdgraph/trajectory_data.hpp"

namespace crowdgraph {

inline constexpr int kReportVersion = 1;
inline constexpr std::size_t kDefaultSamples = 20;

// Mean Euclidean error over every pedestrian and predicted frame. Both [N, T_pred, 2].
double ade(const Tensor& pred, const Tensor& truth);
// Mean Euclidean error over pedestrians at the final predicted frame.
double fde(const Tensor& pred, const Tensor& truth);

// Ground-truth future positions [N, T_pred, 2].
Tensor future_positions(const TrajectoryWindow& window);

// One trajectory sample [N, T_pred, 2]: displacements drawn per pedestrian and
// frame, accumulated from the last observed position.
Tensor sample_trajectory(const GaussianFieldSequence& field, const TrajectoryWindow& window,
                         RngStream& rng);
// Trajectory that follows the Gaussian means.
Tensor mean_trajectory(const GaussianFieldSequence& field, const TrajectoryWindow& window);

struct BestOfK {
  double ade = 0.0;
  double fde = 0.0;
  std::size_t best_sample = 0;  // ADE-minimizing sample
};

// Sample s uses derive_seed(seed, window.id(), s). By default the reported
// FDE belongs to the ADE-best sample; independent_min minimizes each separately.
BestOfK best_of_k(const GaussianFieldSequence& field, const TrajectoryWindow& window,
                  std::size_t k, std::uint64_t seed, bool independent_min = false);

BestOfK best_of_k(const TrajectoryWindow& window, const Checkpoint& ckpt, std::size_t k,
                  std::uint64_t seed, bool independent_min = false);

GaussianFieldSequence predict_field(const TrajectoryWindow& window, const Checkpoint& ckpt);

struct WindowMetrics {
  std::string window_id;
  double ade = 0.0;
  double fde = 0.0;
};

struct MetricsReport {
  std::vector<WindowMetrics> per_window;
  double ade_mean = 0.0;
  double fde_mean = 0.0;
  std::size_t n_samples = kDefaultSamples;
  std::uint64_t seed = 0;
  bool independent_min = false;
  nlohmann::json config_echo = nlohmann::json::object();
};

// Window-level means of best-of-k metrics.
MetricsReport evaluate(const std::vector<TrajectoryWindow>& windows, const Checkpoint& ckpt,
                       std::size_t k, std::uint64_t seed, bool independent_min = false);

nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& doc);

}  // namespace crowdgraph
