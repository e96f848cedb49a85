#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "crowdgraph/geometry.hpp"
#include "crowdgraph/tensor.hpp"
#include "crowdgraph/trajectory_data.hpp"

namespace crowdgraph {

// Which pedestrian pairs may interact at a frame.
enum class Neighborhood {
  View,          // walking directions within 90 degrees of each other
  ViewThresh,    // View, and closer than epsilon
  Approach,      // pair distance shrinking (see ApproachSense)
  ViewApproach,  // View and Approach
  Complete,      // every pair
  Bearing,       // experimental, directed: j lies in the half-plane ahead of i
};

enum class Kernel { InverseNorm, ExpDecay };

// AsProse connects pairs whose distance decreases; AsPrinted connects pairs
// whose distance increases (d_{t+1} > d_t).
enum class ApproachSense { AsProse, AsPrinted };

enum class Normalization {
  NormalizedLaplacian,  // D^-1/2 (D - A) D^-1/2
  SymmetricAdjacency,  // D^-1/2 A D^-1/2
};

// Walking-direction estimate used by the view gates.
//  Backward: p_t - p_{t-1}; at the first frame p_1 - p_0.
//  Forward:  p_{t+1} - p_t while t+1 is observed; backward at the last observed frame.
enum class HeadingMode { Backward, Forward };

struct GraphConfig {
  Neighborhood neighborhood = Neighborhood::View;
  Kernel kernel = Kernel::InverseNorm;
  double epsilon = 5.0;
  ApproachSense approach_sense = ApproachSense::AsProse;
  bool self_loops = false;
  Normalization normalization = Normalization::NormalizedLaplacian;
  HeadingMode heading = HeadingMode::Backward;

  void validate() const;
  friend bool operator==(const GraphConfig&, const GraphConfig&) = default;
};

// Configuration of the graph used by the kernel-weighted complete-graph baseline.
GraphConfig baseline_graph_config();

std::string_view to_string(Neighborhood n);
std::string_view to_string(Kernel k);
std::string_view to_string(ApproachSense s);
std::string_view to_string(Normalization n);
std::string_view to_string(HeadingMode h);
Neighborhood parse_neighborhood(std::string_view name);
Kernel parse_kernel(std::string_view name);
ApproachSense parse_approach_sense(std::string_view name);
Normalization parse_normalization(std::string_view name);
HeadingMode parse_heading(std::string_view name);

void to_json(nlohmann::json& j, const GraphConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, GraphConfig& cfg);

struct GraphSequence {
  Tensor adjacency;   // [T_obs, N, N], includes self-loops when enabled
  Tensor degree;      // [T_obs, N], row sums of adjacency
  Tensor normalized;  // [T_obs, N, N]

  std::size_t frames() const { return adjacency.dim(0); }
  std::size_t nodes() const { return adjacency.dim(1); }
};

// 1 / |p_i - p_j|, or 0 for coincident points.
double kernel_inverse_norm(Point p_i, Point p_j);
// exp(-|p_i - p_j|), or 0 for coincident points.
double kernel_exp_decay(Point p_i, Point p_j);
double kernel_weight(Kernel kernel, Point p_i, Point p_j);

Point heading(const TrajectoryWindow& window, std::size_t ped, std::size_t t, HeadingMode mode);

// Edge weight a_t^{ij} over the observed frames of `window`. Requires i != j
// and t < window.t_obs.
double neighborhood_weight(std::size_t i, std::size_t j, std::size_t t,
                           const TrajectoryWindow& window, const GraphConfig& cfg);

// Degree-0 nodes use 1 in the normalizer, leaving their rows at zero (or the
// self-loop entry).
GraphSequence build_graph_sequence(const TrajectoryWindow& window, const GraphConfig& cfg);

// Config echo plus per-frame matrices, for offline inspection.
nlohmann::json graph_sequence_to_json(const TrajectoryWindow& window, const GraphConfig& cfg,
                                      const GraphSequence& graphs);

}  // namespace crowdgraph
