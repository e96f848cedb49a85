#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crowdgraph/trajectory_data.hpp"

namespace crowdgraph {

// Parameters of a simulated walkway. Pedestrians enter at a random edge and
// head for the opposite edge under a social-force model; a fraction stands
// still for their whole stay.
struct SceneSpec {
  std::string name;
  double width = 15.0;   // meters
  double height = 12.0;  // meters
  std::size_t frames = 1500;
  std::int64_t frame_step = 10;  // frame-id increment per recorded frame
  double frame_dt = 0.4;         // seconds per recorded frame
  double arrivals_per_frame = 0.3;
  double group_fraction = 0.3;    // arrivals that come as a side-by-side pair
  double standing_fraction = 0.05;
  double speed_mean = 1.3;  // m/s
  double speed_std = 0.2;
  double noise_std = 0.02;  // position measurement noise, meters
  std::uint64_t seed = 0;
};

std::vector<RawTrack> simulate_scene(const SceneSpec& spec);

// Five walkways with the names and rough densities of the ETH/UCY scenes.
std::vector<SceneSpec> default_scene_specs(std::uint64_t seed, std::size_t frames = 1500);

// Simulates each spec into `<dir>/<name>.txt`. Returns the written paths.
std::vector<std::filesystem::path> write_synthetic_scenes(const std::filesystem::path& dir,
                                                          const std::vector<SceneSpec>& specs);

}  // namespace crowdgraph
