#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crowdgraph/geometry.hpp"
#include "crowdgraph/tensor.hpp"

namespace crowdgraph {

inline constexpr std::size_t kDefaultObsFrames = 8;
inline constexpr std::size_t kDefaultPredFrames = 12;
inline constexpr int kWindowArchiveVersion = 1;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line; line() is 1-based.
class ParseError : public DataError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& reason);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class DuplicateRecordError : public DataError {
 public:
  using DataError::DataError;
};

struct RawTrack {
  std::int64_t frame_id = 0;
  std::int64_t ped_id = 0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const RawTrack&, const RawTrack&) = default;
};

// N pedestrians observed over t_obs + t_pred consecutive frames. Pedestrians
// are ordered by ped_id; every one is present at every frame.
struct TrajectoryWindow {
  std::string scene_id;
  std::int64_t start_frame = 0;
  std::vector<std::int64_t> ped_ids;
  std::size_t t_obs = kDefaultObsFrames;
  std::size_t t_pred = kDefaultPredFrames;
  Tensor positions;      // [N, T_total, 2], meters
  Tensor displacements;  // [N, T_total, 2], backward differences, first step zero

  std::size_t num_peds() const { return ped_ids.size(); }
  std::size_t total_frames() const { return t_obs + t_pred; }
  // "<scene>/<start_frame>", unique within a dataset.
  std::string id() const;

  Point position(std::size_t ped, std::size_t t) const {
    return {positions.at(ped, t, 0), positions.at(ped, t, 1)};
  }
  Point displacement(std::size_t ped, std::size_t t) const {
    return {displacements.at(ped, t, 0), displacements.at(ped, t, 1)};
  }
};

// Builds a window from absolute positions [N, T_total, 2], deriving displacements.
TrajectoryWindow make_window(std::string scene_id, std::int64_t start_frame,
                             std::vector<std::int64_t> ped_ids, std::size_t t_obs,
                             std::size_t t_pred, Tensor positions);

struct DatasetSplit {
  std::vector<TrajectoryWindow> train;
  std::vector<TrajectoryWindow> val;
  std::vector<TrajectoryWindow> test;
  std::string held_out_scene;
};

// Whitespace-separated `frame_id ped_id x y` records. Frame and pedestrian ids
// may be written as integral reals ("780.0"). Result is sorted by (frame, ped).
std::vector<RawTrack> parse_trajectory_text(const std::string& text,
                                            const std::string& source = "<memory>");
std::vector<RawTrack> parse_trajectory_file(const std::filesystem::path& path);

// Shortest round-trip formatting, so parse(format(tracks)) is bit-exact.
std::string format_trajectory_text(const std::vector<RawTrack>& tracks);
void write_trajectory_file(const std::filesystem::path& path, const std::vector<RawTrack>& tracks);

// Flattens a window's positions back into records (frames numbered from
// start_frame with the given frame step).
std::vector<RawTrack> window_to_tracks(const TrajectoryWindow& window, std::int64_t frame_step);

// Sliding windows over the sorted distinct frame ids. `stride` counts frames.
std::vector<TrajectoryWindow> make_windows(const std::vector<RawTrack>& tracks,
                                           const std::string& scene_id, std::size_t t_obs,
                                           std::size_t t_pred, std::size_t stride);

using SceneWindows = std::map<std::string, std::vector<TrajectoryWindow>>;

DatasetSplit leave_one_out_split(const SceneWindows& scenes, const std::string& held_out,
                                 double val_fraction, std::uint64_t seed);

// Keeps a deterministic random subset of ceil(fraction * n) windows, original order
// preserved. fraction in (0, 1].
std::vector<TrajectoryWindow> subsample_windows(const std::vector<TrajectoryWindow>& windows,
                                                double fraction, std::uint64_t seed);

// Reads every `*.txt` in `dir`; scene name is the file stem.
SceneWindows load_scene_directory(const std::filesystem::path& dir, std::size_t t_obs,
                                  std::size_t t_pred, std::size_t stride);

nlohmann::json window_archive_to_json(const std::vector<TrajectoryWindow>& windows,
                                      const std::string& split_name);
std::vector<TrajectoryWindow> window_archive_from_json(const nlohmann::json& doc);

}  // namespace crowdgraph
