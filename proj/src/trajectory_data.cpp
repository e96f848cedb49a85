#include "crowdgraph/trajectory_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <system_error>
#include <unordered_map>

namespace crowdgraph {

namespace {

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

bool parse_integral(std::string_view token, std::int64_t& out) {
  double value = 0.0;
  if (!parse_double(token, value)) return false;
  if (value != std::floor(value) || std::fabs(value) > 9.0e15) return false;
  out = static_cast<std::int64_t>(value);
  return true;
}

void append_double(std::string& out, double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, ptr);
}

}  // namespace

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& reason)
    : DataError(source + ":" + std::to_string(line) + ": " + reason), line_(line) {}

std::string TrajectoryWindow::id() const { return scene_id + "/" + std::to_string(start_frame); }

TrajectoryWindow make_window(std::string scene_id, std::int64_t start_frame,
                             std::vector<std::int64_t> ped_ids, std::size_t t_obs,
                             std::size_t t_pred, Tensor positions) {
  const std::size_t n = ped_ids.size();
  const std::size_t total = t_obs + t_pred;
  positions.expect_shape({n, total, 2}, "make_window positions");
  TrajectoryWindow w;
  w.scene_id = std::move(scene_id);
  w.start_frame = start_frame;
  w.ped_ids = std::move(ped_ids);
  w.t_obs = t_obs;
  w.t_pred = t_pred;
  w.displacements = Tensor({n, total, 2});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 1; t < total; ++t) {
      w.displacements.at(i, t, 0) = positions.at(i, t, 0) - positions.at(i, t - 1, 0);
      w.displacements.at(i, t, 1) = positions.at(i, t, 1) - positions.at(i, t - 1, 1);
    }
  }
  w.positions = std::move(positions);
  return w;
}

std::vector<RawTrack> parse_trajectory_text(const std::string& text, const std::string& source) {
  std::vector<RawTrack> tracks;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(tok);
    if (tokens.empty()) continue;
    if (tokens.size() != 4) {
      throw ParseError(source, line_no,
                       "expected 4 fields, found " + std::to_string(tokens.size()));
    }
    RawTrack r;
    if (!parse_integral(tokens[0], r.frame_id)) {
      throw ParseError(source, line_no, "frame id '" + tokens[0] + "' is not an integer");
    }
    if (!parse_integral(tokens[1], r.ped_id)) {
      throw ParseError(source, line_no, "pedestrian id '" + tokens[1] + "' is not an integer");
    }
    if (!parse_double(tokens[2], r.x) || !parse_double(tokens[3], r.y)) {
      throw ParseError(source, line_no, "coordinates are not finite numbers");
    }
    tracks.push_back(r);
  }
  std::sort(tracks.begin(), tracks.end(), [](const RawTrack& a, const RawTrack& b) {
    return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.ped_id < b.ped_id;
  });
  for (std::size_t k = 1; k < tracks.size(); ++k) {
    if (tracks[k].frame_id == tracks[k - 1].frame_id && tracks[k].ped_id == tracks[k - 1].ped_id) {
      throw DuplicateRecordError(source + ": duplicate record for frame " +
                                 std::to_string(tracks[k].frame_id) + ", pedestrian " +
                                 std::to_string(tracks[k].ped_id));
    }
  }
  return tracks;
}

std::vector<RawTrack> parse_trajectory_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trajectory file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trajectory_text(buf.str(), path.string());
}

std::string format_trajectory_text(const std::vector<RawTrack>& tracks) {
  std::string out;
  out.reserve(tracks.size() * 32);
  for (const auto& r : tracks) {
    out += std::to_string(r.frame_id);
    out += '\t';
    out += std::to_string(r.ped_id);
    out += '\t';
    append_double(out, r.x);
    out += '\t';
    append_double(out, r.y);
    out += '\n';
  }
  return out;
}

void write_trajectory_file(const std::filesystem::path& path, const std::vector<RawTrack>& tracks) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trajectory file " + path.string());
  out << format_trajectory_text(tracks);
}

std::vector<RawTrack> window_to_tracks(const TrajectoryWindow& window, std::int64_t frame_step) {
  std::vector<RawTrack> tracks;
  for (std::size_t t = 0; t < window.total_frames(); ++t) {
    for (std::size_t i = 0; i < window.num_peds(); ++i) {
      tracks.push_back({window.start_frame + static_cast<std::int64_t>(t) * frame_step,
                        window.ped_ids[i], window.positions.at(i, t, 0),
                        window.positions.at(i, t, 1)});
    }
  }
  return tracks;
}

std::vector<TrajectoryWindow> make_windows(const std::vector<RawTrack>& tracks,
                                           const std::string& scene_id, std::size_t t_obs,
                                           std::size_t t_pred, std::size_t stride) {
  if (t_obs < 2 || t_pred < 1 || stride < 1) {
    throw std::invalid_argument("make_windows: require t_obs >= 2, t_pred >= 1, stride >= 1");
  }
  std::vector<std::int64_t> frames;
  for (const auto& r : tracks) frames.push_back(r.frame_id);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  std::unordered_map<std::int64_t, std::size_t> frame_index;
  for (std::size_t k = 0; k < frames.size(); ++k) frame_index[frames[k]] = k;

  // Per frame index: ped_id -> position.
  std::vector<std::map<std::int64_t, Point>> by_frame(frames.size());
  for (const auto& r : tracks) by_frame[frame_index[r.frame_id]][r.ped_id] = {r.x, r.y};

  const std::size_t total = t_obs + t_pred;
  std::vector<TrajectoryWindow> windows;
  if (frames.size() < total) return windows;
  for (std::size_t start = 0; start + total <= frames.size(); start += stride) {
    std::vector<std::int64_t> peds;
    for (const auto& [ped, _] : by_frame[start]) {
      bool present = true;
      for (std::size_t t = 1; t < total && present; ++t) {
        present = by_frame[start + t].contains(ped);
      }
      if (present) peds.push_back(ped);
    }
    if (peds.size() < 2) continue;
    Tensor positions({peds.size(), total, 2});
    for (std::size_t i = 0; i < peds.size(); ++i) {
      for (std::size_t t = 0; t < total; ++t) {
        const Point p = by_frame[start + t].at(peds[i]);
        positions.at(i, t, 0) = p.x;
        positions.at(i, t, 1) = p.y;
      }
    }
    windows.push_back(
        make_window(scene_id, frames[start], std::move(peds), t_obs, t_pred, std::move(positions)));
  }
  return windows;
}

DatasetSplit leave_one_out_split(const SceneWindows& scenes, const std::string& held_out,
                                 double val_fraction, std::uint64_t seed) {
  if (!scenes.contains(held_out)) throw DataError("unknown scene '" + held_out + "'");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("val_fraction must lie in [0, 1)");
  }
  DatasetSplit split;
  split.held_out_scene = held_out;
  split.test = scenes.at(held_out);
  std::vector<TrajectoryWindow> rest;
  for (const auto& [name, windows] : scenes) {
    if (name == held_out) continue;
    rest.insert(rest.end(), windows.begin(), windows.end());
  }
  std::mt19937_64 rng(seed);
  std::shuffle(rest.begin(), rest.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(rest.size())));
  split.val.assign(std::make_move_iterator(rest.begin()),
                   std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_val)));
  split.train.assign(std::make_move_iterator(rest.begin() + static_cast<std::ptrdiff_t>(n_val)),
                     std::make_move_iterator(rest.end()));
  return split;
}

std::vector<TrajectoryWindow> subsample_windows(const std::vector<TrajectoryWindow>& windows,
                                                double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("subsample fraction must lie in (0, 1]");
  }
  if (fraction == 1.0) return windows;
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(windows.size())));
  std::vector<std::size_t> order(windows.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  std::vector<TrajectoryWindow> out;
  out.reserve(keep);
  for (std::size_t k : order) out.push_back(windows[k]);
  return out;
}

SceneWindows load_scene_directory(const std::filesystem::path& dir, std::size_t t_obs,
                                  std::size_t t_pred, std::size_t stride) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("scene directory " + dir.string() + " does not exist");
  }
  std::set<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.insert(entry.path());
  }
  SceneWindows scenes;
  for (const auto& file : files) {
    const auto tracks = parse_trajectory_file(file);
    scenes[file.stem().string()] = make_windows(tracks, file.stem().string(), t_obs, t_pred, stride);
  }
  return scenes;
}

nlohmann::json window_archive_to_json(const std::vector<TrajectoryWindow>& windows,
                                      const std::string& split_name) {
  nlohmann::json doc;
  doc["format_version"] = kWindowArchiveVersion;
  doc["kind"] = "window-archive";
  doc["split"] = split_name;
  auto& arr = doc["windows"] = nlohmann::json::array();
  for (const auto& w : windows) {
    nlohmann::json jw;
    jw["id"] = w.id();
    jw["scene_id"] = w.scene_id;
    jw["start_frame"] = w.start_frame;
    jw["t_obs"] = w.t_obs;
    jw["t_pred"] = w.t_pred;
    jw["ped_ids"] = w.ped_ids;
    jw["positions"] = w.positions.values();
    arr.push_back(std::move(jw));
  }
  return doc;
}

std::vector<TrajectoryWindow> window_archive_from_json(const nlohmann::json& doc) {
  if (doc.value("kind", std::string()) != "window-archive") {
    throw DataError("not a window archive");
  }
  const int version = doc.at("format_version").get<int>();
  if (version != kWindowArchiveVersion) {
    throw DataError("unsupported window archive version " + std::to_string(version));
  }
  std::vector<TrajectoryWindow> out;
  for (const auto& jw : doc.at("windows")) {
    auto ped_ids = jw.at("ped_ids").get<std::vector<std::int64_t>>();
    const auto t_obs = jw.at("t_obs").get<std::size_t>();
    const auto t_pred = jw.at("t_pred").get<std::size_t>();
    Tensor positions({ped_ids.size(), t_obs + t_pred, 2},
                     jw.at("positions").get<std::vector<double>>());
    out.push_back(make_window(jw.at("scene_id").get<std::string>(),
                              jw.at("start_frame").get<std::int64_t>(), std::move(ped_ids), t_obs,
                              t_pred, std::move(positions)));
  }
  return out;
}

}  // namespace crowdgraph
