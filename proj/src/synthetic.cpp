#include "crowdgraph/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crowdgraph/geometry.hpp"

namespace crowdgraph {

namespace {

struct Walker {
  std::int64_t id = 0;
  Point pos;
  Point vel;
  Point goal;
  double speed = 0.0;
  bool standing = false;
  std::size_t leave_frame = 0;  // standing walkers only
};

constexpr std::size_t kSubsteps = 4;
constexpr double kRelaxation = 0.5;   // s
constexpr double kRepulsion = 2.0;    // m/s^2
constexpr double kRange = 0.4;        // m
constexpr double kBodyRadius = 0.3;   // m
constexpr double kMaxSpeedFactor = 1.3;

Point random_edge_point(int edge, const SceneSpec& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> along(0.1, 0.9);
  switch (edge) {
    case 0: return {0.0, along(rng) * s.height};
    case 1: return {s.width, along(rng) * s.height};
    case 2: return {along(rng) * s.width, 0.0};
    default: return {along(rng) * s.width, s.height};
  }
}

bool outside(Point p, const SceneSpec& s) {
  return p.x < -0.5 || p.y < -0.5 || p.x > s.width + 0.5 || p.y > s.height + 0.5;
}

}  // namespace

std::vector<RawTrack> simulate_scene(const SceneSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::poisson_distribution<int> arrivals(spec.arrivals_per_frame);
  std::normal_distribution<double> speed(spec.speed_mean, spec.speed_std);
  std::normal_distribution<double> noise(0.0, spec.noise_std);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Walkways are mostly traversed along their long axis.
  const double long_axis_bias = spec.width >= spec.height ? 0.75 : 0.25;

  std::vector<Walker> walkers;
  std::vector<RawTrack> tracks;
  std::int64_t next_id = 1;
  const double dt = spec.frame_dt / static_cast<double>(kSubsteps);

  for (std::size_t frame = 0; frame < spec.frames; ++frame) {
    const int count = arrivals(rng);
    for (int a = 0; a < count; ++a) {
      Walker w;
      w.id = next_id++;
      if (unit(rng) < spec.standing_fraction) {
        w.standing = true;
        w.pos = {unit(rng) * spec.width, unit(rng) * spec.height};
        w.goal = w.pos;
        w.leave_frame = frame + 30 + static_cast<std::size_t>(unit(rng) * 60.0);
        walkers.push_back(w);
        continue;
      }
      const int edge = unit(rng) < long_axis_bias ? static_cast<int>(unit(rng) * 2.0)
                                                  : 2 + static_cast<int>(unit(rng) * 2.0);
      w.pos = random_edge_point(edge, spec, rng);
      w.goal = random_edge_point(edge ^ 1, spec, rng);
      w.speed = std::clamp(speed(rng), 0.6, 2.0);
      const Point dir = w.goal - w.pos;
      const double len = std::sqrt(dot(dir, dir));
      w.vel = {dir.x / len * w.speed, dir.y / len * w.speed};
      walkers.push_back(w);
      if (unit(rng) < spec.group_fraction) {
        Walker mate = w;
        mate.id = next_id++;
        const Point side{-dir.y / len * 0.7, dir.x / len * 0.7};
        mate.pos = w.pos + side;
        mate.goal = w.goal + side;
        walkers.push_back(mate);
      }
    }

    for (std::size_t sub = 0; sub < kSubsteps; ++sub) {
      std::vector<Point> accel(walkers.size());
      for (std::size_t i = 0; i < walkers.size(); ++i) {
        Walker& w = walkers[i];
        if (w.standing) continue;
        const Point to_goal = w.goal - w.pos;
        const double dist = std::sqrt(dot(to_goal, to_goal));
        const Point desired = dist > 1e-9 ? Point{to_goal.x / dist * w.speed, to_goal.y / dist * w.speed}
                                          : Point{};
        accel[i] = {(desired.x - w.vel.x) / kRelaxation, (desired.y - w.vel.y) / kRelaxation};
        for (std::size_t j = 0; j < walkers.size(); ++j) {
          if (i == j) continue;
          const Point diff = w.pos - walkers[j].pos;
          const double d = std::sqrt(dot(diff, diff));
          if (d < 1e-9 || d > 4.0) continue;
          // Anisotropic: neighbors ahead push harder than neighbors behind.
          const double facing = -dot(diff, w.vel) / (d * std::max(w.speed, 1e-9));
          const double weight = 0.6 + 0.4 * std::clamp(facing, 0.0, 1.0);
          const double mag = kRepulsion * weight * std::exp((2.0 * kBodyRadius - d) / kRange);
          accel[i] = accel[i] + Point{diff.x / d * mag, diff.y / d * mag};
        }
      }
      for (std::size_t i = 0; i < walkers.size(); ++i) {
        Walker& w = walkers[i];
        if (w.standing) continue;
        w.vel = w.vel + Point{accel[i].x * dt, accel[i].y * dt};
        const double v = std::sqrt(dot(w.vel, w.vel));
        const double vmax = kMaxSpeedFactor * w.speed;
        if (v > vmax) w.vel = {w.vel.x / v * vmax, w.vel.y / v * vmax};
        w.pos = w.pos + Point{w.vel.x * dt, w.vel.y * dt};
      }
    }

    const auto frame_id = static_cast<std::int64_t>(frame) * spec.frame_step;
    for (const Walker& w : walkers) {
      tracks.push_back({frame_id, w.id, w.pos.x + noise(rng), w.pos.y + noise(rng)});
    }
    std::erase_if(walkers, [&](const Walker& w) {
      if (w.standing) return frame >= w.leave_frame;
      const Point to_goal = w.goal - w.pos;
      return dot(to_goal, to_goal) < 0.25 || outside(w.pos, spec);
    });
  }
  std::sort(tracks.begin(), tracks.end(), [](const RawTrack& a, const RawTrack& b) {
    return a.frame_id != b.frame_id ? a.frame_id < b.frame_id : a.ped_id < b.ped_id;
  });
  return tracks;
}

std::vector<SceneSpec> default_scene_specs(std::uint64_t seed, std::size_t frames) {
  auto make = [&](std::string name, double width, double height, double arrivals,
                  double groups, double speed_mean, std::uint64_t offset) {
    SceneSpec s;
    s.name = std::move(name);
    s.width = width;
    s.height = height;
    s.frames = frames;
    s.arrivals_per_frame = arrivals;
    s.group_fraction = groups;
    s.speed_mean = speed_mean;
    s.seed = seed * 1000003ULL + offset;
    return s;
  };
  return {
      make("eth", 16.0, 12.0, 0.12, 0.3, 1.4, 1),
      make("hotel", 8.0, 14.0, 0.15, 0.4, 1.1, 2),
      make("univ", 14.0, 12.0, 0.45, 0.35, 1.0, 3),
      make("zara1", 15.0, 10.0, 0.2, 0.4, 1.2, 4),
      make("zara2", 15.0, 10.0, 0.28, 0.4, 1.2, 5),
  };
}

std::vector<std::filesystem::path> write_synthetic_scenes(const std::filesystem::path& dir,
                                                          const std::vector<SceneSpec>& specs) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& spec : specs) {
    const auto path = dir / (spec.name + ".txt");
    write_trajectory_file(path, simulate_scene(spec));
    paths.push_back(path);
  }
  return paths;
}

}  // namespace crowdgraph
