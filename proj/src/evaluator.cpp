#include "crowdgraph/evaluator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crowdgraph {

namespace {

void check_pair(const Tensor& pred, const Tensor& truth, const char* what) {
  if (pred.shape() != truth.shape() || pred.rank() != 3 || pred.dim(2) != 2) {
    throw ShapeError(std::string(what) + ": prediction " + shape_to_string(pred.shape()) +
                     " and truth " + shape_to_string(truth.shape()) + " must both be [N, T, 2]");
  }
  if (pred.dim(0) == 0 || pred.dim(1) == 0) throw ShapeError(std::string(what) + ": empty input");
}

double point_error(const Tensor& pred, const Tensor& truth, std::size_t i, std::size_t t) {
  const double dx = pred.at(i, t, 0) - truth.at(i, t, 0);
  const double dy = pred.at(i, t, 1) - truth.at(i, t, 1);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

double ade(const Tensor& pred, const Tensor& truth) {
  check_pair(pred, truth, "ade");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.dim(0); ++i) {
    for (std::size_t t = 0; t < pred.dim(1); ++t) total += point_error(pred, truth, i, t);
  }
  return total / static_cast<double>(pred.dim(0) * pred.dim(1));
}

double fde(const Tensor& pred, const Tensor& truth) {
  check_pair(pred, truth, "fde");
  const std::size_t last = pred.dim(1) - 1;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.dim(0); ++i) total += point_error(pred, truth, i, last);
  return total / static_cast<double>(pred.dim(0));
}

Tensor future_positions(const TrajectoryWindow& window) {
  Tensor out({window.num_peds(), window.t_pred, 2});
  for (std::size_t i = 0; i < window.num_peds(); ++i) {
    for (std::size_t t = 0; t < window.t_pred; ++t) {
      out.at(i, t, 0) = window.positions.at(i, window.t_obs + t, 0);
      out.at(i, t, 1) = window.positions.at(i, window.t_obs + t, 1);
    }
  }
  return out;
}

namespace {

template <typename DrawFn>
Tensor integrate(const GaussianFieldSequence& field, const TrajectoryWindow& window, DrawFn draw) {
  if (field.num_peds() != window.num_peds() || field.t_pred() != window.t_pred) {
    throw ShapeError("gaussian field does not match window " + window.id());
  }
  Tensor out({window.num_peds(), window.t_pred, 2});
  // Frame-major so a sample consumes the stream in (frame, pedestrian) order.
  std::vector<Point> current(window.num_peds());
  for (std::size_t i = 0; i < window.num_peds(); ++i) {
    current[i] = window.position(i, window.t_obs - 1);
  }
  for (std::size_t t = 0; t < window.t_pred; ++t) {
    for (std::size_t i = 0; i < window.num_peds(); ++i) {
      current[i] = current[i] + draw(field.at(i, t));
      out.at(i, t, 0) = current[i].x;
      out.at(i, t, 1) = current[i].y;
    }
  }
  return out;
}

}  // namespace

Tensor sample_trajectory(const GaussianFieldSequence& field, const TrajectoryWindow& window,
                         RngStream& rng) {
  return integrate(field, window, [&](const GaussianParams& g) { return sample(g, rng); });
}

Tensor mean_trajectory(const GaussianFieldSequence& field, const TrajectoryWindow& window) {
  return integrate(field, window, [](const GaussianParams& g) { return g.mu; });
}

BestOfK best_of_k(const GaussianFieldSequence& field, const TrajectoryWindow& window,
                  std::size_t k, std::uint64_t seed, bool independent_min) {
  if (k < 1) throw std::invalid_argument("best_of_k: k must be >= 1");
  const Tensor truth = future_positions(window);
  const std::string id = window.id();
  BestOfK best{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0};
  for (std::size_t s = 0; s < k; ++s) {
    RngStream rng(derive_seed(seed, id, s));
    const Tensor traj = sample_trajectory(field, window, rng);
    const double a = ade(traj, truth);
    const double f = fde(traj, truth);
    if (a < best.ade) {
      best.ade = a;
      best.best_sample = s;
      if (!independent_min) best.fde = f;
    }
    if (independent_min && f < best.fde) best.fde = f;
  }
  return best;
}

GaussianFieldSequence predict_field(const TrajectoryWindow& window, const Checkpoint& ckpt) {
  const PreparedWindow prepared = prepare_window(window, ckpt.graph);
  return GaussianFieldSequence::from_raw(predict_raw(prepared, ckpt.params, ckpt.model));
}

BestOfK best_of_k(const TrajectoryWindow& window, const Checkpoint& ckpt, std::size_t k,
                  std::uint64_t seed, bool independent_min) {
  return best_of_k(predict_field(window, ckpt), window, k, seed, independent_min);
}

MetricsReport evaluate(const std::vector<TrajectoryWindow>& windows, const Checkpoint& ckpt,
                       std::size_t k, std::uint64_t seed, bool independent_min) {
  MetricsReport report;
  report.n_samples = k;
  report.seed = seed;
  report.independent_min = independent_min;
  for (const auto& w : windows) {
    const BestOfK r = best_of_k(w, ckpt, k, seed, independent_min);
    report.per_window.push_back({w.id(), r.ade, r.fde});
    report.ade_mean += r.ade;
    report.fde_mean += r.fde;
  }
  if (!windows.empty()) {
    report.ade_mean /= static_cast<double>(windows.size());
    report.fde_mean /= static_cast<double>(windows.size());
  } else {
    report.ade_mean = report.fde_mean = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : report.per_window) {
    per.push_back({{"window_id", m.window_id}, {"ade", m.ade}, {"fde", m.fde}});
  }
  return nlohmann::json{{"format_version", kReportVersion},
                        {"kind", "metrics-report"},
                        {"n_samples", report.n_samples},
                        {"seed", report.seed},
                        {"independent_min", report.independent_min},
                        {"aggregate", {{"ade_mean", report.ade_mean}, {"fde_mean", report.fde_mean}}},
                        {"per_window", std::move(per)},
                        {"config", report.config_echo}};
}

MetricsReport report_from_json(const nlohmann::json& doc) {
  if (doc.at("format_version").get<int>() != kReportVersion) {
    throw std::runtime_error("unsupported report version");
  }
  MetricsReport r;
  r.n_samples = doc.at("n_samples").get<std::size_t>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.independent_min = doc.at("independent_min").get<bool>();
  r.ade_mean = doc.at("aggregate").at("ade_mean").get<double>();
  r.fde_mean = doc.at("aggregate").at("fde_mean").get<double>();
  for (const auto& m : doc.at("per_window")) {
    r.per_window.push_back({m.at("window_id").get<std::string>(), m.at("ade").get<double>(),
                            m.at("fde").get<double>()});
  }
  r.config_echo = doc.value("config", nlohmann::json::object());
  return r;
}

}  // namespace crowdgraph
