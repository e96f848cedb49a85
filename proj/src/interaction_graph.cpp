#include "crowdgraph/interaction_graph.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace crowdgraph {

namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<Neighborhood, 6> kNeighborhoodNames{{
    {Neighborhood::View, "view"},
    {Neighborhood::ViewThresh, "view-thresh"},
    {Neighborhood::Approach, "approach"},
    {Neighborhood::ViewApproach, "view-approach"},
    {Neighborhood::Complete, "complete"},
    {Neighborhood::Bearing, "bearing"},
}};
constexpr NameTable<Kernel, 2> kKernelNames{{{Kernel::InverseNorm, "inv"}, {Kernel::ExpDecay, "exp"}}};
constexpr NameTable<ApproachSense, 2> kSenseNames{
    {{ApproachSense::AsProse, "prose"}, {ApproachSense::AsPrinted, "printed"}}};
constexpr NameTable<Normalization, 2> kNormalizationNames{
    {{Normalization::NormalizedLaplacian, "laplacian"},
     {Normalization::SymmetricAdjacency, "sym-adjacency"}}};
constexpr NameTable<HeadingMode, 2> kHeadingNames{
    {{HeadingMode::Backward, "backward"}, {HeadingMode::Forward, "forward"}}};

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N>& table, Enum value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  throw std::logic_error("unnamed enum value");
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, std::string_view name, const char* what) {
  for (const auto& [e, n] : table) {
    if (n == name) return e;
  }
  std::string allowed;
  for (const auto& [e, n] : table) {
    if (!allowed.empty()) allowed += "|";
    allowed += n;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(name) +
                              "' (expected " + allowed + ")");
}

bool view_gate(Point h_i, Point h_j) { return dot(h_i, h_j) > 0.0; }

bool approach_gate(const TrajectoryWindow& w, std::size_t i, std::size_t j, std::size_t t,
                   ApproachSense sense) {
  // At the last observed frame only the previous step is available.
  double before = 0.0;
  double after = 0.0;
  if (t + 1 < w.t_obs) {
    before = distance(w.position(i, t), w.position(j, t));
    after = distance(w.position(i, t + 1), w.position(j, t + 1));
  } else {
    before = distance(w.position(i, t - 1), w.position(j, t - 1));
    after = distance(w.position(i, t), w.position(j, t));
  }
  return sense == ApproachSense::AsProse ? after < before : after > before;
}

}  // namespace

void GraphConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("graph epsilon must be a positive finite distance");
  }
}

GraphConfig baseline_graph_config() {
  GraphConfig cfg;
  cfg.neighborhood = Neighborhood::Complete;
  cfg.kernel = Kernel::InverseNorm;
  cfg.self_loops = true;
  cfg.normalization = Normalization::SymmetricAdjacency;
  return cfg;
}

std::string_view to_string(Neighborhood n) { return name_of(kNeighborhoodNames, n); }
std::string_view to_string(Kernel k) { return name_of(kKernelNames, k); }
std::string_view to_string(ApproachSense s) { return name_of(kSenseNames, s); }
std::string_view to_string(Normalization n) { return name_of(kNormalizationNames, n); }
std::string_view to_string(HeadingMode h) { return name_of(kHeadingNames, h); }
Neighborhood parse_neighborhood(std::string_view name) {
  return parse_name(kNeighborhoodNames, name, "neighborhood");
}
Kernel parse_kernel(std::string_view name) { return parse_name(kKernelNames, name, "kernel"); }
ApproachSense parse_approach_sense(std::string_view name) {
  return parse_name(kSenseNames, name, "approach sense");
}
Normalization parse_normalization(std::string_view name) {
  return parse_name(kNormalizationNames, name, "normalization");
}
HeadingMode parse_heading(std::string_view name) {
  return parse_name(kHeadingNames, name, "heading mode");
}

void to_json(nlohmann::json& j, const GraphConfig& cfg) {
  j = nlohmann::json{{"neighborhood", to_string(cfg.neighborhood)},
                     {"kernel", to_string(cfg.kernel)},
                     {"epsilon", cfg.epsilon},
                     {"approach_sense", to_string(cfg.approach_sense)},
                     {"self_loops", cfg.self_loops},
                     {"normalization", to_string(cfg.normalization)},
                     {"heading", to_string(cfg.heading)}};
}

void from_json(const nlohmann::json& j, GraphConfig& cfg) {
  for (const auto& [key, value] : j.items()) {
    if (key == "neighborhood") {
      cfg.neighborhood = parse_neighborhood(value.get<std::string>());
    } else if (key == "kernel") {
      cfg.kernel = parse_kernel(value.get<std::string>());
    } else if (key == "epsilon") {
      cfg.epsilon = value.get<double>();
    } else if (key == "approach_sense") {
      cfg.approach_sense = parse_approach_sense(value.get<std::string>());
    } else if (key == "self_loops") {
      cfg.self_loops = value.get<bool>();
    } else if (key == "normalization") {
      cfg.normalization = parse_normalization(value.get<std::string>());
    } else if (key == "heading") {
      cfg.heading = parse_heading(value.get<std::string>());
    } else {
      throw std::invalid_argument("unknown graph config key '" + key + "'");
    }
  }
  cfg.validate();
}

double kernel_inverse_norm(Point p_i, Point p_j) {
  const double d = distance(p_i, p_j);
  return d != 0.0 ? 1.0 / d : 0.0;
}

double kernel_exp_decay(Point p_i, Point p_j) {
  const double d = distance(p_i, p_j);
  return d != 0.0 ? std::exp(-d) : 0.0;
}

double kernel_weight(Kernel kernel, Point p_i, Point p_j) {
  return kernel == Kernel::InverseNorm ? kernel_inverse_norm(p_i, p_j)
                                       : kernel_exp_decay(p_i, p_j);
}

Point heading(const TrajectoryWindow& w, std::size_t ped, std::size_t t, HeadingMode mode) {
  const bool has_next = t + 1 < w.t_obs;
  if (t == 0 || (mode == HeadingMode::Forward && has_next)) {
    return w.position(ped, t + 1) - w.position(ped, t);
  }
  return w.displacement(ped, t);
}

double neighborhood_weight(std::size_t i, std::size_t j, std::size_t t,
                           const TrajectoryWindow& w, const GraphConfig& cfg) {
  if (i == j) throw std::invalid_argument("neighborhood_weight: i == j");
  if (t >= w.t_obs) throw std::out_of_range("neighborhood_weight: frame outside observation");
  const Point p_i = w.position(i, t);
  const Point p_j = w.position(j, t);
  bool connected = true;
  switch (cfg.neighborhood) {
    case Neighborhood::View:
      connected = view_gate(heading(w, i, t, cfg.heading), heading(w, j, t, cfg.heading));
      break;
    case Neighborhood::ViewThresh:
      connected = view_gate(heading(w, i, t, cfg.heading), heading(w, j, t, cfg.heading)) &&
                  distance(p_i, p_j) < cfg.epsilon;
      break;
    case Neighborhood::Approach:
      connected = approach_gate(w, i, j, t, cfg.approach_sense);
      break;
    case Neighborhood::ViewApproach:
      connected = view_gate(heading(w, i, t, cfg.heading), heading(w, j, t, cfg.heading)) &&
                  approach_gate(w, i, j, t, cfg.approach_sense);
      break;
    case Neighborhood::Complete:
      break;
    case Neighborhood::Bearing:
      connected = dot(heading(w, i, t, cfg.heading), p_j - p_i) > 0.0;
      break;
  }
  return connected ? kernel_weight(cfg.kernel, p_i, p_j) : 0.0;
}

GraphSequence build_graph_sequence(const TrajectoryWindow& window, const GraphConfig& cfg) {
  cfg.validate();
  const std::size_t n = window.num_peds();
  const std::size_t frames = window.t_obs;
  GraphSequence g;
  g.adjacency = Tensor({frames, n, n});
  g.degree = Tensor({frames, n});
  g.normalized = Tensor({frames, n, n});
  std::vector<double> inv_sqrt(n);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) g.adjacency.at(t, i, j) = neighborhood_weight(i, j, t, window, cfg);
      }
      if (cfg.self_loops) g.adjacency.at(t, i, i) += 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) sum += g.adjacency.at(t, i, j);
      g.degree.at(t, i) = sum;
      inv_sqrt[i] = 1.0 / std::sqrt(sum > 0.0 ? sum : 1.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double m = -g.adjacency.at(t, i, j);
        if (cfg.normalization == Normalization::NormalizedLaplacian) {
          if (i == j) m += g.degree.at(t, i);
        } else {
          m = -m;
        }
        g.normalized.at(t, i, j) = inv_sqrt[i] * m * inv_sqrt[j];
      }
    }
  }
  return g;
}

nlohmann::json graph_sequence_to_json(const TrajectoryWindow& window, const GraphConfig& cfg,
                                      const GraphSequence& graphs) {
  auto frames_of = [&](const Tensor& m) {
    nlohmann::json out = nlohmann::json::array();
    const std::size_t n = graphs.nodes();
    for (std::size_t t = 0; t < graphs.frames(); ++t) {
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> row(n);
        for (std::size_t j = 0; j < n; ++j) row[j] = m.at(t, i, j);
        rows.push_back(row);
      }
      out.push_back(std::move(rows));
    }
    return out;
  };
  nlohmann::json degree = nlohmann::json::array();
  for (std::size_t t = 0; t < graphs.frames(); ++t) {
    std::vector<double> row(graphs.nodes());
    for (std::size_t i = 0; i < graphs.nodes(); ++i) row[i] = graphs.degree.at(t, i);
    degree.push_back(row);
  }
  return nlohmann::json{{"window_id", window.id()},
                        {"ped_ids", window.ped_ids},
                        {"config", cfg},
                        {"adjacency", frames_of(graphs.adjacency)},
                        {"degree", std::move(degree)},
                        {"normalized", frames_of(graphs.normalized)}};
}

}  // namespace crowdgraph
