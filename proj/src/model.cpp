#include "crowdgraph/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "crowdgraph/gaussian_head.hpp"

namespace crowdgraph {

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'R', 'W', 'D', 'C', 'K', 'P', 'T'};

std::string txp_name(std::size_t layer, const char* what) {
  return "txp." + std::to_string(layer) + "." + what;
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}
std::uint64_t get_le(const std::string& in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

}  // namespace

void ModelConfig::validate() const {
  if (t_obs < 2 || t_pred < 1) throw std::invalid_argument("model needs t_obs >= 2, t_pred >= 1");
  if (input_channels == 0 || output_channels == 0) {
    throw std::invalid_argument("model channel counts must be positive");
  }
  if (output_channels != kGaussianChannels) {
    throw std::invalid_argument("model output_channels must be 5 (bivariate Gaussian head)");
  }
  if (temporal_kernel % 2 == 0 || txp_kernel % 2 == 0) {
    throw std::invalid_argument("convolution kernel widths must be odd");
  }
  if (txp_layers < 1) throw std::invalid_argument("model needs at least one TXP layer");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"t_obs", c.t_obs},
                     {"t_pred", c.t_pred},
                     {"input_channels", c.input_channels},
                     {"output_channels", c.output_channels},
                     {"temporal_kernel", c.temporal_kernel},
                     {"txp_layers", c.txp_layers},
                     {"txp_kernel", c.txp_kernel},
                     {"st_residual", c.st_residual},
                     {"txp_residual", c.txp_residual},
                     {"bias", c.bias}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "t_obs") c.t_obs = value.get<std::size_t>();
    else if (key == "t_pred") c.t_pred = value.get<std::size_t>();
    else if (key == "input_channels") c.input_channels = value.get<std::size_t>();
    else if (key == "output_channels") c.output_channels = value.get<std::size_t>();
    else if (key == "temporal_kernel") c.temporal_kernel = value.get<std::size_t>();
    else if (key == "txp_layers") c.txp_layers = value.get<std::size_t>();
    else if (key == "txp_kernel") c.txp_kernel = value.get<std::size_t>();
    else if (key == "st_residual") c.st_residual = value.get<bool>();
    else if (key == "txp_residual") c.txp_residual = value.get<bool>();
    else if (key == "bias") c.bias = value.get<bool>();
    else throw std::invalid_argument("unknown model config key '" + key + "'");
  }
  c.validate();
}

Tensor& ModelParameters::get(const std::string& name) {
  for (auto& nt : tensors_) {
    if (nt.name == name) return nt.value;
  }
  throw std::out_of_range("no parameter named '" + name + "'");
}

const Tensor& ModelParameters::get(const std::string& name) const {
  return const_cast<ModelParameters*>(this)->get(name);
}

bool ModelParameters::contains(const std::string& name) const {
  return std::any_of(tensors_.begin(), tensors_.end(),
                     [&](const NamedTensor& nt) { return nt.name == name; });
}

std::size_t ModelParameters::scalar_count() const {
  std::size_t total = 0;
  for (const auto& nt : tensors_) total += nt.value.size();
  return total;
}

bool ModelParameters::all_finite() const {
  for (const auto& nt : tensors_) {
    for (double v : nt.value.data()) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ModelParameters ModelParameters::zeros_like() const {
  std::vector<NamedTensor> out;
  out.reserve(tensors_.size());
  for (const auto& nt : tensors_) out.push_back({nt.name, Tensor(nt.value.shape())});
  return ModelParameters(std::move(out));
}

ModelParameters init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::vector<NamedTensor> out;
  auto uniform = [&](std::string name, Shape shape, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    out.push_back({std::move(name), std::move(t)});
  };
  auto slope = [&](std::string name) { out.push_back({std::move(name), Tensor({1}, 0.25)}); };

  const std::size_t cin = cfg.input_channels;
  const std::size_t c = cfg.output_channels;
  uniform("st_gcn.spatial.weight", {cin, c}, cin);
  if (cfg.bias) uniform("st_gcn.spatial.bias", {c}, cin);
  slope("st_gcn.prelu");
  uniform("st_gcn.temporal.weight", {c, c, cfg.temporal_kernel}, c * cfg.temporal_kernel);
  if (cfg.bias) uniform("st_gcn.temporal.bias", {c}, c * cfg.temporal_kernel);
  if (cfg.st_residual) {
    uniform("st_gcn.residual.weight", {cin, c}, cin);
    if (cfg.bias) uniform("st_gcn.residual.bias", {c}, cin);
  }
  slope("st_gcn.out_prelu");

  const std::size_t k = cfg.txp_kernel;
  for (std::size_t layer = 0; layer < cfg.txp_layers; ++layer) {
    const std::size_t in_frames = layer == 0 ? cfg.t_obs : cfg.t_pred;
    uniform(txp_name(layer, "weight"), {cfg.t_pred, in_frames, k, k}, in_frames * k * k);
    if (cfg.bias) uniform(txp_name(layer, "bias"), {cfg.t_pred}, in_frames * k * k);
    slope(txp_name(layer, "prelu"));
  }
  uniform("txp.out.weight", {cfg.t_pred, cfg.t_pred, k, k}, cfg.t_pred * k * k);
  if (cfg.bias) uniform("txp.out.bias", {cfg.t_pred}, cfg.t_pred * k * k);
  return ModelParameters(std::move(out));
}

ParameterSummary summary(const ModelParameters& params) {
  ParameterSummary s;
  for (const auto& nt : params.tensors()) {
    s.rows.push_back({nt.name, nt.value.shape(), nt.value.size()});
    s.total += nt.value.size();
  }
  return s;
}

std::string format_summary(const ParameterSummary& s) {
  std::ostringstream out;
  for (const auto& row : s.rows) {
    out << std::left << std::setw(26) << row.name << std::setw(18) << shape_to_string(row.shape)
        << std::right << std::setw(8) << row.count << '\n';
  }
  out << std::left << std::setw(44) << "total trainable parameters" << std::right << std::setw(8)
      << s.total << '\n';
  return out.str();
}

Var BoundParameters::operator[](const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return vars[k];
  }
  throw std::out_of_range("no bound parameter named '" + name + "'");
}

ModelParameters BoundParameters::gradients(const Tape& tape) const {
  std::vector<NamedTensor> out;
  out.reserve(names.size());
  for (std::size_t k = 0; k < names.size(); ++k) out.push_back({names[k], tape.grad(vars[k])});
  return ModelParameters(std::move(out));
}

BoundParameters bind(Tape& tape, const ModelParameters& params, bool trainable) {
  BoundParameters b;
  for (const auto& nt : params.tensors()) {
    b.names.push_back(nt.name);
    b.vars.push_back(trainable ? tape.parameter(nt.value) : tape.constant(nt.value));
  }
  return b;
}

Var st_gcn_forward(Tape& tape, Var v, Var normalized, const BoundParameters& p,
                   const ModelConfig& cfg) {
  const Tensor& vv = tape.value(v);
  if (vv.rank() != 3 || vv.dim(2) != cfg.input_channels) {
    throw ShapeError("st_gcn input must be [T, N, " + std::to_string(cfg.input_channels) +
                     "], got " + shape_to_string(vv.shape()));
  }
  auto bias = [&](const char* name) -> std::optional<Var> {
    return cfg.bias ? std::optional<Var>(p[name]) : std::nullopt;
  };
  Var spatial = ops::channel_map(tape, v, p["st_gcn.spatial.weight"], bias("st_gcn.spatial.bias"));
  Var mixed = ops::graph_mix(tape, normalized, spatial);
  Var act = ops::prelu(tape, mixed, p["st_gcn.prelu"]);
  Var out = ops::temporal_conv(tape, act, p["st_gcn.temporal.weight"], bias("st_gcn.temporal.bias"));
  if (cfg.st_residual) {
    Var res = ops::channel_map(tape, v, p["st_gcn.residual.weight"], bias("st_gcn.residual.bias"));
    out = ops::add(tape, out, res);
  }
  return ops::prelu(tape, out, p["st_gcn.out_prelu"]);
}

Var txp_forward(Tape& tape, Var h, const BoundParameters& p, const ModelConfig& cfg) {
  const Tensor& hv = tape.value(h);
  if (hv.rank() != 3 || hv.dim(0) != cfg.t_obs || hv.dim(2) != cfg.output_channels) {
    throw ShapeError("txp input must be [" + std::to_string(cfg.t_obs) + ", N, " +
                     std::to_string(cfg.output_channels) + "], got " + shape_to_string(hv.shape()));
  }
  auto bias = [&](const std::string& name) -> std::optional<Var> {
    return cfg.bias ? std::optional<Var>(p[name]) : std::nullopt;
  };
  // Frames act as channels; the (node, feature) plane is convolved.
  Var x = h;
  for (std::size_t layer = 0; layer < cfg.txp_layers; ++layer) {
    Var conv = ops::plane_conv(tape, x, p[txp_name(layer, "weight")], bias(txp_name(layer, "bias")));
    Var act = ops::prelu(tape, conv, p[txp_name(layer, "prelu")]);
    x = (layer > 0 && cfg.txp_residual) ? ops::add(tape, act, x) : act;
  }
  return ops::plane_conv(tape, x, p["txp.out.weight"], bias("txp.out.bias"));
}

Tensor st_gcn_forward(const Tensor& v, const Tensor& normalized, const ModelParameters& params,
                      const ModelConfig& cfg) {
  Tape tape;
  const BoundParameters p = bind(tape, params, false);
  return tape.value(st_gcn_forward(tape, tape.constant(v), tape.constant(normalized), p, cfg));
}

Tensor txp_forward(const Tensor& h, const ModelParameters& params, const ModelConfig& cfg) {
  Tape tape;
  const BoundParameters p = bind(tape, params, false);
  return tape.value(txp_forward(tape, tape.constant(h), p, cfg));
}

PreparedWindow prepare_window(const TrajectoryWindow& window, const GraphConfig& graph_cfg) {
  const std::size_t n = window.num_peds();
  PreparedWindow out;
  out.id = window.id();
  out.features = Tensor({window.t_obs, n, 2});
  out.target = Tensor({window.t_pred, n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < window.total_frames(); ++t) {
      const Point d = window.displacement(i, t);
      Tensor& dst = t < window.t_obs ? out.features : out.target;
      const std::size_t row = t < window.t_obs ? t : t - window.t_obs;
      dst.at(row, i, 0) = d.x;
      dst.at(row, i, 1) = d.y;
    }
  }
  out.normalized = build_graph_sequence(window, graph_cfg).normalized;
  return out;
}

Var model_forward(Tape& tape, const PreparedWindow& w, const BoundParameters& p,
                  const ModelConfig& cfg) {
  if (w.features.dim(0) != cfg.t_obs || w.target.dim(0) != cfg.t_pred) {
    throw ShapeError("window " + w.id + " frame counts do not match the model configuration");
  }
  Var h = st_gcn_forward(tape, tape.constant(w.features), tape.constant(w.normalized), p, cfg);
  return txp_forward(tape, h, p, cfg);
}

Tensor predict_raw(const PreparedWindow& w, const ModelParameters& params, const ModelConfig& cfg) {
  Tape tape;
  const BoundParameters p = bind(tape, params, false);
  return tape.value(model_forward(tape, w, p, cfg));
}

LossAndGradient window_loss_and_gradient(const PreparedWindow& w, const ModelParameters& params,
                                         const ModelConfig& cfg) {
  Tape tape;
  const BoundParameters p = bind(tape, params, true);
  Var raw = model_forward(tape, w, p, cfg);
  Var loss = ops::gaussian_nll_mean(tape, raw, tape.constant(w.target));
  tape.backward(loss);
  return {tape.value(loss)[0], p.gradients(tape)};
}

double window_loss(const PreparedWindow& w, const ModelParameters& params, const ModelConfig& cfg) {
  Tape tape;
  const BoundParameters p = bind(tape, params, false);
  Var raw = model_forward(tape, w, p, cfg);
  return tape.value(ops::gaussian_nll_mean(tape, raw, tape.constant(w.target)))[0];
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["model"] = ckpt.model;
  header["graph"] = ckpt.graph;
  header["run_config"] = ckpt.run_config;
  auto& table = header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& nt : ckpt.params.tensors()) {
    table.push_back({{"name", nt.name}, {"shape", nt.value.shape()}, {"offset", offset}});
    offset += nt.value.size() * sizeof(double);
  }
  const std::string header_text = header.dump();

  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& nt : ckpt.params.tensors()) {
    for (double v : nt.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  constexpr std::size_t kPrefix = sizeof(kCheckpointMagic) + 4 + 8;
  if (bytes.size() < kPrefix ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file");
  }
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint64_t header_len = get_le(bytes, 12, 8);
  if (header_len > bytes.size() - kPrefix) throw std::runtime_error("truncated checkpoint header");
  const auto header = nlohmann::json::parse(bytes.substr(kPrefix, header_len));
  const std::size_t payload = kPrefix + header_len;

  Checkpoint ckpt;
  ckpt.model = header.at("model").get<ModelConfig>();
  ckpt.graph = header.at("graph").get<GraphConfig>();
  ckpt.run_config = header.value("run_config", nlohmann::json::object());
  std::vector<NamedTensor> tensors;
  for (const auto& entry : header.at("tensors")) {
    Shape shape = entry.at("shape").get<Shape>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    Tensor t(std::move(shape));
    if (payload + offset + t.size() * sizeof(double) > bytes.size()) {
      throw std::runtime_error("truncated checkpoint payload");
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
      t[k] = std::bit_cast<double>(get_le(bytes, payload + offset + k * sizeof(double), 8));
    }
    tensors.push_back({entry.at("name").get<std::string>(), std::move(t)});
  }
  ckpt.params = ModelParameters(std::move(tensors));
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace crowdgraph
