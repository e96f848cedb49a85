#include "crowdgraph/trainer.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <algorithm>
#include <numeric>
#include <random>

#include "crowdgraph/gaussian_head.hpp"

namespace crowdgraph {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr_after > 0.0 && lr_after <= lr_initial)) {
    throw std::invalid_argument("learning rates must satisfy 0 < lr_after <= lr_initial");
  }
  if (lr_switch_epoch < 1 || lr_switch_epoch > epochs) {
    throw std::invalid_argument("lr_switch_epoch must lie in [1, epochs]");
  }
  if (clip_norm && !(*clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"lr_initial", c.lr_initial},
                     {"lr_after", c.lr_after},
                     {"lr_switch_epoch", c.lr_switch_epoch},
                     {"seed", c.seed},
                     {"clip_norm", c.clip_norm ? nlohmann::json(*c.clip_norm) : nlohmann::json()},
                     {"momentum", c.momentum},
                     {"weight_decay", c.weight_decay}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  for (const auto& [key, value] : j.items()) {
    if (key == "epochs") c.epochs = value.get<std::size_t>();
    else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
    else if (key == "lr_initial") c.lr_initial = value.get<double>();
    else if (key == "lr_after") c.lr_after = value.get<double>();
    else if (key == "lr_switch_epoch") c.lr_switch_epoch = value.get<std::size_t>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "clip_norm") {
      c.clip_norm = value.is_null() ? std::nullopt : std::optional<double>(value.get<double>());
    } else if (key == "momentum") c.momentum = value.get<double>();
    else if (key == "weight_decay") c.weight_decay = value.get<double>();
    else throw std::invalid_argument("unknown train config key '" + key + "'");
  }
}

double learning_rate(const TrainConfig& cfg, std::size_t epoch) {
  return epoch <= cfg.lr_switch_epoch ? cfg.lr_initial : cfg.lr_after;
}

double global_norm(const ModelParameters& grads) {
  double sq = 0.0;
  for (const auto& nt : grads.tensors()) {
    for (double v : nt.value.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

namespace {

double clip_scale(const ModelParameters& grads, std::optional<double> clip_norm) {
  if (!clip_norm) return 1.0;
  const double norm = global_norm(grads);
  return norm > *clip_norm ? *clip_norm / norm : 1.0;
}

}  // namespace

void sgd_step(ModelParameters& params, const ModelParameters& grads, double lr,
              std::optional<double> clip_norm) {
  if (params.size() != grads.size()) throw ShapeError("sgd_step: parameter/gradient count mismatch");
  const double scale = clip_scale(grads, clip_norm);
  for (std::size_t k = 0; k < params.size(); ++k) {
    params.tensors()[k].value.add_scaled(grads.tensors()[k].value, -lr * scale);
  }
}

void SgdOptimizer::step(ModelParameters& params, const ModelParameters& grads, double lr,
                        std::optional<double> clip_norm) {
  if (momentum_ == 0.0 && weight_decay_ == 0.0) {
    sgd_step(params, grads, lr, clip_norm);
    return;
  }
  const double scale = clip_scale(grads, clip_norm);
  if (!velocity_) velocity_ = params.zeros_like();
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params.tensors()[k].value;
    Tensor& v = velocity_->tensors()[k].value;
    const Tensor& g = grads.tensors()[k].value;
    for (std::size_t e = 0; e < p.size(); ++e) {
      const double d = scale * g[e] + weight_decay_ * p[e];
      v[e] = momentum_ * v[e] + d;
      p[e] -= lr * v[e];
    }
  }
}

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, "epoch", epoch));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

double mean_nll(const std::vector<PreparedWindow>& windows, const ModelParameters& params,
                const ModelConfig& cfg) {
  if (windows.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& w : windows) total += window_loss(w, params, cfg);
  return total / static_cast<double>(windows.size());
}

TrainResult train_prepared(const std::vector<PreparedWindow>& train_windows,
                           const std::vector<PreparedWindow>& val_windows, const TrainConfig& cfg,
                           const ModelConfig& model_cfg, ModelParameters initial,
                           const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (train_windows.empty()) throw std::invalid_argument("training split is empty");

  TrainResult result;
  ModelParameters params = std::move(initial);
  SgdOptimizer optimizer(cfg.momentum, cfg.weight_decay);
  double best_score = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    const auto order = epoch_order(train_windows.size(), cfg.seed, epoch);
    double epoch_loss = 0.0;
    ModelParameters accum = params.zeros_like();
    std::size_t in_batch = 0;
    auto flush = [&] {
      for (auto& nt : accum.tensors()) {
        for (double& v : nt.value.data()) v /= static_cast<double>(in_batch);
      }
      optimizer.step(params, accum, lr, cfg.clip_norm);
      for (auto& nt : accum.tensors()) nt.value.fill(0.0);
      in_batch = 0;
    };
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const PreparedWindow& w = train_windows[order[pos]];
      LossAndGradient lg = window_loss_and_gradient(w, params, model_cfg);
      if (!std::isfinite(lg.loss) || !lg.grads.all_finite()) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", window " +
                            w.id);
      }
      epoch_loss += lg.loss;
      for (std::size_t k = 0; k < accum.size(); ++k) {
        accum.tensors()[k].value.add_scaled(lg.grads.tensors()[k].value);
      }
      if (++in_batch == cfg.batch_size || pos + 1 == order.size()) flush();
    }
    if (!params.all_finite()) {
      throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_nll = epoch_loss / static_cast<double>(train_windows.size());
    rec.val_nll = mean_nll(val_windows, params, model_cfg);
    result.history.push_back(rec);
    const double score = val_windows.empty() ? rec.train_nll : rec.val_nll;
    if (score < best_score || result.best_epoch == 0) {
      best_score = score;
      result.best = params;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec);
  }
  result.final = std::move(params);
  return result;
}

TrainResult train(const DatasetSplit& split, const GraphConfig& graph_cfg,
                  const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const EpochCallback& on_epoch) {
  std::vector<PreparedWindow> train_windows;
  std::vector<PreparedWindow> val_windows;
  train_windows.reserve(split.train.size());
  for (const auto& w : split.train) train_windows.push_back(prepare_window(w, graph_cfg));
  for (const auto& w : split.val) val_windows.push_back(prepare_window(w, graph_cfg));
  return train_prepared(train_windows, val_windows, cfg, model_cfg,
                        init_parameters(model_cfg, cfg.seed), on_epoch);
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_nll,val_nll,lr\n";
  out << std::setprecision(17);
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train_nll << ',';
    if (std::isfinite(r.val_nll)) out << r.val_nll;
    out << ',' << r.lr << '\n';
  }
}

}  // namespace crowdgraph
