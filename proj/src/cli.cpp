#include "crowdgraph/cli.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "crowdgraph/synthetic.hpp"

namespace crowdgraph {

namespace {

// Input problems reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_real(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Flags shared by several subcommands; unset flags leave the config file value.
struct Overrides {
  std::string config_path;
  std::optional<std::string> scene_dir;
  std::optional<std::string> held_out;
  std::optional<std::size_t> t_obs;
  std::optional<std::size_t> t_pred;
  std::optional<std::size_t> stride;
  std::optional<double> val_fraction;
  std::optional<double> subsample;
  std::optional<std::uint64_t> seed;

  std::optional<std::string> neighborhood;
  std::optional<std::string> kernel;
  std::optional<double> epsilon;
  std::optional<std::string> approach_sense;
  std::optional<bool> self_loops;
  std::optional<std::string> normalization;
  std::optional<std::string> heading;

  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<double> lr_after;
  std::optional<std::size_t> lr_switch;
  std::optional<double> clip_norm;
  std::optional<double> momentum;
  std::optional<double> weight_decay;

  std::optional<std::size_t> samples;
  bool independent_min = false;
};

void add_config_flag(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON run config; flags override its values");
}

void add_data_flags(CLI::App* app, Overrides& o) {
  app->add_option("--scene-dir", o.scene_dir,
                  std::string("Directory of <scene>.txt trajectory files (default: $") +
                      kDataDirEnv + ")");
  app->add_option("--held-out", o.held_out, "Scene used for testing; the rest train/validate");
  app->add_option("--t-obs", o.t_obs, "Observed frames per window (default 8)");
  app->add_option("--t-pred", o.t_pred, "Predicted frames per window (default 12)");
  app->add_option("--stride", o.stride, "Frames between consecutive window starts (default 1)");
  app->add_option("--val-fraction", o.val_fraction,
                  "Fraction of non-held-out windows used for validation (default 0.1)");
  app->add_option("--subsample", o.subsample,
                  "Fraction of each scene's windows to keep, in (0, 1] (default 1)");
  app->add_option("--seed", o.seed, "Seed for splitting, initialization, shuffling and sampling");
}

void add_graph_flags(CLI::App* app, Overrides& o) {
  app->add_option("--graph", o.neighborhood,
                  "Neighborhood: view|view-thresh|approach|view-approach|complete|bearing");
  app->add_option("--kernel", o.kernel, "Edge kernel: inv|exp");
  app->add_option("--epsilon", o.epsilon, "Distance threshold of view-thresh, meters (default 5)");
  app->add_option("--approach-sense", o.approach_sense,
                  "prose (distance shrinking) or printed (distance growing)");
  app->add_option("--self-loops", o.self_loops, "Add identity self-loops: true|false");
  app->add_option("--normalization", o.normalization, "laplacian|sym-adjacency");
  app->add_option("--heading", o.heading, "Walking-direction estimate: backward|forward");
}

void add_train_flags(CLI::App* app, Overrides& o) {
  app->add_option("--epochs", o.epochs, "Training epochs (default 250)");
  app->add_option("--batch", o.batch, "Windows per SGD update (default 128)");
  app->add_option("--lr", o.lr, "Initial learning rate (default 0.01)");
  app->add_option("--lr-after", o.lr_after, "Learning rate after the switch epoch (default 0.002)");
  app->add_option("--lr-switch", o.lr_switch, "Last epoch at the initial rate (default 150)");
  app->add_option("--clip-norm", o.clip_norm, "Clip gradients to this global norm (default off)");
  app->add_option("--momentum", o.momentum, "SGD momentum (default 0)");
  app->add_option("--weight-decay", o.weight_decay, "L2 weight decay (default 0)");
}

void add_eval_flags(CLI::App* app, Overrides& o) {
  app->add_option("--samples", o.samples, "Trajectory samples per window for best-of-k (default 20)");
  app->add_flag("--independent-min", o.independent_min,
                "Minimize FDE independently instead of using the ADE-best sample");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg;
  try {
    if (!o.config_path.empty()) cfg = load_run_config(o.config_path);
    if (cfg.data.scene_dir.empty()) {
      if (const char* env = std::getenv(kDataDirEnv)) cfg.data.scene_dir = env;
    }
    if (o.scene_dir) cfg.data.scene_dir = *o.scene_dir;
    if (o.held_out) cfg.data.held_out = *o.held_out;
    if (o.t_obs) cfg.data.t_obs = *o.t_obs;
    if (o.t_pred) cfg.data.t_pred = *o.t_pred;
    if (o.stride) cfg.data.stride = *o.stride;
    if (o.val_fraction) cfg.data.val_fraction = *o.val_fraction;
    if (o.subsample) cfg.data.subsample = *o.subsample;
    if (o.seed) cfg.seed = *o.seed;
    if (o.neighborhood) cfg.graph.neighborhood = parse_neighborhood(*o.neighborhood);
    if (o.kernel) cfg.graph.kernel = parse_kernel(*o.kernel);
    if (o.epsilon) cfg.graph.epsilon = *o.epsilon;
    if (o.approach_sense) cfg.graph.approach_sense = parse_approach_sense(*o.approach_sense);
    if (o.self_loops) cfg.graph.self_loops = *o.self_loops;
    if (o.normalization) cfg.graph.normalization = parse_normalization(*o.normalization);
    if (o.heading) cfg.graph.heading = parse_heading(*o.heading);
    if (o.epochs) {
      cfg.train.epochs = *o.epochs;
      if (!o.lr_switch) cfg.train.lr_switch_epoch = std::min(cfg.train.lr_switch_epoch, *o.epochs);
    }
    if (o.batch) cfg.train.batch_size = *o.batch;
    if (o.lr) cfg.train.lr_initial = *o.lr;
    if (o.lr_after) cfg.train.lr_after = *o.lr_after;
    if (o.lr_switch) cfg.train.lr_switch_epoch = *o.lr_switch;
    if (o.clip_norm) cfg.train.clip_norm = *o.clip_norm;
    if (o.momentum) cfg.train.momentum = *o.momentum;
    if (o.weight_decay) cfg.train.weight_decay = *o.weight_decay;
    if (o.samples) cfg.eval.samples = *o.samples;
    if (o.independent_min) cfg.eval.independent_min = true;
    cfg.finalize();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  return cfg;
}

const TrajectoryWindow& find_window(const std::vector<TrajectoryWindow>& windows,
                                    const std::string& id) {
  for (const auto& w : windows) {
    if (w.id() == id) return w;
  }
  throw UsageError("unknown window id '" + id + "'");
}

std::vector<TrajectoryWindow> windows_from_source(const RunConfig& cfg, const std::string& archive) {
  if (!archive.empty()) return window_archive_from_json(read_json_file(archive));
  std::vector<TrajectoryWindow> all;
  for (auto& [name, windows] : load_scenes(cfg)) {
    all.insert(all.end(), std::make_move_iterator(windows.begin()),
               std::make_move_iterator(windows.end()));
  }
  return all;
}

}  // namespace

nlohmann::json cmd_prep(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const SceneWindows scenes = load_scenes(cfg);
  const DatasetSplit split =
      leave_one_out_split(scenes, cfg.data.held_out, cfg.data.val_fraction, cfg.seed);
  std::filesystem::create_directories(out_dir);
  write_json_file(out_dir / "train.json", window_archive_to_json(split.train, "train"));
  write_json_file(out_dir / "val.json", window_archive_to_json(split.val, "val"));
  write_json_file(out_dir / "test.json", window_archive_to_json(split.test, "test"));

  auto split_summary = [](const std::vector<TrajectoryWindow>& windows, const std::string& file) {
    std::set<std::string> names;
    std::vector<std::string> ids;
    for (const auto& w : windows) {
      names.insert(w.scene_id);
      ids.push_back(w.id());
    }
    return nlohmann::json{{"file", file},
                          {"count", windows.size()},
                          {"scenes", std::vector<std::string>(names.begin(), names.end())},
                          {"window_ids", ids}};
  };
  nlohmann::json scene_counts = nlohmann::json::object();
  for (const auto& [name, windows] : scenes) scene_counts[name] = windows.size();
  nlohmann::json manifest{{"format_version", kManifestVersion},
                          {"kind", "prep-manifest"},
                          {"held_out", cfg.data.held_out},
                          {"t_obs", cfg.data.t_obs},
                          {"t_pred", cfg.data.t_pred},
                          {"scenes", scene_counts},
                          {"splits",
                           {{"train", split_summary(split.train, "train.json")},
                            {"val", split_summary(split.val, "val.json")},
                            {"test", split_summary(split.test, "test.json")}}},
                          {"config", run_config_to_json(cfg)},
                          {"created_at", utc_timestamp()}};
  write_json_file(out_dir / "manifest.json", manifest);
  return manifest;
}

void cmd_export_plot(const Checkpoint& ckpt, const TrajectoryWindow& window, std::size_t samples,
                     std::uint64_t seed, std::ostream& csv) {
  csv << "ped_id,frame,kind,sample_idx,x,y\n";
  auto row = [&](std::size_t ped, std::size_t frame, const char* kind, const std::string& sample,
                 double x, double y) {
    csv << window.ped_ids[ped] << ',' << frame << ',' << kind << ',' << sample << ','
        << format_real(x) << ',' << format_real(y) << '\n';
  };
  for (std::size_t i = 0; i < window.num_peds(); ++i) {
    for (std::size_t t = 0; t < window.t_obs; ++t) {
      row(i, t, "observed", "", window.positions.at(i, t, 0), window.positions.at(i, t, 1));
    }
    for (std::size_t t = window.t_obs; t < window.total_frames(); ++t) {
      row(i, t, "truth", "", window.positions.at(i, t, 0), window.positions.at(i, t, 1));
    }
  }
  if (samples == 0) return;
  const GaussianFieldSequence field = predict_field(window, ckpt);
  const std::string id = window.id();
  for (std::size_t s = 0; s < samples; ++s) {
    RngStream rng(derive_seed(seed, id, s));
    const Tensor traj = sample_trajectory(field, window, rng);
    for (std::size_t i = 0; i < window.num_peds(); ++i) {
      for (std::size_t t = 0; t < window.t_pred; ++t) {
        row(i, window.t_obs + t, "sample", std::to_string(s), traj.at(i, t, 0), traj.at(i, t, 1));
      }
    }
  }
}

std::vector<SweepEntry> sweep_grid(const GraphConfig& base) {
  std::vector<SweepEntry> grid;
  GraphConfig baseline = baseline_graph_config();
  baseline.epsilon = base.epsilon;
  grid.push_back({"complete-inv-baseline", baseline});
  for (Kernel k : {Kernel::InverseNorm, Kernel::ExpDecay}) {
    for (Neighborhood n : {Neighborhood::View, Neighborhood::ViewThresh, Neighborhood::Approach,
                           Neighborhood::ViewApproach}) {
      GraphConfig g = base;
      g.neighborhood = n;
      g.kernel = k;
      grid.push_back({std::string(to_string(n)) + "-" + std::string(to_string(k)), g});
    }
  }
  return grid;
}

SweepResult run_sweep(const RunConfig& cfg, const std::vector<std::string>& held_out,
                      const std::filesystem::path& work_dir, std::size_t jobs) {
  const SceneWindows scenes = load_scenes(cfg);
  SweepResult result;
  result.scenes = held_out;
  if (result.scenes.empty()) {
    for (const auto& [name, _] : scenes) result.scenes.push_back(name);
  }
  std::vector<DatasetSplit> splits;
  for (const auto& scene : result.scenes) {
    splits.push_back(leave_one_out_split(scenes, scene, cfg.data.val_fraction, cfg.seed));
  }
  const auto grid = sweep_grid(cfg.graph);
  for (const auto& entry : grid) {
    result.rows.push_back({entry.method, entry.graph, std::vector<SweepCell>(result.scenes.size())});
  }
  if (!work_dir.empty()) std::filesystem::create_directories(work_dir);

  // Each (grid entry, scene) task is independent; results land in fixed slots.
  const std::size_t total = grid.size() * result.scenes.size();
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t task = next++; task < total; task = next++) {
      const std::size_t row = task / result.scenes.size();
      const std::size_t col = task % result.scenes.size();
      try {
        RunConfig run = cfg;
        run.graph = grid[row].graph;
        run.data.held_out = result.scenes[col];
        const TrainResult trained = train(splits[col], run.graph, run.train, run.model);
        Checkpoint ckpt{run.model, run.graph, trained.best, run_config_to_json(run)};
        if (!work_dir.empty()) {
          save_checkpoint(work_dir / (grid[row].method + "." + result.scenes[col] + ".ckpt"), ckpt);
        }
        const MetricsReport report = evaluate(splits[col].test, ckpt, run.eval.samples, run.seed,
                                              run.eval.independent_min);
        result.rows[row].cells[col] = {report.ade_mean, report.fde_mean};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t j = 0; j < std::max<std::size_t>(jobs, 1); ++j) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  out << "method,graph,kernel";
  for (const auto& s : result.scenes) out << ',' << s << "_ade," << s << "_fde";
  out << ",avg_ade,avg_fde\n";
  out << std::fixed << std::setprecision(4);
  for (const auto& row : result.rows) {
    out << row.method << ',' << to_string(row.graph.neighborhood) << ','
        << to_string(row.graph.kernel);
    double sum_ade = 0.0;
    double sum_fde = 0.0;
    for (const auto& cell : row.cells) {
      out << ',' << cell.ade << ',' << cell.fde;
      sum_ade += cell.ade;
      sum_fde += cell.fde;
    }
    const auto n = static_cast<double>(std::max<std::size_t>(row.cells.size(), 1));
    out << ',' << sum_ade / n << ',' << sum_fde / n << '\n';
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel-weighted spatio-temporal graph network for pedestrian trajectory prediction",
               "crowdgraph"};
  app.require_subcommand(1);
  Overrides o;

  std::string out_path;
  std::string archive;
  std::string window_id;
  std::string ckpt_path;
  std::string report_path;
  std::string history_path;
  std::string work_dir;
  std::vector<std::string> held_out_list;
  std::size_t jobs = 1;
  std::size_t plot_samples = kDefaultSamples;
  std::size_t synth_frames = 1500;
  bool summary_json = false;

  auto* prep = app.add_subcommand("prep", "Window the scene files and write leave-one-out split archives");
  add_config_flag(prep, o);
  add_data_flags(prep, o);
  prep->add_option("--out", out_path, "Output directory for archives and manifest.json")->required();

  auto* dump = app.add_subcommand("dump-graph", "Print per-window graph matrices as JSON lines");
  add_config_flag(dump, o);
  add_data_flags(dump, o);
  add_graph_flags(dump, o);
  dump->add_option("--archive", archive, "Read windows from a prep archive instead of --scene-dir");
  dump->add_option("--window-id", window_id, "Only this window (<scene>/<start_frame>)");
  dump->add_option("--out", out_path, "Output file (default: stdout)");

  auto* train_cmd = app.add_subcommand("train", "Train on the non-held-out scenes");
  add_config_flag(train_cmd, o);
  add_data_flags(train_cmd, o);
  add_graph_flags(train_cmd, o);
  add_train_flags(train_cmd, o);
  train_cmd->add_option("--out", out_path, "Checkpoint path (best validation NLL)")->required();
  train_cmd->add_option("--history", history_path,
                        "Loss history CSV (default: <checkpoint>.history.csv)");

  auto* eval_cmd = app.add_subcommand("eval", "Best-of-k ADE/FDE on the held-out scene");
  add_config_flag(eval_cmd, o);
  add_data_flags(eval_cmd, o);
  add_eval_flags(eval_cmd, o);
  eval_cmd->add_option("--ckpt", ckpt_path, "Checkpoint to evaluate")->required();
  eval_cmd->add_option("--report", report_path, "Report JSON path (default: stdout)");

  auto* sweep = app.add_subcommand("sweep", "Train and evaluate the baseline plus 4 graphs x 2 kernels");
  add_config_flag(sweep, o);
  add_data_flags(sweep, o);
  add_train_flags(sweep, o);
  add_eval_flags(sweep, o);
  sweep->add_option("--scene", held_out_list,
                    "Held-out scene(s) to run (repeatable; default: every scene)");
  sweep->add_option("--work-dir", work_dir, "Directory for per-run checkpoints");
  sweep->add_option("--jobs", jobs, "Parallel training runs (default 1)");
  sweep->add_option("--out", out_path, "Results CSV (default: stdout)");

  auto* plot = app.add_subcommand("export-plot", "Observed, true and sampled positions of one window as CSV");
  add_config_flag(plot, o);
  add_data_flags(plot, o);
  plot->add_option("--ckpt", ckpt_path, "Checkpoint")->required();
  plot->add_option("--archive", archive, "Read windows from a prep archive instead of --scene-dir");
  plot->add_option("--window-id", window_id, "Window (<scene>/<start_frame>)")->required();
  plot->add_option("--samples", plot_samples, "Sampled trajectories (default 20)");
  plot->add_option("--out", out_path, "Output CSV (default: stdout)");

  auto* summ = app.add_subcommand("summary", "List trainable parameter tensors and the total count");
  add_config_flag(summ, o);
  summ->add_option("--t-obs", o.t_obs, "Observed frames (default 8)");
  summ->add_option("--t-pred", o.t_pred, "Predicted frames (default 12)");
  summ->add_flag("--json", summary_json, "Print JSON instead of a table");

  auto* synth = app.add_subcommand("synth", "Simulate five ETH/UCY-format walkway scenes");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--frames", synth_frames, "Recorded frames per scene (default 1500)");
  synth->add_option("--seed", o.seed, "Simulation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto open_out = [&](std::ofstream& file) -> std::ostream& {
    if (out_path.empty()) return out;
    file.open(out_path);
    if (!file) throw UsageError("cannot write " + out_path);
    return file;
  };

  try {
    if (prep->parsed()) {
      const RunConfig cfg = resolve(o);
      const auto manifest = cmd_prep(cfg, out_path);
      out << "wrote " << manifest["splits"]["train"]["count"] << " train, "
          << manifest["splits"]["val"]["count"] << " val, " << manifest["splits"]["test"]["count"]
          << " test windows to " << out_path << '\n';
    } else if (dump->parsed()) {
      const RunConfig cfg = resolve(o);
      const auto windows = windows_from_source(cfg, archive);
      std::ofstream file;
      std::ostream& dst = open_out(file);
      for (const auto& w : windows) {
        if (!window_id.empty() && w.id() != window_id) continue;
        dst << graph_sequence_to_json(w, cfg.graph, build_graph_sequence(w, cfg.graph)).dump() << '\n';
      }
      if (!window_id.empty()) find_window(windows, window_id);
    } else if (train_cmd->parsed()) {
      const RunConfig cfg = resolve(o);
      const DatasetSplit split = load_split(cfg);
      if (split.train.empty()) throw UsageError("no training windows");
      const TrainResult result =
          train(split, cfg.graph, cfg.train, cfg.model, [&](const EpochRecord& r) {
            out << "epoch " << r.epoch << " lr " << r.lr << " train_nll " << r.train_nll
                << " val_nll " << r.val_nll << '\n';
          });
      save_checkpoint(out_path, Checkpoint{cfg.model, cfg.graph, result.best, run_config_to_json(cfg)});
      const std::string hist = history_path.empty() ? out_path + ".history.csv" : history_path;
      std::ofstream csv(hist);
      if (!csv) throw UsageError("cannot write " + hist);
      write_history_csv(csv, result.history);
      out << "best epoch " << result.best_epoch << "; checkpoint " << out_path << '\n';
    } else if (eval_cmd->parsed()) {
      Checkpoint ckpt = load_checkpoint(ckpt_path);
      // Frame counts come from the checkpoint unless overridden.
      if (!o.t_obs) o.t_obs = ckpt.model.t_obs;
      if (!o.t_pred) o.t_pred = ckpt.model.t_pred;
      RunConfig cfg = resolve(o);
      const DatasetSplit split = load_split(cfg);
      MetricsReport report =
          evaluate(split.test, ckpt, cfg.eval.samples, cfg.seed, cfg.eval.independent_min);
      report.config_echo = run_config_to_json(cfg);
      report.config_echo["checkpoint"] = {{"path", ckpt_path},
                                          {"graph", ckpt.graph},
                                          {"model", ckpt.model},
                                          {"run_config", ckpt.run_config}};
      if (report_path.empty()) {
        out << report_to_json(report).dump(2) << '\n';
      } else {
        write_json_file(report_path, report_to_json(report));
        out << "ADE " << report.ade_mean << " FDE " << report.fde_mean << " over "
            << report.per_window.size() << " windows\n";
      }
    } else if (sweep->parsed()) {
      const RunConfig cfg = resolve(o);
      const SweepResult result = run_sweep(cfg, held_out_list, work_dir, jobs);
      std::ofstream file;
      write_sweep_csv(open_out(file), result);
    } else if (plot->parsed()) {
      Checkpoint ckpt = load_checkpoint(ckpt_path);
      if (!o.t_obs) o.t_obs = ckpt.model.t_obs;
      if (!o.t_pred) o.t_pred = ckpt.model.t_pred;
      const RunConfig cfg = resolve(o);
      const auto windows = windows_from_source(cfg, archive);
      const TrajectoryWindow& w = find_window(windows, window_id);
      std::ofstream file;
      cmd_export_plot(ckpt, w, plot_samples, cfg.seed, open_out(file));
    } else if (summ->parsed()) {
      const RunConfig cfg = resolve(o);
      const ParameterSummary s = summary(init_parameters(cfg.model, 0));
      if (summary_json) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : s.rows) {
          rows.push_back({{"name", r.name}, {"shape", r.shape}, {"count", r.count}});
        }
        out << nlohmann::json{{"tensors", rows}, {"total", s.total}}.dump(2) << '\n';
      } else {
        out << format_summary(s);
      }
    } else if (synth->parsed()) {
      const auto paths =
          write_synthetic_scenes(out_path, default_scene_specs(o.seed.value_or(0), synth_frames));
      for (const auto& p : paths) out << "wrote " << p.string() << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace crowdgraph
