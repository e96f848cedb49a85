#include <gtest/gtest.h>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "crowdgraph/cli.hpp"
#include "support/oracles.hpp"

namespace cg = crowdgraph;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  args.insert(args.begin(), "crowdgraph");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliRun r;
  r.code = cg::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("crowdgraph_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Five small scenes of three pedestrians walking in parallel lanes.
fs::path five_scene_dir() {
  fs::path dir = fresh_dir(std::string("scenes_") +
                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
  int scene_index = 0;
  for (const char* name : {"eth", "hotel", "univ", "zara1", "zara2"}) {
    std::vector<cg::RawTrack> tracks;
    for (std::int64_t f = 0; f < 24; ++f)
      for (std::int64_t p = 1; p <= 3; ++p)
        tracks.push_back({f * 10, p, 0.37 * static_cast<double>(f) + 0.1 * scene_index,
                          1.1 * static_cast<double>(p) - 0.013 * static_cast<double>(f * p)});
    cg::write_trajectory_file(dir / (std::string(name) + ".txt"), tracks);
    ++scene_index;
  }
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

double parse_real(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

}  // namespace

TEST(CliPrep, ManifestListsHeldOutTestWindowsOnly) {
  fs::path scenes = five_scene_dir();
  fs::path out = fresh_dir("prep");
  auto r = run({"prep", "--scene-dir", scenes.string(), "--held-out", "eth", "--t-obs", "8",
                "--t-pred", "12", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["held_out"], "eth");
  EXPECT_EQ(manifest["t_obs"], 8);
  EXPECT_EQ(manifest["t_pred"], 12);
  EXPECT_EQ(manifest["splits"]["test"]["scenes"], nlohmann::json::array({"eth"}));
  EXPECT_EQ(manifest["splits"]["test"]["count"], 5);
  for (const auto& id : manifest["splits"]["test"]["window_ids"])
    EXPECT_TRUE(id.get<std::string>().starts_with("eth/"));
  for (const char* split : {"train", "val"})
    for (const auto& s : manifest["splits"][split]["scenes"]) EXPECT_NE(s, "eth");
  EXPECT_EQ(manifest["config"]["data"]["t_obs"], 8);

  auto test = cg::window_archive_from_json(nlohmann::json::parse(slurp(out / "test.json")));
  EXPECT_EQ(test.size(), 5u);
}

TEST(CliPrep, IdempotentApartFromTimestamp) {
  fs::path scenes = five_scene_dir();
  fs::path a = fresh_dir("prep_a");
  fs::path b = fresh_dir("prep_b");
  ASSERT_EQ(run({"prep", "--scene-dir", scenes.string(), "--seed", "5", "--out", a.string()}).code, 0);
  ASSERT_EQ(run({"prep", "--scene-dir", scenes.string(), "--seed", "5", "--out", b.string()}).code, 0);
  for (const char* f : {"train.json", "val.json", "test.json"}) EXPECT_EQ(slurp(a / f), slurp(b / f));
  auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  ma.erase("created_at");
  mb.erase("created_at");
  EXPECT_EQ(ma, mb);
}

TEST(CliPrep, EmptyDirectoryIsUsageError) {
  fs::path empty = fresh_dir("empty");
  auto r = run({"prep", "--scene-dir", empty.string(), "--out", (empty / "out").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("no scene files"), std::string::npos) << r.err;
}

TEST(CliPrep, MalformedSceneFileIsUsageError) {
  fs::path dir = fresh_dir("malformed");
  std::ofstream(dir / "bad.txt") << "0 1 0 0\n10 1 zero 0\n";
  auto r = run({"prep", "--scene-dir", dir.string(), "--held-out", "bad", "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.txt:2:"), std::string::npos) << r.err;
}

TEST(CliConfig, UnknownKeyRejected) {
  fs::path dir = fresh_dir("config");
  std::ofstream(dir / "run.json") << R"({"data": {"held_out": "eth", "colour": "red"}})";
  auto r = run({"prep", "--config", (dir / "run.json").string(), "--scene-dir",
                five_scene_dir().string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos) << r.err;
}

TEST(CliConfig, FlagsOverrideFileAndFileOverridesDefaults) {
  cg::RunConfig base = cg::run_config_from_json(
      nlohmann::json::parse(R"({"data": {"held_out": "hotel", "t_pred": 10}, "seed": 3})"));
  EXPECT_EQ(base.data.held_out, "hotel");
  EXPECT_EQ(base.data.t_pred, 10u);
  EXPECT_EQ(base.data.t_obs, 8u);
  EXPECT_EQ(base.seed, 3u);
  auto echo = cg::run_config_to_json(base.finalize());
  EXPECT_EQ(cg::run_config_to_json(cg::run_config_from_json(echo).finalize()), echo);

  fs::path dir = fresh_dir("override");
  std::ofstream(dir / "run.json") << R"({"data": {"held_out": "hotel"}})";
  auto r = run({"prep", "--config", (dir / "run.json").string(), "--held-out", "univ",
                "--scene-dir", five_scene_dir().string(), "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto manifest = nlohmann::json::parse(slurp(dir / "o" / "manifest.json"));
  EXPECT_EQ(manifest["held_out"], "univ");
}

TEST(CliExportPlot, RowsAndBitExactTruth) {
  fs::path scenes = five_scene_dir();
  fs::path dir = fresh_dir("plot");
  ASSERT_EQ(run({"prep", "--scene-dir", scenes.string(), "--held-out", "zara1", "--out", dir.string()}).code, 0);
  cg::Checkpoint ckpt;
  ckpt.params = cg::init_parameters(ckpt.model, 8);
  cg::save_checkpoint(dir / "m.ckpt", ckpt);
  auto archive = (dir / "test.json").string();
  auto windows = cg::window_archive_from_json(nlohmann::json::parse(slurp(archive)));
  const auto& w = windows.front();
  ASSERT_EQ(w.num_peds(), 3u);

  auto none = run({"export-plot", "--ckpt", (dir / "m.ckpt").string(), "--archive", archive,
                   "--window-id", w.id(), "--samples", "0"});
  ASSERT_EQ(none.code, 0) << none.err;
  auto rows = csv_rows(none.out);
  EXPECT_EQ(rows.front(), (std::vector<std::string>{"ped_id", "frame", "kind", "sample_idx", "x", "y"}));
  EXPECT_EQ(rows.size(), 1u + 3u * 20u);
  for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_NE(rows[k][2], "sample");

  auto many = run({"export-plot", "--ckpt", (dir / "m.ckpt").string(), "--archive", archive,
                   "--window-id", w.id(), "--samples", "20", "--seed", "4"});
  ASSERT_EQ(many.code, 0) << many.err;
  rows = csv_rows(many.out);
  std::size_t samples = 0;
  std::size_t truths = 0;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    ASSERT_EQ(rows[k].size(), 6u);
    if (rows[k][2] == "sample") ++samples;
    if (rows[k][2] != "truth") continue;
    ++truths;
    const std::size_t ped = std::distance(
        w.ped_ids.begin(), std::find(w.ped_ids.begin(), w.ped_ids.end(), std::stoll(rows[k][0])));
    const std::size_t frame = std::stoul(rows[k][1]);
    EXPECT_EQ(parse_real(rows[k][4]), w.positions.at(ped, frame, 0));
    EXPECT_EQ(parse_real(rows[k][5]), w.positions.at(ped, frame, 1));
  }
  EXPECT_EQ(samples, 3u * 12u * 20u);
  EXPECT_EQ(truths, 3u * 12u);

  auto again = run({"export-plot", "--ckpt", (dir / "m.ckpt").string(), "--archive", archive,
                    "--window-id", w.id(), "--samples", "20", "--seed", "4"});
  EXPECT_EQ(again.out, many.out);
}

TEST(CliExportPlot, UnknownWindowIdFails) {
  fs::path scenes = five_scene_dir();
  fs::path dir = fresh_dir("plot_unknown");
  cg::Checkpoint ckpt;
  ckpt.params = cg::init_parameters(ckpt.model, 8);
  cg::save_checkpoint(dir / "m.ckpt", ckpt);
  auto r = run({"export-plot", "--ckpt", (dir / "m.ckpt").string(), "--scene-dir", scenes.string(),
                "--window-id", "eth/99999"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unknown window id"), std::string::npos);
}

TEST(CliDumpGraph, OneJsonLinePerWindow) {
  fs::path scenes = five_scene_dir();
  auto r = run({"dump-graph", "--scene-dir", scenes.string(), "--graph", "complete", "--kernel", "exp",
                "--window-id", "hotel/20"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto doc = nlohmann::json::parse(r.out);
  EXPECT_EQ(doc["window_id"], "hotel/20");
  EXPECT_EQ(doc["config"]["neighborhood"], "complete");
  EXPECT_EQ(doc["adjacency"].size(), 8u);
  EXPECT_EQ(doc["adjacency"][0].size(), 3u);

  auto bad = run({"dump-graph", "--scene-dir", scenes.string(), "--graph", "everyone"});
  EXPECT_EQ(bad.code, 2);
}

TEST(CliTrainEval, EndToEndTiny) {
  fs::path scenes = five_scene_dir();
  fs::path dir = fresh_dir("train");
  auto ckpt = (dir / "m.ckpt").string();
  auto t = run({"train", "--scene-dir", scenes.string(), "--held-out", "eth", "--epochs", "2",
                "--batch", "4", "--seed", "1", "--out", ckpt});
  ASSERT_EQ(t.code, 0) << t.err;
  auto history = csv_rows(slurp(ckpt + ".history.csv"));
  ASSERT_EQ(history.size(), 3u);
  EXPECT_EQ(history[0], (std::vector<std::string>{"epoch", "train_nll", "val_nll", "lr"}));

  auto report_path = (dir / "report.json").string();
  auto e = run({"eval", "--scene-dir", scenes.string(), "--held-out", "eth", "--ckpt", ckpt,
                "--seed", "2", "--report", report_path});
  ASSERT_EQ(e.code, 0) << e.err;
  auto report = nlohmann::json::parse(slurp(report_path));
  EXPECT_EQ(report["n_samples"], 20);
  EXPECT_EQ(report["per_window"].size(), 5u);
  EXPECT_EQ(report["config"]["data"]["held_out"], "eth");
  EXPECT_EQ(report["config"]["checkpoint"]["run_config"]["train"]["epochs"], 2);

  auto again = run({"eval", "--scene-dir", scenes.string(), "--held-out", "eth", "--ckpt", ckpt,
                    "--seed", "2"});
  auto stdout_report = nlohmann::json::parse(again.out);
  stdout_report["config"]["checkpoint"].erase("path");
  report["config"]["checkpoint"].erase("path");
  EXPECT_EQ(stdout_report, report);
}

TEST(CliSweep, TableShapedCsv) {
  cg::SweepResult result;
  result.scenes = {"eth", "zara1"};
  for (const auto& entry : cg::sweep_grid({})) {
    result.rows.push_back({entry.method, entry.graph, {{0.5, 1.0}, {0.25, 0.5}}});
  }
  std::ostringstream out;
  cg::write_sweep_csv(out, result);
  auto rows = csv_rows(out.str());
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"method", "graph", "kernel", "eth_ade", "eth_fde",
                                               "zara1_ade", "zara1_fde", "avg_ade", "avg_fde"}));
  EXPECT_EQ(rows[1][0], "complete-inv-baseline");
  EXPECT_EQ(rows[2][0], "view-inv");
  EXPECT_EQ(rows[9][0], "view-approach-exp");
  EXPECT_EQ(rows[1][7], "0.3750");
  EXPECT_EQ(rows[1][8], "0.7500");
}

TEST(CliHelp, EverySubcommandDocumentsItsFlags) {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"prep", {"--config", "--scene-dir", "--held-out", "--t-obs", "--t-pred", "--stride",
                "--val-fraction", "--subsample", "--seed", "--out"}},
      {"dump-graph", {"--graph", "--kernel", "--epsilon", "--approach-sense", "--self-loops",
                      "--normalization", "--heading", "--archive", "--window-id", "--out"}},
      {"train", {"--graph", "--kernel", "--epochs", "--batch", "--lr", "--lr-after", "--lr-switch",
                 "--clip-norm", "--momentum", "--weight-decay", "--seed", "--out", "--history"}},
      {"eval", {"--ckpt", "--samples", "--independent-min", "--report", "--seed", "--held-out"}},
      {"sweep", {"--scene", "--work-dir", "--jobs", "--out", "--epochs", "--samples"}},
      {"export-plot", {"--ckpt", "--archive", "--window-id", "--samples", "--out"}},
      {"summary", {"--t-obs", "--t-pred", "--json"}},
  };
  for (const auto& [cmd, expected] : flags) {
    auto r = run({cmd, "--help"});
    EXPECT_EQ(r.code, 0) << cmd;
    for (const auto& f : expected) EXPECT_NE(r.out.find(f), std::string::npos) << cmd << " " << f;
  }
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"train", "--bogus"}).code, 2);
}

TEST(CliSummary, ReportsPinnedTotal) {
  auto r = run({"summary", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["total"], 7533);
}
