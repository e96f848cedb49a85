#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "crowdgraph/trainer.hpp"
#include "support/oracles.hpp"

namespace cg = crowdgraph;

namespace {

cg::ModelParameters single(double p) { return cg::ModelParameters({{"p", cg::Tensor({1}, p)}}); }

std::vector<cg::PreparedWindow> toy_windows(std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::vector<cg::PreparedWindow> out;
  for (std::size_t k = 0; k < count; ++k) {
    auto w = cg::testing::random_window(rng, 2 + k % 3, 8.0, 0.3);
    w.start_frame = static_cast<std::int64_t>(k);
    out.push_back(cg::prepare_window(w, {}));
  }
  return out;
}

cg::TrainConfig quick(std::size_t epochs) {
  cg::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 3;
  cfg.lr_switch_epoch = 1;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST(LearningRate, Schedule) {
  cg::TrainConfig cfg;
  EXPECT_EQ(cg::learning_rate(cfg, 1), 0.01);
  EXPECT_EQ(cg::learning_rate(cfg, 150), 0.01);
  EXPECT_EQ(cg::learning_rate(cfg, 151), 0.002);
  EXPECT_EQ(cg::learning_rate(cfg, 250), 0.002);
}

TEST(TrainConfig, DefaultsAndValidation) {
  cg::TrainConfig cfg;
  EXPECT_EQ(cfg.epochs, 250u);
  EXPECT_EQ(cfg.batch_size, 128u);
  EXPECT_EQ(cfg.lr_initial, 0.01);
  EXPECT_EQ(cfg.lr_after, 0.002);
  EXPECT_EQ(cfg.lr_switch_epoch, 150u);
  EXPECT_FALSE(cfg.clip_norm.has_value());
  EXPECT_NO_THROW(cfg.validate());
  cfg.lr_switch_epoch = 300;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.lr_after = 0.05;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);

  cg::TrainConfig c2;
  c2.clip_norm = 2.5;
  nlohmann::json j = c2;
  EXPECT_EQ(j.get<cg::TrainConfig>(), c2);
  j["warmup"] = 3;
  EXPECT_THROW(j.get<cg::TrainConfig>(), std::invalid_argument);
}

TEST(SgdStep, Examples) {
  auto p = single(1.0);
  cg::sgd_step(p, single(0.5), 0.0);
  EXPECT_EQ(p.get("p")[0], 1.0);
  cg::sgd_step(p, single(0.5), 0.01);
  EXPECT_DOUBLE_EQ(p.get("p")[0], 0.995);
}

TEST(SgdStep, ClipsToGlobalNorm) {
  cg::ModelParameters p({{"a", cg::Tensor({2}, 0.0)}});
  cg::ModelParameters g({{"a", cg::Tensor({2}, std::vector<double>{6.0, 8.0})}});
  EXPECT_DOUBLE_EQ(cg::global_norm(g), 10.0);
  cg::sgd_step(p, g, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(p.get("a")[0], -0.6);
  EXPECT_DOUBLE_EQ(p.get("a")[1], -0.8);
  // Below the threshold: no rescaling.
  cg::ModelParameters q({{"a", cg::Tensor({2}, 0.0)}});
  cg::sgd_step(q, g, 1.0, 20.0);
  EXPECT_DOUBLE_EQ(q.get("a")[0], -6.0);
}

TEST(SgdOptimizer, PlainWhenMomentumAndDecayZero) {
  auto a = single(1.0);
  auto b = single(1.0);
  cg::SgdOptimizer opt(0.0, 0.0);
  opt.step(a, single(0.5), 0.01, std::nullopt);
  cg::sgd_step(b, single(0.5), 0.01);
  EXPECT_EQ(a, b);

  auto m = single(1.0);
  cg::SgdOptimizer mom(0.9, 0.0);
  mom.step(m, single(1.0), 0.1, std::nullopt);
  mom.step(m, single(1.0), 0.1, std::nullopt);
  EXPECT_NEAR(m.get("p")[0], 1.0 - 0.1 - 0.1 * 1.9, 1e-15);
}

TEST(EpochOrder, VisitsEachWindowOnce) {
  for (std::size_t epoch = 1; epoch <= 5; ++epoch) {
    auto order = cg::epoch_order(37, 3, epoch);
    std::set<std::size_t> seen(order.begin(), order.end());
    EXPECT_EQ(order.size(), 37u);
    EXPECT_EQ(seen.size(), 37u);
    EXPECT_EQ(*seen.rbegin(), 36u);
  }
  EXPECT_EQ(cg::epoch_order(37, 3, 2), cg::epoch_order(37, 3, 2));
  EXPECT_NE(cg::epoch_order(37, 3, 2), cg::epoch_order(37, 3, 3));
}

TEST(Train, DeterministicHistories) {
  auto train = toy_windows(1, 7);
  auto val = toy_windows(2, 3);
  cg::ModelConfig mcfg;
  auto run = [&] {
    return cg::train_prepared(train, val, quick(3), mcfg, cg::init_parameters(mcfg, 17));
  };
  auto a = run();
  auto b = run();
  ASSERT_EQ(a.history.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(a.history[k].epoch, k + 1);
    EXPECT_EQ(a.history[k].train_nll, b.history[k].train_nll);
    EXPECT_EQ(a.history[k].val_nll, b.history[k].val_nll);
    EXPECT_TRUE(std::isfinite(a.history[k].val_nll));
  }
  EXPECT_EQ(a.final, b.final);
  EXPECT_EQ(a.best, b.best);
}

TEST(Train, BestCheckpointHasLowestValidationNll) {
  auto train = toy_windows(3, 6);
  auto val = toy_windows(4, 3);
  cg::ModelConfig mcfg;
  auto cfg = quick(6);
  auto result = cg::train_prepared(train, val, cfg, mcfg, cg::init_parameters(mcfg, 2));
  double lowest = std::numeric_limits<double>::infinity();
  std::size_t epoch = 0;
  for (const auto& r : result.history) {
    if (r.val_nll < lowest) {
      lowest = r.val_nll;
      epoch = r.epoch;
    }
  }
  EXPECT_EQ(result.best_epoch, epoch);
  EXPECT_EQ(cg::mean_nll(val, result.best, mcfg), lowest);
}

TEST(Train, CheckpointRoundTripPreservesValidationNll) {
  auto train = toy_windows(5, 4);
  auto val = toy_windows(6, 2);
  cg::ModelConfig mcfg;
  auto result = cg::train_prepared(train, val, quick(2), mcfg, cg::init_parameters(mcfg, 1));
  cg::Checkpoint ckpt{mcfg, {}, result.best, nlohmann::json::object()};
  auto path = std::filesystem::temp_directory_path() / "crowdgraph_trainer_test.ckpt";
  cg::save_checkpoint(path, ckpt);
  auto loaded = cg::load_checkpoint(path);
  EXPECT_NEAR(cg::mean_nll(val, loaded.params, loaded.model), cg::mean_nll(val, result.best, mcfg),
              1e-12);
}

TEST(Train, NonFiniteLossAborts) {
  auto train = toy_windows(7, 3);
  train[1].target.at(0, 0, 0) = std::numeric_limits<double>::quiet_NaN();
  cg::ModelConfig mcfg;
  try {
    cg::train_prepared(train, {}, quick(1), mcfg, cg::init_parameters(mcfg, 1));
    FAIL() << "expected TrainingError";
  } catch (const cg::TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find(train[1].id), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(Train, EmptyTrainingSplitRejected) {
  cg::ModelConfig mcfg;
  EXPECT_THROW(cg::train_prepared({}, {}, quick(1), mcfg, cg::init_parameters(mcfg, 1)),
               std::invalid_argument);
}

TEST(Train, HistoryCsv) {
  std::vector<cg::EpochRecord> h = {{1, 2.5, 2.25, 0.01},
                                    {2, 2.0, std::numeric_limits<double>::quiet_NaN(), 0.002}};
  std::ostringstream out;
  cg::write_history_csv(out, h);
  EXPECT_EQ(out.str(), "epoch,train_nll,val_nll,lr\n1,2.5,2.25,0.01\n2,2,,0.002\n");
}

TEST(Train, LossDropsOnOneWindow) {
  auto w = cg::prepare_window(cg::testing::crossing_window(), {});
  cg::ModelConfig mcfg;
  cg::TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 1;
  cfg.lr_switch_epoch = 60;
  cfg.momentum = 0.9;
  cfg.clip_norm = 1.0;
  auto result = cg::train_prepared({w}, {}, cfg, mcfg, cg::init_parameters(mcfg, 0));
  EXPECT_LT(result.history.back().train_nll, result.history.front().train_nll - 0.5);
}
