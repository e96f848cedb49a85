#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "crowdgraph/gaussian_head.hpp"
#include "support/oracles.hpp"

namespace cg = crowdgraph;
using cg::testing::relative_error;

namespace {

cg::GaussianParams from(const cg::RawGaussian& raw) { return cg::constrain(raw); }

cg::RawGaussian random_raw(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mu(-2.0, 2.0);
  std::uniform_real_distribution<double> logs(-1.0, 1.0);
  std::uniform_real_distribution<double> ar(-2.5, 2.5);
  return {mu(rng), mu(rng), logs(rng), logs(rng), ar(rng)};
}

}  // namespace

TEST(Constrain, Examples) {
  auto g = from({0, 0, 0, 0, 0});
  EXPECT_EQ(g.mu.x, 0.0);
  EXPECT_EQ(g.mu.y, 0.0);
  EXPECT_EQ(g.sigma_x, 1.0);
  EXPECT_EQ(g.sigma_y, 1.0);
  EXPECT_EQ(g.rho, 0.0);

  EXPECT_LT(std::fabs(from({0, 0, 0, 0, 20}).rho), 1.0);
  EXPECT_LT(std::fabs(from({0, 0, 0, 0, -20}).rho), 1.0);
  EXPECT_LE(std::fabs(from({0, 0, 0, 0, 20}).rho), cg::kRhoLimit);

  EXPECT_NEAR(from({0, 0, 1, 0, 0}).sigma_x, 2.71828, 1e-5);
}

TEST(Constrain, RejectsNonFinite) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(from({nan, 0, 0, 0, 0}), std::domain_error);
  EXPECT_THROW(from({0, 0, inf, 0, 0}), std::domain_error);
  EXPECT_THROW(from({0, 0, 0, 0, -inf}), std::domain_error);
}

TEST(Constrain, AlwaysPositiveDefinite) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> wide(-30.0, 30.0);
  for (int trial = 0; trial < 5000; ++trial) {
    auto g = from({wide(rng), wide(rng), wide(rng) / 3.0, wide(rng) / 3.0, wide(rng)});
    ASSERT_TRUE(g.valid());
    const double det = g.sigma_x * g.sigma_x * g.sigma_y * g.sigma_y * (1.0 - g.rho * g.rho);
    ASSERT_GT(det, 0.0);
  }
}

TEST(Nll, Examples) {
  cg::GaussianParams unit;
  EXPECT_NEAR(cg::nll({0, 0}, unit), 1.837877, 1e-6);
  EXPECT_NEAR(cg::nll({1, 0}, unit), 2.337877, 1e-6);
  unit.mu = {3, -1};
  EXPECT_NEAR(cg::nll({3, -1}, unit), std::log(2.0 * 3.14159265358979323846), 1e-15);
}

TEST(Nll, MatchesExtendedPrecisionOracle) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> z(0.0, 1.5);
  for (int trial = 0; trial < 1000; ++trial) {
    auto raw = random_raw(rng);
    auto g = from(raw);
    cg::Point target{g.mu.x + z(rng), g.mu.y + z(rng)};
    const long double want = cg::testing::oracle_nll(target.x, target.y, g.mu.x, g.mu.y,
                                                     g.sigma_x, g.sigma_y, g.rho);
    EXPECT_LT(relative_error(cg::nll(target, g), static_cast<double>(want)), 1e-10);
    EXPECT_LT(relative_error(cg::nll_with_raw_gradient(target, raw).value, static_cast<double>(want)),
              1e-10);
  }
}

TEST(Nll, RawGradientMatchesCentralDifferences) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> z(0.0, 1.5);
  const double h = 1e-5;
  for (int trial = 0; trial < 1000; ++trial) {
    auto raw = random_raw(rng);
    auto g = from(raw);
    cg::Point target{g.mu.x + z(rng), g.mu.y + z(rng)};
    auto analytic = cg::nll_with_raw_gradient(target, raw);
    for (std::size_t c = 0; c < cg::kGaussianChannels; ++c) {
      auto up = raw;
      auto down = raw;
      up[c] += h;
      down[c] -= h;
      const double fd = (cg::nll(target, from(up)) - cg::nll(target, from(down))) / (2.0 * h);
      ASSERT_LE(relative_error(analytic.d_raw[c], fd), 1e-4)
          << "channel " << c << " trial " << trial << ": " << analytic.d_raw[c] << " vs " << fd;
    }
  }
}

TEST(Nll, MeanGradientVanishesAtTarget) {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 200; ++trial) {
    auto raw = random_raw(rng);
    auto grad = cg::nll_with_raw_gradient({raw[0], raw[1]}, raw);
    EXPECT_LE(std::fabs(grad.d_raw[0]), 1e-10);
    EXPECT_LE(std::fabs(grad.d_raw[1]), 1e-10);
  }
}

TEST(Sampler, DegenerateSigmaReturnsMean) {
  cg::GaussianParams g;
  g.mu = {1.25, -3.5};
  g.sigma_x = 1e-9;
  g.sigma_y = 1e-9;
  g.rho = 0.3;
  cg::RngStream rng(5);
  for (int k = 0; k < 100; ++k) {
    auto p = cg::sample(g, rng);
    EXPECT_NEAR(p.x, g.mu.x, 1e-6);
    EXPECT_NEAR(p.y, g.mu.y, 1e-6);
  }
}

TEST(Sampler, SameSeedSameDraws) {
  cg::GaussianParams g = from({0.1, 0.2, 0.3, -0.4, 0.5});
  cg::RngStream a(99);
  cg::RngStream b(99);
  for (int k = 0; k < 50; ++k) {
    auto pa = cg::sample(g, a);
    auto pb = cg::sample(g, b);
    EXPECT_EQ(pa.x, pb.x);
    EXPECT_EQ(pa.y, pb.y);
  }
}

TEST(Sampler, DerivedSeedsDiffer) {
  EXPECT_EQ(cg::derive_seed(1, "zara1/10", 3), cg::derive_seed(1, "zara1/10", 3));
  EXPECT_NE(cg::derive_seed(1, "zara1/10", 3), cg::derive_seed(1, "zara1/10", 4));
  EXPECT_NE(cg::derive_seed(1, "zara1/10", 3), cg::derive_seed(2, "zara1/10", 3));
  EXPECT_NE(cg::derive_seed(1, "zara1/10", 3), cg::derive_seed(1, "zara1/20", 3));
}

TEST(FieldSequence, FromRawLayout) {
  cg::Tensor raw({2, 3, 5});
  raw.at(1, 2, 0) = 7.0;  // frame 1, pedestrian 2
  raw.at(0, 1, 2) = std::log(3.0);
  auto field = cg::GaussianFieldSequence::from_raw(raw);
  EXPECT_EQ(field.num_peds(), 3u);
  EXPECT_EQ(field.t_pred(), 2u);
  EXPECT_EQ(field.at(2, 1).mu.x, 7.0);
  EXPECT_NEAR(field.at(1, 0).sigma_x, 3.0, 1e-15);
  EXPECT_THROW(cg::GaussianFieldSequence::from_raw(cg::Tensor({2, 3, 4})), cg::ShapeError);
}

TEST(Sampler, MonteCarloMoments) {
  cg::GaussianParams g;
  g.mu = {0.5, -1.0};
  g.sigma_x = 1.0;
  g.sigma_y = 2.0;
  g.rho = 0.5;
  cg::RngStream rng(2024);
  const int n = 100000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int k = 0; k < n; ++k) {
    auto p = cg::sample(g, rng);
    sx += p.x;
    sy += p.y;
    sxx += p.x * p.x;
    syy += p.y * p.y;
    sxy += p.x * p.y;
  }
  const double mx = sx / n, my = sy / n;
  const double vx = sxx / n - mx * mx, vy = syy / n - my * my;
  const double corr = (sxy / n - mx * my) / std::sqrt(vx * vy);
  EXPECT_NEAR(mx, g.mu.x, 0.02);
  EXPECT_NEAR(my, g.mu.y, 0.02);
  EXPECT_NEAR(std::sqrt(vx), 1.0, 0.02 * 1.0);
  EXPECT_NEAR(std::sqrt(vy), 2.0, 0.02 * 2.0);
  EXPECT_NEAR(corr, 0.5, 0.02);
}
