#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "crowdgraph/geometry.hpp"
#include "crowdgraph/tensor.hpp"

namespace crowdgraph {

inline constexpr std::size_t kGaussianChannels = 5;
// |rho| never exceeds this after constrain().
inline constexpr double kRhoLimit = 1.0 - 1e-6;

using RawGaussian = std::array<double, kGaussianChannels>;

struct GaussianParams {
  Point mu;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rho = 0.0;

  bool valid() const;
};

// (mu_x, mu_y, log sigma_x, log sigma_y, atanh rho) -> parameters. Throws
// std::domain_error on non-finite input.
GaussianParams constrain(std::span<const double, kGaussianChannels> raw);

// -log N(target; mu, Sigma) in nats.
double nll(Point target, const GaussianParams& g);

struct NllGradient {
  double value = 0.0;
  RawGaussian d_raw{};  // d nll / d raw channel, through constrain()
};
NllGradient nll_with_raw_gradient(Point target, std::span<const double, kGaussianChannels> raw);

// Seedable normal-variate stream. Streams for parallel work are derived with
// derive_seed(), never shared.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  double standard_normal() { return normal_(engine_); }
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Order-independent seed for (base seed, stream label, index).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index);

// mu + chol(Sigma) z with z ~ N(0, I) drawn from `rng`.
Point sample(const GaussianParams& g, RngStream& rng);

// Per-pedestrian, per-predicted-frame Gaussians in displacement space.
class GaussianFieldSequence {
 public:
  GaussianFieldSequence() = default;
  GaussianFieldSequence(std::size_t num_peds, std::size_t t_pred);
  // From raw network output shaped [T_pred, N, 5].
  static GaussianFieldSequence from_raw(const Tensor& raw);

  std::size_t num_peds() const { return num_peds_; }
  std::size_t t_pred() const { return t_pred_; }
  GaussianParams& at(std::size_t ped, std::size_t t) { return params_[ped * t_pred_ + t]; }
  const GaussianParams& at(std::size_t ped, std::size_t t) const {
    return params_[ped * t_pred_ + t];
  }

 private:
  std::size_t num_peds_ = 0;
  std::size_t t_pred_ = 0;
  std::vector<GaussianParams> params_;
};

}  // namespace crowdgraph
