#include "crowdgraph/gaussian_head.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crowdgraph {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

bool GaussianParams::valid() const {
  return std::isfinite(mu.x) && std::isfinite(mu.y) && sigma_x > 0.0 && sigma_y > 0.0 &&
         std::isfinite(sigma_x) && std::isfinite(sigma_y) && std::fabs(rho) < 1.0;
}

GaussianParams constrain(std::span<const double, kGaussianChannels> raw) {
  for (double v : raw) {
    if (!std::isfinite(v)) throw std::domain_error("constrain: non-finite network output");
  }
  GaussianParams g;
  g.mu = {raw[0], raw[1]};
  g.sigma_x = std::exp(raw[2]);
  g.sigma_y = std::exp(raw[3]);
  g.rho = std::clamp(std::tanh(raw[4]), -kRhoLimit, kRhoLimit);
  return g;
}

double nll(Point target, const GaussianParams& g) {
  const double dx = (target.x - g.mu.x) / g.sigma_x;
  const double dy = (target.y - g.mu.y) / g.sigma_y;
  const double q = 1.0 - g.rho * g.rho;
  const double z = dx * dx + dy * dy - 2.0 * g.rho * dx * dy;
  return std::log(2.0 * std::numbers::pi) + std::log(g.sigma_x) + std::log(g.sigma_y) +
         0.5 * std::log(q) + z / (2.0 * q);
}

NllGradient nll_with_raw_gradient(Point target, std::span<const double, kGaussianChannels> raw) {
  const GaussianParams g = constrain(raw);
  const double dx = (target.x - g.mu.x) / g.sigma_x;
  const double dy = (target.y - g.mu.y) / g.sigma_y;
  const double rho = g.rho;
  const double q = 1.0 - rho * rho;
  const double z = dx * dx + dy * dy - 2.0 * rho * dx * dy;

  NllGradient out;
  // log sigma enters directly as raw[2], raw[3].
  out.value = std::log(2.0 * std::numbers::pi) + raw[2] + raw[3] + 0.5 * std::log(q) + z / (2.0 * q);
  const double ex = (dx - rho * dy) / q;
  const double ey = (dy - rho * dx) / q;
  out.d_raw[0] = -ex / g.sigma_x;
  out.d_raw[1] = -ey / g.sigma_y;
  out.d_raw[2] = 1.0 - dx * ex;
  out.d_raw[3] = 1.0 - dy * ey;
  const bool clamped = std::fabs(std::tanh(raw[4])) > kRhoLimit;
  const double d_rho = -rho / q - dx * dy / q + z * rho / (q * q);
  out.d_raw[4] = clamped ? 0.0 : d_rho * q;  // d tanh = 1 - tanh^2 = q
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t index) {
  // FNV-1a over the label, then mixed with seed and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed ^ splitmix64(h)) + index);
}

Point sample(const GaussianParams& g, RngStream& rng) {
  const double z0 = rng.standard_normal();
  const double z1 = rng.standard_normal();
  const double off_diag = std::sqrt(1.0 - g.rho * g.rho);
  return {g.mu.x + g.sigma_x * z0, g.mu.y + g.sigma_y * (g.rho * z0 + off_diag * z1)};
}

GaussianFieldSequence::GaussianFieldSequence(std::size_t num_peds, std::size_t t_pred)
    : num_peds_(num_peds), t_pred_(t_pred), params_(num_peds * t_pred) {}

GaussianFieldSequence GaussianFieldSequence::from_raw(const Tensor& raw) {
  if (raw.rank() != 3 || raw.dim(2) != kGaussianChannels) {
    throw ShapeError("gaussian field expects [T_pred, N, 5], got " + shape_to_string(raw.shape()));
  }
  GaussianFieldSequence field(raw.dim(1), raw.dim(0));
  for (std::size_t t = 0; t < raw.dim(0); ++t) {
    for (std::size_t i = 0; i < raw.dim(1); ++i) {
      const auto* base = &raw.data()[(t * raw.dim(1) + i) * kGaussianChannels];
      field.at(i, t) = constrain(std::span<const double, kGaussianChannels>(base, kGaussianChannels));
    }
  }
  return field;
}

}  // namespace crowdgraph
