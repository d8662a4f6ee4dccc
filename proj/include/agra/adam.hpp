#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "agra/error.hpp"
#include "agra/model.hpp"

namespace agra {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // coupled L2, added to the gradient
};

struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(const AdamConfig& cfg, std::size_t n_params)
      : config(cfg), m(n_params, 0.0), v(n_params, 0.0) {
    require(cfg.lr > 0, ErrorCode::InvalidArgument, "lr must be > 0");
    require(cfg.beta1 > 0 && cfg.beta1 < 1, ErrorCode::InvalidArgument, "beta1 outside (0, 1)");
    require(cfg.beta2 > 0 && cfg.beta2 < 1, ErrorCode::InvalidArgument, "beta2 outside (0, 1)");
    require(cfg.eps > 0, ErrorCode::InvalidArgument, "eps must be > 0");
    require(cfg.weight_decay >= 0, ErrorCode::InvalidArgument, "weight_decay must be >= 0");
  }
};

// One Adam step with bias correction:
//   g' = g + λθ;  m = β1 m + (1−β1) g';  v = β2 v + (1−β2) g'²
//   θ -= lr · m̂ / (√v̂ + eps),  m̂ = m/(1−β1^t),  v̂ = v/(1−β2^t)
inline void adam_step(LinearModel& model, AdamState& state, const FlatGradient& grad) {
  const std::size_t n = model.n_params();
  require(grad.n_classes == model.n_classes() && grad.n_features == model.n_features() &&
              grad.size() == n,
          ErrorCode::DimensionMismatch, "gradient layout does not match model");
  require(state.m.size() == n && state.v.size() == n, ErrorCode::DimensionMismatch,
          "optimizer state does not match model");
  require(grad.all_finite(), ErrorCode::NonFinite, "non-finite gradient entry");

  const auto& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto update = [&](double& theta, std::size_t i) {
    const double g = grad.values[i] + cfg.weight_decay * theta;
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    theta -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  };

  auto w = model.weights();
  for (std::size_t i = 0; i < w.size(); ++i) update(w[i], i);
  auto b = model.bias();
  for (std::size_t k = 0; k < b.size(); ++k) update(b[k], w.size() + k);
}

}  // namespace agra
