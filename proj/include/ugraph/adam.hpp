#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ugraph/error.hpp"
#include "ugraph/model.hpp"

namespace ugraph {

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam step over every tensor of `params`, in place.
inline void update_params(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
                          const AdamConfig& cfg = {}) {
  require(lr >= 0.0, "update_params: learning rate must be non-negative");
  auto ps = params.tensors();
  const auto gs = grads.tensors();
  require(ps.size() == gs.size(), "update_params: gradient structure mismatch");
  for (std::size_t t = 0; t < gs.size(); ++t) {
    require(ps[t].size() == gs[t].size(), "update_params: gradient shape mismatch");
    for (double g : gs[t])
      if (!std::isfinite(g)) throw DivergenceError("update_params: non-finite gradient", state.step);
  }
  if (state.m.empty()) {
    for (auto p : ps) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < ps.size(); ++t) {
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (std::size_t i = 0; i < ps[t].size(); ++i) {
      const double g = gs[t][i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      ps[t][i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.epsilon);
    }
  }
}

}  // namespace ugraph
