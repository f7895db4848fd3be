#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ugraph/adam.hpp"
#include "ugraph/error.hpp"
#include "ugraph/gnn.hpp"
#include "ugraph/graph.hpp"
#include "ugraph/model.hpp"

namespace ugraph {

// One pass of per-graph Adam steps in a freshly shuffled order. Returns the mean pre-step loss.
inline double train_epoch(ModelParams& params, AdamState& state, const std::vector<Graph>& graphs,
                          std::mt19937_64& rng, double lr, std::size_t epoch) {
  require(!graphs.empty(), "train_epoch: no graphs");
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  double total = 0.0;
  for (std::size_t idx : order) {
    const Graph& g = graphs[idx];
    auto fwd = forward(g, params);
    for (double v : fwd.logits)
      if (!std::isfinite(v)) throw DivergenceError("non-finite logits in epoch " + std::to_string(epoch), epoch);
    const double l = cross_entropy(fwd.logits, g.label());
    if (!std::isfinite(l)) throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch), epoch);
    total += l;
    const Gradients grads = backward(g, params, fwd.cache, g.label());
    update_params(params, grads.grad_params, state, lr);
  }
  return total / static_cast<double>(graphs.size());
}

inline double mean_loss(const ModelParams& params, const std::vector<Graph>& graphs) {
  if (graphs.empty()) return 0.0;
  double total = 0.0;
  for (const Graph& g : graphs) total += loss(g, params);
  return total / static_cast<double>(graphs.size());
}

}  // namespace ugraph
