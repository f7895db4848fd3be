#pragma once

// Error-minimizing structural poisoning.
//
// A surrogate GNN and the per-graph edge flips are optimized alternately, both minimizing the same
// training loss: the surrogate is trained on the currently perturbed graphs, then each graph's flips
// are re-derived from its clean version by greedy, gradient-guided edge flipping under the frozen
// surrogate. Flips that lower the loss are those that delete an edge whose adjacency gradient is
// positive or add a missing edge whose gradient is negative.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "ugraph/adam.hpp"
#include "ugraph/error.hpp"
#include "ugraph/gnn.hpp"
#include "ugraph/graph.hpp"
#include "ugraph/model.hpp"
#include "ugraph/parallel.hpp"
#include "ugraph/training.hpp"

namespace ugraph {

// kErrorMin descends the surrogate loss (unlearnable noise); kErrorMax ascends it (classic poisoning).
enum class NoiseDirection { kErrorMin, kErrorMax };

struct PoisonConfig {
  std::size_t outer_iters = 10;
  // One slow surrogate epoch per iteration keeps the surrogate from fitting the clean signal before the
  // noise is crafted; faster schedules drive the loss below stop_loss on unperturbed shortcuts.
  std::size_t inner_steps = 1;  // surrogate training epochs per outer iteration
  double lr = 1e-4;
  double stop_loss = 0.1;
  PerturbationBudget budget;
  std::uint64_t seed = 0;
  std::size_t grad_refresh_every = 1;  // flips taken per gradient evaluation
  ModelShape surrogate{Arch::kGcn, 0, 0, 32, 2};  // feature_dim / num_classes filled from the dataset
  bool reinit_surrogate = false;  // fresh surrogate weights at every outer iteration
  std::size_t jobs = 1;           // crafting threads; output does not depend on it

  void validate() const {
    require(outer_iters >= 1, "poison: outer_iters must be >= 1");
    require(inner_steps >= 1, "poison: inner_steps must be >= 1");
    require(lr > 0.0, "poison: lr must be > 0");
    require(stop_loss >= 0.0, "poison: stop_loss must be >= 0");
    require(grad_refresh_every >= 1, "poison: grad_refresh_every must be >= 1");
    budget.validate();
  }
};

namespace detail {

inline bool admissible(bool present, double grad, NoiseDirection dir) {
  if (dir == NoiseDirection::kErrorMin) return present ? grad > 0.0 : grad < 0.0;
  return present ? grad < 0.0 : grad > 0.0;
}

inline void check_symmetric(const Matrix& m, const char* what) {
  require(m.rows() == m.cols(), std::string("select_flips: ") + what + " must be square");
  for (std::size_t u = 0; u < m.rows(); ++u)
    for (std::size_t v = u + 1; v < m.cols(); ++v)
      require(m(u, v) == m(v, u), std::string("select_flips: ") + what + " is not symmetric");
}

// Ranked admissible flips, skipping pairs marked in `excluded` (n*n, may be empty).
inline std::vector<Flip> select_flips_excluding(const Matrix& grad, const Matrix& adjacency, std::size_t c,
                                                NoiseDirection dir, const std::vector<std::uint8_t>& excluded) {
  const std::size_t n = grad.rows();
  std::vector<Flip> cand;
  if (c == 0) return cand;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      if (!excluded.empty() && excluded[u * n + v]) continue;
      const bool present = adjacency(u, v) != 0.0;
      const double g = grad(u, v);
      if (!admissible(present, g, dir)) continue;
      cand.push_back({u, v, present ? FlipOp::kDelete : FlipOp::kAdd, g});
    }
  const auto by_rank = [](const Flip& a, const Flip& b) {
    const double ma = std::abs(a.grad), mb = std::abs(b.grad);
    if (ma != mb) return ma > mb;
    return std::tie(a.u, a.v) < std::tie(b.u, b.v);
  };
  const std::size_t k = std::min(c, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(), by_rank);
  cand.resize(k);
  return cand;
}

}  // namespace detail

// Top-c admissible flips by |gradient|, ties broken by (u, v). Empty when no flip can move the loss in
// the requested direction.
inline std::vector<Flip> select_flips(const Matrix& grad_adj, const Matrix& adjacency, std::size_t c,
                                      NoiseDirection dir = NoiseDirection::kErrorMin) {
  require(grad_adj.same_shape(adjacency), "select_flips: gradient and adjacency shapes differ");
  detail::check_symmetric(grad_adj, "gradient");
  detail::check_symmetric(adjacency, "adjacency");
  return detail::select_flips_excluding(grad_adj, adjacency, c, dir, {});
}

// Greedy flipping from the clean graph under a frozen model: take up to `grad_refresh_every` flips per
// gradient evaluation until `c` flips are used or no admissible flip remains. A pair is flipped at most once.
inline std::vector<Flip> craft_noise_for_graph(const Graph& clean, const ModelParams& params, std::size_t c,
                                               std::size_t grad_refresh_every,
                                               NoiseDirection dir = NoiseDirection::kErrorMin) {
  require(grad_refresh_every >= 1, "craft_noise_for_graph: grad_refresh_every must be >= 1");
  std::vector<Flip> flips;
  if (c == 0) return flips;
  const std::size_t n = clean.node_count();
  std::vector<std::uint8_t> touched(n * n, 0);
  Graph current = clean;
  while (flips.size() < c) {
    const Gradients grads = backward(current, params);
    const std::size_t take = std::min(grad_refresh_every, c - flips.size());
    const auto step =
        detail::select_flips_excluding(grads.grad_adjacency, current.adjacency_matrix(), take, dir, touched);
    if (step.empty()) break;
    current = apply_flips(current, step);
    for (const Flip& f : step) {
      touched[f.u * n + f.v] = 1;
      flips.push_back(f);
    }
  }
  return flips;
}

struct PoisonResult {
  GraphDataset dataset;
  EditLog log;
  std::vector<std::size_t> budgets;  // resolved per-graph budget
  ModelParams surrogate;             // surrogate that crafted the final flips (empty for random noise)
  std::size_t outer_iters_run = 0;
  double final_surrogate_loss = 0.0;
  bool stopped_early = false;

  std::size_t total_flips() const { return log.size(); }
};

// Mean over graphs of (flips / unordered pairs); graphs without pairs count as 0.
inline double mean_modified_fraction(const GraphDataset& ds, const EditLog& log) {
  if (ds.empty()) return 0.0;
  std::vector<std::size_t> per_graph(ds.size(), 0);
  for (const auto& e : log.entries) ++per_graph[e.graph_index];
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t pairs = ds.graphs[i].potential_pairs();
    if (pairs > 0) sum += static_cast<double>(per_graph[i]) / static_cast<double>(pairs);
  }
  return sum / static_cast<double>(ds.size());
}

namespace detail {

inline ModelShape surrogate_shape(const GraphDataset& ds, const PoisonConfig& cfg) {
  ModelShape s = cfg.surrogate;
  s.feature_dim = ds.feature_dim;
  s.num_classes = ds.num_classes;
  return s;
}

// Shared min-min / error-max loop. With `train_on_clean` the surrogate never sees the perturbations.
inline PoisonResult run_noise_loop(const GraphDataset& clean, const PoisonConfig& cfg, NoiseDirection dir,
                                   bool train_on_clean) {
  require(!clean.empty(), "poison: dataset is empty");
  clean.validate();
  cfg.validate();

  PoisonResult res;
  res.dataset = clean;
  res.budgets.reserve(clean.size());
  for (const Graph& g : clean.graphs) res.budgets.push_back(resolve_budget(g, cfg.budget));

  const bool any_budget = std::any_of(res.budgets.begin(), res.budgets.end(), [](auto c) { return c > 0; });
  if (!any_budget) return res;

  std::mt19937_64 rng(cfg.seed);
  const ModelShape shape = surrogate_shape(clean, cfg);
  ModelParams params = init_params(shape, rng);
  AdamState adam;
  std::vector<std::vector<Flip>> flips(clean.size());

  for (std::size_t it = 0; it < cfg.outer_iters; ++it) {
    if (cfg.reinit_surrogate && it > 0) {
      params = init_params(shape, rng);
      adam = AdamState{};
    }
    const std::vector<Graph>& train_graphs = train_on_clean ? clean.graphs : res.dataset.graphs;
    try {
      for (std::size_t e = 0; e < cfg.inner_steps; ++e) train_epoch(params, adam, train_graphs, rng, cfg.lr, e);
    } catch (const DivergenceError& err) {
      throw DivergenceError(std::string(err.what()) + " (outer iteration " + std::to_string(it) + ")", it);
    }

    parallel_for(clean.size(), cfg.jobs, [&](std::size_t i) {
      flips[i] = craft_noise_for_graph(clean.graphs[i], params, res.budgets[i], cfg.grad_refresh_every, dir);
    });
    for (std::size_t i = 0; i < clean.size(); ++i) res.dataset.graphs[i] = apply_flips(clean.graphs[i], flips[i]);

    res.outer_iters_run = it + 1;
    res.final_surrogate_loss = mean_loss(params, res.dataset.graphs);
    if (!std::isfinite(res.final_surrogate_loss))
      throw DivergenceError("non-finite surrogate loss (outer iteration " + std::to_string(it) + ")", it);
    if (res.final_surrogate_loss < cfg.stop_loss) {
      res.stopped_early = it + 1 < cfg.outer_iters;
      break;
    }
  }

  for (std::size_t i = 0; i < clean.size(); ++i)
    for (const Flip& f : flips[i]) res.log.entries.push_back({i, f});
  res.surrogate = std::move(params);
  return res;
}

}  // namespace detail

inline PoisonResult poison_dataset(const GraphDataset& dataset, const PoisonConfig& config) {
  return detail::run_noise_loop(dataset, config, NoiseDirection::kErrorMin, /*train_on_clean=*/false);
}

// Same loop with the flip direction reversed and a surrogate trained on clean data only.
inline PoisonResult error_max_noise(const GraphDataset& dataset, const PerturbationBudget& budget,
                                    PoisonConfig config) {
  config.budget = budget;
  return detail::run_noise_loop(dataset, config, NoiseDirection::kErrorMax, /*train_on_clean=*/true);
}

// Uniformly random distinct pairs per graph, min(c, pairs) of them; present pairs are deleted, absent added.
inline PoisonResult random_noise(const GraphDataset& dataset, const PerturbationBudget& budget, std::uint64_t seed) {
  require(!dataset.empty(), "random_noise: dataset is empty");
  dataset.validate();
  budget.validate();
  PoisonResult res;
  res.dataset = dataset;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Graph& g = dataset.graphs[i];
    const std::size_t c = std::min(resolve_budget(g, budget), g.potential_pairs());
    res.budgets.push_back(c);
    if (c == 0) continue;
    std::vector<Edge> pairs;
    pairs.reserve(g.potential_pairs());
    for (std::size_t u = 0; u < g.node_count(); ++u)
      for (std::size_t v = u + 1; v < g.node_count(); ++v) pairs.emplace_back(u, v);
    std::vector<Edge> chosen;
    chosen.reserve(c);
    std::sample(pairs.begin(), pairs.end(), std::back_inserter(chosen), c, rng);
    std::vector<Flip> flips;
    for (auto [u, v] : chosen) flips.push_back({u, v, g.has_edge(u, v) ? FlipOp::kDelete : FlipOp::kAdd, 0.0});
    res.dataset.graphs[i] = apply_flips(g, flips);
    for (const Flip& f : flips) res.log.entries.push_back({i, f});
  }
  return res;
}

// Manifest written next to poisoned outputs; `settings` echoes every effective option.
inline nlohmann::json poison_manifest(const GraphDataset& clean, const PoisonResult& res, const std::string& method,
                                      const PoisonConfig& cfg, const nlohmann::json& settings = {}) {
  nlohmann::json j;
  j["dataset"] = clean.name;
  j["method"] = method;
  j["r_V"] = cfg.budget.r_v;
  j["r_E"] = cfg.budget.r_e;
  j["T"] = cfg.outer_iters;
  j["M"] = cfg.inner_steps;
  j["lr"] = cfg.lr;
  j["rho"] = cfg.stop_loss;
  j["seed"] = cfg.seed;
  j["grad_refresh_every"] = cfg.grad_refresh_every;
  j["surrogate"] = {{"arch", to_string(cfg.surrogate.arch)},
                    {"hidden", cfg.surrogate.hidden},
                    {"layers", cfg.surrogate.layers},
                    {"reinit_each_iteration", cfg.reinit_surrogate}};
  j["per_graph_budgets"] = res.budgets;
  j["total_flips"] = res.total_flips();
  j["mean_fraction_potential_edges_modified"] = mean_modified_fraction(clean, res.log);
  j["outer_iterations_run"] = res.outer_iters_run;
  j["final_surrogate_loss"] = res.final_surrogate_loss;
  if (!settings.is_null()) j["settings"] = settings;
  return j;
}

}  // namespace ugraph
