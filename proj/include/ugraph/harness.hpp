#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
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

struct TrainConfig {
  Arch arch = Arch::kGcn;
  std::size_t epochs = 200;
  double lr = 0.01;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  std::size_t hidden = 32;
  std::size_t layers = 2;

  void validate() const {
    require(epochs >= 1, "train: epochs must be >= 1");
    require(lr > 0.0, "train: lr must be > 0");
    require(train_fraction > 0.0 && train_fraction < 1.0, "train: train_fraction must lie in (0, 1)");
  }
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Stratified shuffle split. Every class keeps at least one graph on each side.
inline SplitIndices split_indices(const GraphDataset& ds, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "split: train_fraction must lie in (0, 1)");
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.graphs[i].label()].push_back(i);
  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2)
      throw StratificationError("split: class " + std::to_string(label) + " has fewer than 2 graphs");
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
    const std::size_t n_train = std::clamp<std::size_t>(k, 1, idx.size() - 1);
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

inline GraphDataset subset(const GraphDataset& ds, const std::vector<std::size_t>& idx) {
  GraphDataset out = ds;
  out.graphs.clear();
  out.graphs.reserve(idx.size());
  for (std::size_t i : idx) out.graphs.push_back(ds.graphs.at(i));
  return out;
}

inline std::pair<GraphDataset, GraphDataset> split_dataset(const GraphDataset& ds, double train_fraction,
                                                           std::uint64_t seed) {
  const SplitIndices s = split_indices(ds, train_fraction, seed);
  return {subset(ds, s.train), subset(ds, s.test)};
}

inline ModelParams train_victim(const GraphDataset& train_set, const TrainConfig& cfg) {
  cfg.validate();
  require(!train_set.empty(), "train_victim: empty training set");
  train_set.validate();
  std::mt19937_64 rng(cfg.seed);
  ModelParams params =
      init_params(ModelShape{cfg.arch, train_set.feature_dim, train_set.num_classes, cfg.hidden, cfg.layers}, rng);
  AdamState adam;
  for (std::size_t e = 0; e < cfg.epochs; ++e) train_epoch(params, adam, train_set.graphs, rng, cfg.lr, e);
  return params;
}

inline std::size_t predict(const Graph& g, const ModelParams& params) {
  const auto logits = forward(g, params).logits;
  // max_element returns the first maximum, i.e. the lowest class index on ties.
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

inline double evaluate(const ModelParams& params, const GraphDataset& test_set) {
  require(!test_set.empty(), "evaluate: empty test set");
  require(test_set.feature_dim == params.feature_dim(), "evaluate: feature dim mismatch");
  std::size_t correct = 0;
  for (const Graph& g : test_set.graphs) correct += predict(g, params) == g.label() ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(test_set.size());
}

struct EvalRow {
  std::string variant;
  Arch arch = Arch::kGcn;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;

  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

struct Aggregate {
  std::string variant;
  Arch arch = Arch::kGcn;
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct EditStats {
  std::string variant;
  double mean_flips_per_graph = 0.0;
  double fraction_potential_edges_modified = 0.0;
};

struct OrderingCheck {
  Arch arch = Arch::kGcn;
  std::string relation;  // "a < b" over mean accuracies
  bool holds = false;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<Aggregate> aggregates;
  std::vector<EditStats> edit_stats;
  std::vector<OrderingCheck> ordering;
  nlohmann::json config;

  const Aggregate* find(const std::string& variant, Arch arch) const {
    for (const auto& a : aggregates)
      if (a.variant == variant && a.arch == arch) return &a;
    return nullptr;
  }
};

// Mean and population std per (variant, arch), in first-appearance order of the rows.
inline std::vector<Aggregate> aggregate_rows(const std::vector<EvalRow>& rows) {
  std::vector<Aggregate> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const Aggregate& a) { return a.variant == r.variant && a.arch == r.arch; });
    if (it == out.end()) {
      out.push_back({r.variant, r.arch, 0, 0.0, 0.0});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(r.test_accuracy);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    out[i].count = v.size();
    out[i].mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - out[i].mean) * (x - out[i].mean);
    out[i].std = std::sqrt(ss / static_cast<double>(v.size()));
  }
  return out;
}

// Expected accuracy ordering eminS < random < clean (and errmax < clean); violations are reported only.
inline std::vector<OrderingCheck> ordering_checks(const std::vector<Aggregate>& aggs, const std::vector<Arch>& archs) {
  static const std::pair<const char*, const char*> kRelations[] = {
      {"eminS", "random"}, {"random", "clean"}, {"eminS", "clean"}, {"errmax", "clean"}};
  std::vector<OrderingCheck> out;
  for (Arch arch : archs)
    for (auto [lo, hi] : kRelations) {
      const Aggregate *a = nullptr, *b = nullptr;
      for (const auto& g : aggs) {
        if (g.arch != arch) continue;
        if (g.variant == lo) a = &g;
        if (g.variant == hi) b = &g;
      }
      if (a && b) out.push_back({arch, std::string(lo) + " < " + hi, a->mean < b->mean});
    }
  return out;
}

inline void check_variant(const GraphDataset& clean, const GraphDataset& v, const std::string& name) {
  auto fail = [&](const std::string& why) { throw ConsistencyError("variant '" + name + "': " + why); };
  if (v.size() != clean.size()) fail("graph count differs from clean");
  if (v.feature_dim != clean.feature_dim) fail("feature dimension differs from clean");
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (v.graphs[i].label() != clean.graphs[i].label()) fail("label of graph " + std::to_string(i) + " differs");
    if (v.graphs[i].node_count() != clean.graphs[i].node_count())
      fail("node count of graph " + std::to_string(i) + " differs");
  }
}

inline EditStats edit_stats(const GraphDataset& clean, const GraphDataset& v, const std::string& name) {
  EditStats s{name, 0.0, 0.0};
  if (clean.empty()) return s;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Graph &a = clean.graphs[i], &b = v.graphs[i];
    std::size_t diff = 0;
    for (std::size_t x = 0; x < a.node_count(); ++x)
      for (std::size_t y = x + 1; y < a.node_count(); ++y) diff += a.has_edge(x, y) != b.has_edge(x, y) ? 1 : 0;
    s.mean_flips_per_graph += static_cast<double>(diff);
    if (a.potential_pairs() > 0)
      s.fraction_potential_edges_modified += static_cast<double>(diff) / static_cast<double>(a.potential_pairs());
  }
  s.mean_flips_per_graph /= static_cast<double>(clean.size());
  s.fraction_potential_edges_modified /= static_cast<double>(clean.size());
  return s;
}

using Variants = std::vector<std::pair<std::string, GraphDataset>>;

// Every (variant, arch, seed) cell: split the clean data with `seed`, train on the variant's copies of the
// train indices, test on the clean test side. Rows come out in (variant, arch, seed) order.
inline EvalReport run_experiment(const GraphDataset& clean, const Variants& variants, const std::vector<Arch>& archs,
                                 const std::vector<std::uint64_t>& seeds, const TrainConfig& base,
                                 std::size_t jobs = 1) {
  base.validate();
  require(!variants.empty() && !archs.empty() && !seeds.empty(), "run_experiment: empty matrix");
  for (const auto& [name, ds] : variants) check_variant(clean, ds, name);

  struct Cell {
    std::size_t variant;
    Arch arch;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < variants.size(); ++v)
    for (Arch a : archs)
      for (auto s : seeds) cells.push_back({v, a, s});

  std::vector<EvalRow> rows(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    const SplitIndices split = split_indices(clean, base.train_fraction, c.seed);
    const GraphDataset train = subset(variants[c.variant].second, split.train);
    const GraphDataset test = subset(clean, split.test);
    TrainConfig cfg = base;
    cfg.arch = c.arch;
    cfg.seed = c.seed;
    const ModelParams params = train_victim(train, cfg);
    rows[i] = {variants[c.variant].first, c.arch, c.seed, evaluate(params, test)};
  });

  EvalReport rep;
  rep.rows = std::move(rows);
  rep.aggregates = aggregate_rows(rep.rows);
  for (const auto& [name, ds] : variants) rep.edit_stats.push_back(edit_stats(clean, ds, name));
  rep.ordering = ordering_checks(rep.aggregates, archs);
  rep.config = {{"dataset", clean.name},
                {"epochs", base.epochs},
                {"lr", base.lr},
                {"train_fraction", base.train_fraction},
                {"hidden", base.hidden},
                {"layers", base.layers},
                {"seeds", seeds}};
  return rep;
}

inline std::string format_accuracy(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", a);
  return buf;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["config"] = r.config;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back(
        {{"variant", row.variant}, {"arch", to_string(row.arch)}, {"seed", row.seed}, {"test_accuracy", row.test_accuracy}});
  j["aggregates"] = nlohmann::json::array();
  for (const auto& a : r.aggregates)
    j["aggregates"].push_back(
        {{"variant", a.variant}, {"arch", to_string(a.arch)}, {"count", a.count}, {"mean", a.mean}, {"std", a.std}});
  j["edit_stats"] = nlohmann::json::array();
  for (const auto& s : r.edit_stats)
    j["edit_stats"].push_back({{"variant", s.variant},
                               {"mean_flips_per_graph", s.mean_flips_per_graph},
                               {"fraction_potential_edges_modified", s.fraction_potential_edges_modified}});
  j["ordering_checks"] = nlohmann::json::array();
  for (const auto& o : r.ordering)
    j["ordering_checks"].push_back({{"arch", to_string(o.arch)}, {"relation", o.relation}, {"holds", o.holds}});
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.config = j.at("config");
    for (const auto& row : j.at("rows"))
      r.rows.push_back({row.at("variant").get<std::string>(), parse_arch(row.at("arch").get<std::string>()),
                        row.at("seed").get<std::uint64_t>(), row.at("test_accuracy").get<double>()});
    for (const auto& a : j.at("aggregates"))
      r.aggregates.push_back({a.at("variant").get<std::string>(), parse_arch(a.at("arch").get<std::string>()),
                              a.at("count").get<std::size_t>(), a.at("mean").get<double>(), a.at("std").get<double>()});
    for (const auto& s : j.at("edit_stats"))
      r.edit_stats.push_back({s.at("variant").get<std::string>(), s.at("mean_flips_per_graph").get<double>(),
                              s.at("fraction_potential_edges_modified").get<double>()});
    for (const auto& o : j.at("ordering_checks"))
      r.ordering.push_back({parse_arch(o.at("arch").get<std::string>()), o.at("relation").get<std::string>(),
                            o.at("holds").get<bool>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
  return r;
}

inline std::string report_to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "variant,arch,seed,test_accuracy\n";
  for (const auto& row : r.rows)
    out << row.variant << ',' << to_string(row.arch) << ',' << row.seed << ',' << format_accuracy(row.test_accuracy)
        << '\n';
  return out.str();
}

// Human-readable aggregate table.
inline std::string report_table(const EvalReport& r) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-5s %6s %8s %8s\n", "variant", "arch", "runs", "mean", "std");
  out << line;
  for (const auto& a : r.aggregates) {
    std::snprintf(line, sizeof line, "%-12s %-5s %6zu %8s %8s\n", a.variant.c_str(), to_string(a.arch).c_str(),
                  a.count, format_accuracy(a.mean).c_str(), format_accuracy(a.std).c_str());
    out << line;
  }
  for (const auto& s : r.edit_stats) {
    std::snprintf(line, sizeof line, "edits %-12s flips/graph %.3f  fraction of pairs %.4f\n", s.variant.c_str(),
                  s.mean_flips_per_graph, s.fraction_potential_edges_modified);
    out << line;
  }
  for (const auto& o : r.ordering)
    out << "ordering " << to_string(o.arch) << ": " << o.relation << (o.holds ? "  ok" : "  VIOLATED") << '\n';
  return out.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace ugraph
