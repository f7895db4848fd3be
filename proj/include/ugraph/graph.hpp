#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "ugraph/error.hpp"
#include "ugraph/matrix.hpp"

namespace ugraph {

using Edge = std::pair<std::size_t, std::size_t>;  // unordered pair stored with first < second

// One graph-classification instance: undirected, self-loop free, dense adjacency.
class Graph {
 public:
  Graph() = default;

  Graph(std::size_t node_count, Matrix features, std::size_t label)
      : n_(node_count), adj_(node_count * node_count, 0), features_(std::move(features)), label_(label) {
    require(features_.rows() == n_, "graph: feature rows " + std::to_string(features_.rows()) +
                                        " != node count " + std::to_string(n_));
    require(features_.all_finite(), "graph: non-finite feature entry");
  }

  Graph(std::size_t node_count, Matrix features, std::size_t label, const std::vector<Edge>& edges)
      : Graph(node_count, std::move(features), label) {
    for (auto [u, v] : edges) set_edge(u, v, true);
  }

  std::size_t node_count() const noexcept { return n_; }
  std::size_t label() const noexcept { return label_; }
  const Matrix& features() const noexcept { return features_; }
  std::size_t feature_dim() const noexcept { return features_.cols(); }

  bool has_edge(std::size_t u, std::size_t v) const { return adj_[u * n_ + v] != 0; }

  void set_edge(std::size_t u, std::size_t v, bool present) {
    require(u < n_ && v < n_, "graph: node index out of range");
    require(u != v, "graph: self-loops are not allowed");
    adj_[u * n_ + v] = adj_[v * n_ + u] = present ? 1 : 0;
  }

  std::size_t edge_count() const {
    std::size_t twice = 0;
    for (auto a : adj_) twice += a;
    return twice / 2;
  }

  std::size_t degree(std::size_t u) const {
    std::size_t d = 0;
    for (std::size_t v = 0; v < n_; ++v) d += adj_[u * n_ + v];
    return d;
  }

  // Number of unordered node pairs, n(n-1)/2.
  std::size_t potential_pairs() const noexcept { return n_ < 2 ? 0 : n_ * (n_ - 1) / 2; }

  // Sorted list of undirected edges (u < v).
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t v = u + 1; v < n_; ++v)
        if (has_edge(u, v)) out.emplace_back(u, v);
    return out;
  }

  // Adjacency as a real matrix (0/1 entries).
  Matrix adjacency_matrix() const {
    Matrix a(n_, n_);
    for (std::size_t i = 0; i < adj_.size(); ++i) a.flat()[i] = adj_[i];
    return a;
  }

  bool same_structure(const Graph& o) const { return n_ == o.n_ && adj_ == o.adj_; }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adj_;
  Matrix features_;
  std::size_t label_ = 0;
};

enum class FeatureSource { kNodeLabels, kDegree };

struct GraphDataset {
  std::vector<Graph> graphs;
  std::size_t num_classes = 0;
  std::size_t feature_dim = 0;
  std::string name;

  FeatureSource feature_source = FeatureSource::kDegree;
  // Original integer labels from the source files, indexed by the remapped class / node-label index.
  std::vector<long long> graph_label_values;
  std::vector<long long> node_label_values;

  std::size_t size() const noexcept { return graphs.size(); }
  bool empty() const noexcept { return graphs.empty(); }

  void validate() const {
    for (std::size_t i = 0; i < graphs.size(); ++i) {
      require(graphs[i].label() < num_classes,
              "dataset: graph " + std::to_string(i) + " label out of range");
      require(graphs[i].feature_dim() == feature_dim,
              "dataset: graph " + std::to_string(i) + " feature dim mismatch");
    }
  }
};

struct PerturbationBudget {
  double r_v = 0.05;  // fraction of unordered potential pairs
  double r_e = 0.2;   // fraction of existing edges

  void validate() const {
    require(r_v >= 0.0 && r_v <= 1.0, "budget: r_V must lie in [0, 1]");
    require(r_e >= 0.0, "budget: r_E must be non-negative");
  }
};

// Per-graph flip budget: the smaller of the vertex-based and edge-based allowances.
inline std::size_t resolve_budget(const Graph& g, const PerturbationBudget& b) {
  b.validate();
  const double by_pairs = std::floor(b.r_v * static_cast<double>(g.potential_pairs()));
  const double by_edges = std::floor(b.r_e * static_cast<double>(g.edge_count()));
  return static_cast<std::size_t>(std::min(by_pairs, by_edges));
}

enum class FlipOp { kAdd, kDelete };

inline const char* to_string(FlipOp op) { return op == FlipOp::kAdd ? "add" : "delete"; }

struct Flip {
  std::size_t u = 0;
  std::size_t v = 0;
  FlipOp op = FlipOp::kAdd;
  double grad = 0.0;

  friend bool operator==(const Flip&, const Flip&) = default;
};

inline Flip inverted(Flip f) {
  f.op = f.op == FlipOp::kAdd ? FlipOp::kDelete : FlipOp::kAdd;
  return f;
}

// Applies flips in order. Each flip must be consistent with the graph state left by its predecessors.
inline Graph apply_flips(const Graph& g, const std::vector<Flip>& flips) {
  Graph out = g;
  for (const Flip& f : flips) {
    const std::string pair = "(" + std::to_string(f.u) + "," + std::to_string(f.v) + ")";
    if (f.u >= f.v || f.v >= g.node_count())
      throw InconsistencyError("flip " + pair + ": require u < v < node_count");
    const bool present = out.has_edge(f.u, f.v);
    if (f.op == FlipOp::kDelete && !present)
      throw InconsistencyError("flip " + pair + ": DELETE of absent edge");
    if (f.op == FlipOp::kAdd && present)
      throw InconsistencyError("flip " + pair + ": ADD of present edge");
    out.set_edge(f.u, f.v, f.op == FlipOp::kAdd);
  }
  return out;
}

struct EditEntry {
  std::size_t graph_index = 0;
  Flip flip;

  friend bool operator==(const EditEntry&, const EditEntry&) = default;
};

struct EditLog {
  std::vector<EditEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }

  std::vector<Flip> flips_for(std::size_t graph_index) const {
    std::vector<Flip> out;
    for (const auto& e : entries)
      if (e.graph_index == graph_index) out.push_back(e.flip);
    return out;
  }

  // No unordered pair appears twice for the same graph.
  bool well_formed() const {
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
    for (const auto& e : entries)
      if (!seen.emplace(e.graph_index, e.flip.u, e.flip.v).second) return false;
    return true;
  }

  friend bool operator==(const EditLog&, const EditLog&) = default;
};

inline std::string format_grad(double g) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", g);
  return buf;
}

// CSV: graph_index,u,v,op,grad (0-based, op in {add,delete}, grad in scientific notation).
inline void write_edit_log_csv(const EditLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "graph_index,u,v,op,grad\n";
  for (const auto& e : log.entries)
    out << e.graph_index << ',' << e.flip.u << ',' << e.flip.v << ',' << to_string(e.flip.op) << ','
        << format_grad(e.flip.grad) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline EditLog read_edit_log_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  EditLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    if (cols.size() != 5) throw FormatError(path + ":" + std::to_string(lineno) + ": expected 5 columns");
    auto to_index = [&](const std::string& s) {
      std::size_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw ParseError(path, lineno, s);
      return v;
    };
    EditEntry e;
    e.graph_index = to_index(cols[0]);
    e.flip.u = to_index(cols[1]);
    e.flip.v = to_index(cols[2]);
    if (cols[3] == "add") e.flip.op = FlipOp::kAdd;
    else if (cols[3] == "delete") e.flip.op = FlipOp::kDelete;
    else throw FormatError(path + ":" + std::to_string(lineno) + ": unknown op '" + cols[3] + "'");
    e.flip.grad = std::stod(cols[4]);
    log.entries.push_back(e);
  }
  return log;
}

}  // namespace ugraph
