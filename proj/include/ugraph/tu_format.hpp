#pragma once

// Reader/writer for the TU graph-classification flat-file format:
//   NAME_A.txt               one directed edge per line, "i, j", 1-based global node ids
//   NAME_graph_indicator.txt line i holds the 1-based graph id of node i
//   NAME_graph_labels.txt    line g holds the integer label of graph g
//   NAME_node_labels.txt     optional; line i holds the integer label of node i

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ugraph/error.hpp"
#include "ugraph/graph.hpp"

namespace ugraph {

struct TuLoadOptions {
  // Featureless datasets get one-hot degree features; degrees >= max_degree share the last bucket.
  std::size_t max_degree = 64;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline long long parse_int(std::string_view tok, const std::string& file, std::size_t line) {
  tok = trim(tok);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  long long v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError(file, line, std::string(tok));
  return v;
}

struct NumberedRow {
  std::size_t line;
  std::vector<long long> values;
};

// Reads every non-blank line as comma-separated integers.
inline std::vector<NumberedRow> read_int_rows(const std::filesystem::path& path, std::size_t expected_cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open required file '" + path.string() + "'");
  std::vector<NumberedRow> rows;
  std::string line;
  std::size_t lineno = 0;
  const std::string fname = path.filename().string();
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    NumberedRow row{lineno, {}};
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      row.values.push_back(parse_int(rest.substr(0, comma), fname, lineno));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (row.values.size() != expected_cols)
      throw FormatError(fname + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected_cols) +
                        " column(s), got " + std::to_string(row.values.size()));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::filesystem::path tu_file(const std::filesystem::path& dir, const std::string& name,
                                     const char* suffix) {
  return dir / (name + suffix);
}

inline void require_file(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) throw FormatError("missing file '" + p.string() + "'");
}

// Sorted distinct values and a lookup from value to its rank.
inline std::pair<std::vector<long long>, std::map<long long, std::size_t>> contiguous_remap(
    const std::vector<long long>& values) {
  std::vector<long long> distinct = values;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::map<long long, std::size_t> index;
  for (std::size_t i = 0; i < distinct.size(); ++i) index[distinct[i]] = i;
  return {std::move(distinct), std::move(index)};
}

}  // namespace detail

inline GraphDataset load_tu_dataset(const std::filesystem::path& dir, const std::string& name,
                                    const TuLoadOptions& opts = {}) {
  using detail::tu_file;
  const auto a_path = tu_file(dir, name, "_A.txt");
  const auto ind_path = tu_file(dir, name, "_graph_indicator.txt");
  const auto lab_path = tu_file(dir, name, "_graph_labels.txt");
  const auto node_lab_path = tu_file(dir, name, "_node_labels.txt");
  detail::require_file(a_path);
  detail::require_file(ind_path);
  detail::require_file(lab_path);
  const bool has_node_labels = std::filesystem::is_regular_file(node_lab_path);

  GraphDataset ds;
  ds.name = name;

  std::vector<long long> raw_graph_labels;
  for (auto& r : detail::read_int_rows(lab_path, 1)) raw_graph_labels.push_back(r.values[0]);
  auto [label_values, label_index] = detail::contiguous_remap(raw_graph_labels);
  const std::size_t num_graphs = raw_graph_labels.size();
  ds.graph_label_values = label_values;
  ds.num_classes = label_values.size();

  // node -> (graph, local index)
  const auto ind_rows = detail::read_int_rows(ind_path, 1);
  const std::size_t num_nodes = ind_rows.size();
  std::vector<std::size_t> node_graph(num_nodes), node_local(num_nodes);
  std::vector<std::size_t> graph_sizes(num_graphs, 0);
  for (std::size_t i = 0; i < num_nodes; ++i) {
    const long long gid = ind_rows[i].values[0];
    if (gid < 1 || static_cast<std::size_t>(gid) > num_graphs)
      throw FormatError(ind_path.filename().string() + ":" + std::to_string(ind_rows[i].line) + ": node " +
                        std::to_string(i + 1) + " references nonexistent graph " + std::to_string(gid));
    node_graph[i] = static_cast<std::size_t>(gid - 1);
    node_local[i] = graph_sizes[node_graph[i]]++;
  }

  std::vector<std::size_t> node_label_idx;
  if (has_node_labels) {
    const auto rows = detail::read_int_rows(node_lab_path, 1);
    if (rows.size() != num_nodes)
      throw FormatError(node_lab_path.filename().string() + ": " + std::to_string(rows.size()) +
                        " node labels for " + std::to_string(num_nodes) + " nodes");
    std::vector<long long> raw;
    raw.reserve(rows.size());
    for (auto& r : rows) raw.push_back(r.values[0]);
    auto [values, index] = detail::contiguous_remap(raw);
    ds.node_label_values = values;
    node_label_idx.reserve(raw.size());
    for (long long v : raw) node_label_idx.push_back(index.at(v));
    ds.feature_source = FeatureSource::kNodeLabels;
    ds.feature_dim = values.size();
  } else {
    ds.feature_source = FeatureSource::kDegree;
    ds.feature_dim = opts.max_degree + 1;
  }

  std::vector<std::vector<Edge>> graph_edges(num_graphs);
  std::unordered_set<std::uint64_t> seen;
  const std::string a_name = a_path.filename().string();
  for (const auto& r : detail::read_int_rows(a_path, 2)) {
    const long long i = r.values[0], j = r.values[1];
    const auto where = a_name + ":" + std::to_string(r.line) + ": ";
    if (i < 1 || j < 1 || static_cast<std::size_t>(i) > num_nodes || static_cast<std::size_t>(j) > num_nodes)
      throw FormatError(where + "node id out of range 1.." + std::to_string(num_nodes));
    if (i == j) throw FormatError(where + "self-loop on node " + std::to_string(i));
    const auto ui = static_cast<std::size_t>(i - 1), uj = static_cast<std::size_t>(j - 1);
    if (node_graph[ui] != node_graph[uj]) throw FormatError(where + "edge crosses graph boundary");
    if (!seen.insert((static_cast<std::uint64_t>(ui) << 32) | uj).second)
      throw FormatError(where + "duplicate edge (multi-edges are not supported)");
    // Both directions are normally listed; keep the undirected pair once.
    if (seen.count((static_cast<std::uint64_t>(uj) << 32) | ui)) continue;
    auto a = node_local[ui], b = node_local[uj];
    graph_edges[node_graph[ui]].emplace_back(std::min(a, b), std::max(a, b));
  }

  std::vector<std::vector<std::size_t>> graph_nodes(num_graphs);
  for (std::size_t i = 0; i < num_nodes; ++i) graph_nodes[node_graph[i]].push_back(i);

  ds.graphs.reserve(num_graphs);
  for (std::size_t g = 0; g < num_graphs; ++g) {
    const std::size_t n = graph_sizes[g];
    std::vector<std::size_t> degree(n, 0);
    for (auto [u, v] : graph_edges[g]) ++degree[u], ++degree[v];
    Matrix feats(n, ds.feature_dim);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t col =
          has_node_labels ? node_label_idx[graph_nodes[g][k]] : std::min(degree[k], opts.max_degree);
      feats(k, col) = 1.0;
    }
    ds.graphs.emplace_back(n, std::move(feats), label_index.at(raw_graph_labels[g]), graph_edges[g]);
  }
  return ds;
}

inline void save_tu_dataset(const GraphDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());

  auto open = [&](const char* suffix) {
    const auto p = detail::tu_file(dir, ds.name, suffix);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
    return out;
  };
  const bool write_node_labels = ds.feature_source == FeatureSource::kNodeLabels;
  auto a_out = open("_A.txt");
  auto ind_out = open("_graph_indicator.txt");
  auto lab_out = open("_graph_labels.txt");
  std::ofstream node_out;
  if (write_node_labels) {
    node_out = open("_node_labels.txt");
  } else {
    std::filesystem::remove(detail::tu_file(dir, ds.name, "_node_labels.txt"), ec);
  }

  std::size_t offset = 0;
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& graph = ds.graphs[g];
    const std::size_t n = graph.node_count();
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        if (graph.has_edge(u, v)) a_out << (offset + u + 1) << ", " << (offset + v + 1) << '\n';
    for (std::size_t u = 0; u < n; ++u) {
      ind_out << (g + 1) << '\n';
      if (write_node_labels) {
        auto row = graph.features().row(u);
        const auto idx = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        node_out << (idx < ds.node_label_values.size() ? ds.node_label_values[idx] : static_cast<long long>(idx))
                 << '\n';
      }
    }
    const std::size_t c = graph.label();
    lab_out << (c < ds.graph_label_values.size() ? ds.graph_label_values[c] : static_cast<long long>(c)) << '\n';
    offset += n;
  }
  for (auto* s : {&a_out, &ind_out, &lab_out})
    if (!*s) throw IoError("write failed in '" + dir.string() + "'");
  if (write_node_labels && !node_out) throw IoError("write failed in '" + dir.string() + "'");
}

}  // namespace ugraph
