#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"
#include "ugraph/graph.hpp"

namespace ugraph {
namespace {

using testing::random_graph;

Graph path_graph(std::size_t n) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph(n, Matrix(n, 1, 1.0), 0, edges);
}

// n nodes with exactly `m` edges taken in lexicographic pair order.
Graph graph_with_edges(std::size_t n, std::size_t m) {
  std::vector<Edge> edges;
  for (std::size_t u = 0; u < n && edges.size() < m; ++u)
    for (std::size_t v = u + 1; v < n && edges.size() < m; ++v) edges.emplace_back(u, v);
  return Graph(n, Matrix(n, 1, 1.0), 0, edges);
}

TEST(GraphTest, SetEdgeKeepsSymmetryAndRejectsSelfLoops) {
  Graph g(4, Matrix(4, 2), 1);
  g.set_edge(2, 0, true);
  EXPECT_TRUE(g.has_edge(0, 2));
  EXPECT_TRUE(g.has_edge(2, 0));
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 2}}));
  EXPECT_THROW(g.set_edge(1, 1, true), ContractViolation);
  EXPECT_THROW(g.set_edge(1, 4, true), ContractViolation);
}

TEST(GraphTest, RejectsNonFiniteFeatures) {
  Matrix x(2, 1);
  x(1, 0) = std::nan("");
  EXPECT_THROW(Graph(2, x, 0), ContractViolation);
  EXPECT_THROW(Graph(3, Matrix(2, 1), 0), ContractViolation);
}

TEST(ResolveBudgetTest, TakesTheSmallerAllowance) {
  const Graph g = graph_with_edges(10, 20);
  ASSERT_EQ(g.edge_count(), 20u);
  EXPECT_EQ(resolve_budget(g, {0.05, 0.2}), 2u);  // min(floor(2.25), floor(4))
}

TEST(ResolveBudgetTest, ZeroVertexRatioGivesZero) {
  const Graph g = graph_with_edges(10, 20);
  EXPECT_EQ(resolve_budget(g, {0.0, 5.0}), 0u);
}

TEST(ResolveBudgetTest, EdgelessGraphGivesZero) {
  EXPECT_EQ(resolve_budget(Graph(5, Matrix(5, 1), 0), {1.0, 1.0}), 0u);
}

TEST(ResolveBudgetTest, RejectsOutOfRangeRatios) {
  const Graph g = path_graph(4);
  EXPECT_THROW(resolve_budget(g, {1.5, 0.1}), ContractViolation);
  EXPECT_THROW(resolve_budget(g, {0.1, -0.1}), ContractViolation);
}

TEST(ResolveBudgetTest, MonotoneInBothRatios) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = random_graph(rng, 3 + trial % 12, 0.4, 2, 2);
    for (double rv = 0.0; rv <= 1.0; rv += 0.05)
      for (double re = 0.0; re <= 1.5; re += 0.1) {
        const std::size_t c = resolve_budget(g, {rv, re});
        EXPECT_LE(c, resolve_budget(g, {std::min(1.0, rv + 0.05), re}));
        EXPECT_LE(c, resolve_budget(g, {rv, re + 0.1}));
      }
  }
}

TEST(ApplyFlipsTest, EmptyListIsIdentity) {
  const Graph g = path_graph(5);
  EXPECT_EQ(apply_flips(g, {}), g);
}

TEST(ApplyFlipsTest, DeleteThenAdd) {
  const Graph tri(4, Matrix(4, 1, 1.0), 1, {{0, 1}, {0, 2}, {1, 2}});
  const Graph out = apply_flips(tri, {{0, 1, FlipOp::kDelete, 0.0}, {0, 3, FlipOp::kAdd, 0.0}});
  EXPECT_EQ(out.edges(), (std::vector<Edge>{{0, 2}, {0, 3}, {1, 2}}));
  EXPECT_EQ(out.features(), tri.features());
  EXPECT_EQ(out.label(), tri.label());
}

TEST(ApplyFlipsTest, InconsistentFlipNamesThePair) {
  const Graph g = path_graph(4);
  try {
    apply_flips(g, {{0, 2, FlipOp::kDelete, 0.0}});
    FAIL() << "expected InconsistencyError";
  } catch (const InconsistencyError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,2)"), std::string::npos);
  }
  EXPECT_THROW(apply_flips(g, {{0, 1, FlipOp::kAdd, 0.0}}), InconsistencyError);
  // Consistency is judged against the state left by earlier flips.
  EXPECT_THROW(apply_flips(g, {{0, 2, FlipOp::kAdd, 0.0}, {0, 2, FlipOp::kAdd, 0.0}}), InconsistencyError);
  EXPECT_NO_THROW(apply_flips(g, {{0, 2, FlipOp::kAdd, 0.0}, {0, 2, FlipOp::kDelete, 0.0}}));
  EXPECT_THROW(apply_flips(g, {{2, 1, FlipOp::kDelete, 0.0}}), InconsistencyError);
}

std::vector<Flip> random_admissible_flips(std::mt19937_64& rng, const Graph& g, std::size_t k) {
  std::vector<Edge> pairs;
  for (std::size_t u = 0; u < g.node_count(); ++u)
    for (std::size_t v = u + 1; v < g.node_count(); ++v) pairs.emplace_back(u, v);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  std::vector<Flip> flips;
  for (std::size_t i = 0; i < std::min(k, pairs.size()); ++i) {
    auto [u, v] = pairs[i];
    flips.push_back({u, v, g.has_edge(u, v) ? FlipOp::kDelete : FlipOp::kAdd, 0.0});
  }
  return flips;
}

TEST(ApplyFlipsTest, HammingDistanceIsTwicePerFlip) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = random_graph(rng, 2 + trial % 15, 0.3, 3, 2);
    const auto flips = random_admissible_flips(rng, g, static_cast<std::size_t>(trial % 7));
    const Graph out = apply_flips(g, flips);
    EXPECT_EQ(testing::hamming(g, out), 2 * flips.size());
    EXPECT_NO_THROW(testing::expect_valid_structure(out));
  }
}

TEST(ApplyFlipsTest, ReversedInverseFlipsRestoreTheGraph) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Graph g = random_graph(rng, 2 + trial % 12, 0.5, 2, 3);
    const auto flips = random_admissible_flips(rng, g, 1 + static_cast<std::size_t>(trial % 9));
    std::vector<Flip> undo;
    for (auto it = flips.rbegin(); it != flips.rend(); ++it) undo.push_back(inverted(*it));
    EXPECT_EQ(apply_flips(apply_flips(g, flips), undo), g);
  }
}

TEST(EditLogTest, CsvRoundTripAndFormat) {
  EditLog log;
  log.entries = {{0, {1, 4, FlipOp::kAdd, -0.125}}, {3, {0, 2, FlipOp::kDelete, 3.0000000000000004e-07}}};
  testing::TempDir dir("editlog");
  const auto path = (dir / "edits.csv").string();
  write_edit_log_csv(log, path);
  EXPECT_EQ(testing::read_file(path),
            "graph_index,u,v,op,grad\n"
            "0,1,4,add,-1.2500000000000000e-01\n"
            "3,0,2,delete,3.0000000000000004e-07\n");
  EXPECT_EQ(read_edit_log_csv(path), log);
}

TEST(EditLogTest, WellFormedRejectsRepeatedPairs) {
  EditLog log;
  log.entries = {{0, {1, 2, FlipOp::kAdd, -1.0}}, {1, {1, 2, FlipOp::kAdd, -1.0}}};
  EXPECT_TRUE(log.well_formed());
  log.entries.push_back({0, {1, 2, FlipOp::kDelete, 1.0}});
  EXPECT_FALSE(log.well_formed());
}

}  // namespace
}  // namespace ugraph
