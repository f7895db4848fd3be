#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

namespace ugraph {
namespace {

GraphDataset labelled(const std::vector<std::size_t>& labels, std::size_t num_classes, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  GraphDataset ds;
  ds.name = "LAB";
  ds.num_classes = num_classes;
  ds.feature_dim = 3;
  for (std::size_t c : labels) {
    Graph g = testing::random_graph(rng, 4 + ds.graphs.size() % 5, 0.4, 3, 1);
    ds.graphs.emplace_back(g.node_count(), g.features(), c, g.edges());
  }
  return ds;
}

TEST(SplitTest, PerClassCountsFollowRounding) {
  // 5 of class 0, 3 of class 1 at 0.8: llround(4.0) = 4 and llround(2.4) = 2.
  const GraphDataset ds = labelled({0, 0, 0, 0, 0, 1, 1, 1}, 2);
  const SplitIndices s = split_indices(ds, 0.8, 0);
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.test.size(), 2u);
  std::size_t train0 = 0;
  for (std::size_t i : s.train) train0 += ds.graphs[i].label() == 0 ? 1 : 0;
  EXPECT_EQ(train0, 4u);
}

TEST(SplitTest, EveryClassKeepsATestGraph) {
  // Two per class: llround(1.8) = 2 is clamped to 1.
  const GraphDataset ds = labelled({0, 1, 2, 0, 1, 2}, 3);
  const SplitIndices s = split_indices(ds, 0.9, 3);
  std::set<std::size_t> test_classes;
  for (std::size_t i : s.test) test_classes.insert(ds.graphs[i].label());
  EXPECT_EQ(test_classes.size(), 3u);
  EXPECT_EQ(s.train.size(), 3u);
}

TEST(SplitTest, DisjointCoveringAndSeeded) {
  const GraphDataset& ds = testing::mutag();
  const SplitIndices a = split_indices(ds, 0.8, 1);
  const SplitIndices b = split_indices(ds, 0.8, 1);
  EXPECT_EQ(a.train, b.train);
  EXPECT_NE(split_indices(ds, 0.8, 2).train, a.train);
  std::vector<std::size_t> all = a.train;
  all.insert(all.end(), a.test.begin(), a.test.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  EXPECT_EQ(all.size(), ds.size());
}

TEST(SplitTest, SingletonClassCannotBeStratified) {
  EXPECT_THROW(split_indices(labelled({0, 0, 0, 1}, 2), 0.8, 0), StratificationError);
  EXPECT_THROW(split_indices(labelled({0, 0, 1, 1}, 2), 1.0, 0), ContractViolation);
}

TEST(TrainVictimTest, MemorizesASingleGraph) {
  GraphDataset ds = labelled({1}, 2, 4);
  TrainConfig cfg;
  cfg.epochs = 200;
  for (Arch arch : {Arch::kGcn, Arch::kGin}) {
    cfg.arch = arch;
    const ModelParams p = train_victim(ds, cfg);
    EXPECT_LT(loss(ds.graphs[0], p), 0.01) << to_string(arch);
    EXPECT_EQ(evaluate(p, ds), 1.0);
  }
}

TEST(TrainVictimTest, RejectsBadConfig) {
  const GraphDataset ds = labelled({0, 1}, 2);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train_victim(ds, cfg), ContractViolation);
  cfg = TrainConfig{};
  cfg.lr = 0.0;
  EXPECT_THROW(train_victim(ds, cfg), ContractViolation);
  EXPECT_THROW(train_victim(GraphDataset{}, TrainConfig{}), ContractViolation);
}

TEST(TrainVictimTest, DeterministicPerSeed) {
  const GraphDataset ds = labelled({0, 1, 0, 1, 0, 1}, 2, 5);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 9;
  EXPECT_EQ(train_victim(ds, cfg), train_victim(ds, cfg));
  TrainConfig other = cfg;
  other.seed = 10;
  EXPECT_NE(train_victim(ds, other), train_victim(ds, cfg));
}

TEST(EvaluateTest, BiasOnlyModelPredictsOneClass) {
  const GraphDataset ds = labelled({0, 1, 0, 1}, 2);
  ModelParams p = init_params(ModelShape{Arch::kGcn, 3, 2, 4, 2}, std::uint64_t{0});
  for (double& v : p.classifier_weight.flat()) v = 0.0;
  p.classifier_bias = {0.0, 1.0};
  EXPECT_DOUBLE_EQ(evaluate(p, ds), 0.5);
  p.classifier_bias = {0.0, 0.0};  // tie goes to the lowest class index
  EXPECT_EQ(predict(ds.graphs[1], p), 0u);
  EXPECT_THROW(evaluate(p, subset(ds, {})), ContractViolation);
}

Variants perturbed_variants(const GraphDataset& clean) {
  PoisonConfig cfg;
  cfg.outer_iters = 2;
  return {{"clean", clean}, {"random", random_noise(clean, cfg.budget, 1).dataset},
          {"eminS", poison_dataset(clean, cfg).dataset}};
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.hidden = 8;
  return cfg;
}

TEST(ExperimentTest, RowsCoverTheMatrixInOrder) {
  const GraphDataset& clean = testing::mutag();
  const Variants variants = perturbed_variants(clean);
  const EvalReport rep = run_experiment(clean, variants, {Arch::kGcn, Arch::kGin}, {0, 1}, quick_config());
  ASSERT_EQ(rep.rows.size(), 12u);
  EXPECT_EQ(rep.rows[0].variant, "clean");
  EXPECT_EQ(rep.rows[2].arch, Arch::kGin);
  EXPECT_EQ(rep.rows[5].seed, 1u);
  EXPECT_EQ(rep.rows[11].variant, "eminS");
  EXPECT_EQ(rep.aggregates.size(), 6u);
  EXPECT_EQ(rep.edit_stats.size(), 3u);
  EXPECT_EQ(rep.edit_stats[0].mean_flips_per_graph, 0.0);
  EXPECT_GT(rep.edit_stats[2].mean_flips_per_graph, 0.0);
  EXPECT_EQ(rep.ordering.size(), 6u);  // three relations per arch; errmax absent
}

TEST(ExperimentTest, AggregatesRecomputeFromRows) {
  const GraphDataset& clean = testing::mutag();
  const EvalReport rep = run_experiment(clean, perturbed_variants(clean), {Arch::kGcn}, {0, 1, 2}, quick_config());
  for (const Aggregate& a : rep.aggregates) {
    std::vector<double> v;
    for (const EvalRow& r : rep.rows)
      if (r.variant == a.variant && r.arch == a.arch) v.push_back(r.test_accuracy);
    ASSERT_EQ(v.size(), a.count);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    EXPECT_NEAR(a.mean, mean, 1e-12);
    EXPECT_NEAR(a.std, std::sqrt(var / static_cast<double>(v.size())), 1e-12);
  }
  for (const OrderingCheck& o : rep.ordering) {
    const auto lt = o.relation.find(" < ");
    const Aggregate* lo = rep.find(o.relation.substr(0, lt), o.arch);
    const Aggregate* hi = rep.find(o.relation.substr(lt + 3), o.arch);
    ASSERT_TRUE(lo && hi);
    EXPECT_EQ(o.holds, lo->mean < hi->mean);
  }
}

TEST(ExperimentTest, ZeroBudgetVariantMatchesClean) {
  const GraphDataset& clean = testing::mutag();
  PoisonConfig cfg;
  cfg.budget = {0.0, 0.2};
  const Variants variants{{"clean", clean}, {"eminS", poison_dataset(clean, cfg).dataset}};
  const EvalReport rep = run_experiment(clean, variants, {Arch::kGcn}, {0, 1}, quick_config());
  EXPECT_EQ(rep.rows[0].test_accuracy, rep.rows[2].test_accuracy);
  EXPECT_EQ(rep.rows[1].test_accuracy, rep.rows[3].test_accuracy);
}

TEST(ExperimentTest, TestsOnCleanGraphsWithTheSeededSplit) {
  const GraphDataset& clean = testing::mutag();
  const Variants variants = perturbed_variants(clean);
  const TrainConfig base = quick_config();
  const EvalReport rep = run_experiment(clean, variants, {Arch::kGcn}, {4}, base);
  const SplitIndices split = split_indices(clean, base.train_fraction, 4);
  TrainConfig cfg = base;
  cfg.seed = 4;
  const ModelParams p = train_victim(subset(variants[2].second, split.train), cfg);
  EXPECT_EQ(rep.rows[2].test_accuracy, evaluate(p, subset(clean, split.test)));
}

TEST(ExperimentTest, InconsistentVariantIsRejected) {
  const GraphDataset& clean = testing::mutag();
  GraphDataset shorter = clean;
  shorter.graphs.pop_back();
  EXPECT_THROW(run_experiment(clean, {{"bad", shorter}}, {Arch::kGcn}, {0}, quick_config()), ConsistencyError);
  GraphDataset relabelled = clean;
  const Graph& g0 = clean.graphs[0];
  relabelled.graphs[0] = Graph(g0.node_count(), g0.features(), 1 - g0.label(), g0.edges());
  EXPECT_THROW(run_experiment(clean, {{"bad", relabelled}}, {Arch::kGcn}, {0}, quick_config()), ConsistencyError);
  EXPECT_THROW(run_experiment(clean, {}, {Arch::kGcn}, {0}, quick_config()), ContractViolation);
}

TEST(ExperimentTest, ReportSerializationRoundTripsAndIsReproducible) {
  const GraphDataset& clean = testing::mutag();
  const Variants variants = perturbed_variants(clean);
  const EvalReport a = run_experiment(clean, variants, {Arch::kGcn, Arch::kGin}, {0}, quick_config(), 1);
  const EvalReport b = run_experiment(clean, variants, {Arch::kGcn, Arch::kGin}, {0}, quick_config(), 3);
  EXPECT_EQ(report_to_json(a).dump(2), report_to_json(b).dump(2));
  EXPECT_EQ(report_to_csv(a), report_to_csv(b));
  const EvalReport back = report_from_json(nlohmann::json::parse(report_to_json(a).dump()));
  EXPECT_EQ(back.rows, a.rows);
  EXPECT_EQ(report_to_json(back).dump(), report_to_json(a).dump());
  const std::string csv = report_to_csv(a);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "variant,arch,seed,test_accuracy");
  EXPECT_NE(csv.find("clean,gcn,0," + format_accuracy(a.rows[0].test_accuracy) + "\n"), std::string::npos);
  EXPECT_THROW(report_from_json(nlohmann::json::parse("{\"rows\": 3}")), FormatError);
}

TEST(ExperimentTest, AccuracyFormatting) {
  EXPECT_EQ(format_accuracy(0.5), "0.5000");
  EXPECT_EQ(format_accuracy(2.0 / 3.0), "0.6667");
  EXPECT_EQ(format_accuracy(1.0), "1.0000");
}

}  // namespace
}  // namespace ugraph
