// ugraph: poison TU graph-classification datasets and measure the damage on victim GNNs.
//
//   ugraph poison     --data DIR --name NAME --out DIR [--method eminS|random|errmax] ...
//   ugraph train      --data DIR --name NAME --out MODEL.json [--arch gcn|gin] ...
//   ugraph eval       --model MODEL.json --data DIR --name NAME ...
//   ugraph experiment --clean DIR --name NAME --variant name=DIR ... --report FILE.json ...
//
// Exit codes: 0 success, 1 bad flags, 2 dataset/model load or consistency failure, 3 training divergence.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ugraph/ugraph.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitFlags = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

// Flag values in declaration order; echoed into manifests and rebuilt into a replayable command line.
class Echo {
 public:
  template <typename T>
  void add(const std::string& flag, const T& value) {
    settings_[flag] = value;
    order_.push_back(flag);
  }

  json settings() const { return settings_; }

  json command(const std::string& sub) const {
    json cmd = json::array({sub});
    for (const auto& flag : order_) {
      const json& v = settings_[flag];
      if (v.is_boolean()) {
        if (v.get<bool>()) cmd.push_back("--" + flag);
        continue;
      }
      if (v.is_array()) {
        for (const auto& item : v) cmd.push_back("--" + flag), cmd.push_back(scalar(item));
        continue;
      }
      cmd.push_back("--" + flag);
      cmd.push_back(scalar(v));
    }
    return cmd;
  }

 private:
  static std::string scalar(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

  json settings_ = json::object();
  std::vector<std::string> order_;
};

void write_json(const fs::path& path, const json& j) {
  ugraph::write_text(path.string(), j.dump(2) + "\n");
}

struct DataFlags {
  std::string dir;
  std::string name;
  std::size_t max_degree = 64;
};

ugraph::GraphDataset load(const DataFlags& d) {
  return ugraph::load_tu_dataset(d.dir, d.name, ugraph::TuLoadOptions{d.max_degree});
}

// ---------------------------------------------------------------------------------------------------------------
struct PoisonFlags {
  DataFlags data;
  std::string out;
  std::string method = "eminS";
  ugraph::PoisonConfig cfg;
  std::string surrogate = "gcn";
};

int cmd_poison(const PoisonFlags& f) {
  ugraph::GraphDataset clean;
  try {
    clean = load(f.data);
    if (clean.empty()) throw ugraph::FormatError("dataset '" + f.data.name + "' has no graphs");
  } catch (const ugraph::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }

  ugraph::PoisonConfig cfg = f.cfg;
  cfg.surrogate.arch = ugraph::parse_arch(f.surrogate);

  ugraph::PoisonResult res;
  if (f.method == "eminS") res = ugraph::poison_dataset(clean, cfg);
  else if (f.method == "random") res = ugraph::random_noise(clean, cfg.budget, cfg.seed);
  else res = ugraph::error_max_noise(clean, cfg.budget, cfg);

  const fs::path out(f.out);
  ugraph::save_tu_dataset(res.dataset, out);
  ugraph::write_edit_log_csv(res.log, (out / "edits.csv").string());

  Echo echo;
  echo.add("data", f.data.dir);
  echo.add("name", f.data.name);
  echo.add("out", f.out);
  echo.add("method", f.method);
  echo.add("rv", cfg.budget.r_v);
  echo.add("re", cfg.budget.r_e);
  echo.add("seed", cfg.seed);
  echo.add("outer-iters", cfg.outer_iters);
  echo.add("inner-steps", cfg.inner_steps);
  echo.add("lr", cfg.lr);
  echo.add("stop-loss", cfg.stop_loss);
  echo.add("grad-refresh-every", cfg.grad_refresh_every);
  echo.add("surrogate", f.surrogate);
  echo.add("hidden", cfg.surrogate.hidden);
  echo.add("layers", cfg.surrogate.layers);
  echo.add("reinit-surrogate", cfg.reinit_surrogate);
  echo.add("max-degree", f.data.max_degree);
  echo.add("jobs", cfg.jobs);
  json manifest = ugraph::poison_manifest(clean, res, f.method, cfg, echo.settings());
  manifest["command"] = echo.command("poison");
  write_json(out / "manifest.json", manifest);

  std::printf("%s: %zu graphs, %zu flips, mean fraction of potential edges modified %.4f\n", f.method.c_str(),
              clean.size(), res.total_flips(), ugraph::mean_modified_fraction(clean, res.log));
  return 0;
}

// ---------------------------------------------------------------------------------------------------------------
struct TrainFlags {
  DataFlags data;
  std::string out;
  std::string arch = "gcn";
  ugraph::TrainConfig cfg;
  bool train_split = false;
};

int cmd_train(const TrainFlags& f) {
  ugraph::GraphDataset ds;
  try {
    ds = load(f.data);
    if (f.train_split) ds = ugraph::split_dataset(ds, f.cfg.train_fraction, f.cfg.seed).first;
    if (ds.empty()) throw ugraph::FormatError("dataset '" + f.data.name + "' has no graphs");
  } catch (const ugraph::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  ugraph::TrainConfig cfg = f.cfg;
  cfg.arch = ugraph::parse_arch(f.arch);
  const ugraph::ModelParams params = ugraph::train_victim(ds, cfg);
  ugraph::save_checkpoint(params, f.out);

  Echo echo;
  echo.add("data", f.data.dir);
  echo.add("name", f.data.name);
  echo.add("out", f.out);
  echo.add("arch", f.arch);
  echo.add("epochs", cfg.epochs);
  echo.add("lr", cfg.lr);
  echo.add("seed", cfg.seed);
  echo.add("hidden", cfg.hidden);
  echo.add("layers", cfg.layers);
  echo.add("train-fraction", cfg.train_fraction);
  echo.add("train-split", f.train_split);
  echo.add("max-degree", f.data.max_degree);
  json manifest = {{"settings", echo.settings()},
                   {"command", echo.command("train")},
                   {"train_graphs", ds.size()},
                   {"train_accuracy", ugraph::evaluate(params, ds)}};
  write_json(f.out + ".manifest.json", manifest);
  std::printf("trained %s on %zu graphs, train accuracy %s\n", f.arch.c_str(), ds.size(),
              ugraph::format_accuracy(manifest["train_accuracy"].get<double>()).c_str());
  return 0;
}

// ---------------------------------------------------------------------------------------------------------------
struct EvalFlags {
  DataFlags data;
  std::string model;
  bool test_split = false;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

int cmd_eval(const EvalFlags& f) {
  ugraph::GraphDataset ds;
  ugraph::ModelParams params;
  try {
    ds = load(f.data);
    if (f.test_split) ds = ugraph::split_dataset(ds, f.train_fraction, f.seed).second;
    if (ds.empty()) throw ugraph::FormatError("dataset '" + f.data.name + "' has no graphs");
    params = ugraph::load_checkpoint(f.model);
    if (params.feature_dim() != ds.feature_dim)
      throw ugraph::ConsistencyError("model expects feature dim " + std::to_string(params.feature_dim()) +
                                     ", dataset has " + std::to_string(ds.feature_dim));
  } catch (const ugraph::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  std::printf("%s\n", ugraph::format_accuracy(ugraph::evaluate(params, ds)).c_str());
  return 0;
}

// ---------------------------------------------------------------------------------------------------------------
struct ExperimentFlags {
  DataFlags clean;
  std::vector<std::string> variants;
  std::vector<std::string> archs{"gcn", "gin"};
  std::size_t seeds = 3;
  std::string report;
  ugraph::TrainConfig cfg;
  std::size_t jobs = 1;
};

fs::path csv_path_for(const fs::path& report) {
  fs::path p = report;
  if (p.extension() == ".json") return p.replace_extension(".csv");
  return fs::path(report.string() + ".csv");
}

int cmd_experiment(const ExperimentFlags& f) {
  std::vector<ugraph::Arch> archs;
  for (const auto& a : f.archs) archs.push_back(ugraph::parse_arch(a));
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < f.seeds; ++s) seeds.push_back(s);

  ugraph::GraphDataset clean;
  ugraph::Variants variants;
  try {
    clean = load(f.clean);
    bool has_clean = false;
    std::vector<std::pair<std::string, std::string>> specs;
    for (const auto& v : f.variants) {
      const auto eq = v.find('=');
      specs.emplace_back(v.substr(0, eq), v.substr(eq + 1));
      has_clean = has_clean || specs.back().first == "clean";
    }
    if (!has_clean) variants.emplace_back("clean", clean);
    for (const auto& [name, dir] : specs)
      variants.emplace_back(name, ugraph::load_tu_dataset(dir, f.clean.name, ugraph::TuLoadOptions{f.clean.max_degree}));
    const ugraph::EvalReport rep = ugraph::run_experiment(clean, variants, archs, seeds, f.cfg, f.jobs);

    Echo echo;
    echo.add("clean", f.clean.dir);
    echo.add("name", f.clean.name);
    echo.add("variant", f.variants);
    std::string arch_list;
    for (const auto& a : f.archs) arch_list += (arch_list.empty() ? "" : ",") + a;
    echo.add("archs", arch_list);
    echo.add("seeds", f.seeds);
    echo.add("report", f.report);
    echo.add("epochs", f.cfg.epochs);
    echo.add("lr", f.cfg.lr);
    echo.add("train-fraction", f.cfg.train_fraction);
    echo.add("hidden", f.cfg.hidden);
    echo.add("layers", f.cfg.layers);
    echo.add("max-degree", f.clean.max_degree);
    echo.add("jobs", f.jobs);
    json j = ugraph::report_to_json(rep);
    j["config"]["settings"] = echo.settings();
    j["config"]["command"] = echo.command("experiment");
    write_json(f.report, j);
    ugraph::write_text(csv_path_for(f.report).string(), ugraph::report_to_csv(rep));
    std::cout << ugraph::report_table(rep);
  } catch (const ugraph::ConsistencyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ugraph::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ugraph::StratificationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}

void add_data_flags(CLI::App* sub, DataFlags& d, const std::string& dir_flag) {
  sub->add_option(dir_flag, d.dir, "Directory holding the TU files")->required();
  sub->add_option("--name", d.name, "Dataset name (file prefix)")->required();
  sub->add_option("--max-degree", d.max_degree, "Degree cap for one-hot degree features")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-minimizing structural poisoning for graph-classification datasets"};
  app.require_subcommand(1);

  PoisonFlags pf;
  auto* poison = app.add_subcommand("poison", "Write a poisoned copy of a TU dataset with its edit log and manifest");
  add_data_flags(poison, pf.data, "--data");
  poison->add_option("--out", pf.out, "Output directory")->required();
  poison->add_option("--method", pf.method, "Noise type")
      ->check(CLI::IsMember({"eminS", "random", "errmax"}))
      ->capture_default_str();
  poison->add_option("--rv", pf.cfg.budget.r_v, "Budget as a fraction of unordered node pairs")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  poison->add_option("--re", pf.cfg.budget.r_e, "Budget as a fraction of existing edges")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  poison->add_option("--seed", pf.cfg.seed)->capture_default_str();
  poison->add_option("--outer-iters", pf.cfg.outer_iters, "Alternating iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  poison->add_option("--inner-steps", pf.cfg.inner_steps, "Surrogate epochs per iteration")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  poison->add_option("--lr", pf.cfg.lr, "Surrogate learning rate")->check(CLI::PositiveNumber)->capture_default_str();
  poison->add_option("--stop-loss", pf.cfg.stop_loss, "Stop once surrogate loss on perturbed data drops below")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  poison->add_option("--grad-refresh-every", pf.cfg.grad_refresh_every, "Flips applied per gradient evaluation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  poison->add_option("--surrogate", pf.surrogate)->check(CLI::IsMember({"gcn", "gin"}))->capture_default_str();
  poison->add_option("--hidden", pf.cfg.surrogate.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  poison->add_option("--layers", pf.cfg.surrogate.layers)->check(CLI::PositiveNumber)->capture_default_str();
  poison->add_flag("--reinit-surrogate", pf.cfg.reinit_surrogate, "Re-initialize the surrogate every iteration");
  poison->add_option("--jobs", pf.cfg.jobs, "Crafting threads")->check(CLI::PositiveNumber)->capture_default_str();

  TrainFlags tf;
  auto* train = app.add_subcommand("train", "Train a victim model and write a checkpoint");
  add_data_flags(train, tf.data, "--data");
  train->add_option("--out", tf.out, "Checkpoint path (JSON)")->required();
  train->add_option("--arch", tf.arch)->check(CLI::IsMember({"gcn", "gin"}))->capture_default_str();
  train->add_option("--epochs", tf.cfg.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lr", tf.cfg.lr)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--seed", tf.cfg.seed)->capture_default_str();
  train->add_option("--hidden", tf.cfg.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--layers", tf.cfg.layers)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--train-fraction", tf.cfg.train_fraction)
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  train->add_flag("--train-split", tf.train_split, "Train only on the stratified train side of --seed");

  EvalFlags ef;
  auto* eval = app.add_subcommand("eval", "Print the accuracy of a checkpoint on a dataset");
  add_data_flags(eval, ef.data, "--data");
  eval->add_option("--model", ef.model, "Checkpoint path")->required();
  eval->add_flag("--test-split", ef.test_split, "Evaluate only on the stratified test side of --seed");
  eval->add_option("--seed", ef.seed)->capture_default_str();
  eval->add_option("--train-fraction", ef.train_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  ExperimentFlags xf;
  auto* exp = app.add_subcommand("experiment", "Train victims on each variant and evaluate on clean test graphs");
  add_data_flags(exp, xf.clean, "--clean");
  exp->add_option("--variant", xf.variants, "Poisoned variant as name=DIR (repeatable)")
      ->check([](const std::string& v) {
        const auto eq = v.find('=');
        return eq == std::string::npos || eq == 0 || eq + 1 == v.size() ? std::string("expected name=DIR")
                                                                         : std::string();
      });
  exp->add_option("--archs", xf.archs, "Victim architectures")
      ->delimiter(',')
      ->check(CLI::IsMember({"gcn", "gin"}))
      ->capture_default_str();
  exp->add_option("--seeds", xf.seeds, "Number of seeds (0..N-1)")->check(CLI::PositiveNumber)->capture_default_str();
  exp->add_option("--report", xf.report, "Report path (JSON; CSV written alongside)")->required();
  exp->add_option("--epochs", xf.cfg.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  exp->add_option("--lr", xf.cfg.lr)->check(CLI::PositiveNumber)->capture_default_str();
  exp->add_option("--train-fraction", xf.cfg.train_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  exp->add_option("--hidden", xf.cfg.hidden)->check(CLI::PositiveNumber)->capture_default_str();
  exp->add_option("--layers", xf.cfg.layers)->check(CLI::PositiveNumber)->capture_default_str();
  exp->add_option("--jobs", xf.jobs, "Concurrent (variant, arch, seed) cells")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return kExitFlags;
  }

  try {
    if (*poison) return cmd_poison(pf);
    if (*train) return cmd_train(tf);
    if (*eval) return cmd_eval(ef);
    if (*exp) return cmd_experiment(xf);
  } catch (const ugraph::DivergenceError& e) {
    std::cerr << "error: training diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ugraph::ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFlags;
  } catch (const ugraph::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitFlags;
}
