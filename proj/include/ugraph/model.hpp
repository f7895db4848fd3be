#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ugraph/error.hpp"
#include "ugraph/matrix.hpp"

namespace ugraph {

enum class Arch { kGcn, kGin };

inline std::string to_string(Arch a) { return a == Arch::kGcn ? "gcn" : "gin"; }

inline Arch parse_arch(const std::string& s) {
  if (s == "gcn" || s == "GCN") return Arch::kGcn;
  if (s == "gin" || s == "GIN") return Arch::kGin;
  throw ContractViolation("unknown architecture '" + s + "' (expected gcn or gin)");
}

struct ModelShape {
  Arch arch = Arch::kGcn;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::size_t hidden = 32;
  std::size_t layers = 2;
};

// Weights of a GCN or GIN graph classifier.
//
// GCN: layer_weights[l] is the propagation weight of layer l.
// GIN: layer_weights[l] and mlp_weights[l] are the first and second matrices of layer l's MLP,
//      eps[l] its learnable self-weight.
// Both: mean-pool readout followed by logits = readout * classifier_weight + classifier_bias.
struct ModelParams {
  Arch arch = Arch::kGcn;
  std::vector<Matrix> layer_weights;
  std::vector<Matrix> mlp_weights;
  std::vector<double> eps;
  Matrix classifier_weight;
  std::vector<double> classifier_bias;

  std::size_t feature_dim() const { return layer_weights.empty() ? 0 : layer_weights.front().rows(); }
  std::size_t num_classes() const { return classifier_bias.size(); }
  std::size_t num_layers() const { return layer_weights.size(); }

  struct TensorRef {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::span<double> data;
  };

  // Every trainable tensor in canonical order; shared by the optimizer, checkpoints and gradient checks.
  std::vector<TensorRef> named_tensors() {
    std::vector<TensorRef> out;
    const std::string first = arch == Arch::kGcn ? "conv" : "mlp1_";
    for (std::size_t l = 0; l < layer_weights.size(); ++l) {
      auto& w = layer_weights[l];
      out.push_back({first + std::to_string(l), w.rows(), w.cols(), w.flat()});
    }
    for (std::size_t l = 0; l < mlp_weights.size(); ++l) {
      auto& w = mlp_weights[l];
      out.push_back({"mlp2_" + std::to_string(l), w.rows(), w.cols(), w.flat()});
    }
    if (!eps.empty()) out.push_back({"eps", 1, eps.size(), eps});
    out.push_back({"classifier_weight", classifier_weight.rows(), classifier_weight.cols(), classifier_weight.flat()});
    out.push_back({"classifier_bias", 1, classifier_bias.size(), classifier_bias});
    return out;
  }

  std::vector<std::span<double>> tensors() {
    std::vector<std::span<double>> out;
    for (auto& t : named_tensors()) out.push_back(t.data);
    return out;
  }

  std::vector<std::span<const double>> tensors() const {
    std::vector<std::span<const double>> out;
    for (auto& t : const_cast<ModelParams*>(this)->tensors()) out.emplace_back(t.data(), t.size());
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
  }

  bool all_finite() const {
    for (auto t : tensors())
      for (double v : t)
        if (!std::isfinite(v)) return false;
    return true;
  }

  // Same shapes, all zeros.
  ModelParams zeros_like() const {
    ModelParams z = *this;
    for (auto t : z.tensors()) std::fill(t.begin(), t.end(), 0.0);
    return z;
  }

  void check_shapes() const {
    require(!layer_weights.empty(), "params: no layers");
    for (std::size_t l = 1; l < layer_weights.size(); ++l) {
      const std::size_t prev_out = arch == Arch::kGin ? mlp_weights[l - 1].cols() : layer_weights[l - 1].cols();
      require(layer_weights[l].rows() == prev_out, "params: layer " + std::to_string(l) + " input mismatch");
    }
    if (arch == Arch::kGin) {
      require(mlp_weights.size() == layer_weights.size() && eps.size() == layer_weights.size(),
              "params: GIN needs one MLP second matrix and one eps per layer");
      for (std::size_t l = 0; l < layer_weights.size(); ++l)
        require(mlp_weights[l].rows() == layer_weights[l].cols(), "params: GIN MLP shape mismatch");
    } else {
      require(mlp_weights.empty() && eps.empty(), "params: GCN carries no MLP/eps tensors");
    }
    const std::size_t last = arch == Arch::kGin ? mlp_weights.back().cols() : layer_weights.back().cols();
    require(classifier_weight.rows() == last, "params: classifier input mismatch");
    require(classifier_weight.cols() == classifier_bias.size(), "params: classifier bias mismatch");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

namespace detail {
inline Matrix glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fan_in, fan_out);
  for (double& v : m.flat()) v = dist(rng);
  return m;
}
}  // namespace detail

// Glorot-uniform weights, zero bias and zero eps.
inline ModelParams init_params(const ModelShape& s, std::mt19937_64& rng) {
  require(s.feature_dim > 0 && s.num_classes > 0 && s.hidden > 0 && s.layers > 0, "init_params: empty shape");
  ModelParams p;
  p.arch = s.arch;
  std::size_t in = s.feature_dim;
  for (std::size_t l = 0; l < s.layers; ++l) {
    p.layer_weights.push_back(detail::glorot(in, s.hidden, rng));
    if (s.arch == Arch::kGin) {
      p.mlp_weights.push_back(detail::glorot(s.hidden, s.hidden, rng));
      p.eps.push_back(0.0);
    }
    in = s.hidden;
  }
  p.classifier_weight = detail::glorot(s.hidden, s.num_classes, rng);
  p.classifier_bias.assign(s.num_classes, 0.0);
  return p;
}

inline ModelParams init_params(const ModelShape& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return init_params(s, rng);
}

// Checkpoint: {"format", "arch", "tensors": [{"name", "rows", "cols", "data"}]}, data row-major.
// Doubles are written in shortest round-trip form, so load(save(p)) == p bit for bit.
inline nlohmann::json params_to_json(const ModelParams& p) {
  nlohmann::json j;
  j["format"] = "ugraph-checkpoint/1";
  j["arch"] = to_string(p.arch);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : const_cast<ModelParams&>(p).named_tensors())
    arr.push_back({{"name", t.name},
                   {"rows", t.rows},
                   {"cols", t.cols},
                   {"data", std::vector<double>(t.data.begin(), t.data.end())}});
  j["tensors"] = std::move(arr);
  return j;
}

inline ModelParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "ugraph-checkpoint/1")
      throw FormatError("checkpoint: unsupported format tag");
    ModelParams p;
    p.arch = parse_arch(j.at("arch").get<std::string>());
    const auto& ts = j.at("tensors");
    auto load_matrix = [](const nlohmann::json& t) {
      Matrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>());
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != m.size()) throw FormatError("checkpoint: tensor '" + t.at("name").get<std::string>() +
                                                     "' has wrong element count");
      std::copy(data.begin(), data.end(), m.flat().begin());
      return m;
    };
    for (const auto& t : ts) {
      const auto name = t.at("name").get<std::string>();
      if (name.rfind("conv", 0) == 0 || name.rfind("mlp1_", 0) == 0) p.layer_weights.push_back(load_matrix(t));
      else if (name.rfind("mlp2_", 0) == 0) p.mlp_weights.push_back(load_matrix(t));
      else if (name == "eps") p.eps = t.at("data").get<std::vector<double>>();
      else if (name == "classifier_weight") p.classifier_weight = load_matrix(t);
      else if (name == "classifier_bias") p.classifier_bias = t.at("data").get<std::vector<double>>();
      else throw FormatError("checkpoint: unknown tensor '" + name + "'");
    }
    p.check_shapes();
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << params_to_json(p).dump(1) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  return params_from_json(j);
}

}  // namespace ugraph
