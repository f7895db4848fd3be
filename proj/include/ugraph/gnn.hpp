#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ugraph/error.hpp"
#include "ugraph/graph.hpp"
#include "ugraph/matrix.hpp"
#include "ugraph/model.hpp"

namespace ugraph {

// D^{-1/2} (A + I) D^{-1/2}, D the row-sum degree matrix of A + I.
inline Matrix normalize_adjacency(const Matrix& a) {
  require(a.rows() == a.cols(), "normalize_adjacency: matrix must be square");
  const std::size_t n = a.rows();
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 1.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = ((i == j ? 1.0 : 0.0) + a(i, j)) * inv_sqrt[i] * inv_sqrt[j];
  return out;
}

struct LayerCache {
  Matrix input;  // H^l
  Matrix agg;    // GCN: Â H;  GIN: (1 + eps) H + A H
  Matrix pre;    // GCN: agg W;  GIN: agg W1
  Matrix mid;    // GIN only: ReLU(pre)
  Matrix pre2;   // GIN only: mid W2
  Matrix output; // H^{l+1}
};

struct ForwardCache {
  Arch arch = Arch::kGcn;
  std::size_t node_count = 0;
  std::size_t feature_dim = 0;
  Matrix adjacency;   // raw (possibly relaxed) A
  Matrix normalized;  // Â, GCN only
  std::vector<double> degree;  // row sums of A + I, GCN only
  std::vector<LayerCache> layers;
  std::vector<double> readout;
  std::vector<double> logits;
};

struct ForwardResult {
  std::vector<double> logits;
  ForwardCache cache;
};

struct Gradients {
  ModelParams grad_params;
  Matrix grad_adjacency;  // symmetric per-undirected-pair gradient, zero diagonal
};

namespace detail {

inline Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.flat()) v = std::max(v, 0.0);
  return out;
}

// grad ⊙ [pre > 0]
inline Matrix relu_backward(const Matrix& grad, const Matrix& pre) {
  Matrix out = grad;
  auto g = out.flat();
  auto p = pre.flat();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (p[i] <= 0.0) g[i] = 0.0;
  return out;
}

}  // namespace detail

// Forward pass on a real-valued adjacency; the graph's boolean adjacency is the special case.
inline ForwardResult forward_relaxed(const Matrix& adjacency, const Matrix& features, const ModelParams& params) {
  params.check_shapes();
  const std::size_t n = adjacency.rows();
  require(adjacency.cols() == n && features.rows() == n, "forward: adjacency/feature shapes disagree");
  require(features.cols() == params.feature_dim(),
          "forward: feature dim " + std::to_string(features.cols()) + " != model input dim " +
              std::to_string(params.feature_dim()));

  ForwardResult res;
  ForwardCache& c = res.cache;
  c.arch = params.arch;
  c.node_count = n;
  c.feature_dim = features.cols();
  c.adjacency = adjacency;
  if (params.arch == Arch::kGcn) {
    c.normalized = normalize_adjacency(adjacency);
    c.degree.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c.degree[i] += adjacency(i, j);
  }

  Matrix h = features;
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    LayerCache lc;
    lc.input = h;
    if (params.arch == Arch::kGcn) {
      lc.agg = matmul(c.normalized, h);
      lc.pre = matmul(lc.agg, params.layer_weights[l]);
      lc.output = detail::relu(lc.pre);
    } else {
      lc.agg = matmul(adjacency, h);
      const double self = 1.0 + params.eps[l];
      auto agg = lc.agg.flat();
      auto in = h.flat();
      for (std::size_t i = 0; i < agg.size(); ++i) agg[i] += self * in[i];
      lc.pre = matmul(lc.agg, params.layer_weights[l]);
      lc.mid = detail::relu(lc.pre);
      lc.pre2 = matmul(lc.mid, params.mlp_weights[l]);
      lc.output = detail::relu(lc.pre2);
    }
    h = lc.output;
    c.layers.push_back(std::move(lc));
  }

  c.readout.assign(h.cols(), 0.0);
  if (n > 0) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < h.cols(); ++k) c.readout[k] += h(i, k);
    for (double& v : c.readout) v /= static_cast<double>(n);
  }
  c.logits = params.classifier_bias;
  for (std::size_t k = 0; k < c.readout.size(); ++k)
    for (std::size_t j = 0; j < c.logits.size(); ++j) c.logits[j] += c.readout[k] * params.classifier_weight(k, j);
  res.logits = c.logits;
  return res;
}

inline ForwardResult forward(const Graph& g, const ModelParams& params) {
  return forward_relaxed(g.adjacency_matrix(), g.features(), params);
}

// -log softmax(logits)[label], max-shifted.
inline double cross_entropy(std::span<const double> logits, std::size_t label) {
  require(label < logits.size(), "cross_entropy: label out of range");
  for (double v : logits) require(std::isfinite(v), "cross_entropy: non-finite logit");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  return std::max(0.0, std::log(z) - (logits[label] - m));
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) z += (p[i] = std::exp(logits[i] - m));
  for (double& v : p) v /= z;
  return p;
}

inline double loss_relaxed(const Matrix& adjacency, const Matrix& features, const ModelParams& params,
                           std::size_t label) {
  return cross_entropy(forward_relaxed(adjacency, features, params).logits, label);
}

inline double loss(const Graph& g, const ModelParams& params) {
  return cross_entropy(forward(g, params).logits, g.label());
}

// Reverse-mode gradients of cross_entropy(forward(A, X), label) with respect to every parameter and to
// every adjacency entry (chained through the GCN normalization). The adjacency gradient is folded per
// undirected pair: out[u][v] = out[v][u] = dL/dA_uv + dL/dA_vu.
inline Gradients backward(const Graph& g, const ModelParams& params, const ForwardCache& c, std::size_t label) {
  const std::size_t n = g.node_count();
  require(c.arch == params.arch && c.node_count == n && c.feature_dim == params.feature_dim() &&
              c.layers.size() == params.num_layers() && c.logits.size() == params.num_classes(),
          "backward: cache does not match graph/params");
  require(label < params.num_classes(), "backward: label out of range");
  for (double v : c.logits)
    if (!std::isfinite(v)) throw DivergenceError("backward: non-finite logits", 0);

  Gradients out;
  out.grad_params = params.zeros_like();
  ModelParams& gp = out.grad_params;

  std::vector<double> dlogits = softmax(c.logits);
  dlogits[label] -= 1.0;
  gp.classifier_bias = dlogits;
  const std::size_t hidden = c.readout.size();
  std::vector<double> dreadout(hidden, 0.0);
  for (std::size_t k = 0; k < hidden; ++k)
    for (std::size_t j = 0; j < dlogits.size(); ++j) {
      gp.classifier_weight(k, j) = c.readout[k] * dlogits[j];
      dreadout[k] += params.classifier_weight(k, j) * dlogits[j];
    }

  Matrix dh(n, hidden);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < hidden; ++k) dh(i, k) = dreadout[k] / static_cast<double>(n);

  Matrix dadj(n, n);  // dL/dÂ for GCN, dL/dA for GIN; entries treated as independent
  for (std::size_t l = params.num_layers(); l-- > 0;) {
    const LayerCache& lc = c.layers[l];
    if (params.arch == Arch::kGcn) {
      const Matrix dpre = detail::relu_backward(dh, lc.pre);
      gp.layer_weights[l] = matmul_tn(lc.agg, dpre);
      const Matrix dagg = matmul_nt(dpre, params.layer_weights[l]);
      dadj += matmul_nt(dagg, lc.input);
      dh = matmul_tn(c.normalized, dagg);
    } else {
      const Matrix dpre2 = detail::relu_backward(dh, lc.pre2);
      gp.mlp_weights[l] = matmul_tn(lc.mid, dpre2);
      const Matrix dpre = detail::relu_backward(matmul_nt(dpre2, params.mlp_weights[l]), lc.pre);
      gp.layer_weights[l] = matmul_tn(lc.agg, dpre);
      const Matrix dagg = matmul_nt(dpre, params.layer_weights[l]);
      double deps = 0.0;
      auto da = dagg.flat();
      auto in = lc.input.flat();
      for (std::size_t i = 0; i < da.size(); ++i) deps += da[i] * in[i];
      gp.eps[l] = deps;
      dadj += matmul_nt(dagg, lc.input);
      Matrix next = matmul_tn(c.adjacency, dagg);
      const double self = 1.0 + params.eps[l];
      auto nx = next.flat();
      for (std::size_t i = 0; i < nx.size(); ++i) nx[i] += self * da[i];
      dh = std::move(next);
    }
  }

  Matrix graw(n, n);
  if (params.arch == Arch::kGcn) {
    // Â_ij = s_i (A_ij + δ_ij) s_j with s_i = d_i^{-1/2}, d_i = 1 + Σ_j A_ij.
    std::vector<double> s(n), ddeg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) s[i] = 1.0 / std::sqrt(c.degree[i]);
    for (std::size_t i = 0; i < n; ++i) {
      double ds = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double tilde_ij = c.adjacency(i, j) + (i == j ? 1.0 : 0.0);
        const double tilde_ji = c.adjacency(j, i) + (i == j ? 1.0 : 0.0);
        ds += dadj(i, j) * tilde_ij * s[j] + dadj(j, i) * tilde_ji * s[j];
      }
      ddeg[i] = ds * -0.5 * s[i] / c.degree[i];
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) graw(i, j) = dadj(i, j) * s[i] * s[j] + ddeg[i];
  } else {
    graw = std::move(dadj);
  }

  out.grad_adjacency = Matrix(n, n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      out.grad_adjacency(u, v) = out.grad_adjacency(v, u) = graw(u, v) + graw(v, u);

  if (!gp.all_finite() || !out.grad_adjacency.all_finite())
    throw DivergenceError("backward: non-finite gradient", 0);
  return out;
}

inline Gradients backward(const Graph& g, const ModelParams& params) {
  return backward(g, params, forward(g, params).cache, g.label());
}

// Central differences over each unordered pair, moving both mirror entries of a relaxed copy of A.
inline Matrix fd_grad_adjacency(const Graph& g, const ModelParams& params, std::size_t label, double h) {
  require(h > 0.0, "fd_grad_adjacency: step must be positive");
  const std::size_t n = g.node_count();
  const Matrix base = g.adjacency_matrix();
  Matrix out(n, n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) {
      Matrix plus = base, minus = base;
      plus(u, v) += h, plus(v, u) += h;
      minus(u, v) -= h, minus(v, u) -= h;
      const double d = (loss_relaxed(plus, g.features(), params, label) -
                        loss_relaxed(minus, g.features(), params, label)) /
                       (2.0 * h);
      out(u, v) = out(v, u) = d;
    }
  return out;
}

}  // namespace ugraph
