#pragma once

// From-scratch pre-norm self-attention encoder with a per-token sigmoid
// discriminator head. Parameters live in a plain struct-of-matrices template
// so that the same traversal drives initialization, Adam state, gradient
// checks and checkpoint serialization.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexlink/nn/graph.hpp"

namespace lexlink::nn {

template <typename T>
struct EncoderLayerT {
  T wq, bq, wk, bk, wv, bv, wo, bo;  // attention projections
  T ln1_g, ln1_b;                    // pre-attention layer norm
  T w1, b1, w2, b2;                  // feed-forward
  T ln2_g, ln2_b;                    // pre-feed-forward layer norm
};

template <typename T>
struct ModelTensorsT {
  T tok_emb;  // vocab x d
  T pos_emb;  // max_len x d
  std::vector<EncoderLayerT<T>> layers;
  T ln_f_g, ln_f_b;  // final layer norm
  T head_w;          // d x 1 discriminator head
  T head_b;          // 1 x 1
};

using ModelParams = ModelTensorsT<Mat>;
using ParamNodes = ModelTensorsT<int>;

// Single source of truth for tensor enumeration order.
template <typename T, typename F>
void for_each_tensor(ModelTensorsT<T>& t, F&& f) {
  f("tok_emb", t.tok_emb);
  f("pos_emb", t.pos_emb);
  for (std::size_t l = 0; l < t.layers.size(); ++l) {
    auto& layer = t.layers[l];
    const std::string prefix = "layer" + std::to_string(l) + ".";
    f(prefix + "wq", layer.wq);
    f(prefix + "bq", layer.bq);
    f(prefix + "wk", layer.wk);
    f(prefix + "bk", layer.bk);
    f(prefix + "wv", layer.wv);
    f(prefix + "bv", layer.bv);
    f(prefix + "wo", layer.wo);
    f(prefix + "bo", layer.bo);
    f(prefix + "ln1_g", layer.ln1_g);
    f(prefix + "ln1_b", layer.ln1_b);
    f(prefix + "w1", layer.w1);
    f(prefix + "b1", layer.b1);
    f(prefix + "w2", layer.w2);
    f(prefix + "b2", layer.b2);
    f(prefix + "ln2_g", layer.ln2_g);
    f(prefix + "ln2_b", layer.ln2_b);
  }
  f("ln_f_g", t.ln_f_g);
  f("ln_f_b", t.ln_f_b);
  f("head_w", t.head_w);
  f("head_b", t.head_b);
}

template <typename T>
std::vector<std::pair<std::string, T*>> tensor_entries(ModelTensorsT<T>& t) {
  std::vector<std::pair<std::string, T*>> out;
  for_each_tensor(t, [&out](const std::string& name, T& m) { out.emplace_back(name, &m); });
  return out;
}

struct ModelHyper {
  int vocab_size = 0;
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  int max_len = 128;

  void validate() const {
    if (vocab_size < 1) throw std::invalid_argument("vocab_size must be positive");
    if (d_model < 1 || n_layers < 1 || n_heads < 1 || d_ff < 1 || max_len < 4)
      throw std::invalid_argument("invalid encoder hyperparameters");
    if (d_model % n_heads != 0)
      throw std::invalid_argument("d_model must be divisible by n_heads");
  }

  bool operator==(const ModelHyper&) const = default;
};

inline ModelParams init_params(const ModelHyper& hyper, std::mt19937_64& rng) {
  hyper.validate();
  std::normal_distribution<double> dist(0.0, 0.02);
  auto normal = [&](Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
  };

  const int d = hyper.d_model;
  ModelParams p;
  p.tok_emb = normal(hyper.vocab_size, d);
  p.pos_emb = normal(hyper.max_len, d);
  p.layers.resize(static_cast<std::size_t>(hyper.n_layers));
  for (auto& layer : p.layers) {
    layer.wq = normal(d, d);
    layer.bq = Mat::Zero(1, d);
    layer.wk = normal(d, d);
    layer.bk = Mat::Zero(1, d);
    layer.wv = normal(d, d);
    layer.bv = Mat::Zero(1, d);
    layer.wo = normal(d, d);
    layer.bo = Mat::Zero(1, d);
    layer.ln1_g = Mat::Ones(1, d);
    layer.ln1_b = Mat::Zero(1, d);
    layer.w1 = normal(d, hyper.d_ff);
    layer.b1 = Mat::Zero(1, hyper.d_ff);
    layer.w2 = normal(hyper.d_ff, d);
    layer.b2 = Mat::Zero(1, d);
    layer.ln2_g = Mat::Ones(1, d);
    layer.ln2_b = Mat::Zero(1, d);
  }
  p.ln_f_g = Mat::Ones(1, d);
  p.ln_f_b = Mat::Zero(1, d);
  p.head_w = normal(d, 1);
  p.head_b = Mat::Zero(1, 1);
  return p;
}

inline ParamNodes register_params(Graph& g, const ModelParams& params) {
  ParamNodes nodes;
  nodes.layers.resize(params.layers.size());
  auto param_entries = tensor_entries(const_cast<ModelParams&>(params));
  auto node_entries = tensor_entries(nodes);
  for (std::size_t i = 0; i < param_entries.size(); ++i)
    *node_entries[i].second = g.param(*param_entries[i].second);
  return nodes;
}

// Builds the forward pass up to the per-token logits (L x 1 node).
inline int forward_logits(Graph& g, const ParamNodes& nodes, const ModelHyper& hyper,
                          const std::vector<int>& token_ids) {
  const int len = static_cast<int>(token_ids.size());
  if (len < 1) throw std::invalid_argument("empty token sequence");
  if (len > hyper.max_len) throw std::invalid_argument("sequence longer than max_len");
  for (int id : token_ids)
    if (id < 0 || id >= hyper.vocab_size)
      throw std::invalid_argument("token id " + std::to_string(id) + " outside vocabulary");

  std::vector<int> positions(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) positions[static_cast<std::size_t>(i)] = i;

  int x = g.add(g.rows(nodes.tok_emb, token_ids), g.rows(nodes.pos_emb, positions));

  const int d_head = hyper.d_model / hyper.n_heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(d_head));

  for (const auto& layer : nodes.layers) {
    // x = x + MHA(LN(x))
    int h = g.layer_norm(x, layer.ln1_g, layer.ln1_b);
    int q = g.add_rowvec(g.matmul(h, layer.wq), layer.bq);
    int k = g.add_rowvec(g.matmul(h, layer.wk), layer.bk);
    int v = g.add_rowvec(g.matmul(h, layer.wv), layer.bv);

    std::vector<int> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(hyper.n_heads));
    for (int head = 0; head < hyper.n_heads; ++head) {
      const int c0 = head * d_head;
      int qh = g.slice_cols(q, c0, d_head);
      int kh = g.slice_cols(k, c0, d_head);
      int vh = g.slice_cols(v, c0, d_head);
      int att = g.softmax_rows(g.scale(g.matmul_nt(qh, kh), att_scale));
      head_outputs.push_back(g.matmul(att, vh));
    }
    int merged = hyper.n_heads == 1 ? head_outputs.front() : g.concat_cols(head_outputs);
    x = g.add(x, g.add_rowvec(g.matmul(merged, layer.wo), layer.bo));

    // x = x + FFN(LN(x))
    int f = g.layer_norm(x, layer.ln2_g, layer.ln2_b);
    int hidden = g.gelu(g.add_rowvec(g.matmul(f, layer.w1), layer.b1));
    x = g.add(x, g.add_rowvec(g.matmul(hidden, layer.w2), layer.b2));
  }

  int final_norm = g.layer_norm(x, nodes.ln_f_g, nodes.ln_f_b);
  return g.add_rowvec(g.matmul(final_norm, nodes.head_w), nodes.head_b);
}

}  // namespace lexlink::nn
