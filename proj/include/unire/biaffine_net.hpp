// Copyright 2026 The unire Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Word-pair scorer: token embedding lookup, head/tail GELU MLPs and a
// biaffine form producing one logit per label for every cell,
//
//   g[i,j] = head_i^T U1 tail_j + U2 (head_i ++ tail_j) + b.
//
// Gradients are computed analytically; nothing here depends on an autodiff
// framework.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "unire/errors.hpp"
#include "unire/label_table.hpp"

namespace unire {

using Rng = std::mt19937_64;

inline constexpr TokenId kPadToken = 0;
inline constexpr TokenId kUnkToken = 1;

// String <-> id map for the toy encoder. Ids 0 and 1 are PAD and UNK.
class Vocabulary {
 public:
  Vocabulary() {
    add("<pad>");
    add("<unk>");
  }

  TokenId add(const std::string& token) {
    auto [it, inserted] =
        ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }
  TokenId lookup(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnkToken : it->second;
  }
  std::vector<TokenId> lookup(const std::vector<std::string>& tokens) const {
    std::vector<TokenId> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lookup(t));
    return out;
  }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// A named dense parameter array.
struct ParamBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  ParamBlock() = default;
  ParamBlock(std::string n, std::vector<std::size_t> s)
      : name(std::move(n)), shape(std::move(s)) {
    std::size_t total = 1;
    for (auto d : shape) total *= d;
    values.assign(total, 0.0);
  }
  std::size_t size() const { return values.size(); }
  bool operator==(const ParamBlock&) const = default;
};

struct AffineLayer {
  ParamBlock weight;  // out x in
  ParamBlock bias;    // out
  std::size_t in() const { return weight.shape[1]; }
  std::size_t out() const { return weight.shape[0]; }
  bool operator==(const AffineLayer&) const = default;
};

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embedding_dim = 0;
  std::size_t hidden_dim = 0;  // d, width of head/tail representations
  std::size_t num_labels = 0;
  // Intermediate MLP widths; empty means a single affine+GELU layer.
  std::vector<std::size_t> mlp_hidden;
  bool operator==(const ModelDims&) const = default;
};

struct ModelParams {
  ModelDims dims;
  ParamBlock embeddings;  // vocab x d_emb
  std::vector<AffineLayer> head_mlp;
  std::vector<AffineLayer> tail_mlp;
  ParamBlock u1;    // K x d x d
  ParamBlock u2;    // K x 2d, head half first
  ParamBlock bias;  // K

  static ModelParams zeros(const ModelDims& dims) {
    if (dims.vocab_size < 2 || dims.embedding_dim == 0 ||
        dims.hidden_dim == 0 || dims.num_labels == 0) {
      throw ArgumentError("model dimensions must be positive (vocab >= 2)");
    }
    ModelParams p;
    p.dims = dims;
    p.embeddings =
        ParamBlock("embeddings", {dims.vocab_size, dims.embedding_dim});
    auto build = [&](const std::string& prefix) {
      std::vector<AffineLayer> layers;
      std::size_t in = dims.embedding_dim;
      std::vector<std::size_t> widths = dims.mlp_hidden;
      widths.push_back(dims.hidden_dim);
      for (std::size_t l = 0; l < widths.size(); ++l) {
        if (widths[l] == 0) throw ArgumentError("MLP width must be positive");
        const auto tag = prefix + "." + std::to_string(l);
        layers.push_back({ParamBlock(tag + ".weight", {widths[l], in}),
                          ParamBlock(tag + ".bias", {widths[l]})});
        in = widths[l];
      }
      return layers;
    };
    p.head_mlp = build("mlp_head");
    p.tail_mlp = build("mlp_tail");
    const auto k = dims.num_labels, d = dims.hidden_dim;
    p.u1 = ParamBlock("u1", {k, d, d});
    p.u2 = ParamBlock("u2", {k, 2 * d});
    p.bias = ParamBlock("bias", {k});
    return p;
  }

  // Visits every block in the fixed field order used by checkpoints.
  template <class F>
  void for_each_block(F&& f) {
    f(embeddings);
    for (auto& l : head_mlp) { f(l.weight); f(l.bias); }
    for (auto& l : tail_mlp) { f(l.weight); f(l.bias); }
    f(u1);
    f(u2);
    f(bias);
  }
  template <class F>
  void for_each_block(F&& f) const {
    const_cast<ModelParams*>(this)->for_each_block(
        [&](ParamBlock& b) { f(static_cast<const ParamBlock&>(b)); });
  }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for_each_block([&](const ParamBlock& b) { n += b.size(); });
    return n;
  }

  void fill(double v) {
    for_each_block([&](ParamBlock& b) { std::fill(b.values.begin(), b.values.end(), v); });
  }

  bool operator==(const ModelParams&) const = default;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) affine weights, Uniform(-1, 1)
// embeddings with a zero PAD row, zero biases and zero biaffine parameters.
inline ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(dims);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t v = 1; v < dims.vocab_size; ++v)
    for (std::size_t c = 0; c < dims.embedding_dim; ++c)
      p.embeddings.values[v * dims.embedding_dim + c] = unit(rng);
  for (auto* mlp : {&p.head_mlp, &p.tail_mlp}) {
    for (auto& layer : *mlp) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(layer.in()));
      for (auto& w : layer.weight.values) w = scale * unit(rng);
    }
  }
  return p;
}

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi /
                     std::numbers::sqrt2;
  return cdf + x * pdf;
}

// Row-major (rows x cols) activations.
struct Activations {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  double* row(std::size_t i) { return values.data() + i * cols; }
  const double* row(std::size_t i) const { return values.data() + i * cols; }
};

// Maps token ids to embedding rows. Ids outside the vocabulary become UNK.
inline Activations encode(std::span<const TokenId> tokens,
                          const ModelParams& params) {
  const std::size_t e = params.dims.embedding_dim;
  Activations h{tokens.size(), e, std::vector<double>(tokens.size() * e)};
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    TokenId id = tokens[i] < params.dims.vocab_size ? tokens[i] : kUnkToken;
    std::copy_n(params.embeddings.values.begin() + id * e, e, h.row(i));
  }
  return h;
}

struct LogitDropout {
  double rate = 0.0;
  Rng* rng = nullptr;  // null means dropout is off

  static LogitDropout off() { return {}; }
  static LogitDropout on(double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) {
      throw ArgumentError("logit dropout rate must be in [0, 1)");
    }
    return {rate, &rng};
  }
  bool active() const { return rng != nullptr; }
};

struct ScoreTable {
  CellTensor logits;  // undropped g
  // Keep mask for inverted dropout; present iff dropout was on.
  std::optional<std::vector<std::uint8_t>> mask;
  double keep_scale = 1.0;

  // Logits as seen by the entry loss: masked and rescaled when dropout is on.
  CellTensor dropped() const {
    if (!mask) return logits;
    CellTensor out = logits;
    auto v = out.values();
    for (std::size_t k = 0; k < v.size(); ++k)
      v[k] = (*mask)[k] ? v[k] * keep_scale : 0.0;
    return out;
  }
};

struct MlpTrace {
  std::vector<Activations> inputs;   // per layer
  std::vector<Activations> preacts;  // per layer, before GELU
  Activations output;
};

// Cached intermediates of one sentence's forward pass.
struct ForwardPass {
  std::vector<TokenId> tokens;
  Activations embedded;
  MlpTrace head;
  MlpTrace tail;
  ScoreTable scores;
  bool complete = false;
};

namespace detail {

inline Activations run_mlp(const std::vector<AffineLayer>& layers,
                           const Activations& x, MlpTrace* trace) {
  Activations cur = x;
  for (const auto& layer : layers) {
    const std::size_t in = layer.in(), out = layer.out();
    Activations pre{cur.rows, out, std::vector<double>(cur.rows * out)};
    Activations post = pre;
    for (std::size_t r = 0; r < cur.rows; ++r) {
      const double* xr = cur.row(r);
      for (std::size_t o = 0; o < out; ++o) {
        const double* w = layer.weight.values.data() + o * in;
        double z = layer.bias.values[o];
        for (std::size_t c = 0; c < in; ++c) z += w[c] * xr[c];
        pre.row(r)[o] = z;
        post.row(r)[o] = gelu(z);
      }
    }
    if (trace) {
      trace->inputs.push_back(std::move(cur));
      trace->preacts.push_back(std::move(pre));
    }
    cur = std::move(post);
  }
  if (trace) trace->output = cur;
  return cur;
}

// Accumulates layer gradients and returns d(input).
inline Activations mlp_backward(const std::vector<AffineLayer>& layers,
                                const MlpTrace& trace, Activations d_out,
                                std::vector<AffineLayer>& grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    auto& g = grads[l];
    const auto& x = trace.inputs[l];
    const auto& pre = trace.preacts[l];
    const std::size_t in = layer.in(), out = layer.out();
    Activations d_in{x.rows, in, std::vector<double>(x.rows * in, 0.0)};
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t o = 0; o < out; ++o) {
        const double dz = d_out.row(r)[o] * gelu_grad(pre.row(r)[o]);
        if (dz == 0.0) continue;
        g.bias.values[o] += dz;
        double* gw = g.weight.values.data() + o * in;
        const double* w = layer.weight.values.data() + o * in;
        for (std::size_t c = 0; c < in; ++c) {
          gw[c] += dz * x.row(r)[c];
          d_in.row(r)[c] += dz * w[c];
        }
      }
    }
    d_out = std::move(d_in);
  }
  return d_out;
}

}  // namespace detail

// g[i,j] = Biaff(MLP_head(h_i), MLP_tail(h_j)); optional inverted logit
// dropout. When `pass` is given, intermediates are cached for backward.
inline ScoreTable score_table(const Activations& h, const ModelParams& params,
                              const LogitDropout& dropout = {},
                              ForwardPass* pass = nullptr) {
  if (h.rows == 0) throw ArgumentError("cannot score an empty sentence");
  if (h.cols != params.dims.embedding_dim) {
    throw ArgumentError("encoder width does not match the model");
  }
  const std::size_t n = h.rows, d = params.dims.hidden_dim,
                    k = params.dims.num_labels;
  MlpTrace* head_trace = pass ? &pass->head : nullptr;
  MlpTrace* tail_trace = pass ? &pass->tail : nullptr;
  if (pass) {
    pass->head = {};
    pass->tail = {};
  }
  const Activations head = detail::run_mlp(params.head_mlp, h, head_trace);
  const Activations tail = detail::run_mlp(params.tail_mlp, h, tail_trace);

  ScoreTable out;
  out.logits = CellTensor(n, k);
  std::vector<double> a(n * d);
  for (std::size_t t = 0; t < k; ++t) {
    const double* u1 = params.u1.values.data() + t * d * d;
    const double* u2h = params.u2.values.data() + t * 2 * d;
    const double* u2t = u2h + d;
    // a_i = head_i^T U1[t]
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) {
        double s = 0.0;
        for (std::size_t r = 0; r < d; ++r) s += head.row(i)[r] * u1[r * d + c];
        a[i * d + c] = s;
      }
    }
    std::vector<double> lin_head(n), lin_tail(n);
    for (std::size_t i = 0; i < n; ++i) {
      double sh = 0.0, st = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        sh += u2h[c] * head.row(i)[c];
        st += u2t[c] * tail.row(i)[c];
      }
      lin_head[i] = sh;
      lin_tail[i] = st;
    }
    const double b = params.bias.values[t];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += a[i * d + c] * tail.row(j)[c];
        out.logits.at(i, j, t) = s + lin_head[i] + lin_tail[j] + b;
      }
    }
  }
  const auto v = out.logits.values();
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    if (!std::isfinite(v[idx])) {
      const std::size_t t = idx % k, j = (idx / k) % n, i = idx / (k * n);
      throw NumericError("non-finite logit at cell (" + std::to_string(i) +
                         "," + std::to_string(j) + ") label " +
                         std::to_string(t));
    }
  }
  if (dropout.active()) {
    std::bernoulli_distribution keep(1.0 - dropout.rate);
    std::vector<std::uint8_t> mask(v.size());
    for (auto& m : mask) m = keep(*dropout.rng) ? 1 : 0;
    out.mask = std::move(mask);
    out.keep_scale = 1.0 / (1.0 - dropout.rate);
  }
  return out;
}

inline ForwardPass forward(const ModelParams& params,
                           std::span<const TokenId> tokens,
                           const LogitDropout& dropout = {}) {
  ForwardPass pass;
  pass.tokens.assign(tokens.begin(), tokens.end());
  pass.embedded = encode(tokens, params);
  pass.scores = score_table(pass.embedded, params, dropout, &pass);
  pass.complete = true;
  return pass;
}

// Per-cell softmax over labels, stabilized by max subtraction.
inline ProbTensor softmax_cells(const CellTensor& logits) {
  ProbTensor p(logits.size(), logits.labels());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    for (std::size_t j = 0; j < logits.size(); ++j) {
      auto g = logits.cell(i, j);
      auto out = p.cell(i, j);
      const double m = *std::max_element(g.begin(), g.end());
      double z = 0.0;
      for (std::size_t t = 0; t < g.size(); ++t) {
        out[t] = std::exp(g[t] - m);
        z += out[t];
      }
      for (auto& x : out) x /= z;
    }
  }
  return p;
}

inline ProbTensor softmax_cells(const ScoreTable& scores) {
  return softmax_cells(scores.dropped());
}

// d(logits) from d(probabilities) through a per-cell softmax.
inline CellTensor softmax_backward(const ProbTensor& p, const CellTensor& d_p) {
  CellTensor d_g(p.size(), p.labels());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      auto pc = p.cell(i, j);
      auto dc = d_p.cell(i, j);
      double dot = 0.0;
      for (std::size_t t = 0; t < pc.size(); ++t) dot += pc[t] * dc[t];
      auto out = d_g.cell(i, j);
      for (std::size_t t = 0; t < pc.size(); ++t) out[t] = pc[t] * (dc[t] - dot);
    }
  }
  return d_g;
}

// d(undropped logits) from d(dropped logits).
inline CellTensor dropout_backward(const ScoreTable& scores,
                                   const CellTensor& d_dropped) {
  if (!scores.mask) return d_dropped;
  CellTensor d = d_dropped;
  auto v = d.values();
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = (*scores.mask)[k] ? v[k] * scores.keep_scale : 0.0;
  return d;
}

// Upstream gradients of a loss with respect to a forward pass's outputs.
// Any subset may be present; they are summed into d(undropped logits).
struct TableGradients {
  std::optional<CellTensor> dropped_logits;
  std::optional<CellTensor> clean_logits;
  std::optional<CellTensor> clean_probs;
};

inline void add_into(CellTensor& acc, const CellTensor& x) {
  auto a = acc.values();
  auto b = x.values();
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
}

// Accumulates parameter gradients into `grads` (same shape as params).
inline void backward(const ModelParams& params, const ForwardPass& pass,
                     const CellTensor& d_logits, ModelParams& grads) {
  if (!pass.complete) throw StateError("backward called before forward");
  const std::size_t n = pass.tokens.size(), d = params.dims.hidden_dim,
                    k = params.dims.num_labels;
  if (d_logits.size() != n || d_logits.labels() != k) {
    throw ArgumentError("logit gradient shape does not match the pass");
  }
  const Activations& head = pass.head.output;
  const Activations& tail = pass.tail.output;
  Activations d_head{n, d, std::vector<double>(n * d, 0.0)};
  Activations d_tail{n, d, std::vector<double>(n * d, 0.0)};
  std::vector<double> m(n * d), q(n * d);
  for (std::size_t t = 0; t < k; ++t) {
    const double* u1 = params.u1.values.data() + t * d * d;
    const double* u2h = params.u2.values.data() + t * 2 * d;
    const double* u2t = u2h + d;
    double* gu1 = grads.u1.values.data() + t * d * d;
    double* gu2h = grads.u2.values.data() + t * 2 * d;
    double* gu2t = gu2h + d;
    std::fill(m.begin(), m.end(), 0.0);
    std::fill(q.begin(), q.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double g = d_logits.at(i, j, t);
        if (g == 0.0) continue;
        total += g;
        for (std::size_t c = 0; c < d; ++c) {
          m[i * d + c] += g * tail.row(j)[c];  // m_i = sum_j g_ij tail_j
          q[j * d + c] += g * head.row(i)[c];  // q_j = sum_i g_ij head_i
        }
      }
    }
    grads.bias.values[t] += total;
    for (std::size_t i = 0; i < n; ++i) {
      double row_sum = 0.0, col_sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row_sum += d_logits.at(i, j, t);
        col_sum += d_logits.at(j, i, t);
      }
      for (std::size_t r = 0; r < d; ++r) {
        const double hr = head.row(i)[r];
        double dh = row_sum * u2h[r];
        double dt = col_sum * u2t[r];
        for (std::size_t c = 0; c < d; ++c) {
          gu1[r * d + c] += hr * m[i * d + c];
          dh += u1[r * d + c] * m[i * d + c];
          dt += u1[c * d + r] * q[i * d + c];
        }
        d_head.row(i)[r] += dh;
        d_tail.row(i)[r] += dt;
        gu2h[r] += row_sum * hr;
        gu2t[r] += col_sum * tail.row(i)[r];
      }
    }
  }
  const Activations d_h1 =
      detail::mlp_backward(params.head_mlp, pass.head, d_head, grads.head_mlp);
  const Activations d_h2 =
      detail::mlp_backward(params.tail_mlp, pass.tail, d_tail, grads.tail_mlp);
  const std::size_t e = params.dims.embedding_dim;
  for (std::size_t i = 0; i < n; ++i) {
    TokenId id =
        pass.tokens[i] < params.dims.vocab_size ? pass.tokens[i] : kUnkToken;
    double* ge = grads.embeddings.values.data() + id * e;
    for (std::size_t c = 0; c < e; ++c) ge[c] += d_h1.row(i)[c] + d_h2.row(i)[c];
  }
}

inline void backward(const ModelParams& params, const ForwardPass& pass,
                     const TableGradients& upstream, ModelParams& grads) {
  if (!pass.complete) throw StateError("backward called before forward");
  const auto& scores = pass.scores;
  CellTensor d_logits(scores.logits.size(), scores.logits.labels());
  if (upstream.dropped_logits)
    add_into(d_logits, dropout_backward(scores, *upstream.dropped_logits));
  if (upstream.clean_logits) add_into(d_logits, *upstream.clean_logits);
  if (upstream.clean_probs) {
    add_into(d_logits, softmax_backward(softmax_cells(scores.logits),
                                        *upstream.clean_probs));
  }
  backward(params, pass, d_logits, grads);
}

}  // namespace unire
