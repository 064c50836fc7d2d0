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

// Training objectives (entry cross-entropy, symmetry, implication) and the
// AdamW optimizer with a linear warmup/decay schedule.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "unire/biaffine_net.hpp"
#include "unire/errors.hpp"
#include "unire/label_table.hpp"

namespace unire {

inline constexpr double kProbFloor = 1e-12;

struct EntryLoss {
  double value = 0.0;
  CellTensor d_logits;       // w.r.t. the logits that produced p
  std::size_t clamped = 0;   // cells whose gold probability hit kProbFloor
};

struct TableLoss {
  double value = 0.0;
  CellTensor d_probs;
};

// -(1/|s|^2) sum_ij log p[i,j,gold_ij]; gradient is softmax cross-entropy.
inline EntryLoss loss_entry(const ProbTensor& p, const GoldTable& gold) {
  const std::size_t n = p.size();
  if (gold.size() != n) throw ArgumentError("tensor and gold table differ in size");
  const double norm = 1.0 / static_cast<double>(n * n);
  EntryLoss out;
  out.d_logits = CellTensor(n, p.labels());
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const LabelId y = gold.at(i, j);
      if (y >= p.labels()) throw ArgumentError("gold label outside the tensor");
      double py = p.at(i, j, y);
      if (py < kProbFloor) {
        py = kProbFloor;
        ++out.clamped;
      }
      sum -= std::log(py);
      auto pc = p.cell(i, j);
      auto dc = out.d_logits.cell(i, j);
      for (std::size_t t = 0; t < pc.size(); ++t)
        dc[t] = norm * (pc[t] - (t == y ? 1.0 : 0.0));
    }
  }
  out.value = sum * norm;
  return out;
}

// (1/|s|^2) sum_ij sum_{t in Y_sym} |P[i,j,t] - P[j,i,t]|. Each unordered
// pair appears twice, so the gradient at P[i,j,t] is 2 sign(.)/|s|^2.
inline TableLoss loss_sym(const ProbTensor& p, const LabelSpace& ls) {
  const std::size_t n = p.size();
  const double norm = 1.0 / static_cast<double>(n * n);
  TableLoss out{0.0, CellTensor(n, p.labels())};
  double sum = 0.0;
  for (LabelId t : ls.symmetric_labels()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double diff = p.at(i, j, t) - p.at(j, i, t);
        sum += 2.0 * std::abs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        out.d_probs.at(i, j, t) += 2.0 * norm * sign;
        out.d_probs.at(j, i, t) -= 2.0 * norm * sign;
      }
    }
  }
  out.value = sum * norm;
  return out;
}

// (1/|s|) sum_i [ max_{l in Y_r} max(P[i,:,l], P[:,i,l]) - max_{t in Y_e} P[i,i,t] ]_+
// No margin. The subgradient goes to the first argmax in (row, column,
// label) order.
inline TableLoss loss_imp(const ProbTensor& p, const LabelSpace& ls) {
  const std::size_t n = p.size();
  const double norm = 1.0 / static_cast<double>(n);
  TableLoss out{0.0, CellTensor(n, p.labels())};
  const auto rel = ls.relation_labels();
  const auto ent = ls.entity_labels();
  if (rel.empty()) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double rel_max = -1.0;
    std::size_t rr = 0, rc = 0;
    LabelId rl = 0;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        if (r != i && c != i) continue;
        for (LabelId l : rel) {
          if (p.at(r, c, l) > rel_max) {
            rel_max = p.at(r, c, l);
            rr = r;
            rc = c;
            rl = l;
          }
        }
      }
    }
    double ent_max = -1.0;
    LabelId el = 0;
    for (LabelId t : ent) {
      if (p.at(i, i, t) > ent_max) {
        ent_max = p.at(i, i, t);
        el = t;
      }
    }
    const double u = rel_max - ent_max;
    if (u > 0.0) {
      sum += u;
      out.d_probs.at(rr, rc, rl) += norm;
      out.d_probs.at(i, i, el) -= norm;
    }
  }
  out.value = sum * norm;
  return out;
}

struct SentenceLoss {
  double l_entry = 0.0;
  double l_sym = 0.0;
  double l_imp = 0.0;
  double total() const { return l_entry + l_sym + l_imp; }
};

struct LossReport {
  double l_entry = 0.0;
  double l_sym = 0.0;
  double l_imp = 0.0;
  double total = 0.0;
  std::size_t clamped = 0;
  std::vector<SentenceLoss> per_sentence;
};

struct LossOptions {
  bool use_sym = true;
  bool use_imp = true;
};

struct TrainingExample {
  std::vector<TokenId> tokens;
  GoldTable gold;
};

// Forward + losses + backward for one sentence. Gradients are scaled by
// `weight` and accumulated into `grads` when it is non-null. The entry loss
// sees the dropped logits, the structural losses the undropped ones.
inline SentenceLoss sentence_loss(const ModelParams& params,
                                  const TrainingExample& ex,
                                  const LabelSpace& ls,
                                  const LogitDropout& dropout,
                                  const LossOptions& opts, double weight,
                                  ModelParams* grads,
                                  std::size_t* clamped = nullptr) {
  ForwardPass pass = forward(params, ex.tokens, dropout);
  const ProbTensor p_dropped = softmax_cells(pass.scores.dropped());
  const ProbTensor p_clean =
      pass.scores.mask ? softmax_cells(pass.scores.logits) : p_dropped;

  SentenceLoss out;
  EntryLoss entry = loss_entry(p_dropped, ex.gold);
  out.l_entry = entry.value;
  if (clamped) *clamped += entry.clamped;
  CellTensor d_probs(p_clean.size(), p_clean.labels());
  bool structural = false;
  if (opts.use_sym) {
    TableLoss sym = loss_sym(p_clean, ls);
    out.l_sym = sym.value;
    add_into(d_probs, sym.d_probs);
    structural = true;
  }
  if (opts.use_imp) {
    TableLoss imp = loss_imp(p_clean, ls);
    out.l_imp = imp.value;
    add_into(d_probs, imp.d_probs);
    structural = true;
  }
  if (!std::isfinite(out.total())) {
    throw NumericError("non-finite loss");
  }
  if (grads) {
    CellTensor d_logits = dropout_backward(pass.scores, entry.d_logits);
    if (structural) add_into(d_logits, softmax_backward(p_clean, d_probs));
    for (auto& v : d_logits.values()) v *= weight;
    backward(params, pass, d_logits, *grads);
  }
  return out;
}

// Mean of per-sentence losses over the batch; gradients likewise averaged.
inline LossReport total_loss(const ModelParams& params,
                             std::span<const TrainingExample> batch,
                             const LabelSpace& ls, const LogitDropout& dropout,
                             const LossOptions& opts, ModelParams* grads) {
  if (batch.empty()) throw ArgumentError("empty batch");
  LossReport report;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    SentenceLoss s =
        sentence_loss(params, ex, ls, dropout, opts, w, grads, &report.clamped);
    report.l_entry += w * s.l_entry;
    report.l_sym += w * s.l_sym;
    report.l_imp += w * s.l_imp;
    report.per_sentence.push_back(s);
  }
  report.total = report.l_entry + report.l_sym + report.l_imp;
  return report;
}

struct AdamWConfig {
  double learning_rate = 5e-5;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  double warmup_ratio = 0.2;
};

// Linear ramp from 0 over the warmup steps, then linear decay to 0 at
// total_steps. Steps at or beyond total_steps get rate 0.
struct LinearWarmupSchedule {
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 0;

  static LinearWarmupSchedule make(std::size_t total_steps, double warmup_ratio) {
    return {static_cast<std::size_t>(
                std::floor(warmup_ratio * static_cast<double>(total_steps))),
            total_steps};
  }

  double factor(std::size_t step) const {
    if (step >= total_steps) return 0.0;
    if (step < warmup_steps) {
      return static_cast<double>(step) / static_cast<double>(warmup_steps);
    }
    return static_cast<double>(total_steps - step) /
           static_cast<double>(total_steps - warmup_steps);
  }
};

struct OptimizerState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::size_t step = 0;
  LinearWarmupSchedule schedule;

  static OptimizerState make(const ModelParams& params,
                             LinearWarmupSchedule schedule) {
    OptimizerState s;
    s.first_moment = ModelParams::zeros(params.dims);
    s.second_moment = ModelParams::zeros(params.dims);
    s.schedule = schedule;
    return s;
  }
};

// One AdamW update with decoupled weight decay. Returns the learning rate
// that was applied. The PAD embedding row is never decayed.
inline double optimizer_step(ModelParams& params, const ModelParams& grads,
                             OptimizerState& state, const AdamWConfig& cfg) {
  if (!(params.dims == grads.dims) || !(params.dims == state.first_moment.dims)) {
    throw ArgumentError("optimizer shapes do not match the parameters");
  }
  const double lr = cfg.learning_rate * state.schedule.factor(state.step);
  ++state.step;
  const double k = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, k);
  const double c2 = 1.0 - std::pow(cfg.beta2, k);

  std::vector<ParamBlock*> p_blocks, m_blocks, v_blocks;
  std::vector<const ParamBlock*> g_blocks;
  params.for_each_block([&](ParamBlock& b) { p_blocks.push_back(&b); });
  state.first_moment.for_each_block([&](ParamBlock& b) { m_blocks.push_back(&b); });
  state.second_moment.for_each_block([&](ParamBlock& b) { v_blocks.push_back(&b); });
  grads.for_each_block([&](const ParamBlock& b) { g_blocks.push_back(&b); });

  const std::size_t pad_width = params.dims.embedding_dim;
  for (std::size_t b = 0; b < p_blocks.size(); ++b) {
    auto& theta = p_blocks[b]->values;
    auto& m = m_blocks[b]->values;
    auto& v = v_blocks[b]->values;
    const auto& g = g_blocks[b]->values;
    const bool is_embedding = (p_blocks[b] == &params.embeddings);
    for (std::size_t x = 0; x < theta.size(); ++x) {
      m[x] = cfg.beta1 * m[x] + (1.0 - cfg.beta1) * g[x];
      v[x] = cfg.beta2 * v[x] + (1.0 - cfg.beta2) * g[x] * g[x];
      const double update = (m[x] / c1) / (std::sqrt(v[x] / c2) + cfg.epsilon);
      const bool decay = !(is_embedding && x < pad_width);
      if (decay) theta[x] -= lr * cfg.weight_decay * theta[x];
      theta[x] -= lr * update;
    }
  }
  return lr;
}

}  // namespace unire
