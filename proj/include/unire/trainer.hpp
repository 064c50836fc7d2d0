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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "unire/biaffine_net.hpp"
#include "unire/decoder.hpp"
#include "unire/evaluation.hpp"
#include "unire/objectives.hpp"

namespace unire {

struct TrainConfig {
  std::size_t hidden_dim = 150;
  std::size_t embedding_dim = 64;
  std::vector<std::size_t> mlp_hidden;
  double logit_dropout = 0.2;
  AdamWConfig optimizer;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 1;
  LossOptions losses;
  DecodeConfig decode;

  void validate() const {
    if (!(logit_dropout >= 0.0 && logit_dropout < 1.0)) {
      throw ArgumentError("logit dropout must be in [0, 1)");
    }
    if (!(optimizer.learning_rate > 0.0) || optimizer.weight_decay < 0.0) {
      throw ArgumentError("learning rate must be positive, weight decay >= 0");
    }
    if (hidden_dim == 0 || embedding_dim == 0 || batch_size == 0 ||
        max_epochs == 0) {
      throw ArgumentError("dimensions, batch size and epochs must be positive");
    }
    decode.validate();
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double l_entry = 0.0;
  double l_sym = 0.0;
  double l_imp = 0.0;
  double dev_ent_f1 = 0.0;
  double dev_rel_f1 = 0.0;
  double lr = 0.0;  // rate used by the epoch's last step
  bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
  ModelParams params;  // best dev checkpoint
  Vocabulary vocab;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_dev_f1 = -1.0;
};

inline Vocabulary build_vocabulary(std::span<const SentenceAnnotation> corpus) {
  Vocabulary v;
  for (const auto& s : corpus)
    for (const auto& t : s.tokens) v.add(t);
  return v;
}

// Undropped per-cell probabilities for one sentence.
inline ProbTensor predict_tensor(const ModelParams& params,
                                 std::span<const TokenId> tokens) {
  ForwardPass pass = forward(params, tokens);
  return softmax_cells(pass.scores.logits);
}

inline EvalReport evaluate_model(const ModelParams& params,
                                 const Vocabulary& vocab,
                                 std::span<const SentenceAnnotation> corpus,
                                 const LabelSpace& ls,
                                 const DecodeConfig& cfg) {
  EvalReport report;
  for (const auto& s : corpus) {
    const auto ids = vocab.lookup(s.tokens);
    report.add(strict_eval(joint_decode(predict_tensor(params, ids), ls, cfg), s, ls));
  }
  return report;
}

// Mini-batch AdamW training with dev-based checkpoint selection on the mean
// of entity and relation F1. Stops after `patience` consecutive epochs
// without improvement. `on_epoch` sees each record as it is produced.
inline TrainResult train(std::span<const SentenceAnnotation> train_set,
                         std::span<const SentenceAnnotation> dev_set,
                         const LabelSpace& ls, const TrainConfig& cfg,
                         const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (train_set.empty() || dev_set.empty()) {
    throw ArgumentError("training needs non-empty train and dev sets");
  }
  TrainResult result;
  result.vocab = build_vocabulary(train_set);

  std::vector<TrainingExample> examples;
  examples.reserve(train_set.size());
  for (const auto& s : train_set)
    examples.push_back({result.vocab.lookup(s.tokens), render_gold_table(s, ls)});

  ModelDims dims{result.vocab.size(), cfg.embedding_dim, cfg.hidden_dim,
                 ls.size(), cfg.mlp_hidden};
  ModelParams params = init_params(dims, cfg.seed);
  const std::size_t batches =
      (examples.size() + cfg.batch_size - 1) / cfg.batch_size;
  OptimizerState state = OptimizerState::make(
      params, LinearWarmupSchedule::make(batches * cfg.max_epochs,
                                         cfg.optimizer.warmup_ratio));
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  std::size_t stale = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * cfg.batch_size;
      const std::size_t hi = std::min(lo + cfg.batch_size, examples.size());
      std::vector<TrainingExample> batch;
      for (auto k = lo; k < hi; ++k) batch.push_back(examples[order[k]]);
      ModelParams grads = ModelParams::zeros(dims);
      const LogitDropout dropout = cfg.logit_dropout > 0.0
                                       ? LogitDropout::on(cfg.logit_dropout, rng)
                                       : LogitDropout::off();
      LossReport loss = total_loss(params, batch, ls, dropout, cfg.losses, &grads);
      if (!std::isfinite(loss.total)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           " batch " + std::to_string(b));
      }
      const double w = static_cast<double>(hi - lo) / examples.size();
      rec.l_entry += w * loss.l_entry;
      rec.l_sym += w * loss.l_sym;
      rec.l_imp += w * loss.l_imp;
      rec.lr = optimizer_step(params, grads, state, cfg.optimizer);
    }
    const EvalReport dev = evaluate_model(params, result.vocab, dev_set, ls, cfg.decode);
    rec.dev_ent_f1 = dev.entity.f1();
    rec.dev_rel_f1 = dev.relation.f1();
    result.log.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (dev.mean_f1() > result.best_dev_f1) {
      result.best_dev_f1 = dev.mean_f1();
      result.best_epoch = epoch;
      result.params = params;
      stale = 0;
    } else if (++stale > cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace unire
