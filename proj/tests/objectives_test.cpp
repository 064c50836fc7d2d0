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


#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "test_util.hpp"
#include "unire/objectives.hpp"
#include "unire/trainer.hpp"

namespace unire {
namespace {

using testing::small_space;

TEST(LossEntry, UniformIsLogK) {
  GoldTable gold(3);
  gold.at(1, 2) = 2;
  const ProbTensor p(3, 3, 1.0 / 3.0);
  EXPECT_NEAR(loss_entry(p, gold).value, std::log(3.0), 1e-12);
}

TEST(LossEntry, OneHotIsExactlyZero) {
  const LabelSpace ls = small_space();
  const GoldTable gold = render_gold_table(testing::three_token_fixture(ls), ls);
  const EntryLoss l = loss_entry(one_hot_tensor(gold, ls, 0.0), gold);
  EXPECT_EQ(l.value, 0.0);
  EXPECT_EQ(l.clamped, 0u);
}

TEST(LossEntry, SingleCellHalf) {
  GoldTable gold(1);
  gold.at(0, 0) = 1;
  ProbTensor p(1, 2, 0.5);
  EXPECT_NEAR(loss_entry(p, gold).value, std::log(2.0), 1e-15);
}

TEST(LossEntry, ZeroProbabilityIsClampedAndCounted) {
  GoldTable gold(1);
  gold.at(0, 0) = 1;
  ProbTensor p(1, 2);
  p.at(0, 0, 0) = 1.0;
  const EntryLoss l = loss_entry(p, gold);
  EXPECT_EQ(l.clamped, 1u);
  EXPECT_NEAR(l.value, -std::log(1e-12), 1e-9);
}

TEST(LossSym, ZeroOnSymmetricTensors) {
  const LabelSpace ls = small_space();
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const ProbTensor p = symmetrize(testing::random_tensor(5, ls.size(), rng), ls);
    EXPECT_EQ(loss_sym(p, ls).value, 0.0);
  }
}

TEST(LossSym, TwoTokenExample) {
  const LabelSpace ls({"A"}, {"S"}, {"S"});
  ProbTensor p(2, ls.size());
  const LabelId s = ls.id("S");
  p.at(0, 1, s) = 0.9;
  p.at(1, 0, s) = 0.1;
  const TableLoss l = loss_sym(p, ls);
  EXPECT_NEAR(l.value, 0.4, 1e-15);
  // Both orders of the pair carry the difference, so the derivative of the
  // sum with respect to P[0,1,S] is 2 / |s|^2.
  EXPECT_NEAR(l.d_probs.at(0, 1, s), 0.5, 1e-15);
  EXPECT_NEAR(l.d_probs.at(1, 0, s), -0.5, 1e-15);
}

TEST(LossSym, GradientMatchesFiniteDifferenceOnProbabilities) {
  const LabelSpace ls = small_space();
  std::mt19937_64 rng(4);
  const ProbTensor p = testing::random_tensor(4, ls.size(), rng);
  const TableLoss l = loss_sym(p, ls);
  ProbTensor q = p;
  for (std::size_t k = 0; k < q.values().size(); ++k) {
    const double h = 1e-7, orig = q.values()[k];
    q.values()[k] = orig + h;
    const double up = loss_sym(q, ls).value;
    q.values()[k] = orig - h;
    const double down = loss_sym(q, ls).value;
    q.values()[k] = orig;
    EXPECT_NEAR(l.d_probs.values()[k], (up - down) / (2 * h), 1e-6);
  }
}

TEST(LossImp, InactiveWhenEntityDominates) {
  const LabelSpace ls = small_space();
  ProbTensor p(2, ls.size(), 0.0);
  p.at(0, 0, ls.id("PER")) = 0.9;
  p.at(0, 0, 0) = 0.1;
  p.at(0, 1, ls.id("PHYS")) = 0.6;
  p.at(0, 1, 0) = 0.4;
  p.at(1, 0, 0) = 1.0;
  p.at(1, 1, ls.id("GPE")) = 0.7;
  p.at(1, 1, 0) = 0.3;
  EXPECT_EQ(loss_imp(p, ls).value, 0.0);
}

TEST(LossImp, SingleTokenExample) {
  const LabelSpace ls({"A"}, {"R"});
  ProbTensor p(1, ls.size());
  p.at(0, 0, 0) = 0.2;
  p.at(0, 0, ls.id("A")) = 0.3;
  p.at(0, 0, ls.id("R")) = 0.5;
  const TableLoss l = loss_imp(p, ls);
  EXPECT_NEAR(l.value, 0.2, 1e-15);
  EXPECT_EQ(l.d_probs.at(0, 0, ls.id("R")), 1.0);
  EXPECT_EQ(l.d_probs.at(0, 0, ls.id("A")), -1.0);
}

TEST(LossImp, UniformTensorSitsAtTheKink) {
  const LabelSpace ls = small_space();
  const ProbTensor p(3, ls.size(), 1.0 / static_cast<double>(ls.size()));
  const TableLoss l = loss_imp(p, ls);
  EXPECT_EQ(l.value, 0.0);
  for (double v : l.d_probs.values()) EXPECT_EQ(v, 0.0);
}

TEST(LossImp, TiesRouteToFirstCell) {
  const LabelSpace ls({"A"}, {"R", "Q"});
  ProbTensor p(2, ls.size(), 0.0);
  p.at(0, 0, 0) = 1.0;
  p.at(1, 1, 0) = 1.0;
  p.at(0, 1, ls.id("Q")) = 0.5;
  p.at(0, 1, 0) = 0.5;
  p.at(1, 0, ls.id("R")) = 0.5;
  p.at(1, 0, 0) = 0.5;
  const TableLoss l = loss_imp(p, ls);
  EXPECT_NEAR(l.value, 0.5, 1e-15);  // each row contributes 0.5, / |s|
  // Row 0 and row 1 both see (0,1,Q) first in row-major order.
  EXPECT_NEAR(l.d_probs.at(0, 1, ls.id("Q")), 1.0, 1e-15);
  EXPECT_EQ(l.d_probs.at(1, 0, ls.id("R")), 0.0);
  EXPECT_NEAR(l.d_probs.at(0, 0, ls.id("A")), -0.5, 1e-15);
}

TEST(LossImp, ZeroOnRenderedGold) {
  GenConfig g = testing::small_gen(12, 15);
  const auto corpus = generate_corpus(g, 100);
  for (const auto& s : corpus.sentences) {
    const ProbTensor p = one_hot_tensor(render_gold_table(s, corpus.labels), corpus.labels, 0.0);
    EXPECT_EQ(loss_imp(p, corpus.labels).value, 0.0);
    EXPECT_EQ(loss_sym(p, corpus.labels).value, 0.0);
  }
}

TEST(TotalLoss, DecompositionAndZeroAtGold) {
  const LabelSpace ls = small_space();
  const auto pr = testing::make_gradcheck_problem(3, 4, 4);
  const LossReport r = total_loss(pr.params, pr.batch, pr.ls, LogitDropout::off(), {}, nullptr);
  EXPECT_NEAR(r.total - (r.l_entry + r.l_sym + r.l_imp), 0.0, 1e-9);
  EXPECT_EQ(r.per_sentence.size(), pr.batch.size());
  double mean = 0.0;
  for (const auto& s : r.per_sentence) mean += s.total();
  EXPECT_NEAR(mean / pr.batch.size(), r.total, 1e-12);
  EXPECT_GE(r.l_entry, 0.0);
  EXPECT_GE(r.l_sym, 0.0);
  EXPECT_GE(r.l_imp, 0.0);
}

TEST(TotalLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto pr = testing::make_gradcheck_problem(seed, 3, 3);
    const auto res = testing::gradient_check(pr);
    EXPECT_LE(res.max_rel_error, 1e-4) << res.worst;
    EXPECT_GT(res.checked, 0u);
  }
}

TEST(TotalLoss, SmallGradientStepDoesNotIncreaseLoss) {
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    auto pr = testing::make_gradcheck_problem(seed, 4, 4);
    ModelParams grads = ModelParams::zeros(pr.params.dims);
    const double before =
        total_loss(pr.params, pr.batch, pr.ls, LogitDropout::off(), {}, &grads).total;
    ModelParams stepped = pr.params;
    std::vector<ParamBlock*> pb;
    std::vector<const ParamBlock*> gb;
    stepped.for_each_block([&](ParamBlock& b) { pb.push_back(&b); });
    grads.for_each_block([&](const ParamBlock& b) { gb.push_back(&b); });
    for (std::size_t b = 0; b < pb.size(); ++b)
      for (std::size_t x = 0; x < pb[b]->size(); ++x) pb[b]->values[x] -= 1e-6 * gb[b]->values[x];
    const double after =
        total_loss(stepped, pr.batch, pr.ls, LogitDropout::off(), {}, nullptr).total;
    EXPECT_LE(after, before) << "seed " << seed;
  }
}

ModelParams filled(const ModelDims& dims, double v) {
  ModelParams p = ModelParams::zeros(dims);
  p.fill(v);
  return p;
}

TEST(AdamW, DecayOnlyStep) {
  const ModelDims dims{3, 2, 2, 2, {}};
  ModelParams p = filled(dims, 2.0);
  const ModelParams g = ModelParams::zeros(dims);
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  OptimizerState st = OptimizerState::make(p, LinearWarmupSchedule::make(100, 0.0));
  EXPECT_DOUBLE_EQ(optimizer_step(p, g, st, cfg), 0.1);
  p.for_each_block([&](const ParamBlock& b) {
    for (std::size_t x = 0; x < b.size(); ++x) {
      const bool pad = b.name == "embeddings" && x < dims.embedding_dim;
      EXPECT_DOUBLE_EQ(b.values[x], pad ? 2.0 : 2.0 * (1.0 - 0.1 * 0.01)) << b.name;
    }
  });
}

TEST(AdamW, FirstWarmupStepHasZeroRate) {
  const ModelDims dims{3, 2, 2, 2, {}};
  ModelParams p = filled(dims, 1.5);
  const ModelParams before = p;
  const ModelParams g = filled(dims, 1.0);
  OptimizerState st = OptimizerState::make(p, LinearWarmupSchedule::make(10, 0.2));
  EXPECT_EQ(optimizer_step(p, g, st, AdamWConfig{}), 0.0);
  EXPECT_EQ(p, before);
  EXPECT_EQ(st.step, 1u);
}

TEST(AdamW, TwoStepsAgainstHandComputedUpdate) {
  const ModelDims dims{2, 1, 1, 1, {}};
  ModelParams p = filled(dims, 1.0);
  const ModelParams g = filled(dims, 1.0);
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  OptimizerState st = OptimizerState::make(p, LinearWarmupSchedule::make(1000, 0.0));
  optimizer_step(p, g, st, cfg);
  optimizer_step(p, g, st, cfg);
  // Step 1: m = 0.1, v = 0.1, both bias corrections 0.1, so the Adam ratio is
  // 1/(1 + 1e-8). Step 2: m = v = 0.19, corrections 0.19, same ratio; the
  // rate has decayed to 0.1 * 999/1000.
  const double ratio = 1.0 / (1.0 + 1e-8);
  double theta = 1.0;
  theta = theta - 0.1 * 0.01 * theta - 0.1 * ratio;
  theta = theta - 0.0999 * 0.01 * theta - 0.0999 * ratio;
  double pad = 1.0 - 0.1 * ratio;
  pad = pad - 0.0999 * ratio;
  p.for_each_block([&](const ParamBlock& b) {
    for (std::size_t x = 0; x < b.size(); ++x) {
      const bool is_pad = b.name == "embeddings" && x == 0;
      EXPECT_NEAR(b.values[x], is_pad ? pad : theta, 1e-15) << b.name << "[" << x << "]";
    }
  });
}

TEST(AdamW, ScheduleShape) {
  const auto s = LinearWarmupSchedule::make(10, 0.2);
  EXPECT_EQ(s.warmup_steps, 2u);
  EXPECT_EQ(s.factor(0), 0.0);
  EXPECT_EQ(s.factor(1), 0.5);
  EXPECT_EQ(s.factor(2), 1.0);
  EXPECT_DOUBLE_EQ(s.factor(6), 0.5);
  EXPECT_EQ(s.factor(10), 0.0);
  EXPECT_EQ(s.factor(25), 0.0);
}

TEST(AdamW, PastTotalStepsRateClampsToZero) {
  const ModelDims dims{3, 2, 2, 2, {}};
  ModelParams p = filled(dims, 1.0);
  const ModelParams g = filled(dims, 1.0);
  OptimizerState st = OptimizerState::make(p, LinearWarmupSchedule::make(1, 0.0));
  AdamWConfig cfg;
  optimizer_step(p, g, st, cfg);
  const ModelParams after_first = p;
  EXPECT_EQ(optimizer_step(p, g, st, cfg), 0.0);
  EXPECT_EQ(p, after_first);
}

std::vector<SentenceAnnotation> separable_sentence(const LabelSpace& ls) {
  SentenceAnnotation a;
  a.tokens = {"alice", "visits", "paris", "."};
  a.entities = {{{0, 1}, ls.id("PER")}, {{2, 3}, ls.id("GPE")}};
  a.relations = {{0, 1, ls.id("PHYS")}};
  return {a};
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.hidden_dim = 8;
  cfg.embedding_dim = 8;
  cfg.optimizer.learning_rate = 0.05;
  cfg.batch_size = 1;
  cfg.max_epochs = 50;
  cfg.patience = 50;
  cfg.seed = 3;
  return cfg;
}

TEST(Train, SeparableSentenceReachesPerfectEntityF1) {
  const LabelSpace ls = small_space();
  const auto data = separable_sentence(ls);
  const TrainResult r = train(data, data, ls, quick_config());
  EXPECT_EQ(r.log.size(), 50u);
  const EvalReport dev = evaluate_model(r.params, r.vocab, data, ls, {});
  EXPECT_EQ(dev.entity.f1(), 1.0);
  EXPECT_EQ(r.best_dev_f1, dev.mean_f1());
}

TEST(Train, PatienceZeroStopsAtFirstNonImprovingEpoch) {
  const LabelSpace ls = small_space();
  const auto data = separable_sentence(ls);
  TrainConfig cfg = quick_config();
  cfg.patience = 0;
  const TrainResult r = train(data, data, ls, cfg);
  ASSERT_FALSE(r.log.empty());
  double best = -1.0;
  for (std::size_t e = 0; e + 1 < r.log.size(); ++e) {
    const double f = (r.log[e].dev_ent_f1 + r.log[e].dev_rel_f1) / 2;
    EXPECT_GT(f, best) << "epoch " << e + 1;
    best = f;
  }
  if (r.log.size() < cfg.max_epochs) {
    const auto& last = r.log.back();
    EXPECT_LE((last.dev_ent_f1 + last.dev_rel_f1) / 2, best);
  }
}

TEST(Train, FixedSeedIsDeterministic) {
  const LabelSpace ls = small_space();
  const auto data = separable_sentence(ls);
  TrainConfig cfg = quick_config();
  cfg.max_epochs = 5;
  const TrainResult a = train(data, data, ls, cfg), b = train(data, data, ls, cfg);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.params, b.params);
}

TEST(Train, RejectsEmptyCorpusAndBadConfig) {
  const LabelSpace ls = small_space();
  const auto data = separable_sentence(ls);
  const std::vector<SentenceAnnotation> none;
  EXPECT_THROW(train(none, data, ls, quick_config()), ArgumentError);
  EXPECT_THROW(train(data, none, ls, quick_config()), ArgumentError);
  TrainConfig bad = quick_config();
  bad.logit_dropout = 1.0;
  EXPECT_THROW(train(data, data, ls, bad), ArgumentError);
}

TEST(Train, DivergenceAborts) {
  const LabelSpace ls = small_space();
  const auto data = separable_sentence(ls);
  TrainConfig cfg = quick_config();
  cfg.optimizer.learning_rate = 1e300;
  cfg.optimizer.warmup_ratio = 0.0;
  EXPECT_THROW(train(data, data, ls, cfg), NumericError);
}

}  // namespace
}  // namespace unire
