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

#include <algorithm>
#include <random>

#include "test_util.hpp"
#include "unire/evaluation.hpp"

namespace unire {
namespace {

using testing::small_space;

TEST(Counts, ConventionsAndRanges) {
  const Counts none{0, 0, 0};
  EXPECT_EQ(none.precision(), 0.0);
  EXPECT_EQ(none.recall(), 0.0);
  EXPECT_EQ(none.f1(), 0.0);
  EXPECT_EQ(span_f1(none), 1.0);
  const Counts c{2, 1, 1};
  EXPECT_EQ(c.precision(), 1.0);
  EXPECT_EQ(c.recall(), 0.5);
  EXPECT_NEAR(c.f1(), 2.0 / 3.0, 1e-15);
}

TEST(StrictEval, IdenticalPredictionIsPerfect) {
  const LabelSpace ls = small_space();
  const auto a = testing::three_token_fixture(ls);
  ExtractionResult r;
  r.entities = a.entities;
  r.relations = a.relations;
  const SentenceEval e = strict_eval(r, a, ls);
  EXPECT_EQ(e.entity.f1(), 1.0);
  EXPECT_EQ(e.relation.f1(), 1.0);
  EXPECT_EQ(e.relation.precision(), 1.0);
}

TEST(StrictEval, HalfRecall) {
  const LabelSpace ls = small_space();
  SentenceAnnotation g;
  g.tokens = {"a", "b", "c"};
  g.entities = {{{0, 1}, ls.id("PER")}, {{1, 2}, ls.id("GPE")}, {{2, 3}, ls.id("GPE")}};
  g.relations = {{0, 1, ls.id("PHYS")}, {0, 2, ls.id("PHYS")}};
  ExtractionResult r;
  r.entities = g.entities;
  r.relations = {{0, 1, ls.id("PHYS")}};
  const SentenceEval e = strict_eval(r, g, ls);
  EXPECT_EQ(e.relation.precision(), 1.0);
  EXPECT_EQ(e.relation.recall(), 0.5);
  EXPECT_NEAR(e.relation.f1(), 2.0 / 3.0, 1e-15);
}

TEST(StrictEval, WrongArgumentTypeFailsRelation) {
  const LabelSpace ls = small_space();
  const auto g = testing::three_token_fixture(ls);
  ExtractionResult r;
  r.entities = {{{0, 2}, ls.id("GPE")}, {{2, 3}, ls.id("GPE")}};
  r.relations = g.relations;
  const SentenceEval e = strict_eval(r, g, ls);
  EXPECT_EQ(e.relation.correct, 0u);
  EXPECT_EQ(e.entity.correct, 1u);
}

TEST(StrictEval, ThreeSentenceFixtureMicroAverages) {
  const LabelSpace ls = small_space();
  const auto f = testing::three_sentence_fixture(ls);
  const EvalReport r = strict_eval(f.pred, f.gold, ls);
  EXPECT_EQ(r.entity.gold, 6u);
  EXPECT_EQ(r.entity.predicted, 7u);
  EXPECT_EQ(r.entity.correct, 4u);
  EXPECT_EQ(r.relation.gold, 3u);
  EXPECT_EQ(r.relation.predicted, 4u);
  EXPECT_EQ(r.relation.correct, 1u);
  EXPECT_NEAR(r.entity.precision(), 4.0 / 7.0, 1e-12);
  EXPECT_NEAR(r.entity.recall(), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.entity.f1(), 8.0 / 13.0, 1e-12);
  EXPECT_NEAR(r.relation.precision(), 0.25, 1e-12);
  EXPECT_NEAR(r.relation.recall(), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.relation.f1(), 2.0 / 7.0, 1e-12);
  EXPECT_EQ(r.per_sentence.size(), 3u);
}

TEST(StrictEval, OrderIndependent) {
  const LabelSpace ls = small_space();
  const auto f = testing::three_sentence_fixture(ls);
  const EvalReport base = strict_eval(f.pred, f.gold, ls);
  auto pred = f.pred;
  for (auto& p : pred) {
    // Reverse entity order and remap relation endpoints.
    const std::size_t m = p.entities.size();
    std::reverse(p.entities.begin(), p.entities.end());
    for (auto& r : p.relations) {
      r.head = m - 1 - r.head;
      r.tail = m - 1 - r.tail;
    }
    std::reverse(p.relations.begin(), p.relations.end());
  }
  const EvalReport shuffled = strict_eval(pred, f.gold, ls);
  EXPECT_EQ(shuffled.entity.correct, base.entity.correct);
  EXPECT_EQ(shuffled.relation.correct, base.relation.correct);
  EXPECT_EQ(shuffled.relation.predicted, base.relation.predicted);
}

TEST(StrictEval, RejectsOutOfRangeSpans) {
  const LabelSpace ls = small_space();
  const auto g = testing::three_token_fixture(ls);
  ExtractionResult r;
  r.entities = {{{2, 5}, ls.id("PER")}};
  EXPECT_THROW(strict_eval(r, g, ls), ArgumentError);
}

TEST(SpanF1, Examples) {
  EXPECT_EQ(span_f1({2, 3}, {2, 3}), 1.0);
  EXPECT_EQ(span_f1({}, {}), 1.0);
  EXPECT_EQ(span_f1({}, {4}), 0.0);
  EXPECT_EQ(span_f1({2, 5}, {2, 7}), 0.5);
}

TEST(SpanF1, GoldSplitsAreInteriorBoundaries) {
  const std::vector<Entity> ents{{{0, 2}, 1}, {{3, 5}, 1}};
  EXPECT_EQ(gold_splits(ents, 5), (std::set<std::size_t>{2, 3}));
  ExtractionResult r;
  r.split_positions = {1, 4, 5};
  EXPECT_EQ(predicted_splits(r, 5), (std::set<std::size_t>{1, 4}));
}

TEST(ErrorTaxonomy, Categories) {
  const LabelSpace ls = small_space();
  const LabelId per = ls.id("PER"), gpe = ls.id("GPE"), phys = ls.id("PHYS");
  SentenceAnnotation g;
  g.tokens = {"a", "b", "c", "d", "e"};
  g.entities = {{{0, 3}, per}, {{4, 5}, gpe}};
  g.relations = {{0, 1, phys}};

  auto tag = [&](const ExtractionResult& r) {
    const ErrorBreakdown b = error_taxonomy(r, g, ls);
    EXPECT_EQ(b.total(), 1u);
    for (std::size_t k = 0; k < kNumRelationErrors; ++k)
      if (b.counts[k]) return static_cast<RelationError>(k);
    return RelationError::kRelationTypeError;
  };
  ExtractionResult missing;
  missing.entities = {{{0, 3}, per}};
  EXPECT_EQ(tag(missing), RelationError::kEntityNotFound);

  ExtractionResult no_rel;
  no_rel.entities = g.entities;
  EXPECT_EQ(tag(no_rel), RelationError::kRelationNotFound);

  ExtractionResult split;
  split.entities = {{{0, 1}, per}, {{1, 3}, per}, {{4, 5}, gpe}};
  split.split_positions = {1, 3, 4, 5};
  EXPECT_EQ(tag(split), RelationError::kSpanSplitting);

  ExtractionResult wrong_type;
  wrong_type.entities = {{{0, 3}, gpe}, {{4, 5}, gpe}};
  wrong_type.relations = {{0, 1, phys}};
  EXPECT_EQ(tag(wrong_type), RelationError::kEntityTypeError);

  ExtractionResult reversed;
  reversed.entities = g.entities;
  reversed.relations = {{1, 0, phys}};
  EXPECT_EQ(tag(reversed), RelationError::kRelationTypeError);

  ExtractionResult soc;
  soc.entities = g.entities;
  soc.relations = {{0, 1, ls.id("PER-SOC")}, {1, 0, ls.id("PER-SOC")}};
  EXPECT_EQ(tag(soc), RelationError::kRelationTypeError);

  ExtractionResult right;
  right.entities = g.entities;
  right.relations = g.relations;
  EXPECT_EQ(error_taxonomy(right, g, ls).total(), 0u);
  for (std::size_t k = 0; k < kNumRelationErrors; ++k)
    EXPECT_EQ(error_taxonomy(right, g, ls).fraction(static_cast<RelationError>(k)), 0.0);
}

TEST(ErrorTaxonomy, PartitionsMissedRelations) {
  const auto corpus = generate_corpus(testing::small_gen(55, 20), 300);
  const LabelSpace& ls = corpus.labels;
  std::mt19937_64 rng(2);
  std::vector<ExtractionResult> preds;
  for (const auto& s : corpus.sentences) {
    const ProbTensor p = corrupt_tensor(one_hot_tensor(render_gold_table(s, ls), ls, 0.0),
                                        NoiseMode::kLabelFlip, 0.15, rng);
    preds.push_back(joint_decode(p, ls));
  }
  const EvalReport rep = strict_eval(preds, corpus.sentences, ls);
  const ErrorBreakdown b = error_taxonomy(preds, corpus.sentences, ls);
  EXPECT_EQ(b.total(), rep.relation.gold - rep.relation.correct);
  EXPECT_GT(b.total(), 0u);
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumRelationErrors; ++k) sum += b.fraction(static_cast<RelationError>(k));
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(DistanceHistogram, OneHotSeparation) {
  const auto corpus = generate_corpus(testing::small_gen(60, 30), 100);
  const LabelSpace& ls = corpus.labels;
  std::vector<ProbTensor> tensors;
  for (const auto& s : corpus.sentences)
    tensors.push_back(one_hot_tensor(render_gold_table(s, ls), ls, 0.0));
  const auto h = distance_histogram(tensors, corpus.sentences, ls);
  EXPECT_GT(h.non_entity_boundary.total(), 0u);
  EXPECT_EQ(h.non_entity_boundary.bins[0], h.non_entity_boundary.total());
  EXPECT_GT(h.entity_boundary.total(), 0u);
  EXPECT_EQ(h.entity_boundary.count_at_least(2.0), h.entity_boundary.total());
  EXPECT_GE(h.min_entity_boundary, 2.0);
  EXPECT_EQ(h.max_non_entity_boundary, 0.0);
}

TEST(DistanceHistogram, UniformTensorsCollapseAtZero) {
  const auto corpus = generate_corpus(testing::small_gen(61, 30), 30);
  const LabelSpace& ls = corpus.labels;
  std::vector<ProbTensor> tensors;
  for (const auto& s : corpus.sentences)
    tensors.emplace_back(s.size(), ls.size(), 1.0 / ls.size());
  const auto h = distance_histogram(tensors, corpus.sentences, ls);
  EXPECT_EQ(h.entity_boundary.bins[0], h.entity_boundary.total());
  EXPECT_EQ(h.non_entity_boundary.bins[0], h.non_entity_boundary.total());
}

TEST(Histogram, BinsAndOverflow) {
  Histogram h;
  for (double x : {0.0, 0.05, 0.1, 4.99, 5.0, 7.0}) h.add(x);
  EXPECT_EQ(h.bins[0], 2u);
  EXPECT_EQ(h.bins[1], 1u);
  EXPECT_EQ(h.bins[49], 1u);
  EXPECT_EQ(h.overflow, 2u);
  EXPECT_EQ(h.total(), 6u);
}

TEST(ThresholdSweep, GridArithmetic) {
  const auto g = alpha_grid(0.6, 2.0, 0.1);
  ASSERT_EQ(g.size(), 15u);
  EXPECT_DOUBLE_EQ(g.front(), 0.6);
  EXPECT_NEAR(g.back(), 2.0, 1e-12);
  EXPECT_THROW(alpha_grid(1.0, 0.5, 0.1), ArgumentError);
  EXPECT_THROW(alpha_grid(0.5, 1.0, 0.0), ArgumentError);
}

TEST(ThresholdSweep, CleanCorpusIsPerfectBelowTwo) {
  const auto corpus = generate_corpus(testing::small_gen(62, 30), 100);
  const LabelSpace& ls = corpus.labels;
  std::vector<ProbTensor> tensors;
  for (const auto& s : corpus.sentences)
    tensors.push_back(one_hot_tensor(render_gold_table(s, ls), ls, 0.0));
  const std::vector<double> alphas{0.05, 0.6, 1.0, 1.4, 1.9, 1.99};
  for (const auto& row : threshold_sweep(tensors, corpus.sentences, ls, alphas)) {
    EXPECT_EQ(row.span_f1, 1.0) << row.alpha;
    EXPECT_EQ(row.entity_f1, 1.0) << row.alpha;
    EXPECT_EQ(row.relation_f1, 1.0) << row.alpha;
  }
  const std::vector<double> huge{1e6};
  const auto row = threshold_sweep(tensors, corpus.sentences, ls, huge).front();
  EXPECT_LT(row.span_f1, 1.0);
  EXPECT_LT(row.entity_f1, 1.0);
}

}  // namespace
}  // namespace unire
