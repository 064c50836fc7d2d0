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

#include <random>

#include "test_util.hpp"
#include "unire/label_table.hpp"

namespace unire {
namespace {

using testing::small_space;
using testing::three_token_fixture;

TEST(LabelSpace, IdsAndSymmetry) {
  const LabelSpace ls = small_space();
  EXPECT_EQ(ls.size(), 5u);
  EXPECT_EQ(ls.id("PER"), 1u);
  EXPECT_EQ(ls.id("GPE"), 2u);
  EXPECT_EQ(ls.id("PHYS"), 3u);
  EXPECT_EQ(ls.id("PER-SOC"), 4u);
  EXPECT_TRUE(ls.is_symmetric(ls.id("PER")));
  EXPECT_TRUE(ls.is_symmetric(ls.id("GPE")));
  EXPECT_TRUE(ls.is_symmetric(ls.id("PER-SOC")));
  EXPECT_FALSE(ls.is_symmetric(ls.id("PHYS")));
  EXPECT_FALSE(ls.is_symmetric(kNullLabel));
}

TEST(LabelSpace, RejectsBadNames) {
  EXPECT_THROW(LabelSpace({}, {"R"}), ArgumentError);
  EXPECT_THROW(LabelSpace({"A", "A"}, {}), ArgumentError);
  EXPECT_THROW(LabelSpace({"A"}, {"A"}), ArgumentError);
  EXPECT_THROW(LabelSpace({""}, {}), ArgumentError);
  EXPECT_THROW(LabelSpace({"A"}, {"R"}, {"S"}), ArgumentError);
}

TEST(RenderGoldTable, ThreeTokenFixture) {
  const LabelSpace ls = small_space();
  const GoldTable t = render_gold_table(three_token_fixture(ls), ls);
  const LabelId per = ls.id("PER"), gpe = ls.id("GPE"), phys = ls.id("PHYS");
  const LabelId expect[3][3] = {{per, per, phys}, {per, per, phys}, {0, 0, gpe}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(t.at(i, j), expect[i][j]) << i << "," << j;
}

TEST(RenderGoldTable, MirroredSymmetricRelation) {
  const LabelSpace ls = small_space();
  SentenceAnnotation a;
  a.tokens = {"x", "y"};
  a.entities = {{{0, 1}, ls.id("PER")}, {{1, 2}, ls.id("PER")}};
  a.relations = {{0, 1, ls.id("PER-SOC")}, {1, 0, ls.id("PER-SOC")}};
  const GoldTable t = render_gold_table(a, ls);
  EXPECT_EQ(t.at(0, 1), ls.id("PER-SOC"));
  EXPECT_EQ(t.at(1, 0), ls.id("PER-SOC"));
}

TEST(RenderGoldTable, EmptyAnnotationIsAllNull) {
  const LabelSpace ls = small_space();
  SentenceAnnotation a;
  a.tokens = {"x", "y"};
  const GoldTable t = render_gold_table(a, ls);
  for (auto c : t.cells()) EXPECT_EQ(c, kNullLabel);
}

TEST(RenderGoldTable, RejectsInvalidAnnotations) {
  const LabelSpace ls = small_space();
  SentenceAnnotation a;
  a.tokens = {"x", "y", "z"};
  a.entities = {{{0, 2}, ls.id("PER")}, {{1, 3}, ls.id("GPE")}};
  EXPECT_THROW(render_gold_table(a, ls), InvalidAnnotation);

  a.entities = {{{0, 1}, ls.id("PER")}, {{1, 2}, ls.id("PER")}};
  a.relations = {{0, 1, ls.id("PER-SOC")}};
  EXPECT_THROW(render_gold_table(a, ls), InvalidAnnotation);

  a.relations = {{0, 0, ls.id("PHYS")}};
  EXPECT_THROW(render_gold_table(a, ls), InvalidAnnotation);

  a.relations = {{0, 1, ls.id("PER")}};
  EXPECT_THROW(render_gold_table(a, ls), InvalidAnnotation);

  a.relations = {};
  a.entities = {{{0, 4}, ls.id("PER")}};
  EXPECT_THROW(render_gold_table(a, ls), InvalidAnnotation);

  a.tokens.clear();
  a.entities.clear();
  EXPECT_THROW(render_gold_table(a, ls), InvalidAnnotation);
}

TEST(RenderGoldTable, GeneratedTablesAreSymmetricPerLabelAndPartitionCells) {
  GenConfig g = testing::small_gen(3);
  const auto corpus = generate_corpus(g, 200);
  const LabelSpace& ls = corpus.labels;
  for (const auto& s : corpus.sentences) {
    const GoldTable t = render_gold_table(s, ls);
    const std::size_t n = s.size();
    std::size_t ent_cells = 0, rel_cells = 0;
    for (const auto& e : s.entities) ent_cells += e.span.length() * e.span.length();
    for (const auto& r : s.relations)
      rel_cells += s.entities[r.head].span.length() * s.entities[r.tail].span.length();
    std::size_t null_cells = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_FALSE(ls.is_relation(t.at(i, i)));
      for (std::size_t j = 0; j < n; ++j) {
        null_cells += t.at(i, j) == kNullLabel;
        if (ls.is_symmetric(t.at(i, j))) {
          EXPECT_EQ(t.at(j, i), t.at(i, j));
        }
      }
    }
    EXPECT_EQ(ent_cells + rel_cells + null_cells, n * n);
  }
}

TEST(OneHotTensor, Exact) {
  const LabelSpace ls = small_space();
  const GoldTable t = render_gold_table(three_token_fixture(ls), ls);
  const ProbTensor p = one_hot_tensor(t, ls, 0.0);
  for (std::size_t t_ = 0; t_ < ls.size(); ++t_)
    EXPECT_EQ(p.at(0, 0, t_), t_ == ls.id("PER") ? 1.0 : 0.0);
  EXPECT_TRUE(is_distribution(p));
}

TEST(OneHotTensor, Smoothed) {
  GoldTable t(1);
  t.at(0, 0) = 2;
  const ProbTensor p = one_hot_tensor(t, 4, 0.01);
  EXPECT_NEAR(p.at(0, 0, 2), 0.97, 1e-15);
  for (std::size_t k : {0, 1, 3}) EXPECT_NEAR(p.at(0, 0, k), 0.01, 1e-15);
  EXPECT_TRUE(is_distribution(p));
}

TEST(OneHotTensor, RejectsLargeSmoothing) {
  GoldTable t(1);
  EXPECT_THROW(one_hot_tensor(t, 4, 0.25), ArgumentError);
  EXPECT_THROW(one_hot_tensor(t, 4, -0.1), ArgumentError);
  EXPECT_NO_THROW(one_hot_tensor(t, 4, 0.2499));
}

TEST(OneHotTensor, ArgmaxRecoversTable) {
  const LabelSpace ls = small_space();
  const GoldTable t = render_gold_table(three_token_fixture(ls), ls);
  for (double eps : {0.0, 0.01, 0.1, 0.19}) EXPECT_EQ(argmax_table(one_hot_tensor(t, ls, eps)), t);
}

TEST(Symmetrize, AveragesSymmetricLabelsOnly) {
  const LabelSpace ls = small_space();
  ProbTensor p(2, ls.size());
  const LabelId soc = ls.id("PER-SOC"), phys = ls.id("PHYS");
  p.at(0, 1, soc) = 0.8;
  p.at(1, 0, soc) = 0.2;
  p.at(0, 1, phys) = 0.1;
  p.at(1, 0, phys) = 0.7;
  const ProbTensor s = symmetrize(p, ls);
  EXPECT_DOUBLE_EQ(s.at(0, 1, soc), 0.5);
  EXPECT_DOUBLE_EQ(s.at(1, 0, soc), 0.5);
  EXPECT_EQ(s.at(0, 1, phys), 0.1);
  EXPECT_EQ(s.at(1, 0, phys), 0.7);
}

TEST(Symmetrize, FixedPointAndIdempotent) {
  const LabelSpace ls = small_space();
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const ProbTensor p = testing::random_tensor(1 + rep % 6, ls.size(), rng);
    const ProbTensor once = symmetrize(p, ls);
    EXPECT_EQ(symmetrize(once, ls), once);
  }
  const ProbTensor sym =
      one_hot_tensor(render_gold_table(three_token_fixture(ls), ls), ls, 0.0);
  EXPECT_EQ(symmetrize(sym, ls), sym);
}

TEST(Symmetrize, BackwardIsAdjoint) {
  const LabelSpace ls = small_space();
  std::mt19937_64 rng(5);
  const ProbTensor x = testing::random_tensor(4, ls.size(), rng);
  const ProbTensor y = testing::random_tensor(4, ls.size(), rng);
  const ProbTensor sx = symmetrize(x, ls);
  const CellTensor bty = symmetrize_backward(y, ls);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t k = 0; k < x.values().size(); ++k) {
    lhs += sx.values()[k] * y.values()[k];
    rhs += x.values()[k] * bty.values()[k];
  }
  EXPECT_NEAR(lhs, rhs, 1e-12);
}

}  // namespace
}  // namespace unire
