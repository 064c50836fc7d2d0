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

// Strict micro-averaged scoring, span F1, relation error taxonomy and the
// boundary-distance analyses.
//
// Strict criterion: an entity is correct iff span and type match; a relation
// is correct iff its type matches and both arguments are correct entities.
// Undirected relations are counted once per unordered pair.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "unire/decoder.hpp"
#include "unire/errors.hpp"
#include "unire/label_table.hpp"

namespace unire {

// Micro counts. precision/recall use the 0/0 -> 0 convention.
struct Counts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;

  double precision() const {
    return predicted == 0 ? 0.0 : static_cast<double>(correct) / predicted;
  }
  double recall() const {
    return gold == 0 ? 0.0 : static_cast<double>(correct) / gold;
  }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  Counts& operator+=(const Counts& o) {
    gold += o.gold;
    predicted += o.predicted;
    correct += o.correct;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

// Span F1 treats two empty split sets as a perfect match.
inline double span_f1(const Counts& c) {
  if (c.gold == 0 && c.predicted == 0) return 1.0;
  return c.f1();
}

struct CanonicalRelation {
  Entity head;
  Entity tail;
  LabelId type = kNullLabel;
  auto operator<=>(const CanonicalRelation&) const = default;
};

// Entities and relations keyed by content rather than list position.
struct CanonicalStructure {
  std::set<Entity> entities;
  std::set<CanonicalRelation> relations;
  bool operator==(const CanonicalStructure&) const = default;
};

inline CanonicalStructure canonicalize(const std::vector<Entity>& entities,
                                       const std::vector<Relation>& relations,
                                       const LabelSpace& ls) {
  CanonicalStructure out;
  out.entities.insert(entities.begin(), entities.end());
  for (const auto& r : relations) {
    CanonicalRelation c{entities.at(r.head), entities.at(r.tail), r.type};
    if (ls.is_symmetric(r.type) && c.tail < c.head) std::swap(c.head, c.tail);
    out.relations.insert(c);
  }
  return out;
}
inline CanonicalStructure canonicalize(const SentenceAnnotation& a,
                                       const LabelSpace& ls) {
  return canonicalize(a.entities, a.relations, ls);
}
inline CanonicalStructure canonicalize(const ExtractionResult& r,
                                       const LabelSpace& ls) {
  return canonicalize(r.entities, r.relations, ls);
}

// Interior entity boundaries (starts and ends strictly inside (0, n)).
inline std::set<std::size_t> gold_splits(const std::vector<Entity>& entities,
                                         std::size_t n) {
  std::set<std::size_t> out;
  for (const auto& e : entities) {
    if (e.span.start > 0 && e.span.start < n) out.insert(e.span.start);
    if (e.span.end > 0 && e.span.end < n) out.insert(e.span.end);
  }
  return out;
}

// Interior split positions of a decode. Decoders without a span stage fall
// back to their entity boundaries.
inline std::set<std::size_t> predicted_splits(const ExtractionResult& r,
                                              std::size_t n) {
  if (r.split_positions.empty()) return gold_splits(r.entities, n);
  std::set<std::size_t> out;
  for (auto s : r.split_positions)
    if (s > 0 && s < n) out.insert(s);
  return out;
}

inline Counts split_counts(const std::set<std::size_t>& pred,
                           const std::set<std::size_t>& gold) {
  Counts c{gold.size(), pred.size(), 0};
  for (auto s : pred) c.correct += gold.contains(s);
  return c;
}

inline double span_f1(const std::set<std::size_t>& pred,
                      const std::set<std::size_t>& gold) {
  return span_f1(split_counts(pred, gold));
}

struct SentenceEval {
  Counts entity;
  Counts relation;
  Counts span;
};

struct EvalReport {
  Counts entity;
  Counts relation;
  Counts span;
  std::vector<SentenceEval> per_sentence;

  void add(const SentenceEval& s) {
    entity += s.entity;
    relation += s.relation;
    span += s.span;
    per_sentence.push_back(s);
  }
  double span_f1() const { return unire::span_f1(span); }
  // Dev-selection metric: unweighted mean of entity and relation F1.
  double mean_f1() const { return (entity.f1() + relation.f1()) / 2.0; }
};

inline SentenceEval strict_eval(const ExtractionResult& pred,
                                const SentenceAnnotation& gold,
                                const LabelSpace& ls) {
  const std::size_t n = gold.size();
  for (const auto& e : pred.entities) {
    if (e.span.start >= e.span.end || e.span.end > n) {
      throw ArgumentError("predicted entity span out of range for a sentence of length " +
                          std::to_string(n));
    }
  }
  const auto g = canonicalize(gold, ls);
  const auto p = canonicalize(pred, ls);
  SentenceEval out;
  out.entity = {g.entities.size(), p.entities.size(), 0};
  for (const auto& e : p.entities) out.entity.correct += g.entities.contains(e);
  out.relation = {g.relations.size(), p.relations.size(), 0};
  for (const auto& r : p.relations) out.relation.correct += g.relations.contains(r);
  out.span = split_counts(predicted_splits(pred, n), gold_splits(gold.entities, n));
  return out;
}

inline EvalReport strict_eval(std::span<const ExtractionResult> preds,
                              std::span<const SentenceAnnotation> golds,
                              const LabelSpace& ls) {
  if (preds.size() != golds.size()) {
    throw ArgumentError("prediction and gold corpora differ in length (" +
                        std::to_string(preds.size()) + " vs " +
                        std::to_string(golds.size()) + ")");
  }
  EvalReport report;
  for (std::size_t s = 0; s < preds.size(); ++s)
    report.add(strict_eval(preds[s], golds[s], ls));
  return report;
}

enum class RelationError : std::size_t {
  kSpanSplitting = 0,       // SSE
  kEntityNotFound = 1,      // ENF
  kEntityTypeError = 2,     // ETE
  kRelationNotFound = 3,    // RNF
  kRelationTypeError = 4,   // RTE
};
inline constexpr std::size_t kNumRelationErrors = 5;

inline std::string_view short_name(RelationError e) {
  static constexpr std::array<std::string_view, kNumRelationErrors> names = {
      "SSE", "ENF", "ETE", "RNF", "RTE"};
  return names[static_cast<std::size_t>(e)];
}

struct ErrorBreakdown {
  std::array<std::size_t, kNumRelationErrors> counts{};

  std::size_t total() const {
    std::size_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
  std::size_t count(RelationError e) const {
    return counts[static_cast<std::size_t>(e)];
  }
  double fraction(RelationError e) const {
    const auto t = total();
    return t == 0 ? 0.0 : static_cast<double>(count(e)) / t;
  }
  ErrorBreakdown& operator+=(const ErrorBreakdown& o) {
    for (std::size_t k = 0; k < kNumRelationErrors; ++k) counts[k] += o.counts[k];
    return *this;
  }
};

// Tags one missed gold relation, first matching rule wins:
// SSE  a predicted boundary falls strictly inside an argument's gold span;
// ENF  an argument's gold span is not a predicted entity span;
// ETE  the span is predicted but with another type;
// RNF  both arguments are correct but no relation links them either way;
// RTE  otherwise (a relation links them with the wrong type or direction).
inline RelationError classify_missed_relation(const CanonicalRelation& gold,
                                              const ExtractionResult& pred,
                                              std::size_t n) {
  const auto boundaries = predicted_splits(pred, n);
  auto cut = [&](const Span& s) {
    auto it = boundaries.upper_bound(s.start);
    return it != boundaries.end() && *it < s.end;
  };
  if (cut(gold.head.span) || cut(gold.tail.span)) return RelationError::kSpanSplitting;

  auto find_span = [&](const Span& s) -> const Entity* {
    for (const auto& e : pred.entities)
      if (e.span == s) return &e;
    return nullptr;
  };
  const Entity* h = find_span(gold.head.span);
  const Entity* t = find_span(gold.tail.span);
  if (!h || !t) return RelationError::kEntityNotFound;
  if (h->type != gold.head.type || t->type != gold.tail.type) {
    return RelationError::kEntityTypeError;
  }
  const std::size_t hi = static_cast<std::size_t>(h - pred.entities.data());
  const std::size_t ti = static_cast<std::size_t>(t - pred.entities.data());
  for (const auto& r : pred.relations) {
    if ((r.head == hi && r.tail == ti) || (r.head == ti && r.tail == hi)) {
      return RelationError::kRelationTypeError;
    }
  }
  return RelationError::kRelationNotFound;
}

inline ErrorBreakdown error_taxonomy(const ExtractionResult& pred,
                                     const SentenceAnnotation& gold,
                                     const LabelSpace& ls) {
  const auto g = canonicalize(gold, ls);
  const auto p = canonicalize(pred, ls);
  ErrorBreakdown out;
  for (const auto& r : g.relations) {
    if (p.relations.contains(r)) continue;
    ++out.counts[static_cast<std::size_t>(
        classify_missed_relation(r, pred, gold.size()))];
  }
  return out;
}

inline ErrorBreakdown error_taxonomy(std::span<const ExtractionResult> preds,
                                     std::span<const SentenceAnnotation> golds,
                                     const LabelSpace& ls) {
  if (preds.size() != golds.size()) {
    throw ArgumentError("prediction and gold corpora differ in length");
  }
  ErrorBreakdown out;
  for (std::size_t s = 0; s < preds.size(); ++s)
    out += error_taxonomy(preds[s], golds[s], ls);
  return out;
}

// Fixed-width histogram on [0, max) with one overflow bin.
struct Histogram {
  double bin_width = 0.1;
  double max = 5.0;
  std::vector<std::size_t> bins = std::vector<std::size_t>(50, 0);
  std::size_t overflow = 0;

  void add(double x) {
    if (x >= max) {
      ++overflow;
      return;
    }
    auto idx = static_cast<std::size_t>(std::floor(std::max(x, 0.0) / bin_width));
    ++bins[std::min(idx, bins.size() - 1)];
  }
  std::size_t total() const {
    std::size_t t = overflow;
    for (auto b : bins) t += b;
    return t;
  }
  // Count of samples in bins whose lower edge is >= x.
  std::size_t count_at_least(double x) const {
    std::size_t t = overflow;
    for (std::size_t b = 0; b < bins.size(); ++b)
      if (static_cast<double>(b) * bin_width >= x - 1e-12) t += bins[b];
    return t;
  }
};

struct DistanceHistograms {
  Histogram entity_boundary;      // Ent-Bound
  Histogram non_entity_boundary;  // Non-Ent-Bound
  double min_entity_boundary = std::numeric_limits<double>::infinity();
  double max_non_entity_boundary = 0.0;
};

// Bins every adjacent-row distance the joint decoder would see (after
// symmetrization), split by whether the position is a gold entity boundary.
inline DistanceHistograms distance_histogram(
    std::span<const ProbTensor> tensors,
    std::span<const SentenceAnnotation> golds, const LabelSpace& ls,
    DistanceMode mode = DistanceMode::kSquared) {
  if (tensors.size() != golds.size()) {
    throw ArgumentError("tensor and gold corpora differ in length");
  }
  DistanceHistograms out;
  for (std::size_t s = 0; s < tensors.size(); ++s) {
    if (tensors[s].size() != golds[s].size()) {
      throw ArgumentError("tensor " + std::to_string(s) +
                          " does not match its sentence length");
    }
    ProbTensor sym;
    const auto d = symmetrize_with_distances(tensors[s], ls, mode, sym);
    const auto bounds = gold_splits(golds[s].entities, golds[s].size());
    for (std::size_t x = 0; x < d.size(); ++x) {
      if (bounds.contains(x + 1)) {
        out.entity_boundary.add(d[x]);
        out.min_entity_boundary = std::min(out.min_entity_boundary, d[x]);
      } else {
        out.non_entity_boundary.add(d[x]);
        out.max_non_entity_boundary = std::max(out.max_non_entity_boundary, d[x]);
      }
    }
  }
  return out;
}

// Inclusive grid lo, lo+step, ..., hi (hi included when it lies on the grid).
inline std::vector<double> alpha_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw ArgumentError("invalid alpha grid");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> out;
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(lo + static_cast<double>(k) * step);
  return out;
}

struct SweepRow {
  double alpha = 0.0;
  double span_f1 = 0.0;
  double entity_f1 = 0.0;
  double relation_f1 = 0.0;
};

inline std::vector<SweepRow> threshold_sweep(
    std::span<const ProbTensor> tensors,
    std::span<const SentenceAnnotation> golds, const LabelSpace& ls,
    std::span<const double> alphas,
    DistanceMode mode = DistanceMode::kSquared) {
  if (alphas.empty()) throw ArgumentError("alpha grid is empty");
  if (tensors.size() != golds.size()) {
    throw ArgumentError("tensor and gold corpora differ in length");
  }
  std::vector<ProbTensor> sym;
  std::vector<std::vector<double>> dists;
  for (const auto& p : tensors) {
    sym.emplace_back();
    dists.push_back(symmetrize_with_distances(p, ls, mode, sym.back()));
  }
  std::vector<SweepRow> rows;
  for (double alpha : alphas) {
    DecodeConfig{alpha, mode}.validate();
    EvalReport report;
    for (std::size_t s = 0; s < sym.size(); ++s) {
      auto spans = spans_from_distances(dists[s], sym[s].size(), alpha);
      report.add(strict_eval(joint_decode_spans(sym[s], ls, std::move(spans)),
                             golds[s], ls));
    }
    rows.push_back({alpha, report.span_f1(), report.entity.f1(),
                    report.relation.f1()});
  }
  return rows;
}

}  // namespace unire
