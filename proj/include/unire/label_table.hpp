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

// Unified label space and the word-pair table representation.
//
// Every cell (i, j) of an |s| x |s| table carries one label from
// Y = entity types + relation types + {null}. Entities are squares on the
// diagonal, relations are rectangles spanned by the head entity's rows and
// the tail entity's columns.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "unire/errors.hpp"

namespace unire {

using LabelId = std::uint32_t;
using TokenId = std::uint32_t;

inline constexpr LabelId kNullLabel = 0;

// Half-open token interval [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool contains(std::size_t i) const { return i >= start && i < end; }
  bool overlaps(const Span& o) const {
    return start < o.end && o.start < end;
  }
  auto operator<=>(const Span&) const = default;
};

struct Entity {
  Span span;
  LabelId type = kNullLabel;
  auto operator<=>(const Entity&) const = default;
};

// head/tail index into the owning entity list.
struct Relation {
  std::size_t head = 0;
  std::size_t tail = 0;
  LabelId type = kNullLabel;
  auto operator<=>(const Relation&) const = default;
};

class LabelSpace {
 public:
  LabelSpace() = default;

  // symmetric_relations names the undirected relation types. Entity types are
  // always symmetric and may be listed or omitted.
  LabelSpace(std::vector<std::string> entity_types,
             std::vector<std::string> relation_types,
             const std::vector<std::string>& symmetric_relations = {})
      : entity_types_(std::move(entity_types)),
        relation_types_(std::move(relation_types)) {
    if (entity_types_.empty()) {
      throw ArgumentError("label space needs at least one entity type");
    }
    names_.push_back(kNullName);
    for (const auto& n : entity_types_) names_.push_back(n);
    for (const auto& n : relation_types_) names_.push_back(n);
    for (LabelId id = 0; id < names_.size(); ++id) {
      const auto& n = names_[id];
      if (id > 0 && (n.empty() || n == kNullName)) {
        throw ArgumentError("label names must be non-empty and distinct from " +
                            std::string(kNullName));
      }
      if (!ids_.emplace(n, id).second) {
        throw ArgumentError("duplicate label name '" + n + "'");
      }
    }
    symmetric_.assign(names_.size(), false);
    for (LabelId id = 1; id <= entity_types_.size(); ++id) symmetric_[id] = true;
    for (const auto& n : symmetric_relations) {
      auto id = find(n);
      if (!id || *id == kNullLabel) {
        throw ArgumentError("symmetric label '" + n + "' is not a known label");
      }
      symmetric_[*id] = true;
    }
  }

  static constexpr const char* kNullName = "<null>";

  std::size_t size() const { return names_.size(); }
  std::size_t num_entity_types() const { return entity_types_.size(); }
  std::size_t num_relation_types() const { return relation_types_.size(); }

  const std::vector<std::string>& entity_types() const { return entity_types_; }
  const std::vector<std::string>& relation_types() const {
    return relation_types_;
  }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(LabelId id) const { return names_.at(id); }

  std::optional<LabelId> find(const std::string& name) const {
    auto it = ids_.find(name);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  LabelId id(const std::string& name) const {
    auto found = find(name);
    if (!found) throw ArgumentError("unknown label '" + name + "'");
    return *found;
  }

  LabelId entity_label(std::size_t k) const {
    return static_cast<LabelId>(1 + k);
  }
  LabelId relation_label(std::size_t k) const {
    return static_cast<LabelId>(1 + entity_types_.size() + k);
  }

  bool is_entity(LabelId id) const {
    return id >= 1 && id <= entity_types_.size();
  }
  bool is_relation(LabelId id) const {
    return id > entity_types_.size() && id < names_.size();
  }
  bool is_symmetric(LabelId id) const { return symmetric_.at(id); }

  std::vector<LabelId> entity_labels() const {
    std::vector<LabelId> out;
    for (std::size_t k = 0; k < entity_types_.size(); ++k)
      out.push_back(entity_label(k));
    return out;
  }
  std::vector<LabelId> relation_labels() const {
    std::vector<LabelId> out;
    for (std::size_t k = 0; k < relation_types_.size(); ++k)
      out.push_back(relation_label(k));
    return out;
  }
  std::vector<LabelId> symmetric_labels() const {
    std::vector<LabelId> out;
    for (LabelId id = 0; id < names_.size(); ++id)
      if (symmetric_[id]) out.push_back(id);
    return out;
  }
  std::vector<std::string> symmetric_relation_names() const {
    std::vector<std::string> out;
    for (auto id : relation_labels())
      if (symmetric_[id]) out.push_back(names_[id]);
    return out;
  }

  bool operator==(const LabelSpace& o) const {
    return names_ == o.names_ && symmetric_ == o.symmetric_;
  }

 private:
  std::vector<std::string> entity_types_;
  std::vector<std::string> relation_types_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, LabelId> ids_;
  std::vector<bool> symmetric_;
};

struct SentenceAnnotation {
  std::vector<std::string> tokens;
  std::vector<Entity> entities;
  std::vector<Relation> relations;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const SentenceAnnotation&) const = default;
};

// Throws InvalidAnnotation on the first violated invariant.
inline void validate(const SentenceAnnotation& ann, const LabelSpace& ls) {
  const std::size_t n = ann.size();
  if (n == 0) throw InvalidAnnotation("sentence has no tokens");
  for (std::size_t a = 0; a < ann.entities.size(); ++a) {
    const auto& e = ann.entities[a];
    if (e.span.start >= e.span.end || e.span.end > n) {
      throw InvalidAnnotation("entity " + std::to_string(a) +
                              " has span out of range");
    }
    if (!ls.is_entity(e.type)) {
      throw InvalidAnnotation("entity " + std::to_string(a) +
                              " type is not an entity label");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (e.span.overlaps(ann.entities[b].span)) {
        throw InvalidAnnotation("entities " + std::to_string(b) + " and " +
                                std::to_string(a) + " overlap");
      }
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::set<std::tuple<std::size_t, std::size_t, LabelId>> triplets;
  for (std::size_t r = 0; r < ann.relations.size(); ++r) {
    const auto& rel = ann.relations[r];
    const auto tag = "relation " + std::to_string(r);
    if (rel.head >= ann.entities.size() || rel.tail >= ann.entities.size()) {
      throw InvalidAnnotation(tag + " references a missing entity");
    }
    if (rel.head == rel.tail) throw InvalidAnnotation(tag + " has head == tail");
    if (!ls.is_relation(rel.type)) {
      throw InvalidAnnotation(tag + " type is not a relation label");
    }
    if (!pairs.emplace(rel.head, rel.tail).second) {
      throw InvalidAnnotation(tag + " duplicates an ordered entity pair");
    }
    triplets.emplace(rel.head, rel.tail, rel.type);
  }
  for (const auto& rel : ann.relations) {
    if (ls.is_symmetric(rel.type) &&
        !triplets.contains({rel.tail, rel.head, rel.type})) {
      throw InvalidAnnotation("symmetric relation '" + ls.name(rel.type) +
                              "' is missing its mirrored triplet");
    }
  }
}

class GoldTable {
 public:
  GoldTable() = default;
  explicit GoldTable(std::size_t n) : n_(n), cells_(n * n, kNullLabel) {}

  std::size_t size() const { return n_; }
  LabelId at(std::size_t i, std::size_t j) const { return cells_[i * n_ + j]; }
  LabelId& at(std::size_t i, std::size_t j) { return cells_[i * n_ + j]; }
  std::span<const LabelId> cells() const { return cells_; }

  bool operator==(const GoldTable&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<LabelId> cells_;
};

// Dense n x n x K tensor of per-cell scores, row-major with the label axis
// innermost. Used for probabilities, logits and their gradients.
class CellTensor {
 public:
  CellTensor() = default;
  CellTensor(std::size_t n, std::size_t k, double fill = 0.0)
      : n_(n), k_(k), values_(n * n * k, fill) {}

  std::size_t size() const { return n_; }
  std::size_t labels() const { return k_; }

  double at(std::size_t i, std::size_t j, std::size_t t) const {
    return values_[(i * n_ + j) * k_ + t];
  }
  double& at(std::size_t i, std::size_t j, std::size_t t) {
    return values_[(i * n_ + j) * k_ + t];
  }
  std::span<const double> cell(std::size_t i, std::size_t j) const {
    return {values_.data() + (i * n_ + j) * k_, k_};
  }
  std::span<double> cell(std::size_t i, std::size_t j) {
    return {values_.data() + (i * n_ + j) * k_, k_};
  }
  // Row i flattened to n*K values (the row view used by span decoding).
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * n_ * k_, n_ * k_};
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool operator==(const CellTensor&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  std::vector<double> values_;
};

// Per-cell categorical distributions P(y_ij | s).
using ProbTensor = CellTensor;

// True when every entry lies in [0, 1] and each cell sums to 1 within tol.
inline bool is_distribution(const ProbTensor& p, double tol = 1e-6) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      double sum = 0.0;
      for (double v : p.cell(i, j)) {
        if (!(v >= 0.0 && v <= 1.0)) return false;
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol) return false;
    }
  }
  return true;
}

inline GoldTable render_gold_table(const SentenceAnnotation& ann,
                                   const LabelSpace& ls) {
  validate(ann, ls);
  const std::size_t n = ann.size();
  GoldTable table(n);
  for (const auto& e : ann.entities) {
    for (auto i = e.span.start; i < e.span.end; ++i)
      for (auto j = e.span.start; j < e.span.end; ++j) table.at(i, j) = e.type;
  }
  for (const auto& rel : ann.relations) {
    const auto& head = ann.entities[rel.head].span;
    const auto& tail = ann.entities[rel.tail].span;
    for (auto i = head.start; i < head.end; ++i) {
      for (auto j = tail.start; j < tail.end; ++j) {
        auto& cell = table.at(i, j);
        if (cell != kNullLabel && cell != rel.type) {
          throw ConsistencyError("relation '" + ls.name(rel.type) +
                                 "' collides with label '" + ls.name(cell) +
                                 "' at cell (" + std::to_string(i) + "," +
                                 std::to_string(j) + ")");
        }
        cell = rel.type;
      }
    }
  }
  return table;
}

// Smoothed one-hot rendering of a gold table: the gold label gets
// 1 - eps*(K-1), every other label gets eps.
inline ProbTensor one_hot_tensor(const GoldTable& table, std::size_t num_labels,
                                 double eps = 0.0) {
  if (num_labels == 0) throw ArgumentError("label space is empty");
  if (eps < 0.0 || eps * static_cast<double>(num_labels) >= 1.0) {
    throw ArgumentError("smoothing must satisfy 0 <= eps < 1/|Y|");
  }
  const std::size_t n = table.size();
  ProbTensor p(n, num_labels, eps);
  const double top = 1.0 - eps * static_cast<double>(num_labels - 1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p.at(i, j, table.at(i, j)) = top;
  return p;
}

inline ProbTensor one_hot_tensor(const GoldTable& table, const LabelSpace& ls,
                                 double eps = 0.0) {
  return one_hot_tensor(table, ls.size(), eps);
}

// Per-cell argmax, smallest label id on ties.
inline GoldTable argmax_table(const ProbTensor& p) {
  GoldTable out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      auto c = p.cell(i, j);
      out.at(i, j) = static_cast<LabelId>(
          std::max_element(c.begin(), c.end()) - c.begin());
    }
  }
  return out;
}

// Averages each symmetric label's slice with its transpose. Rows are not
// renormalized afterwards.
// Writes the symmetrized p into out, reusing out's storage when the shapes
// match. Tiles keep the transposed reads in cache.
inline void symmetrize_into(const ProbTensor& p, const LabelSpace& ls, ProbTensor& out) {
  const std::size_t n = p.size(), k = p.labels();
  if (out.size() != n || out.labels() != k) out = ProbTensor(n, k);
  std::vector<char> sym(k, 0);
  for (LabelId t : ls.symmetric_labels())
    if (t < k) sym[t] = 1;
  constexpr std::size_t kTile = 16;
  for (std::size_t i0 = 0; i0 < n; i0 += kTile) {
    for (std::size_t j0 = i0; j0 < n; j0 += kTile) {
      const std::size_t i1 = std::min(i0 + kTile, n), j1 = std::min(j0 + kTile, n);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = std::max(j0, i); j < j1; ++j) {
          const auto a = p.cell(i, j);
          const auto b = p.cell(j, i);
          auto oa = out.cell(i, j);
          auto ob = out.cell(j, i);
          for (std::size_t t = 0; t < k; ++t) {
            if (sym[t]) {
              oa[t] = ob[t] = (a[t] + b[t]) / 2.0;
            } else {
              oa[t] = a[t];
              ob[t] = b[t];
            }
          }
        }
      }
    }
  }
}

inline ProbTensor symmetrize(const ProbTensor& p, const LabelSpace& ls) {
  ProbTensor out;
  symmetrize_into(p, ls, out);
  return out;
}

// Adjoint of symmetrize: each source cell receives half of both mirrored
// output gradients.
inline CellTensor symmetrize_backward(const CellTensor& d_out,
                                      const LabelSpace& ls) {
  CellTensor d_in = d_out;
  const std::size_t n = d_out.size();
  for (LabelId t : ls.symmetric_labels()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double avg = (d_out.at(i, j, t) + d_out.at(j, i, t)) / 2.0;
        d_in.at(i, j, t) = avg;
        d_in.at(j, i, t) = avg;
      }
    }
  }
  return d_in;
}

}  // namespace unire
