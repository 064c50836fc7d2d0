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

// Decoders from a probability table to entities and relations.
//
//  * joint_decode: symmetrize, split the sentence where adjacent rows/columns
//    of the table differ by more than alpha, type each span from its square
//    and each ordered entity pair from its rectangle.
//  * hard_decode: per-cell argmax, then greedy square search by label
//    frequency from the largest square down.
//  * oracle_decode: exhaustive search over segmentations for short
//    sentences, scored by the log-likelihood of the rendered table.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "unire/errors.hpp"
#include "unire/label_table.hpp"

namespace unire {

enum class DistanceMode {
  kSquared,  // (||dr||^2 + ||dc||^2) / 2
  kL2,       // (||dr|| + ||dc||) / 2
};

enum class DecoderKind { kJoint, kHard, kOracle };

inline std::string_view to_string(DistanceMode m) {
  return m == DistanceMode::kSquared ? "squared" : "l2";
}
inline DistanceMode parse_distance_mode(std::string_view s) {
  if (s == "squared") return DistanceMode::kSquared;
  if (s == "l2") return DistanceMode::kL2;
  throw ArgumentError("unknown distance mode '" + std::string(s) + "'");
}
inline std::string_view to_string(DecoderKind k) {
  switch (k) {
    case DecoderKind::kJoint: return "joint";
    case DecoderKind::kHard: return "hard";
    case DecoderKind::kOracle: return "oracle";
  }
  return "joint";
}
inline DecoderKind parse_decoder_kind(std::string_view s) {
  if (s == "joint") return DecoderKind::kJoint;
  if (s == "hard") return DecoderKind::kHard;
  if (s == "oracle") return DecoderKind::kOracle;
  throw ArgumentError("unknown decoder '" + std::string(s) + "'");
}

struct DecodeConfig {
  double alpha = 1.4;
  DistanceMode distance_mode = DistanceMode::kSquared;

  void validate() const {
    if (!(alpha > 0.0)) throw ArgumentError("threshold alpha must be positive");
  }
};

struct ExtractionResult {
  std::vector<Entity> entities;      // sorted by span, non-overlapping
  std::vector<Relation> relations;   // indices into entities
  DecoderKind decoder = DecoderKind::kJoint;
  std::vector<std::size_t> split_positions;  // joint/oracle; always ends at |s|
};

// d_k for every interior boundary k = 1..n-1 (between tokens k-1 and k),
// returned at index k-1. Rows and columns are the n*|Y| flattenings of p.
inline std::vector<double> boundary_distances(const ProbTensor& p,
                                              DistanceMode mode) {
  const std::size_t n = p.size(), k = p.labels();
  if (n < 2) return {};
  std::vector<double> row_sq(n - 1, 0.0), col_sq(n - 1, 0.0);
  const std::size_t width = n * k;
  // One pass over memory: row r is compared with row r-1 (still cached) and
  // its adjacent cells feed the column distances.
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = p.row(r).data();
    if (r > 0) {
      const double* prev = p.row(r - 1).data();
      double s = 0.0;
      for (std::size_t x = 0; x < width; ++x) {
        const double diff = prev[x] - row[x];
        s += diff * diff;
      }
      row_sq[r - 1] = s;
    }
    for (std::size_t b = 1; b < n; ++b) {
      const double* a = row + (b - 1) * k;
      const double* c = row + b * k;
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        const double diff = a[t] - c[t];
        s += diff * diff;
      }
      col_sq[b - 1] += s;
    }
  }
  std::vector<double> d(n - 1);
  for (std::size_t x = 0; x + 1 < n; ++x) {
    d[x] = mode == DistanceMode::kSquared
               ? (row_sq[x] + col_sq[x]) / 2.0
               : (std::sqrt(row_sq[x]) + std::sqrt(col_sq[x])) / 2.0;
  }
  return d;
}

// Symmetrizes p into sym (reusing its storage) and returns the boundary
// distances of sym in the same pass. Tile pairs (I, J) and (J, I) are written
// together; each written cell is compared with its upper and left neighbours,
// which always lie in tiles written earlier, so the tensor is read and written
// once.
inline std::vector<double> symmetrize_with_distances(const ProbTensor& p, const LabelSpace& ls,
                                                     DistanceMode mode, ProbTensor& sym) {
  const std::size_t n = p.size(), k = p.labels();
  if (k != ls.size()) throw ArgumentError("tensor/label space mismatch");
  if (sym.size() != n || sym.labels() != k) sym = ProbTensor(n, k);
  std::vector<char> is_sym(k, 0);
  for (LabelId t : ls.symmetric_labels()) is_sym[t] = 1;
  std::vector<double> row_sq(n, 0.0), col_sq(n, 0.0);
  auto cell_sq = [k](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
      const double diff = a[t] - b[t];
      s += diff * diff;
    }
    return s;
  };
  auto accumulate = [&](std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) {
    for (std::size_t i = i0; i < i1; ++i) {
      for (std::size_t j = j0; j < j1; ++j) {
        const double* c = sym.cell(i, j).data();
        if (i > 0) row_sq[i - 1] += cell_sq(sym.cell(i - 1, j).data(), c);
        if (j > 0) col_sq[j - 1] += cell_sq(sym.cell(i, j - 1).data(), c);
      }
    }
  };
  constexpr std::size_t kTile = 16;
  for (std::size_t i0 = 0; i0 < n; i0 += kTile) {
    const std::size_t i1 = std::min(i0 + kTile, n);
    for (std::size_t j0 = i0; j0 < n; j0 += kTile) {
      const std::size_t j1 = std::min(j0 + kTile, n);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = std::max(j0, i); j < j1; ++j) {
          const auto a = p.cell(i, j);
          const auto b = p.cell(j, i);
          auto oa = sym.cell(i, j);
          auto ob = sym.cell(j, i);
          for (std::size_t t = 0; t < k; ++t) {
            if (is_sym[t]) {
              oa[t] = ob[t] = (a[t] + b[t]) / 2.0;
            } else {
              oa[t] = a[t];
              ob[t] = b[t];
            }
          }
        }
      }
      accumulate(i0, i1, j0, j1);
      if (j0 != i0) accumulate(j0, j1, i0, i1);
    }
  }
  std::vector<double> d(n > 1 ? n - 1 : 0);
  for (std::size_t x = 0; x < d.size(); ++x) {
    d[x] = mode == DistanceMode::kSquared
               ? (row_sq[x] + col_sq[x]) / 2.0
               : (std::sqrt(row_sq[x]) + std::sqrt(col_sq[x])) / 2.0;
  }
  return d;
}

struct SpanDecoding {
  std::vector<std::size_t> split_positions;  // strictly increasing, last = n
  std::vector<Span> spans;                   // partition of [0, n)
};

inline SpanDecoding spans_from_distances(std::span<const double> distances,
                                         std::size_t n, double alpha) {
  SpanDecoding out;
  for (std::size_t x = 0; x < distances.size(); ++x)
    if (distances[x] > alpha) out.split_positions.push_back(x + 1);
  out.split_positions.push_back(n);
  std::size_t start = 0;
  for (auto end : out.split_positions) {
    out.spans.push_back({start, end});
    start = end;
  }
  return out;
}

// Expects an already symmetrized tensor.
inline SpanDecoding span_decode(const ProbTensor& p, const DecodeConfig& cfg) {
  cfg.validate();
  if (p.size() == 0) throw ArgumentError("cannot decode an empty tensor");
  const auto d = boundary_distances(p, cfg.distance_mode);
  return spans_from_distances(d, p.size(), cfg.alpha);
}

namespace detail {

// Argmax over {null} + candidates of the mean of p on rows x cols. Ties go
// to the smallest label id (null first).
inline LabelId block_argmax(const ProbTensor& p, Span rows, Span cols,
                            const std::vector<LabelId>& candidates) {
  std::vector<double> sums(p.labels(), 0.0);
  for (auto i = rows.start; i < rows.end; ++i) {
    for (auto j = cols.start; j < cols.end; ++j) {
      auto c = p.cell(i, j);
      for (std::size_t t = 0; t < c.size(); ++t) sums[t] += c[t];
    }
  }
  const double area = static_cast<double>(rows.length() * cols.length());
  LabelId best = kNullLabel;
  double best_mean = sums[kNullLabel] / area;
  for (LabelId t : candidates) {
    const double mean = sums[t] / area;
    if (mean > best_mean) {
      best_mean = mean;
      best = t;
    }
  }
  return best;
}

inline bool valid_span(Span s, std::size_t n) {
  return s.start < s.end && s.end <= n;
}

}  // namespace detail

inline LabelId entity_type_decode(const ProbTensor& p, const LabelSpace& ls,
                                  Span span) {
  if (!detail::valid_span(span, p.size())) throw ArgumentError("span out of range");
  return detail::block_argmax(p, span, span, ls.entity_labels());
}

inline LabelId relation_type_decode(const ProbTensor& p, const LabelSpace& ls,
                                    Span head, Span tail) {
  if (!detail::valid_span(head, p.size()) || !detail::valid_span(tail, p.size())) {
    throw ArgumentError("span out of range");
  }
  return detail::block_argmax(p, head, tail, ls.relation_labels());
}

namespace detail {

inline std::vector<Relation> decode_relations(const ProbTensor& p,
                                              const LabelSpace& ls,
                                              const std::vector<Entity>& ents) {
  std::vector<Relation> rels;
  const auto labels = ls.relation_labels();
  if (labels.empty()) return rels;
  for (std::size_t a = 0; a < ents.size(); ++a) {
    for (std::size_t b = 0; b < ents.size(); ++b) {
      if (a == b) continue;
      LabelId l = block_argmax(p, ents[a].span, ents[b].span, labels);
      if (l != kNullLabel) rels.push_back({a, b, l});
    }
  }
  return rels;
}

}  // namespace detail

// Steps two and three of the joint decoder on a symmetrized tensor whose
// boundary distances are already known.
inline ExtractionResult joint_decode_spans(const ProbTensor& sym,
                                           const LabelSpace& ls,
                                           SpanDecoding spans) {
  ExtractionResult out;
  out.decoder = DecoderKind::kJoint;
  for (const auto& s : spans.spans) {
    LabelId t = entity_type_decode(sym, ls, s);
    if (t != kNullLabel) out.entities.push_back({s, t});
  }
  out.relations = detail::decode_relations(sym, ls, out.entities);
  out.split_positions = std::move(spans.split_positions);
  return out;
}

inline ExtractionResult joint_decode(const ProbTensor& p, const LabelSpace& ls,
                                     const DecodeConfig& cfg = {}) {
  if (p.labels() != ls.size()) throw ArgumentError("tensor/label space mismatch");
  cfg.validate();
  if (p.size() == 0) throw ArgumentError("cannot decode an empty tensor");
  ProbTensor sym;
  const auto d = symmetrize_with_distances(p, ls, cfg.distance_mode, sym);
  return joint_decode_spans(sym, ls, spans_from_distances(d, p.size(), cfg.alpha));
}

// Baseline over the argmax table. Squares are scanned from size |s| down to
// 1, left to right; a square's label is its most frequent entity-or-null
// cell label (null wins ties, then the smallest id) and squares overlapping
// an accepted entity are discarded. Cells carrying relation labels are not
// counted for squares, and vice versa for rectangles.
inline ExtractionResult hard_decode(const ProbTensor& p, const LabelSpace& ls) {
  if (p.labels() != ls.size()) throw ArgumentError("tensor/label space mismatch");
  const std::size_t n = p.size();
  const GoldTable table = argmax_table(p);
  std::vector<std::uint8_t> covered(n, 0);
  std::vector<std::size_t> counts(ls.size());
  ExtractionResult out;
  out.decoder = DecoderKind::kHard;

  auto most_frequent = [&](bool entity_labels) {
    LabelId best = kNullLabel;
    std::size_t best_count = counts[kNullLabel];
    for (LabelId t = 1; t < counts.size(); ++t) {
      const bool wanted = entity_labels ? ls.is_entity(t) : ls.is_relation(t);
      if (wanted && counts[t] > best_count) {
        best = t;
        best_count = counts[t];
      }
    }
    return best;
  };

  for (std::size_t size = n; size >= 1; --size) {
    for (std::size_t start = 0; start + size <= n; ++start) {
      bool overlaps = false;
      for (auto i = start; i < start + size && !overlaps; ++i) overlaps = covered[i];
      if (overlaps) continue;
      std::fill(counts.begin(), counts.end(), 0);
      for (auto i = start; i < start + size; ++i)
        for (auto j = start; j < start + size; ++j) ++counts[table.at(i, j)];
      const LabelId label = most_frequent(true);
      if (label == kNullLabel) continue;
      out.entities.push_back({{start, start + size}, label});
      for (auto i = start; i < start + size; ++i) covered[i] = 1;
    }
  }
  std::sort(out.entities.begin(), out.entities.end());

  const auto& ents = out.entities;
  for (std::size_t a = 0; a < ents.size(); ++a) {
    for (std::size_t b = 0; b < ents.size(); ++b) {
      if (a == b) continue;
      std::fill(counts.begin(), counts.end(), 0);
      for (auto i = ents[a].span.start; i < ents[a].span.end; ++i)
        for (auto j = ents[b].span.start; j < ents[b].span.end; ++j)
          ++counts[table.at(i, j)];
      const LabelId label = most_frequent(false);
      if (label != kNullLabel) out.relations.push_back({a, b, label});
    }
  }
  return out;
}

inline constexpr std::size_t kOracleMaxLength = 8;

// Renders decoded entities/relations back into a label table.
inline GoldTable render_structure(std::size_t n,
                                  const std::vector<Entity>& entities,
                                  const std::vector<Relation>& relations) {
  GoldTable t(n);
  for (const auto& e : entities)
    for (auto i = e.span.start; i < e.span.end; ++i)
      for (auto j = e.span.start; j < e.span.end; ++j) t.at(i, j) = e.type;
  for (const auto& r : relations) {
    const auto& h = entities[r.head].span;
    const auto& c = entities[r.tail].span;
    for (auto i = h.start; i < h.end; ++i)
      for (auto j = c.start; j < c.end; ++j) t.at(i, j) = r.type;
  }
  return t;
}

// Exhaustive reference decoder for |s| <= 8. Every segmentation is typed
// with the joint decoder's square/rectangle rules and scored by
// sum_ij log p[i, j, rendered label]; ties prefer fewer entities, then the
// lexicographically smaller split list.
inline ExtractionResult oracle_decode(const ProbTensor& p, const LabelSpace& ls) {
  if (p.labels() != ls.size()) throw ArgumentError("tensor/label space mismatch");
  const std::size_t n = p.size();
  if (n == 0) throw ArgumentError("cannot decode an empty tensor");
  if (n > kOracleMaxLength) {
    throw ArgumentError("oracle decoder is limited to sentences of length <= " +
                        std::to_string(kOracleMaxLength) + " (got " +
                        std::to_string(n) + ")");
  }
  std::vector<double> logp(p.values().size());
  for (std::size_t x = 0; x < logp.size(); ++x)
    logp[x] = std::log(std::max(p.values()[x], 1e-12));

  ExtractionResult best;
  best.decoder = DecoderKind::kOracle;
  double best_score = -std::numeric_limits<double>::infinity();
  bool have_best = false;

  const std::uint32_t masks = 1u << (n - 1);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    std::vector<std::size_t> splits;
    for (std::size_t b = 1; b < n; ++b)
      if (mask & (1u << (b - 1))) splits.push_back(b);
    splits.push_back(n);

    ExtractionResult cand;
    cand.decoder = DecoderKind::kOracle;
    std::size_t start = 0;
    for (auto end : splits) {
      Span s{start, end};
      LabelId t = entity_type_decode(p, ls, s);
      if (t != kNullLabel) cand.entities.push_back({s, t});
      start = end;
    }
    cand.relations = detail::decode_relations(p, ls, cand.entities);
    cand.split_positions = splits;

    const GoldTable table = render_structure(n, cand.entities, cand.relations);
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        score += logp[(i * n + j) * ls.size() + table.at(i, j)];

    bool better = false;
    if (!have_best) {
      better = true;
    } else {
      const double tol = 1e-12 * std::max(1.0, std::abs(best_score));
      if (score > best_score + tol) {
        better = true;
      } else if (score >= best_score - tol) {
        if (cand.entities.size() != best.entities.size()) {
          better = cand.entities.size() < best.entities.size();
        } else {
          better = cand.split_positions < best.split_positions;
        }
      }
    }
    if (better) {
      best = std::move(cand);
      best_score = score;
      have_best = true;
    }
  }
  return best;
}

inline ExtractionResult decode(const ProbTensor& p, const LabelSpace& ls,
                               DecoderKind kind, const DecodeConfig& cfg = {}) {
  switch (kind) {
    case DecoderKind::kJoint: return joint_decode(p, ls, cfg);
    case DecoderKind::kHard: return hard_decode(p, ls);
    case DecoderKind::kOracle: return oracle_decode(p, ls);
  }
  throw ArgumentError("unknown decoder");
}

}  // namespace unire
