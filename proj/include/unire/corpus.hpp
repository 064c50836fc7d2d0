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

// Synthetic annotated corpora and probability-table noise.
//
// Token identity encodes the gold structure: every (entity type, role) pair
// owns a disjoint token pool, where the role is "no relation", "head of
// directed relation r", "tail of directed relation r" or "argument of
// symmetric relation r". Each relation type occurs at most once per
// sentence and each entity takes at most one role, so with full signal
// strength every table cell is a function of its two tokens' pools.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "unire/biaffine_net.hpp"
#include "unire/errors.hpp"
#include "unire/label_table.hpp"

namespace unire {

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t min_length = 4;
  std::size_t max_length = 20;
  std::size_t vocab_size = 200;
  std::size_t num_entity_types = 3;
  std::size_t num_relation_types = 2;
  double symmetric_fraction = 0.5;  // of relation types, at least one if > 0
  std::size_t min_entities = 0;
  std::size_t max_entities = 5;
  std::size_t max_entity_length = 3;
  std::size_t max_relations = 4;  // triplets, mirrored pairs count twice
  double relation_density = 0.7;  // chance each relation type is attempted
  double signal_strength = 1.0;   // chance an entity token comes from its pool
  std::size_t min_gap = 1;        // tokens between consecutive entities
  bool distinct_pools = false;    // reject sentences reusing a (type, role) pool
  std::size_t max_retries = 100;

  void validate() const {
    if (min_length == 0 || max_length < min_length) {
      throw ArgumentError("sentence length range is empty");
    }
    if (num_entity_types == 0) throw ArgumentError("need at least one entity type");
    if (max_entity_length == 0) throw ArgumentError("max_entity_length must be >= 1");
    if (max_entities < min_entities) throw ArgumentError("entity count range is empty");
    for (double x : {symmetric_fraction, relation_density, signal_strength}) {
      if (!(x >= 0.0 && x <= 1.0)) {
        throw ArgumentError("fractions and densities must lie in [0, 1]");
      }
    }
  }
};

struct GeneratedCorpus {
  LabelSpace labels;
  std::vector<SentenceAnnotation> sentences;
};

inline std::size_t num_symmetric_relation_types(const GenConfig& cfg) {
  if (cfg.num_relation_types == 0 || cfg.symmetric_fraction <= 0.0) return 0;
  auto k = static_cast<std::size_t>(
      std::lround(cfg.symmetric_fraction * static_cast<double>(cfg.num_relation_types)));
  return std::clamp<std::size_t>(k, 1, cfg.num_relation_types);
}

// Entity types E0.., relation types R0..; the last relation types are the
// symmetric ones.
inline LabelSpace synthetic_label_space(const GenConfig& cfg) {
  std::vector<std::string> ent, rel, sym;
  for (std::size_t k = 0; k < cfg.num_entity_types; ++k) ent.push_back("E" + std::to_string(k));
  for (std::size_t k = 0; k < cfg.num_relation_types; ++k) rel.push_back("R" + std::to_string(k));
  const std::size_t n_sym = num_symmetric_relation_types(cfg);
  for (std::size_t k = cfg.num_relation_types - n_sym; k < cfg.num_relation_types; ++k)
    sym.push_back(rel[k]);
  return LabelSpace(ent, rel, sym);
}

// Token pool layout shared by the generator and its tests.
class TokenPools {
 public:
  TokenPools(const GenConfig& cfg, const LabelSpace& ls)
      : ls_(&ls), vocab_size_(cfg.vocab_size) {
    roles_ = 1;
    for (auto r : ls.relation_labels()) roles_ += ls.is_symmetric(r) ? 1 : 2;
    const std::size_t pools = ls.num_entity_types() * roles_ + 1;
    pool_size_ = cfg.vocab_size / pools;
    if (pool_size_ == 0) {
      throw ArgumentError("vocab_size " + std::to_string(cfg.vocab_size) +
                          " is too small for " + std::to_string(pools) +
                          " token pools");
    }
  }

  // Role 0 is "no relation"; directed relation k maps to (head, tail) =
  // (offset, offset + 1), symmetric relation k to a single role.
  std::size_t head_role(LabelId rel) const { return role_offset(rel); }
  std::size_t tail_role(LabelId rel) const {
    return role_offset(rel) + (ls_->is_symmetric(rel) ? 0 : 1);
  }
  std::size_t num_roles() const { return roles_; }

  std::size_t pool_index(LabelId entity_type, std::size_t role) const {
    return (entity_type - 1) * roles_ + role;
  }
  std::size_t outside_pool() const { return ls_->num_entity_types() * roles_; }

  // The outside pool also absorbs the remainder of the vocabulary.
  std::size_t pool_begin(std::size_t pool) const { return pool * pool_size_; }
  std::size_t pool_end(std::size_t pool) const {
    return pool == outside_pool() ? vocab_size_ : (pool + 1) * pool_size_;
  }
  std::size_t pool_of_token(std::size_t token) const {
    return std::min(token / pool_size_, outside_pool());
  }
  std::size_t vocab_size() const { return vocab_size_; }

  static std::string token_name(std::size_t id) { return "w" + std::to_string(id); }

 private:
  std::size_t role_offset(LabelId rel) const {
    std::size_t off = 1;
    for (auto r : ls_->relation_labels()) {
      if (r == rel) return off;
      off += ls_->is_symmetric(r) ? 1 : 2;
    }
    throw ArgumentError("not a relation label");
  }

  const LabelSpace* ls_;
  std::size_t vocab_size_;
  std::size_t roles_ = 1;
  std::size_t pool_size_ = 0;
};

namespace detail {

inline bool try_generate_sentence(const GenConfig& cfg, const LabelSpace& ls,
                                  const TokenPools& pools, Rng& rng,
                                  SentenceAnnotation& out) {
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const std::size_t n = uniform(cfg.min_length, cfg.max_length);
  const std::size_t m = uniform(cfg.min_entities, cfg.max_entities);
  std::vector<std::size_t> lengths(m);
  std::size_t occupied = 0;
  for (auto& len : lengths) {
    len = uniform(1, cfg.max_entity_length);
    occupied += len;
  }
  if (m > 0) occupied += (m - 1) * cfg.min_gap;
  if (occupied > n) return false;

  // Spread the free tokens over the m + 1 gaps (stars and bars).
  const std::size_t free = n - occupied;
  std::vector<std::size_t> cuts(m);
  for (auto& c : cuts) c = uniform(0, free);
  std::sort(cuts.begin(), cuts.end());
  out = {};
  out.tokens.resize(n);
  std::size_t pos = 0, prev = 0;
  for (std::size_t e = 0; e < m; ++e) {
    pos += cuts[e] - prev + (e > 0 ? cfg.min_gap : 0);
    prev = cuts[e];
    const LabelId type = ls.entity_label(uniform(0, ls.num_entity_types() - 1));
    out.entities.push_back({{pos, pos + lengths[e]}, type});
    pos += lengths[e];
  }

  std::vector<std::size_t> role(m, 0);
  std::vector<LabelId> rel_types = ls.relation_labels();
  std::shuffle(rel_types.begin(), rel_types.end(), rng);
  std::bernoulli_distribution attempt(cfg.relation_density);
  for (LabelId r : rel_types) {
    if (!attempt(rng)) continue;
    const std::size_t needed = ls.is_symmetric(r) ? 2 : 1;
    if (out.relations.size() + needed > cfg.max_relations) continue;
    std::vector<std::size_t> free_ents;
    for (std::size_t e = 0; e < m; ++e)
      if (role[e] == 0) free_ents.push_back(e);
    if (free_ents.size() < 2) break;
    std::shuffle(free_ents.begin(), free_ents.end(), rng);
    const std::size_t a = free_ents[0], b = free_ents[1];
    role[a] = pools.head_role(r);
    role[b] = pools.tail_role(r);
    out.relations.push_back({a, b, r});
    if (ls.is_symmetric(r)) out.relations.push_back({b, a, r});
  }

  if (cfg.distinct_pools) {
    std::set<std::size_t> used;
    for (std::size_t e = 0; e < m; ++e)
      if (!used.insert(pools.pool_index(out.entities[e].type, role[e])).second) return false;
  }

  std::bernoulli_distribution signal(cfg.signal_strength);
  auto draw = [&](std::size_t pool) {
    return uniform(pools.pool_begin(pool), pools.pool_end(pool) - 1);
  };
  for (std::size_t i = 0; i < n; ++i)
    out.tokens[i] = TokenPools::token_name(draw(pools.outside_pool()));
  for (std::size_t e = 0; e < m; ++e) {
    const auto& ent = out.entities[e];
    for (auto i = ent.span.start; i < ent.span.end; ++i) {
      const std::size_t tok = signal(rng)
                                  ? draw(pools.pool_index(ent.type, role[e]))
                                  : uniform(0, pools.vocab_size() - 1);
      out.tokens[i] = TokenPools::token_name(tok);
    }
  }
  return true;
}

}  // namespace detail

// Deterministic for a given config (seed included).
inline GeneratedCorpus generate_corpus(const GenConfig& cfg, std::size_t count) {
  cfg.validate();
  if (count == 0) throw ArgumentError("corpus size must be >= 1");
  GeneratedCorpus corpus{synthetic_label_space(cfg), {}};
  const TokenPools pools(cfg, corpus.labels);
  Rng rng(cfg.seed);
  corpus.sentences.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    SentenceAnnotation ann;
    bool ok = false;
    for (std::size_t attempt = 0; attempt <= cfg.max_retries && !ok; ++attempt)
      ok = detail::try_generate_sentence(cfg, corpus.labels, pools, rng, ann);
    if (!ok) {
      throw ArgumentError("could not place " + std::to_string(cfg.min_entities) +
                          "+ entities within length " +
                          std::to_string(cfg.max_length) + " after " +
                          std::to_string(cfg.max_retries) + " retries");
    }
    validate(ann, corpus.labels);
    corpus.sentences.push_back(std::move(ann));
  }
  return corpus;
}

enum class NoiseMode { kDirichletJitter, kLabelFlip };

struct NoiseConfig {
  NoiseMode mode = NoiseMode::kDirichletJitter;
  double sigma = 0.0;
  std::uint64_t seed = 1;
};

inline NoiseMode parse_noise_mode(std::string_view s) {
  if (s == "dirichlet") return NoiseMode::kDirichletJitter;
  if (s == "flip") return NoiseMode::kLabelFlip;
  throw ArgumentError("unknown noise mode '" + std::string(s) + "'");
}

// dirichlet: p <- (1 - sigma) p + sigma q with q ~ Dirichlet(1, ..., 1) per
// cell, then renormalized. flip: with probability sigma a cell becomes
// one-hot at a uniformly chosen label other than its argmax.
inline ProbTensor corrupt_tensor(const ProbTensor& p, NoiseMode mode, double sigma,
                                 Rng& rng) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw ArgumentError("noise strength must lie in [0, 1]");
  ProbTensor out = p;
  if (sigma == 0.0) return out;
  const std::size_t k = p.labels();
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::bernoulli_distribution flip(sigma);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) {
      auto c = out.cell(i, j);
      if (mode == NoiseMode::kDirichletJitter) {
        std::vector<double> q(k);
        double qs = 0.0;
        for (auto& x : q) qs += (x = gamma(rng));
        double total = 0.0;
        for (std::size_t t = 0; t < k; ++t) total += (c[t] = (1.0 - sigma) * c[t] + sigma * q[t] / qs);
        for (auto& x : c) x /= total;
      } else if (k > 1 && flip(rng)) {
        const auto top = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
        std::size_t wrong = std::uniform_int_distribution<std::size_t>(0, k - 2)(rng);
        if (wrong >= top) ++wrong;
        std::fill(c.begin(), c.end(), 0.0);
        c[wrong] = 1.0;
      }
    }
  }
  return out;
}

inline ProbTensor corrupt_tensor(const ProbTensor& p, const NoiseConfig& cfg) {
  Rng rng(cfg.seed);
  return corrupt_tensor(p, cfg.mode, cfg.sigma, rng);
}

}  // namespace unire
