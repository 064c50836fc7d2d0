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

// File formats.
//
// Corpus      JSON lines, one sentence per line:
//               {"tokens":[...],
//                "entities":[{"start":int,"end":int,"type":str}],
//                "relations":[{"head":int,"tail":int,"type":str}]}
//             plus a label-space sidecar
//               {"entity_types":[...],"relation_types":[...],"symmetric":[...]}
// Predictions JSON lines like the corpus, with "decoder" and "splits".
// Tensors     concatenated records, each
//               "URTN1" | u64 n | u64 K | K x (u32 len, bytes) | n*n*K f32
//             all integers and floats little-endian, cells row-major.
// Checkpoint  "UNIRE1" | u64 vocab | u64 d_emb | u64 d | u64 K |
//             u64 depth | depth x u64 hidden width | f64 blocks in
//             ModelParams::for_each_block order, little-endian.
//             The vocabulary lives in a JSON sidecar ("<path>.vocab.json").

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "unire/biaffine_net.hpp"
#include "unire/decoder.hpp"
#include "unire/errors.hpp"
#include "unire/evaluation.hpp"
#include "unire/label_table.hpp"
#include "unire/trainer.hpp"

namespace unire {

using Json = nlohmann::json;

namespace detail {

inline const Json& field(const Json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) {
    throw FormatError(where + ": missing field '" + name + "'");
  }
  return j.at(name);
}

template <class T>
T field_as(const Json& j, const char* name, const std::string& where) {
  const Json& v = field(j, name, where);
  try {
    return v.get<T>();
  } catch (const Json::exception&) {
    throw FormatError(where + ": field '" + name + "' has the wrong type");
  }
}

inline std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw FormatError("cannot open '" + path + "' for reading");
  return in;
}
inline std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path + "' for writing");
  return out;
}

template <class T>
void put_le(std::ostream& out, T v) {
  static_assert(std::is_unsigned_v<T>);
  unsigned char buf[sizeof(T)];
  for (std::size_t b = 0; b < sizeof(T); ++b) buf[b] = static_cast<unsigned char>(v >> (8 * b));
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
bool get_le(std::istream& in, T& v) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
  v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(buf[b]) << (8 * b);
  return true;
}

template <class T>
T need_le(std::istream& in, const char* what) {
  T v{};
  if (!get_le(in, v)) throw FormatError(std::string("truncated file while reading ") + what);
  return v;
}

}  // namespace detail

// ---- label space ----------------------------------------------------------

inline Json to_json(const LabelSpace& ls) {
  return {{"entity_types", ls.entity_types()},
          {"relation_types", ls.relation_types()},
          {"symmetric", ls.symmetric_relation_names()}};
}

inline LabelSpace label_space_from_json(const Json& j, const std::string& where = "labels") {
  auto ent = detail::field_as<std::vector<std::string>>(j, "entity_types", where);
  auto rel = detail::field_as<std::vector<std::string>>(j, "relation_types", where);
  std::vector<std::string> sym;
  if (j.contains("symmetric")) sym = detail::field_as<std::vector<std::string>>(j, "symmetric", where);
  // Entity types are implicitly symmetric; tolerate them being listed.
  std::vector<std::string> sym_rel;
  for (auto& s : sym)
    if (std::find(ent.begin(), ent.end(), s) == ent.end()) sym_rel.push_back(s);
  try {
    return LabelSpace(std::move(ent), std::move(rel), sym_rel);
  } catch (const ArgumentError& e) {
    throw FormatError(where + ": " + e.what());
  }
}

inline void write_label_space(const std::string& path, const LabelSpace& ls) {
  auto out = detail::open_out(path);
  out << to_json(ls).dump(2) << "\n";
}

inline LabelSpace read_label_space(const std::string& path) {
  auto in = detail::open_in(path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return label_space_from_json(j, path);
}

// ---- corpus -----------------------------------------------------------------

inline Json to_json(const std::vector<Entity>& entities, const LabelSpace& ls) {
  Json arr = Json::array();
  for (const auto& e : entities)
    arr.push_back({{"start", e.span.start}, {"end", e.span.end}, {"type", ls.name(e.type)}});
  return arr;
}
inline Json to_json(const std::vector<Relation>& relations, const LabelSpace& ls) {
  Json arr = Json::array();
  for (const auto& r : relations)
    arr.push_back({{"head", r.head}, {"tail", r.tail}, {"type", ls.name(r.type)}});
  return arr;
}

inline Json to_json(const SentenceAnnotation& a, const LabelSpace& ls) {
  return {{"tokens", a.tokens},
          {"entities", to_json(a.entities, ls)},
          {"relations", to_json(a.relations, ls)}};
}

namespace detail {

inline LabelId label_field(const Json& j, const LabelSpace& ls, bool entity,
                           const std::string& where) {
  const auto name = field_as<std::string>(j, "type", where);
  auto id = ls.find(name);
  if (!id || (entity ? !ls.is_entity(*id) : !ls.is_relation(*id))) {
    throw FormatError(where + ": field 'type' names unknown " +
                      (entity ? std::string("entity") : std::string("relation")) +
                      " type '" + name + "'");
  }
  return *id;
}

inline void read_structure(const Json& j, const LabelSpace& ls, const std::string& where,
                           std::vector<Entity>& ents, std::vector<Relation>& rels) {
  const Json& je = field(j, "entities", where);
  if (!je.is_array()) throw FormatError(where + ": field 'entities' must be an array");
  for (std::size_t k = 0; k < je.size(); ++k) {
    const auto w = where + " entities[" + std::to_string(k) + "]";
    ents.push_back({{field_as<std::size_t>(je[k], "start", w), field_as<std::size_t>(je[k], "end", w)},
                    label_field(je[k], ls, true, w)});
  }
  const Json& jr = field(j, "relations", where);
  if (!jr.is_array()) throw FormatError(where + ": field 'relations' must be an array");
  for (std::size_t k = 0; k < jr.size(); ++k) {
    const auto w = where + " relations[" + std::to_string(k) + "]";
    rels.push_back({field_as<std::size_t>(jr[k], "head", w), field_as<std::size_t>(jr[k], "tail", w),
                    label_field(jr[k], ls, false, w)});
    if (rels.back().head >= ents.size() || rels.back().tail >= ents.size()) {
      throw FormatError(w + ": field 'head'/'tail' references a missing entity");
    }
  }
}

}  // namespace detail

inline SentenceAnnotation annotation_from_json(const Json& j, const LabelSpace& ls,
                                               const std::string& where = "sentence") {
  SentenceAnnotation a;
  a.tokens = detail::field_as<std::vector<std::string>>(j, "tokens", where);
  detail::read_structure(j, ls, where, a.entities, a.relations);
  try {
    validate(a, ls);
  } catch (const InvalidAnnotation& e) {
    throw FormatError(where + ": " + e.what());
  }
  return a;
}

inline void write_corpus(std::ostream& out, std::span<const SentenceAnnotation> corpus,
                         const LabelSpace& ls) {
  for (const auto& a : corpus) out << to_json(a, ls).dump() << "\n";
}
inline void write_corpus(const std::string& path, std::span<const SentenceAnnotation> corpus,
                         const LabelSpace& ls) {
  auto out = detail::open_out(path);
  write_corpus(out, corpus, ls);
}

namespace detail {

template <class F>
void for_each_json_line(std::istream& in, const std::string& name, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = name + ":" + std::to_string(lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw FormatError(where + ": " + e.what());
    }
    f(j, where);
  }
}

}  // namespace detail

inline std::vector<SentenceAnnotation> read_corpus(std::istream& in, const LabelSpace& ls,
                                                   const std::string& name = "corpus") {
  std::vector<SentenceAnnotation> out;
  detail::for_each_json_line(in, name, [&](const Json& j, const std::string& where) {
    out.push_back(annotation_from_json(j, ls, where));
  });
  return out;
}
inline std::vector<SentenceAnnotation> read_corpus(const std::string& path, const LabelSpace& ls) {
  auto in = detail::open_in(path);
  return read_corpus(in, ls, path);
}

// ---- predictions -------------------------------------------------------------

inline Json to_json(const ExtractionResult& r, const LabelSpace& ls,
                    const std::vector<std::string>* tokens = nullptr) {
  Json j = {{"decoder", std::string(to_string(r.decoder))},
            {"entities", to_json(r.entities, ls)},
            {"relations", to_json(r.relations, ls)},
            {"splits", r.split_positions}};
  if (tokens) j["tokens"] = *tokens;
  return j;
}

inline ExtractionResult prediction_from_json(const Json& j, const LabelSpace& ls,
                                             const std::string& where = "prediction") {
  ExtractionResult r;
  r.decoder = parse_decoder_kind(detail::field_as<std::string>(j, "decoder", where));
  detail::read_structure(j, ls, where, r.entities, r.relations);
  if (j.contains("splits")) r.split_positions = detail::field_as<std::vector<std::size_t>>(j, "splits", where);
  return r;
}

inline std::vector<ExtractionResult> read_predictions(const std::string& path, const LabelSpace& ls) {
  auto in = detail::open_in(path);
  std::vector<ExtractionResult> out;
  detail::for_each_json_line(in, path, [&](const Json& j, const std::string& where) {
    out.push_back(prediction_from_json(j, ls, where));
  });
  return out;
}

// ---- tensors -------------------------------------------------------------------

inline constexpr char kTensorMagic[] = "URTN1";

inline void write_tensor(std::ostream& out, const ProbTensor& p,
                         const std::vector<std::string>& label_names) {
  if (label_names.size() != p.labels()) throw ArgumentError("label table does not match tensor");
  out.write(kTensorMagic, 5);
  detail::put_le<std::uint64_t>(out, p.size());
  detail::put_le<std::uint64_t>(out, p.labels());
  for (const auto& n : label_names) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(n.size()));
    out.write(n.data(), static_cast<std::streamsize>(n.size()));
  }
  for (double v : p.values())
    detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

// Returns false at a clean end of stream.
inline bool read_tensor(std::istream& in, ProbTensor& p, std::vector<std::string>& label_names) {
  char magic[5];
  in.read(magic, 5);
  if (in.gcount() == 0 && in.eof()) return false;
  if (in.gcount() != 5 || std::memcmp(magic, kTensorMagic, 5) != 0) {
    throw FormatError("bad tensor record: magic is not URTN1");
  }
  const auto n = detail::need_le<std::uint64_t>(in, "tensor size");
  const auto k = detail::need_le<std::uint64_t>(in, "label count");
  if (k == 0 || n > (1u << 16) || k > (1u << 16)) throw FormatError("tensor header out of range");
  label_names.assign(k, {});
  for (auto& name : label_names) {
    const auto len = detail::need_le<std::uint32_t>(in, "label name length");
    name.resize(len);
    if (!in.read(name.data(), len)) throw FormatError("truncated label name table");
  }
  p = ProbTensor(n, k);
  for (auto& v : p.values())
    v = static_cast<double>(std::bit_cast<float>(detail::need_le<std::uint32_t>(in, "tensor values")));
  return true;
}

inline void write_tensors(const std::string& path, std::span<const ProbTensor> tensors,
                          const LabelSpace& ls) {
  auto out = detail::open_out(path, true);
  for (const auto& p : tensors) write_tensor(out, p, ls.names());
}

// Reads every record and checks its label table against `ls`.
inline std::vector<ProbTensor> read_tensors(const std::string& path, const LabelSpace& ls) {
  auto in = detail::open_in(path, true);
  std::vector<ProbTensor> out;
  ProbTensor p;
  std::vector<std::string> names;
  while (read_tensor(in, p, names)) {
    if (names != ls.names()) {
      throw FormatError(path + ": record " + std::to_string(out.size()) +
                        " label-name table does not match the label space");
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---- checkpoints ----------------------------------------------------------------

inline constexpr char kCheckpointMagic[] = "UNIRE1";

inline void write_checkpoint(std::ostream& out, const ModelParams& params) {
  out.write(kCheckpointMagic, 6);
  const auto& d = params.dims;
  for (std::uint64_t v : {d.vocab_size, d.embedding_dim, d.hidden_dim, d.num_labels,
                          d.mlp_hidden.size()})
    detail::put_le<std::uint64_t>(out, v);
  for (auto w : d.mlp_hidden) detail::put_le<std::uint64_t>(out, w);
  params.for_each_block([&](const ParamBlock& b) {
    for (double v : b.values) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  });
}

inline ModelParams read_checkpoint(std::istream& in) {
  char magic[6];
  if (!in.read(magic, 6) || std::memcmp(magic, kCheckpointMagic, 6) != 0) {
    throw FormatError("bad checkpoint: magic is not UNIRE1");
  }
  ModelDims d;
  d.vocab_size = detail::need_le<std::uint64_t>(in, "vocab size");
  d.embedding_dim = detail::need_le<std::uint64_t>(in, "embedding width");
  d.hidden_dim = detail::need_le<std::uint64_t>(in, "hidden width");
  d.num_labels = detail::need_le<std::uint64_t>(in, "label count");
  const auto depth = detail::need_le<std::uint64_t>(in, "MLP depth");
  if (depth > 64 || d.vocab_size > (1u << 24) || d.embedding_dim > 4096 ||
      d.hidden_dim > 4096 || d.num_labels > 4096) {
    throw FormatError("checkpoint header out of range");
  }
  for (std::uint64_t k = 0; k < depth; ++k)
    d.mlp_hidden.push_back(detail::need_le<std::uint64_t>(in, "MLP width"));
  ModelParams p;
  try {
    p = ModelParams::zeros(d);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  p.for_each_block([&](ParamBlock& b) {
    for (auto& v : b.values)
      v = std::bit_cast<double>(detail::need_le<std::uint64_t>(in, b.name.c_str()));
  });
  return p;
}

inline std::string vocab_path(const std::string& checkpoint) { return checkpoint + ".vocab.json"; }

inline void save_model(const std::string& path, const ModelParams& params, const Vocabulary& vocab) {
  auto out = detail::open_out(path, true);
  write_checkpoint(out, params);
  auto vout = detail::open_out(vocab_path(path));
  vout << Json{{"tokens", vocab.tokens()}}.dump() << "\n";
}

inline std::pair<ModelParams, Vocabulary> load_model(const std::string& path) {
  auto in = detail::open_in(path, true);
  ModelParams params = read_checkpoint(in);
  auto vin = detail::open_in(vocab_path(path));
  Json j;
  try {
    vin >> j;
  } catch (const Json::exception& e) {
    throw FormatError(vocab_path(path) + ": " + e.what());
  }
  const auto tokens = detail::field_as<std::vector<std::string>>(j, "tokens", vocab_path(path));
  Vocabulary vocab;
  for (std::size_t k = 2; k < tokens.size(); ++k) vocab.add(tokens[k]);
  if (vocab.size() != params.dims.vocab_size) {
    throw FormatError(vocab_path(path) + ": field 'tokens' has " + std::to_string(tokens.size()) +
                      " entries but the checkpoint expects " + std::to_string(params.dims.vocab_size));
  }
  return {std::move(params), std::move(vocab)};
}

// ---- training log and reports -------------------------------------------------

inline Json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},         {"l_entry", r.l_entry},       {"l_sym", r.l_sym},
          {"l_imp", r.l_imp},         {"dev_ent_f1", r.dev_ent_f1}, {"dev_rel_f1", r.dev_rel_f1},
          {"lr", r.lr}};
}

inline Json to_json(const Counts& c) {
  return {{"gold", c.gold},
          {"predicted", c.predicted},
          {"correct", c.correct},
          {"precision", c.precision()},
          {"recall", c.recall()},
          {"f1", c.f1()}};
}

inline Json to_json(const EvalReport& r) {
  Json span = to_json(r.span);
  span["f1"] = r.span_f1();
  return {{"entity", to_json(r.entity)}, {"relation", to_json(r.relation)}, {"span", span}};
}

inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "metric" << std::right << std::setw(8) << "gold"
     << std::setw(8) << "pred" << std::setw(9) << "correct" << std::setw(8) << "P"
     << std::setw(8) << "R" << std::setw(8) << "F1" << "\n";
  auto row = [&](const char* name, const Counts& c, double f1) {
    os << std::left << std::setw(10) << name << std::right << std::setw(8) << c.gold
       << std::setw(8) << c.predicted << std::setw(9) << c.correct << std::fixed
       << std::setprecision(4) << std::setw(8) << c.precision() << std::setw(8) << c.recall()
       << std::setw(8) << f1 << "\n";
  };
  row("entity", r.entity, r.entity.f1());
  row("relation", r.relation, r.relation.f1());
  row("span", r.span, r.span_f1());
  return os.str();
}

inline Json to_json(const ErrorBreakdown& b) {
  Json j = Json::object();
  for (std::size_t k = 0; k < kNumRelationErrors; ++k) {
    const auto e = static_cast<RelationError>(k);
    j[std::string(short_name(e))] = {{"count", b.count(e)}, {"fraction", b.fraction(e)}};
  }
  j["total"] = b.total();
  return j;
}

inline std::string format_errors(const ErrorBreakdown& b) {
  std::ostringstream os;
  os << std::left << std::setw(6) << "error" << std::right << std::setw(8) << "count"
     << std::setw(10) << "fraction" << "\n";
  for (std::size_t k = 0; k < kNumRelationErrors; ++k) {
    const auto e = static_cast<RelationError>(k);
    os << std::left << std::setw(6) << short_name(e) << std::right << std::setw(8) << b.count(e)
       << std::fixed << std::setprecision(4) << std::setw(10) << b.fraction(e) << "\n";
  }
  os << std::left << std::setw(6) << "total" << std::right << std::setw(8) << b.total() << "\n";
  return os.str();
}

inline void write_histogram_csv(std::ostream& out, const DistanceHistograms& h) {
  out << "bin_lo,bin_hi,ent_bound,non_ent_bound\n";
  const auto& e = h.entity_boundary;
  const auto& n = h.non_entity_boundary;
  for (std::size_t b = 0; b < e.bins.size(); ++b) {
    out << std::fixed << std::setprecision(1) << b * e.bin_width << "," << (b + 1) * e.bin_width
        << "," << e.bins[b] << "," << n.bins[b] << "\n";
  }
  out << std::fixed << std::setprecision(1) << e.max << ",inf," << e.overflow << "," << n.overflow
      << "\n";
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "alpha,span_f1,entity_f1,relation_f1\n";
  for (const auto& r : rows) {
    out << std::fixed << std::setprecision(2) << r.alpha << std::setprecision(6) << ","
        << r.span_f1 << "," << r.entity_f1 << "," << r.relation_f1 << "\n";
  }
}

}  // namespace unire
