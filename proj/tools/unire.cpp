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

// unire: generate, train, render, decode, eval, sweep, hist, bench, errors.
//
// Exit status: 0 success, 2 usage error, 1 runtime error. When UNIRE_SEED is
// set it replaces every --seed value.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unire/unire.hpp"

namespace {

using namespace unire;

// Raised for option values that parse but make no sense; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t effective_seed(std::uint64_t flag) {
  if (const char* env = std::getenv("UNIRE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("UNIRE_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  return flag;
}

template <class F>
auto usage_checked(F&& f) {
  try {
    return f();
  } catch (const ArgumentError& e) {
    throw UsageError(e.what());
  }
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::trunc);
  if (!file) throw FormatError("cannot open '" + path + "' for writing");
  return file;
}

std::vector<double> parse_alpha_grid(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--alphas: '" + spec + "' is not lo:hi:step");
    }
  }
  if (parts.size() != 3) throw UsageError("--alphas: '" + spec + "' is not lo:hi:step");
  return usage_checked([&] { return alpha_grid(parts[0], parts[1], parts[2]); });
}

struct DecodeFlags {
  double alpha = 1.4;
  std::string distance_mode = "squared";

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "span split threshold");
    app->add_option("--distance-mode", distance_mode, "squared | l2");
  }
  DecodeConfig config() const {
    return usage_checked([&] {
      DecodeConfig c{alpha, parse_distance_mode(distance_mode)};
      c.validate();
      return c;
    });
  }
};

// Tensors from a tensor file, or from a checkpoint applied to a corpus.
struct TensorSource {
  std::string tensors;
  std::string model;

  void add(CLI::App* app) {
    auto* t = app->add_option("--tensors", tensors, "URTN1 tensor file");
    auto* m = app->add_option("--model", model, "checkpoint to score the gold corpus with");
    t->excludes(m);
  }
  std::vector<ProbTensor> load(const LabelSpace& ls,
                               const std::vector<SentenceAnnotation>& corpus) const {
    if (!tensors.empty()) return read_tensors(tensors, ls);
    if (model.empty()) throw UsageError("one of --tensors or --model is required");
    const auto [params, vocab] = load_model(model);
    if (params.dims.num_labels != ls.size()) {
      throw FormatError(model + ": checkpoint has " + std::to_string(params.dims.num_labels) +
                        " labels, label space has " + std::to_string(ls.size()));
    }
    std::vector<ProbTensor> out;
    for (const auto& s : corpus) out.push_back(predict_tensor(params, vocab.lookup(s.tokens)));
    return out;
  }
};

void check_lengths(const std::vector<ProbTensor>& tensors,
                   const std::vector<SentenceAnnotation>& corpus) {
  if (tensors.size() != corpus.size()) {
    throw FormatError("tensor file has " + std::to_string(tensors.size()) +
                      " records but the corpus has " + std::to_string(corpus.size()) +
                      " sentences");
  }
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (tensors[s].size() != corpus[s].size()) {
      throw FormatError("tensor record " + std::to_string(s) + " has length " +
                        std::to_string(tensors[s].size()) + " but sentence has " +
                        std::to_string(corpus[s].size()) + " tokens");
    }
  }
}

// ---- generate ------------------------------------------------------------------

void add_generate(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("generate", "write a synthetic corpus and its label space");
  static GenConfig cfg;
  static std::size_t n = 100;
  static std::string out = "corpus.jsonl", labels = "labels.json";
  cmd->add_option("--seed", cfg.seed);
  cmd->add_option("--n", n, "number of sentences");
  cmd->add_option("--out", out, "corpus path");
  cmd->add_option("--labels", labels, "label space path");
  cmd->add_option("--min-length", cfg.min_length);
  cmd->add_option("--max-length", cfg.max_length);
  cmd->add_option("--vocab", cfg.vocab_size);
  cmd->add_option("--entity-types", cfg.num_entity_types);
  cmd->add_option("--relation-types", cfg.num_relation_types);
  cmd->add_option("--symmetric-fraction", cfg.symmetric_fraction);
  cmd->add_option("--min-entities", cfg.min_entities);
  cmd->add_option("--max-entities", cfg.max_entities);
  cmd->add_option("--max-entity-length", cfg.max_entity_length);
  cmd->add_option("--max-relations", cfg.max_relations);
  cmd->add_option("--density", cfg.relation_density);
  cmd->add_option("--signal", cfg.signal_strength);
  cmd->add_option("--min-gap", cfg.min_gap);
  cmd->add_flag("--distinct-pools", cfg.distinct_pools,
                "one entity per (type, role) pool per sentence");
  cmd->callback([&run] {
    run = [] {
      GenConfig c = cfg;
      c.seed = effective_seed(c.seed);
      usage_checked([&] { c.validate(); return 0; });
      if (n == 0) throw UsageError("--n must be >= 1");
      const GeneratedCorpus corpus = generate_corpus(c, n);
      write_label_space(labels, corpus.labels);
      write_corpus(out, corpus.sentences, corpus.labels);
      std::cout << "wrote " << corpus.sentences.size() << " sentences to " << out << "\n";
    };
  });
}

// ---- train -------------------------------------------------------------------------

void add_train(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("train", "train the biaffine scorer");
  static TrainConfig cfg;
  static std::string train_path, dev_path, labels = "labels.json", out = "model.ckpt", log;
  static bool no_sym = false, no_imp = false;
  static DecodeFlags dflags;
  cmd->add_option("--train", train_path, "training corpus")->required();
  cmd->add_option("--dev", dev_path, "dev corpus (default: hold out 20% of --train)");
  cmd->add_option("--labels", labels);
  cmd->add_option("--out", out, "checkpoint path");
  cmd->add_option("--log", log, "training log (JSON lines)");
  cmd->add_option("--epochs", cfg.max_epochs);
  cmd->add_option("--patience", cfg.patience);
  cmd->add_option("--lr", cfg.optimizer.learning_rate);
  cmd->add_option("--weight-decay", cfg.optimizer.weight_decay);
  cmd->add_option("--beta1", cfg.optimizer.beta1);
  cmd->add_option("--beta2", cfg.optimizer.beta2);
  cmd->add_option("--warmup", cfg.optimizer.warmup_ratio);
  cmd->add_option("--batch", cfg.batch_size);
  cmd->add_option("--d", cfg.hidden_dim, "biaffine width");
  cmd->add_option("--d-emb", cfg.embedding_dim, "embedding width");
  cmd->add_option("--mlp-hidden", cfg.mlp_hidden, "extra MLP layer widths");
  cmd->add_option("--dropout", cfg.logit_dropout, "logit dropout rate");
  cmd->add_option("--seed", cfg.seed);
  cmd->add_flag("--no-sym", no_sym, "drop the symmetry loss");
  cmd->add_flag("--no-imp", no_imp, "drop the implication loss");
  dflags.add(cmd);
  cmd->callback([&run] {
    run = [] {
      TrainConfig c = cfg;
      c.seed = effective_seed(c.seed);
      c.losses = {!no_sym, !no_imp};
      c.decode = dflags.config();
      usage_checked([&] { c.validate(); return 0; });
      const LabelSpace ls = read_label_space(labels);
      std::vector<SentenceAnnotation> tr = read_corpus(train_path, ls), dev;
      if (!dev_path.empty()) {
        dev = read_corpus(dev_path, ls);
      } else {
        if (tr.size() < 2) throw FormatError(train_path + ": need >= 2 sentences to hold out a dev split");
        std::vector<std::size_t> order(tr.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng(c.seed);
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t n_dev = std::max<std::size_t>(1, tr.size() / 5);
        std::vector<SentenceAnnotation> kept;
        for (std::size_t k = 0; k < order.size(); ++k)
          (k < n_dev ? dev : kept).push_back(tr[order[k]]);
        tr = std::move(kept);
      }
      std::ofstream log_file;
      if (!log.empty()) {
        log_file.open(log, std::ios::trunc);
        if (!log_file) throw FormatError("cannot open '" + log + "' for writing");
      }
      const TrainResult r = train(tr, dev, ls, c, [&](const EpochRecord& e) {
        if (log_file) log_file << to_json(e).dump() << "\n" << std::flush;
        std::cerr << "epoch " << e.epoch << " loss " << e.l_entry + e.l_sym + e.l_imp
                  << " dev ent " << e.dev_ent_f1 << " rel " << e.dev_rel_f1 << "\n";
      });
      save_model(out, r.params, r.vocab);
      std::cout << "best epoch " << r.best_epoch << " of " << r.log.size() << ", dev mean F1 "
                << r.best_dev_f1 << "\n";
      std::cout << format_report(evaluate_model(r.params, r.vocab, dev, ls, c.decode));
    };
  });
}

// ---- render --------------------------------------------------------------------

void add_render(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("render", "write gold or model tensors for a corpus");
  static std::string input, labels = "labels.json", out = "tensors.bin", model, noise = "dirichlet";
  static double epsilon = 0.0, sigma = 0.0;
  static std::uint64_t seed = 1;
  cmd->add_option("--input", input, "corpus")->required();
  cmd->add_option("--labels", labels);
  cmd->add_option("--out", out);
  cmd->add_option("--model", model, "score with a checkpoint instead of rendering gold");
  cmd->add_option("--epsilon", epsilon, "label smoothing of gold tensors");
  cmd->add_option("--noise", noise, "dirichlet | flip");
  cmd->add_option("--sigma", sigma, "noise strength");
  cmd->add_option("--seed", seed);
  cmd->callback([&run] {
    run = [] {
      const NoiseMode mode = usage_checked([] { return parse_noise_mode(noise); });
      if (!(sigma >= 0.0 && sigma <= 1.0)) throw UsageError("--sigma must lie in [0, 1]");
      const LabelSpace ls = read_label_space(labels);
      const auto corpus = read_corpus(input, ls);
      TensorSource src;
      src.model = model;
      std::vector<ProbTensor> tensors;
      if (!model.empty()) {
        tensors = src.load(ls, corpus);
      } else {
        for (const auto& s : corpus)
          tensors.push_back(usage_checked([&] {
            return one_hot_tensor(render_gold_table(s, ls), ls, epsilon);
          }));
      }
      Rng rng(effective_seed(seed));
      for (auto& p : tensors) p = corrupt_tensor(p, mode, sigma, rng);
      write_tensors(out, tensors, ls);
      std::cout << "wrote " << tensors.size() << " tensors to " << out << "\n";
    };
  });
}

// ---- decode --------------------------------------------------------------------

void add_decode(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("decode", "decode tensors or model outputs into predictions");
  static std::string labels = "labels.json", input, out, decoder = "joint";
  static TensorSource src;
  static DecodeFlags dflags;
  cmd->add_option("--labels", labels);
  cmd->add_option("--input", input, "corpus providing tokens (required with --model)");
  src.add(cmd);
  cmd->add_option("--decoder", decoder, "joint | hard | oracle");
  cmd->add_option("--out", out, "predictions (JSON lines, default stdout)");
  dflags.add(cmd);
  cmd->callback([&run] {
    run = [] {
      const DecoderKind kind = usage_checked([] { return parse_decoder_kind(decoder); });
      const DecodeConfig cfg = dflags.config();
      const LabelSpace ls = read_label_space(labels);
      std::vector<SentenceAnnotation> corpus;
      if (!input.empty()) corpus = read_corpus(input, ls);
      if (!src.model.empty() && input.empty()) throw UsageError("--model needs --input");
      const auto tensors = src.load(ls, corpus);
      if (!corpus.empty()) check_lengths(tensors, corpus);
      std::ofstream file;
      std::ostream& os = open_or_stdout(out, file);
      for (std::size_t s = 0; s < tensors.size(); ++s) {
        const ExtractionResult r = decode(tensors[s], ls, kind, cfg);
        os << to_json(r, ls, corpus.empty() ? nullptr : &corpus[s].tokens).dump() << "\n";
      }
    };
  });
}

// ---- eval / errors -------------------------------------------------------------

std::pair<std::vector<ExtractionResult>, std::vector<SentenceAnnotation>> load_pairs(
    const std::string& pred, const std::string& gold, const LabelSpace& ls) {
  auto preds = read_predictions(pred, ls);
  auto golds = read_corpus(gold, ls);
  if (preds.size() != golds.size()) {
    throw FormatError(pred + " has " + std::to_string(preds.size()) + " predictions but " + gold +
                      " has " + std::to_string(golds.size()) + " sentences");
  }
  return {std::move(preds), std::move(golds)};
}

void add_eval(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("eval", "strict micro P/R/F1 of predictions");
  static std::string labels = "labels.json", pred, gold;
  static bool json = false;
  cmd->add_option("--labels", labels);
  cmd->add_option("--pred", pred)->required();
  cmd->add_option("--gold", gold)->required();
  cmd->add_flag("--json", json, "print JSON instead of a table");
  cmd->callback([&run] {
    run = [] {
      const LabelSpace ls = read_label_space(labels);
      const auto [preds, golds] = load_pairs(pred, gold, ls);
      const EvalReport r = strict_eval(preds, golds, ls);
      if (json) {
        std::cout << to_json(r).dump(2) << "\n";
      } else {
        std::cout << format_report(r);
      }
    };
  });
}

void add_errors(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("errors", "classify missed gold relations");
  static std::string labels = "labels.json", pred, gold;
  static bool json = false;
  cmd->add_option("--labels", labels);
  cmd->add_option("--pred", pred)->required();
  cmd->add_option("--gold", gold)->required();
  cmd->add_flag("--json", json);
  cmd->callback([&run] {
    run = [] {
      const LabelSpace ls = read_label_space(labels);
      const auto [preds, golds] = load_pairs(pred, gold, ls);
      const ErrorBreakdown b = error_taxonomy(preds, golds, ls);
      if (json) {
        std::cout << to_json(b).dump(2) << "\n";
      } else {
        std::cout << format_errors(b);
      }
    };
  });
}

// ---- sweep / hist ---------------------------------------------------------------

void add_sweep(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("sweep", "re-decode over a threshold grid (CSV)");
  static std::string labels = "labels.json", gold, alphas = "0.6:2.0:0.1", mode = "squared", out;
  static TensorSource src;
  cmd->add_option("--labels", labels);
  cmd->add_option("--gold", gold)->required();
  src.add(cmd);
  cmd->add_option("--alphas", alphas, "lo:hi:step, inclusive");
  cmd->add_option("--distance-mode", mode);
  cmd->add_option("--out", out, "CSV path (default stdout)");
  cmd->callback([&run] {
    run = [] {
      const auto grid = parse_alpha_grid(alphas);
      const DistanceMode dm = usage_checked([] { return parse_distance_mode(mode); });
      const LabelSpace ls = read_label_space(labels);
      const auto corpus = read_corpus(gold, ls);
      const auto tensors = src.load(ls, corpus);
      check_lengths(tensors, corpus);
      std::ofstream file;
      write_sweep_csv(open_or_stdout(out, file), threshold_sweep(tensors, corpus, ls, grid, dm));
    };
  });
}

void add_hist(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("hist", "adjacent-row distance histograms (CSV)");
  static std::string labels = "labels.json", gold, mode = "squared", out;
  static TensorSource src;
  cmd->add_option("--labels", labels);
  cmd->add_option("--gold", gold)->required();
  src.add(cmd);
  cmd->add_option("--distance-mode", mode);
  cmd->add_option("--out", out, "CSV path (default stdout)");
  cmd->callback([&run] {
    run = [] {
      const DistanceMode dm = usage_checked([] { return parse_distance_mode(mode); });
      const LabelSpace ls = read_label_space(labels);
      const auto corpus = read_corpus(gold, ls);
      const auto tensors = src.load(ls, corpus);
      check_lengths(tensors, corpus);
      std::ofstream file;
      write_histogram_csv(open_or_stdout(out, file), distance_histogram(tensors, corpus, ls, dm));
    };
  });
}

// ---- bench ------------------------------------------------------------------------

void add_bench(CLI::App& app, std::function<void()>& run) {
  auto* cmd = app.add_subcommand("bench", "joint vs hard decoding throughput");
  static std::string labels, tensors;
  static std::size_t n = 500, length = 100, runs = 5, warmup = 1;
  static double sigma = 0.05;
  static std::uint64_t seed = 1;
  static DecodeFlags dflags;
  cmd->add_option("--labels", labels, "label space (with --tensors)");
  cmd->add_option("--tensors", tensors, "tensor batch (default: synthetic)");
  cmd->add_option("--n", n, "synthetic batch size");
  cmd->add_option("--length", length, "synthetic sentence length");
  cmd->add_option("--sigma", sigma, "dirichlet noise on synthetic tensors");
  cmd->add_option("--runs", runs);
  cmd->add_option("--warmup", warmup);
  cmd->add_option("--seed", seed);
  dflags.add(cmd);
  cmd->callback([&run] {
    run = [] {
      BenchConfig cfg{runs, warmup, dflags.config()};
      if (runs < 1 || n < 1 || length < 1) throw UsageError("--runs, --n and --length must be >= 1");
      if (!(sigma >= 0.0 && sigma <= 1.0)) throw UsageError("--sigma must lie in [0, 1]");
      std::vector<ProbTensor> batch;
      LabelSpace ls;
      if (!tensors.empty()) {
        if (labels.empty()) throw UsageError("--tensors needs --labels");
        ls = read_label_space(labels);
        batch = read_tensors(tensors, ls);
      } else {
        GenConfig g;
        g.seed = effective_seed(seed);
        g.min_length = g.max_length = length;
        g.max_entities = std::max<std::size_t>(1, length / 8);
        g.max_relations = 4;
        const auto corpus = generate_corpus(g, n);
        ls = corpus.labels;
        Rng rng(g.seed);
        for (const auto& s : corpus.sentences)
          batch.push_back(corrupt_tensor(one_hot_tensor(render_gold_table(s, ls), ls, 0.0),
                                         NoiseMode::kDirichletJitter, sigma, rng));
      }
      const BenchReport r = bench_decoders(batch, ls, cfg);
      std::cout << std::left << std::setw(8) << "decoder" << std::right << std::setw(14)
                << "sent/s" << std::setw(14) << "median_s" << "\n";
      for (const auto* t : {&r.joint, &r.hard}) {
        std::cout << std::left << std::setw(8) << to_string(t->decoder) << std::right
                  << std::fixed << std::setprecision(1) << std::setw(14)
                  << t->sentences_per_second << std::setprecision(6) << std::setw(14)
                  << t->median_seconds << "\n";
      }
      std::cout << "sentences " << r.sentences << ", runs " << runs << "\n";
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unified-label-space joint entity and relation extraction"};
  app.require_subcommand(1);
  std::function<void()> run;
  add_generate(app, run);
  add_train(app, run);
  add_render(app, run);
  add_decode(app, run);
  add_eval(app, run);
  add_sweep(app, run);
  add_hist(app, run);
  add_bench(app, run);
  add_errors(app, run);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
