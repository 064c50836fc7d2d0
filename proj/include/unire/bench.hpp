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
#include <chrono>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "unire/decoder.hpp"
#include "unire/errors.hpp"
#include "unire/label_table.hpp"

namespace unire {

struct BenchConfig {
  std::size_t runs = 5;
  std::size_t warmup = 1;
  DecodeConfig decode;
};

struct DecoderThroughput {
  DecoderKind decoder = DecoderKind::kJoint;
  std::vector<double> run_seconds;
  double median_seconds = 0.0;
  double sentences_per_second = 0.0;
};

struct BenchReport {
  std::size_t sentences = 0;
  DecoderThroughput joint;
  DecoderThroughput hard;
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

template <class F>
double time_seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

inline std::size_t sink(const ExtractionResult& r) {
  return r.entities.size() + r.relations.size() + r.split_positions.size();
}

}  // namespace detail

// Wall-clock decoding throughput over a fixed batch. Tensor construction is
// not timed; joint timing includes symmetrization.
inline BenchReport bench_decoders(std::span<const ProbTensor> batch, const LabelSpace& ls,
                                  const BenchConfig& cfg = {}) {
  if (batch.empty()) throw ArgumentError("benchmark batch is empty");
  if (cfg.runs == 0) throw ArgumentError("benchmark needs at least one run");
  cfg.decode.validate();
  BenchReport report;
  report.sentences = batch.size();
  volatile std::size_t guard = 0;

  auto measure = [&](DecoderKind kind) {
    DecoderThroughput out;
    out.decoder = kind;
    auto pass = [&] {
      std::size_t acc = 0;
      for (const auto& p : batch) acc += detail::sink(decode(p, ls, kind, cfg.decode));
      guard = guard + acc;
    };
    for (std::size_t w = 0; w < cfg.warmup; ++w) pass();
    for (std::size_t r = 0; r < cfg.runs; ++r) out.run_seconds.push_back(detail::time_seconds(pass));
    out.median_seconds = detail::median(out.run_seconds);
    out.sentences_per_second =
        static_cast<double>(batch.size()) / std::max(out.median_seconds, 1e-12);
    return out;
  };
  report.joint = measure(DecoderKind::kJoint);
  report.hard = measure(DecoderKind::kHard);
  return report;
}

struct ScalingPoint {
  std::size_t length = 0;
  double median_seconds = 0.0;   // per tensor
  double seconds_per_cell = 0.0;  // per |s|*|s|*|Y| entry
};

// Span-stage cost (symmetrize + boundary distances + splitting) on random
// valid tensors of each length. Runs visit the lengths round-robin so that
// machine-wide slowdowns affect every length alike.
inline std::vector<ScalingPoint> span_stage_scaling(std::span<const std::size_t> lengths,
                                                    const LabelSpace& ls,
                                                    const BenchConfig& cfg = {},
                                                    std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  volatile std::size_t guard = 0;
  const std::size_t m = lengths.size();
  std::vector<ProbTensor> inputs, buffers(m);
  std::vector<std::size_t> reps;
  for (std::size_t n : lengths) {
    if (n == 0) throw ArgumentError("scaling lengths must be positive");
    ProbTensor p(n, ls.size());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        auto c = p.cell(i, j);
        double z = 0.0;
        for (auto& v : c) z += (v = unif(rng));
        for (auto& v : c) v /= z;
      }
    inputs.push_back(std::move(p));
    // Repeat within a run so that each timing covers a similar number of cells.
    reps.push_back(std::max<std::size_t>(1, (400 * 400) / (n * n) * 4));
  }
  // One reused buffer per length, as in a decoding loop; fresh allocations
  // would add page-fault cost that depends on the allocator rather than on |s|.
  auto pass = [&](std::size_t x) {
    for (std::size_t r = 0; r < reps[x]; ++r) {
      const auto d = symmetrize_with_distances(inputs[x], ls, cfg.decode.distance_mode, buffers[x]);
      guard = guard + spans_from_distances(d, inputs[x].size(), cfg.decode.alpha).spans.size();
    }
  };
  std::vector<std::vector<double>> times(m);
  for (std::size_t w = 0; w < cfg.warmup; ++w)
    for (std::size_t x = 0; x < m; ++x) pass(x);
  for (std::size_t r = 0; r < std::max<std::size_t>(cfg.runs, 1); ++r)
    for (std::size_t x = 0; x < m; ++x)
      times[x].push_back(detail::time_seconds([&] { pass(x); }) / static_cast<double>(reps[x]));
  std::vector<ScalingPoint> out;
  for (std::size_t x = 0; x < m; ++x) {
    const std::size_t n = lengths[x];
    ScalingPoint pt;
    pt.length = n;
    pt.median_seconds = detail::median(times[x]);
    pt.seconds_per_cell = pt.median_seconds / static_cast<double>(n * n * ls.size());
    out.push_back(pt);
  }
  return out;
}

}  // namespace unire
