#pragma once

// Key/value budget accounting and per-chunk latency measurement.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "cco/attention.hpp"
#include "cco/mask.hpp"
#include "cco/streaming.hpp"
#include "cco/synthetic.hpp"

namespace cco {

// ---------------------------------------------------------------------------
// Memory.

struct MemoryConfig {
  std::size_t chunk_size = 8;
  std::size_t lc = 1;
  std::size_t n_ctx = 1;
  std::size_t chunks = 16;  // stream length in chunks
};

struct MemoryRow {
  MemoryConfig config;
  LayerClass layer_class = LayerClass::later;
  std::size_t chunk_index = 0;   // 0-based
  std::size_t cco_keys = 0;
  std::size_t baseline_keys = 0; // no carry-over, full left context
};

struct MemoryTotals {
  MemoryConfig config;
  std::size_t cco_keys = 0;       // summed over chunks, later layer
  std::size_t baseline_keys = 0;
  std::size_t cco_peak = 0;
  std::size_t baseline_peak = 0;
  double ratio() const {
    return baseline_keys ? static_cast<double>(cco_keys) / baseline_keys : 0.0;
  }
};

struct MemoryReport {
  std::vector<MemoryRow> rows;
  std::vector<MemoryTotals> totals;
};

inline MemoryReport memory_report(const std::vector<MemoryConfig>& grid) {
  MemoryReport rep;
  for (const MemoryConfig& cfg : grid) {
    if (cfg.chunks == 0) throw ArgumentError("memory_report: zero chunks");
    const ChunkLayout layout = make_layout(cfg.chunks * cfg.chunk_size,
                                           cfg.chunk_size);
    const MaskSpec baseline{kAllLeftContext, 0, LayerClass::later, false};
    MemoryTotals tot{cfg};
    for (LayerClass cls : {LayerClass::first, LayerClass::later}) {
      const MaskSpec spec{cfg.lc, cfg.n_ctx, cls, true};
      for (std::size_t b = 0; b < cfg.chunks; ++b) {
        MemoryRow row{cfg, cls, b, kv_count(spec, b, layout),
                      kv_count(baseline, b, layout)};
        if (cls == LayerClass::later) {
          tot.cco_keys += row.cco_keys;
          tot.baseline_keys += row.baseline_keys;
          tot.cco_peak = std::max(tot.cco_peak, row.cco_keys);
          tot.baseline_peak = std::max(tot.baseline_peak, row.baseline_keys);
        }
        rep.rows.push_back(row);
      }
    }
    rep.totals.push_back(tot);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Latency.

struct LatencyReport {
  CcoConfig config;
  std::vector<double> chunk_ms;  // pooled over timed repetitions
  std::vector<double> repetition_means_ms;
  double mean_ms = 0.0;
  double p99_ms = 0.0;
  std::size_t samples() const { return chunk_ms.size(); }
};

// Nearest-rank percentile, p in (0, 100].
inline double nearest_rank_percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

inline void finalize(LatencyReport& rep) {
  rep.mean_ms = rep.chunk_ms.empty()
                    ? 0.0
                    : std::accumulate(rep.chunk_ms.begin(), rep.chunk_ms.end(),
                                      0.0) /
                          static_cast<double>(rep.chunk_ms.size());
  rep.p99_ms = nearest_rank_percentile(rep.chunk_ms, 99.0);
}

namespace detail {

template <std::floating_point T>
double timed_push(StreamSession<T>& session, const Matrix<T>& chunk) {
  const auto t0 = std::chrono::steady_clock::now();
  auto out = session.push_frames(chunk);
  const auto t1 = std::chrono::steady_clock::now();
  if (out.size() != 1) throw StateError("bench: expected one chunk per push");
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace detail

// Streams every chunk of `frames` once through a fresh session, timing each.
// Returns per-chunk milliseconds.
template <std::floating_point T>
std::vector<double> time_stream_once(const EncoderStack<T>& stack,
                                     const CcoConfig& cfg,
                                     const Matrix<T>& frames) {
  StreamSession<T> session(stack, cfg);
  std::vector<double> ms;
  const std::size_t c = cfg.chunk_size;
  ms.reserve(frames.rows() / c);
  for (std::size_t off = 0; off + c <= frames.rows(); off += c)
    ms.push_back(detail::timed_push(session, frames.row_block(off, c)));
  return ms;
}

// Times several configurations in lockstep: one session per configuration,
// and for each chunk index every session takes its next chunk, in an order
// that rotates from chunk to chunk. Host noise on any timescale longer than
// a few chunks then lands on all configurations alike. One untimed warm-up
// pass per configuration precedes the timed repetitions.
template <std::floating_point T>
std::vector<LatencyReport> bench_interleaved(const EncoderStack<T>& stack,
                                             const std::vector<CcoConfig>& cfgs,
                                             std::size_t stream_length,
                                             std::size_t repetitions,
                                             std::uint64_t seed = 7) {
  const std::size_t k = cfgs.size();
  std::vector<LatencyReport> reps(k);
  std::vector<Matrix<T>> inputs;
  for (std::size_t i = 0; i < k; ++i) {
    reps[i].config = cfgs[i];
    inputs.push_back(random_frames<T>(stream_length * cfgs[i].chunk_size,
                                      stack.d_model(), seed));
    time_stream_once(stack, cfgs[i], inputs[i]);
  }
  for (std::size_t r = 0; r < repetitions; ++r) {
    std::vector<StreamSession<T>> sessions;
    sessions.reserve(k);
    for (const auto& cfg : cfgs) sessions.emplace_back(stack, cfg);
    std::vector<std::vector<double>> ms(k);
    for (std::size_t b = 0; b < stream_length; ++b) {
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t i = (b + j) % k;
        const std::size_t c = cfgs[i].chunk_size;
        ms[i].push_back(
            detail::timed_push(sessions[i], inputs[i].row_block(b * c, c)));
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      reps[i].repetition_means_ms.push_back(
          std::accumulate(ms[i].begin(), ms[i].end(), 0.0) /
          static_cast<double>(ms[i].size()));
      reps[i].chunk_ms.insert(reps[i].chunk_ms.end(), ms[i].begin(),
                              ms[i].end());
    }
  }
  for (auto& rep : reps) finalize(rep);
  return reps;
}

template <std::floating_point T>
LatencyReport bench_stream(const EncoderStack<T>& stack, const CcoConfig& cfg,
                           std::size_t stream_length, std::size_t repetitions,
                           std::uint64_t seed = 7) {
  return bench_interleaved(stack, {cfg}, stream_length, repetitions, seed)
      .front();
}

}  // namespace cco
