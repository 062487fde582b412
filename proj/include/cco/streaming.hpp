#pragma once

// Chunk-by-chunk streaming inference with bounded per-layer key/value caches.
//
// For chunk b, layer n attends over
//   [ctx^{n-1}_{b-LC-N_ctx .. b-LC-1}, Z^{n-1}_{b-LC .. b}, ctx^{n-1}_b]
// where the cached parts are stored already projected by that layer's key and
// value weights. Keys are gathered in the same column order the offline mask
// uses, so the two paths perform identical arithmetic.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cco/attention.hpp"
#include "cco/errors.hpp"
#include "cco/mask.hpp"
#include "cco/ring_buffer.hpp"
#include "cco/tensor.hpp"

namespace cco {

template <std::floating_point T>
struct CachedChunk {
  std::size_t index = 0;
  Matrix<T> keys, values;  // frame rows only
};

template <std::floating_point T>
struct CachedContext {
  std::size_t index = 0;
  Matrix<T> key, value;  // 1 x d_model
};

template <std::floating_point T>
struct LayerCache {
  BoundedRing<CachedChunk<T>> recent_chunks;
  BoundedRing<CachedContext<T>> ctx_history;

  std::size_t chunk_entries() const { return recent_chunks.size(); }
  std::size_t context_entries() const { return ctx_history.size(); }
};

template <std::floating_point T>
struct ChunkOutput {
  std::size_t chunk_index = 0;
  Matrix<T> frames;
};

inline void validate_stream_config(const CcoConfig& cfg) {
  if (cfg.chunk_size == 0) throw ArgumentError("chunk size must be >= 1");
  if (!cfg.cco_enabled && cfg.n_ctx != 0)
    throw ArgumentError("n_ctx must be 0 without carry-over");
}

// One utterance in flight. Single writer: push_frames/flush must be
// serialised by the caller. The stack must outlive the session.
template <std::floating_point T>
class StreamSession {
 public:
  StreamSession(const EncoderStack<T>& stack, const CcoConfig& cfg)
      : stack_(&stack), cfg_(cfg), eps_(static_cast<T>(cfg.ln_eps)) {
    stack.validate();
    validate_stream_config(cfg);
    if (cfg.precision != precision_of<T>())
      throw ArgumentError("config precision does not match element type");
    if (cfg.d_model != stack.d_model())
      throw ArgumentError("config d_model " + std::to_string(cfg.d_model) +
                          " != stack d_model " +
                          std::to_string(stack.d_model()));
    if (cfg.layer_count != stack.layer_count())
      throw ArgumentError("config layer count != stack layer count");

    const bool all_left = cfg.lc == kAllLeftContext;
    const std::size_t chunk_cap = all_left ? BoundedRing<int>::kUnbounded : cfg.lc;
    // Oldest context index ever read for chunk b is b-LC-N_ctx.
    const std::size_t ctx_cap = (!cfg.cco_enabled || all_left || cfg.n_ctx == 0)
                                    ? 0
                                    : cfg.n_ctx + cfg.lc + 1;
    caches_.reserve(stack.layer_count());
    for (std::size_t n = 0; n < stack.layer_count(); ++n)
      caches_.push_back({BoundedRing<CachedChunk<T>>(chunk_cap),
                         BoundedRing<CachedContext<T>>(n == 0 ? 0 : ctx_cap)});
  }

  const CcoConfig& config() const { return cfg_; }
  std::size_t chunks_processed() const { return chunks_processed_; }
  std::size_t buffered_frames() const { return carry_.rows(); }
  bool closed() const { return closed_; }
  const std::vector<LayerCache<T>>& caches() const { return caches_; }

  // Buffers frames and runs every chunk that became complete.
  std::vector<ChunkOutput<T>> push_frames(const Matrix<T>& frames) {
    if (closed_) throw StateError("push_frames on a flushed session");
    if (frames.rows() == 0) return {};
    if (frames.cols() != cfg_.d_model)
      throw ShapeError("push_frames: expected " + std::to_string(cfg_.d_model) +
                       " columns, got " + std::to_string(frames.cols()));
    std::vector<ChunkOutput<T>> out;
    const std::size_t c = cfg_.chunk_size;
    std::size_t offset = 0;
    if (carry_.rows() > 0) {
      const std::size_t take = std::min(c - carry_.rows(), frames.rows());
      carry_.append_rows(frames.row_block(0, take));
      offset = take;
      if (carry_.rows() < c) return out;
      out.push_back(process_chunk(carry_));
      carry_ = Matrix<T>();
    }
    for (; offset + c <= frames.rows(); offset += c)
      out.push_back(process_chunk(frames.row_block(offset, c)));
    if (offset < frames.rows())
      carry_ = frames.row_block(offset, frames.rows() - offset);
    return out;
  }

  // Runs the trailing partial chunk, if any, and closes the session.
  std::optional<ChunkOutput<T>> flush() {
    if (closed_) throw StateError("session already flushed");
    closed_ = true;
    if (carry_.rows() == 0) return std::nullopt;
    ChunkOutput<T> out = process_chunk(carry_);
    carry_ = Matrix<T>();
    return out;
  }

 private:
  ChunkOutput<T> process_chunk(const Matrix<T>& chunk) {
    const std::size_t b = chunks_processed_;
    const std::size_t len = chunk.rows();
    Matrix<T> x = chunk;
    if (cfg_.cco_enabled) {
      std::vector<T> mean(chunk.cols(), T(0));
      for (std::size_t i = 0; i < len; ++i)
        for (std::size_t j = 0; j < chunk.cols(); ++j) mean[j] += chunk(i, j);
      for (T& v : mean) v /= static_cast<T>(len);
      x.append_row(mean);
    }

    for (std::size_t n = 0; n < stack_->layer_count(); ++n) {
      const EncoderLayerParams<T>& p = stack_->layers[n];
      LayerCache<T>& cache = caches_[n];
      const MaskSpec spec =
          cfg_.mask_spec(n == 0 ? LayerClass::first : LayerClass::later);
      const KeyRanges ranges = key_ranges(spec, b);

      const Matrix<T> a = layer_norm(x, p.ln1_gain.row(0), p.ln1_bias.row(0), eps_);
      const Matrix<T> q = matmul(a, p.w_q);
      const Matrix<T> k_new = matmul(a, p.w_k);
      const Matrix<T> v_new = matmul(a, p.w_v);

      std::size_t key_rows = ranges.preceding_ctx_count() + k_new.rows();
      cache.recent_chunks.for_each(
          [&](const CachedChunk<T>& e) { key_rows += e.keys.rows(); });
      Matrix<T> keys, values;
      keys.reserve_rows(key_rows, k_new.cols());
      values.reserve_rows(key_rows, v_new.cols());
      std::size_t ctx_found = 0;
      cache.ctx_history.for_each([&](const CachedContext<T>& e) {
        if (e.index >= ranges.ctx_begin && e.index < ranges.ctx_end) {
          keys.append_rows(e.key);
          values.append_rows(e.value);
          ++ctx_found;
        }
      });
      if (ctx_found != ranges.preceding_ctx_count())
        throw StateError("context history is missing embeddings");
      cache.recent_chunks.for_each([&](const CachedChunk<T>& e) {
        keys.append_rows(e.keys);
        values.append_rows(e.values);
      });
      if (!cache.recent_chunks.empty() &&
          cache.recent_chunks.oldest().index != ranges.frame_begin)
        throw StateError("left-context cache out of step");
      keys.append_rows(k_new);
      values.append_rows(v_new);

      Matrix<T> r = matmul(multi_head_attend(q, keys, values, p.head_count,
                                             nullptr),
                           p.w_o);
      r += x;

      cache.recent_chunks.push(
          {b, k_new.row_block(0, len), v_new.row_block(0, len)});
      if (cfg_.cco_enabled)
        cache.ctx_history.push(
            {b, k_new.row_block(len, 1), v_new.row_block(len, 1)});

      x = feed_forward_block(r, p, eps_);
    }
    ++chunks_processed_;
    return {b, x.row_block(0, len)};
  }

  const EncoderStack<T>* stack_;
  CcoConfig cfg_;
  T eps_;
  std::vector<LayerCache<T>> caches_;
  std::size_t chunks_processed_ = 0;
  Matrix<T> carry_;
  bool closed_ = false;
};

template <std::floating_point T>
StreamSession<T> open_session(const EncoderStack<T>& stack,
                              const CcoConfig& cfg) {
  return StreamSession<T>(stack, cfg);
}

// Feeds all frames through a fresh session and returns the concatenated
// T x d_model output.
template <std::floating_point T>
Matrix<T> stream_all(const Matrix<T>& frames, const EncoderStack<T>& stack,
                     const CcoConfig& cfg) {
  StreamSession<T> session(stack, cfg);
  Matrix<T> out;
  for (auto& chunk : session.push_frames(frames)) out.append_rows(chunk.frames);
  if (auto tail = session.flush()) out.append_rows(tail->frames);
  return out;
}

struct CompareReport {
  double max_abs_diff = 0.0;
  std::vector<double> per_chunk_diffs;
};

template <std::floating_point T>
CompareReport compare_offline(const Matrix<T>& frames,
                              const EncoderStack<T>& stack,
                              const CcoConfig& cfg) {
  const Matrix<T> offline = encoder_forward_offline(frames, stack, cfg);
  const Matrix<T> streamed = stream_all(frames, stack, cfg);
  if (streamed.rows() != offline.rows())
    throw StateError("streaming emitted " + std::to_string(streamed.rows()) +
                     " rows, offline produced " +
                     std::to_string(offline.rows()));
  CompareReport rep;
  const ChunkLayout layout = make_layout(frames.rows(), cfg.chunk_size);
  for (const auto& span : layout.chunk_spans) {
    double d = 0.0;
    for (std::size_t i = span.start; i < span.start + span.length; ++i)
      for (std::size_t j = 0; j < offline.cols(); ++j)
        d = std::max(d, static_cast<double>(
                            std::abs(offline(i, j) - streamed(i, j))));
    rep.per_chunk_diffs.push_back(d);
    rep.max_abs_diff = std::max(rep.max_abs_diff, d);
  }
  return rep;
}

}  // namespace cco
