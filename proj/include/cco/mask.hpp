#pragma once

// Chunk layouts and the block-structured contextual carry-over attention
// masks.
//
// Chunks are 0-indexed in code. The extended layout interleaves one context
// slot after each chunk's frames:
//
//   [chunk0 frames, ctx0, chunk1 frames, ctx1, ...]
//
// Every query row of chunk b (its frames and its context slot) shares one key
// set:
//   first layer : frames of chunks max(0, b-LC)..b, ctx_b
//   later layers: ctx of chunks b-LC-N_ctx..b-LC-1 (clipped at 0),
//                 frames of chunks max(0, b-LC)..b, ctx_b
//   no carry-over: frames of chunks max(0, b-LC)..b, on the plain T x T grid

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "cco/errors.hpp"
#include "cco/tensor.hpp"

namespace cco {

// Left context spanning every preceding chunk.
inline constexpr std::size_t kAllLeftContext =
    std::numeric_limits<std::size_t>::max();

struct ChunkSpan {
  std::size_t start = 0;
  std::size_t length = 0;

  friend bool operator==(const ChunkSpan&, const ChunkSpan&) = default;
};

struct ChunkLayout {
  std::size_t total_frames = 0;
  std::size_t chunk_size = 0;
  std::size_t chunk_count = 0;
  std::vector<ChunkSpan> chunk_spans;
};

inline ChunkLayout make_layout(std::size_t total_frames,
                               std::size_t chunk_size) {
  if (total_frames == 0) throw ArgumentError("make_layout: zero frames");
  if (chunk_size == 0) throw ArgumentError("make_layout: zero chunk size");
  ChunkLayout out;
  out.total_frames = total_frames;
  out.chunk_size = chunk_size;
  out.chunk_count = (total_frames + chunk_size - 1) / chunk_size;
  out.chunk_spans.reserve(out.chunk_count);
  for (std::size_t start = 0; start < total_frames; start += chunk_size)
    out.chunk_spans.push_back(
        {start, std::min(chunk_size, total_frames - start)});
  return out;
}

struct ExtendedLayout {
  ChunkLayout layout;
  // Column of chunk b's context slot in the extended sequence.
  std::vector<std::size_t> slot_index;
  std::size_t extended_len = 0;

  // Extended column of chunk b's first frame.
  std::size_t chunk_begin(std::size_t b) const {
    return layout.chunk_spans[b].start + b;
  }
};

inline ExtendedLayout make_extended_layout(const ChunkLayout& layout) {
  ExtendedLayout out;
  out.layout = layout;
  out.extended_len = layout.total_frames + layout.chunk_count;
  out.slot_index.reserve(layout.chunk_count);
  for (std::size_t b = 0; b < layout.chunk_count; ++b)
    out.slot_index.push_back(layout.chunk_spans[b].start + b +
                             layout.chunk_spans[b].length);
  return out;
}

enum class LayerClass { first, later };

struct MaskSpec {
  std::size_t lc = 0;
  std::size_t n_ctx = 0;
  LayerClass layer_class = LayerClass::later;
  bool cco_enabled = true;
};

inline void validate(const MaskSpec& spec) {
  if (!spec.cco_enabled && spec.n_ctx != 0)
    throw ArgumentError("mask spec: n_ctx must be 0 without carry-over");
}

// Which chunks contribute keys to chunk b. Half-open chunk-index ranges.
struct KeyRanges {
  std::size_t ctx_begin = 0, ctx_end = 0;       // preceding context slots
  std::size_t frame_begin = 0, frame_end = 0;   // chunks whose frames are keys
  bool own_ctx = false;

  std::size_t preceding_ctx_count() const { return ctx_end - ctx_begin; }
};

inline KeyRanges key_ranges(const MaskSpec& spec, std::size_t b) {
  KeyRanges r;
  r.frame_begin = spec.lc >= b ? 0 : b - spec.lc;
  r.frame_end = b + 1;
  r.own_ctx = spec.cco_enabled;
  if (spec.cco_enabled && spec.layer_class == LayerClass::later &&
      r.frame_begin > 0) {
    r.ctx_end = r.frame_begin;
    r.ctx_begin = r.ctx_end > spec.n_ctx ? r.ctx_end - spec.n_ctx : 0;
  }
  return r;
}

inline std::size_t kv_count(const MaskSpec& spec, std::size_t b,
                            const ChunkLayout& layout) {
  validate(spec);
  if (b >= layout.chunk_count)
    throw ArgumentError("kv_count: chunk " + std::to_string(b) +
                        " out of range");
  const KeyRanges r = key_ranges(spec, b);
  std::size_t n = r.preceding_ctx_count() + (r.own_ctx ? 1 : 0);
  for (std::size_t c = r.frame_begin; c < r.frame_end; ++c)
    n += layout.chunk_spans[c].length;
  return n;
}

// (T+B) x (T+B) with carry-over, T x T without.
inline BoolMatrix build_cco_mask(const ExtendedLayout& ext,
                                 const MaskSpec& spec) {
  validate(spec);
  const ChunkLayout& lay = ext.layout;
  if (!spec.cco_enabled) {
    BoolMatrix m(lay.total_frames, lay.total_frames);
    for (std::size_t b = 0; b < lay.chunk_count; ++b) {
      const KeyRanges r = key_ranges(spec, b);
      const std::size_t key_lo = lay.chunk_spans[r.frame_begin].start;
      const std::size_t key_hi =
          lay.chunk_spans[b].start + lay.chunk_spans[b].length;
      for (std::size_t q = lay.chunk_spans[b].start; q < key_hi; ++q)
        for (std::size_t k = key_lo; k < key_hi; ++k) m.set(q, k);
    }
    return m;
  }

  BoolMatrix m(ext.extended_len, ext.extended_len);
  for (std::size_t b = 0; b < lay.chunk_count; ++b) {
    const KeyRanges r = key_ranges(spec, b);
    std::vector<std::size_t> cols;
    for (std::size_t c = r.ctx_begin; c < r.ctx_end; ++c)
      cols.push_back(ext.slot_index[c]);
    for (std::size_t c = r.frame_begin; c < r.frame_end; ++c)
      for (std::size_t i = 0; i < lay.chunk_spans[c].length; ++i)
        cols.push_back(ext.chunk_begin(c) + i);
    cols.push_back(ext.slot_index[b]);
    for (std::size_t q = ext.chunk_begin(b); q <= ext.slot_index[b]; ++q)
      for (std::size_t k : cols) m.set(q, k);
  }
  return m;
}

}  // namespace cco
