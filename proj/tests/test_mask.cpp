#include <set>

#include <gtest/gtest.h>

#include "cco/mask.hpp"
#include "oracles.hpp"

namespace cco {
namespace {

std::set<long> allowed_columns(const BoolMatrix& m, std::size_t row) {
  std::set<long> out;
  for (std::size_t c = 0; c < m.cols(); ++c)
    if (m(row, c)) out.insert(static_cast<long>(c));
  return out;
}

BoolMatrix mask_for(std::size_t t, std::size_t c, MaskSpec spec) {
  return build_cco_mask(make_extended_layout(make_layout(t, c)), spec);
}

TEST(Layout, EvenSplit) {
  const auto l = make_layout(16, 4);
  ASSERT_EQ(l.chunk_count, 4u);
  for (std::size_t b = 0; b < 4; ++b)
    EXPECT_EQ(l.chunk_spans[b], (ChunkSpan{4 * b, 4}));
}

TEST(Layout, ShortLastChunk) {
  const auto l = make_layout(10, 4);
  ASSERT_EQ(l.chunk_count, 3u);
  EXPECT_EQ(l.chunk_spans[2], (ChunkSpan{8, 2}));
}

TEST(Layout, SingleShortChunk) {
  const auto l = make_layout(3, 8);
  ASSERT_EQ(l.chunk_count, 1u);
  EXPECT_EQ(l.chunk_spans[0], (ChunkSpan{0, 3}));
}

TEST(Layout, RejectsEmpty) {
  EXPECT_THROW(make_layout(0, 4), ArgumentError);
  EXPECT_THROW(make_layout(4, 0), ArgumentError);
}

TEST(Layout, SpansPartitionTheFrames) {
  for (std::size_t t = 1; t <= 40; ++t)
    for (std::size_t c = 1; c <= 12; ++c) {
      const auto l = make_layout(t, c);
      std::size_t next = 0;
      for (std::size_t b = 0; b < l.chunk_count; ++b) {
        EXPECT_EQ(l.chunk_spans[b].start, next);
        const auto len = l.chunk_spans[b].length;
        if (b + 1 < l.chunk_count) EXPECT_EQ(len, c);
        EXPECT_GE(len, 1u);
        EXPECT_LE(len, c);
        next += len;
      }
      EXPECT_EQ(next, t);
      EXPECT_EQ(l.chunk_count, (t + c - 1) / c);
    }
}

TEST(ExtendedLayout, SlotsFollowTheirChunk) {
  const auto e = make_extended_layout(make_layout(10, 4));
  EXPECT_EQ(e.extended_len, 13u);
  EXPECT_EQ(e.slot_index, (std::vector<std::size_t>{4, 9, 12}));
  EXPECT_EQ(e.chunk_begin(2), 10u);
}

// Extended columns for T=16, C=4 are
//   chunk1: 0-3, ctx1 4 | chunk2: 5-8, ctx2 9 | chunk3: 10-13, ctx3 14 |
//   chunk4: 15-18, ctx4 19
TEST(CcoMask, ChunkFourLaterLayerSingleContext) {
  const auto m = mask_for(16, 4, {1, 1, LayerClass::later, true});
  // ctx2, chunk 3 frames, chunk 4 frames, ctx4. ctx3 stays blocked.
  const std::set<long> want{9, 10, 11, 12, 13, 15, 16, 17, 18, 19};
  for (long r = 15; r <= 19; ++r) EXPECT_EQ(allowed_columns(m, r), want);
  EXPECT_EQ(want.size(), 10u);
}

TEST(CcoMask, ChunkFourLaterLayerTwoContexts) {
  const auto m = mask_for(16, 4, {1, 2, LayerClass::later, true});
  const std::set<long> want{4, 9, 10, 11, 12, 13, 15, 16, 17, 18, 19};
  EXPECT_EQ(allowed_columns(m, 15), want);
  EXPECT_EQ(want.size(), 11u);
}

TEST(CcoMask, ChunkThreeFirstLayer) {
  const auto m = mask_for(16, 4, {1, 1, LayerClass::first, true});
  const std::set<long> want{5, 6, 7, 8, 10, 11, 12, 13, 14};
  EXPECT_EQ(allowed_columns(m, 10), want);
}

TEST(KvCount, HandExamples) {
  EXPECT_EQ(kv_count({1, 1, LayerClass::later, true}, 3, make_layout(16, 4)), 10u);
  EXPECT_EQ(kv_count({1, 0, LayerClass::first, true}, 0, make_layout(16, 4)), 5u);
  EXPECT_EQ(kv_count({7, 0, LayerClass::later, false}, 7, make_layout(32, 4)), 32u);
}

TEST(KvCount, OutOfRangeChunk) {
  EXPECT_THROW(kv_count({1, 1, LayerClass::later, true}, 4, make_layout(16, 4)),
               ArgumentError);
}

TEST(CcoMask, NoCarryOverRejectsContextCount) {
  EXPECT_THROW(mask_for(8, 4, {1, 1, LayerClass::later, false}), ArgumentError);
}

struct GridPoint {
  std::size_t c, lc, n, chunks;
};

std::vector<GridPoint> property_grid() {
  std::vector<GridPoint> g;
  for (std::size_t c : {2, 4, 8})
    for (std::size_t lc : {0, 1, 2})
      for (std::size_t n : {0, 1, 2, 4})
        for (std::size_t chunks = 1; chunks <= 8; ++chunks) g.push_back({c, lc, n, chunks});
  return g;
}

TEST(CcoMaskProperty, MatchesKeySetOracleEverywhere) {
  for (const auto& g : property_grid())
    for (bool later : {false, true})
      for (bool cco : {false, true}) {
        // Drop one frame from the last chunk to exercise short tails too.
        for (std::size_t t : {g.c * g.chunks, g.c * g.chunks - (g.c > 1 ? 1 : 0)}) {
          const MaskSpec spec{g.lc, cco ? g.n : 0,
                              later ? LayerClass::later : LayerClass::first, cco};
          const auto m = mask_for(t, g.c, spec);
          const auto layout = make_layout(t, g.c);
          for (std::size_t b = 0; b < layout.chunk_count; ++b) {
            const auto want = oracle::enumerate_key_columns(
                long(t), long(g.c), long(g.lc), long(spec.n_ctx), later, cco, long(b + 1));
            for (long r : oracle::chunk_rows(long(t), long(g.c), cco, long(b + 1)))
              ASSERT_EQ(allowed_columns(m, std::size_t(r)), want)
                  << "t=" << t << " c=" << g.c << " lc=" << g.lc << " n=" << g.n
                  << " chunk=" << b << " later=" << later << " cco=" << cco;
          }
        }
      }
}

TEST(CcoMaskProperty, KvCountEqualsPopcount) {
  for (const auto& g : property_grid())
    for (auto cls : {LayerClass::first, LayerClass::later}) {
      const MaskSpec spec{g.lc, g.n, cls, true};
      const auto layout = make_layout(g.c * g.chunks, g.c);
      const auto ext = make_extended_layout(layout);
      const auto m = build_cco_mask(ext, spec);
      for (std::size_t b = 0; b < layout.chunk_count; ++b)
        for (std::size_t r = ext.chunk_begin(b); r <= ext.slot_index[b]; ++r)
          ASSERT_EQ(m.row_popcount(r), kv_count(spec, b, layout));
    }
}

TEST(CcoMaskProperty, BlockUniformAndCausal) {
  for (const auto& g : property_grid()) {
    const MaskSpec spec{g.lc, g.n, LayerClass::later, true};
    const auto ext = make_extended_layout(make_layout(g.c * g.chunks, g.c));
    const auto m = build_cco_mask(ext, spec);
    for (std::size_t b = 0; b < g.chunks; ++b) {
      const std::size_t lo = ext.chunk_begin(b), hi = ext.slot_index[b];
      for (std::size_t r = lo + 1; r <= hi; ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) ASSERT_EQ(m(r, c), m(lo, c));
      for (std::size_t c = hi + 1; c < m.cols(); ++c) ASSERT_FALSE(m(lo, c));
    }
  }
}

TEST(CcoMaskProperty, FirstLayerNeverSeesForeignContext) {
  for (const auto& g : property_grid()) {
    const auto ext = make_extended_layout(make_layout(g.c * g.chunks, g.c));
    const auto m = build_cco_mask(ext, {g.lc, g.n, LayerClass::first, true});
    for (std::size_t b = 0; b < g.chunks; ++b)
      for (std::size_t j = 0; j < g.chunks; ++j)
        if (j != b) ASSERT_FALSE(m(ext.chunk_begin(b), ext.slot_index[j]));
  }
}

TEST(CcoMaskProperty, MonotoneInContextCount) {
  for (std::size_t c : {2, 4})
    for (std::size_t lc : {0, 1, 2})
      for (std::size_t chunks = 1; chunks <= 8; ++chunks) {
        const auto ext = make_extended_layout(make_layout(c * chunks, c));
        for (std::size_t k = 0; k < 5; ++k) {
          const auto small = build_cco_mask(ext, {lc, k, LayerClass::later, true});
          const auto big = build_cco_mask(ext, {lc, k + 1, LayerClass::later, true});
          for (std::size_t b = 0; b < chunks; ++b) {
            const std::size_t r = ext.chunk_begin(b);
            for (std::size_t col = 0; col < small.cols(); ++col) {
              if (small(r, col)) ASSERT_TRUE(big(r, col));
              if (b <= lc) ASSERT_EQ(small(r, col), big(r, col));
            }
          }
        }
      }
}

TEST(CcoMaskProperty, DegeneratesToFullAttention) {
  for (std::size_t t = 1; t <= 12; ++t)
    for (std::size_t c = t; c <= t + 3; ++c)
      for (std::size_t lc : {std::size_t{0}, std::size_t{3}, kAllLeftContext}) {
        const auto m = mask_for(t, c, {lc, 0, LayerClass::later, false});
        ASSERT_EQ(m.rows(), t);
        EXPECT_TRUE(m.all());
      }
}

TEST(CcoMask, AllLeftContext) {
  const auto layout = make_layout(40, 4);
  for (std::size_t b = 0; b < 10; ++b)
    EXPECT_EQ(kv_count({kAllLeftContext, 0, LayerClass::later, false}, b, layout),
              (b + 1) * 4);
  // Every earlier chunk's frames are visible, so no context slot is needed.
  EXPECT_EQ(kv_count({kAllLeftContext, 5, LayerClass::later, true}, 9, layout), 41u);
}

}  // namespace
}  // namespace cco
