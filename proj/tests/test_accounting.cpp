#include <chrono>
#include <cstdio>
#include <numeric>

#include <gtest/gtest.h>

#include "cco/accounting.hpp"
#include "cco/synthetic.hpp"

namespace cco {
namespace {

std::size_t later_popcount(std::size_t c, std::size_t lc, std::size_t n,
                           std::size_t chunks, std::size_t b) {
  const auto ext = make_extended_layout(make_layout(c * chunks, c));
  return build_cco_mask(ext, {lc, n, LayerClass::later, true})
      .row_popcount(ext.chunk_begin(b));
}

TEST(Memory, BoundedCcoKeyCount) {
  const auto rep = memory_report({{8, 1, 2, 12}});
  for (const auto& row : rep.rows) {
    if (row.layer_class != LayerClass::later || row.chunk_index < 3) continue;
    EXPECT_EQ(row.cco_keys, 19u);
    EXPECT_EQ(row.cco_keys, later_popcount(8, 1, 2, 12, row.chunk_index));
  }
}

TEST(Memory, BaselineGrowsWithStream) {
  const auto rep = memory_report({{8, 1, 16, 100}});
  const auto& last = rep.rows.back();
  ASSERT_EQ(last.chunk_index, 99u);
  ASSERT_EQ(last.layer_class, LayerClass::later);
  EXPECT_EQ(last.baseline_keys, 800u);
  EXPECT_EQ(last.cco_keys, 33u);
  EXPECT_EQ(last.cco_keys, later_popcount(8, 1, 16, 100, 99));
  EXPECT_DOUBLE_EQ(double(last.cco_keys) / last.baseline_keys, 33.0 / 800.0);
}

TEST(Memory, RowsAgreeWithKvCount) {
  std::vector<MemoryConfig> grid;
  for (std::size_t c : {2, 4, 8})
    for (std::size_t lc : {0, 1, 2})
      for (std::size_t n : {0, 1, 2, 4}) grid.push_back({c, lc, n, 9});
  const auto rep = memory_report(grid);
  ASSERT_EQ(rep.totals.size(), grid.size());
  for (const auto& row : rep.rows) {
    const auto layout = make_layout(row.config.chunks * row.config.chunk_size,
                                    row.config.chunk_size);
    EXPECT_EQ(row.cco_keys, kv_count({row.config.lc, row.config.n_ctx, row.layer_class, true},
                                     row.chunk_index, layout));
    EXPECT_EQ(row.baseline_keys, (row.chunk_index + 1) * row.config.chunk_size);
  }
}

TEST(Memory, ConstantAfterWarmupAndBaselineStrictlyIncreasing) {
  for (std::size_t lc : {0, 1, 2})
    for (std::size_t n : {0, 1, 3}) {
      const auto rep = memory_report({{4, lc, n, 30}});
      std::size_t prev_base = 0, steady = 0;
      for (const auto& row : rep.rows) {
        if (row.layer_class != LayerClass::later) continue;
        EXPECT_GT(row.baseline_keys, prev_base);
        prev_base = row.baseline_keys;
        if (row.chunk_index > lc + n) {
          if (steady == 0) steady = row.cco_keys;
          EXPECT_EQ(row.cco_keys, steady);
        }
      }
      EXPECT_EQ(steady, (lc + 1) * 4 + 1 + n);
      EXPECT_EQ(rep.totals[0].cco_peak, steady);
    }
}

TEST(Latency, NearestRank) {
  std::vector<double> v(200);
  std::iota(v.begin(), v.end(), 1.0);
  EXPECT_EQ(nearest_rank_percentile(v, 99.0), 198.0);
  EXPECT_EQ(nearest_rank_percentile(v, 100.0), 200.0);
  EXPECT_EQ(nearest_rank_percentile({5.0}, 99.0), 5.0);
  EXPECT_EQ(nearest_rank_percentile({3, 1, 2}, 50.0), 2.0);
  EXPECT_EQ(nearest_rank_percentile({}, 99.0), 0.0);
}

TEST(Latency, ReportShape) {
  SyntheticSpec s;
  s.d_model = 8;
  s.layers = 2;
  const auto st = random_stack<double>(s);
  CcoConfig cfg;
  cfg.chunk_size = 4;
  cfg.d_model = 8;
  cfg.layer_count = 2;
  const auto rep = bench_stream(st, cfg, 50, 2);
  EXPECT_EQ(rep.samples(), 100u);
  EXPECT_EQ(rep.repetition_means_ms.size(), 2u);
  EXPECT_GE(rep.p99_ms, rep.mean_ms);
  EXPECT_GE(rep.mean_ms, 0.0);
  EXPECT_EQ(rep.config.chunk_size, 4u);
}

TEST(Latency, PerChunkCostIndependentOfStreamLength) {
  SyntheticSpec s;
  s.d_model = 64;
  s.heads = 4;
  s.layers = 2;
  const auto st = random_stack<double>(s);
  CcoConfig cfg;
  cfg.chunk_size = 16;
  cfg.lc = 2;
  cfg.n_ctx = 4;
  cfg.d_model = 64;
  cfg.layer_count = 2;
  const std::size_t len = 250;
  const auto frames = random_frames<double>(2 * len * 16, 64, 3);
  time_stream_once(st, cfg, frames);  // warm-up

  // The short stream takes one chunk for every two of the long one, so both
  // are sampled over the same wall-clock window.
  auto timed = [&](StreamSession<double>& sess, std::size_t chunk) {
    const auto t0 = std::chrono::steady_clock::now();
    sess.push_frames(frames.row_block(chunk * 16, 16));
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };
  std::vector<double> short_ms, long_ms;
  for (int rep = 0; rep < 3; ++rep) {
    StreamSession<double> a(st, cfg), b(st, cfg);
    for (std::size_t i = 0; i < len; ++i) {
      short_ms.push_back(timed(a, i));
      long_ms.push_back(timed(b, 2 * i));
      long_ms.push_back(timed(b, 2 * i + 1));
    }
  }
  const double a = std::accumulate(short_ms.begin(), short_ms.end(), 0.0) / short_ms.size();
  const double b = std::accumulate(long_ms.begin(), long_ms.end(), 0.0) / long_ms.size();
  EXPECT_EQ(long_ms.size(), 2 * short_ms.size());
  EXPECT_LE(b / a, 1.10) << "short " << a << " ms, long " << b << " ms";
  std::printf("per-chunk mean: %zu chunks %.4f ms, %zu chunks %.4f ms, ratio %.3f\n", len,
              a, 2 * len, b, b / a);
}

}  // namespace
}  // namespace cco
