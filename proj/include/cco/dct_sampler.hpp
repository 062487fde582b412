#pragma once

// Seeded sampler for the dynamic chunk training schedule: 40% of draws are
// full-contextual, the rest pick a chunk size uniformly in [8, 32] frames and
// a left context from a small menu.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cco/errors.hpp"
#include "cco/mask.hpp"

namespace cco {

inline constexpr std::size_t kFrameMs = 40;

inline std::size_t frames_to_ms(std::size_t frames) { return frames * kFrameMs; }

inline std::size_t ms_to_frames(std::size_t ms) {
  if (ms == 0 || ms % kFrameMs != 0)
    throw ArgumentError(std::to_string(ms) + " ms is not a positive multiple of " +
                        std::to_string(kFrameMs) + " ms");
  return ms / kFrameMs;
}

enum class DctMode { full_contextual, chunked };

struct DctDraw {
  DctMode mode = DctMode::full_contextual;
  std::optional<std::size_t> chunk_size_frames;
  // kAllLeftContext means every preceding chunk.
  std::optional<std::size_t> left_context_chunks;
};

struct DctPolicy {
  double full_contextual_probability = 0.4;
  std::size_t min_chunk = 8;
  std::size_t max_chunk = 32;
  std::vector<std::size_t> left_context_menu{0, 1, 2, 4, kAllLeftContext};
};

class DctSampler {
 public:
  explicit DctSampler(std::uint64_t seed, DctPolicy policy = {})
      : policy_(std::move(policy)),
        rng_(seed),
        full_(policy_.full_contextual_probability),
        chunk_(policy_.min_chunk, policy_.max_chunk),
        lc_(0, policy_.left_context_menu.empty()
                   ? 0
                   : policy_.left_context_menu.size() - 1) {
    if (policy_.min_chunk == 0 || policy_.min_chunk > policy_.max_chunk)
      throw ArgumentError("dct policy: bad chunk range");
    if (policy_.left_context_menu.empty())
      throw ArgumentError("dct policy: empty left-context menu");
  }

  DctDraw sample() {
    if (full_(rng_)) return {};
    DctDraw d;
    d.mode = DctMode::chunked;
    d.chunk_size_frames = chunk_(rng_);
    d.left_context_chunks = policy_.left_context_menu[lc_(rng_)];
    return d;
  }

  const DctPolicy& policy() const { return policy_; }

 private:
  DctPolicy policy_;
  std::mt19937_64 rng_;
  std::bernoulli_distribution full_;
  std::uniform_int_distribution<std::size_t> chunk_;
  std::uniform_int_distribution<std::size_t> lc_;
};

struct DctSummary {
  std::size_t draws = 0;
  std::size_t full_contextual = 0;
  std::vector<std::size_t> chunk_histogram;  // index = size - min_chunk
  double full_fraction() const {
    return draws ? static_cast<double>(full_contextual) / draws : 0.0;
  }
  // Pearson statistic of chunked draws against a uniform law.
  double chunk_chi_square() const {
    std::size_t total = 0;
    for (auto c : chunk_histogram) total += c;
    if (total == 0 || chunk_histogram.empty()) return 0.0;
    const double expected = static_cast<double>(total) / chunk_histogram.size();
    double chi = 0.0;
    for (auto c : chunk_histogram)
      chi += (c - expected) * (c - expected) / expected;
    return chi;
  }
};

inline DctSummary summarize(const std::vector<DctDraw>& draws,
                            const DctPolicy& policy) {
  DctSummary s;
  s.draws = draws.size();
  s.chunk_histogram.assign(policy.max_chunk - policy.min_chunk + 1, 0);
  for (const auto& d : draws) {
    if (d.mode == DctMode::full_contextual) {
      ++s.full_contextual;
    } else {
      ++s.chunk_histogram[*d.chunk_size_frames - policy.min_chunk];
    }
  }
  return s;
}

}  // namespace cco
