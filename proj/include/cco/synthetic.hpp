#pragma once

// Deterministic random inputs and encoder stacks for tests and benchmarks.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>

#include "cco/attention.hpp"
#include "cco/tensor.hpp"

namespace cco {

struct SyntheticSpec {
  std::size_t frames = 64;
  std::size_t d_model = 16;
  std::size_t heads = 2;
  std::size_t layers = 2;
  std::size_t ffn_dim = 0;  // 0 -> 4 * d_model
  std::uint64_t seed = 1;

  std::size_t resolved_ffn_dim() const { return ffn_dim ? ffn_dim : 4 * d_model; }
};

// Standard-normal samples. Generated in double and narrowed, so float and
// double draws from one seed agree up to rounding.
template <std::floating_point T>
Matrix<T> random_normal(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                        double scale = 1.0, double shift = 0.0) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix<T> m(rows, cols);
  for (T& v : m.data()) v = static_cast<T>(shift + scale * dist(rng));
  return m;
}

template <std::floating_point T>
Matrix<T> random_frames(std::size_t frames, std::size_t d_model,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_normal<T>(frames, d_model, rng);
}

template <std::floating_point T>
EncoderLayerParams<T> random_layer(std::size_t d_model, std::size_t ffn_dim,
                                   std::size_t heads, std::mt19937_64& rng) {
  const double w = 1.0 / std::sqrt(static_cast<double>(d_model));
  EncoderLayerParams<T> p;
  p.head_count = heads;
  p.w_q = random_normal<T>(d_model, d_model, rng, w);
  p.w_k = random_normal<T>(d_model, d_model, rng, w);
  p.w_v = random_normal<T>(d_model, d_model, rng, w);
  p.w_o = random_normal<T>(d_model, d_model, rng, w);
  p.ffn_w1 = random_normal<T>(d_model, ffn_dim, rng, w);
  p.ffn_w2 = random_normal<T>(ffn_dim, d_model, rng, w);
  p.ln1_gain = random_normal<T>(1, d_model, rng, 0.1, 1.0);
  p.ln1_bias = random_normal<T>(1, d_model, rng, 0.1);
  p.ln2_gain = random_normal<T>(1, d_model, rng, 0.1, 1.0);
  p.ln2_bias = random_normal<T>(1, d_model, rng, 0.1);
  return p;
}

template <std::floating_point T>
EncoderStack<T> random_stack(const SyntheticSpec& spec) {
  // Offset so frames and weights from one seed are not the same stream.
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  EncoderStack<T> stack;
  for (std::size_t n = 0; n < spec.layers; ++n)
    stack.layers.push_back(random_layer<T>(spec.d_model, spec.resolved_ffn_dim(),
                                           spec.heads, rng));
  stack.validate();
  return stack;
}

}  // namespace cco
