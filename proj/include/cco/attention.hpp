#pragma once

// Encoder layers with contextual carry-over: context-slot initialisation,
// masked multi-head self-attention, the offline (whole-utterance) forward pass
// and an analytic backward pass for gradient verification.
//
// Layer recipe:
//   r   = x + mhsa(ln1(x))
//   out = r + w2 * swish(w1 * ln2(r))

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cco/errors.hpp"
#include "cco/mask.hpp"
#include "cco/tensor.hpp"

namespace cco {

struct CcoConfig {
  std::size_t chunk_size = 8;
  std::size_t lc = 1;
  std::size_t n_ctx = 1;
  bool cco_enabled = true;
  Precision precision = Precision::double_;
  std::size_t d_model = 0;
  std::size_t layer_count = 0;
  double ln_eps = 1e-5;

  MaskSpec mask_spec(LayerClass cls) const {
    return MaskSpec{lc, cco_enabled ? n_ctx : 0, cls, cco_enabled};
  }
};

template <std::floating_point T>
struct EncoderLayerParams {
  Matrix<T> w_q, w_k, w_v, w_o;  // d_model x d_model
  Matrix<T> ffn_w1;              // d_model x ffn_dim
  Matrix<T> ffn_w2;              // ffn_dim x d_model
  Matrix<T> ln1_gain, ln1_bias;  // 1 x d_model
  Matrix<T> ln2_gain, ln2_bias;  // 1 x d_model
  std::size_t head_count = 1;

  std::size_t d_model() const { return w_q.rows(); }
  std::size_t ffn_dim() const { return ffn_w1.cols(); }
  std::size_t head_dim() const { return d_model() / head_count; }

  // Stable tensor order; shared by serialisation and gradient checks.
  template <typename Self, typename Fn>
  static void for_each_tensor(Self& self, Fn&& fn) {
    fn("w_q", self.w_q);
    fn("w_k", self.w_k);
    fn("w_v", self.w_v);
    fn("w_o", self.w_o);
    fn("ffn_w1", self.ffn_w1);
    fn("ffn_w2", self.ffn_w2);
    fn("ln1_gain", self.ln1_gain);
    fn("ln1_bias", self.ln1_bias);
    fn("ln2_gain", self.ln2_gain);
    fn("ln2_bias", self.ln2_bias);
  }

  static EncoderLayerParams zeros(std::size_t d_model, std::size_t ffn_dim,
                                  std::size_t heads) {
    EncoderLayerParams p;
    p.w_q = p.w_k = p.w_v = p.w_o = Matrix<T>(d_model, d_model);
    p.ffn_w1 = Matrix<T>(d_model, ffn_dim);
    p.ffn_w2 = Matrix<T>(ffn_dim, d_model);
    p.ln1_gain = p.ln2_gain = Matrix<T>(1, d_model, T(1));
    p.ln1_bias = p.ln2_bias = Matrix<T>(1, d_model);
    p.head_count = heads;
    return p;
  }

  void validate() const {
    const std::size_t d = d_model();
    if (head_count == 0 || d % head_count != 0)
      throw ArgumentError("d_model " + std::to_string(d) +
                          " not divisible by head count " +
                          std::to_string(head_count));
    auto square = [d](const Matrix<T>& m) {
      return m.rows() == d && m.cols() == d;
    };
    if (!square(w_q) || !square(w_k) || !square(w_v) || !square(w_o))
      throw ShapeError("attention projections must be d_model x d_model");
    if (ffn_w1.rows() != d || ffn_w2.cols() != d ||
        ffn_w2.rows() != ffn_w1.cols())
      throw ShapeError("feed-forward weights do not chain");
    for (const auto* v : {&ln1_gain, &ln1_bias, &ln2_gain, &ln2_bias})
      if (v->rows() != 1 || v->cols() != d)
        throw ShapeError("layer-norm vectors must be 1 x d_model");
    for_each_tensor(*this, [](const char* name, const Matrix<T>& m) {
      if (!m.all_finite())
        throw NumericError(std::string("non-finite weights in ") + name);
    });
  }
};

template <std::floating_point T>
struct EncoderStack {
  std::vector<EncoderLayerParams<T>> layers;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t d_model() const {
    return layers.empty() ? 0 : layers.front().d_model();
  }
  std::size_t head_count() const {
    return layers.empty() ? 0 : layers.front().head_count;
  }
  std::size_t ffn_dim() const {
    return layers.empty() ? 0 : layers.front().ffn_dim();
  }

  void validate() const {
    if (layers.empty()) throw ArgumentError("encoder stack has no layers");
    for (const auto& l : layers) {
      l.validate();
      if (l.d_model() != d_model() || l.head_count != head_count() ||
          l.ffn_dim() != ffn_dim())
        throw ShapeError("encoder layers disagree on dimensions");
    }
  }
};

// Frame rows with one context slot after each chunk.
template <std::floating_point T>
struct ExtendedActivation {
  Matrix<T> values;
  ExtendedLayout layout;
  std::size_t layer_index = 0;

  Matrix<T> frame_rows() const {
    Matrix<T> out;
    for (std::size_t b = 0; b < layout.layout.chunk_count; ++b)
      out.append_rows(values.row_block(layout.chunk_begin(b),
                                       layout.layout.chunk_spans[b].length));
    return out;
  }
  std::span<const T> context_row(std::size_t b) const {
    return values.row(layout.slot_index[b]);
  }
};

// Each context slot starts as the mean of its chunk's frames.
template <std::floating_point T>
ExtendedActivation<T> init_context_slots(const Matrix<T>& frames,
                                         const ChunkLayout& layout) {
  if (frames.rows() != layout.total_frames)
    throw ShapeError("init_context_slots: frame count != layout");
  ExtendedActivation<T> out;
  out.layout = make_extended_layout(layout);
  out.values = Matrix<T>(out.layout.extended_len, frames.cols());
  for (std::size_t b = 0; b < layout.chunk_count; ++b) {
    const auto [start, len] = layout.chunk_spans[b];
    auto slot = out.values.row(out.layout.slot_index[b]);
    for (std::size_t i = 0; i < len; ++i) {
      auto src = frames.row(start + i);
      std::copy(src.begin(), src.end(),
                out.values.row(out.layout.chunk_begin(b) + i).begin());
      for (std::size_t c = 0; c < src.size(); ++c) slot[c] += src[c];
    }
    for (T& v : slot) v /= static_cast<T>(len);
  }
  return out;
}

namespace detail {

template <std::floating_point T>
T swish(T x) {
  return x / (T(1) + std::exp(-x));
}

template <std::floating_point T>
T swish_grad(T x) {
  const T s = T(1) / (T(1) + std::exp(-x));
  return s + x * s * (T(1) - s);
}

template <std::floating_point T>
Matrix<T> apply_swish(const Matrix<T>& x) {
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = swish(x.data()[i]);
  return out;
}

template <std::floating_point T>
Matrix<T> scaled(Matrix<T> m, T factor) {
  for (T& v : m.data()) v *= factor;
  return m;
}

}  // namespace detail

// Scaled dot-product attention for every head. `mask` may be null, meaning
// every key is visible (the streaming path passes pre-gathered keys).
template <std::floating_point T>
Matrix<T> multi_head_attend(const Matrix<T>& q, const Matrix<T>& k,
                            const Matrix<T>& v, std::size_t heads,
                            const BoolMatrix* mask,
                            std::vector<Matrix<T>>* probs_out = nullptr) {
  const std::size_t dh = q.cols() / heads;
  const T inv_scale = T(1) / std::sqrt(static_cast<T>(dh));
  Matrix<T> out(q.rows(), v.cols());
  for (std::size_t h = 0; h < heads; ++h) {
    Matrix<T> s = detail::scaled(
        matmul_transposed(q.col_block(h * dh, dh), k.col_block(h * dh, dh)),
        inv_scale);
    Matrix<T> p = mask ? masked_row_softmax(s, *mask) : row_softmax(s);
    out.set_col_block(h * dh, matmul(p, v.col_block(h * dh, dh)));
    if (probs_out) probs_out->push_back(std::move(p));
  }
  return out;
}

// Attention sublayer only: projections, masked softmax per head, output
// projection. Normalisation and residual belong to encoder_layer_forward.
template <std::floating_point T>
Matrix<T> mhsa_forward(const Matrix<T>& x, const EncoderLayerParams<T>& p,
                       const BoolMatrix& mask) {
  if (mask.rows() != x.rows() || mask.cols() != x.rows())
    throw ShapeError("mhsa_forward: mask is " + std::to_string(mask.rows()) +
                     "x" + std::to_string(mask.cols()) + " for " +
                     std::to_string(x.rows()) + " rows");
  const Matrix<T> o = multi_head_attend(matmul(x, p.w_q), matmul(x, p.w_k),
                                        matmul(x, p.w_v), p.head_count, &mask);
  return matmul(o, p.w_o);
}

template <std::floating_point T>
ExtendedActivation<T> mhsa_forward(const ExtendedActivation<T>& x,
                                   const EncoderLayerParams<T>& p,
                                   const BoolMatrix& mask) {
  return {mhsa_forward(x.values, p, mask), x.layout, x.layer_index + 1};
}

// Feed-forward half of the layer: r + w2 * swish(w1 * ln2(r)).
template <std::floating_point T>
Matrix<T> feed_forward_block(const Matrix<T>& r, const EncoderLayerParams<T>& p,
                             T eps) {
  Matrix<T> out = matmul(
      detail::apply_swish(matmul(
          layer_norm(r, p.ln2_gain.row(0), p.ln2_bias.row(0), eps), p.ffn_w1)),
      p.ffn_w2);
  out += r;
  return out;
}

template <std::floating_point T>
Matrix<T> encoder_layer_forward(const Matrix<T>& x,
                                const EncoderLayerParams<T>& p,
                                const BoolMatrix& mask, T eps = T(1e-5)) {
  Matrix<T> r = mhsa_forward(
      layer_norm(x, p.ln1_gain.row(0), p.ln1_bias.row(0), eps), p, mask);
  r += x;
  return feed_forward_block(r, p, eps);
}

namespace detail {

template <std::floating_point T>
void check_config(const Matrix<T>& frames, const EncoderStack<T>& stack,
                  const CcoConfig& cfg) {
  stack.validate();
  if (cfg.precision != precision_of<T>())
    throw ArgumentError("config precision does not match element type");
  if (cfg.d_model != stack.d_model())
    throw ArgumentError("config d_model " + std::to_string(cfg.d_model) +
                        " != stack d_model " +
                        std::to_string(stack.d_model()));
  if (cfg.layer_count != stack.layer_count())
    throw ArgumentError("config layer count != stack layer count");
  if (cfg.chunk_size == 0) throw ArgumentError("chunk size must be >= 1");
  if (!cfg.cco_enabled && cfg.n_ctx != 0)
    throw ArgumentError("n_ctx must be 0 without carry-over");
  if (frames.cols() != stack.d_model())
    throw ShapeError("frames have " + std::to_string(frames.cols()) +
                     " columns, model expects " +
                     std::to_string(stack.d_model()));
}

}  // namespace detail

// Whole-utterance forward pass over the extended layout; returns the final
// layer's context slots as well as frame rows.
template <std::floating_point T>
ExtendedActivation<T> encoder_forward_offline_extended(
    const Matrix<T>& frames, const EncoderStack<T>& stack,
    const CcoConfig& cfg) {
  detail::check_config(frames, stack, cfg);
  if (!cfg.cco_enabled)
    throw ArgumentError("extended activations require carry-over");
  const T eps = static_cast<T>(cfg.ln_eps);
  const ChunkLayout layout = make_layout(frames.rows(), cfg.chunk_size);
  ExtendedActivation<T> act = init_context_slots(frames, layout);
  const BoolMatrix first = build_cco_mask(act.layout,
                                          cfg.mask_spec(LayerClass::first));
  const BoolMatrix later = build_cco_mask(act.layout,
                                          cfg.mask_spec(LayerClass::later));
  for (std::size_t n = 0; n < stack.layer_count(); ++n) {
    act.values = encoder_layer_forward(act.values, stack.layers[n],
                                       n == 0 ? first : later, eps);
    act.layer_index = n + 1;
  }
  return act;
}

// T x d_model output of the last layer, context slots stripped.
template <std::floating_point T>
Matrix<T> encoder_forward_offline(const Matrix<T>& frames,
                                  const EncoderStack<T>& stack,
                                  const CcoConfig& cfg) {
  if (cfg.cco_enabled)
    return encoder_forward_offline_extended(frames, stack, cfg).frame_rows();
  detail::check_config(frames, stack, cfg);
  const T eps = static_cast<T>(cfg.ln_eps);
  const ChunkLayout layout = make_layout(frames.rows(), cfg.chunk_size);
  const BoolMatrix mask = build_cco_mask(make_extended_layout(layout),
                                         cfg.mask_spec(LayerClass::later));
  Matrix<T> x = frames;
  for (const auto& layer : stack.layers)
    x = encoder_layer_forward(x, layer, mask, eps);
  return x;
}

// ---------------------------------------------------------------------------
// Backward pass.

// Intermediates of one encoder_layer_forward call.
template <std::floating_point T>
struct LayerTape {
  Matrix<T> x, a, q, k, v, o, r, bn, h1, g, out;
  std::vector<Matrix<T>> probs;  // per head
  std::vector<T> ln1_inv_std, ln2_inv_std;
  BoolMatrix mask;
  T eps{};
};

template <std::floating_point T>
struct LayerGradients {
  Matrix<T> grad_x;
  EncoderLayerParams<T> grad_params;
};

namespace detail {

template <std::floating_point T>
Matrix<T> layer_norm_taped(const Matrix<T>& x, const Matrix<T>& gain,
                           const Matrix<T>& bias, T eps,
                           std::vector<T>& inv_std) {
  Matrix<T> y = layer_norm(x, gain.row(0), bias.row(0), eps);
  inv_std.resize(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    T mean = T(0);
    for (T v : xr) mean += v;
    mean /= static_cast<T>(xr.size());
    T var = T(0);
    for (T v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<T>(xr.size());
    inv_std[r] = T(1) / std::sqrt(var + eps);
  }
  return y;
}

// Accumulates d(gain), d(bias) and returns dx.
template <std::floating_point T>
Matrix<T> layer_norm_backward(const Matrix<T>& x, const Matrix<T>& gain,
                              const std::vector<T>& inv_std,
                              const Matrix<T>& dy, Matrix<T>& dgain,
                              Matrix<T>& dbias) {
  const std::size_t n = x.cols();
  Matrix<T> dx(x.rows(), n);
  std::vector<T> xhat(n), dxhat(n);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    T mean = T(0);
    for (T v : xr) mean += v;
    mean /= static_cast<T>(n);
    T mean_dxhat = T(0), mean_dxhat_xhat = T(0);
    for (std::size_t c = 0; c < n; ++c) {
      xhat[c] = (xr[c] - mean) * inv_std[r];
      dxhat[c] = dy(r, c) * gain(0, c);
      dgain(0, c) += dy(r, c) * xhat[c];
      dbias(0, c) += dy(r, c);
      mean_dxhat += dxhat[c];
      mean_dxhat_xhat += dxhat[c] * xhat[c];
    }
    mean_dxhat /= static_cast<T>(n);
    mean_dxhat_xhat /= static_cast<T>(n);
    for (std::size_t c = 0; c < n; ++c)
      dx(r, c) = inv_std[r] * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
  }
  return dx;
}

}  // namespace detail

template <std::floating_point T>
LayerTape<T> layer_forward_taped(const Matrix<T>& x,
                                 const EncoderLayerParams<T>& p,
                                 const BoolMatrix& mask, T eps = T(1e-5)) {
  p.validate();
  if (mask.rows() != x.rows() || mask.cols() != x.rows())
    throw ShapeError("layer_forward_taped: mask/input mismatch");
  LayerTape<T> t;
  t.x = x;
  t.mask = mask;
  t.eps = eps;
  t.a = detail::layer_norm_taped(x, p.ln1_gain, p.ln1_bias, eps, t.ln1_inv_std);
  t.q = matmul(t.a, p.w_q);
  t.k = matmul(t.a, p.w_k);
  t.v = matmul(t.a, p.w_v);
  t.o = multi_head_attend(t.q, t.k, t.v, p.head_count, &mask, &t.probs);
  t.r = matmul(t.o, p.w_o);
  t.r += x;
  t.bn = detail::layer_norm_taped(t.r, p.ln2_gain, p.ln2_bias, eps,
                                  t.ln2_inv_std);
  t.h1 = matmul(t.bn, p.ffn_w1);
  t.g = detail::apply_swish(t.h1);
  t.out = matmul(t.g, p.ffn_w2);
  t.out += t.r;
  return t;
}

// Exact reverse-mode gradients of sum(upstream .* layer_output) under the
// tape's fixed mask.
template <std::floating_point T>
LayerGradients<T> layer_backward(const LayerTape<T>& t,
                                 const EncoderLayerParams<T>& p,
                                 const Matrix<T>& upstream) {
  if (upstream.rows() != t.out.rows() || upstream.cols() != t.out.cols())
    throw ShapeError("layer_backward: upstream gradient shape");
  LayerGradients<T> g;
  g.grad_params = EncoderLayerParams<T>::zeros(p.d_model(), p.ffn_dim(),
                                               p.head_count);
  auto& gp = g.grad_params;
  for (auto* v : {&gp.ln1_gain, &gp.ln2_gain}) *v = Matrix<T>(1, p.d_model());

  // Feed-forward branch.
  const Matrix<T>& d_out = upstream;
  gp.ffn_w2 = matmul(t.g.transpose(), d_out);
  Matrix<T> d_h1 = matmul(d_out, p.ffn_w2.transpose());
  for (std::size_t i = 0; i < d_h1.size(); ++i)
    d_h1.data()[i] *= detail::swish_grad(t.h1.data()[i]);
  gp.ffn_w1 = matmul(t.bn.transpose(), d_h1);
  const Matrix<T> d_bn = matmul(d_h1, p.ffn_w1.transpose());
  Matrix<T> d_r = detail::layer_norm_backward(t.r, p.ln2_gain, t.ln2_inv_std,
                                              d_bn, gp.ln2_gain, gp.ln2_bias);
  d_r += d_out;

  // Attention branch.
  gp.w_o = matmul(t.o.transpose(), d_r);
  const Matrix<T> d_o = matmul(d_r, p.w_o.transpose());
  const std::size_t heads = p.head_count, dh = p.head_dim();
  const T inv_scale = T(1) / std::sqrt(static_cast<T>(dh));
  Matrix<T> d_q(t.q.rows(), t.q.cols()), d_k(t.k.rows(), t.k.cols()),
      d_v(t.v.rows(), t.v.cols());
  for (std::size_t h = 0; h < heads; ++h) {
    const Matrix<T>& prob = t.probs[h];
    const Matrix<T> d_oh = d_o.col_block(h * dh, dh);
    const Matrix<T> vh = t.v.col_block(h * dh, dh);
    const Matrix<T> d_p = matmul_transposed(d_oh, vh);
    d_v.set_col_block(h * dh, matmul(prob.transpose(), d_oh));
    // Softmax Jacobian; blocked entries have prob == 0 and stay 0.
    Matrix<T> d_s(prob.rows(), prob.cols());
    for (std::size_t i = 0; i < prob.rows(); ++i) {
      T dot = T(0);
      for (std::size_t j = 0; j < prob.cols(); ++j) dot += prob(i, j) * d_p(i, j);
      for (std::size_t j = 0; j < prob.cols(); ++j)
        d_s(i, j) = prob(i, j) * (d_p(i, j) - dot) * inv_scale;
    }
    d_q.set_col_block(h * dh, matmul(d_s, t.k.col_block(h * dh, dh)));
    d_k.set_col_block(h * dh,
                      matmul(d_s.transpose(), t.q.col_block(h * dh, dh)));
  }
  const Matrix<T> a_t = t.a.transpose();
  gp.w_q = matmul(a_t, d_q);
  gp.w_k = matmul(a_t, d_k);
  gp.w_v = matmul(a_t, d_v);
  Matrix<T> d_a = matmul(d_q, p.w_q.transpose());
  d_a += matmul(d_k, p.w_k.transpose());
  d_a += matmul(d_v, p.w_v.transpose());
  g.grad_x = detail::layer_norm_backward(t.x, p.ln1_gain, t.ln1_inv_std, d_a,
                                         gp.ln1_gain, gp.ln1_bias);
  g.grad_x += d_r;
  return g;
}

template <std::floating_point T>
LayerGradients<T> layer_backward(const Matrix<T>& x,
                                 const EncoderLayerParams<T>& p,
                                 const BoolMatrix& mask,
                                 const Matrix<T>& upstream, T eps = T(1e-5)) {
  return layer_backward(layer_forward_taped(x, p, mask, eps), p, upstream);
}

}  // namespace cco
