#pragma once

// Dense row-major matrices and the handful of kernels the encoder needs.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cco/errors.hpp"

namespace cco {

enum class Precision { single, double_ };

template <std::floating_point T>
constexpr Precision precision_of() {
  static_assert(std::same_as<T, float> || std::same_as<T, double>,
                "only float and double are supported");
  return std::same_as<T, float> ? Precision::single : Precision::double_;
}

inline std::string_view to_string(Precision p) {
  return p == Precision::single ? "single" : "double";
}

inline Precision parse_precision(std::string_view s) {
  if (s == "single" || s == "float" || s == "f32") return Precision::single;
  if (s == "double" || s == "f64") return Precision::double_;
  throw ArgumentError("unknown precision '" + std::string(s) + "'");
}

template <std::floating_point T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " != " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<T>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
      if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  // Rows [first, first + count).
  Matrix row_block(std::size_t first, std::size_t count) const {
    if (first + count > rows_) throw ShapeError("row block out of range");
    Matrix out(count, cols_);
    std::copy_n(data_.begin() + first * cols_, count * cols_,
                out.data_.begin());
    return out;
  }

  // Columns [first, first + count).
  Matrix col_block(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw ShapeError("column block out of range");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
      std::copy_n(data_.begin() + r * cols_ + first, count,
                  out.data_.begin() + r * count);
    return out;
  }

  void set_col_block(std::size_t first, const Matrix& src) {
    if (src.rows_ != rows_ || first + src.cols_ > cols_)
      throw ShapeError("column block assignment out of range");
    for (std::size_t r = 0; r < rows_; ++r)
      std::copy_n(src.data_.begin() + r * src.cols_, src.cols_,
                  data_.begin() + r * cols_ + first);
  }

  // Capacity hint for a matrix about to grow by append_rows.
  void reserve_rows(std::size_t rows, std::size_t cols) {
    data_.reserve(rows * cols);
  }

  void append_row(std::span<const T> values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) throw ShapeError("append_row width mismatch");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
  }

  void append_rows(const Matrix& other) {
    if (other.rows_ == 0) return;
    if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
    if (other.cols_ != cols_) throw ShapeError("append_rows width mismatch");
    data_.insert(data_.end(), other.data_.begin(), other.data_.end());
    rows_ += other.rows_;
  }

  Matrix transpose() const {
    Matrix out(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
    return out;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](T v) { return std::isfinite(v); });
  }

  template <std::floating_point U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data().begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  Matrix& operator+=(const Matrix& o) {
    if (o.rows_ != rows_ || o.cols_ != cols_)
      throw ShapeError("elementwise add shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool operator()(std::size_t r, std::size_t c) const {
    return bits_[r * cols_ + c] != 0;
  }
  void set(std::size_t r, std::size_t c, bool v = true) {
    bits_[r * cols_ + c] = v ? 1 : 0;
  }

  std::size_t row_popcount(std::size_t r) const {
    return static_cast<std::size_t>(
        std::count(bits_.begin() + r * cols_, bits_.begin() + (r + 1) * cols_,
                   std::uint8_t{1}));
  }

  bool all() const {
    return std::all_of(bits_.begin(), bits_.end(),
                       [](std::uint8_t b) { return b != 0; });
  }

  friend bool operator==(const BoolMatrix&, const BoolMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

namespace detail {

template <std::floating_point T>
void require_finite(const Matrix<T>& m, const char* op) {
  if (!m.all_finite())
    throw NumericError(std::string(op) + " produced a non-finite value");
}

}  // namespace detail

template <std::floating_point T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " * " +
                     std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix<T> out(a.rows(), b.cols());
  const std::size_t n = a.cols(), m = b.cols();
  // i-k-j order; each output element still accumulates over k in order.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto o = out.row(i);
    auto ar = a.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      const T aik = ar[k];
      auto br = b.row(k);
      for (std::size_t j = 0; j < m; ++j) o[j] += aik * br[j];
    }
  }
  detail::require_finite(out, "matmul");
  return out;
}

// a * b^T without materialising the transpose.
template <std::floating_point T>
Matrix<T> matmul_transposed(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_transposed: inner dims");
  Matrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      auto br = b.row(j);
      T acc = T(0);
      for (std::size_t k = 0; k < ar.size(); ++k) acc += ar[k] * br[k];
      out(i, j) = acc;
    }
  }
  detail::require_finite(out, "matmul_transposed");
  return out;
}

// Softmax over the allowed entries of each row. Blocked entries come out as
// exactly +0 regardless of the score stored there.
template <std::floating_point T>
Matrix<T> masked_row_softmax(const Matrix<T>& scores, const BoolMatrix& mask) {
  if (scores.rows() != mask.rows() || scores.cols() != mask.cols())
    throw ShapeError("masked_row_softmax: scores and mask differ in shape");
  Matrix<T> out(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto s = scores.row(r);
    auto o = out.row(r);
    bool any = false;
    T mx = T(0);
    for (std::size_t c = 0; c < s.size(); ++c) {
      if (!mask(r, c)) continue;
      mx = any ? std::max(mx, s[c]) : s[c];
      any = true;
    }
    if (!any)
      throw ContractError("masked_row_softmax: row " + std::to_string(r) +
                          " has no allowed entry");
    T sum = T(0);
    for (std::size_t c = 0; c < s.size(); ++c) {
      if (!mask(r, c)) continue;
      o[c] = std::exp(s[c] - mx);
      sum += o[c];
    }
    for (std::size_t c = 0; c < s.size(); ++c)
      if (mask(r, c)) o[c] /= sum;
  }
  detail::require_finite(out, "masked_row_softmax");
  return out;
}

// Plain row softmax with the same arithmetic as masked_row_softmax over an
// all-true mask.
template <std::floating_point T>
Matrix<T> row_softmax(const Matrix<T>& scores) {
  Matrix<T> out(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    auto s = scores.row(r);
    if (s.empty()) throw ContractError("row_softmax: empty row");
    auto o = out.row(r);
    T mx = s[0];
    for (T v : s) mx = std::max(mx, v);
    T sum = T(0);
    for (std::size_t c = 0; c < s.size(); ++c) {
      o[c] = std::exp(s[c] - mx);
      sum += o[c];
    }
    for (T& v : o) v /= sum;
  }
  detail::require_finite(out, "row_softmax");
  return out;
}

template <std::floating_point T>
Matrix<T> layer_norm(const Matrix<T>& x, std::span<const T> gain,
                     std::span<const T> bias, T eps = T(1e-5)) {
  if (gain.size() != x.cols() || bias.size() != x.cols())
    throw ShapeError("layer_norm: gain/bias length != cols");
  if (!(eps > T(0))) throw ArgumentError("layer_norm: eps must be positive");
  Matrix<T> out(x.rows(), x.cols());
  const T n = static_cast<T>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row(r);
    T mean = T(0);
    for (T v : xr) mean += v;
    mean /= n;
    T var = T(0);
    for (T v : xr) var += (v - mean) * (v - mean);
    var /= n;
    const T inv = T(1) / std::sqrt(var + eps);
    auto o = out.row(r);
    for (std::size_t c = 0; c < xr.size(); ++c)
      o[c] = (xr[c] - mean) * inv * gain[c] + bias[c];
  }
  detail::require_finite(out, "layer_norm");
  return out;
}

template <std::floating_point T>
T max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("max_abs_diff: shape mismatch");
  T m = T(0);
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace cco
