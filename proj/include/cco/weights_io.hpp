#pragma once

// On-disk formats for encoder weights and frame sequences.
//
// A file is one line of JSON (the descriptor) terminated by '\n', followed by
// the payload: little-endian scalars of every tensor in manifest order,
// row-major. The descriptor records the payload length and an FNV-1a 64-bit
// checksum of the payload bytes.
//
//   {"format":"cco-weights","version":1,"precision":"double","d_model":16,
//    "heads":2,"layers":2,"ffn_dim":64,"ln_eps":1e-05,
//    "tensors":[{"name":"layers.0.w_q","rows":16,"cols":16},...],
//    "payload_bytes":...,"checksum":"fnv1a64:..."}\n<payload>

#include <algorithm>
#include <array>
#include <bit>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cco/attention.hpp"
#include "cco/errors.hpp"
#include "cco/tensor.hpp"

namespace cco {

inline constexpr int kFormatVersion = 1;

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string checksum_string(std::string_view payload) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(payload)));
  return buf;
}

namespace detail {

template <typename U>
U byteswap_if_big(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(U)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<U>(bytes);
  }
  return v;
}

template <std::floating_point S, std::floating_point T>
void append_scalars(std::string& out, const Matrix<T>& m) {
  using Bits = std::conditional_t<sizeof(S) == 4, std::uint32_t, std::uint64_t>;
  for (T v : m.data()) {
    const Bits bits = byteswap_if_big(std::bit_cast<Bits>(static_cast<S>(v)));
    char raw[sizeof(Bits)];
    std::memcpy(raw, &bits, sizeof(Bits));
    out.append(raw, sizeof(Bits));
  }
}

template <std::floating_point S, std::floating_point T>
Matrix<T> read_scalars(std::string_view bytes, std::size_t rows,
                       std::size_t cols) {
  using Bits = std::conditional_t<sizeof(S) == 4, std::uint32_t, std::uint64_t>;
  Matrix<T> m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) {
    Bits bits;
    std::memcpy(&bits, bytes.data() + i * sizeof(Bits), sizeof(Bits));
    m.data()[i] = static_cast<T>(std::bit_cast<S>(byteswap_if_big(bits)));
  }
  return m;
}

inline std::size_t scalar_bytes(Precision p) {
  return p == Precision::single ? 4 : 8;
}

}  // namespace detail

// A parsed container: descriptor plus named tensors.
template <std::floating_point T>
struct TensorFile {
  nlohmann::json header;
  std::vector<std::pair<std::string, Matrix<T>>> tensors;

  const Matrix<T>& get(std::string_view name) const {
    for (const auto& [n, m] : tensors)
      if (n == name) return m;
    throw ArgumentError("no tensor named '" + std::string(name) + "'");
  }
};

// `header` is completed with the manifest, payload length and checksum.
template <std::floating_point T>
std::string encode_tensor_file(
    nlohmann::json header,
    const std::vector<std::pair<std::string, const Matrix<T>*>>& tensors,
    Precision precision) {
  std::string payload;
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [name, m] : tensors) {
    manifest.push_back({{"name", name}, {"rows", m->rows()}, {"cols", m->cols()}});
    if (precision == Precision::single)
      detail::append_scalars<float>(payload, *m);
    else
      detail::append_scalars<double>(payload, *m);
  }
  header["version"] = kFormatVersion;
  header["precision"] = std::string(to_string(precision));
  header["tensors"] = std::move(manifest);
  header["payload_bytes"] = payload.size();
  header["checksum"] = checksum_string(payload);
  return header.dump() + "\n" + payload;
}

template <std::floating_point T>
TensorFile<T> decode_tensor_file(std::string_view bytes,
                                 std::string_view expected_format) {
  const std::size_t nl = bytes.find('\n');
  if (nl == std::string_view::npos)
    throw ParseError("descriptor line is not newline-terminated", bytes.size());
  TensorFile<T> file;
  try {
    file.header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("descriptor is not valid JSON: ") + e.what(),
                     e.byte > 0 ? e.byte - 1 : 0);
  }
  const auto& h = file.header;
  auto field = [&](const char* key) -> const nlohmann::json& {
    if (!h.is_object() || !h.contains(key))
      throw ParseError(std::string("descriptor lacks '") + key + "'", 0);
    return h.at(key);
  };
  try {
    if (field("format").template get<std::string>() != expected_format)
      throw ParseError("expected format '" + std::string(expected_format) +
                           "', found '" + h.at("format").template get<std::string>() + "'",
                       0);
    if (field("version").template get<int>() != kFormatVersion)
      throw ParseError("unsupported format version " +
                           std::to_string(h.at("version").template get<int>()),
                       0);
    const Precision prec = parse_precision(field("precision").template get<std::string>());
    const std::size_t scalar = detail::scalar_bytes(prec);
    const std::size_t payload_start = nl + 1;
    const std::string_view payload = bytes.substr(payload_start);

    std::size_t pos = 0;
    for (const auto& t : field("tensors")) {
      const auto name = t.at("name").template get<std::string>();
      const auto rows = t.at("rows").template get<std::size_t>();
      const auto cols = t.at("cols").template get<std::size_t>();
      const std::size_t need = rows * cols * scalar;
      if (pos + need > payload.size())
        throw ParseError("payload truncated: tensor '" + name + "' needs bytes [" +
                             std::to_string(payload_start + pos) + ", " +
                             std::to_string(payload_start + pos + need) +
                             ") but the file ends",
                         bytes.size());
      const auto blob = payload.substr(pos, need);
      file.tensors.emplace_back(
          name, prec == Precision::single
                    ? detail::read_scalars<float, T>(blob, rows, cols)
                    : detail::read_scalars<double, T>(blob, rows, cols));
      pos += need;
    }
    if (pos != payload.size())
      throw ParseError(std::to_string(payload.size() - pos) +
                           " unexpected trailing payload bytes",
                       payload_start + pos);
    if (field("payload_bytes").template get<std::size_t>() != payload.size())
      throw ParseError("payload_bytes disagrees with the manifest", payload_start);
    if (field("checksum").template get<std::string>() != checksum_string(payload))
      throw ParseError("payload checksum mismatch", payload_start);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed descriptor: ") + e.what(), 0);
  } catch (const ArgumentError& e) {
    throw ParseError(std::string("malformed descriptor: ") + e.what(), 0);
  }
  return file;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArgumentError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArgumentError("short write to '" + path + "'");
}

// ---------------------------------------------------------------------------
// Weights.

template <std::floating_point T>
std::string encode_weights(const EncoderStack<T>& stack, double ln_eps = 1e-5,
                           Precision precision = precision_of<T>()) {
  stack.validate();
  nlohmann::json header = {{"format", "cco-weights"},
                           {"d_model", stack.d_model()},
                           {"heads", stack.head_count()},
                           {"layers", stack.layer_count()},
                           {"ffn_dim", stack.ffn_dim()},
                           {"ln_eps", ln_eps}};
  std::vector<std::pair<std::string, const Matrix<T>*>> tensors;
  for (std::size_t n = 0; n < stack.layer_count(); ++n)
    EncoderLayerParams<T>::for_each_tensor(
        stack.layers[n], [&](const char* name, const Matrix<T>& m) {
          tensors.emplace_back("layers." + std::to_string(n) + "." + name, &m);
        });
  return encode_tensor_file<T>(std::move(header), tensors, precision);
}

template <std::floating_point T>
struct LoadedWeights {
  EncoderStack<T> stack;
  double ln_eps = 1e-5;
  Precision stored_precision = Precision::double_;
};

template <std::floating_point T>
LoadedWeights<T> decode_weights(std::string_view bytes) {
  const TensorFile<T> file = decode_tensor_file<T>(bytes, "cco-weights");
  const auto& h = file.header;
  LoadedWeights<T> out;
  std::size_t d = 0, heads = 0, layers = 0, ffn = 0;
  try {
    d = h.at("d_model").template get<std::size_t>();
    heads = h.at("heads").template get<std::size_t>();
    layers = h.at("layers").template get<std::size_t>();
    ffn = h.at("ffn_dim").template get<std::size_t>();
    out.ln_eps = h.value("ln_eps", 1e-5);
    out.stored_precision = parse_precision(h.at("precision").template get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed weights descriptor: ") + e.what(), 0);
  }
  std::size_t next = 0;
  for (std::size_t n = 0; n < layers; ++n) {
    auto p = EncoderLayerParams<T>::zeros(d, ffn, heads);
    EncoderLayerParams<T>::for_each_tensor(p, [&](const char* name, Matrix<T>& m) {
      const std::string want = "layers." + std::to_string(n) + "." + name;
      if (next >= file.tensors.size())
        throw ParseError("manifest is missing tensor '" + want + "'", 0);
      const auto& [got_name, got] = file.tensors[next++];
      if (got_name != want)
        throw ParseError("manifest lists '" + got_name + "' where '" + want +
                             "' was expected",
                         0);
      if (got.rows() != m.rows() || got.cols() != m.cols())
        throw ParseError("tensor '" + want + "' has shape " +
                             std::to_string(got.rows()) + "x" +
                             std::to_string(got.cols()),
                         0);
      m = got;
    });
    out.stack.layers.push_back(std::move(p));
  }
  if (next != file.tensors.size())
    throw ParseError("manifest has unexpected extra tensors", 0);
  out.stack.validate();
  return out;
}

template <std::floating_point T>
void save_weights(const std::string& path, const EncoderStack<T>& stack,
                  double ln_eps = 1e-5, Precision precision = precision_of<T>()) {
  write_file_bytes(path, encode_weights(stack, ln_eps, precision));
}

template <std::floating_point T>
LoadedWeights<T> load_weights(const std::string& path) {
  return decode_weights<T>(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// Frame sequences.

template <std::floating_point T>
std::string encode_frames(const Matrix<T>& frames,
                          Precision precision = precision_of<T>()) {
  nlohmann::json header = {{"format", "cco-frames"},
                           {"frame_ms", 40},
                           {"rows", frames.rows()},
                           {"cols", frames.cols()}};
  return encode_tensor_file<T>(std::move(header), {{"frames", &frames}},
                               precision);
}

template <std::floating_point T>
Matrix<T> decode_frames(std::string_view bytes) {
  const TensorFile<T> file = decode_tensor_file<T>(bytes, "cco-frames");
  if (file.tensors.size() != 1 || file.tensors[0].first != "frames")
    throw ParseError("frames file must hold exactly one tensor named 'frames'", 0);
  return file.tensors[0].second;
}

template <std::floating_point T>
void save_frames(const std::string& path, const Matrix<T>& frames,
                 Precision precision = precision_of<T>()) {
  write_file_bytes(path, encode_frames(frames, precision));
}

template <std::floating_point T>
Matrix<T> load_frames(const std::string& path) {
  return decode_frames<T>(read_file_bytes(path));
}

}  // namespace cco
