#include <filesystem>

#include <gtest/gtest.h>

#include "cco/gradcheck.hpp"
#include "cco/synthetic.hpp"
#include "cco/weights_io.hpp"

namespace cco {
namespace {

namespace fs = std::filesystem;

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("cco_test_" + name);
}

template <typename T>
void expect_same_stack(const EncoderStack<T>& a, const EncoderStack<T>& b) {
  ASSERT_EQ(a.layer_count(), b.layer_count());
  for (std::size_t n = 0; n < a.layer_count(); ++n) {
    EXPECT_EQ(a.layers[n].head_count, b.layers[n].head_count);
    std::vector<const Matrix<T>*> lhs;
    EncoderLayerParams<T>::for_each_tensor(
        a.layers[n], [&](const char*, const Matrix<T>& m) { lhs.push_back(&m); });
    std::size_t i = 0;
    EncoderLayerParams<T>::for_each_tensor(
        b.layers[n], [&](const char* name, const Matrix<T>& m) {
          EXPECT_EQ(*lhs[i++], m) << name;
        });
  }
}

TEST(Checksum, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(checksum_string("a"), "fnv1a64:af63dc4c8601ec8c");
}

TEST(WeightsFile, RoundTripIsBitwise) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    SyntheticSpec s;
    s.seed = seed;
    s.d_model = 4 * (1 + seed % 3);
    s.heads = 2;
    s.layers = 1 + seed % 3;
    s.ffn_dim = seed % 2 ? 0 : 5;
    const auto sd = random_stack<double>(s);
    const auto got = decode_weights<double>(encode_weights(sd, 1e-6));
    expect_same_stack(sd, got.stack);
    EXPECT_EQ(got.ln_eps, 1e-6);
    EXPECT_EQ(got.stored_precision, Precision::double_);

    const auto sf = random_stack<float>(s);
    expect_same_stack(sf, decode_weights<float>(encode_weights(sf)).stack);
  }
}

TEST(WeightsFile, OnDiskRoundTrip) {
  SyntheticSpec s;
  const auto st = random_stack<double>(s);
  const auto path = temp_path("weights.bin").string();
  save_weights(path, st);
  expect_same_stack(st, load_weights<double>(path).stack);
  fs::remove(path);
}

TEST(WeightsFile, SinglePrecisionStorageWidensExactly) {
  SyntheticSpec s;
  const auto sf = random_stack<float>(s);
  const auto wide = decode_weights<double>(encode_weights(sf));
  EXPECT_EQ(wide.stored_precision, Precision::single);
  EXPECT_EQ(wide.stack.layers[0].w_q.cast<float>(), sf.layers[0].w_q);
}

TEST(WeightsFile, HeaderIsOneJsonLine) {
  SyntheticSpec s;
  s.layers = 1;
  const auto bytes = encode_weights(random_stack<double>(s));
  const auto nl = bytes.find('\n');
  const auto h = nlohmann::json::parse(bytes.substr(0, nl));
  EXPECT_EQ(h.at("format"), "cco-weights");
  EXPECT_EQ(h.at("version"), 1);
  EXPECT_EQ(h.at("d_model"), 16);
  EXPECT_EQ(h.at("tensors").size(), 10u);
  EXPECT_EQ(h.at("tensors")[0].at("name"), "layers.0.w_q");
  EXPECT_EQ(h.at("payload_bytes").get<std::size_t>(), bytes.size() - nl - 1);
}

TEST(WeightsFile, TruncationNamesTheTensor) {
  SyntheticSpec s;
  s.layers = 2;
  const auto bytes = encode_weights(random_stack<double>(s));
  // Cut inside the last tensor of layer 1.
  const std::string cut = bytes.substr(0, bytes.size() - 3 * 8);
  try {
    decode_weights<double>(cut);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("layers.1.ln2_bias"), std::string::npos) << e.what();
    EXPECT_EQ(e.offset(), cut.size());
  }
}

TEST(WeightsFile, BadJsonReportsOffset) {
  const std::string bad = "{\"format\": \"cco-weights\", oops}\n";
  try {
    decode_weights<double>(bad);
    FAIL();
  } catch (const ParseError& e) {
    // Byte index of the 'o' in "oops".
    EXPECT_EQ(e.offset(), bad.find("oops"));
  }
}

TEST(WeightsFile, OtherCorruptions) {
  SyntheticSpec s;
  s.layers = 1;
  const auto good = encode_weights(random_stack<double>(s));
  const auto nl = good.find('\n');

  std::string flipped = good;
  flipped[nl + 10] ^= 0x01;
  EXPECT_THROW(decode_weights<double>(flipped), ParseError);

  EXPECT_THROW(decode_weights<double>(good + "xx"), ParseError);
  EXPECT_THROW(decode_weights<double>(good.substr(0, nl)), ParseError);
  EXPECT_THROW(decode_frames<double>(good), ParseError);

  auto h = nlohmann::json::parse(good.substr(0, nl));
  h["version"] = 2;
  EXPECT_THROW(decode_weights<double>(h.dump() + good.substr(nl)), ParseError);
}

TEST(WeightsFile, MissingFileIsAnArgumentError) {
  EXPECT_THROW(load_weights<double>("/nonexistent/cco/weights.bin"), ArgumentError);
}

TEST(FramesFile, RoundTripAndShape) {
  const auto f = random_frames<double>(64, 16, 3);
  const auto got = decode_frames<double>(encode_frames(f));
  EXPECT_EQ(got.rows(), 64u);
  EXPECT_EQ(got.cols(), 16u);
  EXPECT_EQ(got, f);
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticSpec s;
  s.seed = 42;
  EXPECT_EQ(encode_weights(random_stack<double>(s)), encode_weights(random_stack<double>(s)));
  EXPECT_EQ(encode_frames(random_frames<double>(64, 16, 42)),
            encode_frames(random_frames<double>(64, 16, 42)));
  s.seed = 43;
  SyntheticSpec t;
  t.seed = 42;
  EXPECT_NE(encode_weights(random_stack<double>(s)), encode_weights(random_stack<double>(t)));
}

TEST(Synthetic, WeightScale) {
  SyntheticSpec s;
  s.d_model = 64;
  s.layers = 1;
  const auto st = random_stack<double>(s);
  double sq = 0;
  for (double v : st.layers[0].w_q.data()) sq += v * v;
  // Entries are N(0, 1/d); the sample variance of 4096 draws is close to 1/64.
  EXPECT_NEAR(sq / 4096, 1.0 / 64, 0.1 / 64);
}

TEST(Synthetic, GeneratedLayerPassesGradientCheck) {
  SyntheticSpec s;
  s.d_model = 8;
  s.heads = 2;
  s.layers = 1;
  s.seed = 77;
  const auto st = decode_weights<double>(encode_weights(random_stack<double>(s))).stack;
  const auto act = init_context_slots(random_frames<double>(8, 8, 77), make_layout(8, 4));
  const auto mask = build_cco_mask(act.layout, {0, 1, LayerClass::later, true});
  std::mt19937_64 rng(78);
  const auto rep = grad_check(act.values, st.layers[0], mask,
                              random_normal<double>(10, 8, rng));
  EXPECT_LE(rep.worst_rel_err(), 1e-4);
}

}  // namespace
}  // namespace cco
