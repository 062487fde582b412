#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cco/cli.hpp"

namespace cco::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cco_cli_" + std::string(::testing::UnitTest::GetInstance()
                                         ->current_test_info()
                                         ->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig base(const std::string& cmd) {
    RunConfig rc;
    rc.command = cmd;
    rc.output_path = (dir_ / (cmd + ".csv")).string();
    return rc;
  }

  fs::path dir_;
  std::ostringstream log_;
};

TEST_F(CliTest, CompareOnDefaultsPasses) {
  auto rc = base("compare");
  EXPECT_EQ(run_command(rc, log_), kExitOk) << log_.str();
  EXPECT_NE(log_.str().find("PASS"), std::string::npos);
  const auto csv = slurp(rc.output_path);
  EXPECT_EQ(csv.rfind("# cco compare", 0), 0u);
  EXPECT_NE(csv.find("chunk,max_abs_diff"), std::string::npos);
}

TEST_F(CliTest, CompareSinglePrecision) {
  auto rc = base("compare");
  rc.precision = Precision::single;
  EXPECT_EQ(run_command(rc, log_), kExitOk) << log_.str();
}

TEST_F(CliTest, MaskDumpMarksCarriedContext) {
  auto rc = base("mask-dump");
  rc.synth.frames = 16;
  rc.chunk_frames = 4;
  rc.lc = "1";
  rc.n_ctx = 1;
  rc.ascii_path = (dir_ / "mask.txt").string();
  ASSERT_EQ(run_command(rc, log_), kExitOk) << log_.str();
  std::vector<std::string> grid;
  std::istringstream in(slurp(rc.ascii_path));
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') grid.push_back(line.substr(7));
  ASSERT_EQ(grid.size(), 20u);
  // Rows 15..19 hold chunk 4 (1-based); column 9 is ctx of chunk 2.
  for (int r = 15; r <= 19; ++r) {
    EXPECT_EQ(grid[r][9], 'C');
    EXPECT_EQ(grid[r][4], '.');
    EXPECT_EQ(grid[r][14], '.');
    EXPECT_EQ(grid[r][19], 'C');
    EXPECT_EQ(grid[r][10], r == 19 ? 'C' : '#');
  }
  const auto csv = slurp(rc.output_path);
  EXPECT_EQ(csv.rfind("# cco mask-dump", 0), 0u);
}

TEST_F(CliTest, TruncatedWeightsIsAnInputError) {
  SyntheticSpec s;
  const auto bytes = encode_weights(random_stack<double>(s));
  const auto path = (dir_ / "w.bin").string();
  write_file_bytes(path, bytes.substr(0, bytes.size() - 5));
  auto rc = base("run-offline");
  rc.weights_path = path;
  EXPECT_EQ(run_command(rc, log_), kExitInput);
  EXPECT_NE(log_.str().find("layers.1.ln2_bias"), std::string::npos) << log_.str();
}

TEST_F(CliTest, GenSyntheticThenRunFromFiles) {
  auto gen = base("gen-synthetic");
  gen.weights_path = (dir_ / "w.bin").string();
  gen.input_path = (dir_ / "x.bin").string();
  ASSERT_EQ(run_command(gen, log_), kExitOk);
  const auto first = slurp(gen.weights_path);
  ASSERT_EQ(run_command(gen, log_), kExitOk);
  EXPECT_EQ(slurp(gen.weights_path), first);

  auto rc = base("compare");
  rc.weights_path = gen.weights_path;
  rc.input_path = gen.input_path;
  EXPECT_EQ(run_command(rc, log_), kExitOk) << log_.str();
}

TEST_F(CliTest, RunCommandsWriteCsv) {
  for (const char* cmd : {"run-offline", "run-stream"}) {
    auto rc = base(cmd);
    rc.synth.frames = 20;
    rc.chunk_ms = 160;
    ASSERT_EQ(run_command(rc, log_), kExitOk) << log_.str();
    const auto csv = slurp(rc.output_path);
    EXPECT_NE(csv.find("chunk=4"), std::string::npos);
    std::size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    EXPECT_EQ(lines, 22u) << cmd;  // echo + header + 20 frames
  }
}

TEST_F(CliTest, GradCheckPasses) {
  auto rc = base("grad-check");
  rc.synth.frames = 8;
  rc.synth.d_model = 8;
  rc.synth.layers = 1;
  rc.chunk_frames = 4;
  rc.lc = "0";
  EXPECT_EQ(run_command(rc, log_), kExitOk) << log_.str();
  EXPECT_NE(log_.str().find("10 rows"), std::string::npos);
}

TEST_F(CliTest, SampleDct) {
  auto rc = base("sample-dct");
  rc.draws = 500;
  EXPECT_EQ(run_command(rc, log_), kExitOk);
  std::size_t lines = 0;
  for (char ch : slurp(rc.output_path)) lines += ch == '\n';
  EXPECT_EQ(lines, 502u);
}

TEST_F(CliTest, BenchFromGrid) {
  const auto grid = dir_ / "grid.txt";
  std::ofstream(grid) << "# small\nchunk=4 lc=1 n_ctx=0 cco=0\nchunk_ms=160 lc=1 n_ctx=2\n";
  auto rc = base("bench");
  rc.grid_path = grid.string();
  rc.synth.d_model = 8;
  rc.stream_chunks = 20;
  rc.repetitions = 1;
  ASSERT_EQ(run_command(rc, log_), kExitOk) << log_.str();
  const auto csv = slurp(rc.output_path);
  EXPECT_NE(csv.find("\n4,160,1,0,0,20,"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\n4,160,1,2,1,20,"), std::string::npos) << csv;
}

TEST(Grid, ParseErrorsCarryLineOffset) {
  try {
    detail::parse_grid("chunk=4\nchunk=4 bogus\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 8u);
  }
  EXPECT_THROW(detail::parse_grid("# nothing\n"), ParseError);
  EXPECT_THROW(detail::parse_grid("lc=2\n"), ParseError);
  EXPECT_THROW(detail::parse_grid("chunk=4 cco=0 n_ctx=1\n"), ParseError);
  EXPECT_THROW(detail::parse_grid("chunk_ms=50\n"), ParseError);
  EXPECT_EQ(detail::parse_grid("chunk=16 lc=2 n_ctx=16 # comment\n").front().n_ctx, 16u);
}

TEST(Lc, ParseAndPrint) {
  EXPECT_EQ(parse_lc("all"), kAllLeftContext);
  EXPECT_EQ(parse_lc("3"), 3u);
  EXPECT_THROW(parse_lc("-1"), ArgumentError);
  EXPECT_THROW(parse_lc("2x"), ArgumentError);
  EXPECT_EQ(lc_string(kAllLeftContext), "all");
}

TEST_F(CliTest, BadChunkMsIsInputError) {
  auto rc = base("run-offline");
  rc.chunk_ms = 50;
  EXPECT_EQ(run_command(rc, log_), kExitInput);
}

TEST_F(CliTest, UnknownCommand) {
  auto rc = base("nope");
  EXPECT_EQ(run_command(rc, log_), kExitInput);
}

}  // namespace
}  // namespace cco::cli
