// Command-line front end: flag parsing only; the work lives in cco/cli.hpp.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cco/cli.hpp"

namespace {

using cco::cli::RunConfig;

void add_model_flags(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--weights", rc.weights_path,
                  "Weights file (default: synthetic stack from --seed)");
  sub->add_option("--input", rc.input_path,
                  "Frames file (default: synthetic standard-normal frames)");
  sub->add_option("--frames", rc.synth.frames, "Synthetic frame count T")
      ->capture_default_str();
  sub->add_option("--d-model", rc.synth.d_model, "Synthetic model width")
      ->capture_default_str();
  sub->add_option("--heads", rc.synth.heads, "Synthetic head count")
      ->capture_default_str();
  sub->add_option("--layers", rc.synth.layers, "Synthetic layer count")
      ->capture_default_str();
  sub->add_option("--ffn-dim", rc.synth.ffn_dim,
                  "Synthetic feed-forward width (0 = 4 * d_model)")
      ->capture_default_str();
  sub->add_option("--seed", rc.synth.seed, "Seed for synthetic data")
      ->capture_default_str();
}

void add_chunk_flags(CLI::App* sub, RunConfig& rc) {
  auto* frames = sub->add_option_function<std::size_t>(
      "--chunk-size",
      [&rc](std::size_t v) {
        rc.chunk_frames = v;
        rc.chunk_ms.reset();
      },
      "Chunk size in frames (default 8)");
  auto* ms = sub->add_option_function<std::size_t>(
      "--chunk-ms",
      [&rc](std::size_t v) {
        rc.chunk_ms = v;
        rc.chunk_frames.reset();
      },
      "Chunk size in ms (multiple of 40)");
  frames->excludes(ms);
  sub->add_option("--lc", rc.lc, "Left-context chunks, or 'all'")
      ->capture_default_str();
  sub->add_option("--n-ctx", rc.n_ctx, "Preceding context embeddings")
      ->capture_default_str();
  sub->add_flag("!--no-cco", rc.cco, "Disable contextual carry-over");
}

void add_precision_flag(CLI::App* sub, RunConfig& rc) {
  sub->add_option_function<std::string>(
         "--precision",
         [&rc](const std::string& s) { rc.precision = cco::parse_precision(s); },
         "single or double (default from CCO_PRECISION, else double)")
      ->check(CLI::IsMember({"single", "double", "float", "f32", "f64"}));
}

void add_output_flag(CLI::App* sub, RunConfig& rc) {
  sub->add_option("-o,--out", rc.output_path,
                  "CSV output path (default: <command>.csv)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chunked streaming encoder with contextual carry-over"};
  app.require_subcommand(1);

  RunConfig rc;
  try {
    rc.precision = cco::cli::default_precision_from_env();
  } catch (const std::exception& e) {
    std::cerr << "error: CCO_PRECISION: " << e.what() << "\n";
    return cco::cli::kExitInput;
  }

  auto* mask = app.add_subcommand("mask-dump", "Write an attention mask as CSV and ASCII");
  mask->add_option("--frames", rc.synth.frames, "Frame count T")->capture_default_str();
  add_chunk_flags(mask, rc);
  mask->add_option("--layer", rc.layer, "first or later")
      ->check(CLI::IsMember({"first", "later"}))
      ->capture_default_str();
  mask->add_option("--ascii", rc.ascii_path, "ASCII grid path (default: stdout)");
  add_output_flag(mask, rc);

  for (const char* name : {"run-offline", "run-stream", "compare"}) {
    auto* sub = app.add_subcommand(
        name, std::string(name) == "run-offline"
                  ? "Whole-utterance masked forward pass"
              : std::string(name) == "run-stream"
                  ? "Chunk-by-chunk streaming inference with per-chunk timings"
                  : "Streaming vs offline discrepancy report");
    add_model_flags(sub, rc);
    add_chunk_flags(sub, rc);
    add_precision_flag(sub, rc);
    add_output_flag(sub, rc);
  }

  auto* grad = app.add_subcommand("grad-check",
                                  "Finite-difference check of the layer backward pass");
  add_model_flags(grad, rc);
  add_chunk_flags(grad, rc);
  grad->add_option("--layer", rc.layer, "first or later")
      ->check(CLI::IsMember({"first", "later"}))
      ->capture_default_str();
  add_output_flag(grad, rc);

  auto* dct = app.add_subcommand("sample-dct", "Draw dynamic-chunk-training configurations");
  dct->add_option("--seed", rc.synth.seed, "Sampler seed")->capture_default_str();
  dct->add_option("--draws", rc.draws, "Number of draws")->capture_default_str();
  add_output_flag(dct, rc);

  auto* bench = app.add_subcommand("bench", "Per-chunk latency and key/value budget per config");
  add_model_flags(bench, rc);
  add_precision_flag(bench, rc);
  bench->add_option("--grid", rc.grid_path, "Config grid file (key=value lines)")
      ->required();
  bench->add_option("--stream-chunks", rc.stream_chunks, "Chunks streamed per run")
      ->capture_default_str();
  bench->add_option("--reps", rc.repetitions, "Timed repetitions per config")
      ->capture_default_str();
  add_output_flag(bench, rc);

  auto* gen = app.add_subcommand("gen-synthetic", "Write seeded weights and frames files");
  gen->add_option("--weights", rc.weights_path, "Weights output path")->required();
  gen->add_option("--input", rc.input_path, "Frames output path")->required();
  gen->add_option("--frames", rc.synth.frames, "Frame count T")->capture_default_str();
  gen->add_option("--d-model", rc.synth.d_model, "Model width")->capture_default_str();
  gen->add_option("--heads", rc.synth.heads, "Head count")->capture_default_str();
  gen->add_option("--layers", rc.synth.layers, "Layer count")->capture_default_str();
  gen->add_option("--ffn-dim", rc.synth.ffn_dim, "Feed-forward width (0 = 4 * d_model)")
      ->capture_default_str();
  gen->add_option("--seed", rc.synth.seed, "Seed")->capture_default_str();
  add_precision_flag(gen, rc);

  // grad-check defaults to a d_model=8 layer with T+B = 10 rows.
  grad->preparse_callback([&rc](std::size_t) {
    rc.synth.frames = 8;
    rc.synth.d_model = 8;
    rc.synth.heads = 2;
    rc.synth.layers = 1;
    rc.chunk_frames = 4;
    rc.lc = "0";
  });
  bench->preparse_callback([&rc](std::size_t) {
    rc.synth.d_model = 64;
    rc.synth.heads = 4;
    rc.synth.layers = 4;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cco::cli::kExitInput;
  }

  for (auto* sub : app.get_subcommands()) rc.command = sub->get_name();
  return cco::cli::run_command(rc, std::cout);
}
