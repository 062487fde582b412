// Streams a synthetic utterance through a small random encoder, 40 ms of
// frames at a time, and checks the result against the whole-utterance pass.

#include <cstdio>

#include "cco/streaming.hpp"
#include "cco/synthetic.hpp"

int main() {
  cco::SyntheticSpec spec;
  spec.frames = 100;
  spec.d_model = 32;
  spec.heads = 4;
  spec.layers = 6;
  const auto stack = cco::random_stack<double>(spec);
  const auto frames = cco::random_frames<double>(spec.frames, spec.d_model, 11);

  cco::CcoConfig cfg;
  cfg.chunk_size = 16;  // 640 ms
  cfg.lc = 1;
  cfg.n_ctx = 4;
  cfg.d_model = spec.d_model;
  cfg.layer_count = spec.layers;

  auto session = cco::open_session(stack, cfg);
  cco::Matrix<double> streamed;
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    for (auto& out : session.push_frames(frames.row_block(t, 1))) {
      std::printf("chunk %zu ready after frame %zu\n", out.chunk_index, t);
      streamed.append_rows(out.frames);
    }
  }
  if (auto tail = session.flush()) {
    std::printf("chunk %zu (short, %zu frames) at end of stream\n",
                tail->chunk_index, tail->frames.rows());
    streamed.append_rows(tail->frames);
  }

  const auto offline = cco::encoder_forward_offline(frames, stack, cfg);
  std::printf("max |streamed - offline| = %.3g\n",
              cco::max_abs_diff(streamed, offline));
  return 0;
}
