#pragma once

// Subcommand implementations behind the `cco` tool. Each command writes a CSV
// (first line a `#` config echo, then a header row) and prints a one-line
// summary.
//
// Exit codes: 0 success, 2 tolerance/invariant failure, 3 input error.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cco/accounting.hpp"
#include "cco/attention.hpp"
#include "cco/dct_sampler.hpp"
#include "cco/errors.hpp"
#include "cco/gradcheck.hpp"
#include "cco/mask.hpp"
#include "cco/streaming.hpp"
#include "cco/synthetic.hpp"
#include "cco/weights_io.hpp"

namespace cco::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitTolerance = 2;
inline constexpr int kExitInput = 3;

inline constexpr double kCompareTolDouble = 1e-10;
inline constexpr double kCompareTolSingle = 1e-5;
inline constexpr double kGradCheckTol = 1e-4;

struct RunConfig {
  std::string command;
  std::string weights_path;  // empty -> synthetic stack
  std::string input_path;    // empty -> synthetic frames
  std::string output_path;   // CSV; empty -> "<command>.csv"
  std::string ascii_path;    // mask-dump only; empty -> stdout
  std::string grid_path;     // bench only
  SyntheticSpec synth;
  std::optional<std::size_t> chunk_frames;
  std::optional<std::size_t> chunk_ms;
  std::string lc = "1";  // integer or "all"
  std::size_t n_ctx = 1;
  bool cco = true;
  std::string layer = "later";  // mask-dump / grad-check
  Precision precision = Precision::double_;
  std::size_t draws = 10000;
  std::size_t stream_chunks = 500;
  std::size_t repetitions = 3;
  double ln_eps = 1e-5;
};

inline std::size_t parse_lc(std::string_view s) {
  if (s == "all" || s == "full") return kAllLeftContext;
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size())
    throw ArgumentError("left context must be a count or 'all', got '" +
                        std::string(s) + "'");
  return v;
}

inline std::string lc_string(std::size_t lc) {
  return lc == kAllLeftContext ? "all" : std::to_string(lc);
}

inline std::size_t resolve_chunk(const RunConfig& rc) {
  if (rc.chunk_frames && rc.chunk_ms)
    throw ArgumentError("give the chunk size in frames or in ms, not both");
  if (rc.chunk_ms) return ms_to_frames(*rc.chunk_ms);
  const std::size_t c = rc.chunk_frames.value_or(8);
  if (c == 0) throw ArgumentError("chunk size must be >= 1");
  return c;
}

inline Precision default_precision_from_env() {
  if (const char* p = std::getenv("CCO_PRECISION")) return parse_precision(p);
  return Precision::double_;
}

// ---------------------------------------------------------------------------

namespace detail {

class CsvOut {
 public:
  CsvOut(const std::string& path, const std::string& echo) : path_(path) {
    out_.open(path, std::ios::trunc);
    if (!out_) throw ArgumentError("cannot open '" + path + "' for writing");
    out_ << std::setprecision(17);
    out_ << "# " << echo << "\n";
  }
  std::ofstream& stream() { return out_; }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
};

inline std::string output_path(const RunConfig& rc) {
  return rc.output_path.empty() ? rc.command + ".csv" : rc.output_path;
}

template <std::floating_point T>
void write_row_values(std::ostream& os, std::span<const T> v) {
  for (T x : v) os << ',' << x;
  os << '\n';
}

inline void write_value_header(std::ostream& os, std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) os << ",y" << j;
  os << '\n';
}

template <std::floating_point T>
struct Model {
  EncoderStack<T> stack;
  double ln_eps = 1e-5;
};

template <std::floating_point T>
Model<T> load_model(const RunConfig& rc) {
  if (rc.weights_path.empty()) return {random_stack<T>(rc.synth), rc.ln_eps};
  auto w = load_weights<T>(rc.weights_path);
  return {std::move(w.stack), w.ln_eps};
}

template <std::floating_point T>
Matrix<T> load_input(const RunConfig& rc, std::size_t d_model) {
  if (rc.input_path.empty())
    return random_frames<T>(rc.synth.frames, d_model, rc.synth.seed);
  Matrix<T> f = load_frames<T>(rc.input_path);
  if (f.cols() != d_model)
    throw ArgumentError("input has " + std::to_string(f.cols()) +
                        " columns, model expects " + std::to_string(d_model));
  return f;
}

template <std::floating_point T>
CcoConfig make_config(const RunConfig& rc, const Model<T>& m) {
  CcoConfig cfg;
  cfg.chunk_size = resolve_chunk(rc);
  cfg.lc = parse_lc(rc.lc);
  cfg.cco_enabled = rc.cco;
  cfg.n_ctx = rc.cco ? rc.n_ctx : 0;
  cfg.precision = precision_of<T>();
  cfg.d_model = m.stack.d_model();
  cfg.layer_count = m.stack.layer_count();
  cfg.ln_eps = m.ln_eps;
  return cfg;
}

inline std::string echo(const RunConfig& rc, const CcoConfig& cfg,
                        std::size_t frames) {
  std::ostringstream os;
  os << "cco " << rc.command << " precision=" << to_string(cfg.precision)
     << " frames=" << frames << " d_model=" << cfg.d_model
     << " layers=" << cfg.layer_count << " chunk=" << cfg.chunk_size
     << " chunk_ms=" << frames_to_ms(cfg.chunk_size) << " lc=" << lc_string(cfg.lc)
     << " n_ctx=" << cfg.n_ctx << " cco=" << cfg.cco_enabled
     << " weights=" << (rc.weights_path.empty() ? "synthetic" : rc.weights_path)
     << " input=" << (rc.input_path.empty() ? "synthetic" : rc.input_path)
     << " seed=" << rc.synth.seed;
  return os.str();
}

inline LayerClass parse_layer(std::string_view s) {
  if (s == "first") return LayerClass::first;
  if (s == "later") return LayerClass::later;
  throw ArgumentError("layer must be 'first' or 'later', got '" +
                      std::string(s) + "'");
}

// ---------------------------------------------------------------------------

inline int cmd_mask_dump(const RunConfig& rc, std::ostream& log) {
  const std::size_t c = resolve_chunk(rc);
  const ChunkLayout layout = make_layout(rc.synth.frames, c);
  const ExtendedLayout ext = make_extended_layout(layout);
  const MaskSpec spec{parse_lc(rc.lc), rc.cco ? rc.n_ctx : 0,
                      parse_layer(rc.layer), rc.cco};
  const BoolMatrix mask = build_cco_mask(ext, spec);

  // Labels and slot flags along either axis.
  std::vector<std::string> labels;
  std::vector<bool> is_ctx;
  for (std::size_t b = 0; b < layout.chunk_count; ++b) {
    for (std::size_t i = 0; i < layout.chunk_spans[b].length; ++i) {
      labels.push_back("f" + std::to_string(layout.chunk_spans[b].start + i));
      is_ctx.push_back(false);
    }
    if (rc.cco) {
      labels.push_back("ctx" + std::to_string(b));
      is_ctx.push_back(true);
    }
  }

  std::ostringstream e;
  e << "cco mask-dump frames=" << rc.synth.frames << " chunk=" << c
    << " lc=" << lc_string(spec.lc) << " n_ctx=" << spec.n_ctx
    << " layer=" << rc.layer << " cco=" << rc.cco;
  CsvOut csv(output_path(rc), e.str());
  auto& os = csv.stream();
  os << "row";
  for (const auto& l : labels) os << ',' << l;
  os << '\n';

  std::ostringstream ascii;
  ascii << "# " << e.str() << "\n";
  ascii << "# '#' frame dependency, 'C' context embedding involved, '.' blocked\n";
  std::size_t allowed = 0;
  for (std::size_t r = 0; r < mask.rows(); ++r) {
    os << labels[r];
    ascii << std::setw(6) << std::left << labels[r] << ' ';
    for (std::size_t k = 0; k < mask.cols(); ++k) {
      const bool on = mask(r, k);
      allowed += on;
      os << ',' << (on ? 1 : 0);
      ascii << (on ? (is_ctx[r] || is_ctx[k] ? 'C' : '#') : '.');
    }
    os << '\n';
    ascii << '\n';
  }
  if (rc.ascii_path.empty()) {
    std::cout << ascii.str();
  } else {
    std::ofstream a(rc.ascii_path, std::ios::trunc);
    if (!a) throw ArgumentError("cannot open '" + rc.ascii_path + "'");
    a << ascii.str();
  }
  log << "mask-dump: " << mask.rows() << "x" << mask.cols() << " mask, "
      << allowed << " allowed cells, csv=" << csv.path() << "\n";
  return kExitOk;
}

template <std::floating_point T>
int cmd_run_offline(const RunConfig& rc, std::ostream& log) {
  const Model<T> m = load_model<T>(rc);
  const Matrix<T> frames = load_input<T>(rc, m.stack.d_model());
  const CcoConfig cfg = make_config(rc, m);
  const Matrix<T> y = encoder_forward_offline(frames, m.stack, cfg);
  CsvOut csv(output_path(rc), echo(rc, cfg, frames.rows()));
  auto& os = csv.stream();
  os << "frame,chunk";
  write_value_header(os, y.cols());
  for (std::size_t t = 0; t < y.rows(); ++t) {
    os << t << ',' << t / cfg.chunk_size;
    write_row_values<T>(os, y.row(t));
  }
  log << "run-offline: " << y.rows() << " frames, "
      << make_layout(frames.rows(), cfg.chunk_size).chunk_count
      << " chunks, csv=" << csv.path() << "\n";
  return kExitOk;
}

template <std::floating_point T>
int cmd_run_stream(const RunConfig& rc, std::ostream& log) {
  const Model<T> m = load_model<T>(rc);
  const Matrix<T> frames = load_input<T>(rc, m.stack.d_model());
  const CcoConfig cfg = make_config(rc, m);
  CsvOut csv(output_path(rc), echo(rc, cfg, frames.rows()));
  auto& os = csv.stream();
  os << "chunk,frame,chunk_latency_ms";
  write_value_header(os, frames.cols());

  StreamSession<T> session(m.stack, cfg);
  std::vector<double> latencies;
  std::size_t frame = 0;
  auto emit = [&](const ChunkOutput<T>& out, double ms) {
    latencies.push_back(ms);
    for (std::size_t i = 0; i < out.frames.rows(); ++i, ++frame) {
      os << out.chunk_index << ',' << frame << ',' << ms;
      write_row_values<T>(os, out.frames.row(i));
    }
  };
  // Arrives one chunk's worth of frames at a time, as a live stream would.
  for (std::size_t off = 0; off < frames.rows(); off += cfg.chunk_size) {
    const std::size_t n = std::min(cfg.chunk_size, frames.rows() - off);
    const Matrix<T> piece = frames.row_block(off, n);
    const auto t0 = std::chrono::steady_clock::now();
    auto outs = session.push_frames(piece);
    const auto t1 = std::chrono::steady_clock::now();
    for (const auto& o : outs)
      emit(o, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  const auto t0 = std::chrono::steady_clock::now();
  auto tail = session.flush();
  const auto t1 = std::chrono::steady_clock::now();
  if (tail) emit(*tail, std::chrono::duration<double, std::milli>(t1 - t0).count());

  LatencyReport rep;
  rep.config = cfg;
  rep.chunk_ms = latencies;
  finalize(rep);
  log << "run-stream: " << session.chunks_processed() << " chunks, " << frame
      << " frames, mean_ms=" << rep.mean_ms << " p99_ms=" << rep.p99_ms
      << ", csv=" << csv.path() << "\n";
  return frame == frames.rows() ? kExitOk : kExitTolerance;
}

template <std::floating_point T>
int cmd_compare(const RunConfig& rc, std::ostream& log) {
  const Model<T> m = load_model<T>(rc);
  const Matrix<T> frames = load_input<T>(rc, m.stack.d_model());
  const CcoConfig cfg = make_config(rc, m);
  const CompareReport rep = compare_offline(frames, m.stack, cfg);
  const double tol = std::is_same_v<T, double> ? kCompareTolDouble
                                               : kCompareTolSingle;
  CsvOut csv(output_path(rc), echo(rc, cfg, frames.rows()));
  auto& os = csv.stream();
  os << "chunk,max_abs_diff\n";
  for (std::size_t b = 0; b < rep.per_chunk_diffs.size(); ++b)
    os << b << ',' << rep.per_chunk_diffs[b] << '\n';
  const bool ok = rep.max_abs_diff <= tol;
  log << "compare: max_abs_diff=" << rep.max_abs_diff << " tolerance=" << tol
      << (ok ? " PASS" : " FAIL") << ", csv=" << csv.path() << "\n";
  return ok ? kExitOk : kExitTolerance;
}

inline int cmd_grad_check(const RunConfig& rc, std::ostream& log) {
  const Model<double> m = load_model<double>(rc);
  const EncoderLayerParams<double>& layer = m.stack.layers.front();
  const std::size_t d = layer.d_model();
  const std::size_t c = resolve_chunk(rc);
  const Matrix<double> frames = load_input<double>(rc, d);
  const ChunkLayout layout = make_layout(frames.rows(), c);
  const MaskSpec spec{parse_lc(rc.lc), rc.cco ? rc.n_ctx : 0,
                      parse_layer(rc.layer), rc.cco};
  Matrix<double> x;
  BoolMatrix mask;
  if (rc.cco) {
    const auto act = init_context_slots(frames, layout);
    x = act.values;
    mask = build_cco_mask(act.layout, spec);
  } else {
    x = frames;
    mask = build_cco_mask(make_extended_layout(layout), spec);
  }
  std::mt19937_64 rng(rc.synth.seed + 1);
  const Matrix<double> upstream = random_normal<double>(x.rows(), d, rng);
  GradCheckOptions opt;
  opt.ln_eps = m.ln_eps;
  const GradCheckReport rep = grad_check(x, layer, mask, upstream, opt);

  std::ostringstream e;
  e << "cco grad-check rows=" << x.rows() << " d_model=" << d
    << " heads=" << layer.head_count << " chunk=" << c
    << " lc=" << lc_string(spec.lc) << " n_ctx=" << spec.n_ctx
    << " layer=" << rc.layer << " cco=" << rc.cco << " step=" << opt.step
    << " rel_floor=" << opt.rel_floor << " seed=" << rc.synth.seed;
  CsvOut csv(output_path(rc), e.str());
  auto& os = csv.stream();
  os << "tensor,elements,max_rel_err,max_abs_err\n";
  for (const auto& en : rep.entries)
    os << en.tensor << ',' << en.elements << ',' << en.max_rel_err << ','
       << en.max_abs_err << '\n';
  const bool ok = rep.worst_rel_err() <= kGradCheckTol;
  log << "grad-check: " << x.rows() << " rows, worst_rel_err="
      << rep.worst_rel_err() << " tolerance=" << kGradCheckTol
      << (ok ? " PASS" : " FAIL") << ", csv=" << csv.path() << "\n";
  return ok ? kExitOk : kExitTolerance;
}

inline int cmd_sample_dct(const RunConfig& rc, std::ostream& log) {
  DctSampler sampler(rc.synth.seed);
  std::vector<DctDraw> draws;
  draws.reserve(rc.draws);
  for (std::size_t i = 0; i < rc.draws; ++i) draws.push_back(sampler.sample());

  std::ostringstream e;
  e << "cco sample-dct seed=" << rc.synth.seed << " draws=" << rc.draws
    << " p_full=" << sampler.policy().full_contextual_probability
    << " chunk_range=" << sampler.policy().min_chunk << ".."
    << sampler.policy().max_chunk << " lc_menu=0,1,2,4,all";
  CsvOut csv(output_path(rc), e.str());
  auto& os = csv.stream();
  os << "draw,mode,chunk_frames,chunk_ms,left_context\n";
  bool in_range = true;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const auto& d = draws[i];
    if (d.mode == DctMode::full_contextual) {
      os << i << ",full_contextual,,,\n";
      continue;
    }
    const std::size_t cs = *d.chunk_size_frames;
    in_range &= cs >= sampler.policy().min_chunk && cs <= sampler.policy().max_chunk;
    os << i << ",chunked," << cs << ',' << frames_to_ms(cs) << ','
       << lc_string(*d.left_context_chunks) << '\n';
  }
  const DctSummary s = summarize(draws, sampler.policy());
  std::size_t covered = 0;
  for (auto h : s.chunk_histogram) covered += h > 0;
  log << "sample-dct: draws=" << s.draws << " full_fraction=" << s.full_fraction()
      << " chunk_sizes_covered=" << covered << "/" << s.chunk_histogram.size()
      << " chi_square=" << s.chunk_chi_square() << ", csv=" << csv.path()
      << "\n";
  return in_range ? kExitOk : kExitTolerance;
}

// One grid entry per non-comment line, whitespace-separated key=value pairs:
//   chunk=16 lc=2 n_ctx=1          (chunk in frames; or chunk_ms=640)
//   chunk=16 lc=2 n_ctx=0 cco=0    (no carry-over baseline)
struct GridEntry {
  std::size_t chunk = 0;
  std::size_t lc = 0;
  std::size_t n_ctx = 0;
  bool cco = true;
};

inline std::vector<GridEntry> parse_grid(std::string_view text) {
  std::vector<GridEntry> out;
  std::size_t line_start = 0;
  while (line_start < text.size()) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    std::string_view line = text.substr(line_start, line_end - line_start);
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    std::istringstream words{std::string(line)};
    std::string word;
    GridEntry g;
    bool any = false, has_chunk = false;
    while (words >> word) {
      const auto eq = word.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ParseError("grid: expected key=value, got '" + word + "'", line_start);
      const std::string key = word.substr(0, eq), val = word.substr(eq + 1);
      try {
        if (key == "chunk") {
          g.chunk = parse_lc(val);
          has_chunk = true;
        } else if (key == "chunk_ms") {
          g.chunk = ms_to_frames(parse_lc(val));
          has_chunk = true;
        } else if (key == "lc") {
          g.lc = parse_lc(val);
        } else if (key == "n_ctx") {
          g.n_ctx = parse_lc(val);
        } else if (key == "cco") {
          g.cco = parse_lc(val) != 0;
        } else {
          throw ArgumentError("unknown key '" + key + "'");
        }
      } catch (const ArgumentError& e) {
        throw ParseError(std::string("grid: ") + e.what(), line_start);
      }
      any = true;
    }
    if (any) {
      if (!has_chunk || g.chunk == 0 || g.chunk == kAllLeftContext)
        throw ParseError("grid: line needs a positive chunk size", line_start);
      if (!g.cco && g.n_ctx != 0)
        throw ParseError("grid: n_ctx must be 0 when cco=0", line_start);
      out.push_back(g);
    }
    line_start = line_end + 1;
  }
  if (out.empty()) throw ParseError("grid: no configurations", 0);
  return out;
}

template <std::floating_point T>
int cmd_bench(const RunConfig& rc, std::ostream& log) {
  if (rc.grid_path.empty()) throw ArgumentError("bench needs --grid");
  const auto grid = parse_grid(read_file_bytes(rc.grid_path));
  const Model<T> m = load_model<T>(rc);
  std::vector<CcoConfig> cfgs;
  for (const auto& g : grid) {
    RunConfig r = rc;
    r.chunk_frames = g.chunk;
    r.chunk_ms.reset();
    r.lc = lc_string(g.lc);
    r.n_ctx = g.n_ctx;
    r.cco = g.cco;
    cfgs.push_back(make_config(r, m));
  }
  const auto reports = bench_interleaved(m.stack, cfgs, rc.stream_chunks,
                                         rc.repetitions, rc.synth.seed);
  std::ostringstream e;
  e << "cco bench precision=" << to_string(precision_of<T>())
    << " d_model=" << m.stack.d_model() << " heads=" << m.stack.head_count()
    << " layers=" << m.stack.layer_count()
    << " stream_chunks=" << rc.stream_chunks << " reps=" << rc.repetitions
    << " grid=" << rc.grid_path << " seed=" << rc.synth.seed;
  CsvOut csv(output_path(rc), e.str());
  auto& os = csv.stream();
  os << "chunk,chunk_ms,lc,n_ctx,cco,samples,mean_ms,p99_ms,"
        "kv_first_last_chunk,kv_later_last_chunk,kv_baseline_full_lc,kv_ratio\n";
  bool ok = true;
  for (const auto& rep : reports) {
    const CcoConfig& c = rep.config;
    const ChunkLayout layout = make_layout(rc.stream_chunks * c.chunk_size,
                                           c.chunk_size);
    const std::size_t last = layout.chunk_count - 1;
    const std::size_t kv_first = kv_count(c.mask_spec(LayerClass::first), last, layout);
    const std::size_t kv_later = kv_count(c.mask_spec(LayerClass::later), last, layout);
    const std::size_t kv_base = kv_count(
        MaskSpec{kAllLeftContext, 0, LayerClass::later, false}, last, layout);
    ok &= rep.p99_ms >= rep.mean_ms && rep.mean_ms >= 0.0;
    os << c.chunk_size << ',' << frames_to_ms(c.chunk_size) << ','
       << lc_string(c.lc) << ',' << c.n_ctx << ',' << c.cco_enabled << ','
       << rep.samples() << ',' << rep.mean_ms << ',' << rep.p99_ms << ','
       << kv_first << ',' << kv_later << ',' << kv_base << ','
       << static_cast<double>(kv_later) / kv_base << '\n';
  }
  log << "bench: " << reports.size() << " configs x " << rc.stream_chunks
      << " chunks x " << rc.repetitions << " reps, csv=" << csv.path() << "\n";
  return ok ? kExitOk : kExitTolerance;
}

inline int cmd_gen_synthetic(const RunConfig& rc, std::ostream& log) {
  if (rc.weights_path.empty() || rc.input_path.empty())
    throw ArgumentError("gen-synthetic needs --weights and --input paths");
  auto write = [&]<std::floating_point T>(T) {
    const EncoderStack<T> stack = random_stack<T>(rc.synth);
    save_weights(rc.weights_path, stack, rc.ln_eps);
    save_frames(rc.input_path,
                random_frames<T>(rc.synth.frames, rc.synth.d_model, rc.synth.seed));
  };
  if (rc.precision == Precision::single)
    write(float{});
  else
    write(double{});
  log << "gen-synthetic: frames=" << rc.synth.frames
      << " d_model=" << rc.synth.d_model << " heads=" << rc.synth.heads
      << " layers=" << rc.synth.layers << " seed=" << rc.synth.seed
      << " weights=" << rc.weights_path << " input=" << rc.input_path << "\n";
  return kExitOk;
}

template <template <typename> class Cmd>
int dispatch_precision(const RunConfig& rc, std::ostream& log) {
  return rc.precision == Precision::single ? Cmd<float>::run(rc, log)
                                           : Cmd<double>::run(rc, log);
}

template <typename T> struct RunOffline { static int run(const RunConfig& r, std::ostream& l) { return cmd_run_offline<T>(r, l); } };
template <typename T> struct RunStream { static int run(const RunConfig& r, std::ostream& l) { return cmd_run_stream<T>(r, l); } };
template <typename T> struct Compare { static int run(const RunConfig& r, std::ostream& l) { return cmd_compare<T>(r, l); } };
template <typename T> struct Bench { static int run(const RunConfig& r, std::ostream& l) { return cmd_bench<T>(r, l); } };

}  // namespace detail

inline int run_command(const RunConfig& rc, std::ostream& log = std::cout) {
  try {
    if (rc.command == "mask-dump") return detail::cmd_mask_dump(rc, log);
    if (rc.command == "run-offline")
      return detail::dispatch_precision<detail::RunOffline>(rc, log);
    if (rc.command == "run-stream")
      return detail::dispatch_precision<detail::RunStream>(rc, log);
    if (rc.command == "compare")
      return detail::dispatch_precision<detail::Compare>(rc, log);
    if (rc.command == "grad-check") return detail::cmd_grad_check(rc, log);
    if (rc.command == "sample-dct") return detail::cmd_sample_dct(rc, log);
    if (rc.command == "bench")
      return detail::dispatch_precision<detail::Bench>(rc, log);
    if (rc.command == "gen-synthetic") return detail::cmd_gen_synthetic(rc, log);
    log << "error: unknown command '" << rc.command << "'\n";
    return kExitInput;
  } catch (const ParseError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericError& e) {
    log << "error: " << e.what() << "\n";
    return kExitTolerance;
  } catch (const StateError& e) {
    log << "error: " << e.what() << "\n";
    return kExitTolerance;
  } catch (const std::logic_error& e) {  // shape, argument, contract errors
    log << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace cco::cli
