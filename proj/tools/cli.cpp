/* Copyright 2026 The StreamThink Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cli.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "streamthink/cot_format.h"
#include "streamthink/engine.h"
#include "streamthink/error.h"
#include "streamthink/latency_model.h"
#include "streamthink/pipeline.h"
#include "streamthink/seg_mask.h"
#include "streamthink/stream_rope.h"
#include "streamthink/stream_spec.h"

namespace streamthink::cli {

namespace {

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Top-level keys name long options of the selected subcommand; nested
// objects address a subcommand explicitly.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
      const auto& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        j[name] = res.size() == 1 ? nlohmann::json(res.front()) : nlohmann::json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    std::vector<std::string> parents;
    for (const CLI::App* sub : root_->get_subcommands()) parents.push_back(sub->get_name());
    walk(j, parents, items);
    return items;
  }

 private:
  const CLI::App* root_;

  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void walk(const nlohmann::json& j, const std::vector<std::string>& parents,
                   std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        walk(value, {key}, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }
};

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoError, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string unit_label(UnitRef ref) {
  return (ref.side == StreamSide::kReceived ? "R" : "C") + std::to_string(ref.index);
}

const std::map<std::string, WithinReceived> kWithinNames{
    {"causal", WithinReceived::kCausal}, {"full", WithinReceived::kFull}};

struct EngineFlags {
  std::uint64_t seed = 0;
  int layers = 2;
  int heads = 2;
  int head_dim = 8;
  int vocab = 64;

  void add(CLI::App* app) {
    app->add_option("--seed", seed, "Weight seed")->capture_default_str();
    app->add_option("--layers", layers, "Transformer layers")->capture_default_str();
    app->add_option("--heads", heads, "Attention heads")->capture_default_str();
    app->add_option("--head-dim", head_dim, "Per-head width (even)")->capture_default_str();
    app->add_option("--vocab", vocab, "Vocabulary size")->capture_default_str();
  }
  Engine build() const {
    EngineConfig cfg;
    cfg.n_layers = layers;
    cfg.n_heads = heads;
    cfg.head_dim = head_dim;
    cfg.vocab_size = vocab;
    cfg.seed = seed;
    return Engine(cfg);
  }
};

// ---- mask ------------------------------------------------------------------

struct MaskCmd {
  std::string spec, output, level = "unit", within = "causal";
  std::vector<int> gen_lens;

  std::string run() const {
    const auto s = load_stream_spec(spec);
    const auto stream = s.build();
    const auto mask = build_seg_mask(stream);
    std::vector<std::string> labels;
    std::vector<std::uint8_t> bits;
    int n = 0;
    if (level == "unit") {
      n = 2 * stream.size();
      for (int u = 1; u <= stream.size(); ++u) labels.push_back(unit_label(UnitRef::received(u)));
      for (int u = 1; u <= stream.size(); ++u) labels.push_back(unit_label(UnitRef::generated(u)));
      bits = mask.dense();
    } else {
      std::vector<int> lens = gen_lens;
      if (lens.empty() && s.generated_lens) lens = *s.generated_lens;
      if (lens.empty()) {
        throw Error(ErrorCode::kMissingGeneratedLengths,
                    "token-level masks need --gen-lens or generated_lens in the stream spec");
      }
      const auto tm = expand_token_mask(mask, stream, kWithinNames.at(within), lens);
      n = tm.k_len();
      for (const auto& o : tm.layout().origins()) {
        labels.push_back(unit_label(o.unit) + "." + std::to_string(o.local));
      }
      for (int q = 0; q < n; ++q) {
        const auto row = tm.row(q);
        bits.insert(bits.end(), row.begin(), row.end());
      }
    }
    std::ostringstream o;
    o << "P1\n# streamthink mask level=" << level << " within=" << within << "\n"
      << "# 1 = attention allowed; rows are queries, columns are keys\n# order:";
    for (const auto& l : labels) o << ' ' << l;
    o << '\n' << n << ' ' << n << '\n';
    for (int q = 0; q < n; ++q) {
      for (int k = 0; k < n; ++k) {
        o << (k ? " " : "") << int(bits[static_cast<std::size_t>(q * n + k)]);
      }
      o << '\n';
    }
    return o.str();
  }
};

// ---- offsets ---------------------------------------------------------------

struct OffsetsCmd {
  std::string spec, output;
  std::vector<int> gen_lens;

  std::string run() const {
    const auto s = load_stream_spec(spec);
    const auto stream = s.build();
    std::vector<int> lens = gen_lens;
    if (lens.empty() && s.generated_lens) lens = *s.generated_lens;
    const auto table = compute_offsets(stream, lens);
    std::ostringstream o;
    o << "kind,index,base_offset,span\n";
    for (int u = 1; u <= stream.size(); ++u) {
      const auto& unit = stream.unit(u);
      o << (unit.is_segment() ? "segment," : "question,") << stream.kind_ordinal(u) << ','
        << table.received_offset(u) << ',' << unit_span(unit) << '\n';
    }
    for (std::size_t k = 0; k < table.gen_offsets.size(); ++k) {
      o << "generated," << k + 1 << ',' << table.gen_offsets[k] << ',' << table.gen_lens[k]
        << '\n';
    }
    return o.str();
  }
};

// ---- run -------------------------------------------------------------------

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct RunCmd {
  std::string spec, output, within = "causal";
  std::vector<int> gen_lens;
  int gen_len = 4;
  EngineFlags engine;

  std::string run() const {
    const auto s = load_stream_spec(spec);
    const auto stream = s.build();
    std::vector<int> lens = gen_lens;
    if (lens.empty() && s.generated_lens) lens = *s.generated_lens;
    if (lens.empty()) lens.assign(static_cast<std::size_t>(stream.size()), gen_len);
    const Engine eng = engine.build();
    const int vocab = eng.config().vocab_size;
    std::vector<std::vector<TokenId>> tokens;
    for (std::size_t k = 0; k < lens.size(); ++k) {
      auto t = placeholder_tokens(lens[k], engine.seed ^ (k + 1));
      for (auto& x : t) x %= vocab;
      tokens.push_back(std::move(t));
    }
    const auto res = eng.forward_monolithic(stream, tokens, kWithinNames.at(within));
    std::ostringstream o;
    o << "unit,tokens,fnv1a,last_logits_head\n";
    auto digest = [&](UnitRef ref) {
      const int b = res.layout.begin(ref);
      const int n = res.layout.length(ref);
      std::uint64_t h = 0xcbf29ce484222325ULL;
      std::string head;
      for (int i = b; i < b + n; ++i) {
        const auto row = res.logits.row(static_cast<std::size_t>(i));
        for (std::size_t c = 0; c < row.size(); ++c) {
          h = fnv1a(fmt_g(row[c]) + ' ', h);
          if (i == b + n - 1 && c < 8) head += (c ? " " : "") + fmt_g(row[c]);
        }
      }
      char hex[17];
      std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
      o << unit_label(ref) << ',' << n << ',' << hex << ',' << head << '\n';
    };
    for (int u = 1; u <= stream.size(); ++u) digest(UnitRef::received(u));
    for (int u = 1; u <= static_cast<int>(lens.size()); ++u) digest(UnitRef::generated(u));
    return o.str();
  }
};

// ---- pipeline --------------------------------------------------------------

struct PipelineCmd {
  std::string spec, output, mode = "all", within = "causal";
  int note_len = 2;
  int answer_len = 4;
  std::vector<int> answer_lens;
  int rationale_len = 0;
  bool realtime = false;
  std::int64_t ticks_per_token = 1;
  bool concurrent = false;
  EngineFlags engine;

  std::string run() const {
    const auto stream = load_stream_spec(spec).build();
    std::vector<int> answers = answer_lens;
    if (answers.empty()) answers.assign(static_cast<std::size_t>(stream.question_count()), answer_len);
    PipelineOptions opts;
    opts.within = kWithinNames.at(within);
    opts.concurrent = concurrent;
    if (rationale_len > 0) {
      opts.rationale_lens.assign(static_cast<std::size_t>(stream.question_count()), rationale_len);
    }
    if (realtime) opts.arrival_clocks = realtime_arrivals(stream, ticks_per_token);
    const Engine eng = engine.build();

    std::vector<PipelineMode> modes;
    if (mode == "all") {
      modes = {PipelineMode::kInterleaved, PipelineMode::kDecoupled, PipelineMode::kBatch};
    } else {
      modes = {mode == "interleaved" ? PipelineMode::kInterleaved
               : mode == "decoupled" ? PipelineMode::kDecoupled
                                     : PipelineMode::kBatch};
    }
    std::ostringstream events, ttfts, tokens;
    events << "mode,kind,unit,clock\n";
    ttfts << "mode,turn,unit,ttft\n";
    tokens << "mode,turn,answer_tokens\n";
    for (auto m : modes) {
      const auto name = pipeline_mode_name(m);
      const auto res = run_pipeline(eng, stream, m, note_len, answers, opts);
      for (const auto& ev : res.events) {
        events << name << ',' << event_kind_name(ev.kind) << ',' << ev.unit_index << ','
               << ev.clock << '\n';
      }
      const auto per_turn = ttft_all(res.events);
      double sum = 0;
      for (std::size_t r = 0; r < per_turn.size(); ++r) {
        ttfts << name << ',' << r + 1 << ',' << res.answers[r].unit_index << ','
              << per_turn[r] << '\n';
        sum += static_cast<double>(per_turn[r]);
      }
      if (!per_turn.empty()) {
        ttfts << name << ",mean,," << fmt_g(sum / static_cast<double>(per_turn.size())) << '\n';
      }
      for (const auto& a : res.answers) {
        tokens << name << ',' << a.turn << ',';
        for (std::size_t i = a.answer_begin; i < a.tokens.size(); ++i) {
          tokens << (i > a.answer_begin ? " " : "") << a.tokens[i];
        }
        tokens << '\n';
      }
    }
    return events.str() + "\n" + ttfts.str() + "\n" + tokens.str();
  }
};

// ---- simulate --------------------------------------------------------------

struct SimulateCmd {
  RateConfig cfg;
  std::string output, mode = "interleaved", arrivals = "deterministic";
  double horizon = 0.0;
  double dt = 0.5;
  int cycles = 3;
  bool summary_only = false;

  std::string run() {
    cfg.arrivals = arrivals == "poisson" ? ArrivalProcess::kPoisson
                                         : ArrivalProcess::kDeterministic;
    const LatencyMode m =
        mode == "decoupled" ? LatencyMode::kDecoupled : LatencyMode::kInterleaved;
    cfg.validate();
    const double h =
        horizon > 0.0 ? horizon : cfg.first_decode_at + cycles * cfg.effective_period();
    const auto trace = simulate(cfg, m, h, dt);
    const auto closed = catch_up_closed_form(cfg);
    std::ostringstream o;
    if (!summary_only) {
      o << "time_s,backlog,mode\n";
      for (const auto& s : trace.samples) {
        o << fmt_g(s.time_s) << ',' << fmt_g(s.backlog) << ',' << latency_mode_name(m) << '\n';
      }
      o << '\n';
    }
    o << "rho,t_dec,measured_catch_up,closed_form,rel_err\n"
      << fmt_g(cfg.rho()) << ',' << fmt_g(cfg.t_dec) << ','
      << (trace.catch_up_s ? fmt_g(*trace.catch_up_s) : "none") << ','
      << (closed.divergent ? "divergent" : fmt_g(closed.seconds)) << ',';
    if (closed.divergent || !trace.catch_up_s) {
      o << "n/a";
    } else if (closed.seconds == 0.0) {
      o << fmt_g(std::abs(*trace.catch_up_s));
    } else {
      o << fmt_g(std::abs(*trace.catch_up_s - closed.seconds) / closed.seconds);
    }
    o << '\n';
    return o.str();
  }
};

// ---- validate-cot / synth-cot ----------------------------------------------

struct DelimiterFlags {
  CotDelimiters d;
  void add(CLI::App* app) {
    app->add_option("--segment-end", d.segment_end, "Segment-end marker")->capture_default_str();
    app->add_option("--question-end", d.question_end, "Question-end marker")->capture_default_str();
    app->add_option("--thought-end", d.thought_end, "Thought-end marker")->capture_default_str();
  }
};

struct ValidateCmd {
  std::vector<std::string> files;
  std::string output;
  bool reduced = false;
  DelimiterFlags delims;

  std::pair<std::string, bool> run() const {
    CotParseOptions opts;
    opts.delimiters = delims.d;
    opts.profile = reduced ? DelimiterProfile::kReduced : DelimiterProfile::kStrict;
    std::ostringstream o;
    o << "file,constraint,unit,message\n";
    int failed = 0;
    for (const auto& file : files) {
      const auto name = csv_field(file);
      bool file_ok = false;
      try {
        const auto doc = parse_cot(read_file(file), opts);
        const auto report = validate_cot(doc);
        for (const auto& v : report.violations) {
          o << name << ',' << v.constraint << ',' << v.unit << ',' << csv_field(v.message) << '\n';
        }
        file_ok = report.pass();
      } catch (const ParseError& e) {
        o << name << ',' << error_code_name(e.code()) << ',' << e.line() << ','
          << csv_field(e.what()) << '\n';
      } catch (const Error& e) {
        o << name << ',' << error_code_name(e.code()) << ",0," << csv_field(e.what()) << '\n';
      }
      failed += file_ok ? 0 : 1;
    }
    o << "# " << files.size() << " checked, " << failed << " failed\n";
    return {o.str(), failed == 0};
  }
};

struct SynthCmd {
  std::vector<std::string> specs;
  std::string output, out_dir;
  DelimiterFlags delims;

  static std::string one(const std::string& path, const CotDelimiters& d) {
    const auto s = load_stream_spec(path);
    const auto stream = s.build();
    auto answers = s.answers;
    if (answers.empty()) {
      for (int j = 1; j <= stream.question_count(); ++j) answers.push_back("answer " + std::to_string(j));
    }
    return synthesize_skeleton(stream, answers, d);
  }

  std::string run(std::ostream& err) const {
    if (out_dir.empty()) {
      if (specs.size() != 1) {
        throw CLI::ValidationError("synth-cot", "several specs need --out-dir");
      }
      return one(specs.front(), delims.d);
    }
    std::filesystem::create_directories(out_dir);
    for (const auto& p : specs) {
      const auto target =
          (std::filesystem::path(out_dir) / std::filesystem::path(p).stem()).string() + ".cot.txt";
      emit(one(p, delims.d), target, err);
    }
    return {};
  }
};

// ---- segment ---------------------------------------------------------------

struct SegmentCmd {
  double duration = 0.0;
  std::vector<double> questions;
  double max_seg = 60.0;
  double chunk = 30.0;
  std::optional<std::int64_t> frame_cap;
  std::int64_t grid_h = 2;
  std::int64_t grid_w = 2;
  int question_len = 4;
  std::string output, spec_out;

  std::string run() const {
    const auto segs = segment_by_questions(duration, questions, max_seg, chunk);
    const auto plan = plan_sampling(duration, frame_cap);
    std::ostringstream o;
    o << "index,start_s,end_s,frames\n";
    for (std::size_t i = 0; i < segs.size(); ++i) {
      o << i + 1 << ',' << fmt_g(segs[i].start_s) << ',' << fmt_g(segs[i].end_s) << ','
        << plan.frames_in(segs[i]) << '\n';
    }
    o << "\nfps_num,fps_den,frame_cap,total_frames\n"
      << plan.fps_num << ',' << plan.fps_den << ','
      << (plan.max_frames ? std::to_string(*plan.max_frames) : "none") << ','
      << plan.total_frames() << '\n';
    if (!spec_out.empty()) {
      StreamSpec spec;
      spec.units = interleave_timeline(segs, questions, plan, grid_h, grid_w, question_len);
      build_stream(spec.units);
      emit(dump_stream_spec(spec), spec_out, o);
    }
    return o.str();
  }
};

CLI::App* add_sub(CLI::App& app, const std::string& name, const std::string& help) {
  return app.add_subcommand(name, help);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming video reasoning toolkit: masks, positions, toy engine, "
               "schedules, latency model and CoT format tools",
               "streamthink"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file with option values; flags take precedence");
  app.fallthrough();
  app.require_subcommand(1);

  MaskCmd mask;
  auto* s_mask = add_sub(app, "mask", "Dump the unit- or token-level attention mask as PBM");
  s_mask->add_option("spec", mask.spec, "Stream spec (JSON)")->required()->check(CLI::ExistingFile);
  s_mask->add_option("--level", mask.level, "unit or token")
      ->check(CLI::IsMember({"unit", "token"}))->capture_default_str();
  s_mask->add_option("--within", mask.within, "Attention inside received units")
      ->check(CLI::IsMember({"causal", "full"}))->capture_default_str();
  s_mask->add_option("--gen-lens", mask.gen_lens, "Generated lengths, comma separated")
      ->delimiter(',');
  s_mask->add_option("-o,--output", mask.output, "Output file (default stdout)");

  OffsetsCmd offsets;
  auto* s_off = add_sub(app, "offsets", "Print base offsets of received and generated units");
  s_off->add_option("spec", offsets.spec, "Stream spec (JSON)")->required()->check(CLI::ExistingFile);
  s_off->add_option("--gen-lens", offsets.gen_lens, "Generated lengths, comma separated")
      ->delimiter(',');
  s_off->add_option("-o,--output", offsets.output, "Output file (default stdout)");

  RunCmd runc;
  auto* s_run = add_sub(app, "run", "Run the toy engine over a stream and print logit digests");
  s_run->add_option("spec", runc.spec, "Stream spec (JSON)")->required()->check(CLI::ExistingFile);
  s_run->add_option("--within", runc.within, "Attention inside received units")
      ->check(CLI::IsMember({"causal", "full"}))->capture_default_str();
  s_run->add_option("--gen-lens", runc.gen_lens, "Generated lengths, comma separated")
      ->delimiter(',');
  s_run->add_option("--gen-len", runc.gen_len, "Generated length when none are given")
      ->capture_default_str();
  runc.engine.add(s_run);
  s_run->add_option("-o,--output", runc.output, "Output file (default stdout)");

  PipelineCmd pipe;
  auto* s_pipe = add_sub(app, "pipeline", "Schedule a stream and report events and TTFT");
  s_pipe->add_option("spec", pipe.spec, "Stream spec (JSON)")->required()->check(CLI::ExistingFile);
  s_pipe->add_option("--mode", pipe.mode, "interleaved, decoupled, batch or all")
      ->check(CLI::IsMember({"interleaved", "decoupled", "batch", "all"}))->capture_default_str();
  s_pipe->add_option("--within", pipe.within, "Attention inside received units")
      ->check(CLI::IsMember({"causal", "full"}))->capture_default_str();
  s_pipe->add_option("--note-len", pipe.note_len, "Tokens per memory note")->capture_default_str();
  s_pipe->add_option("--answer-len", pipe.answer_len, "Tokens per answer")->capture_default_str();
  s_pipe->add_option("--answer-lens", pipe.answer_lens, "Per-turn answer lengths")->delimiter(',');
  s_pipe->add_option("--rationale-len", pipe.rationale_len, "Rationale tokens before each answer")
      ->capture_default_str();
  s_pipe->add_flag("--realtime", pipe.realtime, "Segments arrive as they stream in");
  s_pipe->add_option("--ticks-per-token", pipe.ticks_per_token, "Arrival ticks per visual token")
      ->capture_default_str();
  s_pipe->add_flag("--concurrent", pipe.concurrent, "Ingest and decode on two threads");
  pipe.engine.add(s_pipe);
  s_pipe->add_option("-o,--output", pipe.output, "Output file (default stdout)");

  SimulateCmd sim;
  auto* s_sim = add_sub(app, "simulate", "Simulate ingestion backlog under decode pauses");
  s_sim->add_option("--lambda", sim.cfg.lambda, "Arrival rate, segments/s")->capture_default_str();
  s_sim->add_option("--mu", sim.cfg.mu, "Processing rate, segments/s")->capture_default_str();
  s_sim->add_option("--t-dec", sim.cfg.t_dec, "Decode pause, s")->capture_default_str();
  s_sim->add_option("--c-tok", sim.cfg.c_tok, "Seconds per output token")->capture_default_str();
  s_sim->add_option("--l-tokens", sim.cfg.l_tokens, "Output tokens per decode")->capture_default_str();
  s_sim->add_option("--mode", sim.mode, "interleaved or decoupled")
      ->check(CLI::IsMember({"interleaved", "decoupled"}))->capture_default_str();
  s_sim->add_option("--period", sim.cfg.decode_period, "Seconds between decode windows (0 = auto)")
      ->capture_default_str();
  s_sim->add_option("--first-decode", sim.cfg.first_decode_at, "Start of the first window, s")
      ->capture_default_str();
  s_sim->add_option("--overhead", sim.cfg.overhead, "Decoupled stall per window, s")
      ->capture_default_str();
  s_sim->add_option("--granularity", sim.cfg.granularity, "Arrival chunks per segment")
      ->capture_default_str();
  s_sim->add_option("--arrivals", sim.arrivals, "deterministic or poisson")
      ->check(CLI::IsMember({"deterministic", "poisson"}))->capture_default_str();
  s_sim->add_option("--seed", sim.cfg.seed, "Seed for Poisson arrivals")->capture_default_str();
  s_sim->add_option("--horizon", sim.horizon, "Simulated seconds (0 = cycles * period)")
      ->capture_default_str();
  s_sim->add_option("--cycles", sim.cycles, "Decode cycles when --horizon is 0")->capture_default_str();
  s_sim->add_option("--dt", sim.dt, "Sample interval, s")->capture_default_str();
  s_sim->add_flag("--summary-only", sim.summary_only, "Skip the sampled trace");
  s_sim->add_option("-o,--output", sim.output, "Output file (default stdout)");

  ValidateCmd val;
  auto* s_val = add_sub(app, "validate-cot", "Check CoT documents; exits 1 on any violation");
  s_val->add_option("files", val.files, "Documents")->required();
  s_val->add_flag("--reduced", val.reduced, "Accept segment headers without the end marker");
  val.delims.add(s_val);
  s_val->add_option("-o,--output", val.output, "Report file (default stdout)");

  SynthCmd syn;
  auto* s_syn = add_sub(app, "synth-cot", "Write skeleton CoT documents for stream specs");
  s_syn->add_option("specs", syn.specs, "Stream specs (JSON)")->required()->check(CLI::ExistingFile);
  s_syn->add_option("--out-dir", syn.out_dir, "Directory for <spec>.cot.txt files");
  syn.delims.add(s_syn);
  s_syn->add_option("-o,--output", syn.output, "Output file for a single spec (default stdout)");

  SegmentCmd seg;
  auto* s_seg = add_sub(app, "segment", "Split a video at question times and plan frame sampling");
  s_seg->add_option("--duration", seg.duration, "Video length, s")->required();
  s_seg->add_option("--questions", seg.questions, "Question times, s")->delimiter(',');
  s_seg->add_option("--max-seg", seg.max_seg, "Longest unsplit interval, s")->capture_default_str();
  s_seg->add_option("--chunk", seg.chunk, "Chunk length for long intervals, s")->capture_default_str();
  s_seg->add_option("--frame-cap", seg.frame_cap, "Frame budget for the whole video");
  s_seg->add_option("--grid-h", seg.grid_h, "Patch rows per frame")->capture_default_str();
  s_seg->add_option("--grid-w", seg.grid_w, "Patch columns per frame")->capture_default_str();
  s_seg->add_option("--question-len", seg.question_len, "Tokens per question")->capture_default_str();
  s_seg->add_option("--spec-out", seg.spec_out, "Also write the interleaved stream spec here");
  s_seg->add_option("-o,--output", seg.output, "Output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (s_mask->parsed()) {
      emit(mask.run(), mask.output, out);
    } else if (s_off->parsed()) {
      emit(offsets.run(), offsets.output, out);
    } else if (s_run->parsed()) {
      emit(runc.run(), runc.output, out);
    } else if (s_pipe->parsed()) {
      emit(pipe.run(), pipe.output, out);
    } else if (s_sim->parsed()) {
      emit(sim.run(), sim.output, out);
    } else if (s_val->parsed()) {
      const auto [text, ok] = val.run();
      emit(text, val.output, out);
      return ok ? kExitOk : kExitCheckFailed;
    } else if (s_syn->parsed()) {
      const auto text = syn.run(err);
      if (syn.out_dir.empty()) emit(text, syn.output, out);
    } else if (s_seg->parsed()) {
      emit(seg.run(), seg.output, out);
    }
  } catch (const CLI::ParseError& e) {
    err << "error: code=Usage message=" << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: code=" << error_code_name(e.code()) << " message=" << e.what() << '\n';
    return kErrorBase + static_cast<int>(e.code());
  } catch (const std::exception& e) {
    err << "error: code=Internal message=" << e.what() << '\n';
    return kErrorBase - 1;
  }
  return kExitOk;
}

}  // namespace streamthink::cli
