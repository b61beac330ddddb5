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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "streamthink/cot_format.h"
#include "streamthink/engine.h"
#include "streamthink/error.h"
#include "streamthink/latency_model.h"
#include "streamthink/pipeline.h"
#include "streamthink/seg_mask.h"
#include "streamthink/stream_rope.h"
#include "streamthink/stream_spec.h"

namespace py = pybind11;
using namespace streamthink;

namespace {

std::vector<std::vector<bool>> to_rows(std::span<const std::uint8_t> bits, int rows, int cols) {
  std::vector<std::vector<bool>> out(static_cast<std::size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      out[static_cast<std::size_t>(r)].push_back(bits[static_cast<std::size_t>(r * cols + c)] != 0);
    }
  }
  return out;
}

std::vector<std::vector<double>> to_lists(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto row = m.row(r);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

WithinReceived within_from(const std::string& name) {
  if (name == "causal") return WithinReceived::kCausal;
  if (name == "full") return WithinReceived::kFull;
  throw py::value_error("within must be 'causal' or 'full'");
}

PipelineMode mode_from(const std::string& name) {
  if (name == "interleaved") return PipelineMode::kInterleaved;
  if (name == "decoupled") return PipelineMode::kDecoupled;
  if (name == "batch") return PipelineMode::kBatch;
  throw py::value_error("mode must be 'interleaved', 'decoupled' or 'batch'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Streaming video reasoning primitives";

  py::exception<Error>(m, "StreamThinkError");
  // Raised instances carry the error code name as `.code`.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object type = py::module_::import("streamthink._core").attr("StreamThinkError");
      const std::string code(error_code_name(e.code()));
      py::object exc = type(code + ": " + e.what());
      exc.attr("code") = code;
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  py::class_<UnitStream>(m, "UnitStream")
      .def("__len__", &UnitStream::size)
      .def_property_readonly("segment_count", &UnitStream::segment_count)
      .def_property_readonly("question_count", &UnitStream::question_count)
      .def("kinds", [](const UnitStream& s) {
        std::vector<std::string> out;
        for (const auto& u : s.received) out.push_back(u.is_segment() ? "segment" : "question");
        return out;
      })
      .def("token_counts", [](const UnitStream& s) {
        std::vector<std::int64_t> out;
        for (const auto& u : s.received) out.push_back(u.token_count());
        return out;
      })
      .def("latest_segments", [](const UnitStream& s) {
        std::vector<int> out;
        for (const auto& t : s.turns) out.push_back(t.latest_segment);
        return out;
      });

  m.def("stream_from_json", [](const std::string& text) { return parse_stream_spec(text).build(); },
        py::arg("spec_json"), "Build a stream from stream spec JSON text.");

  m.def("unit_mask", [](const UnitStream& s) {
    const int n = 2 * s.size();
    const auto bits = build_seg_mask(s).dense();
    return to_rows(bits, n, n);
  }, py::arg("stream"), "Unit-level mask over R_1..R_U, C_1..C_U.");

  m.def("token_mask", [](const UnitStream& s, const std::vector<int>& lens, const std::string& within) {
    const auto tm = expand_token_mask(build_seg_mask(s), s, within_from(within), lens);
    std::vector<std::uint8_t> bits;
    for (int q = 0; q < tm.q_len(); ++q) {
      const auto row = tm.row(q);
      bits.insert(bits.end(), row.begin(), row.end());
    }
    return to_rows(bits, tm.q_len(), tm.k_len());
  }, py::arg("stream"), py::arg("generated_lens"), py::arg("within") = "causal");

  m.def("classify_attention", [](std::int64_t q, std::int64_t k, bool dense_causal) {
    return std::string(backend_class_name(classify_attention(q, k, dense_causal)));
  }, py::arg("q_len"), py::arg("k_len"), py::arg("dense_causal"));

  m.def("compute_offsets", [](const UnitStream& s, const std::vector<int>& lens) {
    const auto t = compute_offsets(s, lens);
    py::dict d;
    d["segment"] = t.seg_offsets;
    d["question"] = t.question_offsets;
    d["generated"] = t.gen_offsets;
    d["by_unit"] = t.unit_offsets;
    d["input_budget"] = t.input_budget;
    return d;
  }, py::arg("stream"), py::arg("generated_lens"));

  py::class_<EngineConfig>(m, "EngineConfig")
      .def(py::init<>())
      .def_readwrite("n_layers", &EngineConfig::n_layers)
      .def_readwrite("n_heads", &EngineConfig::n_heads)
      .def_readwrite("head_dim", &EngineConfig::head_dim)
      .def_readwrite("vocab_size", &EngineConfig::vocab_size)
      .def_readwrite("seed", &EngineConfig::seed);

  py::class_<Engine>(m, "Engine")
      .def(py::init<EngineConfig>(), py::arg("config"))
      .def("forward_monolithic",
           [](const Engine& e, const UnitStream& s, const std::vector<std::vector<TokenId>>& gen,
              const std::string& within) {
             return to_lists(e.forward_monolithic(s, gen, within_from(within)).logits);
           },
           py::arg("stream"), py::arg("generated_tokens"), py::arg("within") = "causal",
           "Per-token logits over the whole stream in one pass.")
      .def("run_pipeline",
           [](const Engine& e, const UnitStream& s, const std::string& mode, int note_len,
              const std::vector<int>& answer_lens,
              std::optional<std::vector<std::vector<TokenId>>> teacher, bool concurrent) {
             PipelineOptions opts;
             opts.teacher_tokens = std::move(teacher);
             opts.concurrent = concurrent;
             const auto r = run_pipeline(e, s, mode_from(mode), note_len, answer_lens, opts);
             py::dict d;
             std::vector<std::vector<TokenId>> notes, answers;
             for (const auto& n : r.bank.notes()) notes.push_back(n.tokens);
             for (const auto& a : r.answers) answers.push_back(a.tokens);
             std::vector<std::vector<std::vector<double>>> logits;
             for (const auto& l : r.generated_logits) logits.push_back(to_lists(l));
             d["notes"] = notes;
             d["answers"] = answers;
             d["ttft"] = ttft_all(r.events);
             d["generated_logits"] = logits;
             return d;
           },
           py::arg("stream"), py::arg("mode"), py::arg("note_len"), py::arg("answer_lens"),
           py::arg("teacher_tokens") = py::none(), py::arg("concurrent") = false);

  m.def("plan_schedule",
        [](const UnitStream& s, const std::string& mode, const std::vector<int>& lens,
           const std::vector<std::int64_t>& arrivals, const std::vector<int>& rationale) {
          std::vector<std::tuple<std::string, int, std::int64_t>> out;
          for (const auto& ev : plan_schedule(s, mode_from(mode), lens, arrivals, rationale)) {
            out.emplace_back(std::string(event_kind_name(ev.kind)), ev.unit_index, ev.clock);
          }
          return out;
        },
        py::arg("stream"), py::arg("mode"), py::arg("generated_lens"),
        py::arg("arrival_clocks") = std::vector<std::int64_t>{},
        py::arg("rationale_lens") = std::vector<int>{});

  m.def("ttft_all", [](const UnitStream& s, const std::string& mode, const std::vector<int>& lens,
                       const std::vector<std::int64_t>& arrivals) {
    return ttft_all(plan_schedule(s, mode_from(mode), lens, arrivals));
  }, py::arg("stream"), py::arg("mode"), py::arg("generated_lens"),
     py::arg("arrival_clocks") = std::vector<std::int64_t>{});

  py::class_<RateConfig>(m, "RateConfig")
      .def(py::init([](double lambda, double mu, double t_dec, double c_tok, double l_tokens) {
             RateConfig c;
             c.lambda = lambda;
             c.mu = mu;
             c.t_dec = t_dec;
             c.c_tok = c_tok;
             c.l_tokens = l_tokens;
             return c;
           }),
           py::arg("lam"), py::arg("mu"), py::arg("t_dec"), py::arg("c_tok") = 0.0,
           py::arg("l_tokens") = 0.0)
      .def_readwrite("decode_period", &RateConfig::decode_period)
      .def_readwrite("first_decode_at", &RateConfig::first_decode_at)
      .def_readwrite("overhead", &RateConfig::overhead)
      .def_readwrite("granularity", &RateConfig::granularity)
      .def_property_readonly("rho", &RateConfig::rho);

  m.def("backlog_closed_form", &backlog_closed_form, py::arg("config"));
  m.def("catch_up_closed_form", [](const RateConfig& c) -> std::optional<double> {
    const auto r = catch_up_closed_form(c);
    if (r.divergent) return std::nullopt;
    return r.seconds;
  }, py::arg("config"), "Seconds to drain the backlog, or None when divergent.");
  m.def("quality_coupling", &quality_coupling, py::arg("config"));
  m.def("simulate", [](const RateConfig& c, const std::string& mode, double horizon, double dt) {
    const auto tr = simulate(c, mode == "decoupled" ? LatencyMode::kDecoupled
                                                    : LatencyMode::kInterleaved,
                             horizon, dt);
    std::vector<std::pair<double, double>> samples;
    for (const auto& s : tr.samples) samples.emplace_back(s.time_s, s.backlog);
    py::dict d;
    d["samples"] = samples;
    d["catch_up_s"] = tr.catch_up_s;
    d["cycle_catch_ups"] = tr.cycle_catch_ups;
    return d;
  }, py::arg("config"), py::arg("mode"), py::arg("horizon_s"), py::arg("sample_dt"));

  m.def("validate_cot", [](const std::string& text) {
    std::vector<std::tuple<std::string, int, std::string>> out;
    for (const auto& v : validate_cot(parse_cot(text)).violations) {
      out.emplace_back(v.constraint, v.unit, v.message);
    }
    return out;
  }, py::arg("text"), "Violations as (constraint, unit, message) tuples.");
  m.def("synthesize_skeleton",
        [](const UnitStream& s, const std::vector<std::string>& answers) {
          return synthesize_skeleton(s, answers);
        },
        py::arg("stream"), py::arg("answers"));

  m.def("segment_by_questions",
        [](double duration, const std::vector<double>& qtimes, double max_s, double chunk_s) {
          std::vector<std::pair<double, double>> out;
          for (const auto& s : segment_by_questions(duration, qtimes, max_s, chunk_s)) {
            out.emplace_back(s.start_s, s.end_s);
          }
          return out;
        },
        py::arg("duration_s"), py::arg("question_times_s"), py::arg("max_segment_s") = 60.0,
        py::arg("chunk_s") = 30.0);
  m.def("plan_sampling", [](double duration, std::optional<std::int64_t> cap) {
    const auto p = plan_sampling(duration, cap);
    return std::make_tuple(p.fps(), p.max_frames, p.total_frames());
  }, py::arg("duration_s"), py::arg("frame_cap") = py::none(), "(fps, frame cap, total frames)");
}
