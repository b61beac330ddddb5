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

#include "streamthink/cot_format.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>
#include <regex>
#include <set>

#include "streamthink/error.h"

namespace streamthink {

namespace {

constexpr std::string_view kSpace = " \t\r";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

int first_column(std::string_view s) {
  const auto b = s.find_first_not_of(kSpace);
  return b == std::string_view::npos ? 1 : static_cast<int>(b) + 1;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto p = s.find(sep, start);
    out.push_back(trim(s.substr(start, p == std::string_view::npos ? p : p - start)));
    if (p == std::string_view::npos) return out;
    start = p + 1;
  }
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && kSpace.find(s[i]) != std::string_view::npos) ++i;
    const auto b = i;
    while (i < s.size() && kSpace.find(s[i]) == std::string_view::npos) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

enum class HeaderKind { kSegmentInput, kQuestionInput, kSegmentThought, kQaThought };

struct Header {
  HeaderKind kind;
  int index = 0;
  std::vector<std::string> attributes;
  std::string_view trailing;
};

constexpr std::array<std::string_view, 2> kQuestionLabels{"Question", "Reference Answer"};
constexpr std::array<std::string_view, 3> kThoughtLabels{
    "Focus", "Evidence from this segment", "State update"};
constexpr std::array<std::string_view, 2> kQaLabels{"Reasoning", "Answer"};

class Parser {
 public:
  Parser(std::string_view text, const CotParseOptions& options)
      : lines_(split_lines(text)), options_(options) {}

  CotDocument run() {
    while (next_nonblank()) {
      const int header_line = static_cast<int>(pos_) + 1;
      const Header h = parse_header(lines_[pos_++], header_line);
      switch (h.kind) {
        case HeaderKind::kSegmentInput: segment_input(h, header_line); break;
        case HeaderKind::kQuestionInput: question_input(h, header_line); break;
        case HeaderKind::kSegmentThought: segment_thought(h, header_line); break;
        case HeaderKind::kQaThought: qa_thought(h, header_line); break;
      }
    }
    return std::move(doc_);
  }

 private:
  [[noreturn]] void fail(ErrorCode code, int line, int col, const std::string& msg) {
    throw ParseError(code, line, col, msg);
  }

  bool next_nonblank() {
    while (pos_ < lines_.size() && trim(lines_[pos_]).empty()) ++pos_;
    return pos_ < lines_.size();
  }

  bool is_delimiter(std::string_view t) const {
    const auto& d = options_.delimiters;
    return t == d.segment_end || t == d.question_end || t == d.thought_end;
  }

  Header parse_header(std::string_view raw, int line) {
    const std::string_view t = trim(raw);
    const int col = first_column(raw);
    if (t.empty() || t.front() != '[') {
      fail(ErrorCode::kSyntaxError, line, col, "expected a unit header");
    }
    const auto close = t.find(']');
    if (close == std::string_view::npos) {
      fail(ErrorCode::kSyntaxError, line, col + static_cast<int>(t.size()),
           "header is missing ']'");
    }
    const auto parts = split(t.substr(1, close - 1), '|');
    const auto head = words(parts.front());
    Header h;
    h.trailing = trim(t.substr(close + 1));
    if (head.empty() || (head[0] != "SEG" && head[0] != "Q")) {
      fail(ErrorCode::kUnknownHeader, line, col + 1,
           "unknown header '" + std::string(parts.front()) + "'");
    }
    const bool segment = head[0] == "SEG";
    const bool think = head.size() == 3 && head[2] == "THINK";
    if (head.size() < 2 || (head.size() == 3 && !think) || head.size() > 3) {
      fail(ErrorCode::kUnknownHeader, line, col + 1,
           "unknown header '" + std::string(parts.front()) + "'");
    }
    const auto idx = head[1];
    const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), h.index);
    if (ec != std::errc() || ptr != idx.data() + idx.size() || h.index < 1) {
      fail(ErrorCode::kSyntaxError, line, col + 1,
           "bad unit index '" + std::string(idx) + "'");
    }
    for (std::size_t i = 1; i < parts.size(); ++i) h.attributes.emplace_back(parts[i]);
    if (think) {
      if (!h.attributes.empty() || !h.trailing.empty()) {
        fail(ErrorCode::kSyntaxError, line, col, "THINK headers take no attributes");
      }
      h.kind = segment ? HeaderKind::kSegmentThought : HeaderKind::kQaThought;
      outputs_started_ = true;
    } else {
      if (outputs_started_) {
        fail(ErrorCode::kSyntaxError, line, col, "input unit after output chunks");
      }
      h.kind = segment ? HeaderKind::kSegmentInput : HeaderKind::kQuestionInput;
    }
    return h;
  }

  void segment_input(const Header& h, int line) {
    const auto& end = options_.delimiters.segment_end;
    if (h.trailing == end) {
      doc_.inputs.emplace_back(SegmentInput{h.index, h.attributes});
      return;
    }
    if (!h.trailing.empty()) {
      fail(ErrorCode::kSyntaxError, line, 1,
           "unexpected text after segment header: '" + std::string(h.trailing) + "'");
    }
    if (next_nonblank() && trim(lines_[pos_]) == end) {
      ++pos_;
    } else if (options_.profile == DelimiterProfile::kStrict) {
      fail(ErrorCode::kUnterminatedUnit, line, 1,
           "segment " + std::to_string(h.index) + " is missing " + end);
    }
    doc_.inputs.emplace_back(SegmentInput{h.index, h.attributes});
  }

  template <std::size_t N>
  std::array<std::optional<std::string>, N> read_fields(
      const std::array<std::string_view, N>& labels,
      const std::string& terminator,
      int header_line) {
    std::array<std::optional<std::string>, N> values;
    int current = -1;
    for (;;) {
      if (pos_ >= lines_.size()) {
        fail(ErrorCode::kUnterminatedUnit, header_line, 1,
             "unit is missing " + terminator + " before end of input");
      }
      const std::string_view raw = lines_[pos_];
      const int line = static_cast<int>(pos_) + 1;
      const std::string_view t = trim(raw);
      ++pos_;
      if (t.empty()) continue;
      if (t == terminator) return values;
      if (t.front() == '[') {
        fail(ErrorCode::kUnterminatedUnit, header_line, 1,
             "unit is missing " + terminator + " before line " + std::to_string(line));
      }
      if (is_delimiter(t)) {
        fail(ErrorCode::kSyntaxError, line, first_column(raw),
             "unexpected delimiter " + std::string(t));
      }
      bool labelled = false;
      for (std::size_t i = 0; i < N; ++i) {
        const auto label = labels[i];
        if (t.size() > label.size() && t.substr(0, label.size()) == label &&
            t[label.size()] == ':') {
          if (values[i]) {
            fail(ErrorCode::kSyntaxError, line, first_column(raw),
                 "duplicate field '" + std::string(label) + "'");
          }
          values[i] = std::string(trim(t.substr(label.size() + 1)));
          current = static_cast<int>(i);
          labelled = true;
          break;
        }
      }
      if (labelled) continue;
      if (current < 0) {
        fail(ErrorCode::kSyntaxError, line, first_column(raw),
             "text before the first field");
      }
      auto& v = *values[static_cast<std::size_t>(current)];
      if (!v.empty()) v += '\n';
      v += t;
    }
  }

  void question_input(const Header& h, int line) {
    if (!h.trailing.empty()) {
      fail(ErrorCode::kSyntaxError, line, 1, "unexpected text after question header");
    }
    auto f = read_fields(kQuestionLabels, options_.delimiters.question_end, line);
    doc_.inputs.emplace_back(
        QuestionInput{h.index, h.attributes, std::move(f[0]), std::move(f[1])});
  }

  void segment_thought(const Header& h, int line) {
    auto f = read_fields(kThoughtLabels, options_.delimiters.thought_end, line);
    doc_.outputs.emplace_back(
        SegmentThought{h.index, std::move(f[0]), std::move(f[1]), std::move(f[2])});
  }

  void qa_thought(const Header& h, int line) {
    auto f = read_fields(kQaLabels, options_.delimiters.question_end, line);
    doc_.outputs.emplace_back(QaThought{h.index, std::move(f[0]), std::move(f[1])});
  }

  std::vector<std::string_view> lines_;
  std::size_t pos_ = 0;
  const CotParseOptions& options_;
  CotDocument doc_;
  bool outputs_started_ = false;
};

void write_header(std::string& out, std::string_view tag, int index,
                  const std::vector<std::string>& attributes) {
  out += '[';
  out += tag;
  out += ' ';
  out += std::to_string(index);
  for (const auto& a : attributes) {
    out += " | ";
    out += a;
  }
  out += ']';
}

void write_field(std::string& out, std::string_view label,
                 const std::optional<std::string>& value) {
  if (!value) return;
  out += label;
  out += ':';
  if (!value->empty()) {
    out += ' ';
    out += *value;
  }
  out += '\n';
}

bool is_segment(const CotInput& in) { return std::holds_alternative<SegmentInput>(in); }
bool is_segment(const CotChunk& c) { return std::holds_alternative<SegmentThought>(c); }

int index_of(const CotInput& in) {
  return std::visit([](const auto& x) { return x.index; }, in);
}
int index_of(const CotChunk& c) {
  return std::visit([](const auto& x) { return x.index; }, c);
}

std::string describe(bool segment, int index) {
  return (segment ? "SEG " : "Q ") + std::to_string(index);
}

bool nonblank(const std::optional<std::string>& s) {
  return s && !trim(*s).empty();
}

std::vector<const std::string*> chunk_texts(const CotChunk& c, bool with_answer) {
  std::vector<const std::string*> out;
  auto add = [&](const std::optional<std::string>& s) {
    if (s) out.push_back(&*s);
  };
  if (const auto* s = std::get_if<SegmentThought>(&c)) {
    add(s->focus);
    add(s->evidence);
    add(s->state_update);
  } else {
    const auto& q = std::get<QaThought>(c);
    add(q.reasoning);
    if (with_answer) add(q.answer);
  }
  return out;
}

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::optional<std::string> header_attribute(const std::vector<std::string>& attributes,
                                            std::string_view key) {
  for (const auto& a : attributes) {
    const auto eq = a.find('=');
    if (eq != std::string::npos && trim(std::string_view(a).substr(0, eq)) == key) {
      return std::string(trim(std::string_view(a).substr(eq + 1)));
    }
  }
  return std::nullopt;
}

CotDocument parse_cot(std::string_view text, const CotParseOptions& options) {
  return Parser(text, options).run();
}

std::string serialize_cot(const CotDocument& doc, const CotDelimiters& delimiters) {
  std::string out;
  for (const auto& in : doc.inputs) {
    if (const auto* s = std::get_if<SegmentInput>(&in)) {
      write_header(out, "SEG", s->index, s->attributes);
      out += ' ';
      out += delimiters.segment_end;
      out += '\n';
    } else {
      const auto& q = std::get<QuestionInput>(in);
      write_header(out, "Q", q.index, q.attributes);
      out += '\n';
      write_field(out, kQuestionLabels[0], q.question);
      write_field(out, kQuestionLabels[1], q.reference_answer);
      out += delimiters.question_end;
      out += '\n';
    }
  }
  for (const auto& c : doc.outputs) {
    if (!out.empty()) out += '\n';
    if (const auto* s = std::get_if<SegmentThought>(&c)) {
      out += "[SEG " + std::to_string(s->index) + " THINK]\n";
      write_field(out, kThoughtLabels[0], s->focus);
      write_field(out, kThoughtLabels[1], s->evidence);
      write_field(out, kThoughtLabels[2], s->state_update);
      out += delimiters.thought_end;
    } else {
      const auto& q = std::get<QaThought>(c);
      out += "[Q " + std::to_string(q.index) + " THINK]\n";
      write_field(out, kQaLabels[0], q.reasoning);
      write_field(out, kQaLabels[1], q.answer);
      out += delimiters.question_end;
    }
    out += '\n';
  }
  return out;
}

bool ValidationReport::has(std::string_view constraint) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.constraint == constraint; });
}

bool ValidationReport::has(std::string_view constraint, int unit) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) {
    return v.constraint == constraint && v.unit == unit;
  });
}

const std::vector<ConstraintCoverage>& constraint_coverage() {
  static const std::vector<ConstraintCoverage> kCoverage{
      {'A', CheckLevel::kChecked},          {'B', CheckLevel::kChecked},
      {'C', CheckLevel::kStructuralSubset}, {'D', CheckLevel::kStructuralSubset},
      {'E', CheckLevel::kNotCheckable},     {'F', CheckLevel::kNotCheckable},
      {'G', CheckLevel::kStructuralSubset},
  };
  return kCoverage;
}

std::string_view check_level_name(CheckLevel level) {
  switch (level) {
    case CheckLevel::kChecked: return "checked";
    case CheckLevel::kStructuralSubset: return "structural subset";
    case CheckLevel::kNotCheckable: return "not checkable";
  }
  return "unknown";
}

ValidationReport validate_cot(const CotDocument& doc) {
  ValidationReport report;
  auto add = [&](std::string id, int unit, std::string msg) {
    report.violations.push_back({std::move(id), unit, std::move(msg)});
  };
  const auto& in = doc.inputs;
  const auto& out = doc.outputs;

  // Input numbering: segments and questions each count up from 1.
  {
    int s = 0, q = 0;
    for (std::size_t p = 0; p < in.size(); ++p) {
      const int expect = is_segment(in[p]) ? ++s : ++q;
      if (index_of(in[p]) != expect) {
        add("structure", static_cast<int>(p) + 1,
            "input " + describe(is_segment(in[p]), index_of(in[p])) + " should be " +
                describe(is_segment(in[p]), expect));
      }
    }
  }

  // A
  if (in.size() != out.size()) {
    add("A", static_cast<int>(std::min(in.size(), out.size())) + 1,
        std::to_string(out.size()) + " output chunks for " + std::to_string(in.size()) +
            " input units");
  }
  for (std::size_t p = 0; p < std::min(in.size(), out.size()); ++p) {
    if (is_segment(in[p]) != is_segment(out[p]) || index_of(in[p]) != index_of(out[p])) {
      add("A", static_cast<int>(p) + 1,
          "chunk " + describe(is_segment(out[p]), index_of(out[p])) + " does not match input " +
              describe(is_segment(in[p]), index_of(in[p])));
    }
  }

  // B
  for (std::size_t p = 0; p < out.size(); ++p) {
    if (const auto* s = std::get_if<SegmentThought>(&out[p])) {
      if (!nonblank(s->evidence)) add("B", static_cast<int>(p) + 1, "empty Evidence");
      if (!nonblank(s->state_update)) add("B", static_cast<int>(p) + 1, "empty State update");
    }
  }

  // C: references to segments or questions that have not arrived yet.
  static const std::regex kSegRef(R"(\bSEG\s*(\d+))");
  static const std::regex kQRef(R"(\bQ\s*(\d+)\b)");
  {
    int segs = 0, questions = 0;
    for (std::size_t p = 0; p < out.size(); ++p) {
      if (p < in.size()) (is_segment(in[p]) ? segs : questions) += 1;
      for (const auto* text : chunk_texts(out[p], false)) {
        for (std::sregex_iterator it(text->begin(), text->end(), kSegRef), end; it != end; ++it) {
          const int k = std::stoi((*it)[1].str());
          if (k > segs) {
            add("C", static_cast<int>(p) + 1,
                "references SEG " + std::to_string(k) + " before it arrives");
          }
        }
        for (std::sregex_iterator it(text->begin(), text->end(), kQRef), end; it != end; ++it) {
          const int j = std::stoi((*it)[1].str());
          if (j > questions) {
            add("C", static_cast<int>(p) + 1,
                "references Q " + std::to_string(j) + " before it arrives");
          }
        }
      }
    }
  }

  // D
  for (const auto& unit : in) {
    const auto* q = std::get_if<QuestionInput>(&unit);
    if (!q) continue;
    const std::string ref(q->reference_answer ? trim(*q->reference_answer) : "");
    for (std::size_t p = 0; p < out.size(); ++p) {
      if (const auto* qa = std::get_if<QaThought>(&out[p])) {
        if (qa->index != q->index) continue;
        if (!ref.empty() && qa->reasoning && qa->reasoning->find(ref) != std::string::npos) {
          add("D", static_cast<int>(p) + 1,
              "Reasoning reveals the reference answer of Q " + std::to_string(q->index));
        }
        if (!qa->answer || trim(*qa->answer) != ref) {
          add("D", static_cast<int>(p) + 1,
              "Answer differs from the reference answer of Q " + std::to_string(q->index));
        }
      } else if (!ref.empty()) {
        for (const auto* text : chunk_texts(out[p], false)) {
          if (text->find(ref) != std::string::npos) {
            add("D", static_cast<int>(p) + 1,
                "segment reasoning reveals the reference answer of Q " +
                    std::to_string(q->index));
            break;
          }
        }
      }
    }
  }

  // G
  {
    std::set<int> arrived, answered;
    for (std::size_t p = 0; p < out.size(); ++p) {
      if (p < in.size() && !is_segment(in[p])) arrived.insert(index_of(in[p]));
      if (const auto* s = std::get_if<SegmentThought>(&out[p])) {
        const bool pending = std::any_of(arrived.begin(), arrived.end(),
                                         [&](int j) { return !answered.count(j); });
        if (pending && !nonblank(s->focus)) {
          add("G", static_cast<int>(p) + 1, "empty Focus while a question is unanswered");
        }
      } else {
        const auto& qa = std::get<QaThought>(out[p]);
        if (nonblank(qa.answer)) answered.insert(qa.index);
      }
    }
  }
  return report;
}

namespace {

// Placeholder text that cannot contain any of the reference answers.
class SafeText {
 public:
  explicit SafeText(const std::vector<std::string>& answers) {
    for (const auto& a : answers) {
      const auto t = trim(a);
      if (!t.empty()) answers_.emplace_back(t);
    }
  }

  std::string operator()(std::string candidate) const {
    if (clean(candidate)) return candidate;
    for (char c = 'a'; c <= 'z'; ++c) {
      if (unused(c)) return std::string(8, c);
    }
    for (char c = '!'; c <= '~'; ++c) {
      if (unused(c) && c != '[') return std::string(8, c);
    }
    throw Error(ErrorCode::kInvalidSpec,
                "answers use every printable character; no placeholder is possible");
  }

 private:
  bool clean(const std::string& text) const {
    return std::none_of(answers_.begin(), answers_.end(), [&](const std::string& a) {
      return text.find(a) != std::string::npos;
    });
  }
  bool unused(char c) const {
    return std::none_of(answers_.begin(), answers_.end(), [&](const std::string& a) {
      return a.find(c) != std::string::npos;
    });
  }

  std::vector<std::string> answers_;
};

}  // namespace

CotDocument synthesize_document(const UnitStream& stream,
                                const std::vector<std::string>& answers) {
  if (static_cast<int>(answers.size()) != stream.question_count()) {
    throw Error(ErrorCode::kLengthMismatch,
                "need one reference answer per question, got " +
                    std::to_string(answers.size()));
  }
  const SafeText safe(answers);
  CotDocument doc;
  int seg = 0, q = 0;
  std::optional<double> latest_end;
  for (const auto& unit : stream.received) {
    if (unit.is_segment()) {
      ++seg;
      std::vector<std::string> attrs;
      if (unit.wall_time) {
        attrs.push_back("time = " + format_g(unit.wall_time->start_s) + "-" +
                        format_g(unit.wall_time->end_s));
        latest_end = unit.wall_time->end_s;
      }
      attrs.push_back("frames = " + std::to_string(unit.grid.t_len));
      doc.inputs.emplace_back(SegmentInput{seg, std::move(attrs)});
      const std::string focus =
          q == 0 ? "video understanding (no question yet)"
                 : "follow-up evidence after Q " + std::to_string(q);
      doc.outputs.emplace_back(SegmentThought{
          seg, safe(focus),
          safe("Observed content of segment " + std::to_string(seg) + " is summarized here."),
          safe("Tracked state is carried forward through segment " + std::to_string(seg) +
               ".")});
    } else {
      ++q;
      std::vector<std::string> attrs;
      if (latest_end) attrs.push_back("t = " + format_g(*latest_end));
      const std::string ref(trim(answers[static_cast<std::size_t>(q - 1)]));
      doc.inputs.emplace_back(QuestionInput{
          q, std::move(attrs),
          "placeholder question " + std::to_string(q) + " (" +
              std::to_string(unit.text.size()) + " tokens)",
          ref});
      doc.outputs.emplace_back(QaThought{
          q,
          safe("Evidence from segments 1 to " + std::to_string(seg) +
               " supports the final answer."),
          ref});
    }
  }
  return doc;
}

std::string synthesize_skeleton(const UnitStream& stream,
                                const std::vector<std::string>& answers,
                                const CotDelimiters& delimiters) {
  return serialize_cot(synthesize_document(stream, answers), delimiters);
}

}  // namespace streamthink
