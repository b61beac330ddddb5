# Copyright 2026 The StreamThink Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import pytest

import streamthink as st

SEVEN_UNIT_INTERLEAVED = {
    "units": [
        {"kind": "segment", "grid": [2, 2, 2]},
        {"kind": "question", "len": 3},
        {"kind": "segment", "grid": [2, 2, 2]},
        {"kind": "question", "len": 3},
        {"kind": "segment", "grid": [2, 2, 2]},
        {"kind": "segment", "grid": [2, 2, 2]},
        {"kind": "question", "len": 3},
    ]
}


@pytest.fixture
def stream():
    return st.stream_from_json(json.dumps(SEVEN_UNIT_INTERLEAVED))


def test_stream_shape(stream):
    assert len(stream) == 7
    assert stream.segment_count == 4
    assert stream.question_count == 3
    assert stream.latest_segments() == [1, 2, 4]


def test_first_note_sees_only_first_segment(stream):
    mask = st.unit_mask(stream)
    n = len(stream)
    c1 = mask[n]
    assert [i for i in range(n) if c1[i]] == [0]
    assert c1[n:] == [True] + [False] * (n - 1)


def test_token_mask_dimensions(stream):
    lens = [1] * len(stream)
    rows = st.token_mask(stream, lens)
    total = sum(stream.token_counts()) + sum(lens)
    assert len(rows) == total and all(len(r) == total for r in rows)


def test_offsets_ignore_generated_lengths(stream):
    a = st.compute_offsets(stream, [1] * 7)
    b = st.compute_offsets(stream, [9, 2, 5, 1, 1, 3, 7])
    assert a["segment"] == b["segment"]
    assert a["question"] == b["question"]
    assert b["generated"] == [0, 9, 11, 16, 17, 18, 21]


def test_classify():
    assert st.classify_attention(1, 5, False) == "SingleTokenDecode"
    assert st.classify_attention(4, 4, True) == "DenseCausalPrefill"
    assert st.classify_attention(3, 9, False) == "MaskedChunk"


def test_pipeline_modes_share_logits(stream):
    engine = st.Engine(st.EngineConfig())
    teacher = [[1, 2] if k == "segment" else [3, 4, 5] for k in stream.kinds()]
    runs = {
        mode: engine.run_pipeline(stream, mode, 2, [3, 3, 3], teacher_tokens=teacher)
        for mode in ("interleaved", "decoupled", "batch")
    }
    assert runs["interleaved"]["generated_logits"] == runs["batch"]["generated_logits"]
    assert runs["decoupled"]["generated_logits"] == runs["batch"]["generated_logits"]
    for a, b in zip(runs["decoupled"]["ttft"], runs["interleaved"]["ttft"]):
        assert a <= b
    assert len(runs["batch"]["notes"]) == 4


def test_latency_closed_forms():
    cfg = st.RateConfig(1.0, 2.0, 10.0, c_tok=0.02, l_tokens=100)
    assert st.backlog_closed_form(cfg) == pytest.approx(10.0)
    assert st.catch_up_closed_form(cfg) == pytest.approx(10.0)
    assert st.quality_coupling(cfg) == pytest.approx(2.0)
    assert st.catch_up_closed_form(st.RateConfig(1.0, 1.0, 5.0)) is None
    trace = st.simulate(cfg, "interleaved", 25.0, 0.5)
    assert trace["catch_up_s"] == pytest.approx(10.0, rel=0.01)


def test_cot_round_trip(stream):
    doc = st.synthesize_skeleton(stream, ["red", "two", "left"])
    assert st.validate_cot(doc) == []
    leaked = doc.replace("supports the final answer", "says red", 1)
    assert any(c == "D" for c, _, _ in st.validate_cot(leaked))


def test_errors_carry_codes():
    with pytest.raises(st.StreamThinkError) as info:
        st.stream_from_json('{"units": [{"kind": "question", "len": 2}]}')
    assert info.value.code == "QuestionBeforeAnySegment"


def test_segmentation():
    assert st.segment_by_questions(100.0, [70.0]) == [(0.0, 30.0), (30.0, 60.0), (60.0, 70.0), (70.0, 100.0)]
    assert st.plan_sampling(400.0, 64) == (0.5, 64, 64)
    assert st.plan_sampling(100.0) == (1.0, None, 100)
