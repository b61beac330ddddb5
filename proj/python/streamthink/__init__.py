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

"""Python bindings for the streamthink C++ core."""

from streamthink._core import (
    Engine,
    EngineConfig,
    RateConfig,
    StreamThinkError,
    UnitStream,
    backlog_closed_form,
    catch_up_closed_form,
    classify_attention,
    compute_offsets,
    plan_sampling,
    plan_schedule,
    quality_coupling,
    segment_by_questions,
    simulate,
    stream_from_json,
    synthesize_skeleton,
    token_mask,
    ttft_all,
    unit_mask,
    validate_cot,
)

__all__ = [
    "Engine",
    "EngineConfig",
    "RateConfig",
    "StreamThinkError",
    "UnitStream",
    "backlog_closed_form",
    "catch_up_closed_form",
    "classify_attention",
    "compute_offsets",
    "plan_sampling",
    "plan_schedule",
    "quality_coupling",
    "segment_by_questions",
    "simulate",
    "stream_from_json",
    "synthesize_skeleton",
    "token_mask",
    "ttft_all",
    "unit_mask",
    "validate_cot",
]
