"""Request and response bodies for the HTTP service.

Requests that name files refer to paths visible to the server process;
the service is a local tool wrapper, not a remote multi-tenant API.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..pipeline import RunConfig


class ConfigPatch(BaseModel):
    """Partial RunConfig; only the supplied fields override the stored ones."""

    model_config = ConfigDict(extra="forbid")

    word_lm_order: int | None = Field(default=None, ge=1)
    pair_lm_order: int | None = Field(default=None, ge=1)
    prune_threshold: float | None = Field(default=None, ge=0.0)
    lexicon_min_count: int | None = Field(default=None, ge=1)
    max_candidates: int | None = Field(default=None, ge=1)
    prune_ratio: float | None = Field(default=None, ge=1.0)
    beam: int | None = Field(default=None, ge=1)
    lm_weight: float | None = Field(default=None, ge=0.0)
    channel: Literal["subsequence", "pair"] | None = None
    decoder: Literal["viterbi", "beam"] | None = None
    lexblock: bool | None = None
    memory: bool | None = None
    subblock: bool | None = None
    em_max_iters: int | None = Field(default=None, ge=1)
    em_tol: float | None = Field(default=None, gt=0.0)
    workers: int | None = Field(default=None, ge=1)

    def apply(self, base: RunConfig) -> RunConfig:
        update = {k: v for k, v in self.model_dump().items() if v is not None}
        return base.model_copy(update=update) if update else base


class HealthResponse(BaseModel):
    status: Literal["ok"] = "ok"
    version: str


class TrainRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    corpus_path: str
    pairs_path: str
    model_dir: str
    config: RunConfig = Field(default_factory=RunConfig)


class TrainResponse(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_dir: str
    manifest: dict


class ExpandRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_dir: str
    lines: list[str]
    trace: bool = False
    workers: int | None = Field(default=None, ge=1)
    config: ConfigPatch | None = None


class TraceEntry(BaseModel):
    position: int
    word: str
    channel_cost: float
    lm_cost: float


class ExpandedSentenceOut(BaseModel):
    input: str
    output: str
    total_cost: float
    trace: list[TraceEntry] | None = None


class ExpandResponse(BaseModel):
    sentences: list[ExpandedSentenceOut]


class EvaluateRequest(BaseModel):
    """Score a pair file, decoding with a model or reading hypotheses."""

    model_config = ConfigDict(protected_namespaces=())

    pairs_path: str
    model_dir: str | None = None
    hyps_path: str | None = None
    config: ConfigPatch | None = None

    @model_validator(mode="after")
    def _one_source(self) -> "EvaluateRequest":
        if (self.model_dir is None) == (self.hyps_path is None):
            raise ValueError("provide exactly one of model_dir or hyps_path")
        return self


class EvaluateResponse(BaseModel):
    report: dict


class FilterRequest(BaseModel):
    lines: list[str] | None = None
    path: str | None = None
    max_chars: int = Field(default=150, ge=1)
    min_words: int = Field(default=8, ge=0)
    min_avg_word_len: float = Field(default=6.0, ge=0.0)
    entropy_select: bool = False
    byte_lm_order: int = Field(default=5, ge=1)

    @model_validator(mode="after")
    def _one_source(self) -> "FilterRequest":
        if (self.lines is None) == (self.path is None):
            raise ValueError("provide exactly one of lines or path")
        return self


class FilterResponse(BaseModel):
    read: int
    passed: int
    selected: int | None = None
    kept: list[str]


class PolicyBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weights: dict[str, float] | None = None
    keep_fraction: float = Field(default=0.0, ge=0.0, le=1.0)
    min_chars_deleted: int = Field(default=20, ge=0)


class AbbreviateRequest(BaseModel):
    lines: list[str] | None = None
    path: str | None = None
    seed: int = 0
    policy_path: str | None = None
    policy: PolicyBody | None = None

    @model_validator(mode="after")
    def _check(self) -> "AbbreviateRequest":
        if (self.lines is None) == (self.path is None):
            raise ValueError("provide exactly one of lines or path")
        if self.policy_path is not None and self.policy is not None:
            raise ValueError("provide at most one of policy or policy_path")
        return self


class PairOut(BaseModel):
    abbreviated: str
    expanded: str
    strategies: list[str]
    met_minimum: bool


class AbbreviateResponse(BaseModel):
    pairs: list[PairOut]
    histogram: dict[str, int]


class AnalyzeRequest(BaseModel):
    pairs_path: str


class AnalyzeResponse(BaseModel):
    tokens: int
    strategies: dict[str, int]
    histogram: dict[str, int]


class AblateRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_dir: str
    pairs_path: str
    config: ConfigPatch | None = None


class AblateResponse(BaseModel):
    rows: list[dict]
