"""End-to-end training and expansion pipeline.

Training reads a word corpus and a pair corpus, fits every model
(lexicon, word n-gram, alignment, insertion costs, memory, pair n-gram),
and writes them to a model directory together with a manifest of content
hashes.  The same inputs and configuration always produce bit-identical
artifacts.  Loading verifies the manifest before anything is parsed.

Expansion builds a per-token confusion network from the configured
channel and decodes it under the word model, either exactly or with a
beam.  Multi-worker expansion reloads the model directory in spawned
processes and preserves input order.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

from pydantic import BaseModel, ConfigDict, Field

from . import ngram
from .aligner import AlignConfig, AlignmentModel, em_train
from .decoder import DecodeResult, NGramScorer, beam_decode, build_network, viterbi_decode
from .errors import DataError, ModelError
from .evalkit import EvalReport, evaluate
from .ngram import NGramModel
from .pair_channel import pair_candidates, train_pair_lm
from .subseq_channel import (
    CandidateSet,
    ChannelConfig,
    ExpansionMemory,
    InsertionCostModel,
    estimate_insertion_costs,
    generate_candidates,
)
from .textcore import (
    Lexicon,
    SentencePair,
    build_lexicon,
    detach_final_period,
    read_corpus,
    read_pairs,
    tokenize,
)

MANIFEST_NAME = "manifest.json"

LEXICON_FILE = "lexicon.tsv"
WORD_LM_FILE = "word_lm.arpa.gz"
ALIGN_FILE = "align_model.tsv"
COSTS_FILE = "insertion_costs.tsv"
MEMORY_FILE = "memory.tsv"
PAIR_LM_FILE = "pair_lm.arpa.gz"

ARTIFACT_FILES = (
    LEXICON_FILE,
    WORD_LM_FILE,
    ALIGN_FILE,
    COSTS_FILE,
    MEMORY_FILE,
    PAIR_LM_FILE,
)


class RunConfig(BaseModel):
    """Every knob of the pipeline; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    word_lm_order: int = Field(default=3, ge=1)
    pair_lm_order: int = Field(default=4, ge=1)
    prune_threshold: float = Field(default=1e-8, ge=0.0)
    lexicon_min_count: int = Field(default=8, ge=1)
    max_candidates: int = Field(default=8, ge=1)
    prune_ratio: float = Field(default=2.0, ge=1.0)
    beam: int = Field(default=20, ge=1)
    lm_weight: float = Field(default=1.0, ge=0.0)
    channel: Literal["subsequence", "pair"] = "subsequence"
    decoder: Literal["viterbi", "beam"] = "viterbi"
    lexblock: bool = True
    memory: bool = True
    subblock: bool = True
    em_max_iters: int = Field(default=50, ge=1)
    em_tol: float = Field(default=1e-6, gt=0.0)
    workers: int = Field(default=1, ge=1)

    def channel_config(self) -> ChannelConfig:
        return ChannelConfig(
            lexblock=self.lexblock,
            memory=self.memory,
            subblock=self.subblock,
            max_candidates=self.max_candidates,
            prune_ratio=self.prune_ratio,
        )


@dataclass
class TrainedModels:
    config: RunConfig
    lexicon: Lexicon
    word_lm: NGramModel
    align_model: AlignmentModel
    insertion_costs: InsertionCostModel
    memory: ExpansionMemory
    pair_lm: NGramModel


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def normalize_line(line: str) -> list[str]:
    """Tokenize one input sentence, splitting off a trailing period."""
    return detach_final_period(tokenize(line))


def train(
    config: RunConfig, corpus_path: str, pairs_path: str, model_dir: str
) -> dict:
    """Fit all models and write them plus a hash manifest to model_dir."""
    corpus = [detach_final_period(s) for s in read_corpus(corpus_path)]
    if not corpus:
        raise DataError(f"{corpus_path}: empty corpus")
    pairs = read_pairs(pairs_path)
    token_pairs = [tp for pair in pairs for tp in pair.token_pairs]

    lexicon = build_lexicon(corpus, config.lexicon_min_count)
    word_lm = ngram.train(corpus, config.word_lm_order)
    if config.prune_threshold > 0.0:
        word_lm = ngram.prune(word_lm, config.prune_threshold)
    align_model = em_train(
        token_pairs, AlignConfig(max_iters=config.em_max_iters, tol=config.em_tol)
    )
    insertion_costs = estimate_insertion_costs(token_pairs, align_model)
    memory = ExpansionMemory.from_pairs(pairs)
    pair_lm = train_pair_lm(align_model, token_pairs, config.pair_lm_order)

    os.makedirs(model_dir, exist_ok=True)
    lexicon.save(os.path.join(model_dir, LEXICON_FILE))
    word_lm.save(os.path.join(model_dir, WORD_LM_FILE))
    align_model.save(os.path.join(model_dir, ALIGN_FILE))
    insertion_costs.save(os.path.join(model_dir, COSTS_FILE))
    memory.save(os.path.join(model_dir, MEMORY_FILE))
    pair_lm.save(os.path.join(model_dir, PAIR_LM_FILE))

    manifest = {
        "format": 1,
        "config": config.model_dump(),
        "artifacts": {
            name: _sha256(os.path.join(model_dir, name)) for name in ARTIFACT_FILES
        },
    }
    with open(os.path.join(model_dir, MANIFEST_NAME), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_models(model_dir: str, verify: bool = True) -> TrainedModels:
    """Load a model directory, checking artifact hashes against the manifest."""
    manifest_path = os.path.join(model_dir, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise ModelError(f"{model_dir}: missing {MANIFEST_NAME}")
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{manifest_path}: invalid JSON") from exc
    artifacts = manifest.get("artifacts", {})
    for name in ARTIFACT_FILES:
        path = os.path.join(model_dir, name)
        if name not in artifacts:
            raise ModelError(f"{manifest_path}: no hash recorded for {name}")
        if not os.path.isfile(path):
            raise ModelError(f"{model_dir}: missing artifact {name}")
        if verify and _sha256(path) != artifacts[name]:
            raise ModelError(f"{model_dir}: {name} does not match its manifest hash")
    config = RunConfig.model_validate(manifest.get("config", {}))
    return TrainedModels(
        config=config,
        lexicon=Lexicon.load(os.path.join(model_dir, LEXICON_FILE)),
        word_lm=NGramModel.load(os.path.join(model_dir, WORD_LM_FILE)),
        align_model=AlignmentModel.load(os.path.join(model_dir, ALIGN_FILE)),
        insertion_costs=InsertionCostModel.load(os.path.join(model_dir, COSTS_FILE)),
        memory=ExpansionMemory.load(os.path.join(model_dir, MEMORY_FILE)),
        pair_lm=NGramModel.load(os.path.join(model_dir, PAIR_LM_FILE)),
    )


class SubsequenceChannel:
    """Insertion-cost channel with the heuristic candidate pipeline."""

    def __init__(self, models: TrainedModels, config: RunConfig):
        self._costs = models.insertion_costs
        self._lexicon = models.lexicon
        self._memory = models.memory
        self._config = config.channel_config()

    def candidates(self, token: str) -> CandidateSet:
        return generate_candidates(
            self._config, self._costs, self._lexicon, self._memory, token
        )


class PairSymbolChannel:
    """Pair n-gram channel over lexicon supersequences, truncated to top k."""

    def __init__(self, models: TrainedModels, config: RunConfig):
        self._pair_lm = models.pair_lm
        self._lexicon = models.lexicon
        self._top_k = config.max_candidates

    def candidates(self, token: str) -> CandidateSet:
        return pair_candidates(self._pair_lm, self._lexicon, token, self._top_k)


def make_channel(models: TrainedModels, config: RunConfig):
    if config.channel == "pair":
        return PairSymbolChannel(models, config)
    return SubsequenceChannel(models, config)


@dataclass
class ExpandedSentence:
    input_tokens: list[str]
    tokens: list[str]
    total_cost: float
    trace: list[dict]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def to_dict(self, include_trace: bool = False) -> dict:
        out = {
            "input": " ".join(self.input_tokens),
            "output": self.text,
            "total_cost": self.total_cost,
        }
        if include_trace:
            out["trace"] = self.trace
        return out


def expand_tokens(
    models: TrainedModels, tokens: Sequence[str], config: RunConfig | None = None
) -> DecodeResult:
    config = config or models.config
    network = build_network(make_channel(models, config), tokens)
    if config.decoder == "viterbi":
        return viterbi_decode(network, models.word_lm, config.lm_weight)
    return beam_decode(network, NGramScorer(models.word_lm), config.beam, config.lm_weight)


def _expand_one(
    models: TrainedModels, lineno: int, line: str, config: RunConfig
) -> ExpandedSentence:
    line = line.strip()
    if not line:
        raise DataError(f"line {lineno}: empty sentence")
    try:
        tokens = normalize_line(line)
    except DataError as exc:
        raise DataError(f"line {lineno}: {exc}") from exc
    result = expand_tokens(models, tokens, config)
    trace = [
        {
            "position": t.position,
            "word": t.word,
            "channel_cost": t.channel_cost,
            "lm_cost": t.lm_cost,
        }
        for t in result.trace
    ]
    return ExpandedSentence(tokens, list(result.tokens), result.total_cost, trace)


def expand_lines(
    models: TrainedModels, lines: Sequence[str], config: RunConfig | None = None
) -> list[ExpandedSentence]:
    config = config or models.config
    return [
        _expand_one(models, lineno, line, config)
        for lineno, line in enumerate(lines, 1)
    ]


# Per-process state for parallel expansion; populated by _pool_init.
_POOL: dict = {}


def _pool_init(model_dir: str, config_json: str) -> None:
    _POOL["models"] = load_models(model_dir)
    _POOL["config"] = RunConfig.model_validate_json(config_json)


def _pool_expand(task: tuple[int, str]) -> ExpandedSentence:
    lineno, line = task
    return _expand_one(_POOL["models"], lineno, line, _POOL["config"])


def expand_file(
    model_dir: str,
    lines: Sequence[str],
    config: RunConfig | None = None,
    workers: int | None = None,
) -> list[ExpandedSentence]:
    """Expand lines against a model directory, optionally in parallel.

    Workers above one fork fresh processes (spawn context) that each load
    the model directory once; results keep input order.
    """
    models = load_models(model_dir)
    config = config or models.config
    workers = workers if workers is not None else config.workers
    if workers <= 1 or len(lines) <= 1:
        return expand_lines(models, lines, config)
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(
        max_workers=workers,
        mp_context=ctx,
        initializer=_pool_init,
        initargs=(model_dir, config.model_dump_json()),
    ) as pool:
        return list(pool.map(_pool_expand, list(enumerate(lines, 1)), chunksize=8))


def evaluate_pairs(
    models: TrainedModels,
    pairs: Sequence[SentencePair],
    config: RunConfig | None = None,
) -> EvalReport:
    config = config or models.config
    hyps = [
        expand_tokens(models, pair.abbreviated, config).tokens for pair in pairs
    ]
    return evaluate(pairs, hyps)


ABLATION_ROWS = (
    ("subsequence", {"lexblock": False, "memory": False, "subblock": False}),
    ("+lexblock", {"lexblock": True, "memory": False, "subblock": False}),
    ("+memory", {"lexblock": True, "memory": True, "subblock": False}),
    ("+subblock", {"lexblock": True, "memory": True, "subblock": True}),
)


def ablate(
    models: TrainedModels,
    pairs: Sequence[SentencePair],
    config: RunConfig | None = None,
) -> list[dict]:
    """Re-evaluate with candidate heuristics enabled one after another."""
    base = config or models.config
    rows = []
    for label, toggles in ABLATION_ROWS:
        cfg = base.model_copy(update={"channel": "subsequence", **toggles})
        report = evaluate_pairs(models, pairs, cfg)
        rows.append(
            {
                "config": label,
                "wer": report.wer,
                "oer": report.oer,
                "uer": report.uer,
                "ier": report.ier,
            }
        )
    return rows
