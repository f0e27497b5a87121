"""FastAPI application exposing the pipeline over HTTP.

Error contract: malformed inputs surface as 400 with kind "data",
model-artifact problems as 409 with kind "model", and request-shape
violations as FastAPI's standard 422.  Loaded models are cached per
model directory and invalidated when the manifest file changes.
"""

from __future__ import annotations

import hashlib
import os
import threading

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, corpuskit
from ..errors import DataError, ModelError
from ..evalkit import evaluate
from ..ngram import train_byte_model
from ..pipeline import (
    TrainedModels,
    ablate,
    evaluate_pairs,
    expand_file,
    expand_lines,
    load_models,
    normalize_line,
    train,
)
from ..textcore import read_pairs
from . import schemas


def _read_lines(path: str) -> list[str]:
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh]


def _require_file(path: str) -> str:
    if not os.path.isfile(path):
        raise DataError(f"{path}: no such file")
    return path


def create_app() -> FastAPI:
    app = FastAPI(title="unbrev", version=__version__)

    cache: dict[str, tuple[str, TrainedModels]] = {}
    cache_lock = threading.Lock()

    def get_models(model_dir: str) -> TrainedModels:
        key = os.path.abspath(model_dir)
        manifest_path = os.path.join(key, "manifest.json")
        if not os.path.isfile(manifest_path):
            raise ModelError(f"{model_dir}: missing manifest.json")
        with open(manifest_path, "rb") as fh:
            stamp = hashlib.sha256(fh.read()).hexdigest()
        with cache_lock:
            hit = cache.get(key)
            if hit is not None and hit[0] == stamp:
                return hit[1]
            models = load_models(key)
            cache[key] = (stamp, models)
            return models

    async def _data_error(request: Request, exc: DataError) -> JSONResponse:
        return JSONResponse(status_code=400, content={"kind": "data", "detail": str(exc)})

    async def _model_error(request: Request, exc: ModelError) -> JSONResponse:
        return JSONResponse(status_code=409, content={"kind": "model", "detail": str(exc)})

    app.add_exception_handler(DataError, _data_error)
    app.add_exception_handler(ModelError, _model_error)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(version=__version__)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_endpoint(req: schemas.TrainRequest) -> schemas.TrainResponse:
        manifest = train(
            req.config,
            _require_file(req.corpus_path),
            _require_file(req.pairs_path),
            req.model_dir,
        )
        return schemas.TrainResponse(model_dir=req.model_dir, manifest=manifest)

    @app.post("/expand", response_model=schemas.ExpandResponse)
    def expand_endpoint(req: schemas.ExpandRequest) -> schemas.ExpandResponse:
        patch = req.config or schemas.ConfigPatch()
        workers = req.workers
        if workers is not None and workers > 1:
            models = get_models(req.model_dir)  # fail fast on a bad directory
            config = patch.apply(models.config)
            results = expand_file(req.model_dir, req.lines, config, workers)
        else:
            models = get_models(req.model_dir)
            config = patch.apply(models.config)
            results = expand_lines(models, req.lines, config)
        sentences = []
        for res in results:
            out = schemas.ExpandedSentenceOut(
                input=" ".join(res.input_tokens),
                output=res.text,
                total_cost=res.total_cost,
                trace=[schemas.TraceEntry(**t) for t in res.trace] if req.trace else None,
            )
            sentences.append(out)
        return schemas.ExpandResponse(sentences=sentences)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate_endpoint(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        refs = read_pairs(_require_file(req.pairs_path))
        if req.model_dir is not None:
            models = get_models(req.model_dir)
            config = (req.config or schemas.ConfigPatch()).apply(models.config)
            report = evaluate_pairs(models, refs, config)
        else:
            hyp_lines = _read_lines(req.hyps_path)
            hyps = [normalize_line(line) if line.strip() else [] for line in hyp_lines]
            report = evaluate(refs, hyps)
        return schemas.EvaluateResponse(report=report.to_dict())

    @app.post("/corpus/filter", response_model=schemas.FilterResponse)
    def filter_endpoint(req: schemas.FilterRequest) -> schemas.FilterResponse:
        lines = req.lines if req.lines is not None else _read_lines(req.path)
        config = corpuskit.FilterConfig(
            max_chars=req.max_chars,
            min_words=req.min_words,
            min_avg_word_len=req.min_avg_word_len,
        )
        kept = corpuskit.filter_sentences(config, lines)
        selected = None
        if req.entropy_select:
            if not kept:
                raise DataError("no sentences survived filtering")
            model = train_byte_model(kept, req.byte_lm_order)
            kept = corpuskit.below_median(corpuskit.entropy_rank(model, kept))
            selected = len(kept)
        return schemas.FilterResponse(
            read=len(lines), passed=len(kept) if selected is None else selected,
            selected=selected, kept=kept,
        )

    @app.post("/corpus/abbreviate", response_model=schemas.AbbreviateResponse)
    def abbreviate_endpoint(req: schemas.AbbreviateRequest) -> schemas.AbbreviateResponse:
        lines = req.lines if req.lines is not None else _read_lines(req.path)
        if req.policy_path is not None:
            policy = corpuskit.AbbrevPolicy.load(_require_file(req.policy_path))
        elif req.policy is not None:
            policy = corpuskit.AbbrevPolicy(
                weights=req.policy.weights or dict(corpuskit.DEFAULT_MIXTURE),
                keep_fraction=req.policy.keep_fraction,
                min_chars_deleted=req.policy.min_chars_deleted,
            )
        else:
            policy = corpuskit.AbbrevPolicy()
        sentences = []
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                raise DataError(f"line {lineno}: empty sentence")
            sentences.append(corpuskit.normalize_sentence(line))
        outcomes = corpuskit.abbreviate_corpus(policy, sentences, req.seed)
        pairs = [
            schemas.PairOut(
                abbreviated=" ".join(o.pair.abbreviated),
                expanded=" ".join(o.pair.expanded),
                strategies=o.strategies,
                met_minimum=o.met_minimum,
            )
            for o in outcomes
        ]
        histogram = corpuskit.deletion_histogram([o.pair for o in outcomes])
        return schemas.AbbreviateResponse(pairs=pairs, histogram=histogram)

    @app.post("/corpus/analyze", response_model=schemas.AnalyzeResponse)
    def analyze_endpoint(req: schemas.AnalyzeRequest) -> schemas.AnalyzeResponse:
        pairs = read_pairs(_require_file(req.pairs_path))
        counts = corpuskit.strategy_counts(pairs)
        return schemas.AnalyzeResponse(
            tokens=sum(counts.values()),
            strategies=dict(sorted(counts.items())),
            histogram=corpuskit.deletion_histogram(pairs),
        )

    @app.post("/ablate", response_model=schemas.AblateResponse)
    def ablate_endpoint(req: schemas.AblateRequest) -> schemas.AblateResponse:
        models = get_models(req.model_dir)
        config = (req.config or schemas.ConfigPatch()).apply(models.config)
        pairs = read_pairs(_require_file(req.pairs_path))
        return schemas.AblateResponse(rows=ablate(models, pairs, config))

    return app
