"""Command line interface.

Every heavy operation goes through the HTTP service: by default an
in-process instance of the app, or a remote server when --server is
given.  Exit codes: 0 success, 1 usage or server trouble, 2 malformed
data, 3 model-artifact problems.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import Sequence

import httpx

from .errors import DataError, ModelError


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


class Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit with code 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class ServiceClient:
    """Minimal JSON client over either a remote or an in-process app."""

    def __init__(self, server: str | None):
        if server is None:
            # Some fastapi/starlette pairings warn on this import; the
            # message is not actionable from a client.
            with warnings.catch_warnings():
                warnings.filterwarnings(
                    "ignore", message="Using `httpx` with `starlette.testclient`"
                )
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())
        else:
            self._client = httpx.Client(base_url=server, timeout=600.0)

    def post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except httpx.HTTPError as exc:
            raise CliError(1, f"cannot reach server: {exc}") from exc
        return self._handle(resp)

    def _handle(self, resp) -> dict:
        try:
            body = resp.json()
        except ValueError:
            body = {}
        if resp.status_code == 200:
            return body
        kind = body.get("kind")
        detail = body.get("detail", resp.text)
        if resp.status_code == 422:
            lines = []
            for err in detail if isinstance(detail, list) else []:
                loc = ".".join(str(part) for part in err.get("loc", []))
                lines.append(f"{loc}: {err.get('msg', 'invalid')}")
            raise CliError(1, "invalid request: " + ("; ".join(lines) or str(detail)))
        if kind == "data":
            raise CliError(2, str(detail))
        if kind == "model":
            raise CliError(3, str(detail))
        raise CliError(1, f"server error {resp.status_code}: {detail}")


def _read_lines(path: str | None) -> list[str]:
    if path is None or path == "-":
        return sys.stdin.read().splitlines()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise CliError(2, f"cannot read {path}: {exc}") from exc


def _write_lines(path: str | None, lines: Sequence[str]) -> None:
    text = "".join(line + "\n" for line in lines)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(2, f"cannot write {path}: {exc}") from exc


def _config_patch(args: argparse.Namespace) -> dict:
    """Decode-time config overrides the user explicitly set."""
    keys = (
        "channel",
        "decoder",
        "beam",
        "lm_weight",
        "max_candidates",
        "prune_ratio",
        "lexblock",
        "memory",
        "subblock",
    )
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def _add_decode_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--channel", choices=["subsequence", "pair"], default=None)
    parser.add_argument("--decoder", choices=["viterbi", "beam"], default=None)
    parser.add_argument("--beam", type=int, default=None)
    parser.add_argument("--lm-weight", type=float, default=None, dest="lm_weight")
    parser.add_argument("--max-candidates", type=int, default=None, dest="max_candidates")
    parser.add_argument("--prune-ratio", type=float, default=None, dest="prune_ratio")
    parser.add_argument(
        "--no-lexblock", action="store_false", default=None, dest="lexblock",
        help="disable the in-lexicon identity shortcut",
    )
    parser.add_argument(
        "--no-memory", action="store_false", default=None, dest="memory",
        help="disable training-pair memory exemptions",
    )
    parser.add_argument(
        "--no-subblock", action="store_false", default=None, dest="subblock",
        help="disable substring blocking between candidates",
    )


def _format_report(report: dict) -> list[str]:
    lines = []
    for key, value in report.items():
        if isinstance(value, float):
            lines.append(f"{key}: {value:.4f}")
        elif isinstance(value, list):
            lines.append(f"{key}: {', '.join(value) if value else '-'}")
        else:
            lines.append(f"{key}: {value}")
    return lines


def cmd_train(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    config = {
        "word_lm_order": args.word_lm_order,
        "pair_lm_order": args.pair_lm_order,
        "prune_threshold": args.prune_threshold,
        "lexicon_min_count": args.lexicon_min_count,
        "max_candidates": args.max_candidates if args.max_candidates is not None else 8,
        "prune_ratio": args.prune_ratio if args.prune_ratio is not None else 2.0,
        "beam": args.beam if args.beam is not None else 20,
        "lm_weight": args.lm_weight if args.lm_weight is not None else 1.0,
        "channel": args.channel or "subsequence",
        "decoder": args.decoder or "viterbi",
        "lexblock": args.lexblock if args.lexblock is not None else True,
        "memory": args.memory if args.memory is not None else True,
        "subblock": args.subblock if args.subblock is not None else True,
        "em_max_iters": args.em_max_iters,
        "em_tol": args.em_tol,
        "workers": args.workers,
    }
    body = client.post(
        "/train",
        {
            "corpus_path": args.corpus,
            "pairs_path": args.pairs,
            "model_dir": args.out,
            "config": config,
        },
    )
    if args.json:
        print(json.dumps(body["manifest"], indent=2, sort_keys=True))
    else:
        for name, digest in sorted(body["manifest"]["artifacts"].items()):
            print(f"{name}\t{digest}")
        print(f"wrote model to {body['model_dir']}", file=sys.stderr)
    return 0


def cmd_expand(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    lines = _read_lines(args.input)
    body = client.post(
        "/expand",
        {
            "model_dir": args.model,
            "lines": lines,
            "trace": args.trace,
            "workers": args.workers,
            "config": _config_patch(args),
        },
    )
    sentences = body["sentences"]
    if args.trace:
        out = [json.dumps(s, sort_keys=True) for s in sentences]
    else:
        out = [s["output"] for s in sentences]
    _write_lines(args.output, out)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    payload: dict = {"pairs_path": args.pairs}
    if args.model is not None:
        payload["model_dir"] = args.model
        payload["config"] = _config_patch(args)
    else:
        payload["hyps_path"] = args.hyps
    body = client.post("/evaluate", payload)
    if args.json:
        print(json.dumps(body["report"], sort_keys=True))
    else:
        _write_lines(None, _format_report(body["report"]))
    return 0


def cmd_filter(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    lines = _read_lines(args.input)
    body = client.post(
        "/corpus/filter",
        {
            "lines": lines,
            "max_chars": args.max_chars,
            "min_words": args.min_words,
            "min_avg_word_len": args.min_avg_word_len,
            "entropy_select": args.entropy_select,
            "byte_lm_order": args.byte_lm_order,
        },
    )
    _write_lines(args.output, body["kept"])
    print(f"read {body['read']}, kept {len(body['kept'])}", file=sys.stderr)
    return 0


def cmd_abbreviate(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    lines = _read_lines(args.input)
    payload: dict = {"lines": lines, "seed": args.seed}
    if args.policy is not None:
        payload["policy_path"] = args.policy
    else:
        payload["policy"] = {
            "keep_fraction": args.keep_fraction,
            "min_chars_deleted": args.min_chars_deleted,
        }
    body = client.post("/corpus/abbreviate", payload)
    rows = [f"{p['abbreviated']}\t{p['expanded']}" for p in body["pairs"]]
    _write_lines(args.output, rows)
    unmet = sum(1 for p in body["pairs"] if not p["met_minimum"])
    hist = " ".join(f"{k}:{v}" for k, v in body["histogram"].items())
    print(f"deletion histogram {hist}; {unmet} below minimum", file=sys.stderr)
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    body = client.post("/corpus/analyze", {"pairs_path": args.pairs})
    show_all = not args.strategies and not args.histogram
    out: list[str] = []
    if args.strategies or show_all:
        total = body["tokens"] or 1
        ranked = sorted(body["strategies"].items(), key=lambda kv: (-kv[1], kv[0]))
        out.extend(f"{label}\t{n}\t{100.0 * n / total:.1f}%" for label, n in ranked)
    if args.histogram or show_all:
        out.extend(f"deleted {k}\t{v}" for k, v in body["histogram"].items())
    _write_lines(None, out)
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    client = ServiceClient(args.server)
    body = client.post(
        "/ablate",
        {
            "model_dir": args.model,
            "pairs_path": args.pairs,
            "config": _config_patch(args),
        },
    )
    if args.json:
        print(json.dumps(body["rows"], sort_keys=True))
        return 0
    out = ["config\twer\toer\tuer\tier"]
    for row in body["rows"]:
        out.append(
            f"{row['config']}\t{row['wer']:.2f}\t{row['oer']:.2f}"
            f"\t{row['uer']:.2f}\t{row['ier']:.2f}"
        )
    _write_lines(None, out)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    from . import protoconv

    written, skipped = protoconv.convert_file(
        args.input, args.output, args.abbrev_field, args.expanded_field, args.strict
    )
    print(f"wrote {written} pairs, skipped {skipped}", file=sys.stderr)
    return 0


def build_parser() -> Parser:
    parser = Parser(prog="unbrev", description="Expand ad hoc word abbreviations.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = Parser(add_help=False)
    common.add_argument(
        "--server", default=None, metavar="URL",
        help="base URL of a running service (default: in-process)",
    )

    p = sub.add_parser("train", parents=[common], help="fit all models from corpora")
    p.add_argument("--corpus", required=True, help="word corpus, one sentence per line")
    p.add_argument("--pairs", required=True, help="training pair TSV")
    p.add_argument("--out", required=True, help="model directory to write")
    p.add_argument("--word-lm-order", type=int, default=3, dest="word_lm_order")
    p.add_argument("--pair-lm-order", type=int, default=4, dest="pair_lm_order")
    p.add_argument("--prune-threshold", type=float, default=1e-8, dest="prune_threshold")
    p.add_argument("--lexicon-min-count", type=int, default=8, dest="lexicon_min_count")
    p.add_argument("--em-max-iters", type=int, default=50, dest="em_max_iters")
    p.add_argument("--em-tol", type=float, default=1e-6, dest="em_tol")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--json", action="store_true", help="print the manifest as JSON")
    _add_decode_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("expand", parents=[common], help="expand abbreviated sentences")
    p.add_argument("--model", required=True, help="model directory")
    p.add_argument("--input", default=None, help="input file (default stdin)")
    p.add_argument("--output", default=None, help="output file (default stdout)")
    p.add_argument("--trace", action="store_true", help="emit per-token cost JSON")
    p.add_argument("--workers", type=int, default=None)
    _add_decode_flags(p)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("evaluate", parents=[common], help="score expansions on a pair file")
    p.add_argument("--pairs", required=True, help="gold pair TSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", default=None, help="model directory to decode with")
    group.add_argument("--hyps", default=None, help="hypothesis sentences, one per line")
    p.add_argument("--json", action="store_true")
    _add_decode_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("filter-corpus", parents=[common], help="select clean sentences")
    p.add_argument("--input", default=None, help="raw sentences (default stdin)")
    p.add_argument("--output", default=None, help="kept sentences (default stdout)")
    p.add_argument("--max-chars", type=int, default=150, dest="max_chars")
    p.add_argument("--min-words", type=int, default=8, dest="min_words")
    p.add_argument(
        "--min-avg-word-len", type=float, default=6.0, dest="min_avg_word_len"
    )
    p.add_argument(
        "--entropy-select", action="store_true", dest="entropy_select",
        help="keep only sentences below the median per-character entropy",
    )
    p.add_argument("--byte-lm-order", type=int, default=5, dest="byte_lm_order")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("abbreviate", parents=[common], help="make synthetic pair data")
    p.add_argument("--input", default=None, help="clean sentences (default stdin)")
    p.add_argument("--output", default=None, help="pair TSV (default stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", default=None, help="strategy mixture file")
    p.add_argument("--keep-fraction", type=float, default=0.0, dest="keep_fraction")
    p.add_argument(
        "--min-chars-deleted", type=int, default=20, dest="min_chars_deleted"
    )
    p.set_defaults(func=cmd_abbreviate)

    p = sub.add_parser("analyze", parents=[common], help="describe a pair file")
    p.add_argument("--pairs", required=True)
    p.add_argument("--strategies", action="store_true", help="only strategy counts")
    p.add_argument("--histogram", action="store_true", help="only deletion histogram")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ablate", parents=[common], help="toggle candidate heuristics")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--json", action="store_true")
    _add_decode_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("convert-dataset", help="dump file to pair TSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--abbrev-field", default="abbreviated", dest="abbrev_field")
    p.add_argument("--expanded-field", default="expanded", dest="expanded_field")
    p.add_argument("--strict", action="store_true", help="fail on bad records")
    p.set_defaults(func=cmd_convert)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"unbrev: {err.message}", file=sys.stderr)
        return err.code
    except DataError as err:
        print(f"unbrev: {err}", file=sys.stderr)
        return 2
    except ModelError as err:
        print(f"unbrev: {err}", file=sys.stderr)
        return 3
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
