"""Convert text-format record dumps into the sentence-pair TSV.

Upstream abbreviation datasets often ship as text-format message dumps
where each record carries the abbreviated and expanded sentences as
quoted string fields.  This scanner does not parse the full grammar; it
walks every `name: "value"` field in document order and emits a pair
whenever the configured abbreviated and expanded fields have both been
seen, starting a fresh record when a field repeats.  Records whose
sentences violate the deletion constraint are skipped unless strict
mode is on.
"""

from __future__ import annotations

import re

from .errors import DataError
from .textcore import SentencePair, detach_final_period, tokenize, write_pairs

_FIELD_RE = re.compile(r'([A-Za-z_][A-Za-z0-9_]*)\s*:\s*"((?:[^"\\]|\\.)*)"')
_ESCAPE_RE = re.compile(r"\\(x[0-9a-fA-F]{2}|u[0-9a-fA-F]{4}|[0-7]{1,3}|.)")
_SIMPLE_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "'": "'", "\\": "\\"}


def _unescape(value: str) -> str:
    def replace(match: re.Match) -> str:
        body = match.group(1)
        if body in _SIMPLE_ESCAPES:
            return _SIMPLE_ESCAPES[body]
        if body.startswith("x"):
            return chr(int(body[1:], 16))
        if body.startswith("u"):
            return chr(int(body[1:], 16))
        if body[0] in "01234567":
            return chr(int(body, 8))
        return body

    return _ESCAPE_RE.sub(replace, value)


def extract_pairs(
    text: str, abbrev_field: str = "abbreviated", expanded_field: str = "expanded"
) -> list[tuple[str, str]]:
    """All (abbreviated, expanded) string pairs found in the dump."""
    if abbrev_field == expanded_field:
        raise DataError("abbreviated and expanded field names must differ")
    out: list[tuple[str, str]] = []
    pending: dict[str, str] = {}
    for match in _FIELD_RE.finditer(text):
        name, raw = match.group(1), match.group(2)
        if name != abbrev_field and name != expanded_field:
            continue
        if name in pending:
            pending = {}
        pending[name] = _unescape(raw)
        if len(pending) == 2:
            out.append((pending[abbrev_field], pending[expanded_field]))
            pending = {}
    return out


def convert(
    text: str,
    abbrev_field: str = "abbreviated",
    expanded_field: str = "expanded",
    strict: bool = False,
) -> tuple[list[SentencePair], int]:
    """Extract, normalize and validate pairs; returns (pairs, skipped)."""
    pairs: list[SentencePair] = []
    skipped = 0
    for index, (a, e) in enumerate(
        extract_pairs(text, abbrev_field, expanded_field), 1
    ):
        try:
            a_tokens = detach_final_period(tokenize(a))
            e_tokens = detach_final_period(tokenize(e))
            pairs.append(SentencePair(tuple(a_tokens), tuple(e_tokens)))
        except DataError as exc:
            if strict:
                raise DataError(f"record {index}: {exc}") from exc
            skipped += 1
    return pairs, skipped


def convert_file(
    in_path: str,
    out_path: str,
    abbrev_field: str = "abbreviated",
    expanded_field: str = "expanded",
    strict: bool = False,
) -> tuple[int, int]:
    """Convert a dump file to pair TSV; returns (written, skipped)."""
    with open(in_path, encoding="utf-8") as fh:
        text = fh.read()
    pairs, skipped = convert(text, abbrev_field, expanded_field, strict)
    if not pairs:
        raise DataError(f"{in_path}: no convertible records found")
    write_pairs(out_path, pairs)
    return len(pairs), skipped
