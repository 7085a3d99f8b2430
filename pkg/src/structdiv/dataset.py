"""Instance records, JSONL pool files and ingestion filters."""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .astcore import LexerConfig
from .errors import DuplicateId, MalformedRecord, ParseFailure, StructDivError
from .substructures import BagExtractor, SubstructureBag, SubstructureConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class InstanceRecord:
    id: str
    utterance: str
    program: str
    template: str = ""
    bag: SubstructureBag | None = None


@dataclass
class IngestReport:
    malformed: list[MalformedRecord] = field(default_factory=list)
    parse_failures: list[ParseFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.malformed and not self.parse_failures


def read_rows(path: str | Path) -> list[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        return [(n, line) for n, line in enumerate(fh, start=1) if line.strip()]


def _decode(rows: Sequence[tuple[int, str]], report: IngestReport, strict: bool) -> list[dict]:
    width = max(6, len(str(rows[-1][0]))) if rows else 6
    out = []
    for lineno, line in rows:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            err = MalformedRecord(lineno, f"invalid JSON: {exc.msg}")
        else:
            err = None
            if not isinstance(obj, dict):
                err = MalformedRecord(lineno, "record is not an object")
            else:
                for name in ("utterance", "program"):
                    if not isinstance(obj.get(name), str):
                        err = MalformedRecord(lineno, f"missing or non-string {name!r}")
                        break
                if err is None and "id" in obj and not isinstance(obj["id"], (str, int)):
                    err = MalformedRecord(lineno, "id must be a string or integer")
        if err is not None:
            if strict:
                raise err
            report.malformed.append(err)
            continue
        rid = str(obj["id"]) if "id" in obj else f"{lineno:0{width}d}"
        out.append({"id": rid, "utterance": obj["utterance"], "program": obj["program"]})
    return out


def build_records(rows: Iterable[dict], extractor: BagExtractor, strict: bool = True,
                  report: IngestReport | None = None) -> list[InstanceRecord]:
    """Parse, anonymize and extract bags for dict rows with id/utterance/program."""
    report = report if report is not None else IngestReport()
    seen: set[str] = set()
    pool = []
    for row in rows:
        rid = str(row["id"])
        if rid in seen:
            raise DuplicateId(rid)
        seen.add(rid)
        rec = InstanceRecord(rid, row["utterance"], row["program"])
        try:
            template, bag = extractor.template_and_bag(rec)
        except ParseFailure as exc:
            if strict:
                raise
            report.parse_failures.append(exc)
            continue
        pool.append(InstanceRecord(rid, rec.utterance, rec.program, template, bag))
    return pool


def ingest(path: str | Path, lexer: LexerConfig = LexerConfig(),
           cfg: SubstructureConfig = SubstructureConfig(), strict: bool = True,
           ) -> tuple[list[InstanceRecord], IngestReport]:
    report = IngestReport()
    try:
        rows = read_rows(path)
    except OSError as exc:
        raise StructDivError(f"cannot read {path}: {exc}") from exc
    decoded = _decode(rows, report, strict)
    pool = build_records(decoded, BagExtractor(cfg, lexer), strict, report)
    if report.malformed or report.parse_failures:
        log.warning("skipped %d malformed lines and %d unparsable programs",
                    len(report.malformed), len(report.parse_failures))
    return pool, report


def rebag(pool: Sequence[InstanceRecord], cfg: SubstructureConfig,
          lexer: LexerConfig = LexerConfig()) -> list[InstanceRecord]:
    """Same instances with bags recomputed under another substructure config."""
    return build_records(
        ({"id": r.id, "utterance": r.utterance, "program": r.program} for r in pool),
        BagExtractor(cfg, lexer),
    )


def write_pool(path: str | Path, rows: Iterable[dict | InstanceRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            if isinstance(row, InstanceRecord):
                row = {"id": row.id, "utterance": row.utterance, "program": row.program}
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def filter_frequency_cap(pool: Sequence, p: float) -> list:
    """Drop every instance whose exact program occurs in more than ``p * len(pool)`` instances."""
    if not 0 < p <= 1:
        raise ValueError(f"frequency cap must be in (0, 1], got {p}")
    counts = Counter(r.program for r in pool)
    limit = p * len(pool)
    return [r for r in pool if counts[r.program] <= limit]
