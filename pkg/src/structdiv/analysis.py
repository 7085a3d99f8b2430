"""Diversity measurements over sets of instances.

* substructure frequencies and fractional (tie-averaged) ranks
* coverage of pool substructures bucketed by pool rank
* mutual information between substructure-presence indicators and its
  average over all pairs (AMI)

MI is in nats with ``0 log 0 = 0`` and reported in its non-negative form.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from . import _backend
from .astcore import LexerConfig, parse_program
from .errors import EmptySample, EmptyTable, ParseFailure, ProgramError, SampleNotSubsetOfPool, StructDivError
from .substructures import BagExtractor, SubstructureConfig, enumerate_bigrams, enumerate_subtrees


def _bags(instances: Iterable, cfg: Optional[SubstructureConfig] = None,
          lexer: LexerConfig = LexerConfig()) -> list[frozenset[str]]:
    if cfg is None:
        return [frozenset(x if isinstance(x, (set, frozenset)) else x.bag.keys) for x in instances]
    extractor = BagExtractor(cfg, lexer)
    return [extractor.template_and_bag(x)[1].keys for x in instances]


def frequency_table(instances: Iterable, cfg: Optional[SubstructureConfig] = None,
                    lexer: LexerConfig = LexerConfig()) -> dict[str, int]:
    """Number of instances containing each key.

    ``instances`` are records with bags or plain key sets; passing ``cfg``
    recomputes bags under that config (e.g. templates or n-grams).
    """
    counts: Counter[str] = Counter()
    for bag in _bags(instances, cfg, lexer):
        counts.update(bag)
    return dict(counts)


def fractional_ranks(table: Mapping[str, int]) -> dict[str, float]:
    if not table:
        raise EmptyTable("cannot rank an empty frequency table")
    keys = sorted(table)
    ranks = rankdata([-table[k] for k in keys], method="average")
    return {k: float(r) for k, r in zip(keys, ranks)}


def geometric_edges(max_rank: float) -> list[float]:
    edges = [1.0]
    while edges[-1] <= max_rank:
        edges.append(edges[-1] * 2)
    return edges


@dataclass
class CoverageReport:
    edges: list[float]
    pool_counts: list[int]
    counts: dict[str, list[int]]
    totals: dict[str, int]
    pool_total: int

    def to_rows(self) -> list[dict]:
        rows = []
        for b in range(len(self.pool_counts)):
            row = {"rank_lo": self.edges[b], "rank_hi": self.edges[b + 1], "pool": self.pool_counts[b]}
            for name, vals in self.counts.items():
                row[name] = vals[b]
            rows.append(row)
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["rank_lo", "rank_hi", "pool", *self.counts]
        writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.to_rows())
        return buf.getvalue()

    def summary(self) -> dict:
        return {"edges": self.edges, "pool_counts": self.pool_counts, "counts": self.counts,
                "totals": self.totals, "pool_total": self.pool_total}


def coverage_buckets(samples: Mapping[str, Sequence[str]] | Sequence[str], pool: Sequence,
                     cfg: Optional[SubstructureConfig] = None,
                     edges: Optional[Sequence[float]] = None,
                     lexer: LexerConfig = LexerConfig()) -> CoverageReport:
    """Per pool-rank bucket, how many pool keys each sample covers.

    Bucket ``b`` holds ranks in ``[edges[b], edges[b+1])``; the last bucket
    also takes ranks equal to its upper edge.
    """
    if not isinstance(samples, Mapping):
        samples = {"sample": list(samples)}
    bags = _bags(pool, cfg, lexer)
    bag_of = {r.id: bag for r, bag in zip(pool, bags)}
    table: Counter[str] = Counter()
    for bag in bags:
        table.update(bag)
    ranks = fractional_ranks(table) if table else {}
    max_rank = max(ranks.values(), default=1.0)
    edges = list(edges) if edges is not None else geometric_edges(max_rank)
    n_buckets = len(edges) - 1
    if n_buckets < 1:
        raise ValueError("need at least two bucket edges")

    def bucket(r: float) -> int:
        for b in range(n_buckets):
            if edges[b] <= r < edges[b + 1]:
                return b
        if r == edges[-1]:
            return n_buckets - 1
        raise ValueError(f"rank {r} outside bucket edges {edges[0]}..{edges[-1]}")

    bucket_of = {k: bucket(r) for k, r in ranks.items()}
    pool_counts = [0] * n_buckets
    for b in bucket_of.values():
        pool_counts[b] += 1
    counts: dict[str, list[int]] = {}
    totals: dict[str, int] = {}
    for name, ids in samples.items():
        covered: set[str] = set()
        for rid in ids:
            if rid not in bag_of:
                raise SampleNotSubsetOfPool(f"sample {name!r} has id {rid!r} not in pool")
            covered.update(bag_of[rid])
        per = [0] * n_buckets
        for k in covered:
            per[bucket_of[k]] += 1
        counts[name] = per
        totals[name] = len(covered)
    return CoverageReport(edges, pool_counts, counts, totals, len(table))


# -- mutual information -------------------------------------------------------

def _mi_cells(ci: np.ndarray, cj: np.ndarray, cij: np.ndarray, n: float) -> np.ndarray:
    out = np.zeros(np.broadcast(ci, cj, cij).shape)
    cells = (
        (cij, ci, cj),
        (ci - cij, ci, n - cj),
        (cj - cij, n - ci, cj),
        (n - ci - cj + cij, n - ci, n - cj),
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        for x, a, b in cells:
            x, a, b = np.broadcast_arrays(x, a, b)
            term = (x / n) * np.log((x * n) / (a * b))
            out += np.where(x > 0, term, 0.0)
    return np.maximum(out, 0.0)


def _mi_matrix_py(co: np.ndarray, counts: np.ndarray, n: int) -> np.ndarray:
    c = counts.astype(np.float64)
    return _mi_cells(c[:, None], c[None, :], co.astype(np.float64), float(n))


def _mi_sums_py(co: np.ndarray, counts: np.ndarray, n: int, block: int = 256) -> tuple[float, float]:
    c = counts.astype(np.float64)
    m = len(c)
    total = 0.0
    diag = 0.0
    for start in range(0, m, block):
        stop = min(m, start + block)
        vals = _mi_cells(c[start:stop, None], c[None, :], co[start:stop].astype(np.float64), float(n))
        total += float(vals.sum())
        diag += float(np.trace(vals[:, start:stop]))
    return (total - diag) / 2.0, diag


@dataclass
class MiReport:
    keys: list[str]
    n: int
    counts: np.ndarray
    co: np.ndarray = field(repr=False)
    ami: float
    include_diagonal: bool
    top_pairs: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def position(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.keys)}

    def p(self, key: str) -> float:
        return float(self.counts[self.position[key]]) / self.n

    def p_joint(self, a: str, b: str) -> float:
        pos = self.position
        return float(self.co[pos[a], pos[b]]) / self.n

    def mi(self, a: str, b: str) -> float:
        pos = self.position
        i, j = pos[a], pos[b]
        return mi_from_counts(int(self.counts[i]), int(self.counts[j]), int(self.co[i, j]), self.n)

    def mi_matrix(self) -> np.ndarray:
        if _backend.HAVE_COMPILED:
            return _backend.compiled.mi_matrix(self.co, self.counts, self.n)
        return _mi_matrix_py(self.co, self.counts, self.n)


def mi_from_counts(ci: int, cj: int, cij: int, n: int) -> float:
    """MI of two presence indicators from their counts over ``n`` instances."""
    total = 0.0
    for x, a, b in ((cij, ci, cj), (ci - cij, ci, n - cj), (cj - cij, n - ci, cj),
                    (n - ci - cj + cij, n - ci, n - cj)):
        if x > 0:
            total += (x / n) * math.log((x * n) / (a * b))
    return max(total, 0.0)


def cooccurrence(bags: Sequence[frozenset[str]]) -> tuple[list[str], np.ndarray, np.ndarray]:
    keys = sorted(set().union(*bags)) if bags else []
    pos = {k: i for i, k in enumerate(keys)}
    x = np.zeros((len(bags), len(keys)), dtype=np.float32)
    for r, bag in enumerate(bags):
        x[r, [pos[k] for k in bag]] = 1.0
    counts = x.sum(axis=0).astype(np.int64)
    # float32 products are exact for counts below 2**24
    co = (x.T @ x).astype(np.int32)
    return keys, counts, co


def pairwise_mi(sample: Sequence, cfg: Optional[SubstructureConfig] = None,
                include_diagonal: bool = True, top_k: int = 0,
                lexer: LexerConfig = LexerConfig()) -> MiReport:
    bags = _bags(sample, cfg, lexer)
    if not bags:
        raise EmptySample("MI needs at least one instance")
    keys, counts, co = cooccurrence(bags)
    n = len(bags)
    m = len(keys)
    if m == 0:
        ami_value = 0.0
    else:
        if _backend.HAVE_COMPILED:
            upper, diag = _backend.compiled.mi_sums(co, counts, n)
        else:
            upper, diag = _mi_sums_py(co, counts, n)
        if include_diagonal:
            ami_value = (2.0 * upper + diag) / (m * m)
        else:
            ami_value = 2.0 * upper / (m * m - m) if m > 1 else 0.0
    report = MiReport(keys, n, counts, co, ami_value, include_diagonal)
    if top_k > 0 and m > 1:
        mat = report.mi_matrix()
        iu = np.triu_indices(m, k=1)
        vals = mat[iu]
        order = np.lexsort((iu[1], iu[0], -vals))[:top_k]
        report.top_pairs = [(keys[iu[0][o]], keys[iu[1][o]], float(vals[o])) for o in order]
    return report


def ami(sample: Sequence, cfg: Optional[SubstructureConfig] = None,
        include_diagonal: bool = True, lexer: LexerConfig = LexerConfig()) -> float:
    return pairwise_mi(sample, cfg, include_diagonal, lexer=lexer).ami


# -- pool statistics -------------------------------------------------------------

class ParseFailures(StructDivError):
    def __init__(self, failures: list[ParseFailure]) -> None:
        ids = ", ".join(f.instance_id for f in failures[:10])
        more = f" (+{len(failures) - 10} more)" if len(failures) > 10 else ""
        super().__init__(f"{len(failures)} programs failed to parse: {ids}{more}")
        self.failures = failures


@dataclass
class PoolStats:
    instances: int
    bigrams: int
    subtrees: int
    templates: int
    failures: list[ParseFailure] = field(default_factory=list)

    def as_dict(self) -> dict[str, int]:
        return {"instances": self.instances, "bigrams": self.bigrams,
                "subtrees": self.subtrees, "templates": self.templates}


def stats(pool: Iterable, lexer: LexerConfig = LexerConfig(), d: int = 4,
          strict: bool = True) -> PoolStats:
    """Unique bigram, subtree (size <= d) and template counts over a pool."""
    bigrams: set[str] = set()
    subtrees: set[str] = set()
    templates: set[str] = set()
    failures: list[ParseFailure] = []
    n = 0
    for rec in pool:
        try:
            template, ast = parse_program(rec.program, lexer)
        except ProgramError as exc:
            failures.append(ParseFailure(rec.id, exc))
            continue
        n += 1
        if template in templates:
            continue
        templates.add(template)
        bigrams |= enumerate_bigrams(ast)
        subtrees |= enumerate_subtrees(ast, d)
    if failures and strict:
        raise ParseFailures(failures)
    return PoolStats(n, len(bigrams), len(subtrees), len(templates), failures)
