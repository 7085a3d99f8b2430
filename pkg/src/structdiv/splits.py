"""IID, template and subtree splits of a dataset into (pool, test)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .astcore import LexerConfig
from .errors import ConfigError, TestTooLarge, UnsatisfiableSplit
from .index import build_index
from .rng import stream
from .sampler import preset, sample_diverse
from .dataset import rebag
from .substructures import Kind, SubstructureConfig, key_kind


class SplitKind(enum.Enum):
    IID = "iid"
    TEMPLATE = "template"
    SUBTREE = "subtree"


@dataclass(frozen=True)
class SplitSpec:
    kind: SplitKind
    test_size: Optional[int] = None
    test_fraction: Optional[float] = None
    seed: int = 0
    max_repair_rounds: int = 50
    d: int = 4

    def __post_init__(self) -> None:
        if (self.test_size is None) == (self.test_fraction is None):
            raise ConfigError("set exactly one of test_size and test_fraction")
        if self.test_fraction is not None and not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.test_size is not None and self.test_size < 0:
            raise ConfigError(f"test_size must be >= 0, got {self.test_size}")

    def target(self, n: int) -> int:
        if self.test_size is not None:
            return self.test_size
        return math.floor(self.test_fraction * n + 0.5)  # round half up

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "test_size": self.test_size,
                "test_fraction": self.test_fraction, "seed": self.seed,
                "max_repair_rounds": self.max_repair_rounds, "d": self.d}


@dataclass(frozen=True)
class Split:
    pool: tuple[str, ...]
    test: tuple[str, ...]
    provenance: dict = field(default_factory=dict, compare=False)


def _ordered(dataset: Sequence, chosen: set[str]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    pool = tuple(r.id for r in dataset if r.id not in chosen)
    test = tuple(r.id for r in dataset if r.id in chosen)
    return pool, test


def split_iid(dataset: Sequence, spec: SplitSpec) -> Split:
    n = len(dataset)
    target = spec.target(n)
    if target >= n:
        raise TestTooLarge(f"test size {target} must be smaller than dataset size {n}")
    rng = stream(spec.seed, "split-iid")
    order = list(range(n))
    for i in range(target):
        j = i + rng.bounded(n - i)
        order[i], order[j] = order[j], order[i]
    chosen = {dataset[order[i]].id for i in range(target)}
    pool, test = _ordered(dataset, chosen)
    return Split(pool, test, {"spec": spec.to_dict()})


def template_tokens(template: str) -> set[str]:
    return set(template.split())


def split_template(dataset: Sequence, spec: SplitSpec) -> Split:
    """Hold out whole templates, keeping every test token present in the pool.

    Templates are shuffled and taken into the test side until it reaches the
    target size. Any test template with a token missing from the pool's
    vocabulary then moves to the pool, repeated to a fixpoint. An emptied
    test side triggers a retry with the next derived seed.
    """
    n = len(dataset)
    target = spec.target(n)
    if target >= n:
        raise TestTooLarge(f"test size {target} must be smaller than dataset size {n}")
    by_template: dict[str, list[str]] = {}
    for r in dataset:
        by_template.setdefault(r.template, []).append(r.id)
    templates = sorted(by_template)
    if len(templates) < 2:
        raise UnsatisfiableSplit("a template split needs at least two distinct templates")
    if target == 0:
        pool, test = _ordered(dataset, set())
        return Split(pool, test, {"spec": spec.to_dict(), "round": 0})
    tokens = {t: template_tokens(t) for t in templates}

    for round_no in range(spec.max_repair_rounds):
        rng = stream(spec.seed, f"split-template/{round_no}")
        order = list(templates)
        rng.shuffle(order)
        test_t: list[str] = []
        count = 0
        for t in order:
            if count >= target or len(test_t) == len(templates) - 1:
                break
            test_t.append(t)
            count += len(by_template[t])
        test_set = set(test_t)
        while test_set:
            vocab: set[str] = set()
            for t in templates:
                if t not in test_set:
                    vocab |= tokens[t]
            offenders = {t for t in test_set if not tokens[t] <= vocab}
            if not offenders:
                break
            test_set -= offenders
        if test_set:
            chosen = {rid for t in test_set for rid in by_template[t]}
            pool, test = _ordered(dataset, chosen)
            return Split(pool, test, {"spec": spec.to_dict(), "round": round_no})
    raise UnsatisfiableSplit(
        f"no solvable template split found in {spec.max_repair_rounds} rounds")


def split_subtree(dataset: Sequence, spec: SplitSpec, lexer: LexerConfig = LexerConfig()) -> Split:
    """Test set chosen by subtree-freqnewt diverse sampling over the whole dataset."""
    n = len(dataset)
    target = spec.target(n)
    if target >= n:
        raise TestTooLarge(f"test size {target} must be smaller than dataset size {n}")
    records = dataset
    want = SubstructureConfig(Kind.SUBTREE, d=spec.d)
    if not all(r.bag is not None for r in dataset) or _bag_kind(dataset) is not Kind.SUBTREE:
        records = rebag(dataset, want, lexer)
    cfg = preset("subtree-freqnewt", target, seed=spec.seed, d=spec.d)
    result = sample_diverse(build_index(records), cfg)
    pool, test = _ordered(dataset, set(result.ids))
    return Split(pool, test, {"spec": spec.to_dict()})


def _bag_kind(dataset: Sequence) -> Optional[Kind]:
    for r in dataset:
        for k in r.bag.keys:
            return key_kind(k)
    return None


def make_split(dataset: Sequence, spec: SplitSpec, lexer: LexerConfig = LexerConfig()) -> Split:
    if spec.kind is SplitKind.IID:
        return split_iid(dataset, spec)
    if spec.kind is SplitKind.TEMPLATE:
        return split_template(dataset, spec)
    return split_subtree(dataset, spec, lexer)


@dataclass
class SolvabilityReport:
    ok: bool
    missing: dict[str, list[str]]

    def __bool__(self) -> bool:
        return self.ok


def check_solvable(split: Split, dataset: Sequence) -> SolvabilityReport:
    """Every test template token must occur in some pool template."""
    template_of = {r.id: r.template for r in dataset}
    vocab: set[str] = set()
    for rid in split.pool:
        vocab |= template_tokens(template_of[rid])
    missing: dict[str, list[str]] = {}
    for rid in split.test:
        for tok in sorted(template_tokens(template_of[rid]) - vocab):
            missing.setdefault(tok, []).append(rid)
    return SolvabilityReport(not missing, missing)
