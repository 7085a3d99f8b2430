"""Greedy structurally diverse subsampling and the random baseline.

Each iteration picks a substructure ``c`` maximizing the substructure weight
over the live pool, then an instance holding ``c`` maximizing the instance
weight, removes it from the pool and records ``c`` and the instance's
template as sampled. The sampled-substructure set is cleared once every live
substructure is in it, and likewise for templates.

Ties are broken by one rule everywhere: candidates are listed in a canonical
order (substructures by key id, instances by the index's live-holder order),
and the pick is ``candidates[rng.bounded(len(candidates))]``. Three
implementations follow this rule and produce identical traces:

``compiled``  Cython kernel, linear scan over keys (default when built)
``lazy``      pure Python, weight buckets with lazily discarded empty levels
``linear``    pure Python, literal scan using :func:`weight_substructure`
"""

from __future__ import annotations

import enum
import heapq
import logging
from bisect import bisect_left, insort
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from . import _backend
from .errors import ConfigError
from .index import PoolIndex
from .rng import SplitMix64, derive_seed, stream
from .substructures import Kind, SubstructureConfig

log = logging.getLogger(__name__)


class SubstructureWeight(enum.IntEnum):
    UNSEEN_UNIFORM = 0
    UNSEEN_FREQ = 1
    CONSTANT = 2


class InstanceWeight(enum.IntEnum):
    RAND_EX = 0
    RAND_NEW_T = 1
    FREQ_NEW_T = 2


_WC_NAMES = {"unseen-uniform": SubstructureWeight.UNSEEN_UNIFORM,
             "unseen-freq": SubstructureWeight.UNSEEN_FREQ,
             "constant": SubstructureWeight.CONSTANT}
_WE_NAMES = {"randex": InstanceWeight.RAND_EX, "randnewt": InstanceWeight.RAND_NEW_T,
             "freqnewt": InstanceWeight.FREQ_NEW_T}


@dataclass(frozen=True)
class SamplerConfig:
    substructure: SubstructureConfig = SubstructureConfig()
    wc: SubstructureWeight = SubstructureWeight.UNSEEN_FREQ
    we: InstanceWeight = InstanceWeight.RAND_EX
    budget: int = 0
    seed: int = 0
    # Mark every substructure of a picked instance as sampled, not only the
    # chosen one. Bigram diversity counts all bigrams already in the sample.
    mark_instance_bag: bool = False

    def __post_init__(self) -> None:
        if self.budget < 0:
            raise ConfigError(f"budget must be >= 0, got {self.budget}")

    def to_dict(self) -> dict:
        return {
            "substructure": self.substructure.to_dict(),
            "wc": _name_of(_WC_NAMES, self.wc),
            "we": _name_of(_WE_NAMES, self.we),
            "budget": self.budget,
            "seed": self.seed,
            "mark_instance_bag": self.mark_instance_bag,
        }


def _name_of(table: dict, value) -> str:
    return next(name for name, v in table.items() if v == value)


PRESETS: dict[str, tuple[Kind, SubstructureWeight, InstanceWeight, bool]] = {
    "subtree-randex": (Kind.SUBTREE, SubstructureWeight.UNSEEN_FREQ, InstanceWeight.RAND_EX, False),
    "subtree-randnewt": (Kind.SUBTREE, SubstructureWeight.UNSEEN_FREQ, InstanceWeight.RAND_NEW_T, False),
    "subtree-freqnewt": (Kind.SUBTREE, SubstructureWeight.UNSEEN_FREQ, InstanceWeight.FREQ_NEW_T, False),
    # a random template among those not yet sampled, cycling once all are taken
    "template": (Kind.TEMPLATE, SubstructureWeight.UNSEEN_UNIFORM, InstanceWeight.RAND_EX, False),
    "template-freq": (Kind.TEMPLATE, SubstructureWeight.UNSEEN_FREQ, InstanceWeight.RAND_EX, False),
    "bigram": (Kind.BIGRAM, SubstructureWeight.UNSEEN_UNIFORM, InstanceWeight.RAND_EX, True),
    "bigram-freq": (Kind.BIGRAM, SubstructureWeight.UNSEEN_FREQ, InstanceWeight.RAND_EX, False),
}
PRESET_NAMES = tuple(PRESETS) + ("random",)


def preset(name: str, budget: int, seed: int = 0, d: int = 4) -> SamplerConfig:
    try:
        kind, wc, we, mark = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    return SamplerConfig(SubstructureConfig(kind, d=d), wc, we, budget, seed, mark)


@dataclass(frozen=True)
class SampleResult:
    picks: tuple[tuple[int, Optional[str], str], ...]
    config: Optional[SamplerConfig]
    seed: int

    @property
    def ids(self) -> list[str]:
        return [rid for _, _, rid in self.picks]

    def __len__(self) -> int:
        return len(self.picks)


class SamplerState:
    """Sampled instances, substructures and templates for one run."""

    def __init__(self, index: PoolIndex, rng: SplitMix64) -> None:
        self.index = index
        self.rng = rng
        self.d_sample: list[int] = []
        self.c_sampled = bytearray(len(index.keys))
        self.t_sampled = bytearray(len(index.templates))
        self.unsampled_live_keys = index.n_live_keys
        self.unsampled_live_templates = index.n_live_templates
        self.c_resets = 0
        self.t_resets = 0

    @property
    def c_sample(self) -> set[str]:
        return {self.index.keys[k] for k, s in enumerate(self.c_sampled) if s}

    @property
    def t_sample(self) -> set[str]:
        return {self.index.templates[t] for t, s in enumerate(self.t_sampled) if s}

    def mark_key(self, k: int) -> bool:
        if self.c_sampled[k]:
            return False
        self.c_sampled[k] = 1
        if self.index.freq[k] > 0:
            self.unsampled_live_keys -= 1
        return True

    def mark_template(self, t: int) -> None:
        if not self.t_sampled[t]:
            self.t_sampled[t] = 1
            if self.index.tfreq[t] > 0:
                self.unsampled_live_templates -= 1

    def take(self, e: int, c: int, mark_bag: bool) -> tuple[list[int], bool]:
        """Move ``e`` into the sample after choosing ``c``.

        Returns the keys whose weight may have changed and whether the
        substructure and template sets were reset.
        """
        index = self.index
        died, t_died = index.remove(e)
        for k in died:
            if not self.c_sampled[k]:
                self.unsampled_live_keys -= 1
        t = index.inst_template[e]
        if t_died and not self.t_sampled[t]:
            self.unsampled_live_templates -= 1
        self.d_sample.append(e)
        touched = index.bag_of(e)
        if c >= 0:
            self.mark_key(c)
        if mark_bag:
            for k in touched:
                self.mark_key(k)
        self.mark_template(t)
        c_reset = self.unsampled_live_keys == 0
        if c_reset:
            self.c_sampled = bytearray(len(index.keys))
            self.unsampled_live_keys = index.n_live_keys
            self.c_resets += 1
        if self.unsampled_live_templates == 0:
            self.t_sampled = bytearray(len(index.templates))
            self.unsampled_live_templates = index.n_live_templates
            self.t_resets += 1
        return touched, c_reset


def _key_id(index: PoolIndex, c) -> int:
    return index.key_pos[c] if isinstance(c, str) else c


def weight_substructure(scheme: SubstructureWeight, c, index: PoolIndex, state: SamplerState) -> int:
    k = _key_id(index, c)
    if scheme is SubstructureWeight.CONSTANT:
        return 1
    if state.c_sampled[k]:
        return 0
    return index.freq[k] if scheme is SubstructureWeight.UNSEEN_FREQ else 1


def weight_instance(scheme: InstanceWeight, e, index: PoolIndex, state: SamplerState) -> int:
    if isinstance(e, str):
        e = index.id_pos[e]
    if scheme is InstanceWeight.RAND_EX:
        return 1
    t = index.inst_template[e]
    if state.t_sampled[t]:
        return 0
    return index.tfreq[t] if scheme is InstanceWeight.FREQ_NEW_T else 1


def _pick_instance(index: PoolIndex, state: SamplerState, c: int, we: InstanceWeight) -> int:
    base = index.holder_ptr[c]
    n = index.freq[c]
    if we is InstanceWeight.RAND_EX:
        return index.holders[base + state.rng.bounded(n)]
    best = -1
    ties: list[int] = []
    t_sampled, tfreq, inst_template = state.t_sampled, index.tfreq, index.inst_template
    freq_new = we is InstanceWeight.FREQ_NEW_T
    for e in index.holders[base:base + n]:
        t = inst_template[e]
        w = 0 if t_sampled[t] else (tfreq[t] if freq_new else 1)
        if w > best:
            best = w
            ties = [e]
        elif w == best:
            ties.append(e)
    # all-zero weights leave every holder tied: uniform fallback
    return ties[state.rng.bounded(len(ties))]


def _pick_any_live(index: PoolIndex, state: SamplerState) -> int:
    return index.live[state.rng.bounded(index.n_live)]


class _WeightBuckets:
    """Positive-weight candidates grouped by weight, ids kept sorted within a level."""

    def __init__(self) -> None:
        self.levels: dict[int, list[int]] = {}
        self.heap: list[int] = []
        self.weight: dict[int, int] = {}

    def set(self, k: int, w: int) -> None:
        old = self.weight.get(k, 0)
        if old == w:
            return
        if old:
            level = self.levels[old]
            del level[bisect_left(level, k)]
        if w:
            level = self.levels.get(w)
            if level is None:
                level = self.levels[w] = []
                heapq.heappush(self.heap, -w)
            insort(level, k)
            self.weight[k] = w
        else:
            del self.weight[k]

    def top(self) -> Optional[list[int]]:
        while self.heap:
            w = -self.heap[0]
            level = self.levels[w]
            if level:
                return level
            heapq.heappop(self.heap)
            del self.levels[w]
        return None


def _key_weight(wc: SubstructureWeight, index: PoolIndex, state: SamplerState, k: int) -> int:
    f = index.freq[k]
    if f == 0:
        return 0
    if wc is SubstructureWeight.CONSTANT:
        return 1
    if state.c_sampled[k]:
        return 0
    return f if wc is SubstructureWeight.UNSEEN_FREQ else 1


def _run_lazy(index: PoolIndex, state: SamplerState, cfg: SamplerConfig) -> list[tuple[int, int]]:
    wc, we = cfg.wc, cfg.we
    buckets = _WeightBuckets()
    for k in range(len(index.keys)):
        buckets.set(k, _key_weight(wc, index, state, k))
    picks = []
    while len(picks) < cfg.budget and index.n_live:
        level = buckets.top()
        if level is None:
            c = -1
            e = _pick_any_live(index, state)
        else:
            c = level[state.rng.bounded(len(level))]
            e = _pick_instance(index, state, c, we)
        picks.append((c, e))
        touched, c_reset = state.take(e, c, cfg.mark_instance_bag)
        if c_reset and wc is not SubstructureWeight.CONSTANT:
            for k in range(len(index.keys)):
                buckets.set(k, _key_weight(wc, index, state, k))
        else:
            for k in touched:
                buckets.set(k, _key_weight(wc, index, state, k))
            if c >= 0:
                buckets.set(c, _key_weight(wc, index, state, c))
    return picks


def _run_linear(index: PoolIndex, state: SamplerState, cfg: SamplerConfig,
                check_every: int = 0) -> list[tuple[int, int]]:
    wc, we = cfg.wc, cfg.we
    picks = []
    n_keys = len(index.keys)
    while len(picks) < cfg.budget and index.n_live:
        best = -1
        ties: list[int] = []
        for k in range(n_keys):
            if index.freq[k] == 0:
                continue
            w = weight_substructure(wc, k, index, state)
            if w > best:
                best = w
                ties = [k]
            elif w == best:
                ties.append(k)
        if ties:
            c = ties[state.rng.bounded(len(ties))]
            e = _pick_instance(index, state, c, we)
        else:
            c = -1
            e = _pick_any_live(index, state)
        picks.append((c, e))
        state.take(e, c, cfg.mark_instance_bag)
        if check_every and len(picks) % check_every == 0:
            index.assert_fresh()
    return picks


STRATEGIES = ("auto", "compiled", "lazy", "linear")


def sample_diverse(index: PoolIndex, cfg: SamplerConfig, strategy: str = "auto",
                   check_every: int = 0) -> SampleResult:
    """Run the greedy loop on a copy of ``index``.

    ``check_every`` > 0 recounts frequencies from scratch every that many
    iterations (linear strategy only) and fails on any drift.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}")
    if strategy == "auto":
        strategy = "compiled" if _backend.HAVE_COMPILED else "lazy"
    if strategy == "compiled" and not _backend.HAVE_COMPILED:
        raise ConfigError("compiled kernels are not available in this build")
    rng_seed = derive_seed(cfg.seed, "sample")
    if strategy == "compiled":
        arrays = index.arrays()
        cs, es = _backend.compiled.greedy(
            arrays, index.n_live, index.n_live_keys, index.n_live_templates,
            int(cfg.wc), int(cfg.we), int(cfg.mark_instance_bag), cfg.budget, rng_seed)
        picks = list(zip(cs.tolist(), es.tolist()))
    else:
        work = index.copy()
        state = SamplerState(work, SplitMix64(rng_seed))
        if strategy == "lazy":
            picks = _run_lazy(work, state, cfg)
        else:
            picks = _run_linear(work, state, cfg, check_every)
    trace = tuple(
        (i, index.keys[c] if c >= 0 else None, index.ids[e]) for i, (c, e) in enumerate(picks)
    )
    log.debug("sampled %d instances with %s strategy", len(trace), strategy)
    return SampleResult(trace, cfg, cfg.seed)


def sample_random(pool: Sequence, budget: int, seed: int) -> SampleResult:
    """Uniform sample without replacement; ``pool`` holds records or ids."""
    ids = [r if isinstance(r, str) else r.id for r in pool]
    budget = max(0, min(budget, len(ids)))
    rng = stream(seed, "random")
    order = list(range(len(ids)))
    n = len(order)
    for i in range(budget):
        j = i + rng.bounded(n - i)
        order[i], order[j] = order[j], order[i]
    return SampleResult(tuple((i, None, ids[order[i]]) for i in range(budget)), None, seed)
