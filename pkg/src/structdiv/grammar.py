"""Toy synchronous context-free grammars for generating (utterance, program) pools.

A grammar file is JSON::

    {"start": "Q", "max_depth": 8,
     "zipf": {"NOUN": 1.0},
     "rules": {"Q": [{"utterance": "how many {OBJ} ?", "program": "count ( {OBJ} )"}],
               "OBJ": [...], "NOUN": [{"utterance": "dog", "program": "dog"}]}}

``{NAME}`` or ``{NAME#i}`` marks a slot; a slot expands once and the same
expansion fills both sides. Rule weights default to 1; a ``zipf`` entry
replaces the weights of that nonterminal's alternatives by ``1 / rank**s``
in listed order.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, DepthExceeded
from .rng import stream

SLOT = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)(?:#(\d+))?\}")


@dataclass(frozen=True)
class Production:
    utterance: str
    program: str
    weight: float = 1.0

    @property
    def slots(self) -> list[tuple[str, str]]:
        """Distinct ``(slot text, nonterminal)`` pairs in order of first use."""
        seen: dict[str, str] = {}
        for m in SLOT.finditer(self.program + " " + self.utterance):
            seen.setdefault(m.group(0), m.group(1))
        return list(seen.items())


@dataclass(frozen=True)
class ToyGrammar:
    start: str
    rules: dict[str, tuple[Production, ...]]
    max_depth: int = 10

    def __post_init__(self) -> None:
        if self.start not in self.rules:
            raise ConfigError(f"start symbol {self.start!r} has no rules")
        for name, prods in self.rules.items():
            if not prods:
                raise ConfigError(f"nonterminal {name!r} has no productions")
            for p in prods:
                if p.weight <= 0:
                    raise ConfigError(f"non-positive weight in {name!r}")
                u_slots = {m.group(0) for m in SLOT.finditer(p.utterance)}
                p_slots = {m.group(0) for m in SLOT.finditer(p.program)}
                if u_slots != p_slots:
                    raise ConfigError(f"{name!r}: utterance and program slots differ in {p}")
                for _, nt in p.slots:
                    if nt not in self.rules:
                        raise ConfigError(f"{name!r} references undefined nonterminal {nt!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "ToyGrammar":
        zipf = data.get("zipf", {})
        rules = {}
        for name, alts in data["rules"].items():
            prods = []
            for rank, alt in enumerate(alts, start=1):
                weight = float(alt.get("weight", 1.0))
                if name in zipf:
                    weight = 1.0 / rank ** float(zipf[name])
                prods.append(Production(alt["utterance"], alt["program"], weight))
            rules[name] = tuple(prods)
        return cls(data["start"], rules, int(data.get("max_depth", 10)))

    @classmethod
    def load(cls, path: str | Path) -> "ToyGrammar":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def min_depths(self) -> dict[str, float]:
        depth = {name: math.inf for name in self.rules}
        changed = True
        while changed:
            changed = False
            for name, prods in self.rules.items():
                best = min(1 + max((depth[nt] for _, nt in p.slots), default=0) for p in prods)
                if best < depth[name]:
                    depth[name] = best
                    changed = True
        return depth


def bundled_grammar(name: str = "covr_zipf") -> ToyGrammar:
    text = resources.files("structdiv").joinpath("grammars", f"{name}.json").read_text("utf-8")
    return ToyGrammar.from_dict(json.loads(text))


def gen_pool(grammar: ToyGrammar, n: int, seed: int) -> list[dict]:
    """Sample ``n`` rows ``{id, utterance, program}`` top-down, depth bounded."""
    depths = grammar.min_depths()
    if depths[grammar.start] > grammar.max_depth:
        raise DepthExceeded(
            f"{grammar.start!r} needs depth {depths[grammar.start]} > max_depth {grammar.max_depth}")
    rng = stream(seed, "gen-pool")
    prod_depth = {
        name: [1 + max((depths[nt] for _, nt in p.slots), default=0) for p in prods]
        for name, prods in grammar.rules.items()
    }

    def expand(symbol: str, budget: int) -> tuple[str, str]:
        prods = grammar.rules[symbol]
        allowed = [p for p, d in zip(prods, prod_depth[symbol]) if d <= budget]
        if not allowed:
            raise DepthExceeded(f"{symbol!r} cannot terminate within depth {budget}")
        total = sum(p.weight for p in allowed)
        u = rng.next_u64() / 2.0 ** 64 * total
        chosen = allowed[-1]
        acc = 0.0
        for p in allowed:
            acc += p.weight
            if u < acc:
                chosen = p
                break
        utt, prog = chosen.utterance, chosen.program
        for slot, nt in chosen.slots:
            su, sp = expand(nt, budget - 1)
            utt = utt.replace(slot, su)
            prog = prog.replace(slot, sp)
        return utt, prog

    width = max(6, len(str(n)))
    rows = []
    for i in range(n):
        utt, prog = expand(grammar.start, grammar.max_depth)
        rows.append({"id": f"{i:0{width}d}", "utterance": " ".join(utt.split()),
                     "program": " ".join(prog.split())})
    return rows
