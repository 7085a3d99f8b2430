"""Inverted index over a pool with live frequency counts.

Everything is integer-encoded. Instance ``i`` is the i-th pool record, key
and template ids are assigned in first-appearance order (keys of one bag
in sorted order). Each key owns a contiguous range of ``holders``; the
first ``freq[k]`` entries of the range are the live holders. Removal swaps
the departing instance to the end of the live prefix, so the live-holder
order after any sequence of removals is fully determined, which the
samplers rely on for reproducible tie-breaking.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DuplicateId, UnknownId


class PoolIndex:
    def __init__(self, ids: Sequence[str], templates: Sequence[str],
                 bags: Sequence[Iterable[str]]) -> None:
        self.ids: list[str] = list(ids)
        self.id_pos: dict[str, int] = {}
        for i, rid in enumerate(self.ids):
            if rid in self.id_pos:
                raise DuplicateId(rid)
            self.id_pos[rid] = i

        self.keys: list[str] = []
        self.key_pos: dict[str, int] = {}
        self.templates: list[str] = []
        self.template_pos: dict[str, int] = {}
        self.inst_template: list[int] = []
        key_pos, keys = self.key_pos, self.keys
        distinct: dict = {}  # bags are often shared objects; encode each once
        flat: list[int] = []
        dptr = [0]
        inst_bag: list[int] = []
        for template, bag in zip(templates, bags):
            t = self.template_pos.get(template)
            if t is None:
                t = self.template_pos[template] = len(self.templates)
                self.templates.append(template)
            self.inst_template.append(t)
            frozen = bag if isinstance(bag, frozenset) else frozenset(bag)
            b = distinct.get(frozen)
            if b is None:
                b = distinct[frozen] = len(dptr) - 1
                for key in sorted(frozen):
                    k = key_pos.get(key)
                    if k is None:
                        k = key_pos[key] = len(keys)
                        keys.append(key)
                    flat.append(k)
                dptr.append(len(flat))
            inst_bag.append(b)
        if len(self.inst_template) != len(self.ids):
            raise ValueError("ids, templates and bags must have equal length")

        dptr_a = np.asarray(dptr, dtype=np.int64)
        flat_a = np.asarray(flat, dtype=np.int64)
        inst_bag_a = np.asarray(inst_bag, dtype=np.int64)
        lengths = (dptr_a[1:] - dptr_a[:-1])[inst_bag_a]
        bag_ptr = np.zeros(len(inst_bag) + 1, dtype=np.int64)
        np.cumsum(lengths, out=bag_ptr[1:])
        total = int(bag_ptr[-1])
        offset = np.arange(total, dtype=np.int64) - np.repeat(bag_ptr[:-1], lengths)
        bag_keys = flat_a[np.repeat(dptr_a[:-1][inst_bag_a], lengths) + offset]
        entry_inst = np.repeat(np.arange(len(inst_bag), dtype=np.int64), lengths)
        n_keys = len(keys)
        freq = np.bincount(bag_keys, minlength=n_keys).astype(np.int64)
        holder_ptr = np.zeros(n_keys + 1, dtype=np.int64)
        np.cumsum(freq, out=holder_ptr[1:])
        order = np.argsort(bag_keys, kind="stable")  # holders ascend by instance within a key
        bag_slot = np.empty_like(bag_keys)
        bag_slot[order] = np.arange(len(order), dtype=np.int64) - holder_ptr[bag_keys[order]]

        self.bag_ptr = bag_ptr.tolist()
        self.bag_keys = bag_keys.tolist()
        self.holder_ptr = holder_ptr.tolist()
        self.holders = entry_inst[order].tolist()
        self.holder_slot = order.tolist()
        self.bag_slot = bag_slot.tolist()
        self.freq = freq.tolist()

        self.tfreq = [0] * len(self.templates)
        for t in self.inst_template:
            self.tfreq[t] += 1
        self.alive = bytearray([1]) * len(self.ids)
        self.live = list(range(len(self.ids)))
        self.live_slot = list(range(len(self.ids)))
        self.n_live = len(self.ids)
        self.n_live_keys = sum(1 for f in freq if f > 0)
        self.n_live_templates = len(self.templates)

    # -- queries -------------------------------------------------------
    def __len__(self) -> int:
        return self.n_live

    def key_freq(self, key: str) -> int:
        k = self.key_pos.get(key)
        return 0 if k is None else self.freq[k]

    def template_freq(self, template: str) -> int:
        t = self.template_pos.get(template)
        return 0 if t is None else self.tfreq[t]

    def live_holders(self, k: int) -> list[int]:
        base = self.holder_ptr[k]
        return self.holders[base:base + self.freq[k]]

    def holders_of(self, key: str) -> set[str]:
        k = self.key_pos.get(key)
        return set() if k is None else {self.ids[e] for e in self.live_holders(k)}

    def template_holders(self, template: str) -> set[str]:
        t = self.template_pos.get(template)
        return {self.ids[e] for e in self.live[:self.n_live] if self.inst_template[e] == t}

    def live_ids(self) -> set[str]:
        return {self.ids[e] for e in self.live[:self.n_live]}

    def live_keys(self) -> set[str]:
        return {self.keys[k] for k, f in enumerate(self.freq) if f > 0}

    def live_templates(self) -> set[str]:
        return {self.templates[t] for t, f in enumerate(self.tfreq) if f > 0}

    def freq_table(self) -> dict[str, int]:
        return {self.keys[k]: f for k, f in enumerate(self.freq) if f > 0}

    def bag_of(self, e: int) -> list[int]:
        return self.bag_keys[self.bag_ptr[e]:self.bag_ptr[e + 1]]

    # -- mutation ------------------------------------------------------
    def remove(self, e: int) -> tuple[list[int], bool]:
        """Remove instance ``e``; return keys whose frequency hit zero and whether its template died."""
        if not (0 <= e < len(self.ids)) or not self.alive[e]:
            raise UnknownId(self.ids[e] if 0 <= e < len(self.ids) else e)
        self.alive[e] = 0
        p = self.live_slot[e]
        last = self.n_live - 1
        moved = self.live[last]
        self.live[p], self.live[last] = moved, e
        self.live_slot[moved], self.live_slot[e] = p, last
        self.n_live = last

        died = []
        holders, holder_slot, bag_slot, freq = self.holders, self.holder_slot, self.bag_slot, self.freq
        for j in range(self.bag_ptr[e], self.bag_ptr[e + 1]):
            k = self.bag_keys[j]
            base = self.holder_ptr[k]
            p = bag_slot[j]
            last = freq[k] - 1
            mj = holder_slot[base + last]
            holders[base + p] = holders[base + last]
            holder_slot[base + p] = mj
            bag_slot[mj] = p
            holders[base + last] = e
            holder_slot[base + last] = j
            bag_slot[j] = last
            freq[k] = last
            if last == 0:
                died.append(k)
        self.n_live_keys -= len(died)
        t = self.inst_template[e]
        self.tfreq[t] -= 1
        t_died = self.tfreq[t] == 0
        if t_died:
            self.n_live_templates -= 1
        return died, t_died

    def remove_instance(self, rid: str) -> "PoolIndex":
        e = self.id_pos.get(rid)
        if e is None:
            raise UnknownId(rid)
        self.remove(e)
        return self

    def copy(self) -> "PoolIndex":
        new = object.__new__(PoolIndex)
        new.__dict__.update(self.__dict__)
        for name in ("holders", "holder_slot", "bag_slot", "freq", "tfreq",
                     "live", "live_slot"):
            setattr(new, name, list(getattr(self, name)))
        new.alive = bytearray(self.alive)
        return new

    def recount(self) -> tuple[dict[str, int], dict[str, int]]:
        """Key and template frequencies recomputed from the live instances alone."""
        kf: dict[str, int] = {}
        tf: dict[str, int] = {}
        for e in self.live[:self.n_live]:
            for k in self.bag_of(e):
                kf[self.keys[k]] = kf.get(self.keys[k], 0) + 1
            t = self.templates[self.inst_template[e]]
            tf[t] = tf.get(t, 0) + 1
        return kf, tf

    def assert_fresh(self) -> None:
        kf, tf = self.recount()
        assert kf == self.freq_table(), "key frequencies drifted from live pool"
        assert tf == {self.templates[t]: f for t, f in enumerate(self.tfreq) if f > 0}
        assert self.n_live_keys == len(kf)
        assert self.n_live_templates == len(tf)

    def arrays(self) -> dict[str, np.ndarray]:
        """Current state as int64 arrays for the compiled kernel."""
        out = {name: np.asarray(getattr(self, name), dtype=np.int64)
               for name in ("bag_ptr", "bag_keys", "holder_ptr", "holders", "holder_slot",
                            "bag_slot", "freq", "inst_template", "tfreq", "live", "live_slot")}
        out["alive"] = np.frombuffer(bytes(self.alive), dtype=np.uint8).astype(np.int64)
        return out


def build_index(pool: Sequence) -> PoolIndex:
    """Index a sequence of records carrying ``id``, ``template`` and ``bag``."""
    return PoolIndex([r.id for r in pool], [r.template for r in pool],
                     [r.bag if r.bag is not None else () for r in pool])
