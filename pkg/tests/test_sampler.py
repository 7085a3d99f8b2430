import itertools
import random

import pytest

from conftest import make_pool
from structdiv import _backend
from structdiv.errors import ConfigError
from structdiv.index import build_index
from structdiv.rng import SplitMix64
from structdiv.sampler import (
    PRESETS, InstanceWeight, SamplerConfig, SamplerState, SubstructureWeight, preset,
    sample_diverse, sample_random, weight_instance, weight_substructure,
)
from structdiv.substructures import Kind, SubstructureConfig

STRATEGIES = ["lazy", "linear"] + (["compiled"] if _backend.HAVE_COMPILED else [])


def state_for(idx):
    return SamplerState(idx, SplitMix64(0))


# -- weights -----------------------------------------------------------------------

def test_substructure_weights():
    idx = build_index(make_pool([{"c"}] * 7 + [{"d"}]))
    st = state_for(idx)
    assert weight_substructure(SubstructureWeight.UNSEEN_FREQ, "c", idx, st) == 7
    assert weight_substructure(SubstructureWeight.UNSEEN_UNIFORM, "c", idx, st) == 1
    st.mark_key(idx.key_pos["c"])
    assert weight_substructure(SubstructureWeight.UNSEEN_FREQ, "c", idx, st) == 0
    assert weight_substructure(SubstructureWeight.UNSEEN_UNIFORM, "c", idx, st) == 0
    assert weight_substructure(SubstructureWeight.CONSTANT, "c", idx, st) == 1
    assert weight_substructure(SubstructureWeight.CONSTANT, "d", idx, st) == 1


def test_instance_weights():
    idx = build_index(make_pool([{"c"}] * 6, ["t"] * 5 + ["u"]))
    st = state_for(idx)
    assert all(weight_instance(InstanceWeight.RAND_EX, f"e{i}", idx, st) == 1 for i in range(6))
    assert weight_instance(InstanceWeight.FREQ_NEW_T, "e0", idx, st) == 5
    assert weight_instance(InstanceWeight.RAND_NEW_T, "e0", idx, st) == 1
    st.mark_template(idx.template_pos["t"])
    assert weight_instance(InstanceWeight.RAND_NEW_T, "e0", idx, st) == 0
    assert weight_instance(InstanceWeight.FREQ_NEW_T, "e0", idx, st) == 0
    assert weight_instance(InstanceWeight.FREQ_NEW_T, "e5", idx, st) == 1


def test_weights_track_live_pool():
    idx = build_index(make_pool([{"c"}] * 3, ["t"] * 3))
    idx.remove_instance("e0")
    st = state_for(idx)
    assert weight_substructure(SubstructureWeight.UNSEEN_FREQ, "c", idx, st) == 2
    assert weight_instance(InstanceWeight.FREQ_NEW_T, "e1", idx, st) == 2


# -- presets -------------------------------------------------------------------------

def test_preset_mapping():
    assert preset("subtree-freqnewt", 5).we is InstanceWeight.FREQ_NEW_T
    assert preset("subtree-randnewt", 5).wc is SubstructureWeight.UNSEEN_FREQ
    assert preset("template-freq", 5).substructure.kind is Kind.TEMPLATE
    assert preset("bigram", 5).wc is SubstructureWeight.UNSEEN_UNIFORM
    assert preset("bigram", 5).mark_instance_bag
    assert preset("bigram-freq", 5).wc is SubstructureWeight.UNSEEN_FREQ
    with pytest.raises(ConfigError):
        preset("random", 5)
    with pytest.raises(ConfigError):
        SamplerConfig(budget=-1)


# -- sample_diverse ------------------------------------------------------------------

def template_pool(templates):
    return make_pool([{f"T:{t}"} for t in templates], list(templates))


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_budget_zero(strategy):
    idx = build_index(template_pool(["a", "b"]))
    assert len(sample_diverse(idx, preset("template", 0), strategy)) == 0


@pytest.mark.parametrize("strategy", STRATEGIES)
@pytest.mark.parametrize("name", sorted(PRESETS))
def test_budget_covers_pool(name, strategy):
    rng = random.Random(5)
    bags = [{rng.choice("abcdef") for _ in range(rng.randint(0, 3))} for _ in range(25)]
    pool = make_pool(bags, [f"t{rng.randrange(4)}" for _ in bags])
    idx = build_index(pool)
    for budget in (25, 40):
        res = sample_diverse(idx, preset(name, budget, seed=2), strategy)
        assert sorted(res.ids) == sorted(r.id for r in pool)
    assert len(idx) == 25  # the caller's index is untouched


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_template_freq_example(strategy):
    # every tie-break outcome: the frequent template goes first and all three are covered
    pool = template_pool(["t1", "t1", "t2", "t3"])
    idx = build_index(pool)
    for seed in range(64):
        res = sample_diverse(idx, preset("template-freq", 3, seed), strategy)
        tmpl = {r.id: r.template for r in pool}
        assert tmpl[res.ids[0]] == "t1"
        assert {tmpl[i] for i in res.ids} == {"t1", "t2", "t3"}
        assert res.picks[0][1] == "T:t1"


def test_deterministic_and_seed_sensitive():
    rng = random.Random(6)
    bags = [{rng.choice("abcdefghij") for _ in range(3)} for _ in range(200)]
    idx = build_index(make_pool(bags))
    runs = [sample_diverse(idx, preset("subtree-randex", 50, 9)).picks for _ in range(2)]
    assert runs[0] == runs[1]
    assert sample_diverse(idx, preset("subtree-randex", 50, 10)).picks != runs[0]


def test_sample_ids_distinct_and_bounded():
    rng = random.Random(7)
    bags = [{rng.choice("abcd")} for _ in range(30)]
    idx = build_index(make_pool(bags))
    res = sample_diverse(idx, preset("subtree-freqnewt", 12, 1))
    assert len(res.ids) == len(set(res.ids)) == 12
    assert [p[0] for p in res.picks] == list(range(12))


def test_empty_bags_fall_back_to_uniform_instances():
    idx = build_index(make_pool([set(), set(), {"a"}]))
    res = sample_diverse(idx, preset("subtree-randex", 3, 0))
    assert res.picks[0][1] == "a"
    assert [k for _, k, _ in res.picks[1:]] == [None, None]


@pytest.mark.parametrize("seed", range(6))
def test_strategies_agree(seed):
    rng = random.Random(seed)
    n = rng.randint(20, 150)
    alphabet = "abcdefghijklmnop"[: rng.randint(2, 16)]
    bags = [{rng.choice(alphabet) for _ in range(rng.randint(0, 5))} for _ in range(n)]
    templates = [f"t{rng.randrange(rng.randint(1, 12))}" for _ in range(n)]
    idx = build_index(make_pool(bags, templates))
    for name in PRESETS:
        budget = rng.randint(0, n + 5)
        traces = {s: sample_diverse(idx, preset(name, budget, seed), s).picks for s in STRATEGIES}
        first = traces[STRATEGIES[0]]
        assert all(t == first for t in traces.values()), name


def test_constant_scheme_strategies_agree():
    rng = random.Random(11)
    bags = [{rng.choice("abcdef") for _ in range(2)} for _ in range(80)]
    idx = build_index(make_pool(bags, [f"t{rng.randrange(5)}" for _ in bags]))
    cfg = SamplerConfig(SubstructureConfig(Kind.SUBTREE), SubstructureWeight.CONSTANT,
                        InstanceWeight.RAND_NEW_T, 60, 4)
    traces = [sample_diverse(idx, cfg, s).picks for s in STRATEGIES]
    assert all(t == traces[0] for t in traces)


def test_freshness_checks_pass():
    rng = random.Random(12)
    bags = [{rng.choice("abcdefg") for _ in range(3)} for _ in range(120)]
    idx = build_index(make_pool(bags, [f"t{rng.randrange(9)}" for _ in bags]))
    res = sample_diverse(idx, preset("subtree-freqnewt", 120, 3), "linear", check_every=1)
    assert len(res) == 120


def test_resets_allow_cycling():
    # two keys, many holders: after both are sampled the set resets and sampling continues
    idx = build_index(make_pool([{"a"}] * 5 + [{"b"}] * 5))
    res = sample_diverse(idx, preset("subtree-randex", 6, 0), "linear")
    keys = [k for _, k, _ in res.picks]
    for i in range(0, 6, 2):
        assert set(keys[i:i + 2]) == {"a", "b"}


def test_unknown_strategy():
    with pytest.raises(ConfigError):
        sample_diverse(build_index([]), preset("template", 1), "fastest")


def test_auto_uses_python_without_kernels(monkeypatch):
    rng = random.Random(13)
    bags = [{rng.choice("abcde")} for _ in range(40)]
    idx = build_index(make_pool(bags))
    expected = sample_diverse(idx, preset("subtree-randex", 20, 5), "lazy").picks
    monkeypatch.setattr(_backend, "HAVE_COMPILED", False)
    assert sample_diverse(idx, preset("subtree-randex", 20, 5)).picks == expected
    with pytest.raises(ConfigError):
        sample_diverse(idx, preset("subtree-randex", 20, 5), "compiled")


# -- sample_random --------------------------------------------------------------------

def test_random_sample():
    pool = make_pool([set()] * 30)
    assert len(sample_random(pool, 0, 1)) == 0
    assert sorted(sample_random(pool, 30, 1).ids) == sorted(r.id for r in pool)
    assert sorted(sample_random(pool, 99, 1).ids) == sorted(r.id for r in pool)
    a, b = sample_random(pool, 10, 4), sample_random(pool, 10, 4)
    assert a.ids == b.ids and len(set(a.ids)) == 10
    assert all(k is None for _, k, _ in a.picks)
    assert sample_random(pool, 10, 5).ids != a.ids


def test_random_sample_is_roughly_uniform():
    ids = [str(i) for i in range(10)]
    hits = dict.fromkeys(ids, 0)
    for seed in range(2000):
        for rid in sample_random(ids, 3, seed).ids:
            hits[rid] += 1
    assert all(abs(h - 600) < 100 for h in hits.values())
