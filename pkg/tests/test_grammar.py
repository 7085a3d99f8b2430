import statistics
from collections import Counter

import pytest

from structdiv.astcore import LexerConfig, anonymize, parse_program
from structdiv.errors import ConfigError, DepthExceeded
from structdiv.grammar import ToyGrammar, bundled_grammar, gen_pool


def test_empty_and_deterministic():
    g = bundled_grammar()
    assert gen_pool(g, 0, 1) == []
    assert gen_pool(g, 50, 1) == gen_pool(g, 50, 1)
    assert gen_pool(g, 50, 1) != gen_pool(g, 50, 2)


def test_rows_parse_under_default_lexer():
    for row in gen_pool(bundled_grammar(), 500, 4):
        parse_program(row["program"], LexerConfig())
        assert row["utterance"] and "{" not in row["program"]


def test_template_distribution_is_heavy_tailed():
    rows = gen_pool(bundled_grammar(), 5000, 0)
    counts = Counter(anonymize(r["program"]) for r in rows)
    assert max(counts.values()) > 10 * statistics.median(counts.values())


def test_shared_slots_fill_both_sides():
    g = ToyGrammar.from_dict({"start": "S", "rules": {
        "S": [{"utterance": "the {N} and {N#2}", "program": "and ( {N} , {N#2} )"}],
        "N": [{"utterance": "cat", "program": "cat"}, {"utterance": "dog", "program": "dog"}],
    }})
    for row in gen_pool(g, 30, 0):
        a, b = row["utterance"].removeprefix("the ").split(" and ")
        assert row["program"] == f"and ( {a} , {b} )"


def test_depth_exceeded():
    g = ToyGrammar.from_dict({"start": "S", "max_depth": 3, "rules": {
        "S": [{"utterance": "x {S}", "program": "f ( {S} )"}],
    }})
    with pytest.raises(DepthExceeded):
        gen_pool(g, 1, 0)


def test_depth_bound_respected():
    g = ToyGrammar.from_dict({"start": "S", "max_depth": 4, "rules": {
        "S": [{"utterance": "x {S}", "program": "f ( {S} )", "weight": 100},
              {"utterance": "y", "program": "y"}],
    }})
    for row in gen_pool(g, 40, 0):
        assert row["program"].count("f") <= 3


@pytest.mark.parametrize("rules", [
    {"S": []},
    {"S": [{"utterance": "{A}", "program": "a"}]},
    {"S": [{"utterance": "{A}", "program": "{A}"}]},
    {"S": [{"utterance": "a", "program": "a", "weight": 0}]},
])
def test_invalid_grammars(rules):
    with pytest.raises(ConfigError):
        ToyGrammar.from_dict({"start": "S", "rules": rules})
