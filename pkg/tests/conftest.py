import itertools
import random

import pytest

from structdiv.astcore import Ast, AstNode, TokenClass
from structdiv.dataset import InstanceRecord
from structdiv.substructures import SubstructureBag


def make_pool(bags, templates=None):
    """Records with explicit bags; ids are e0, e1, ..."""
    templates = templates or [f"t{i}" for i in range(len(bags))]
    return [
        InstanceRecord(f"e{i}", "", "", t, SubstructureBag(f"e{i}", frozenset(b)))
        for i, (b, t) in enumerate(zip(bags, templates))
    ]


def tree_from_parents(parents, labels):
    """Ast from a parent array (parents[0] is None) with children in index order."""
    children = [[] for _ in parents]
    for i, p in enumerate(parents):
        if p is not None:
            children[p].append(i)
    order, stack = [], [0]
    while stack:
        i = stack.pop()
        order.append(i)
        stack.extend(reversed(children[i]))
    new = {old: pos for pos, old in enumerate(order)}
    nodes = tuple(
        AstNode(labels[i], TokenClass.FUNCTION if children[i] else TokenClass.VALUE,
                tuple(new[c] for c in children[i]))
        for i in order
    )
    return Ast(nodes)


def random_tree(rng: random.Random, n: int, alphabet: str = "abc"):
    parents = [None] + [rng.randrange(i) for i in range(1, n)]
    labels = [rng.choice(alphabet) for _ in range(n)]
    return tree_from_parents(parents, labels)


@pytest.fixture
def rng():
    return random.Random(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
