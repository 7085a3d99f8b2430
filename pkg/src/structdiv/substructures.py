"""Substructure extraction: subtrees, AST bigrams, templates, utterance n-grams.

Keys are plain strings with a one-letter kind prefix (``S:``, ``B:``, ``T:``,
``N:``), so keys of different kinds never collide and equal substructures are
byte-identical. Subtrees serialize as ``label(child,child)`` over the included
nodes in original child order; pruned siblings leave no marker, so ``f(a)``
cut out of ``f(a,b)`` equals a literal ``f(a)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol

from .astcore import Ast, LexerConfig, anonymize_tokens, build_ast, tokenize
from .errors import ConfigError, ParseFailure, ProgramError


class Kind(enum.Enum):
    SUBTREE = "subtree"
    BIGRAM = "bigram"
    TEMPLATE = "template"
    NGRAM = "ngram"

    @property
    def prefix(self) -> str:
        return _PREFIX[self]


_PREFIX = {Kind.SUBTREE: "S:", Kind.BIGRAM: "B:", Kind.TEMPLATE: "T:", Kind.NGRAM: "N:"}
_KIND_OF_PREFIX = {v[0]: k for k, v in _PREFIX.items()}


def key_kind(key: str) -> Kind:
    return _KIND_OF_PREFIX[key[0]]


def key_body(key: str) -> str:
    return key[2:]


@dataclass(frozen=True)
class SubstructureConfig:
    kind: Kind = Kind.SUBTREE
    d: int = 4
    n_max: int = 3

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "d": self.d, "n_max": self.n_max}

    @classmethod
    def from_dict(cls, data: dict) -> "SubstructureConfig":
        unknown = set(data) - {"kind", "d", "n_max"}
        if unknown:
            raise ConfigError(f"unknown substructure keys: {sorted(unknown)}")
        try:
            kind = Kind(data.get("kind", "subtree"))
        except ValueError:
            raise ConfigError(f"unknown substructure kind {data.get('kind')!r}") from None
        return cls(kind, int(data.get("d", 4)), int(data.get("n_max", 3)))


@dataclass(frozen=True)
class SubstructureBag:
    instance_id: str
    keys: frozenset[str]

    def __len__(self) -> int:
        return len(self.keys)

    def __iter__(self):
        return iter(self.keys)

    def __contains__(self, key: object) -> bool:
        return key in self.keys


_ESCAPES = str.maketrans({"\\": "\\\\", "(": "\\(", ")": "\\)", ",": "\\,"})


def escape_label(label: str) -> str:
    return label.translate(_ESCAPES)


def rooted_subtrees(ast: Ast, d: int) -> list[list[tuple[int, str]]]:
    """Per node, the distinct ``(size, serialization)`` of connected subtrees rooted there."""
    nodes = ast.nodes
    result: list[list[tuple[int, str]]] = [[] for _ in nodes]
    for v in reversed(range(len(nodes))):  # preorder ids: children have larger ids
        node = nodes[v]
        label = escape_label(node.label)
        combos: dict[tuple[str, ...], int] = {(): 0}
        for c in node.children:
            options = result[c]
            grown = dict(combos)
            for parts, size in combos.items():
                room = d - 1 - size
                for csize, cstr in options:
                    if csize <= room:
                        grown.setdefault(parts + (cstr,), size + csize)
            combos = grown
        result[v] = [
            (size + 1, f"{label}({','.join(parts)})" if parts else label)
            for parts, size in combos.items()
        ]
    return result


def enumerate_subtrees(ast: Ast, d: int = 4) -> set[str]:
    if d < 1:
        raise ConfigError(f"d must be >= 1, got {d}")
    prefix = Kind.SUBTREE.prefix
    return {prefix + s for per_node in rooted_subtrees(ast, d) for _, s in per_node}


def enumerate_bigrams(ast: Ast) -> set[str]:
    prefix = Kind.BIGRAM.prefix
    out: set[str] = set()
    nodes = ast.nodes
    for node in nodes:
        if not node.children:
            continue
        parent = escape_label(node.label)
        labels = [escape_label(nodes[c].label) for c in node.children]
        for lab in labels:
            out.add(f"{prefix}PC({parent},{lab})")
        for a, b in zip(labels, labels[1:]):
            out.add(f"{prefix}SIB({a},{b})")
    return out


def extract_ngrams(utterance: str, n_max: int = 3) -> set[str]:
    words = utterance.split()
    prefix = Kind.NGRAM.prefix
    return {
        prefix + " ".join(words[i:i + n])
        for n in range(1, n_max + 1)
        for i in range(len(words) - n + 1)
    }


def template_key(template: str) -> str:
    return Kind.TEMPLATE.prefix + template


class HasProgram(Protocol):
    id: str
    utterance: str
    program: str


class BagExtractor:
    """Computes bags, caching per program and per template.

    AST-derived bags depend only on the template, so the tree is built once
    per distinct template.
    """

    def __init__(self, cfg: SubstructureConfig = SubstructureConfig(),
                 lexer: LexerConfig = LexerConfig()) -> None:
        self.cfg = cfg
        self.lexer = lexer
        self._by_template: dict[str, frozenset[str]] = {}
        self._by_program: dict[str, tuple[str, frozenset[str] | None]] = {}

    def parse(self, program: str) -> tuple[str, frozenset[str] | None]:
        """Template for ``program`` and its cached bag (None for n-gram kind)."""
        hit = self._by_program.get(program)
        if hit is not None:
            return hit
        tokens = anonymize_tokens(tokenize(program, self.lexer), self.lexer)
        template = " ".join(t.text for t in tokens)
        bag = None
        if self.cfg.kind is not Kind.NGRAM:
            bag = self._by_template.get(template)
            if bag is None:
                bag = frozenset(self._ast_bag(template, build_ast(tokens)))
                self._by_template[template] = bag
        else:
            build_ast(tokens)  # still reject malformed programs
        self._by_program[program] = (template, bag)
        return template, bag

    def _ast_bag(self, template: str, ast: Ast) -> set[str]:
        kind = self.cfg.kind
        if kind is Kind.SUBTREE:
            return enumerate_subtrees(ast, self.cfg.d)
        if kind is Kind.BIGRAM:
            return enumerate_bigrams(ast)
        return {template_key(template)}

    def template_and_bag(self, instance: HasProgram) -> tuple[str, SubstructureBag]:
        try:
            template, keys = self.parse(instance.program)
        except ProgramError as exc:
            raise ParseFailure(instance.id, exc) from exc
        if keys is None:
            keys = frozenset(extract_ngrams(instance.utterance, self.cfg.n_max))
        return template, SubstructureBag(instance.id, keys)


def substructure_map(instance: HasProgram, cfg: SubstructureConfig = SubstructureConfig(),
                     lexer: LexerConfig = LexerConfig()) -> SubstructureBag:
    return BagExtractor(cfg, lexer).template_and_bag(instance)[1]
