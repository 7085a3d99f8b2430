"""Program tokenization, AST construction and template anonymization.

The pipeline for one program is ``tokenize -> anonymize_tokens -> build_ast``.
Tokens are whitespace delimited, double-quoted strings are atomic, and
single-character structural tokens (parentheses, commas) are split off from
neighbouring text.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional

from .errors import ConfigError, EmptyProgram, UnbalancedParens, UnbalancedQuote

OPEN = "("
CLOSE = ")"
ROOT_LABEL = "@ROOT"


class TokenClass(enum.Enum):
    FUNCTION = "function"
    VALUE = "value"
    STRUCTURAL = "structural"


class FunctionRule(enum.Enum):
    # token immediately followed by "(" is a function: count ( find ( dog ) )
    NEXT_IS_OPEN_PAREN = "next-is-open-paren"
    # only listed tokens are functions: ( Person ) filter id =~ "x"
    EXPLICIT_LIST = "explicit-list"
    # token immediately after "(" is a function: (listValue (filter ...))
    SEXPR_HEAD = "sexpr-head"


@dataclass(frozen=True)
class Token:
    text: str
    cls: TokenClass
    position: int


DEFAULT_RULES: tuple[tuple[str, str], ...] = (
    (r'"(?:[^"\\]|\\.)*"', "@STR"),
    (r"[-+]?\d+(?:\.\d+)?", "@NUM"),
)


@dataclass(frozen=True)
class LexerConfig:
    structural_tokens: frozenset[str] = frozenset({OPEN, CLOSE, ","})
    anonymization_rules: tuple[tuple[str, str], ...] = DEFAULT_RULES
    function_rule: FunctionRule = FunctionRule.NEXT_IS_OPEN_PAREN
    function_names: frozenset[str] = frozenset()
    split_structural: bool = True

    def __post_init__(self) -> None:
        if OPEN not in self.structural_tokens or CLOSE not in self.structural_tokens:
            raise ConfigError("structural_tokens must contain '(' and ')'")
        for pattern, placeholder in self.anonymization_rules:
            if placeholder in self.structural_tokens:
                raise ConfigError(f"placeholder {placeholder!r} collides with a structural token")
            if not placeholder or any(ch.isspace() for ch in placeholder):
                raise ConfigError(f"invalid placeholder {placeholder!r}")
            try:
                re.compile(pattern)
            except re.error as exc:
                raise ConfigError(f"bad anonymization pattern {pattern!r}: {exc}") from None
        if self.function_rule is FunctionRule.EXPLICIT_LIST and not self.function_names:
            raise ConfigError("explicit-list function rule needs function_names")

    @cached_property
    def compiled_rules(self) -> tuple[tuple[re.Pattern, str], ...]:
        return tuple((re.compile(p), ph) for p, ph in self.anonymization_rules)

    @cached_property
    def split_chars(self) -> frozenset[str]:
        if not self.split_structural:
            return frozenset()
        return frozenset(t for t in self.structural_tokens if len(t) == 1)

    @cached_property
    def word_pattern(self) -> re.Pattern:
        return _word_pattern(self.split_chars)

    @classmethod
    def from_dict(cls, data: dict) -> "LexerConfig":
        known = {"structural_tokens", "anonymization_rules", "function_rule",
                 "function_names", "split_structural"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown lexer keys: {sorted(unknown)}")
        kwargs: dict = {}
        if "structural_tokens" in data:
            kwargs["structural_tokens"] = frozenset(data["structural_tokens"])
        if "anonymization_rules" in data:
            rules = []
            for rule in data["anonymization_rules"]:
                try:
                    rules.append((str(rule["pattern"]), str(rule["placeholder"])))
                except (TypeError, KeyError):
                    raise ConfigError(f"anonymization rule needs pattern and placeholder: {rule!r}") from None
            kwargs["anonymization_rules"] = tuple(rules)
        if "function_rule" in data:
            try:
                kwargs["function_rule"] = FunctionRule(data["function_rule"])
            except ValueError:
                raise ConfigError(f"unknown function_rule {data['function_rule']!r}") from None
        if "function_names" in data:
            kwargs["function_names"] = frozenset(data["function_names"])
        if "split_structural" in data:
            kwargs["split_structural"] = bool(data["split_structural"])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "structural_tokens": sorted(self.structural_tokens),
            "anonymization_rules": [
                {"pattern": p, "placeholder": ph} for p, ph in self.anonymization_rules
            ],
            "function_rule": self.function_rule.value,
            "function_names": sorted(self.function_names),
            "split_structural": self.split_structural,
        }


def _word_pattern(split_chars: frozenset[str]) -> re.Pattern:
    cls = re.escape("".join(sorted(split_chars)))
    word = rf'(?:"(?:[^"\\]|\\.)*"|[^\s"{cls}])+' if cls else r'(?:"(?:[^"\\]|\\.)*"|[^\s"])+'
    single = rf"|[{cls}]" if cls else ""
    return re.compile(rf'{word}{single}|(")')


def _split_words(program: str, cfg: "LexerConfig") -> list[str]:
    words = []
    for m in cfg.word_pattern.finditer(program):
        if m.group(1) is not None:
            raise UnbalancedQuote(f"unterminated string literal at offset {m.start()}: {program!r}")
        words.append(m.group(0))
    return words


def tokenize(program: str, cfg: LexerConfig = LexerConfig()) -> list[Token]:
    words = _split_words(program, cfg)
    structural = cfg.structural_tokens
    rule = cfg.function_rule
    tokens = []
    for pos, text in enumerate(words):
        if text in structural:
            cls = TokenClass.STRUCTURAL
        elif rule is FunctionRule.NEXT_IS_OPEN_PAREN:
            is_fn = pos + 1 < len(words) and words[pos + 1] == OPEN
            cls = TokenClass.FUNCTION if is_fn else TokenClass.VALUE
        elif rule is FunctionRule.EXPLICIT_LIST:
            cls = TokenClass.FUNCTION if text in cfg.function_names else TokenClass.VALUE
        else:
            is_fn = pos > 0 and words[pos - 1] == OPEN
            cls = TokenClass.FUNCTION if is_fn else TokenClass.VALUE
        tokens.append(Token(text, cls, pos))
    return tokens


def anonymize_text(text: str, cfg: LexerConfig) -> str:
    for pattern, placeholder in cfg.compiled_rules:
        if pattern.fullmatch(text):
            return placeholder
    return text


def anonymize_tokens(tokens: Iterable[Token], cfg: LexerConfig = LexerConfig()) -> list[Token]:
    out = []
    for tok in tokens:
        if tok.cls is TokenClass.STRUCTURAL:
            out.append(tok)
        else:
            out.append(Token(anonymize_text(tok.text, cfg), tok.cls, tok.position))
    return out


def anonymize(program: str, cfg: LexerConfig = LexerConfig()) -> str:
    """Template of ``program``: literals replaced by placeholders, space joined."""
    return " ".join(t.text for t in anonymize_tokens(tokenize(program, cfg), cfg))


@dataclass(frozen=True)
class AstNode:
    label: str
    cls: TokenClass
    children: tuple[int, ...] = ()


@dataclass(frozen=True)
class Ast:
    """Ordered labeled tree; node ids are preorder positions, root is 0."""

    nodes: tuple[AstNode, ...] = ()
    synthetic_root: bool = False

    @property
    def root(self) -> Optional[int]:
        return 0 if self.nodes else None

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def parents(self) -> tuple[int, ...]:
        parent = [-1] * len(self.nodes)
        for i, node in enumerate(self.nodes):
            for c in node.children:
                parent[c] = i
        return tuple(parent)

    def preorder(self) -> Iterator[int]:
        if not self.nodes:
            return
        stack = [0]
        while stack:
            i = stack.pop()
            yield i
            stack.extend(reversed(self.nodes[i].children))

    def depth(self) -> int:
        if not self.nodes:
            return 0
        best = 0
        stack = [(0, 1)]
        while stack:
            i, d = stack.pop()
            best = max(best, d)
            stack.extend((c, d + 1) for c in self.nodes[i].children)
        return best

    def to_program(self) -> str:
        """Serialize back to ``f ( a , b )`` form (default function rule)."""
        if not self.nodes:
            return ""

        def render(i: int) -> str:
            node = self.nodes[i]
            if node.cls is TokenClass.FUNCTION:
                inner = " , ".join(render(c) for c in node.children)
                return f"{node.label} ( {inner} )" if inner else f"{node.label} ( )"
            return node.label

        if self.synthetic_root:
            return " ".join(render(c) for c in self.nodes[0].children)
        return render(0)


def build_ast(tokens: list[Token]) -> Ast:
    """Build the tree for a token sequence.

    A function token followed by ``(`` takes the parenthesised, comma
    separated elements as children. A function token with no ``(`` after it
    takes the remaining elements of its enclosing group. Parentheses that do
    not follow a function only group. Several top-level nodes are placed
    under a synthetic ``@ROOT``.
    """
    if not tokens:
        raise EmptyProgram("program has no tokens")
    labels: list[str] = []
    classes: list[TokenClass] = []
    children: list[list[int]] = []
    n = len(tokens)

    def new_node(tok: Token) -> int:
        labels.append(tok.text)
        classes.append(tok.cls)
        children.append([])
        return len(labels) - 1

    def expect_close(i: int) -> int:
        if i >= n or tokens[i].text != CLOSE:
            raise UnbalancedParens("missing ')'")
        return i + 1

    def parse_seq(i: int, depth: int) -> tuple[list[int], int]:
        items: list[int] = []
        while i < n:
            tok = tokens[i]
            if tok.text == CLOSE:
                if depth == 0:
                    raise UnbalancedParens(f"unexpected ')' at token {i}")
                return items, i
            if tok.text == OPEN:
                sub, i = parse_seq(i + 1, depth + 1)
                i = expect_close(i)
                items.extend(sub)
            elif tok.cls is TokenClass.STRUCTURAL:
                i += 1
            elif tok.cls is TokenClass.FUNCTION:
                node = new_node(tok)
                if i + 1 < n and tokens[i + 1].text == OPEN:
                    sub, i = parse_seq(i + 2, depth + 1)
                    i = expect_close(i)
                else:
                    sub, i = parse_seq(i + 1, depth)
                children[node] = sub
                items.append(node)
            else:
                items.append(new_node(tok))
                i += 1
        if depth > 0:
            raise UnbalancedParens("missing ')' at end of program")
        return items, i

    top, _ = parse_seq(0, 0)
    if not top:
        return Ast()
    if len(top) == 1:
        nodes = tuple(AstNode(labels[k], classes[k], tuple(children[k])) for k in range(len(labels)))
        return Ast(nodes)
    root = AstNode(ROOT_LABEL, TokenClass.FUNCTION, tuple(k + 1 for k in top))
    shifted = tuple(
        AstNode(labels[k], classes[k], tuple(c + 1 for c in children[k])) for k in range(len(labels))
    )
    return Ast((root,) + shifted, synthetic_root=True)


def parse_program(program: str, cfg: LexerConfig = LexerConfig()) -> tuple[str, Ast]:
    """Return ``(template, anonymized AST)`` for one program."""
    tokens = anonymize_tokens(tokenize(program, cfg), cfg)
    template = " ".join(t.text for t in tokens)
    return template, build_ast(tokens)
