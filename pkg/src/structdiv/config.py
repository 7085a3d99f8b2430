"""Lexer/substructure profiles stored as YAML files.

A profile name resolves to ``$STRUCTDIV_CONFIG_DIR/<name>.yaml`` when that
file exists, otherwise to the profile bundled with the package.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .astcore import LexerConfig
from .errors import ConfigError
from .substructures import SubstructureConfig

CONFIG_DIR_ENV = "STRUCTDIV_CONFIG_DIR"
BUNDLED_PROFILES = ("covr", "schema2qa", "sexpr")


@dataclass(frozen=True)
class Profile:
    name: str
    lexer: LexerConfig
    d: int = 4
    n_max: int = 3

    def substructure(self, kind=None) -> SubstructureConfig:
        from .substructures import Kind
        return SubstructureConfig(kind or Kind.SUBTREE, self.d, self.n_max)

    def to_dict(self) -> dict:
        return {"name": self.name, "lexer": self.lexer.to_dict(),
                "substructure": {"d": self.d, "n_max": self.n_max}}


def parse_profile(data: dict, name: str) -> Profile:
    if not isinstance(data, dict):
        raise ConfigError(f"profile {name!r} must be a mapping")
    unknown = set(data) - {"lexer", "substructure"}
    if unknown:
        raise ConfigError(f"profile {name!r}: unknown sections {sorted(unknown)}")
    lexer = LexerConfig.from_dict(data.get("lexer") or {})
    sub = data.get("substructure") or {}
    bad = set(sub) - {"d", "n_max"}
    if bad:
        raise ConfigError(f"profile {name!r}: unknown substructure keys {sorted(bad)}")
    d, n_max = int(sub.get("d", 4)), int(sub.get("n_max", 3))
    SubstructureConfig(d=d, n_max=n_max)  # validates ranges
    return Profile(name, lexer, d, n_max)


def load_profile_file(path: str | Path) -> Profile:
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    return parse_profile(data, str(path))


def load_profile(name: str = "covr") -> Profile:
    config_dir = os.environ.get(CONFIG_DIR_ENV)
    if config_dir:
        candidate = Path(config_dir) / f"{name}.yaml"
        if candidate.is_file():
            return load_profile_file(candidate)
    try:
        text = resources.files("structdiv").joinpath("profiles", f"{name}.yaml").read_text("utf-8")
    except FileNotFoundError:
        raise ConfigError(f"unknown profile {name!r}") from None
    profile = parse_profile(yaml.safe_load(text) or {}, name)
    return profile
