"""Structurally diverse subsampling of (utterance, program) pools."""

__version__ = "0.1.0"

from .astcore import LexerConfig, anonymize, build_ast, parse_program, tokenize
from .dataset import InstanceRecord, filter_frequency_cap, ingest
from .index import PoolIndex, build_index
from .sampler import SamplerConfig, preset, sample_diverse, sample_random
from .substructures import Kind, SubstructureConfig, enumerate_bigrams, enumerate_subtrees

__all__ = [
    "InstanceRecord", "Kind", "LexerConfig", "PoolIndex", "SamplerConfig", "SubstructureConfig",
    "anonymize", "build_ast", "build_index", "enumerate_bigrams", "enumerate_subtrees",
    "filter_frequency_cap", "ingest", "parse_program", "preset", "sample_diverse",
    "sample_random", "tokenize",
]
