"""Run configuration: a flat `key = value` text file plus flag overrides.

Booleans accept true/false/yes/no/1/0. Unknown keys are rejected so typos
fail loudly. Command-line flags always win over file values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional

from .core import Vocabulary
from .errors import ConfigError, FormatError


@dataclass
class RunConfig:
    d: int = 16
    r: int = 4
    e: int = 8
    lambda1: float = 1.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    learning_rate: float = 0.5
    epochs: int = 100
    m_candidates: int = 10
    k_candidates: int = 5
    seed: int = 0
    sigma: float = 0.1
    # ablation switches (each disabled mechanism becomes a passthrough)
    object_attention: bool = True
    geometric_encoding_objects: bool = True
    geometric_encoding_relationships: bool = True
    subject_object_attention: bool = True
    attention_mean: bool = True
    # modes
    strict_oov: bool = False
    orm_backoff: bool = True
    micro_recall: bool = False
    graph_constraint: bool = True
    zeroshot_temperature: float = 1.0
    synonym_threshold: float = 0.6
    longtail_threshold: int = 1024
    min_count: int = 1
    workers: int = 1

    def __post_init__(self):
        if min(self.d, self.r, self.e) < 1:
            raise ConfigError("dimensions must be >= 1")
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.k_candidates > self.m_candidates:
            raise ConfigError("K must not exceed M")


_BOOL = {"true": True, "yes": True, "1": True,
         "false": False, "no": False, "0": False}


def _parse_value(field: dataclasses.Field, raw: str):
    if field.type in ("bool", bool):
        key = raw.strip().lower()
        if key not in _BOOL:
            raise FormatError(f"bad boolean for {field.name}: {raw!r}")
        return _BOOL[key]
    if field.type in ("int", int):
        return int(raw)
    if field.type in ("float", float):
        return float(raw)
    return raw


def load_config(path) -> RunConfig:
    values: Dict[str, object] = {}
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise FormatError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in stripped.split("=", 1))
            if key not in fields:
                raise FormatError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _parse_value(fields[key], raw)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return RunConfig(**values)


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        for f in dataclasses.fields(RunConfig):
            fh.write(f"{f.name} = {getattr(cfg, f.name)}\n")


def apply_overrides(cfg: RunConfig, overrides: Dict[str, Optional[object]]
                    ) -> RunConfig:
    changes = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(cfg, **changes)


# Vocabulary TSV: "label<TAB>count", one line per label.

def save_vocab(vocab: Vocabulary, path) -> None:
    with open(path, "w") as fh:
        for label, count in zip(vocab.labels, vocab.counts):
            fh.write(f"{label}\t{count}\n")


def load_vocab(path) -> Vocabulary:
    items = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'label<TAB>count'")
            try:
                items.append((parts[0], int(parts[1])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad count") from exc
    return Vocabulary.make(items)
