"""Object-relationship mapping: per-pair predicate counts and candidates.

Counts are exact 64-bit integers; conditional probabilities are computed
on demand in double precision. Ranking is always descending probability
with ties broken by ascending predicate string, so results are fully
deterministic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .corpus import TripletCorpus
from .errors import ConfigError, FormatError

Pair = Tuple[str, str]


@dataclass
class OrmTable:
    """Predicate counts per ordered (subject, object) label pair."""

    pair_counts: Dict[Pair, Dict[str, int]] = field(default_factory=dict)

    def pair_total(self, pair: Pair) -> int:
        return sum(self.pair_counts.get(pair, {}).values())

    def marginal(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for preds in self.pair_counts.values():
            for r, c in preds.items():
                out[r] = out.get(r, 0) + c
        return out

    def total(self) -> int:
        return sum(self.pair_total(p) for p in self.pair_counts)

    def __len__(self) -> int:
        return len(self.pair_counts)


@dataclass(frozen=True)
class LookupResult:
    """Ranked (predicate, probability) entries; backoff marks an unseen pair."""

    entries: Tuple[Tuple[str, float], ...]
    backoff: bool = False

    def predicates(self) -> List[str]:
        return [r for r, _ in self.entries]


def build_orm(corpus: TripletCorpus) -> OrmTable:
    """Accumulate weighted triplet counts into a pair-count table."""
    table = OrmTable()
    for (s, r, o), w in corpus.counts.items():
        preds = table.pair_counts.setdefault((s, o), {})
        preds[r] = preds.get(r, 0) + w
    return table


def merge(a: OrmTable, b: OrmTable) -> OrmTable:
    out = OrmTable({p: dict(preds) for p, preds in a.pair_counts.items()})
    for pair, preds in b.pair_counts.items():
        dst = out.pair_counts.setdefault(pair, {})
        for r, c in preds.items():
            dst[r] = dst.get(r, 0) + c
    return out


def _ranked(counts: Dict[str, int]) -> Tuple[Tuple[str, float], ...]:
    total = sum(counts.values())
    items = sorted(counts.items(), key=lambda kv: (-kv[1] / total, kv[0]))
    return tuple((r, c / total) for r, c in items)


def lookup(table: OrmTable, subject: str, obj: str,
           backoff: bool = True) -> LookupResult:
    """Conditional predicate distribution for an ordered label pair.

    Unseen pairs fall back to the global predicate marginal (flagged), or
    to an empty result when backoff is disabled.
    """
    counts = table.pair_counts.get((subject, obj))
    if counts:
        return LookupResult(_ranked(counts), backoff=False)
    if not backoff:
        return LookupResult((), backoff=True)
    marginal = table.marginal()
    if not marginal:
        return LookupResult((), backoff=True)
    return LookupResult(_ranked(marginal), backoff=True)


def sample_candidates(table: OrmTable, subject: str, obj: str,
                      m: int, k: int, seed: int,
                      backoff: bool = True,
                      weighted: bool = False) -> List[str]:
    """Draw K distinct predicates from the pair's top-M candidates.

    Uniform over K-subsets by default; weighted=True draws without
    replacement proportional to probability. Returns fewer than K items
    only when fewer candidates exist.
    """
    if k < 1 or m < 1:
        raise ConfigError("sample_candidates requires M >= 1 and K >= 1")
    if k > m:
        raise ConfigError(f"K ({k}) must not exceed M ({m})")
    top = list(lookup(table, subject, obj, backoff=backoff).entries)[:m]
    rng = random.Random(seed)
    if len(top) <= k:
        return [r for r, _ in top]
    if not weighted:
        return rng.sample([r for r, _ in top], k)
    chosen: List[str] = []
    pool = list(top)
    for _ in range(k):
        weights = [p for _, p in pool]
        idx = rng.choices(range(len(pool)), weights=weights, k=1)[0]
        chosen.append(pool.pop(idx)[0])
    return chosen


# ---------------------------------------------------------------------------
# TSV persistence: header line "#total <n>", then one line per
# (subject, object, predicate, count), sorted by subject, object, then
# descending count (ties ascending predicate).
# ---------------------------------------------------------------------------

def save_orm(table: OrmTable, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"#total\t{table.total()}\n")
        for (s, o) in sorted(table.pair_counts):
            preds = table.pair_counts[(s, o)]
            for r, c in sorted(preds.items(), key=lambda kv: (-kv[1], kv[0])):
                fh.write(f"{s}\t{o}\t{r}\t{c}\n")


def load_orm(path) -> OrmTable:
    table = OrmTable()
    declared_total: Optional[int] = None
    offset = 0
    with open(path, "rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.decode("utf-8").rstrip("\n")
            if lineno == 1:
                parts = line.split("\t")
                if len(parts) != 2 or parts[0] != "#total":
                    raise FormatError(
                        f"{path}: byte {offset}: expected '#total\\t<n>' header")
                try:
                    declared_total = int(parts[1])
                except ValueError as exc:
                    raise FormatError(
                        f"{path}: byte {offset}: bad total: {parts[1]}") from exc
                offset += len(raw)
                continue
            if not line:
                offset += len(raw)
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise FormatError(
                    f"{path}: byte {offset}: expected 4 tab-separated fields")
            s, o, r, count_str = parts
            try:
                count = int(count_str)
            except ValueError as exc:
                raise FormatError(
                    f"{path}: byte {offset}: bad count: {count_str}") from exc
            if count < 1:
                raise FormatError(f"{path}: byte {offset}: count must be >= 1")
            preds = table.pair_counts.setdefault((s, o), {})
            preds[r] = preds.get(r, 0) + count
            offset += len(raw)
    if declared_total is None:
        raise FormatError(f"{path}: missing '#total' header (empty file?)")
    if table.total() != declared_total:
        raise FormatError(
            f"{path}: byte {offset}: declared total {declared_total} "
            f"!= summed counts {table.total()} (truncated file?)")
    return table
