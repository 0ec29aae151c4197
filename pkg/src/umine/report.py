"""Result containers shared by every miner."""
from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class ItemsetResult:
    items: tuple
    esup: Optional[float]
    freq_prob: Optional[float] = None


@dataclass
class RunMetrics:
    wall_ms: float = 0.0
    peak_bytes: Optional[int] = None
    candidates: int = 0
    evaluated: int = 0  # exact frequent-probability computations
    pruned: int = 0  # candidates discarded by a tail bound


@dataclass
class MiningReport:
    """Output of one mining run.

    ``itemsets`` is kept in canonical order (by size, then lexicographic).
    ``threshold`` is the absolute expected-support threshold of the run when
    the algorithm has one.
    """

    algorithm: str
    n_transactions: int
    itemsets: list = field(default_factory=list)
    metrics: RunMetrics = field(default_factory=RunMetrics)
    threshold: Optional[float] = None

    def __post_init__(self):
        self.itemsets = sorted(self.itemsets, key=lambda r: (len(r.items), r.items))

    def keys(self) -> set:
        return {r.items for r in self.itemsets}

    def esup_map(self) -> dict:
        return {r.items: r.esup for r in self.itemsets}

    def prob_map(self) -> dict:
        return {r.items: r.freq_prob for r in self.itemsets}

    def __len__(self):
        return len(self.itemsets)

    def to_text(self) -> str:
        """Stable text rendering used for result files (one itemset per line)."""
        lines = []
        for r in self.itemsets:
            esup = "" if r.esup is None else f"{r.esup:.12g}"
            prob = "" if r.freq_prob is None else f"{r.freq_prob:.12g}"
            lines.append(f"{' '.join(map(str, r.items))}\t{esup}\t{prob}\n")
        return "".join(lines)


@contextmanager
def timed(metrics: RunMetrics):
    start = time.perf_counter()
    try:
        yield metrics
    finally:
        metrics.wall_ms = (time.perf_counter() - start) * 1e3


def downward_close(itemsets) -> set:
    """Largest downward-closed subfamily of ``itemsets``.

    Keeps an itemset only if every subset one item smaller is kept too.
    """
    by_size: dict = {}
    for x in itemsets:
        by_size.setdefault(len(x), []).append(x)
    kept: set = set()
    for size in sorted(by_size):
        for x in by_size[size]:
            if size == 1 or all(x[:k] + x[k + 1:] in kept for k in range(size)):
                kept.add(x)
    return kept
