"""Synthetic deterministic transaction data and the default experiment scenarios.

Transactions are assembled from a pool of potential patterns. The pool
(pattern contents, pattern weights, item popularity) depends only on the seed
and the item universe, so databases of different sizes drawn with the same
seed share their itemset structure; this is what makes size sweeps
comparable. Each transaction picks one pattern, keeps each of its items with
probability ``1 - corruption``, and is topped up with items drawn by
popularity until it reaches its sampled length.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .udb import MiningParams, ParameterError, UncertainDatabase, assign_gaussian

DENSITY_TOLERANCE = 0.01  # relative slack between density and avg_len / n_items


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a synthetic database.

    ``density`` defaults to ``avg_len / n_items``. The pattern fields control
    how much co-occurrence structure the data carries: ``n_patterns``
    potential patterns of mean length ``pattern_len``, of which each
    transaction keeps a ``1 - corruption`` fraction, with item popularity
    following a power law of exponent ``item_skew``.
    """

    n_transactions: int
    n_items: int
    avg_len: float
    density: float | None = None
    seed: int = 0
    n_patterns: int = 100
    pattern_len: float = 6.0
    corruption: float = 0.3
    item_skew: float = 1.0

    def __post_init__(self):
        if self.density is None:
            object.__setattr__(self, "density", self.avg_len / self.n_items if self.n_items else 0.0)
        self.validate()

    def validate(self):
        if self.n_transactions < 0:
            raise ParameterError("n_transactions must be non-negative")
        if self.n_items < 1:
            raise ParameterError("n_items must be at least 1")
        if not 1.0 <= self.avg_len <= self.n_items:
            raise ParameterError(f"avg_len must lie in [1, n_items], got {self.avg_len}")
        want = self.avg_len / self.n_items
        if not 0.0 < self.density <= 1.0 or abs(self.density - want) > DENSITY_TOLERANCE * want + 5e-4:
            raise ParameterError(f"density {self.density} does not match avg_len / n_items = {want:.6g}")
        if self.n_patterns < 1 or self.pattern_len < 1:
            raise ParameterError("need at least one pattern of length >= 1")
        if not 0.0 <= self.corruption < 1.0:
            raise ParameterError("corruption must lie in [0, 1)")
        if self.item_skew < 0:
            raise ParameterError("item_skew must be non-negative")

    def scaled(self, n_transactions: int) -> "SynthSpec":
        """Same shape and pattern pool, different number of transactions."""
        return replace(self, n_transactions=int(n_transactions))


class TransactionList(Sequence):
    """Deterministic transactions in CSR form; rows read back as sorted tuples."""

    def __init__(self, indptr: np.ndarray, items: np.ndarray):
        self.indptr = indptr
        self.items = items

    def __len__(self):
        return len(self.indptr) - 1

    def __getitem__(self, t):
        if isinstance(t, slice):
            return [self[i] for i in range(*t.indices(len(self)))]
        if t < 0:
            t += len(self)
        if not 0 <= t < len(self):
            raise IndexError(t)
        return tuple(self.items[self.indptr[t]:self.indptr[t + 1]].tolist())

    def __eq__(self, other):
        if isinstance(other, TransactionList):
            return np.array_equal(self.indptr, other.indptr) and np.array_equal(self.items, other.items)
        return list(self) == list(other)

    @property
    def n_units(self) -> int:
        return int(self.indptr[-1])

    def average_length(self) -> float:
        return self.n_units / len(self) if len(self) else 0.0


def _pattern_pool(spec: SynthSpec):
    rng = np.random.default_rng([spec.seed, 1])
    n = spec.n_items
    popularity = np.arange(1, n + 1, dtype=np.float64) ** (-spec.item_skew)
    popularity = popularity[rng.permutation(n)]
    popularity /= popularity.sum()
    lengths = np.minimum(1 + rng.poisson(spec.pattern_len - 1, spec.n_patterns), n)
    patterns = [np.sort(rng.choice(n, int(k), replace=False, p=popularity)) for k in lengths]
    weights = rng.exponential(1.0, spec.n_patterns)
    return popularity, patterns, weights / weights.sum()


def _rank_within_rows(rows: np.ndarray, keys: np.ndarray) -> tuple:
    order = np.lexsort((keys, rows))
    r = rows[order]
    starts = np.flatnonzero(np.r_[True, r[1:] != r[:-1]])
    run = np.diff(np.r_[starts, len(r)])
    rank = np.arange(len(r)) - np.repeat(starts, run)
    return order, rank


def generate_synthetic(spec: SynthSpec) -> TransactionList:
    """Deterministic transactions with the requested shape.

    Lengths are ``1 + Binomial(n_items - 1, (avg_len - 1) / (n_items - 1))``:
    mean exactly ``avg_len``, always within ``[1, n_items]``, Poisson-like
    when the universe is large. Items inside a row are distinct and sorted.
    """
    spec.validate()
    n_rows, n = spec.n_transactions, spec.n_items
    if n_rows == 0:
        return TransactionList(np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))
    popularity, patterns, weights = _pattern_pool(spec)
    rng = np.random.default_rng([spec.seed, 2])
    if n > 1:
        lengths = 1 + rng.binomial(n - 1, (spec.avg_len - 1) / (n - 1), n_rows)
    else:
        lengths = np.ones(n_rows, dtype=np.int64)

    # pattern part: corrupted copy of one pattern, truncated to the row length
    choice = rng.choice(len(patterns), n_rows, p=weights)
    plen = np.array([len(p) for p in patterns], dtype=np.int64)
    pstart = np.r_[0, np.cumsum(plen)[:-1]]
    flat = np.concatenate(patterns)
    counts = plen[choice]
    rows = np.repeat(np.arange(n_rows), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    items = flat[np.repeat(pstart[choice], counts) + offs]
    keep = rng.random(len(items)) >= spec.corruption
    rows, items = rows[keep], items[keep]
    order, rank = _rank_within_rows(rows, rng.random(len(rows)))
    rows, items = rows[order], items[order]
    fit = rank < lengths[rows]
    rows, items = rows[fit], items[fit]

    # top-up part: popularity draws, redrawing collisions until rows are sets.
    # key packs (row, item, drawn-flag) so that a pattern item sorts before a
    # drawn duplicate of it and only the drawn copy is replaced
    need = lengths - np.bincount(rows, minlength=n_rows)
    extra_rows = np.repeat(np.arange(n_rows), need)
    extra = rng.choice(n, len(extra_rows), p=popularity)
    key = np.concatenate([(rows * n + items) * 2, (extra_rows * n + extra) * 2 + 1])
    active = np.arange(len(key))
    for rounds in range(10_000):
        sub = np.sort(key[active])
        pair = sub >> 1
        dup = np.r_[False, pair[1:] == pair[:-1]]
        k = int(dup.sum())
        if k == 0:
            break
        # popularity draws first; uniform redraws guarantee progress on crowded rows
        fresh = rng.choice(n, k, p=popularity) if rounds < 8 else rng.integers(0, n, k)
        dup_rows = pair[dup] // n
        sub[dup] = (dup_rows * n + fresh) * 2 + 1
        # keep only rows that just changed for the next check
        changed = np.zeros(n_rows, dtype=bool)
        changed[dup_rows] = True
        key[active] = sub
        active = active[changed[(sub >> 1) // n]]
    else:  # pragma: no cover - only reachable for rows holding nearly every item
        raise RuntimeError("collision resolution did not converge")
    pair = np.sort(key) >> 1
    rows, items = pair // n, pair % n
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
    return TransactionList(indptr, items.astype(np.int64))


@dataclass(frozen=True)
class Scenario:
    """Default parameter bundle for one benchmark dataset."""

    name: str
    spec: SynthSpec
    mean: float
    variance: float
    min_sup: float
    pft: float

    def params(self, **overrides) -> MiningParams:
        values = dict(min_esup=self.min_sup, min_sup=self.min_sup, pft=self.pft)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return MiningParams(**values)

    def scaled(self, n_transactions: int) -> "Scenario":
        return replace(self, name=f"{self.name}@{n_transactions}",
                       spec=self.spec.scaled(n_transactions))

    def transactions(self) -> TransactionList:
        return generate_synthetic(self.spec)

    def database(self, seed: int | None = None) -> UncertainDatabase:
        """Generated transactions with Gaussian existence probabilities."""
        seed = self.spec.seed if seed is None else seed
        return assign_gaussian(self.transactions(), self.mean, self.variance, seed)

    def __iter__(self):
        # unpacks as (spec, mean, variance, min_sup, pft)
        return iter((self.spec, self.mean, self.variance, self.min_sup, self.pft))


# transactions, items, average length; then mean, variance, min_sup, pft
_TABLE = {
    "connect": ((67557, 129, 43.0), (0.95, 0.05, 0.5, 0.9),
                dict(n_patterns=40, pattern_len=30.0, corruption=0.15, item_skew=1.2)),
    "accident": ((340183, 468, 33.8), (0.5, 0.5, 0.5, 0.9),
                 dict(n_patterns=60, pattern_len=20.0, corruption=0.2, item_skew=1.2)),
    "kosarak": ((990002, 41270, 8.1), (0.5, 0.5, 0.0005, 0.9),
                dict(n_patterns=2000, pattern_len=4.0, corruption=0.3, item_skew=1.0)),
    "gazelle": ((59601, 498, 2.5), (0.95, 0.05, 0.025, 0.9),
                dict(n_patterns=300, pattern_len=2.5, corruption=0.3, item_skew=0.8)),
    "t25i15d320k": ((320000, 994, 25.0), (0.9, 0.1, 0.1, 0.9),
                    dict(n_patterns=200, pattern_len=15.0, corruption=0.5, item_skew=0.8)),
}
SCENARIO_NAMES = tuple(_TABLE)
_T25_ALIAS = re.compile(r"t25i15d(\d+)k")


def _base(name: str, seed: int) -> Scenario:
    (n_rows, n_items, avg), (mean, var, min_sup, pft), shape = _TABLE[name]
    spec = SynthSpec(n_rows, n_items, avg, seed=seed, **shape)
    return Scenario(name, spec, mean, var, min_sup, pft)


def scenario(name: str, seed: int = 0) -> Scenario:
    """Look up a scenario by name.

    Accepts the five dataset names, ``NAME@N`` for a copy scaled to ``N``
    transactions (density and average length unchanged), ``NAME-Nk`` for
    ``N`` thousand, and ``t25i15dNk`` for the synthetic family at ``N``
    thousand transactions. Unknown names raise ``KeyError``.
    """
    key = name.strip().lower()
    if key in _TABLE:
        return _base(key, seed)
    if "@" in key:
        base, _, size = key.rpartition("@")
        if size.isdigit():
            sc = scenario(base, seed)
            return replace(sc, name=key, spec=sc.spec.scaled(int(size)))
    m = re.fullmatch(r"([a-z0-9]+)-(\d+)k", key)
    if m and m.group(1) in _TABLE:
        return _base(m.group(1), seed).scaled(int(m.group(2)) * 1000)
    m = _T25_ALIAS.fullmatch(key)
    if m:
        sc = _base("t25i15d320k", seed).scaled(int(m.group(1)) * 1000)
        return replace(sc, name=key)
    raise KeyError(f"unknown scenario {name!r}; known: {', '.join(SCENARIO_NAMES)}")


def realized_density(det: TransactionList, n_items: int) -> float:
    return det.average_length() / n_items if n_items else 0.0


def expected_units(spec: SynthSpec) -> float:
    return spec.n_transactions * spec.avg_len

