"""Uncertain transaction databases.

An uncertain database is an ordered list of transactions, each holding
``(item, probability)`` units: the item is present in that transaction
independently with the given probability. Internally the database is a CSR
triple of numpy arrays (row pointers, item ids, probabilities), which keeps
multi-million-unit databases cheap; transactions are materialised as
:class:`UncertainTransaction` views on demand.

Two text formats are supported:

* FIMI: one deterministic transaction per line, whitespace-separated
  integer item ids.
* UDB: one uncertain transaction per line, whitespace-separated
  ``item:prob`` tokens.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO, Union

import numpy as np

ItemId = int
Itemset = tuple  # canonical: strictly increasing tuple of ItemId, non-empty
DetTransactions = list  # list[tuple[int, ...]] of sorted, duplicate-free ids

#: Digits used when writing probabilities in the UDB format.
UDB_DIGITS = 6
#: Gaussian draws are clamped into this interval.
GAUSSIAN_CLAMP = (0.01, 1.0)
#: Number of Zipf ranks used by :func:`assign_zipf`.
ZIPF_RANKS = 100


class FormatError(ValueError):
    """Malformed FIMI/UDB text. Carries the 1-based line (and column)."""

    def __init__(self, message: str, line: int, column: int | None = None):
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.column = column


class ProbabilityRangeError(FormatError):
    """A probability in UDB text lies outside (0, 1]."""


class ParameterError(ValueError):
    """Invalid numeric parameter for a generator or miner."""


class Probability(float):
    """A float constrained to [0, 1]."""

    def __new__(cls, value):
        v = float(value)
        if not 0.0 <= v <= 1.0:  # also rejects NaN
            raise ValueError(f"probability out of range: {value!r}")
        return super().__new__(cls, v)


def make_itemset(items: Iterable[int]) -> Itemset:
    """Canonical itemset: sorted, deduplicated, non-empty tuple of ints."""
    out = tuple(sorted({int(i) for i in items}))
    if not out:
        raise ValueError("an itemset must be non-empty")
    if out[0] < 0:
        raise ValueError("item ids must be non-negative")
    return out


def min_count(n_transactions: int, ratio: float) -> int:
    """Absolute support threshold ``ceil(N * ratio)``, at least 1.

    A 1e-9 slack absorbs binary noise such as ``10 * 0.7 == 7.000000000000001``.
    """
    return max(1, math.ceil(n_transactions * ratio - 1e-9))


@dataclass(frozen=True)
class MiningParams:
    """Thresholds shared by every miner.

    ``min_esup`` and ``min_sup`` are ratios of the transaction count; ``pft``
    is the probabilistic frequent threshold. The absolute support threshold
    depends on the database and is obtained with :meth:`ms`.
    """

    min_esup: float = 0.5
    min_sup: float = 0.5
    pft: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.min_esup <= 1.0:
            raise ParameterError(f"min_esup must lie in (0, 1], got {self.min_esup}")
        if not 0.0 < self.min_sup <= 1.0:
            raise ParameterError(f"min_sup must lie in (0, 1], got {self.min_sup}")
        if not 0.0 < self.pft < 1.0:
            raise ParameterError(f"pft must lie in (0, 1), got {self.pft}")

    def ms(self, n_transactions: int) -> int:
        return min_count(n_transactions, self.min_sup)

    def esup_threshold(self, n_transactions: int) -> float:
        return n_transactions * self.min_esup


@dataclass(frozen=True)
class UncertainTransaction:
    tid: int
    items: tuple
    probs: tuple

    @property
    def units(self) -> list:
        return list(zip(self.items, self.probs))

    def prob(self, item: int) -> float:
        """Existence probability of ``item`` here, 0 when absent."""
        for i, p in zip(self.items, self.probs):
            if i == item:
                return p
            if i > item:
                break
        return 0.0

    def __len__(self):
        return len(self.items)


class UncertainDatabase:
    """Immutable uncertain transaction database in CSR form.

    ``indptr`` has length N+1; the units of transaction ``t`` are
    ``items[indptr[t]:indptr[t+1]]`` with matching ``probs``. Items inside a
    transaction are strictly increasing and every probability lies in (0, 1].
    """

    __slots__ = ("indptr", "items", "probs", "_universe")

    def __init__(self, indptr, items, probs, *, validate: bool = True):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        items = np.ascontiguousarray(items, dtype=np.int64)
        probs = np.ascontiguousarray(probs, dtype=np.float64)
        if validate:
            _validate_csr(indptr, items, probs)
        for a in (indptr, items, probs):
            a.flags.writeable = False
        self.indptr = indptr
        self.items = items
        self.probs = probs
        self._universe = None

    @classmethod
    def from_transactions(cls, rows: Iterable[Iterable[tuple]]) -> "UncertainDatabase":
        """Build from an iterable of ``[(item, prob), ...]`` rows.

        Units with probability 0 are dropped, units are sorted by item, and a
        repeated item within a row is rejected.
        """
        indptr = [0]
        items: list = []
        probs: list = []
        for row in rows:
            units = sorted((int(i), float(p)) for i, p in row if float(p) != 0.0)
            for k in range(1, len(units)):
                if units[k][0] == units[k - 1][0]:
                    raise ValueError(f"duplicate item {units[k][0]} in transaction {len(indptr) - 1}")
            items.extend(u[0] for u in units)
            probs.extend(u[1] for u in units)
            indptr.append(len(items))
        return cls(np.array(indptr), np.array(items, dtype=np.int64), np.array(probs, dtype=np.float64))

    @property
    def n_transactions(self) -> int:
        return len(self.indptr) - 1

    def __len__(self) -> int:
        return self.n_transactions

    @property
    def n_units(self) -> int:
        return len(self.items)

    @property
    def item_universe(self) -> frozenset:
        if self._universe is None:
            self._universe = frozenset(np.unique(self.items).tolist())
        return self._universe

    def __getitem__(self, tid: int) -> UncertainTransaction:
        if tid < 0:
            tid += self.n_transactions
        if not 0 <= tid < self.n_transactions:
            raise IndexError(tid)
        a, b = self.indptr[tid], self.indptr[tid + 1]
        return UncertainTransaction(tid, tuple(self.items[a:b].tolist()), tuple(self.probs[a:b].tolist()))

    def __iter__(self) -> Iterator[UncertainTransaction]:
        for t in range(self.n_transactions):
            yield self[t]

    @property
    def transactions(self) -> list:
        return list(self)

    def row_ids(self) -> np.ndarray:
        """Transaction id of every unit (length ``n_units``)."""
        return np.repeat(np.arange(self.n_transactions, dtype=np.int64), np.diff(self.indptr))

    def item_moments(self):
        """Per-item ``(item_ids, esup, sum of squared probabilities)``.

        ``esup - sumsq`` is the variance of the item's support.
        """
        if _dense_ids_ok(self.items):
            # linear time: bin directly on the ids
            counts = np.bincount(self.items)
            ids = np.flatnonzero(counts)
            esup = np.bincount(self.items, weights=self.probs)[ids]
            sq = np.bincount(self.items, weights=self.probs * self.probs)[ids]
            return ids, esup, sq
        ids, inv = np.unique(self.items, return_inverse=True)
        esup = np.bincount(inv, weights=self.probs, minlength=len(ids))
        sq = np.bincount(inv, weights=self.probs * self.probs, minlength=len(ids))
        return ids, esup, sq

    def vertical(self) -> "VerticalIndex":
        return VerticalIndex(self)

    def __eq__(self, other):
        if not isinstance(other, UncertainDatabase):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.items, other.items)
                and np.array_equal(self.probs, other.probs))

    __hash__ = None

    def __repr__(self):
        return f"UncertainDatabase(n_transactions={self.n_transactions}, n_units={self.n_units})"


def _dense_ids_ok(items: np.ndarray) -> bool:
    """Whether an id-indexed table over ``items`` is affordable."""
    return len(items) > 0 and int(items.max()) <= 4 * len(items) + (1 << 16)


def lookup(keys: np.ndarray, ids: np.ndarray, values: np.ndarray, default: int = -1) -> np.ndarray:
    """Map each key to ``values[j]`` where ``ids[j] == key`` (``default`` if absent).

    ``ids`` must be distinct. Uses an id-indexed table when ids are small,
    binary search otherwise.
    """
    keys = np.asarray(keys, dtype=np.int64)
    if len(ids) == 0 or len(keys) == 0:
        return np.full(len(keys), default, dtype=np.int64)
    top = int(max(keys.max(), ids.max()))
    if top <= 4 * len(keys) + (1 << 16):
        table = np.full(top + 1, default, dtype=np.int64)
        table[ids] = values
        return table[keys]
    order = np.argsort(ids)
    sid = ids[order]
    pos = np.minimum(np.searchsorted(sid, keys), len(sid) - 1)
    return np.where(sid[pos] == keys, np.asarray(values)[order][pos], default)


def group_order(keys: np.ndarray, n_groups: int) -> np.ndarray:
    """Stable permutation grouping ``keys`` (ints in ``[0, n_groups)``) ascending."""
    if n_groups <= (1 << 16):
        return np.argsort(keys.astype(np.uint16), kind="stable")  # radix sort
    return np.argsort(keys, kind="stable")


def _validate_csr(indptr, items, probs):
    if indptr.ndim != 1 or len(indptr) < 1 or indptr[0] != 0:
        raise ValueError("indptr must be a 1-d array starting at 0")
    if np.any(np.diff(indptr) < 0) or indptr[-1] != len(items):
        raise ValueError("indptr must be non-decreasing and end at len(items)")
    if len(items) != len(probs):
        raise ValueError("items and probs differ in length")
    if len(items) == 0:
        return
    if items.min() < 0:
        raise ValueError("item ids must be non-negative")
    if not (np.all(probs > 0.0) and np.all(probs <= 1.0)):
        raise ValueError("unit probabilities must lie in (0, 1]")
    # within a row, consecutive items must increase; row starts are exempt
    step = np.diff(items)
    row_start = np.zeros(len(items), dtype=bool)
    row_start[indptr[:-1][indptr[:-1] < len(items)]] = True
    if np.any((step <= 0) & ~row_start[1:]):
        raise ValueError("items within a transaction must be strictly increasing")


class VerticalIndex:
    """Item-major view: for each item, the ids of the transactions that hold it
    and the matching probabilities (both sorted by transaction id)."""

    def __init__(self, db: UncertainDatabase):
        self.n_transactions = db.n_transactions
        top = int(db.items.max()) + 1 if len(db.items) else 0
        order = group_order(db.items, top)  # rows stay in order within an item
        self._tids = db.row_ids()[order]
        self._probs = db.probs[order]
        sorted_items = db.items[order]
        self._ids, starts = np.unique(sorted_items, return_index=True)
        self._bounds = np.append(starts, len(sorted_items))

    def column(self, item: int):
        k = np.searchsorted(self._ids, item)
        if k == len(self._ids) or self._ids[k] != item:
            empty = np.empty(0)
            return empty.astype(np.int64), empty
        a, b = self._bounds[k], self._bounds[k + 1]
        return self._tids[a:b], self._probs[a:b]

    def containment(self, itemset: Sequence[int]) -> np.ndarray:
        """Dense length-N vector of ``Pr(itemset ⊆ T_t)`` (independence product)."""
        out = None
        for item in itemset:
            tids, p = self.column(item)
            if out is None:
                out = np.zeros(self.n_transactions)
                out[tids] = p
            else:
                col = np.zeros(self.n_transactions)
                col[tids] = p
                out *= col
        if out is None:
            raise ValueError("an itemset must be non-empty")
        return out


def itemset_prob(t: UncertainTransaction, x: Sequence[int]) -> float:
    """Probability that transaction ``t`` contains every item of ``x``."""
    prob = 1.0
    for item in x:
        p = t.prob(item)
        if p == 0.0:
            return 0.0
        prob *= p
    return prob


# ---------------------------------------------------------------------------
# text formats

def _lines(text: Union[str, TextIO]) -> Iterable[str]:
    if isinstance(text, str):
        return text.splitlines()
    return (line.rstrip("\r\n") for line in text)


def parse_fimi(text: Union[str, TextIO]) -> DetTransactions:
    """Read deterministic transactions; each line becomes one sorted,
    duplicate-free tuple of item ids (a blank line is an empty transaction)."""
    out = []
    for lineno, line in enumerate(_lines(text), start=1):
        row = set()
        for tok in line.split():
            try:
                item = int(tok)
            except ValueError:
                raise FormatError(f"not an integer item id: {tok!r}", lineno) from None
            if item < 0:
                raise FormatError(f"negative item id: {tok!r}", lineno)
            row.add(item)
        out.append(tuple(sorted(row)))
    return out


def parse_udb(text: Union[str, TextIO]) -> UncertainDatabase:
    """Read the UDB text format into an :class:`UncertainDatabase`."""
    indptr = [0]
    items: list = []
    probs: list = []
    for lineno, line in enumerate(_lines(text), start=1):
        units = []
        column = 0
        for tok in line.split():
            column = line.index(tok, column) + 1
            item_s, sep, prob_s = tok.partition(":")
            try:
                if not sep:
                    raise ValueError
                item = int(item_s)
                prob = float(prob_s)
            except ValueError:
                raise FormatError(f"malformed unit {tok!r} (expected item:prob)", lineno, column) from None
            if item < 0:
                raise FormatError(f"negative item id in {tok!r}", lineno, column)
            if not 0.0 < prob <= 1.0:
                raise ProbabilityRangeError(f"probability {prob_s} outside (0, 1]", lineno, column)
            units.append((item, prob))
            column += len(tok) - 1
        units.sort()
        for k in range(1, len(units)):
            if units[k][0] == units[k - 1][0]:
                raise FormatError(f"duplicate item {units[k][0]}", lineno)
        items.extend(u[0] for u in units)
        probs.extend(u[1] for u in units)
        indptr.append(len(items))
    return UncertainDatabase(np.array(indptr), np.array(items, dtype=np.int64),
                             np.array(probs, dtype=np.float64))


def _format_prob(p: float, digits) -> str:
    if digits is None:
        return repr(float(p))
    s = f"{p:.{digits}f}"
    # never let rounding print a zero probability
    return s if float(s) > 0.0 else repr(float(p))


def serialize_udb(db: UncertainDatabase, digits: int | None = UDB_DIGITS) -> str:
    """UDB text for ``db``; ``digits=None`` writes shortest round-trip floats."""
    buf = io.StringIO()
    write_udb(db, buf, digits)
    return buf.getvalue()


def write_udb(db: UncertainDatabase, out: TextIO, digits: int | None = UDB_DIGITS) -> None:
    items = db.items.tolist()
    probs = db.probs.tolist()
    ptr = db.indptr.tolist()
    for t in range(db.n_transactions):
        a, b = ptr[t], ptr[t + 1]
        out.write(" ".join(f"{items[k]}:{_format_prob(probs[k], digits)}" for k in range(a, b)))
        out.write("\n")


def serialize_fimi(det: Sequence[Sequence[int]]) -> str:
    return "".join(" ".join(map(str, row)) + "\n" for row in det)


def read_udb(path) -> UncertainDatabase:
    with open(path, encoding="ascii") as fh:
        return parse_udb(fh)


def read_fimi(path) -> DetTransactions:
    with open(path, encoding="ascii") as fh:
        return parse_fimi(fh)


def read_any(path):
    """Load a UDB file as-is, or a FIMI file as deterministic transactions.

    The format is sniffed from the first non-blank line (``:`` means UDB).
    """
    with open(path, encoding="ascii") as fh:
        for line in fh:
            if line.strip():
                is_udb = ":" in line
                break
        else:
            is_udb = False
    return read_udb(path) if is_udb else read_fimi(path)


# ---------------------------------------------------------------------------
# probability assignment

def _det_csr(det: Sequence[Sequence[int]]):
    if hasattr(det, "indptr") and hasattr(det, "items"):  # already CSR-backed
        return np.asarray(det.indptr, dtype=np.int64), np.asarray(det.items, dtype=np.int64)
    lengths = np.fromiter((len(r) for r in det), dtype=np.int64, count=len(det))
    indptr = np.zeros(len(det) + 1, dtype=np.int64)
    np.cumsum(lengths, out=indptr[1:])
    items = np.fromiter((i for r in det for i in r), dtype=np.int64, count=int(indptr[-1]))
    return indptr, items


def _drop_units(indptr, items, probs, keep):
    kept_before = np.zeros(len(keep) + 1, dtype=np.int64)
    np.cumsum(keep, out=kept_before[1:])
    return kept_before[indptr], items[keep], probs[keep]


def assign_gaussian(det: Sequence[Sequence[int]], mean: float, variance: float, seed: int) -> UncertainDatabase:
    """Give every item occurrence an independent Normal(mean, variance) draw.

    Draws are clamped into [0.01, 1.0] and rounded to the six digits the UDB
    format stores, so a written database reads back bit-identically. The
    generator is numpy's PCG64 seeded with ``seed``; draws are taken in unit
    order (transaction by transaction, items ascending).
    """
    if not variance >= 0:
        raise ParameterError(f"variance must be non-negative, got {variance}")
    indptr, items = _det_csr(det)
    rng = np.random.default_rng(seed)
    draws = rng.normal(mean, math.sqrt(variance), size=len(items))
    probs = np.round(np.clip(draws, *GAUSSIAN_CLAMP), UDB_DIGITS)
    return UncertainDatabase(indptr, items, probs)


def zipf_pmf(skew: float, n_ranks: int = ZIPF_RANKS) -> np.ndarray:
    """Truncated Zipf pmf over ranks 1..n_ranks (index 0 is rank 1)."""
    w = np.arange(1, n_ranks + 1, dtype=np.float64) ** (-skew)
    return w / w.sum()


def zipf_rank_probability(ranks, n_ranks: int = ZIPF_RANKS):
    """Existence probability given to an occurrence that drew ``ranks``."""
    return np.asarray(ranks, dtype=np.float64) / n_ranks


def assign_zipf(det: Sequence[Sequence[int]], skew: float, zero_cutoff: float, seed: int,
                n_ranks: int = ZIPF_RANKS) -> UncertainDatabase:
    """Zipf-distributed existence probabilities.

    Each occurrence draws a rank ``r`` from Zipf(skew) over ``1..n_ranks`` and
    receives probability ``r / n_ranks``. Rank 1 is the most likely draw and
    maps to the smallest probability, so a larger skew pushes mass toward
    near-zero probabilities; occurrences at or below ``zero_cutoff`` are
    treated as zero and dropped. Transactions that lose every unit stay in the
    database as empty transactions.
    """
    if not skew > 0:
        raise ParameterError(f"skew must be positive, got {skew}")
    if not 0.0 <= zero_cutoff < 1.0:
        raise ParameterError(f"zero_cutoff must lie in [0, 1), got {zero_cutoff}")
    indptr, items = _det_csr(det)
    rng = np.random.default_rng(seed)
    ranks = rng.choice(np.arange(1, n_ranks + 1), size=len(items), p=zipf_pmf(skew, n_ranks))
    probs = zipf_rank_probability(ranks, n_ranks)
    keep = probs > zero_cutoff
    indptr, items, probs = _drop_units(indptr, items, probs, keep)
    return UncertainDatabase(indptr, items, probs)


def zipf_survival_rate(skew: float, zero_cutoff: float, n_ranks: int = ZIPF_RANKS) -> float:
    """Expected fraction of occurrences kept by :func:`assign_zipf`."""
    pmf = zipf_pmf(skew, n_ranks)
    keep = zipf_rank_probability(np.arange(1, n_ranks + 1), n_ranks) > zero_cutoff
    return float(pmf[keep].sum())
