"""UH-Mine: depth-first mining over a hyper-linked row structure.

The UH-Struct keeps every transaction as a row of frequent units sorted by
the head-table order, with each unit linked to the next unit of the same
item. A prefix is represented by its occurrences: the position of the
prefix's last item in each row that holds it, plus the probability of the
whole prefix in that row. The prefix's head table is obtained by walking the
rest of each row and accumulating ``prefix probability * unit probability``
per item; each frequent entry becomes the next prefix. All of this runs on
flat numpy arrays, one projection per prefix.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .report import ItemsetResult, MiningReport, RunMetrics, timed
from .udb import UncertainDatabase, group_order, lookup


@dataclass
class HeadEntry:
    item: int
    esup: float
    link: int  # position of the first unit of the chain, -1 if empty


@dataclass
class UHStruct:
    """Rows in CSR form over *ranks* (positions in ``head_table``).

    ``next_link[k]`` is the position of the next unit of the same item in a
    later row, or -1.
    """

    head_table: list
    indptr: np.ndarray
    ranks: np.ndarray
    probs: np.ndarray
    row_of: np.ndarray
    next_link: np.ndarray
    by_rank: np.ndarray  # unit positions grouped by rank, row order within a rank
    rank_bounds: np.ndarray

    @property
    def item_ids(self) -> np.ndarray:
        return np.array([h.item for h in self.head_table], dtype=np.int64)

    def chain(self, rank: int) -> list:
        """Unit positions reached by following ``rank``'s link chain."""
        out = []
        k = self.head_table[rank].link
        while k != -1:
            out.append(k)
            k = int(self.next_link[k])
        return out

    def occurrences(self, rank: int) -> np.ndarray:
        """Positions of ``rank``'s units, in row order (same as :meth:`chain`)."""
        return self.by_rank[self.rank_bounds[rank]:self.rank_bounds[rank + 1]]


def build_uh_struct(db: UncertainDatabase, accept: Callable, order: str = "esup") -> UHStruct:
    """Build the global UH-Struct over the items selected by ``accept``.

    ``accept(esup, sumsq)`` returns a mask over items. ``order`` is
    ``"esup"`` (descending expected support, ties by ascending id) or
    ``"item"`` (ascending id).
    """
    ids, esup, sq = db.item_moments()
    keep = accept(esup, sq)
    ids, esup = ids[keep], esup[keep]
    if order == "esup":
        perm = np.lexsort((ids, -esup))
    elif order == "item":
        perm = np.argsort(ids, kind="stable")
    else:
        raise ValueError(f"unknown order {order!r}")
    ids, esup = ids[perm], esup[perm]

    # rank of every unit's item, -1 for dropped items
    unit_rank = lookup(db.items, ids, np.arange(len(ids)))
    keep_u = unit_rank >= 0
    rows = db.row_ids()[keep_u]
    ranks = unit_rank[keep_u]
    probs = db.probs[keep_u]
    # units grouped by rank (row order kept inside a group), then merged back
    # into (row, rank) order; the stable merge only has one run per rank
    grouped = group_order(ranks, len(ids))
    o = grouped[np.argsort(rows[grouped], kind="stable")]
    rows, ranks, probs = rows[o], ranks[o], probs[o]
    new_pos = np.empty(len(o), dtype=np.int64)
    new_pos[o] = np.arange(len(o))
    by_rank = new_pos[grouped]
    indptr = np.zeros(db.n_transactions + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=db.n_transactions), out=indptr[1:])

    # link chains: units of one rank in row order
    next_link = np.full(len(ranks), -1, dtype=np.int64)
    same = ranks[by_rank[1:]] == ranks[by_rank[:-1]]
    next_link[by_rank[:-1][same]] = by_rank[1:][same]
    first = np.full(len(ids), -1, dtype=np.int64)
    if len(by_rank):
        starts = np.ones(len(by_rank), dtype=bool)
        starts[1:] = ~same
        first[ranks[by_rank[starts]]] = by_rank[starts]
    head = [HeadEntry(int(i), float(e), int(f)) for i, e, f in zip(ids, esup, first)]
    bounds = np.zeros(len(ids) + 1, dtype=np.int64)
    np.cumsum(np.bincount(ranks, minlength=len(ids)), out=bounds[1:])
    return UHStruct(head, indptr, ranks, probs, rows, next_link, by_rank, bounds)


def _project(s: UHStruct, occ: np.ndarray, weight: np.ndarray):
    """Expand each occurrence to the units after it in its row."""
    starts = occ + 1
    ends = s.indptr[s.row_of[occ] + 1]
    lengths = ends - starts
    total = int(lengths.sum())
    if total == 0:
        return None
    # flat positions: concatenation of ranges [starts[i], ends[i])
    offsets = np.repeat(starts - np.cumsum(lengths) + lengths, lengths)
    flat = np.arange(total) + offsets
    w = np.repeat(weight, lengths) * s.probs[flat]
    return flat, w


def prefix_head_table(s: UHStruct, prefix_ranks) -> list:
    """Head table of a prefix, as ``[(item, conditional esup)]`` in rank order."""
    occ = s.occurrences(prefix_ranks[0])
    w = s.probs[occ]
    for r in prefix_ranks[1:]:
        proj = _project(s, occ, w)
        if proj is None:
            return []
        flat, fw = proj
        sel = s.ranks[flat] == r
        occ, w = flat[sel], fw[sel]
    proj = _project(s, occ, w)
    if proj is None:
        return []
    flat, fw = proj
    e = np.bincount(s.ranks[flat], weights=fw, minlength=len(s.head_table))
    return [(s.head_table[r].item, float(e[r])) for r in np.flatnonzero(e)]


def mine_uh(s: UHStruct, accept: Callable, want_sq: bool, metrics: RunMetrics) -> list:
    """Depth-first enumeration; returns ``(itemset, esup, sumsq)`` triples."""
    n_items = len(s.head_table)
    item_ids = s.item_ids
    out = []

    def recurse(prefix, occ, w):
        proj = _project(s, occ, w)
        if proj is None:
            return
        flat, fw = proj
        r = s.ranks[flat]
        esup = np.bincount(r, weights=fw, minlength=n_items)
        sq = np.bincount(r, weights=fw * fw, minlength=n_items) if want_sq else np.zeros(n_items)
        present = np.flatnonzero(esup > 0)
        metrics.candidates += len(present)
        ok = present[accept(esup[present], sq[present])]
        if len(ok) == 0:
            return
        order = np.argsort(r, kind="stable")
        r_sorted = r[order]
        lo = np.searchsorted(r_sorted, ok, side="left")
        hi = np.searchsorted(r_sorted, ok, side="right")
        for rank, a, b in zip(ok.tolist(), lo.tolist(), hi.tolist()):
            sel = order[a:b]
            itemset = prefix + (rank,)
            out.append((itemset, float(esup[rank]), float(sq[rank])))
            recurse(itemset, flat[sel], fw[sel])

    for rank, entry in enumerate(s.head_table):
        occ = s.occurrences(rank)
        w = s.probs[occ]
        sq = float(np.dot(w, w)) if want_sq else 0.0
        metrics.candidates += 1
        out.append(((rank,), float(w.sum()), sq))
        recurse((rank,), occ, w)

    return [(tuple(sorted(int(item_ids[r]) for r in x)), e, q) for x, e, q in out]


def uh_mine(db: UncertainDatabase, min_esup: float, order: str = "esup") -> MiningReport:
    """Expected-support-based frequent itemsets, depth first over a UH-Struct."""
    if not 0.0 < min_esup <= 1.0:
        raise ValueError(f"min_esup must lie in (0, 1], got {min_esup}")
    threshold = db.n_transactions * min_esup
    accept = lambda e, s: e >= threshold - 1e-9  # noqa: E731
    metrics = RunMetrics()
    with timed(metrics):
        struct = build_uh_struct(db, accept, order)
        found = mine_uh(struct, accept, False, metrics)
    return MiningReport("uhmine", db.n_transactions,
                        [ItemsetResult(x, e) for x, e, _ in found], metrics, threshold)
