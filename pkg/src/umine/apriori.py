"""Breadth-first (Apriori) mining over uncertain databases.

The driver is shared by UApriori and the Apriori-based approximate miners:
frequent l-itemsets sharing an (l-1)-prefix are joined into
(l+1)-candidates, candidates with an infrequent l-subset are pruned, and the
survivors of a level are counted in a single pass over the database.

Counting works on row blocks. Each block is expanded to a dense
``rows x frequent-items`` probability matrix, and a candidate's
per-transaction containment probability is its parent's (the frequent
l-itemset it extends) times the probability of its last item. Parents are
rebuilt the same way from level 1, so a block costs one product per
frequent itemset of earlier levels plus one per candidate. Sparse inputs
(many items, short rows) use CSC matrices instead, where the cost follows
the non-zeros.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import sparse

from .report import ItemsetResult, MiningReport, RunMetrics, timed
from .udb import UncertainDatabase, lookup

#: Upper bound on the dense block size (rows x columns) used while counting.
BLOCK_BUDGET = 1 << 21


def apriori_join(level: list, frequent: set):
    """Candidates of size l+1 from the sorted frequent l-itemsets ``level``.

    Returns ``(candidates, parent, last)`` where ``candidates[k]`` equals
    ``level[parent[k]] + (last[k],)``. A candidate is emitted only if all of
    its l-subsets are in ``frequent``.
    """
    cands, parents, lasts = [], [], []
    n = len(level)
    start = 0
    while start < n:
        prefix = level[start][:-1]
        end = start + 1
        while end < n and level[end][:-1] == prefix:
            end += 1
        for i in range(start, end):
            a = level[i]
            for j in range(i + 1, end):
                cand = a + (level[j][-1],)
                # the two subsets that drop one of the last two items are a and level[j]
                if all(cand[:k] + cand[k + 1:] in frequent for k in range(len(cand) - 2)):
                    cands.append(cand)
                    parents.append(i)
                    lasts.append(level[j][-1])
        start = end
    return cands, np.array(parents, dtype=np.int64), np.array(lasts, dtype=np.int64)


class BlockCounter:
    """Counts candidate expected supports (and squared sums) block by block.

    Columns are positions in ``item_ids`` (sorted ascending); units of other
    items are ignored.
    """

    def __init__(self, db: UncertainDatabase, item_ids: np.ndarray, budget: int = BLOCK_BUDGET):
        self.n_cols = len(item_ids)
        self.budget = budget
        self.n_rows = db.n_transactions
        col = lookup(db.items, item_ids, np.arange(self.n_cols))
        keep = col >= 0
        kept_before = np.zeros(len(keep) + 1, dtype=np.int64)
        np.cumsum(keep, out=kept_before[1:])
        self.indptr = kept_before[db.indptr]
        self.cols = col[keep]
        self.probs = db.probs[keep]

    def count(self, chain: list, parent: np.ndarray, last: np.ndarray, want_sq: bool = False):
        """Sum over transactions of each candidate's containment probability.

        ``chain`` lists ``(parent, last)`` arrays for the frequent itemsets of
        levels 2..l; ``parent``/``last`` describe the candidates. Returns
        ``(esup, sumsq)``; ``sumsq`` is None unless ``want_sq``.
        """
        m = len(parent)
        esup = np.zeros(m)
        sq = np.zeros(m) if want_sq else None
        if m == 0 or self.n_rows == 0:
            return esup, sq
        width = max([self.n_cols, m] + [len(p) for p, _ in chain])
        block = max(1, self.budget // width)
        for r0 in range(0, self.n_rows, block):
            r1 = min(self.n_rows, r0 + block)
            a, b = self.indptr[r0], self.indptr[r1]
            if a == b:
                continue
            dense = np.zeros((r1 - r0, self.n_cols))
            local = np.repeat(np.arange(r1 - r0), np.diff(self.indptr[r0:r1 + 1]))
            dense[local, self.cols[a:b]] = self.probs[a:b]
            prod = dense
            for p_idx, l_idx in chain:
                prod = prod[:, p_idx] * dense[:, l_idx]
            cand = prod[:, parent] * dense[:, last]
            esup += cand.sum(axis=0)
            if want_sq:
                sq += np.einsum("ij,ij->j", cand, cand)
        return esup, sq


class SparseCounter:
    """Same interface as :class:`BlockCounter`, on sparse column matrices.

    The containment matrix of each level's frequent itemsets is kept in CSC
    form and a candidate column is ``parent column * last-item column``, so
    the work is proportional to the non-zeros touched rather than to
    ``rows x candidates``. Candidates are processed in chunks of at most
    ``budget`` gathered non-zeros.
    """

    def __init__(self, db: UncertainDatabase, item_ids: np.ndarray, budget: int = BLOCK_BUDGET * 4,
                 _dense: BlockCounter | None = None):
        dense = _dense or BlockCounter(db, item_ids)
        self.n_cols = dense.n_cols
        self.n_rows = dense.n_rows
        self.budget = budget
        rows = np.repeat(np.arange(self.n_rows), np.diff(dense.indptr))
        self.items = sparse.csc_matrix((dense.probs, (rows, dense.cols)),
                                       shape=(self.n_rows, self.n_cols))
        self.levels = [self.items]

    def _level(self, chain: list):
        while len(self.levels) <= len(chain):
            p_idx, l_idx = chain[len(self.levels) - 1]
            self.levels.append(self._products(self.levels[-1], p_idx, l_idx))
        return self.levels[len(chain)]

    def _products(self, parents, p_idx, l_idx):
        if len(p_idx) == 0:
            return sparse.csc_matrix((self.n_rows, 0))
        return parents[:, p_idx].multiply(self.items[:, l_idx]).tocsc()

    def count(self, chain: list, parent: np.ndarray, last: np.ndarray, want_sq: bool = False):
        m = len(parent)
        esup = np.zeros(m)
        sq = np.zeros(m) if want_sq else None
        if m == 0 or self.n_rows == 0:
            return esup, sq
        parents = self._level(chain)
        # gathered non-zeros per candidate, to size the chunks
        cost = np.diff(parents.indptr)[parent] + np.diff(self.items.indptr)[last]
        total = np.cumsum(cost)
        start = 0
        while start < m:
            base = total[start - 1] if start else 0
            stop = max(start + 1, int(np.searchsorted(total, base + self.budget, side="right")))
            cand = self._products(parents, parent[start:stop], last[start:stop])
            esup[start:stop] = np.asarray(cand.sum(axis=0)).ravel()
            if want_sq:
                sq[start:stop] = np.asarray(cand.multiply(cand).sum(axis=0)).ravel()
            start = stop
        return esup, sq


#: Below this fill ratio (units / (rows x items)) counting switches to sparse matrices.
SPARSE_DENSITY = 0.2


def make_counter(db: UncertainDatabase, item_ids: np.ndarray):
    cells = db.n_transactions * max(1, len(item_ids))
    dense = BlockCounter(db, item_ids)
    if len(dense.cols) < SPARSE_DENSITY * cells:
        return SparseCounter(db, item_ids, _dense=dense)
    return dense


Accept = Callable[[np.ndarray, np.ndarray], np.ndarray]


def levelwise(db: UncertainDatabase, accept: Accept, want_sq: bool, metrics: RunMetrics,
              prefilter: Accept | None = None) -> list:
    """Run the Apriori loop; ``accept(esup, sumsq)`` returns a boolean mask.

    ``prefilter`` (optional) selects which items take part at all; by default
    it is ``accept`` itself. Returns ``(itemset, esup, sumsq)`` triples with
    itemsets as tuples of item ids.
    """
    ids, esup1, sq1 = db.item_moments()
    metrics.candidates += len(ids)
    mask = accept(esup1, sq1) if prefilter is None else prefilter(esup1, sq1)
    item_ids = ids[mask]
    out = [((int(i),), float(e), float(s)) for i, e, s in zip(item_ids, esup1[mask], sq1[mask])]
    counter = make_counter(db, item_ids)
    level = [(c,) for c in range(len(item_ids))]
    chain: list = []
    while len(level) > 1:
        cands, parent, last = apriori_join(level, set(level))
        if not cands:
            break
        metrics.candidates += len(cands)
        esup, sq = counter.count(chain, parent, last, want_sq)
        sq_arg = sq if want_sq else np.zeros_like(esup)
        ok = accept(esup, sq_arg)
        idx = np.flatnonzero(ok)
        for k in idx:
            out.append((tuple(int(item_ids[c]) for c in cands[k]), float(esup[k]),
                        float(sq_arg[k])))
        level = [cands[k] for k in idx]
        chain.append((parent[idx], last[idx]))
    return out


def uapriori(db: UncertainDatabase, min_esup: float) -> MiningReport:
    """Expected-support-based frequent itemsets, breadth first.

    Returns every itemset with ``esup >= N * min_esup``.
    """
    if not 0.0 < min_esup <= 1.0:
        raise ValueError(f"min_esup must lie in (0, 1], got {min_esup}")
    threshold = db.n_transactions * min_esup
    metrics = RunMetrics()
    with timed(metrics):
        found = levelwise(db, lambda e, s: e >= threshold - 1e-9, False, metrics)
    return MiningReport("uapriori", db.n_transactions,
                        [ItemsetResult(x, e) for x, e, _ in found], metrics, threshold)
