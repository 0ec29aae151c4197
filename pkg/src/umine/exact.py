"""Exact frequent probabilities and the four exact probabilistic miners.

``freq_prob_dp`` runs the classic dynamic program over (support count,
transaction prefix) in O(N * ms). ``freq_prob_dc`` obtains the support
distribution by divide and conquer: the transaction range is halved down to
single transactions and the halves' distributions are convolved back
together, with FFT for long operands. Every intermediate distribution is
truncated to ``ms + 1`` buckets, the last one holding ``Pr(sup >= ms)``.

``mine_probabilistic`` wraps either method in the Apriori framework, with
optional Chernoff-bound pruning; the four combinations are DPNB, DPB, DCNB
and DCB.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .apriori import apriori_join
from .report import ItemsetResult, MiningReport, RunMetrics, timed
from .udb import MiningParams, ParameterError, UncertainDatabase

#: Below this many output coefficients, convolutions are done directly.
FFT_CROSSOVER = 64
_CHERNOFF_SPLIT = 2 * math.e - 1


def _as_probs(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64).ravel()
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("containment probabilities must lie in [0, 1]")
    return p


def _dp_tail_numpy(p: np.ndarray, ms: int) -> float:
    tail = np.zeros(ms + 1)
    tail[0] = 1.0
    scratch = np.empty(ms)
    for j, pj in enumerate(p.tolist()):
        top = min(j + 1, ms)  # entries above j+1 are still 0
        moved = scratch[:top]
        np.multiply(tail[:top], pj, out=moved)
        seg = tail[1:top + 1]
        seg *= 1.0 - pj
        seg += moved
    return tail[ms]


def _dp_tail_loops(p, ms):
    tail = np.zeros(ms + 1)
    tail[0] = 1.0
    for j in range(p.shape[0]):
        pj = p[j]
        q = 1.0 - pj
        # descending so tail[i - 1] still holds the previous column
        for i in range(min(j + 1, ms), 0, -1):
            tail[i] = tail[i] * q + tail[i - 1] * pj
    return tail[ms]


try:
    import numba
    # compiled eagerly: a timeout alarm landing inside a lazy compile wedges numba
    _dp_tail = numba.njit("float64(float64[::1], int64)", cache=True, nogil=True)(_dp_tail_loops)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _dp_tail = _dp_tail_numpy


def freq_prob_dp(probs, ms: int) -> float:
    """``Pr(sup >= ms)`` by dynamic programming.

    ``tail[i]`` holds ``Pr_{>=i,j}``, the probability of at least ``i``
    successes among the first ``j`` transactions, and is advanced one
    transaction at a time::

        Pr_{>=i,j} = Pr_{>=i-1,j-1} * p_j + Pr_{>=i,j-1} * (1 - p_j)

    starting from ``Pr_{>=0,j} = 1`` and ``Pr_{>=i,j} = 0`` for ``i > j``.
    The O(N * ms) double loop is compiled with numba.
    """
    p = _as_probs(probs)
    if ms <= 0:
        return 1.0
    if ms > len(p):
        return 0.0
    return float(min(1.0, max(0.0, _dp_tail(np.ascontiguousarray(p), int(ms)))))


def _cap(pmf: np.ndarray, width: int) -> np.ndarray:
    """Fold columns ``>= width - 1`` of a batch of pmfs into the last bucket."""
    if pmf.shape[1] <= width:
        return pmf
    out = pmf[:, :width].copy()
    out[:, -1] += pmf[:, width:].sum(axis=1)
    return out


def _convolve_pairs(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Row-wise linear convolution of two equally shaped batches."""
    rows, length = left.shape
    size = 2 * length - 1
    if size <= FFT_CROSSOVER:
        out = np.zeros((rows, size))
        for i in range(length):
            out[:, i:i + length] += left[:, i:i + 1] * right
        return out
    n = 1 << (size - 1).bit_length()
    spec = np.fft.rfft(left, n, axis=1) * np.fft.rfft(right, n, axis=1)
    out = np.fft.irfft(spec, n, axis=1)[:, :size]
    np.clip(out, 0.0, 1.0, out=out)
    return out


def support_pmf_dc(probs, cap: int | None = None) -> np.ndarray:
    """Support distribution by divide and conquer (optionally capped).

    The halving recursion is evaluated bottom-up, one tree level per step:
    the range is padded to a power of two with probability-0 transactions
    (whose distribution ``[1, 0]`` is the convolution identity), and at each
    level every adjacent pair of sibling distributions is convolved in one
    batched operation.
    """
    p = _as_probs(probs)
    n = len(p)
    if n == 0:
        return np.ones(1)
    width = None if cap is None else cap + 1
    size = 1 << (n - 1).bit_length()
    level = np.zeros((size, 2))
    level[:, 0] = 1.0
    level[:n, 0] = 1.0 - p
    level[:n, 1] = p
    if width is not None:
        level = _cap(level, width)
    while level.shape[0] > 1:
        level = _convolve_pairs(level[0::2], level[1::2])
        if width is not None:
            level = _cap(level, width)
    pmf = level[0]
    if width is None:
        pmf = pmf[:n + 1]
    return pmf


def freq_prob_dc(probs, ms: int) -> float:
    """``Pr(sup >= ms)`` from the capped divide-and-conquer distribution."""
    p = _as_probs(probs)
    if ms <= 0:
        return 1.0
    if ms > len(p):
        return 0.0
    pmf = support_pmf_dc(p, cap=ms)
    # the capped last bucket is 1 - sum(pmf[:ms]) without the cancellation
    return float(min(1.0, max(0.0, pmf[ms])))


class Verdict(enum.Enum):
    PRUNED = "pruned"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class ChernoffDecision:
    verdict: Verdict
    delta: float
    mu: float

    @property
    def pruned(self) -> bool:
        return self.verdict is Verdict.PRUNED


def chernoff_prune(esup: float, ms: int, pft: float) -> ChernoffDecision:
    """Decide whether the Chernoff tail bound already rules an itemset out.

    With ``mu = esup`` and ``delta = (ms - mu - 1) / mu``, the itemset is
    pruned when ``delta > 0`` and the applicable bound is below ``pft``:
    ``2^(-delta*mu)`` for ``delta > 2e - 1``, otherwise
    ``exp(-delta^2 * mu / 4)``. Bounds are compared in log space.
    """
    if not esup > 0:
        raise ParameterError(f"esup must be positive, got {esup}")
    mu = float(esup)
    delta = (ms - mu - 1.0) / mu
    if delta <= 0:
        return ChernoffDecision(Verdict.UNDECIDED, delta, mu)
    if delta > _CHERNOFF_SPLIT:
        log_bound = -delta * mu * math.log(2.0)
    else:
        log_bound = -delta * delta * mu / 4.0
    verdict = Verdict.PRUNED if log_bound < math.log(pft) else Verdict.UNDECIDED
    return ChernoffDecision(verdict, delta, mu)


def _intersect(columns):
    """Join sorted ``(tids, probs)`` columns; probabilities multiply."""
    tids, probs = columns[0]
    for t, p in columns[1:]:
        if len(t) == 0 or len(tids) == 0:
            return tids[:0], probs[:0]
        idx = np.minimum(np.searchsorted(t, tids), len(t) - 1)
        hit = t[idx] == tids
        tids = tids[hit]
        probs = probs[hit] * p[idx[hit]]
    return tids, probs


METHODS = {"dp": freq_prob_dp, "dc": freq_prob_dc}
ALGORITHM_TAGS = {("dp", False): "dpnb", ("dp", True): "dpb", ("dc", False): "dcnb", ("dc", True): "dcb"}


def mine_probabilistic(db: UncertainDatabase, params: MiningParams, method: str = "dc",
                       use_chernoff: bool = True) -> MiningReport:
    """Probabilistic frequent itemsets with exact frequent probabilities.

    Level-wise: each candidate's per-transaction containment probabilities
    are built, its expected support is checked against the Chernoff bound
    (if enabled), and survivors get an exact frequent probability from the
    chosen ``method`` (``"dp"`` or ``"dc"``). An itemset is reported when
    its probability exceeds ``pft``.
    """
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    freq_prob = METHODS[method]
    n = db.n_transactions
    ms = params.ms(n)
    pft = params.pft
    metrics = RunMetrics()
    results = []
    tag = ALGORITHM_TAGS[(method, use_chernoff)]

    def evaluate(nz: np.ndarray):
        metrics.candidates += 1
        esup = float(nz.sum())
        if esup == 0.0 or len(nz) < ms:
            return esup, 0.0
        if use_chernoff and chernoff_prune(esup, ms, pft).pruned:
            metrics.pruned += 1
            return esup, None
        metrics.evaluated += 1
        return esup, freq_prob(nz, ms)

    with timed(metrics):
        if n == 0:
            return MiningReport(tag, n, [], metrics)
        index = db.vertical()
        columns = {}
        level = []
        for item in sorted(db.item_universe):
            tids, probs = index.column(item)
            esup, prob = evaluate(probs)
            if prob is not None and prob > pft:
                results.append(ItemsetResult((item,), esup, prob))
                columns[item] = (tids, probs)
                level.append((item,))
        while len(level) > 1:
            cands, parent, last = apriori_join(level, set(level))
            if not cands:
                break
            nxt = []
            for cand in cands:
                _, probs = _intersect([columns[i] for i in cand])
                esup, prob = evaluate(probs[probs > 0.0])
                if prob is not None and prob > pft:
                    results.append(ItemsetResult(cand, esup, prob))
                    nxt.append(cand)
            level = nxt
    return MiningReport(tag, n, results, metrics)


def dpnb(db, params):
    return mine_probabilistic(db, params, "dp", False)


def dpb(db, params):
    return mine_probabilistic(db, params, "dp", True)


def dcnb(db, params):
    return mine_probabilistic(db, params, "dc", False)


def dcb(db, params):
    return mine_probabilistic(db, params, "dc", True)
