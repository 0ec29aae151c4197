"""Ground truth by direct computation.

Everything here favours transparency over speed: expected supports are plain
sums of per-transaction products, support distributions come from a
one-transaction-at-a-time convolution, and possible worlds are enumerated
exhaustively. Every miner is validated against these functions.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .udb import MiningParams, UncertainDatabase, itemset_prob

MAX_WORLD_EVENTS = 20
MAX_BRUTE_FORCE_ITEMS = 16


class OracleSizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


class SupportDistribution:
    """Probability mass over support counts.

    Uncapped: ``pmf[k] = Pr(sup = k)`` for ``k = 0..N``. Capped at ``cap``:
    ``pmf[k]`` for ``k < cap`` and ``pmf[cap] = Pr(sup >= cap)``.
    """

    def __init__(self, pmf, capped: bool = False):
        self.pmf = np.asarray(pmf, dtype=np.float64)
        self.capped = capped

    @property
    def cap(self):
        return len(self.pmf) - 1 if self.capped else None

    def tail(self, ms: int) -> float:
        """``Pr(sup >= ms)``."""
        if ms <= 0:
            return 1.0
        if self.capped and ms > self.cap:
            raise ValueError(f"tail at {ms} is beyond the cap {self.cap}")
        return float(min(1.0, max(0.0, self.pmf[ms:].sum())))

    def mean(self) -> float:
        self._require_uncapped()
        return float(np.dot(np.arange(len(self.pmf)), self.pmf))

    def variance(self) -> float:
        self._require_uncapped()
        k = np.arange(len(self.pmf))
        m = np.dot(k, self.pmf)
        return float(np.dot(k * k, self.pmf) - m * m)

    def _require_uncapped(self):
        if self.capped:
            raise ValueError("moments are undefined on a capped distribution")

    def allclose(self, other: "SupportDistribution", atol: float = 1e-12) -> bool:
        if self.capped != other.capped:
            raise TypeError("cannot compare capped and uncapped distributions index-wise")
        return len(self.pmf) == len(other.pmf) and bool(np.allclose(self.pmf, other.pmf, rtol=0, atol=atol))

    def __eq__(self, other):
        if not isinstance(other, SupportDistribution):
            return NotImplemented
        if self.capped != other.capped:
            raise TypeError("cannot compare capped and uncapped distributions index-wise")
        return np.array_equal(self.pmf, other.pmf)

    __hash__ = None

    def __repr__(self):
        kind = f"capped at {self.cap}" if self.capped else "uncapped"
        return f"SupportDistribution({np.array2string(self.pmf, precision=6)}, {kind})"


def containment_probs(db: UncertainDatabase, x) -> list:
    return [itemset_prob(t, x) for t in db]


def exact_esup(db: UncertainDatabase, x) -> float:
    return sum(containment_probs(db, x))


def exact_variance(db: UncertainDatabase, x) -> float:
    return sum(p * (1.0 - p) for p in containment_probs(db, x))


def support_distribution(db: UncertainDatabase, x, cap: int | None = None) -> SupportDistribution:
    """Exact Poisson-Binomial law of ``sup(x)``.

    Transactions are folded in left to right, each as one Bernoulli
    convolution. With ``cap`` the last bucket collects all mass at ``>= cap``.
    """
    if cap is not None and cap < 1:
        raise ValueError("cap must be at least 1")
    n = db.n_transactions
    size = n + 1 if cap is None else cap + 1
    pmf = np.zeros(size)
    pmf[0] = 1.0
    for p in containment_probs(db, x):
        if p == 0.0:
            continue
        moved = pmf * p
        pmf *= 1.0 - p
        if cap is None:
            pmf[1:] += moved[:-1]
        else:
            pmf[1:] += moved[:-1]
            pmf[-1] += moved[-1]  # mass already at >= cap stays there
    return SupportDistribution(pmf, capped=cap is not None)


def enumerate_worlds(db: UncertainDatabase, x, max_events: int = MAX_WORLD_EVENTS) -> list:
    """Every joint outcome of the per-transaction events "x ⊆ T_t".

    Transactions that cannot contain ``x`` contribute no event. Returns
    ``(support, world probability)`` pairs, one per outcome combination.
    """
    probs = [p for p in containment_probs(db, x) if p > 0.0]
    if len(probs) > max_events:
        raise OracleSizeError(f"{len(probs)} containment events exceed the limit of {max_events}")
    worlds = []
    for outcome in itertools.product((0, 1), repeat=len(probs)):
        w = 1.0
        for hit, p in zip(outcome, probs):
            w *= p if hit else 1.0 - p
        worlds.append((sum(outcome), w))
    return worlds


def aggregate_worlds(worlds, n_transactions: int) -> np.ndarray:
    pmf = np.zeros(n_transactions + 1)
    for support, w in worlds:
        pmf[support] += w
    return pmf


@dataclass
class GroundTruth:
    """Brute-force answers: expected support of each esup-frequent itemset and
    frequent probability of each probabilistically frequent one."""

    esup_frequent: dict = field(default_factory=dict)
    prob_frequent: dict = field(default_factory=dict)


def all_itemsets(universe, max_items: int = MAX_BRUTE_FORCE_ITEMS):
    items = sorted(universe)
    if len(items) > max_items:
        raise OracleSizeError(f"{len(items)} items exceed the brute-force limit of {max_items}")
    for size in range(1, len(items) + 1):
        yield from itertools.combinations(items, size)


def brute_force_mine(db: UncertainDatabase, params: MiningParams,
                     max_items: int = MAX_BRUTE_FORCE_ITEMS) -> GroundTruth:
    """Test every non-empty itemset against both frequentness definitions."""
    n = db.n_transactions
    esup_thr = params.esup_threshold(n)
    ms = params.ms(n)
    truth = GroundTruth()
    for x in all_itemsets(db.item_universe, max_items):
        esup = exact_esup(db, x)
        if esup >= esup_thr - 1e-9:
            truth.esup_frequent[x] = esup
        if esup > 0.0:
            prob = support_distribution(db, x).tail(ms)
            if prob > params.pft:
                truth.prob_frequent[x] = prob
    return truth


def brute_force_approx(db: UncertainDatabase, params: MiningParams, kind: str,
                       max_items: int = MAX_BRUTE_FORCE_ITEMS) -> dict:
    """Reference answers for the approximate miners.

    ``kind`` is ``"poisson"`` or ``"normal"``. Every itemset is scored from its
    exact expected support and variance; for the Normal score, whose
    acceptance is not anti-monotone, the result is the largest
    downward-closed family of accepted itemsets (what a level-wise miner
    returns). Values are the approximate frequent probabilities.
    """
    from .approx import normal_freq_prob, poisson_freq_prob
    from .report import downward_close

    n = db.n_transactions
    ms = params.ms(n)
    scores = {}
    for x in all_itemsets(db.item_universe, max_items):
        probs = containment_probs(db, x)
        esup = sum(probs)
        if kind == "poisson":
            s = poisson_freq_prob(esup, ms)
        elif kind == "normal":
            s = normal_freq_prob(esup, sum(p * (1 - p) for p in probs), ms)
        else:
            raise ValueError(f"unknown approximation {kind!r}")
        if s > params.pft:
            scores[x] = s
    kept = downward_close(scores)
    return {x: s for x, s in scores.items() if x in kept}
