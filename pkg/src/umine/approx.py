"""Approximate probabilistic frequent itemset mining.

The support of an itemset is Poisson-Binomial; its tail ``Pr(sup >= ms)``
is approximated either by a Poisson law with the same mean or by a Normal
law with the same mean and variance (with continuity correction). Both only
need moments that the expected-support miners already accumulate.
"""
from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special

from .apriori import levelwise
from .report import ItemsetResult, MiningReport, RunMetrics, downward_close, timed
from .udb import MiningParams, ParameterError, UncertainDatabase
from .uhmine import build_uh_struct, mine_uh

LAMBDA_TOLERANCE = 1e-6


class MomentPair(NamedTuple):
    esup: float
    var: float


class LambdaThreshold(NamedTuple):
    lambda_star: float
    ms: int
    pft: float


def poisson_freq_prob(lam, ms: int):
    """``Pr(Poisson(lam) >= ms)``.

    Evaluated as the regularized lower incomplete gamma function
    ``P(ms, lam)``, which equals ``1 - sum_{i<ms} e^-lam lam^i / i!`` without
    cancellation or factorial overflow. Accepts scalars or arrays.
    """
    if ms < 1:
        raise ValueError("ms must be at least 1")
    out = special.gammainc(ms, np.maximum(lam, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def lambda_threshold(ms: int, pft: float, tol: float = LAMBDA_TOLERANCE) -> LambdaThreshold:
    """Smallest Poisson mean (to within ``tol``) whose tail at ``ms`` exceeds ``pft``.

    Bisection on the strictly increasing map ``lam -> Pr(Poisson(lam) >= ms)``.
    The returned ``lambda_star`` satisfies the strict inequality, while
    ``lambda_star - tol`` does not.
    """
    if not 0.0 < pft < 1.0:
        raise ParameterError(f"pft must lie in (0, 1), got {pft}")
    lo, hi = 0.0, max(1.0, float(ms))
    while poisson_freq_prob(hi, ms) <= pft:
        lo, hi = hi, hi * 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if poisson_freq_prob(mid, ms) > pft:
            hi = mid
        else:
            lo = mid
    return LambdaThreshold(hi, ms, pft)


def _ndtr_survival(z):
    # 1 - Phi(z) == Phi(-z); scipy's ndtr is accurate to double precision
    return special.ndtr(-z)


@lru_cache(maxsize=1 << 16)
def _memo_survival(z_key: float) -> float:
    return float(special.ndtr(-z_key))


def normal_freq_prob(esup, var, ms: int, memo: bool = False):
    """Normal approximation of ``Pr(sup >= ms)``.

    ``1 - Phi((ms - 0.5 - esup) / sqrt(var))``; with zero variance the support
    is certain and the result is 1 if ``esup >= ms`` else 0. ``memo`` looks
    values up in a cache keyed on ``z`` rounded to 1e-4 instead (scalar only).
    Accepts scalars or arrays.
    """
    esup = np.asarray(esup, dtype=np.float64)
    var = np.asarray(var, dtype=np.float64)
    if np.any(var < -1e-9):
        raise ParameterError("variance must be non-negative")
    var = np.maximum(var, 0.0)
    safe = np.where(var > 0.0, var, 1.0)
    z = (ms - 0.5 - esup) / np.sqrt(safe)
    if memo and z.ndim == 0:
        surv = np.asarray(_memo_survival(round(float(z), 4)))
    else:
        surv = _ndtr_survival(z)
    out = np.where(var > 0.0, surv, (esup >= ms - 1e-9).astype(np.float64))
    return float(out) if out.ndim == 0 else out


def pdu_apriori(db: UncertainDatabase, params: MiningParams) -> MiningReport:
    """Poisson-approximation miner (UApriori at expected-support ``lambda*``).

    An itemset is reported when its expected support reaches the Poisson
    mean ``lambda*`` at which the tail at ``ms`` first exceeds ``pft``. Inside
    the ``tol``-wide bisection bracket the tail itself decides, so the answer
    is exactly ``{X : Pr(Poisson(esup(X)) >= ms) > pft}``. No frequent
    probabilities are reported.
    """
    n = db.n_transactions
    metrics = RunMetrics()
    with timed(metrics):
        ms = params.ms(n)
        lam = lambda_threshold(ms, params.pft)
        lo = lam.lambda_star - LAMBDA_TOLERANCE

        def accept(esup, _sq):
            ok = esup >= lam.lambda_star
            edge = ~ok & (esup >= lo)
            if edge.any():
                ok[edge] = poisson_freq_prob(esup[edge], ms) > params.pft
            return ok

        found = levelwise(db, accept, False, metrics) if n else []
    return MiningReport("pdu", n, [ItemsetResult(x, e) for x, e, _ in found], metrics,
                        lam.lambda_star)


def _normal_accept(ms: int, pft: float):
    def accept(esup, sq):
        return normal_freq_prob(esup, esup - sq, ms) > pft
    return accept


def ndu_apriori(db: UncertainDatabase, params: MiningParams) -> MiningReport:
    """Normal-approximation miner on the Apriori framework.

    Mean and variance of each candidate are accumulated in the same counting
    pass (variance = sum p - sum p^2).
    """
    n = db.n_transactions
    metrics = RunMetrics()
    with timed(metrics):
        ms = params.ms(n)
        found = levelwise(db, _normal_accept(ms, params.pft), True, metrics) if n else []
        results = [ItemsetResult(x, e, normal_freq_prob(e, e - q, ms)) for x, e, q in found]
    return MiningReport("ndu", n, results, metrics)


def nduh_mine(db: UncertainDatabase, params: MiningParams, order: str = "esup") -> MiningReport:
    """Normal-approximation miner on the UH-Mine framework.

    The depth-first search extends only accepted prefixes. Because the
    Normal score is not anti-monotone, a superset can pass while one of its
    non-prefix subsets fails; such itemsets are dropped at the end so the
    result is downward closed (and matches the Apriori-based miner).
    """
    n = db.n_transactions
    metrics = RunMetrics()
    with timed(metrics):
        ms = params.ms(n)
        accept = _normal_accept(ms, params.pft)
        if n:
            struct = build_uh_struct(db, accept, order)
            found = mine_uh(struct, accept, True, metrics)
        else:
            found = []
        kept = downward_close(x for x, _, _ in found)
        results = [ItemsetResult(x, e, normal_freq_prob(e, e - q, ms)) for x, e, q in found if x in kept]
    return MiningReport("nduh", n, results, metrics)


def normal_moments(probs) -> MomentPair:
    p = np.asarray(probs, dtype=np.float64)
    return MomentPair(float(p.sum()), float((p * (1.0 - p)).sum()))

