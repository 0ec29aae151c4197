import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import A, C, random_db, small_dbs
from umine.exact import (Verdict, chernoff_prune, dcb, dcnb, dpb, dpnb, freq_prob_dc, freq_prob_dp,
                         mine_probabilistic, support_pmf_dc)
from umine.oracle import brute_force_mine, support_distribution
from umine.udb import MiningParams, ParameterError, UncertainDatabase

VARIANTS = [dpnb, dpb, dcnb, dcb]


@pytest.mark.parametrize("fn", [freq_prob_dp, freq_prob_dc])
def test_toy_item_a(fn):
    assert fn([0.8, 0.8, 0.5, 0.0], 2) == pytest.approx(0.80, abs=1e-12)


@pytest.mark.parametrize("fn", [freq_prob_dp, freq_prob_dc])
def test_toy_item_c(fn):
    assert fn([0.9, 0.9, 0.8, 0.0], 2) == pytest.approx(0.954, abs=1e-12)


@pytest.mark.parametrize("fn", [freq_prob_dp, freq_prob_dc])
def test_trivial_cases(fn):
    assert fn([1.0, 1.0, 1.0], 3) == pytest.approx(1.0)
    assert fn([0.7], 1) == pytest.approx(0.7)
    assert fn([0.3, 0.2], 0) == 1.0  # boundary: support >= 0 always holds
    assert fn([0.9, 0.9], 3) == 0.0  # more occurrences than transactions


def test_dp_equals_dc_on_random_vectors(rng):
    for _ in range(1000):
        n = int(rng.integers(1, 65))
        p = rng.uniform(0, 1, n)
        p[rng.random(n) < 0.1] = 1.0
        ms = int(rng.integers(1, n + 1))
        assert freq_prob_dc(p, ms) == pytest.approx(freq_prob_dp(p, ms), abs=1e-9)


def test_dc_above_fft_crossover(rng):
    p = rng.uniform(0, 1, 3000)
    for ms in (1, 700, 1500, 1600, 2999):
        assert freq_prob_dc(p, ms) == pytest.approx(freq_prob_dp(p, ms), abs=1e-9)


def test_capped_pipeline_matches_uncapped(rng):
    for _ in range(200):
        n = int(rng.integers(1, 200))
        p = rng.uniform(0, 1, n)
        full = support_pmf_dc(p)
        assert len(full) == n + 1 and full.sum() == pytest.approx(1.0, abs=1e-9)
        ms = int(rng.integers(1, n + 1))
        capped = support_pmf_dc(p, cap=ms)
        assert len(capped) == ms + 1
        assert 1.0 - capped[:ms].sum() == pytest.approx(1.0 - full[:ms].sum(), abs=1e-9)


def test_dc_pmf_matches_oracle(rng):
    db = random_db(rng, max_n=10, max_items=3)
    for item in db.item_universe:
        probs = db.vertical().containment([item])
        want = support_distribution(db, (item,)).pmf
        assert support_pmf_dc(probs) == pytest.approx(want, abs=1e-12)


def test_chernoff_negative_delta_is_undecided():
    d = chernoff_prune(2.1, 2, 0.7)
    assert d.verdict is Verdict.UNDECIDED and d.delta == pytest.approx((2 - 2.1 - 1) / 2.1)


def test_chernoff_large_delta_prunes():
    d = chernoff_prune(1.0, 50, 0.9)
    assert d.delta == pytest.approx(48.0) and d.verdict is Verdict.PRUNED and d.pruned


def test_chernoff_boundary_uses_exponential_branch():
    mu = 1.0
    split = 2 * math.e - 1
    ms = mu + 1 + split * mu  # delta exactly at the split
    bound = math.exp(-split * split * mu / 4)
    assert not chernoff_prune(mu, ms, bound * 0.999).pruned
    assert chernoff_prune(mu, ms, bound * 1.001).pruned


def test_chernoff_rejects_nonpositive_esup():
    with pytest.raises(ParameterError):
        chernoff_prune(0.0, 3, 0.5)


def test_chernoff_soundness_random(rng):
    for _ in range(300):
        db = random_db(rng)
        n = db.n_transactions
        for x in [(i,) for i in sorted(db.item_universe)][:4]:
            probs = db.vertical().containment(list(x))
            esup = float(probs.sum())
            if esup <= 0:
                continue
            for ms in range(1, n + 1):
                pft = float(rng.uniform(0.05, 0.95))
                if chernoff_prune(esup, ms, pft).pruned:
                    assert support_distribution(db, x).tail(ms) <= pft + 1e-12


def test_toy_mining(toy):
    params = MiningParams(min_sup=0.5, pft=0.7)
    for variant in VARIANTS:
        report = variant(toy, params)
        assert report.keys() == {(A,), (C,)}
        probs = report.prob_map()
        assert probs[(A,)] == pytest.approx(0.80, abs=1e-9)
        assert probs[(C,)] == pytest.approx(0.954, abs=1e-9)


def test_variants_identical_on_random_dbs(rng):
    for _ in range(200):
        db = random_db(rng)
        params = MiningParams(min_sup=float(rng.uniform(0.1, 0.9)), pft=float(rng.uniform(0.1, 0.9)))
        reports = [v(db, params) for v in VARIANTS]
        keys = reports[0].keys()
        for r in reports[1:]:
            assert r.keys() == keys
            for x, p in r.prob_map().items():
                assert p == pytest.approx(reports[0].prob_map()[x], abs=1e-9)


def test_chernoff_counts_pruned_candidates():
    db = UncertainDatabase.from_transactions([[(1, 0.9), (2, 0.05)]] * 40)
    params = MiningParams(min_sup=0.5, pft=0.9)
    bounded, unbounded = dcb(db, params), dcnb(db, params)
    assert bounded.keys() == unbounded.keys() == {(1,)}
    assert bounded.metrics.pruned >= 1 and unbounded.metrics.pruned == 0
    assert bounded.metrics.evaluated < unbounded.metrics.evaluated


def test_unknown_method(toy):
    with pytest.raises(ValueError):
        mine_probabilistic(toy, MiningParams(), method="fft")


def test_pft_monotonicity(rng):
    for _ in range(50):
        db = random_db(rng, max_n=30, max_items=8)
        params = MiningParams(min_sup=0.2, pft=0.5)
        strict = MiningParams(min_sup=0.2, pft=0.999999)
        assert dcb(db, strict).keys() <= dcb(db, params).keys()


@settings(max_examples=80, deadline=None)
@given(small_dbs(max_n=9, max_items=5), st.floats(0.05, 1.0), st.floats(0.05, 0.95))
def test_matches_oracle_and_closure(db, min_sup, pft):
    params = MiningParams(min_sup=min_sup, pft=pft)
    truth = brute_force_mine(db, params).prob_frequent
    report = dcb(db, params)
    probs = report.prob_map()
    assert set(probs) == set(truth)
    for x, p in probs.items():
        assert p == pytest.approx(truth[x], abs=1e-9)
        for k in range(len(x)):
            sub = x[:k] + x[k + 1:]
            if sub:
                assert sub in probs and p <= probs[sub] + 1e-9


def test_dc_scales_better_than_dp():
    rng = np.random.default_rng(7)

    def best(fn, p, ms, reps=3):
        out = []
        for _ in range(reps):
            t = time.perf_counter()
            fn(p, ms)
            out.append(time.perf_counter() - t)
        return min(out)

    freq_prob_dp(rng.uniform(size=64), 10)  # compile outside the timing
    small, large = rng.uniform(size=4096), rng.uniform(size=4 * 4096)
    dp_ratio = best(freq_prob_dp, large, len(large) // 2) / best(freq_prob_dp, small, len(small) // 2)
    dc_ratio = best(freq_prob_dc, large, len(large) // 2) / best(freq_prob_dc, small, len(small) // 2)
    assert dc_ratio < dp_ratio
