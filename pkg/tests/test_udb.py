import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from conftest import A, B, C, D, E, F, TOY_UDB, small_dbs
from umine.udb import (GAUSSIAN_CLAMP, FormatError, MiningParams, ParameterError, Probability,
                       ProbabilityRangeError, UncertainDatabase, assign_gaussian, assign_zipf,
                       itemset_prob, lookup, make_itemset, min_count, parse_fimi, parse_udb,
                       read_any, serialize_fimi, serialize_udb, zipf_pmf, zipf_survival_rate)


# --- FIMI -----------------------------------------------------------------

def test_fimi_two_lines():
    assert parse_fimi("1 2 3\n2 3\n") == [(1, 2, 3), (2, 3)]


def test_fimi_dedups_and_sorts():
    assert parse_fimi("3 1 1 2\n") == [(1, 2, 3)]


def test_fimi_bad_token_reports_line():
    with pytest.raises(FormatError) as err:
        parse_fimi("1 x 2\n")
    assert err.value.line == 1


def test_fimi_bad_token_on_later_line():
    with pytest.raises(FormatError) as err:
        parse_fimi("1 2\n3 4\n5 -1\n")
    assert err.value.line == 3


def test_fimi_empty_input_is_empty_database():
    assert parse_fimi("") == []


def test_fimi_blank_line_is_empty_transaction():
    assert parse_fimi("1\n\n2\n") == [(1,), (), (2,)]


def test_fimi_roundtrip():
    det = [(1, 2, 3), (), (7,)]
    assert parse_fimi(serialize_fimi(det)) == det


def test_fimi_reads_from_stream():
    assert parse_fimi(io.StringIO("4 2\n")) == [(2, 4)]


# --- UDB ------------------------------------------------------------------

def test_udb_toy(toy):
    assert toy.n_transactions == 4
    assert toy[0].units == [(A, 0.8), (B, 0.2), (C, 0.9), (D, 0.7), (F, 0.8)]
    assert toy[1].units == [(A, 0.8), (B, 0.7), (C, 0.9), (E, 0.5)]
    assert toy[2].units == [(A, 0.5), (C, 0.8), (E, 0.8), (F, 0.3)]
    assert toy[3].units == [(B, 0.5), (D, 0.5), (F, 0.7)]
    assert toy.item_universe == {A, B, C, D, E, F}


def test_udb_certain_unit():
    db = parse_udb("1:1.0\n")
    assert db.n_transactions == 1 and db[0].units == [(1, 1.0)]


@pytest.mark.parametrize("text", ["1:1.5\n", "1:0\n", "1:-0.2\n", "1:nan\n"])
def test_udb_range_error(text):
    with pytest.raises(ProbabilityRangeError):
        parse_udb(text)


def test_udb_malformed_token_has_line_and_column():
    with pytest.raises(FormatError) as err:
        parse_udb("1:0.5\n2:0.5 3-0.4\n")
    assert (err.value.line, err.value.column) == (2, 7)
    assert not isinstance(err.value, ProbabilityRangeError)


def test_udb_duplicate_item_rejected():
    with pytest.raises(FormatError):
        parse_udb("1:0.5 1:0.4\n")


def test_udb_unsorted_input_is_sorted():
    db = parse_udb("5:0.5 2:0.25\n")
    assert db[0].units == [(2, 0.25), (5, 0.5)]


def test_udb_writes_six_decimals(toy):
    text = serialize_udb(toy)
    assert text.splitlines()[0] == "1:0.800000 2:0.200000 3:0.900000 4:0.700000 6:0.800000"


@settings(max_examples=60, deadline=None)
@given(small_dbs())
def test_udb_roundtrip_full_precision(db):
    back = parse_udb(serialize_udb(db, digits=None))
    assert back == db


def test_udb_roundtrip_keeps_empty_transactions():
    db = UncertainDatabase.from_transactions([[(1, 0.5)], [], [(2, 0.25)]])
    back = parse_udb(serialize_udb(db))
    assert back == db and back.n_transactions == 3


def test_read_any_sniffs_format(tmp_path):
    (tmp_path / "a.udb").write_text(TOY_UDB)
    (tmp_path / "b.dat").write_text("1 2\n3\n")
    assert isinstance(read_any(tmp_path / "a.udb"), UncertainDatabase)
    assert read_any(tmp_path / "b.dat") == [(1, 2), (3,)]


# --- types ------------------------------------------------------------------

def test_probability_range():
    assert Probability(0.0) == 0.0 and Probability(1.0) == 1.0
    for bad in (-0.01, 1.01, float("nan")):
        with pytest.raises(ValueError):
            Probability(bad)


def test_make_itemset():
    assert make_itemset([3, 1, 3]) == (1, 3)
    with pytest.raises(ValueError):
        make_itemset([])


def test_min_count_is_ceiling():
    assert min_count(4, 0.5) == 2
    assert min_count(5, 0.5) == 3
    assert min_count(10, 0.7) == 7  # 10 * 0.7 is 7.000000000000001 in binary
    assert min_count(3, 0.01) == 1


def test_params_validation():
    with pytest.raises(ParameterError):
        MiningParams(min_sup=0.0)
    with pytest.raises(ParameterError):
        MiningParams(pft=1.0)
    with pytest.raises(ParameterError):
        MiningParams(min_esup=1.5)
    assert 1 <= MiningParams(min_sup=1.0).ms(7) <= 7


def test_database_rejects_zero_probability_and_unsorted():
    with pytest.raises(ValueError):
        UncertainDatabase([0, 1], [1], [0.0])
    with pytest.raises(ValueError):
        UncertainDatabase([0, 2], [3, 1], [0.5, 0.5])


def test_from_transactions_drops_zero_units():
    db = UncertainDatabase.from_transactions([[(1, 0.0), (2, 0.5)]])
    assert db[0].units == [(2, 0.5)]


def test_database_arrays_are_read_only(toy):
    with pytest.raises(ValueError):
        toy.probs[0] = 0.1


def test_item_moments(toy):
    ids, esup, sq = toy.item_moments()
    got = dict(zip(ids.tolist(), esup.tolist()))
    assert got == pytest.approx({A: 2.1, B: 1.4, C: 2.6, D: 1.2, E: 1.3, F: 1.8})
    assert dict(zip(ids.tolist(), (esup - sq).tolist()))[C] == pytest.approx(0.34)


def test_lookup_sparse_and_dense_paths():
    ids = np.array([5, 2, 9])
    vals = np.array([0, 1, 2])
    keys = np.array([2, 3, 9, 5])
    assert lookup(keys, ids, vals).tolist() == [1, -1, 2, 0]
    big = np.array([10**12, 7])
    assert lookup(np.array([7, 10**12, 8]), big, np.array([4, 5])).tolist() == [5, 4, -1]


# --- itemset_prob -----------------------------------------------------------

def test_itemset_prob_toy(toy):
    assert itemset_prob(toy[0], (A,)) == 0.8
    assert itemset_prob(toy[0], (A, C)) == pytest.approx(0.72)
    assert itemset_prob(toy[3], (A,)) == 0.0


@settings(max_examples=80, deadline=None)
@given(small_dbs(), st.data())
def test_itemset_prob_non_increasing_under_growth(db, data):
    universe = sorted(db.item_universe)
    if not universe:
        return
    x = data.draw(st.sets(st.sampled_from(universe), min_size=1))
    y = data.draw(st.sets(st.sampled_from(universe)))
    for t in db:
        assert itemset_prob(t, sorted(x | y)) <= itemset_prob(t, sorted(x)) + 1e-15


# --- probability assignment -------------------------------------------------

DET = [(1, 2, 3), (2, 3), (1, 4, 5, 6), (), (6,)] * 20


def test_gaussian_zero_variance_is_clamped_mean():
    assert set(assign_gaussian(DET, 0.7, 0.0, 1).probs.tolist()) == {0.7}
    assert set(assign_gaussian(DET, 1.3, 0.0, 1).probs.tolist()) == {1.0}
    assert set(assign_gaussian(DET, -2.0, 0.0, 1).probs.tolist()) == {0.01}


def test_gaussian_deterministic_bytes():
    a = serialize_udb(assign_gaussian(DET, 0.5, 0.5, 7))
    b = serialize_udb(assign_gaussian(DET, 0.5, 0.5, 7))
    c = serialize_udb(assign_gaussian(DET, 0.5, 0.5, 8))
    assert a == b and a != c


def test_gaussian_keeps_shape_and_range():
    db = assign_gaussian(DET, 0.95, 0.05, 3)
    assert db.n_transactions == len(DET)
    assert [t.items for t in db] == [tuple(r) for r in DET]
    assert db.probs.min() >= GAUSSIAN_CLAMP[0] and db.probs.max() <= 1.0


def test_gaussian_six_digit_roundtrip_is_exact():
    db = assign_gaussian(DET, 0.5, 0.5, 11)
    assert parse_udb(serialize_udb(db)) == db


def test_gaussian_negative_variance_rejected():
    with pytest.raises(ParameterError):
        assign_gaussian(DET, 0.5, -0.1, 0)


def test_gaussian_clamped_mean_matches_analytic():
    det = [(1,)] * 10_000
    mean, var = 0.95, 0.05
    sd = math.sqrt(var)
    lo, hi = GAUSSIAN_CLAMP
    dist = stats.norm(mean, sd)
    inner, _ = integrate.quad(lambda x: x * dist.pdf(x), lo, hi)
    analytic = lo * dist.cdf(lo) + inner + hi * dist.sf(hi)
    sample = assign_gaussian(det, mean, var, 2024).probs.mean()
    assert abs(sample - analytic) < 0.02


def test_zipf_more_skew_fewer_units():
    det = [tuple(range(20))] * 200
    few = assign_zipf(det, 2.0, 0.05, 5).n_units
    many = assign_zipf(det, 0.8, 0.05, 5).n_units
    assert few <= many


def test_zipf_zero_cutoff_keeps_everything():
    db = assign_zipf(DET, 1.5, 0.0, 5)
    assert db.n_units == sum(len(r) for r in DET)


def test_zipf_survival_rate_closed_form():
    # rank r maps to probability r / 100; survivors are ranks with r / 100 > cutoff
    ranks = np.arange(1, 101)
    w = ranks ** -1.2
    expected = w[ranks / 100 > 0.05].sum() / w.sum()
    assert zipf_survival_rate(1.2, 0.05) == pytest.approx(expected, abs=1e-15)
    det = [tuple(range(50))] * 400
    observed = assign_zipf(det, 1.2, 0.05, 9).n_units / (50 * 400)
    assert abs(observed - expected) < 0.01


def test_zipf_pmf_normalized_and_validations():
    assert zipf_pmf(1.3).sum() == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        assign_zipf(DET, 0.0, 0.05, 1)
    with pytest.raises(ParameterError):
        assign_zipf(DET, 1.0, 1.0, 1)


def test_zipf_deterministic_and_empty_rows_kept():
    a = assign_zipf(DET, 2.0, 0.05, 4)
    assert a == assign_zipf(DET, 2.0, 0.05, 4)
    assert a.n_transactions == len(DET)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sets(st.integers(0, 30), max_size=8), max_size=30),
       st.floats(0.0, 1.0), st.floats(0.0, 0.6), st.integers(0, 2**31))
def test_assignments_respect_invariants(rows, mean, var, seed):
    det = [tuple(sorted(r)) for r in rows]
    for db in (assign_gaussian(det, mean, var, seed), assign_zipf(det, 0.8 + var, 0.05, seed)):
        assert db.n_transactions == len(det)
        if db.n_units:
            assert db.probs.min() > 0.0 and db.probs.max() <= 1.0
        for t in db:
            assert list(t.items) == sorted(set(t.items))
