"""Experiment harness: run miners, time them, meter memory, write CSV.

Timing and memory are measured in separate runs. Wall time is the mean of
``runs`` repetitions after one discarded warm-up, measured with the
monotonic performance counter, with no allocation tracing and the garbage
collector paused. Peak memory comes
from one extra run under ``tracemalloc`` (numpy reports its buffers to it),
counted from the start of that run, so the database itself is excluded.
"""
from __future__ import annotations

import csv
import gc
import math
import os
import signal
import threading
import time
import tracemalloc
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Optional

from . import approx, exact
from .apriori import uapriori
from .datagen import scenario as lookup_scenario
from .oracle import brute_force_mine, exact_esup
from .report import ItemsetResult, MiningReport, RunMetrics, timed
from .udb import (MiningParams, UncertainDatabase, assign_gaussian,
                  assign_zipf, read_any)
from .ufp import ufp_growth
from .uhmine import uh_mine

DEFAULT_RUNS = 10
DEFAULT_TIMEOUT_SECS = 3600
DEFAULT_MEAN, DEFAULT_VARIANCE = 0.5, 0.5
DEFAULT_ZERO_CUTOFF = 0.05


class UsageError(ValueError):
    """Bad algorithm tag, axis or option combination."""


class InvariantError(RuntimeError):
    """A result violated an internal consistency check."""


class RunTimeout(Exception):
    pass


def _oracle(db: UncertainDatabase, params: MiningParams) -> MiningReport:
    metrics = RunMetrics()
    with timed(metrics):
        truth = brute_force_mine(db, params)
        rows = [ItemsetResult(x, exact_esup(db, x), p) for x, p in truth.prob_frequent.items()]
    return MiningReport("oracle", db.n_transactions, rows, metrics)


@dataclass(frozen=True)
class Algorithm:
    tag: str
    kind: str  # "esup", "exact", "approx" or "oracle"
    run: Callable


ALGORITHMS = {
    "uapriori": Algorithm("uapriori", "esup", lambda db, p: uapriori(db, p.min_esup)),
    "ufp": Algorithm("ufp", "esup", lambda db, p: ufp_growth(db, p.min_esup)),
    "uhmine": Algorithm("uhmine", "esup", lambda db, p: uh_mine(db, p.min_esup)),
    "dp": Algorithm("dp", "exact", exact.dpnb),
    "dpb": Algorithm("dpb", "exact", exact.dpb),
    "dc": Algorithm("dc", "exact", exact.dcnb),
    "dcb": Algorithm("dcb", "exact", exact.dcb),
    "pdu": Algorithm("pdu", "approx", approx.pdu_apriori),
    "ndu": Algorithm("ndu", "approx", approx.ndu_apriori),
    "nduh": Algorithm("nduh", "approx", approx.nduh_mine),
    "oracle": Algorithm("oracle", "oracle", _oracle),
}
ALIASES = {"dpnb": "dp", "dcnb": "dc", "ufpgrowth": "ufp", "uh-mine": "uhmine"}


def get_algorithm(tag: str) -> Algorithm:
    key = ALIASES.get(tag.lower(), tag.lower())
    if key not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {tag!r}; choose from {', '.join(ALGORITHMS)}")
    return ALGORITHMS[key]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines one experiment.

    ``dataset`` is a file path (UDB, or FIMI which then gets probabilities
    assigned) or a scenario name. Probabilities for deterministic input are
    Zipf when ``skew`` is set, Gaussian otherwise.
    """

    algorithm: str
    dataset: str
    params: MiningParams = field(default_factory=MiningParams)
    mean: Optional[float] = None
    variance: Optional[float] = None
    skew: Optional[float] = None
    zero_cutoff: float = DEFAULT_ZERO_CUTOFF
    seed: int = 0
    runs: int = DEFAULT_RUNS
    timeout_secs: Optional[float] = DEFAULT_TIMEOUT_SECS
    measure_time: bool = True
    measure_memory: bool = True
    reference: str = "dcb"  # exact miner used for precision / recall


@dataclass
class BenchRecord:
    algorithm: str
    dataset: str
    min_esup: float
    min_sup: float
    pft: float
    mean: Optional[float]
    variance: Optional[float]
    skew: Optional[float]
    wall_ms: Optional[float]
    peak_bytes: Optional[int]
    itemset_count: Optional[int]
    precision: Optional[float]
    recall: Optional[float]
    seed: int
    n_transactions: Optional[int] = None
    status: str = "OK"
    report: Optional[MiningReport] = field(default=None, repr=False, compare=False)

    @property
    def params(self) -> MiningParams:
        return MiningParams(self.min_esup, self.min_sup, self.pft)


CSV_FIELDS = [f.name for f in fields(BenchRecord) if f.name != "report"]
_INT_FIELDS = {"peak_bytes", "itemset_count", "seed", "n_transactions"}
_TEXT_FIELDS = {"algorithm", "dataset", "status"}


def precision_recall(approx_set, exact_set):
    """``(|AR & ER| / |AR|, |AR & ER| / |ER|)``; an empty denominator gives None."""
    ar, er = set(approx_set), set(exact_set)
    hit = len(ar & er)
    precision = hit / len(ar) if ar else None
    recall = hit / len(er) if er else None
    return precision, recall


@contextmanager
def _deadline(seconds: Optional[float]):
    usable = (seconds and seconds > 0 and hasattr(signal, "SIGALRM")
              and threading.current_thread() is threading.main_thread())
    if not usable:
        yield
        return

    def _alarm(signum, frame):
        raise RunTimeout()

    old = signal.signal(signal.SIGALRM, _alarm)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


@contextmanager
def _gc_paused():
    # as timeit does: a collection landing inside one run skews the mean
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def load_database(config: ExperimentConfig) -> tuple:
    """``(database, mean, variance, skew)`` for a config."""
    path = Path(config.dataset)
    if path.exists():
        data = read_any(path)
        if isinstance(data, UncertainDatabase):
            return data, None, None, None
        det, defaults = data, (DEFAULT_MEAN, DEFAULT_VARIANCE)
    else:
        try:
            sc = lookup_scenario(config.dataset, config.seed)
        except KeyError as exc:
            raise FileNotFoundError(f"{config.dataset!r} is neither a file nor a scenario") from exc
        det, defaults = sc.transactions(), (sc.mean, sc.variance)
    if config.skew is not None:
        db = assign_zipf(det, config.skew, config.zero_cutoff, config.seed)
        return db, None, None, config.skew
    mean = defaults[0] if config.mean is None else config.mean
    var = defaults[1] if config.variance is None else config.variance
    return assign_gaussian(det, mean, var, config.seed), mean, var, None


def measure_peak(fn: Callable, *args):
    """Run ``fn(*args)`` under tracemalloc; return (result, peak bytes)."""
    was_tracing = tracemalloc.is_tracing()
    if not was_tracing:
        tracemalloc.start()
    tracemalloc.reset_peak()
    base = tracemalloc.get_traced_memory()[0]
    try:
        result = fn(*args)
        peak = tracemalloc.get_traced_memory()[1] - base
    finally:
        if not was_tracing:
            tracemalloc.stop()
    return result, max(0, peak)


def _check(report: MiningReport, algo: Algorithm, params: MiningParams):
    for r in report.itemsets:
        if r.freq_prob is not None and not (params.pft < r.freq_prob <= 1.0 + 1e-12):
            raise InvariantError(f"{algo.tag}: {r.items} reported with probability {r.freq_prob}")
        if len(set(r.items)) != len(r.items):
            raise InvariantError(f"{algo.tag}: malformed itemset {r.items}")


def run_experiment(config: ExperimentConfig, db: UncertainDatabase | None = None,
                   reference: MiningReport | None = None) -> BenchRecord:
    """Run one configuration and summarize it as a :class:`BenchRecord`.

    ``db`` may be passed in to skip loading; ``reference`` supplies exact
    results for precision / recall of approximate miners (computed with
    ``config.reference`` when absent).
    """
    algo = get_algorithm(config.algorithm)
    if config.runs < 1:
        raise UsageError("runs must be at least 1")
    if db is None:
        db, mean, var, skew = load_database(config)
    else:
        mean, var, skew = config.mean, config.variance, config.skew
    p = config.params
    record = BenchRecord(algo.tag, config.dataset, p.min_esup, p.min_sup, p.pft, mean, var, skew,
                         None, None, None, None, None, config.seed, db.n_transactions)
    report = None
    try:
        with _deadline(config.timeout_secs):
            report = algo.run(db, p)  # warm-up, also the result of record
        if config.measure_time:
            total = 0.0
            gc.collect()
            for _ in range(config.runs):
                with _deadline(config.timeout_secs), _gc_paused():
                    start = time.perf_counter()
                    algo.run(db, p)
                    total += time.perf_counter() - start
            record.wall_ms = total / config.runs * 1e3
        if config.measure_memory:
            with _deadline(config.timeout_secs):
                _, record.peak_bytes = measure_peak(algo.run, db, p)
    except RunTimeout:
        record.status = "TIMEOUT"
        record.wall_ms = None
        if report is None:
            return record
    _check(report, algo, p)
    record.report = report
    record.itemset_count = len(report)
    if algo.kind == "approx":
        if reference is None:
            reference = get_algorithm(config.reference).run(db, p)
        record.precision, record.recall = precision_recall(report.keys(), reference.keys())
    return record


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.6g}"
    return str(value)


def _row(record: BenchRecord) -> list:
    return [_fmt(getattr(record, name)) for name in CSV_FIELDS]


def emit_csv(records, path) -> Path:
    """Write a header and one row per record (6 significant digits)."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow(_row(r))
    return path


class CsvSink:
    """Incremental CSV writer: the header on open, each row flushed at once."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(CSV_FIELDS)
        self._fh.flush()

    def write(self, record: BenchRecord):
        self._writer.writerow(_row(record))
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_csv(path) -> list:
    """Parse a file written by :func:`emit_csv` back into records."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            values = {}
            for name in CSV_FIELDS:
                raw = row.get(name, "")
                if name in _TEXT_FIELDS:
                    values[name] = raw
                elif raw == "":
                    values[name] = None
                elif name in _INT_FIELDS:
                    values[name] = int(float(raw))
                else:
                    values[name] = float(raw)
            out.append(BenchRecord(**values))
    return out


SWEEP_AXES = ("min_sup", "min_esup", "pft", "n_transactions", "skew")


def _vary(base: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis in ("min_sup", "min_esup", "pft"):
        return replace(base, params=replace(base.params, **{axis: float(value)}))
    if axis == "skew":
        return replace(base, skew=float(value))
    if axis == "n_transactions":
        name = base.dataset.split("@")[0]
        return replace(base, dataset=f"{name}@{int(value)}")
    raise UsageError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")


def _failed(config: ExperimentConfig, exc: Exception) -> BenchRecord:
    p = config.params
    return BenchRecord(config.algorithm, config.dataset, p.min_esup, p.min_sup, p.pft,
                       config.mean, config.variance, config.skew, None, None, None, None, None,
                       config.seed, None, f"ERROR: {type(exc).__name__}: {exc}")


def _run_quiet(config: ExperimentConfig) -> BenchRecord:
    try:
        rec = run_experiment(config)
    except (UsageError, InvariantError):
        raise
    except Exception as exc:  # noqa: BLE001 - a failed row must not stop the sweep
        return _failed(config, exc)
    rec.report = None  # not picklable cheaply, and not needed by the caller
    return rec


def sweep(axis: str, values, base: ExperimentConfig, csv_path=None,
          parallel: bool = False, workers: int | None = None) -> list:
    """One experiment per value of ``axis``; rows reach ``csv_path`` as they finish.

    Per-row failures are recorded (``status`` starts with ``ERROR``) and the
    sweep carries on. With ``parallel`` the configs run in worker processes
    and timing columns are left empty.
    """
    values = list(values)
    if not values:
        raise UsageError("a sweep needs at least one value")
    if values != sorted(values):
        raise UsageError("sweep values must be sorted")
    configs = [_vary(base, axis, v) for v in values]
    if parallel:
        configs = [replace(c, measure_time=False) for c in configs]
    sink = CsvSink(csv_path) if csv_path is not None else None
    records = []
    try:
        if parallel:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for rec in pool.map(_run_quiet, configs):
                    records.append(rec)
                    if sink:
                        sink.write(rec)
        else:
            for config in configs:
                try:
                    rec = run_experiment(config)
                except (UsageError, InvariantError):
                    raise
                except Exception as exc:  # noqa: BLE001
                    rec = _failed(config, exc)
                records.append(rec)
                if sink:
                    sink.write(rec)
    finally:
        if sink:
            sink.close()
    return records


def write_results(report: MiningReport, path) -> Path:
    path = Path(path)
    path.write_text(report.to_text())
    return path
