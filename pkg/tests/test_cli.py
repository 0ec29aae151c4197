import subprocess
import sys
from dataclasses import replace

import pytest

from conftest import TOY_UDB
from umine import bench
from umine.bench import ALGORITHMS, read_csv
from umine.cli import EXIT_INVARIANT, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from umine.report import ItemsetResult, MiningReport
from umine.udb import parse_udb


@pytest.fixture
def toy_file(tmp_path):
    path = tmp_path / "t1.udb"
    path.write_text(TOY_UDB)
    return str(path)


def test_list_algorithms(capsys):
    assert main(["--list-algorithms"]) == EXIT_OK
    tags = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()]
    assert tags == ["uapriori", "ufp", "uhmine", "dp", "dpb", "dc", "dcb", "pdu", "ndu", "nduh", "oracle"]
    assert main(["mine", "--list-algorithms"]) == EXIT_OK


def test_mine_writes_csv(toy_file, tmp_path, capsys):
    out = tmp_path / "r.csv"
    res = tmp_path / "items.txt"
    code = main(["mine", "--algo", "uapriori", "--input", toy_file, "--min-esup", "0.5",
                 "--runs", "2", "--out", str(out), "--results", str(res)])
    assert code == EXIT_OK
    (rec,) = read_csv(out)
    assert rec.algorithm == "uapriori" and rec.itemset_count == 2 and rec.wall_ms > 0
    assert res.read_text().splitlines() == ["1\t2.1\t", "3\t2.6\t"]


def test_mine_probabilistic_on_toy(toy_file, tmp_path):
    out = tmp_path / "r.csv"
    assert main(["mine", "--algo", "dcb", "--input", toy_file, "--min-sup", "0.5", "--pft", "0.7",
                 "--runs", "1", "--no-memory", "--out", str(out)]) == EXIT_OK
    assert read_csv(out)[0].itemset_count == 2


def test_mine_on_scenario(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["mine", "--algo", "nduh", "--scenario", "gazelle@5000", "--runs", "1",
                 "--no-memory", "--out", str(out)]) == EXIT_OK
    (rec,) = read_csv(out)
    assert rec.n_transactions == 5000 and rec.pft == 0.9 and rec.recall is not None


@pytest.mark.parametrize("argv", [
    ["mine", "--algo", "fpgrowth", "--input", "x", "--out", "o.csv"],
    ["mine", "--input", "x", "--out", "o.csv"],
    ["mine", "--algo", "dcb", "--out", "o.csv"],
    ["mine", "--algo", "dcb", "--input", "x", "--out", "o.csv", "--runs", "0"],
    ["mine", "--algo", "dcb", "--input", "x", "--out", "o.csv", "--pft", "1.5"],
    ["mine", "--bogus-flag"],
    ["sweep", "--algo", "dcb", "--axis", "pft", "--values", "0.9,0.1", "--scenario", "gazelle@500",
     "--out", "o.csv"],
    [],
])
def test_usage_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == EXIT_USAGE


def test_missing_input_is_io_error(tmp_path):
    assert main(["mine", "--algo", "dcb", "--input", str(tmp_path / "nope.udb"),
                 "--out", str(tmp_path / "o.csv")]) == EXIT_IO


def test_malformed_input_is_io_error(tmp_path):
    bad = tmp_path / "bad.udb"
    bad.write_text("1:0.5 2-0.3\n")
    assert main(["mine", "--algo", "dcb", "--input", str(bad), "--out", str(tmp_path / "o.csv")]) == EXIT_IO


def test_unwritable_output_is_io_error(toy_file, tmp_path):
    assert main(["mine", "--algo", "uapriori", "--input", toy_file, "--runs", "1",
                 "--out", str(tmp_path / "no" / "such" / "o.csv")]) == EXIT_IO


def test_invariant_violation_exit_code(toy_file, tmp_path, monkeypatch):
    def broken(db, params):
        return MiningReport("dcb", db.n_transactions, [ItemsetResult((1, 1), 2.0, 0.99)])

    monkeypatch.setitem(ALGORITHMS, "dcb", replace(ALGORITHMS["dcb"], run=broken))
    assert main(["mine", "--algo", "dcb", "--input", toy_file, "--runs", "1",
                 "--out", str(tmp_path / "o.csv")]) == EXIT_INVARIANT


def test_timeout_still_exits_zero(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["mine", "--algo", "dp", "--scenario", "connect@20000", "--min-sup", "0.3",
                 "--pft", "0.5", "--timeout-secs", "0.05", "--runs", "1", "--out", str(out)]) == EXIT_OK
    assert read_csv(out)[0].status == "TIMEOUT"


def test_verify_agrees_on_toy(toy_file, capsys):
    assert main(["verify", "--input", toy_file, "--min-esup", "0.5", "--min-sup", "0.5",
                 "--pft", "0.7"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 10 and all(" ok " in line for line in lines)


def test_verify_reports_disagreement(toy_file, monkeypatch):
    monkeypatch.setitem(ALGORITHMS, "ufp", replace(
        ALGORITHMS["ufp"], run=lambda db, p: MiningReport("ufp", db.n_transactions, [])))
    assert main(["verify", "--input", toy_file, "--min-esup", "0.5"]) == EXIT_INVARIANT


def test_verify_too_large_is_usage_error(tmp_path):
    path = tmp_path / "wide.udb"
    path.write_text(" ".join(f"{i}:0.5" for i in range(20)) + "\n")
    assert main(["verify", "--input", str(path)]) == EXIT_USAGE


def test_gen_seed_from_environment(tmp_path, monkeypatch):
    a, b, c = tmp_path / "a.udb", tmp_path / "b.udb", tmp_path / "c.udb"
    base = ["gen", "--n-transactions", "300", "--n-items", "20", "--avg-len", "4"]
    assert main(base + ["--seed", "42", "--out", str(a)]) == EXIT_OK
    monkeypatch.setenv("UMINE_SEED", "42")
    assert main(base + ["--out", str(b)]) == EXIT_OK
    monkeypatch.setenv("UMINE_SEED", "43")
    assert main(base + ["--out", str(c)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()
    assert parse_udb(a.read_text()).n_transactions == 300


def test_bad_seed_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("UMINE_SEED", "abc")
    assert main(["gen", "--scenario", "gazelle@100", "--out", str(tmp_path / "x.udb")]) == EXIT_USAGE


def test_gen_formats(tmp_path):
    fimi = tmp_path / "g.dat"
    assert main(["gen", "--scenario", "t25i15d1k", "--format", "fimi", "--out", str(fimi)]) == EXIT_OK
    assert len(fimi.read_text().splitlines()) == 1000
    zipf = tmp_path / "z.udb"
    assert main(["gen", "--scenario", "connect@200", "--skew", "1.2", "--out", str(zipf)]) == EXIT_OK
    assert parse_udb(zipf.read_text()).n_transactions == 200


def test_gen_needs_shape_without_scenario(tmp_path):
    assert main(["gen", "--out", str(tmp_path / "x.udb")]) == EXIT_USAGE


def test_sweep_command(tmp_path, capsys):
    out = tmp_path / "sw.csv"
    assert main(["sweep", "--algo", "uapriori", "--axis", "n_transactions", "--values", "1000,2000",
                 "--scenario", "t25i15d320k", "--runs", "1", "--no-memory", "--out", str(out)]) == EXIT_OK
    assert [r.n_transactions for r in read_csv(out)] == [1000, 2000]


def test_installed_entry_point(toy_file, tmp_path):
    out = tmp_path / "e.csv"
    proc = subprocess.run([sys.executable, "-m", "umine.cli", "mine", "--algo", "ufp", "--input",
                           toy_file, "--min-esup", "0.5", "--runs", "1", "--out", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    bad = subprocess.run([sys.executable, "-m", "umine.cli", "mine", "--algo", "nope", "--input",
                          toy_file, "--out", str(out)], capture_output=True, text=True)
    assert bad.returncode == 1 and "unknown algorithm" in bad.stderr
