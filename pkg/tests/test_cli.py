import csv
import json

import pytest

from miniqmc.cli import main


def _run(tmp_path, *argv):
    out = tmp_path / "report.json"
    rc = main(list(argv) + ["--out", str(out), "-q"])
    return rc, (json.loads(out.read_text()) if out.exists() else None)


def test_miniqmc_verify(tmp_path):
    csv_path = tmp_path / "e.csv"
    rc, rep = _run(tmp_path, "miniqmc", "--preset", "tiny", "--steps", "10", "--verify",
                   "--csv", str(csv_path))
    assert rc == 0
    assert rep["checksums"]["ok"] is True
    for key in ("e_mean", "sigma2", "tau_corr", "kappa", "throughput"):
        assert rep["stats"][key] is not None
    assert {"meta", "timers", "stats", "memory", "checksums"} <= set(rep)
    rows = list(csv.reader(csv_path.open()))
    assert rows[0][0] == "step" and len(rows) == 11


def test_miniqmc_memory_report(tmp_path):
    rc, rep = _run(tmp_path, "miniqmc", "--preset", "nio-64", "--report-memory",
                   "--variant", "ref", "--precision", "double")
    assert rc == 0
    assert rep["memory"]["per_walker_bytes"]["J2"] == 23_592_960
    rc, rep = _run(tmp_path, "miniqmc", "--preset", "nio-64", "--report-memory",
                   "--variant", "opt", "--precision", "double")
    assert rep["memory"]["per_walker_bytes"]["J2"] == 30_720
    assert "kappa" in rep["stats"] and "throughput" in rep["stats"]


def test_disttable_variants_agree(tmp_path):
    _, ref = _run(tmp_path, "disttable", "--n", "64", "--variant", "ref", "--precision", "double")
    _, opt = _run(tmp_path, "disttable", "--n", "64", "--variant", "opt", "--precision", "double")
    assert ref["checksums"]["kernel"] == opt["checksums"]["kernel"]
    rc, rep = _run(tmp_path, "disttable", "--n", "64", "--verify", "--precision", "double")
    assert rc == 0 and rep["checksums"]["ok"] is True


@pytest.mark.parametrize("cmd", [["jastrow", "--n", "32", "--verify"],
                                 ["bspline", "--preset", "tiny", "--verify", "--steps", "1"]])
def test_kernel_verify(tmp_path, cmd):
    rc, rep = _run(tmp_path, *cmd)
    assert rc == 0
    assert rep["kernel"]["throughput"] > 0


@pytest.mark.parametrize("argv", [
    ["miniqmc", "--bogus"],
    ["frobnicate"],
    ["miniqmc", "--n", "10"],
    ["disttable", "--threads", "0"],
    ["disttable", "--n", "1"],
    ["miniqmc", "--steps", "-3"],
    ["miniqmc", "--tau", "0"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_runtime_failure_exit_code(monkeypatch):
    from miniqmc.drivers import dmc
    from miniqmc.errors import QMCError

    def boom(*args, **kwargs):
        raise QMCError("population died out")

    monkeypatch.setattr(dmc, "run", boom)
    assert main(["miniqmc", "--preset", "tiny", "--steps", "2", "-q"]) == 4


def test_verification_failure_exit_code(monkeypatch):
    from miniqmc import oracle

    real = oracle.brute_logpsi
    monkeypatch.setattr(oracle, "brute_logpsi",
                        lambda *a, **k: (real(*a, **k)[0] + 1e-3, real(*a, **k)[1]))
    assert main(["miniqmc", "--preset", "tiny", "--steps", "2", "--verify", "-q"]) == 3
