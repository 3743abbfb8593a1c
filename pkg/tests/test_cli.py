import csv
import json

import pytest

import qflow.boflow
from qflow.cli import main, parse_lin_range, parse_log_range, run
from qflow.errors import ConvergenceError, DomainError


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_reduce_series_rule(tmp_path, netlists):
    assert main(["reduce", str(netlists / "fig1a.net"), "--out", str(tmp_path), "--regularize", "1e-6"]) == 0
    rows = {(r[0], r[1]): float(r[2]) for r in read_rows(tmp_path / "reduce.csv")[1:]}
    assert rows[("L_eff", "0")] == pytest.approx(3.0, rel=1e-12)
    assert rows[("dof", "0")] == 1
    assert rows[("frequency_regularized", "0")] == pytest.approx(rows[("frequency", "0")], rel=1e-4)
    meta = json.loads((tmp_path / "reduce.json").read_text())
    assert meta["schema_version"] == 1
    assert meta["columns"]["reduce.csv"] == ["quantity", "index", "value"]
    assert str(tmp_path / "reduce.csv") in meta["files"]


def test_kepler_rows(tmp_path):
    assert main(["kepler", "--beta", "2", "--phi", "3.14159", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "kepler.csv")
    assert rows[0] == ["branch", "phi_c", "U_eff", "residual"]
    assert len(rows) == 4


def test_bo_sweep_josephson(tmp_path, netlists, capsys):
    code = main(["bo-sweep", str(netlists / "jj_series.net"), "--cprime", "1e0:1e-6", "--out", str(tmp_path),
                 "--jobs", "2"])
    assert code == 0
    assert "OpenCircuit" in capsys.readouterr().out
    meta = json.loads((tmp_path / "bo_sweep.json").read_text())
    assert meta["summary"]["verdict"] == "OpenCircuit"
    assert len(read_rows(tmp_path / "bo_sweep.csv")) == 1 + 7 * 33


def test_output_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        main(["classify", "--spec", '{"kind": "powerlaw", "beta": 1, "gamma": 4}', "--out", str(tmp_path / d)])
        main(["kepler", "--beta", "3", "--phi", "1", "--out", str(tmp_path / d)])
    for name in ("classify.csv", "kepler.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ha = json.loads((tmp_path / "a" / "kepler.json").read_text())["config_hash"]
    hb = json.loads((tmp_path / "b" / "kepler.json").read_text())["config_hash"]
    assert ha == hb


def test_config_hash_tracks_inputs(tmp_path):
    _, r1 = run(["kepler", "--beta", "3", "--phi", "1", "--out", str(tmp_path)])
    _, r2 = run(["kepler", "--beta", "3", "--phi", "1.5", "--out", str(tmp_path)])
    assert r1.config_hash != r2.config_hash


@pytest.mark.parametrize(
    "argv",
    [
        ["reduce", "NETS/fig1a.net"],
        ["bo-sweep", "NETS/jj_series.net"],
        ["classify", "--spec", '{"kind": "cosine", "EJ": 1}'],
        ["kepler", "--beta", "2", "--phi", "1"],
        ["snail", "--params", '{"EJ1": 1, "EJ2": 1, "k2": 0.1, "EC": 0.001}', "--mode", "2d"],
        ["gyrator", "--study", "flow"],
        ["pathological"],
        ["asymmetric", "--a", "1", "--b", "1"],
    ],
)
def test_dry_run(tmp_path, netlists, argv):
    argv = [a.replace("NETS", str(netlists)) for a in argv]
    code, report = run(argv + ["--dry-run", "--out", str(tmp_path / "out")])
    assert code == 0 and report.status == "dry-run"
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["kepler", "--beta", "2"],
        ["kepler", "--beta", "2", "--phi", "1", "--bogus"],
        ["bo-sweep", "NETS/jj_series.net", "--cprime", "1e0"],
        ["bo-sweep", "NETS/jj_series.net", "--phi", "1:0:5"],
        ["bo-sweep", "NETS/fig1a.net"],
        ["classify", "--spec", "{not json"],
        ["reduce", "NETS/missing.net"],
        ["snail", "--params", '{"EJ1": 1}'],
    ],
)
def test_domain_errors_exit_2(tmp_path, netlists, argv):
    argv = [a.replace("NETS", str(netlists)) for a in argv]
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_convergence_failure_exits_3(tmp_path, monkeypatch):
    def boom(spec):
        raise ConvergenceError("did not converge")

    monkeypatch.setattr(qflow.boflow, "classify", boom)
    assert main(["classify", "--spec", '{"kind": "cosine", "EJ": 1}', "--out", str(tmp_path)]) == 3


def test_ranges():
    assert list(parse_log_range("1e0:1e-3")) == pytest.approx([1.0, 0.1, 0.01, 0.001])
    assert len(parse_lin_range("-1:1:5")) == 5
    with pytest.raises(DomainError):
        parse_log_range("0:1")
    with pytest.raises(DomainError):
        parse_lin_range("a:b:c")


def test_jobs_default_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("QFLOW_JOBS", "3")
    from qflow.cli import build_parser

    args = build_parser().parse_args(["kepler", "--beta", "1", "--phi", "0"])
    assert args.jobs == 3
