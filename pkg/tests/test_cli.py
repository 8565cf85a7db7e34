import csv
import json
import warnings
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from nmtcl import PositivityBreach, amplitude_zeros, make_params
from nmtcl import cli


def run_cli(args, tmp_path, capsys=None):
    code = cli.main(list(args) + ["--out-dir", str(tmp_path)])
    return code


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_figure1_default(tmp_path):
    assert run_cli(["figure1", "--points", "401"], tmp_path) == 0
    header, data = read_csv(tmp_path / "figure1.csv")
    assert header == ["tau", "rho_ee_exact_e", "rho_ee_tcl_e", "rho_ee_exact_sup", "rho_ee_tcl_sup"]
    assert data.shape == (401, 5)
    assert np.max(np.abs(data[:, 1] - data[:, 2])) <= 1e-4
    assert np.allclose(data[:, 3], 0.5 * data[:, 1], atol=1e-15)
    root = ET.parse(tmp_path / "figure1.svg").getroot()
    assert root.get("viewBox") == "0 0 720 480"
    assert "href" not in (tmp_path / "figure1.svg").read_text()


def test_figure1_zeros_in_tau(tmp_path):
    assert run_cli(["figure1", "--points", "2001"], tmp_path) == 0
    _, data = read_csv(tmp_path / "figure1.csv")
    tau, ee = data[:, 0], data[:, 1]
    mins = tau[1:-1][(ee[1:-1] < ee[:-2]) & (ee[1:-1] <= ee[2:]) & (ee[1:-1] < 1e-4)]
    assert mins.size >= 6
    assert np.allclose(mins[:3], amplitude_zeros(make_params(10, 1), 4.0), atol=0.005)


def test_figure2_columns_and_shapes(tmp_path):
    assert run_cli(["figure2", "--points", "501", "--no-svg"], tmp_path) == 0
    header, data = read_csv(tmp_path / "figure2.csv")
    assert header == ["tau", "exact", "tcl_exact", "ms1", "ms2", "ord2", "ord4"]
    assert np.allclose(data[0, 1:], 1.0)
    assert np.all(np.diff(data[:, 5]) <= 0) and np.all(np.diff(data[:, 6]) <= 0)
    assert not (tmp_path / "figure2.svg").exists()


def test_figure2_acceptance_failure(tmp_path, capsys):
    assert run_cli(["figure2", "--gamma0", "1.5", "--points", "201"], tmp_path) == cli.EXIT_ACCEPTANCE
    assert "ms2 sup error" in capsys.readouterr().err
    assert (tmp_path / "figure2.csv").exists()


def test_singular_times_table(tmp_path):
    assert run_cli(["singular-times"], tmp_path) == 0
    header, data = read_csv(tmp_path / "singular_times.csv")
    assert header == ["n", "tau_exact", "tau_ms1", "tau_ms2"]
    assert np.allclose(data[0, 1:], [0.82420, 0.70248, 0.82137], atol=1e-4)
    assert np.array_equal(data[:, 0], np.arange(6))


def test_error_order_and_residuals(tmp_path, capsys):
    assert run_cli(["error-order"], tmp_path) == 0
    out = capsys.readouterr().out
    assert "ms1 slope" in out and "ms2 slope" in out
    ET.parse(tmp_path / "error_order.svg")
    assert run_cli(["residuals"], tmp_path) == 0
    header, data = read_csv(tmp_path / "residuals.csv")
    assert header[0] == "eps" and len(header) == 5


def test_seventeen_digits(tmp_path):
    run_cli(["singular-times", "--count", "1"], tmp_path)
    line = (tmp_path / "singular_times.csv").read_text().splitlines()[1]
    assert line.split(",")[1] == f"{float(line.split(',')[1]):.17g}"
    assert len(line.split(",")[1].replace(".", "").lstrip("0")) == 17


def test_byte_identical_under_seed(tmp_path):
    args = ["figure1", "--solver", "nmqj", "--ntraj", "2000", "--seed", "5", "--points", "101"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(args + ["--out-dir", str(a)]) == cli.main(args + ["--out-dir", str(b)])
    assert (a / "figure1.csv").read_bytes() == (b / "figure1.csv").read_bytes()
    header, _ = read_csv(a / "figure1.csv")
    assert header[-2:] == ["rho_ee_tcl_e_se", "rho_ee_tcl_sup_se"]


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"params": {"gamma0": 20, "lambda": 1}, "grid": {"t_end": 2.0, "n_points": 21}}))
    ns = cli.build_parser().parse_args(["figure1", "--config", str(cfg), "--points", "11"])
    c = cli.config_from_args(ns)
    assert (c.gamma0, c.t_end, c.n_points) == (20.0, 2.0, 11)
    ns = cli.build_parser().parse_args(["figure1"])
    assert cli.config_from_args(ns).gamma0 == 10.0


def test_custom_run(tmp_path):
    assert run_cli(["custom", "--kind", "ms2", "--initial", "0.6,0.8j", "--points", "101"], tmp_path) == 0
    header, data = read_csv(tmp_path / "custom.csv")
    assert header == ["tau", "rho_ee", "rho_eg_re", "rho_eg_im"]
    assert data[0, 1] == pytest.approx(0.36)
    assert data[0, 3] == pytest.approx(-0.48)


@pytest.mark.parametrize(
    "args",
    [
        ["figure1", "--t-end", "0"],
        ["figure1", "--gamma0", "-1"],
        ["custom", "--initial", "1,1"],
        ["custom", "--initial", "x"],
        ["figure1", "--points", "1"],
        ["error-order", "--eps", "0.1", "0.2", "0.05"],
        ["figure1", "--solver", "nmqj", "--ntraj", "10"],
    ],
)
def test_validation_errors(tmp_path, args):
    assert run_cli(args, tmp_path) == cli.EXIT_INVALID
    assert not list(tmp_path.iterdir())


def test_bad_config_files(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gamma_zero": 3}))
    assert cli.main(["figure1", "--config", str(bad)]) == cli.EXIT_INVALID
    bad.write_text(json.dumps({"experiment": "figure2"}))
    assert cli.main(["figure1", "--config", str(bad)]) == cli.EXIT_INVALID
    assert cli.main(["figure1", "--config", str(tmp_path / "missing.json")]) == cli.EXIT_INVALID


def test_numerical_failure(tmp_path, monkeypatch):
    def breach(*a, **k):
        warnings.warn("left the physical set", PositivityBreach)

    monkeypatch.setattr(cli, "solve_tcl", breach)
    assert run_cli(["custom"], tmp_path) == cli.EXIT_NUMERICAL

    def blowup(*a, **k):
        raise FloatingPointError("overflow")

    monkeypatch.setattr(cli, "solve_tcl", blowup)
    assert run_cli(["figure2"], tmp_path) == cli.EXIT_NUMERICAL


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "nmtcl", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "figure1" in res.stdout
