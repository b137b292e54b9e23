import csv
import io
import json

import numpy as np
import pytest

from luttrap.cli import DEFAULTS, ConfigError, emit_figure_data, main, resolve_config
from luttrap.observables import _oscillation

FIG1 = {
    "trap": {"N": 10},
    "model": {"kind": "IM2", "alpha0": 1.0, "r_gamma": 0.3, "r_alpha": 0.4},
    "quadrature": {"M_max": 20},
    "grid": {"range": [-12, 12], "points": 4001},
}


def read_csv(text):
    rows = [l for l in text.splitlines() if not l.startswith("#")]
    data = list(csv.reader(io.StringIO("\n".join(rows))))
    return data[0], np.array(data[1:], dtype=float)


def write_config(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_resolve_defaults_and_sets():
    cfg = resolve_config(None, ["trap.N=6", 'model={"kind":"IM1","alpha1":0.3}'], "oracle")
    assert cfg["trap"]["N"] == 6
    assert cfg["model"] == {"kind": "IM1", "alpha1": 0.3}
    assert cfg["task"] == "oracle"
    assert cfg["grid"] == DEFAULTS["grid"]


@pytest.mark.parametrize("sets", [["nosuch=1"], ["trap.nosuch=1"], ["output.format=xml"], ["trap.N"]])
def test_resolve_rejects(sets):
    with pytest.raises(ConfigError):
        resolve_config(None, sets, "density")


def test_density_csv(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["density", "--config", write_config(tmp_path, FIG1), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# config: ")
    embedded = json.loads(text.splitlines()[0][len("# config: "):])
    assert embedded["model"]["alpha0"] == 1.0 and embedded["grid"]["points"] == 4001
    cols, data = read_csv(text)
    assert cols == ["v", "density"]
    assert np.trapezoid(data[:, 1], data[:, 0]) == pytest.approx(10, abs=0.05)
    assert "sum_rule_residual" in capsys.readouterr().err


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["density", "--config", write_config(tmp_path, FIG1), "--set", "figure.enabled=true"]
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_figure_bundle(tmp_path):
    out = tmp_path / "fig.csv"
    assert main(["density", "--config", write_config(tmp_path, FIG1), "--set", "figure.enabled=true",
                 "--out", str(out)]) == 0
    cols, data = read_csv(out.read_text())
    assert cols == ["v", "n_free", "n_repulsive", "n_attractive"]
    assert np.all(np.diff(data[:, 0]) > 0)
    assert np.all(np.isfinite(data))
    for j in (1, 2, 3):
        assert np.trapezoid(data[:, j], data[:, 0]) == pytest.approx(10, abs=0.05)
    amps = [_oscillation(data[:, 0], data[:, j], 10)[0] for j in (1, 2, 3)]
    assert amps[2] < amps[0] < amps[1]


def test_emit_figure_rejects_mismatch():
    class P:
        def __init__(self, g):
            self.grid = g
            self.values = np.zeros_like(g)

    with pytest.raises(ValueError):
        emit_figure_data(np.zeros(3), P(np.arange(3.0)), P(np.arange(4.0)))


def test_momentum_json(capsys):
    assert main(["momentum", "--format", "json", "--set", "grid.points=512"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["kind"] == "momentum" and len(d["values"]) == 512
    assert d["config"]["task"] == "momentum"


def test_occupations_csv(capsys):
    assert main(["occupations", "--set", 'model={"kind":"IM1","alpha1":0.5}']) == 0
    cols, data = read_csv(capsys.readouterr().out)
    assert cols == ["M", "p", "value"]
    assert len(data) == 121


def test_duality_task(capsys):
    assert main(["duality", "--format", "json", "--set", 'model={"kind":"IM1","alpha1":1.0}']) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["passed"] and d["max_deviation"] <= 1e-6


def test_duality_needs_im1():
    assert main(["duality"]) == 2


def test_validate_free():
    assert main(["validate", "--set", 'model={"kind":"Free"}']) == 0


def test_oracle_json(capsys):
    rc = main(["oracle", "--format", "json", "--set", "trap.N=4", "--set", 'model={"kind":"IM1","alpha1":0.3}',
               "--set", "oracle.sizes=[[2,3],[3,5]]"])
    assert rc == 0
    d = json.loads(capsys.readouterr().out)
    assert d["monotone"] and len(d["runs"]) == 2


def test_couplings_task(capsys):
    rc = main(["couplings", "--format", "json", "--set", "trap.N=10000", "--set", "couplings.panel=[[0,0,1,2]]"])
    assert rc == 0
    d = json.loads(capsys.readouterr().out)
    assert d["prefactor"] < 0 and d["panel"][0]["value"] == 0.0
    assert d["enhancement"] == pytest.approx(940, rel=0.01)


def test_couplings_vdw_csv(capsys):
    assert main(["couplings", "--set", "couplings.potential=vdw", "--set", "trap.N=10000"]) == 0
    out = capsys.readouterr().out
    assert "# potential: vdw" in out
    assert out.splitlines()[-1] == "m,p,q,n,value,method"


def test_exit_codes(tmp_path):
    assert main(["density", "--config", write_config(tmp_path, {"bogus": 1})]) == 2
    assert main(["density", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["density", "--set", 'model={"kind":"IM1","v1":-1.5}']) == 3
    assert main(["density", "--set", "quadrature.tol=1e-30"]) == 4
