import json
import os

import pytest

from fcs_syk import acceptance, cli
from fcs_syk.analysis import read_csv

SMALL = {"zeta": [0.5, 2.5], "V": 0.0, "L": 8, "T": 12, "n_t": 64,
         "phis": [0.3927, 0.7854, 1.1781, 1.5708], "A_sizes": [2, 4, 6], "A_size": 4}


def _config(tmp_path, **over):
    cfg = dict(SMALL, out=str(tmp_path / "out"), **over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_saddle_table(tmp_path, capsys):
    assert cli.main(["saddle", "--config", _config(tmp_path)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "zeta V P S phase order"
    assert out[1].split()[4] == "Critical" and out[2].split()[4] == "AreaLaw"


def test_saddle_defaults_without_config(capsys):
    assert cli.main(["saddle"]) == 0
    assert "Critical" in capsys.readouterr().out


def test_bad_config_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"zetta": 0.5}))
    assert cli.main(["saddle", "--config", str(path)]) == 2
    assert "error" in capsys.readouterr().err
    assert cli.main(["saddle", "--config", str(tmp_path / "missing.json")]) == 2


def test_solve_writes_csv(tmp_path):
    assert cli.main(["solve", "--config", _config(tmp_path, zeta=0.5)]) == 0
    rows, echo = read_csv(tmp_path / "out" / "solve_zeta0.5_V0.csv")
    assert len(rows) == 1 and rows[0]["A_size"] == 4 and rows[0]["converged"]
    assert rows[0]["reF_perN"] > 0
    assert echo["L"] == 8


def test_solve_convergence_exit_3(tmp_path):
    cfg = _config(tmp_path, zeta=0.5, solver={"max_iters": 1})
    assert cli.main(["solve", "--config", cfg, "--no-cache"]) == 3


def test_sweep_baseline_failure_exit_3(tmp_path):
    cfg = _config(tmp_path, zeta=0.5, A_sizes=[2], solver={"max_iters": 2})
    assert cli.main(["sweep", "--config", cfg, "--no-cache"]) == 3
    assert not (tmp_path / "out" / "sweep_zeta0.5_V0.csv").exists()


@pytest.fixture(scope="module")
def swept(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweep")
    cfg = _config(tmp)
    assert cli.main(["sweep", "--config", cfg, "--threads", "2"]) == 0
    return tmp, cfg


def test_sweep_outputs_and_cache(swept):
    tmp, cfg = swept
    out = tmp / "out"
    rows, _ = read_csv(out / "sweep_zeta0.5_V0.csv")
    assert len(rows) == 4 * 3
    assert all(r["converged"] for r in rows)
    assert any(f.endswith(".fcsg") for f in os.listdir(out / "cache"))


def test_sweep_rerun_warm_starts_from_cache(swept):
    tmp, cfg = swept
    path = tmp / "out" / "sweep_zeta0.5_V0.csv"
    before, _ = read_csv(path)
    assert cli.main(["sweep", "--config", cfg]) == 0
    after, _ = read_csv(path)
    assert sum(r["iters"] for r in after) < sum(r["iters"] for r in before)
    for a, b in zip(before, after):
        assert (a["phi"], a["A_size"]) == (b["phi"], b["A_size"])
        assert abs(a["reF_perN"] - b["reF_perN"]) < 1e-6


def test_fit_labels(swept, capsys):
    tmp, _ = swept
    files = [str(tmp / "out" / f"sweep_zeta{z}_V0.csv") for z in ("0.5", "2.5")]
    assert cli.main(["fit", *files]) == 0
    out = capsys.readouterr().out
    assert "zeta=0.5 V=0: LogLaw" in out
    assert "zeta=2.5 V=0: AreaLaw" in out


def test_eft_report(tmp_path, capsys):
    assert cli.main(["eft", "--config", _config(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "kernel checks: ok" in out and "decay rate" in out and "kappa_t" in out


def test_check_exit_codes(monkeypatch, capsys):
    fake = [acceptance.Criterion(1, "a", True, {}), acceptance.Criterion(2, "b", False, {})]
    monkeypatch.setattr(acceptance, "run_all", lambda echo=print: fake)
    assert cli.main(["check"]) == 4
    assert "1/2 criteria passed" in capsys.readouterr().out
    monkeypatch.setattr(acceptance, "run_all", lambda echo=print: fake[:1])
    assert cli.main(["check"]) == 0
