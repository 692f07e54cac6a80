import csv
import json
import math
import shutil
import subprocess
from pathlib import Path

import numpy as np
import pytest

from quatsync import io
from quatsync.cli import main
from quatsync.lion_dance import lambda_critical

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data, indent=2))
    return str(path)


class TestIo:
    def test_fmt(self):
        assert io.fmt(-0.0) == "0"
        assert float(io.fmt(0.1)) == 0.1
        assert float(io.fmt(math.pi)) == math.pi

    def test_jsonable(self):
        obj = {"a": np.float64(1.5), "b": np.arange(2), "c": float("nan"), 1: np.bool_(True)}
        assert io.to_jsonable(obj) == {"a": 1.5, "b": [0, 1], "c": "nan", "1": True}

    def test_atomic_writes(self, tmp_path):
        io.write_csv(tmp_path / "sub" / "t.csv", ["a", "b"], [[1, 2.5]])
        assert (tmp_path / "sub" / "t.csv").read_text() == "a,b\n1,2.5\n"
        io.write_json(tmp_path / "t.json", {"b": 1, "a": 2})
        assert (tmp_path / "t.json").read_text() == '{\n  "a": 2,\n  "b": 1\n}\n'
        assert not list(tmp_path.glob(".*.tmp"))

    def test_headers(self):
        assert io.trajectory_header(2) == ["t", "w1", "x1", "y1", "z1", "w2", "x2", "y2", "z2"]
        assert io.provenance({"k": 1})["tool"] == "quatsync"


class TestSimulate:
    def test_strong_run(self, tmp_path):
        out = tmp_path / "strong"
        code = main(["simulate", "--config", str(CONFIGS / "strong_n5.json"), "--out", str(out)])
        assert code == 0
        header, data = read_csv(out / "trajectory.csv")
        assert header[:5] == ["t", "w1", "x1", "y1", "z1"] and len(header) == 21
        assert data[0, 0] == 0.0 and data[-1, 0] == 100.0
        np.testing.assert_allclose(data[0, 1:5], [0.14, 0.86, 0.09, 0.69])
        report = json.loads((out / "report.json").read_text())
        assert report["status"] == "ok"
        assert report["sync"]["phase_locked"] and report["sync"]["freq_synced"]
        assert report["lambda_c"] == pytest.approx(1.0)
        assert report["provenance"]["config"]["lambda"] == 1.1

    def test_flag_overrides(self, tmp_path):
        code = main(["simulate", "--config", str(CONFIGS / "strong_n5.json"), "--lambda", "0.2",
                     "--t-end", "5", "--out", str(tmp_path)])
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["provenance"]["config"]["lambda"] == 0.2
        assert report["provenance"]["integrator"]["t_end"] == 5.0

    def test_deterministic_bytes(self, tmp_path):
        args = ["simulate", "--config", str(CONFIGS / "strong_n5.json"), "--t-end", "20",
                "--out", str(tmp_path)]
        main(args)
        first = {n: (tmp_path / n).read_bytes() for n in ("trajectory.csv", "report.json")}
        main(args)
        for name, data in first.items():
            assert (tmp_path / name).read_bytes() == data

    def test_missing_lambda(self, tmp_path, capsys):
        data = json.loads((CONFIGS / "strong_n5.json").read_text())
        del data["lambda"]
        code = main(["simulate", "--config", write_config(tmp_path, data)])
        assert code == 1
        err = capsys.readouterr().err
        assert "field 'lambda'" in err and "missing" in err

    def test_error_cites_line(self, tmp_path, capsys):
        text = '{\n  "mode": "full",\n  "omega": [1, 0],\n  "lambda": "strong"\n}\n'
        path = tmp_path / "bad.json"
        path.write_text(text)
        assert main(["simulate", "--config", str(path)]) == 1
        assert f"{path}:4: field 'lambda'" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "lambda": 1,\n}\n')
        assert main(["simulate", "--config", str(path)]) == 1
        assert "invalid JSON" in capsys.readouterr().err

    def test_wrong_length(self, tmp_path, capsys):
        data = json.loads((CONFIGS / "strong_n5.json").read_text())
        data["initial"]["x"] = [0.0, 1.0]
        assert main(["simulate", "--config", write_config(tmp_path, data)]) == 1
        assert "field 'x'" in capsys.readouterr().err

    def test_bad_mode(self, tmp_path):
        data = {"mode": "lion", "omega": 1.0, "lambda": 0.5}
        assert main(["orbit", "--config", write_config(tmp_path, data)]) == 1

    def test_blow_up_writes_partial(self, tmp_path, capsys):
        data = {"mode": "reduced2", "omega": 2.0, "lambda": 1.0,
                "initial": {"w": math.pi, "v": 29.0}, "out": str(tmp_path / "b")}
        assert main(["simulate", "--config", write_config(tmp_path, data)]) == 2
        header, rows = read_csv(tmp_path / "b" / "trajectory.csv")
        assert header == ["t", "w", "v"] and len(rows) >= 1
        report = json.loads((tmp_path / "b" / "report.json").read_text())
        assert report["status"] == "blow_up"
        assert "partial" in capsys.readouterr().err

    def test_max_steps_exit(self, tmp_path):
        data = json.loads((CONFIGS / "strong_n5.json").read_text())
        data["integrator"]["max_steps"] = 3
        data["out"] = str(tmp_path / "m")
        assert main(["simulate", "--config", write_config(tmp_path, data)]) == 3

    def test_lion_mode(self, tmp_path):
        code = main(["simulate", "--config", str(CONFIGS / "lion_super_weak.json"),
                     "--out", str(tmp_path)])
        assert code == 0
        _, rows = read_csv(tmp_path / "trajectory.csv")
        assert rows[-1, 1] == pytest.approx(3.80960032, abs=1e-6)
        assert rows[-1, 2] == pytest.approx(1.11397812, abs=1e-6)


class TestOrbit:
    def test_peach_ring(self, tmp_path):
        assert main(["orbit", "--config", str(CONFIGS / "peach_ring.json"),
                     "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "orbit.json").read_text())
        assert report["orbit"]["v0"] == pytest.approx(1.45)
        assert report["orbit"]["closure_error"] < 1e-6 and report["lift_deviation"] < 1e-6
        assert report["strictly_nested"]
        rings = sorted(tmp_path.glob("orbit_ring*.csv"))
        assert len(rings) == 3
        header, rows = read_csv(tmp_path / "orbit.csv")
        assert header[:3] == ["t", "w", "v"]

    def test_not_weak(self, tmp_path, capsys):
        code = main(["orbit", "--omega", "1", "--lambda", "2", "--out", str(tmp_path)])
        assert code == 1
        assert "field 'lambda'" in capsys.readouterr().err


class TestLionCommands:
    def test_equilibria_n3(self, tmp_path):
        assert main(["equilibria", "--lambda", "0.963047", "--field", "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "equilibria.json").read_text())
        assert report["sink_count"] == 2 and report["regime"]["tag"] == "weak"
        header, _ = read_csv(tmp_path / "field.csv")
        assert header == ["w", "v", "wdot", "vdot"]

    def test_equilibria_critical_n5(self, tmp_path):
        assert main(["equilibria", "--lambda", "critical", "--n-osc", "5",
                     "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "equilibria.json").read_text())
        assert report["lambda"] == pytest.approx(lambda_critical(1.0, 5))
        assert report["sink_count"] == 2

    def test_regime(self, capsys):
        assert main(["regime", "--lambda", "critical"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["tag"] == "critically_weak"
        assert out["lambda"] == pytest.approx(0.85218915, abs=1e-8)

    def test_sweep(self, tmp_path, monkeypatch):
        args = ["sweep", "--config", str(CONFIGS / "lion_sweep_n3.json"), "--out", str(tmp_path)]
        assert main(args) == 0
        header, rows = read_csv(tmp_path / "sweep.csv")
        assert header == ["lambda", "n_axis_eq", "n_interior_eq", "n_sinks"]
        assert len(rows) == 22  # 21 grid values plus Lambda_c
        lc = lambda_critical()
        axis = rows[:, 1]
        assert np.all(axis[rows[:, 0] < lc] == 0)
        assert axis[rows[:, 0] == lc][0] == 1
        assert np.all(axis[rows[:, 0] > lc] == 2)
        report = json.loads((tmp_path / "sweep.json").read_text())
        assert report["axis_birth_brackets"] == [[0.85, 0.855]]
        serial = {n: (tmp_path / n).read_bytes() for n in ("sweep.csv", "sweep.json")}
        monkeypatch.setenv("QUATSYNC_THREADS", "3")
        assert main(args) == 0
        for name, data in serial.items():
            assert (tmp_path / name).read_bytes() == data

    def test_bad_threads(self, tmp_path, monkeypatch):
        monkeypatch.setenv("QUATSYNC_THREADS", "many")
        assert main(["sweep", "--config", str(CONFIGS / "lion_sweep_n3.json"),
                     "--out", str(tmp_path)]) == 1


@pytest.mark.skipif(shutil.which("quatsync") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["quatsync", "regime", "--lambda", "0.5"], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["tag"] == "super_weak"
    proc = subprocess.run(["quatsync", "simulate", "--config", str(tmp_path / "none.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 1
