"""Command-line interface tests: exit codes, seed resolution, file outputs,
and the documented error messages."""

import csv
import subprocess
import sys

import numpy as np
import pytest

from dpot.cli import main
from dpot.persist import load_checkpoint, read_dataset

TRAIN_FLAGS = [
    "--H", "16", "--T-ctx", "5", "--d-z", "16", "--heads", "4",
    "--groups", "4", "--layers", "1",
]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rc = main([
        "generate", "--pde", "heat", "--n-traj", "4", "--H", "16",
        "--out", str(d / "heat.bin"), "--seed", "5",
    ])
    assert rc == 0
    rc = main([
        "pretrain", "--data", str(d / "heat.bin"), "--out", str(d / "ck.bin"),
        *TRAIN_FLAGS, "--epochs", "1", "--steps-per-epoch", "20",
        "--batch-size", "2", "--peak-lr", "3e-3", "--seed", "2",
        "--metrics", str(d / "metrics.csv"),
    ])
    assert rc == 0
    return d


class TestGenerate:
    def test_writes_readable_dataset(self, workdir):
        ds = read_dataset(str(workdir / "heat.bin"))
        assert ds.values.shape == (4, 21, 16, 16, 1)
        assert ds.metadata["pde"] == "heat"
        assert ds.metadata["seed"] == 5

    def test_same_seed_same_bytes(self, tmp_path):
        for name in ("a.bin", "b.bin"):
            rc = main([
                "generate", "--pde", "heat", "--n-traj", "2", "--H", "16",
                "--out", str(tmp_path / name), "--seed", "9",
            ])
            assert rc == 0
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_non_power_of_two_resolution_fails(self, tmp_path, capsys):
        rc = main([
            "generate", "--pde", "heat", "--n-traj", "1", "--H", "33",
            "--out", str(tmp_path / "x.bin"),
        ])
        assert rc == 1
        assert "H must be a power of two" in capsys.readouterr().err

    def test_coefficient_override(self, tmp_path):
        rc = main([
            "generate", "--pde", "heat", "--n-traj", "1", "--H", "16",
            "--coeff", "nu=0.05", "--out", str(tmp_path / "nu.bin"),
        ])
        assert rc == 0
        ds = read_dataset(str(tmp_path / "nu.bin"))
        assert ds.metadata["coefficients"]["nu"] == 0.05

    def test_malformed_coefficient_fails(self, tmp_path, capsys):
        rc = main([
            "generate", "--pde", "heat", "--n-traj", "1", "--H", "16",
            "--coeff", "nu", "--out", str(tmp_path / "x.bin"),
        ])
        assert rc == 1
        assert "name=value" in capsys.readouterr().err

    def test_env_seed_overrides_flag(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("DPOT_SEED", "77")
        for name, seed in (("a.bin", "1"), ("b.bin", "2")):
            rc = main([
                "generate", "--pde", "heat", "--n-traj", "1", "--H", "16",
                "--out", str(tmp_path / name), "--seed", seed,
            ])
            assert rc == 0
        out = capsys.readouterr().out
        assert "seed=77" in out
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()

    def test_bad_env_seed_fails(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("DPOT_SEED", "not-a-number")
        rc = main([
            "generate", "--pde", "heat", "--n-traj", "1", "--H", "16",
            "--out", str(tmp_path / "x.bin"),
        ])
        assert rc == 1
        assert "DPOT_SEED" in capsys.readouterr().err


class TestUsageErrors:
    def test_unknown_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["nosuchcommand"])
        assert exc.value.code == 2

    def test_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--pde", "heat"])
        assert exc.value.code == 2

    def test_runtime_error_exits_1(self, tmp_path, capsys):
        rc = main([
            "evaluate", "--checkpoint", str(tmp_path / "missing.bin"),
            "--data", str(tmp_path / "missing.bin"),
        ])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestPretrain:
    def test_checkpoint_is_loadable(self, workdir):
        state = load_checkpoint(str(workdir / "ck.bin"))
        assert state["config"]["H"] == 16
        assert state["scalars"]["step"] == 20
        assert any(k.startswith("layer0.") for k in state["arrays"])
        assert any(k.startswith("opt.m.") for k in state["arrays"])

    def test_metrics_files_written(self, workdir):
        with open(workdir / "metrics.csv") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 20
        assert {"epoch", "step", "lr", "loss", "grad_norm", "wall_time"} == set(rows[0])
        with open(workdir / "metrics_long.csv") as f:
            long_rows = list(csv.DictReader(f))
        assert len(long_rows) >= 60

    def test_resolved_config_logged(self, workdir, tmp_path, capsys):
        rc = main([
            "pretrain", "--data", str(workdir / "heat.bin"),
            "--out", str(tmp_path / "ck.bin"), *TRAIN_FLAGS,
            "--epochs", "1", "--steps-per-epoch", "2", "--batch-size", "1",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "resolved config" in out
        assert "peak_lr=0.001" in out

    def test_weights_count_mismatch_fails(self, workdir, tmp_path, capsys):
        rc = main([
            "pretrain", "--data", str(workdir / "heat.bin"),
            "--out", str(tmp_path / "ck.bin"), *TRAIN_FLAGS,
            "--weights", "1,2",
        ])
        assert rc == 1
        assert "weights" in capsys.readouterr().err


class TestFinetune:
    def test_continues_from_checkpoint(self, workdir, tmp_path):
        rc = main([
            "finetune", "--checkpoint", str(workdir / "ck.bin"),
            "--data", str(workdir / "heat.bin"), "--out", str(tmp_path / "ft.bin"),
            "--epochs", "1", "--steps-per-epoch", "4", "--batch-size", "2",
            "--seed", "4",
        ])
        assert rc == 0
        state = load_checkpoint(str(tmp_path / "ft.bin"))
        assert state["config"] == load_checkpoint(str(workdir / "ck.bin"))["config"]


class TestEvaluate:
    def test_onestep_writes_csv(self, workdir, tmp_path, capsys):
        out = tmp_path / "one.csv"
        rc = main([
            "evaluate", "--checkpoint", str(workdir / "ck.bin"),
            "--data", str(workdir / "heat.bin"), "--mode", "onestep",
            "--eval-windows", "6", "--out", str(out),
        ])
        assert rc == 0
        assert "l2re_onestep" in capsys.readouterr().out
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 1
        assert float(rows[0]["value"]) > 0

    def test_rollout_csv_has_one_row_per_step(self, workdir, tmp_path):
        out = tmp_path / "roll.csv"
        rc = main([
            "evaluate", "--checkpoint", str(workdir / "ck.bin"),
            "--data", str(workdir / "heat.bin"), "--mode", "rollout",
            "--steps", "20", "--max-traj", "2", "--out", str(out),
        ])
        assert rc == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 20
        assert [int(r["step"]) for r in rows] == list(range(1, 21))
        assert all(np.isfinite(float(r["l2re"])) for r in rows)


class TestRollout:
    def test_writes_prediction_file(self, workdir, tmp_path):
        out = tmp_path / "pred.bin"
        rc = main([
            "rollout", "--checkpoint", str(workdir / "ck.bin"),
            "--data", str(workdir / "heat.bin"), "--traj", "1",
            "--steps", "6", "--out", str(out),
        ])
        assert rc == 0
        ds = read_dataset(str(out))
        assert ds.values.shape == (1, 6, 16, 16, 2)
        assert ds.metadata["kind"] == "rollout_prediction"
        assert ds.metadata["trajectory"] == 1

    def test_trajectory_out_of_range_fails(self, workdir, tmp_path, capsys):
        rc = main([
            "rollout", "--checkpoint", str(workdir / "ck.bin"),
            "--data", str(workdir / "heat.bin"), "--traj", "99",
        ])
        assert rc == 1
        assert "outside" in capsys.readouterr().err


class TestAblate:
    def test_noise_sweep_writes_csv(self, workdir, tmp_path):
        out = tmp_path / "abl.csv"
        rc = main([
            "ablate", "--kind", "noise", "--grid", "0,0.005",
            "--data", str(workdir / "heat.bin"), "--out", str(out),
            *TRAIN_FLAGS, "--epochs", "1", "--steps-per-epoch", "3",
            "--batch-size", "1", "--eval-windows", "4", "--rollout-steps", "2",
        ])
        assert rc == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert [float(r["value"]) for r in rows] == [0.0, 0.005]

    def test_resolution_sweep_uses_checkpoint(self, workdir, tmp_path):
        out = tmp_path / "res.csv"
        rc = main([
            "ablate", "--kind", "resolution", "--grid", "16,24",
            "--data", str(workdir / "heat.bin"),
            "--checkpoint", str(workdir / "ck.bin"), "--out", str(out),
            *TRAIN_FLAGS, "--eval-windows", "4", "--rollout-steps", "0",
        ])
        assert rc == 0
        with open(out) as f:
            rows = list(csv.DictReader(f))
        assert [int(r["value"]) for r in rows] == [16, 24]
        assert rows[0]["final_loss"] == ""


class TestVerify:
    def test_quick_passes(self, capsys):
        rc = main(["verify", "--quick"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "PASS fft-round-trip" in out
        assert "SKIP taylor-green-vortex" in out
        assert "FAIL" not in out


class TestEntryPoint:
    def test_console_script_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "dpot.cli", "verify", "--quick"],
            capture_output=True,
            text=True,
            timeout=300,
        )
        assert proc.returncode == 0
        assert "checks passed" in proc.stdout
