"""Command-line interface tests: exit codes, diagnostics, file outputs."""

import json
import time

import numpy as np
import pytest

from gomp.array_model import build_dictionary
from gomp.bench import write_measurements_csv
from gomp.cli import cli
from gomp.projection_design import random_cm_projection


def _write_cfg(tmp_path, **kw):
    data = dict(N=4, M=8, P=16, K=1, L=4, trials=2, t_max=10,
                i_max=3, j_max=2, snr_grid_db=[10.0])
    data.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_design_subcommand_writes_trace(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    out = tmp_path / "trace.csv"
    assert cli(["design", "--config", cfg, "--seed", "1", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "iter,eta,mu_max"
    assert len(lines) == 12  # header + t_max+1 rows


def test_coherence_subcommand(tmp_path):
    cfg = _write_cfg(tmp_path, methods=["dft", "random"])
    out = tmp_path / "coh.csv"
    assert cli(["coherence", "--config", cfg, "--seed", "2", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "method,P,iter,mu_max"


def test_sweep_subcommand_deterministic(tmp_path):
    cfg = _write_cfg(tmp_path, projection_kind="random")
    out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
    assert cli(["sweep", "--config", cfg, "--seed", "3", "--out", str(out1)]) == 0
    assert cli(["sweep", "--config", cfg, "--seed", "3", "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_sweep_single_trial_completes_quickly(tmp_path):
    """Fig-3 dimensions with one trial and one SNR point, under 10 s."""
    cfg = _write_cfg(tmp_path, N=16, M=64, P=64, K=5, L=16, trials=1,
                     snr_grid_db=[10.0], t_max=50, i_max=10, j_max=5)
    out = tmp_path / "one.csv"
    start = time.monotonic()
    assert cli(["sweep", "--config", cfg, "--seed", "4", "--out", str(out)]) == 0
    elapsed = time.monotonic() - start
    print(f"\n  single-trial sweep took {elapsed:.2f} s")
    assert elapsed < 10.0


def test_invalid_k_exceeding_n_names_constraint(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, K=7, N=4)
    rc = cli(["sweep", "--config", cfg, "--seed", "1", "--out", str(tmp_path / "x.csv")])
    assert rc == 1
    assert "K <= N" in capsys.readouterr().err


def test_unknown_flag_fails_usage(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    rc = cli(["sweep", "--config", cfg, "--seed", "1", "--out",
              str(tmp_path / "x.csv"), "--nope"])
    assert rc == 1
    assert "--nope" in capsys.readouterr().err


def test_unknown_config_key_named(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    rc = cli(["sweep", "--config", cfg, "--seed", "1", "--out",
              str(tmp_path / "x.csv"), "--set", "trails=5"])
    assert rc == 1
    assert "trails" in capsys.readouterr().err


def test_missing_required_out_fails(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    assert cli(["sweep", "--config", cfg, "--seed", "1"]) == 1


def test_set_overrides_config_values(tmp_path):
    cfg = _write_cfg(tmp_path, trials=2)
    out = tmp_path / "o.csv"
    rc = cli(["sweep", "--config", cfg, "--seed", "1", "--out", str(out),
              "--set", "trials=3", "--set", "projection_kind=dft"])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[1].startswith("dft,")
    assert lines[1].split(",")[4] == "3"  # trials_ok + failed = 3, all ok here


def test_estimate_subcommand_reads_y(tmp_path, capsys):
    n, m, p, l = 4, 8, 16, 6
    cfg = _write_cfg(tmp_path, N=n, M=m, P=p, L=l, K=1, projection_kind="random",
                     seed=5)
    d = build_dictionary(p, 2 * np.pi, m)
    phi = random_cm_projection(n, m, seed=5)
    rng = np.random.default_rng(6)
    x = (rng.standard_normal(l) + 1j * rng.standard_normal(l)) / np.sqrt(2)
    y = np.outer(phi.phi @ d.A_ring[:, 7], x)
    y_path = tmp_path / "y.csv"
    write_measurements_csv(y, y_path)
    out = tmp_path / "est.csv"
    rc = cli(["estimate", "--config", cfg, "--seed", "5", "--y", str(y_path),
              "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "k,nu_hat"
    nu_hat = float(lines[1].split(",")[1])
    assert nu_hat == pytest.approx(d.grid[7], abs=1e-6)


def test_estimate_dimension_mismatch_runtime_error(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, N=4)
    y_path = tmp_path / "y.csv"
    write_measurements_csv(np.ones((3, 2), dtype=complex), y_path)
    rc = cli(["estimate", "--config", cfg, "--seed", "1", "--y", str(y_path)])
    assert rc == 2
    assert "N=4" in capsys.readouterr().err
