"""Session fixtures that generate real CSV artifacts via the rdsync CLI.

The plotting layer consumes the experiment command line strictly through
its published interface, so these fixtures shell out to the installed
``rdsync`` script instead of importing the library.
"""

import json
import shutil
import subprocess

import pytest

REF = {
    "maps": [[2, 1], [1, 2], [2, 2]],
    "weights": [0.6, 0.2, 0.2],
    "Q": [[-1.0, 1.0], [1.0, -1.0]],
}


def run_rdsync(command, config, out_dir):
    exe = shutil.which("rdsync")
    assert exe is not None, "rdsync console script not found; install the main package"
    cfg = out_dir / "config.json"
    cfg.write_text(json.dumps(config))
    result = subprocess.run(
        [exe, command, "--config", str(cfg), "--out", str(out_dir)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    return out_dir


@pytest.fixture(scope="session")
def artifacts(tmp_path_factory):
    """Map of figure kind to a freshly generated CSV artifact path."""
    root = tmp_path_factory.mktemp("artifacts")
    paths = {}

    d = root / "simulate"
    d.mkdir()
    run_rdsync("simulate", {**REF, "eps": 0.05, "n": 300, "seed": 3}, d)
    paths["trajectory"] = d / "trajectory.csv"

    d = root / "sync_rate"
    d.mkdir()
    run_rdsync(
        "sync-rate",
        {**REF, "eps": 0.01, "eps_grid": [0.0, 0.01, 0.03], "n": 1500, "replicas": 2, "seed": 7},
        d,
    )
    paths["sync_rate"] = d / "sync_rate.csv"

    d = root / "mi_time"
    d.mkdir()
    run_rdsync("mi", {**REF, "eps": 0.02, "mi_n": 25, "mi_mode": "vs_time"}, d)
    paths["mi_time"] = d / "mi_vs_time.csv"

    d = root / "mi_eps"
    d.mkdir()
    run_rdsync(
        "mi",
        {**REF, "eps": 0.02, "mi_n": 15, "mi_mode": "vs_eps", "eps_grid": [0.0, 0.05, 0.2]},
        d,
    )
    paths["mi_eps"] = d / "mi_vs_eps.csv"

    d = root / "n_variability"
    d.mkdir()
    run_rdsync(
        "n-variability",
        {"s": 3, "n_draws": 5, "eps_grid": [0.01, 0.05], "seed": 2},
        d,
    )
    paths["n_variability"] = d / "n_variability.csv"

    for kind, path in paths.items():
        assert path.is_file(), f"missing artifact for {kind}: {path}"
    return paths
