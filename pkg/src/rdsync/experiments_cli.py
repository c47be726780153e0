"""Configuration-driven command line for building, sweeping, and simulating.

Every subcommand reads one JSON configuration (validated against the shipped
schema), writes its artifacts into an output directory with atomic renames,
and drops a ``manifest.json`` recording the config echo, PRNG identity,
package version, and a sha256 checksum per output file, so any run can be
replayed byte for byte. States are 1-based in every external file and
0-based inside the library.

Exit status: 0 success, 1 analytical error, 2 usage or config error,
3 oracle failure.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Iterable, Optional, Sequence

import click
import jsonschema
import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    ConvergenceError,
    InfiniteExpectedTimeError,
    ValidationError,
)
from .mutual_info import mi_brute_force, mi_path, mi_slope
from .rds_model import (
    DeterministicMap,
    RdsSpec,
    RmsSpec,
    decompose_markov,
    mean_matrix,
)
from .simulate import (
    PRNG_ID,
    empirical_sync_rate,
    extract_cycle_times,
    run_coupled,
    substream,
    transition_frequency_check,
)
from .stochastic_core import (
    GeneratorMatrix,
    ProbVector,
    StochMatrix,
    mat_exp,
    random_generator_matrix,
    stationary_distribution,
)
from .two_point import (
    CollapsedMatrix,
    ProductChainMatrix,
    build_V,
    build_W,
    collapse,
    expected_resync_time,
    predicted_sync_rate,
    survival_brute_force,
    survival_probability,
)

OUTDIR_ENV = "RDSYNC_OUTDIR"

DEFAULT_N = 100_000
DEFAULT_REPLICAS = 8
DEFAULT_SEED = 0
DEFAULT_SWEEP_GRID = [round(x, 10) for x in np.linspace(0.002, 0.05, 10)]
DEFAULT_MI_EPS_GRID = [0.0, 0.01, 0.05, 0.1, 0.2]
DEFAULT_MI_N_VS_TIME = 200
DEFAULT_MI_N_VS_EPS = 50
DEFAULT_N_DRAWS = 100
DEFAULT_VARIABILITY_GRID = [round(x, 10) for x in np.linspace(0.01, 0.1, 10)]

REASON_NO_STATIONARY = "no_stationary_distribution"
REASON_INFINITE_TIME = "infinite_expected_time"
REASON_ZERO_DESYNC = "zero_desync_mass"


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A validated experiment configuration with 0-based internal states."""

    raw: dict
    s: int
    rds: Optional[RdsSpec]
    M_given: Optional[np.ndarray]
    Q: Optional[GeneratorMatrix]
    eps: Optional[float]
    eps_grid: Optional[list[float]]
    n: int
    replicas: int
    seed: int
    x0: int
    y0: int
    n_draws: int
    mi_n: Optional[int]
    mi_mode: Optional[str]
    kind: Optional[str]

    def require_rds(self) -> RdsSpec:
        if self.rds is None:
            raise ConfigError("this command needs a system: provide 'maps'+'weights' or 'M'")
        return self.rds

    def require_rms(self) -> RmsSpec:
        rds = self.require_rds()
        if self.Q is None or self.eps is None:
            raise ConfigError("this command needs a perturbation: provide 'Q' and 'eps'")
        return RmsSpec(rds=rds, Q=self.Q, eps=self.eps)

    def rms_at(self, eps: float) -> RmsSpec:
        if self.Q is None:
            raise ConfigError("this command needs 'Q'")
        return RmsSpec(rds=self.require_rds(), Q=self.Q, eps=eps)


def _load_schema() -> dict:
    text = resources.files("rdsync").joinpath("config_schema.json").read_text()
    return json.loads(text)


def load_config(path: str | os.PathLike, seed_override: Optional[int] = None) -> ExperimentConfig:
    """Parse and validate a JSON configuration file.

    Raises ConfigError with a field path on any violation.
    """
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    return parse_config(raw, seed_override)


def parse_config(raw: dict, seed_override: Optional[int] = None) -> ExperimentConfig:
    schema = _load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(raw), key=lambda e: e.json_path)
    if errors:
        e = errors[0]
        raise ConfigError(f"{e.json_path}: {e.message}")

    has_maps = "maps" in raw or "weights" in raw
    has_M = "M" in raw
    if has_maps and has_M:
        raise ConfigError("$: provide either 'maps'+'weights' or 'M', not both")

    s = raw.get("s")
    rds: Optional[RdsSpec] = None
    M_given: Optional[np.ndarray] = None
    if has_maps:
        if "maps" not in raw or "weights" not in raw:
            raise ConfigError("$: 'maps' and 'weights' must be given together")
        maps_raw = raw["maps"]
        weights_raw = raw["weights"]
        if len(maps_raw) != len(weights_raw):
            raise ConfigError("$.weights: needs one weight per map")
        lengths = {len(t) for t in maps_raw}
        if len(lengths) != 1:
            raise ConfigError("$.maps: all target arrays must share one length")
        dim = lengths.pop()
        if s is None:
            s = dim
        elif s != dim:
            raise ConfigError(f"$.s: {s} does not match map length {dim}")
        for mi, t in enumerate(maps_raw):
            if any(not 1 <= v <= dim for v in t):
                raise ConfigError(f"$.maps[{mi}]: targets must lie in 1..{dim}")
        try:
            rds = RdsSpec(
                tuple(DeterministicMap(np.asarray(t, dtype=np.int64) - 1) for t in maps_raw),
                ProbVector(np.asarray(weights_raw, dtype=float)),
            )
        except ValidationError as e:
            raise ConfigError(f"$.maps/$.weights: {e}") from e
    elif has_M:
        M_given = np.asarray(raw["M"], dtype=float)
        if M_given.ndim != 2 or M_given.shape[0] != M_given.shape[1]:
            raise ConfigError("$.M: must be a square matrix")
        if s is None:
            s = M_given.shape[0]
        elif s != M_given.shape[0]:
            raise ConfigError(f"$.s: {s} does not match M dimension {M_given.shape[0]}")
        try:
            rds = decompose_markov(StochMatrix(M_given))
        except ValidationError as e:
            raise ConfigError(f"$.M: {e}") from e
    if s is None:
        raise ConfigError("$: 's' is required when no system is given")

    Q: Optional[GeneratorMatrix] = None
    if "Q" in raw:
        if raw["Q"] == "random":
            if "q_seed" not in raw:
                raise ConfigError("$.Q: 'random' requires 'q_seed'")
            Q = random_generator_matrix(s, int(raw["q_seed"]))
        else:
            try:
                Q = GeneratorMatrix(np.asarray(raw["Q"], dtype=float))
            except ValidationError as e:
                raise ConfigError(f"$.Q: {e}") from e
            if Q.dim != s:
                raise ConfigError(f"$.Q: dimension {Q.dim} does not match s={s}")

    eps_grid = raw.get("eps_grid")
    if eps_grid is not None:
        if any(b <= a for a, b in zip(eps_grid, eps_grid[1:])):
            raise ConfigError("$.eps_grid: must be strictly increasing")
        eps_grid = [float(e) for e in eps_grid]

    x0 = int(raw.get("x0", 1))
    y0 = int(raw.get("y0", 1))
    if not 1 <= x0 <= s:
        raise ConfigError(f"$.x0: must lie in 1..{s}")
    if not 1 <= y0 <= s:
        raise ConfigError(f"$.y0: must lie in 1..{s}")

    seed = int(raw.get("seed", DEFAULT_SEED))
    if seed_override is not None:
        seed = seed_override

    return ExperimentConfig(
        raw=raw,
        s=int(s),
        rds=rds,
        M_given=M_given,
        Q=Q,
        eps=float(raw["eps"]) if "eps" in raw else None,
        eps_grid=eps_grid,
        n=int(raw.get("n", DEFAULT_N)),
        replicas=int(raw.get("replicas", DEFAULT_REPLICAS)),
        seed=seed,
        x0=x0 - 1,
        y0=y0 - 1,
        n_draws=int(raw.get("n_draws", DEFAULT_N_DRAWS)),
        mi_n=int(raw["mi_n"]) if "mi_n" in raw else None,
        mi_mode=raw.get("mi_mode"),
        kind=raw.get("kind"),
    )


# ---------------------------------------------------------------------------
# file output


def _atomic_write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _format_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    comments_after: Sequence[str] = (),
) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_format_cell(c) for c in row])
    for comment in comments_after:
        buf.write(f"# {comment}\n")
    return _atomic_write_text(path, buf.getvalue())


def write_json(path: Path, obj: Any) -> Path:
    return _atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_matrix_csv(path: Path, entries: np.ndarray, labels: Sequence[str]) -> Path:
    rows = [[labels[i], *entries[i]] for i in range(entries.shape[0])]
    return write_csv(path, ["state", *labels], rows)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(
    out_dir: Path,
    command: str,
    config: ExperimentConfig,
    outputs: Sequence[Path],
    metadata: Optional[dict] = None,
) -> Path:
    manifest = {
        "command": command,
        "config": config.raw,
        "prng": PRNG_ID,
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": {p.name: _sha256(p) for p in outputs},
        "metadata": metadata or {},
    }
    return write_json(out_dir / "manifest.json", manifest)


def _state_labels(s: int) -> list[str]:
    return [str(i + 1) for i in range(s)]


# ---------------------------------------------------------------------------
# click plumbing


def _resolve_out(out_dir: Optional[str]) -> Path:
    base = out_dir or os.environ.get(OUTDIR_ENV) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def common_options(f: Callable) -> Callable:
    options = [
        click.option(
            "--config",
            "config_path",
            required=True,
            type=click.Path(exists=True, dir_okay=False),
            help="JSON experiment configuration.",
        ),
        click.option(
            "--out",
            "out_dir",
            type=click.Path(file_okay=False),
            default=None,
            help=f"Output directory (default: ${OUTDIR_ENV} or the working directory).",
        ),
        click.option("--seed", type=int, default=None, help="Override the config master seed."),
        click.option(
            "--threads",
            type=click.IntRange(min=1),
            default=1,
            show_default=True,
            help="Worker threads for replicas and grid points.",
        ),
        click.option(
            "--format",
            "fmt",
            type=click.Choice(["csv", "json"]),
            default="csv",
            show_default=True,
            help="Format of the tabular experiment output.",
        ),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def translating_errors(f: Callable) -> Callable:
    """Map typed errors to the documented exit codes."""

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as e:
            raise click.UsageError(str(e)) from e  # exit status 2
        except (ConvergenceError, InfiniteExpectedTimeError, ValidationError) as e:
            click.echo(f"analytical error: {e}", err=True)
            sys.exit(1)

    return wrapper


def _map_indexed(fn: Callable, items: Sequence, threads: int) -> list:
    """Apply fn over items, preserving order; optionally on a thread pool."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, prog_name="rdsync")
def main() -> None:
    """Build, analyze, and simulate coupled random dynamical systems."""


# ---------------------------------------------------------------------------
# build


def _try_pi(M: StochMatrix, reasons: dict) -> Optional[ProbVector]:
    try:
        return stationary_distribution(M)
    except ConvergenceError:
        reasons["pi"] = REASON_NO_STATIONARY
        return None


@main.command("build")
@common_options
@translating_errors
def cmd_build(config_path, out_dir, seed, threads, fmt) -> None:
    """Write the analytical objects of a system: kernels, laws, predictions."""
    config = load_config(config_path, seed)
    out = _resolve_out(out_dir)
    rds = config.require_rds()
    s = rds.dim
    reasons: dict[str, str] = {}
    outputs: list[Path] = []

    M = mean_matrix(rds)
    V = build_V(rds)
    V_collapsed, _ = collapse(V)
    outputs.append(write_matrix_csv(out / "m.csv", M.entries, _state_labels(s)))
    outputs.append(write_matrix_csv(out / "v.csv", V.kernel.entries, V.index.labels()))
    outputs.append(
        write_matrix_csv(
            out / "v_collapsed.csv", V_collapsed.kernel.entries, V_collapsed.labels()
        )
    )

    pi = _try_pi(M, reasons)

    uniform = ProbVector.uniform(V.n_unsync)
    egamma_uniform: Optional[float] = None
    try:
        egamma_uniform = expected_resync_time(V, uniform)
    except InfiniteExpectedTimeError:
        reasons["expected_resync_time_uniform"] = REASON_INFINITE_TIME

    result: dict[str, Any] = {
        "s": s,
        "maps": [[int(t) + 1 for t in m.target] for m in rds.maps],
        "weights": [float(w) for w in rds.weights.entries],
        "M": M.entries.tolist(),
        "V": V.kernel.entries.tolist(),
        "V_collapsed": V_collapsed.kernel.entries.tolist(),
        "pi": None if pi is None else pi.entries.tolist(),
        "expected_resync_time_uniform": egamma_uniform,
        "eps": config.eps,
        "N": None,
        "W": None,
        "W_collapsed": None,
        "mu1": None,
        "eps_eff": None,
        "expected_resync_time_mu1": None,
        "predicted_rate": None,
        "predicted_rate_nominal": None,
    }

    if config.Q is not None and config.eps is not None:
        rms = config.require_rms()
        W = build_W(rms)
        outputs.append(write_matrix_csv(out / "n.csv", rms.N.entries, _state_labels(s)))
        outputs.append(write_matrix_csv(out / "w.csv", W.kernel.entries, W.index.labels()))
        result["N"] = rms.N.entries.tolist()
        result["W"] = W.kernel.entries.tolist()
        if pi is None:
            reasons["mu1"] = REASON_NO_STATIONARY
            reasons["predicted_rate"] = REASON_NO_STATIONARY
        else:
            W_collapsed, mu1 = collapse(W, pi)
            outputs.append(
                write_matrix_csv(
                    out / "w_collapsed.csv", W_collapsed.kernel.entries, W_collapsed.labels()
                )
            )
            result["W_collapsed"] = W_collapsed.kernel.entries.tolist()
            sync_idx = W_collapsed.sync_index
            result["eps_eff"] = 1.0 - float(W_collapsed.kernel.entries[sync_idx, sync_idx])
            if mu1 is None:
                reasons["mu1"] = REASON_ZERO_DESYNC
                result["predicted_rate"] = 1.0
                result["predicted_rate_nominal"] = 1.0
            else:
                result["mu1"] = mu1.entries.tolist()
                try:
                    pred = predicted_sync_rate(W_collapsed, mu1)
                    result["predicted_rate"] = pred.rate
                    result["expected_resync_time_mu1"] = pred.Egamma
                    result["predicted_rate_nominal"] = 1.0 / (1.0 + config.eps * pred.Egamma)
                except InfiniteExpectedTimeError:
                    reasons["expected_resync_time_mu1"] = REASON_INFINITE_TIME
                    reasons["predicted_rate"] = REASON_INFINITE_TIME

    if pi is not None:
        outputs.append(
            write_csv(out / "pi.csv", _state_labels(s), [list(pi.entries)])
        )
    if result["mu1"] is not None:
        outputs.append(
            write_csv(out / "mu1.csv", V.index.labels()[: V.n_unsync], [result["mu1"]])
        )
    scalar_keys = [
        "expected_resync_time_uniform",
        "expected_resync_time_mu1",
        "eps_eff",
        "predicted_rate",
        "predicted_rate_nominal",
    ]
    outputs.append(
        write_csv(
            out / "summary.csv",
            ["quantity", "value", "reason"],
            [[k, result[k], reasons.get(k, "")] for k in scalar_keys],
        )
    )

    result["reasons"] = reasons
    outputs.append(write_json(out / "build.json", result))
    write_manifest(out, "build", config, outputs)
    if reasons:
        click.echo(f"analytical error(s): {reasons}", err=True)
        sys.exit(1)


# ---------------------------------------------------------------------------
# sync-rate sweep


def _sweep_fit(eps_effs: Sequence[float], p_hats: Sequence[float]) -> dict:
    """Origin-constrained weighted least-squares slope of (1/p - 1) vs eps_eff.

    The model 1/p = 1 + eps_eff * E has no intercept; weighting each point
    by 1/eps_eff^2 makes the estimator the mean of the pointwise ratios
    (1/p - 1)/eps_eff, which estimates the per-unit-eps_eff
    resynchronization time across the grid.
    """
    xs = np.asarray(eps_effs)
    ys = np.asarray(p_hats)
    keep = (xs > 0.0) & (ys > 0.0)
    x = xs[keep]
    y = 1.0 / ys[keep] - 1.0
    if x.shape[0] < 2:
        return {"fitted_slope": None, "fit_r2": None, "fit_points": int(x.shape[0])}
    slope = float(np.mean(y / x))
    fitted = slope * x
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return {"fitted_slope": slope, "fit_r2": r2, "fit_points": int(x.shape[0])}


@main.command("sync-rate")
@common_options
@translating_errors
def cmd_sync_rate_sweep(config_path, out_dir, seed, threads, fmt) -> None:
    """Sweep eps: empirical vs predicted synchronized fraction of time."""
    config = load_config(config_path, seed)
    out = _resolve_out(out_dir)
    rds = config.require_rds()
    if config.Q is None:
        raise ConfigError("sync-rate needs 'Q'")
    grid = config.eps_grid if config.eps_grid is not None else list(DEFAULT_SWEEP_GRID)
    M = mean_matrix(rds)
    pi = stationary_distribution(M)

    predictions = []
    for eps in grid:
        rms = config.rms_at(eps)
        W = build_W(rms)
        W_collapsed, mu1 = collapse(W, pi)
        predictions.append((rms, predicted_sync_rate(W_collapsed, mu1)))

    replicas = config.replicas
    tasks = [(gi, r) for gi in range(len(grid)) for r in range(replicas)]

    def one_task(task: tuple[int, int]) -> float:
        gi, r = task
        rms = predictions[gi][0]
        traj = run_coupled(
            rms, config.x0, config.y0, config.n, substream(config.seed, gi * replicas + r)
        )
        return empirical_sync_rate(traj)

    rates = _map_indexed(one_task, tasks, threads)

    rows = []
    for gi, eps in enumerate(grid):
        pred = predictions[gi][1]
        p_hat = float(np.mean(rates[gi * replicas : (gi + 1) * replicas]))
        rows.append(
            {
                "eps": eps,
                "eps_eff": pred.eps_eff,
                "p_hat": p_hat,
                "inv_p_hat": 1.0 / p_hat if p_hat > 0.0 else None,
                "predicted_rate": pred.rate,
                "predicted_Egamma": pred.Egamma,
            }
        )

    fit = _sweep_fit([row["eps_eff"] for row in rows], [row["p_hat"] for row in rows])
    header = ["eps", "eps_eff", "p_hat", "inv_p_hat", "predicted_rate", "predicted_Egamma"]
    outputs = []
    if fmt == "csv":
        comments = [
            f"fitted_slope = {_format_cell(fit['fitted_slope'])}",
            f"fit_r2 = {_format_cell(fit['fit_r2'])}",
            f"fit_points = {fit['fit_points']}",
            "fit_model = mean of pointwise (1/p_hat - 1)/eps_eff"
            " (origin-constrained weighted least squares)",
        ]
        outputs.append(
            write_csv(
                out / "sync_rate.csv",
                header,
                [[row[k] for k in header] for row in rows],
                comments_after=comments,
            )
        )
    else:
        outputs.append(write_json(out / "sync_rate.json", {"rows": rows, "fit": fit}))
    write_manifest(out, "sync-rate", config, outputs, metadata={"fit": fit})


# ---------------------------------------------------------------------------
# mutual information


@main.command("mi")
@click.option(
    "--mode",
    type=click.Choice(["vs_time", "vs_eps"]),
    default=None,
    help="Accumulate over time at fixed eps, or compare eps values at fixed time "
    "(default: the config's mi_mode, else vs_time).",
)
@common_options
@translating_errors
def cmd_mi(mode, config_path, out_dir, seed, threads, fmt) -> None:
    """Exact mutual information of the two paths, over time or over eps."""
    config = load_config(config_path, seed)
    out = _resolve_out(out_dir)
    config.require_rds()
    if config.Q is None:
        raise ConfigError("mi needs 'Q'")
    mode = mode or config.mi_mode or "vs_time"
    outputs = []
    metadata: dict[str, Any] = {"mode": mode}
    if mode == "vs_time":
        if config.eps is None:
            raise ConfigError("mi vs_time needs 'eps'")
        n_mi = config.mi_n or DEFAULT_MI_N_VS_TIME
        rms = config.rms_at(config.eps)
        seq = mi_path(rms, config.x0, config.y0, n_mi)
        slope = mi_slope(rms)
        metadata["slope"] = slope
        header = ["n", "MI", "MI_per_n", "slope"]
        rows = [
            [t + 1, float(seq[t]), float(seq[t]) / (t + 1), slope] for t in range(n_mi)
        ]
        name = "mi_vs_time"
    else:
        grid = config.eps_grid if config.eps_grid is not None else list(DEFAULT_MI_EPS_GRID)
        n_mi = config.mi_n or DEFAULT_MI_N_VS_EPS
        metadata["n"] = n_mi
        header = ["eps", "MI", "MI_per_n"]
        rows = []
        for eps in grid:
            val = float(mi_path(config.rms_at(eps), config.x0, config.y0, n_mi)[-1])
            rows.append([eps, val, val / n_mi])
        name = "mi_vs_eps"
    if fmt == "csv":
        comments = [f"{k} = {_format_cell(v)}" for k, v in metadata.items() if k != "mode"]
        outputs.append(write_csv(out / f"{name}.csv", header, rows, comments_after=comments))
    else:
        outputs.append(
            write_json(
                out / f"{name}.json",
                {"header": header, "rows": rows, "metadata": metadata},
            )
        )
    write_manifest(out, "mi", config, outputs, metadata=metadata)


# ---------------------------------------------------------------------------
# noise-kernel diagonal variability


def _q_draw_seed(master_seed: int, draw: int) -> int:
    """Deterministic per-draw generator seed: first word of SeedSequence((master, draw))."""
    return int(np.random.SeedSequence((master_seed, draw)).generate_state(1)[0])


@main.command("n-variability")
@common_options
@translating_errors
def cmd_n_variability(config_path, out_dir, seed, threads, fmt) -> None:
    """Diagonal spread of N = exp(eps Q) across random generator draws."""
    config = load_config(config_path, seed)
    out = _resolve_out(out_dir)
    s = config.s
    grid = config.eps_grid if config.eps_grid is not None else list(DEFAULT_VARIABILITY_GRID)
    q_seed = int(config.raw.get("q_seed", config.seed))
    draws = [
        random_generator_matrix(s, _q_draw_seed(q_seed, j)) for j in range(config.n_draws)
    ]
    rows = []
    for eps in grid:
        for j, Q in enumerate(draws):
            diag = np.diag(mat_exp(Q, eps).entries)
            rows.append([eps, j, float(diag.min()), float(diag.mean()), float(diag.max())])
    header = ["eps", "draw", "diag_min", "diag_mean", "diag_max"]
    outputs = []
    if fmt == "csv":
        outputs.append(write_csv(out / "n_variability.csv", header, rows))
    else:
        outputs.append(write_json(out / "n_variability.json", {"header": header, "rows": rows}))
    write_manifest(
        out, "n-variability", config, outputs, metadata={"s": s, "n_draws": config.n_draws}
    )


# ---------------------------------------------------------------------------
# simulate


@main.command("simulate")
@common_options
@translating_errors
def cmd_simulate(config_path, out_dir, seed, threads, fmt) -> None:
    """One seeded coupled trajectory with its cycle decomposition."""
    config = load_config(config_path, seed)
    out = _resolve_out(out_dir)
    rms = config.require_rms()
    traj = run_coupled(rms, config.x0, config.y0, config.n, substream(config.seed, 0))
    synced = traj.synced()
    traj_header = ["t", "x", "y", "map_index", "synced"]
    traj_rows = [
        [t, int(traj.xs[t]) + 1, int(traj.ys[t]) + 1, int(traj.map_indices[t]) + 1, int(synced[t])]
        for t in range(config.n + 1)
    ]
    times = extract_cycle_times(traj)
    cycle_header = ["cycle", "tau", "gamma", "T", "W", "censored"]
    cycle_rows = [
        [i + 1, times.taus[i], times.gammas[i], times.Ts[i], times.Ws[i], 0]
        for i in range(times.n_cycles)
    ]
    if times.censored:
        last_w = times.Ws[-1] if times.Ws else 0
        cycle_rows.append(
            [
                times.n_cycles + 1,
                times.censored_synced,
                times.censored_steps - times.censored_synced,
                times.censored_steps,
                last_w + times.censored_steps,
                1,
            ]
        )
    if fmt == "csv":
        outputs = [
            write_csv(out / "trajectory.csv", traj_header, traj_rows),
            write_csv(
                out / "cycles.csv",
                cycle_header,
                cycle_rows,
                comments_after=[f"gamma0 = {times.gamma0}"],
            ),
        ]
    else:
        outputs = [
            write_json(out / "trajectory.json", {"header": traj_header, "rows": traj_rows}),
            write_json(
                out / "cycles.json",
                {"header": cycle_header, "rows": cycle_rows, "gamma0": times.gamma0},
            ),
        ]
    write_manifest(
        out,
        "simulate",
        config,
        outputs,
        metadata={
            "empirical_sync_rate": empirical_sync_rate(traj),
            "n_cycles": times.n_cycles,
            "gamma0": times.gamma0,
        },
    )


# ---------------------------------------------------------------------------
# decompose


@main.command("decompose")
@common_options
@translating_errors
def cmd_decompose(config_path, out_dir, seed, threads, fmt) -> None:
    """Greedy decomposition of a stochastic matrix into weighted maps."""
    config = load_config(config_path, seed)
    out = _resolve_out(out_dir)
    if config.M_given is None:
        raise ConfigError("decompose needs 'M'")
    rds = config.rds
    assert rds is not None
    reconstruction = mean_matrix(rds).entries
    outputs = [
        write_json(
            out / "decomposition.json",
            {
                "s": rds.dim,
                "maps": [[int(t) + 1 for t in m.target] for m in rds.maps],
                "weights": [float(w) for w in rds.weights.entries],
                "reconstruction_max_error": float(
                    np.abs(reconstruction - config.M_given).max()
                ),
            },
        )
    ]
    write_manifest(out, "decompose", config, outputs)


# ---------------------------------------------------------------------------
# oracle battery


def _oracle_checks(config: ExperimentConfig) -> list[dict]:
    """Cross-validate closed forms against brute force on the config's system."""
    checks: list[dict] = []

    def record(name: str, passed: bool, detail: str) -> None:
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    rds = config.require_rds()
    s = rds.dim
    M = mean_matrix(rds)
    V = build_V(rds)
    u = V.n_unsync

    row_err = float(np.abs(V.kernel.entries.sum(axis=1) - 1.0).max())
    record("V_rows_stochastic", row_err <= 1e-12, f"max row-sum error {row_err:.3e}")

    ll = float(np.abs(V.kernel.entries[u:, :u]).max())
    record("V_lower_left_zero", ll == 0.0, f"max lower-left entry {ll:.3e}")

    sync_block = V.kernel.entries[u:, u:]
    block_err = float(np.abs(sync_block - M.entries).max())
    record("V_sync_block_is_mean_matrix", block_err <= 1e-12, f"max error {block_err:.3e}")

    rebuilt = mean_matrix(decompose_markov(M)).entries
    rt_err = float(np.abs(rebuilt - M.entries).max())
    record("decompose_round_trip", rt_err <= 1e-9, f"max reconstruction error {rt_err:.3e}")

    uniform = ProbVector.uniform(u)
    surv_n = 4
    surv_err = max(
        abs(survival_probability(V, uniform, n) - survival_brute_force(rds, uniform, n))
        for n in range(1, surv_n + 1)
    )
    record(
        "survival_matches_path_enumeration_V",
        surv_err <= 1e-12,
        f"max |formula - enumeration| {surv_err:.3e} for n <= {surv_n}",
    )

    Mbar = V.unsync_block()
    rho = float(np.abs(np.linalg.eigvals(Mbar)).max())
    try:
        direct: Optional[float] = expected_resync_time(V, uniform)
    except InfiniteExpectedTimeError:
        direct = None
    if direct is None:
        record(
            "expected_time_infinite_consistent",
            rho > 1.0 - 1e-9,
            f"solver reports infinite, spectral radius {rho:.6f}",
        )
    elif rho <= 0.9:
        x = uniform.entries.copy()
        partial = 0.0
        for _ in range(200):
            partial += float(x.sum())
            x = x @ Mbar
        record(
            "expected_time_matches_neumann_sum",
            abs(direct - partial) <= 1e-8,
            f"|solve - partial sum| = {abs(direct - partial):.3e}",
        )
    else:
        record(
            "expected_time_matches_neumann_sum",
            True,
            f"skipped: spectral radius {rho:.3f} above the 0.9 oracle guard",
        )

    if config.Q is not None and config.eps is not None:
        rms = config.require_rms()
        W = build_W(rms)
        row_err_w = float(np.abs(W.kernel.entries.sum(axis=1) - 1.0).max())
        record("W_rows_stochastic", row_err_w <= 1e-12, f"max row-sum error {row_err_w:.3e}")

        pi = stationary_distribution(M)
        W_collapsed, mu1 = collapse(W, pi)
        c_err = float(np.abs(W_collapsed.kernel.entries.sum(axis=1) - 1.0).max())
        record("collapse_rows_stochastic", c_err <= 1e-12, f"max row-sum error {c_err:.3e}")

        surv_err_w = max(
            abs(survival_probability(W, uniform, n) - survival_brute_force(rms, uniform, n))
            for n in range(1, surv_n + 1)
        )
        record(
            "survival_matches_path_enumeration_W",
            surv_err_w <= 1e-12,
            f"max |formula - enumeration| {surv_err_w:.3e} for n <= {surv_n}",
        )

        n_mi = max(n for n in range(1, 5) if s ** (2 * n) <= 100_000)
        mi_err = max(
            abs(
                mi_path(rms, config.x0, config.y0, n)[-1]
                - mi_brute_force(rms, config.x0, config.y0, n)
            )
            for n in range(1, n_mi + 1)
        )
        record(
            "mi_recursion_matches_enumeration",
            mi_err <= 1e-10,
            f"max |recursion - enumeration| {mi_err:.3e} for n <= {n_mi}",
        )

        seq = mi_path(rms, config.x0, config.y0, 200)
        slope = mi_slope(rms)
        tail_gap = abs(slope - float(seq[-1] - seq[-2]))
        record(
            "mi_slope_matches_tail_increment",
            tail_gap <= 1e-6,
            f"|slope - final increment| = {tail_gap:.3e}",
        )

        n_stat = min(config.n, 100_000)
        traj = run_coupled(rms, config.x0, config.y0, n_stat, substream(config.seed, 0))
        freq = transition_frequency_check(traj, W)
        record(
            "one_step_frequencies_match_W",
            freq.ok,
            f"max |z| = {freq.max_z:.3f} over {freq.n_cells_checked} cells"
            + (f", worst {freq.worst_cell}" if freq.worst_cell else ""),
        )

    return checks


@main.command("oracle")
@common_options
@translating_errors
def cmd_oracle(config_path, out_dir, seed, threads, fmt) -> None:
    """Self-test battery: closed forms vs brute force on the config's system."""
    config = load_config(config_path, seed)
    out = _resolve_out(out_dir)
    checks = _oracle_checks(config)
    all_passed = all(c["passed"] for c in checks)
    outputs = [
        write_json(out / "oracle_report.json", {"passed": all_passed, "checks": checks})
    ]
    write_manifest(out, "oracle", config, outputs, metadata={"passed": all_passed})
    for c in checks:
        status = "pass" if c["passed"] else "FAIL"
        click.echo(f"[{status}] {c['name']}: {c['detail']}")
    if not all_passed:
        sys.exit(3)


if __name__ == "__main__":
    main()
