"""Seeded Monte Carlo realization of coupled paths and their cycle statistics.

One shared map draw per step drives the leader path deterministically; the
follower lands on the drawn map's target row of the noise kernel N. The
trajectory alternates synchronized stretches (tau) and desynchronized
stretches (gamma); this module extracts those stopping times, estimates the
synchronized fraction of time, and checks tau against its geometric law.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import chi2 as chi2_dist

from .errors import InsufficientDataError, ValidationError
from .rds_model import RdsSpec, RmsSpec
from .two_point import ProductChainMatrix

Seed = Union[int, np.random.SeedSequence]

PRNG_ID = "numpy default_rng (PCG64); substream i = SeedSequence((master_seed, i))"


def substream(master_seed: int, index: int) -> np.random.SeedSequence:
    """The documented splitting function for replica substreams."""
    return np.random.SeedSequence((master_seed, index))


@dataclass(frozen=True, eq=False)
class CoupledTrajectory:
    """A realization of the coupled chain (x_t, y_t) with its map draws.

    ``xs``, ``ys`` and ``map_indices`` all have length n+1; entry t of
    ``map_indices`` is the draw made at time t, which produces the states at
    t+1 (the final draw's effect lies beyond the recorded horizon).
    """

    rms: RmsSpec
    seed: Seed
    x0: int
    y0: int
    n: int
    xs: np.ndarray
    ys: np.ndarray
    map_indices: np.ndarray

    def synced(self) -> np.ndarray:
        """Boolean indicator x_t == y_t, length n+1."""
        return self.xs == self.ys


@dataclass(frozen=True, eq=False)
class CycleTimes:
    """Stopping times of the complete synchronization cycles of a trajectory.

    A cycle is a synchronized run (tau) followed by a desynchronized run
    (gamma) that ends in an observed resynchronization; T = tau + gamma and
    W is the cumulative sum of T. The trailing incomplete cycle is excluded
    and reported as the censored tail; an initial desynchronized run-in is
    reported as gamma0.
    """

    taus: tuple[int, ...]
    gammas: tuple[int, ...]
    Ts: tuple[int, ...]
    Ws: tuple[int, ...]
    gamma0: int
    censored: bool
    censored_steps: int
    censored_synced: int

    @property
    def n_cycles(self) -> int:
        return len(self.taus)


@dataclass(frozen=True)
class TauGeometricReport:
    """Comparison of observed tau samples against Geometric(eps_eff) on {1,2,...}."""

    n_samples: int
    mean: float
    variance: float
    expected_mean: float
    statistic: float
    dof: int
    p_value: float


@dataclass(frozen=True, eq=False)
class SharedMapPaths:
    """Several leader paths driven by one shared map sequence."""

    paths: tuple[np.ndarray, ...]
    map_indices: np.ndarray


def _cumulative(weights: np.ndarray) -> list[float]:
    return np.cumsum(weights).tolist()


def run_coupled(rms: RmsSpec, x0: int, y0: int, n: int, seed: Seed) -> CoupledTrajectory:
    """Simulate the coupled chain for n steps from (x0, y0).

    Bit-reproducible given (rms, x0, y0, n, seed). Draw order: one block of
    n+1 uniforms for the map draws, then one block of n uniforms for the
    follower; both are turned into indices by inverse-CDF over the canonical
    order (maps in family order, states in 0..s-1).
    """
    s = rms.dim
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not (0 <= x0 < s and 0 <= y0 < s):
        raise ValidationError("x0 and y0 must be valid 0-based states")
    rng = np.random.default_rng(seed)
    map_u = rng.random(n + 1)
    y_u = rng.random(n).tolist()
    cum_w = np.cumsum(rms.rds.weights.entries)
    map_idx = np.minimum(
        np.searchsorted(cum_w, map_u, side="right"), rms.rds.n_maps - 1
    ).astype(np.int64)
    targets = [m.target.tolist() for m in rms.rds.maps]
    cum_rows = [_cumulative(row) for row in rms.N.entries]
    s_top = s - 1
    x, y = x0, y0
    xs_list = [x0]
    ys_list = [y0]
    idx_list = map_idx.tolist()
    for t in range(n):
        tgt = targets[idx_list[t]]
        x = tgt[x]
        row = cum_rows[tgt[y]]
        y = bisect_right(row, y_u[t])
        if y > s_top:
            y = s_top
        xs_list.append(x)
        ys_list.append(y)
    return CoupledTrajectory(
        rms=rms,
        seed=seed,
        x0=x0,
        y0=y0,
        n=n,
        xs=np.asarray(xs_list, dtype=np.int64),
        ys=np.asarray(ys_list, dtype=np.int64),
        map_indices=map_idx,
    )


def extract_cycle_times(traj: CoupledTrajectory) -> CycleTimes:
    """Split the sync indicator into complete cycles plus a censored tail.

    The indicator sequence decomposes as an optional desynchronized run-in
    (gamma0), then alternating synchronized and desynchronized runs. Each
    synchronized run paired with a desynchronized run that is followed by a
    resynchronization forms one complete cycle; whatever follows the last
    complete cycle is the censored tail.
    """
    indicator = traj.synced()
    if indicator.shape[0] < 2:
        raise ValidationError("trajectory must hold at least 2 steps")
    runs: list[tuple[bool, int]] = []
    current = bool(indicator[0])
    length = 1
    for v in indicator[1:]:
        v = bool(v)
        if v == current:
            length += 1
        else:
            runs.append((current, length))
            current = v
            length = 1
    runs.append((current, length))
    gamma0 = 0
    if runs and runs[0][0] is False:
        gamma0 = runs[0][1]
        runs = runs[1:]
    taus: list[int] = []
    gammas: list[int] = []
    censored_steps = 0
    censored_synced = 0
    k = 0
    while k < len(runs):
        if k + 2 <= len(runs) - 1:
            # a sync run follows the desync run: the cycle completed
            taus.append(runs[k][1])
            gammas.append(runs[k + 1][1])
            k += 2
        else:
            censored_synced = runs[k][1]
            censored_steps = runs[k][1] + (runs[k + 1][1] if k + 1 < len(runs) else 0)
            break
    Ts = [a + b for a, b in zip(taus, gammas)]
    Ws = list(np.cumsum(Ts)) if Ts else []
    return CycleTimes(
        taus=tuple(taus),
        gammas=tuple(gammas),
        Ts=tuple(Ts),
        Ws=tuple(int(w) for w in Ws),
        gamma0=gamma0,
        censored=censored_steps > 0,
        censored_steps=censored_steps,
        censored_synced=censored_synced,
    )


def empirical_sync_rate(traj: CoupledTrajectory) -> float:
    """Fraction of recorded steps with x_t == y_t."""
    indicator = traj.synced()
    return float(indicator.sum()) / indicator.shape[0]


def tau_geometric_check(times: CycleTimes, eps_eff: float) -> TauGeometricReport:
    """Chi-square goodness of fit of the tau samples against Geometric(eps_eff).

    Bins are consecutive runs of support values pooled until each holds an
    expected count of at least 5, with one tail bin; degrees of freedom are
    bins - 1 (no parameter is fitted).
    """
    if not 0.0 < eps_eff < 1.0:
        raise ValidationError("eps_eff must lie in (0, 1)")
    samples = np.asarray(times.taus, dtype=np.int64)
    m = samples.shape[0]
    if m < 200:
        raise InsufficientDataError(f"need at least 200 complete tau samples, got {m}")
    mean = float(samples.mean())
    variance = float(samples.var(ddof=1))
    # bin k covers support values in (edges[k-1], edges[k]]; a None edge is open-ended
    edges: list[Optional[int]] = []
    expected: list[float] = []
    acc = 0.0
    v = 0
    while True:
        v += 1
        acc += (1.0 - eps_eff) ** (v - 1) * eps_eff
        remaining = (1.0 - eps_eff) ** v
        if remaining * m < 5.0:
            break
        if acc * m >= 5.0:
            edges.append(v)
            expected.append(acc * m)
            acc = 0.0
        if v > 10_000_000:
            break
    tail_expected = (acc + (1.0 - eps_eff) ** v) * m
    edges.append(None)
    expected.append(tail_expected)
    if tail_expected < 5.0 and len(expected) > 1:
        # fold a thin tail into the previous bin, which becomes open-ended
        expected[-2] += expected.pop()
        edges.pop()
        edges[-1] = None
    observed = np.zeros(len(expected))
    lo = 0
    for k, hi in enumerate(edges):
        if hi is None:
            observed[k] = int((samples > lo).sum())
        else:
            observed[k] = int(((samples > lo) & (samples <= hi)).sum())
            lo = hi
    exp_arr = np.asarray(expected)
    statistic = float((((observed - exp_arr) ** 2) / exp_arr).sum())
    dof = max(len(expected) - 1, 1)
    p_value = float(chi2_dist.sf(statistic, dof))
    return TauGeometricReport(
        n_samples=m,
        mean=mean,
        variance=variance,
        expected_mean=1.0 / eps_eff,
        statistic=statistic,
        dof=dof,
        p_value=p_value,
    )


def run_single_rds(
    rds: RdsSpec, x0s: Sequence[int], n: int, seed: Seed
) -> SharedMapPaths:
    """Drive several leader paths with one shared map sequence.

    All paths see identical draws (one block of n map uniforms), so paths
    that ever coincide stay together from then on.
    """
    s = rds.dim
    if n < 1:
        raise ValidationError("n must be >= 1")
    for x0 in x0s:
        if not 0 <= x0 < s:
            raise ValidationError("initial states must be valid 0-based states")
    rng = np.random.default_rng(seed)
    cum_w = np.cumsum(rds.weights.entries)
    map_idx = np.minimum(
        np.searchsorted(cum_w, rng.random(n), side="right"), rds.n_maps - 1
    ).astype(np.int64)
    targets = np.stack([m.target for m in rds.maps])
    k = len(x0s)
    paths = np.empty((k, n + 1), dtype=np.int64)
    paths[:, 0] = np.asarray(x0s, dtype=np.int64)
    state = paths[:, 0].copy()
    for t in range(n):
        state = targets[map_idx[t]][state]
        paths[:, t + 1] = state
    return SharedMapPaths(
        paths=tuple(paths[i] for i in range(k)), map_indices=map_idx
    )


def first_meeting_time(paths: SharedMapPaths, i: int, j: int) -> Optional[int]:
    """First step index at which paths i and j coincide, or None if they never do."""
    hits = np.nonzero(paths.paths[i] == paths.paths[j])[0]
    return int(hits[0]) if hits.shape[0] else None


@dataclass(frozen=True)
class FrequencyCheckReport:
    """Result of comparing one-step empirical transition counts to a kernel."""

    ok: bool
    n_cells_checked: int
    max_z: float
    worst_cell: Optional[tuple[str, str]]


def transition_frequency_check(
    traj: CoupledTrajectory,
    W: ProductChainMatrix,
    min_expected: float = 25.0,
    z_limit: float = 3.0,
) -> FrequencyCheckReport:
    """Check one-step empirical pair-state transition counts against the kernel.

    For every source pair state visited n_r times, every cell whose expected
    count n_r * p reaches ``min_expected`` must have an observed count within
    ``z_limit`` standard errors sqrt(n_r p (1-p)) of its expectation.
    """
    index = W.index
    s = index.dim
    m = index.n_states
    lookup = np.zeros((s, s), dtype=np.int64)
    for k, (i, j) in enumerate(index.pairs):
        lookup[i, j] = k
    states = lookup[traj.xs, traj.ys]
    counts = np.zeros((m, m))
    np.add.at(counts, (states[:-1], states[1:]), 1.0)
    row_totals = counts.sum(axis=1)
    K = W.kernel.entries
    expected = row_totals[:, None] * K
    sd = np.sqrt(row_totals[:, None] * K * (1.0 - K))
    diff = np.abs(counts - expected)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0.0, diff / sd, np.where(diff > 0.0, np.inf, 0.0))
    mask = expected >= min_expected
    n_cells = int(mask.sum())
    if n_cells == 0:
        return FrequencyCheckReport(ok=True, n_cells_checked=0, max_z=0.0, worst_cell=None)
    z_masked = np.where(mask, z, -1.0)
    worst_flat = int(z_masked.argmax())
    worst_r, worst_c = divmod(worst_flat, m)
    labels = index.labels()
    max_z = float(z_masked.max())
    return FrequencyCheckReport(
        ok=max_z <= z_limit,
        n_cells_checked=n_cells,
        max_z=max_z,
        worst_cell=(labels[worst_r], labels[worst_c]),
    )
