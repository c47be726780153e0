"""Dense stochastic-matrix arithmetic for small state spaces.

Row-stochastic matrices and rate generators, matrix exponentials by scaling
and squaring, stationary distributions by power iteration, and the
fundamental-matrix sum mu0 (I - Mbar)^-1 1 that expected-hitting-time
formulas reduce to.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .errors import ConvergenceError, InfiniteExpectedTimeError, ValidationError

ROW_SUM_TOL = 1e-9
GENERATOR_ROW_TOL = 1e-12
SINGULAR_PIVOT_TOL = 1e-12
EXP_ENTRY_TOL = 1e-12


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def snap_unit_interval(K: np.ndarray) -> np.ndarray:
    """Clamp accumulation dust just above 1 back to 1, in place.

    Summing probability weights can overshoot 1 by a few ulps. Overshoot
    beyond ``EXP_ENTRY_TOL`` is a real error and is left for StochMatrix
    validation to reject.
    """
    over = float(K.max()) - 1.0
    if 0.0 < over <= EXP_ENTRY_TOL:
        np.minimum(K, 1.0, out=K)
    return K


@dataclass(frozen=True, eq=False)
class StochMatrix:
    """A dense row-stochastic matrix over a finite state space.

    Entries are validated on construction: each in [0, 1], each row summing
    to 1 within ``ROW_SUM_TOL``. The stored array is read-only.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = _frozen_array(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise ValidationError("StochMatrix entries must form a non-empty square matrix")
        if np.any(entries < 0.0):
            raise ValidationError("StochMatrix entries must be >= 0")
        if np.any(entries > 1.0):
            raise ValidationError("StochMatrix entries must be <= 1")
        row_sums = entries.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
            worst = int(np.argmax(np.abs(row_sums - 1.0)))
            raise ValidationError(
                f"StochMatrix row {worst} sums to {row_sums[worst]!r}, not 1 within {ROW_SUM_TOL}"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """A rate generator: diagonal exactly -1, off-diagonal >= 0, zero row sums."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = _frozen_array(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise ValidationError("GeneratorMatrix entries must form a non-empty square matrix")
        if not np.all(np.diag(entries) == -1.0):
            raise ValidationError("GeneratorMatrix diagonal entries must equal -1 exactly")
        off = entries.copy()
        np.fill_diagonal(off, 0.0)
        if np.any(off < 0.0):
            raise ValidationError("GeneratorMatrix off-diagonal entries must be >= 0")
        row_sums = entries.sum(axis=1)
        if np.any(np.abs(row_sums) > GENERATOR_ROW_TOL):
            worst = int(np.argmax(np.abs(row_sums)))
            raise ValidationError(
                f"GeneratorMatrix row {worst} sums to {row_sums[worst]!r}, not 0 within {GENERATOR_ROW_TOL}"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class ProbVector:
    """A probability vector: entries >= 0, summing to 1 within ``ROW_SUM_TOL``."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = _frozen_array(self.entries)
        if entries.ndim != 1 or entries.shape[0] < 1:
            raise ValidationError("ProbVector entries must form a non-empty vector")
        if np.any(entries < 0.0):
            raise ValidationError("ProbVector entries must be >= 0")
        if abs(entries.sum() - 1.0) > ROW_SUM_TOL:
            raise ValidationError(
                f"ProbVector sums to {entries.sum()!r}, not 1 within {ROW_SUM_TOL}"
            )
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @staticmethod
    def uniform(dim: int) -> "ProbVector":
        return ProbVector(np.full(dim, 1.0 / dim))


def mat_exp(Q: GeneratorMatrix, eps: float) -> StochMatrix:
    """Matrix exponential exp(eps * Q) of a rate generator.

    Scaling and squaring with a truncated Taylor series; the series is summed
    until the next term falls below 1e-16 in max norm, giving entrywise error
    well under ``EXP_ENTRY_TOL``. Tiny negative round-off is clamped to 0 and
    rows are renormalized only if their sums drift by more than
    ``EXP_ENTRY_TOL``.

    Parameters
    ----------
    Q : GeneratorMatrix
        The rate generator.
    eps : float
        Non-negative scale.

    Returns
    -------
    StochMatrix
        Row-stochastic exp(eps * Q).
    """
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    s = Q.dim
    A = eps * Q.entries
    norm = float(np.abs(A).sum(axis=1).max())
    squarings = 0
    while norm > 0.5:
        A = A / 2.0
        norm /= 2.0
        squarings += 1
    total = np.eye(s)
    term = np.eye(s)
    for k in range(1, 61):
        term = term @ A / k
        total = total + term
        if float(np.abs(term).max()) < 1e-16:
            break
    for _ in range(squarings):
        total = total @ total
    total[(total < 0.0) & (total > -EXP_ENTRY_TOL)] = 0.0
    row_sums = total.sum(axis=1)
    if float(np.abs(row_sums - 1.0).max()) > EXP_ENTRY_TOL:
        total = total / row_sums[:, None]
    return StochMatrix(total)


def first_order_N(Q: GeneratorMatrix, eps: float) -> StochMatrix:
    """First-order approximation I + eps * Q (diagonal 1 - eps).

    Requires 0 <= eps <= 1; outside that range the result leaves the simplex.
    """
    if not 0.0 <= eps <= 1.0:
        raise ValidationError("eps must lie in [0, 1]: I + eps*Q leaves the simplex otherwise")
    return StochMatrix(np.eye(Q.dim) + eps * Q.entries)


def stationary_distribution(
    M: StochMatrix, tol: float = 1e-12, max_iter: int = 1_000_000
) -> ProbVector:
    """Stationary distribution of M by power iteration from the uniform vector.

    A deterministic ramp probe ((1..s)/sum) is iterated in lockstep and both
    iterates must be tol-stable before the uniform-start limit is returned.
    The probe keeps period-2 oscillations from being masked by symmetric
    starts that happen to be fixed points.

    Raises
    ------
    ConvergenceError
        If either iterate is still moving after ``max_iter`` steps, which
        signals a periodic or otherwise non-mixing chain.
    """
    P = M.entries
    s = M.dim
    v = np.full(s, 1.0 / s)
    probe = np.arange(1, s + 1, dtype=float)
    probe /= probe.sum()
    for _ in range(max_iter):
        v_next = v @ P
        v_next /= v_next.sum()
        probe_next = probe @ P
        probe_next /= probe_next.sum()
        if (
            float(np.abs(v_next - v).sum()) <= tol
            and float(np.abs(probe_next - probe).sum()) <= tol
        ):
            return ProbVector(v_next)
        v = v_next
        probe = probe_next
    raise ConvergenceError(
        f"power iteration did not stabilize within {max_iter} iterations at tol={tol}; "
        "the chain is likely periodic or reducible"
    )


def fundamental_sum_apply(Mbar: np.ndarray, mu0: ProbVector) -> float:
    """Evaluate mu0 (I - Mbar)^-1 1 for a sub-stochastic Mbar.

    Equals the Neumann series sum_{n>=1} mu0 Mbar^(n-1) 1, i.e. the expected
    number of steps to absorption. Computed by a dense LU solve; a pivot
    below ``SINGULAR_PIVOT_TOL`` means absorption never happens from some
    state.

    Raises
    ------
    InfiniteExpectedTimeError
        If (I - Mbar) is numerically singular.
    """
    Mbar = np.asarray(Mbar, dtype=float)
    if Mbar.ndim != 2 or Mbar.shape[0] != Mbar.shape[1] or Mbar.shape[0] < 1:
        raise ValidationError("Mbar must be a non-empty square matrix")
    if np.any(Mbar < 0.0):
        raise ValidationError("Mbar entries must be >= 0")
    if np.any(Mbar.sum(axis=1) > 1.0 + ROW_SUM_TOL):
        raise ValidationError("Mbar row sums must be <= 1")
    if mu0.dim != Mbar.shape[0]:
        raise ValidationError("mu0 dimension must match Mbar")
    A = np.eye(Mbar.shape[0]) - Mbar
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(A)
    if float(np.abs(np.diag(lu)).min()) < SINGULAR_PIVOT_TOL:
        raise InfiniteExpectedTimeError(
            "I - Mbar is singular to working precision: infinite expected time"
        )
    x = lu_solve((lu, piv), np.ones(Mbar.shape[0]))
    return float(mu0.entries @ x)


def random_generator_matrix(s: int, seed: int) -> GeneratorMatrix:
    """Random generator: off-diagonal uniforms normalized per row, diagonal -1.

    Deterministic given (s, seed). Draw order is row-major, one block of s-1
    uniforms per row, skipping the diagonal.
    """
    if s < 2:
        raise ValidationError("s must be >= 2")
    rng = np.random.default_rng(seed)
    Q = np.zeros((s, s))
    for i in range(s):
        off = rng.random(s - 1)
        off = off / off.sum()
        Q[i, :i] = off[:i]
        Q[i, i + 1 :] = off[i:]
        Q[i, i] = -1.0
    return GeneratorMatrix(Q)
