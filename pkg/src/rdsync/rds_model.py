"""Random dynamical systems as weighted families of deterministic maps.

A deterministic map sends every state to one target state; a weighted family
of such maps drives all paths with one shared draw per step. This module
builds the mean transition matrix of a family, decomposes a given stochastic
matrix into such a family, enumerates and classifies maps by how they
synchronize paths, and attaches an intrinsic-noise kernel N = exp(eps Q) to
form the perturbed system.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .stochastic_core import (
    GeneratorMatrix,
    ProbVector,
    StochMatrix,
    mat_exp,
    snap_unit_interval,
)

DECOMPOSE_RESIDUAL_TOL = 1e-12
DECOMPOSE_TIE_RTOL = 1e-9
MAX_ENUM_DIM = 6


@dataclass(frozen=True, eq=False)
class DeterministicMap:
    """A deterministic transition rule, stored as a 0-based target array.

    ``target[i]`` is the state that state i maps to. The equivalent matrix
    form has exactly one 1 per row.
    """

    target: np.ndarray

    def __post_init__(self) -> None:
        target = np.array(self.target, dtype=np.int64, copy=True)
        target.flags.writeable = False
        if target.ndim != 1 or target.shape[0] < 2:
            raise ValidationError("DeterministicMap target must be a vector of length >= 2")
        s = target.shape[0]
        if np.any(target < 0) or np.any(target >= s):
            raise ValidationError("DeterministicMap targets must be valid 0-based state indices")
        object.__setattr__(self, "target", target)

    @property
    def dim(self) -> int:
        return self.target.shape[0]

    def as_matrix(self) -> np.ndarray:
        """The 0/1 matrix form, derived on demand."""
        out = np.zeros((self.dim, self.dim))
        out[np.arange(self.dim), self.target] = 1.0
        return out

    def key(self) -> tuple[int, ...]:
        return tuple(int(t) for t in self.target)


@dataclass(frozen=True, eq=False)
class RdsSpec:
    """A weighted family of deterministic maps sharing one state space.

    Duplicate maps are merged on construction (weights added), so the stored
    maps are always distinct. Weights must sum to 1.
    """

    maps: tuple[DeterministicMap, ...]
    weights: ProbVector

    def __post_init__(self) -> None:
        maps = tuple(self.maps)
        if not maps:
            raise ValidationError("RdsSpec needs at least one map")
        dims = {m.dim for m in maps}
        if len(dims) != 1:
            raise ValidationError("all maps in an RdsSpec must share one dimension")
        weights = self.weights
        if not isinstance(weights, ProbVector):
            weights = ProbVector(np.asarray(weights, dtype=float))
        if weights.dim != len(maps):
            raise ValidationError("RdsSpec needs one weight per map")
        merged: dict[tuple[int, ...], float] = {}
        order: list[tuple[int, ...]] = []
        by_key: dict[tuple[int, ...], DeterministicMap] = {}
        for m, w in zip(maps, weights.entries):
            k = m.key()
            if k not in merged:
                merged[k] = 0.0
                order.append(k)
                by_key[k] = m
            merged[k] += float(w)
        object.__setattr__(self, "maps", tuple(by_key[k] for k in order))
        object.__setattr__(self, "weights", ProbVector(np.array([merged[k] for k in order])))

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def n_maps(self) -> int:
        return len(self.maps)


@dataclass(frozen=True, eq=False)
class RmsSpec:
    """An RDS plus an intrinsic-noise kernel N = exp(eps Q).

    N is computed from (Q, eps) on construction and cached.
    """

    rds: RdsSpec
    Q: GeneratorMatrix
    eps: float
    N: StochMatrix = field(init=False)

    def __post_init__(self) -> None:
        if self.Q.dim != self.rds.dim:
            raise ValidationError("Q dimension must match the RDS state space")
        if not 0.0 <= self.eps <= 0.5:
            raise ValidationError("eps must lie in [0, 0.5]")
        object.__setattr__(self, "N", mat_exp(self.Q, self.eps))

    @property
    def dim(self) -> int:
        return self.rds.dim


@dataclass(frozen=True)
class MapClassification:
    """Counts and per-map labels from classify_maps."""

    constant: int
    permutation: int
    partial: int
    labels: tuple[str, ...]

    @property
    def total(self) -> int:
        return self.constant + self.permutation + self.partial


def mean_matrix(rds: RdsSpec) -> StochMatrix:
    """Weighted sum of the maps' 0/1 matrices."""
    out = np.zeros((rds.dim, rds.dim))
    for m, w in zip(rds.maps, rds.weights.entries):
        out[np.arange(rds.dim), m.target] += w
    return StochMatrix(snap_unit_interval(out))


def decompose_markov(M: StochMatrix) -> RdsSpec:
    """Decompose a stochastic matrix into weighted deterministic maps.

    Greedy: repeatedly build the map sending each row to its largest
    remaining residual entry (ties resolved toward the lowest state index),
    assign it the minimum of the chosen entries, subtract, and stop once the
    residual mass per row falls below ``DECOMPOSE_RESIDUAL_TOL``. Emits at
    most s*(s-1)+1 maps and reconstructs M within 1e-9.
    """
    s = M.dim
    residual = M.entries.copy()
    maps: list[DeterministicMap] = []
    weights: list[float] = []
    max_maps = s * (s - 1) + 1
    for _ in range(max_maps):
        if float(residual.sum(axis=1).max()) < DECOMPOSE_RESIDUAL_TOL:
            break
        # entries within a relative whisker of the row max count as tied, so
        # float dust from earlier subtractions cannot flip a decimal tie;
        # argmax over the boolean mask picks the first, i.e. lowest index
        row_max = residual.max(axis=1)
        chosen = (residual >= row_max[:, None] * (1.0 - DECOMPOSE_TIE_RTOL)).argmax(axis=1)
        weight = float(residual[np.arange(s), chosen].min())
        if weight <= 0.0:
            raise ValidationError("decomposition stalled: some row has no remaining mass")
        maps.append(DeterministicMap(chosen))
        weights.append(weight)
        residual[np.arange(s), chosen] -= weight
    if float(residual.sum(axis=1).max()) >= DECOMPOSE_RESIDUAL_TOL:
        raise ValidationError("decomposition did not exhaust the matrix within the map budget")
    return RdsSpec(tuple(maps), ProbVector(np.array(weights)))


def perturbed_matrix(D: DeterministicMap, N: StochMatrix) -> StochMatrix:
    """Reposition N's rows by the map: row i of the result is row target[i] of N."""
    if D.dim != N.dim:
        raise ValidationError("map and noise kernel dimensions must match")
    return StochMatrix(N.entries[D.target])


def enumerate_maps(s: int) -> list[DeterministicMap]:
    """All s^s deterministic maps in lexicographic order of target arrays."""
    if not 2 <= s <= MAX_ENUM_DIM:
        raise ValidationError(f"s must lie in [2, {MAX_ENUM_DIM}] for exhaustive enumeration")
    return [DeterministicMap(np.array(t)) for t in itertools.product(range(s), repeat=s)]


def classify_maps(maps: list[DeterministicMap]) -> MapClassification:
    """Label each map constant, permutation, or partial.

    Constant maps send every state to one target (they synchronize all paths
    in one step); permutations are bijections (they never synchronize
    anything); everything else synchronizes some pairs but not all.
    """
    labels: list[str] = []
    counts = {"constant": 0, "permutation": 0, "partial": 0}
    for m in maps:
        t = m.target
        if np.all(t == t[0]):
            label = "constant"
        elif len(set(m.key())) == m.dim:
            label = "permutation"
        else:
            label = "partial"
        counts[label] += 1
        labels.append(label)
    return MapClassification(
        constant=counts["constant"],
        permutation=counts["permutation"],
        partial=counts["partial"],
        labels=tuple(labels),
    )
