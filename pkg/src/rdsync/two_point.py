"""Coupled two-point kernels and synchronization-time analysis.

Driving two paths with one shared map draw per step yields a Markov chain on
pairs of states. This module builds that coupled kernel for a pair of clean
paths (V) and for a clean path coupled to a noise-perturbed follower (W),
collapses all synchronized pairs into one super-state, extracts the
distribution of the state entered at desynchronization (mu1), computes
expected resynchronization times, and composes them into the renewal
prediction of the long-run synchronized fraction of time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import ValidationError
from .rds_model import RdsSpec, RmsSpec, mean_matrix
from .stochastic_core import ProbVector, StochMatrix, fundamental_sum_apply, snap_unit_interval

KIND_RDS_RDS = "RDS_RDS"
KIND_RDS_RMS = "RDS_RMS"

BLOCK_CHECK_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProductIndex:
    """Canonical ordering of pair states: unsynchronized first, then synchronized.

    Unsynchronized pairs (i, j), i != j, come first in lexicographic order;
    synchronized pairs (i, i) occupy the last s indices, ordered by i.
    States are 0-based.
    """

    dim: int
    pairs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.dim < 2:
            raise ValidationError("ProductIndex needs dim >= 2")
        s = self.dim
        unsync = [(i, j) for i in range(s) for j in range(s) if i != j]
        sync = [(i, i) for i in range(s)]
        pairs = tuple(unsync + sync)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "_lookup", {p: k for k, p in enumerate(pairs)})

    @property
    def n_states(self) -> int:
        return self.dim * self.dim

    @property
    def n_unsync(self) -> int:
        return self.dim * (self.dim - 1)

    def index_of(self, i: int, j: int) -> int:
        return self._lookup[(i, j)]

    def pair_of(self, k: int) -> tuple[int, int]:
        return self.pairs[k]

    def labels(self) -> list[str]:
        """External 1-based labels like '(1,2)'."""
        return [f"({i + 1},{j + 1})" for i, j in self.pairs]


@dataclass(frozen=True, eq=False)
class ProductChainMatrix:
    """The s^2-state coupled kernel with its index and coupling kind."""

    index: ProductIndex
    kernel: StochMatrix
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in (KIND_RDS_RDS, KIND_RDS_RMS):
            raise ValidationError(f"unknown coupling kind {self.kind!r}")
        if self.kernel.dim != self.index.n_states:
            raise ValidationError("kernel dimension must equal the number of pair states")

    @property
    def n_unsync(self) -> int:
        return self.index.n_unsync

    def unsync_block(self) -> np.ndarray:
        """The unsynchronized-to-unsynchronized block (the renewal Mbar)."""
        u = self.n_unsync
        return self.kernel.entries[:u, :u]


@dataclass(frozen=True, eq=False)
class CollapsedMatrix:
    """The coupled kernel with all synchronized pairs merged into one state S.

    Dimension s(s-1)+1; the merged super-state is last. The unsynchronized
    block is untouched by the merge, so hitting-time formulas read it
    directly from here.
    """

    index: ProductIndex
    kernel: StochMatrix
    kind: str

    def __post_init__(self) -> None:
        if self.kernel.dim != self.index.n_unsync + 1:
            raise ValidationError("collapsed kernel dimension must be s(s-1)+1")

    @property
    def n_unsync(self) -> int:
        return self.index.n_unsync

    @property
    def sync_index(self) -> int:
        return self.n_unsync

    def unsync_block(self) -> np.ndarray:
        u = self.n_unsync
        return self.kernel.entries[:u, :u]

    def labels(self) -> list[str]:
        return self.index.labels()[: self.n_unsync] + ["S"]


class SyncRatePrediction(NamedTuple):
    rate: float
    eps_eff: float
    Egamma: Optional[float]


def build_V(rds: RdsSpec) -> ProductChainMatrix:
    """Coupled kernel of two clean paths sharing every map draw.

    Entry ((u,v),(u',v')) = sum_i q_i [maps[i](u) = u'] [maps[i](v) = v'].
    Synchronized rows never reach unsynchronized columns, so the lower-left
    block is identically zero and the lower-right block equals the mean
    matrix.
    """
    index = ProductIndex(rds.dim)
    n = index.n_states
    K = np.zeros((n, n))
    for m, q in zip(rds.maps, rds.weights.entries):
        t = m.target
        for k, (u, v) in enumerate(index.pairs):
            K[k, index.index_of(int(t[u]), int(t[v]))] += q
    return ProductChainMatrix(index=index, kernel=StochMatrix(snap_unit_interval(K)), kind=KIND_RDS_RDS)


def build_W(rms: RmsSpec) -> ProductChainMatrix:
    """Coupled kernel of a clean path and its noise-perturbed follower.

    Entry ((x,y),(x',y')) = sum_i q_i [maps[i](x) = x'] N(maps[i](y), y'):
    the leader moves deterministically under the drawn map, the follower
    lands on the map's target row of N. The synchronized diagonal block must
    equal M Diag(N); that identity is verified before returning.
    """
    rds = rms.rds
    index = ProductIndex(rds.dim)
    s = rds.dim
    n = index.n_states
    N = rms.N.entries
    K = np.zeros((n, n))
    for m, q in zip(rds.maps, rds.weights.entries):
        t = m.target
        for k, (x, y) in enumerate(index.pairs):
            x2 = int(t[x])
            noise_row = N[int(t[y])]
            for y2 in range(s):
                K[k, index.index_of(x2, y2)] += q * noise_row[y2]
    out = ProductChainMatrix(index=index, kernel=StochMatrix(snap_unit_interval(K)), kind=KIND_RDS_RMS)
    u = index.n_unsync
    M = mean_matrix(rds).entries
    expected_sync_block = M * np.diag(N)[None, :]
    got = np.array(
        [[K[u + k, u + j] for j in range(s)] for k in range(s)]
    )
    if float(np.abs(got - expected_sync_block).max()) > BLOCK_CHECK_TOL:
        raise RuntimeError("coupled kernel sync block disagrees with M Diag(N)")
    return out


def collapse(
    P: ProductChainMatrix, pi: Optional[ProbVector] = None
) -> tuple[CollapsedMatrix, Optional[ProbVector]]:
    """Merge all synchronized pairs into one super-state S.

    Unsynchronized rows keep their unsynchronized part and pool their mass
    on synchronized columns into the S column. The S row is the pi-weighted
    average of the synchronized rows (pi is the stationary law of the mean
    matrix, required for the perturbed coupling; ignored for the clean
    coupling, whose S row is (0,...,0,1) regardless).

    Returns the collapsed kernel and mu1, the normalized unsynchronized part
    of the S row: the law of the pair state entered at desynchronization.
    When the total desynchronization mass is 0 (no noise), mu1 is None.
    """
    index = P.index
    s = index.dim
    u = index.n_unsync
    K = P.kernel.entries
    if P.kind == KIND_RDS_RMS:
        if pi is None:
            raise ValidationError("collapsing a perturbed coupling requires pi, the stationary law of M")
        if pi.dim != s:
            raise ValidationError("pi dimension must match the state space")
        pi_entries = pi.entries
    else:
        pi_entries = np.full(s, 1.0 / s)
    C = np.zeros((u + 1, u + 1))
    C[:u, :u] = K[:u, :u]
    C[:u, u] = K[:u, u:].sum(axis=1)
    s_row = pi_entries @ K[u:, :]
    C[u, :u] = s_row[:u]
    C[u, u] = s_row[u:].sum()
    collapsed = CollapsedMatrix(index=index, kernel=StochMatrix(snap_unit_interval(C)), kind=P.kind)
    desync_mass = float(C[u, :u].sum())
    mu1 = ProbVector(C[u, :u] / desync_mass) if desync_mass > 0.0 else None
    return collapsed, mu1


def expected_resync_time(
    P: Union[ProductChainMatrix, CollapsedMatrix], mu0: ProbVector
) -> float:
    """Expected steps to first synchronization from the law mu0 on unsync pairs.

    Reads the unsync block Mbar and evaluates mu0 (I - Mbar)^-1 1. Raises
    InfiniteExpectedTimeError when some unsynchronized state can never reach
    synchronization.
    """
    u = P.n_unsync
    if mu0.dim != u:
        raise ValidationError("mu0 must be supported on the unsynchronized states")
    return fundamental_sum_apply(P.unsync_block(), mu0)


def survival_probability(
    P: Union[ProductChainMatrix, CollapsedMatrix], mu0: ProbVector, n: int
) -> float:
    """P(resynchronization takes at least n steps) = mu0 Mbar^(n-1) 1."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    u = P.n_unsync
    if mu0.dim != u:
        raise ValidationError("mu0 must be supported on the unsynchronized states")
    Mbar = P.unsync_block()
    x = mu0.entries.copy()
    for _ in range(n - 1):
        x = x @ Mbar
    return float(x.sum())


def predicted_sync_rate(
    collapsed: CollapsedMatrix, mu1: Optional[ProbVector]
) -> SyncRatePrediction:
    """Renewal prediction of the long-run synchronized fraction of time.

    eps_eff = 1 - kernel(S, S) is the exact per-step desynchronization
    probability out of the merged synchronized state; Egamma is the expected
    resynchronization time started from mu1. Alternating synchronized
    (mean 1/eps_eff) and desynchronized (mean Egamma) stretches then give
    rate = 1 / (1 + eps_eff * Egamma).

    With zero desynchronization mass the rate is 1 and Egamma undefined.
    """
    if collapsed.kind != KIND_RDS_RMS:
        raise ValidationError("the renewal prediction applies to the perturbed coupling")
    S = collapsed.sync_index
    eps_eff = 1.0 - float(collapsed.kernel.entries[S, S])
    if eps_eff <= 0.0:
        return SyncRatePrediction(rate=1.0, eps_eff=0.0, Egamma=None)
    if mu1 is None:
        raise ValidationError("nonzero desynchronization mass requires mu1")
    Egamma = expected_resync_time(collapsed, mu1)
    rate = 1.0 / (1.0 + eps_eff * Egamma)
    return SyncRatePrediction(rate=rate, eps_eff=eps_eff, Egamma=Egamma)


def survival_brute_force(
    spec: Union[RdsSpec, RmsSpec], mu0: ProbVector, n: int
) -> float:
    """Survival probability by exhaustive enumeration of driving outcomes.

    Walks every sequence of map draws (and, for the perturbed system, every
    follower outcome) over the first n-1 steps and adds up the probability
    of the pair staying unsynchronized throughout. Exponential in n; meant
    as an oracle for small cases, not for production use.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if isinstance(spec, RmsSpec):
        rds = spec.rds
        N = spec.N.entries
    else:
        rds = spec
        N = None
    s = rds.dim
    index = ProductIndex(s)
    u = index.n_unsync
    if mu0.dim != u:
        raise ValidationError("mu0 must be supported on the unsynchronized states")
    targets = [m.target for m in rds.maps]
    weights = rds.weights.entries

    def survive(x: int, y: int, steps_left: int) -> float:
        if steps_left == 0:
            return 1.0
        acc = 0.0
        for t, q in zip(targets, weights):
            x2 = int(t[x])
            if N is None:
                y2 = int(t[y])
                if x2 != y2:
                    acc += q * survive(x2, y2, steps_left - 1)
            else:
                noise_row = N[int(t[y])]
                for y2 in range(s):
                    if y2 != x2 and noise_row[y2] > 0.0:
                        acc += q * noise_row[y2] * survive(x2, y2, steps_left - 1)
        return acc

    total = 0.0
    for k in range(u):
        p0 = float(mu0.entries[k])
        if p0 > 0.0:
            x, y = index.pair_of(k)
            total += p0 * survive(x, y, n - 1)
    return total
