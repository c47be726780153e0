"""Exact mutual information between a leader path and its perturbed follower.

The joint law of the two paths is Markov with kernel W while the marginals
are Markov with kernels M (leader) and MN (follower), so the path mutual
information decomposes additively: each step adds the expectation of the
one-step MI matrix under the current pair-state distribution. This module
computes that one-step matrix, the accumulated sequence, its asymptotic
slope under the stationary pair law, and a brute-force path enumerator used
as an oracle. All values are in nats; 0 ln 0 = 0 throughout.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, ValidationError
from .rds_model import RmsSpec, mean_matrix
from .stochastic_core import ProbVector, StochMatrix
from .two_point import ProductChainMatrix, ProductIndex, build_W

logger = logging.getLogger(__name__)

BRUTE_FORCE_PAIR_LIMIT = 10_000_000


@dataclass(frozen=True, eq=False)
class MiOneStep:
    """One-step mutual information per pair state, in nats."""

    index: ProductIndex
    values: np.ndarray

    def value_at(self, x: int, y: int) -> float:
        return float(self.values[self.index.index_of(x, y)])


def mi_one_step(W: ProductChainMatrix, M: StochMatrix, MN: StochMatrix) -> MiOneStep:
    """MI of one joint transition from each pair state (k, l).

    For each pair state, the joint next-step law is the W row and the
    marginal next-step laws are row k of M and row l of MN; the value is
    sum P ln(P / (M(k,x') MN(l,y'))) over joint outcomes with P > 0. A
    positive joint mass forces both marginals positive, so the logarithm is
    always finite.
    """
    index = W.index
    s = index.dim
    if M.dim != s or MN.dim != s:
        raise ValidationError("marginal kernel dimensions must match the pair index")
    K = W.kernel.entries
    values = np.zeros(index.n_states)
    log = math.log
    for k, (x, y) in enumerate(index.pairs):
        row_m = M.entries[x]
        row_mn = MN.entries[y]
        total = 0.0
        for c, (x2, y2) in enumerate(index.pairs):
            p = K[k, c]
            if p > 0.0:
                total += p * log(p / (row_m[x2] * row_mn[y2]))
        # clamp float dust on factorizing rows
        values[k] = total if total > 0.0 else 0.0
    return MiOneStep(index=index, values=values)


def _kernels(rms: RmsSpec) -> tuple[ProductChainMatrix, StochMatrix, StochMatrix]:
    W = build_W(rms)
    M = mean_matrix(rms.rds)
    MN = StochMatrix(M.entries @ rms.N.entries)
    return W, M, MN


def mi_path(rms: RmsSpec, x0: int, y0: int, n: int) -> np.ndarray:
    """Accumulated mutual information MI(1..n) of the two paths from (x0, y0).

    MI(1) is the one-step value at (x0, y0); each further step adds the
    expectation of the one-step matrix under the pair-state distribution
    propagated by W (as a row vector, never materializing W powers).
    Returns the full length-n sequence.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    W, M, MN = _kernels(rms)
    one = mi_one_step(W, M, MN)
    K = W.kernel.entries
    d = np.zeros(W.index.n_states)
    d[W.index.index_of(x0, y0)] = 1.0
    out = np.empty(n)
    out[0] = one.values @ d
    for t in range(1, n):
        d = d @ K
        out[t] = out[t - 1] + float(one.values @ d)
    return out


def mi_path_averaged(rms: RmsSpec, initial_law: ProbVector, n: int) -> np.ndarray:
    """Convenience wrapper: initial-law weighted sum of the per-start MI curves."""
    index = ProductIndex(rms.dim)
    if initial_law.dim != index.n_states:
        raise ValidationError("initial law must cover all pair states")
    out = np.zeros(n)
    for k, (x0, y0) in enumerate(index.pairs):
        w = float(initial_law.entries[k])
        if w > 0.0:
            out += w * mi_path(rms, x0, y0, n)
    return out


def mi_brute_force(rms: RmsSpec, x0: int, y0: int, n: int) -> float:
    """Path MI by exhaustive enumeration of both state sequences.

    Joint probability of a pair of length-n sequences is the product of W
    transitions from (x0, y0); the marginals are products of M rows and MN
    rows. Exponential in n; guarded to s^(2n) <= 10^7 pairs.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    s = rms.dim
    if s ** (2 * n) > BRUTE_FORCE_PAIR_LIMIT:
        raise ValidationError("brute force size guard exceeded: s^(2n) too large")
    W, M, MN = _kernels(rms)
    K = W.kernel.entries
    index = W.index
    Me = M.entries
    MNe = MN.entries
    log = math.log
    total = 0.0
    for xs in itertools.product(range(s), repeat=n):
        # leader marginal, shared across all follower sequences
        p_x = 1.0
        prev = x0
        for x in xs:
            p_x *= Me[prev, x]
            prev = x
        if p_x == 0.0:
            continue
        for ys in itertools.product(range(s), repeat=n):
            p_joint = 1.0
            px, py = x0, y0
            for x, y in zip(xs, ys):
                p_joint *= K[index.index_of(px, py), index.index_of(x, y)]
                if p_joint == 0.0:
                    break
                px, py = x, y
            if p_joint == 0.0:
                continue
            p_y = 1.0
            prev = y0
            for y in ys:
                p_y *= MNe[prev, y]
                prev = y
            total += p_joint * log(p_joint / (p_x * p_y))
    return total


def _stationary_pair_law(
    K: np.ndarray, tol: float, max_iter: int = 200_000
) -> tuple[np.ndarray, bool]:
    """Stationary law of the coupled kernel by power iteration.

    Returns (law, periodic_flag). A periodic chain is detected by the
    iterate revisiting an earlier point within a small period; the returned
    law is then the average over one period.
    """
    n = K.shape[0]
    d = np.full(n, 1.0 / n)
    window: list[np.ndarray] = []
    for _ in range(max_iter):
        d_next = d @ K
        d_next /= d_next.sum()
        if float(np.abs(d_next - d).sum()) <= tol:
            return d_next, False
        window.append(d)
        if len(window) > 8:
            window.pop(0)
        for period in range(2, len(window) + 1):
            if float(np.abs(d_next - window[-period]).sum()) <= tol:
                cycle = window[-period:] + [d_next]
                avg = np.mean(cycle[:-1], axis=0)
                return avg / avg.sum(), True
        d = d_next
    raise ConvergenceError(
        f"pair-state power iteration did not stabilize within {max_iter} iterations"
    )


def mi_slope(rms: RmsSpec, tol: float = 1e-12) -> float:
    """Asymptotic per-step MI: the stationary expectation of the one-step matrix.

    The pair-state law is obtained by power iteration on W; a periodic
    coupled chain is averaged over one detected period and logged.
    """
    W, M, MN = _kernels(rms)
    one = mi_one_step(W, M, MN)
    law, periodic = _stationary_pair_law(W.kernel.entries, tol)
    if periodic:
        logger.warning("coupled kernel is periodic; slope uses the period-averaged law")
    return float(law @ one.values)
