"""Shared fixtures: the s=2 and s=3 reference systems."""

from __future__ import annotations

import pytest

from rdsync import GeneratorMatrix, RdsSpec, RmsSpec, random_generator_matrix

from refsystems import Q2_ENTRIES, make_rds


@pytest.fixture(scope="session")
def dec1() -> RdsSpec:
    """First weighted-map family of the reference mean matrix: swap, identity, all-to-2."""
    return make_rds([(2, 1), (1, 2), (2, 2)], [0.6, 0.2, 0.2])


@pytest.fixture(scope="session")
def dec2() -> RdsSpec:
    """Second family of the same mean matrix: swap, identity, all-to-1, all-to-2."""
    return make_rds([(2, 1), (1, 2), (1, 1), (2, 2)], [0.5, 0.1, 0.1, 0.3])


@pytest.fixture(scope="session")
def q2() -> GeneratorMatrix:
    return GeneratorMatrix(Q2_ENTRIES)


@pytest.fixture(scope="session")
def rms_ref(dec1, q2) -> RmsSpec:
    """The s=2 reference perturbed system at eps=0.01."""
    return RmsSpec(rds=dec1, Q=q2, eps=0.01)


@pytest.fixture(scope="session")
def s3_rds() -> RdsSpec:
    """s=3 reference family: a 3-cycle, a constant, the identity, and a partial map."""
    return make_rds([(2, 3, 1), (1, 1, 1), (1, 2, 3), (1, 1, 3)], [0.4, 0.2, 0.2, 0.2])


@pytest.fixture(scope="session")
def s3_rms(s3_rds) -> RmsSpec:
    return RmsSpec(rds=s3_rds, Q=random_generator_matrix(3, seed=7), eps=0.01)
