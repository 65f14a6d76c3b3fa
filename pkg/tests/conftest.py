"""Shared fixtures: a few domains reused across modules."""

import pytest
from hypothesis import settings

from cuspwidth.domain import DomainSpec
from cuspwidth.hset import build

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def cusp3():
    """ψ = 2 − dist(x′, Γ)^{1/2}, Γ the θ=1 Cantor dust in the unit square."""
    return DomainSpec.hset_cusp(build(1.0, 3, 8), 2.0)


@pytest.fixture(scope="session")
def cusp2():
    """ψ = 2 − dist(x₁, Γ)^{1/3}, Γ a θ=1/2 Cantor set in [0, 1]."""
    return DomainSpec.hset_cusp(build(0.5, 2, 12), 3.0)


@pytest.fixture(scope="session")
def flat2():
    return DomainSpec.constant(2)


@pytest.fixture(scope="session")
def centered3():
    """The centred-cube domain used for bump families."""
    return DomainSpec.hset_cusp(build(1.0, 3, 7, origin=-0.5), 2.0)
