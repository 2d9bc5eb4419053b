import numpy as np
import pytest

from majorana_rp.geometry import ReflectionGeometry, build_chain
from majorana_rp.gibbs_rp import counterexample_spec
from majorana_rp.hamiltonian import HamiltonianSpec, random_spec


@pytest.fixture
def pair_chain() -> ReflectionGeometry:
    """One site per side, one Majorana per site: ϑ swaps c1 and c2."""
    return build_chain(1, 1)


@pytest.fixture
def two_flavor_chain() -> ReflectionGeometry:
    """Four Majoranas, ϑ: 1↔3, 2↔4."""
    return build_chain(1, 2)


@pytest.fixture
def counterexample() -> HamiltonianSpec:
    return counterexample_spec()


@pytest.fixture
def admissible_four() -> HamiltonianSpec:
    return random_spec(build_chain(1, 2), np.random.default_rng(11), cross_terms=2)


@pytest.fixture
def spin_chain() -> ReflectionGeometry:
    return build_chain(1, 4)
