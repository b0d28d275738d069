import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from polyrep import AffineQuadratic, DiscreteMeasure, HarvestPiecewise, Linear2mzw, StrategySpace

sys.path.insert(0, str(Path(__file__).parent))

S11 = StrategySpace.interval(-1.0, 1.0)
S01 = StrategySpace.interval(0.0, 1.0)


def measure(atoms, space=S11, probability=True):
    return DiscreteMeasure.from_atoms(space, atoms, probability=probability)


@pytest.fixture
def s11():
    return S11


@pytest.fixture
def s01():
    return S01


@pytest.fixture
def ex2():
    return Linear2mzw(S11)


@pytest.fixture
def harvest():
    return HarvestPiecewise(S01)


@pytest.fixture
def constant5():
    return AffineQuadratic(S11, a=5.0)


@pytest.fixture
def pstar2():
    return measure([(-1.0, 0.5), (1.0, 0.5)])


@pytest.fixture
def pstar1():
    return measure([(0.0, 1 / 3), (0.5, 1 / 3), (1.0, 1 / 3)], S01)


# Locations on a coarse grid keep hypothesis-generated atoms well separated.
grid_coords = st.integers(-20, 20).map(lambda i: i / 20)


@st.composite
def probability_atoms(draw, min_size=1, max_size=6):
    zs = draw(st.lists(grid_coords, min_size=min_size, max_size=max_size, unique=True))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=len(zs), max_size=len(zs)))
    total = sum(raw)
    return [(z, r / total) for z, r in zip(zs, raw)]


@st.composite
def neighborhood_atoms(draw, alpha=(0.5, 0.5), xs=(-1.0, 1.0)):
    """States of the form sum_j b_j delta_{x_j} + b_{k+1} R with R off {x_j}."""
    k = len(alpha)
    mut_mass = draw(st.one_of(st.just(0.0), st.floats(1e-6, 0.3)))
    raw = draw(st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k))
    betas = [(1 - mut_mass) * r / sum(raw) for r in raw]
    mut_z = draw(st.lists(st.integers(-19, 19).map(lambda i: i / 20), min_size=1, max_size=3, unique=True))
    mut_z = [z for z in mut_z if z not in xs] or [0.0]
    mut_raw = draw(st.lists(st.floats(0.05, 1.0), min_size=len(mut_z), max_size=len(mut_z)))
    atoms = list(zip(xs, betas)) + [(z, mut_mass * r / sum(mut_raw)) for z, r in zip(mut_z, mut_raw)]
    return [(z, w) for z, w in atoms if w > 0]


def random_neighborhood(rng, alpha, xs, off_support, mut_max=0.3):
    """Numpy counterpart of ``neighborhood_atoms`` for bulk sampling."""
    k = len(alpha)
    mut_mass = rng.uniform(0.0, mut_max)
    raw = rng.uniform(0.05, 1.0, k)
    betas = (1 - mut_mass) * raw / raw.sum()
    n_mut = rng.integers(1, 4)
    zs = rng.choice(off_support, size=n_mut, replace=False)
    mw = rng.dirichlet(np.ones(n_mut)) * mut_mass
    return list(zip(xs, betas)) + list(zip(zs, mw))


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    verdicts = getattr(acceptance, "VERDICTS", None)
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for number in sorted(verdicts):
            terminalreporter.write_line(verdicts[number])
