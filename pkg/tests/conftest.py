import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import fkmetric as fk

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@pytest.fixture(scope="session")
def shift2():
    return fk.make_system({"kind": "full_shift", "k": 2, "horizon": 160})


@pytest.fixture(scope="session")
def rotation_half():
    return fk.make_system({"kind": "rotation", "alpha": 0.5})


@pytest.fixture(scope="session")
def rotation_golden():
    return fk.make_system({"kind": "rotation", "alpha": GOLDEN})


@pytest.fixture(scope="session")
def doubling():
    return fk.make_system({"kind": "doubling"})


@pytest.fixture(scope="session")
def all_systems():
    return fk.builtin_systems(n_max=64)
