import dataclasses

import numpy as np
import pytest

from corralsim import EllipseGeometry
from corralsim.modes import EVEN_44, ODD_15, build_mode
from corralsim.modes import _fill_cache


@pytest.fixture(scope="session")
def geom():
    return EllipseGeometry(14.25, 0.5)


@pytest.fixture(scope="session")
def odd_mode(geom):
    return build_mode(ODD_15, geom)


@pytest.fixture(scope="session")
def even_mode(geom):
    return build_mode(EVEN_44, geom)


@pytest.fixture(scope="session")
def cached_modes(geom, odd_mode, even_mode):
    """The preset mode pair with 1024-node evaluation caches."""
    m1 = dataclasses.replace(
        odd_mode, cache=_fill_cache(odd_mode.angular, geom, odd_mode.norm, 1024)
    )
    m2 = dataclasses.replace(
        even_mode, cache=_fill_cache(even_mode.angular, geom, even_mode.norm, 1024)
    )
    return m1, m2


@pytest.fixture(scope="session")
def interior_points(geom):
    """Sampler of seeded uniform interior points, optionally margin mm off the rim."""

    def sample(n, seed, margin=0.0):
        rng = np.random.default_rng(seed)
        ax, by = geom.a - margin, geom.b - margin
        pts = np.empty((n, 2))
        k = 0
        while k < n:
            x = rng.uniform(-geom.a, geom.a)
            y = rng.uniform(-geom.b, geom.b)
            if (x / ax) ** 2 + (y / by) ** 2 <= 1.0:
                pts[k] = (x, y)
                k += 1
        return pts

    return sample
