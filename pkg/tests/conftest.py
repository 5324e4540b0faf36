"""Shared fixtures: identity-map grids, parameter bundles, measure builders."""

import numpy as np
import pytest

from twoweight.measure import DiscreteMeasure
from twoweight.poisson import FracParams
from twoweight.quasigeom import DyadicQuasigrid, GoodnessParams, make_map


def unit_grid(dim, depth=3, center=None, offset=None):
    """Identity-map dyadic grid on a unit cube centered at the origin."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    return DyadicQuasigrid(make_map(dim, "identity"), c, 1.0, depth,
                           offset=offset)


def box(lo, side, dim):
    """Identity-map quasicube with lower corner lo and the given side."""
    from twoweight.quasigeom import QuasiCube

    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,))
    return QuasiCube(make_map(dim, "identity"), lo + side / 2.0, side)


def atoms(points, masses=None, dim=None):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] == 0 and dim is not None:
        pts = pts.reshape(0, dim)
    if masses is None:
        masses = np.ones(pts.shape[0])
    return DiscreteMeasure(pts, masses, dim=dim)


def random_measure(grid, rng, count, margin=1e-3):
    """Atoms uniform in the top preimage box, lognormal masses."""
    lo = grid.top_lo + margin * grid.top().side
    hi = grid.top_lo + (1.0 - margin) * grid.top().side
    pre = rng.uniform(lo, hi, size=(count, grid.dim))
    masses = np.exp(rng.normal(0.0, 0.7, size=count))
    return DiscreteMeasure(grid.map.forward(pre), masses)


@pytest.fixture
def grid1():
    return unit_grid(1, depth=3)


@pytest.fixture
def grid2():
    return unit_grid(2, depth=3)


@pytest.fixture
def params1():
    return FracParams(1, 0.0)


@pytest.fixture
def params2():
    return FracParams(2, 0.5)


@pytest.fixture
def goodness():
    return GoodnessParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20240823)
