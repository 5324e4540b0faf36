"""Upper-half-space measures and Poisson testing integrals.

The deep-cube projections of a stopping forest are collected into an atomic
measure on the upper half-space: one atom per (stopping cube F, deep subcube
J) at the point (center of J, side of J) weighted by the squared Haar
coordinate projection onto the good part of the corona of F below J.  The
companion measure divides each weight by the squared side.  Both Poisson
testing integrals over this measure are exact finite sums, and the tent of a
grid cube contains exactly the atoms of its grid descendants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .haar import HaarSystem
from .quasigeom import is_good, maximal_deep_subcubes

__all__ = [
    "UpperMeasure",
    "build_upper_measure",
    "poisson_extension",
    "dual_poisson",
    "forward_testing",
    "backward_testing",
    "tau_overlap_count",
    "refined_term",
    "functional_energy",
]


@dataclass
class UpperMeasure:
    """Atoms (c_J, l(J)) with projection weights, one per (F, J) pair.

    bar_weights carries the companion weights w / l(J)^2.  truncated flags
    whether any deep family hit the grid depth during construction."""

    grid: object
    f_keys: list
    j_keys: list
    base_points: np.ndarray
    heights: np.ndarray
    weights: np.ndarray
    truncated: bool = False

    def __len__(self):
        return len(self.j_keys)

    @property
    def bar_weights(self):
        return self.weights / self.heights ** 2

    def tent_mask_keys(self, i_key):
        """Atoms whose generating cube is a grid descendant of the cube."""
        return np.array(
            [self.grid.key_contains(i_key, jk) for jk in self.j_keys], dtype=bool)

    def tent_mask_geometric(self, cube):
        """Atoms inside the tent: base point in the cube, height at most the
        side (closed top)."""
        if len(self.j_keys) == 0:
            return np.zeros(0, dtype=bool)
        return cube.contains_points(self.base_points) & (self.heights <= cube.side)

    def tent_mask(self, cube):
        if isinstance(cube.key, tuple) and len(cube.key) == 2 \
                and not isinstance(cube.key[0], str):
            return self.tent_mask_keys(cube.key)
        mask = np.zeros(len(self.j_keys), dtype=bool)
        for i, jk in enumerate(self.j_keys):
            mask[i] = cube.contains_cube(self.grid.cube(*jk), tol=1e-12)
        return mask

    def tent_integral(self, cube):
        """Integral of t^2 over the tent against the companion measure:
        reduces to the plain sum of weights of atoms in the tent."""
        mask = self.tent_mask(cube)
        return float(self.weights[mask].sum())

    def to_dict(self):
        return {
            "schema": 1,
            "atoms": [
                {
                    "F": [fk[0], list(fk[1])],
                    "J": [jk[0], list(jk[1])],
                    "x": [float(v) for v in self.base_points[i]],
                    "t": float(self.heights[i]),
                    "weight": float(self.weights[i]),
                }
                for i, (fk, jk) in enumerate(zip(self.f_keys, self.j_keys))
            ],
            "truncated": self.truncated,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def build_upper_measure(forest, omega, grid, goodness, system=None):
    """Upper-half-space measure of a stopping forest: for each stopping cube
    F and each maximal deeply embedded J inside it, the weight is the squared
    Haar coordinate projection over good cubes of the corona of F below J."""
    system = HaarSystem(grid, omega) if system is None else system
    norms = system.coordinate_norms()
    by_corona = {}
    for key, val in norms.items():
        if val == 0.0 or not is_good(grid.cube(*key), grid, goodness):
            continue
        by_corona.setdefault(forest.corona_of(key), {})[key] = val

    f_keys, j_keys, centers, heights, weights = [], [], [], [], []
    truncated = False
    for f_key in forest.keys:
        f_cube = grid.cube(*f_key)
        family = maximal_deep_subcubes(f_cube, grid, goodness)
        truncated = truncated or family.truncated
        acc = system.accumulate_subtree(by_corona.get(f_key, {}))
        for j_cube in family:
            f_keys.append(f_key)
            j_keys.append(j_cube.key)
            centers.append(j_cube.image_center())
            heights.append(j_cube.side)
            weights.append(acc.get(j_cube.key, 0.0))
    dim = grid.dim
    return UpperMeasure(
        grid, f_keys, j_keys,
        np.asarray(centers, dtype=float).reshape(len(j_keys), dim),
        np.asarray(heights, dtype=float),
        np.asarray(weights, dtype=float),
        truncated,
    )


def poisson_extension(nu, x, t, params, mask=None):
    """Half-space Poisson value of nu at (x, t):
    sum of mass * t / (t^2 + |x-y|^2)^{(n+1-alpha)/2}."""
    if len(nu) == 0:
        return 0.0
    x = np.asarray(x, dtype=float)
    d_sq = ((nu.points - x[None, :]) ** 2).sum(axis=1)
    masses = nu.masses if mask is None else nu.masses * mask
    expo = (params.dim + 1.0 - params.alpha) / 2.0
    return float((masses * t / (t * t + d_sq) ** expo).sum())


def dual_poisson(upper, cube, x, params):
    """Dual Poisson value at x of t 1_tent against the companion measure:
    sum over tent atoms of weight / (t^2 + |x-y|^2)^{(n+1-alpha)/2}."""
    mask = upper.tent_mask(cube)
    if not mask.any():
        return 0.0
    x = np.asarray(x, dtype=float)
    d_sq = ((upper.base_points[mask] - x[None, :]) ** 2).sum(axis=1)
    t_sq = upper.heights[mask] ** 2
    expo = (params.dim + 1.0 - params.alpha) / 2.0
    return float((upper.weights[mask] / (t_sq + d_sq) ** expo).sum())


def forward_testing(cube, sigma, upper, params):
    """(local, global, total) forward Poisson testing sums for the cube:
    squared Poisson extension of the restricted measure against the companion
    weights, split across the tent."""
    if len(upper) == 0:
        return 0.0, 0.0, 0.0
    smask = cube.contains_points(sigma.points)
    vals = np.array([
        poisson_extension(sigma, upper.base_points[i], upper.heights[i],
                          params, mask=smask)
        for i in range(len(upper))
    ])
    terms = vals ** 2 * upper.bar_weights
    tent = upper.tent_mask(cube)
    local = float(terms[tent].sum())
    glob = float(terms[~tent].sum())
    return local, glob, local + glob


def backward_testing(cube, sigma, upper, params):
    """Backward Poisson testing sum: integral over sigma of the squared dual
    Poisson value of the tent."""
    if len(upper) == 0 or len(sigma) == 0:
        return 0.0
    mask = upper.tent_mask(cube)
    if not mask.any():
        return 0.0
    d_sq = ((sigma.points[:, None, :] - upper.base_points[None, mask, :]) ** 2
            ).sum(axis=2)
    t_sq = upper.heights[mask] ** 2
    expo = (params.dim + 1.0 - params.alpha) / 2.0
    q_vals = (upper.weights[mask][None, :] / (t_sq[None, :] + d_sq) ** expo
              ).sum(axis=1)
    return float((sigma.masses * q_vals ** 2).sum())


def tau_overlap_count(cube, upper):
    """Number of distinct stopping cubes F owning a positively weighted atom
    whose cube lies inside the given cube while F strictly contains it."""
    i_key = cube.key
    seen = set()
    for f_key, j_key, w in zip(upper.f_keys, upper.j_keys, upper.weights):
        if w <= 0.0 or f_key == i_key:
            continue
        if upper.grid.key_contains(i_key, j_key) and \
                upper.grid.key_contains(f_key, i_key):
            seen.add(f_key)
    return len(seen)


def refined_term(alt_cube, sigma, upper, params):
    """Cross-corona energy sum of an alternate cube: atoms whose cube lies
    inside it but whose stopping cube strictly contains one of its
    constituent grid cells, each weighted by the squared cube Poisson of the
    restricted measure over the squared side."""
    from .poisson import poisson_standard

    grid = upper.grid
    _, lvl, corner = alt_cube.key
    cells = []
    for bits in _corners(grid.dim):
        idx = tuple(c + b for c, b in zip(corner, bits))
        if all(0 <= i < (1 << lvl) for i in idx):
            cells.append((lvl, idx))
    smask = alt_cube.contains_points(sigma.points)
    total = 0.0
    for f_key, j_key, w in zip(upper.f_keys, upper.j_keys, upper.weights):
        if w == 0.0:
            continue
        if not any(f_key != cell and grid.key_contains(f_key, cell)
                   for cell in cells):
            continue
        j_cube = grid.cube(*j_key)
        if not alt_cube.contains_cube(j_cube, tol=1e-12):
            continue
        p = poisson_standard(j_cube, sigma, params, mask=smask)
        total += (p / j_cube.side) ** 2 * w
    return total


def _corners(dim):
    import itertools

    return itertools.product((0, 1), repeat=dim)


def functional_energy(sigma, upper, params, details=False):
    """Largest ratio of the deep projection-weighted squared cube Poisson sum
    against the squared norm of the density: the exact top singular value of
    the weighted kernel matrix for the stored (F, J) family."""
    active = upper.weights > 0.0
    if not active.any() or len(sigma) == 0:
        return (0.0, None) if details else 0.0
    rows = []
    expo = params.dim + 1.0 - params.alpha
    sqrt_sigma = np.sqrt(sigma.masses)
    for i in np.flatnonzero(active):
        j_cube = upper.grid.cube(*upper.j_keys[i])
        s = j_cube.side
        d = np.linalg.norm(sigma.points - j_cube.image_center()[None, :], axis=1)
        kern = s / (s + d) ** expo
        rows.append(np.sqrt(upper.weights[i]) / s * kern * sqrt_sigma)
    mat = np.vstack(rows)
    svals = np.linalg.svd(mat, compute_uv=False)
    value = float(svals[0])
    if details:
        u = np.linalg.svd(mat)[2][0]
        return value, u / sqrt_sigma
    return value
