"""Poisson-type averaging functionals and Muckenhoupt-type constants.

Three fractional Poisson integrals of a discrete measure relative to a
quasicube (standard, reproducing, and moment-weighted), and the family of
Muckenhoupt constants built from them: the offset product over neighbouring
cells, the one-tailed constants with a hole, the punctured constants that
discard the largest common point mass, and the energy variants weighted by
Haar coordinate projections.

Every supremum is over an explicitly enumerated finite cube family, so the
computed values are certified lower bounds for the corresponding constants;
callers that check inequalities keep the same family on both sides.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .haar import HaarSystem
from .measure import common_point_masses, cube_mass, punctured_mass

__all__ = [
    "FracParams",
    "MuckenhouptReport",
    "poisson_standard",
    "poisson_reproducing",
    "poisson_m_weighted",
    "offset_A2",
    "one_tailed_A2",
    "one_tailed_A2_dual",
    "punctured_A2",
    "punctured_A2_dual",
    "energy_A2",
    "energy_A2_dual",
    "plugged_energy_A2",
    "plugged_energy_A2_dual",
    "muckenhoupt_report",
]


@dataclass(frozen=True)
class FracParams:
    """Fractional order alpha in [0, dim) plus the kernel smoothness order
    used by the moment-weighted Poisson integral (the 1+delta tail)."""

    dim: int
    alpha: float
    smoothness: float = 1.0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (0.0 <= self.alpha < self.dim):
            raise ValueError(
                "alpha must lie in [0, dim) = [0, %d), got %r" % (self.dim, self.alpha)
            )
        if self.smoothness <= 0:
            raise ValueError("smoothness must be positive")

    @property
    def volume_exponent(self):
        """|Q|^(1 - alpha/n) as a power of the side length: n - alpha."""
        return self.dim - self.alpha


def _distances(cube, points):
    return np.linalg.norm(points - cube.image_center()[None, :], axis=1)


def poisson_standard(cube, mu, params, mask=None):
    """P^alpha(Q, mu) = sum of mass * s / (s + |x - x_Q|)^(n+1-alpha),
    s the side length, x_Q the image center."""
    pts, ms = _selected(mu, mask)
    if pts.shape[0] == 0:
        return 0.0
    s = cube.side
    d = _distances(cube, pts)
    return float((ms * s / (s + d) ** (params.dim + 1 - params.alpha)).sum())


def poisson_reproducing(cube, mu, params, mask=None):
    """Reproducing variant: sum of mass * (s / (s + |x - x_Q|)^2)^(n-alpha)."""
    pts, ms = _selected(mu, mask)
    if pts.shape[0] == 0:
        return 0.0
    s = cube.side
    d = _distances(cube, pts)
    return float((ms * (s / (s + d) ** 2) ** (params.dim - params.alpha)).sum())


def poisson_m_weighted(cube, mu, params, m, mask=None):
    """Moment-weighted variant: sum of mass * s^m / (s + |y - c_J|)^(n+m-alpha);
    m = 1 recovers poisson_standard."""
    if m <= 0:
        raise ValueError("moment order m must be positive")
    pts, ms = _selected(mu, mask)
    if pts.shape[0] == 0:
        return 0.0
    s = cube.side
    d = _distances(cube, pts)
    return float((ms * s ** m / (s + d) ** (params.dim + m - params.alpha)).sum())


def _selected(mu, mask):
    if mask is None:
        return mu.points, mu.masses
    return mu.points[mask], mu.masses[mask]


def _family(cube_family, sigma, omega):
    """Accept an explicit list of cubes or a grid (all cells holding atoms)."""
    if hasattr(cube_family, "active_cubes"):
        return cube_family.active_cubes(sigma, omega)
    return list(cube_family)


def offset_A2(sigma, omega, params, grid, level_range=None, details=False):
    """Sup over neighbouring equal-side cell pairs of
    (|Q|_sigma / |Q|^(1-alpha/n)) * (|Q'|_omega / |Q|^(1-alpha/n))."""
    import itertools

    lo, hi = (0, grid.depth) if level_range is None else level_range
    offsets = None
    best, witness = 0.0, None
    seen_pair = False
    for level in range(lo, hi + 1):
        if len(sigma) == 0 or len(omega) == 0:
            break
        smass = _cell_masses(grid, sigma, level)
        omass = _cell_masses(grid, omega, level)
        if not smass or not omass:
            continue
        if offsets is None:
            offsets = [
                off for off in itertools.product((-1, 0, 1), repeat=grid.dim) if any(off)
            ]
        vol = grid.level_side(level) ** params.volume_exponent
        for idx, sm in smass.items():
            for off in offsets:
                jdx = tuple(i + o for i, o in zip(idx, off))
                om = omass.get(jdx)
                if om is None:
                    continue
                seen_pair = True
                term = (sm / vol) * (om / vol)
                if term > best:
                    best, witness = term, (level, idx, jdx)
    if not seen_pair:
        warnings.warn("offset constant: no neighbour pair carries both measures")
    return (best, witness) if details else best


def _cell_masses(grid, mu, level):
    return {
        idx: float(mu.masses[ids].sum()) for idx, ids in grid.cell_map(mu.points, level).items()
    }


def one_tailed_A2(sigma, omega, params, cube_family, details=False):
    """Sup over cubes of P_repro(Q, sigma outside Q) * |Q|_omega / |Q|^(1-alpha/n)."""
    best, witness = 0.0, None
    for cube in _family(cube_family, sigma, omega):
        om = cube_mass(omega, cube)
        if om == 0.0:
            continue
        outside = ~cube.contains_points(sigma.points) if len(sigma) else None
        tail = poisson_reproducing(cube, sigma, params, mask=outside) if len(sigma) else 0.0
        term = tail * om / cube.side ** params.volume_exponent
        if term > best:
            best, witness = term, cube.key
    return (best, witness) if details else best


def one_tailed_A2_dual(sigma, omega, params, cube_family, details=False):
    return one_tailed_A2(omega, sigma, params, cube_family, details=details)


def punctured_A2(sigma, omega, params, cube_family, common=None, details=False):
    """Sup over cubes of omega(Q, P) * |Q|_sigma / |Q|^(2(1-alpha/n)), with P
    the common points of the pair and omega(Q, P) the punctured mass."""
    if common is None:
        common = common_point_masses(sigma, omega)
    best, witness = 0.0, None
    for cube in _family(cube_family, sigma, omega):
        sm = cube_mass(sigma, cube)
        if sm == 0.0:
            continue
        om = punctured_mass(omega, cube, common)
        if om == 0.0:
            continue
        term = sm * om / cube.side ** (2 * params.volume_exponent)
        if term > best:
            best, witness = term, cube.key
    return (best, witness) if details else best


def punctured_A2_dual(sigma, omega, params, cube_family, common=None, details=False):
    return punctured_A2(omega, sigma, params, cube_family, common=common, details=details)


def energy_A2(sigma, omega, params, grid, cube_family=None, system=None, details=False):
    """Sup over cubes of ||P_Q (x/l(Q))||^2_omega * |Q|_sigma / |Q|^(2(1-alpha/n)),
    the Haar projection truncated at grid depth."""
    if system is None:
        system = HaarSystem(grid, omega)
    acc = system.accumulate_subtree(system.coordinate_norms())
    cubes = _family(grid if cube_family is None else cube_family, sigma, omega)
    best, witness = 0.0, None
    for cube in cubes:
        proj = acc.get(cube.key, 0.0)
        if proj == 0.0:
            continue
        sm = cube_mass(sigma, cube)
        if sm == 0.0:
            continue
        term = (proj / cube.side ** 2) * sm / cube.side ** (2 * params.volume_exponent)
        if term > best:
            best, witness = term, cube.key
    return (best, witness) if details else best


def energy_A2_dual(sigma, omega, params, grid, cube_family=None, system=None, details=False):
    return energy_A2(omega, sigma, params, grid, cube_family=cube_family,
                     system=system, details=details)


def plugged_energy_A2(sigma, omega, params, grid, cube_family=None, system=None,
                      details=False):
    """Sup over cubes of ||P_Q (x/l(Q))||^2_omega / |Q|^(1-alpha/n) * P_repro(Q, sigma),
    with the full sigma (no hole)."""
    if system is None:
        system = HaarSystem(grid, omega)
    acc = system.accumulate_subtree(system.coordinate_norms())
    cubes = _family(grid if cube_family is None else cube_family, sigma, omega)
    best, witness = 0.0, None
    for cube in cubes:
        proj = acc.get(cube.key, 0.0)
        if proj == 0.0:
            continue
        tail = poisson_reproducing(cube, sigma, params)
        term = (proj / cube.side ** 2) / cube.side ** params.volume_exponent * tail
        if term > best:
            best, witness = term, cube.key
    return (best, witness) if details else best


def plugged_energy_A2_dual(sigma, omega, params, grid, cube_family=None, system=None,
                           details=False):
    return plugged_energy_A2(omega, sigma, params, grid, cube_family=cube_family,
                             system=system, details=details)


@dataclass
class MuckenhouptReport:
    """All Muckenhoupt-type constants of a pair over one declared cube family."""

    offset: float = 0.0
    one_tailed: float = 0.0
    one_tailed_dual: float = 0.0
    punctured: float = 0.0
    punctured_dual: float = 0.0
    energy: float = 0.0
    energy_dual: float = 0.0
    plugged_energy: float = 0.0
    plugged_energy_dual: float = 0.0
    family: str = ""
    witnesses: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "offset_A2": self.offset,
            "one_tailed_A2": self.one_tailed,
            "one_tailed_A2_dual": self.one_tailed_dual,
            "punctured_A2": self.punctured,
            "punctured_A2_dual": self.punctured_dual,
            "energy_A2": self.energy,
            "energy_A2_dual": self.energy_dual,
            "plugged_energy_A2": self.plugged_energy,
            "plugged_energy_A2_dual": self.plugged_energy_dual,
            "cube_family": self.family,
            "witnesses": {k: repr(v) for k, v in self.witnesses.items()},
        }


def muckenhoupt_report(sigma, omega, params, grid):
    """Compute every constant over the family of grid cells holding atoms."""
    family = grid.active_cubes(sigma, omega)
    descriptor = "grid cells of depth <= %d holding atoms (%d cubes)" % (
        grid.depth, len(family))
    sys_o = HaarSystem(grid, omega) if len(omega) else None
    sys_s = HaarSystem(grid, sigma) if len(sigma) else None
    report = MuckenhouptReport(family=descriptor)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report.offset, w_off = offset_A2(sigma, omega, params, grid, details=True)
    report.one_tailed, w1 = one_tailed_A2(sigma, omega, params, family, details=True)
    report.one_tailed_dual, w2 = one_tailed_A2_dual(sigma, omega, params, family, details=True)
    report.punctured, w3 = punctured_A2(sigma, omega, params, family, details=True)
    report.punctured_dual, w4 = punctured_A2_dual(sigma, omega, params, family, details=True)
    if sys_o is not None:
        report.energy, w5 = energy_A2(sigma, omega, params, grid, family, sys_o, details=True)
        report.plugged_energy, w7 = plugged_energy_A2(
            sigma, omega, params, grid, family, sys_o, details=True)
    else:
        w5 = w7 = None
    if sys_s is not None:
        report.energy_dual, w6 = energy_A2_dual(
            sigma, omega, params, grid, family, sys_s, details=True)
        report.plugged_energy_dual, w8 = plugged_energy_A2_dual(
            sigma, omega, params, grid, family, sys_s, details=True)
    else:
        w6 = w8 = None
    report.witnesses = {
        "offset_A2": w_off, "one_tailed_A2": w1, "one_tailed_A2_dual": w2,
        "punctured_A2": w3, "punctured_A2_dual": w4, "energy_A2": w5,
        "energy_A2_dual": w6, "plugged_energy_A2": w7, "plugged_energy_A2_dual": w8,
    }
    return report
