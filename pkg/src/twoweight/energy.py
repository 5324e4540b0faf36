"""Energy functionals: second moments, dispersion, deep-energy sums.

The scalar energy of a cube is the normalized standard deviation of position
under the measure.  The k-dimensional second moment M_k is the least-squares
distance to the best k-plane, computed from the covariance eigenvalues and
cross-checkable against a random-orientation search.

The deep-energy machinery evaluates sums of Poisson-weighted Haar coordinate
projections over families of deeply embedded subcubes: the building block of
the strong energy constant (partition and alternate-cube refinement forms)
and of the stopping energy used by the corona construction.  Supremum-type
constants over partitions are reported as certified lower bounds, with the
searched family recorded.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .haar import HaarSystem
from .measure import cube_mass
from .poisson import poisson_standard
from .quasigeom import alternate_quasicubes, is_good, maximal_deep_subcubes

__all__ = [
    "MomentSpectrum",
    "energy",
    "moment_spectrum",
    "mk_bruteforce",
    "is_k_energy_dispersed",
    "EnergyEvaluator",
    "EnergyEstimate",
    "strong_energy_constant",
    "stopping_energy",
]


def energy(cube, omega, grid=None):
    """E(J, omega): sqrt of variance / (mass * side^2) of atoms in J; 0 when
    fewer than two atoms carry mass."""
    inside = cube.contains_points(omega.points)
    pts = omega.points[inside]
    ms = omega.masses[inside]
    total = ms.sum()
    if pts.shape[0] < 2 or total == 0.0:
        return 0.0
    mean = (pts * ms[:, None]).sum(axis=0) / total
    var = float(((pts - mean) ** 2 * ms[:, None]).sum())
    return float(np.sqrt(var / (total * cube.side ** 2)))


@dataclass
class MomentSpectrum:
    """Covariance eigenstructure of a measure restricted to a cube.

    eigenvalues are ascending; M_k^2 is the sum of the n-k smallest, the
    least-squares distance to the best k-plane."""

    center: np.ndarray
    eigenvalues: np.ndarray
    mass: float

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def m_sq(self, k):
        if not (0 <= k < self.dim):
            raise ValueError("k must lie in [0, dim)")
        return float(self.eigenvalues[: self.dim - k].sum())

    def m(self, k):
        return float(np.sqrt(self.m_sq(k)))

    def dispersion_ratio(self, k):
        """M_k / M_0 (1.0 when M_0 = 0: a point mass is vacuously dispersed)."""
        m0 = self.m_sq(0)
        if m0 == 0.0:
            return 1.0
        return float(np.sqrt(self.m_sq(k) / m0))


def moment_spectrum(cube, mu):
    """Eigen-decomposition of the unnormalized covariance of atoms in a cube."""
    inside = cube.contains_points(mu.points)
    pts = mu.points[inside]
    ms = mu.masses[inside]
    total = float(ms.sum())
    dim = mu.dim
    if total == 0.0:
        return MomentSpectrum(np.zeros(dim), np.zeros(dim), 0.0)
    mean = (pts * ms[:, None]).sum(axis=0) / total
    g = pts - mean
    cov = (g * ms[:, None]).T @ g
    eig = np.linalg.eigvalsh(cov)
    return MomentSpectrum(mean, np.maximum(eig, 0.0), total)


def _orientation_value(pts, ms, mean, normals):
    """Squared distance sums to the affine planes with given unit normal sets.

    normals: (m, n, c) stack of orthonormal-normal bundles; for each bundle the
    plane through the center of mass is optimal, so the value is the mass-
    weighted squared norm of the normal components."""
    g = pts - mean
    proj = np.einsum("ij,mjc->imc", g, normals)
    return np.einsum("imc,i->m", proj ** 2, ms)


def mk_bruteforce(cube, mu, k, n_orientations=10000, rng=None, polish=True):
    """Random-orientation search for M_k^2, optionally polished.

    Samples orientations of the (n-k)-dimensional normal bundle; the best
    sample is refined by Nelder-Mead on an angle chart when (n, k) admits a
    one- or two-parameter chart ((2,1), (3,1), (3,2))."""
    rng = np.random.default_rng() if rng is None else rng
    inside = cube.contains_points(mu.points)
    pts = mu.points[inside]
    ms = mu.masses[inside]
    total = float(ms.sum())
    n = mu.dim
    if total == 0.0 or not (1 <= k < n):
        return 0.0
    mean = (pts * ms[:, None]).sum(axis=0) / total
    c = n - k
    raw = rng.standard_normal((n_orientations, n, c))
    normals = np.linalg.qr(raw)[0]
    vals = _orientation_value(pts, ms, mean, normals)
    best = float(vals.min())

    chart = None
    if (n, k) == (2, 1):
        chart = lambda a: np.array([[np.cos(a[0])], [np.sin(a[0])]])
        x0 = [float(np.arctan2(normals[vals.argmin(), 1, 0], normals[vals.argmin(), 0, 0]))]
    elif (n, k) == (3, 2):
        def chart(a):
            t, p = a
            return np.array([[np.sin(t) * np.cos(p)], [np.sin(t) * np.sin(p)], [np.cos(t)]])
        w = normals[vals.argmin(), :, 0]
        x0 = [float(np.arccos(np.clip(w[2], -1, 1))), float(np.arctan2(w[1], w[0]))]
    elif (n, k) == (3, 1):
        # normal bundle is a 2-plane; parametrize by its unit normal (the line kept)
        def chart(a):
            t, p = a
            u = np.array([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])
            return np.linalg.qr(np.eye(3) - np.outer(u, u))[0][:, :2]
        u0 = np.cross(normals[vals.argmin(), :, 0], normals[vals.argmin(), :, 1])
        u0 = u0 / np.linalg.norm(u0)
        x0 = [float(np.arccos(np.clip(u0[2], -1, 1))), float(np.arctan2(u0[1], u0[0]))]

    if polish and chart is not None:
        from scipy.optimize import minimize

        res = minimize(
            lambda a: float(_orientation_value(pts, ms, mean, chart(a)[None, :, :])[0]),
            x0, method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400},
        )
        best = min(best, float(res.fun))
    return best


def is_k_energy_dispersed(mu, k, c, cube_family):
    """(all cubes pass, worst ratio): checks M_k >= c * M_0 on the family,
    ratio minimized over cubes with M_0 > 0."""
    worst = 1.0
    for cube in cube_family:
        spec = moment_spectrum(cube, mu)
        if spec.m_sq(0) == 0.0:
            continue
        worst = min(worst, spec.dispersion_ratio(k))
    return worst >= c, worst


class EnergyEvaluator:
    """Caches for repeated deep-energy evaluation on one (grid, sigma, omega).

    Holds the omega Haar system, coordinate-projection subtree norms (full and
    restricted to good cubes), deep-subcube families per (cube, side gap), and
    sigma cell masses."""

    def __init__(self, grid, sigma, omega, params, goodness):
        self.grid = grid
        self.sigma = sigma
        self.omega = omega
        self.params = params
        self.goodness = goodness
        self.haar = HaarSystem(grid, omega) if len(omega) else None
        if self.haar is not None:
            norms = self.haar.coordinate_norms()
            self.proj_full = self.haar.accumulate_subtree(norms)
            good = {
                key: v for key, v in norms.items()
                if is_good(grid.cube(*key), grid, goodness)
            }
            self.proj_good = self.haar.accumulate_subtree(good)
        else:
            self.proj_full = {}
            self.proj_good = {}
        self._deep = {}
        self._sigma_mass = {}

    def sigma_mass(self, cube):
        key = cube.key
        if key not in self._sigma_mass:
            self._sigma_mass[key] = cube_mass(self.sigma, cube)
        return self._sigma_mass[key]

    def deep_family(self, cube, side_gap=None):
        """Maximal deeply embedded subcubes, side gap r (default) or tau."""
        gap = self.goodness.r if side_gap is None else side_gap
        key = (cube.key, gap)
        if key not in self._deep:
            params = self.goodness if gap == self.goodness.r else replace(
                self.goodness, r=gap)
            self._deep[key] = maximal_deep_subcubes(cube, self.grid, params)
        return self._deep[key]

    def deep_sum(self, pieces, sigma_mask, subgood=False, side_gap=None,
                 hole_gamma=None):
        """Sum over pieces of sum over their deep subcubes J of
        (P^alpha(J, masked sigma minus an optional gamma*J hole) / l(J))^2
        times the Haar coordinate projection norm below J."""
        proj = self.proj_good if subgood else self.proj_full
        total = 0.0
        for piece in pieces:
            if self.proj_full.get(piece.key, 0.0) == 0.0:
                continue
            for j_cube in self.deep_family(piece, side_gap):
                weight = proj.get(j_cube.key, 0.0)
                if weight == 0.0:
                    continue
                mask = sigma_mask
                if hole_gamma is not None:
                    mask = mask & ~j_cube.dilate(hole_gamma).contains_points(
                        self.sigma.points)
                p = poisson_standard(j_cube, self.sigma, self.params, mask=mask)
                if p:
                    total += (p / j_cube.side) ** 2 * weight
        return total


@dataclass
class EnergyEstimate:
    """Certified lower bound for a supremum-type energy constant."""

    value: float
    witness: dict
    partitions_tried: int
    family: str

    def to_dict(self):
        return {
            "value": self.value,
            "witness": self.witness,
            "partitions_tried": self.partitions_tried,
            "family": self.family,
        }


def _random_partition(grid, top_key, rng, p_split, max_pieces=256):
    pieces = []
    stack = [top_key]
    while stack:
        key = stack.pop()
        level, idx = key
        if level < grid.depth and len(pieces) + len(stack) < max_pieces \
                and rng.random() < p_split:
            for bits in itertools.product((0, 1), repeat=grid.dim):
                stack.append((level + 1, tuple(2 * i + b for i, b in zip(idx, bits))))
        else:
            pieces.append(key)
    return pieces


def _refined_family(evaluator, alt_cube, level_up):
    """Deep-family refinement of an alternate cube: members of the deep
    families of the level_up-fold ancestors of its constituent cells that lie
    inside some member of the alternate's own deep family."""
    grid = evaluator.grid
    base = evaluator.deep_family(alt_cube)
    if level_up == 0:
        return list(base)
    _, lvl, corner = alt_cube.key
    if lvl - level_up < 0:
        return []
    out, seen = [], set()
    for bits in itertools.product((0, 1), repeat=grid.dim):
        idx = tuple(c + b for c, b in zip(corner, bits))
        if any(i < 0 or i >= (1 << lvl) for i in idx):
            continue
        anc = grid.cube(*grid.ancestor_key((lvl, idx), level_up))
        for j_cube in evaluator.deep_family(anc):
            if j_cube.key in seen:
                continue
            if any(grid.key_contains(l_cube.key, j_cube.key) for l_cube in base):
                seen.add(j_cube.key)
                out.append(j_cube)
    return out


def strong_energy_constant(sigma, omega, params, goodness, grid, partition_budget=64,
                           rng=None, evaluator=None, extra_partitions=(),
                           include_alternates=True):
    """Lower-bound search for the squared strong energy constant.

    Maximizes the normalized deep-energy sum over (a) the trivial partition of
    every active cube, (b) randomized dyadic stopping partitions within the
    budget, (c) alternate cubes with refinement levels up to tau, and (d) any
    caller-supplied (top key, piece keys) partitions.  Returns the max found:
    a certified lower bound for the supremum over all partitions."""
    rng = np.random.default_rng(0) if rng is None else rng
    ev = evaluator or EnergyEvaluator(grid, sigma, omega, params, goodness)
    best = EnergyEstimate(0.0, {}, 0, "partitions of active grid cubes; alternates to tau=%d"
                          % goodness.tau)
    if ev.haar is None or len(sigma) == 0:
        return best

    tops = [c for c in grid.active_cubes(sigma) if ev.proj_full.get(c.key, 0.0) > 0.0
            and ev.sigma_mass(c) > 0.0]

    def consider(value, witness):
        if value > best.value:
            best.value = value
            best.witness = witness

    tried = 0
    for top in tops:
        mask = top.contains_points(sigma.points)
        val = ev.deep_sum([top], mask) / ev.sigma_mass(top)
        consider(val, {"kind": "trivial", "top": top.key})
        tried += 1

    for b in range(partition_budget if tops else 0):
        top = tops[b % len(tops)]
        p_split = (0.3, 0.5, 0.7)[b % 3]
        piece_keys = _random_partition(grid, top.key, rng, p_split)
        pieces = [grid.cube(*k) for k in piece_keys]
        mask = top.contains_points(sigma.points)
        val = ev.deep_sum(pieces, mask) / ev.sigma_mass(top)
        consider(val, {"kind": "random", "top": top.key, "pieces": len(pieces)})
        tried += 1

    for top_key, piece_keys in extra_partitions:
        top = grid.cube(*top_key)
        mass = ev.sigma_mass(top)
        if mass == 0.0:
            continue
        pieces = [grid.cube(*k) for k in piece_keys]
        mask = top.contains_points(sigma.points)
        val = ev.deep_sum(pieces, mask) / mass
        consider(val, {"kind": "supplied", "top": top_key, "pieces": len(pieces)})
        tried += 1

    if include_alternates:
        for level in range(1, grid.depth + 1):
            cells = grid.cell_map(sigma.points, level).keys()
            if not cells:
                continue
            for alt in alternate_quasicubes(grid, level, cells=cells):
                mask = alt.contains_points(sigma.points)
                mass = float(sigma.masses[mask].sum())
                if mass == 0.0:
                    continue
                for level_up in range(0, goodness.tau + 1):
                    fam = _refined_family(ev, alt, level_up)
                    if not fam:
                        continue
                    total = 0.0
                    for j_cube in fam:
                        weight = ev.proj_full.get(j_cube.key, 0.0)
                        if weight == 0.0:
                            continue
                        p = poisson_standard(j_cube, sigma, params, mask=mask)
                        total += (p / j_cube.side) ** 2 * weight
                    consider(total / mass,
                             {"kind": "alternate", "alt": alt.key, "level_up": level_up})
                    tried += 1
    best.partitions_tried = tried
    return best


def stopping_energy(corona_keys, s_cube, sigma, omega, params, goodness, grid,
                    evaluator=None, details=False):
    """Squared stopping energy of one corona: sup over corona cubes I of
    (1/|I|_sigma) * sum over tau-deep J of
    (P^alpha(J, sigma restricted to S minus gamma*J) / l(J))^2 times the
    good-restricted Haar coordinate projection below J."""
    ev = evaluator or EnergyEvaluator(grid, sigma, omega, params, goodness)
    in_s = s_cube.contains_points(sigma.points)
    best, witness = 0.0, None
    for key in corona_keys:
        cube = grid.cube(*key)
        mass = ev.sigma_mass(cube)
        if mass == 0.0:
            continue
        val = ev.deep_sum([cube], in_s, subgood=True, side_gap=goodness.tau,
                          hole_gamma=goodness.gamma) / mass
        if val > best:
            best, witness = val, key
    return (best, witness) if details else best
