"""Discrete positive measures on R^n and point-mass bookkeeping.

A measure is a finite list of atoms (point, mass) with every mass strictly
positive.  Point identity is exact bitwise equality of float64 coordinates:
two atoms are the same point only if all coordinates match bit for bit, so
common-point detection between two measures is deterministic.  Atoms with
identical coordinates are merged (masses summed) on construction.
"""

from __future__ import annotations

import json
import math

import numpy as np

__all__ = [
    "DiscreteMeasure",
    "CommonPointSet",
    "common_point_masses",
    "cube_mass",
    "punctured_mass",
    "remove_largest_common_atom",
    "greedy_depoint",
]


def _as_points(points, dim):
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        if dim is None and pts.ndim == 2 and pts.shape[1] > 0:
            dim = pts.shape[1]
        return np.zeros((0, dim if dim else 0), dtype=np.float64)
    if pts.ndim == 1:
        # a flat list of scalars is a list of 1-d points
        pts = pts.reshape(-1, 1)
    return np.ascontiguousarray(pts)


class DiscreteMeasure:
    """Finite positive atomic measure on R^n."""

    __slots__ = ("dim", "points", "masses")

    def __init__(self, points, masses, dim=None):
        masses = np.asarray(masses, dtype=np.float64).reshape(-1)
        pts = _as_points(points, dim)
        if dim is None:
            if pts.shape[0] == 0 and pts.shape[1] == 0:
                raise ValueError("dim required for an empty measure")
            dim = pts.shape[1]
        if pts.shape[0] == 0:
            pts = pts.reshape(0, dim)
        if pts.shape[1] != dim:
            raise ValueError(
                "points have dimension %d, expected %d" % (pts.shape[1], dim)
            )
        if pts.shape[0] != masses.shape[0]:
            raise ValueError("got %d points but %d masses" % (pts.shape[0], masses.shape[0]))
        if not np.all(np.isfinite(pts)):
            raise ValueError("non-finite coordinate in points")
        if not np.all(np.isfinite(masses)):
            raise ValueError("non-finite mass")
        if np.any(masses <= 0):
            bad = int(np.flatnonzero(masses <= 0)[0])
            raise ValueError("atom %d: mass must be positive, got %r" % (bad, float(masses[bad])))

        # merge exact duplicates, keeping first-occurrence order
        seen = {}
        order = []
        for i in range(pts.shape[0]):
            key = pts[i].tobytes()
            if key in seen:
                masses[seen[key]] += masses[i]
            else:
                seen[key] = len(order)
                order.append(i)
        if len(order) != pts.shape[0]:
            pts = np.ascontiguousarray(pts[order])
            masses = masses[order]

        self.dim = int(dim)
        self.points = pts
        self.masses = masses
        self.points.setflags(write=False)
        self.masses.setflags(write=False)

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    def __len__(self):
        return self.points.shape[0]

    def __repr__(self):
        return "DiscreteMeasure(dim=%d, atoms=%d, mass=%g)" % (
            self.dim, len(self), self.total_mass)

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def point_keys(self):
        """Bitwise identity key per atom."""
        return [self.points[i].tobytes() for i in range(len(self))]

    def restrict(self, mask):
        """Sub-measure of the atoms selected by a boolean mask or index array."""
        mask = np.asarray(mask)
        if mask.dtype == bool and mask.shape[0] != len(self):
            raise ValueError("mask length mismatch")
        return DiscreteMeasure(self.points[mask], self.masses[mask], dim=self.dim)

    def restrict_to(self, cube):
        return self.restrict(cube.contains_points(self.points))

    def drop_atoms(self, indices):
        keep = np.ones(len(self), dtype=bool)
        keep[np.asarray(list(indices), dtype=int)] = False
        return self.restrict(keep)

    def with_mass(self, index, mass):
        """Copy with one atom's mass replaced (mass must stay positive)."""
        masses = self.masses.copy()
        masses[index] = mass
        return DiscreteMeasure(self.points, masses, dim=self.dim)

    def to_dict(self):
        return {
            "dim": self.dim,
            "atoms": [
                {"x": [float(c) for c in self.points[i]], "mass": float(self.masses[i])}
                for i in range(len(self))
            ],
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ValueError("measure document must be an object")
        if "dim" not in data:
            raise ValueError("dim: missing")
        dim = data["dim"]
        if not isinstance(dim, int) or dim < 1:
            raise ValueError("dim: must be a positive integer, got %r" % (dim,))
        atoms = data.get("atoms", [])
        if not isinstance(atoms, list):
            raise ValueError("atoms: must be a list")
        pts = np.zeros((len(atoms), dim))
        ms = np.zeros(len(atoms))
        for i, atom in enumerate(atoms):
            if not isinstance(atom, dict) or "x" not in atom or "mass" not in atom:
                raise ValueError("atoms[%d]: must be an object with keys 'x' and 'mass'" % i)
            x = atom["x"]
            if len(x) != dim:
                raise ValueError("atoms[%d].x: expected %d coordinates, got %d" % (i, dim, len(x)))
            mass = atom["mass"]
            if not isinstance(mass, (int, float)) or not math.isfinite(mass) or mass <= 0:
                raise ValueError("atoms[%d].mass: must be positive, got %r" % (i, mass))
            pts[i] = x
            ms[i] = mass
        return cls(pts, ms, dim=dim)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class CommonPointSet:
    """Points carrying positive mass in both measures of a pair."""

    __slots__ = ("dim", "points", "_keys")

    def __init__(self, points, dim=None):
        pts = _as_points(points, dim)
        if dim is None:
            if pts.shape[0] == 0:
                raise ValueError("dim required for an empty point set")
            dim = pts.shape[1]
        self.dim = int(dim)
        self.points = pts.reshape(-1, dim)
        self._keys = {self.points[i].tobytes() for i in range(self.points.shape[0])}

    def __len__(self):
        return self.points.shape[0]

    def __contains__(self, point):
        return np.asarray(point, dtype=np.float64).tobytes() in self._keys

    def member_mask(self, measure):
        """Boolean mask over a measure's atoms: which atoms sit on a common point."""
        if len(self) == 0:
            return np.zeros(len(measure), dtype=bool)
        return np.fromiter(
            (k in self._keys for k in measure.point_keys()), dtype=bool, count=len(measure)
        )


def common_point_masses(sigma, omega):
    """Exact coordinate intersection of two supports."""
    if sigma.dim != omega.dim:
        raise ValueError("dimension mismatch: %d vs %d" % (sigma.dim, omega.dim))
    okeys = set(omega.point_keys())
    rows = [i for i, k in enumerate(sigma.point_keys()) if k in okeys]
    return CommonPointSet(sigma.points[rows], dim=sigma.dim)


def cube_mass(mu, cube):
    """Total mass of the atoms of mu lying in the quasicube."""
    if mu.dim != cube.dim:
        raise ValueError("dimension mismatch: measure %d vs cube %d" % (mu.dim, cube.dim))
    if len(mu) == 0:
        return 0.0
    return float(mu.masses[cube.contains_points(mu.points)].sum())


def _common_in_cube(mu, cube, common):
    inside = cube.contains_points(mu.points)
    return inside & common.member_mask(mu)


def punctured_mass(mu, cube, common):
    """|Q|_mu minus the largest common point mass in Q (0 if no common point)."""
    if len(mu) == 0:
        return 0.0
    inside = cube.contains_points(mu.points)
    total = float(mu.masses[inside].sum())
    hit = inside & common.member_mask(mu)
    if not hit.any():
        return total
    return total - float(mu.masses[hit].max())


def remove_largest_common_atom(mu, cube, common):
    """Delete the heaviest common atom in Q (ties by lexicographic coordinates)."""
    hit = _common_in_cube(mu, cube, common)
    idx = np.flatnonzero(hit)
    if idx.size == 0:
        return mu
    top = max(idx, key=lambda i: (mu.masses[i], tuple(-c for c in mu.points[i])))
    return mu.drop_atoms([top])


def greedy_depoint(sigma, omega, cube):
    """Split the common atoms of (sigma, omega) inside Q so the outputs share none.

    Alternately picks the remaining common atom of largest sigma-mass, then of
    largest omega-mass, and so on; a sigma-pick is deleted from omega, an
    omega-pick from sigma.  Both outputs are restricted to Q.  Guarantees
    |Q|_sigma_tilde >= |Q|_sigma / 2 and |Q|_omega_tilde >= omega(Q, P) / 2.
    Ties break by atom enumeration order.
    """
    in_s = cube.contains_points(sigma.points)
    in_o = cube.contains_points(omega.points)
    omega_by_key = {}
    for j in np.flatnonzero(in_o):
        omega_by_key[omega.points[j].tobytes()] = int(j)
    pairs = []  # (sigma atom id, omega atom id) per common point in Q
    for i in np.flatnonzero(in_s):
        j = omega_by_key.get(sigma.points[i].tobytes())
        if j is not None:
            pairs.append((int(i), j))

    drop_from_sigma = []
    drop_from_omega = []
    remaining = list(range(len(pairs)))
    sigma_turn = True
    while remaining:
        if sigma_turn:
            pick = max(remaining, key=lambda t: (sigma.masses[pairs[t][0]], -t))
            drop_from_omega.append(pairs[pick][1])
        else:
            pick = max(remaining, key=lambda t: (omega.masses[pairs[t][1]], -t))
            drop_from_sigma.append(pairs[pick][0])
        remaining.remove(pick)
        sigma_turn = not sigma_turn

    keep_s = in_s.copy()
    keep_s[drop_from_sigma] = False
    keep_o = in_o.copy()
    keep_o[drop_from_omega] = False
    return sigma.restrict(keep_s), omega.restrict(keep_o)
