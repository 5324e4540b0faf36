"""Weighted Haar bases on dyadic quasigrids.

For a grid cube Q whose nonempty children carry masses m_1..m_k, the Haar
space of Q is the mu-orthogonal complement of the constants inside the
child-constant functions on Q; its dimension is k - 1.  Bases are built by
modified Gram-Schmidt on mean-centered child indicators in lexicographic
child order, dropping directions of norm below 1e-12 times the root of the
cube mass.  Any orthonormal choice is valid; this one is deterministic.

Functions in L^2(mu) are represented by their per-atom values, shape (N,) or
(N, d) for vector fields; all projections act componentwise.
"""

from __future__ import annotations

import itertools

import numpy as np

__all__ = [
    "HaarBasis",
    "HaarSystem",
    "build_haar_basis",
    "delta_projection",
    "cube_projection",
    "telescoping_check",
]

NULL_DIRECTION_RTOL = 1e-12


class HaarBasis:
    """Orthonormal mean-zero child-constant functions on one cube."""

    __slots__ = ("key", "child_keys", "child_masses", "funcs")

    def __init__(self, key, child_keys, child_masses, funcs):
        self.key = key
        self.child_keys = child_keys          # nonempty children, lexicographic
        self.child_masses = child_masses      # (k,)
        self.funcs = funcs                    # (dim_Q, k) per-child constants

    @property
    def dimension(self):
        return self.funcs.shape[0]

    def gram_residual(self):
        """Max deviation of <h_a, h_b> from the identity matrix."""
        gram = (self.funcs * self.child_masses) @ self.funcs.T
        return float(np.abs(gram - np.eye(self.dimension)).max())

    def mean_residual(self):
        return float(np.abs(self.funcs @ self.child_masses).max()) if self.dimension else 0.0

    def child_bound_worst(self):
        """Worst |h on child| * sqrt(child mass); at most 1 for unit vectors."""
        if self.dimension == 0:
            return 0.0
        return float((np.abs(self.funcs) * np.sqrt(self.child_masses)).max())


def _orthonormalize(masses, total):
    """Gram-Schmidt over mean-centered child indicators; rows are basis vectors.

    Candidate c is 1 on child c minus its mean mass fraction everywhere, so
    every candidate integrates to zero; exactly one direction degenerates."""
    k = masses.shape[0]
    mass_sum = masses.sum()
    scale = np.sqrt(mass_sum)
    funcs = []
    for c in range(k):
        v = np.full(k, -masses[c] / mass_sum)
        v[c] += 1.0
        for h in funcs:
            v = v - (v * masses) @ h * h
        norm = np.sqrt((v * v * masses).sum())
        if norm > NULL_DIRECTION_RTOL * scale:
            funcs.append(v / norm)
    return np.asarray(funcs).reshape(len(funcs), k)


class HaarSystem:
    """All weighted Haar bases of one measure on one grid.

    Requires every atom to lie inside the top cube.  max_level truncates the
    tree (bases exist for cubes of level < max_level)."""

    def __init__(self, grid, mu, max_level=None):
        if grid.dim != mu.dim:
            raise ValueError("grid and measure dimensions differ")
        self.grid = grid
        self.mu = mu
        self.max_level = grid.depth if max_level is None else min(max_level, grid.depth)
        if len(mu):
            _, valid = grid.locate(mu.points, 0)
            if not valid.all():
                raise ValueError(
                    "atom %d lies outside the top cube" % int(np.flatnonzero(~valid)[0])
                )
        self.cells = grid.atom_cells(mu, self.max_level)
        self.cell_mass = [
            {idx: float(mu.masses[ids].sum()) for idx, ids in level.items()}
            for level in self.cells
        ]
        self.bases = {}
        total = mu.total_mass
        for level in range(self.max_level):
            child_mass = self.cell_mass[level + 1]
            for idx in self.cells[level]:
                child_keys = [
                    tuple(2 * i + b for i, b in zip(idx, bits))
                    for bits in itertools.product((0, 1), repeat=grid.dim)
                ]
                nonempty = [c for c in child_keys if c in child_mass]
                if len(nonempty) < 2:
                    continue
                masses = np.array([child_mass[c] for c in nonempty])
                funcs = _orthonormalize(masses, total)
                if funcs.shape[0]:
                    self.bases[(level, idx)] = HaarBasis((level, idx), nonempty, masses, funcs)
        self._coord_norms = None
        self._coord_coefs = None

    # -- plumbing ----------------------------------------------------------

    def _field(self, f):
        f = np.asarray(f, dtype=np.float64)
        if f.ndim == 1:
            f = f[:, None]
        if f.shape[0] != len(self.mu):
            raise ValueError("per-atom values have wrong length")
        return f

    def _cell_sums(self, f, level):
        """dict cell -> (d,) vector of integrals of f over the cell."""
        weighted = f * self.mu.masses[:, None]
        return {idx: weighted[ids].sum(axis=0) for idx, ids in self.cells[level].items()}

    def atoms_in(self, key):
        level, idx = key
        return self.cells[level].get(idx, np.zeros(0, dtype=np.int64))

    def mass_of(self, key):
        level, idx = key
        return self.cell_mass[level].get(idx, 0.0)

    def expectation(self, f, key):
        """mu-average of f over a cube; (d,) vector (scalar input allowed)."""
        f = self._field(f)
        ids = self.atoms_in(key)
        m = self.mass_of(key)
        if m == 0.0:
            return np.zeros(f.shape[1])
        return (f[ids] * self.mu.masses[ids, None]).sum(axis=0) / m

    # -- projections -------------------------------------------------------

    def coefficients(self, f, key):
        """Haar coefficients <f, h_a> on one cube, shape (dim_Q, d)."""
        basis = self.bases.get(key)
        f = self._field(f)
        if basis is None:
            return np.zeros((0, f.shape[1]))
        sums = self._cell_sums(f, key[0] + 1)
        stack = np.stack([sums.get(c, np.zeros(f.shape[1])) for c in basis.child_keys])
        return basis.funcs @ stack

    def expansion(self, f):
        """All coefficients at once: dict key -> (dim_Q, d)."""
        f = self._field(f)
        out = {}
        for level in range(self.max_level):
            sums = None
            for key, basis in self.bases.items():
                if key[0] != level:
                    continue
                if sums is None:
                    sums = self._cell_sums(f, level + 1)
                stack = np.stack([sums.get(c, np.zeros(f.shape[1])) for c in basis.child_keys])
                out[key] = basis.funcs @ stack
        return out

    def coefficient_norms(self, f):
        """dict key -> squared coefficient mass of Delta_key f (summed over d)."""
        return {key: float((c * c).sum()) for key, c in self.expansion(f).items()}

    def delta_values(self, f, key):
        """(atom ids in Q, per-atom values of Delta_Q f, shape (len(ids), d))."""
        f = self._field(f)
        ids = self.atoms_in(key)
        basis = self.bases.get(key)
        if basis is None or ids.size == 0:
            return ids, np.zeros((ids.size, f.shape[1]))
        coefs = self.coefficients(f, key)
        per_child = basis.funcs.T @ coefs  # (k, d) constants on nonempty children
        child_of = {c: row for c, row in zip(basis.child_keys, per_child)}
        sub, _ = self.grid.locate(self.mu.points[ids], key[0] + 1)
        vals = np.zeros((ids.size, f.shape[1]))
        for row, cell in enumerate(sub):
            vals[row] = child_of.get(tuple(int(v) for v in cell), 0.0)
        return ids, vals

    def project_below(self, f, key):
        """P_K f = sum of Delta_J f over grid J inside K (K included).

        Returns (atom ids in K, values, squared norm); the values use the exact
        telescoping identity (deepest-cell average minus the K average), the
        norm comes from the coefficients."""
        f = self._field(f)
        ids = self.atoms_in(key)
        vals = np.zeros((ids.size, f.shape[1]))
        if ids.size:
            deep_sums = self._cell_sums(f, self.max_level)
            cells, _ = self.grid.locate(self.mu.points[ids], self.max_level)
            ek = self.expectation(f, key)
            for row, cell in enumerate(cells):
                c = tuple(int(v) for v in cell)
                vals[row] = deep_sums[c] / self.cell_mass[self.max_level][c] - ek
        norm_sq = 0.0
        for bkey, coef in self.expansion(f).items():
            if self.grid.key_contains(key, bkey):
                norm_sq += float((coef * coef).sum())
        return ids, vals, norm_sq

    # -- coordinate field caches ------------------------------------------

    def coordinate_norms(self):
        """dict key -> ||Delta_key x||^2 for the position field x (image space)."""
        if self._coord_norms is None:
            self._coord_coefs = self.expansion(self.mu.points)
            self._coord_norms = {
                key: float((c * c).sum()) for key, c in self._coord_coefs.items()
            }
        return self._coord_norms

    def accumulate_subtree(self, norms):
        """dict any-cube-key -> sum of norms over basis keys inside it.

        Walks each contributing key up to the top so lookups are O(1); missing
        keys mean 0."""
        acc = {}
        for (level, idx), v in norms.items():
            key = (level, idx)
            while True:
                acc[key] = acc.get(key, 0.0) + v
                if key[0] == 0:
                    break
                key = self.grid.ancestor_key(key, 1)
        return acc

    # -- diagnostics -------------------------------------------------------

    def parseval_gap(self, f):
        """Relative gap in the truncated-tree Parseval identity: ||f||^2
        against mean term + Haar coefficients + the variance left inside the
        deepest cells."""
        f = self._field(f)
        masses = self.mu.masses
        norm_sq = float((f * f * masses[:, None]).sum())
        top = (0, (0,) * self.grid.dim)
        mean = self.expectation(f, top)
        total = float((mean * mean).sum()) * self.mass_of(top)
        for coef in self.expansion(f).values():
            total += float((coef * coef).sum())
        for ids in self.cells[self.max_level].values():
            cell_mean = (f[ids] * masses[ids, None]).sum(axis=0) / masses[ids].sum()
            resid = f[ids] - cell_mean[None, :]
            total += float((resid * resid * masses[ids, None]).sum())
        scale = max(norm_sq, 1e-300)
        return abs(norm_sq - total) / scale

    def useful_haar_worst(self):
        """Max over bases of |h on child| sqrt(child mass); bounded by 1."""
        worst = 0.0
        for basis in self.bases.values():
            worst = max(worst, basis.child_bound_worst())
        return worst


def build_haar_basis(grid, mu, cube, system=None):
    """Basis of one cube (None when fewer than two nonempty children)."""
    system = system or HaarSystem(grid, mu)
    return system.bases.get(cube.key)


def delta_projection(system, f, cube):
    """Per-atom values of Delta_Q f on the atoms of Q."""
    return system.delta_values(f, cube.key)


def cube_projection(system, f, cube):
    """(atom ids, per-atom values, squared norm) of P_K f."""
    return system.project_below(f, cube.key)


def telescoping_check(system, f, q0, q1, q2):
    """Max residual over atoms of Q0 of
    sum_{Q in [Q1, Q2]} Delta_Q f - (E_{Q0} f - E_{Q2} f), Q0 a child of Q1."""
    if q0.key[0] == 0 or system.grid.ancestor_key(q0.key, 1) != q1.key:
        raise ValueError("Q0 must be a child of Q1")
    if not system.grid.key_contains(q2.key, q1.key):
        raise ValueError("telescoping chain requires Q1 inside Q2")
    f = system._field(f)
    ids = system.atoms_in(q0.key)
    if ids.size == 0:
        return 0.0
    total = np.zeros((ids.size, f.shape[1]))
    key = q1.key
    while True:
        a_ids, vals = system.delta_values(f, key)
        pos = {int(a): row for row, a in enumerate(a_ids)}
        for row, a in enumerate(ids):
            total[row] += vals[pos[int(a)]]
        if key[0] == q2.key[0]:
            break
        key = system.grid.ancestor_key(key, 1)
    target = system.expectation(f, q0.key) - system.expectation(f, q2.key)
    return float(np.abs(total - target[None, :]).max())
