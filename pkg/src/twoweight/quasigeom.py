"""Quasicube geometry: biLipschitz images of half-open dyadic cubes.

A quasicube is the image of an axis-parallel half-open cube under a fixed
global biLipschitz map.  Everything combinatorial (membership, distances,
parent/child structure, embedding predicates) is decided in the preimage,
where the defining box lives; the map enters only to pull points of R^n back
(membership tests) or to push cube centers forward (kernel evaluations).

Grid cells are addressed by (level, multi-index); index arithmetic gives
exact containment and adjacency even when float coordinates are fuzzy at
representation boundaries.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BiLipschitzMap",
    "make_map",
    "QuasiCube",
    "DyadicQuasigrid",
    "GoodnessParams",
    "DeepFamily",
    "qdist",
    "boundary_qdist",
    "is_deeply_embedded",
    "is_good",
    "is_tau_good",
    "maximal_deep_subcubes",
    "alternate_quasicubes",
    "neighbour_pairs",
]


class BiLipschitzMap:
    """Global biLipschitz change of variables with an exact inverse."""

    __slots__ = ("name", "params", "lip_bound", "_forward", "_inverse")

    def __init__(self, name, params, lip_bound, forward, inverse):
        self.name = name
        self.params = tuple(params)
        self.lip_bound = float(lip_bound)
        self._forward = forward
        self._inverse = inverse

    def forward(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return self._forward(pts)

    def inverse(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        return self._inverse(pts)

    def __eq__(self, other):
        return (
            isinstance(other, BiLipschitzMap)
            and self.name == other.name
            and self.params == other.params
        )

    def __hash__(self):
        return hash((self.name, self.params))

    def __repr__(self):
        return "BiLipschitzMap(%r, params=%r)" % (self.name, self.params)


def _identity(dim):
    fwd = lambda p: p.copy()
    return BiLipschitzMap("identity", (dim,), 1.0, fwd, fwd)


def _shear(dim, strength, frequency):
    # (x1, x') -> (x1, x' + strength*sin(frequency*x1)*u) with u a fixed unit
    # vector of the last dim-1 coordinates; inverse subtracts the same shift.
    if dim < 2:
        raise ValueError("shear needs dim >= 2")
    u = np.ones(dim - 1) / np.sqrt(dim - 1)

    def fwd(p):
        q = p.copy()
        q[:, 1:] += strength * np.sin(frequency * p[:, 0])[:, None] * u
        return q

    def inv(p):
        q = p.copy()
        q[:, 1:] -= strength * np.sin(frequency * p[:, 0])[:, None] * u
        return q

    lip = 1.0 + abs(strength * frequency)
    return BiLipschitzMap("shear", (dim, strength, frequency), lip, fwd, inv)


def _spiral(strength):
    # z -> z * e^{i*strength*ln|z|} in R^2; norm-preserving, so the inverse
    # rotation angle can be recomputed from |w| exactly.
    def rotate(p, sign):
        r = np.sqrt(p[:, 0] ** 2 + p[:, 1] ** 2)
        ang = np.zeros_like(r)
        nz = r > 0
        ang[nz] = sign * strength * np.log(r[nz])
        c, s = np.cos(ang), np.sin(ang)
        return np.stack([c * p[:, 0] - s * p[:, 1], s * p[:, 0] + c * p[:, 1]], axis=1)

    lip = (1.0 + abs(strength)) * 1.1
    return BiLipschitzMap(
        "spiral", (2, strength), lip,
        lambda p: rotate(p, +1.0), lambda p: rotate(p, -1.0),
    )


def make_map(dim, name="identity", **params):
    """Catalog lookup: 'identity', 'shear' (strength, frequency), 'spiral' (strength)."""
    if name == "identity":
        return _identity(dim)
    if name == "shear":
        return _shear(dim, params.get("strength", 0.2), params.get("frequency", 1.0))
    if name == "spiral":
        if dim != 2:
            raise ValueError("spiral map is 2-d only")
        return _spiral(params.get("strength", 0.1))
    raise ValueError("unknown map %r (catalog: identity, shear, spiral)" % (name,))


class QuasiCube:
    """Image of the half-open box prod [c_k - s/2, c_k + s/2) under a map."""

    __slots__ = ("map", "center", "side", "key")

    def __init__(self, map_, center, side, key=None):
        self.map = map_
        self.center = np.asarray(center, dtype=np.float64)
        self.side = float(side)
        self.key = key

    @property
    def dim(self):
        return self.center.shape[0]

    @property
    def lo(self):
        return self.center - self.side / 2.0

    @property
    def hi(self):
        return self.center + self.side / 2.0

    @property
    def volume(self):
        return self.side ** self.dim

    def image_center(self):
        return self.map.forward(self.center[None, :])[0]

    def contains_points(self, pts):
        """Half-open box test on the preimages of image-space points."""
        pts = np.asarray(pts, dtype=np.float64)
        if pts.size == 0:
            return np.zeros(0, dtype=bool)
        pre = self.map.inverse(np.atleast_2d(pts))
        return np.all((pre >= self.lo) & (pre < self.hi), axis=1)

    def contains_cube(self, other, tol=0.0):
        pad = tol * max(self.side, other.side)
        return bool(
            np.all(other.lo >= self.lo - pad) and np.all(other.hi <= self.hi + pad)
        )

    def disjoint_from(self, other):
        return bool(np.any(other.lo >= self.hi) or np.any(self.lo >= other.hi))

    def dilate(self, factor):
        """Concentric dilation gamma*Q (preimage box scaled about its center)."""
        return QuasiCube(self.map, self.center, factor * self.side)

    def translate(self, shift):
        return QuasiCube(self.map, self.center + np.asarray(shift, float), self.side)

    def __eq__(self, other):
        return (
            isinstance(other, QuasiCube)
            and self.map == other.map
            and self.side == other.side
            and np.array_equal(self.center, other.center)
        )

    def __hash__(self):
        return hash((self.map, self.side, self.center.tobytes()))

    def __repr__(self):
        return "QuasiCube(center=%s, side=%g, key=%r)" % (
            np.array2string(self.center, precision=4), self.side, self.key)


@dataclass(frozen=True)
class GoodnessParams:
    """Embedding parameters: depth gap r, boundary exponent eps, shift depth tau,
    hole dilation gamma.  The window 1/r < eps < 1 - 1/r (nonempty from r = 3 on)
    and the shift-exponent bound 0 < delta <= (r*eps - 1)/(r + tau) are enforced
    for r >= 3; smaller r is allowed for exploratory cube families."""

    r: int = 3
    eps: float = 0.5
    tau: int = 4
    gamma: float = 8.0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be >= 1, got %r" % (self.r,))
        if not (0.0 < self.eps < 1.0):
            raise ValueError("eps must lie in (0,1), got %r" % (self.eps,))
        if self.tau < 1:
            raise ValueError("tau must be >= 1, got %r" % (self.tau,))
        if self.gamma < 2.0:
            raise ValueError("gamma must be >= 2, got %r" % (self.gamma,))
        if self.r >= 3:
            if not (1.0 / self.r < self.eps < 1.0 - 1.0 / self.r):
                raise ValueError(
                    "eps must lie in (1/r, 1-1/r) = (%g, %g), got %r"
                    % (1.0 / self.r, 1.0 - 1.0 / self.r, self.eps)
                )
            if self.shift_delta <= 0:
                raise ValueError("derived shift exponent delta must be positive")

    @property
    def shift_delta(self):
        """Largest admissible shift exponent (r*eps - 1)/(r + tau)."""
        return (self.r * self.eps - 1.0) / (self.r + self.tau)


class DyadicQuasigrid:
    """Dyadic tree of quasicubes under one biLipschitz map.

    Cells at level l have side top_side / 2^l and are addressed by a
    multi-index in [0, 2^l)^n; the top cube is level 0.  An optional offset
    translates the whole preimage grid (random shifts of the lattice)."""

    def __init__(self, map_, center, side, depth, offset=None):
        self.map = map_
        center = np.asarray(center, dtype=np.float64)
        if offset is not None:
            center = center + np.asarray(offset, dtype=np.float64)
        self.top_center = center
        self.side = float(side)
        self.depth = int(depth)
        if self.depth < 0:
            raise ValueError("depth must be >= 0")
        self.dim = center.shape[0]
        self.top_lo = self.top_center - self.side / 2.0
        self._good_cache = {}

    def level_side(self, level):
        return self.side / (1 << level)

    def cube(self, level, idx):
        idx = tuple(int(i) for i in idx)
        if level < 0 or level > self.depth:
            raise ValueError("level %d outside grid depth %d" % (level, self.depth))
        if any(i < 0 or i >= (1 << level) for i in idx):
            raise ValueError("index %r outside level-%d grid" % (idx, level))
        h = self.level_side(level)
        center = self.top_lo + (np.asarray(idx, dtype=np.float64) + 0.5) * h
        return QuasiCube(self.map, center, h, key=(level, idx))

    def top(self):
        return self.cube(0, (0,) * self.dim)

    def children(self, cube):
        level, idx = cube.key
        if level >= self.depth:
            return []
        return [
            self.cube(level + 1, tuple(2 * i + b for i, b in zip(idx, bits)))
            for bits in itertools.product((0, 1), repeat=self.dim)
        ]

    def parent(self, cube, up=1):
        level, idx = cube.key
        if level - up < 0:
            return None
        return self.cube(level - up, tuple(i >> up for i in idx))

    def ancestor_key(self, key, up):
        level, idx = key
        return (level - up, tuple(i >> up for i in idx))

    def key_contains(self, outer, inner):
        """Exact containment of grid cells by index arithmetic."""
        lo, io = outer
        li, ii = inner
        if li < lo:
            return False
        shift = li - lo
        return all((c >> shift) == p for c, p in zip(ii, io))

    def locate(self, pts, level):
        """Cell index of each image-space point at a level; valid=False outside.

        Floor indexing is only an accelerator: each index is corrected by the
        half-open box test so membership matches contains_points exactly."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        n_pts = pts.shape[0]
        if n_pts == 0:
            return np.zeros((0, self.dim), dtype=np.int64), np.zeros(0, dtype=bool)
        pre = self.map.inverse(pts)
        h = self.level_side(level)
        rel = (pre - self.top_lo) / h
        idx = np.floor(rel).astype(np.int64)
        for _ in range(2):
            lo = self.top_lo + idx * h
            idx -= (pre < lo).astype(np.int64)
            idx += (pre >= lo + h).astype(np.int64)
        valid = np.all((idx >= 0) & (idx < (1 << level)), axis=1)
        return idx, valid

    def cell_map(self, pts, level):
        """dict multi-index -> array of point ids, for points inside the top cube."""
        idx, valid = self.locate(pts, level)
        cells = {}
        for i in np.flatnonzero(valid):
            cells.setdefault(tuple(int(v) for v in idx[i]), []).append(int(i))
        return {k: np.asarray(v, dtype=np.int64) for k, v in cells.items()}

    def atom_cells(self, measure, max_level=None):
        """Per-level cell maps of a measure's atoms (levels 0..max_level)."""
        top = self.depth if max_level is None else min(max_level, self.depth)
        return [self.cell_map(measure.points, level) for level in range(top + 1)]

    def active_cubes(self, *measures, max_level=None):
        """All grid cubes containing at least one atom of any given measure."""
        top = self.depth if max_level is None else min(max_level, self.depth)
        out = []
        for level in range(top + 1):
            keys = set()
            for mu in measures:
                if len(mu):
                    keys.update(self.cell_map(mu.points, level).keys())
            out.extend(self.cube(level, idx) for idx in sorted(keys))
        return out


def qdist(a, b):
    """Euclidean distance between preimage boxes (or preimage point sets)."""
    if isinstance(a, QuasiCube) and isinstance(b, QuasiCube):
        if a.map != b.map:
            raise ValueError("qdist requires a common map")
        gap = np.maximum(0.0, np.maximum(a.lo - b.hi, b.lo - a.hi))
        return float(np.linalg.norm(gap))
    raise TypeError("qdist expects two quasicubes")


def boundary_qdist(inner, outer):
    """Distance from the preimage box of J to the boundary of the box of K.

    For J inside K this is the smallest axial face gap; 0 if J is not inside."""
    if not outer.contains_cube(inner):
        return 0.0
    gaps = np.minimum(inner.lo - outer.lo, outer.hi - inner.hi)
    return float(gaps.min())


def is_deeply_embedded(inner, outer, params):
    """J em K: containment, side ratio 2^-r, and boundary clearance
    qdist(J, dK) >= l(J)^eps l(K)^(1-eps) / 2, all in the preimage."""
    if inner.map != outer.map:
        raise ValueError("deep embedding requires a common map")
    if not outer.contains_cube(inner):
        return False
    if inner.side * (1 << params.r) > outer.side * (1.0 + 1e-12):
        return False
    need = 0.5 * inner.side ** params.eps * outer.side ** (1.0 - params.eps)
    return boundary_qdist(inner, outer) >= need * (1.0 - 1e-12)


def is_good(cube, grid, params):
    """Good cube: deeply embedded in every grid ancestor at least 2^r larger.

    The quantifier stops at the top cube (finite grid); reports carry a flag
    for this truncation."""
    level, idx = cube.key
    memo = grid._good_cache.setdefault(params, {})
    hit = memo.get(cube.key)
    if hit is not None:
        return hit
    ok = True
    for up in range(params.r, level + 1):
        anc = grid.cube(*grid.ancestor_key(cube.key, up))
        if not is_deeply_embedded(cube, anc, params):
            ok = False
            break
    memo[cube.key] = ok
    return ok


def is_tau_good(cube, grid, params):
    """Good cube whose children are all good and whose ancestors up to tau
    levels are good (missing levels beyond the grid are vacuously fine)."""
    level, idx = cube.key
    for up in range(0, params.tau + 1):
        if level - up < 0:
            break
        if not is_good(grid.cube(*grid.ancestor_key(cube.key, up)), grid, params):
            return False
    for child in grid.children(cube):
        if not is_good(child, grid, params):
            return False
    return True


class DeepFamily(list):
    """List of maximal deeply-embedded subcubes; truncated=True records that
    the grid depth cut the recursion before every branch qualified."""

    def __init__(self, cubes=()):
        super().__init__(cubes)
        self.truncated = False


def maximal_deep_subcubes(outer, grid, params):
    """Maximal grid cubes deeply embedded in a lattice-aligned quasicube."""
    out = DeepFamily()
    start = None
    for level in range(grid.depth + 1):
        if grid.level_side(level) * (1 << params.r) <= outer.side * (1.0 + 1e-12):
            start = level
            break
    if start is None:
        out.truncated = True
        return out

    h = grid.level_side(start)
    lo = (outer.lo - grid.top_lo) / h
    hi = (outer.hi - grid.top_lo) / h
    first = np.maximum(np.floor(lo + 1e-9).astype(np.int64), 0)
    last = np.minimum(np.ceil(hi - 1e-9).astype(np.int64), 1 << start)
    seed = [
        grid.cube(start, idx)
        for idx in itertools.product(*[range(a, b) for a, b in zip(first, last)])
    ]
    queue = deque(seed)
    while queue:
        cand = queue.popleft()
        if is_deeply_embedded(cand, outer, params):
            out.append(cand)
        elif cand.key[0] < grid.depth:
            queue.extend(grid.children(cand))
        else:
            out.truncated = True
    return out


def alternate_quasicubes(grid, level, cells=None):
    """Boxes of side 2h on the level-h lattice (corners at every lattice point,
    extending one cell past the top boundary so every grid cube lies in exactly
    2^n alternates).  With cells given, only alternates covering those cells."""
    if level < 1 or level > grid.depth:
        raise ValueError("alternate level must be in [1, depth]")
    h = grid.level_side(level)
    corners = set()
    if cells is None:
        rng = range(-1, 1 << level)
        corners.update(itertools.product(rng, repeat=grid.dim))
    else:
        for idx in cells:
            for bits in itertools.product((0, 1), repeat=grid.dim):
                corners.add(tuple(i - b for i, b in zip(idx, bits)))
    out = []
    for corner in sorted(corners):
        center = grid.top_lo + (np.asarray(corner, dtype=np.float64) + 1.0) * h
        out.append(QuasiCube(grid.map, center, 2.0 * h, key=("alt", level, corner)))
    return out


def neighbour_pairs(grid, level):
    """Unordered pairs of distinct same-level cells at index offset in {-1,0,1}^n."""
    side = 1 << level
    offsets = [
        off for off in itertools.product((-1, 0, 1), repeat=grid.dim)
        if any(off)
    ]
    pairs = []
    for idx in itertools.product(range(side), repeat=grid.dim):
        for off in offsets:
            jdx = tuple(i + o for i, o in zip(idx, off))
            if jdx <= idx:
                continue
            if all(0 <= j < side for j in jdx):
                pairs.append((grid.cube(level, idx), grid.cube(level, jdx)))
    return pairs
