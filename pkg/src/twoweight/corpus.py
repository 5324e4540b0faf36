"""Deterministic measure-pair generators for randomized property checks.

Atoms are sampled in the preimage box of the grid's top cube and pushed
through the grid's map, so every atom lands inside the top quasicube by
construction.  Shared atoms are created by copying coordinates bitwise.
Generators aimed at reversal experiments put the first measure far outside
the dilated top cube (it plays the exterior measure) and shape the second
inside the top: isotropic with a certified dispersion ratio, or concentrated
near a line to defeat dispersion.
"""

from __future__ import annotations

import numpy as np

from .energy import moment_spectrum
from .measure import DiscreteMeasure

__all__ = ["GENERATORS", "generate_corpus", "exterior_measure"]

GENERATORS = (
    "uniform-atoms",
    "common-atoms",
    "line-concentrated",
    "isotropic-dispersed",
    "separated-atoms",
)


def _masses(rng, count):
    return np.exp(rng.normal(0.0, 0.7, size=count))


def _uniform_points(grid, rng, count, margin=1e-3):
    lo = grid.top_lo + margin * grid.side
    span = grid.side * (1.0 - 2.0 * margin)
    pre = lo + rng.random((count, grid.dim)) * span
    return grid.map.forward(pre)


def _uniform_measure(grid, rng, count):
    return DiscreteMeasure(_uniform_points(grid, rng, count), _masses(rng, count))


def exterior_measure(grid, rng, count, gamma=8.0):
    """Atoms at image points of preimage locations outside gamma times the
    top box (radius gamma to 2 gamma sides from the top center)."""
    dim = grid.dim
    directions = rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radius = grid.side * rng.uniform(gamma, 2.0 * gamma, size=count)
    pre = grid.top_center[None, :] + directions * radius[:, None]
    return DiscreteMeasure(grid.map.forward(pre), _masses(rng, count))


def _line_points(grid, rng, count, jitter=1e-3):
    direction = rng.standard_normal(grid.dim)
    direction /= np.linalg.norm(direction)
    t = (rng.random(count) - 0.5) * grid.side * 0.8
    pre = grid.top_center[None, :] + t[:, None] * direction[None, :]
    pre += rng.standard_normal((count, grid.dim)) * jitter * grid.side
    lo = grid.top_lo + 1e-6 * grid.side
    hi = grid.top_lo + grid.side * (1.0 - 1e-6)
    pre = np.clip(pre, lo, hi)
    return grid.map.forward(pre)


def _isotropic_measure(grid, rng, count, k, ratio=0.3, max_tries=50):
    """Measure in the top cube with dispersion ratio M_k / M_0 >= ratio on
    the top, certified by resampling; near-isotropic cross-polytope layout
    plus uniform fill."""
    top = grid.top()
    dim = grid.dim
    for _ in range(max_tries):
        frame = np.linalg.qr(rng.standard_normal((dim, dim)))[0]
        scale = grid.side * rng.uniform(0.15, 0.35)
        vertices = np.concatenate([frame * scale, -frame * scale], axis=0)
        pre = grid.top_center[None, :] + vertices
        pre += rng.standard_normal(pre.shape) * 0.02 * grid.side
        extra = max(count - pre.shape[0], 0)
        if extra:
            margin = 1e-3
            lo = grid.top_lo + margin * grid.side
            span = grid.side * (1.0 - 2.0 * margin)
            pre = np.concatenate([pre, lo + rng.random((extra, dim)) * span], axis=0)
        pre = np.clip(pre, grid.top_lo + 1e-6 * grid.side,
                      grid.top_lo + grid.side * (1.0 - 1e-6))
        mu = DiscreteMeasure(grid.map.forward(pre),
                             np.exp(rng.normal(0.0, 0.2, size=pre.shape[0])))
        spec = moment_spectrum(top, mu)
        if spec.m_sq(0) > 0.0 and spec.dispersion_ratio(k) >= ratio:
            return mu
    raise RuntimeError("failed to certify a dispersed measure in %d tries" % max_tries)


def _separated_measure(grid, rng, count):
    """Atoms in distinct deepest grid cells (rejection sampling); the count is
    capped by the number of cells."""
    cap = min(count, 2 ** (grid.depth * grid.dim), 64 if grid.dim == 1 else count)
    pts, seen = [], set()
    guard = 0
    while len(pts) < cap and guard < 200 * cap:
        guard += 1
        p = _uniform_points(grid, rng, 1)
        idx, valid = grid.locate(p, grid.depth)
        cell = tuple(int(v) for v in idx[0])
        if valid[0] and cell not in seen:
            seen.add(cell)
            pts.append(p[0])
    return DiscreteMeasure(np.array(pts), _masses(rng, len(pts)))


def generate_corpus(generator, count, grid, n_atoms=12, seed=0, n_common=None,
                    k=1, gamma=8.0):
    """List of measure pairs, deterministic per seed.

    'uniform-atoms': both measures uniform in the top cube.
    'common-atoms': uniform plus a bitwise-shared subset of atoms.
    'separated-atoms': atoms in distinct deepest cells.
    'isotropic-dispersed': (exterior measure, k-dispersed measure in the top).
    'line-concentrated': (exterior measure, near-line measure in the top)."""
    if generator not in GENERATORS:
        raise ValueError("unknown generator %r (have %s)" %
                         (generator, ", ".join(GENERATORS)))
    root = np.random.default_rng(seed)
    streams = root.spawn(count)
    pairs = []
    for rng in streams:
        if generator == "uniform-atoms":
            pairs.append((_uniform_measure(grid, rng, n_atoms),
                          _uniform_measure(grid, rng, n_atoms)))
        elif generator == "common-atoms":
            shared = n_common if n_common is not None else max(1, n_atoms // 3)
            shared_pts = _uniform_points(grid, rng, shared)
            sig = DiscreteMeasure(
                np.concatenate([_uniform_points(grid, rng, n_atoms), shared_pts]),
                _masses(rng, n_atoms + shared))
            omg = DiscreteMeasure(
                np.concatenate([_uniform_points(grid, rng, n_atoms), shared_pts.copy()]),
                _masses(rng, n_atoms + shared))
            pairs.append((sig, omg))
        elif generator == "separated-atoms":
            pairs.append((_separated_measure(grid, rng, n_atoms),
                          _separated_measure(grid, rng, n_atoms)))
        elif generator == "isotropic-dispersed":
            pairs.append((exterior_measure(grid, rng, max(n_atoms // 2, 1), gamma),
                          _isotropic_measure(grid, rng, n_atoms, k)))
        else:
            pairs.append((exterior_measure(grid, rng, max(n_atoms // 2, 1), gamma),
                          DiscreteMeasure(_line_points(grid, rng, n_atoms),
                                          _masses(rng, n_atoms))))
    return pairs
