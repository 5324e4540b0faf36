"""Calibrated comparison constants, frozen with a x2 safety margin, plus the
seeded corpus recipes they were measured on.

Each FROZEN entry records the measured worst case over its corpus and the
frozen bound (measured maximum times the margin).  The corpus helpers below
are shared by scripts/calibrate_constants.py and the randomized checks, so a
frozen bound always covers exactly the instances the checks replay.
"""

from __future__ import annotations

import numpy as np

__all__ = ["FROZEN", "frozen_bound", "REVERSAL_COMBOS", "base_grid",
           "reversal_instances", "necessity_instances", "exterior_charge"]

# name -> {measured, margin, value, corpus}; regenerate the measured numbers
# with scripts/calibrate_constants.py
FROZEN = {
    # reversal ratio (energy * reproducing-Poisson)^2 over field variance on
    # dispersed corpora, gamma = 8, admissible (k, alpha)
    "reversal": {
        "measured": 14.58492,
        "margin": 2.0,
        "value": 29.169839,
        "corpus": "isotropic-dispersed, 25 per (dim, k, alpha) combo, seed 2024",
    },
    # sqrt(offset constant) against the lattice operator norm
    "necessity": {
        "measured": 2.48503,
        "margin": 2.0,
        "value": 4.970061,
        "corpus": "uniform-atoms x100 + common-atoms x100, seed 2024",
    },
    # plugged energy constant against one-tailed + energy constants
    # (primal and dual orientations pooled)
    "plugged": {
        "measured": 0.199943,
        "margin": 2.0,
        "value": 0.399887,
        "corpus": "uniform-atoms x100 + common-atoms x100, seed 2024",
    },
    # quasi-orthogonality ratio of stopping-average overlays
    "quasi_orth": {
        "measured": 2.130832,
        "margin": 2.0,
        "value": 4.261664,
        "corpus": "uniform-atoms x100, random data, seed 2024",
    },
    # Haar coefficient of the transform of an exterior charge against the
    # oscillation-control functional
    "companion": {
        "measured": 1.513042,
        "margin": 2.0,
        "value": 3.026085,
        "corpus": "uniform-atoms x200 with exterior charge, seed 2024",
    },
    # mean-zero pairing of a separated charge against norm * Poisson * mass
    "pivotal": {
        "measured": 0.691297,
        "margin": 2.0,
        "value": 1.382595,
        "corpus": "uniform-atoms x100 with exterior charge, seed 2024",
    },
    # refined below-term on alternate cubes against
    # tau * (strong energy + energy constant) * cube mass
    "refined": {
        "measured": 0.073688,
        "margin": 2.0,
        "value": 0.147375,
        "corpus": "uniform-atoms x50 at depth 5, seed 2024",
    },
}


def frozen_bound(name):
    return FROZEN[name]["value"]


# admissible (dim, k, alpha) combinations exercised by the reversal corpus
REVERSAL_COMBOS = ((2, 1, 0.5), (2, 1, 1.5), (3, 1, 2.5), (3, 2, 0.5))


def base_grid(dim, depth=4):
    """Unit grid on the identity map, centered at the origin."""
    from .quasigeom import DyadicQuasigrid, make_map

    return DyadicQuasigrid(make_map(dim, "identity"), np.zeros(dim), 1.0,
                           depth)


def reversal_instances(seed=2024, per_combo=25):
    """(grid, params, k, mu, omega) stream matching the frozen reversal
    corpus: dispersed omega inside the top, charge mu far outside."""
    from .corpus import generate_corpus
    from .poisson import FracParams

    for dim, k, alpha in REVERSAL_COMBOS:
        grid = base_grid(dim)
        params = FracParams(dim, alpha)
        pairs = generate_corpus("isotropic-dispersed", per_combo, grid,
                                n_atoms=10, seed=seed + 10 * k + dim, k=k)
        for mu, omg in pairs:
            yield grid, params, k, mu, omg


def necessity_instances(seed=2024, count=200):
    """(grid, params, sigma, omega) stream matching the frozen necessity
    corpus: plain pairs then pairs with forced shared atoms."""
    from .corpus import generate_corpus
    from .poisson import FracParams

    grid = base_grid(2)
    params = FracParams(2, 0.5)
    pairs = (generate_corpus("uniform-atoms", count // 2, grid, n_atoms=12,
                             seed=seed)
             + generate_corpus("common-atoms", count - count // 2, grid,
                               n_atoms=9, seed=seed + 1))
    for sig, omg in pairs:
        yield grid, params, sig, omg


def exterior_charge(grid, seed, count=6):
    """Charge measure far outside the top cube, matching the companion and
    pivotal corpora."""
    from .corpus import exterior_measure

    return exterior_measure(grid, np.random.default_rng(seed), count)
