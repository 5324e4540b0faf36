#!/usr/bin/env python3
"""Measure the corpus maxima behind the frozen comparison constants.

Each constant is the worst observed ratio over the fixed, seeded corpus
recipes in twoweight.calibration; the frozen bound committed there is the
maximum times a x2 margin.  Run this script after changing generators or
ratio definitions and copy the printed block into calibration.py.
"""

import argparse
import json
import warnings

import numpy as np

from twoweight.calibration import (FROZEN, base_grid, exterior_charge,
                                   necessity_instances, reversal_instances)
from twoweight.corona import cz_stopping, quasi_orthogonality_check
from twoweight.corpus import generate_corpus
from twoweight.energy import strong_energy_constant
from twoweight.funcenergy import build_upper_measure, refined_term
from twoweight.haar import HaarSystem
from twoweight.measure import cube_mass
from twoweight.poisson import (FracParams, energy_A2, energy_A2_dual,
                               offset_A2, one_tailed_A2,
                               one_tailed_A2_dual, plugged_energy_A2,
                               plugged_energy_A2_dual)
from twoweight.quasigeom import GoodnessParams, alternate_quasicubes
from twoweight.riesz import (default_lattice, energy_reversal_check,
                             haar_riesz_companion, norm_constant,
                             pivotal_bound_check)


def measure_reversal(seed):
    worst = 0.0
    for grid, params, _, mu, omg in reversal_instances(seed):
        _, _, ratio = energy_reversal_check(grid.top(), mu, omg, params, 8.0,
                                            grid)
        if np.isfinite(ratio):
            worst = max(worst, ratio)
    return worst


def measure_necessity(seed):
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for grid, params, sig, omg in necessity_instances(seed):
            profiles = default_lattice(sig, omg, params, size=4)
            nrm = norm_constant(sig, omg, profiles)
            off = offset_A2(sig, omg, params, grid)
            if nrm > 0.0:
                worst = max(worst, float(np.sqrt(off)) / nrm)
    return worst


def measure_plugged(seed):
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for grid, params, sig, omg in necessity_instances(seed):
            fam = grid.active_cubes(sig, omg)
            plug = plugged_energy_A2(sig, omg, params, grid)
            base = one_tailed_A2(sig, omg, params, fam) + \
                energy_A2(sig, omg, params, grid)
            if base > 0.0:
                worst = max(worst, plug / base)
            plug_d = plugged_energy_A2_dual(sig, omg, params, grid)
            base_d = one_tailed_A2_dual(sig, omg, params, fam) + \
                energy_A2_dual(sig, omg, params, grid)
            if base_d > 0.0:
                worst = max(worst, plug_d / base_d)
    return worst


def measure_quasi_orth(seed, count=100):
    grid = base_grid(2)
    worst = 0.0
    for i, (sig, _) in enumerate(generate_corpus("uniform-atoms", count, grid,
                                                 n_atoms=14, seed=seed)):
        f = np.random.default_rng(seed + i).standard_normal(len(sig))
        forest = cz_stopping(f, sig, grid, 2.0)
        worst = max(worst, quasi_orthogonality_check(forest, f, sig))
    return worst


def measure_companion(seed, count=200):
    grid = base_grid(2)
    params = FracParams(2, 0.5)
    worst = 0.0
    pairs = generate_corpus("uniform-atoms", count, grid, n_atoms=25,
                            seed=seed)
    for i, (_, omg) in enumerate(pairs):
        mu = exterior_charge(grid, seed + i)
        system = HaarSystem(grid, omg)
        for cube in grid.active_cubes(omg):
            if cube.key[0] < 1 or cube.key not in system.bases:
                continue
            if cube.dilate(2.0).contains_points(mu.points).any():
                continue
            coef, phi = haar_riesz_companion(cube, omg, mu, params, grid,
                                             system=system)
            if phi > 0.0:
                worst = max(worst, coef / phi)
    return worst


def measure_pivotal(seed, count=100):
    grid = base_grid(2)
    params = FracParams(2, 0.5)
    worst = 0.0
    pairs = generate_corpus("uniform-atoms", count, grid, n_atoms=25,
                            seed=seed)
    for i, (_, omg) in enumerate(pairs):
        nu = exterior_charge(grid, seed + 7 * i)
        system = HaarSystem(grid, omg)
        for key, basis in system.bases.items():
            cube = grid.cube(*key)
            if cube.dilate(8.0).contains_points(nu.points).any():
                continue
            ids = system.atoms_in(key)
            sub, _ = grid.locate(omg.points[ids], key[0] + 1)
            child_of = {c: basis.funcs[0, j]
                        for j, c in enumerate(basis.child_keys)}
            psi = np.zeros(len(omg))
            for row, cell in zip(ids, sub):
                psi[row] = child_of.get(tuple(int(v) for v in cell), 0.0)
            worst = max(worst, pivotal_bound_check(cube, psi, omg, nu, params))
    return worst


def measure_refined(seed, count=50):
    grid = base_grid(2, depth=5)
    params = FracParams(2, 0.5)
    goodness = GoodnessParams()
    worst = 0.0
    pairs = generate_corpus("uniform-atoms", count, grid, n_atoms=40,
                            seed=seed)
    for i, (sig, omg) in enumerate(pairs):
        f = np.random.default_rng(seed + i).standard_normal(len(sig))
        forest = cz_stopping(f, sig, grid, 2.0)
        upper = build_upper_measure(forest, omg, grid, goodness)
        if float(upper.weights.sum()) == 0.0:
            continue
        est = strong_energy_constant(sig, omg, params, goodness, grid,
                                     partition_budget=8,
                                     rng=np.random.default_rng(i))
        ea2 = energy_A2(sig, omg, params, grid)
        denom_scale = goodness.tau * (est.value + ea2)
        if denom_scale == 0.0:
            continue
        for level in range(1, 3):
            for alt in alternate_quasicubes(grid, level):
                mass = cube_mass(sig, alt)
                if mass == 0.0:
                    continue
                val = refined_term(alt, sig, upper, params)
                worst = max(worst, val / (denom_scale * mass))
    return worst


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default=None, help="write JSON here too")
    args = parser.parse_args()

    measured = {
        "reversal": measure_reversal(args.seed),
        "necessity": measure_necessity(args.seed),
        "plugged": measure_plugged(args.seed),
        "quasi_orth": measure_quasi_orth(args.seed),
        "companion": measure_companion(args.seed),
        "pivotal": measure_pivotal(args.seed),
        "refined": measure_refined(args.seed),
    }

    block = {}
    for name, val in measured.items():
        margin = FROZEN.get(name, {}).get("margin", 2.0)
        block[name] = {
            "measured": round(val, 6),
            "margin": margin,
            "value": round(val * margin, 6),
            "corpus": FROZEN.get(name, {}).get("corpus",
                                               "seed %d" % args.seed),
        }
    print(json.dumps(block, indent=2))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(block, fh, indent=2)
            fh.write("\n")


if __name__ == "__main__":
    main()
