"""Stopping-time constructions on dyadic quasigrids.

Two stopping rules are implemented.  The average-growth rule stops at maximal
subcubes where the absolute average of a function jumps by a factor C; the
resulting forest carries the stopped averages and satisfies the four stopping
-data properties with a measured constant.  The energy rule stops where the
tau-deep energy sum with dilated holes exceeds a threshold proportional to
the cube's mass; feeding the realized stopping sums back into the threshold
until stable makes the mass-Carleson ratio at most C/(C-1) by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyEvaluator, strong_energy_constant
from .haar import HaarSystem
from .measure import cube_mass
from .poisson import offset_A2, punctured_A2

__all__ = [
    "StoppingForest",
    "cz_stopping",
    "validate_stopping_data",
    "quasi_orthogonality_check",
    "iterate_coronas",
    "corona_projection",
    "EnergyStopping",
    "energy_stopping",
    "carleson_check",
    "energy_corona",
]


@dataclass
class StoppingForest:
    """Stopping cubes with their stopped values and tree structure.

    keys lists stopping cubes in construction order (root first); parent maps
    each stopping cube to the next one strictly above (None for the root);
    alpha holds the stopped value of each cube."""

    grid: object
    keys: list
    alpha: dict
    parent: dict
    C: float
    frontier: list = field(default_factory=list)

    def __post_init__(self):
        self._members = set(self.keys)

    def __contains__(self, key):
        return key in self._members

    def corona_of(self, key):
        """Smallest stopping cube containing the given grid cube."""
        while key not in self._members:
            if key[0] == 0:
                raise KeyError("cube lies outside every stopping cube")
            key = self.grid.ancestor_key(key, 1)
        return key

    def stopping_children(self, key):
        return [k for k in self.keys if self.parent.get(k) == key]

    def descendants(self, key):
        """Stopping cubes contained in the given one, itself included."""
        out = [key]
        i = 0
        while i < len(out):
            out.extend(self.stopping_children(out[i]))
            i += 1
        return out

    def atom_corona(self, measure):
        """Stopping cube owning each atom (via its deepest grid cell)."""
        depth = self.grid.depth
        idx, valid = self.grid.locate(measure.points, depth)
        owners = []
        for i in range(len(measure)):
            if not valid[i]:
                raise ValueError("atom %d lies outside the grid" % i)
            owners.append(self.corona_of((depth, tuple(idx[i]))))
        return owners

    def to_dict(self):
        def enc(key):
            return [key[0], list(key[1])]

        return {
            "schema": 1,
            "C": self.C,
            "cubes": [
                {
                    "level": k[0],
                    "index": list(k[1]),
                    "alpha": self.alpha[k],
                    "parent": None if self.parent.get(k) is None else enc(self.parent[k]),
                }
                for k in self.keys
            ],
            "frontier": [enc(k) for k in self.frontier],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _avg(f_abs, weights, mask):
    mass = float(weights[mask].sum())
    if mass == 0.0:
        return 0.0, 0.0
    return float((weights[mask] * f_abs[mask]).sum()) / mass, mass


def cz_stopping(f, sigma, grid, C):
    """Average-growth stopping forest: starting from the top cube, maximal
    descendants whose absolute average exceeds C times the current stopped
    value become stopping children, recursively.  The stopped value is the
    absolute average over the stopping cube."""
    if C <= 1.0:
        raise ValueError("C must exceed 1")
    f_abs = np.abs(np.asarray(f, dtype=float))
    if f_abs.shape[0] != len(sigma):
        raise ValueError("f must assign one value per atom")
    top = grid.top()
    top_avg, top_mass = _avg(f_abs, sigma.masses, top.contains_points(sigma.points))
    if top_mass == 0.0:
        raise ValueError("top cube carries no mass")

    keys, alpha, parent, frontier = [top.key], {top.key: top_avg}, {top.key: None}, []
    queue = [(top.key, top_avg)]
    while queue:
        f_key, f_alpha = queue.pop()
        stack = [f_key]
        while stack:
            key = stack.pop()
            level, idx = key
            if level >= grid.depth:
                continue
            for child in grid.children(grid.cube(*key)):
                mask = child.contains_points(sigma.points)
                avg, mass = _avg(f_abs, sigma.masses, mask)
                if mass == 0.0:
                    continue
                if avg > C * f_alpha:
                    keys.append(child.key)
                    alpha[child.key] = avg
                    parent[child.key] = f_key
                    queue.append((child.key, avg))
                    if child.key[0] == grid.depth:
                        frontier.append(child.key)
                else:
                    stack.append(child.key)
    return StoppingForest(grid, keys, alpha, parent, C, frontier)


def validate_stopping_data(forest, f, sigma, C0):
    """Per-property report for the four stopping-data requirements:
    (1) corona averages bounded by C0 times the stopped value,
    (2) stopping masses summable below each cube with constant C0,
    (3) stopped values square-summable against ||f||^2 with constant C0^2,
    (4) stopped values nondecreasing down the forest."""
    f_abs = np.abs(np.asarray(f, dtype=float))
    grid = forest.grid
    report = {}

    ok, witness = True, None
    for cube in grid.active_cubes(sigma):
        avg, mass = _avg(f_abs, sigma.masses, cube.contains_points(sigma.points))
        if mass == 0.0:
            continue
        try:
            owner = forest.corona_of(cube.key)
        except KeyError:
            ok, witness = False, cube.key
            break
        if avg > C0 * forest.alpha[owner] * (1.0 + 1e-12):
            ok, witness = False, cube.key
            break
    report["corona_average"] = {"pass": ok, "witness": witness}

    masses = {k: cube_mass(sigma, grid.cube(*k)) for k in forest.keys}
    ok, witness = True, None
    for key in forest.keys:
        below = sum(masses[k] for k in forest.descendants(key))
        if below > C0 * masses[key] * (1.0 + 1e-12):
            ok, witness = False, key
            break
    report["stopping_mass"] = {"pass": ok, "witness": witness}

    norm_sq = float((sigma.masses * f_abs ** 2).sum())
    total = sum(forest.alpha[k] ** 2 * masses[k] for k in forest.keys)
    ok = total <= C0 ** 2 * norm_sq * (1.0 + 1e-12)
    report["alpha_square"] = {"pass": ok, "witness": None if ok else total / max(norm_sq, 1e-300)}

    ok, witness = True, None
    for key in forest.keys:
        up = forest.parent.get(key)
        if up is not None and forest.alpha[key] < forest.alpha[up] * (1.0 - 1e-12):
            ok, witness = False, key
            break
    report["alpha_monotone"] = {"pass": ok, "witness": witness}

    report["pass"] = all(report[k]["pass"] for k in
                         ("corona_average", "stopping_mass", "alpha_square", "alpha_monotone"))
    return report


def quasi_orthogonality_check(forest, f, sigma):
    """||sum over stopping cubes of alpha 1_F||^2 / ||f||^2 in L2(sigma);
    0 when f vanishes."""
    f_arr = np.asarray(f, dtype=float)
    norm_sq = float((sigma.masses * f_arr ** 2).sum())
    if norm_sq == 0.0:
        return 0.0
    overlay = np.zeros(len(sigma))
    for key in forest.keys:
        cube = forest.grid.cube(*key)
        overlay[cube.contains_points(sigma.points)] += forest.alpha[key]
    return float((sigma.masses * overlay ** 2).sum()) / norm_sq


def iterate_coronas(forest, inner):
    """Merge per-cube inner stopping forests into the outer one.

    inner maps each outer stopping cube F to a stopping forest rooted at F.
    An inner cube K survives when it lies in the corona of F and its inner
    value is at least the outer value of F; the merged value at F itself is
    the larger of the two."""
    grid = forest.grid
    keys, alpha = [], {}
    for f_key in forest.keys:
        sub = inner.get(f_key)
        merged = forest.alpha[f_key]
        selected = []
        if sub is not None:
            for k in sub.keys:
                if k == f_key:
                    merged = max(merged, sub.alpha[k])
                    continue
                if forest.corona_of(k) == f_key and sub.alpha[k] >= forest.alpha[f_key]:
                    selected.append((k, sub.alpha[k]))
        keys.append(f_key)
        alpha[f_key] = merged
        for k, a in selected:
            keys.append(k)
            alpha[k] = a

    member = set(keys)
    parent = {}
    for k in keys:
        up, lvl = None, k[0]
        key = k
        while lvl > 0:
            key = grid.ancestor_key(key, 1)
            lvl -= 1
            if key in member:
                up = key
                break
        parent[k] = up
    order = sorted(keys, key=lambda k: k[0])
    return StoppingForest(grid, order, alpha, parent, forest.C)


def corona_projection(forest, f, sigma, system=None):
    """Atom-wise corona blocks of f: the top average, each cube's mean
    -difference component, and the deepest-cell residual are assigned to the
    stopping cube owning them.  The blocks are mutually orthogonal in
    L2(sigma) and sum to f exactly."""
    grid = forest.grid
    f_arr = np.asarray(f, dtype=float)
    system = HaarSystem(grid, sigma) if system is None else system
    blocks = {key: np.zeros(len(sigma)) for key in forest.keys}

    top_key = grid.top().key
    blocks[forest.corona_of(top_key)] += float(system.expectation(f_arr, top_key)[0])

    for key in system.bases:
        ids, vals = system.delta_values(f_arr, key)
        blocks[forest.corona_of(key)][ids] += vals[:, 0]

    depth = grid.depth
    for cell_idx, ids in system.cells[depth].items():
        mean = float((sigma.masses[ids] * f_arr[ids]).sum() /
                     sigma.masses[ids].sum())
        blocks[forest.corona_of((depth, cell_idx))][ids] += f_arr[ids] - mean
    return blocks


@dataclass
class EnergyStopping:
    """Energy stopping collection: cubes (root first), per-event realized
    sums, frontier cubes at grid depth, and the threshold coefficient."""

    keys: list
    events: list
    frontier: list
    threshold: float

    def to_dict(self):
        return {
            "schema": 1,
            "threshold": self.threshold,
            "cubes": [[k[0], list(k[1])] for k in self.keys],
            "frontier": [[k[0], list(k[1])] for k in self.frontier],
            "events": [
                {
                    "parent": [e["parent"][0], list(e["parent"][1])],
                    "children": [[k[0], list(k[1])] for k in e["children"]],
                    "sums": e["sums"],
                }
                for e in self.events
            ],
        }


def energy_stopping(s0, sigma, omega, params, goodness, gamma, c_energy, e_hat,
                    a2, a2_punct, grid=None, evaluator=None):
    """Recursive energy stopping below s0: within each stopping cube S, the
    maximal subcubes I whose tau-deep hole energy relative to S reaches
    c_energy (e_hat^2 + a2 + a2_punct) |I|_sigma become stopping cubes."""
    if evaluator is None:
        if grid is None:
            raise ValueError("grid or evaluator required")
        evaluator = EnergyEvaluator(grid, sigma, omega, params, goodness)
    grid = evaluator.grid
    coeff = c_energy * (e_hat ** 2 + a2 + a2_punct)
    keys, events, frontier = [s0.key], [], []
    queue = [s0.key]
    while queue:
        s_key = queue.pop()
        s_cube = grid.cube(*s_key)
        if s_key[0] >= grid.depth:
            frontier.append(s_key)
            continue
        in_s = s_cube.contains_points(sigma.points)
        stops, sums = [], []
        stack = [s_key]
        while stack:
            key = stack.pop()
            if key[0] >= grid.depth:
                continue
            for child in grid.children(grid.cube(*key)):
                mass = evaluator.sigma_mass(child)
                if mass == 0.0:
                    continue
                val = evaluator.deep_sum([child], in_s, subgood=True,
                                         side_gap=goodness.tau, hole_gamma=gamma)
                if val > 0.0 and val >= coeff * mass:
                    stops.append(child.key)
                    sums.append(val)
                else:
                    stack.append(child.key)
        events.append({"parent": s_key, "children": stops, "sums": sums})
        keys.extend(stops)
        queue.extend(stops)
    return EnergyStopping(keys, events, frontier, coeff)


def carleson_check(stopping_keys, sigma, grid):
    """Worst ratio over cubes I of the summed masses of stopping cubes inside
    I against the mass of I."""
    key_set = list(dict.fromkeys(stopping_keys))
    masses = {k: cube_mass(sigma, grid.cube(*k)) for k in key_set}
    candidates = {c.key for c in grid.active_cubes(sigma)} | set(key_set)
    worst = 0.0
    for key in candidates:
        top_mass = cube_mass(sigma, grid.cube(*key))
        if top_mass == 0.0:
            continue
        inside = sum(masses[k] for k in key_set
                     if grid.key_contains(key, k))
        worst = max(worst, inside / top_mass)
    return worst


def energy_corona(sigma, omega, params, goodness, grid, c_energy=4.0,
                  a2=None, a2_punct=None, partition_budget=64, rng=None,
                  max_iter=12):
    """Energy stopping from the top cube with the threshold closed under its
    own realized stopping sums.

    The deep-energy estimate starts from the partition/alternate search and is
    raised to the largest realized per-event stopping sum ratio until the
    collection is stable; the stable threshold forces every event to spend at
    most 1/c_energy of its parent's mass, so the mass-Carleson ratio is at
    most c_energy/(c_energy - 1)."""
    if c_energy < 2.0:
        raise ValueError("c_energy must be >= 2")
    rng = np.random.default_rng(0) if rng is None else rng
    evaluator = EnergyEvaluator(grid, sigma, omega, params, goodness)
    if a2 is None:
        a2 = offset_A2(sigma, omega, params, grid)
    if a2_punct is None:
        a2_punct = punctured_A2(sigma, omega, params, grid)
    estimate = strong_energy_constant(
        sigma, omega, params, goodness, grid, partition_budget=partition_budget,
        rng=rng, evaluator=evaluator)
    e_sq = estimate.value
    top = grid.top()
    stopping, prev_keys = None, None
    for _ in range(max_iter):
        stopping = energy_stopping(
            top, sigma, omega, params, goodness, goodness.gamma, c_energy,
            float(np.sqrt(e_sq)), a2, a2_punct, evaluator=evaluator)
        realized = 0.0
        for event in stopping.events:
            if not event["children"]:
                continue
            parent_mass = evaluator.sigma_mass(grid.cube(*event["parent"]))
            if parent_mass > 0.0:
                realized = max(realized, sum(event["sums"]) / parent_mass)
        if realized <= e_sq * (1.0 + 1e-12) and stopping.keys == prev_keys:
            break
        e_sq = max(e_sq, realized)
        prev_keys = stopping.keys
    return stopping, estimate, e_sq
