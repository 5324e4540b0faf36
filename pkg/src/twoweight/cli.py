"""Scenario runner: a JSON scenario document selects a geometry, a
deterministic measure-pair corpus, and a set of check suites; results are
written as a versioned JSON report plus a markdown summary table.

Corpus items run in parallel when TWOWEIGHT_THREADS is set above 1; report
assembly stays single-threaded and ordered, so reruns are byte-identical up
to the timestamp field.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import corpus as corpus_mod
from .calibration import frozen_bound
from .corona import (carleson_check, corona_projection, cz_stopping,
                     energy_corona, quasi_orthogonality_check,
                     validate_stopping_data)
from .energy import EnergyEvaluator, stopping_energy, strong_energy_constant
from .funcenergy import (backward_testing, build_upper_measure,
                         forward_testing, functional_energy,
                         tau_overlap_count)
from .haar import HaarSystem, telescoping_check
from .measure import (common_point_masses, cube_mass, greedy_depoint,
                      punctured_mass)
from .poisson import (FracParams, muckenhoupt_report, offset_A2, punctured_A2)
from .quasigeom import DyadicQuasigrid, GoodnessParams, make_map
from .report import SuiteReport
from .riesz import (default_lattice, norm_constant, reversal_admissible,
                    energy_reversal_check, testing_constant,
                    testing_constant_dual, wbp_pair_family, weak_boundedness)

__all__ = ["Scenario", "ScenarioError", "load_scenario", "generate_corpus",
           "run_scenario", "main", "SUITES"]


class ScenarioError(ValueError):
    """Invalid scenario document; the message names the offending field."""


def _get(doc, path, key, kind, default=None, required=False):
    where = "%s.%s" % (path, key) if path else key
    if key not in doc:
        if required:
            raise ScenarioError("%s: required field missing" % where)
        return default
    val = doc[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind) or isinstance(val, bool):
        raise ScenarioError("%s: expected %s, got %s" %
                            (where, getattr(kind, "__name__", kind),
                             type(val).__name__))
    return val


def _vector(doc, path, key, dim, default):
    val = _get(doc, path, key, list, default=None)
    if val is None:
        return list(default)
    if len(val) != dim or not all(isinstance(v, (int, float)) for v in val):
        raise ScenarioError("%s.%s: expected a list of %d numbers" %
                            (path, key, dim))
    return [float(v) for v in val]


@dataclass
class Scenario:
    """Validated scenario: geometry, fractional order, goodness window,
    truncation lattice size, corpus recipe, and suite selection."""

    name: str
    dim: int
    alpha: float
    map_name: str = "identity"
    map_params: dict = field(default_factory=dict)
    center: tuple = ()
    side: float = 1.0
    depth: int = 4
    offset: tuple = ()
    r: int = 3
    eps: float = 0.5
    tau: int = 4
    gamma: float = 8.0
    trunc_size: int = 4
    trunc_kind: str = "tangent-line"
    generator: str = "uniform-atoms"
    count: int = 10
    atoms: int = 12
    seed: int = 0
    k: int = 1
    suites: tuple = ()

    def build_grid(self):
        m = make_map(self.dim, self.map_name, **self.map_params)
        return DyadicQuasigrid(m, np.array(self.center), self.side, self.depth,
                               offset=np.array(self.offset))

    def frac_params(self):
        return FracParams(self.dim, self.alpha)

    def goodness_params(self):
        return GoodnessParams(self.r, self.eps, self.tau, self.gamma)

    def build_corpus(self, grid=None):
        grid = grid or self.build_grid()
        return corpus_mod.generate_corpus(
            self.generator, self.count, grid, n_atoms=self.atoms,
            seed=self.seed, k=self.k, gamma=self.gamma)


def load_scenario(source, name=None):
    """Parse and validate a scenario from a path or an already-loaded dict."""
    if isinstance(source, dict):
        doc = source
        name = name or _get(doc, "", "name", str, default="inline")
    else:
        with open(source) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ScenarioError("%s: not valid JSON (%s)" % (source, exc))
        stem = os.path.splitext(os.path.basename(str(source)))[0]
        name = name or _get(doc, "", "name", str, default=stem)
    if _get(doc, "", "schema", int, required=True) != 1:
        raise ScenarioError("schema: only version 1 is understood")
    dim = _get(doc, "", "dim", int, required=True)
    if dim < 1:
        raise ScenarioError("dim: must be >= 1")
    alpha = _get(doc, "", "alpha", float, required=True)
    if not 0.0 <= alpha < dim:
        raise ScenarioError("alpha: must lie in [0, dim)")

    map_doc = _get(doc, "", "map", dict, default={})
    map_name = _get(map_doc, "map", "name", str, default="identity")
    map_params = _get(map_doc, "map", "params", dict, default={})

    grid_doc = _get(doc, "", "grid", dict, default={})
    center = _vector(grid_doc, "grid", "center", dim, [0.0] * dim)
    side = _get(grid_doc, "grid", "side", float, default=1.0)
    depth = _get(grid_doc, "grid", "depth", int, default=4)
    offset = _vector(grid_doc, "grid", "offset", dim, [0.0] * dim)
    if side <= 0:
        raise ScenarioError("grid.side: must be positive")
    if depth < 1:
        raise ScenarioError("grid.depth: must be >= 1")

    good_doc = _get(doc, "", "goodness", dict, default={})
    r = _get(good_doc, "goodness", "r", int, default=3)
    eps = _get(good_doc, "goodness", "eps", float, default=0.5)
    tau = _get(good_doc, "goodness", "tau", int, default=4)
    gamma = _get(good_doc, "goodness", "gamma", float, default=8.0)

    trunc_doc = _get(doc, "", "truncation", dict, default={})
    trunc_size = _get(trunc_doc, "truncation", "size", int, default=4)
    trunc_kind = _get(trunc_doc, "truncation", "kind", str,
                      default="tangent-line")

    corp_doc = _get(doc, "", "corpus", dict, default={})
    generator = _get(corp_doc, "corpus", "generator", str,
                     default="uniform-atoms")
    if generator not in corpus_mod.GENERATORS:
        raise ScenarioError("corpus.generator: unknown name %r (have %s)" %
                            (generator, ", ".join(corpus_mod.GENERATORS)))
    count = _get(corp_doc, "corpus", "count", int, default=10)
    atoms = _get(corp_doc, "corpus", "atoms", int, default=12)
    seed = _get(corp_doc, "corpus", "seed", int, default=0)
    k = _get(corp_doc, "corpus", "k", int, default=1)
    if count < 0 or atoms < 0:
        raise ScenarioError("corpus.count / corpus.atoms: must be >= 0")

    suites = _get(doc, "", "suites", list, required=True)
    for s in suites:
        if s not in SUITES:
            raise ScenarioError("suites: unknown suite %r (have %s)" %
                                (s, ", ".join(sorted(SUITES))))

    try:
        scn = Scenario(name, dim, alpha, map_name, dict(map_params),
                       tuple(center), side, depth, tuple(offset), r, eps,
                       tau, gamma, trunc_size, trunc_kind, generator, count,
                       atoms, seed, k, tuple(suites))
        scn.build_grid()
        scn.goodness_params()
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError("scenario rejected by geometry layer: %s" % exc)
    return scn


def generate_corpus(spec):
    """Measure pairs from a scenario path or document (corpus recipe only)."""
    scn = spec if isinstance(spec, Scenario) else load_scenario(spec)
    return scn.build_corpus()


def _pmap(fn, items):
    """Map preserving order; threads when TWOWEIGHT_THREADS > 1."""
    items = list(items)
    try:
        workers = int(os.environ.get("TWOWEIGHT_THREADS", "1"))
    except ValueError:
        workers = 1
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _key(key):
    return [key[0], list(key[1])] if key is not None else None


def _rng(scn, tag, index):
    return np.random.default_rng([scn.seed, sum(map(ord, tag)), index])


# ---------------------------------------------------------------------------
# suites


def _suite_muckenhoupt(scn, pairs, report):
    grid = scn.build_grid()
    params = scn.frac_params()

    def one(item):
        _, (sig, omg) = item
        return muckenhoupt_report(sig, omg, params, grid).to_dict()

    rows = _pmap(one, enumerate(pairs))
    names = ["offset_A2", "one_tailed_A2", "one_tailed_A2_dual",
             "punctured_A2", "punctured_A2_dual", "energy_A2",
             "energy_A2_dual", "plugged_energy_A2", "plugged_energy_A2_dual"]
    for cname in names:
        best, where = 0.0, None
        for i, row in enumerate(rows):
            val = row.get(cname)
            if val is not None and val >= best:
                best, where = val, i
        report.add("muckenhoupt", cname, best,
                   witness={"instance": where,
                            "family": rows[0]["cube_family"]
                            if rows else "empty corpus"})


def _per_cube_energy_terms(grid, params, sigma, omega):
    """(cube key, energy term, punctured term) per active cube; the energy
    term uses the Haar projection of the coordinate field below the cube."""
    if len(omega) == 0:
        return []
    system = HaarSystem(grid, omega)
    acc = system.accumulate_subtree(system.coordinate_norms())
    common = common_point_masses(sigma, omega)
    out = []
    for cube in grid.active_cubes(sigma, omega):
        sm = cube_mass(sigma, cube)
        if sm == 0.0:
            continue
        proj = acc.get(cube.key, 0.0)
        scale = cube.side ** (2 * params.volume_exponent)
        energy_term = (proj / cube.side ** 2) * sm / scale
        punct_term = sm * punctured_mass(omega, cube, common) / scale
        out.append((cube.key, energy_term, punct_term))
    return out


def _suite_energy_lemma(scn, pairs, report):
    grid = scn.build_grid()
    params = scn.frac_params()
    bound = max(scn.dim, 3)

    def one(item):
        _, (sig, omg) = item
        worst, witness = 0.0, None
        for tag, (a, b) in (("primal", (sig, omg)), ("dual", (omg, sig))):
            sup_punct = max((p for _, _, p in
                             _per_cube_energy_terms(grid, params, a, b)),
                            default=0.0)
            for key, e_term, _ in _per_cube_energy_terms(grid, params, a, b):
                ratio = (e_term / (bound * sup_punct) if sup_punct > 0.0
                         else (np.inf if e_term > 0.0 else 0.0))
                if ratio > worst:
                    worst, witness = ratio, (tag, key)
        return worst, witness

    rows = _pmap(one, enumerate(pairs))
    worst = max((w for w, _ in rows), default=0.0)
    where = int(np.argmax([w for w, _ in rows])) if rows else None
    witness = rows[where][1] if rows else None
    report.add("energy-lemma", "per_cube_energy_over_%d_punctured" % bound,
               worst, passed=worst <= 1.0 + 1e-9, bound=1.0,
               witness={"instance": where,
                        "cube": _key(witness[1]) if witness else None,
                        "side": witness[0] if witness else None})


def _suite_haar(scn, pairs, report):
    grid = scn.build_grid()

    def one(item):
        i, (sig, omg) = item
        rng = _rng(scn, "haar", i)
        gaps, teles, useful = [0.0], [0.0], [0.0]
        for mu in (sig, omg):
            if len(mu) == 0:
                continue
            system = HaarSystem(grid, mu)
            f = rng.standard_normal(len(mu))
            gaps.append(system.parseval_gap(f))
            useful.append(system.useful_haar_worst())
            idx, valid = grid.locate(mu.points[:1], grid.depth)
            if valid[0] and grid.depth >= 1:
                q0 = grid.cube(grid.depth, tuple(int(v) for v in idx[0]))
                q1 = grid.cube(*grid.ancestor_key(q0.key, 1))
                up = int(rng.integers(0, q1.key[0] + 1))
                q2 = grid.cube(*grid.ancestor_key(q1.key, up))
                teles.append(telescoping_check(system, f, q0, q1, q2))
        return max(gaps), max(teles), max(useful)

    rows = _pmap(one, enumerate(pairs))
    gap = max((g for g, _, _ in rows), default=0.0)
    tele = max((t for _, t, _ in rows), default=0.0)
    useful = max((u for _, _, u in rows), default=0.0)
    report.add("haar", "parseval_gap", gap, passed=gap <= 1e-9, bound=1e-9)
    report.add("haar", "telescoping_residual", tele, passed=tele <= 1e-10,
               bound=1e-10)
    report.add("haar", "useful_haar_worst", useful,
               passed=useful <= 1.0 + 1e-12, bound=1.0)


def _suite_depoint(scn, pairs, report):
    grid = scn.build_grid()
    top = grid.top()

    def one(item):
        _, (sig, omg) = item
        common = common_point_masses(sig, omg)
        sig2, omg2 = greedy_depoint(sig, omg, top)
        left = len(common_point_masses(sig2, omg2))
        s_goal = cube_mass(sig, top) / 2.0
        o_goal = punctured_mass(omg, top, common) / 2.0
        s_ok = sig2.total_mass >= s_goal * (1.0 - 1e-12)
        o_ok = omg2.total_mass >= o_goal * (1.0 - 1e-12)
        return left, s_ok, o_ok, len(common)

    rows = _pmap(one, enumerate(pairs))
    left = max((r[0] for r in rows), default=0)
    mass_ok = all(r[1] and r[2] for r in rows)
    report.add("depoint", "residual_common_atoms", left, passed=left == 0,
               bound=0.0)
    report.add("depoint", "half_mass_guarantees", float(mass_ok),
               passed=mass_ok, bound=1.0,
               witness={"max_common": max((r[3] for r in rows), default=0)})


def _suite_operator(scn, pairs, report):
    grid = scn.build_grid()
    params = scn.frac_params()

    def one(item):
        _, (sig, omg) = item
        profiles = default_lattice(sig, omg, params, size=scn.trunc_size,
                                   kind=scn.trunc_kind)
        family = grid.active_cubes(sig, omg)
        nrm = norm_constant(sig, omg, profiles)
        tst = testing_constant(sig, omg, profiles, family)
        tst_dual = testing_constant_dual(sig, omg, profiles, family)
        wbp = weak_boundedness(sig, omg, profiles,
                               wbp_pair_family(grid, 4.0, sig, omg))
        off = offset_A2(sig, omg, params, grid)
        return nrm, tst, tst_dual, wbp, off

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rows = _pmap(one, enumerate(pairs))
    for label, col in (("norm_constant", 0), ("testing_constant", 1),
                       ("testing_constant_dual", 2), ("weak_boundedness", 3)):
        report.add("operator", label, max((r[col] for r in rows), default=0.0))
    worst, where = 0.0, None
    for i, (nrm, _, _, _, off) in enumerate(rows):
        ratio = (np.sqrt(off) / nrm if nrm > 0.0
                 else (np.inf if off > 0.0 else 0.0))
        if ratio > worst:
            worst, where = ratio, i
    bound = frozen_bound("necessity")
    report.add("operator", "sqrt_offset_over_norm", worst,
               passed=worst <= bound, bound=bound,
               witness={"instance": where})


def _suite_reversal(scn, pairs, report):
    grid = scn.build_grid()
    params = scn.frac_params()
    top = grid.top()
    asserted = (scn.generator == "isotropic-dispersed"
                and reversal_admissible(scn.k, scn.dim, scn.alpha))

    def one(item):
        _, (mu, omg) = item
        _, _, ratio = energy_reversal_check(top, mu, omg, params, scn.gamma,
                                            grid)
        return ratio

    ratios = _pmap(one, enumerate(pairs))
    worst = max(ratios) if ratios else 0.0
    where = int(np.argmax(ratios)) if ratios else None
    bound = frozen_bound("reversal")
    report.add("reversal", "worst_ratio", worst,
               passed=(worst <= bound) if asserted else None,
               bound=bound if asserted else None,
               witness={"instance": where, "generator": scn.generator,
                        "k": scn.k, "admissible": reversal_admissible(
                            scn.k, scn.dim, scn.alpha)})
    if ratios:
        report.add("reversal", "median_ratio",
                   float(np.median([r for r in ratios if np.isfinite(r)]
                                   or [0.0])))


def _suite_corona(scn, pairs, report):
    grid = scn.build_grid()
    params = scn.frac_params()
    goodness = scn.goodness_params()
    c_stop = 2.0

    def one(item):
        i, (sig, omg) = item
        rng = _rng(scn, "corona", i)
        if len(sig) == 0 or sig.total_mass == 0.0:
            return True, 0.0, 0.0, 0.0, True
        f = rng.standard_normal(len(sig))
        forest = cz_stopping(f, sig, grid, c_stop)
        props = validate_stopping_data(forest, f, sig, 2.0 * c_stop)
        blocks = corona_projection(forest, f, sig)
        recon = sum(blocks.values())
        resid = float(np.abs(recon - f).max())
        qo = quasi_orthogonality_check(forest, f, sig)
        stopping, _, e_sq = energy_corona(
            sig, omg, params, goodness, grid, partition_budget=16,
            rng=np.random.default_rng(i))
        ratio = carleson_check(stopping.keys, sig, grid)
        worst_stop = 0.0
        if stopping.threshold > 0.0:
            ev_obj = EnergyEvaluator(grid, sig, omg, params, goodness)
            stop_set = set(stopping.keys)
            for s_key in stopping.keys:
                s_cube = grid.cube(*s_key)
                corona_keys = [c.key for c in grid.active_cubes(sig)
                               if grid.key_contains(s_key, c.key)
                               and c.key not in stop_set
                               and _deepest_owner(stopping.keys, grid, c.key)
                               == s_key]
                if corona_keys:
                    x_sq = stopping_energy(corona_keys, s_cube, sig, omg,
                                           params, goodness, grid,
                                           evaluator=ev_obj)
                    worst_stop = max(worst_stop, x_sq / stopping.threshold)
        return (props["pass"], resid, qo, ratio, worst_stop)

    rows = _pmap(one, enumerate(pairs))
    props_ok = all(r[0] for r in rows)
    resid = max((r[1] for r in rows), default=0.0)
    qo = max((r[2] for r in rows), default=0.0)
    ratio = max((r[3] for r in rows), default=0.0)
    worst_stop = max((r[4] for r in rows), default=0.0)
    report.add("corona", "stopping_data_properties", float(props_ok),
               passed=props_ok, bound=1.0)
    report.add("corona", "reconstruction_residual", resid,
               passed=resid <= 1e-10, bound=1e-10)
    report.add("corona", "quasi_orthogonality", qo)
    report.add("corona", "energy_carleson_ratio", ratio,
               passed=ratio <= 2.0 * (1.0 + 1e-12), bound=2.0)
    report.add("corona", "stopping_energy_over_threshold", worst_stop,
               passed=worst_stop <= 1.0 + 1e-9, bound=1.0)


def _deepest_owner(stopping_keys, grid, key):
    best = None
    for s in stopping_keys:
        if grid.key_contains(s, key) and (best is None or s[0] > best[0]):
            best = s
    return best


def _suite_funcenergy(scn, pairs, report):
    grid = scn.build_grid()
    params = scn.frac_params()
    goodness = scn.goodness_params()

    def one(item):
        i, (sig, omg) = item
        rng = _rng(scn, "funcenergy", i)
        if len(sig) == 0 or sig.total_mass == 0.0 or len(omg) == 0:
            return 0.0, 0, 0.0, (0.0, 0.0, 0.0), 0.0
        f = rng.standard_normal(len(sig))
        forest = cz_stopping(f, sig, grid, 2.0)
        upper = build_upper_measure(forest, omg, grid, goodness)
        total = float(upper.weights.sum())
        tent = upper.tent_integral(grid.top())
        tent_gap = abs(tent - total) / max(total, 1e-300)
        overlap = max((tau_overlap_count(c, upper)
                       for c in grid.active_cubes(sig, omg)), default=0)
        feval = functional_energy(sig, upper, params)
        fwd = forward_testing(grid.top(), sig, upper, params)
        bwd = backward_testing(grid.top(), sig, upper, params)
        return tent_gap, overlap, feval, fwd, bwd

    rows = _pmap(one, enumerate(pairs))
    tent_gap = max((r[0] for r in rows), default=0.0)
    overlap = max((r[1] for r in rows), default=0)
    report.add("funcenergy", "tent_integral_gap", tent_gap,
               passed=tent_gap <= 1e-10, bound=1e-10)
    report.add("funcenergy", "tau_overlap_count", overlap,
               passed=overlap <= 1, bound=1.0)
    report.add("funcenergy", "functional_energy",
               max((r[2] for r in rows), default=0.0))
    report.add("funcenergy", "forward_testing_total",
               max((r[3][2] for r in rows), default=0.0))
    report.add("funcenergy", "backward_testing",
               max((r[4] for r in rows), default=0.0))


def _suite_strong_energy(scn, pairs, report):
    grid = scn.build_grid()
    params = scn.frac_params()
    goodness = scn.goodness_params()

    def one(item):
        i, (sig, omg) = item
        est = strong_energy_constant(sig, omg, params, goodness, grid,
                                     partition_budget=16,
                                     rng=np.random.default_rng(i))
        return est.value, est.partitions_tried

    rows = _pmap(one, enumerate(pairs))
    report.add("strong-energy", "lower_bound",
               max((v for v, _ in rows), default=0.0),
               witness={"partitions_tried": max((t for _, t in rows),
                                                default=0)})


SUITES = {
    "muckenhoupt": _suite_muckenhoupt,
    "energy-lemma": _suite_energy_lemma,
    "haar": _suite_haar,
    "depoint": _suite_depoint,
    "operator": _suite_operator,
    "reversal": _suite_reversal,
    "corona": _suite_corona,
    "funcenergy": _suite_funcenergy,
    "strong-energy": _suite_strong_energy,
}


def run_scenario(source, out_dir=None, seed=None, suites=None):
    """Run a scenario and return the report; writes report files and failing
    -instance witness measures when out_dir is given."""
    scn = load_scenario(source)
    if seed is not None:
        scn.seed = int(seed)
    selected = list(suites) if suites else list(scn.suites)
    for s in selected:
        if s not in SUITES:
            raise ScenarioError("suites: unknown suite %r" % s)
    pairs = scn.build_corpus()
    report = SuiteReport(scn.name, scn.seed)
    for sname in selected:
        SUITES[sname](scn, pairs, report)
    if out_dir:
        report.save(out_dir)
        for suite, res in report.checks:
            if res.passed is False and res.witness and \
                    res.witness.get("instance") is not None:
                i = res.witness["instance"]
                if 0 <= i < len(pairs):
                    sig, omg = pairs[i]
                    base = os.path.join(out_dir,
                                        "witness-%s-%d" % (res.name, i))
                    sig.save(base + "-sigma.json")
                    omg.save(base + "-omega.json")
    return report


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="twoweight",
        description="Run measure-pair check suites from a JSON scenario.")
    parser.add_argument("--scenario", required=True,
                        help="path to the scenario JSON document")
    parser.add_argument("--out", default=None,
                        help="directory for report.json / report.md")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the corpus seed")
    parser.add_argument("--suite", action="append", default=None,
                        metavar="NAME",
                        help="run only the named suite (repeatable)")
    args = parser.parse_args(argv)
    try:
        report = run_scenario(args.scenario, out_dir=args.out,
                              seed=args.seed, suites=args.suite)
    except ScenarioError as exc:
        print("scenario error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("io error: %s" % exc, file=sys.stderr)
        return 2
    print(report.to_markdown())
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
