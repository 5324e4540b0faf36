"""Quasicube geometry: distances, goodness, deep families, alternates."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import box, unit_grid
from twoweight.quasigeom import (DyadicQuasigrid, GoodnessParams, QuasiCube,
                                 alternate_quasicubes, is_deeply_embedded,
                                 is_good, is_tau_good, make_map,
                                 maximal_deep_subcubes, neighbour_pairs, qdist)


class TestQdist:
    def test_separated_intervals(self):
        assert qdist(box(0.0, 1.0, 1), box(2.0, 1.0, 1)) == 1.0

    def test_overlapping_cubes(self):
        assert qdist(box(0.0, 1.0, 1), box(0.5, 1.0, 1)) == 0.0

    def test_box_distance_2d(self):
        e = box([0.0, 0.0], 1.0, 2)
        f = box([2.0, 0.0], 1.0, 2)
        assert qdist(e, f) == 1.0

    def test_map_mismatch(self):
        a = box(0.0, 1.0, 2)
        b = QuasiCube(make_map(2, "shear"), np.array([0.5, 0.5]), 1.0)
        with pytest.raises(ValueError):
            qdist(a, b)


class TestDeepEmbedding:
    def test_hand_check(self):
        params = GoodnessParams(r=3, eps=0.5)
        outer = box(0.0, 1.0, 1)
        inner = box(0.5, 0.0625, 1)
        # clearance 0.4375 against the requirement 0.125
        assert is_deeply_embedded(inner, outer, params)

    def test_equal_cubes_fail_side_test(self):
        params = GoodnessParams(r=3, eps=0.5)
        outer = box(0.0, 1.0, 1)
        assert not is_deeply_embedded(outer, outer, params)

    def test_boundary_contact_fails(self):
        params = GoodnessParams(r=3, eps=0.5)
        outer = box(0.0, 1.0, 1)
        inner = box(0.0, 0.0625, 1)
        assert not is_deeply_embedded(inner, outer, params)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 3), st.floats(0.4, 0.6), st.floats(1.0, 3.0))
    def test_monotone_in_concentric_outer(self, dim, frac, grow):
        params = GoodnessParams(r=3, eps=0.5)
        outer = box([0.0] * dim, 1.0, 2) if dim == 2 else box([0.0] * dim, 1.0, dim)
        inner = QuasiCube(outer.map, outer.center, 0.0625)
        inner = inner.translate([0.0625 * (frac - 0.5)] * dim)
        if is_deeply_embedded(inner, outer, params):
            bigger = outer.dilate(grow)
            assert is_deeply_embedded(inner, bigger, params)


class TestGoodness:
    def test_top_cube_good(self):
        grid = unit_grid(1, depth=3)
        assert is_good(grid.top(), grid, GoodnessParams())

    def test_interior_cube_good(self):
        grid = unit_grid(1, depth=5)
        assert is_good(grid.cube(5, (19,)), grid, GoodnessParams())

    def test_boundary_hugging_cube_bad(self):
        grid = unit_grid(1, depth=5)
        assert not is_good(grid.cube(5, (0,)), grid, GoodnessParams())

    def test_matches_exhaustive_scan(self):
        grid = unit_grid(2, depth=4)
        params = GoodnessParams()
        for level in range(grid.depth + 1):
            for idx in itertools.product(range(1 << level), repeat=2):
                cube = grid.cube(level, idx)
                expect = True
                for up in range(1, level + 1):
                    anc = grid.cube(*grid.ancestor_key(cube.key, up))
                    if cube.side * (1 << params.r) <= anc.side * (1 + 1e-12):
                        expect = expect and is_deeply_embedded(cube, anc, params)
                assert is_good(cube, grid, params) == expect, cube.key

    def test_tau_good_requires_good_ancestors_and_children(self):
        grid = unit_grid(1, depth=5)
        params = GoodnessParams(tau=1)
        assert is_tau_good(grid.top(), grid, params)
        for level in range(grid.depth + 1):
            for i in range(1 << level):
                cube = grid.cube(level, (i,))
                expect = all(
                    is_good(grid.cube(*grid.ancestor_key(cube.key, up)), grid,
                            params)
                    for up in range(0, min(params.tau, level) + 1)
                ) and all(is_good(c, grid, params) for c in grid.children(cube))
                assert is_tau_good(cube, grid, params) == expect, cube.key


class TestMaximalDeepSubcubes:
    def test_depth_exhausted(self):
        grid = unit_grid(1, depth=2)
        fam = maximal_deep_subcubes(grid.top(), grid, GoodnessParams(r=8))
        assert fam == [] and fam.truncated

    def test_against_bruteforce(self):
        grid = unit_grid(1, depth=4)
        params = GoodnessParams(r=1, eps=0.5)
        fam = maximal_deep_subcubes(grid.top(), grid, params)
        assert fam
        deep = []
        for level in range(grid.depth + 1):
            for i in range(1 << level):
                cube = grid.cube(level, (i,))
                if is_deeply_embedded(cube, grid.top(), params):
                    deep.append(cube)
        keys = {c.key for c in fam}
        for cube in deep:
            # every deep cube is covered by exactly one maximal element
            owners = [k for k in keys
                      if grid.key_contains(k, cube.key)]
            assert len(owners) == 1, cube.key
        for cube in fam:
            parent = grid.parent(cube)
            assert not is_deeply_embedded(parent, grid.top(), params)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 2), st.integers(0, 2 ** 31 - 1))
    def test_pairwise_disjoint(self, dim, seed):
        rng = np.random.default_rng(seed)
        grid = unit_grid(dim, depth=4)
        params = GoodnessParams(r=int(rng.integers(1, 3)), eps=0.5)
        fam = maximal_deep_subcubes(grid.top(), grid, params)
        for a, b in itertools.combinations(fam, 2):
            assert a.disjoint_from(b)


class TestAlternates:
    def test_each_cell_in_two_intervals(self):
        grid = unit_grid(1, depth=2)
        alts = alternate_quasicubes(grid, 1)
        for i in range(2):
            cell = grid.cube(1, (i,))
            covering = [a for a in alts if a.contains_cube(cell, tol=1e-12)]
            assert len(covering) == 2

    def test_parent_among_alternates(self):
        grid = unit_grid(1, depth=2)
        alts = alternate_quasicubes(grid, 1)
        top = grid.top()
        assert any(a.side == top.side and np.allclose(a.center, top.center)
                   for a in alts)

    def test_count_2d(self):
        grid = unit_grid(2, depth=2)
        alts = alternate_quasicubes(grid, 1)
        # corners on the level-1 lattice extended one cell below: 3^2
        assert len(alts) == 9
        for idx in itertools.product(range(2), repeat=2):
            cell = grid.cube(1, idx)
            covering = [a for a in alts if a.contains_cube(cell, tol=1e-12)]
            assert len(covering) == 4


class TestNeighbourPairs:
    def make_grid(self):
        return DyadicQuasigrid(make_map(1, "identity"), np.array([2.0]), 4.0, 2)

    def test_adjacent_intervals_are_neighbours(self):
        grid = self.make_grid()
        pairs = {(a.key, b.key) for a, b in neighbour_pairs(grid, 2)}
        assert ((2, (0,)), (2, (1,))) in pairs

    def test_no_self_pairs(self):
        grid = self.make_grid()
        for a, b in neighbour_pairs(grid, 2):
            assert a.key != b.key and a.disjoint_from(b)

    def test_separated_intervals_excluded(self):
        grid = self.make_grid()
        pairs = {(a.key, b.key) for a, b in neighbour_pairs(grid, 2)}
        assert ((2, (0,)), (2, (3,))) not in pairs


class TestGridStructure:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 3), st.sampled_from(["identity", "shear", "spiral"]),
           st.integers(0, 2 ** 31 - 1))
    def test_children_partition_parent(self, dim, map_name, seed):
        if (map_name == "spiral" and dim != 2) or \
                (map_name == "shear" and dim < 2):
            map_name = "identity"
        grid = DyadicQuasigrid(make_map(dim, map_name), np.zeros(dim), 1.0, 3)
        rng = np.random.default_rng(seed)
        pts = grid.map.forward(rng.uniform(-0.49, 0.49, size=(50, dim)))
        for level in range(grid.depth):
            for idx, cube in [(k, grid.cube(level, k))
                              for k in grid.cell_map(pts, level)]:
                inside = cube.contains_points(pts)
                counts = np.zeros(inside.sum(), dtype=int)
                for child in grid.children(cube):
                    counts += child.contains_points(pts[inside]).astype(int)
                assert (counts == 1).all()

    def test_locate_matches_contains(self, rng):
        grid = unit_grid(2, depth=3)
        pts = rng.uniform(-0.6, 0.6, size=(200, 2))
        idx, valid = grid.locate(pts, 3)
        for i in range(len(pts)):
            if valid[i]:
                cube = grid.cube(3, idx[i])
                assert cube.contains_points(pts[i:i + 1])[0]
            else:
                assert not grid.top().contains_points(pts[i:i + 1])[0]
