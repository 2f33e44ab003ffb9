import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadicwave.tree import (
    MeasureMismatchError, MixedTreeError, OffspringBoundError, ResourceLimitError, TreeError,
    annulus_integral, build_explicit_tree, build_uniform_tree, l2_inner, load_tree,
)


def brute_annulus(tree, address, p):
    """Direct sum over leaf cells outside the cube, from a point inside it."""
    level, q = tree.locate(address)
    x = tree.leaves_of(level, q).start
    total = 0.0
    for y in range(tree.n_leaves):
        if tree.ancestors[level, y] != q:
            total += tree.delta(x, y) ** (-(1 + p)) * tree.leaf_measures[y]
    return total


@pytest.mark.parametrize("b,N", [(3, 1), (3, 2), (2, 3), (5, 2)])
def test_uniform_measures(b, N):
    tree = build_uniform_tree(b, N)
    assert tree.n_leaves == b ** N
    for j in range(N + 1):
        assert tree.n_cubes(j) == b ** j
        np.testing.assert_allclose(tree.measures[j], b ** -j, rtol=0, atol=1e-15)
    assert math.fsum(tree.leaf_measures) == pytest.approx(1.0, abs=1e-14)


def test_resource_limit():
    with pytest.raises(ResourceLimitError):
        build_uniform_tree(3, 6, max_leaves=100)


def test_explicit_two_leaves():
    tree = build_explicit_tree({"children": [{"measure": 0.5}, {"measure": 0.5}]})
    assert tree.n_leaves == 2 and tree.depth == 1


def test_measure_mismatch_names_cube():
    with pytest.raises(MeasureMismatchError, match=r"\(\)"):
        build_explicit_tree({"children": [{"measure": 0.5}, {"measure": 0.4}]})


def test_offspring_bound():
    spec = {"children": [{"measure": 0.1}] * 10}
    with pytest.raises(OffspringBoundError):
        build_explicit_tree(spec)
    assert build_explicit_tree(spec, max_offspring=10).n_leaves == 10


def test_mixed_depth_is_padded():
    spec = {"measure": 1.0, "children": [
        {"measure": 1 / 3, "children": [{"measure": 1 / 6}, {"measure": 1 / 6}]},
        {"measure": 1 / 3}, {"measure": 1 / 3}]}
    tree = build_explicit_tree(spec)
    assert tree.depth == 2 and tree.n_leaves == 4
    assert math.fsum(tree.leaf_measures) == pytest.approx(1.0, abs=1e-14)
    np.testing.assert_allclose(tree.leaf_measures, [1 / 6, 1 / 6, 1 / 3, 1 / 3])
    # padded cubes have a single child of the same measure
    assert list(tree.child_counts[1]) == [2, 1, 1]
    # round trip through the nested description
    again = build_explicit_tree(tree.to_spec())
    np.testing.assert_allclose(again.leaf_measures, tree.leaf_measures)


def test_load_tree_from_file(tmp_path):
    p = tmp_path / "t.json"
    p.write_text('{"uniform": {"b": 2, "N": 3}}')
    assert load_tree(p).n_leaves == 8


def test_delta_examples():
    tree = build_uniform_tree(3, 2)
    assert tree.delta((0, 0), (0, 0)) == 0.0
    assert tree.delta((0, 0), (0, 1)) == pytest.approx(1 / 3)
    assert tree.delta((0, 2), (1, 0)) == 1.0
    with pytest.raises(TreeError):
        tree.delta((0,), (0, 1))


def test_ultrametric_random_triples(rng):
    tree = build_uniform_tree(3, 5)
    x, y, z = rng.integers(0, tree.n_leaves, (3, 10_000))
    for a, b, c in zip(x, y, z):
        assert tree.delta(a, c) <= max(tree.delta(a, b), tree.delta(b, c))


def test_delta_constant_off_cube():
    tree = build_uniform_tree(2, 4)
    level, q = tree.locate((1, 0))
    y = 0  # leaf inside (0, ...)
    rows = [tree.delta(x, y) for x in range(tree.leaves_of(level, q).start, tree.leaves_of(level, q).stop)]
    assert len(set(rows)) == 1


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
@pytest.mark.parametrize("b,N", [(3, 4), (2, 5)])
def test_annulus_matches_brute_force(b, N, p):
    tree = build_uniform_tree(b, N)
    for j in range(N + 1):
        addr = (0,) * j
        exact = (1 - 1 / b) * (b ** (j * p) - 1) / (b ** p - 1)
        assert annulus_integral(tree, addr, p) == pytest.approx(brute_annulus(tree, addr, p), rel=1e-12, abs=1e-14)
        assert annulus_integral(tree, addr, p) == pytest.approx(exact, rel=1e-12, abs=1e-14)


def test_annulus_examples():
    tree = build_uniform_tree(3, 3)
    assert annulus_integral(tree, (), 0.5) == 0.0
    assert annulus_integral(tree, (1,), 0.5) == pytest.approx(2 / 3, rel=1e-14)
    assert annulus_integral(tree, (1, 2), 0.5) == pytest.approx(2 / 3 * (1 + math.sqrt(3)), rel=1e-14)
    assert annulus_integral(tree, (1, 2), 0.5) == pytest.approx(1.8214, abs=1e-4)


@pytest.mark.parametrize("p", [0.25, 0.5, 0.75])
def test_annulus_comparability(p):
    # annulus(Q) * mu(Q)^p stays in a window fixed by b and p at every scale
    tree = build_uniform_tree(3, 6)
    scaled = [annulus_integral(tree, (0,) * j, p) * 3.0 ** (-j * p) for j in range(1, 7)]
    lo, hi = (1 - 1 / 3) * 3 ** -p, (1 - 1 / 3) / (3 ** p - 1)
    assert all(lo - 1e-12 <= s <= hi + 1e-12 for s in scaled)
    assert all(a <= b + 1e-15 for a, b in zip(scaled, scaled[1:]))


def test_annulus_explicit_tree_brute_force():
    spec = {"children": [
        {"measure": 0.5, "children": [{"measure": 0.2}, {"measure": 0.3}]},
        {"measure": 0.25, "children": [{"measure": 0.05}, {"measure": 0.1}, {"measure": 0.1}]},
        {"measure": 0.25}]}
    tree = build_explicit_tree(spec)
    for addr in [(0,), (1,), (2,), (0, 1), (1, 0), (2, 0)]:
        assert annulus_integral(tree, addr, 0.4) == pytest.approx(brute_annulus(tree, addr, 0.4), rel=1e-12)


def test_l2_inner_examples():
    tree = build_uniform_tree(3, 3)
    one = tree.constant(1.0)
    assert l2_inner(one, one) == pytest.approx(1.0)
    assert l2_inner(tree.indicator((0,)), tree.indicator((1,))) == 0
    assert l2_inner(tree.indicator((2,)), one) == pytest.approx(1 / 3)
    with pytest.raises(MixedTreeError):
        l2_inner(one, build_uniform_tree(3, 3).constant(1.0))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=2, max_size=4), st.integers(0, 2 ** 32 - 1))
def test_random_explicit_trees_are_consistent(counts, seed):
    # random measures on a tree whose level j cubes all have counts[j] children
    rng = np.random.default_rng(seed)

    def node(m, depth):
        if depth == len(counts):
            return {"measure": m}
        w = rng.random(counts[depth]) + 0.1
        return {"measure": m, "children": [node(m * x / w.sum(), depth + 1) for x in w]}
    tree = build_explicit_tree(node(1.0, 0), rtol=1e-9)
    assert math.fsum(tree.leaf_measures) == pytest.approx(1.0, abs=1e-12)
    for j in range(tree.depth):
        sums = np.bincount(tree.parents[j + 1], tree.measures[j + 1])
        np.testing.assert_allclose(sums, tree.measures[j], rtol=1e-12)
