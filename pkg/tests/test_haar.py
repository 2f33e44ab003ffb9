import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyadicwave import naive
from dyadicwave.haar import (
    HaarSpectrum, SpectrumSizeError, analyze, build_haar, helmert_stencils, project, synthesize,
)
from dyadicwave.maximal import m_dy
from dyadicwave.tree import build_explicit_tree, build_uniform_tree, l2_inner

from conftest import random_function

R32, R2 = math.sqrt(1.5), math.sqrt(2)

MIXED = {"children": [
    {"measure": 0.5, "children": [{"measure": 0.2}, {"measure": 0.3}]},
    {"measure": 0.25, "children": [{"measure": 0.05}, {"measure": 0.1}, {"measure": 0.1}]},
    {"measure": 0.25}]}


def cell_average_oracle(f, M):
    tree = f.tree
    out = np.empty(tree.n_leaves, dtype=complex)
    for q in range(tree.n_cubes(M)):
        sl = tree.leaves_of(M, q)
        w = tree.leaf_measures[sl]
        out[sl] = np.sum(f.values[sl] * w) / w.sum()
    return out


@pytest.mark.parametrize("mu", [[0.5, 0.5], [1 / 3] * 3, [0.1, 0.6, 0.3], [0.2, 0.2, 0.4, 0.2]])
def test_stencils_zero_mean_unit_norm(mu):
    S = helmert_stencils(mu)
    assert S.shape == (len(mu) - 1, len(mu))
    np.testing.assert_allclose(S @ mu, 0, atol=1e-15)
    np.testing.assert_allclose((S * mu) @ S.T, np.eye(len(mu) - 1), atol=1e-14)
    assert np.all(S[:, 0] > 0)  # first nonzero entry positive


def test_binary_root_stencil():
    tree = build_uniform_tree(2, 3)
    np.testing.assert_allclose(build_haar(tree)[0].stencil, [1, -1])


def test_triadic_stencils_scale():
    tree = build_uniform_tree(3, 3)
    H = build_haar(tree)
    for j in range(3):
        for i, base in ((1, [R32, -R32, 0]), (2, [1 / R2, 1 / R2, -R2])):
            np.testing.assert_allclose(H[H.find((0,) * j, i)].stencil, 3 ** (j / 2) * np.array(base), atol=1e-12)


def test_evaluate_examples():
    tree = build_uniform_tree(3, 2)
    H = build_haar(tree)
    h1, h2 = H.find((), 1), H.find((), 2)
    assert H.evaluate(h1, (0, 1)) == pytest.approx(1.22474, abs=1e-5)
    assert H.evaluate(h2, (2, 0)) == pytest.approx(-1.41421, abs=1e-5)
    assert H.evaluate(H.find((1,), 1), (0, 0)) == 0.0


@pytest.mark.parametrize("make", [lambda: build_uniform_tree(3, 5), lambda: build_uniform_tree(2, 6),
                                  lambda: build_explicit_tree(MIXED)])
def test_orthonormal(make):
    tree = make()
    H = build_haar(tree)
    assert len(H) == tree.n_leaves - 1
    np.testing.assert_allclose(naive.gram(H), np.eye(len(H)), atol=1e-12)
    np.testing.assert_allclose(H.dense() @ tree.leaf_measures, 0, atol=1e-12)


def test_spot_pairs_deep(rng):
    tree = build_uniform_tree(3, 8)
    H = build_haar(tree)
    mu = tree.leaf_measures
    ks = rng.integers(0, len(H), 40)
    for a, b in zip(ks[::2], ks[1::2]):
        ha, hb = H.function(a).values, H.function(b).values
        assert np.sum(ha * np.conj(hb) * mu) == pytest.approx(float(a == b), abs=1e-12)


def test_analyze_examples():
    tree = build_uniform_tree(3, 3)
    H = build_haar(tree)
    s = analyze(tree.constant(2.5), H)
    assert s.mean == pytest.approx(2.5) and np.abs(s.coefficients).max() < 1e-14
    k = H.find((1, 2), 2)
    s = analyze(H.function(k), H)
    expect = np.zeros(len(H))
    expect[k] = 1
    np.testing.assert_allclose(s.coefficients, expect, atol=1e-13)
    s = analyze(tree.indicator((0,)), H)
    assert s.mean == pytest.approx(1 / 3)
    assert s.coefficients[H.find((), 1)] == pytest.approx(0.40825, abs=1e-5)
    assert s.coefficients[H.find((), 2)] == pytest.approx(0.23570, abs=1e-5)
    assert np.abs(s.coefficients[2:]).max() < 1e-14


def test_analyze_matches_inner_products(tri4, rng):
    tree, H = tri4
    f = random_function(tree, rng)
    s = analyze(f, H)
    direct = [l2_inner(f, H.function(k)) for k in range(len(H))]
    np.testing.assert_allclose(s.coefficients, direct, atol=1e-12)


def test_parseval_and_round_trip(rng):
    for tree in (build_uniform_tree(3, 4), build_explicit_tree(MIXED)):
        H = build_haar(tree)
        for _ in range(100):
            f = random_function(tree, rng)
            s = analyze(f, H)
            assert s.norm2() == pytest.approx(f.norm() ** 2, rel=1e-10)
            np.testing.assert_allclose(synthesize(s).values, f.values, atol=1e-12)


def test_synthesize_examples(tri4):
    tree, H = tri4
    np.testing.assert_allclose(synthesize(H.zeros().replace(mean=1.5)).values, 1.5)
    with pytest.raises(SpectrumSizeError):
        HaarSpectrum(H, 0.0, np.zeros(3))


@pytest.mark.parametrize("M", [0, 1, 2, 3, 4])
def test_project_matches_cell_averages(tri4, rng, M):
    tree, H = tri4
    f = random_function(tree, rng)
    P = project(f, H, M)
    np.testing.assert_allclose(P.values, cell_average_oracle(f, M), atol=1e-12)
    assert np.all(np.abs(P.values) <= m_dy(f).values + 1e-12)


def test_project_examples(tri4, rng):
    tree, H = tri4
    f = random_function(tree, rng)
    np.testing.assert_allclose(project(f, H, 4).values, f.values, atol=1e-12)
    np.testing.assert_allclose(project(f, H, 0).values, f.integral(), atol=1e-12)
    P = project(tree.indicator((0,)), H, 1)
    np.testing.assert_allclose(P.values[tree.ancestors[1] == 0], 1, atol=1e-14)
    np.testing.assert_allclose(P.values[tree.ancestors[1] != 0], 0, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_round_trip_property(b, N, seed):
    tree = build_uniform_tree(b, N)
    H = build_haar(tree)
    rng = np.random.default_rng(seed)
    s = H.zeros()
    s.coefficients[:] = rng.standard_normal(len(H)) + 1j * rng.standard_normal(len(H))
    s.mean = complex(rng.standard_normal())
    back = analyze(synthesize(s), H)
    np.testing.assert_allclose(back.coefficients, s.coefficients, atol=1e-12)
    assert back.mean == pytest.approx(s.mean, abs=1e-12)
