import math

import numpy as np
import pytest

from dyadicwave import naive
from dyadicwave.besov import besov_energy_integral
from dyadicwave.evolution import partial_sums
from dyadicwave.haar import analyze, build_haar, project, synthesize
from dyadicwave.maximal import (
    bound_constants, bound_report_json, default_t_grid, m_dy, m_sharp, s_maximal, s_maximal_t, theoretical_ceiling,
)
from dyadicwave.operator import measure_eigenvalues
from dyadicwave.tree import build_explicit_tree, build_uniform_tree

from conftest import random_function

MIXED = {"children": [
    {"measure": 0.5, "children": [{"measure": 0.2}, {"measure": 0.3}]},
    {"measure": 0.25, "children": [{"measure": 0.05}, {"measure": 0.1}, {"measure": 0.1}]},
    {"measure": 0.25}]}


@pytest.fixture(scope="module")
def eig4(tri4):
    return measure_eigenvalues(tri4[1], 0.3)


def test_m_dy_examples(tri4):
    tree, H = tri4
    np.testing.assert_allclose(m_dy(tree.constant(-2.0)).values, 2.0)
    v = m_dy(tree.indicator((0,))).values
    inside = tree.ancestors[1] == 0
    np.testing.assert_allclose(v[inside], 1.0)
    np.testing.assert_allclose(v[~inside], 1 / 3)


def test_m_dy_root_wavelet(tri4):
    tree, H = tri4
    h = H.function(H.find((), 1))
    expect = np.maximum(np.abs(h.values), np.sum(np.abs(h.values) * tree.leaf_measures))
    np.testing.assert_allclose(m_dy(h).values, expect, atol=1e-14)


@pytest.mark.parametrize("make", [lambda: build_uniform_tree(3, 4), lambda: build_explicit_tree(MIXED)])
def test_m_dy_matches_oracle(make, rng):
    tree = make()
    f = random_function(tree, rng)
    np.testing.assert_allclose(m_dy(f).values, naive.m_dy(tree, f.values), rtol=1e-14)


@pytest.mark.parametrize("complex_", [False, True])
@pytest.mark.parametrize("lam", [0.2, 0.7])
def test_m_sharp_matches_oracle(tri4, rng, complex_, lam):
    tree, _ = tri4
    f = random_function(tree, rng, complex_=complex_)
    fast = m_sharp(f, lam).values
    np.testing.assert_allclose(fast, naive.m_sharp(tree, f.values, lam), rtol=1e-12)
    np.testing.assert_allclose(m_sharp(f, lam, method="naive").values, fast, rtol=1e-12)


def test_m_sharp_examples(tri4):
    tree, H = tri4
    assert np.all(m_sharp(tree.constant(4.0), 0.5).values == 0)
    h = H.function(H.find((), 1))
    x = tree.leaves_of(1, 2).start  # inside the third child, where h = 0
    assert m_sharp(h, 0.5).values[x] == pytest.approx(2 * math.sqrt(1.5) / 3, rel=1e-12)
    assert m_sharp(h, 0.5).values[x] == pytest.approx(0.8165, abs=1e-4)
    with pytest.raises(ValueError):
        m_sharp(h, 1.0)


def test_devore_inequality(tri4, rng):
    tree, _ = tri4
    for lam in (0.2, 0.5, 0.8):
        for _ in range(20):
            f = random_function(tree, rng)
            bnorm = math.sqrt(f.norm() ** 2 + besov_energy_integral(f, lam))
            assert m_sharp(f, lam).norm() <= bnorm * (1 + 1e-10)


def test_partial_sum_at_zero_is_projection(tri4, eig4, rng):
    tree, H = tri4
    f = random_function(tree, rng, zero_mean=True)
    u0 = analyze(f, H).replace(mean=0.0)
    S0 = partial_sums(u0, 0.0, eig4)
    for n in range(tree.depth):
        np.testing.assert_allclose(S0[n], project(f, H, n + 1).values, atol=1e-12)
    assert np.all(np.abs(S0).max(axis=0) <= m_dy(f).values + 1e-12)


def test_s_maximal_examples(tri4, eig4, rng):
    tree, H = tri4
    assert np.all(s_maximal(H.zeros(), eig4, [0.5]).values == 0)
    u0 = analyze(random_function(tree, rng, zero_mean=True), H).replace(mean=0.0)
    from dyadicwave.evolution import evolve
    one = s_maximal_t(u0, eig4, 0.4, n_grid=[tree.depth - 1]).values
    np.testing.assert_allclose(one, np.abs(evolve(u0, 0.4, eig4).function().values), atol=1e-12)
    for bad in ([], [0.0], [1.0], [0.5, 2.0]):
        with pytest.raises(ValueError):
            s_maximal(u0, eig4, bad)
    assert s_maximal_t(u0, eig4, 3.0).values.shape == (tree.n_leaves,)


def test_default_grid():
    g = default_t_grid()
    assert len(g) == 32 and g[0] == pytest.approx(1e-3) and g[-1] < 1
    assert np.all(np.diff(g) > 0)


def test_bound_constants(tri4, eig4, rng):
    tree, H = tri4
    lam = 0.6
    ceiling = theoretical_ceiling(eig4, lam)
    for _ in range(5):
        u0 = analyze(random_function(tree, rng, zero_mean=True), H).replace(mean=0.0)
        c = bound_constants(u0, eig4, lam)
        vals = [c["C_b"], c["C_c"]] + c["C_a"] + c["C_diff"]
        assert all(np.isfinite(v) and v >= 0 for v in vals)
        assert max(c["C_diff"]) <= ceiling
        # the difference term scales linearly: its constant settles as t -> 0
        small = c["C_diff"][:8]
        assert max(small) / min(small) < 1.01
        # S*_t <= C t M# + 2 M_dy holds with the measured constant
        f = synthesize(u0)
        md, ms = m_dy(f).values, m_sharp(f, lam).values
        for t, C in zip(c["t"][::7], c["C_a"][::7]):
            st = np.abs(partial_sums(u0, t, eig4)).max(axis=0)
            assert np.all(st <= C * t * ms + 2 * md + 1e-12)


def test_bound_report_json_is_stable(tri4, eig4, rng):
    tree, H = tri4
    u0 = analyze(random_function(tree, rng, zero_mean=True), H).replace(mean=0.0)
    reports = [bound_constants(u0, eig4, 0.6, t_grid=[0.01, 0.1])]
    a, b = bound_report_json(reports), bound_report_json(reports)
    assert a == b and '"ceiling"' in a
