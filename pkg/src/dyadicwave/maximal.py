"""Dyadic maximal operators and the Schrodinger maximal functions.

All suprema over cubes run over the ``N + 1`` ancestors of a leaf.  Suprema
over ``t`` and over truncation levels are taken on finite grids, so the
``S*`` fields computed here are lower bounds of the true suprema; every
inequality checked against them is one-sided, which grid refinement can
only sharpen.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import naive
from .besov import besov_energy_integral
from .evolution import _require_zero_mean, partial_sums
from .haar import level_integrals, synthesize
from .operator import check_order


@dataclass(eq=False)
class MaximalField:
    tree: object
    values: np.ndarray
    name: str = ""

    def norm(self):
        return float(np.sqrt(np.sum(self.values ** 2 * self.tree.leaf_measures)))


def m_dy(f):
    """Hardy-Littlewood dyadic maximal function: largest ancestor average of ``|f|``."""
    tree = f.tree
    ints = level_integrals(tree, np.abs(f.values))
    out = np.zeros(tree.n_leaves)
    for j in range(tree.depth + 1):
        out = np.maximum(out, (ints[j] / tree.measures[j])[tree.ancestors[j]])
    return MaximalField(tree, out, "M_dy")


def _abs_dev_sorted(tree, v, j):
    """``int_Q |f(y) - f(x)| dmu(y)`` for real ``f`` via per-cube sorting."""
    mu = tree.leaf_measures
    cube = tree.ancestors[j]
    order = np.lexsort((v, cube))
    vs, ws, cs = v[order], mu[order], cube[order]
    wv = ws * vs
    W = np.cumsum(ws) - ws
    S = np.cumsum(wv) - wv
    first = np.searchsorted(cs, cs)
    W_below = W - W[first]
    S_below = S - S[first]
    tot_w = np.bincount(cs, ws, minlength=tree.n_cubes(j))[cs]
    tot_s = np.bincount(cs, wv, minlength=tree.n_cubes(j))[cs]
    dev = (vs * W_below - S_below) + ((tot_s - S_below) - vs * (tot_w - W_below))
    out = np.empty_like(dev)
    out[order] = dev
    return out


def _abs_dev_blocked(tree, v, j, rows=512):
    mu = tree.leaf_measures
    out = np.empty(tree.n_leaves)
    for q in range(tree.n_cubes(j)):
        sl = tree.leaves_of(j, q)
        blk = v[sl]
        w = mu[sl]
        for lo in range(0, blk.size, rows):
            hi = min(lo + rows, blk.size)
            out[sl.start + lo: sl.start + hi] = np.abs(blk[lo:hi, None] - blk[None, :]) @ w
    return out


def m_sharp(f, lam, method="aggregate"):
    """Calderon sharp maximal function of order ``lam``.

    ``max_Q mu(Q)^-(1+lam) int_Q |f(y) - f(x)| dmu(y)`` over cubes ``Q`` containing ``x``.
    Real data use per-cube sorting with prefix sums (``O(n N log n)``);
    complex data fall back to blocked per-cube summation.
    ``method="naive"`` runs the double loop.
    """
    lam = check_order(lam, "lambda")
    tree = f.tree
    v = f.values
    if method == "naive":
        return MaximalField(tree, naive.m_sharp(tree, v, lam), "M_sharp")
    if method != "aggregate":
        raise ValueError(f"unknown method {method!r}")
    real = np.all(v.imag == 0)
    out = np.zeros(tree.n_leaves)
    for j in range(tree.depth):
        dev = _abs_dev_sorted(tree, v.real, j) if real else _abs_dev_blocked(tree, v, j)
        dev = np.maximum(dev, 0.0)
        out = np.maximum(out, dev / tree.measures[j][tree.ancestors[j]] ** (1.0 + lam))
    return MaximalField(tree, out, "M_sharp")


def s_maximal_t(u0, eigen, t, n_grid=None):
    """``S*_t f(x) = max_n |S^n_t f(x)|`` over the truncation grid (any ``t``)."""
    S = partial_sums(u0, t, eigen)
    if n_grid is not None:
        S = S[list(n_grid)]
    return MaximalField(u0.system.tree, np.abs(S).max(axis=0), "S*_t")


def s_maximal(u0, eigen, t_grid, n_grid=None):
    """``S* f(x)`` as the maximum over ``t_grid`` (inside ``(0, 1)``) and ``n_grid``."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0 or np.any((t_grid <= 0) | (t_grid >= 1)):
        raise ValueError("S* needs a nonempty time grid inside (0, 1)")
    _require_zero_mean(u0)
    out = np.zeros(u0.system.tree.n_leaves)
    for t in t_grid:
        out = np.maximum(out, s_maximal_t(u0, eigen, t, n_grid).values)
    return MaximalField(u0.system.tree, out, "S*")


def default_t_grid(count=32, lo=1e-3):
    """Log-spaced times in ``(0, 1)``."""
    return np.geomspace(lo, 1.0, count + 1)[:-1]


def _ratio_max(num, den):
    num = np.maximum(num, 0.0)
    ok = den > 0
    if np.any(num[~ok] > 1e-12):
        return float("inf")
    return float((num[ok] / den[ok]).max()) if ok.any() else 0.0


def theoretical_ceiling(eigen, lam):
    """Proof constant ``max_x sum_{h based at ancestors of x} m_h mu(Q)^(1+lam-beta) |h|_inf^2``."""
    system = eigen.system
    tree = system.tree
    acc = np.zeros(tree.n_leaves)
    for j in range(tree.depth):
        sl = system.level(j)
        if sl.stop == sl.start:
            continue
        sup2 = np.asarray(abs(system.W[j]).max(axis=1).todense()).ravel() ** 2
        mu = system.cube_measure[sl]
        term = eigen.m[sl] * mu ** (1.0 + lam - eigen.beta) * sup2
        per_cube = np.bincount(system.cube[sl], term, minlength=tree.n_cubes(j))
        acc += per_cube[tree.ancestors[j]]
    return float(acc.max())


def bound_constants(u0, eigen, lam, t_grid=None):
    """Smallest constants making the ``S*`` inequalities hold for this ``u0``.

    Returns a dict with
      ``C_a``: per ``t``, needed ``C`` in ``S*_t f <= C t M# f + 2 M_dy f``;
      ``C_diff``: per ``t``, ``max_x sup_n |S^n_t f - S^n_0 f| / (t M# f)``,
        the quantity the proof bounds linearly in ``t``;
      ``C_b``: needed ``C`` in ``S* f <= C M# f + 2 M_dy f``;
      ``C_c``: ``||S* f||_2 / ||f||_B`` with ``||f||_B^2 = ||f||^2 + E(f)``.
    """
    lam = check_order(lam, "lambda")
    if t_grid is None:
        t_grid = default_t_grid()
    f = synthesize(u0)
    md = m_dy(f).values
    ms = m_sharp(f, lam).values
    S0 = partial_sums(u0, 0.0, eigen)
    C_a, C_diff = [], []
    star = np.zeros(f.tree.n_leaves)
    for t in t_grid:
        St = partial_sums(u0, t, eigen)
        st = np.abs(St).max(axis=0)
        star = np.maximum(star, st)
        C_a.append(_ratio_max(st - 2 * md, t * ms))
        C_diff.append(_ratio_max(np.abs(St - S0).max(axis=0), t * ms))
    sf = MaximalField(f.tree, star)
    bnorm = np.sqrt(f.norm() ** 2 + besov_energy_integral(f, lam))
    return {
        "t": [float(t) for t in t_grid],
        "C_a": C_a,
        "C_diff": C_diff,
        "C_b": _ratio_max(star - 2 * md, ms),
        "C_c": float(sf.norm() / bnorm) if bnorm > 0 else 0.0,
        "ceiling": theoretical_ceiling(eigen, lam),
    }


def bound_report_json(reports, digits=10):
    """Stable JSON text for a list of :func:`bound_constants` results."""
    def fmt(x):
        if isinstance(x, list):
            return [fmt(v) for v in x]
        return f"{x:.{digits}e}"
    rows = [{k: fmt(v) for k, v in r.items()} for r in reports]
    summary = {
        "C_b_max": fmt(max(r["C_b"] for r in reports)),
        "C_c_max": fmt(max(r["C_c"] for r in reports)),
        "C_diff_max": fmt(max(max(r["C_diff"]) for r in reports)),
        "ceiling": fmt(reports[0]["ceiling"]) if reports else None,
    }
    return json.dumps({"summary": summary, "runs": rows}, indent=1, sort_keys=True) + "\n"
