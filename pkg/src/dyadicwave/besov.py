"""Besov energies in integral form and in Haar-coefficient form.

The integral energy

    E(f, g) = sum_{x != y} (f(x) - f(y)) conj(g(x) - g(y)) delta(x, y)^-(1+2 sigma) mu(x) mu(y)

is grouped by the smallest common cube ``Q`` of each pair.  For such pairs
``delta = mu(Q)`` and the points sit in distinct children of ``Q``, whose
contribution is

    P_Q = 2 [ sum_c (mu(Q) - mu(c)) V_c + mu(Q) sum_c mu(c) (a_c(f) - a_Q(f)) conj(a_c(g) - a_Q(g)) ]

with ``a`` the cube averages and ``V_c`` the (unnormalised) covariance of
``f`` and ``g`` on ``c``.  Every term is nonnegative when ``f = g``, so no
digits are lost to cancellation, and ``V`` obeys the same recursion
bottom-up, giving ``O(#cubes)`` work after one pass over the leaves.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .haar import analyze, level_integrals
from .operator import check_order, dbeta_values
from .tree import MixedTreeError


def _pair_terms(tree, f, g):
    """Per-level arrays of ``P_Q`` (cross-children pair integrals)."""
    fi = level_integrals(tree, np.asarray(f, dtype=complex))
    gi = level_integrals(tree, np.asarray(g, dtype=complex))
    N = tree.depth
    V = np.zeros(tree.n_leaves, dtype=complex)
    out = [None] * N
    for j in range(N - 1, -1, -1):
        mQ = tree.measures[j]
        mc = tree.measures[j + 1]
        par = tree.parents[j + 1]
        dfa = fi[j + 1] / mc - (fi[j] / mQ)[par]
        dga = gi[j + 1] / mc - (gi[j] / mQ)[par]
        between = mc * dfa * np.conj(dga)
        starts = tree.child_start[j]
        within_weighted = np.add.reduceat((mQ[par] - mc) * V, starts)
        between_sum = np.add.reduceat(between, starts)
        out[j] = 2.0 * (within_weighted + mQ * between_sum)
        V = np.add.reduceat(V, starts) + between_sum
    return out


def _subtree_mask(tree, level, cube, j):
    """Which level-``j`` cubes lie inside cube ``(level, cube)``."""
    if j < level:
        return np.zeros(tree.n_cubes(j), dtype=bool)
    idx = np.arange(tree.n_cubes(j))
    for k in range(j, level, -1):
        idx = tree.parents[k][idx]
    return idx == cube


def besov_form(f, g, sigma, restrict_diagonal=False, cube=None):
    """Sesquilinear integral form ``E(f, g)`` (see module docstring).

    ``restrict_diagonal`` keeps only pairs with ``delta < 1``; ``cube`` (an
    address) restricts the double integral to ``Q x Q``.
    """
    check_order(sigma, "sigma")
    if f.tree is not g.tree:
        raise MixedTreeError("functions live on different trees")
    tree = f.tree
    P = _pair_terms(tree, f.values, g.values)
    loc = tree.locate(tuple(cube)) if cube is not None else None
    total = 0.0 + 0.0j
    for j in range(tree.depth):
        mQ = tree.measures[j]
        keep = np.ones(mQ.size, dtype=bool)
        if restrict_diagonal:
            keep &= mQ < 1.0
        if loc is not None:
            keep &= _subtree_mask(tree, loc[0], loc[1], j)
        total += np.sum(P[j][keep] * mQ[keep] ** (-(1.0 + 2 * sigma)))
    return complex(total)


def besov_energy_integral(f, sigma, restrict_diagonal=False, cube=None):
    """``iint |f(x) - f(y)|^2 / delta^(1+2 sigma)`` as an exact finite sum."""
    return besov_form(f, f, sigma, restrict_diagonal, cube).real


def besov_energy_coeff(spectrum, sigma, restrict=False):
    """``sum_h |<f, h>|^2 mu(Q(h))^-2 sigma``; ``restrict`` keeps ``mu(Q(h)) < 1``."""
    mu = spectrum.system.cube_measure
    w = np.abs(spectrum.coefficients) ** 2 * mu ** (-2.0 * sigma)
    if restrict:
        w = w[mu < 1.0]
    return float(np.sum(w))


def nu_form(system, k1, k2, sigma, cube=None):
    """``nu(h, h~)`` for wavelets at global positions ``k1``, ``k2``.

    With ``cube`` the double integral is taken over ``Q x Q`` only.
    """
    return besov_form(system.function(k1), system.function(k2), sigma, cube=cube).real


def nu_matrix(system, sigma):
    """All ``nu(h, h~)`` at once.

    The kernel is symmetric, so ``nu(h, h~) = 2 <D^{2 sigma} h, h~>``.
    """
    check_order(sigma, "sigma")
    H = system.dense()
    DH = dbeta_values(system.tree, H, 2 * sigma).real
    return 2.0 * (DH * system.tree.leaf_measures) @ H.T


def maximal_cubes(tree):
    """Maximal cubes with ``mu(Q) < 1``, as ``(level, index)`` pairs."""
    out = []
    stack = [(0, 0)]
    while stack:
        j, q = stack.pop()
        if tree.measures[j][q] < 1.0:
            out.append((j, q))
        elif j < tree.depth:
            stack.extend((j + 1, c) for c in reversed(tree.children(j, q)))
    return sorted(out)


def tail_constant(tree, sigma):
    """``4 sup_x int_{delta(x, y) >= 1} delta^-(1+2 sigma) dmu(y)``.

    With ``mu(X) = 1`` the region is the complement of the maximal cube
    holding ``x``, where ``delta = 1``.
    """
    inner = min((tree.measures[j][q] for j, q in maximal_cubes(tree)), default=1.0)
    return 4.0 * (1.0 - inner)


@dataclass
class BesovReport:
    sigma: float
    l2_norm2: float
    integral_full: float
    integral_restricted: float
    integral_tail: float
    tail_bound: float
    coeff_full: float
    coeff_restricted: float
    ratio: float
    per_cube: list = field(default_factory=list)

    @property
    def norm2_integral(self):
        return self.l2_norm2 + self.integral_full

    @property
    def norm2_coeff(self):
        return self.l2_norm2 + self.coeff_full

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _ratio(a, b):
    return a / b if b > 0 else (float("nan") if a > 0 else 1.0)


def besov_report(f, system, sigma):
    """Both energies of ``f``, globally and on each maximal cube."""
    check_order(sigma, "sigma")
    tree = f.tree
    s = analyze(f, system)
    full = besov_energy_integral(f, sigma)
    restricted = besov_energy_integral(f, sigma, restrict_diagonal=True)
    coeff_r = besov_energy_coeff(s, sigma, restrict=True)
    cubes = []
    for j, q in maximal_cubes(tree):
        addr = tree.address(j, q)
        integral = besov_energy_integral(f, sigma, cube=addr)
        inside = wavelet_mask_in_cube(system, addr)
        coeff = float(np.sum(np.abs(s.coefficients[inside]) ** 2 * system.cube_measure[inside] ** (-2 * sigma)))
        cubes.append({"address": list(addr), "integral": integral, "coeff": coeff,
                      "ratio": _ratio(coeff, integral)})
    return BesovReport(
        sigma=sigma,
        l2_norm2=f.norm() ** 2,
        integral_full=full,
        integral_restricted=restricted,
        integral_tail=full - restricted,
        tail_bound=tail_constant(tree, sigma) * f.norm() ** 2,
        coeff_full=besov_energy_coeff(s, sigma),
        coeff_restricted=coeff_r,
        ratio=_ratio(coeff_r, restricted),
        per_cube=cubes,
    )


def wavelet_mask_in_cube(system, address):
    """Boolean mask of the wavelets ``h`` with ``Q(h)`` inside the cube."""
    tree = system.tree
    j, q = tree.locate(tuple(address))
    inside = np.zeros(len(system), dtype=bool)
    for k in range(j, tree.depth):
        sl = system.level(k)
        inside[sl] = _subtree_mask(tree, j, q, k)[system.cube[sl]]
    return inside
