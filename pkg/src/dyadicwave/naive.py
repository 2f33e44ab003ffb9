"""Brute-force double-loop oracles.

These evaluate every formula straight from its definition, summing over all
ordered pairs of leaf cells.  They cost ``O(#cells^2)`` and exist to check
the fast paths; nothing in here reuses the ancestor aggregation.
"""

import math

import numpy as np


def delta_matrix(tree):
    n = tree.n_leaves
    return np.stack([tree.delta_row(x) for x in range(n)]) if n else np.zeros((0, 0))


def kernel_matrix(tree, p):
    """``K[x, y] = delta(x, y)^-(1+p) mu(y)`` off the diagonal, 0 on it."""
    d = delta_matrix(tree)
    K = np.zeros_like(d)
    off = d > 0
    K[off] = d[off] ** (-(1.0 + p))
    return K * tree.leaf_measures[None, :]


def dbeta(tree, values, beta):
    """``D^beta f(x) = sum_y (f(x) - f(y)) delta^-(1+beta) mu(y)`` by double loop."""
    K = kernel_matrix(tree, beta)
    v = np.asarray(values, dtype=complex)
    return K.sum(axis=1) * v - v @ K.T


def besov_form(tree, f, g, sigma, pair_mask=None):
    """``sum_{x != y} (f(x)-f(y)) conj(g(x)-g(y)) delta^-(1+2 sigma) mu mu`` with fsum."""
    d = delta_matrix(tree)
    mu = tree.leaf_measures
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    off = d > 0
    if pair_mask is not None:
        off &= pair_mask
    w = np.zeros_like(d)
    w[off] = d[off] ** (-(1.0 + 2 * sigma))
    terms = (f[:, None] - f[None, :]) * np.conj(g[:, None] - g[None, :]) * w * mu[:, None] * mu[None, :]
    return complex(math.fsum(terms.real.ravel()), math.fsum(terms.imag.ravel()))


def cube_pair_mask(tree, level, index):
    """Pairs ``(x, y)`` with both points in the given cube."""
    inside = tree.ancestors[level] == index
    return inside[:, None] & inside[None, :]


def m_dy(tree, values):
    """Dyadic maximal function by scanning every ancestor of every point."""
    n = tree.n_leaves
    mu = tree.leaf_measures
    a = np.abs(values)
    out = np.zeros(n)
    for x in range(n):
        for j in range(tree.depth + 1):
            members = tree.ancestors[j] == tree.ancestors[j, x]
            out[x] = max(out[x], np.sum(a[members] * mu[members]) / np.sum(mu[members]))
    return out


def m_sharp(tree, values, lam):
    """Calderon sharp maximal function of order ``lam`` by direct summation."""
    n = tree.n_leaves
    mu = tree.leaf_measures
    v = np.asarray(values)
    out = np.zeros(n)
    for x in range(n):
        for j in range(tree.depth + 1):
            q = tree.ancestors[j, x]
            members = tree.ancestors[j] == q
            val = math.fsum(np.abs(v[members] - v[x]) * mu[members]) / tree.measures[j][q] ** (1.0 + lam)
            out[x] = max(out[x], val)
    return out


def gram(system):
    D = system.dense()
    return (D * system.tree.leaf_measures) @ D.T


def nu_matrix(system, sigma):
    """``nu(h, h~) = sum_{x != y} (h(x)-h(y))(h~(x)-h~(y)) delta^-(1+2 sigma) mu(x) mu(y)`` for all pairs."""
    tree = system.tree
    H = system.dense()
    d = delta_matrix(tree)
    mu = tree.leaf_measures
    K = np.zeros_like(d)
    off = d > 0
    K[off] = d[off] ** (-(1.0 + 2 * sigma))
    K *= mu[:, None] * mu[None, :]
    T = H[:, :, None] - H[:, None, :]
    return np.einsum("axy,bxy,xy->ab", T, T, K, optimize=True)
