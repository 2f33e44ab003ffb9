"""Haar systems on dyadic trees and the fast analysis/synthesis transforms.

A cube ``Q`` with ``m`` children carries ``m - 1`` wavelets.  Each wavelet is
stored as a *stencil*: the constant value it takes on each child of ``Q``.
The wavelets of a cube are the Helmert-type vectors

    h^i  ~  mu(Q_{i+1}) * (chi_{Q_1} + ... + chi_{Q_i})  -  M_i * chi_{Q_{i+1}},

with ``M_i = mu(Q_1) + ... + mu(Q_i)``, normalised in ``L^2(mu)``.  This is
Gram-Schmidt applied to the child indicators taken from the last child
backwards, after the constant function; it reproduces the classical
Sierpinski-gasket wavelets ``sqrt(3/2)(chi_1 - chi_2)`` and
``(chi_1 + chi_2 - 2 chi_3)/sqrt(2)`` on equal-measure triadic cubes.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .tree import CellFunction, MixedTreeError


class SpectrumSizeError(ValueError):
    pass


def helmert_stencils(child_measures):
    """Orthonormal zero-mean stencils for one cube, shape ``(m - 1, m)``."""
    mu = np.asarray(child_measures, dtype=float)
    m = mu.size
    out = np.zeros((m - 1, m))
    M = np.cumsum(mu)
    for i in range(1, m):
        Mi, nxt = M[i - 1], mu[i]
        s = 1.0 / np.sqrt(Mi * nxt * (Mi + nxt))
        out[i - 1, :i] = nxt * s
        out[i - 1, i] = -Mi * s
    return out


@dataclass(frozen=True)
class HaarFunction:
    """One wavelet: base cube, local index (1-based) and child stencil."""

    scale: int
    cube: int
    index: int
    address: tuple
    stencil: np.ndarray
    measure: float

    def __repr__(self):
        return f"HaarFunction(scale={self.scale}, address={self.address}, index={self.index})"


class HaarSystem:
    """All wavelets of a tree in the global order (scale, address, index).

    ``stencils`` optionally overrides the construction: a list with, for
    each level ``j < N``, a sequence indexed by cube of ``(m - 1, m)`` arrays.
    """

    def __init__(self, tree, stencils=None):
        self.tree = tree
        self.W = []
        scale, cube, local, offsets = [], [], [], [0]
        for j in range(tree.depth):
            counts = tree.child_counts[j]
            starts = tree.child_start[j]
            rows, cols, vals = [], [], []
            r = 0
            for q in range(counts.size):
                m = int(counts[q])
                if m < 2:
                    continue
                kids = np.arange(starts[q], starts[q] + m)
                st = helmert_stencils(tree.measures[j + 1][kids]) if stencils is None \
                    else np.asarray(stencils[j][q], dtype=float)
                if st.shape != (m - 1, m):
                    raise ValueError(f"level {j} cube {q}: stencil shape {st.shape} != {(m - 1, m)}")
                for i in range(m - 1):
                    rows.append(np.full(m, r))
                    cols.append(kids)
                    vals.append(st[i])
                    scale.append(j)
                    cube.append(q)
                    local.append(i + 1)
                    r += 1
            shape = (r, tree.n_cubes(j + 1))
            if r:
                W = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)
            else:
                W = sp.csr_matrix(shape)
            self.W.append(W)
            offsets.append(offsets[-1] + r)
        self.scale = np.asarray(scale, dtype=np.int64)
        self.cube = np.asarray(cube, dtype=np.int64)
        self.local = np.asarray(local, dtype=np.int64)
        self.offsets = np.asarray(offsets)
        self.cube_measure = np.array([tree.measures[j][q] for j, q in zip(scale, cube)])

    def __len__(self):
        return int(self.offsets[-1])

    def __getitem__(self, k):
        if not 0 <= k < len(self):
            raise IndexError(k)
        j, q = int(self.scale[k]), int(self.cube[k])
        row = self.W[j].getrow(k - self.offsets[j])
        kids = self.tree.children(j, q)
        stencil = np.asarray(row[:, kids.start:kids.stop].todense()).ravel()
        return HaarFunction(j, q, int(self.local[k]), self.tree.address(j, q), stencil, float(self.cube_measure[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def level(self, j):
        return slice(int(self.offsets[j]), int(self.offsets[j + 1]))

    def find(self, address, index):
        """Global position of wavelet ``index`` (1-based) based on ``address``."""
        j, q = self.tree.locate(tuple(address))
        sl = self.level(j)
        hit = np.flatnonzero((self.cube[sl] == q) & (self.local[sl] == index))
        if hit.size == 0:
            raise KeyError((tuple(address), index))
        return sl.start + int(hit[0])

    def keys(self):
        """``(scale, address, index)`` for every wavelet, in storage order."""
        return [(int(j), self.tree.address(int(j), int(q)), int(i))
                for j, q, i in zip(self.scale, self.cube, self.local)]

    # -- evaluation ------------------------------------------------------
    def evaluate(self, k, x):
        """Value of wavelet ``k`` at point ``x`` (0 outside its cube)."""
        tree = self.tree
        x = tree.leaf(x)
        j = int(self.scale[k])
        if tree.ancestors[j, x] != self.cube[k]:
            return 0.0
        child = tree.ancestors[j + 1, x]
        return float(self.W[j][k - self.offsets[j], child])

    def function(self, k):
        """Wavelet ``k`` as a :class:`CellFunction`."""
        s = self.zeros()
        s.coefficients[k] = 1.0
        return synthesize(s)

    def dense(self):
        """Leaf values of all wavelets, shape ``(len(self), n_leaves)``."""
        tree = self.tree
        out = np.zeros((len(self), tree.n_leaves))
        for j in range(tree.depth):
            W = self.W[j].toarray()
            out[self.level(j)] = W[:, tree.ancestors[j + 1]]
        return out

    def zeros(self):
        return HaarSpectrum(self, 0.0, np.zeros(len(self), dtype=complex))


def build_haar(tree):
    return HaarSystem(tree)


@dataclass(eq=False)
class HaarSpectrum:
    """Mean ``<f, 1>`` plus the coefficients ``<f, h>`` in global order."""

    system: HaarSystem
    mean: complex
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (len(self.system),):
            raise SpectrumSizeError(f"expected {len(self.system)} coefficients, got {c.shape}")
        self.coefficients = c
        self.mean = complex(self.mean)

    def copy(self):
        return HaarSpectrum(self.system, self.mean, self.coefficients.copy())

    def norm2(self):
        """Squared L^2 norm via Parseval."""
        return abs(self.mean) ** 2 + float(np.sum(np.abs(self.coefficients) ** 2))

    def replace(self, mean=None, coefficients=None):
        return HaarSpectrum(self.system,
                            self.mean if mean is None else mean,
                            self.coefficients if coefficients is None else coefficients)


def level_integrals(tree, values):
    """Per-level arrays of ``int_Q f dmu``; ``values`` may be batched on leading axes."""
    out = [None] * (tree.depth + 1)
    out[tree.depth] = values * tree.leaf_measures
    for j in range(tree.depth - 1, -1, -1):
        out[j] = np.add.reduceat(out[j + 1], tree.child_start[j], axis=-1)
    return out


def analyze(f, system):
    """Haar spectrum of ``f`` in one bottom-up pass.

    Cost is ``O(#cells * B)``: each level's coefficients are stencils
    applied to the child integrals.
    """
    if f.tree is not system.tree:
        raise MixedTreeError("function and Haar system live on different trees")
    ints = level_integrals(system.tree, f.values)
    coef = np.concatenate([system.W[j] @ ints[j + 1] for j in range(system.tree.depth)]) \
        if len(system) else np.zeros(0, dtype=complex)
    return HaarSpectrum(system, ints[0][0], coef)


def level_values(spectrum):
    """Top-down partial syntheses.

    Entry ``j`` holds, per level-``j`` cube, the mean plus all wavelet terms
    of scale ``< j``; the last entry is the full synthesis on leaves.
    """
    system = spectrum.system
    tree = system.tree
    vals = [np.array([spectrum.mean], dtype=complex)]
    for j in range(tree.depth):
        c = spectrum.coefficients[system.level(j)]
        vals.append(vals[j][tree.parents[j + 1]] + system.W[j].T @ c)
    return vals


def synthesize(spectrum):
    """Inverse of :func:`analyze`."""
    return CellFunction(spectrum.system.tree, level_values(spectrum)[-1])


def project(f, system, M):
    """Projection onto functions constant on scale-``M`` cubes.

    Keeps the mean and the wavelets of scale ``< M``; this is the cell
    average of ``f`` over scale-``M`` cubes.
    """
    tree = system.tree
    if not 0 <= M <= tree.depth:
        raise ValueError(f"scale M must lie in [0, {tree.depth}]")
    s = analyze(f, system)
    c = s.coefficients.copy()
    c[system.scale >= M] = 0
    vals = level_values(s.replace(coefficients=c))[M]
    return CellFunction(tree, vals[tree.ancestors[M]])
