"""Finite-depth dyadic trees with per-cube measures.

A tree of depth ``N`` stores, level by level, the cubes of each scale.  The
children of a cube are contiguous in the next level and appear in address
order, so the leaves (the depth-``N`` cells) are indexed lexicographically
by address.  Points of the space are identified with leaf cells.

Every function handled by this package is piecewise constant on leaf cells.
For such functions all the ``delta``-weighted integrals reduce *exactly* to
finite sums over pairs of distinct leaf cells: on a pair that shares a leaf
cell the integrand carries a factor ``f(x) - f(y) = 0``.  Nothing here is a
quadrature approximation.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAX_OFFSPRING = 8
MAX_LEAVES = 3 ** 13
MEASURE_RTOL = 1e-12


class TreeError(ValueError):
    """Invalid tree description."""


class MeasureMismatchError(TreeError):
    pass


class OffspringBoundError(TreeError):
    pass


class ResourceLimitError(TreeError):
    pass


class MixedTreeError(ValueError):
    """Objects living on different trees were combined."""


class DyadicTree:
    """Immutable dyadic tree with uniform leaf depth.

    Parameters are per-level arrays; use :func:`build_uniform_tree` or
    :func:`build_explicit_tree` rather than calling this directly.
    """

    def __init__(self, child_counts, measures, branching=None, max_offspring=MAX_OFFSPRING):
        self.depth = len(measures) - 1
        self.branching = branching
        self.max_offspring = max_offspring
        self.measures = [np.asarray(m, dtype=float) for m in measures]
        self.child_counts = [np.asarray(c, dtype=np.int64) for c in child_counts]
        if len(self.child_counts) != self.depth:
            raise TreeError("need one child-count array per non-leaf level")

        self.child_start = []
        self.parents = [np.zeros(0, dtype=np.int64)]
        self.digits = [np.zeros(1, dtype=np.int64)]
        for j, counts in enumerate(self.child_counts):
            if counts.shape != self.measures[j].shape:
                raise TreeError(f"level {j}: {counts.size} counts for {self.measures[j].size} cubes")
            if counts.min(initial=1) < 1:
                raise TreeError(f"level {j}: every cube needs at least one child")
            start = np.concatenate([[0], np.cumsum(counts)[:-1]])
            self.child_start.append(start)
            n_next = int(counts.sum())
            if n_next != self.measures[j + 1].size:
                raise TreeError(f"level {j + 1}: expected {n_next} cubes")
            self.parents.append(np.repeat(np.arange(counts.size), counts))
            self.digits.append(np.arange(n_next) - np.repeat(start, counts))

        # ancestors[j, x]: index of the level-j cube containing leaf x
        n = self.n_leaves
        anc = np.empty((self.depth + 1, n), dtype=np.int64)
        anc[self.depth] = np.arange(n)
        for j in range(self.depth, 0, -1):
            anc[j - 1] = self.parents[j][anc[j]]
        self.ancestors = anc
        self.ancestors.flags.writeable = False

    # -- sizes -----------------------------------------------------------
    @property
    def n_leaves(self):
        return self.measures[-1].size

    def n_cubes(self, level):
        return self.measures[level].size

    @property
    def leaf_measures(self):
        return self.measures[-1]

    @property
    def offspring_bound(self):
        return int(max((c.max() for c in self.child_counts), default=1))

    def __repr__(self):
        kind = f"uniform b={self.branching}" if self.branching else "explicit"
        return f"DyadicTree({kind}, depth={self.depth}, leaves={self.n_leaves})"

    # -- addressing ------------------------------------------------------
    def address(self, level, index):
        """Digit sequence of cube ``index`` at ``level``."""
        digits = []
        for j in range(level, 0, -1):
            digits.append(int(self.digits[j][index]))
            index = self.parents[j][index]
        return tuple(reversed(digits))

    def addresses(self, level):
        """All addresses of one level as an ``(n_cubes, level)`` int array."""
        out = np.empty((self.n_cubes(level), level), dtype=np.int64)
        idx = np.arange(self.n_cubes(level))
        for j in range(level, 0, -1):
            out[:, j - 1] = self.digits[j][idx]
            idx = self.parents[j][idx]
        return out

    def locate(self, address):
        """Return ``(level, index)`` of the cube with the given address."""
        i = 0
        for j, d in enumerate(address):
            if j >= self.depth:
                raise TreeError(f"address {tuple(address)} deeper than tree depth {self.depth}")
            count = self.child_counts[j][i]
            if not 0 <= d < count:
                raise TreeError(f"digit {d} at position {j} exceeds offspring count {count}")
            i = int(self.child_start[j][i] + d)
        return len(address), i

    def leaf(self, point):
        """Leaf index of a point given either as an index or a full address."""
        if isinstance(point, (int, np.integer)):
            if not 0 <= point < self.n_leaves:
                raise TreeError(f"leaf index {point} out of range")
            return int(point)
        level, i = self.locate(tuple(point))
        if level != self.depth:
            raise TreeError(f"point address must have length {self.depth}, got {level}")
        return i

    def leaves_of(self, level, index):
        """Slice of leaf indices contained in a cube (leaves are contiguous)."""
        lo, hi = index, index + 1
        for j in range(level, self.depth):
            starts = self.child_start[j]
            lo = int(starts[lo])
            hi = int(starts[hi - 1] + self.child_counts[j][hi - 1])
        return slice(lo, hi)

    def children(self, level, index):
        s = int(self.child_start[level][index])
        return range(s, s + int(self.child_counts[level][index]))

    # -- metric ----------------------------------------------------------
    def delta(self, x, y):
        """Ultrametric ``delta(x, y)``: measure of the smallest common cube."""
        x, y = self.leaf(x), self.leaf(y)
        if x == y:
            return 0.0
        k = self._common_level(x, y)
        return float(self.measures[k][self.ancestors[k, x]])

    def _common_level(self, x, y):
        same = self.ancestors[:, x] == self.ancestors[:, y]
        return int(np.flatnonzero(same)[-1])

    def delta_row(self, x):
        """``delta(x, y)`` for every leaf ``y``."""
        x = self.leaf(x)
        out = np.full(self.n_leaves, self.measures[0][0])
        for k in range(1, self.depth + 1):
            mask = self.ancestors[k] == self.ancestors[k, x]
            out[mask] = self.measures[k][self.ancestors[k, x]]
        out[x] = 0.0
        return out

    def exterior_integrals(self, p):
        """Per-level arrays of ``int_{X minus Q} delta(x, y)^-(1+p) dmu(y)``, x in Q.

        Built top-down: the exterior of a child is the exterior of its parent
        plus the sibling annulus, on which ``delta`` equals the parent measure.
        """
        out = [np.zeros(1)]
        for j in range(self.depth):
            par = self.parents[j + 1]
            mq = self.measures[j][par]
            ring = mq - self.measures[j + 1]
            out.append(out[j][par] + ring * mq ** (-(1.0 + p)))
        return out

    # -- functions -------------------------------------------------------
    def function(self, values):
        return CellFunction(self, values)

    def constant(self, c=1.0):
        return CellFunction(self, np.full(self.n_leaves, c, dtype=complex))

    def indicator(self, address):
        level, i = self.locate(tuple(address))
        v = np.zeros(self.n_leaves, dtype=complex)
        v[self.leaves_of(level, i)] = 1.0
        return CellFunction(self, v)

    # -- (de)serialization -----------------------------------------------
    def to_spec(self):
        """Nested ``{measure, children}`` description of this tree."""
        if self.branching is not None:
            return {"uniform": {"b": self.branching, "N": self.depth}}

        def node(j, i):
            d = {"measure": float(self.measures[j][i])}
            if j < self.depth:
                d["children"] = [node(j + 1, c) for c in self.children(j, i)]
            return d
        return node(0, 0)


@dataclass(frozen=True, eq=False)
class CellFunction:
    """Complex function, constant on each leaf cell of ``tree``."""

    tree: DyadicTree
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape[-1:] != (self.tree.n_leaves,):
            raise ValueError(f"expected {self.tree.n_leaves} leaf values, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def _check(self, other):
        if other.tree is not self.tree:
            raise MixedTreeError("functions live on different trees")

    def __add__(self, other):
        self._check(other)
        return CellFunction(self.tree, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return CellFunction(self.tree, self.values - other.values)

    def __mul__(self, c):
        return CellFunction(self.tree, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return CellFunction(self.tree, -self.values)

    def __call__(self, x):
        return complex(self.values[self.tree.leaf(x)])

    def integral(self):
        return complex(np.sum(self.values * self.tree.leaf_measures))

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2 * self.tree.leaf_measures)))


def l2_inner(f, g):
    """``<f, g> = sum f conj(g) mu`` over leaf cells."""
    if f.tree is not g.tree:
        raise MixedTreeError("functions live on different trees")
    return complex(np.sum(f.values * np.conj(g.values) * f.tree.leaf_measures))


def annulus_integral(tree, cube, p, x=None):
    """Exact value of ``int_{X minus Q} delta(x, y)^-(1+p) dmu(y)`` for ``x`` in ``Q``.

    ``cube`` is an address (digit tuple).  The integrand is
    constant on each annulus ``Q_k minus Q_{k+1}`` between consecutive
    ancestors, so the result is a finite sum.  ``x`` only serves as a
    membership check since the value does not depend on it.
    """
    if p <= 0:
        raise ValueError("exponent p must be positive")
    if p >= 1:
        logger.warning("annulus_integral: p=%g lies outside (0, 1)", p)
    level, i = tree.locate(tuple(cube))
    if x is not None:
        leaf = tree.leaf(x)
        if tree.ancestors[level, leaf] != i:
            raise ValueError("point does not lie in the cube")
    total = 0.0
    chain = [i]
    for j in range(level, 0, -1):
        chain.append(int(tree.parents[j][chain[-1]]))
    chain.reverse()
    for k in range(level):
        mk = tree.measures[k][chain[k]]
        total += (mk - tree.measures[k + 1][chain[k + 1]]) * mk ** (-(1.0 + p))
    return total


def build_uniform_tree(b, N, max_leaves=MAX_LEAVES):
    """Every cube splits into ``b`` children of equal measure ``mu(Q) / b``."""
    if b < 2 or N < 1:
        raise TreeError("need branching b >= 2 and depth N >= 1")
    if b ** N > max_leaves:
        raise ResourceLimitError(f"{b}^{N} leaves exceeds the limit of {max_leaves}")
    counts = [np.full(b ** j, b) for j in range(N)]
    measures = [np.full(b ** j, float(b) ** -j) for j in range(N + 1)]
    return DyadicTree(counts, measures, branching=b, max_offspring=max(b, MAX_OFFSPRING))


def build_explicit_tree(spec, max_offspring=MAX_OFFSPRING, max_leaves=MAX_LEAVES, rtol=MEASURE_RTOL):
    """Build a tree from nested ``{"measure": m, "children": [...]}`` nodes.

    Leaves shallower than the deepest one are padded with single-child cubes
    so that all leaf cells sit at one depth.  The root measure must be 1
    (it may be omitted); each child list must sum to its parent.
    """
    if "uniform" in spec:
        u = spec["uniform"]
        return build_uniform_tree(int(u["b"]), int(u["N"]), max_leaves=max_leaves)

    root_m = float(spec.get("measure", 1.0))
    if abs(root_m - 1.0) > rtol:
        raise MeasureMismatchError(f"root measure must be 1, got {root_m}")

    def height(node):
        kids = node.get("children") or []
        return 1 + max(map(height, kids)) if kids else 0

    N = height(spec)
    if N < 1:
        raise TreeError("tree needs at least one split")

    level_nodes = [[(spec, 1.0, ())]]
    counts, measures = [], [np.array([1.0])]
    for j in range(N):
        nxt, cnt = [], []
        for node, m, addr in level_nodes[j]:
            kids = (node.get("children") or []) if node is not None else []
            if not kids:
                nxt.append((None, m, addr + (0,)))
                cnt.append(1)
                continue
            if len(kids) > max_offspring:
                raise OffspringBoundError(f"cube {addr} has {len(kids)} children, bound is {max_offspring}")
            ms = []
            for d, kid in enumerate(kids):
                if "measure" not in kid:
                    raise TreeError(f"cube {addr + (d,)} lacks a measure")
                km = float(kid["measure"])
                if not km > 0:
                    raise TreeError(f"cube {addr + (d,)} has non-positive measure {km}")
                ms.append(km)
            total = sum(ms)
            if abs(total - m) > rtol * m:
                raise MeasureMismatchError(
                    f"children of cube {addr} sum to {total!r}, parent measure is {m!r}")
            nxt.extend((kid, km, addr + (d,)) for d, (kid, km) in enumerate(zip(kids, ms)))
            cnt.append(len(kids))
        if len(nxt) > max_leaves:
            raise ResourceLimitError(f"{len(nxt)} cubes at level {j + 1} exceeds the limit")
        level_nodes.append(nxt)
        counts.append(np.array(cnt))
        measures.append(np.array([m for _, m, _ in nxt]))
    return DyadicTree(counts, measures, max_offspring=max_offspring)


def load_tree(path_or_spec, **kw):
    """Load a tree from a JSON file path or an already-parsed spec dict."""
    spec = path_or_spec
    if not isinstance(spec, dict):
        spec = json.loads(Path(spec).read_text())
    return build_explicit_tree(spec, **kw)
