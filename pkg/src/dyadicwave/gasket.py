"""Sierpinski gasket as a triadic dyadic tree.

Each triangle ``T`` splits into the three half-size corner copies
``T(1), T(2), T(3)``; child ``k`` is anchored at vertex ``k`` of its parent.
The normalized Hausdorff measure of order ``log 3 / log 2`` gives every
scale-``j`` triangle measure ``3^-j`` while its area shrinks by ``4^-j``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .evolution import check_equation, convergence_study, evolve, sample_points
from .haar import HaarSystem, analyze
from .operator import gasket_reference_constant, measure_eigenvalues
from .tree import build_uniform_tree

HAUSDORFF_ORDER = math.log(3) / math.log(2)
ROOT_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


@dataclass
class GasketGeometry:
    """``vertices[j]`` has shape ``(3^j, 3, 2)``: the triangles of scale ``j``."""

    vertices: list
    order: float = HAUSDORFF_ORDER

    def centers(self, level=None):
        v = self.vertices[-1 if level is None else level]
        return v.mean(axis=1)

    def areas(self, level):
        v = self.vertices[level]
        a, b, c = v[:, 0], v[:, 1], v[:, 2]
        return 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))


def build_gasket(N):
    """Uniform triadic tree of depth ``N`` plus the triangle of every cube."""
    tree = build_uniform_tree(3, N)
    verts = [ROOT_VERTICES[None].copy()]
    for _ in range(N):
        parent = verts[-1]
        # child k: 0.5 * (parent + parent vertex k), children contiguous per parent
        kids = 0.5 * (parent[:, None, :, :] + parent[:, :, None, :])
        verts.append(kids.reshape(-1, 3, 2))
    return tree, GasketGeometry(verts)


def gasket_stencils():
    """Root stencils ``sqrt(3/2)(1, -1, 0)`` and ``(1, 1, -2)/sqrt(2)``."""
    return np.array([[math.sqrt(1.5), -math.sqrt(1.5), 0.0],
                     [1 / math.sqrt(2), 1 / math.sqrt(2), -math.sqrt(2)]])


def explicit_gasket_wavelets(N, tree=None):
    """Haar system from the explicit gasket formulas, scaled by ``3^(j/2)``."""
    if tree is None:
        tree, _ = build_gasket(N)
    base = gasket_stencils()
    stencils = [[3.0 ** (j / 2) * base] * tree.n_cubes(j) for j in range(N)]
    return HaarSystem(tree, stencils=stencils)


def decay_spectrum(system, exponent, phase_seed=None):
    """Zero-mean spectrum with ``<f, h> = mu(Q(h))^exponent``.

    With ``phase_seed`` each coefficient gets a random unimodular phase.
    """
    c = system.cube_measure ** exponent + 0j
    if phase_seed is not None:
        rng = np.random.default_rng(phase_seed)
        c = c * np.exp(2j * np.pi * rng.random(c.size))
    s = system.zeros()
    s.coefficients[:] = c
    return s


@dataclass
class FlowResult:
    table: object
    residuals: list
    eigen: object
    density: list = field(default_factory=list)


def flow_experiment(f, system, geometry, beta, lam, t_grid, tau=1e-3, density_times=None):
    """Evolve zero-mean ``f`` on the gasket and collect the checks.

    Runs the propagator, the equation residual at each positive time of
    ``t_grid`` and the convergence study, and returns density rows
    ``(address, t, re, im, abs2)`` for ``density_times`` (default: the grid).
    """
    eigen = measure_eigenvalues(system, beta, reference_constant=gasket_reference_constant(beta))
    u0 = analyze(f, system)
    u0 = u0.replace(mean=0.0) if abs(u0.mean) < 1e-12 else u0
    table = convergence_study(u0, eigen, lam, list(t_grid) + [0.0], sample_points(system.tree))
    residuals = [check_equation(u0, t, eigen, min(tau, t / 4), lam) for t in sorted(t_grid) if t > 0]
    addrs = [tuple(a) for a in system.tree.addresses(system.tree.depth)]
    density = []
    for t in (t_grid if density_times is None else density_times):
        u = evolve(u0, t, eigen).function().values
        density.extend((a, float(t), float(v.real), float(v.imag), float(abs(v) ** 2)) for a, v in zip(addrs, u))
    return FlowResult(table, residuals, eigen, density)
