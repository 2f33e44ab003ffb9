"""Spectral propagator for ``i du/dt = D^beta u``.

In the Haar basis ``D^beta`` is diagonal with eigenvalues
``E_h = m_h mu(Q(h))^-beta > 0``, so

    u(t) = sum_h exp(-i t E_h) <u0, h> h

solves the equation with ``u(0) = u0``.  The evolution never time-steps;
every state is an exact phase rotation of the initial coefficients.
"""

from dataclasses import dataclass, field

import numpy as np

from .haar import HaarSpectrum, analyze, level_values, synthesize
from .operator import apply_dbeta_direct, check_order
from .tree import CellFunction


class NonzeroMeanError(ValueError):
    pass


class ParameterOrderError(ValueError):
    pass


# Largest E_h * tau for which the central difference is still trusted.
COARSE_STEP = 0.5


@dataclass(eq=False)
class WaveState:
    spectrum: HaarSpectrum
    t: float
    beta: float
    eigen: object

    def function(self):
        return synthesize(self.spectrum)


def _require_zero_mean(u0, tol=1e-12):
    if abs(u0.mean) > tol * max(1.0, np.sqrt(u0.norm2())):
        raise NonzeroMeanError(f"initial data must have zero mean, got {u0.mean!r}")


def phases(eigen, t):
    return np.exp(-1j * t * eigen.eigenvalues)


def evolve(u0, t, eigen, allow_negative=False):
    """Rotate every coefficient of ``u0`` by ``exp(-i t E_h)``.

    ``u0`` may itself be a :class:`WaveState`, in which case the clock keeps
    running from its time stamp.
    """
    start = 0.0
    if isinstance(u0, WaveState):
        start, u0 = u0.t, u0.spectrum
    _require_zero_mean(u0)
    if t < 0 and not allow_negative:
        raise ValueError("t must be nonnegative")
    c = u0.coefficients * phases(eigen, t)
    return WaveState(HaarSpectrum(u0.system, 0.0, c), start + float(t), eigen.beta, eigen)


@dataclass
class EquationResidual:
    t: float
    tau: float
    l2: float
    besov: float
    max_phase_step: float

    @property
    def step_too_coarse(self):
        return self.max_phase_step > COARSE_STEP


def check_equation(u0, t, eigen, tau, lam=None, operator="direct"):
    """Compare the central difference of ``u`` with ``-i D^beta u(t)``.

    ``operator="direct"`` applies ``D^beta`` by summation over cells,
    independently of the measured eigenvalues; ``"spectral"`` multiplies
    coefficients.  The Besov residual uses the coefficient norm of order
    ``lam - beta`` (``nan`` when ``lam`` is not given).
    """
    _require_zero_mean(u0)
    if not 0 < tau:
        raise ValueError("tau must be positive")
    system = u0.system
    E = eigen.eigenvalues
    cp = u0.coefficients * phases(eigen, t + tau)
    cm = u0.coefficients * phases(eigen, t - tau)
    ct = u0.coefficients * phases(eigen, t)
    if operator == "direct":
        diff = synthesize(HaarSpectrum(system, 0.0, (cp - cm) / (2 * tau)))
        ut = synthesize(HaarSpectrum(system, 0.0, ct))
        rhs = apply_dbeta_direct(ut, eigen.beta) * (-1j)
        r = analyze(CellFunction(system.tree, diff.values - rhs.values), system)
        res = r.coefficients
        l2 = float(np.sqrt(r.norm2()))
    elif operator == "spectral":
        res = (cp - cm) / (2 * tau) - (-1j) * E * ct
        l2 = float(np.sqrt(np.sum(np.abs(res) ** 2)))
    else:
        raise ValueError(f"unknown operator {operator!r}")
    if lam is None:
        besov = float("nan")
    else:
        w = 1.0 + system.cube_measure ** (-2.0 * (lam - eigen.beta))
        besov = float(np.sqrt(np.sum(np.abs(res) ** 2 * w)))
    active = np.abs(u0.coefficients) > 0
    step = float((E[active] * tau).max()) if active.any() else 0.0
    return EquationResidual(float(t), float(tau), l2, besov, step)


def sample_points(tree, count=64):
    """Deterministic, evenly strided leaf indices (all leaves if ``count >= n``)."""
    n = tree.n_leaves
    if count >= n:
        return np.arange(n)
    return (2 * np.arange(count) + 1) * n // (2 * count)


@dataclass
class ConvergenceTable:
    beta: float
    lam: float
    t: list = field(default_factory=list)
    l2_err: list = field(default_factory=list)
    besov_err: list = field(default_factory=list)
    sup_err: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.t, self.l2_err, self.besov_err, self.sup_err))

    def monotone(self, slack=1e-12):
        """True when every error column is nonincreasing as ``t`` decreases."""
        cols = (self.l2_err, self.besov_err, self.sup_err)
        return all(all(b <= a + slack for a, b in zip(c, c[1:])) for c in cols)


def convergence_study(u0, eigen, lam, times, samples=None):
    """Errors of ``u(t)`` against ``u0`` for ``t`` running down ``times``.

    Columns: ``L^2`` error, coefficient Besov error
    ``sum |phase - 1|^2 |c|^2 (1 + mu^-2 lam)``, and the largest pointwise
    error over ``samples`` (default: 64 strided leaves).
    """
    lam = check_order(lam, "lambda")
    if not eigen.beta < lam:
        raise ParameterOrderError(f"need beta < lambda, got beta={eigen.beta}, lambda={lam}")
    _require_zero_mean(u0)
    system = u0.system
    if samples is None:
        samples = sample_points(system.tree)
    samples = np.asarray(samples)
    w = 1.0 + system.cube_measure ** (-2.0 * lam)
    table = ConvergenceTable(eigen.beta, lam)
    for t in sorted(set(float(t) for t in times), reverse=True):
        d = (phases(eigen, t) - 1.0) * u0.coefficients
        table.t.append(t)
        table.l2_err.append(float(np.sqrt(np.sum(np.abs(d) ** 2))))
        table.besov_err.append(float(np.sum(np.abs(d) ** 2 * w)))
        err = synthesize(HaarSpectrum(system, 0.0, d)).values[samples]
        table.sup_err.append(float(np.abs(err).max()) if err.size else 0.0)
    return table


def partial_sums(u0, t, eigen):
    """``S^n_t u0(x)`` for every cut ``n = 0..N-1`` and leaf ``x``; shape ``(N, n_leaves)``."""
    _require_zero_mean(u0)
    tree = u0.system.tree
    s = HaarSpectrum(u0.system, 0.0, u0.coefficients * phases(eigen, t))
    vals = level_values(s)
    return np.stack([vals[n + 1][tree.ancestors[n + 1]] for n in range(tree.depth)])


def partial_sum(u0, t, eigen, n_cut, x):
    """Truncated series ``sum_{j <= n_cut} sum_{h in H^j} exp(-i t E_h) <u0, h> h(x)``."""
    tree = u0.system.tree
    if not 0 <= n_cut <= tree.depth - 1:
        raise ValueError(f"n_cut must lie in [0, {tree.depth - 1}]")
    _require_zero_mean(u0)
    x = tree.leaf(x)
    system = u0.system
    total = 0.0 + 0.0j
    ph = phases(eigen, t)
    for j in range(n_cut + 1):
        sl = system.level(j)
        q = tree.ancestors[j, x]
        hit = np.flatnonzero(system.cube[sl] == q) + sl.start
        child = tree.ancestors[j + 1, x]
        for k in hit:
            total += ph[k] * u0.coefficients[k] * system.W[j][k - sl.start, child]
    return complex(total)
