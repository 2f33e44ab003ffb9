"""The nonlocal fractional operator ``D^beta`` and its Haar eigenvalues.

    D^beta f(x) = int_X (f(x) - f(y)) / delta(x, y)^(1+beta) dmu(y)

For ``x`` in a leaf cell with ancestors ``Q_0 ⊃ Q_1 ⊃ ... ⊃ Q_N``, the points
``y`` in the annulus ``Q_k minus Q_{k+1}`` all sit at distance ``mu(Q_k)``.
Summing annulus by annulus needs only the per-cube integrals of ``f``:

    D^beta f(x) = sum_k mu(Q_k)^-(1+beta) [ f(x) (mu(Q_k) - mu(Q_{k+1}))
                                           - (int_{Q_k} f - int_{Q_{k+1}} f) ]
                = sum_k mu(Q_k)^-(1+beta) [ (f(x) - a_k) mu(Q_k) - (f(x) - a_{k+1}) mu(Q_{k+1}) ]

with ``a_k`` the average of ``f`` over ``Q_k``.  The second form annihilates
constants exactly.  Either way the cost is ``O(#cells * N)`` instead of ``O(#cells^2)``.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import naive
from .haar import HaarSpectrum, level_integrals
from .tree import CellFunction

logger = logging.getLogger(__name__)


class RatioNonconstancyError(RuntimeError):
    """``D^beta h`` is not proportional to ``h``: broken tree or transform."""


class MissingEigenvalueError(ValueError):
    pass


def check_order(beta, name="beta"):
    if not 0 < beta < 1:
        raise ValueError(f"{name} must lie in (0, 1), got {beta}")
    return float(beta)


def _level_averages(tree, values):
    """Per-level cube averages, exact on cubes where ``values`` is constant."""
    ints = level_integrals(tree, values)
    out = []
    for k in range(tree.depth):
        a = ints[k] / tree.measures[k]
        starts = np.searchsorted(tree.ancestors[k], np.arange(tree.n_cubes(k)))
        parts = (values.real, values.imag)
        flat = [np.minimum.reduceat(p, starts, axis=-1) == np.maximum.reduceat(p, starts, axis=-1) for p in parts]
        const = flat[0] & flat[1]
        if const.any():
            a = np.where(const, values[..., starts], a)
        out.append(a)
    out.append(values)
    return out


def dbeta_values(tree, values, beta):
    """Aggregated ``D^beta`` on raw leaf values (leading axes are batch axes).

    Each annulus term is written as ``(f(x) - a_k) mu_k - (f(x) - a_{k+1}) mu_{k+1}``
    with cube averages ``a``, so constants are annihilated exactly.
    """
    v = np.asarray(values, dtype=complex)
    avg = _level_averages(tree, v)
    out = np.zeros_like(v)
    anc = tree.ancestors
    inner = (v - avg[0][..., anc[0]]) * tree.measures[0][anc[0]]
    for k in range(tree.depth):
        outer = inner
        mk1 = tree.measures[k + 1][anc[k + 1]]
        inner = (v - avg[k + 1][..., anc[k + 1]]) * mk1
        out += tree.measures[k][anc[k]] ** (-(1.0 + beta)) * (outer - inner)
    return out


def apply_dbeta_direct(f, beta, method="aggregate"):
    """Apply ``D^beta`` by exact summation over leaf cells.

    ``method="naive"`` runs the plain double loop; both are exact for
    functions constant on leaf cells.
    """
    check_order(beta)
    if method == "aggregate":
        out = dbeta_values(f.tree, f.values, beta)
    elif method == "naive":
        out = naive.dbeta(f.tree, f.values, beta)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CellFunction(f.tree, out)


@dataclass
class EigenReport:
    """Measured eigenvalue constants ``m_h`` with closed-form cross-checks.

    ``eigenvalues[k] = m[k] * mu(Q(h_k))^-beta`` is what multiplies the
    ``k``-th Haar coefficient under ``D^beta``.
    """

    system: object
    beta: float
    m: np.ndarray
    predicted: np.ndarray
    rel_dev: np.ndarray
    reference_constant: float = None
    extras: dict = field(default_factory=dict)

    @property
    def eigenvalues(self):
        return self.m * self.system.cube_measure ** (-self.beta)

    @property
    def bounds(self):
        return float(self.m.min()), float(self.m.max())

    def rows(self):
        """``(scale, address, index, m_h, predicted_m, rel_dev[, reference_m])`` per wavelet."""
        out = []
        for k, (j, addr, i) in enumerate(self.system.keys()):
            row = [j, addr, i, float(self.m[k]), float(self.predicted[k]), float(self.rel_dev[k])]
            if self.reference_constant is not None:
                row.append(self.reference_constant)
            out.append(row)
        return out

    def per_scale(self):
        """Mean measured and predicted ``m_h`` per scale."""
        out = {}
        for j in np.unique(self.system.scale):
            sel = self.system.scale == j
            out[int(j)] = (float(self.m[sel].mean()), float(self.predicted[sel].mean()))
        return out


def predicted_m(system, beta):
    """``1 + mu(Q)^beta * int_{X minus Q} delta^-(1+beta)`` per wavelet.

    Splitting ``D^beta h`` into the part inside ``Q(h)`` (which gives
    ``mu(Q)^-beta h``) and the exterior (which gives ``h`` times the
    exterior integral) yields this value.
    """
    ext = system.tree.exterior_integrals(beta)
    outside = np.array([ext[j][q] for j, q in zip(system.scale, system.cube)])
    return 1.0 + system.cube_measure ** beta * outside


def gasket_reference_constant(beta):
    """Constant ``1 + 1/(2 (3^beta - 1))`` quoted for the Sierpinski gasket."""
    return 1.0 + 0.5 / (3.0 ** beta - 1.0)


def _measure_chunk(system, beta, j, rows):
    tree = system.tree
    W = system.W[j][rows].toarray()
    H = W[:, tree.ancestors[j + 1]]
    DH = dbeta_values(tree, H, beta).real
    on = H != 0
    ratio = np.where(on, DH / np.where(on, H, 1.0), np.nan)
    mean = np.nanmean(ratio, axis=1)
    spread = (np.nanmax(ratio, axis=1) - np.nanmin(ratio, axis=1)) / np.abs(mean)
    scale = np.abs(DH).max(axis=1)
    leak = np.where(on, 0.0, np.abs(DH)).max(axis=1) / scale
    return mean, np.maximum(spread, leak)


def measure_eigenvalues(system, beta, tol=1e-10, chunk=256, workers=1, reference_constant=None):
    """Apply ``D^beta`` to every wavelet and read off ``m_h``.

    The ratio ``D^beta h / h`` must be constant on the support of ``h`` and
    ``D^beta h`` must vanish elsewhere, both to relative tolerance ``tol``;
    otherwise :class:`RatioNonconstancyError` is raised.
    """
    beta = check_order(beta)
    n = len(system)
    ratio = np.empty(n)
    dev = np.empty(n)
    jobs = []
    for j in range(system.tree.depth):
        sl = system.level(j)
        for lo in range(0, sl.stop - sl.start, chunk):
            rows = np.arange(lo, min(lo + chunk, sl.stop - sl.start))
            jobs.append((j, rows, sl.start + rows))
    run = lambda job: _measure_chunk(system, beta, job[0], job[1])  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(job) for job in jobs]
    for (_, _, idx), (r, d) in zip(jobs, results):
        ratio[idx] = r
        dev[idx] = d
    bad = np.flatnonzero(~(dev < tol))
    if bad.size:
        k = int(bad[np.argmax(dev[bad])])
        raise RatioNonconstancyError(
            f"D^beta h is not a multiple of h for wavelet {system.keys()[k]}: relative deviation {dev[k]:.3e}")
    m = ratio * system.cube_measure ** beta
    return EigenReport(system, beta, m, predicted_m(system, beta), dev, reference_constant)


def apply_dbeta_spectral(spectrum, eigen):
    """Multiply each Haar coefficient by its eigenvalue ``m_h mu(Q(h))^-beta``.

    Constants are annihilated by ``D^beta``, so a nonzero mean is dropped
    with a warning.
    """
    if eigen.system is not spectrum.system:
        if len(eigen.system) != len(spectrum.system):
            raise MissingEigenvalueError("eigen report does not cover this Haar system")
    if spectrum.mean != 0:
        logger.warning("apply_dbeta_spectral: dropping nonzero mean %r", spectrum.mean)
    return HaarSpectrum(spectrum.system, 0.0, spectrum.coefficients * eigen.eigenvalues)
