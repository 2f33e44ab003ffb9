"""Haar analysis, fractional operators and Schrodinger flows on measured dyadic trees."""

__version__ = "0.1.0"

from .besov import besov_energy_coeff, besov_energy_integral, besov_report, nu_form, nu_matrix
from .evolution import check_equation, convergence_study, evolve, partial_sum, partial_sums
from .gasket import build_gasket, explicit_gasket_wavelets, flow_experiment
from .haar import HaarSpectrum, HaarSystem, analyze, build_haar, project, synthesize
from .maximal import bound_constants, m_dy, m_sharp, s_maximal, s_maximal_t
from .operator import apply_dbeta_direct, apply_dbeta_spectral, measure_eigenvalues
from .tree import CellFunction, DyadicTree, annulus_integral, build_explicit_tree, build_uniform_tree, l2_inner, load_tree

__all__ = [
    "CellFunction", "DyadicTree", "HaarSpectrum", "HaarSystem",
    "analyze", "annulus_integral", "apply_dbeta_direct", "apply_dbeta_spectral", "besov_energy_coeff",
    "besov_energy_integral", "besov_report", "bound_constants", "build_explicit_tree", "build_gasket",
    "build_haar", "build_uniform_tree", "check_equation", "convergence_study", "evolve",
    "explicit_gasket_wavelets", "flow_experiment", "l2_inner", "load_tree", "m_dy", "m_sharp",
    "measure_eigenvalues", "nu_form", "nu_matrix", "partial_sum", "partial_sums", "project",
    "s_maximal", "s_maximal_t", "synthesize",
]
