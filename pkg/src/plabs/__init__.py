"""Piecewise linear systems in abs-normal form.

Represent continuous piecewise linear maps by their switching data
(c, b, Z, L, J, Y), diagnose solvability through the Schur complement and
its sign real spectral radius, and solve F(x) = 0 by fixed point, Newton
and signed-elimination methods, all verifiable against brute-force
enumeration oracles.
"""

from .core import (AbsNormalForm, EvalRecord, PieceJacobian, Signature,
                   ValidationReport, evaluate, piece_jacobian,
                   polynomial_escape, regularize_smooth_part, validate)
from .tape import Tape, lower, schueth_tapes, tape_eval
from .analysis import (CertificateReport, CoherenceCheck, Equilibration,
                       SchurData, certificates, likq_sufficient,
                       operator_norm, pf_equilibrate, piece_determinant,
                       piece_inverse, schur, sigma_coherence,
                       sign_real_spectral_radius)
from .cpl import (CplSystem, ave_form, brute_force_solutions, form_from_cpl,
                  h_eval, reduce_form, x_from_z, z_from_x)
from .solvers import (SolveTrace, block_seidel, modulus, newton_cpl,
                      newton_opl, signed_ge)
from .lcp import LcpData, LcpEnumeration, lcp_solve_enum, p_matrix_check, to_lcp
from .graph import Component, TransitionGraph, analyze, build_graph, export_dot
from . import errors, gallery

__version__ = "0.1.0"

__all__ = [
    "AbsNormalForm", "EvalRecord", "PieceJacobian", "Signature",
    "ValidationReport", "evaluate", "piece_jacobian", "polynomial_escape",
    "regularize_smooth_part", "validate",
    "Tape", "lower", "schueth_tapes", "tape_eval",
    "CertificateReport", "CoherenceCheck", "Equilibration", "SchurData",
    "certificates", "likq_sufficient", "operator_norm", "pf_equilibrate",
    "piece_determinant", "piece_inverse", "schur", "sigma_coherence",
    "sign_real_spectral_radius",
    "CplSystem", "ave_form", "brute_force_solutions", "form_from_cpl",
    "h_eval", "reduce_form", "x_from_z", "z_from_x",
    "SolveTrace", "block_seidel", "modulus", "newton_cpl", "newton_opl",
    "signed_ge",
    "LcpData", "LcpEnumeration", "lcp_solve_enum", "p_matrix_check", "to_lcp",
    "Component", "TransitionGraph", "analyze", "build_graph", "export_dot",
    "errors", "gallery",
]
