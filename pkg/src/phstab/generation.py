"""Contraction-semigroup test via the boundary matrix inequality.

``A`` generates a contraction semigroup iff

    W_B R_ext^{-1} [[0, I], [I, 0]] (W_B R_ext^{-1})^*  >= 0.
"""

from dataclasses import dataclass

import numpy as np

from .numkernel import is_psd, least_hermitian_eigenvalue
from .system import build_R_ext, require_valid

__all__ = ["GenerationVerdict", "generation_matrix", "check_contraction_generator"]

DEFAULT_GENERATION_TOL = 1e-9


@dataclass(frozen=True)
class GenerationVerdict:
    generates: bool
    witness: float
    test_matrix: np.ndarray
    marginal: bool = False
    tol: float = DEFAULT_GENERATION_TOL


def generation_matrix(spec):
    """Hermitian ``nN x nN`` test matrix of the contraction criterion."""
    require_valid(spec)
    S = build_R_ext(spec)
    d = spec.dim
    X = spec.W_B @ S.R_ext_inv
    swap = np.block([[np.zeros((d, d)), np.eye(d)], [np.eye(d), np.zeros((d, d))]])
    return X @ swap @ X.conj().T


def check_contraction_generator(spec, tol=DEFAULT_GENERATION_TOL):
    """Decide generation of a contraction semigroup.

    ``witness`` is the least eigenvalue of the Hermitian part of the test
    matrix. A witness in ``[-tol, 0)`` still counts as generating; it sets
    ``marginal`` when it lies below round-off level ``64 eps (1 + ||M||)``.
    """
    M = generation_matrix(spec)
    witness = least_hermitian_eigenvalue(M)
    generates = is_psd(M, tol)
    return GenerationVerdict(
        generates=bool(generates),
        witness=witness,
        test_matrix=M,
        marginal=bool(generates and witness < -64 * np.finfo(float).eps
                      * (1.0 + np.linalg.norm(M, 2))),
        tol=tol,
    )
