"""Dense complex matrix utilities.

All functions accept a single ``(n, n)`` matrix; :func:`mat_exp` and
:func:`smallest_singular_value` also accept stacks ``(..., n, n)`` and then
act element-wise (each result depends only on its own matrix, so chunked
evaluation is bit-reproducible).
"""

import numpy as np
import scipy.linalg

from .exceptions import DimensionError

__all__ = ["mat_exp", "smallest_singular_value", "kernel_vector", "is_psd",
           "least_hermitian_eigenvalue", "require_square"]


def require_square(A, name="A"):
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


def _require_finite(A, name="A"):
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or Inf")


def mat_exp(A):
    """Matrix exponential by scaling and squaring with a Pade approximant.

    Backed by :func:`scipy.linalg.expm` (Al-Mohy and Higham, order-13 Pade
    with backward-error based scaling).

    Parameters
    ----------
    A : array_like, shape (..., n, n)

    Returns
    -------
    ndarray, complex, same shape as `A`
    """
    A = require_square(np.asarray(A, dtype=complex))
    _require_finite(A)
    if A.shape[-1] == 0:
        return A.copy()
    E = scipy.linalg.expm(A)
    _require_finite(E, "exp(A)")
    return E


def smallest_singular_value(A):
    """Return sigma_min(A), computed from a full SVD (stacks allowed)."""
    A = require_square(A)
    _require_finite(A)
    return np.linalg.svd(A, compute_uv=False)[..., -1]


def kernel_vector(A, tol):
    """Unit right singular vector for sigma_min(A) if sigma_min <= tol.

    Returns ``None`` when `A` is numerically invertible at level `tol`.
    The phase of the returned vector is normalised so that its largest
    entry is real and positive.
    """
    A = require_square(A)
    if A.ndim != 2:
        raise DimensionError("kernel_vector expects a single matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    _, s, Vh = np.linalg.svd(A)
    if s[-1] > tol:
        return None
    v = Vh[-1].conj()
    k = np.argmax(np.abs(v))
    v = v * (abs(v[k]) / v[k])
    v = v / np.linalg.norm(v)
    v[k] = v[k].real
    return v


def least_hermitian_eigenvalue(A):
    """Smallest eigenvalue of the Hermitian part (A + A*)/2."""
    A = require_square(A)
    return float(np.linalg.eigvalsh(0.5 * (A + A.conj().T))[0])


def is_psd(A, tol=1e-10):
    """Numerical positive semi-definiteness test.

    True iff ``||A - A*|| <= tol (1 + ||A||)`` and every eigenvalue of the
    Hermitian part is ``>= -tol`` (spectral norms).
    """
    A = require_square(np.asarray(A, dtype=complex))
    if A.ndim != 2:
        raise DimensionError("is_psd expects a single matrix")
    if A.shape[0] == 0:
        return True
    norm = np.linalg.norm(A, 2)
    if np.linalg.norm(A - A.conj().T, 2) > tol * (1.0 + norm):
        return False
    return least_hermitian_eigenvalue(A) >= -tol
