import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from phstab.exceptions import DimensionError
from phstab.numkernel import (is_psd, kernel_vector, least_hermitian_eigenvalue,
                              mat_exp, smallest_singular_value)


def taylor_exp(A, terms=20):
    """Truncated exponential series, accurate for ||A|| <= 1."""
    out = np.eye(A.shape[0], dtype=complex)
    term = out.copy()
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def exp_by_squaring_series(A):
    # scale into the unit ball, then square back up
    s = max(0, math.ceil(math.log2(max(np.linalg.norm(A, 1), 1e-300))))
    E = taylor_exp(A / 2 ** s)
    for _ in range(s):
        E = E @ E
    return E


small = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (2, 4, 4), elements=small))
def test_mat_exp_matches_series(parts):
    A = (parts[0] + 1j * parts[1]) / 4
    assert np.linalg.norm(mat_exp(A) - taylor_exp(A), 2) < 1e-13


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (2, 5, 5), elements=st.floats(-6.0, 6.0)))
def test_mat_exp_matches_scaled_series(parts):
    A = parts[0] + 1j * parts[1]
    ref = exp_by_squaring_series(A)
    err = np.linalg.norm(mat_exp(A) - ref, 2)
    assert err <= 1e-11 * max(1.0, np.linalg.norm(ref, 2))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (2, 3, 3), elements=st.floats(-3.0, 3.0)))
def test_exp_of_negation_is_inverse(parts):
    A = parts[0] + 1j * parts[1]
    P = mat_exp(A) @ mat_exp(-A)
    assert np.linalg.norm(P - np.eye(3), 2) < 1e-9 * math.exp(2 * np.linalg.norm(A, 2))


def test_mat_exp_diagonal_and_zero():
    d = np.array([0.3, -1.2 + 2j, 4j])
    assert np.allclose(mat_exp(np.diag(d)), np.diag(np.exp(d)), rtol=1e-14, atol=0)
    assert np.array_equal(mat_exp(np.zeros((3, 3))), np.eye(3))


def test_mat_exp_stack_is_elementwise(rng):
    A = rng.standard_normal((7, 4, 4)) + 1j * rng.standard_normal((7, 4, 4))
    stacked = mat_exp(A)
    for k in range(7):
        assert np.array_equal(stacked[k], mat_exp(A[k]))


def test_mat_exp_rejects_bad_input():
    with pytest.raises(DimensionError):
        mat_exp(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="NaN"):
        mat_exp(np.array([[np.nan, 0], [0, 1]]))


def test_smallest_singular_value():
    assert smallest_singular_value(np.diag([3.0, 0.5, 2.0])) == pytest.approx(0.5)
    stack = np.stack([np.eye(2), 2 * np.eye(2)])
    assert np.allclose(smallest_singular_value(stack), [1.0, 2.0])


def test_kernel_vector_on_singular_matrix(rng):
    B = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    A = B @ (rng.standard_normal((3, 4)) + 0j)
    v = kernel_vector(A, 1e-10)
    assert v is not None
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert np.linalg.norm(A @ v) < 1e-12
    k = np.argmax(np.abs(v))
    assert v[k].imag == 0 and v[k].real > 0


def test_kernel_vector_none_when_invertible():
    assert kernel_vector(np.eye(3), 1e-10) is None
    with pytest.raises(ValueError):
        kernel_vector(np.eye(3), 0.0)


def test_psd_checks():
    assert is_psd(np.diag([1.0, 0.0]))
    assert not is_psd(np.diag([1.0, -1e-6]))
    assert is_psd(np.diag([1.0, -1e-12]))
    assert not is_psd(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert least_hermitian_eigenvalue(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(-1.0)
