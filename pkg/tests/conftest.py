import numpy as np
import pytest

from phstab.system import HamiltonianDensity, SystemSpec
from phstab.strings import StringNetworkParams, build_string_network


def random_hermitian(rng, n, lo=0.5, hi=2.0, real=False):
    """Hermitian matrix with eigenvalues uniform in [lo, hi] (lo > 0 gives PD)."""
    Z = rng.standard_normal((n, n)) + (0 if real else 1j) * rng.standard_normal((n, n))
    U, _ = np.linalg.qr(Z)
    return (U * rng.uniform(lo, hi, n)) @ U.conj().T


def random_invertible_hermitian(rng, n, real=False):
    signs = rng.choice([-1.0, 1.0], n)
    M = random_hermitian(rng, n, real=real)
    w, U = np.linalg.eigh(M)
    return (U * (w * signs)) @ U.conj().T


def random_skew(rng, n, scale=1.0):
    Z = scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return 0.5 * (Z - Z.conj().T)


def random_spec(rng, n=2, cells=2, a=0.0, b=1.0, p0=None, W_B=None, real=False):
    """Random N = 1 system with piecewise-constant H.

    ``p0`` is ``None`` (zero), ``"skew"`` or a matrix.
    """
    P1 = random_invertible_hermitian(rng, n, real=real)
    if p0 is None:
        P0 = np.zeros((n, n))
    elif isinstance(p0, str):
        P0 = random_skew(rng, n)
    else:
        P0 = p0
    inner = np.sort(rng.uniform(a, b, cells - 1))
    bp = np.concatenate([[a], inner, [b]])
    values = np.stack([random_hermitian(rng, n, real=real) for _ in range(cells)])
    if W_B is None:
        W_B = rng.standard_normal((n, 2 * n))
        if not real:
            W_B = W_B + 1j * rng.standard_normal((n, 2 * n))
    return SystemSpec((P0, P1), HamiltonianDensity(bp, values), W_B)


def strings_spec(speeds=(1, 1, 1), beta=1.0, interval=(0.0, 1.0)):
    rho = tuple(float(c) ** 2 for c in speeds)
    return build_string_network(StringNetworkParams(rho=rho, T=(1.0, 1.0, 1.0), beta=beta,
                                                    interval=interval))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance summary ----------------------------------------------------

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
