"""Three vibrating strings joined at one end with a damper.

String ``k`` carries mass density ``rho_k`` and tension ``T_k``; its
inverse characteristic speed is ``c_k = sqrt(rho_k / T_k)``. At ``zeta = b``
the displacements are continuous and the forces balance against a damper
of strength ``beta``; at ``zeta = a`` all three strings are clamped.

For constant coefficients stability is decided exactly from the speeds:

* asymptotic stability holds iff ``c_I/c_II`` and ``c_I/c_III`` are not
  even/odd and ``c_II/c_III`` is not odd/odd;
* with rational speeds the function ``eta`` is periodic, so exponential
  and asymptotic stability coincide;
* an irrational speed ratio (asserted by the caller) lets ``eta`` come
  arbitrarily close to zero, so the system is not exponentially stable.

Speed ratios are classified by the parities of their absolute value in
lowest terms.
"""

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
import math

import numpy as np

from .system import HamiltonianDensity, SystemSpec

__all__ = [
    "StringNetworkParams", "Irrational", "ParityClass", "EigenFamily",
    "StringsVerdict", "build_string_network", "closed_form_psi", "eta",
    "eta_period", "min_eta", "min_eta_window", "parity_class",
    "classify_constant_strings", "eigenfrequencies", "rational_dependence",
    "params_from_dict", "as_speed", "STRINGS",
]

STRINGS = ("I", "II", "III")
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Irrational:
    """A speed known only as a double.

    ``independence_asserted`` records the caller's claim that every ratio
    involving this speed and a rational speed (or another irrational one)
    is irrational. The package never decides irrationality itself.
    """
    value: float
    independence_asserted: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise ValueError("speed must be positive and finite")

    def __float__(self):
        return float(self.value)


class ParityClass(Enum):
    EVEN_OVER_ODD = "E/O"
    ODD_OVER_ODD = "O/O"
    NEITHER = "neither"


def as_speed(value):
    """Coerce `value` to a positive :class:`~fractions.Fraction` or :class:`Irrational`.

    Accepts ``Fraction``, ``int``, ``"p/q"`` strings, ``(p, q)`` pairs and
    ``Irrational``. Floats are converted exactly (binary value).
    """
    if isinstance(value, Irrational):
        return value
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ValueError("rational speed pairs must be [p, q]")
        p, q = value
        if not (isinstance(p, int) and isinstance(q, int)):
            raise ValueError("rational speed pairs must hold integers")
        value = Fraction(p, q)
    elif isinstance(value, (int, str, float)) and not isinstance(value, bool):
        value = Fraction(value)
    if not isinstance(value, Fraction):
        raise ValueError(f"cannot interpret {value!r} as a speed")
    if value <= 0:
        raise ValueError("speeds must be positive")
    return value


def _exact_sqrt(x):
    """sqrt of a positive Fraction if it is a rational square, else None."""
    p, q = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if p * p == x.numerator and q * q == x.denominator:
        return Fraction(p, q)
    return None


@dataclass(frozen=True)
class StringNetworkParams:
    """Physical data of the three-string network.

    ``beta`` may be any real number so that generation can be tested with
    ``beta <= 0``; stability classification requires ``beta > 0``.
    ``speeds_exact`` overrides the speeds derived from ``rho`` and ``T``.
    """
    rho: tuple
    T: tuple
    beta: float = 1.0
    interval: tuple = (0.0, 1.0)
    speeds_exact: tuple = None
    independence_asserted: bool = False

    def __post_init__(self):
        rho = tuple(float(r) for r in self.rho)
        T = tuple(float(t) for t in self.T)
        if len(rho) != 3 or len(T) != 3:
            raise ValueError("rho and T need one value per string")
        if not all(math.isfinite(v) and v > 0 for v in rho + T):
            raise ValueError("rho and T must be positive and finite")
        if not math.isfinite(self.beta):
            raise ValueError("beta must be finite")
        a, b = (float(v) for v in self.interval)
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ValueError("interval must satisfy a < b")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "interval", (a, b))
        if self.speeds_exact is not None:
            sp = tuple(as_speed(s) for s in self.speeds_exact)
            if len(sp) != 3:
                raise ValueError("speeds_exact needs three entries")
            if self.independence_asserted:
                sp = tuple(Irrational(s.value, True) if isinstance(s, Irrational) else s
                           for s in sp)
            num = [math.sqrt(r / t) for r, t in zip(rho, T)]
            if not all(math.isclose(float(s), c, rel_tol=1e-9) for s, c in zip(sp, num)):
                raise ValueError("speeds_exact disagree with sqrt(rho/T)")
            object.__setattr__(self, "speeds_exact", sp)

    @property
    def length(self):
        return self.interval[1] - self.interval[0]

    def speeds(self):
        """Exact speeds where possible, :class:`Irrational` otherwise."""
        if self.speeds_exact is not None:
            return self.speeds_exact
        out = []
        for r, t in zip(self.rho, self.T):
            c = _exact_sqrt(Fraction(r) / Fraction(t))
            out.append(c if c is not None
                       else Irrational(math.sqrt(r / t), self.independence_asserted))
        return tuple(out)

    def numeric_speeds(self):
        return np.sqrt(np.array(self.rho) / np.array(self.T))


def params_from_dict(data):
    """Parse the JSON schema of a string network.

    Keys: ``rho``, ``T`` (three numbers each), ``beta``, ``interval``
    (``[a, b]``), optional ``speeds_exact`` (``[[p, q], ...]``) and
    ``independence_asserted``.
    """
    if not isinstance(data, dict):
        raise ValueError("string network must be a JSON object")
    missing = [k for k in ("rho", "T", "beta") if k not in data]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    unknown = set(data) - {"rho", "T", "beta", "interval", "speeds_exact",
                           "independence_asserted", "kind"}
    if unknown:
        raise ValueError(f"unknown keys: {', '.join(sorted(unknown))}")
    sp = data.get("speeds_exact")
    if sp is not None:
        sp = tuple(tuple(s) if isinstance(s, list) else s for s in sp)
    try:
        return StringNetworkParams(
            rho=tuple(data["rho"]), T=tuple(data["T"]), beta=data["beta"],
            interval=tuple(data.get("interval", (0.0, 1.0))), speeds_exact=sp,
            independence_asserted=bool(data.get("independence_asserted", False)))
    except TypeError as exc:
        raise ValueError(str(exc)) from None


def _boundary_matrix(beta):
    W = np.zeros((6, 12))
    W[0, [0, 2]] = [1.0, -1.0]
    W[1, [0, 4]] = [1.0, -1.0]
    W[2, :6] = [beta, 1.0, 0.0, 1.0, 0.0, 1.0]
    W[3, 6] = 1.0
    W[4, 9] = 1.0
    W[5, 11] = 1.0
    return W


def build_string_network(params):
    """The network as a first-order port-Hamiltonian system (n = 6, N = 1).

    States per string: ``(rho w_t, w_zeta)``; ``H`` is constant.
    """
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    P1 = np.kron(np.eye(3), swap)
    H = np.zeros((6, 6))
    for k in range(3):
        H[2 * k, 2 * k] = 1.0 / params.rho[k]
        H[2 * k + 1, 2 * k + 1] = params.T[k]
    a, b = params.interval
    return SystemSpec(P=(np.zeros((6, 6)), P1),
                      H=HamiltonianDensity.constant(H, a, b),
                      W_B=_boundary_matrix(params.beta))


def closed_form_psi(c, rho, omega, s):
    """Transfer matrix of one constant string over length `s` at ``lambda = i omega``."""
    T = rho / c ** 2
    x = c * omega * s
    cs, sn = math.cos(x), math.sin(x)
    return np.array([[cs, 1j * c / rho * sn], [1j * c * T * sn, cs]])


def _float_speeds(speeds):
    return np.array([float(s) for s in speeds])


def eta(speeds, omega, b_minus_a=1.0, squared=False, sin_scale=1.0):
    """Stability margin ``eta(omega)`` of the constant network.

    ``|s_I C_II| + |s_I C_III| + |C_II C_III|`` with
    ``s_I = sin_scale * sin(c_I omega L)`` and ``C_k = cos(c_k omega L)``.
    ``sin_scale = c_I / rho_I`` reproduces the transfer-matrix entry
    exactly; the zero set does not depend on it. ``squared=True`` sums
    squared moduli instead. Vectorised over `omega`.
    """
    c = _float_speeds(speeds)
    w = np.asarray(omega, dtype=float) * b_minus_a
    s1 = sin_scale * np.sin(c[0] * w)
    c2, c3 = np.cos(c[1] * w), np.cos(c[2] * w)
    terms = (s1 * c2, s1 * c3, c2 * c3)
    if squared:
        return sum(t * t for t in terms)
    return sum(np.abs(t) for t in terms)


def _require_rational(speeds):
    if not all(isinstance(s, Fraction) for s in speeds):
        raise ValueError("period only exists for rational speeds")


def eta_period(speeds, b_minus_a=1.0):
    """A period of ``eta`` in ``omega``: ``2 pi lcm(denominators) / (b - a)``."""
    speeds = tuple(as_speed(s) for s in speeds)
    _require_rational(speeds)
    return 2 * math.pi * math.lcm(*(s.denominator for s in speeds)) / b_minus_a


def _refine_minima(f, grid, vals, count):
    """Golden-section refinement around the `count` smallest local grid minima."""
    n = grid.size
    left = np.concatenate([[np.inf], vals[:-1]])
    right = np.concatenate([vals[1:], [np.inf]])
    idx = np.flatnonzero((vals <= left) & (vals <= right))
    idx = idx[np.argsort(vals[idx], kind="stable")[:count]]
    lo = grid[np.maximum(idx - 1, 0)].astype(float)
    hi = grid[np.minimum(idx + 1, n - 1)].astype(float)
    best_x, best_f = grid[idx].astype(float), vals[idx].astype(float)
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(200):
        if np.all(hi - lo <= 1e-13 * np.maximum(1.0, np.abs(hi))):
            break
        go_left = f1 < f2
        hi = np.where(go_left, x2, hi)
        lo = np.where(go_left, lo, x1)
        nx = np.where(go_left, hi - _INVPHI * (hi - lo), lo + _INVPHI * (hi - lo))
        nf = f(nx)
        x1, x2, f1, f2 = (np.where(go_left, nx, x2), np.where(go_left, x1, nx),
                          np.where(go_left, nf, f2), np.where(go_left, f1, nf))
        for xs, fs in ((x1, f1), (x2, f2)):
            better = fs < best_f
            best_x, best_f = np.where(better, xs, best_x), np.where(better, fs, best_f)
    k = int(np.argmin(best_f))
    return float(best_x[k]), float(best_f[k])


@dataclass(frozen=True)
class EtaMinimum:
    grid_min: float
    grid_argmin: float
    refined_min: float
    refined_argmin: float


def min_eta(speeds, b_minus_a=1.0, omega_range=None, grid_points=100_000,
            refine=10, squared=False, sin_scale=1.0):
    """Minimum of ``eta`` on a grid plus golden-section refinement.

    `omega_range` defaults to one period (rational speeds only). The 10
    smallest local grid minima are refined.
    """
    if omega_range is None:
        omega_range = (0.0, eta_period(speeds, b_minus_a))
    grid = np.linspace(omega_range[0], omega_range[1], grid_points)

    def f(w):
        return eta(speeds, w, b_minus_a, squared, sin_scale)

    vals = f(grid)
    k = int(np.argmin(vals))
    rx, rf = _refine_minima(f, grid, vals, refine)
    if vals[k] <= rf:
        rx, rf = float(grid[k]), float(vals[k])
    return EtaMinimum(float(vals[k]), float(grid[k]), rf, rx)


def min_eta_window(speeds, omega_max, b_minus_a=1.0, spacing=0.25, chunk=1_000_000,
                   squared=False):
    """Refined minimum of ``eta`` over ``[0, omega_max]`` scanned in chunks.

    Every local grid minimum is refined, so deep narrow dips between grid
    nodes are found as long as the grid resolves their basin. The result is
    grid-limited evidence, not a bound.
    """
    n = int(math.ceil(omega_max / spacing)) + 1
    step = omega_max / (n - 1)
    best = (math.inf, 0.0)

    def f(w):
        return eta(speeds, w, b_minus_a, squared)

    for start in range(0, n, chunk):
        idx = np.arange(start, min(n, start + chunk + 2))
        grid = idx * step
        vals = f(grid)
        x, v = _refine_minima(f, grid, vals, count=grid.size)
        if v < best[0]:
            best = (v, x)
    return best


def parity_class(r):
    """Parity class of a rational number by the parities of ``|r|`` in lowest terms.

    Accepts a :class:`~fractions.Fraction`, an ``int`` or a ``(p, q)``
    pair; a zero denominator raises :class:`ZeroDivisionError`.
    """
    if isinstance(r, tuple):
        r = Fraction(*r)
    r = Fraction(r)
    p, q = abs(r.numerator), r.denominator
    if p % 2 == 0:
        return ParityClass.EVEN_OVER_ODD
    if q % 2 == 1:
        return ParityClass.ODD_OVER_ODD
    return ParityClass.NEITHER


def rational_dependence(x, y):
    """Smallest positive integers ``(k, n)`` with ``k x - n y`` an integer.

    The search runs over ``k`` ascending; for each ``k`` the least ``n``
    solves a linear congruence modulo the denominator of ``y``.
    """
    x, y = Fraction(x), Fraction(y)
    qy = y.denominator
    py = y.numerator % qy
    # k x - n y in Z  <=>  n * py = k x * qy  (mod qy) with k x * qy integral
    k = 1
    while True:
        kx = k * x
        t = kx * qy
        if t.denominator == 1:
            rhs = int(t) % qy
            if qy == 1:
                return k, 1
            g = math.gcd(py, qy)
            if rhs % g == 0:
                m = qy // g
                inv = pow(py // g, -1, m) if m > 1 else 0
                n = (rhs // g) * inv % m
                return k, n if n > 0 else m
        k += 1


@dataclass(frozen=True)
class EigenFamily:
    """Eigenvalues ``i omega`` with ``omega = u * base_omega``, ``u`` odd.

    ``base_omega = coefficient * pi / (b - a)``.
    """
    pair: tuple
    ratio: Fraction
    coefficient: Fraction
    base_omega: float

    def frequencies(self, omega_max):
        if self.base_omega <= 0:
            return []
        u = int(omega_max // self.base_omega)
        return [k * self.base_omega for k in range(-u, u + 1) if k % 2]


@dataclass(frozen=True)
class StringsVerdict:
    speeds: tuple
    ratio_classes: dict
    asymptotic_status: str
    asymptotically_stable: bool
    exponential_status: str
    exponentially_stable: bool
    exponential_method: str
    families: tuple = ()
    period: float = None
    eta_minimum: EtaMinimum = None
    notes: tuple = field(default_factory=tuple)


_PAIRS = ((0, 1, ParityClass.EVEN_OVER_ODD), (0, 2, ParityClass.EVEN_OVER_ODD),
          (1, 2, ParityClass.ODD_OVER_ODD))


def _family(i, j, ratio, speeds, L):
    if ratio is None:
        return None
    p = ratio.numerator
    if i == 0:
        coef = Fraction(p, 2) / speeds[0]
    else:
        coef = Fraction(p, 2) / speeds[1]
    return EigenFamily((STRINGS[i], STRINGS[j]), ratio, coef, float(coef) * math.pi / L)


def eigenfrequencies(speeds, b_minus_a, omega_max):
    """All imaginary-axis eigenfrequencies in ``[-omega_max, omega_max]``, sorted."""
    verdict = classify_constant_strings(speeds, b_minus_a)
    out = set()
    for fam in verdict.families:
        out.update(fam.frequencies(omega_max))
    return sorted(out)


def classify_constant_strings(speeds, b_minus_a=1.0):
    """Exact stability verdicts for constant coefficients.

    Parameters
    ----------
    speeds : sequence of 3
        Entries accepted by :func:`as_speed`.
    b_minus_a : float
        String length.

    Returns
    -------
    StringsVerdict
        ``asymptotic_status`` is ``"stable"``, ``"unstable"`` or
        ``"requires assertion"``; in the last case the boolean fields are
        None.
    """
    speeds = tuple(as_speed(s) for s in speeds)
    L = float(b_minus_a)
    classes, families, unknown = {}, [], []
    irrational_pairs = []
    for i, j, bad in _PAIRS:
        key = f"{STRINGS[i]}/{STRINGS[j]}"
        si, sj = speeds[i], speeds[j]
        if isinstance(si, Fraction) and isinstance(sj, Fraction):
            r = si / sj
            cls = parity_class(r)
            classes[key] = cls.value
            if cls is bad:
                families.append(_family(i, j, r, speeds, L))
        else:
            asserted = all(s.independence_asserted for s in (si, sj)
                           if isinstance(s, Irrational))
            classes[key] = "irrational" if asserted else "unknown"
            (irrational_pairs if asserted else unknown).append(key)

    if families:
        asym, asym_ok = "unstable", False
    elif unknown:
        asym, asym_ok = "requires assertion", None
    else:
        asym, asym_ok = "stable", True

    notes = []
    period = eta_min = None
    if all(isinstance(s, Fraction) for s in speeds):
        period = eta_period(speeds, L)
        eta_min = min_eta(speeds, L)
        expo_ok, method = asym_ok, "rational parity (eta periodic)"
        if (eta_min.refined_min > 1e-9) != expo_ok:
            notes.append("numerical eta minimum disagrees with the parity verdict")
    elif not asym_ok and asym_ok is not None:
        expo_ok, method = False, "not asymptotically stable"
    elif irrational_pairs:
        expo_ok, method = False, "irrational speed ratio (eta liminf is zero)"
        notes.append("asymptotic verdict treats the irrational ratios "
                     f"{', '.join(irrational_pairs)} as asserted")
    else:
        expo_ok, method = None, "requires assertion"
    if expo_ok is None:
        expo = "requires assertion"
    else:
        expo = "exponentially stable" if expo_ok else "not exponentially stable"
    return StringsVerdict(speeds, classes, asym, asym_ok, expo, expo_ok, method,
                          tuple(families), period, eta_min, tuple(notes))
