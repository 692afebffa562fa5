"""Port-Hamiltonian system data on an interval.

The system is

    dx/dt = sum_k P_k d^k/dzeta^k (H(zeta) x),   zeta in (a, b),

with boundary conditions ``W_B [v(b); v(a)] = 0`` where ``v`` stacks
``H x`` and its first ``N - 1`` derivatives. ``H`` is stored piecewise
constant on a cell mesh.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .exceptions import DimensionError, InvalidSystemError
from .numkernel import smallest_singular_value

__all__ = [
    "HamiltonianDensity", "SystemSpec", "StructureMatrices", "Violation",
    "validate_system", "require_valid", "build_Q", "build_R_ext",
    "energy_inner_product", "system_from_dict", "system_to_dict",
    "load_system",
]

DEFAULT_TOL = 1e-10
STRUCTURE_TOL = 1e-12


def _as_matrix(x, name):
    A = np.array(x, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2:
        raise DimensionError(f"{name} must be a matrix, got shape {A.shape}")
    return A


@dataclass(frozen=True)
class HamiltonianDensity:
    """Piecewise-constant Hermitian matrix function on ``[a, b]``.

    ``values[j]`` holds on ``[breakpoints[j], breakpoints[j+1])``; the last
    cell is closed at ``b``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.array(self.breakpoints, dtype=float).ravel()
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 2:
            vals = vals[None]
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise DimensionError("values must have shape (M, n, n)")
        if bp.size != vals.shape[0] + 1:
            raise DimensionError(
                f"{vals.shape[0]} cells need {vals.shape[0] + 1} breakpoints, "
                f"got {bp.size}")
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value, a, b):
        return cls([a, b], [_as_matrix(value, "H")])

    @classmethod
    def sampled(cls, func, a, b, cells):
        """Midpoint sampling of ``func(zeta)`` onto `cells` equal cells."""
        bp = np.linspace(a, b, cells + 1)
        mids = 0.5 * (bp[:-1] + bp[1:])
        return cls(bp, np.stack([_as_matrix(func(z), "H(zeta)") for z in mids]))

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def cells(self):
        return self.values.shape[0]

    @property
    def interval(self):
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def widths(self):
        return np.diff(self.breakpoints)

    @property
    def coercivity_floor(self):
        """Smallest eigenvalue over all cells (Hermitian parts)."""
        herm = 0.5 * (self.values + np.conj(np.swapaxes(self.values, 1, 2)))
        return float(np.linalg.eigvalsh(herm)[:, 0].min())

    @property
    def bound(self):
        return float(max(np.linalg.norm(v, 2) for v in self.values))

    def cell_index(self, zeta):
        """Index of the cell containing `zeta` (right-continuous)."""
        zeta = np.asarray(zeta, dtype=float)
        idx = np.searchsorted(self.breakpoints, zeta, side="right") - 1
        return np.clip(idx, 0, self.cells - 1)

    def at(self, zeta):
        return self.values[self.cell_index(zeta)]

    def scaled(self, factor):
        return HamiltonianDensity(self.breakpoints, self.values * factor)

    def shifted(self, delta):
        """H + delta * I on every cell."""
        eye = np.eye(self.n)
        return HamiltonianDensity(self.breakpoints, self.values + delta * eye)


@dataclass(frozen=True)
class SystemSpec:
    """Full p.d.e. data: ``P = (P_0, ..., P_N)``, density ``H`` and ``W_B``.

    The interval is the support of ``H``.
    """

    P: tuple
    H: HamiltonianDensity
    W_B: np.ndarray

    def __post_init__(self):
        P = tuple(_as_matrix(p, f"P_{k}") for k, p in enumerate(self.P))
        W = _as_matrix(self.W_B, "W_B")
        for p in P:
            p.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "W_B", W)

    @property
    def N(self):
        return len(self.P) - 1

    @property
    def n(self):
        return self.P[0].shape[0]

    @property
    def dim(self):
        """Size ``n N`` of the boundary-trace vector at one end."""
        return self.n * self.N

    @property
    def interval(self):
        return self.H.interval

    @property
    def length(self):
        a, b = self.interval
        return b - a

    def with_hamiltonian(self, H):
        return SystemSpec(self.P, H, self.W_B)

    def with_boundary(self, W_B):
        return SystemSpec(self.P, self.H, W_B)

    def is_real(self):
        arrays = list(self.P) + [self.H.values, self.W_B]
        return all(np.all(np.imag(x) == 0) for x in arrays)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def validate_system(spec, tol=DEFAULT_TOL, structure_tol=STRUCTURE_TOL):
    """Check every standing assumption; returns a list of violations.

    An empty list means the system is admissible. Codes: ``shape``,
    ``finite``, ``interval``, ``P_k symmetry``, ``P_N invertibility``,
    ``W_B rank``, ``hermitian``, ``coercivity``.
    """
    out = []
    if spec.N < 1:
        return [Violation("shape", "need at least P_0 and P_1 (N >= 1)")]
    n, N = spec.n, spec.N
    for k, p in enumerate(spec.P):
        if p.shape != (n, n):
            out.append(Violation("shape", f"P_{k} has shape {p.shape}, expected {(n, n)}"))
    if spec.H.n != n:
        out.append(Violation("shape", f"H is {spec.H.n}x{spec.H.n}, expected {n}x{n}"))
    if spec.W_B.shape != (n * N, 2 * n * N):
        out.append(Violation(
            "shape", f"W_B has shape {spec.W_B.shape}, expected {(n * N, 2 * n * N)}"))
    if out:
        return out

    arrays = list(spec.P) + [spec.H.values, spec.W_B, spec.H.breakpoints]
    if not all(np.all(np.isfinite(x)) for x in arrays):
        return [Violation("finite", "system data contains NaN or Inf")]
    if np.any(np.diff(spec.H.breakpoints) <= 0):
        out.append(Violation("interval", "breakpoints must be strictly increasing"))

    for k, p in enumerate(spec.P):
        sign = (-1) ** (k + 1)
        err = np.max(np.abs(p.conj().T - sign * p))
        if err > structure_tol * max(1.0, np.max(np.abs(p))):
            rule = "P_k* = P_k" if sign > 0 else "P_k* = -P_k"
            out.append(Violation("P_k symmetry", f"P_{k} violates {rule} (error {err:.3g})"))
    if smallest_singular_value(spec.P[-1]) <= structure_tol:
        out.append(Violation("P_N invertibility", f"P_{N} is singular"))
    gram = spec.W_B @ spec.W_B.conj().T
    if smallest_singular_value(gram) <= tol:
        out.append(Violation("W_B rank", "W_B does not have full row rank"))

    vals = spec.H.values
    herm_err = np.max(np.abs(vals - np.conj(np.swapaxes(vals, 1, 2))))
    if herm_err > structure_tol * max(1.0, np.max(np.abs(vals))):
        out.append(Violation("hermitian", f"H is not Hermitian (error {herm_err:.3g})"))
    m = spec.H.coercivity_floor
    if m <= structure_tol:
        out.append(Violation("coercivity", f"H is not uniformly positive (floor {m:.3g})"))
    return out


def require_valid(spec, **kwargs):
    violations = validate_system(spec, **kwargs)
    if violations:
        msg = "; ".join(f"{v.code}: {v.message}" for v in violations)
        raise InvalidSystemError(f"invalid system: {msg}", violations)
    return spec


def _check_algebra(spec):
    # Q and R_ext are defined for any P with invertible P_N and
    # consistent shapes; symmetry is not needed for the algebra.
    n = spec.n
    if spec.N < 1 or any(p.shape != (n, n) for p in spec.P):
        raise InvalidSystemError("P_0..P_N must be square of equal size")
    if smallest_singular_value(spec.P[-1]) <= STRUCTURE_TOL:
        raise InvalidSystemError("P_N is singular",
                                 [Violation("P_N invertibility", "P_N is singular")])


def build_Q(spec):
    """Block matrix with ``Q_ij = (-1)^(i-1) P_(i+j-1)`` for ``i+j-1 <= N``."""
    _check_algebra(spec)
    n, N = spec.n, spec.N
    Q = np.zeros((n * N, n * N), dtype=complex)
    for i in range(1, N + 1):
        for j in range(1, N + 2 - i):
            Q[(i - 1) * n:i * n, (j - 1) * n:j * n] = (-1) ** (i - 1) * spec.P[i + j - 1]
    return Q


@dataclass(frozen=True)
class StructureMatrices:
    Q: np.ndarray
    R_ext: np.ndarray
    R_ext_inv: np.ndarray
    inverse_residual: float = field(default=0.0)


def build_R_ext(spec, check_tol=1e-10):
    """``R_ext = [[Q, -Q], [I, I]] / sqrt(2)`` and its verified inverse."""
    Q = build_Q(spec)
    d = Q.shape[0]
    eye = np.eye(d)
    R = np.block([[Q, -Q], [eye, eye]]) / math.sqrt(2.0)
    # Closed-form inverse: (1/sqrt 2) [[Q^-1, I], [-Q^-1, I]].
    Qinv = np.linalg.solve(Q, eye)
    Rinv = np.block([[Qinv, eye], [-Qinv, eye]]) / math.sqrt(2.0)
    residual = float(np.max(np.abs(R @ Rinv - np.eye(2 * d))))
    if residual > check_tol * max(1.0, np.linalg.cond(Q)):
        raise InvalidSystemError(f"R_ext inverse check failed (residual {residual:.3g})")
    return StructureMatrices(Q, R, Rinv, residual)


def energy_inner_product(f, g, H, grid):
    """``(1/2) int g* H f`` for grid functions `f`, `g` of shape (K+1, n).

    `f` and `g` are taken piecewise linear between the nodes of `grid`,
    which must contain every breakpoint of `H`; on each grid cell the
    integral of the product of two linear functions against the (constant)
    ``H`` is evaluated exactly.
    """
    grid = np.asarray(grid, dtype=float)
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.ndim == 1:
        f = f[:, None]
    if g.ndim == 1:
        g = g[:, None]
    if f.shape != g.shape or f.shape[0] != grid.size or f.shape[1] != H.n:
        raise DimensionError(
            f"f {f.shape}, g {g.shape} incompatible with grid of {grid.size} nodes "
            f"and n = {H.n}")
    if np.any(np.diff(grid) <= 0):
        raise DimensionError("grid must be strictly increasing")
    a, b = H.interval
    scale = max(1.0, abs(a), abs(b))
    if abs(grid[0] - a) > 1e-12 * scale or abs(grid[-1] - b) > 1e-12 * scale:
        raise DimensionError("grid must span the interval of H")
    for z in H.breakpoints[1:-1]:
        if np.min(np.abs(grid - z)) > 1e-12 * scale:
            raise DimensionError(f"grid does not contain breakpoint {z}")

    h = np.diff(grid)
    Hc = H.at(0.5 * (grid[:-1] + grid[1:]))
    f0, f1, g0, g1 = f[:-1], f[1:], g[:-1], g[1:]

    def form(u, w):
        return np.einsum("ki,kij,kj->k", w.conj(), Hc, u)

    cell = (2 * form(f0, g0) + form(f1, g0) + form(f0, g1) + 2 * form(f1, g1)) * h / 6
    return complex(0.5 * cell.sum())


# --- JSON system files -----------------------------------------------------

def _decode_entry(x):
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise ValueError(f"complex entry must be [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    return complex(float(x))


def _decode_matrix(rows, name):
    try:
        M = np.array([[_decode_entry(x) for x in row] for row in rows], dtype=complex)
    except TypeError as exc:
        raise ValueError(f"{name}: expected a list of rows") from exc
    if M.ndim != 2:
        raise ValueError(f"{name}: rows have unequal length")
    return M


def _encode_matrix(M):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M, dtype=complex)]


def system_from_dict(data):
    """Build a :class:`SystemSpec` from the JSON system-file layout.

    Keys: ``n``, ``N``, ``interval``, ``P`` (N+1 matrices), ``hamiltonian``
    (``breakpoints``, ``values``) and ``W_B``. Matrix entries are ``[re, im]``
    pairs or plain numbers. Raises ``ValueError`` on schema errors.
    """
    missing = [k for k in ("n", "N", "interval", "P", "hamiltonian", "W_B") if k not in data]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    n, N = int(data["n"]), int(data["N"])
    P = [_decode_matrix(p, f"P[{k}]") for k, p in enumerate(data["P"])]
    if len(P) != N + 1:
        raise ValueError(f"P must hold N+1 = {N + 1} matrices, got {len(P)}")
    ham = data["hamiltonian"]
    bp = [float(z) for z in ham["breakpoints"]]
    vals = [_decode_matrix(v, f"hamiltonian.values[{j}]") for j, v in enumerate(ham["values"])]
    a, b = (float(z) for z in data["interval"])
    if not bp or bp[0] != a or bp[-1] != b:
        raise ValueError("hamiltonian.breakpoints must start at a and end at b")
    shapes = {p.shape for p in P} | {v.shape for v in vals}
    if shapes != {(n, n)}:
        raise ValueError(f"all P_k and H values must be {n}x{n}")
    try:
        H = HamiltonianDensity(bp, np.stack(vals))
    except DimensionError as exc:
        raise ValueError(str(exc)) from exc
    return SystemSpec(tuple(P), H, _decode_matrix(data["W_B"], "W_B"))


def system_to_dict(spec):
    a, b = spec.interval
    return {
        "n": spec.n,
        "N": spec.N,
        "interval": [a, b],
        "P": [_encode_matrix(p) for p in spec.P],
        "hamiltonian": {
            "breakpoints": [float(z) for z in spec.H.breakpoints],
            "values": [_encode_matrix(v) for v in spec.H.values],
        },
        "W_B": _encode_matrix(spec.W_B),
    }


def load_system(path):
    import json
    with open(path) as fh:
        return system_from_dict(json.load(fh))
