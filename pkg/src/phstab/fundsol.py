"""Fundamental solutions of ``v' = P_lambda(zeta) v`` with ``v(a) = I``.

``P_lambda`` is the companion matrix of the eigenvalue o.d.e.: identity
blocks on the superdiagonal and bottom block row

    [lam P_N^-1 H^-1 - P_N^-1 P_0,  -P_N^-1 P_1, ..., -P_N^-1 P_{N-1}].

For piecewise-constant ``H`` the production path multiplies exact cell
exponentials. :func:`picard_fundamental` is an independent oracle that
iterates the integral equation ``u = I + int K u`` on a trapezoidal grid.
"""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import ConvergenceError, DimensionError
from .numkernel import mat_exp
from .system import require_valid

__all__ = [
    "CompanionField", "FundamentalSolution", "build_companion", "propagate",
    "transfer_matrix", "psi_at_b", "psi_at_points", "picard_solve",
    "picard_fundamental", "continuity_gap",
]

# Cells are split when |lam| max||H^-1|| (b - a) exceeds this ...
SUBDIVIDE_TRIGGER = 1e3
# ... into pieces whose exponent has 1-norm at most this.
SUBDIVIDE_NORM = 20.0
_EPS = np.finfo(float).eps


class CompanionField:
    """``zeta -> P_lambda(zeta)`` for one system, affine in ``lam``.

    ``P_lambda`` on cell ``j`` equals ``base + lam * coupling[j]``.
    """

    def __init__(self, spec, lam=0.0):
        n, N = spec.n, spec.N
        d = n * N
        PNinv = np.linalg.inv(spec.P[-1])
        base = np.zeros((d, d), dtype=complex)
        for i in range(N - 1):
            base[i * n:(i + 1) * n, (i + 1) * n:(i + 2) * n] = np.eye(n)
        for k in range(N):
            base[(N - 1) * n:, k * n:(k + 1) * n] = -PNinv @ spec.P[k]
        coupling = np.zeros((spec.H.cells, d, d), dtype=complex)
        Hinv = np.linalg.inv(spec.H.values)
        coupling[:, (N - 1) * n:, :n] = PNinv[None] @ Hinv
        self.spec = spec
        self.lam = complex(lam)
        self.base = base
        self.coupling = coupling
        self.breakpoints = spec.H.breakpoints
        self.hinv_bound = float(max(np.linalg.norm(h, 2) for h in Hinv))

    def at_lambda(self, lam):
        other = object.__new__(CompanionField)
        other.__dict__.update(self.__dict__)
        other.lam = complex(lam)
        return other

    def cell_matrix(self, j, lam=None):
        lam = self.lam if lam is None else lam
        return self.base + lam * self.coupling[j]

    def __call__(self, zeta):
        return self.cell_matrix(int(self.spec.H.cell_index(zeta)))

    def needs_subdivision(self, lam):
        a, b = self.spec.interval
        return abs(lam) * self.hinv_bound * (b - a) > SUBDIVIDE_TRIGGER


def build_companion(spec, lam, zeta):
    """``P_lambda(zeta)`` as a dense ``nN x nN`` matrix."""
    return CompanionField(spec, lam)(zeta)


@dataclass(frozen=True)
class FundamentalSolution:
    lam: complex
    value_at_b: np.ndarray
    samples: tuple = None
    method: str = "piecewise_exp"
    est_error: float = 0.0
    iterations: int = None


def _expm_stack(A, split):
    """exp of a stack; entries flagged in `split` are subdivided."""
    E = np.empty_like(A)
    plain = ~split
    if plain.any():
        E[plain] = mat_exp(A[plain])
    if split.any():
        idx = np.flatnonzero(split)
        norms = np.abs(A[idx]).sum(axis=-2).max(axis=-1)
        pieces = np.maximum(1, np.ceil(norms / SUBDIVIDE_NORM)).astype(int)
        for m in np.unique(pieces):
            sel = idx[pieces == m]
            E[sel] = np.linalg.matrix_power(mat_exp(A[sel] / m), int(m))
    return E


def psi_at_b(spec, lams, field=None):
    """``Psi_lam(b)`` for every ``lam`` in `lams`; shape ``(K, nN, nN)``.

    Each result depends only on its own ``lam`` (no batch-wide scaling), so
    splitting `lams` into chunks reproduces the same bits.
    """
    field = CompanionField(spec) if field is None else field
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    d = field.base.shape[0]
    a, b = spec.interval
    split = np.abs(lams) * field.hinv_bound * (b - a) > SUBDIVIDE_TRIGGER
    Psi = np.broadcast_to(np.eye(d, dtype=complex), (lams.size, d, d)).copy()
    for j, w in enumerate(spec.H.widths):
        A = (field.base[None] + lams[:, None, None] * field.coupling[j][None]) * w
        Psi = _expm_stack(A, split) @ Psi
    return Psi


def _exp_segment(field, j, lam, length):
    A = field.cell_matrix(j, lam) * length
    split = np.array([field.needs_subdivision(lam)])
    return _expm_stack(A[None], split)[0], float(np.abs(A).sum(axis=0).max())


def transfer_matrix(spec, lam, start, stop, field=None):
    """Solution operator from `start` to `stop` (``start <= stop``)."""
    field = CompanionField(spec) if field is None else field
    if stop < start:
        raise ValueError("stop must not precede start")
    d = field.base.shape[0]
    T = np.eye(d, dtype=complex)
    bp = spec.H.breakpoints
    z = start
    while z < stop:
        j = int(spec.H.cell_index(z))
        end = min(stop, bp[j + 1]) if j + 1 < bp.size else stop
        if end <= z:
            break
        E, _ = _exp_segment(field, j, lam, end - z)
        T = E @ T
        z = end
    return T


def psi_at_points(spec, lam, zetas, field=None):
    """``Psi_lam(zeta)`` at sorted points in ``[a, b]``; shape (K, nN, nN)."""
    field = CompanionField(spec) if field is None else field
    zetas = np.asarray(zetas, dtype=float)
    a, b = spec.interval
    if zetas.size and (np.any(np.diff(zetas) < 0) or zetas[0] < a or zetas[-1] > b):
        raise ValueError("sample points must be sorted and inside [a, b]")
    out = np.empty((zetas.size, field.base.shape[0], field.base.shape[0]), dtype=complex)
    current, z_prev = np.eye(field.base.shape[0], dtype=complex), a
    for i, z in enumerate(zetas):
        current = transfer_matrix(spec, lam, z_prev, z, field) @ current
        z_prev = z
        out[i] = current
    return out


def propagate(spec, lam, samples=False, sample_points=None):
    """Fundamental solution by ordered products of cell exponentials.

    Parameters
    ----------
    spec : SystemSpec
    lam : complex
    samples : bool
        Record ``Psi`` at every cell boundary (including ``a`` and ``b``).
    sample_points : array_like, optional
        Sorted points at which to record ``Psi`` instead.

    Returns
    -------
    FundamentalSolution
        ``est_error`` is a rounding-level estimate,
        ``10 eps sum_j max(1, ||A_j||_1) ||Psi(b)||``.
    """
    require_valid(spec)
    field = CompanionField(spec, lam)
    d = field.base.shape[0]
    Psi = np.eye(d, dtype=complex)
    arg_sum = 0.0
    for j, w in enumerate(spec.H.widths):
        E, norm = _exp_segment(field, j, field.lam, w)
        Psi = E @ Psi
        arg_sum += max(1.0, norm)
    recorded = None
    if sample_points is not None:
        pts = np.asarray(sample_points, dtype=float)
        recorded = tuple(zip(pts.tolist(), psi_at_points(spec, field.lam, pts, field)))
    elif samples:
        pts = spec.H.breakpoints
        recorded = tuple(zip(pts.tolist(), psi_at_points(spec, field.lam, pts, field)))
    est = 10 * _EPS * arg_sum * max(1.0, np.linalg.norm(Psi, 2))
    return FundamentalSolution(field.lam, Psi, recorded, "piecewise_exp", float(est))


def _refining_grid(breakpoints, grid_size):
    bp = np.asarray(breakpoints, dtype=float)
    widths = np.diff(bp)
    counts = np.maximum(1, np.rint(grid_size * widths / widths.sum()).astype(int))
    pieces = [np.linspace(bp[j], bp[j + 1], counts[j] + 1)[:-1] for j in range(widths.size)]
    return np.concatenate(pieces + [bp[-1:]])


def picard_solve(kernel, grid, u0=None, max_iter=500, tol=1e-12):
    """Fixed point of ``(Phi u)(x) = u0 + int_a^x K(s) u(s) ds``.

    Parameters
    ----------
    kernel : callable or ndarray
        ``kernel(mid)`` returns the ``(K, d, d)`` values of ``K`` at the
        midpoints of the grid cells (``K`` is treated as constant on each
        cell), or the array of those values directly.
    grid : array_like, shape (K+1,)
        Increasing nodes; should contain every discontinuity of ``K``.
    u0 : ndarray, optional
        Initial matrix (default identity), columns iterated together.
    tol : float
        Stop when the sup-distance of successive iterates, relative to
        ``max(1, sup |u|)``, drops below `tol`.

    Returns
    -------
    values : ndarray, shape (K+1, d, d)
    iterations : int
    residual : float

    Raises
    ------
    ConvergenceError
        If `max_iter` is reached first.
    """
    grid = np.asarray(grid, dtype=float)
    h = np.diff(grid)
    if h.size == 0 or np.any(h <= 0):
        raise DimensionError("grid needs at least two increasing nodes")
    mid = 0.5 * (grid[:-1] + grid[1:])
    Kmid = np.asarray(kernel(mid) if callable(kernel) else kernel, dtype=complex)
    if Kmid.shape[0] != h.size:
        raise DimensionError("kernel must give one matrix per grid cell")
    d = Kmid.shape[-1]
    u0 = np.eye(d, dtype=complex) if u0 is None else np.asarray(u0, dtype=complex)
    U = np.broadcast_to(u0, (grid.size,) + u0.shape).copy()
    Kh = Kmid * h[:, None, None]
    residual = math.inf
    for it in range(1, max_iter + 1):
        incr = Kh @ (0.5 * (U[:-1] + U[1:]))
        new = np.empty_like(U)
        new[0] = u0
        new[1:] = u0 + np.cumsum(incr, axis=0)
        residual = float(np.max(np.abs(new - U)) / max(1.0, np.max(np.abs(new))))
        U = new
        if residual < tol:
            return U, it, residual
    raise ConvergenceError(
        f"Picard iteration did not reach tol={tol:g} in {max_iter} steps "
        f"(last residual {residual:.3g})", iterations=max_iter, residual=residual)


def picard_fundamental(spec, lam, grid_size=10_000, max_iter=500, tol=1e-12,
                       extrapolate=False):
    """Oracle fundamental solution from Picard iteration.

    The grid refines the breakpoints of ``H`` with about `grid_size`
    cells in total. The discrete fixed point is the implicit trapezoidal
    rule, whose error expands in even powers of the cell width; with
    ``extrapolate=True`` the grid is also bisected and the two results are
    combined as ``(4 U_fine - U_coarse) / 3`` (fourth order).

    ``est_error`` is the final successive-iterate distance; the
    discretisation error is not included.
    """
    require_valid(spec)
    field = CompanionField(spec, lam)
    grid = _refining_grid(spec.H.breakpoints, grid_size)

    def solve(g):
        mid = 0.5 * (g[:-1] + g[1:])
        Kmid = field.base[None] + field.lam * field.coupling[spec.H.cell_index(mid)]
        return picard_solve(Kmid, g, max_iter=max_iter, tol=tol)

    U, its, res = solve(grid)
    if extrapolate:
        fine = np.empty(2 * grid.size - 1)
        fine[::2] = grid
        fine[1::2] = 0.5 * (grid[:-1] + grid[1:])
        Uf, its_f, res_f = solve(fine)
        U = (4 * Uf[::2] - U) / 3
        its, res = its + its_f, max(res, res_f)
    bp_idx = np.searchsorted(grid, spec.H.breakpoints)
    samples = tuple((float(grid[i]), U[i]) for i in bp_idx)
    return FundamentalSolution(field.lam, U[-1], samples, "picard", res, its)


def continuity_gap(spec_a, spec_b, lam, lam_b=None, sample_points=None):
    """``sup_zeta ||Psi^A_lam(zeta) - Psi^B_lam_b(zeta)||_2`` on sample points.

    By default the samples are all breakpoints of both systems plus 129
    uniformly spaced points. `lam_b` defaults to `lam`.
    """
    require_valid(spec_a)
    require_valid(spec_b)
    if spec_a.dim != spec_b.dim or spec_a.n != spec_b.n:
        raise DimensionError("systems have different dimensions")
    if not np.allclose(spec_a.interval, spec_b.interval, rtol=0, atol=1e-12):
        raise DimensionError("systems live on different intervals")
    lam_b = lam if lam_b is None else lam_b
    if sample_points is None:
        a, b = spec_a.interval
        sample_points = np.unique(np.concatenate([
            spec_a.H.breakpoints, spec_b.H.breakpoints, np.linspace(a, b, 129)]))
    A = psi_at_points(spec_a, lam, sample_points)
    B = psi_at_points(spec_b, lam_b, sample_points)
    return float(np.max(np.linalg.norm(A - B, ord=2, axis=(1, 2))))
