"""Imaginary-axis eigenvalues and stability verdicts.

``i omega`` is an eigenvalue exactly when the boundary test matrix

    Q(i omega) = W_B [Psi_{i omega}(b); I]

is singular. The scan samples ``sigma_min(Q(i omega))`` on a uniform grid
of ``[-Omega, Omega]``, refines candidate minima by golden-section search
and certifies eigenvalues below ``tol_sing``. Verdicts are therefore
statements about the window ``[-Omega, Omega]`` only.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from .fundsol import CompanionField, psi_at_b, psi_at_points, propagate
from .generation import GenerationVerdict, check_contraction_generator
from .numkernel import kernel_vector
from .system import build_Q, require_valid

__all__ = [
    "BoundaryTestMatrix", "EigenHit", "Candidate", "SpectralScan", "AxisSearch",
    "EigenpairCheck", "AsymptoticVerdict", "ExponentialVerdict",
    "StabilityReport", "boundary_test_matrix", "sigma_min_scan",
    "search_imaginary_axis", "find_imaginary_eigenvalues", "verify_eigenpair",
    "classify", "STABLE", "UNSTABLE", "INCONCLUSIVE", "NO_OBSTRUCTION",
    "OBSTRUCTED", "EXACT",
]

TOL_SING = 1e-10
TOL_INCONCLUSIVE = 1e-6
REFINE_WIDTH = 1e-12
CHUNK = 4096

STABLE = "stable_certified_up_to_Omega"
UNSTABLE = "unstable"
INCONCLUSIVE = "inconclusive"
NO_OBSTRUCTION = "no_obstruction_up_to_Omega"
OBSTRUCTED = "obstructed"
EXACT = "exact"

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundaryTestMatrix:
    lam: complex
    Q_of_lambda: np.ndarray


@dataclass(frozen=True)
class EigenHit:
    omega: float
    sigma_min: float
    kernel: np.ndarray
    boundary_residual: float
    energy_residual: float


@dataclass(frozen=True)
class Candidate:
    """A refined local minimum of ``sigma_min`` that is neither certified
    nor clearly away from zero."""
    omega: float
    sigma_min: float


@dataclass(frozen=True)
class SpectralScan:
    omegas: np.ndarray
    sigma_mins: np.ndarray
    psi_norms: np.ndarray
    omega_range: tuple
    sup_psi_estimate: float
    hits: tuple = ()

    @property
    def argmin(self):
        i = int(np.argmin(self.sigma_mins))
        return float(self.omegas[i]), float(self.sigma_mins[i])


@dataclass(frozen=True)
class AxisSearch:
    scan: SpectralScan
    hits: tuple
    inconclusive: tuple
    refined: tuple  # every refined minimum as (omega, sigma_min)


@dataclass(frozen=True)
class EigenpairCheck:
    boundary_residual: float
    energy_residual: float
    zetas: np.ndarray
    traces: np.ndarray        # v(zeta) = Psi(zeta) v_a, shape (K, nN)
    eigenfunction: np.ndarray  # x(zeta) = H(zeta)^-1 v_1(zeta), shape (K, n)


def _test_matrices(spec, Psi):
    d = spec.dim
    return spec.W_B[:, :d] @ Psi + spec.W_B[:, d:]


def boundary_test_matrix(spec, lam):
    """``Q(lam) = W_B [Psi_lam(b); I]``."""
    Psi = propagate(spec, lam).value_at_b
    return BoundaryTestMatrix(complex(lam), _test_matrices(spec, Psi))


def _sigma_chunk(spec, field, omegas):
    Psi = psi_at_b(spec, 1j * omegas, field)
    sig = np.linalg.svd(_test_matrices(spec, Psi), compute_uv=False)[:, -1]
    return sig, np.linalg.norm(Psi, ord=2, axis=(1, 2))


def _sigma_min(spec, field, omegas, workers=1):
    """sigma_min(Q(i omega)) and ||Psi(b)|| on a fixed chunk layout."""
    omegas = np.asarray(omegas, dtype=float)
    chunks = [omegas[i:i + CHUNK] for i in range(0, omegas.size, CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda w: _sigma_chunk(spec, field, w), chunks))
    else:
        parts = [_sigma_chunk(spec, field, w) for w in chunks]
    if not parts:
        return np.empty(0), np.empty(0)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def sigma_min_scan(spec, omega_max, grid_points, workers=1):
    """Sample ``sigma_min(Q(i omega))`` on ``linspace(-Omega, Omega, grid_points)``.

    ``omega_max = 0`` gives the single point ``omega = 0``. The recorded
    ``sup_psi_estimate`` is the largest ``||Psi_{i omega}(b)||_2`` seen.
    """
    require_valid(spec)
    if omega_max < 0:
        raise ValueError("omega_max must be non-negative")
    if grid_points < 2 and omega_max > 0:
        raise ValueError("grid_points must be at least 2")
    omegas = np.zeros(1) if omega_max == 0 else np.linspace(-omega_max, omega_max, grid_points)
    sig, norms = _sigma_min(spec, CompanionField(spec), omegas, workers)
    return SpectralScan(omegas, sig, norms, (-float(omega_max), float(omega_max)),
                        float(norms.max()))


def _candidates(s, tol_inconclusive):
    """Indices of grid minima that could hide a zero of sigma_min.

    A zero between nodes forces a V-shape whose depth at the nearest node
    is bounded by the jump to a neighbour; smooth minima well above
    ``tol_inconclusive`` are skipped.
    """
    if s.size == 1:
        return np.array([0])
    left = np.concatenate([[np.inf], s[:-1]])
    right = np.concatenate([s[1:], [np.inf]])
    is_min = (s <= left) & (s <= right)
    jump = np.maximum(np.where(np.isfinite(left), np.abs(s - left), 0),
                      np.where(np.isfinite(right), np.abs(right - s), 0))
    idx = np.flatnonzero(is_min & (s <= tol_inconclusive + 2 * jump))
    # one representative per plateau
    keep = np.ones(idx.size, dtype=bool)
    keep[1:] = np.diff(idx) > 1
    return idx[keep]


def _golden_batch(f, lo, hi, max_iter=200):
    """Vectorised golden-section minimisation on brackets ``[lo, hi]``.

    Returns the best abscissae and values seen per bracket.
    """
    lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
    floor = np.maximum(REFINE_WIDTH, 8 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)))
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    best_x = np.where(f1 <= f2, x1, x2)
    best_f = np.minimum(f1, f2)
    for _ in range(max_iter):
        active = np.flatnonzero(hi - lo > floor)
        if active.size == 0:
            break
        left = f1[active] < f2[active]
        a = active[left]
        hi[a], x2[a], f2[a] = x2[a], x1[a], f1[a]
        x1[a] = hi[a] - _INVPHI * (hi[a] - lo[a])
        r = active[~left]
        lo[r], x1[r], f1[r] = x1[r], x2[r], f2[r]
        x2[r] = lo[r] + _INVPHI * (hi[r] - lo[r])
        new_x = np.concatenate([x1[a], x2[r]])
        new_f = f(new_x) if new_x.size else new_x
        na = a.size
        f1[a], f2[r] = new_f[:na], new_f[na:]
        for sel, xs, fs in ((a, x1[a], f1[a]), (r, x2[r], f2[r])):
            better = fs < best_f[sel]
            best_x[sel[better]] = xs[better]
            best_f[sel[better]] = fs[better]
    return best_x, best_f


def search_imaginary_axis(spec, omega_max, grid_points, tol_sing=TOL_SING,
                          tol_inconclusive=TOL_INCONCLUSIVE, workers=1, scan=None):
    """Scan, refine and certify imaginary-axis eigenvalues.

    Candidate grid minima are refined by golden-section search to a bracket
    width of ``1e-12`` (or a few ulps of ``omega`` when that is larger).
    Refined minima below `tol_sing` become :class:`EigenHit` records;
    those in ``[tol_sing, tol_inconclusive)`` are reported as
    inconclusive candidates.
    """
    if not tol_sing < tol_inconclusive:
        raise ValueError("need tol_sing < tol_inconclusive")
    scan = sigma_min_scan(spec, omega_max, grid_points, workers) if scan is None else scan
    field = CompanionField(spec)
    om, s = scan.omegas, scan.sigma_mins
    idx = _candidates(s, tol_inconclusive)
    if om.size == 1:
        best_x, best_f = om.copy(), s.copy()
    else:
        lo = om[np.maximum(idx - 1, 0)]
        hi = om[np.minimum(idx + 1, om.size - 1)]
        best_x, best_f = _golden_batch(lambda w: _sigma_min(spec, field, w)[0], lo, hi)
        grid_better = s[idx] <= best_f
        best_x = np.where(grid_better, om[idx], best_x)
        best_f = np.where(grid_better, s[idx], best_f)

    hits, unsure = [], []
    for w, sv in sorted(zip(best_x.tolist(), best_f.tolist())):
        if sv <= tol_sing:
            if hits and abs(hits[-1].omega - w) < 1e-9:
                continue
            Qw = boundary_test_matrix(spec, 1j * w).Q_of_lambda
            v = kernel_vector(Qw, tol_sing)
            check = verify_eigenpair(spec, w, v, sample_points=())
            hits.append(EigenHit(w, sv, v, check.boundary_residual, check.energy_residual))
        elif sv < tol_inconclusive:
            unsure.append(Candidate(w, sv))
    refined = tuple(zip(best_x.tolist(), best_f.tolist()))
    scan = SpectralScan(scan.omegas, scan.sigma_mins, scan.psi_norms, scan.omega_range,
                        scan.sup_psi_estimate, tuple(hits))
    return AxisSearch(scan, tuple(hits), tuple(unsure), refined)


def find_imaginary_eigenvalues(spec, omega_max, grid_points, tol_sing=TOL_SING,
                               tol_inconclusive=TOL_INCONCLUSIVE, workers=1):
    """Certified eigenvalues ``i omega`` with ``|omega| <= omega_max``."""
    return list(search_imaginary_axis(spec, omega_max, grid_points, tol_sing,
                                      tol_inconclusive, workers).hits)


def _default_samples(spec, per_cell=8):
    bp = spec.H.breakpoints
    pts = [np.linspace(bp[j], bp[j + 1], per_cell + 1) for j in range(bp.size - 1)]
    return np.unique(np.concatenate(pts))


def verify_eigenpair(spec, omega, v_a, sample_points=None):
    """Residuals of a candidate eigenpair and the reconstructed eigenfunction.

    boundary_residual = ``||W_B [Psi(b) v_a; v_a]||``;
    energy_residual = ``|v_a* (Psi(b)* Q Psi(b) - Q) v_a|``. The
    eigenfunction ``x = H^-1 v_1`` is sampled at `sample_points` (default:
    9 points per cell).
    """
    v_a = np.asarray(v_a, dtype=complex)
    if abs(np.linalg.norm(v_a) - 1.0) > 1e-8:
        raise ValueError("v_a must have unit norm")
    lam = 1j * float(omega)
    Psi = propagate(spec, lam).value_at_b
    vb = Psi @ v_a
    d, n = spec.dim, spec.n
    boundary = float(np.linalg.norm(spec.W_B[:, :d] @ vb + spec.W_B[:, d:] @ v_a))
    Q = build_Q(spec)
    energy = float(abs(vb.conj() @ Q @ vb - v_a.conj() @ Q @ v_a))
    zetas = _default_samples(spec) if sample_points is None else np.asarray(sample_points, float)
    if zetas.size:
        traces = psi_at_points(spec, lam, zetas) @ v_a
        Hinv = np.linalg.inv(spec.H.at(zetas))
        x = np.einsum("kij,kj->ki", Hinv, traces[:, :n])
    else:
        traces = np.empty((0, d), dtype=complex)
        x = np.empty((0, n), dtype=complex)
    return EigenpairCheck(boundary, energy, zetas, traces, x)


@dataclass(frozen=True)
class AsymptoticVerdict:
    status: str
    omega_max: float
    hits: tuple = ()
    inconclusive: tuple = ()


@dataclass(frozen=True)
class ExponentialVerdict:
    status: str
    inf_sigma_min: float = None
    argmin_omega: float = None
    window_minima: tuple = ()
    decreasing_minima: bool = False
    exact: bool = None
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class StabilityReport:
    generation: GenerationVerdict
    asymptotic: AsymptoticVerdict = None
    exponential: ExponentialVerdict = None
    notes: tuple = ()
    search: AxisSearch = None
    strings: object = None


def _window_minima(scan, refined, omega_max):
    fractions = (0.125, 0.25, 0.5, 1.0)
    pts = np.concatenate([scan.omegas, [w for w, _ in refined]])
    vals = np.concatenate([scan.sigma_mins, [s for _, s in refined]])
    out = []
    for f in fractions:
        mask = np.abs(pts) <= f * omega_max + 1e-12
        out.append((f * omega_max, float(vals[mask].min())))
    return tuple(out)


def classify(spec, omega_max=50.0, grid_points=200_001, tol_sing=TOL_SING,
             tol_inconclusive=TOL_INCONCLUSIVE, workers=1, network=None,
             generation_tol=1e-9):
    """Generation, asymptotic and exponential verdicts for one system.

    Parameters
    ----------
    network : StringNetworkParams, optional
        When the system is the constant-coefficient three-string network,
        passing its parameters adds the exact verdicts of
        :func:`phstab.strings.classify_constant_strings`; the exponential
        verdict is then the exact one.

    Raises
    ------
    InvalidSystemError
        If the system data violate a standing assumption.
    """
    require_valid(spec)
    gen = check_contraction_generator(spec, generation_tol)
    if not gen.generates:
        return StabilityReport(gen, notes=(
            "generation test failed: no contraction semigroup, stability not assessed",))

    notes = []
    search = search_imaginary_axis(spec, omega_max, grid_points, tol_sing,
                                   tol_inconclusive, workers)
    if search.hits:
        status = UNSTABLE
    elif search.inconclusive:
        status = INCONCLUSIVE
    else:
        status = STABLE
    asym = AsymptoticVerdict(status, float(omega_max), search.hits, search.inconclusive)

    scan = search.scan
    refined = [(w, s) for w, s in search.refined]
    all_w = np.concatenate([scan.omegas, [w for w, _ in refined]])
    all_s = np.concatenate([scan.sigma_mins, [s for _, s in refined]])
    k = int(np.argmin(all_s))
    windows = _window_minima(scan, refined, omega_max) if omega_max > 0 else ()
    decreasing = bool(len(windows) > 1 and all(
        b[1] < a[1] for a, b in zip(windows, windows[1:])))
    if gen.marginal:
        notes.append("generation witness is marginally negative (within tolerance)")
    if spec.N != 1:
        notes.append("exponential-stability characterisation assumes N = 1; "
                     "the sigma_min infimum is heuristic here")
    notes.append(f"sup ||Psi(b)|| on the scan: {scan.sup_psi_estimate:.6g} "
                 "(boundedness over all omega is assumed, not verified)")

    exact = None
    if network is not None:
        from .strings import classify_constant_strings
        exact = classify_constant_strings(network.speeds(), network.length)
        expo = ExponentialVerdict(
            EXACT, float(all_s[k]), float(all_w[k]), windows, decreasing,
            exact.exponentially_stable, {"method": exact.exponential_method})
        if exact.asymptotically_stable is not None and (
                exact.asymptotically_stable != (status != UNSTABLE)):
            notes.append("exact and numerical asymptotic verdicts disagree on this window")
    elif search.hits:
        expo = ExponentialVerdict(
            OBSTRUCTED, float(all_s[k]), float(all_w[k]), windows, decreasing,
            None, {"reason": "imaginary-axis eigenvalue"})
    else:
        expo = ExponentialVerdict(
            NO_OBSTRUCTION, float(all_s[k]), float(all_w[k]), windows, decreasing)
        notes.append("exponential verdict is grid evidence on [-Omega, Omega] only")
    return StabilityReport(gen, asym, expo, tuple(notes), search, exact)
