"""Batch command line: ``phstab {validate,generation,scan,classify} FILE``.

Input is a JSON system file (keys ``n``, ``N``, ``interval``, ``P``,
``hamiltonian``, ``W_B``) or a string-network file (keys ``rho``, ``T``,
``beta``, ...). The report is JSON (stdout unless ``--out-report``).

Exit status: 0 verdict reached, 1 unreadable or malformed input (no report
is written), 2 invalid system (report written), 3 inconclusive numerics,
4 output could not be written.
"""

import argparse
from dataclasses import dataclass
import json
import math
import os
import sys
import tempfile

import numpy as np

from .exceptions import ConvergenceError
from .generation import check_contraction_generator
from .spectral import (INCONCLUSIVE, TOL_INCONCLUSIVE, TOL_SING, classify,
                       search_imaginary_axis)
from .strings import (Irrational, build_string_network, eta, params_from_dict)
from .system import system_from_dict, validate_system

__all__ = ["RunConfig", "run", "main", "emit_scan_csv", "build_parser"]

SCHEMA_VERSION = 1
WORKERS_ENV = "PHSTAB_WORKERS"

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_IO = 0, 1, 2, 3, 4


class InputError(Exception):
    """Input file cannot be read or does not match a schema."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str
    mode: str = "auto"
    omega_max: float = 50.0
    grid_points: int = 200_001
    tol_sing: float = TOL_SING
    tol_inconclusive: float = TOL_INCONCLUSIVE
    out_report: str = None
    out_csv: str = None
    workers: int = 1

    def __post_init__(self):
        if self.command not in ("validate", "generation", "scan", "classify"):
            raise ValueError(f"unknown command {self.command!r}")
        if self.mode not in ("auto", "general", "strings"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not (math.isfinite(self.omega_max) and self.omega_max > 0):
            raise ValueError("omega_max must be positive")
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if not 0 < self.tol_sing < self.tol_inconclusive:
            raise ValueError("need 0 < tol_sing < tol_inconclusive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


# --- input ---------------------------------------------------------------

def _read_input(path, mode):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}:1:1: top level must be a JSON object")
    if mode == "auto":
        mode = "strings" if "rho" in data else "general"
    try:
        if mode == "strings":
            params = params_from_dict(data)
            return mode, params, build_string_network(params)
        return mode, None, system_from_dict(data)
    except (ValueError, KeyError, TypeError) as exc:
        detail = f"missing key {exc}" if isinstance(exc, KeyError) else str(exc)
        raise InputError(f"{path}: schema error: {detail}") from None


# --- encoding ------------------------------------------------------------

def _num(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _cvec(v):
    return [[_num(z.real), _num(z.imag)] for z in np.asarray(v, dtype=complex)]


def _cmat(M):
    return [_cvec(row) for row in np.asarray(M, dtype=complex)]


def _hit(h):
    return {"omega": _num(h.omega), "sigma_min": _num(h.sigma_min),
            "boundary_residual": _num(h.boundary_residual),
            "energy_residual": _num(h.energy_residual), "kernel": _cvec(h.kernel)}


def _generation(gen):
    return {"generates": gen.generates, "witness": _num(gen.witness),
            "marginal": gen.marginal, "tol": gen.tol,
            "test_matrix": _cmat(gen.test_matrix)}


def _scan_summary(search, grid_points):
    scan = search.scan
    w, s = scan.argmin
    return {"omega_range": [_num(v) for v in scan.omega_range],
            "grid_points": grid_points, "min_sigma": _num(s), "argmin_omega": _num(w),
            "sup_psi_estimate": _num(scan.sup_psi_estimate),
            "hits": [_hit(h) for h in search.hits],
            "inconclusive": [{"omega": _num(c.omega), "sigma_min": _num(c.sigma_min)}
                             for c in search.inconclusive]}


def _speed(c):
    if isinstance(c, Irrational):
        return {"irrational": _num(c.value), "independence_asserted": c.independence_asserted}
    return f"{c.numerator}/{c.denominator}"


def _strings(v):
    out = {"speeds": [_speed(c) for c in v.speeds], "ratio_classes": dict(v.ratio_classes),
           "asymptotic": v.asymptotic_status, "exponential": v.exponential_status,
           "exponential_method": v.exponential_method,
           "families": [{"pair": list(f.pair), "ratio": f"{f.ratio}",
                         "base_omega": _num(f.base_omega),
                         "omega": "odd multiples of base_omega"} for f in v.families],
           "notes": list(v.notes)}
    if v.period is not None:
        out["period"] = _num(v.period)
        out["eta_min"] = _num(v.eta_minimum.refined_min)
        out["eta_argmin"] = _num(v.eta_minimum.refined_argmin)
    return out


def _stability(rep):
    out = {"notes": list(rep.notes)}
    if rep.asymptotic is None:
        out["asymptotic"] = None
        out["exponential"] = None
        return out
    a, e = rep.asymptotic, rep.exponential
    out["asymptotic"] = {"status": a.status, "omega_max": _num(a.omega_max),
                         "hits": [_hit(h) for h in a.hits],
                         "inconclusive": [{"omega": _num(c.omega),
                                           "sigma_min": _num(c.sigma_min)}
                                          for c in a.inconclusive]}
    out["exponential"] = {"status": e.status, "inf_sigma_min": _num(e.inf_sigma_min),
                          "argmin_omega": _num(e.argmin_omega),
                          "window_minima": [[_num(w), _num(s)] for w, s in e.window_minima],
                          "decreasing_minima": e.decreasing_minima, "exact": e.exact}
    return out


# --- output --------------------------------------------------------------

def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".phstab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def scan_csv_text(scan, eta_values=None):
    """CSV text of a scan with 17 significant digits."""
    header = "omega,sigma_min,psi_norm" + (",eta" if eta_values is not None else "")
    cols = [scan.omegas, scan.sigma_mins, scan.psi_norms]
    if eta_values is not None:
        cols.append(np.asarray(eta_values))
    rows = ["%.17g" % cols[0][i] + "".join(",%.17g" % c[i] for c in cols[1:])
            for i in range(len(scan.omegas))]
    return "\n".join([header] + rows) + "\n"


def emit_scan_csv(scan, path, eta_values=None):
    """Write ``omega,sigma_min,psi_norm[,eta]`` rows atomically to `path`."""
    _atomic_write(path, scan_csv_text(scan, eta_values))


# --- driver --------------------------------------------------------------

def execute(config):
    """Run `config`; returns ``(exit_code, report_dict, csv_text)``.

    Raises :class:`InputError` for unreadable or malformed input.
    """
    mode, params, spec = _read_input(config.input_path, config.mode)
    report = {"schema": SCHEMA_VERSION, "command": config.command, "mode": mode,
              "config": {"omega_max": config.omega_max, "grid_points": config.grid_points,
                         "tol_sing": config.tol_sing,
                         "tol_inconclusive": config.tol_inconclusive}}
    violations = validate_system(spec)
    report["validation"] = {"valid": not violations,
                            "violations": [{"code": v.code, "message": v.message}
                                           for v in violations]}
    if violations:
        report["exit_code"] = EXIT_INVALID
        return EXIT_INVALID, report, None
    code, csv = EXIT_OK, None
    if config.command == "generation":
        report["generation"] = _generation(check_contraction_generator(spec))
    elif config.command == "scan":
        search = search_imaginary_axis(spec, config.omega_max, config.grid_points,
                                       config.tol_sing, config.tol_inconclusive,
                                       config.workers)
        report["scan"] = _scan_summary(search, config.grid_points)
        if search.inconclusive:
            code = EXIT_INCONCLUSIVE
        if config.out_csv:
            csv = _csv_for(search.scan, mode, params)
    elif config.command == "classify":
        network = None
        if params is not None:
            if params.beta > 0:
                network = params
            else:
                report["notes"] = ["beta <= 0: exact string-network verdict skipped"]
        try:
            rep = classify(spec, config.omega_max, config.grid_points, config.tol_sing,
                           config.tol_inconclusive, config.workers, network)
        except ConvergenceError as exc:
            report["stability"] = {"asymptotic": {"status": INCONCLUSIVE},
                                   "notes": [str(exc)]}
            report["exit_code"] = EXIT_INCONCLUSIVE
            return EXIT_INCONCLUSIVE, report, None
        report["generation"] = _generation(rep.generation)
        if rep.search is not None:
            report["scan"] = _scan_summary(rep.search, config.grid_points)
            if config.out_csv:
                csv = _csv_for(rep.search.scan, mode, params)
        report["stability"] = _stability(rep)
        if rep.strings is not None:
            report["strings"] = _strings(rep.strings)
        if rep.asymptotic is not None and rep.asymptotic.status == INCONCLUSIVE:
            code = EXIT_INCONCLUSIVE
    report["exit_code"] = code
    return code, report, csv


def _csv_for(scan, mode, params):
    if mode != "strings":
        return scan_csv_text(scan)
    values = eta(params.numeric_speeds(), scan.omegas, params.length)
    return scan_csv_text(scan, values)


def report_text(report):
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def run(config):
    """Execute `config` and write outputs; returns the exit status."""
    try:
        code, report, csv = execute(config)
    except InputError as exc:
        print(f"phstab: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        text = report_text(report)
        if config.out_report:
            _atomic_write(config.out_report, text)
        else:
            sys.stdout.write(text)
        if csv is not None:
            _atomic_write(config.out_csv, csv)
    except OSError as exc:
        print(f"phstab: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


class _Parser(argparse.ArgumentParser):
    # usage errors share the exit status of malformed input
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _default_workers():
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("input", help="JSON system or string-network file")
    common.add_argument("--mode", choices=("auto", "general", "strings"), default="auto")
    common.add_argument("--omega-max", type=float, default=50.0)
    common.add_argument("--grid-points", type=int, default=200_001)
    common.add_argument("--tol-sing", type=float, default=TOL_SING)
    common.add_argument("--tol-inconclusive", type=float, default=TOL_INCONCLUSIVE)
    common.add_argument("--out-report", help="report path (default: stdout)")
    common.add_argument("--out-csv", help="scan CSV path (scan and classify)")
    common.add_argument("--workers", type=int, default=None,
                        help=f"scan threads (default: ${WORKERS_ENV} or 1)")
    parser = _Parser(prog="phstab", description="Stability analysis of "
                     "port-Hamiltonian systems on an interval.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (("validate", "check the standing assumptions"),
                       ("generation", "contraction-semigroup test"),
                       ("scan", "sigma_min scan of the imaginary axis"),
                       ("classify", "full stability report")):
        sub.add_parser(name, parents=[common], help=text)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    workers = args.workers if args.workers is not None else _default_workers()
    try:
        config = RunConfig(args.command, args.input, args.mode, args.omega_max,
                           args.grid_points, args.tol_sing, args.tol_inconclusive,
                           args.out_report, args.out_csv, workers)
    except ValueError as exc:
        parser.error(str(exc))
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
