"""Command-line front end.

All couplings and momenta are given in units of ``sqrt(omega)``, the packet
width ``--delta`` in units of ``omega`` and times as ``omega t``.  ``--omega``
only sets the physical scale.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .channels import ScatteringParams, sideband_indices
from .errors import FloquetError, OutOfBandError
from .resonance import find_pole, leading_pole, ztp_corrected, ztp_driven_only, ztp_leading
from .scatter import (
    DEFAULT_N_MAX,
    _flux_residual,
    _probabilities,
    convergence_history,
    converged_n_max,
    solve_batch,
)
from .wavepacket import WavePacket, fit_decay, overlap_trace

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
FLUX_LIMIT = 1e-8


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved for numerical failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_output(text: str, path):
    """Write to ``path`` atomically, or to stdout when ``path`` is None."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows, trailer=()) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    for line in trailer:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def _json(inputs, results, diagnostics) -> str:
    return json.dumps({"inputs": inputs, "results": results, "diagnostics": diagnostics}, indent=2) + "\n"


def _couplings(args):
    if not args.omega > 0:
        raise InputError("--omega must be positive")
    if args.g1 < 0:
        raise InputError("--g1 must be non-negative")
    s = math.sqrt(args.omega)
    return args.g0 * s, args.g1 * s, args.omega


# ---------------------------------------------------------------- scan


def scan_table(g0, g1, omega, p, n_max, jobs=1):
    """Rows for a reflection scan, evaluated in chunks and reassembled in ``p`` order."""
    p = np.asarray(p, dtype=float)
    chunks = np.array_split(p, max(1, min(jobs, p.size)))

    def work(chunk):
        C, p_n = solve_batch(g0, g1, omega, chunk, n_max)
        open_mask = p_n.imag == 0
        B, refl, trans = _probabilities(C, p_n, open_mask, chunk)
        resid = _flux_residual(C, p_n, open_mask, chunk) / chunk
        return np.abs(B[:, n_max]) ** 2, refl, trans, resid

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    b0 = np.concatenate([x[0] for x in parts])
    refl = np.concatenate([x[1] for x in parts])
    trans = np.concatenate([x[2] for x in parts])
    resid = np.concatenate([x[3] for x in parts])
    return b0, refl, trans, resid


def cmd_scan(args) -> int:
    g0, g1, omega = _couplings(args)
    if not 0 < args.p_min < args.p_max:
        raise InputError("need 0 < --p-min < --p-max")
    if args.steps < 2:
        raise InputError("--steps must be at least 2")
    if args.nmax < 1:
        raise InputError("--nmax must be at least 1")
    s = math.sqrt(omega)
    ratio = np.linspace(args.p_min, args.p_max, args.steps)
    p = ratio * s
    n_max = args.nmax
    if args.tol is not None:
        if not args.tol > 0:
            raise InputError("--tol must be positive")
        n_max = converged_n_max(g0, g1, omega, p, args.tol, n_start=args.nmax)
    b0, refl, trans, resid = scan_table(g0, g1, omega, p, n_max, args.jobs)

    ns = sideband_indices(n_max)
    header = (
        ["p_over_sqrt_omega", "B0_sq"]
        + [f"refl_{n}" for n in ns]
        + [f"trans_{n}" for n in ns]
        + ["flux_residual"]
    )
    worst = float(np.max(np.abs(resid)))
    if args.format == "csv":
        rows = (
            [ratio[i], b0[i], *refl[i], *trans[i], resid[i]] for i in range(ratio.size)
        )
        text = _csv(header, rows)
    else:
        inputs = _inputs(args, n_max=n_max)
        results = {
            "columns": header,
            "rows": [[float(ratio[i]), float(b0[i]), *map(float, refl[i]), *map(float, trans[i]), float(resid[i])]
                     for i in range(ratio.size)],
        }
        text = _json(inputs, results, {"max_flux_residual": worst, "n_max": n_max})
    _write_output(text, args.out)
    if worst > FLUX_LIMIT:
        print(f"error: flux residual {worst:.3e} exceeds {FLUX_LIMIT:g}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------- resonance


def resonance_report(g0, g1, omega, n_max=DEFAULT_N_MAX) -> dict:
    """Analytic predictors and the nearest pole of ``det M``, in units of ``omega``."""
    out = {}
    pole_guess = None
    if g0 < 0:
        lead = ztp_leading(g0, omega)
        out["ztp_leading"] = {"p_over_sqrt_omega": lead.p_over_sqrt_omega, "bound_state_energy": lead.bound_state_energy / omega}
        if g1 > 0:
            corr = ztp_corrected(g0, g1, omega)
            out["ztp_corrected"] = {"p_over_sqrt_omega": corr.p_over_sqrt_omega}
            pole_guess = leading_pole(g0, g1, omega)
    elif g0 == 0:
        if not g1 > 0:
            raise InputError("g0 = 0 and g1 = 0: the potential vanishes")
        drv = ztp_driven_only(g1, omega)
        out["ztp_driven_only"] = {"p_over_sqrt_omega": drv.p_over_sqrt_omega}
        # the driven-only line is broad; start slightly below the real axis
        pole_guess = complex(drv.p_squared_over_omega * omega, -0.01 * omega)
    else:
        raise OutOfBandError("no zero-transmission predictor for g0 > 0 (no bound state)")

    if pole_guess is not None:
        pole = find_pole(g0, g1, omega, n_max=n_max, guess=pole_guess)
        out["pole"] = {
            "p_squared_re": pole.p_squared.real / omega,
            "p_squared_im": pole.p_squared.imag / omega,
            "gamma": pole.gamma / omega,
            "residual": pole.residual,
            "iterations": pole.iterations,
        }
        if g0 < 0:
            out["pole"]["gamma_leading"] = g1**2 * abs(g0) / (8 * math.sqrt(omega)) / omega
    return out


def cmd_resonance(args) -> int:
    g0, g1, omega = _couplings(args)
    report = resonance_report(g0, g1, omega, args.nmax)
    if args.format == "json":
        _write_output(_json(_inputs(args), report, {}), args.out)
        return EXIT_OK
    lines = []
    for key in ("ztp_leading", "ztp_corrected", "ztp_driven_only"):
        if key in report:
            lines.append(f"{key:16s} p/sqrt(omega) = {report[key]['p_over_sqrt_omega']:.5f}")
    if "pole" in report:
        pl = report["pole"]
        lines.append(
            f"{'pole':16s} p^2/omega = {pl['p_squared_re']:.6f} {pl['p_squared_im']:+.6f}i"
        )
        lines.append(f"{'gamma':16s} Gamma/omega = {pl['gamma']:.6f}")
    _write_output("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ------------------------------------------------------------ overlap


def cmd_overlap(args) -> int:
    g0, g1, omega = _couplings(args)
    if not g0 < 0:
        raise InputError("overlap needs --g0 < 0 (a static bound state)")
    if args.p0 is None or args.delta is None:
        raise InputError("overlap needs --p0 and --delta")
    if not args.t_max > 0 or args.t_steps < 2:
        raise InputError("need --t-max > 0 and --t-steps >= 2")
    s = math.sqrt(omega)
    try:
        packet = WavePacket(p0=args.p0 * s, delta=args.delta * omega, omega=omega)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    omega_t = np.linspace(0.0, args.t_max, args.t_steps)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        series = overlap_trace(g0, g1, omega, packet, omega_t / omega)
        fit = fit_decay(series) if args.fit else None
    notes = [str(w.message) for w in caught]
    for note in notes:
        print(f"warning: {note}", file=sys.stderr)

    diagnostics = {"n_max": series.n_max, "nodes": series.nodes, "quadrature_change": series.quadrature_error, "warnings": notes}
    fit_info = None
    if fit is not None:
        fit_info = {
            "gamma_over_omega": fit.gamma / omega,
            "gamma_over_g1sq_g0": fit.gamma / (g1**2 * abs(g0) / s) if g1 > 0 else None,
            "window_omega_t": [fit.window[0] * omega, fit.window[1] * omega],
            "r_squared": fit.r_squared,
        }
    if args.format == "csv":
        trailer = []
        if fit_info is not None:
            trailer = [f"{k}={_fmt(v) if not isinstance(v, list) else ' '.join(map(_fmt, v))}" for k, v in fit_info.items()]
        text = _csv(["omega_t", "F_sq"], zip(omega_t, series.values), trailer)
    else:
        results = {"omega_t": omega_t.tolist(), "F_sq": series.values.tolist()}
        if fit_info is not None:
            results["fit"] = fit_info
        text = _json(_inputs(args), results, diagnostics)
    _write_output(text, args.out)
    return EXIT_OK


# ----------------------------------------------------------- converge


def cmd_converge(args) -> int:
    g0, g1, omega = _couplings(args)
    if args.p is None:
        raise InputError("converge needs --p")
    if not args.tol > 0:
        raise InputError("--tol must be positive")
    try:
        params = ScatteringParams(g0=g0, g1=g1, omega=omega, p=args.p * math.sqrt(omega), n_max=args.nmax)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows = [(n, amps.B0_sq, 0.0 if ch is None else ch) for n, amps, ch in convergence_history(params, args.tol)]
    if args.format == "csv":
        text = _csv(["n_max", "B0_sq", "change"], rows)
    else:
        results = {
            "levels": [{"n_max": n, "B0_sq": b, "change": c} for n, b, c in rows],
            "converged_n_max": rows[-1][0],
            "B0_sq": rows[-1][1],
        }
        text = _json(_inputs(args), results, {"final_change": rows[-1][2]})
    _write_output(text, args.out)
    return EXIT_OK


# --------------------------------------------------------------- main


def _inputs(args, **extra) -> dict:
    skip = {"func", "out", "format", "jobs"}
    d = {k: v for k, v in vars(args).items() if k not in skip}
    d.update(extra)
    return d


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="floquet-delta",
        description="Scattering off a harmonically driven delta potential (dimensionless units).",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, fmt_default="csv"):
        p.add_argument("--g0", type=float, required=True, help="static coupling g0/sqrt(omega)")
        p.add_argument("--g1", type=float, required=True, help="drive coupling g1/sqrt(omega)")
        p.add_argument("--omega", type=float, default=1.0, help="drive frequency (sets the scale)")
        p.add_argument("--format", choices=["csv", "json"], default=fmt_default)
        p.add_argument("--out", default=None, help="output path (default: stdout)")

    p = sub.add_parser("scan", help="reflection |B_0|^2 over a momentum grid")
    common(p)
    p.add_argument("--p-min", type=float, required=True)
    p.add_argument("--p-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--nmax", type=int, default=DEFAULT_N_MAX)
    p.add_argument("--tol", type=float, default=None, help="auto-select n_max to this |B_0|^2 tolerance")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("resonance", help="zero-transmission predictors and det M pole")
    common(p, fmt_default=None)
    p.add_argument("--nmax", type=int, default=DEFAULT_N_MAX)
    p.set_defaults(func=cmd_resonance)

    p = sub.add_parser("overlap", help="bound-state overlap |F(t)|^2 of a wave packet")
    common(p)
    p.add_argument("--p0", type=float, required=True, help="packet centre p0/sqrt(omega)")
    p.add_argument("--delta", type=float, required=True, help="packet width Delta/omega")
    p.add_argument("--t-max", type=float, default=600.0, help="largest omega t")
    p.add_argument("--t-steps", type=int, default=400)
    p.add_argument("--fit", action="store_true", help="fit an exponential decay after the peak")
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("converge", help="|B_0|^2 under n_max doubling")
    common(p)
    p.add_argument("--p", type=float, required=True, help="incoming momentum p/sqrt(omega)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--nmax", type=int, default=4, help="starting truncation")
    p.set_defaults(func=cmd_converge)
    return parser


def _fail(code, kind, message, as_json):
    if as_json:
        print(json.dumps({"error": {"type": kind, "message": message}}), file=sys.stderr)
    else:
        print(f"error ({kind}): {message}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    as_json = getattr(args, "format", None) == "json"
    if getattr(args, "jobs", 1) < 1:
        return _fail(EXIT_INPUT, "InputError", "--jobs must be at least 1", as_json)
    try:
        return args.func(args)
    except OSError as exc:
        return _fail(EXIT_IO, type(exc).__name__, str(exc), as_json)
    except FloquetError as exc:
        if isinstance(exc, OutOfBandError):
            return _fail(EXIT_INPUT, type(exc).__name__, str(exc), as_json)
        return _fail(EXIT_NUMERIC, type(exc).__name__, str(exc), as_json)
    except ValueError as exc:
        return _fail(EXIT_INPUT, type(exc).__name__, str(exc), as_json)


if __name__ == "__main__":
    sys.exit(main())
