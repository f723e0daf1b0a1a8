"""Command-line entry point: ``isorabi {spectrum,oracle,tau,monodromy,validate}``.

Numbers are written as 17-significant-digit decimal strings, complex numbers
as {"re", "im"} objects.  Exit status: 0 success, 1 failed validation or
module error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from .blocks import BlockTruncation, ResonanceError, ThetaTriple
from .fuchsia import (FlowError, PathError, connection_offdiag, monodromy_pair,
                      system_from_rabi)
from .oracle import FockTruncation, eigenvalues
from .rabi import RabiParams, SolverOptions, spectrum
from .tau import TauDomainError, TauSeries, TauZeroError, dlog_tau_fd
from .validate import FAMILIES, Tolerances, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SPECTRUM_CSV = ["n", "sigma", "E", "s_re", "s_im", "residual", "oracle_E", "abs_err", "converged"]


def num(x) -> str | dict | None:
    """17 significant digits; complex -> {re, im}; None stays None."""
    if x is None:
        return None
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": num(x.real), "im": num(x.imag)}
    return f"{float(x):.17g}"


def matrix(M) -> list:
    return [[num(complex(v)) for v in row] for row in np.asarray(M)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _complex(text):
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="isorabi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--format", choices=("json", "csv"), default="json")
    out.add_argument("--out", default="-", help="output path (default stdout)")

    trunc = argparse.ArgumentParser(add_help=False)
    trunc.add_argument("--N", type=_nonneg_int, default=4, help="n-window of the series")
    trunc.add_argument("--L", type=_nonneg_int, default=10, help="block truncation level")

    sp = sub.add_parser("spectrum", parents=[out, trunc], help="isomonodromy spectrum")
    sp.add_argument("--g", type=_positive(float), required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--levels", type=_positive(int), default=4)
    sp.add_argument("--with-oracle", action="store_true")
    sp.add_argument("--nmax", type=_positive(int), default=80)

    op = sub.add_parser("oracle", parents=[out], help="Fock-space diagonalization")
    op.add_argument("--g", type=float, required=True)
    op.add_argument("--delta", type=float, required=True)
    op.add_argument("--levels", type=_positive(int), default=8)
    op.add_argument("--nmax", type=_positive(int), default=80)

    tp = sub.add_parser("tau", parents=[out, trunc],
                        help="tau~ and log-derivatives; theta and sigma in series variables")
    for name in ("--theta0", "--thetat"):
        tp.add_argument(name, type=_complex, required=True)
    tp.add_argument("--thetainf", type=_complex, default=0j)
    tp.add_argument("--sigma", type=_complex, required=True)
    tp.add_argument("--s", type=_complex, required=True)
    tp.add_argument("--t", type=_complex, required=True)

    mp = sub.add_parser("monodromy", parents=[out], help="monodromy of the Rabi linear system")
    mp.add_argument("--g", type=_positive(float), required=True)
    mp.add_argument("--delta", type=float, required=True)
    mp.add_argument("--E", type=float, required=True)

    vp = sub.add_parser("validate", parents=[out], help="run the cross-check battery")
    vp.add_argument("--L", type=_nonneg_int, default=10, help="block truncation level")
    vp.add_argument("--only", action="append", choices=FAMILIES,
                    help="restrict to a family (repeatable)")
    vp.add_argument("--g", type=_positive(float), action="append",
                    help="grid coupling (repeatable; default desk grid)")
    vp.add_argument("--delta", type=float, action="append")
    vp.add_argument("--levels", type=_positive(int), default=4)
    vp.add_argument("--sigma-offset", type=float, default=0.0,
                    help="perturb sigma in the monodromy check (sensitivity test)")
    return p


def cmd_spectrum(a):
    res = spectrum(a.g, a.delta, a.levels, BlockTruncation(a.L), _solver_opts(a))
    ev = eigenvalues(a.g, a.delta, FockTruncation(a.nmax)) if a.with_oracle else None
    rows = []
    for r in res:
        oE = err = None
        if ev is not None and r.converged:
            oE = float(ev[np.argmin(np.abs(ev - r.E))])
            err = abs(oE - r.E)
        rows.append({"n": r.n, "sigma": r.sigma, "E": r.E, "s": r.s,
                     "residual": r.residual_norm, "oracle_E": oE, "abs_err": err,
                     "converged": r.converged, "message": r.message})
    status = EXIT_OK
    failed = [r for r in res if not r.converged]
    if failed:
        print(f"warning: {len(failed)} level(s) did not converge", file=sys.stderr)
    return rows, [], status


def _solver_opts(a):
    return SolverOptions(n_window=a.N, max_level=a.L)


def cmd_oracle(a):
    ev = eigenvalues(a.g, a.delta, FockTruncation(a.nmax))[: a.levels]
    return [{"k": k, "E": float(e)} for k, e in enumerate(ev)], [], EXIT_OK


def cmd_tau(a):
    ser = TauSeries(ThetaTriple(a.theta0, a.thetat, a.thetainf), a.sigma, a.s,
                    BlockTruncation(a.L), a.N)
    t = a.t
    f = ser.derivatives(t, 0)[0]
    d1, d2, _ = ser.log_derivatives(t)
    fd = [dlog_tau_fd(ser, t, k, h) for k, h in ((1, 1e-4), (2, 1e-3))]
    rel = [abs(x - y) / max(1.0, abs(x)) for x, y in zip((d1, d2), fd)]
    ok = rel[0] < 1e-6 and rel[1] < 1e-5
    row = {"tau_tilde": f, "dlog_tau": d1, "d2log_tau": d2,
           "fd_rel_err_1": rel[0], "fd_rel_err_2": rel[1], "self_check": ok}
    checks = [{"family": "tau", "name": "derivative self-check", "passed": ok,
               "value": max(rel), "tolerance": None}]
    return [row], checks, EXIT_OK if ok else EXIT_FAIL


def cmd_monodromy(a):
    p = RabiParams(a.g, a.delta, a.E)
    mp = monodromy_pair(system_from_rabi(p))
    tr0, trt, trc = mp.traces
    row = {"E": a.E, "theta": p.theta, "M0": mp.M0, "Mt": mp.Mt, "tr_M0": tr0, "tr_Mt": trt,
           "tr_MtM0": trc, "two_cos_2pi_theta": 2 * math.cos(2 * math.pi * p.theta.real)}
    try:
        off = connection_offdiag(p)
        row["offdiag"] = off
        row["offdiag_abs"] = abs(off)
    except (ResonanceError, ValueError) as exc:
        row["offdiag"] = None
        row["offdiag_error"] = str(exc)
    return [row], [], EXIT_OK


def cmd_validate(a):
    grid = None
    if a.g or a.delta:
        grid = [(g, d) for g in (a.g or (0.1, 0.2, 0.3)) for d in (a.delta or (0.2, 0.5, 0.7))]
    checks, timing = run(a.only or FAMILIES, grid, Tolerances.from_env(), a.levels,
                         BlockTruncation(a.L), a.sigma_offset)
    rows = [{"family": f, "seconds": s} for f, s in timing.items()]
    out = [{"family": c.family, "name": c.name, "passed": c.passed, "value": c.value,
            "tolerance": c.tolerance, "detail": c.detail} for c in checks]
    for c in checks:
        if not c.passed:
            print(f"FAIL {c.family}: {c.name} value={c.value:.3g} tol={c.tolerance:.3g}",
                  file=sys.stderr)
    return rows, out, EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


COMMANDS = {"spectrum": cmd_spectrum, "oracle": cmd_oracle, "tau": cmd_tau,
            "monodromy": cmd_monodromy, "validate": cmd_validate}


def _encode(v):
    if isinstance(v, (bool, np.bool_)) or v is None or isinstance(v, str):
        return bool(v) if isinstance(v, np.bool_) else v
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, np.ndarray):
        return matrix(v)
    if isinstance(v, (list, tuple)):
        return [_encode(x) for x in v]
    if isinstance(v, dict):
        return {k: _encode(x) for k, x in v.items()}
    return num(v)


def render_json(command, params, rows, checks) -> str:
    doc = {"command": command, "params": _encode(params), "results": _encode(rows),
           "checks": _encode(checks)}
    return json.dumps(doc, indent=2) + "\n"


def _flatten(row: dict) -> dict:
    """One CSV cell per scalar: complex -> _re/_im, matrices -> _ij_re/_ij_im."""
    out = {}
    for k, v in row.items():
        if isinstance(v, np.ndarray):
            for (i, j), x in np.ndenumerate(v):
                out[f"{k}_{i}{j}_re"], out[f"{k}_{i}{j}_im"] = num(x.real), num(x.imag)
        elif isinstance(v, (complex, np.complexfloating)):
            out[f"{k}_re"], out[f"{k}_im"] = num(v.real), num(v.imag)
        else:
            e = _encode(v)
            out[k] = "" if e is None else e
    return out


def render_csv(command, rows, checks) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if command == "spectrum":
        w.writerow(SPECTRUM_CSV)
        for r in rows:
            s = complex(r["s"])
            w.writerow([r["n"], num(complex(r["sigma"]).real), num(r["E"]), num(s.real),
                        num(s.imag), num(r["residual"]), num(r["oracle_E"]) or "",
                        num(r["abs_err"]) or "", int(bool(r["converged"]))])
        return buf.getvalue()
    table = [_flatten(r) for r in (checks if command == "validate" else rows)]
    if table:
        w.writerow(list(table[0]))
        for r in table:
            w.writerow(list(r.values()))
    return buf.getvalue()


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    params = {k: v for k, v in vars(a).items() if k not in ("command", "format", "out")}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            rows, checks, status = COMMANDS[a.command](a)
    except (ResonanceError, TauDomainError, TauZeroError, PathError, FlowError,
            ValueError) as exc:
        print(f"isorabi {a.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = (render_csv(a.command, rows, checks) if a.format == "csv"
            else render_json(a.command, params, rows, checks))
    if a.out == "-":
        sys.stdout.write(text)
    else:
        with open(a.out, "w") as fh:
            fh.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
