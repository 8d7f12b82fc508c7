"""Command-line entry point: ``clockfds <subcommand>`` or ``python -m clockfds``.

Every subcommand prints a JSON document on stdout.  Invalid input exits with
status 2 and a JSON error object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

__all__ = ["main", "build_parser"]


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _fail(kind: str, message: str, code: int = 2):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def _emit(doc) -> None:
    sys.stdout.write(json.dumps(doc, indent=1, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(type(o).__name__)


def _parse_table(text: str | None, what: str) -> dict[int, float]:
    """``"6:0.68,7:0.53"`` -> ``{6: 0.68, 7: 0.53}``."""
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        try:
            k, v = item.split(":")
            out[int(k)] = float(v)
        except ValueError:
            raise CliError(f"bad {what} entry {item!r}; expected N:value") from None
    return out


def _parse_windows(text: str | None) -> dict[int, tuple[float, float]] | None:
    """``"6:0.74:0.86,7:0.7:0.86"`` -> per-N temperature windows."""
    if not text:
        return None
    out = {}
    for item in text.split(","):
        try:
            k, lo, hi = item.split(":")
            out[int(k)] = (float(lo), float(hi))
        except ValueError:
            raise CliError(f"bad window entry {item!r}; expected N:T_low:T_high") from None
    return out


def _parse_lattice(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        return int(a), int(b)
    except ValueError:
        raise CliError(f"bad lattice {text!r}; expected LxxLy such as 2x2") from None


def _load_records(path):
    from .io import read_records

    p = Path(path)
    if p.is_dir():
        p = p / "results.csv"
    if not p.exists():
        raise CliError(f"results file {p} not found")
    return read_records(p)


def _temps(args, records=None):
    from .scaling import CriticalTemps

    table = _parse_table(args.critical_temps, "critical temperature")
    if args.config:
        from .sweep import load_config

        table = {**load_config(args.config).critical_temps, **table}
    if not table and getattr(args, "estimate_tl", False) and records is not None:
        table = _estimated_temps(records)
    if not table:
        raise CliError("no critical temperatures: pass --critical-temps, a config with [critical_temps], or --estimate-tl")
    return CriticalTemps(table)


def _estimated_temps(records) -> dict[int, float]:
    from .scaling import estimate_T_L, extrapolate_all

    acc, _ = extrapolate_all(records, "xi")
    out = {}
    for N in sorted({k[0] for k in acc}):
        out[N] = estimate_T_L({T: r.value for (n, T), r in acc.items() if n == N})
    return out


# subcommands ------------------------------------------------------------------------


def cmd_sweep(args):
    from .sweep import load_config, run_sweep

    cfg = load_config(args.config)
    if args.output_dir:
        cfg.output_dir = Path(args.output_dir)
    if args.workers:
        cfg.workers = args.workers
    new = run_sweep(cfg)
    _emit({"output_dir": str(cfg.output_dir), "points_total": len(cfg.points()), "points_computed": len(new)})


def cmd_extrapolate(args):
    from .scaling import extrapolate_all

    recs = _load_records(args.results)
    acc, audit = extrapolate_all(recs, args.field, args.chi_min)
    _emit({
        "field": args.field,
        "results": [
            {"N": k[0], "T": k[1], "value": r.value, "stderr": r.stderr, "rel_err": r.rel_err, "used_chis": list(r.used_chis)}
            for k, r in sorted(acc.items())
        ],
        "excluded": audit,
    })


def _read_xi_table(path) -> dict[tuple[int, float], float]:
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out[(int(row["N"]), float(row["T"]))] = float(row["xi"])
    return out


def cmd_fit_xi(args):
    from .scaling import extrapolate_all, fit_xi_scaling

    if args.xi_table:
        xi = _read_xi_table(args.xi_table)
        recs = None
    else:
        if not args.results:
            raise CliError("fit-xi needs --results or --xi-table")
        recs = _load_records(args.results)
        acc, _ = extrapolate_all(recs, "xi", args.chi_min)
        xi = {k: r.value for k, r in acc.items()}
    temps = _temps(args, recs)
    res = fit_xi_scaling(xi, temps)
    doc = res.as_dict()
    doc["critical_temps"] = {str(k): v for k, v in temps.values.items()}
    _emit(doc)


def _write_points(res, path):
    if path:
        res.write_csv(path)


def cmd_collapse(args):
    from . import scaling as sc

    recs = _load_records(args.results) if args.results else None
    if args.kind == "kappa":
        if recs is None:
            raise CliError("collapse kappa needs --results")
        kappa, res = sc.collapse_kappa(recs, _parse_windows(args.window))
        groups = res.points[:, 2]
        doc = res.as_dict()
        doc["grouped_score"] = sc.grouped_collapse_score(res.points[:, :2], groups)
    elif args.kind == "ansatz-n":
        if recs is None:
            raise CliError("collapse ansatz-n needs --results")
        temps = _temps(args, recs)
        acc, audit = sc.extrapolate_all(recs, "M", args.chi_min)
        res = sc.collapse_ansatz_N({k: r.value for k, r in acc.items()}, temps)
        doc = res.as_dict()
        doc["excluded"] = audit
    else:
        if recs is None:
            raise CliError("collapse crossover needs --results")
        temps = _temps(args, recs)
        res = sc.collapse_crossover(recs, temps, kappa=args.kappa, window=_parse_windows(args.window))
        doc = res.as_dict()
    _write_points(res, args.points_out)
    _emit(doc)


def cmd_rg(args):
    from .rgflow import SgFlowParams, integrate_flow, l_star, l_star_asymptotic

    p = SgFlowParams(args.u0, args.d0)
    step = args.step
    if step is None:
        step = 1e-3 if not 0 < p.C < 1 else min(1e-3, l_star(p.C) / 1e4)
    traj = integrate_flow(p, args.l_max, step, sample_every=args.sample_every)
    if args.out:
        np.savetxt(args.out, traj.samples, delimiter=",", header="l,z1,z2,u,d", comments="", fmt="%.15g")
    doc = {"C": p.C, "terminated": traj.terminated, "l_end": float(traj.l[-1]), "samples": len(traj.samples)}
    if 0 < p.C < 1:
        doc["l_star"] = l_star(p.C)
        doc["l_star_asymptotic"] = l_star_asymptotic(p.C)
    _emit(doc)


def cmd_lgt_verify(args):
    from .lgt import DualLattice, verification_report

    Lx, Ly = _parse_lattice(args.lattice)
    rep = verification_report(args.N, args.beta, DualLattice(Lx, Ly))
    _emit(rep)
    return 0 if rep["pass"] else 1


def cmd_oracle(args):
    from . import oracle

    doc = {"N": args.N, "beta": args.beta}
    if args.lattice:
        Lx, Ly = _parse_lattice(args.lattice)
        spec = oracle.LatticeSpec(Lx, Ly, args.N, args.beta, args.h, args.boundary)
        doc["logZ"] = oracle.brute_force_Z(spec)
        doc["cos_site0"] = oracle.brute_force_observable(spec, lambda n: np.cos(2 * np.pi * n / args.N))
    if args.strip:
        widths = [int(w) for w in args.strip.split(",")]
        est, fL = oracle.strip_free_energy_extrapolated(args.N, args.beta, widths, args.method)
        doc["strip"] = {"widths": widths, "f_L": fL.tolist(), "f_extrapolated": est}
    if args.N == 2:
        doc["ising_M"] = oracle.ising_exact_magnetization(args.beta)
        doc["ising_f"] = oracle.ising_exact_free_energy(args.beta)
    _emit(doc)


def cmd_selftest(args):
    import pytest

    here = Path(__file__).resolve()
    candidates = [here.parents[2] / "tests", Path.cwd() / "tests"]
    tests = next((c for c in candidates if c.is_dir()), None)
    if tests is None:
        raise CliError("test directory not found; run from the repository root")
    opts = [str(tests), "-q", "-m", "not long"] + (["-x"] if args.exitfirst else [])
    return int(pytest.main(opts))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="clockfds", description="Tensor-network field-digitization scaling toolkit")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("sweep", help="run a parameter sweep from a TOML config")
    s.add_argument("config")
    s.add_argument("--output-dir")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    def results_args(p, need_temps=True):
        p.add_argument("--results", help="results.csv or its directory")
        p.add_argument("--chi-min", type=int, default=70)
        if need_temps:
            p.add_argument("--critical-temps", help="N:T_L list, e.g. 6:0.68,7:0.53")
            p.add_argument("--config", help="sweep config with a [critical_temps] table")
            p.add_argument("--estimate-tl", action="store_true", help="estimate T_L from the data")

    s = sub.add_parser("extrapolate", help="chi -> infinity extrapolation per (N, T)")
    results_args(s, need_temps=False)
    s.add_argument("--field", choices=("M", "xi"), default="xi")
    s.set_defaults(func=cmd_extrapolate)

    s = sub.add_parser("fit-xi", help="fit the ordered-phase correlation-length form")
    results_args(s)
    s.add_argument("--xi-table", help="CSV with N,T,xi columns (already extrapolated)")
    s.set_defaults(func=cmd_fit_xi)

    s = sub.add_parser("collapse", help="scaling collapses")
    s.add_argument("kind", choices=("ansatz-n", "kappa", "crossover"))
    results_args(s)
    s.add_argument("--window", help="per-N temperature windows N:T_low:T_high,...")
    s.add_argument("--kappa", type=float, default=1.247)
    s.add_argument("--points-out", help="write the rescaled point cloud as CSV")
    s.set_defaults(func=cmd_collapse)

    s = sub.add_parser("rg", help="integrate the sine-Gordon flow")
    s.add_argument("--u0", type=float, required=True)
    s.add_argument("--d0", type=float, required=True)
    s.add_argument("--l-max", type=float, default=1e4)
    s.add_argument("--step", type=float)
    s.add_argument("--sample-every", type=int, default=100)
    s.add_argument("--out", help="trajectory CSV")
    s.set_defaults(func=cmd_rg)

    s = sub.add_parser("lgt-verify", help="exact checks of the gauge-theory construction")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--lattice", default="2x2")
    s.set_defaults(func=cmd_lgt_verify)

    s = sub.add_parser("oracle", help="exact reference values")
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--h", type=float, default=0.0)
    s.add_argument("--lattice", help="enumerate an LxxLy lattice")
    s.add_argument("--boundary", choices=("torus", "open"), default="torus")
    s.add_argument("--strip", help="comma-separated strip widths")
    s.add_argument("--method", choices=("geometric", "inverse_square"), default="geometric")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("selftest", help="run the property and oracle test suite")
    s.add_argument("-x", "--exitfirst", action="store_true")
    s.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        return _fail("usage", str(exc))
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        rc = args.func(args)
    except CliError as exc:
        return _fail("usage", str(exc))
    except (ValueError, KeyError, ArithmeticError, OSError, RuntimeError) as exc:
        return _fail(type(exc).__name__, str(exc).strip("'\""))
    return int(rc or 0)


if __name__ == "__main__":
    sys.exit(main())
