"""Correlation length and magnetization below T_L(N).

Reads the sweep produced by ``clockfds sweep configs/ordered.toml``,
extrapolates xi and M to infinite chi, fits the essential-singularity form
of xi across N and collapses M with Delta_M = 2 / N^2.

    python demos/04_ordered_phase_scaling.py [results.csv] [config.toml]
"""

import sys
from pathlib import Path

from clockfds.io import read_records
from clockfds.scaling import CriticalTemps, collapse_ansatz_N, estimate_T_L, extrapolate_all, fit_xi_scaling
from clockfds.sweep import load_config

ROOT = Path(__file__).resolve().parents[1]


def main(results=ROOT / "data/ordered/results.csv", config=ROOT / "configs/ordered.toml"):
    recs = read_records(results)
    temps = CriticalTemps(load_config(config, env={}).critical_temps)
    xi, audit = extrapolate_all(recs, "xi")
    print(f"{len(xi)} (N, T) points extrapolated, {len(audit)} excluded")
    for a in audit:
        print(f"  excluded N={a['N']} T={a['T']}: {a['detail'] if 'detail' in a else a['reason']}")
    print(f"\n{'N':>2} {'T':>9} {'t':>7} {'xi_inf':>9} {'rel err':>8}")
    for (N, T), r in sorted(xi.items()):
        print(f"{N:2d} {T:9.5f} {temps.reduced(N, T):7.3f} {r.value:9.3f} {r.rel_err:8.4f}")

    fit = fit_xi_scaling({k: r.value for k, r in xi.items()}, temps)
    err = fit.stderr()
    print(f"\nfit: a = {fit.a:.3f} +- {err[0]:.3f}, b = {fit.b:.3f} +- {err[1]:.3f}, "
          f"eps0 = {fit.eps0:.3f} +- {err[2]:.3f}  ({fit.n_points} points)")
    for N in sorted({k[0] for k in xi}):
        pts = {T: r.value for (n, T), r in xi.items() if n == N}
        try:
            print(f"  T_L({N}): table {temps[N]:.4f}, estimated from data {estimate_T_L(pts):.4f}")
        except ValueError as exc:
            print(f"  T_L({N}): table {temps[N]:.4f}, no estimate ({exc})")

    M, _ = extrapolate_all(recs, "M")
    col = collapse_ansatz_N({k: r.value for k, r in M.items()}, temps)
    print(f"\nmagnetization collapse: score {col.score:.3g} vs {col.baseline_score:.3g} unrescaled "
          f"({col.improvement:.1f}x)")


if __name__ == "__main__":
    main(*sys.argv[1:])
