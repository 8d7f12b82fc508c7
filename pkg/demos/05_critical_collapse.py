"""Finite-chi scaling in the critical phase and across T_L(N).

Inside the critical window the correlation length grows as chi^kappa; the
script scans kappa for the best collapse of xi / chi^kappa and compares the
per-N score with the pooled one.  It then applies the crossover rescaling to
the magnetization near T_L(N).

    python demos/05_critical_collapse.py
"""

from pathlib import Path

from clockfds.io import read_records
from clockfds.scaling import CriticalTemps, collapse_crossover, collapse_kappa, grouped_collapse_score
from clockfds.sweep import load_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    crit = read_records(ROOT / "data/critical/results.csv")
    kappa, res = collapse_kappa(crit)
    grouped = grouped_collapse_score(res.points[:, :2], res.points[:, 2])
    print(f"kappa = {kappa:.3f}; score {res.score:.3g} (unrescaled {res.baseline_score:.3g}), per-N {grouped:.3g}")
    res.write_csv(ROOT / "data/critical/kappa_collapse.csv")

    cfg = load_config(ROOT / "configs/crossover.toml", env={})
    cross = read_records(ROOT / "data/crossover/results.csv")
    res = collapse_crossover(cross, CriticalTemps(cfg.critical_temps), kappa=kappa)
    print(f"crossover collapse: score {res.score:.3g} vs {res.baseline_score:.3g} unrescaled ({res.improvement:.1f}x)")
    res.write_csv(ROOT / "data/crossover/crossover_collapse.csv")


if __name__ == "__main__":
    main()
