"""Sine-Gordon flow in the gapped regime.

Integrates the flow from u0 = sqrt(C), d0 = 0 for several constants of motion
C, compares with the tan solution, and prints the scale l* where the coupling
reaches one next to its small-C form pi / (4 sqrt(C)).  With C = |t| / N this
scale gives log xi in the ordered phase.

    python demos/03_rg_flow.py
"""

import math

import numpy as np

from clockfds.rgflow import SgFlowParams, analytic_z1, integrate_flow, l_star, l_star_asymptotic, xi_prediction


def main():
    print(f"{'C':>8} {'l* flow':>10} {'l* exact':>10} {'pi/4sqrtC':>10} {'gap %':>7} {'tan err':>9}")
    for C in (1e-2, 1e-3, 1e-4, 1e-5):
        step = min(1e-3, l_star(C) / 1e4)
        traj = integrate_flow(SgFlowParams(math.sqrt(C), 0.0), 10 * l_star(C), step, sample_every=50)
        before = traj.l < 0.9 * l_star(C)
        err = np.max(np.abs(traj.z1[before] / analytic_z1(traj.l[before], C, math.pi / 4) - 1))
        gap = 100 * (l_star_asymptotic(C) / l_star(C) - 1)
        print(f"{C:8.0e} {traj.l[-1]:10.4f} {l_star(C):10.4f} {l_star_asymptotic(C):10.4f} {gap:7.2f} {err:9.1e}")
    print("\nlog xi predicted for t = -0.1:")
    for N in (6, 7, 8, 9):
        print(f"  N={N}: log xi = {float(xi_prediction(-0.1, N)):.3f}")


if __name__ == "__main__":
    main()
