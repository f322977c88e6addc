"""Largest spatially uniform (OBE) peak gain at OD 2.6 over switch-on protocols and field settings.

Every Lambda atom starts in a mixture of the two ground states with weight
p2 in |2>, then both fields act from t = 0. The OBE gain is
exp(-(OD/2) Im(rho_31 / Omega_s)), so ln G is linear in OD.

    python scripts/protocol_scan.py
"""

import itertools

import numpy as np
import scipy.linalg

from eitprop import atomic

OD = 2.6
DT = 0.02
TAU = np.arange(0, 40, DT)


def obe_peak(omega_c, omega_s, dephasing, p2):
    lb = atomic.LindbladSet.lambda_system(0.5, 0.5, dephasing)
    prop = scipy.linalg.expm(atomic.liouvillian(atomic.lambda_hamiltonian(0, 0, omega_s, omega_c), lb) * DT)
    y = np.diag([1 - p2, p2, 0]).astype(complex).reshape(-1)
    worst = np.inf
    for _ in TAU[1:]:
        y = prop @ y
        worst = min(worst, (y[6] / omega_s).imag)
    return float(np.exp(-OD / 2 * worst))


def main():
    grid = itertools.product([0.5, 0.8, 1.6, 3.2, 5.0], [0.01, 0.1, 0.5], [0.0, 0.03, 0.3], [0.0, 0.5, 1.0])
    rows = sorted(((obe_peak(*p), *p) for p in grid), reverse=True)
    print(f"{'peak G':>8s} {'Omega_c':>8s} {'Omega_s':>8s} {'gamma':>6s} {'p2':>4s}")
    for g, oc, os_, gam, p2 in rows[:10]:
        print(f"{g:8.3f} {oc:8.2f} {os_:8.2f} {gam:6.2f} {p2:4.1f}")


if __name__ == "__main__":
    main()
