"""Convergence of the velocity average for the warm-vapour presets.

Compares Gauss-Hermite rules of increasing order with uniform rules of
decreasing Doppler-shift spacing, on the fig5 transient and a slice of the
fig4b spectrum.

    python scripts/quadrature_study.py
"""

import numpy as np

from eitprop import doppler
from eitprop.scenarios import preset


def delta(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def main():
    fig5, fig4b = preset("fig5"), preset("fig4b")
    tau = fig5.grid.tau
    deltas = np.linspace(-3, 3, 31)
    T, m = fig5.doppler.temperature, fig5.spec.mass

    def both(ens):
        gain = doppler.doppler_transient_obe(fig5.spec, fig5.drive, ens, tau).gain
        chi = doppler.eit_spectrum(fig4b.spec, fig4b.drive, deltas, ens).chi
        return gain, chi

    ref = both(doppler.build_ensemble(T, m, doppler.nodes_for_resolution(fig5.spec, T, 6, 0.0625), 6, "uniform"))
    print(f"{'rule':>24s} {'nodes':>6s} {'fig5 gain':>10s} {'fig4b chi':>10s}")
    for n in (32, 64, 128, 256):
        g, c = both(doppler.build_ensemble(T, m, n))
        print(f"{'gauss-hermite':>24s} {n:6d} {delta(g, ref[0]):10.2e} {delta(c, ref[1]):10.2e}")
    for spacing in (1.0, 0.5, 0.25, 0.125):
        n = doppler.nodes_for_resolution(fig5.spec, T, 6, spacing)
        g, c = both(doppler.build_ensemble(T, m, n, 6, "uniform"))
        print(f"{f'uniform, {spacing} Gamma':>24s} {n:6d} {delta(g, ref[0]):10.2e} {delta(c, ref[1]):10.2e}")


if __name__ == "__main__":
    main()
