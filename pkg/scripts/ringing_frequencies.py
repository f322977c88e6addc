"""Ringing frequency of single velocity classes after the control step.

Prints the FFT peak of the excited-state population for several one-photon
detunings next to sqrt(Omega_c^2 + Delta^2) and sqrt(Omega_c^2 + 4 Delta^2).

    python scripts/ringing_frequencies.py
"""

import numpy as np

from eitprop import atomic, doppler
from eitprop.scenarios import preset

DT, WINDOW = 0.01, 16.0


def main():
    cfg = preset("fig4a")
    lb = cfg.spec.lindblad("lambda")
    omega_c = cfg.drive.control.amplitude
    t = np.arange(0, WINDOW, DT)
    freq = np.fft.rfftfreq(1 << 18, DT) * 2 * np.pi
    print(f"bin width {2 * np.pi / WINDOW:.3f} Gamma")
    print(f"{'Delta':>6s} {'FFT peak':>9s} {'sqrt(Oc^2+D^2)':>15s} {'sqrt(Oc^2+4D^2)':>16s}")
    for shift in (0.0, 1.0, 2.0, 3.0):
        traj = atomic.evolve(cfg.drive.initial_state(lb, shift), cfg.drive.hamiltonian(0.0, shift), lb,
                             (0, t[-1]), atomic.IntegratorConfig(method="expm"), t_eval=t)
        p3 = traj.states[:, 2, 2].real
        spec = np.abs(np.fft.rfft((p3 - p3[-1]) * np.hanning(len(t)), 1 << 18))
        peaks = np.nonzero((spec[1:-1] > spec[:-2]) & (spec[1:-1] > spec[2:]))[0] + 1
        f = freq[peaks[np.argmax(spec[peaks])]]
        print(f"{shift:6.1f} {f:9.3f} {doppler.generalized_rabi(omega_c, shift):15.3f} "
              f"{doppler.effective_rabi(omega_c, shift):16.3f}")


if __name__ == "__main__":
    main()
