"""Time-dependent drive fields and the initial atomic state they imply."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import atomic
from .errors import ParameterError

SHAPES = ("step", "constant", "ramp")
PREPARATIONS = ("ground", "pumped")


@dataclass(frozen=True)
class Envelope:
    """Complex Rabi-frequency envelope in units of Gamma.

    ``step``: zero before ``t_on``, ``amplitude`` from ``t_on`` on (inclusive).
    ``constant``: ``amplitude`` at all times, including before t = 0.
    ``ramp``: linear rise from zero over ``rise`` starting at ``t_on``.
    """

    amplitude: complex = 0.0
    shape: str = "step"
    t_on: float = 0.0
    rise: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ParameterError(f"unknown envelope shape {self.shape!r}; expected one of {SHAPES}")
        if not np.isfinite(self.amplitude) or not np.isfinite(self.t_on):
            raise ParameterError("envelope amplitude and switch time must be finite")
        if self.shape == "ramp" and not self.rise > 0:
            raise ParameterError("ramp envelopes need rise > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.shape == "constant":
            return np.full(t.shape, complex(self.amplitude))
        if self.shape == "step":
            return np.where(t >= self.t_on, complex(self.amplitude), 0j)
        frac = np.clip((t - self.t_on) / self.rise, 0.0, 1.0)
        return complex(self.amplitude) * frac

    def settled_from(self) -> float:
        """Earliest time after which the envelope no longer changes."""
        if self.shape == "constant":
            return -np.inf
        return self.t_on + (self.rise if self.shape == "ramp" else 0.0)

    def before_switch(self) -> complex:
        """Value the field had long before t = 0 (sets the prepared state)."""
        return complex(self.amplitude) if self.shape == "constant" else 0j


@dataclass(frozen=True)
class DriveProtocol:
    """Signal (and optional control) envelopes plus one-photon detunings (Gamma units).

    Without a control envelope the drive describes a two-level atom. The
    ``preparation`` selects the state at t = 0: ``"ground"`` puts everything
    in |1>; ``"pumped"`` is the stationary state under the fields as they
    were before t = 0 (for a Lambda atom under a pre-applied signal this is
    the optically pumped state |2>).
    """

    signal: Envelope
    control: Envelope | None = None
    delta_s: float = 0.0
    delta_c: float = 0.0
    preparation: str = "ground"

    def __post_init__(self):
        if self.preparation not in PREPARATIONS:
            raise ParameterError(f"unknown preparation {self.preparation!r}; expected one of {PREPARATIONS}")
        if not (np.isfinite(self.delta_s) and np.isfinite(self.delta_c)):
            raise ParameterError("detunings must be finite")

    @property
    def scheme(self) -> str:
        return "two-level" if self.control is None else "lambda"

    @property
    def dim(self) -> int:
        return 2 if self.control is None else 3

    @property
    def two_photon_detuning(self) -> float:
        return self.delta_s - self.delta_c

    def settled_from(self) -> float:
        times = [self.signal.settled_from()]
        if self.control is not None:
            times.append(self.control.settled_from())
        return max(times)

    def fields(self, t):
        s = self.signal(t)
        c = self.control(t) if self.control is not None else None
        return s, c

    def hamiltonian_for(self, omega_s, omega_c=None, shift=0.0):
        """Hamiltonian for given field values; ``shift`` is subtracted from both one-photon detunings."""
        if self.control is None:
            return atomic.two_level_hamiltonian(self.delta_s - shift, omega_s)
        return atomic.lambda_hamiltonian(self.delta_s - shift, self.delta_c - shift, omega_s, omega_c)

    def hamiltonian(self, t: float, shift: float = 0.0) -> np.ndarray:
        s, c = self.fields(t)
        return self.hamiltonian_for(s, c, shift)

    def initial_state(self, lindblad: atomic.LindbladSet, shift=0.0) -> np.ndarray:
        """Initial density matrix (or a stack of them when ``shift`` is an array)."""
        shift = np.asarray(shift, dtype=float)
        if self.preparation == "ground":
            return np.broadcast_to(atomic.ground_state(self.dim), shift.shape + (self.dim, self.dim)).copy()
        pre_c = self.control.before_switch() if self.control is not None else None
        h = self.hamiltonian_for(self.signal.before_switch(), pre_c, shift)
        return atomic.steady_state(h, lindblad)
