"""Linear susceptibility, closed-form two-level response and Beer-Lambert propagation.

Functions in this module take physical units (rad/s, metres); the density
matrix dynamics they call run in units of Gamma.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants

from . import atomic
from .drive import DriveProtocol
from .errors import ParameterError, ZeroFieldError

RB_D2_WAVELENGTH = 780.241e-9
RB87_MASS = 1.443e-25
DEFAULT_GAMMA = 2 * math.pi * 5.86e6


@dataclass(frozen=True)
class AtomSpec:
    """Atomic and sample parameters in SI units.

    gamma: excited-state decay rate (rad/s); branching_31: fraction of it
    going to |1> in a Lambda atom; dephasing: ground-state coherence decay
    (rad/s); dipole: d21 (C m); density: atoms/m^3; length: medium length (m).
    """

    density: float
    length: float
    dipole: float = 2.0e-29
    gamma: float = DEFAULT_GAMMA
    dephasing: float = 0.0
    branching_31: float = 0.5
    wavelength: float = RB_D2_WAVELENGTH
    mass: float = RB87_MASS

    def __post_init__(self):
        for name in ("density", "length", "dipole", "gamma", "dephasing", "wavelength", "mass"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ParameterError(f"{name} must be finite and >= 0, got {value}")
        for name in ("dipole", "gamma", "wavelength", "length", "mass"):
            if getattr(self, name) == 0:
                raise ParameterError(f"{name} must be > 0")
        if not 0.0 <= self.branching_31 <= 1.0:
            raise ParameterError(f"branching_31 must lie in [0, 1], got {self.branching_31}")

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def gamma31(self) -> float:
        return self.branching_31 * self.gamma

    @property
    def gamma32(self) -> float:
        return (1.0 - self.branching_31) * self.gamma

    @property
    def coupling_prefactor(self) -> float:
        """N |d21|^2 / (eps0 hbar), in rad/s."""
        return self.density * self.dipole**2 / (constants.epsilon_0 * constants.hbar)

    def lindblad(self, scheme: str) -> atomic.LindbladSet:
        """Jump operators in units of Gamma."""
        if scheme == "two-level":
            return atomic.LindbladSet.two_level(1.0)
        if scheme == "lambda":
            return atomic.LindbladSet.lambda_system(
                self.branching_31, 1.0 - self.branching_31, self.dephasing / self.gamma
            )
        raise ParameterError(f"unknown level scheme {scheme!r}")


def resonant_od(spec: AtomSpec) -> float:
    return spec.coupling_prefactor / spec.gamma * spec.k * spec.length


def calibrate_od(spec: AtomSpec, od: float) -> AtomSpec:
    """Return ``spec`` with the dipole moment chosen so that ``resonant_od`` equals ``od``."""
    if not od > 0:
        raise ParameterError(f"target OD must be > 0, got {od}")
    if spec.density <= 0:
        raise ParameterError("cannot calibrate the dipole moment of an empty sample")
    d2 = od * constants.epsilon_0 * constants.hbar * spec.gamma / (spec.density * spec.k * spec.length)
    return replace(spec, dipole=math.sqrt(d2))


def chi_from_coherence(rho_eg, omega, spec: AtomSpec):
    """chi = N|d21|^2/(eps0 hbar) * rho_eg / Omega (Omega in rad/s)."""
    omega = np.asarray(omega, dtype=complex)
    if np.any(omega == 0):
        raise ZeroFieldError("susceptibility is undefined where the driving field vanishes")
    return spec.coupling_prefactor * np.asarray(rho_eg) / omega


def two_level_chi(omega, delta, spec: AtomSpec):
    """Steady-state two-level susceptibility including saturation (Omega, Delta in rad/s)."""
    g = spec.gamma
    omega = np.asarray(omega)
    delta = np.asarray(delta, dtype=float)
    return -spec.coupling_prefactor * (2 * delta - 1j * g) / (4 * delta**2 + g**2 + 2 * np.abs(omega) ** 2)


def weak_chi(delta, spec: AtomSpec):
    return -spec.coupling_prefactor / (2 * np.asarray(delta, dtype=float) + 1j * spec.gamma)


def beer_lambert(omega0, chi, k: float, z: float):
    """Field after a uniform medium of length z with n = 1 + chi/2."""
    chi = np.asarray(chi, dtype=complex)
    if np.any(np.abs(chi) > 0.5):
        warnings.warn("|chi| > 0.5: the n = 1 + chi/2 expansion is inaccurate", RuntimeWarning, stacklevel=2)
    phase = np.exp(1j * (1 + chi.real / 2) * k * z)
    return np.asarray(omega0) * phase * np.exp(-chi.imag / 2 * k * z)


@dataclass(frozen=True, eq=False)
class ObeTrace:
    """Spatially uniform (single-atom, rescaled) prediction on a time grid (1/Gamma)."""

    tau: np.ndarray
    chi: np.ndarray
    transmission: np.ndarray  # |Omega_out/Omega_in|^2
    gain: np.ndarray  # |Omega_out/Omega_in|


def single_atom_coherence(
    drive: DriveProtocol,
    lindblad: atomic.LindbladSet,
    tau: np.ndarray,
    cfg: atomic.IntegratorConfig | None = None,
) -> np.ndarray:
    """Signal coherence rho_eg(tau) of one stationary atom."""
    tau = np.asarray(tau, dtype=float)
    if tau[0] < 0 or np.any(np.diff(tau) < 0):
        raise ParameterError("tau must be sorted and start at or after 0")
    rho0 = drive.initial_state(lindblad)
    e = drive.dim - 1
    t_eval = tau if tau[0] == 0 else np.concatenate([[0.0], tau])
    if t_eval[-1] == 0:
        return np.full(tau.shape, rho0[e, 0])
    constant = drive.settled_from() <= 0
    if constant and (cfg is None or cfg.method == "expm"):
        cfg = atomic.IntegratorConfig(method="expm")
    source = drive.hamiltonian(0.0) if constant else drive.hamiltonian
    traj = atomic.evolve(rho0, source, lindblad, (0.0, t_eval[-1]), cfg or atomic.IntegratorConfig(), t_eval=t_eval)
    values = traj.element(e, 0)
    return values if tau[0] == 0 else values[1:]


def obe_transmission_trace(
    spec: AtomSpec,
    drive: DriveProtocol,
    tau: np.ndarray,
    cfg: atomic.IntegratorConfig | None = None,
) -> ObeTrace:
    """Evolve one atom, convert its coherence to chi(tau) and apply Beer-Lambert over the sample length."""
    tau = np.asarray(tau, dtype=float)
    lindblad = spec.lindblad(drive.scheme)
    rho_eg = single_atom_coherence(drive, lindblad, tau, cfg)
    return trace_from_coherence(spec, drive, tau, rho_eg)


def trace_from_coherence(spec: AtomSpec, drive: DriveProtocol, tau: np.ndarray, rho_eg: np.ndarray) -> ObeTrace:
    omega_in = drive.signal(tau) * spec.gamma
    chi = chi_from_coherence(rho_eg, omega_in, spec)
    out = beer_lambert(omega_in, chi, spec.k, spec.length)
    gain = np.abs(out) / np.abs(omega_in)
    return ObeTrace(tau=tau, chi=chi, transmission=gain**2, gain=gain)
