"""Maxwell-Bloch propagation in the co-moving frame (zeta = z, tau = t - z/c).

The medium is cut into ``n_zeta`` intervals along z. Every node carries its
own density matrix (one per velocity class when an ensemble is given), and
the fields obey

    dOmega_s/dzeta = i eta_s <rho_31>,    dOmega_c/dzeta = i eta_c <rho_32>

with eta L = OD Gamma / 2. The whole atom-field system is advanced in tau
with classical RK4; at every RK stage the fields are rebuilt from the
boundary value by cumulative trapezoidal integration of the stage
coherences, so the zeta march stays causal and second-order accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import atomic
from .drive import DriveProtocol
from .errors import GridRefinementError, ParameterError, ZeroFieldError
from .response import AtomSpec, resonant_od

STABILITY_LIMIT = 0.1


def coupling_constant(spec: AtomSpec) -> float:
    """eta = omega N |d21|^2 / (2 eps0 hbar c) in rad/(s m), with omega = k c."""
    return spec.k * spec.coupling_prefactor / 2


@dataclass(frozen=True)
class PropagationGrid:
    """Space-time lattice. ``dtau`` and ``tau_max``, ``sample_dtau`` are in 1/Gamma.

    There are ``n_zeta`` intervals (``n_zeta + 1`` nodes including both faces).
    Fields are recorded every ``sample_dtau``.
    """

    n_zeta: int = 200
    dtau: float = 0.005
    tau_max: float = 20.0
    sample_dtau: float = 0.02

    def __post_init__(self):
        if self.n_zeta < 2:
            raise ParameterError("n_zeta must be >= 2")
        if not (self.dtau > 0 and self.tau_max > 0 and self.sample_dtau > 0):
            raise ParameterError("time steps and window must be > 0")
        ratio = self.sample_dtau / self.dtau
        if abs(ratio - round(ratio)) > 1e-6 or round(ratio) < 1:
            raise ParameterError("sample_dtau must be an integer multiple of dtau")

    @property
    def n_steps(self) -> int:
        return int(round(self.tau_max / self.dtau))

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.sample_dtau / self.dtau))

    @property
    def tau(self) -> np.ndarray:
        n = self.n_steps // self.steps_per_sample
        return np.arange(n + 1) * self.sample_dtau

    def zeta(self, length: float) -> np.ndarray:
        return np.linspace(0.0, length, self.n_zeta + 1)

    def refined(self) -> "PropagationGrid":
        """Twice the slices and half the time step, same output samples."""
        return replace(self, n_zeta=2 * self.n_zeta, dtau=self.dtau / 2)


@dataclass(frozen=True, eq=False)
class FieldGrid:
    """Field envelopes on the lattice, in units of Gamma; rows are tau, columns zeta."""

    zeta: np.ndarray  # m
    tau: np.ndarray  # 1/Gamma
    signal: np.ndarray
    control: np.ndarray | None
    gamma: float  # rad/s, to convert to physical units

    @property
    def signal_rad_s(self) -> np.ndarray:
        return self.signal * self.gamma


@dataclass(frozen=True, eq=False)
class Propagation:
    fields: FieldGrid
    final_states: np.ndarray  # (n_zeta + 1, n_velocity, d, d)
    stability: float  # largest monitored eta dzeta max|rho_eg| / max|Omega_s|
    states: np.ndarray | None = None  # (n_samples, n_zeta + 1, n_velocity, d, d) if kept


def _field_superoperators(drive: DriveProtocol) -> np.ndarray:
    """-i[H, .] for unit real / imaginary signal and control fields, stacked."""
    if drive.scheme == "two-level":
        hs = [atomic.two_level_hamiltonian(0.0, 1.0), atomic.two_level_hamiltonian(0.0, 1j)]
    else:
        hs = [
            atomic.lambda_hamiltonian(0.0, 0.0, 1.0, 0.0),
            atomic.lambda_hamiltonian(0.0, 0.0, 1j, 0.0),
            atomic.lambda_hamiltonian(0.0, 0.0, 0.0, 1.0),
            atomic.lambda_hamiltonian(0.0, 0.0, 0.0, 1j),
        ]
    return np.stack([atomic.commutator_superoperator(h) for h in hs])


def propagate(
    spec: AtomSpec,
    drive: DriveProtocol,
    grid: PropagationGrid = PropagationGrid(),
    control_frozen: bool = False,
    ensemble=None,
    control_coupling: float = 1.0,
    keep_states: bool = False,
) -> Propagation:
    """Solve the coupled atom-field problem on ``grid``.

    ``ensemble`` (a ``doppler.VelocityEnsemble``) replaces each stationary
    atom by a weighted set of velocity classes with equal signal and control
    wavenumbers. ``control_coupling`` is eta_c / eta_s.
    """
    d = drive.dim
    e = d - 1
    lindblad = spec.lindblad(drive.scheme)
    od = resonant_od(spec)
    od_c = od * control_coupling
    n_nodes = grid.n_zeta + 1
    ds = 1.0 / grid.n_zeta  # zeta / L

    if ensemble is None:
        shifts = np.zeros(1)
        weights = np.ones(1)
    else:
        shifts = spec.k * np.asarray(ensemble.nodes) / spec.gamma
        weights = np.asarray(ensemble.weights)
    n_v = len(shifts)

    base_h = drive.hamiltonian_for(np.zeros(n_v), np.zeros(n_v) if d == 3 else None, shifts)
    base = atomic.liouvillian(base_h, lindblad)  # (n_v, d2, d2)
    base_t = np.swapaxes(base, -1, -2)
    field_ops = _field_superoperators(drive)  # (n_f, d2, d2)
    n_f = field_ops.shape[0]
    field_t = np.concatenate([op.T for op in field_ops], axis=1)  # (d2, n_f * d2)
    i_s = e * d + 0
    i_c = e * d + 1

    rho0 = drive.initial_state(lindblad, shifts).reshape(n_v, d * d)
    y = np.broadcast_to(rho0, (n_nodes, n_v, d * d)).copy()

    def integrate(src, boundary, od_value):
        # cumulative trapezoid of i (OD/2) src along zeta/L
        inc = 0.5 * (src[1:] + src[:-1]) * ds
        out = np.empty(n_nodes, dtype=complex)
        out[0] = 0.0
        np.cumsum(inc, out=out[1:])
        return boundary + 1j * od_value / 2 * out

    def fields_of(t, y):
        omega_s_in, omega_c_in = drive.fields(t)
        src_s = y[:, :, i_s] @ weights
        omega_s = integrate(src_s, omega_s_in, od)
        if d == 2:
            return omega_s, None
        if control_frozen:
            omega_c = np.full(n_nodes, complex(omega_c_in))
        else:
            omega_c = integrate(y[:, :, i_c] @ weights, omega_c_in, od_c)
        return omega_s, omega_c

    def rhs(t, y):
        omega_s, omega_c = fields_of(t, y)
        dy = np.einsum("zvj,vji->zvi", y, base_t)
        proj = (y @ field_t).reshape(n_nodes, n_v, n_f, d * d)
        coeffs = [omega_s.real, omega_s.imag]
        if d == 3:
            coeffs += [omega_c.real, omega_c.imag]
        for j, c in enumerate(coeffs):
            dy += c[:, None, None] * proj[:, :, j, :]
        return dy

    n_samples = len(grid.tau)
    sig = np.empty((n_samples, n_nodes), dtype=complex)
    ctl = np.empty((n_samples, n_nodes), dtype=complex) if d == 3 else None
    kept = np.empty((n_samples, n_nodes, n_v, d * d), dtype=complex) if keep_states else None
    worst = 0.0

    def record(k, t, y):
        nonlocal worst
        omega_s, omega_c = fields_of(t, y)
        sig[k] = omega_s
        if ctl is not None:
            ctl[k] = omega_c
        if kept is not None:
            kept[k] = y
        if od > 0:
            # per-slice field increment relative to the field scale on this column;
            # local zeros of the transmitted field are physical and do not count
            scale = float(np.max(np.abs(omega_s)))
            if scale > 0:
                coh = np.abs(y[:, :, i_s] @ weights)
                ratio = float(od / 2 * ds * np.max(coh) / scale)
                worst = max(worst, ratio)
                if ratio > STABILITY_LIMIT:
                    suggested = int(math.ceil(grid.n_zeta * ratio / STABILITY_LIMIT * 1.25))
                    raise GridRefinementError(
                        f"propagation step too coarse at tau = {t:.4g}/Gamma "
                        f"(eta dzeta max|rho|/max|Omega| = {ratio:.3g} > {STABILITY_LIMIT})",
                        suggested,
                    )
        if not np.all(np.isfinite(y)):
            raise GridRefinementError(f"non-finite state at tau = {t:.4g}/Gamma", 2 * grid.n_zeta)

    record(0, 0.0, y)
    h = grid.dtau
    per = grid.steps_per_sample
    for k in range(1, n_samples):
        for j in range(per):
            t = ((k - 1) * per + j) * h
            y = atomic.rk4_step(rhs, t, y, h)
        record(k, k * per * h, y)

    fields = FieldGrid(
        zeta=grid.zeta(spec.length),
        tau=grid.tau,
        signal=sig,
        control=ctl,
        gamma=spec.gamma,
    )
    states = kept.reshape(n_samples, n_nodes, n_v, d, d) if kept is not None else None
    return Propagation(fields, y.reshape(n_nodes, n_v, d, d), worst, states)


def gain_trace(fields: FieldGrid) -> np.ndarray:
    """G(tau) = |Omega_s(L, tau)| / |Omega_s(0, tau)|."""
    inp = np.abs(fields.signal[:, 0])
    if np.any(inp == 0):
        raise ZeroFieldError("input signal vanishes inside the window; gain is undefined there")
    return np.abs(fields.signal[:, -1]) / inp


def peak_gain(trace, guard: int = 1) -> float:
    """Maximum gain after skipping ``guard`` leading samples (the switch-on edge).

    ``trace`` is a ``FieldGrid`` or an already computed gain series.
    """
    gain = gain_trace(trace) if isinstance(trace, FieldGrid) else np.asarray(trace)
    if len(gain) <= guard:
        raise ParameterError("trace is shorter than the guard window")
    return float(np.max(gain[guard:]))
