"""Rotating-frame Hamiltonians, Lindblad dynamics and steady states for 2- and 3-level atoms.

All rates, detunings and Rabi frequencies are in units of the excited-state
decay rate Gamma, and times in units of 1/Gamma.

Basis conventions:

* two-level atom: index 0 = |1> (ground), 1 = |2> (excited);
* Lambda atom: 0 = |1> (signal ground), 1 = |2> (control ground), 2 = |3> (excited).

A Rabi frequency multiplies the raising operator |e><g| and its conjugate the
lowering operator, so the optical coherence ``rho[e, g]`` is linear in the
complex field (not in its conjugate). This is the element used for the
susceptibility and as the propagation source term.

Superoperators act on row-major vectorised density matrices,
``vec(rho)[i*d + j] = rho[i, j]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .errors import DimensionError, IntegrationError, NoUniqueSteadyStateError, ParameterError

HamiltonianSource = Union[np.ndarray, Callable[[float], np.ndarray]]


def _finite(**values):
    for name, value in values.items():
        if not np.all(np.isfinite(np.asarray(value))):
            raise ParameterError(f"{name} must be finite, got {value!r}")


def projector(dim: int, i: int) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    out[i, i] = 1.0
    return out


def transition(dim: int, i: int, j: int) -> np.ndarray:
    """|i><j| in a ``dim``-level basis."""
    out = np.zeros((dim, dim), dtype=complex)
    out[i, j] = 1.0
    return out


def ground_state(dim: int, level: int = 0) -> np.ndarray:
    return projector(dim, level)


def two_level_hamiltonian(delta, omega) -> np.ndarray:
    """H/hbar = -(Delta |2><2| + Omega/2 |2><1| + Omega*/2 |1><2|).

    Broadcasts over array-valued ``delta`` / ``omega``; the result has shape
    ``broadcast_shape + (2, 2)``.
    """
    _finite(delta=delta, omega=omega)
    delta, omega = np.broadcast_arrays(np.asarray(delta, dtype=float), np.asarray(omega, dtype=complex))
    h = np.zeros(delta.shape + (2, 2), dtype=complex)
    h[..., 1, 1] = -delta
    h[..., 1, 0] = -omega / 2
    h[..., 0, 1] = -np.conj(omega) / 2
    return h


def lambda_hamiltonian(delta_s, delta_c, omega_s, omega_c) -> np.ndarray:
    """Lambda-system Hamiltonian with the two-photon detuning on |2><2|.

    H/hbar = -(delta |2><2| + Delta_s |3><3| + Omega_s/2 |3><1| + Omega_c/2 |3><2| + h.c.),
    delta = Delta_s - Delta_c.
    """
    _finite(delta_s=delta_s, delta_c=delta_c, omega_s=omega_s, omega_c=omega_c)
    ds, dc, os_, oc = np.broadcast_arrays(
        np.asarray(delta_s, dtype=float),
        np.asarray(delta_c, dtype=float),
        np.asarray(omega_s, dtype=complex),
        np.asarray(omega_c, dtype=complex),
    )
    h = np.zeros(ds.shape + (3, 3), dtype=complex)
    h[..., 1, 1] = -(ds - dc)
    h[..., 2, 2] = -ds
    h[..., 2, 0] = -os_ / 2
    h[..., 0, 2] = -np.conj(os_) / 2
    h[..., 2, 1] = -oc / 2
    h[..., 1, 2] = -np.conj(oc) / 2
    return h


@dataclass(frozen=True, eq=False)
class LindbladSet:
    """Jump operators with their (non-negative) rates."""

    operators: tuple
    rates: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(a, dtype=complex) for a in self.operators)
        rates = tuple(float(r) for r in self.rates)
        if len(ops) != len(rates):
            raise ParameterError("need one rate per jump operator")
        if any(not math.isfinite(r) or r < 0 for r in rates):
            raise ParameterError(f"rates must be finite and >= 0, got {rates}")
        dims = {a.shape for a in ops}
        if len(dims) > 1 or any(len(s) != 2 or s[0] != s[1] for s in dims):
            raise DimensionError(f"jump operators must be square and equal-sized, got {dims}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "rates", rates)

    @property
    def dim(self) -> int | None:
        return self.operators[0].shape[0] if self.operators else None

    @property
    def max_rate(self) -> float:
        return max(self.rates, default=0.0)

    def superoperator(self, dim: int | None = None) -> np.ndarray:
        d = self.dim if dim is None else dim
        eye = np.eye(d)
        out = np.zeros((d * d, d * d), dtype=complex)
        for a, rate in zip(self.operators, self.rates):
            ada = a.conj().T @ a
            out += rate * (np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T))
        return out

    def apply(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        for a, rate in zip(self.operators, self.rates):
            ad = a.conj().T
            ada = ad @ a
            out += rate * (a @ rho @ ad - 0.5 * (ada @ rho + rho @ ada))
        return out

    @classmethod
    def two_level(cls, gamma: float = 1.0) -> "LindbladSet":
        return cls((transition(2, 0, 1),), (gamma,))

    @classmethod
    def lambda_system(cls, gamma31: float = 0.5, gamma32: float = 0.5, dephasing: float = 0.0) -> "LindbladSet":
        """Spontaneous decay |3> -> |1>, |3> -> |2> and ground-state dephasing.

        Dephasing uses the jump operator |2><2| at rate 2*dephasing, which damps
        rho_12 at exactly ``dephasing`` and leaves populations alone.
        """
        return cls(
            (transition(3, 0, 2), transition(3, 1, 2), projector(3, 1)),
            (gamma31, gamma32, 2.0 * dephasing),
        )


def commutator_superoperator(h: np.ndarray) -> np.ndarray:
    """-i[H, .] as a matrix; broadcasts over leading axes of ``h``."""
    d = h.shape[-1]
    eye = np.eye(d)
    left = np.einsum("...ij,kl->...ikjl", h, eye).reshape(h.shape[:-2] + (d * d, d * d))
    right = np.einsum("ij,...lk->...ikjl", eye, h).reshape(h.shape[:-2] + (d * d, d * d))
    return -1j * (left - right)


def liouvillian(h: np.ndarray, lindblad: LindbladSet) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    d = h.shape[-1]
    if lindblad.dim is not None and lindblad.dim != d:
        raise DimensionError(f"Hamiltonian is {d}x{d} but jump operators are {lindblad.dim}x{lindblad.dim}")
    return commutator_superoperator(h) + lindblad.superoperator(d)


def lindblad_rhs(rho: np.ndarray, h: np.ndarray, lindblad: LindbladSet) -> np.ndarray:
    """d rho/dt = -i[H, rho] + sum_k rate_k (A rho A^+ - {A^+ A, rho}/2)."""
    rho = np.asarray(rho, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if rho.shape[-2:] != h.shape[-2:] or (lindblad.dim is not None and lindblad.dim != rho.shape[-1]):
        raise DimensionError(
            f"shape mismatch: rho {rho.shape[-2:]}, H {h.shape[-2:]}, jump operators dim {lindblad.dim}"
        )
    return -1j * (h @ rho - rho @ h) + lindblad.apply(rho)


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-integration settings (times in 1/Gamma).

    ``method``: ``"rk4"`` (fixed step ``step``), ``"adaptive"`` (embedded
    Dormand-Prince pair with error control) or ``"expm"`` (exact propagator,
    time-independent Hamiltonians only).
    """

    method: str = "rk4"
    atol: float = 1e-10
    rtol: float = 1e-8
    max_step: float = 0.1
    first_step: float | None = None
    step: float = 0.01

    def __post_init__(self):
        if self.method not in ("rk4", "adaptive", "expm"):
            raise ParameterError(f"unknown integration method {self.method!r}")
        if not (self.atol > 0 and self.rtol > 0):
            raise ParameterError("tolerances must be > 0")
        if not (self.max_step > 0 and self.step > 0):
            raise ParameterError("step sizes must be > 0")
        if self.first_step is not None and self.first_step <= 0:
            raise ParameterError("first_step must be > 0")


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, d, d)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def element(self, i: int, j: int) -> np.ndarray:
        return self.states[:, i, j]

    def populations(self) -> np.ndarray:
        return np.real(np.diagonal(self.states, axis1=1, axis2=2))


def rk4_step(f, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _substeps(span: float, step: float) -> int:
    return max(1, math.ceil(span / step - 1e-9))


def evolve(
    rho0: np.ndarray,
    hamiltonian: HamiltonianSource,
    lindblad: LindbladSet,
    t_span: Sequence[float],
    cfg: IntegratorConfig = IntegratorConfig(),
    t_eval: np.ndarray | None = None,
) -> Trajectory:
    """Integrate the master equation from ``t_span[0]`` to ``t_span[1]``.

    ``hamiltonian`` is a fixed matrix or a callable ``t -> H(t)``. States are
    sampled at ``t_eval`` (default: 201 uniform samples including both ends).
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ParameterError(f"need t_span[1] > t_span[0], got {t_span}")
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if rho0.shape != (d, d):
        raise DimensionError(f"rho0 must be square, got {rho0.shape}")
    if t_eval is None:
        t_eval = np.linspace(t0, t1, 201)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval[0] < t0 - 1e-12 or t_eval[-1] > t1 + 1e-12 or np.any(np.diff(t_eval) < 0):
        raise ParameterError("t_eval must be sorted and inside t_span")

    constant = not callable(hamiltonian)
    dissipator = lindblad.superoperator(d)
    if constant:
        h_const = np.asarray(hamiltonian, dtype=complex)
        if h_const.shape != (d, d):
            raise DimensionError(f"Hamiltonian shape {h_const.shape} does not match rho0 {rho0.shape}")
        l_const = liouvillian(h_const, lindblad)

        def superop(t):
            return l_const

    else:

        def superop(t):
            h = np.asarray(hamiltonian(t), dtype=complex)
            if h.shape != (d, d):
                raise DimensionError(f"H(t) shape {h.shape} does not match rho0 {rho0.shape}")
            return commutator_superoperator(h) + dissipator

    y0 = rho0.reshape(-1)

    if cfg.method == "expm":
        if not constant:
            raise ParameterError("the expm method needs a time-independent Hamiltonian")
        out = np.empty((len(t_eval), d * d), dtype=complex)
        y, t = y0, t0
        cache: dict[float, np.ndarray] = {}
        for i, te in enumerate(t_eval):
            dt = round(te - t, 14)
            if dt > 0:
                if dt not in cache:
                    cache[dt] = scipy.linalg.expm(l_const * dt)
                y = cache[dt] @ y
                t = te
            out[i] = y
        return Trajectory(t_eval, out.reshape(-1, d, d))

    if cfg.method == "adaptive":
        sol = solve_ivp(
            lambda t, y: superop(t) @ y,
            (t0, t1),
            y0,
            method="DOP853",
            t_eval=t_eval,
            rtol=cfg.rtol,
            atol=cfg.atol,
            max_step=cfg.max_step,
            first_step=cfg.first_step,
        )
        if sol.status != 0:
            raise IntegrationError(sol.message, float(sol.t[-1]) if sol.t.size else t0)
        return Trajectory(t_eval, sol.y.T.reshape(-1, d, d))

    def f(t, y):
        return superop(t) @ y

    out = np.empty((len(t_eval), d * d), dtype=complex)
    y, t = y0, t0
    for i, te in enumerate(t_eval):
        span = te - t
        if span > 0:
            n = _substeps(span, cfg.step)
            h = span / n
            for k in range(n):
                y = rk4_step(f, t + k * h, y, h)
            t = te
            if not np.all(np.isfinite(y)):
                raise IntegrationError("state became non-finite; reduce the RK4 step", t)
        out[i] = y
    return Trajectory(t_eval, out.reshape(-1, d, d))


def _null_space_dimension(l: np.ndarray, rel_tol: float = 1000 * np.finfo(float).eps) -> np.ndarray:
    s = np.linalg.svd(l, compute_uv=False)
    scale = np.maximum(s[..., :1], 1e-300)
    return np.sum(s < rel_tol * scale, axis=-1)


def steady_state(h: np.ndarray, lindblad: LindbladSet) -> np.ndarray:
    """Stationary state of the Lindbladian.

    Solves L vec(rho) = 0 with the first population equation replaced by
    tr(rho) = 1. Accepts a stack of Hamiltonians (``(..., d, d)``) and returns
    a matching stack of density matrices.
    """
    h = np.asarray(h, dtype=complex)
    d = h.shape[-1]
    l = liouvillian(h, lindblad)
    degenerate = _null_space_dimension(l) > 1
    if np.any(degenerate):
        raise NoUniqueSteadyStateError(
            f"stationary subspace is degenerate for {int(np.sum(degenerate))} of {degenerate.size} Hamiltonian(s)"
        )
    a = l.copy()
    a[..., 0, :] = np.eye(d).reshape(-1)
    b = np.zeros(l.shape[:-1], dtype=complex)
    b[..., 0] = 1.0
    rho = np.linalg.solve(a, b[..., None])[..., 0].reshape(h.shape)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    return rho


def random_density_matrix(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random full-rank state from a Ginibre matrix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
