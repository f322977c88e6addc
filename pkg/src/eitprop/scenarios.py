"""Named parameter sets for the two-level, cold Lambda and warm-vapour studies, and a uniform way to run them."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import doppler
from .drive import DriveProtocol, Envelope
from .errors import EitPropError, ParameterError, ScenarioError
from .propagation import FieldGrid, PropagationGrid, gain_trace, peak_gain, propagate
from .response import DEFAULT_GAMMA, AtomSpec, calibrate_od, obe_transmission_trace, resonant_od

PIPELINES = ("obe", "mbe", "doppler-obe", "doppler-mbe")
GUARD = 1


@dataclass(frozen=True)
class DopplerSettings:
    """Thermal sample. With ``nodes=None`` the uniform rule is sized for a Doppler-shift spacing of ``spacing`` Gamma."""

    temperature: float  # K
    nodes: int | None = None
    truncation: float = 6.0
    scheme: str = "uniform"
    spacing: float = 0.25


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    spec: AtomSpec
    drive: DriveProtocol
    target_od: float
    pipeline: str = "obe"
    grid: PropagationGrid = PropagationGrid()
    doppler: DopplerSettings | None = None
    control_frozen: bool = False
    control_coupling: float = 1.0
    spectrum: tuple | None = None  # (first, last, count) two-photon detunings in Gamma
    notes: tuple = ()  # (field, note) pairs recording where each value comes from

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ParameterError(f"unknown pipeline {self.pipeline!r}; expected one of {PIPELINES}")
        if self.pipeline.startswith("doppler") and self.doppler is None:
            raise ParameterError(f"pipeline {self.pipeline!r} needs Doppler settings")
        od = resonant_od(self.spec)
        if abs(od - self.target_od) > 1e-9 * max(1.0, self.target_od):
            raise ParameterError(f"atom parameters give OD {od:.12g}, not the target {self.target_od}")

    @property
    def scheme(self) -> str:
        return self.drive.scheme

    def with_pipeline(self, pipeline: str) -> "ScenarioConfig":
        return replace(self, pipeline=pipeline)

    def with_od(self, od: float) -> "ScenarioConfig":
        return replace(self, spec=calibrate_od(self.spec, od), target_od=od)

    def ensemble(self) -> doppler.VelocityEnsemble:
        if self.doppler is None:
            raise ParameterError(f"scenario {self.name!r} has no Doppler settings")
        ds = self.doppler
        n = ds.nodes
        if n is None:
            n = doppler.nodes_for_resolution(self.spec, ds.temperature, ds.truncation, ds.spacing)
        return doppler.build_ensemble(ds.temperature, self.spec.mass, n, ds.truncation, ds.scheme)

    def spectrum_grid(self) -> np.ndarray | None:
        if self.spectrum is None:
            return None
        first, last, count = self.spectrum
        return np.linspace(first, last, int(count))

    def to_dict(self) -> dict:
        def clean(obj):
            if isinstance(obj, complex):
                return [obj.real, obj.imag]
            if isinstance(obj, dict):
                return {k: clean(v) for k, v in obj.items()}
            if isinstance(obj, (list, tuple)):
                return [clean(v) for v in obj]
            return obj

        return clean(dataclasses.asdict(self))

    def config_hash(self) -> str:
        physics = self.to_dict()
        physics.pop("notes")
        blob = json.dumps(physics, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class RunResult:
    scenario: str
    pipeline: str
    scheme: str
    tau: np.ndarray
    transmission: np.ndarray
    gain: np.ndarray
    peak_gain: float
    steady_transmission: float
    config_hash: str
    fields: FieldGrid | None = None
    spectrum: doppler.Spectrum | None = None
    extras: dict = field(default_factory=dict)


class ScenarioRunError(EitPropError):
    """A module error re-raised with the scenario and pipeline that produced it."""

    def __init__(self, message, cause: EitPropError):
        super().__init__(message)
        self.category = cause.category
        for key, value in vars(cause).items():
            if not key.startswith("_"):
                setattr(self, key, value)


def run(config: ScenarioConfig, pipeline: str | None = None) -> RunResult:
    """Run ``config`` through its pipeline (or ``pipeline`` if given)."""
    if pipeline is not None:
        config = config.with_pipeline(pipeline)
    try:
        return _run(config)
    except EitPropError as err:
        raise ScenarioRunError(f"scenario {config.name!r} [{config.pipeline}]: {err}", err) from err


def _run(config: ScenarioConfig) -> RunResult:
    tau = config.grid.tau
    fields = None
    extras = {}
    if config.pipeline == "obe":
        trace = obe_transmission_trace(config.spec, config.drive, tau)
        gain, transmission = trace.gain, trace.transmission
    elif config.pipeline == "doppler-obe":
        trace = doppler.doppler_transient_obe(config.spec, config.drive, config.ensemble(), tau)
        gain, transmission = trace.gain, trace.transmission
    else:
        ens = config.ensemble() if config.pipeline == "doppler-mbe" else None
        prop = propagate(
            config.spec,
            config.drive,
            config.grid,
            control_frozen=config.control_frozen,
            ensemble=ens,
            control_coupling=config.control_coupling,
        )
        fields = prop.fields
        gain = gain_trace(fields)
        transmission = gain**2
        extras["stability"] = prop.stability

    spectrum = None
    grid = config.spectrum_grid()
    if grid is not None:
        ens = config.ensemble() if config.pipeline.startswith("doppler") else None
        spectrum = doppler.eit_spectrum(config.spec, config.drive, grid, ens)

    return RunResult(
        scenario=config.name,
        pipeline=config.pipeline,
        scheme=config.scheme,
        tau=tau,
        transmission=np.asarray(transmission, dtype=float),
        gain=np.asarray(gain, dtype=float),
        peak_gain=peak_gain(gain, GUARD),
        steady_transmission=float(transmission[-1]),
        config_hash=config.config_hash(),
        fields=fields,
        spectrum=spectrum,
        extras=extras,
    )


def ringing_amplitude(trace, guard: int = GUARD) -> float:
    """Largest |trace - final value| after the first local extremum."""
    y = np.asarray(trace, dtype=float)[guard:]
    dy = np.diff(y)
    turns = np.nonzero(np.sign(dy[1:]) * np.sign(dy[:-1]) < 0)[0]
    if turns.size == 0:
        return 0.0
    first = turns[0] + 1
    return float(np.max(np.abs(y[first + 1 :] - y[-1]))) if first + 1 < len(y) else 0.0


@dataclass(frozen=True)
class Comparison:
    a: str
    b: str
    peak_gain_ratio: float
    steady_transmission_difference: float
    ringing_a: float
    ringing_b: float
    ringing_ratio: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def compare(a: RunResult, b: RunResult) -> Comparison:
    """Peak-gain ratio a/b, steady-transmission difference a - b and ringing amplitudes."""
    if a.scheme != b.scheme:
        raise ParameterError(f"cannot compare a {a.scheme} run with a {b.scheme} run")
    gb = b.gain
    if len(a.tau) != len(b.tau) or not np.allclose(a.tau, b.tau):
        gb = np.interp(a.tau, b.tau, b.gain)
    ring_a = ringing_amplitude(a.gain)
    ring_b = ringing_amplitude(gb)
    if ring_b > 0:
        ratio = ring_a / ring_b
    else:
        ratio = 1.0 if ring_a == 0 else math.inf
    return Comparison(
        a=f"{a.scenario}/{a.pipeline}",
        b=f"{b.scenario}/{b.pipeline}",
        peak_gain_ratio=a.peak_gain / b.peak_gain,
        steady_transmission_difference=a.steady_transmission - b.steady_transmission,
        ringing_a=ring_a,
        ringing_b=ring_b,
        ringing_ratio=ratio,
    )


# ---------------------------------------------------------------------------
# registry

MOT_FIG1_DENSITY = 5e16  # atoms / m^3
MOT_FIG1_LENGTH = 1.0e-3
MOT_FIG3_DIAMETER = 1.2e-3
VAPOUR_LENGTH = 0.025
VAPOUR_TEMPERATURE = 273.15 + 60.0
VAPOUR_DENSITY = 1e17  # placeholder; only the calibrated OD enters the physics
VAPOUR_OD = 2.6


def sphere_density(atoms: float, diameter: float) -> float:
    return atoms / (4.0 / 3.0 * math.pi * (diameter / 2) ** 3)


def _two_level(name, omega, od, notes):
    spec = calibrate_od(AtomSpec(density=MOT_FIG1_DENSITY, length=MOT_FIG1_LENGTH), od)
    return ScenarioConfig(
        name=name,
        spec=spec,
        drive=DriveProtocol(signal=Envelope(omega, "step")),
        target_od=od,
        pipeline="obe",
        grid=PropagationGrid(n_zeta=200, dtau=0.005, tau_max=30.0),
        notes=notes,
    )


def _lambda(name, *, od, density, length, omega_c, dephasing, omega_s=0.1, pipeline="mbe", **kw):
    spec = calibrate_od(AtomSpec(density=density, length=length, dephasing=dephasing * DEFAULT_GAMMA), od)
    drive = DriveProtocol(
        signal=Envelope(omega_s, "constant"),
        control=Envelope(omega_c, "step"),
        preparation="pumped",
    )
    return ScenarioConfig(name=name, spec=spec, drive=drive, target_od=od, pipeline=pipeline, **kw)


_FIG1_NOTES = (
    ("omega", "given: 0.02 Gamma weak, 2 Gamma strong"),
    ("density", "given: 5e16 atoms/m^3 in a 1 mm cloud"),
    ("od", "two reported values, 2.0 and 5.5; both kept as presets"),
)
_FIG3_NOTES = (
    ("gamma", "given: 2 pi x 5.86 MHz"),
    ("omega_c, omega_s, dephasing", "given: 1.6, 0.1, 0.3 Gamma"),
    ("geometry", "1.2 mm sphere treated as a 1.2 mm slab"),
    ("preparation", "signal applied first (atoms pumped to |2>), control stepped on at t = 0"),
)
_VAPOUR_NOTES = (
    ("cell", "2.5 cm Rb cell at 60 C"),
    ("od", f"not given; OD {VAPOUR_OD} assumed (stationary-atom resonant OD)"),
    ("omega_s", "not given; 0.1 Gamma as in the cold-atom runs"),
)


def _fig1a():
    return _two_level("fig1a", 0.02, 2.0, _FIG1_NOTES)


def _fig1a_55():
    return _two_level("fig1a-od5.5", 0.02, 5.5, _FIG1_NOTES)


def _fig1b():
    return _two_level("fig1b", 2.0, 2.0, _FIG1_NOTES)


def _fig1b_55():
    return _two_level("fig1b-od5.5", 2.0, 5.5, _FIG1_NOTES)


def _fig3(name, atoms, od):
    return _lambda(
        name,
        od=od,
        density=sphere_density(atoms, MOT_FIG3_DIAMETER),
        length=MOT_FIG3_DIAMETER,
        omega_c=1.6,
        dephasing=0.3,
        notes=_FIG3_NOTES + (("atoms, od", f"{atoms:.3g} atoms, OD {od}"),),
    )


def _fig3a():
    return _fig3("fig3a", 2e6, 1.2)


def _fig3b():
    return _fig3("fig3b", 12e6, 2.6)


def _od8():
    cfg = _fig3("od8", 12e6, 8.0)
    return replace(cfg, notes=cfg.notes + (("fields, dephasing", "not given for the OD 8 cloud; low-OD cloud values reused"),))


def _fig4a():
    return _lambda(
        "fig4a",
        od=VAPOUR_OD,
        density=VAPOUR_DENSITY,
        length=VAPOUR_LENGTH,
        omega_c=2.0,
        dephasing=0.001,
        pipeline="obe",
        notes=_VAPOUR_NOTES + (("velocity class", "single stationary class; shift detunings to probe others"),),
    )


def _fig4b(cold=False):
    return _lambda(
        "fig4b-cold" if cold else "fig4b",
        od=VAPOUR_OD,
        density=VAPOUR_DENSITY,
        length=VAPOUR_LENGTH,
        omega_c=15.0,
        dephasing=0.001,
        pipeline="obe" if cold else "doppler-obe",
        doppler=None if cold else DopplerSettings(VAPOUR_TEMPERATURE),
        spectrum=(-10.0, 10.0, 201),
        notes=_VAPOUR_NOTES + (("omega_c", "given: 15 Gamma"), ("dephasing", "not given; 0.001 Gamma as in the fig5 preset")),
    )


def _fig5(cold=False):
    return _lambda(
        "fig5-cold" if cold else "fig5",
        od=VAPOUR_OD,
        density=VAPOUR_DENSITY,
        length=VAPOUR_LENGTH,
        omega_c=2.0,
        dephasing=0.001,
        pipeline="obe" if cold else "doppler-obe",
        doppler=None if cold else DopplerSettings(VAPOUR_TEMPERATURE),
        notes=_VAPOUR_NOTES + (("omega_c, dephasing, detunings", "given: 2 Gamma, 0.001 Gamma, 0"),),
    )


REGISTRY = {
    "fig1a": _fig1a,
    "fig1a-od5.5": _fig1a_55,
    "fig1b": _fig1b,
    "fig1b-od5.5": _fig1b_55,
    "fig3a": _fig3a,
    "fig3b": _fig3b,
    "od8": _od8,
    "fig4a": _fig4a,
    "fig4b": _fig4b,
    "fig4b-cold": lambda: _fig4b(cold=True),
    "fig5": _fig5,
    "fig5-cold": lambda: _fig5(cold=True),
}

COLD_COUNTERPART = {"fig4b": "fig4b-cold", "fig5": "fig5-cold"}


def preset(name: str) -> ScenarioConfig:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ScenarioError(f"unknown scenario {name!r}; available: {', '.join(REGISTRY)}") from None
    return factory()
