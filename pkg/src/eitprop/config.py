"""Run manifests: TOML text <-> validated ``RunManifest``.

Every dimensional key carries its unit in the name. Accepted suffixes:
``_gamma`` (multiples of the decay rate), ``_over_gamma`` (times in 1/Gamma),
``_hz`` (cycles per second, multiplied by 2 pi), ``_rad_s``, ``_m``, ``_m3``,
``_k``, ``_kg`` and ``_cm`` (dipole moment in C m).

A manifest either names a preset (``scenario = "fig3a"``) and overrides some
of its values, or describes a scenario inline (``name`` and ``scheme`` plus
enough of [atom] and [drive] to build one).
"""

from __future__ import annotations

import difflib
import math
import re
from dataclasses import dataclass, replace
from pathlib import Path

import tomli
import tomli_w

from .doppler import SCHEMES as QUADRATURES
from .drive import PREPARATIONS, SHAPES, DriveProtocol, Envelope
from .errors import ConfigError, EitPropError
from .propagation import PropagationGrid
from .response import AtomSpec, calibrate_od, resonant_od
from .scenarios import PIPELINES, REGISTRY, DopplerSettings, ScenarioConfig, preset

SWEEP_AXES = ("od", "omega_c_gamma", "dephasing_gamma", "temperature_k")

# quantity -> accepted unit suffixes, per section
_RATE = ("gamma", "hz", "rad_s")
_UNITS = {
    "atom": {
        "od": None,
        "gamma": ("hz", "rad_s"),
        "dephasing": _RATE,
        "branching_31": None,
        "density": ("m3",),
        "length": ("m",),
        "dipole": ("cm",),
        "wavelength": ("m",),
        "mass": ("kg",),
        "control_coupling": None,
    },
    "drive": {
        "omega_s": _RATE,
        "omega_c": _RATE,
        "delta_s": _RATE,
        "delta_c": _RATE,
        "signal_shape": None,
        "control_shape": None,
        "signal_t_on": ("over_gamma",),
        "control_t_on": ("over_gamma",),
        "signal_rise": ("over_gamma",),
        "control_rise": ("over_gamma",),
        "preparation": None,
        "control_frozen": None,
    },
    "grid": {
        "n_zeta": None,
        "dtau": ("over_gamma",),
        "tau_max": ("over_gamma",),
        "sample_dtau": ("over_gamma",),
    },
    "doppler": {
        "enabled": None,
        "temperature": ("k",),
        "nodes": None,
        "truncation": None,
        "scheme": None,
        "spacing": ("gamma",),
    },
    "output": {
        "directory": None,
        "fields": None,
        "check_convergence": None,
        "jobs": None,
        "spectrum_start": ("gamma",),
        "spectrum_stop": ("gamma",),
        "spectrum_points": None,
    },
}
_TOP = ("scenario", "name", "scheme", "pipelines")
_SYNONYMS = (("probe", "s"), ("signal", "s"), ("coupling", "c"), ("pump", "c"))


def _allowed(section: str) -> dict:
    """Full key -> (quantity, unit) for ``section``."""
    out = {}
    for quantity, units in _UNITS[section].items():
        if units is None:
            out[quantity] = (quantity, None)
        else:
            for unit in units:
                out[f"{quantity}_{unit}"] = (quantity, unit)
    return out


@dataclass(frozen=True)
class RunManifest:
    config: ScenarioConfig
    pipelines: tuple
    base: str | None = None
    output_dir: str | None = None
    write_fields: bool = False
    check_convergence: bool = False
    jobs: int | None = None
    sweep: tuple | None = None  # (axis, ascending values)


# ---------------------------------------------------------------------------
# parsing


def _line_of(text: str, section: str | None, key: str) -> int | None:
    current = None
    pattern = re.compile(rf"^\s*[\"']?{re.escape(key)}[\"']?\s*=")
    for n, line in enumerate(text.splitlines(), 1):
        header = re.match(r"^\s*\[\s*([^\]]+?)\s*\]", line)
        if header:
            current = header.group(1)
            continue
        if current == section and pattern.match(line):
            return n
    return None


class _Reader:
    """Type-checked access to one parsed section, with locations for errors."""

    def __init__(self, text: str, section: str | None, table: dict):
        self.text = text
        self.section = section
        self.table = table

    def error(self, key: str, message: str) -> ConfigError:
        path = key if self.section is None else f"{self.section}.{key}"
        return ConfigError(message, line=_line_of(self.text, self.section, key), key_path=path)

    def number(self, key: str, *, positive=False, nonnegative=False) -> float:
        value = self.table[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(key, f"expected a number, got {type(value).__name__}")
        value = float(value)
        if not math.isfinite(value):
            raise self.error(key, "must be finite")
        if positive and not value > 0:
            raise self.error(key, f"must be > 0, got {value}")
        if nonnegative and value < 0:
            raise self.error(key, f"must be >= 0, got {value}")
        return value

    def complex_number(self, key: str) -> complex:
        value = self.table[key]
        if isinstance(value, list):
            if len(value) != 2 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise self.error(key, "complex values are written as [real, imag]")
            return complex(float(value[0]), float(value[1]))
        return complex(self.number(key))

    def integer(self, key: str, minimum: int) -> int:
        value = self.table[key]
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(key, f"expected an integer, got {type(value).__name__}")
        if value < minimum:
            raise self.error(key, f"must be >= {minimum}, got {value}")
        return value

    def boolean(self, key: str) -> bool:
        value = self.table[key]
        if not isinstance(value, bool):
            raise self.error(key, f"expected true or false, got {value!r}")
        return value

    def choice(self, key: str, options) -> str:
        value = self.table[key]
        if value not in options:
            raise self.error(key, f"expected one of {', '.join(map(str, options))}, got {value!r}")
        return value

    def string(self, key: str) -> str:
        value = self.table[key]
        if not isinstance(value, str) or not value:
            raise self.error(key, "expected a non-empty string")
        return value


def _suggest(key: str, section: str) -> str:
    normalised = key
    for old, new in _SYNONYMS:
        normalised = normalised.replace(old, new)
    quantities = list(_UNITS[section])
    keys = list(_allowed(section))
    for pool in (quantities, keys):
        hits = difflib.get_close_matches(normalised, pool, n=1, cutoff=0.6)
        if hits:
            return hits[0]
    return ""


def _check_keys(text: str, section: str, table: dict) -> dict:
    """Map the keys of ``table`` to (quantity, unit), rejecting unknown or unit-less ones."""
    allowed = _allowed(section)
    seen = {}
    for key in table:
        if key in allowed:
            quantity, unit = allowed[key]
            if quantity in seen:
                raise ConfigError(
                    f"{quantity} given twice ({seen[quantity]} and {key})",
                    line=_line_of(text, section, key),
                    key_path=f"{section}.{key}",
                )
            seen[quantity] = key
            continue
        line = _line_of(text, section, key)
        base = next((q for q, u in _UNITS[section].items() if u and (key == q or key.startswith(q + "_"))), None)
        if base is not None:
            units = ", ".join(f"_{u}" for u in _UNITS[section][base])
            raise ConfigError(
                f"{key!r} needs a unit suffix: one of {units}", line=line, key_path=f"{section}.{key}"
            )
        hint = _suggest(key, section)
        message = f"unknown key {key!r}"
        if hint:
            message += f"; did you mean {hint!r}?"
        raise ConfigError(message, line=line, key_path=f"{section}.{key}")
    return {allowed[k][0]: k for k in table}


def _rate_in_gamma(reader: _Reader, key: str, gamma: float) -> float:
    value = reader.number(key)
    if key.endswith("_gamma"):
        return value
    if key.endswith("_hz"):
        return 2 * math.pi * value / gamma
    return value / gamma


def _rate_in_rad_s(reader: _Reader, key: str, gamma: float, **kw) -> float:
    value = reader.number(key, **kw)
    if key.endswith("_gamma"):
        return value * gamma
    if key.endswith("_hz"):
        return 2 * math.pi * value
    return value


def _apply_atom(text, table, spec: AtomSpec | None, target_od: float | None, coupling: float):
    keys = _check_keys(text, "atom", table)
    r = _Reader(text, "atom", table)
    fields = {}
    if "gamma" in keys:
        k = keys["gamma"]
        value = r.number(k, positive=True)
        fields["gamma"] = 2 * math.pi * value if k.endswith("_hz") else value
    gamma = fields.get("gamma", spec.gamma if spec is not None else AtomSpec.__dataclass_fields__["gamma"].default)
    if "dephasing" in keys:
        fields["dephasing"] = _rate_in_rad_s(r, keys["dephasing"], gamma, nonnegative=True)
    for quantity, positive in (("density", True), ("length", True), ("dipole", True), ("wavelength", True), ("mass", True)):
        if quantity in keys:
            fields[quantity] = r.number(keys[quantity], positive=positive)
    if "branching_31" in keys:
        value = r.number("branching_31")
        if not 0 <= value <= 1:
            raise r.error("branching_31", f"must lie in [0, 1], got {value}")
        fields["branching_31"] = value
    if "control_coupling" in keys:
        coupling = r.number("control_coupling", nonnegative=True)

    try:
        if spec is None:
            missing = [q for q in ("density", "length") if q not in fields]
            if missing:
                raise ConfigError(
                    f"inline scenarios need atom.{missing[0]}", key_path=f"atom.{missing[0]}"
                )
            spec = AtomSpec(**fields)
        else:
            spec = replace(spec, **fields)
    except EitPropError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err), key_path="atom") from err

    if "od" in keys:
        od = r.number("od", positive=True)
        spec = calibrate_od(spec, od)
        target_od = od
    elif target_od is None or fields:
        # without an explicit od the sample parameters decide it
        target_od = resonant_od(spec)
    return spec, target_od, coupling


def _apply_drive(text, table, drive: DriveProtocol | None, scheme: str, gamma: float, frozen: bool):
    keys = _check_keys(text, "drive", table)
    r = _Reader(text, "drive", table)

    def amplitude(quantity, current):
        if quantity not in keys:
            return current
        key = keys[quantity]
        value = r.complex_number(key)
        if key.endswith("_hz"):
            return value * 2 * math.pi / gamma
        if key.endswith("_rad_s"):
            return value / gamma
        return value

    def envelope(prefix, quantity, current: Envelope | None, default_shape):
        amp = amplitude(quantity, None if current is None else current.amplitude)
        if amp is None:
            return None
        base = current or Envelope(amp, default_shape)
        shape = r.choice(f"{prefix}_shape", SHAPES) if f"{prefix}_shape" in keys else base.shape
        t_on = r.number(f"{prefix}_t_on_over_gamma") if f"{prefix}_t_on" in keys else base.t_on
        rise = r.number(f"{prefix}_rise_over_gamma", nonnegative=True) if f"{prefix}_rise" in keys else base.rise
        try:
            return Envelope(amp, shape, t_on, rise)
        except EitPropError as err:
            raise r.error(f"{prefix}_shape" if f"{prefix}_shape" in keys else keys.get(quantity, prefix), str(err)) from err

    signal = envelope("signal", "omega_s", None if drive is None else drive.signal, "step")
    if signal is None:
        raise ConfigError("drive.omega_s is required", key_path="drive.omega_s")
    control = None
    if scheme == "lambda":
        control = envelope("control", "omega_c", None if drive is None else drive.control, "step")
        if control is None:
            raise ConfigError("a lambda scheme needs drive.omega_c", key_path="drive.omega_c")
    else:
        for quantity in ("omega_c", "delta_c", "control_shape", "control_t_on", "control_rise", "control_frozen"):
            if quantity in keys:
                raise r.error(keys[quantity], "two-level scenarios have no control field")

    def detuning(quantity, current):
        return _rate_in_gamma(r, keys[quantity], gamma) if quantity in keys else current

    delta_s = detuning("delta_s", 0.0 if drive is None else drive.delta_s)
    delta_c = detuning("delta_c", 0.0 if drive is None else drive.delta_c)
    preparation = r.choice("preparation", PREPARATIONS) if "preparation" in keys else (
        "ground" if drive is None else drive.preparation
    )
    if "control_frozen" in keys:
        frozen = r.boolean("control_frozen")
    return DriveProtocol(signal, control, delta_s, delta_c, preparation), frozen


def _apply_grid(text, table, grid: PropagationGrid) -> PropagationGrid:
    keys = _check_keys(text, "grid", table)
    r = _Reader(text, "grid", table)
    fields = {}
    if "n_zeta" in keys:
        fields["n_zeta"] = r.integer("n_zeta", 2)
    for quantity in ("dtau", "tau_max", "sample_dtau"):
        if quantity in keys:
            fields[quantity] = r.number(keys[quantity], positive=True)
    try:
        return replace(grid, **fields)
    except EitPropError as err:
        raise ConfigError(str(err), key_path="grid") from err


def _apply_doppler(text, table, current: DopplerSettings | None) -> DopplerSettings | None:
    keys = _check_keys(text, "doppler", table)
    r = _Reader(text, "doppler", table)
    if "enabled" in keys and not r.boolean("enabled"):
        extra = [k for k in table if k != "enabled"]
        if extra:
            raise r.error(extra[0], "doppler settings given while doppler.enabled = false")
        return None
    fields = {}
    if "temperature" in keys:
        fields["temperature"] = r.number("temperature_k", positive=True)
    if "nodes" in keys:
        value = table["nodes"]
        fields["nodes"] = None if value == "auto" else r.integer("nodes", 3)
    if "truncation" in keys:
        fields["truncation"] = r.number("truncation", positive=True)
    if "scheme" in keys:
        fields["scheme"] = r.choice("scheme", QUADRATURES)
    if "spacing" in keys:
        fields["spacing"] = r.number("spacing_gamma", positive=True)
    if current is None:
        if "temperature" not in fields:
            if not table:
                return None
            raise ConfigError("doppler.temperature_k is required", key_path="doppler.temperature_k")
        return DopplerSettings(**fields)
    return replace(current, **fields)


def _parse_sweep(text, table) -> tuple:
    if len(table) != 1:
        raise ConfigError(
            f"sweeps take exactly one axis, got {len(table)} ({', '.join(table) or 'none'}); "
            "multi-axis sweeps are not supported",
            line=_line_of(text, None, "sweep") or _header_line(text, "sweep"),
            key_path="sweep",
        )
    (axis, values), = table.items()
    r = _Reader(text, "sweep", table)
    if axis not in SWEEP_AXES:
        hint = difflib.get_close_matches(axis, SWEEP_AXES, n=1)
        message = f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}"
        if hint:
            message += f" (did you mean {hint[0]!r}?)"
        raise r.error(axis, message)
    if not isinstance(values, list) or not values:
        raise r.error(axis, "sweep values must be a non-empty list")
    nums = []
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise r.error(axis, f"sweep values must be finite numbers, got {v!r}")
        nums.append(float(v))
    if len(set(nums)) != len(nums):
        raise r.error(axis, "sweep values must be distinct")
    return axis, tuple(sorted(nums))


def _header_line(text, section):
    for n, line in enumerate(text.splitlines(), 1):
        if re.match(rf"^\s*\[\s*{re.escape(section)}\s*\]", line):
            return n
    return None


def parse_config(text: str) -> RunManifest:
    """Parse and validate manifest text. Raises ``ConfigError`` on any problem."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ConfigError(f"syntax error: {err}", line=getattr(err, "lineno", None)) from None

    sections = set(_UNITS) | {"sweep"}
    for key, value in data.items():
        if key in _TOP:
            continue
        if key in sections:
            if not isinstance(value, dict):
                raise ConfigError(f"[{key}] must be a table", line=_line_of(text, None, key), key_path=key)
            continue
        pool = list(_TOP) + sorted(sections)
        hint = difflib.get_close_matches(key, pool, n=1)
        message = f"unknown key {key!r}" + (f"; did you mean {hint[0]!r}?" if hint else "")
        raise ConfigError(message, line=_line_of(text, None, key) or _header_line(text, key), key_path=key)

    top = _Reader(text, None, data)
    base = None
    if "scenario" in data:
        base = top.string("scenario")
        if base not in REGISTRY:
            hint = difflib.get_close_matches(base, list(REGISTRY), n=1)
            raise top.error(
                "scenario",
                f"unknown scenario {base!r}" + (f"; did you mean {hint[0]!r}?" if hint else "")
                + f" (available: {', '.join(REGISTRY)})",
            )
        cfg = preset(base)
        name = top.string("name") if "name" in data else cfg.name
        scheme = cfg.scheme
        if "scheme" in data and data["scheme"] != scheme:
            raise top.error("scheme", f"scenario {base!r} is a {scheme} scenario")
        spec, drive, target_od, grid = cfg.spec, cfg.drive, cfg.target_od, cfg.grid
        doppler, frozen, coupling = cfg.doppler, cfg.control_frozen, cfg.control_coupling
        spectrum, notes = cfg.spectrum, cfg.notes
    else:
        if "name" not in data:
            raise ConfigError("give either 'scenario' (a preset) or an inline 'name' and 'scheme'", key_path="name")
        name = top.string("name")
        if "scheme" not in data:
            raise ConfigError("inline scenarios need 'scheme'", key_path="scheme")
        scheme = top.choice("scheme", ("two-level", "lambda"))
        spec = drive = target_od = doppler = spectrum = None
        grid = PropagationGrid()
        frozen, coupling, notes = False, 1.0, ()

    spec, target_od, coupling = _apply_atom(text, data.get("atom", {}), spec, target_od, coupling)
    drive, frozen = _apply_drive(text, data.get("drive", {}), drive, scheme, spec.gamma, frozen)
    grid = _apply_grid(text, data.get("grid", {}), grid)
    doppler = _apply_doppler(text, data.get("doppler", {}), doppler)

    out_table = data.get("output", {})
    out_keys = _check_keys(text, "output", out_table)
    out = _Reader(text, "output", out_table)
    output_dir = out.string("directory") if "directory" in out_keys else None
    write_fields = out.boolean("fields") if "fields" in out_keys else False
    check_convergence = out.boolean("check_convergence") if "check_convergence" in out_keys else False
    jobs = out.integer("jobs", 1) if "jobs" in out_keys else None
    spec_keys = [q for q in ("spectrum_start", "spectrum_stop", "spectrum_points") if q in out_keys]
    if spec_keys:
        if len(spec_keys) != 3:
            missing = {"spectrum_start", "spectrum_stop", "spectrum_points"} - set(spec_keys)
            raise ConfigError(f"spectrum needs start, stop and points; missing {sorted(missing)}", key_path="output")
        first = out.number("spectrum_start_gamma")
        last = out.number("spectrum_stop_gamma")
        points = out.integer("spectrum_points", 2)
        if not last > first:
            raise out.error("spectrum_stop_gamma", "must exceed spectrum_start_gamma")
        spectrum = (first, last, points)

    if "pipelines" in data:
        raw = data["pipelines"]
        raw = [raw] if isinstance(raw, str) else raw
        if not isinstance(raw, list) or not raw:
            raise top.error("pipelines", "expected a pipeline name or a non-empty list of them")
        for p in raw:
            if p not in PIPELINES:
                raise top.error("pipelines", f"unknown pipeline {p!r}; expected one of {', '.join(PIPELINES)}")
        if len(set(raw)) != len(raw):
            raise top.error("pipelines", "pipelines are listed more than once")
        pipelines = tuple(raw)
    elif base is not None:
        pipelines = (cfg.pipeline,)
    else:
        pipelines = ("doppler-obe",) if doppler is not None else ("obe",)

    if any(p.startswith("doppler") for p in pipelines) and doppler is None:
        raise ConfigError("doppler pipelines need a [doppler] section with temperature_k", key_path="doppler")

    sweep = _parse_sweep(text, data["sweep"]) if "sweep" in data else None
    if sweep is not None and sweep[0] == "temperature_k" and doppler is None:
        raise ConfigError("a temperature sweep needs Doppler settings", key_path="sweep.temperature_k")
    if sweep is not None and sweep[0] == "omega_c_gamma" and scheme != "lambda":
        raise ConfigError("omega_c sweeps need a lambda scheme", key_path="sweep.omega_c_gamma")

    try:
        config = ScenarioConfig(
            name=name,
            spec=spec,
            drive=drive,
            target_od=target_od,
            pipeline=pipelines[0],
            grid=grid,
            doppler=doppler,
            control_frozen=frozen,
            control_coupling=coupling,
            spectrum=spectrum,
            notes=notes,
        )
    except EitPropError as err:
        raise ConfigError(str(err)) from err
    return RunManifest(
        config=config,
        pipelines=pipelines,
        base=base,
        output_dir=output_dir,
        write_fields=write_fields,
        check_convergence=check_convergence,
        jobs=jobs,
        sweep=sweep,
    )


def load_config(path) -> RunManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    return parse_config(text)


# ---------------------------------------------------------------------------
# emission


def _amplitude(value: complex):
    value = complex(value)
    return value.real if value.imag == 0 else [value.real, value.imag]


def manifest_to_dict(manifest: RunManifest) -> dict:
    """Fully explicit dictionary form; values use the exact internal units."""
    cfg = manifest.config
    spec, drive = cfg.spec, cfg.drive
    data = {}
    if manifest.base is not None:
        data["scenario"] = manifest.base
    data["name"] = cfg.name
    data["scheme"] = cfg.scheme
    data["pipelines"] = list(manifest.pipelines)
    data["atom"] = {
        "od": cfg.target_od,
        "gamma_rad_s": spec.gamma,
        "dephasing_rad_s": spec.dephasing,
        "branching_31": spec.branching_31,
        "density_m3": spec.density,
        "length_m": spec.length,
        "dipole_cm": spec.dipole,
        "wavelength_m": spec.wavelength,
        "mass_kg": spec.mass,
        "control_coupling": cfg.control_coupling,
    }
    drv = {
        "omega_s_gamma": _amplitude(drive.signal.amplitude),
        "signal_shape": drive.signal.shape,
        "signal_t_on_over_gamma": drive.signal.t_on,
        "signal_rise_over_gamma": drive.signal.rise,
        "delta_s_gamma": drive.delta_s,
        "preparation": drive.preparation,
    }
    if drive.control is not None:
        drv.update(
            {
                "omega_c_gamma": _amplitude(drive.control.amplitude),
                "control_shape": drive.control.shape,
                "control_t_on_over_gamma": drive.control.t_on,
                "control_rise_over_gamma": drive.control.rise,
                "delta_c_gamma": drive.delta_c,
                "control_frozen": cfg.control_frozen,
            }
        )
    data["drive"] = drv
    data["grid"] = {
        "n_zeta": cfg.grid.n_zeta,
        "dtau_over_gamma": cfg.grid.dtau,
        "tau_max_over_gamma": cfg.grid.tau_max,
        "sample_dtau_over_gamma": cfg.grid.sample_dtau,
    }
    if cfg.doppler is None:
        data["doppler"] = {"enabled": False}
    else:
        ds = cfg.doppler
        data["doppler"] = {
            "enabled": True,
            "temperature_k": ds.temperature,
            "nodes": "auto" if ds.nodes is None else ds.nodes,
            "truncation": ds.truncation,
            "scheme": ds.scheme,
            "spacing_gamma": ds.spacing,
        }
    out = {"fields": manifest.write_fields, "check_convergence": manifest.check_convergence}
    if manifest.output_dir is not None:
        out["directory"] = manifest.output_dir
    if manifest.jobs is not None:
        out["jobs"] = manifest.jobs
    if cfg.spectrum is not None:
        first, last, points = cfg.spectrum
        out.update(spectrum_start_gamma=first, spectrum_stop_gamma=last, spectrum_points=int(points))
    data["output"] = out
    if manifest.sweep is not None:
        axis, values = manifest.sweep
        data["sweep"] = {axis: list(values)}
    return data


def emit_dict(data: dict) -> str:
    return tomli_w.dumps(data)


def emit_config(manifest: RunManifest) -> str:
    """TOML text that parses back to an equal manifest."""
    return emit_dict(manifest_to_dict(manifest))
