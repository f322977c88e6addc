"""Command-line front end: ``eitprop run | sweep | check | list-presets``."""

from __future__ import annotations

import argparse
import csv
import json
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunManifest, emit_dict, load_config, manifest_to_dict, parse_config
from .errors import ConfigError, EitPropError, OutputError
from .scenarios import REGISTRY, RunResult, compare, preset, run

OUTPUT_ENV = "EITPROP_OUTPUT_DIR"
DEFAULT_OUTPUT = "eitprop-output"
CONVERGENCE_TOLERANCE = 5e-3

EXIT_CODES = {"config": 2, "parameter": 3, "scenario": 4, "compute": 5, "io": 6}


def fmt(x: float) -> str:
    return "%.17g" % x


# ---------------------------------------------------------------------------
# execution


@dataclass(frozen=True)
class Execution:
    exit_code: int
    files: tuple
    summary: dict


def refined_config(config):
    """Same scenario on a finer lattice and, for thermal samples, a denser velocity rule."""
    cfg = replace(config, grid=config.grid.refined())
    if cfg.doppler is not None:
        ds = cfg.doppler
        denser = replace(ds, spacing=ds.spacing / 2) if ds.nodes is None else replace(ds, nodes=2 * ds.nodes - 1)
        cfg = replace(cfg, doppler=denser)
    return cfg


def convergence_delta(result: RunResult, config) -> float:
    """Largest relative change of the gain trace under ``refined_config``."""
    fine = run(refined_config(config), result.pipeline)
    return float(np.max(np.abs(result.gain - fine.gain) / np.abs(fine.gain)))


def _write_trace(path: Path, result: RunResult):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau_over_gamma", "transmission", "gain"])
        for row in zip(result.tau, result.transmission, result.gain):
            w.writerow([fmt(v) for v in row])


def _write_fields(path: Path, result: RunResult):
    f = result.fields
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["zeta_m", "tau_over_gamma", "re_omega_s", "im_omega_s", "re_omega_c", "im_omega_c"])
        for i, tau in enumerate(f.tau):
            for j, zeta in enumerate(f.zeta):
                s = f.signal[i, j]
                c = f.control[i, j] if f.control is not None else 0j
                w.writerow([fmt(zeta), fmt(tau), fmt(s.real), fmt(s.imag), fmt(c.real), fmt(c.imag)])


def _write_spectrum(path: Path, result: RunResult):
    s = result.spectrum
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta_over_gamma", "re_chi", "im_chi"])
        for d, chi in zip(s.detuning, s.chi):
            w.writerow([fmt(d), fmt(chi.real), fmt(chi.imag)])


def _finite(record: dict) -> dict:
    """JSON has no inf/nan; undefined ratios become null."""
    return {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in record.items()}


def _summary_entry(result: RunResult) -> dict:
    return {
        "pipeline": result.pipeline,
        "peak_gain": result.peak_gain,
        "steady_transmission": result.steady_transmission,
        "config_hash": result.config_hash,
    }


def _output_dir(manifest: RunManifest, override=None) -> Path:
    chosen = override or manifest.output_dir or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT
    return Path(chosen)


def _prepare_dir(path: Path):
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OutputError(f"cannot create output directory {path}: {err.strerror}") from None
    if not os.access(path, os.W_OK):
        raise OutputError(f"output directory {path} is not writable")


def _commit(staging: Path, target: Path, names) -> tuple:
    moved = []
    try:
        for name in names:
            os.replace(staging / name, target / name)
            moved.append(target / name)
    except OSError:
        for p in moved:
            p.unlink(missing_ok=True)
        raise
    return tuple(moved)


def execute(manifest: RunManifest, output_dir=None) -> Execution:
    """Run every pipeline of ``manifest`` and write traces plus a summary.

    Files are written to a staging directory and moved into place only when
    every pipeline has succeeded, so a failed run leaves nothing behind.
    """
    target = _output_dir(manifest, output_dir)
    _prepare_dir(target)
    cfg = manifest.config
    staging = Path(tempfile.mkdtemp(prefix=".eitprop-", dir=target))
    try:
        results = []
        names = []
        summary = {"scenario": cfg.name, "scheme": cfg.scheme, "runs": []}
        for pipeline in manifest.pipelines:
            config = cfg.with_pipeline(pipeline)
            result = run(config)
            results.append(result)
            entry = _summary_entry(result)
            if manifest.check_convergence:
                delta = convergence_delta(result, config)
                entry["convergence_delta"] = delta
                entry["grid_converged"] = delta < CONVERGENCE_TOLERANCE
            summary["runs"].append(entry)
            stem = f"{cfg.name}_{pipeline}"
            names.append(f"{stem}_trace.csv")
            _write_trace(staging / names[-1], result)
            if manifest.write_fields and result.fields is not None:
                names.append(f"{stem}_fields.csv")
                _write_fields(staging / names[-1], result)
            if result.spectrum is not None:
                names.append(f"{stem}_spectrum.csv")
                _write_spectrum(staging / names[-1], result)
        if len(results) > 1:
            summary["comparisons"] = [_finite(compare(results[0], b).as_dict()) for b in results[1:]]
        names.append(f"{cfg.name}_summary.json")
        (staging / names[-1]).write_text(json.dumps(summary, indent=2, sort_keys=True, allow_nan=False) + "\n")
        files = _commit(staging, target, names)
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return Execution(0, files, summary)


# ---------------------------------------------------------------------------
# sweeps


def apply_axis(config, axis: str, value: float):
    if axis == "od":
        return config.with_od(value)
    if axis == "omega_c_gamma":
        drive = config.drive
        return replace(config, drive=replace(drive, control=replace(drive.control, amplitude=value)))
    if axis == "dephasing_gamma":
        return replace(config, spec=replace(config.spec, dephasing=value * config.spec.gamma))
    if axis == "temperature_k":
        return replace(config, doppler=replace(config.doppler, temperature=value))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def _sweep_point(args):
    config, pipeline = args
    r = run(config, pipeline)
    return r.peak_gain, r.steady_transmission


def sweep(manifest: RunManifest, jobs: int | None = None) -> list:
    """Rows ``(value, pipeline, peak_gain, steady_transmission)`` in ascending value order.

    Points are independent runs; with more than one job they are spread over
    worker processes, and the row order never depends on completion order.
    """
    if manifest.sweep is None:
        raise ConfigError("manifest has no [sweep] section", key_path="sweep")
    axis, values = manifest.sweep
    points = [(v, p) for v in values for p in manifest.pipelines]
    tasks = [(apply_axis(manifest.config, axis, v), p) for v, p in points]
    jobs = min(jobs or manifest.jobs or os.cpu_count() or 1, len(tasks))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_sweep_point, tasks))
    else:
        outcomes = [_sweep_point(t) for t in tasks]
    return [(v, p, peak, steady) for (v, p), (peak, steady) in zip(points, outcomes)]


def write_sweep(manifest: RunManifest, rows, output_dir=None) -> Path:
    target = _output_dir(manifest, output_dir)
    _prepare_dir(target)
    axis = manifest.sweep[0]
    name = f"{manifest.config.name}_sweep_{axis}.csv"
    staging = Path(tempfile.mkdtemp(prefix=".eitprop-", dir=target))
    try:
        with (staging / name).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([axis, "pipeline", "peak_gain", "steady_transmission"])
            for value, pipeline, peak, steady in rows:
                w.writerow([fmt(value), pipeline, fmt(peak), fmt(steady)])
        (path,) = _commit(staging, target, [name])
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    return path


# ---------------------------------------------------------------------------
# command line


def _load(source: str) -> RunManifest:
    """A TOML path, or a bare preset name."""
    if Path(source).exists() or source.endswith(".toml"):
        return load_config(source)
    if source in REGISTRY:
        return parse_config(f'scenario = "{source}"\n')
    raise ConfigError(f"{source!r} is neither a config file nor a preset (see 'eitprop list-presets')")


def _report_error(err: Exception) -> int:
    category = getattr(err, "category", "compute")
    payload = {"error": category, "message": str(err)}
    for attr in ("line", "key_path", "suggested_n_zeta", "t_reached"):
        value = getattr(err, attr, None)
        if value is not None:
            payload[attr] = value
    print(json.dumps(payload), file=sys.stderr)
    return EXIT_CODES.get(category, 1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eitprop", description="Transient EIT: OBE, Maxwell-Bloch and Doppler runs")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a config file or preset")
    p_run.add_argument("config", help="TOML manifest or preset name")
    p_run.add_argument("--pipelines", help="comma-separated override, e.g. obe,mbe")
    p_run.add_argument("-o", "--output-dir", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    p_run.add_argument("--check-convergence", action="store_true", help="rerun on a refined grid and record the delta")
    p_run.add_argument("--fields", action="store_true", help="also write the full field grid")

    p_sweep = sub.add_parser("sweep", help="run a one-axis parameter sweep")
    p_sweep.add_argument("config")
    p_sweep.add_argument("-o", "--output-dir")
    p_sweep.add_argument("-j", "--jobs", type=int, help="worker processes (default: all cores)")

    p_check = sub.add_parser("check", help="validate a config without running it")
    p_check.add_argument("config")

    sub.add_parser("list-presets", help="list the built-in scenarios")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-presets":
            for name in REGISTRY:
                cfg = preset(name)
                print(f"{name:14s} {cfg.scheme:9s} {cfg.pipeline:12s} OD {cfg.target_od:g}")
            return 0
        manifest = _load(args.config)
        if args.command == "check":
            print(json.dumps({"ok": True, "scenario": manifest.config.name, "config_hash": manifest.config.config_hash()}))
            return 0
        if args.command == "run":
            if args.pipelines:
                text_pipes = tuple(p.strip() for p in args.pipelines.split(",") if p.strip())
                manifest = with_pipelines(manifest, text_pipes)
            if args.check_convergence or args.fields:
                manifest = replace(
                    manifest,
                    check_convergence=manifest.check_convergence or args.check_convergence,
                    write_fields=manifest.write_fields or args.fields,
                )
            result = execute(manifest, args.output_dir)
            for path in result.files:
                print(path)
            return result.exit_code
        rows = sweep(manifest, args.jobs)
        print(write_sweep(manifest, rows, args.output_dir))
        return 0
    except EitPropError as err:
        return _report_error(err)
    except OSError as err:
        return _report_error(OutputError(str(err)))


def with_pipelines(manifest: RunManifest, pipelines) -> RunManifest:
    """Swap the pipeline list, re-validating through the manifest schema."""
    data = manifest_to_dict(manifest)
    data["pipelines"] = list(pipelines)
    return parse_config(emit_dict(data))


if __name__ == "__main__":
    sys.exit(main())
