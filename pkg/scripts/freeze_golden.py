"""Recompute the regression numbers in tests/golden/regression.json.

Only run this after reviewing why a frozen value moved; the test suite
compares fresh runs against this file.

    python scripts/freeze_golden.py
"""

import json
from pathlib import Path

from eitprop.config import parse_config
from eitprop.cli import sweep
from eitprop.scenarios import compare, preset, run

RUNS = [
    ("fig1a", "obe"),
    ("fig1a", "mbe"),
    ("fig1a-od5.5", "obe"),
    ("fig1b", "obe"),
    ("fig1b", "mbe"),
    ("fig1b-od5.5", "mbe"),
    ("fig3a", "obe"),
    ("fig3a", "mbe"),
    ("fig3b", "obe"),
    ("fig3b", "mbe"),
    ("od8", "obe"),
    ("od8", "mbe"),
    ("fig4a", "obe"),
    ("fig4b", "doppler-obe"),
    ("fig5", "doppler-obe"),
    ("fig5-cold", "obe"),
]

OUT = Path(__file__).resolve().parents[1] / "tests" / "golden" / "regression.json"


def main():
    runs = []
    for name, pipeline in RUNS:
        r = run(preset(name), pipeline)
        runs.append(
            {
                "scenario": name,
                "pipeline": pipeline,
                "config_hash": r.config_hash,
                "peak_gain": r.peak_gain,
                "steady_transmission": r.steady_transmission,
            }
        )
        print(f"{name:12s} {pipeline:12s} peak {r.peak_gain:.6f}  steady T {r.steady_transmission:.6f}")
    ring = compare(run(preset("fig5")), run(preset("fig5-cold"))).ringing_ratio
    manifest = parse_config('scenario = "fig3a"\npipelines = ["mbe"]\n[sweep]\ndephasing_gamma = [0.001, 0.3]\n')
    rows = sweep(manifest, jobs=1)
    data = {
        "version": 1,
        "runs": runs,
        "fig5_ringing_ratio": ring,
        "fig3a_dephasing_sweep": [{"dephasing_gamma": v, "peak_gain": p} for v, _, p, _ in rows],
    }
    OUT.write_text(json.dumps(data, indent=2) + "\n")
    print(f"ringing ratio {ring:.6f}; wrote {OUT}")


if __name__ == "__main__":
    main()
