"""Peak transient gain against optical depth for the cold-cloud Lambda scenario, both pipelines.

    python scripts/gain_vs_od.py
"""

import numpy as np

from eitprop.cli import sweep
from eitprop.config import parse_config

ODS = [0.5, 1.2, 2.6, 4.0, 6.0, 8.0, 12.0]


def main():
    values = ", ".join(repr(v) for v in ODS)
    manifest = parse_config(f'scenario = "fig3a"\npipelines = ["obe", "mbe"]\n[sweep]\nod = [{values}]\n')
    rows = sweep(manifest)
    print(f"{'OD':>6s} {'OBE peak':>10s} {'MBE peak':>10s} {'ln G_obe / OD':>14s}")
    for od in ODS:
        obe = next(r[2] for r in rows if r[0] == od and r[1] == "obe")
        mbe = next(r[2] for r in rows if r[0] == od and r[1] == "mbe")
        print(f"{od:6.2f} {obe:10.4f} {mbe:10.4f} {np.log(obe) / od:14.5f}")


if __name__ == "__main__":
    main()
