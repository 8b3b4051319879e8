"""Run the full CLI pipeline on every shipped demo config.

For each ``demo/*.json`` this solves the problem, checks the conservation
law along the result and writes everything under ``--out/<name>/``.
"""

import argparse
from pathlib import Path

from varfrac.cli import main as cli

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="demo-out")
    args = ap.parse_args()
    worst = 0
    for cfg in sorted((ROOT / "demo").glob("*.json")):
        out = Path(args.out) / cfg.stem
        rc = cli(["solve", str(cfg), "--out", str(out)])
        print(f"{cfg.stem}: solve -> {rc}")
        worst = max(worst, rc)
        if "symmetry" in cfg.read_text():
            rc = cli(["check-noether", str(cfg), "--solution", str(out / "solution.csv"),
                      "--out", str(out)])
            print(f"{cfg.stem}: check-noether -> {rc}")
            worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
