"""Run every TOML config under configs/ and print one status line each."""
import argparse
import sys
from pathlib import Path

from cfieldlab.cli import ConfigError, parse_config, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", default=ROOT / "configs", type=Path)
    ap.add_argument("--out", default=ROOT / "out", type=Path)
    args = ap.parse_args()
    failures = 0
    for path in sorted(args.configs.glob("*.toml")):
        try:
            res = run_experiment(parse_config(path.read_text()), args.out / path.stem)
        except (ConfigError, RuntimeError) as exc:
            print(f"{path.name:28s} ERROR {exc}")
            failures += 1
            continue
        failures += res.exit_code != 0
        print(f"{path.name:28s} {'pass' if res.exit_code == 0 else 'FAIL'}  {res.summary['wall_time_s']:.2f}s")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
