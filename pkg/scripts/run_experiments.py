#!/usr/bin/env python3
"""Run the registered experiments and save their reports.

Writes one JSON report per experiment into the results directory (plus
figures when --plots is given), then prints a pass/fail table.  Reports are
byte-reproducible for a fixed seed.
"""

import argparse
import pathlib

from gammalink._jsonutil import dumps
from gammalink.experiments import EXPERIMENTS, report_to_json_dict, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=[],
                    help=f"experiments to run (default: all of {sorted(EXPERIMENTS)})")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--results", type=pathlib.Path, default=pathlib.Path("results"))
    ap.add_argument("--plots", action="store_true",
                    help="also render figures into the results directory")
    args = ap.parse_args()

    names = args.names or sorted(EXPERIMENTS)
    unknown = [n for n in names if n not in EXPERIMENTS]
    if unknown:
        ap.error(f"unknown experiment(s): {', '.join(unknown)}")

    args.results.mkdir(parents=True, exist_ok=True)
    outcomes = []
    for name in names:
        report = run_experiment(name, args.seed,
                                plots_dir=args.results if args.plots else None)
        path = args.results / f"{name}-seed{args.seed}.json"
        path.write_text(dumps(report_to_json_dict(report)) + "\n",
                        encoding="utf-8")
        outcomes.append((name, report.passed, report.runtime, path))

    width = max(len(n) for n, *_ in outcomes)
    for name, passed, runtime, path in outcomes:
        mark = "PASS" if passed else "FAIL"
        print(f"{name:<{width}}  {mark}  {runtime:7.1f}s  {path}")
    if not all(p for _, p, _, _ in outcomes):
        raise SystemExit(1)


if __name__ == "__main__":
    main()
