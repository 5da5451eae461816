#!/usr/bin/env python3
"""Build the demo session served by the web UI.

Samples the multi-density preset, precomputes forests/diagrams/vineyard over
a scale-clocked line family, and writes a hash-sealed session file plus the
sampled points.  Start the viewer with:

    gammalink serve --session demo-session.json
"""

import argparse
import pathlib

from gammalink import Kernel
from gammalink.curves import parse_family
from gammalink.datasets import DatasetSpec, generate, write_points_csv
from gammalink.session import build_session, write_session


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--preset", default="multi-density")
    ap.add_argument("--kernel", default="uniform")
    ap.add_argument("--family",
                    default="line:x={theta},y=0.03,param=s@theta=0.05:0.3:24")
    ap.add_argument("--out", type=pathlib.Path,
                    default=pathlib.Path("demo-session.json"))
    args = ap.parse_args()

    spec = DatasetSpec(args.preset, args.n, args.seed)
    space, coords = generate(spec)
    family, steps = parse_family(args.family)
    session = build_session(
        space, Kernel.from_string(args.kernel), family, steps,
        coords=coords, dataset=spec.to_json_dict())
    write_session(session, args.out)
    write_points_csv(args.out.with_suffix(".points.csv"), coords)
    print(f"wrote {args.out} ({steps} slices, n={args.n})")
    print(f"wrote {args.out.with_suffix('.points.csv')}")


if __name__ == "__main__":
    main()
