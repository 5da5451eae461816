"""Command-line interface.

Subcommands: ``gen``, ``linkage``, ``diagram``, ``flatten``, ``vineyard``,
``interleave``, ``experiment``, ``serve``.  All JSON artifacts are written in
canonical form (17-significant-digit floats, fixed key order, no trailing
newline) so identical logical queries are byte-identical across the CLI and
the service.

Exit codes: 0 success, 2 validation error (including unknown flags), 3
internal assertion failure.
"""

from __future__ import annotations

import argparse
import sys

from ._jsonutil import dumps, loads
from .curves import parse_curve, parse_family
from .datasets import DatasetSpec, generate, read_matrix_csv, read_points_csv, \
    write_points_csv
from .experiments import report_to_json_dict, run_experiment
from .interleave import Correspondence, check_interleaving, \
    check_measured_interleaving, correspondence_from_json_dict
from .kernels import Kernel
from .linkage import build_forest, forest_from_json_dict, forest_to_json_dict
from .persistence import diagram, diagram_to_json_dict, vineyard, \
    vineyard_to_json_dict
from .session import build_session, flatten_payload, load_session, write_session
from .space import ValidationError, space_from_matrix, space_from_points

__all__ = ["main", "build_parser"]


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text + "\n")
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _load_space(path: str, matrix: bool):
    if matrix:
        return space_from_matrix(read_matrix_csv(path)), None
    coords, weights = read_points_csv(path)
    return space_from_points(coords, weights), coords


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_gen(args) -> int:
    spec = DatasetSpec(args.preset, int(args.n), int(args.seed))
    _, coords = generate(spec)
    write_points_csv(args.out, coords)
    return 0


def _cmd_linkage(args) -> int:
    space, _ = _load_space(args.input, args.matrix)
    kernel = Kernel.from_string(args.kernel)
    curve = parse_curve(args.curve)
    forest = build_forest(space, kernel, curve)
    _write_text(args.out, dumps(forest_to_json_dict(forest)))
    return 0


def _cmd_diagram(args) -> int:
    forest = forest_from_json_dict(_read_json(args.forest))
    diag = diagram(forest)
    _write_text(args.out, dumps(diagram_to_json_dict(diag)))
    if args.plot:
        from . import plots
        plots.plot_diagram(diag, args.plot)
    return 0


def _cmd_flatten(args) -> int:
    forest = forest_from_json_dict(_read_json(args.forest))
    payload = flatten_payload(forest, float(args.tau), float(args.min_mass),
                              args.order)
    _write_text(args.out, dumps(payload))
    return 0


def _cmd_vineyard(args) -> int:
    space, coords = _load_space(args.input, args.matrix)
    kernel = Kernel.from_string(args.kernel)
    family, fam_steps = parse_family(args.family)
    steps = int(args.steps) if args.steps is not None else fam_steps
    if steps < 2:
        raise ValidationError("need --steps (or steps in the family spec)")
    if args.session:
        session = build_session(space, kernel, family, steps, coords=coords,
                                drop_top=bool(args.drop_top))
        write_session(session, args.session)
        _write_text(args.out, dumps(session.vineyard_dict))
        vine_json = session.vineyard_dict
    else:
        vine = vineyard(space, kernel, family, steps,
                        drop_top=bool(args.drop_top))
        vine_json = vineyard_to_json_dict(vine)
        _write_text(args.out, dumps(vine_json))
    if args.plot:
        from . import plots

        class _V:  # plot from the JSON shape
            family_name = vine_json["family"]["name"]
            thetas = vine_json["theta"]
            persistences = vine_json["persistences"]

        plots.plot_vineyard(_V, args.plot)
    return 0


def _cmd_interleave(args) -> int:
    left = forest_from_json_dict(_read_json(args.left))
    right = forest_from_json_dict(_read_json(args.right))
    corr = correspondence_from_json_dict(_read_json(args.corr))
    eps = float(args.eps)
    if args.mass is not None:
        ok, witness = check_measured_interleaving(left, right, corr, eps,
                                                  float(args.mass))
    else:
        ok, witness = check_interleaving(left, right, corr, eps)
    _write_text(args.out, dumps({"interleaved": bool(ok), "eps": eps,
                                 "mass": args.mass, "witness": witness}))
    return 0


def _cmd_experiment(args) -> int:
    report = run_experiment(args.name, int(args.seed), args.plots)
    _write_text(args.out, dumps(report_to_json_dict(report)))
    return 0


def _cmd_serve(args) -> int:
    from .service import make_server
    session = load_session(args.session)
    server = make_server(session, int(args.port))
    host, port = server.server_address[:2]
    print(f"serving session on http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gammalink",
        description="density-based hierarchical clustering along parameter curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample a dataset preset to CSV")
    p.add_argument("--preset", required=True)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("linkage", help="build the merge forest along a curve")
    p.add_argument("--input", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--curve", required=True)
    p.add_argument("--matrix", action="store_true",
                   help="input is a distance matrix CSV, not points")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_linkage)

    p = sub.add_parser("diagram", help="persistence diagram of a forest")
    p.add_argument("forest")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=_cmd_diagram)

    p = sub.add_parser("flatten", help="flat clustering from a forest")
    p.add_argument("forest")
    p.add_argument("--tau", required=True, type=float)
    p.add_argument("--min-mass", default=0.0, type=float)
    p.add_argument("--order", default="pm", choices=("pm", "mp"))
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_flatten)

    p = sub.add_parser("vineyard", help="persistence sweep over a curve family")
    p.add_argument("--input", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--family", required=True)
    p.add_argument("--steps", default=None, type=int)
    p.add_argument("--drop-top", action="store_true")
    p.add_argument("--matrix", action="store_true",
                   help="input is a distance matrix CSV, not points")
    p.add_argument("--session", default=None,
                   help="also write a full precomputed session file")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--plot", default=None)
    p.set_defaults(func=_cmd_vineyard)

    p = sub.add_parser("interleave", help="check two forests for interleaving")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--corr", required=True)
    p.add_argument("--eps", required=True, type=float)
    p.add_argument("--mass", default=None, type=float)
    p.add_argument("-o", "--out", default="-")
    p.set_defaults(func=_cmd_interleave)

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--plots", default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("serve", help="serve a session file over HTTP")
    p.add_argument("--session", required=True)
    p.add_argument("--port", required=True, type=int)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"internal assertion failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
