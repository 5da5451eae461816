"""Reproducible experiment runners.

Each runner returns an :class:`ExperimentReport` whose rows carry the seed
that produced them, so a report is reproducible byte-for-byte from the
experiment name and master seed (wall-clock runtime is kept on the object but
excluded from the canonical serialization for that reason).

Runners:

- :func:`stability_sweep` — jitter a Euclidean dataset and check the
  bottleneck distance between diagrams against the Lipschitz modulus
  ``max(2|mu|, 1)`` times a computable upper bound for the
  Gromov-Hausdorff-Prokhorov perturbation (uniform kernel, line curves).
- :func:`curve_stability_sweep` — sweep a line family and check adjacent
  diagrams against the modulus ``max(|dy|, |dx| * min(|mu|, |mu'|))``
  (respectively ``max(|dx|, |dy| * min(1/|mu|))`` for scale-clocked lines).
- :func:`consistency_run` — sample a 1-d piecewise-linear density, cluster
  along a covering line reclocked to density units, and compare with the
  analytic superlevel-set diagram as the sample grows.
- :func:`figure7_reproduction` — vineyard sweeps of the five reference
  families F1..F5 over the three-Gaussians preset with endpoint-dominance and
  instability-signature assertions, plus a six-cluster flattening demo on the
  multi-density preset.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._jsonutil import dumps
from .curves import Curve, CurveFamily, hline, is_covering, line, rescale_phi, \
    vertical, vertical_skew
from .datasets import DatasetSpec, generate, jitter
from .density1d import PLDensity1D, analytic_contour_pd, critical_ties, \
    mixture_of_triangles
from .kernels import Kernel
from .linkage import build_forest, reparametrize_forest
from .persistence import Vineyard, bottleneck, diagram, flatten_pf, \
    total_persistences, vineyard
from .space import ValidationError, ghp_upper_bound, space_from_points

__all__ = [
    "ExperimentReport",
    "report_to_json_dict",
    "report_json",
    "stability_sweep",
    "curve_stability_sweep",
    "consistency_run",
    "figure7_reproduction",
    "EXPERIMENTS",
    "run_experiment",
]


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentReport:
    """Outcome of one experiment run.

    ``rows`` is a tuple of flat dicts (JSON-clean values only), each carrying
    the seed that produced it; ``summary`` holds the aggregates the pass/fail
    verdict was computed from.  ``runtime`` is wall-clock seconds and is not
    serialized, keeping reports byte-reproducible from (name, seed).
    """

    name: str
    seed: int
    seeds: tuple
    rows: tuple
    summary: dict
    passed: bool
    runtime: float = field(default=0.0, compare=False)


def report_to_json_dict(report: ExperimentReport) -> dict:
    return {
        "experiment": report.name,
        "seed": report.seed,
        "seeds": list(report.seeds),
        "rows": [dict(r) for r in report.rows],
        "summary": dict(report.summary),
        "passed": report.passed,
    }


def report_json(report: ExperimentReport) -> str:
    return dumps(report_to_json_dict(report))


def _child_seed(*parts: int) -> int:
    """Deterministic child seed from a master seed and an index path."""
    seq = np.random.SeedSequence([int(p) for p in parts])
    return int(seq.generate_state(1, np.uint64)[0])


def _run_indexed(tasks: Sequence[tuple]) -> list:
    """Run (key, thunk) pairs, possibly in parallel, and return the results
    ordered by key so reports never depend on scheduling."""
    # every in-flight trial holds O(n^2) arrays, so concurrency beyond the
    # core count only multiplies peak memory
    workers = min(8, len(tasks), os.cpu_count() or 1)
    if workers <= 1:
        done = [(key, thunk()) for key, thunk in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [(key, pool.submit(thunk)) for key, thunk in tasks]
            done = [(key, fut.result()) for key, fut in futs]
    return [row for _, row in sorted(done, key=lambda kv: kv[0])]


# ---------------------------------------------------------------------------
# line geometry shared by the stability runners
# ---------------------------------------------------------------------------


def _line_params(curve: Curve) -> tuple[float, float]:
    """Intercepts (x, y) of a two-knot line with s = t; x is inf for the
    fixed-threshold horizontal line."""
    kn = curve.knots
    if len(kn) == 2 and all(abs(k[1] - k[2]) <= 1e-12 for k in kn):
        (r0, s0, _, k0), (r1, s1, _, k1) = kn
        if curve.is_contra and r0 == 0 and k0 == 0 and s1 == 0 \
                and math.isfinite(curve.max_r):
            return float(s0), float(k1)
        if not curve.is_contra and r0 == 0 and s0 == 0 and k1 == 0 \
                and math.isfinite(curve.max_r):
            return float(s1), float(k0)
        if not curve.is_contra and math.isinf(curve.max_r) \
                and abs(k0 - k1) <= 1e-12:
            return math.inf, float(k0)
    raise ValidationError("curve is not a line between the axes")


def _lipschitz_factor(curve: Curve) -> float:
    """Modulus of the map from dataset perturbation (in GHP distance) to
    diagram perturbation (in bottleneck distance) along a line, for the
    uniform kernel: max(2|mu|, 1) threshold-clocked, max(1/|mu|, 2)
    scale-clocked, with mu = -y/x the line's slope."""
    x, y = _line_params(curve)
    if curve.is_contra:
        return max(2.0 * y / x, 1.0)
    if math.isinf(x):
        return math.inf
    return max(x / y, 2.0)


def _adjacent_bound(c1: Curve, c2: Curve) -> float:
    """Modulus between the diagrams of two parallel-clocked lines:
    max(|dy|, |dx| * min |mu|) threshold-clocked, max(|dx|, |dy| * min 1/|mu|)
    scale-clocked; infinite when no finite modulus exists."""
    if c1.is_contra != c2.is_contra:
        raise ValidationError("cannot compare differently clocked lines")
    x1, y1 = _line_params(c1)
    x2, y2 = _line_params(c2)
    if c1.is_contra:
        return max(abs(y1 - y2), abs(x1 - x2) * min(y1 / x1, y2 / x2))
    if math.isinf(x1) or math.isinf(x2):
        if math.isinf(x1) and math.isinf(x2):
            return 0.0 if abs(y1 - y2) <= 1e-12 else math.inf
        return math.inf
    return max(abs(x1 - x2), abs(y1 - y2) * min(x1 / y1, x2 / y2))


# ---------------------------------------------------------------------------
# stability under dataset perturbation
# ---------------------------------------------------------------------------


def stability_sweep(spec: DatasetSpec, curve: Curve, eps_list: Sequence[float],
                    trials: int, seed: int,
                    kernel: Kernel = Kernel("uniform")) -> ExperimentReport:
    """Jitter the dataset by eps and compare diagrams before/after.

    With the uniform kernel on a line, every row must satisfy
    ``bottleneck <= lipschitz * delta + 1e-9`` where delta bounds the
    Gromov-Hausdorff-Prokhorov distance of the jitter; with other kernels (or
    non-line curves) no per-row bound exists and only the continuity trend is
    asserted: the median bottleneck at the smallest eps must not exceed the
    median at the largest.
    """
    import time
    t0 = time.perf_counter()
    space, coords = generate(spec)
    base = diagram(build_forest(space, kernel, curve))
    try:
        lip = _lipschitz_factor(curve)
    except ValidationError:
        lip = math.inf
    bounded = kernel.shape == "uniform" and math.isfinite(lip)

    eps_list = [float(e) for e in eps_list]

    def trial(ei: int, t: int) -> dict:
        cseed = _child_seed(seed, ei, t)
        pair = jitter(space, coords, eps_list[ei], cseed)
        delta = ghp_upper_bound(pair)
        other = diagram(build_forest(pair.side_b(), kernel, curve))
        b = bottleneck(base, other)
        row = {
            "eps": eps_list[ei],
            "trial": t,
            "seed": cseed,
            "delta": delta,
            "bottleneck": b,
        }
        if bounded:
            row["bound"] = lip * delta
            row["passed"] = b <= lip * delta + 1e-9
        return row

    tasks = [
        ((ei, t), (lambda ei=ei, t=t: trial(ei, t)))
        for ei in range(len(eps_list))
        for t in range(int(trials))
    ]
    rows = _run_indexed(tasks)

    medians = []
    for ei, eps in enumerate(eps_list):
        bs = [r["bottleneck"] for r in rows if r["eps"] == eps]
        medians.append([eps, float(np.median(bs))])
    if bounded:
        passed = all(r["passed"] for r in rows)
    else:
        first = min(medians, key=lambda m: m[0])[1]
        last = max(medians, key=lambda m: m[0])[1]
        passed = first <= last + 1e-9
    summary = {
        "kernel": kernel.to_string(),
        "curve": curve.spec_str or "",
        "lipschitz": lip if math.isfinite(lip) else None,
        "bounded": bounded,
        "medians": medians,
    }
    return ExperimentReport(
        name="stability", seed=int(seed),
        seeds=tuple(sorted({r["seed"] for r in rows})),
        rows=tuple(rows), summary=summary, passed=bool(passed),
        runtime=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# stability across a curve family
# ---------------------------------------------------------------------------


def curve_stability_sweep(space, family: CurveFamily, steps: int,
                          kernel: Kernel = Kernel("uniform")) -> ExperimentReport:
    """Diagrams along a line family: each adjacent pair must sit within the
    family's modulus (plus 1e-9).  Pairs with an infinite modulus cannot fail
    but their raw distances are recorded, exposing any discontinuities."""
    import time
    t0 = time.perf_counter()
    vine = vineyard(space, kernel, family, steps)
    curves = [family.make(th) for th in vine.thetas]
    rows = []
    unbounded = 0
    for i in range(len(vine.thetas) - 1):
        d1, d2 = vine.diagrams[i], vine.diagrams[i + 1]
        if d1 is None or d2 is None:
            continue
        bound = _adjacent_bound(curves[i], curves[i + 1])
        b = bottleneck(d1, d2)
        finite = math.isfinite(bound)
        unbounded += 0 if finite else 1
        rows.append({
            "index": i,
            "theta_lo": vine.thetas[i],
            "theta_hi": vine.thetas[i + 1],
            "bottleneck": b,
            "bound": bound if finite else None,
            "passed": (b <= bound + 1e-9) if finite else True,
        })
    jumps = [r["bottleneck"] for r in rows]
    summary = {
        "family": family.name,
        "kernel": kernel.to_string(),
        "steps": int(steps),
        "median_jump": float(np.median(jumps)) if jumps else 0.0,
        "max_jump": float(max(jumps)) if jumps else 0.0,
        "unbounded_pairs": unbounded,
        "errors": [[th, msg] for th, msg in vine.errors],
    }
    return ExperimentReport(
        name="curve-stability", seed=0, seeds=(),
        rows=tuple(rows), summary=summary,
        passed=bool(all(r["passed"] for r in rows)),
        runtime=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# empirical consistency on 1-d densities
# ---------------------------------------------------------------------------


def consistency_run(f: PLDensity1D, curve: Curve, n_list: Sequence[int],
                    seeds: Sequence[int],
                    kernel: Kernel = Kernel("uniform")) -> ExperimentReport:
    """Sample f at growing sizes, cluster along the covering line reclocked
    to density units, and compare with the analytic superlevel diagram.

    Pass policy (the limit statement has no finite-n rates, so thresholds are
    acceptance policy): per-n median bottleneck non-increasing, and the final
    median at most 0.1 times the largest analytic prominence.
    """
    import time
    t0 = time.perf_counter()
    if not is_covering(curve):
        raise ValidationError("consistency needs a covering line")
    if kernel.shape not in ("uniform", "epanechnikov"):
        raise ValidationError("consistency supports the uniform and "
                              "epanechnikov kernels")
    rc = rescale_phi(curve, kernel, 1)
    apd = analytic_contour_pd(f)
    max_pers = max((hi - lo for lo, hi in apd.points), default=0.0)
    n_list = sorted(int(n) for n in n_list)
    seeds = [int(s) for s in seeds]

    def trial(n: int, s: int) -> dict:
        rng = np.random.default_rng(s)
        xs = f.sample(n, rng)
        forest = build_forest(space_from_points(xs[:, None]), kernel, curve)
        d = diagram(reparametrize_forest(forest, rc.phi))
        return {"n": n, "seed": s, "bottleneck": bottleneck(d, apd)}

    tasks = [((ni, si), (lambda n=n, s=s: trial(n, s)))
             for ni, n in enumerate(n_list) for si, s in enumerate(seeds)]
    rows = _run_indexed(tasks)

    medians = []
    for n in n_list:
        bs = [r["bottleneck"] for r in rows if r["n"] == n]
        medians.append([n, float(np.median(bs))])
    threshold = 0.1 * max_pers
    monotone = all(b[1] <= a[1] + 1e-12 for a, b in zip(medians, medians[1:]))
    passed = monotone and (not medians or medians[-1][1] <= threshold)
    summary = {
        "kernel": kernel.to_string(),
        "curve": curve.spec_str or "",
        "medians": medians,
        "threshold": threshold,
        "max_persistence": max_pers,
        "monotone": monotone,
        "critical_ties": critical_ties(f),
        "analytic_points": [[lo, hi] for lo, hi in apd.points],
    }
    return ExperimentReport(
        name="consistency", seed=seeds[0] if seeds else 0,
        seeds=tuple(sorted(set(seeds))), rows=tuple(rows), summary=summary,
        passed=bool(passed), runtime=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# reference-family reproduction
# ---------------------------------------------------------------------------

FIG4_PRESET = "three-gaussians"
FIG4_N = 500

DEMO_PRESET = "multi-density"
DEMO_N = 2000
DEMO_CURVE = (0.1, 0.03)    # scale-clocked line intercepts
DEMO_TAU = 0.01


def _reference_families() -> tuple:
    """The five reference line/threshold families with their kernels."""
    return (
        ("F1", Kernel("uniform"),
         CurveFamily("hline:y={theta}", hline, 0.05, 0.5)),
        ("F2", Kernel("uniform"),
         CurveFamily("line:x=20*{theta},y={theta},param=s",
                     lambda th: line(20.0 * th, th, "s"), 0.05, 0.5)),
        ("F3", Kernel("epanechnikov"),
         CurveFamily("vline:s=0.25,t={theta}",
                     lambda th: vertical(0.25, th), 0.5, 1.7)),
        ("F4", Kernel("epanechnikov"),
         CurveFamily("vskew:s=0.25,t={theta},beta=10",
                     lambda th: vertical_skew(0.25, th, 10.0), 0.5, 1.7)),
        ("F5", Kernel("uniform"),
         CurveFamily("line:x={theta},y={theta},param=s",
                     lambda th: line(th, th, "s"), 0.5, 1.5)),
    )


def _adjacent_jumps(vine: Vineyard) -> list[float]:
    return [bottleneck(a, b) for a, b in zip(vine.diagrams, vine.diagrams[1:])
            if a is not None and b is not None]


def _dominance(pers: Sequence[float], count: int, factor: float = 2.0) -> bool:
    """True when the count-th largest persistence exceeds the next one by
    the factor (absent values count as zero)."""
    p = list(pers) + [0.0] * (count + 1)
    return p[count - 1] > 0 and p[count - 1] >= factor * p[count]


def figure7_reproduction(seed: int, steps: int = 200,
                         plots_dir=None) -> ExperimentReport:
    """Vineyards of the reference families F1..F5 over the three-Gaussians
    preset (n = 500), with the qualitative assertions: three dominant
    persistences at the start of F5 and one at its end (factor >= 2), at
    least one adjacent jump in F1 and in F3 exceeding ten times the median
    F5 jump, and a six-cluster flattening on the multi-density preset."""
    import time
    t0 = time.perf_counter()
    space, coords = generate(DatasetSpec(FIG4_PRESET, FIG4_N, int(seed)))
    rows = []
    vines: dict[str, Vineyard] = {}
    jumps: dict[str, list[float]] = {}
    for name, kernel, family in _reference_families():
        vine = vineyard(space, kernel, family, int(steps))
        vines[name] = vine
        js = _adjacent_jumps(vine)
        jumps[name] = js
        rows.append({
            "family": name,
            "kernel": kernel.to_string(),
            "seed": int(seed),
            "steps": int(steps),
            "median_jump": float(np.median(js)) if js else 0.0,
            "max_jump": float(max(js)) if js else 0.0,
            "errors": len(vine.errors),
        })

    f5 = vines["F5"]
    m5 = float(np.median(jumps["F5"])) if jumps["F5"] else 0.0
    checks = {
        "f5_three_dominant_at_start": _dominance(f5.persistences[0], 3),
        "f5_one_dominant_at_end": _dominance(f5.persistences[-1], 1),
        "f1_discontinuity": bool(jumps["F1"]) and max(jumps["F1"]) > 10 * m5,
        "f3_discontinuity": bool(jumps["F3"]) and max(jumps["F3"]) > 10 * m5,
    }

    demo_space, _ = generate(DatasetSpec(DEMO_PRESET, DEMO_N, int(seed)))
    demo_forest = build_forest(demo_space, Kernel("uniform"),
                               line(DEMO_CURVE[0], DEMO_CURVE[1], "s"))
    clusters, noise = flatten_pf(demo_forest, DEMO_TAU)
    checks["demo_six_clusters"] = len(clusters) == 6
    rows.append({
        "family": "demo",
        "kernel": "uniform",
        "seed": int(seed),
        "clusters": len(clusters),
        "noise": len(noise),
        "tau": DEMO_TAU,
    })

    if plots_dir is not None:
        from . import plots
        import os
        os.makedirs(plots_dir, exist_ok=True)
        for name, vine in vines.items():
            plots.plot_vineyard(vine, os.path.join(plots_dir, f"{name}.svg"))

    summary = {
        "preset": FIG4_PRESET,
        "n": FIG4_N,
        "steps": int(steps),
        "f5_median_jump": m5,
        "f5_start_persistences": list(f5.persistences[0][:6]),
        "f5_end_persistences": list(f5.persistences[-1][:6]),
        "checks": checks,
    }
    return ExperimentReport(
        name="figure7", seed=int(seed), seeds=(int(seed),),
        rows=tuple(rows), summary=summary,
        passed=bool(all(checks.values())),
        runtime=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# registry for the command line
# ---------------------------------------------------------------------------


def _exp_stability(seed: int, plots_dir=None) -> ExperimentReport:
    return stability_sweep(DatasetSpec("three-gaussians", 300, seed),
                           line(1.0, 1.0), (0.01, 0.02, 0.05), 20, seed)


def _exp_curve_stability(seed: int, plots_dir=None) -> ExperimentReport:
    space, _ = generate(DatasetSpec("three-gaussians", FIG4_N, seed))
    fam = CurveFamily("line:x={theta},y={theta},param=s",
                      lambda th: line(th, th, "s"), 0.5, 1.5)
    report = curve_stability_sweep(space, fam, 100)
    return ExperimentReport(
        name="curve-stability", seed=int(seed), seeds=(int(seed),),
        rows=report.rows, summary=report.summary, passed=report.passed,
        runtime=report.runtime)


def _exp_consistency(seed: int, plots_dir=None) -> ExperimentReport:
    from .datasets import TRI_BUMPS_PEAKS, TRI_BUMPS_HEIGHTS, \
        TRI_BUMPS_HALFWIDTHS
    f = mixture_of_triangles(TRI_BUMPS_PEAKS, TRI_BUMPS_HEIGHTS,
                             TRI_BUMPS_HALFWIDTHS)
    seeds = [_child_seed(seed, i) for i in range(10)]
    return consistency_run(f, line(0.25, 1.0), (200, 800, 3200), seeds)


def _exp_figure7(seed: int, plots_dir=None) -> ExperimentReport:
    return figure7_reproduction(seed, steps=200, plots_dir=plots_dir)


EXPERIMENTS: dict[str, Callable] = {
    "stability": _exp_stability,
    "curve-stability": _exp_curve_stability,
    "consistency": _exp_consistency,
    "figure7": _exp_figure7,
}


def run_experiment(name: str, seed: int, plots_dir=None) -> ExperimentReport:
    if name not in EXPERIMENTS:
        raise ValidationError(
            f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    return EXPERIMENTS[name](int(seed), plots_dir)
