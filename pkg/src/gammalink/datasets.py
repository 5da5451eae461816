"""Seeded synthetic datasets, perturbations, and the CSV formats.

All randomness flows through numpy's default PCG64 generator seeded from the
spec, so generation is bit-stable: the same (preset, n, seed, params) always
produces the same bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .density1d import mixture_of_triangles
from .space import (AmbientPair, MetricProbabilitySpace, ValidationError,
                    ambient_from_clouds, space_from_points)

__all__ = [
    "DatasetSpec",
    "generate",
    "jitter",
    "read_points_csv",
    "write_points_csv",
    "read_matrix_csv",
    "write_matrix_csv",
]

THREE_GAUSSIANS_MEANS = ((-1.0, 0.0), (0.6, 0.8), (0.8, -0.4))
THREE_GAUSSIANS_WEIGHTS = (10 / 16, 5 / 16, 1 / 16)
THREE_GAUSSIANS_SIGMA = 0.1   # covariance 0.01 * identity

TRI_BUMPS_PEAKS = (0.0, 3.0)
TRI_BUMPS_HEIGHTS = (0.4, 0.2)
TRI_BUMPS_HALFWIDTHS = (1.5, 2.0)

# six well-separated blobs of distinct spreads plus a thin uniform background
MULTI_DENSITY_BLOBS = (
    # (mean_x, mean_y, sigma, weight)
    (0.0, 0.0, 0.03, 0.21),
    (1.1, 0.15, 0.05, 0.18),
    (0.25, 1.0, 0.04, 0.16),
    (1.25, 1.05, 0.06, 0.14),
    (2.2, 0.4, 0.05, 0.12),
    (2.1, 1.35, 0.07, 0.11),
)
MULTI_DENSITY_BACKGROUND = 0.08
MULTI_DENSITY_BOX = ((-0.4, -0.5), (2.8, 1.9))


@dataclass(frozen=True)
class DatasetSpec:
    preset: str
    n: int
    seed: int
    params: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"preset": self.preset, "n": self.n, "seed": self.seed,
                "params": dict(self.params)}


def dataset_spec_from_json_dict(obj: dict) -> DatasetSpec:
    return DatasetSpec(preset=str(obj["preset"]), n=int(obj["n"]),
                       seed=int(obj["seed"]),
                       params=dict(obj.get("params", {})))


def _gen_three_gaussians(spec: DatasetSpec, rng) -> np.ndarray:
    p = spec.params
    means = np.asarray(p.get("means", THREE_GAUSSIANS_MEANS), dtype=float)
    weights = np.asarray(p.get("weights", THREE_GAUSSIANS_WEIGHTS), dtype=float)
    sigma = float(p.get("sigma", THREE_GAUSSIANS_SIGMA))
    if len(means) != len(weights) or abs(weights.sum() - 1) > 1e-9:
        raise ValidationError("mixture weights must match means and sum to 1")
    comp = rng.choice(len(means), size=spec.n, p=weights)
    return means[comp] + sigma * rng.standard_normal((spec.n, means.shape[1]))


def _gen_tri_bumps(spec: DatasetSpec, rng) -> np.ndarray:
    p = spec.params
    f = mixture_of_triangles(
        p.get("peaks", TRI_BUMPS_PEAKS),
        p.get("heights", TRI_BUMPS_HEIGHTS),
        p.get("halfwidths", TRI_BUMPS_HALFWIDTHS))
    return f.sample(spec.n, rng).reshape(-1, 1)


def _gen_multi_density(spec: DatasetSpec, rng) -> np.ndarray:
    blobs = spec.params.get("blobs", MULTI_DENSITY_BLOBS)
    bg = float(spec.params.get("background", MULTI_DENSITY_BACKGROUND))
    (x0, y0), (x1, y1) = spec.params.get("box", MULTI_DENSITY_BOX)
    weights = [b[3] for b in blobs] + [bg]
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1) > 1e-9:
        raise ValidationError("blob weights plus background must sum to 1")
    comp = rng.choice(len(weights), size=spec.n, p=weights)
    pts = np.empty((spec.n, 2))
    for i, (mx, my, sigma, _w) in enumerate(blobs):
        idx = comp == i
        pts[idx] = np.array([mx, my]) + sigma * rng.standard_normal(
            (int(idx.sum()), 2))
    idx = comp == len(blobs)
    pts[idx, 0] = rng.uniform(x0, x1, int(idx.sum()))
    pts[idx, 1] = rng.uniform(y0, y1, int(idx.sum()))
    return pts


_PRESETS = {
    "three-gaussians": _gen_three_gaussians,
    "tri-bumps-1d": _gen_tri_bumps,
    "multi-density": _gen_multi_density,
}


def generate(spec: DatasetSpec):
    """Draw spec.n i.i.d. points from the preset mixture; returns the metric
    probability space (Euclidean distances, uniform weights) and coordinates."""
    if spec.preset not in _PRESETS:
        raise ValidationError(
            f"unknown preset {spec.preset!r}; choose from {sorted(_PRESETS)}")
    if spec.n < 1:
        raise ValidationError("n must be at least 1")
    rng = np.random.default_rng(spec.seed)
    coords = _PRESETS[spec.preset](spec, rng)
    return space_from_points(coords), coords


def jitter(space: MetricProbabilitySpace, coords, eps: float,
           seed: int) -> AmbientPair:
    """Displace every point by an independent uniform vector of norm <= eps;
    the identity pairing certifies both Hausdorff and Prokhorov <= eps."""
    if eps < 0:
        raise ValidationError("jitter radius must be non-negative")
    coords = np.asarray(coords, dtype=float)
    n, d = coords.shape
    rng = np.random.default_rng(seed)
    if eps == 0:
        moved = coords.copy()
    else:
        direction = rng.standard_normal((n, d))
        norms = np.linalg.norm(direction, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radii = eps * rng.random(n) ** (1.0 / d)
        moved = coords + direction / norms * radii[:, None]
    return ambient_from_clouds(coords, moved,
                               weights_a=space.weights,
                               weights_b=space.weights)


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_points_csv(path, coords, weights=None) -> None:
    """One row per point with d float columns; a header naming a final
    `weight` column is emitted only when weights are given."""
    coords = np.asarray(coords, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if weights is not None:
            w.writerow([f"x{i}" for i in range(coords.shape[1])] + ["weight"])
            for row, wt in zip(coords, np.asarray(weights, dtype=float)):
                w.writerow([_fmt(v) for v in row] + [_fmt(wt)])
        else:
            for row in coords:
                w.writerow([_fmt(v) for v in row])


def read_points_csv(path):
    """Returns (coords, weights-or-None); the weight column is recognized by
    a header whose final column is named `weight`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"{path}: empty CSV")
    has_weights = False
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header = [c.strip().lower() for c in rows[0]]
        has_weights = bool(header) and header[-1] == "weight"
        rows = rows[1:]
        if not rows:
            raise ValidationError(f"{path}: header but no data rows")
    try:
        data = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric cell ({exc})")
    if data.ndim != 2:
        raise ValidationError(f"{path}: ragged rows")
    if has_weights:
        return data[:, :-1], data[:, -1]
    return data, None


def write_matrix_csv(path, dist) -> None:
    dist = np.asarray(dist, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in dist:
            w.writerow([_fmt(v) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    try:
        m = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric cell ({exc})")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{path}: expected a square matrix")
    return m
