"""Piecewise-linear densities on the line with exact superlevel-set diagrams.

These serve as analytic ground truth: the hierarchical clustering of a
continuous density by superlevel-set components has a persistence diagram
whose points pair each local-maximum value with the level of the saddle where
its component is absorbed by an older one, the global maximum dying at 0.
For a piecewise-linear density all of this is exact combinatorics on the
breakpoint sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .persistence import PersistenceDiagram, _sorted_points
from .space import ValidationError

__all__ = [
    "PLDensity1D",
    "mixture_of_triangles",
    "analytic_contour_pd",
    "critical_ties",
]


@dataclass(frozen=True)
class PLDensity1D:
    """Continuous piecewise-linear probability density with compact support:
    linear between consecutive breakpoints, zero outside them."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise ValidationError("need matching 1-d breakpoint/value arrays")
        if not np.all(np.diff(xs) > 0):
            raise ValidationError("breakpoints must be strictly increasing")
        if np.any(ys < 0):
            raise ValidationError("density values must be non-negative")
        if ys[0] != 0 or ys[-1] != 0:
            raise ValidationError("density must vanish at the support ends")
        if abs(self.integral() - 1.0) > 1e-9:
            raise ValidationError("density must integrate to 1")

    def integral(self) -> float:
        xs = np.asarray(self.xs)
        ys = np.asarray(self.ys)
        return float(np.sum((ys[1:] + ys[:-1]) * np.diff(xs)) / 2)

    def pdf(self, x):
        return np.interp(x, self.xs, self.ys, left=0.0, right=0.0)

    def cdf_at_breakpoints(self) -> np.ndarray:
        xs = np.asarray(self.xs)
        ys = np.asarray(self.ys)
        return np.concatenate(
            [[0.0], np.cumsum((ys[1:] + ys[:-1]) * np.diff(xs) / 2)])

    def max_value(self) -> float:
        return float(max(self.ys))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n i.i.d. draws by inverting the piecewise-quadratic CDF."""
        xs = np.asarray(self.xs)
        ys = np.asarray(self.ys)
        F = self.cdf_at_breakpoints()
        F = F / F[-1]
        u = rng.random(n)
        seg = np.clip(np.searchsorted(F, u, side="right") - 1, 0, len(xs) - 2)
        x0, x1 = xs[seg], xs[seg + 1]
        f0, f1 = ys[seg], ys[seg + 1]
        du = u - F[seg]
        a = (f1 - f0) / (x1 - x0)
        out = np.empty(n)
        lin = np.abs(a) < 1e-14
        with np.errstate(divide="ignore", invalid="ignore"):
            out[lin] = x0[lin] + du[lin] / np.where(f0[lin] > 0, f0[lin], 1.0)
            disc = np.sqrt(np.maximum(f0 ** 2 + 2 * a * du, 0.0))
            out[~lin] = x0[~lin] + (disc[~lin] - f0[~lin]) / a[~lin]
        return np.clip(out, x0, x1)

    def translated(self, dx: float) -> "PLDensity1D":
        return PLDensity1D(tuple(x + dx for x in self.xs), self.ys)


def mixture_of_triangles(centers, heights, halfwidths) -> PLDensity1D:
    """Sum of triangular bumps; heights * halfwidths must sum to 1."""
    centers = [float(c) for c in centers]
    heights = [float(h) for h in heights]
    halfwidths = [float(w) for w in halfwidths]
    if not (len(centers) == len(heights) == len(halfwidths)) or not centers:
        raise ValidationError("mismatched mixture component lists")
    knots = set()
    for c, w in zip(centers, halfwidths):
        if w <= 0:
            raise ValidationError("halfwidths must be positive")
        knots.update((c - w, c, c + w))
    xs = np.array(sorted(knots))
    ys = np.zeros_like(xs)
    for c, h, w in zip(centers, heights, halfwidths):
        ys += h * np.clip(1 - np.abs(xs - c) / w, 0.0, None)
    # rounding in c - w can leave ~1e-17 residues at a bump's own end knots
    ys[np.abs(ys) < 1e-12 * ys.max()] = 0.0
    return PLDensity1D(tuple(xs), tuple(ys))


def _superlevel_points(values) -> list:
    """Persistence pairs of the superlevel-set components of a sequence whose
    neighbours are adjacent; older component (higher max, then leftmost peak)
    survives each merge; survivors at level 0 pair with 0."""
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    parent = list(range(len(values)))
    # per root: (component max value, leftmost index attaining it)
    best: dict = {}
    active = [False] * len(values)
    points = []

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in order:
        active[i] = True
        best[i] = (values[i], i)
        for j in (i - 1, i + 1):
            if 0 <= j < len(values) and active[j]:
                ri, rj = find(i), find(j)
                if ri == rj:
                    continue
                (mi, ai), (mj, aj) = best[ri], best[rj]
                # elder: higher max survives, tie broken to the leftmost peak
                if (mi, -ai) < (mj, -aj):
                    ri, rj = rj, ri
                    mi, ai, mj, aj = mj, aj, mi, ai
                parent[rj] = ri
                if mj > values[i]:
                    points.append((values[i], mj))
                del best[rj]
    for _, (m, _a) in sorted(best.items()):
        if m > 0:
            points.append((0.0, m))
    return points


def analytic_contour_pd(f: PLDensity1D) -> PersistenceDiagram:
    """Exact diagram of the superlevel-set hierarchy of f: one point per
    local-maximum component, paired by the merge level under the elder rule
    (death, birth) = (saddle value, peak value); survivors die at 0."""
    pts = _superlevel_points([float(v) for v in f.ys])
    return PersistenceDiagram(points=_sorted_points(pts), orientation="contra")


def critical_ties(f: PLDensity1D) -> bool:
    """True when two critical values coincide (non-generic density), in which
    case the leftmost-survivor tie rule decided some pairing."""
    ys = f.ys
    crit = []
    for i, v in enumerate(ys):
        left = ys[i - 1] if i > 0 else -math.inf
        right = ys[i + 1] if i + 1 < len(ys) else -math.inf
        if v >= left and v >= right:
            crit.append(v)
        if v <= left and v <= right:
            crit.append(v)
    crit = [c for c in crit if c > 0]
    return len(crit) != len(set(crit))
