"""Independent reference implementations used to validate the package.

Everything in this module recomputes results straight from definitions,
deliberately avoiding the package's algorithms: graph components are found by
breadth-first search on thresholded edges, diagrams by tracking observed
components across bisected change points, Prokhorov distances by exhaustive
subset enumeration in exact rational arithmetic, kernel volumes by numerical
quadrature, and mass deficits by enumerating every sub-collection.  Tests
compare the package's fast paths against these slow, obviously-correct ones.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from gammalink import clusters_at


# ---------------------------------------------------------------------------
# kernels, evaluated from their closed forms
# ---------------------------------------------------------------------------

def kernel_value(shape: str, cutoff, x: float) -> float:
    if shape == "uniform":
        return 1.0 if x < 1.0 else 0.0
    if shape == "epanechnikov":
        return max(0.0, 1.0 - x * x)
    if shape == "triangular":
        return max(0.0, 1.0 - x)
    if shape == "gauss":
        return math.exp(-x * x / 2.0) if x < cutoff else 0.0
    raise ValueError(shape)


def kernel_support(shape: str, cutoff) -> float:
    return float(cutoff) if shape == "gauss" else 1.0


def quad_volume(shape: str, cutoff, dim: int, s: float) -> float:
    """Euclidean integral of K(|x|/s) over R^dim by radial quadrature."""
    from scipy.integrate import quad

    omega = math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
    upper = s * kernel_support(shape, cutoff)
    val, _ = quad(lambda r: kernel_value(shape, cutoff, r / s) * r ** (dim - 1),
                  0.0, upper, limit=400)
    return dim * omega * val


# ---------------------------------------------------------------------------
# clustering at one parameter value, straight from the three-threshold rule
# ---------------------------------------------------------------------------

def threshold_components(dist: np.ndarray, weights: np.ndarray,
                         shape: str, cutoff, s: float, t: float,
                         k: float) -> list[list[int]]:
    """Vertices = points whose kernel density at bandwidth s is >= k; edges
    join vertices at distance <= t; returns BFS components, each sorted."""
    n = len(weights)
    dens = [
        sum(weights[j] * kernel_value(shape, cutoff, dist[i, j] / s)
            for j in range(n))
        for i in range(n)
    ]
    alive = [i for i in range(n) if dens[i] >= k]
    seen: set[int] = set()
    comps: list[list[int]] = []
    for start in alive:
        if start in seen:
            continue
        comp, queue = [], [start]
        seen.add(start)
        while queue:
            u = queue.pop()
            comp.append(u)
            for v in alive:
                if v not in seen and dist[u, v] <= t:
                    seen.add(v)
                    queue.append(v)
        comps.append(sorted(comp))
    return sorted(comps, key=lambda c: c[0])


# ---------------------------------------------------------------------------
# elder-rule diagram recovered from clustering queries alone
# ---------------------------------------------------------------------------

def _partition_at(forest, u: float) -> frozenset:
    r = u if forest.orientation == "contra" else -u
    return frozenset(frozenset(c) for c in clusters_at(forest, r))


def _change_points(forest, lo: float, hi: float):
    """All u in (lo, hi] where the clustering changes, each with the states
    just after (coarser) and just before it, newest (largest u) first.

    Presence and togetherness are closed at their exact stored values, so
    bisecting down to adjacent floats recovers every event value exactly.
    """
    out = []
    stack = [(lo, hi, _partition_at(forest, lo), _partition_at(forest, hi))]
    while stack:
        a, b, sa, sb = stack.pop()
        if sa == sb:
            continue
        m = a + (b - a) / 2.0
        if m <= a or m >= b:
            out.append((a, sa, sb))
            continue
        sm = _partition_at(forest, m)
        stack.append((a, m, sa, sm))
        stack.append((m, b, sm, sb))
    return sorted(out, key=lambda e: -e[0])


class _Tracked:
    __slots__ = ("points", "birth")

    def __init__(self, points: frozenset, birth: float):
        self.points = points
        self.birth = birth


def elder_diagram(forest, weights: np.ndarray, k_limit: float) -> tuple:
    """Diagram points recovered by component tracking over observed change
    values of clusters_at, with the elder rule applied to observed births.

    ``k_limit`` is the curve's density threshold at the high end of the
    domain; a point already clustered one float inside that end was born
    exactly at the end iff its own weight reaches the threshold there.
    """
    u_lo, u_hi = forest.domain
    assert math.isfinite(u_hi) and math.isfinite(u_lo)
    lo0 = math.nextafter(u_lo, u_hi)
    hi0 = math.nextafter(u_hi, u_lo)

    tracked: list[_Tracked] = []
    for comp in _partition_at(forest, hi0):
        assert len(comp) == 1, "distinct points already merged at the top end"
        x = next(iter(comp))
        birth = u_hi if weights[x] >= k_limit else hi0
        tracked.append(_Tracked(comp, birth))

    raw: list[tuple] = []
    for v, s_after, _ in _change_points(forest, lo0, hi0):
        new_tracked: list[_Tracked] = []
        for comp in s_after:
            inside = [t for t in tracked if t.points & comp]
            if not inside:
                new_tracked.append(_Tracked(comp, v))
                continue
            inside.sort(key=lambda t: (-t.birth, min(t.points)))
            survivor = inside[0]
            for loser in inside[1:]:
                if loser.birth > v:
                    raw.append((v, loser.birth))
            survivor.points = comp
            new_tracked.append(survivor)
        tracked = new_tracked
    for t in tracked:
        raw.append((u_lo, t.birth))

    if forest.orientation == "contra":
        pts = [(d, b) for d, b in raw if b > d]
    else:
        pts = [(-b, -d) for d, b in raw if b > d]
    return tuple(sorted(pts, key=lambda p: (-(p[1] - p[0]), p[0])))


# ---------------------------------------------------------------------------
# Prokhorov distance by exhaustive subsets, exact arithmetic
# ---------------------------------------------------------------------------

def _one_sided_prokhorov(cross: np.ndarray, wa, wb) -> Fraction:
    """sup over subsets A of the source side of inf{eps : mu(A) <= nu(open
    eps-thickening of A) + eps}, with exact rational masses."""
    na, nb = cross.shape
    ta = sum(Fraction(float(w)) for w in wa)
    tb = sum(Fraction(float(w)) for w in wb)
    wa = [Fraction(float(w)) / ta for w in wa]
    wb = [Fraction(float(w)) / tb for w in wb]
    best = Fraction(0)
    for bits in range(1, 1 << na):
        rows = [i for i in range(na) if bits >> i & 1]
        mu_a = sum(wa[i] for i in rows)
        dmin = cross[rows].min(axis=0)
        order = np.argsort(dmin, kind="stable")
        # candidate windows: eps in (d_i, d_{i+1}] has nu({dmin < eps}) equal
        # to the cumulative mass at d_i; the per-window infimum is
        # max(d_i, mu(A) - nu_i)
        eps_a = None
        nu = Fraction(0)
        thresholds = [Fraction(0)]
        masses = [Fraction(0)]
        pos = 0
        while pos < nb:
            d = dmin[order[pos]]
            grp = nu
            while pos < nb and dmin[order[pos]] == d:
                grp += wb[order[pos]]
                pos += 1
            nu = grp
            if d == 0.0:
                masses[-1] = nu
            else:
                thresholds.append(Fraction(float(d)))
                masses.append(nu)
        for d_i, nu_i in zip(thresholds, masses):
            cand = max(d_i, mu_a - nu_i)
            if eps_a is None or cand < eps_a:
                eps_a = cand
        if eps_a > best:
            best = eps_a
    return best


def prokhorov_subsets(pair) -> float:
    """Exact Prokhorov distance of an ambient pair via both one-sided subset
    suprema (they coincide; the max is returned)."""
    cross = pair.cross()
    a = _one_sided_prokhorov(cross, pair.weights_a, pair.weights_b)
    b = _one_sided_prokhorov(cross.T, pair.weights_b, pair.weights_a)
    assert a == b, "one-sided Prokhorov suprema disagree"
    return float(max(a, b))


# ---------------------------------------------------------------------------
# bottleneck distance by exhaustive matching
# ---------------------------------------------------------------------------

def bottleneck_tiny(pts_a, pts_b) -> float:
    """Exact bottleneck distance between small diagrams by recursion over all
    partial matchings, unmatched points paying half their persistence."""
    a = [tuple(map(float, p)) for p in pts_a]
    b = [tuple(map(float, p)) for p in pts_b]

    def half(p):
        return (p[1] - p[0]) / 2.0

    best = [math.inf]
    used = [False] * len(b)

    def rec(i: int, cur: float) -> None:
        if cur >= best[0]:
            return
        if i == len(a):
            rest = max((half(q) for j, q in enumerate(b) if not used[j]),
                       default=0.0)
            best[0] = min(best[0], max(cur, rest))
            return
        rec(i + 1, max(cur, half(a[i])))
        for j, q in enumerate(b):
            if not used[j]:
                cost = max(abs(a[i][0] - q[0]), abs(a[i][1] - q[1]))
                used[j] = True
                rec(i + 1, max(cur, cost))
                used[j] = False

    rec(0, 0.0)
    return best[0]


# ---------------------------------------------------------------------------
# contour diagram of a piecewise-linear density by interval tracking
# ---------------------------------------------------------------------------

def _superlevel_intervals(xs, ys, level: float) -> list[tuple]:
    """Maximal closed intervals of {x : f(x) >= level} for the PL function
    through (xs, ys)."""
    spans = []
    for i in range(len(xs) - 1):
        x0, x1, y0, y1 = xs[i], xs[i + 1], ys[i], ys[i + 1]
        if y0 >= level and y1 >= level:
            spans.append((x0, x1))
        elif y0 >= level:
            c = x0 + (y0 - level) / (y0 - y1) * (x1 - x0)
            spans.append((x0, c))
        elif y1 >= level:
            c = x0 + (level - y0) / (y1 - y0) * (x1 - x0)
            spans.append((c, x1))
    spans.sort()
    merged: list[list[float]] = []
    for a, b in spans:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [tuple(iv) for iv in merged]


def pl_contour_diagram(xs, ys) -> tuple:
    """Superlevel-set component tracking of a PL density, elder rule with
    ties going to the leftmost component; points are (merge level, peak)."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    levels = sorted({y for y in ys if y > 0.0}, reverse=True)
    live: list[dict] = []
    pts: list[tuple] = []
    for lv in levels:
        comps = _superlevel_intervals(xs, ys, lv)
        new_live: list[dict] = []
        for a, b in comps:
            inside = [c for c in live if a <= c["pos"] <= b]
            if not inside:
                new_live.append({"birth": lv, "pos": (a + b) / 2.0})
                continue
            inside.sort(key=lambda c: (-c["birth"], c["pos"]))
            survivor = inside[0]
            for loser in inside[1:]:
                if loser["birth"] > lv:
                    pts.append((lv, loser["birth"]))
            new_live.append(survivor)
        live = new_live
    for c in live:
        pts.append((0.0, c["birth"]))
    return tuple(sorted(pts, key=lambda p: (-(p[1] - p[0]), p[0])))


# ---------------------------------------------------------------------------
# mass deficit by enumerating every sub-collection
# ---------------------------------------------------------------------------

def max_deficit_enum(masses, image_sets, y_weight) -> float:
    """max over all sub-collections S of sum of masses in S minus the weight
    of the union of their image sets; the direct reading of the mass clause."""
    best = 0.0
    c = len(masses)
    for bits in range(1, 1 << c):
        tot, cover = 0.0, set()
        for i in range(c):
            if bits >> i & 1:
                tot += masses[i]
                cover |= set(image_sets[i])
        best = max(best, tot - sum(y_weight[j] for j in cover))
    return best


# ---------------------------------------------------------------------------
# seeded random instances shared by oracle-equivalence suites
# ---------------------------------------------------------------------------

def random_space(rng: np.random.Generator, n_max: int = 12):
    from gammalink import space_from_points

    n = int(rng.integers(2, n_max + 1))
    d = int(rng.integers(1, 3))
    pts = rng.uniform(-1.5, 1.5, size=(n, d))
    w = rng.uniform(0.2, 1.0, size=n)
    w = w / w.sum()
    return space_from_points(pts, weights=w)


def random_line(rng: np.random.Generator):
    from gammalink import line

    x = float(rng.uniform(0.5, 2.5))
    y = float(rng.uniform(0.3, 1.2))
    param = "k" if rng.integers(2) == 0 else "s"
    return line(x, y, param=param)


def random_kernel(rng: np.random.Generator):
    from gammalink import Kernel

    roll = int(rng.integers(5))
    if roll <= 1:
        return Kernel("uniform")
    if roll == 2:
        return Kernel("epanechnikov")
    if roll == 3:
        return Kernel("triangular")
    return Kernel("gauss", 2.0)


def k_limit_of(curve) -> float:
    """Density threshold at the high end of the internal clock: the last
    knot's k for contravariant curves, the first knot's for covariant."""
    if curve.orientation == "contra":
        return float(curve.knots[-1][3])
    return float(curve.knots[0][3])
