"""Finite metric probability spaces and metric-measure distances.

A space is a dense distance matrix plus strictly positive weights summing to
one.  Pairs of spaces embedded in a common ambient metric (``AmbientPair``)
support the Hausdorff and Levy-Prokhorov distances; their maximum upper-bounds
the Gromov-Hausdorff-Prokhorov distance for that embedding, which is what the
stability experiments feed to the theoretical moduli.

Prokhorov values are computed exactly on small instances (rational max-flow
over the coupling network) and via a scaled integer max-flow on large ones,
binary-searching the finitely many critical epsilons (pairwise distances and
achievable mass deficits).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

__all__ = [
    "ValidationError",
    "MetricProbabilitySpace",
    "build_space",
    "space_from_points",
    "space_from_matrix",
    "AmbientPair",
    "ambient_from_clouds",
    "hausdorff_distance",
    "prokhorov_distance",
    "ghp_upper_bound",
]

_EXACT_FLOW_LIMIT = 64  # total support size below which flows run on Fractions


class ValidationError(ValueError):
    """Raised for invalid inputs; the CLI maps it to exit code 2."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MetricProbabilitySpace:
    dist: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.dist.shape[0]


def _check_triangle(dist: np.ndarray) -> None:
    n = dist.shape[0]
    tol = 1e-12 * max(1.0, float(dist.max(initial=0.0)))
    if n <= 64:
        for k in range(n):
            slack = dist - (dist[:, k][:, None] + dist[k][None, :])
            bad = np.argwhere(slack > tol)
            if bad.size:
                i, j = map(int, bad[0])
                raise ValidationError(
                    f"triangle inequality violated at ({i}, {j}, {k})"
                )
    else:
        rng = np.random.default_rng(0)  # validation sampling is deterministic
        idx = rng.integers(0, n, size=(1000, 3))
        i, j, k = idx[:, 0], idx[:, 1], idx[:, 2]
        bad = np.flatnonzero(dist[i, j] > dist[i, k] + dist[k, j] + tol)
        if bad.size:
            b = int(bad[0])
            raise ValidationError(
                f"triangle inequality violated at ({i[b]}, {j[b]}, {k[b]})"
            )


def build_space(dist: np.ndarray, weights=None) -> MetricProbabilitySpace:
    dist = np.asarray(dist, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValidationError(f"distance matrix must be square, got {dist.shape}")
    n = dist.shape[0]
    if n == 0:
        raise ValidationError("empty space")
    diag = np.flatnonzero(np.diagonal(dist) != 0.0)
    if diag.size:
        raise ValidationError(f"nonzero self-distance at {int(diag[0])}")
    asym = np.argwhere(dist != dist.T)
    if asym.size:
        i, j = map(int, asym[0])
        raise ValidationError(f"asymmetric at ({i}, {j})")
    if np.any(dist < 0):
        i, j = map(int, np.argwhere(dist < 0)[0])
        raise ValidationError(f"negative distance at ({i}, {j})")
    _check_triangle(dist)

    if weights is None:
        weights = np.full(n, 1.0 / n)
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (n,):
            raise ValidationError(f"weights shape {weights.shape} != ({n},)")
        if np.any(weights <= 0):
            raise ValidationError(f"non-positive weight at {int(np.argmin(weights))}")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {weights.sum()!r}, expected 1")
    return MetricProbabilitySpace(dist=_frozen(dist), weights=_frozen(weights))


def space_from_points(points: np.ndarray, weights=None) -> MetricProbabilitySpace:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.ndim != 2:
        raise ValidationError("points must be an (n, d) array")
    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    dist = np.maximum(dist, dist.T)  # exact symmetry
    np.fill_diagonal(dist, 0.0)
    return build_space(dist, weights)


def space_from_matrix(dist: np.ndarray, weights=None) -> MetricProbabilitySpace:
    return build_space(dist, weights)


# ---------------------------------------------------------------------------
# common-ambient pairs


@dataclass(frozen=True)
class AmbientPair:
    """Two weighted point sets living in one ambient finite metric space."""

    dist: np.ndarray       # (m, m) ambient distances
    idx_a: np.ndarray      # indices of side A within the ambient space
    idx_b: np.ndarray
    weights_a: np.ndarray  # sums to 1 over idx_a
    weights_b: np.ndarray

    def side_a(self) -> MetricProbabilitySpace:
        sub = self.dist[np.ix_(self.idx_a, self.idx_a)]
        return build_space(sub, self.weights_a)

    def side_b(self) -> MetricProbabilitySpace:
        sub = self.dist[np.ix_(self.idx_b, self.idx_b)]
        return build_space(sub, self.weights_b)

    def cross(self) -> np.ndarray:
        return self.dist[np.ix_(self.idx_a, self.idx_b)]


def ambient_from_clouds(points_a, points_b, weights_a=None, weights_b=None) -> AmbientPair:
    points_a = np.atleast_2d(np.asarray(points_a, dtype=float))
    points_b = np.atleast_2d(np.asarray(points_b, dtype=float))
    if points_a.shape[1] != points_b.shape[1]:
        raise ValidationError("point clouds have different dimensions")
    na, nb = len(points_a), len(points_b)
    both = np.vstack([points_a, points_b])
    diff = both[:, None, :] - both[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    dist = np.maximum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)
    if weights_a is None:
        weights_a = np.full(na, 1.0 / na)
    if weights_b is None:
        weights_b = np.full(nb, 1.0 / nb)
    weights_a = np.asarray(weights_a, dtype=float)
    weights_b = np.asarray(weights_b, dtype=float)
    for name, w, m in (("A", weights_a, na), ("B", weights_b, nb)):
        if w.shape != (m,):
            raise ValidationError(f"side {name} weights shape mismatch")
        if np.any(w <= 0):
            raise ValidationError(f"side {name} has a non-positive weight")
        if abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValidationError(f"side {name} weights sum to {w.sum()!r}")
    return AmbientPair(
        dist=_frozen(dist),
        idx_a=np.arange(na),
        idx_b=np.arange(na, na + nb),
        weights_a=_frozen(weights_a),
        weights_b=_frozen(weights_b),
    )


def hausdorff_distance(pair: AmbientPair) -> float:
    cross = pair.cross()
    return float(max(cross.min(axis=1).max(), cross.min(axis=0).max()))


# ---------------------------------------------------------------------------
# Prokhorov distance
#
# One-sided characterization: d_P <= eps iff every subset A of supp(mu)
# satisfies mu(A) <= nu(A^eps_open) + eps, which by Strassen duality holds iff
# the max-flow through (src -> a_i [w_a], a_i -> b_j if d < eps, b_j -> snk
# [w_b]) is at least 1 - eps.  The one-sided condition already implies its
# mirror on finite spaces.  On the half-open interval between consecutive
# distances the edge set is constant, so the interval with sorted distances
# (e_j, e_{j+1}] admits flow F_j and contributes min feasible value
# max(e_j, 1 - F_j) when 1 - F_j <= e_{j+1}.  F_j is non-decreasing and the
# contribution is unimodal, so a binary search over j finds the infimum.


def _maxflow_fraction(cross: np.ndarray, wa, wb, radius: float) -> Fraction:
    """Exact max-flow where a->b edges exist iff cross[a, b] <= radius."""
    na, nb = cross.shape
    src, snk = na + nb, na + nb + 1
    cap: dict[tuple[int, int], Fraction] = {}
    adj: list[list[int]] = [[] for _ in range(na + nb + 2)]

    def add(u: int, v: int, c: Fraction) -> None:
        cap[(u, v)] = c
        cap.setdefault((v, u), Fraction(0))
        adj[u].append(v)
        adj[v].append(u)

    big = Fraction(2)
    for i in range(na):
        add(src, i, Fraction(wa[i]))
    for j in range(nb):
        add(na + j, snk, Fraction(wb[j]))
    ii, jj = np.nonzero(cross <= radius)
    for i, j in zip(ii.tolist(), jj.tolist()):
        add(i, na + j, big)

    flow = Fraction(0)
    while True:
        # BFS augmenting path
        parent = {src: None}
        queue = [src]
        while queue and snk not in parent:
            u = queue.pop(0)
            for v in adj[u]:
                if v not in parent and cap[(u, v)] > 0:
                    parent[v] = u
                    queue.append(v)
        if snk not in parent:
            return flow
        bottleneck = None
        v = snk
        while parent[v] is not None:
            u = parent[v]
            c = cap[(u, v)]
            bottleneck = c if bottleneck is None else min(bottleneck, c)
            v = u
        v = snk
        while parent[v] is not None:
            u = parent[v]
            cap[(u, v)] -= bottleneck
            cap[(v, u)] += bottleneck
            v = u
        flow += bottleneck


# scipy's maximum_flow mishandles capacities at or above 2**31, so masses are
# quantized to this scale; largest-remainder rounding keeps the total exact
_FLOW_SCALE = 2**30


def _quantize_weights(w) -> np.ndarray:
    cum = np.round(np.cumsum(np.asarray(w, dtype=float)) * _FLOW_SCALE)
    return np.diff(np.concatenate([[0.0], cum])).astype(np.int64)


def _maxflow_scaled(cross: np.ndarray, wa_int, wb_int, radius: float) -> int:
    na, nb = cross.shape
    src, snk = na + nb, na + nb + 1
    ii, jj = np.nonzero(cross <= radius)
    total = int(wa_int.sum())
    rows = np.concatenate([np.full(na, src), ii, np.arange(na, na + nb)])
    cols = np.concatenate([np.arange(na), jj + na, np.full(nb, snk)])
    caps = np.concatenate([wa_int, np.full(len(ii), total, dtype=np.int64), wb_int])
    graph = csr_matrix((caps, (rows, cols)), shape=(na + nb + 2, na + nb + 2), dtype=np.int64)
    return int(maximum_flow(graph, src, snk).flow_value)


def _prokhorov(cross: np.ndarray, wa: np.ndarray, wb: np.ndarray) -> float:
    na, nb = cross.shape
    levels = np.unique(np.concatenate([[0.0], cross.ravel()]))
    exact = na + nb <= _EXACT_FLOW_LIMIT

    if exact:
        # normalize in rational arithmetic: float weights carry rounding that
        # would otherwise surface as phantom mass of order 1e-16
        ta = sum(Fraction(float(w)) for w in wa)
        tb = sum(Fraction(float(w)) for w in wb)
        wa_f = [Fraction(float(w)) / ta for w in wa]
        wb_f = [Fraction(float(w)) / tb for w in wb]

        def deficit(j: int) -> Fraction:
            return Fraction(1) - _maxflow_fraction(cross, wa_f, wb_f, float(levels[j]))
    else:
        wa_i = _quantize_weights(wa)
        wb_i = _quantize_weights(wb)

        def deficit(j: int) -> float:
            f = _maxflow_scaled(cross, wa_i, wb_i, float(levels[j]))
            return 1.0 - f / _FLOW_SCALE

    # Find the smallest j whose deficit fits inside interval j; the deficit is
    # non-increasing in j so the predicate is monotone.
    def fits(j: int) -> bool:
        if j + 1 >= len(levels):
            return True
        nxt = float(levels[j + 1])
        d = deficit(j)
        return d <= Fraction(nxt) if exact else d <= nxt

    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if fits(mid):
            hi = mid
        else:
            lo = mid + 1
    d = deficit(lo)
    if exact:
        return float(max(Fraction(float(levels[lo])), d))
    return float(max(float(levels[lo]), d))


def prokhorov_distance(pair: AmbientPair) -> float:
    return _prokhorov(pair.cross(), pair.weights_a, pair.weights_b)


def ghp_upper_bound(pair: AmbientPair) -> float:
    return max(hausdorff_distance(pair), prokhorov_distance(pair))
