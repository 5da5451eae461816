"""Curve-sliced kernel linkage: births, merges, forests, clustering queries.

Everything internal runs on the unified clock u (see curves): clusterings only
shrink as u grows.  A point's birth is the largest u at which its kernel
density still clears the curve threshold; an edge's value is the largest u at
which the connection radius still covers the pair; components merge downward.
The result is a forest of persistent clusters: each node is a maximal interval
of u over which a component keeps its identity.

Birth values for the uniform kernel are exact: per linear curve piece, the
density seen by a point is a step function of the scale, so the threshold
crossing is solved in closed form per step.  Other kernels use monotone
bisection to 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import minimum_spanning_tree

from .curves import Curve, curve_from_json_dict
from .kernels import Kernel, density_all
from .space import MetricProbabilitySpace, ValidationError

__all__ = [
    "ForestNode",
    "MergeForest",
    "VertexBirths",
    "vertex_birth",
    "vertex_births_u",
    "edge_value",
    "edge_values_u",
    "build_forest",
    "clusters_at",
    "density_profile",
    "direct_slice_clustering",
    "sample_kernel_linkage",
    "reparametrize_forest",
    "check_forest",
    "forest_to_json_dict",
    "forest_from_json_dict",
]


@dataclass
class ForestNode:
    id: int
    birth: float                       # u-clock; life = (death, birth]
    death: float
    parent: int | None
    children: list[int] = field(default_factory=list)
    members: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class MergeForest:
    nodes: list[ForestNode]
    unborn: list[int]
    n_points: int
    orientation: str                   # "contra" | "co"
    domain: tuple[float, float]        # u-clock (lo, hi)
    curve_json: dict | None = None

    @property
    def roots(self) -> list[int]:
        return [nd.id for nd in self.nodes if nd.parent is None]

    def node_of_point(self, i: int) -> int | None:
        for nd in self.nodes:
            for p, _ in nd.members:
                if p == i:
                    return nd.id
        return None

    def subtree_members(self, node_id: int) -> list[tuple[int, float]]:
        out: list[tuple[int, float]] = []
        stack = [node_id]
        while stack:
            nd = self.nodes[stack.pop()]
            out.extend(nd.members)
            stack.extend(nd.children)
        return out

    def to_u(self, r: float) -> float:
        return r if self.orientation == "contra" else -r

    def from_u(self, u: float) -> float:
        return u if self.orientation == "contra" else -u

    @property
    def max_r(self) -> float:
        lo, hi = self.domain
        return hi if self.orientation == "contra" else -lo


@dataclass(frozen=True)
class VertexBirths:
    """Per-point density-threshold crossing times, in native curve time."""

    births: tuple


# ---------------------------------------------------------------------------
# vertex births


def _finite_top(curve: Curve) -> float:
    """A finite u beyond which no point can be born (threshold exceeds K(0))."""
    lo, hi = curve.domain_u()
    if math.isfinite(hi):
        return hi
    u0, u1, _, _, (ak, bk) = curve.pieces_u()[-1]
    if bk <= 1e-300:
        raise ValidationError(
            "unbounded curve domain with a non-increasing threshold has no top"
        )
    return max(u0, (1.0 - ak) / bk) + 1.0


def _knot_segments_u(curve: Curve):
    """Knot-to-knot pieces (u0, u1, (s0, s1), (t0, t1), (k0, k1)), u-clock.

    Clipped to the domain.  Endpoint values come straight from the knot
    tuples, so comparisons against them are exact at knots; pieces cut short
    by the domain boundary interpolate at the cut.  Domain stretches outside
    the knot range are not covered here; see _extension_pieces_u.
    """
    lo, hi = curve.domain_u()
    kn = list(curve.knots)
    segs = []
    for (r0, *v0), (r1, *v1) in zip(kn, kn[1:]):
        if curve.is_contra:
            segs.append([r0, r1, *zip(v0, v1)])
        else:
            segs.append([-r1, -r0, *zip(v1, v0)])
    if not curve.is_contra:
        segs.reverse()

    def shift(seg, end, u):
        u0, u1 = seg[0], seg[1]
        f = (u - u0) / (u1 - u0)
        seg[end] = u
        for i in range(2, 5):
            a, b = seg[i]
            val = a + f * (b - a)
            seg[i] = (val, b) if end == 0 else (a, val)

    out = []
    for seg in segs:
        if seg[1] <= lo or seg[0] >= hi:
            continue
        if seg[0] < lo:
            shift(seg, 0, lo)
        if seg[1] > hi:
            shift(seg, 1, hi)
        if seg[0] < seg[1]:
            out.append(tuple(seg))
    return out


def _extension_pieces_u(curve: Curve):
    """Domain stretches outside the knot range, in coefficient form.

    Each is (u0, u1, (as, bs), (at, bt), (ak, bk)) with value = a + b*u,
    continuing the outermost knot segments; empty when the domain ends at the
    knots.  Infinite ends land here, so consumers must handle u = +-inf.
    """
    lo, hi = curve.domain_u()
    us = [curve.to_u(kn[0]) for kn in curve.knots]
    k_lo, k_hi = (us[0], us[-1]) if curve.is_contra else (us[-1], us[0])
    pieces = curve.pieces_u()
    out = []
    if lo < k_lo:
        out.append((lo, k_lo, *pieces[0][2:]))
    if hi > k_hi:
        out.append((k_hi, hi, *pieces[-1][2:]))
    return out


def _births_uniform_u(space: MetricProbabilitySpace, curve: Curve) -> np.ndarray:
    """Exact uniform-kernel births: max over density levels of the largest u
    at which at least j neighbours sit strictly inside the scale and the
    cumulative weight of those j clears the threshold.

    When a level's condition holds all the way through a piece, the piece end
    is stored verbatim, so suprema attained at the domain boundary come out as
    the exact boundary float rather than a rounded crossing.
    """
    order = np.argsort(space.dist, axis=1, kind="stable")
    sd = np.take_along_axis(space.dist, order, axis=1)
    cw = np.cumsum(space.weights[order], axis=1)
    best = np.full(space.n, -np.inf)
    for u0, u1, (s0v, s1v), _, (k0v, k1v) in _knot_segments_u(curve):
        below_u1 = np.nextafter(u1, -np.inf)
        # scale clause, strict d < s(u) with s non-increasing in u
        scale_through = (sd < s1v) | ((sd == s1v) & (s1v < s0v))
        scale_never = sd >= s0v
        if s0v > s1v:
            u_d = u0 + (s0v - sd) / (s0v - s1v) * (u1 - u0)
        else:
            u_d = np.full_like(sd, -np.inf)
        top = np.where(scale_through, u1,
                       np.where(scale_never, -np.inf, np.minimum(u_d, below_u1)))
        # threshold clause, cw >= k(u) with k non-decreasing in u
        thresh_through = cw >= k1v
        thresh_never = cw < k0v
        if k1v > k0v:
            kinv = u0 + (cw - k0v) / (k1v - k0v) * (u1 - u0)
        else:
            kinv = np.full_like(cw, np.inf)
        kv = np.where(thresh_through, np.inf,
                      np.where(thresh_never, -np.inf, np.minimum(kinv, below_u1)))
        cand = np.minimum(top, kv)
        cand = np.where((cand >= u0) & (top > u0), cand, -np.inf)
        best = np.maximum(best, cand.max(axis=1))
    for u0, u1, (a_s, b_s), _, (a_k, b_k) in _extension_pieces_u(curve):
        if b_s < -1e-300:
            # u below which the scale strictly exceeds the j-th distance
            u_d = (sd - a_s) / b_s
        else:
            u_d = np.where(sd < a_s, np.inf, -np.inf)
        top = np.minimum(u_d, u1)
        if b_k > 1e-300:
            kinv = (cw - a_k) / b_k
        else:
            kinv = np.where(cw >= a_k, np.inf, -np.inf)
        cand = np.minimum(top, kinv)
        cand = np.where((cand >= u0) & (top > u0), cand, -np.inf)
        best = np.maximum(best, cand.max(axis=1))
    # suprema at the open domain's bottom edge have empty feasible sets inside
    lo, _ = curve.domain_u()
    return np.where((best == -np.inf) | (best <= lo), np.nan, best)


def _births_bisect_u(space: MetricProbabilitySpace, kernel: Kernel,
                     curve: Curve, tol: float = 1e-9) -> np.ndarray:
    def feasible(u: np.ndarray) -> np.ndarray:
        s, _, k = curve.eval_u(u)
        s = np.asarray(s, dtype=float)
        dens = np.empty(space.n)
        pos = s > 0
        if pos.any():
            scaled = space.dist[pos] / s[pos, None]
            dens[pos] = kernel(scaled) @ space.weights
        if not pos.all():
            # s has shrunk to zero: the density tends to the mass sitting at
            # distance exactly zero (the point itself plus coincident ones)
            dens[~pos] = (space.dist == 0.0)[~pos] @ space.weights
        return dens >= k

    lo, _ = curve.domain_u()
    hi_f = _finite_top(curve)
    n = space.n
    born_top = feasible(np.full(n, hi_f))

    if math.isfinite(lo):
        lo_f = lo
        alive_bottom = feasible(np.full(n, lo_f))
    else:
        knot_lo = min((p[0] for p in curve.pieces_u()[1:]), default=-1.0)
        lo_f = min(-1.0, knot_lo)
        alive_bottom = feasible(np.full(n, lo_f))
        for _ in range(60):
            if alive_bottom.all():
                break
            lo_f = lo_f * 2.0 - 1.0
            alive_bottom = alive_bottom | feasible(np.full(n, lo_f))

    births = np.full(n, np.nan)
    births[born_top] = hi_f if math.isfinite(curve.domain_u()[1]) else np.nan
    active = alive_bottom & ~born_top
    lo_arr = np.full(n, lo_f)
    hi_arr = np.full(n, hi_f)
    while np.any(active) and float(np.max(hi_arr[active] - lo_arr[active])) > tol:
        mid = 0.5 * (lo_arr + hi_arr)
        ok = feasible(mid)
        lo_arr = np.where(active & ok, mid, lo_arr)
        hi_arr = np.where(active & ~ok, mid, hi_arr)
    births[active] = 0.5 * (lo_arr[active] + hi_arr[active])
    return births


def vertex_births_u(space: MetricProbabilitySpace, kernel: Kernel,
                    curve: Curve) -> np.ndarray:
    """All birth values on the u-clock; NaN marks never-born points."""
    if kernel.shape == "uniform":
        return _births_uniform_u(space, curve)
    return _births_bisect_u(space, kernel, curve)


def vertex_birth(space: MetricProbabilitySpace, kernel: Kernel, curve: Curve,
                 x: int) -> float | None:
    b = vertex_births_u(space, kernel, curve)[int(x)]
    return None if math.isnan(b) else float(curve.from_u(b))


# ---------------------------------------------------------------------------
# edge values


def edge_values_u(space: MetricProbabilitySpace, curve: Curve) -> np.ndarray:
    """(n, n) matrix of connection times on the u-clock.

    Entry (i, j) is the largest u at which the radius still reaches d(i, j);
    NaN when the radius never does, +inf when it always does on an unbounded
    domain.  Walks the linear pieces from the top of the domain down.
    """
    d = space.dist
    out = np.full(d.shape, np.nan)
    resolved = np.zeros(d.shape, dtype=bool)
    ext = _extension_pieces_u(curve)
    us = [curve.to_u(kn[0]) for kn in curve.knots]
    k_hi = us[-1] if curve.is_contra else us[0]

    def sweep_coeff(u0, u1, a_t, b_t, gate_lo):
        if math.isinf(u1):
            t_top = a_t if abs(b_t) <= 1e-300 else -math.inf
        else:
            t_top = a_t + b_t * u1
        hit_top = ~resolved & (d <= t_top)
        out[hit_top] = u1
        resolved[hit_top] = True
        if b_t < -1e-300:
            t_bot = a_t + b_t * u0 if math.isfinite(u0) else math.inf
            hit_mid = ~resolved & (d <= t_bot)
            if gate_lo:
                # leave boundary-exact hits to the knot segment below
                hit_mid &= (d - a_t) / b_t > u0
            out[hit_mid] = (d[hit_mid] - a_t) / b_t
            resolved[hit_mid] = True

    # pieces from the top of the domain down: extension above the knots,
    # then knot segments, then the extension below
    for piece in reversed(ext):
        if piece[0] >= k_hi:
            sweep_coeff(piece[0], piece[1], *piece[3], gate_lo=True)
    for u0, u1, _, (t0v, t1v), _ in reversed(_knot_segments_u(curve)):
        through = ~resolved & (d <= t1v)
        out[through] = u1
        resolved[through] = True
        if t0v > t1v:
            hit = ~resolved & (d <= t0v)
            f = (t0v - d[hit]) / (t0v - t1v)
            out[hit] = np.minimum(u0 + f * (u1 - u0), np.nextafter(u1, -np.inf))
            resolved[hit] = True
    for piece in ext:
        if piece[1] <= k_hi:
            sweep_coeff(piece[0], piece[1], *piece[3], gate_lo=False)
    # a crossing at the open domain's bottom edge never holds inside it
    lo, _ = curve.domain_u()
    out[out <= lo] = np.nan
    return out


def edge_value(space: MetricProbabilitySpace, curve: Curve, x: int,
               y: int) -> float | None:
    if x == y:
        raise ValidationError("edge endpoints must differ")
    e = edge_values_u(space, curve)[int(x), int(y)]
    if math.isnan(e):
        return None
    return float(curve.from_u(e)) if math.isfinite(e) else math.inf


# ---------------------------------------------------------------------------
# forest construction


class _DSU:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _merge_edges(births: np.ndarray, evals: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Candidate merge edges (i, j, value) reduced to a maximum spanning
    forest of the edge filtration values; component evolution is unchanged."""
    n = len(births)
    ii, jj = np.triu_indices(n, k=1)
    vals = np.minimum(np.minimum(births[ii], births[jj]), evals[ii, jj])
    keep = ~np.isnan(vals)
    ii, jj, vals = ii[keep], jj[keep], vals[keep]
    if len(vals) == 0:
        return ii, jj, vals
    finite_vals = np.where(np.isinf(vals), np.nanmax(vals[np.isfinite(vals)], initial=0.0) + 1.0, vals)
    w = (finite_vals.max() + 1.0) - finite_vals
    graph = csr_matrix((w, (ii, jj)), shape=(n, n))
    tree = minimum_spanning_tree(graph).tocoo()
    ti, tj = tree.row, tree.col
    tvals = np.minimum(np.minimum(births[ti], births[tj]), evals[ti, tj])
    return ti, tj, tvals


def build_forest(space: MetricProbabilitySpace, kernel: Kernel,
                 curve: Curve) -> MergeForest:
    n = space.n
    births = vertex_births_u(space, kernel, curve)
    evals = edge_values_u(space, curve)
    lo, _ = curve.domain_u()

    ei, ej, ev = _merge_edges(births, evals)
    born = ~np.isnan(births)

    # event stream: (value, kind, payload) processed in strictly decreasing
    # value batches; kind 0 = point birth, kind 1 = edge
    ev_vals = np.concatenate([births[born], ev])
    ev_kind = np.concatenate([np.zeros(born.sum(), dtype=int), np.ones(len(ev), dtype=int)])
    ev_a = np.concatenate([np.flatnonzero(born), ei])
    ev_b = np.concatenate([np.full(born.sum(), -1), ej])
    order = np.lexsort((ev_a, ev_kind, -ev_vals))
    ev_vals, ev_kind, ev_a, ev_b = (arr[order] for arr in (ev_vals, ev_kind, ev_a, ev_b))

    dsu = _DSU(n)
    exists = np.zeros(n, dtype=bool)
    comp_node: dict[int, int] = {}
    nodes: list[ForestNode] = []

    pos = 0
    m = len(ev_vals)
    while pos < m:
        v = ev_vals[pos]
        end = pos
        while end < m and ev_vals[end] == v:
            end += 1

        new_points: list[int] = []
        batch_edges: list[tuple[int, int]] = []
        for t in range(pos, end):
            if ev_kind[t] == 0:
                new_points.append(int(ev_a[t]))
            else:
                batch_edges.append((int(ev_a[t]), int(ev_b[t])))
        pos = end

        for p in new_points:
            exists[p] = True
        touched = set(new_points)
        pre_of: dict[int, int | None] = {}
        for p in new_points:
            pre_of[p] = None
        for a, b in batch_edges:
            for x in (a, b):
                if not exists[x]:
                    raise AssertionError("edge scheduled before endpoint birth")
                root = dsu.find(x)
                touched.add(root)
                if root not in pre_of:
                    pre_of[root] = comp_node.get(root)
        for a, b in batch_edges:
            dsu.union(a, b)

        groups: dict[int, list[int]] = {}
        for pre in touched:
            groups.setdefault(dsu.find(pre), []).append(pre)

        for final in sorted(groups, key=lambda f: min(groups[f])):
            pres = groups[final]
            olds = sorted({pre_of[p] for p in pres if pre_of.get(p) is not None})
            news = sorted(p for p in pres if p in pre_of and pre_of[p] is None)
            for p in pres:
                comp_node.pop(p, None)
            if len(olds) == 0:
                nid = len(nodes)
                nodes.append(ForestNode(
                    id=nid, birth=float(v), death=math.nan, parent=None,
                    members=[(p, float(v)) for p in news]))
                comp_node[final] = nid
            elif len(olds) == 1:
                nid = olds[0]
                nodes[nid].members.extend((p, float(v)) for p in news)
                comp_node[final] = nid
            else:
                nid = len(nodes)
                for c in olds:
                    nodes[c].death = float(v)
                    nodes[c].parent = nid
                nodes.append(ForestNode(
                    id=nid, birth=float(v), death=math.nan, parent=None,
                    children=list(olds),
                    members=[(p, float(v)) for p in news]))
                comp_node[final] = nid

    for nd in nodes:
        if math.isnan(nd.death):
            nd.death = float(lo)

    forest = MergeForest(
        nodes=nodes,
        unborn=sorted(int(i) for i in np.flatnonzero(~born)),
        n_points=n,
        orientation=curve.orientation,
        domain=curve.domain_u(),
        curve_json=curve.to_json_dict(),
    )
    if __debug__:
        check_forest(forest)
    return forest


# ---------------------------------------------------------------------------
# queries


def clusters_at(forest: MergeForest, r: float) -> list[list[int]]:
    """Connected clusters at native time r: for each node alive at r, the
    subtree members already present (entry at or past r on the u-clock)."""
    r = float(r)
    if r <= 0:
        raise ValidationError("r must be positive")
    if r >= forest.max_r:
        return []
    u = forest.to_u(r)
    out: list[list[int]] = []
    for nd in forest.nodes:
        if nd.death < u <= nd.birth:
            pts = [p for p, entry in forest.subtree_members(nd.id) if entry >= u]
            if pts:
                out.append(sorted(pts))
    return sorted(out, key=lambda c: c[0])


def density_profile(space: MetricProbabilitySpace, kernel: Kernel,
                    curve: Curve) -> VertexBirths:
    bu = vertex_births_u(space, kernel, curve)
    vals = []
    for b in bu:
        vals.append(None if math.isnan(b) else float(curve.from_u(float(b))))
    return VertexBirths(births=tuple(vals))


def direct_slice_clustering(space: MetricProbabilitySpace, kernel: Kernel,
                            curve: Curve, r: float) -> list[list[int]]:
    """Clustering at r straight from the definition: threshold the densities
    at scale s(r), connect surviving points within t(r), read components."""
    if r <= 0:
        raise ValidationError("r must be positive")
    stk = curve.evaluate(r)
    if stk is None:
        return []
    s, t, k = stk
    dens = density_all(space, kernel, max(s, 0.0))
    alive = np.flatnonzero(dens >= k)
    if len(alive) == 0:
        return []
    dsu = _DSU(len(alive))
    sub = space.dist[np.ix_(alive, alive)]
    ii, jj = np.nonzero(sub <= t)
    for a, b in zip(ii.tolist(), jj.tolist()):
        if a < b:
            dsu.union(a, b)
    comps: dict[int, list[int]] = {}
    for idx, p in enumerate(alive.tolist()):
        comps.setdefault(dsu.find(idx), []).append(p)
    return sorted((sorted(c) for c in comps.values()), key=lambda c: c[0])


def sample_kernel_linkage(space: MetricProbabilitySpace, kernel: Kernel,
                          s_grid, t_grid, k_grid) -> np.ndarray:
    """Dense multiparameter clustering samples: labels[i_s, i_t, i_k, point]
    is the smallest point index in the point's cluster, -1 when absent."""
    s_grid = np.asarray(s_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    k_grid = np.asarray(k_grid, dtype=float)
    for g, nm in ((s_grid, "s"), (t_grid, "t"), (k_grid, "k")):
        if g.ndim != 1 or len(g) == 0 or np.any(np.diff(g) <= 0):
            raise ValidationError(f"{nm}-grid must be non-empty and strictly increasing")
    cells = len(s_grid) * len(t_grid) * len(k_grid)
    if cells > 100_000:
        raise ValidationError(f"grid too large ({cells} cells)")
    n = space.n
    labels = np.full((len(s_grid), len(t_grid), len(k_grid), n), -1, dtype=int)
    for i_s, s in enumerate(s_grid):
        dens = density_all(space, kernel, float(s))
        for i_k, k in enumerate(k_grid):
            alive = np.flatnonzero(dens >= k)
            if len(alive) == 0:
                continue
            sub = space.dist[np.ix_(alive, alive)]
            for i_t, t in enumerate(t_grid):
                dsu = _DSU(len(alive))
                ii, jj = np.nonzero(sub <= t)
                for a, b in zip(ii.tolist(), jj.tolist()):
                    if a < b:
                        dsu.union(a, b)
                reps: dict[int, int] = {}
                for idx, p in enumerate(alive.tolist()):
                    root = dsu.find(idx)
                    reps[root] = min(reps.get(root, p), p)
                for idx, p in enumerate(alive.tolist()):
                    labels[i_s, i_t, i_k, p] = reps[dsu.find(idx)]
    return labels


# ---------------------------------------------------------------------------
# transforms / checks / serialization


def reparametrize_forest(forest: MergeForest, fn, curve_json: dict | None = None) -> MergeForest:
    """Apply a strictly increasing map to every u-clock value in the forest."""
    nodes = [
        ForestNode(
            id=nd.id,
            birth=float(fn(nd.birth)),
            death=float(fn(nd.death)),
            parent=nd.parent,
            children=list(nd.children),
            members=[(p, float(fn(e))) for p, e in nd.members],
        )
        for nd in forest.nodes
    ]
    lo, hi = forest.domain
    return MergeForest(
        nodes=nodes,
        unborn=list(forest.unborn),
        n_points=forest.n_points,
        orientation=forest.orientation,
        domain=(float(fn(lo)), float(fn(hi))),
        curve_json=curve_json if curve_json is not None else forest.curve_json,
    )


def check_forest(forest: MergeForest, strict: bool = True) -> None:
    """Structural invariants; strict additionally pins member entries to the
    owning node's life (relaxed on pruned forests, where trimmed-away
    descendants donate members with earlier entries)."""
    lo, hi = forest.domain
    seen: dict[int, int] = {}
    for nd in forest.nodes:
        if not nd.death <= nd.birth:
            raise AssertionError(f"node {nd.id}: death {nd.death} > birth {nd.birth}")
        if nd.death == nd.birth:
            raise AssertionError(f"node {nd.id}: zero-length life")
        if nd.parent is None:
            if nd.death != lo:
                raise AssertionError(f"root {nd.id}: death {nd.death} != domain low {lo}")
        else:
            if forest.nodes[nd.parent].birth != nd.death:
                raise AssertionError(f"node {nd.id}: death != parent birth")
            if nd.id not in forest.nodes[nd.parent].children:
                raise AssertionError(f"node {nd.id}: missing from parent's children")
        for c in nd.children:
            if forest.nodes[c].parent != nd.id:
                raise AssertionError(f"child {c} of {nd.id}: bad parent link")
        for p, entry in nd.members:
            if p in seen:
                raise AssertionError(f"point {p} listed on nodes {seen[p]} and {nd.id}")
            seen[p] = nd.id
            if strict and not (nd.death < entry <= nd.birth):
                raise AssertionError(
                    f"point {p}: entry {entry} outside node {nd.id} life")
            if not strict and entry <= nd.death:
                raise AssertionError(f"point {p}: entry below node {nd.id} death")
    covered = set(seen) | set(forest.unborn)
    if covered != set(range(forest.n_points)) or len(seen) + len(forest.unborn) != forest.n_points:
        raise AssertionError("members + unborn do not partition the points")


def forest_to_json_dict(forest: MergeForest) -> dict:
    return {
        "curve": forest.curve_json or {},
        "orientation": forest.orientation,
        "nodes": [
            {
                "id": nd.id,
                "birth": nd.birth,
                "death": nd.death,
                "parent": nd.parent,
                "members": [[p, e] for p, e in nd.members],
            }
            for nd in forest.nodes
        ],
        "unborn": list(forest.unborn),
    }


def forest_from_json_dict(d: dict) -> MergeForest:
    curve_json = d.get("curve") or None
    orientation = d["orientation"]
    nodes = [
        ForestNode(
            id=int(nd["id"]),
            birth=float(nd["birth"]),
            death=float(nd["death"]),
            parent=None if nd["parent"] is None else int(nd["parent"]),
            members=[(int(p), float(e)) for p, e in nd["members"]],
        )
        for nd in d["nodes"]
    ]
    for nd in nodes:
        if nd.parent is not None:
            nodes[nd.parent].children.append(nd.id)
    n_points = sum(len(nd.members) for nd in nodes) + len(d["unborn"])
    if curve_json and "knots" in curve_json:
        domain = curve_from_json_dict(curve_json).domain_u()
    else:
        lo = min((nd.death for nd in nodes if nd.parent is None), default=0.0)
        hi = max((nd.birth for nd in nodes), default=1.0)
        domain = (lo, hi)
    return MergeForest(
        nodes=nodes,
        unborn=[int(i) for i in d["unborn"]],
        n_points=n_points,
        orientation=orientation,
        domain=domain,
        curve_json=curve_json,
    )
