"""Interleaving checks between merge forests over a shared parameter ray.

Two hierarchies interleave at shift eps when, after transporting clusters
through a correspondence between the two point sets, every cluster of one at
time u lands inside a single cluster of the other at the relaxed time u - eps
(internal clock), and symmetrically.  The measured variant additionally
bounds, for every finite union of source clusters, how much mass the
transport may lose.

All per-time clusterings are step functions of u with jumps at node births,
node deaths and member entries, so the checks below evaluate exactly at those
critical values (shifted copies included) plus midpoints between consecutive
ones; no sampling error is involved.

Covariant forests compare with their final clustering persisting past the
curve end, plus an explicit endpoint condition |max_r1 - max_r2| <= eps;
contravariant forests become empty past the curve end, which enforces the
endpoint condition implicitly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .linkage import MergeForest
from .space import AmbientPair, ValidationError

__all__ = [
    "Correspondence",
    "closest_point_correspondence",
    "check_interleaving",
    "check_measured_interleaving",
    "check_multiparam_interleaving",
    "dci_upper",
    "dci_exact_tiny",
]

_TOL = 1e-12


@dataclass(frozen=True)
class Correspondence:
    """Relation between two index sets with both projections surjective."""

    pairs: tuple
    n_x: int
    n_y: int

    def __post_init__(self):
        seen_x = set()
        seen_y = set()
        for i, j in self.pairs:
            if not (0 <= i < self.n_x and 0 <= j < self.n_y):
                raise ValidationError(f"pair ({i}, {j}) out of range")
            seen_x.add(i)
            seen_y.add(j)
        if len(seen_x) != self.n_x or len(seen_y) != self.n_y:
            raise ValidationError(
                "correspondence must cover every point on both sides")

    def image(self, xs) -> frozenset:
        xs = set(xs)
        return frozenset(j for i, j in self.pairs if i in xs)

    def preimage(self, ys) -> frozenset:
        ys = set(ys)
        return frozenset(i for i, j in self.pairs if j in ys)

    def transpose(self) -> "Correspondence":
        return Correspondence(
            pairs=tuple((j, i) for i, j in self.pairs),
            n_x=self.n_y, n_y=self.n_x)

    def to_json_dict(self) -> dict:
        return {"n_x": self.n_x, "n_y": self.n_y,
                "pairs": [[int(i), int(j)] for i, j in sorted(self.pairs)]}


def correspondence_from_json_dict(obj: dict) -> Correspondence:
    return Correspondence(
        pairs=tuple((int(i), int(j)) for i, j in obj["pairs"]),
        n_x=int(obj["n_x"]), n_y=int(obj["n_y"]))


def closest_point_correspondence(pair: AmbientPair) -> Correspondence:
    """Match each point with all nearest neighbours on the other side (ties
    kept), in both directions."""
    cross = pair.cross()
    pairs = set()
    for i in range(cross.shape[0]):
        row = cross[i]
        m = row.min()
        for j in np.flatnonzero(row <= m + _TOL):
            pairs.add((i, int(j)))
    for j in range(cross.shape[1]):
        col = cross[:, j]
        m = col.min()
        for i in np.flatnonzero(col <= m + _TOL):
            pairs.add((int(i), j))
    return Correspondence(pairs=tuple(sorted(pairs)),
                          n_x=cross.shape[0], n_y=cross.shape[1])


def ball_correspondence(pair: AmbientPair, delta: float) -> Correspondence:
    """Relate every pair of points within ambient distance ``delta``.

    Surjective (hence a valid correspondence) exactly when ``delta`` is at
    least the Hausdorff distance of the pair; this is the relation that
    realizes mass-transport bounds in measured-interleaving checks, where
    nearest-neighbour matching can be too sparse.
    """
    cross = pair.cross()
    ii, jj = np.nonzero(cross <= delta + _TOL)
    pairs = tuple(sorted((int(i), int(j)) for i, j in zip(ii, jj)))
    return Correspondence(pairs=pairs, n_x=cross.shape[0], n_y=cross.shape[1])


# ---------------------------------------------------------------------------
# clusterings as point sets at an internal time
# ---------------------------------------------------------------------------

def _subtree_points(forest: MergeForest, nid: int, u: float) -> frozenset:
    pts = []
    stack = [nid]
    while stack:
        k = stack.pop()
        nd = forest.nodes[k]
        pts.extend(p for p, e in nd.members if e >= u)
        stack.extend(nd.children)
    return frozenset(pts)


def _clusters_at_u(forest: MergeForest, u: float):
    """Clusters as frozensets at internal time u, extended for comparisons:
    returns None outside the parameter ray (no condition there)."""
    lo, hi = forest.domain
    if forest.orientation == "contra":
        if u <= 0:
            return None
        if u > hi:
            return []
    else:
        if u >= 0:
            return None
        if u <= lo:
            # final clustering persists past the curve end
            return [_subtree_points(forest, nd.id, u)
                    for nd in forest.nodes if nd.parent is None]
    out = []
    for nd in forest.nodes:
        if nd.death < u <= nd.birth:
            pts = _subtree_points(forest, nd.id, u)
            if pts:
                out.append(pts)
    return out


def _criticals(forest: MergeForest) -> list:
    vals = set()
    for nd in forest.nodes:
        if math.isfinite(nd.birth):
            vals.add(nd.birth)
        if math.isfinite(nd.death):
            vals.add(nd.death)
        for _, e in nd.members:
            if math.isfinite(e):
                vals.add(e)
    for v in forest.domain:
        if math.isfinite(v):
            vals.add(v)
    return sorted(vals)


def _probe_times(left: MergeForest, right: MergeForest, eps: float) -> list:
    base = set(_criticals(left)) | set(_criticals(right))
    vals = set()
    for v in base:
        vals.update((v, v + eps, v - eps))
    s = sorted(vals)
    probes = list(s)
    probes.extend((a + b) / 2 for a, b in zip(s, s[1:]))
    if s:
        probes.append(s[0] - 1.0)
        probes.append(s[-1] + 1.0)
    return sorted(set(probes))


def _containment_map(sources, targets, corr: Correspondence):
    """For each source cluster find the single target cluster containing its
    image; returns (ok, per-source target index or witness cluster)."""
    assign = []
    for c in sources:
        img = corr.image(c)
        hit = None
        for ti, d in enumerate(targets):
            if img <= d:
                hit = ti
                break
        if hit is None:
            return False, c
        assign.append(hit)
    return True, assign


def _native(forest: MergeForest, u: float) -> float:
    return u if forest.orientation == "contra" else -u


def check_interleaving(left: MergeForest, right: MergeForest,
                       corr: Correspondence, eps: float):
    """(ok, witness): does each side's clustering at time u map through the
    correspondence into a single cluster of the other side at time u - eps?"""
    if left.orientation != right.orientation:
        raise ValidationError("forests have mismatched orientations")
    if corr.n_x != left.n_points or corr.n_y != right.n_points:
        raise ValidationError("correspondence size does not match the forests")
    if eps < 0:
        raise ValidationError("eps must be non-negative")
    if left.orientation == "co":
        gap = abs(left.domain[0] - right.domain[0])
        if math.isinf(left.domain[0]) != math.isinf(right.domain[0]) or (
                math.isfinite(gap) and gap > eps + _TOL):
            return False, {"direction": "endpoint", "r": None,
                           "cluster": None}
    directions = (("left", left, right, corr),
                  ("right", right, left, corr.transpose()))
    for u in _probe_times(left, right, eps):
        for name, src, dst, rel in directions:
            sources = _clusters_at_u(src, u)
            if not sources:
                continue
            targets = _clusters_at_u(dst, u - eps)
            if targets is None:
                continue
            ok, res = _containment_map(sources, targets, rel)
            if not ok:
                return False, {"direction": name, "r": _native(src, u),
                               "cluster": sorted(res)}
    return True, None


# ---------------------------------------------------------------------------
# measured variant
# ---------------------------------------------------------------------------

def _point_weights(n: int, weights) -> np.ndarray:
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise ValidationError(f"weights shape {w.shape} != ({n},)")
    return w


def _max_mass_deficit(masses, image_sets, y_weight) -> float:
    """max over subsets S of sum(masses[S]) - weight(union of images[S]).

    Exact: brute force when few sources, otherwise a min-cut formulation
    (pick source i for profit masses[i], pay y_weight[j] once per covered j).
    """
    c = len(masses)
    if c <= 12:
        best = 0.0
        for bits in range(1, 1 << c):
            tot = 0.0
            cover: set = set()
            for i in range(c):
                if bits >> i & 1:
                    tot += masses[i]
                    cover |= image_sets[i]
            best = max(best, tot - sum(y_weight[j] for j in cover))
        return best
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_flow
    # scipy's maximum_flow mishandles capacities at or above 2**31, so
    # quantize to 2**30 and cap the "uncuttable" edges just above the total
    # source capacity (equivalent, but keeps every capacity below 2**31).
    scale = 2 ** 30
    ys = sorted(set().union(*image_sets))
    ypos = {y: k for k, y in enumerate(ys)}
    n = 2 + c + len(ys)
    src, snk = 0, 1
    rows, cols, caps = [], [], []
    src_caps = [int(round(m * scale)) for m in masses]
    big = sum(src_caps) + 1
    for i in range(c):
        rows.append(src); cols.append(2 + i)
        caps.append(src_caps[i])
        for y in image_sets[i]:
            rows.append(2 + i); cols.append(2 + c + ypos[y]); caps.append(big)
    for y in ys:
        rows.append(2 + c + ypos[y]); cols.append(snk)
        caps.append(int(round(y_weight[y] * scale)))
    graph = csr_matrix((caps, (rows, cols)), shape=(n, n), dtype=np.int64)
    cut = maximum_flow(graph, src, snk).flow_value
    return max(0.0, (sum(src_caps) - cut) / scale)


def _mass_deficit_at(sources, targets, assign, corr, wx, wy) -> float:
    groups: dict = {}
    for si, ti in enumerate(assign):
        groups.setdefault(ti, []).append(si)
    total = 0.0
    for sis in groups.values():
        masses = [sum(wx[p] for p in sources[si]) for si in sis]
        images = [set(corr.image(sources[si])) for si in sis]
        total += _max_mass_deficit(masses, images, wy)
    return total


def check_measured_interleaving(left: MergeForest, right: MergeForest,
                                corr: Correspondence, eps: float, m: float,
                                weights_left=None, weights_right=None):
    """(ok, witness): interleaving plus, at every time, a bound m on the mass
    any union of transported clusters may lose."""
    wx = _point_weights(left.n_points, weights_left)
    wy = _point_weights(right.n_points, weights_right)
    ok, witness = check_interleaving(left, right, corr, eps)
    if not ok:
        return ok, witness
    directions = (("left", left, right, corr, wx, wy),
                  ("right", right, left, corr.transpose(), wy, wx))
    for u in _probe_times(left, right, eps):
        for name, src, dst, rel, ws, wt in directions:
            sources = _clusters_at_u(src, u)
            if not sources:
                continue
            targets = _clusters_at_u(dst, u - eps)
            if targets is None:
                continue
            ok, assign = _containment_map(sources, targets, rel)
            if not ok:   # unreachable after the plain check, kept defensive
                return False, {"direction": name, "r": _native(src, u),
                               "cluster": sorted(assign)}
            deficit = _mass_deficit_at(sources, targets, assign, rel, ws, wt)
            if deficit > m + 1e-9:
                return False, {"direction": name, "r": _native(src, u),
                               "cluster": None, "mass_deficit": deficit}
    return True, None


# ---------------------------------------------------------------------------
# multiparameter grid variant
# ---------------------------------------------------------------------------

def _grid_index(grid, value: float):
    idx = int(np.searchsorted(grid, value))
    for k in (idx - 1, idx, idx + 1):
        if 0 <= k < len(grid) and abs(grid[k] - value) <= 1e-9:
            return k
    return None


def _cell_clusters(labels_cell) -> list:
    out: dict = {}
    for p, lab in enumerate(labels_cell):
        if lab >= 0:
            out.setdefault(int(lab), set()).add(p)
    return [frozenset(v) for v in out.values()]


def check_multiparam_interleaving(labels_x, grids_x, labels_y, grids_y,
                                  corr: Correspondence, shifts, m: float = 0.0,
                                  weights_x=None, weights_y=None) -> bool:
    """Interleaving of two sampled three-parameter clusterings under the
    shift (eps_s, eps_t, eps_k): clusters at (s, t, k) must land inside a
    single cluster at (s + eps_s, t + eps_t, k - eps_k) on the other side,
    with total transported mass loss at most m; and symmetrically.

    Both label arrays have shape (len(s_grid), len(t_grid), len(k_grid), n)
    with -1 marking absent points.  Shifted coordinates that fall outside the
    other grid's span are skipped (nothing to compare against at this
    sampling); a shifted coordinate inside the span that misses every grid
    node means the grids are not aligned to the shifts, which is an error.
    """
    es, et, ek = shifts
    lx = np.asarray(labels_x)
    ly = np.asarray(labels_y)
    wx = _point_weights(lx.shape[3], weights_x)
    wy = _point_weights(ly.shape[3], weights_y)
    if corr.n_x != lx.shape[3] or corr.n_y != ly.shape[3]:
        raise ValidationError("correspondence size does not match the labels")
    directions = ((lx, grids_x, ly, grids_y, corr, wx, wy),
                  (ly, grids_y, lx, grids_x, corr.transpose(), wy, wx))
    for la, ga, lb, gb, rel, ws, wt in directions:
        sg, tg, kg = (np.asarray(g, dtype=float) for g in ga)
        gb_arr = tuple(np.asarray(g, dtype=float) for g in gb)
        for i, s in enumerate(sg):
            for j, t in enumerate(tg):
                for l, k in enumerate(kg):
                    sources = _cell_clusters(la[i, j, l])
                    if not sources:
                        continue
                    target = (s + es, t + et, k - ek)
                    if any(v < g[0] - 1e-9 or v > g[-1] + 1e-9
                           for g, v in zip(gb_arr, target)):
                        continue
                    idx = tuple(_grid_index(g, v)
                                for g, v in zip(gb_arr, target))
                    if any(q is None for q in idx):
                        raise ValidationError(
                            "grids are not aligned to the requested shifts")
                    targets = _cell_clusters(lb[idx])
                    ok, assign = _containment_map(sources, targets, rel)
                    if not ok:
                        return False
                    if _mass_deficit_at(sources, targets, assign, rel,
                                        ws, wt) > m + 1e-9:
                        return False
    return True


# ---------------------------------------------------------------------------
# interleaving distance estimates
# ---------------------------------------------------------------------------

def dci_upper(left: MergeForest, right: MergeForest, corr: Correspondence,
              tol: float = 1e-6) -> float:
    """Least eps (up to tol) at which the two forests interleave through the
    correspondence; infinity when no shift suffices."""
    crit = _criticals(left) + _criticals(right)
    cands = {0.0}
    for a, b in itertools.combinations(sorted(set(crit)), 2):
        cands.add(abs(b - a))
    cands = sorted(cands)

    def feasible(e: float) -> bool:
        return check_interleaving(left, right, corr, e)[0]

    lo_idx, hi_idx = 0, len(cands) - 1
    if not feasible(cands[-1]):
        # try one generous shift beyond the largest candidate
        big = cands[-1] + max(1.0, cands[-1])
        if not feasible(big):
            return math.inf
        lo, hi = cands[-1], big
    else:
        if feasible(cands[0]):
            return cands[0]
        while hi_idx - lo_idx > 1:
            mid = (lo_idx + hi_idx) // 2
            if feasible(cands[mid]):
                hi_idx = mid
            else:
                lo_idx = mid
        lo, hi = cands[lo_idx], cands[hi_idx]
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def dci_exact_tiny(left: MergeForest, right: MergeForest,
                   tol: float = 1e-6) -> float:
    """Minimum of dci_upper over every correspondence; only for tiny inputs
    (n_x * n_y <= 12) since all relations are enumerated."""
    nx, ny = left.n_points, right.n_points
    if nx * ny > 12:
        raise ValidationError("exact distance only for n_x * n_y <= 12")
    cells = [(i, j) for i in range(nx) for j in range(ny)]
    best = math.inf
    for bits in range(1, 1 << len(cells)):
        pairs = tuple(cells[k] for k in range(len(cells)) if bits >> k & 1)
        if len({i for i, _ in pairs}) < nx or len({j for _, j in pairs}) < ny:
            continue
        corr = Correspondence(pairs=pairs, n_x=nx, n_y=ny)
        val = dci_upper(left, right, corr, tol=tol)
        best = min(best, val)
    return best
