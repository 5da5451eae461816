"""Persistence diagrams, pruning, flat clusterings, bottleneck, vineyards.

Diagrams pair births to deaths by the Elder rule: at every merge the branch
carrying the oldest birth keeps going, all other branches die there.  Each
leaf of the forest therefore yields one diagram point; roots die at the lower
domain end.  Points are stored as (low, high) on the native axis: for
contravariant slices low is the merge value and high the birth value, for
covariant slices low is the appearance time and high the merge time.

Pruning trims every node's life to the sub-interval where its cluster still
carries at least tau of persistence (or, in the measure variant living in a
sibling module, at least a given mass).  Trimming only ever lowers the top of
a life, removed nodes always form whole subtrees, and a parent left with a
single child is glued with it into one persistent cluster.  That gluing is
what makes flattening return the merged cluster rather than its last-born
fragment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import CurveFamily
from .kernels import Kernel
from .linkage import ForestNode, MergeForest, build_forest, check_forest
from .space import MetricProbabilitySpace, ValidationError

__all__ = [
    "PersistenceDiagram",
    "diagram",
    "total_persistences",
    "separated",
    "bottleneck",
    "prune_forest_tops",
    "prune_persistence",
    "flatten_pf",
    "Vineyard",
    "vineyard",
    "confidence_band",
    "diagram_to_json_dict",
    "diagram_from_json_dict",
    "vineyard_to_json_dict",
]


@dataclass(frozen=True)
class PersistenceDiagram:
    points: tuple  # ((low, high), ...) with high > low, sorted by (-pers, low)
    orientation: str

    def persistences(self) -> list[float]:
        return [high - low for low, high in self.points]


def _sorted_points(pts) -> tuple:
    return tuple(sorted(pts, key=lambda p: (-(p[1] - p[0]), p[0])))


def _postorder(forest: MergeForest) -> list[int]:
    """Node ids with every child listed before its parent."""
    out: list[int] = []
    stack = [nd.id for nd in forest.nodes if nd.parent is None]
    while stack:
        nid = stack.pop()
        out.append(nid)
        stack.extend(forest.nodes[nid].children)
    out.reverse()
    return out


def _subtree_stats(forest: MergeForest):
    """Per node: max member entry in the subtree and the smallest point index
    attaining it (the elder leaf of the branch)."""
    n = len(forest.nodes)
    best_entry = [-math.inf] * n
    best_point = [forest.n_points] * n
    for nid in _postorder(forest):
        nd = forest.nodes[nid]
        e, p = best_entry[nid], best_point[nid]
        for pt, entry in nd.members:
            if entry > e or (entry == e and pt < p):
                e, p = entry, pt
        for c in nd.children:
            ce, cp = best_entry[c], best_point[c]
            if ce > e or (ce == e and cp < p):
                e, p = ce, cp
        best_entry[nid], best_point[nid] = e, p
    return best_entry, best_point


def diagram(forest: MergeForest) -> PersistenceDiagram:
    best_entry, best_point = _subtree_stats(forest)
    pts: list[tuple[float, float]] = []

    def emit(death_u: float, birth_u: float) -> None:
        if forest.orientation == "contra":
            low, high = death_u, birth_u
        else:
            low, high = -birth_u, -death_u
        if high > low:
            pts.append((low, high))

    for nd in forest.nodes:
        if nd.parent is None:
            emit(nd.death, best_entry[nd.id])
        if len(nd.children) >= 2:
            elder = min(nd.children, key=lambda c: (-best_entry[c], best_point[c]))
            for c in nd.children:
                if c != elder:
                    emit(nd.birth, best_entry[c])
    return PersistenceDiagram(points=_sorted_points(pts), orientation=forest.orientation)


def total_persistences(diag: PersistenceDiagram, drop_top: bool = False) -> list[float]:
    pers = sorted(diag.persistences(), reverse=True)
    if drop_top and pers:
        pers = pers[1:]
    return pers


def separated(diag: PersistenceDiagram, a: float, b: float) -> bool:
    """No diagram point with total persistence inside (a, b]."""
    if not (0 < a < b):
        raise ValidationError("need 0 < a < b")
    return not any(a < p <= b for p in diag.persistences())


# ---------------------------------------------------------------------------
# bottleneck distance


def _match_all(need: list, other: list, eps: float) -> bool:
    """Can every diagram point in `need` be matched to a distinct point of
    `other` at l-infinity cost <= eps?  Plain augmenting-path matching."""
    adj = [
        [j for j, q in enumerate(other)
         if max(abs(p[0] - q[0]), abs(p[1] - q[1])) <= eps]
        for p in need
    ]
    owner = [-1] * len(other)

    def try_assign(i: int, visited: set) -> bool:
        for j in adj[i]:
            if j in visited:
                continue
            visited.add(j)
            if owner[j] == -1 or try_assign(owner[j], visited):
                owner[j] = i
                return True
        return False

    for i in range(len(need)):
        if not try_assign(i, set()):
            return False
    return True


def _feasible(d1: list, d2: list, eps: float) -> bool:
    tol = 1e-12
    big1 = [p for p in d1 if p[1] - p[0] > 2 * eps + tol]
    big2 = [q for q in d2 if q[1] - q[0] > 2 * eps + tol]
    return _match_all(big1, d2, eps + tol) and _match_all(big2, d1, eps + tol)


def bottleneck(d1: PersistenceDiagram, d2: PersistenceDiagram) -> float:
    inf1 = sorted(p[0] for p in d1.points if math.isinf(p[1]))
    inf2 = sorted(q[0] for q in d2.points if math.isinf(q[1]))
    if len(inf1) != len(inf2):
        return math.inf
    base = max((abs(a - b) for a, b in zip(inf1, inf2)), default=0.0)

    fin1 = [p for p in d1.points if math.isfinite(p[1])]
    fin2 = [q for q in d2.points if math.isfinite(q[1])]
    cands = {0.0}
    for p in fin1:
        cands.add((p[1] - p[0]) / 2)
    for q in fin2:
        cands.add((q[1] - q[0]) / 2)
    for p in fin1:
        for q in fin2:
            cands.add(max(abs(p[0] - q[0]), abs(p[1] - q[1])))
    levels = sorted(cands)
    lo, hi = 0, len(levels) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(fin1, fin2, levels[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(base, levels[lo])


# ---------------------------------------------------------------------------
# pruning


def prune_forest_tops(forest: MergeForest, raw_tops: list) -> MergeForest:
    """Shared pruning engine: trim each node's life to (death, min(birth,
    raw_top)], drop emptied nodes (always whole subtrees), reattach their
    members to the nearest kept ancestor, and glue single-child chains."""
    nodes = forest.nodes
    n = len(nodes)
    new_birth = [min(nodes[i].birth, raw_tops[i]) for i in range(n)]
    keep = [new_birth[i] > nodes[i].death for i in range(n)]

    def kept_ancestor(nid: int) -> int | None:
        cur = nodes[nid].parent
        while cur is not None and not keep[cur]:
            cur = nodes[cur].parent
        return cur

    inherited: dict[int, list[tuple[int, float]]] = {i: [] for i in range(n)}
    noise: list[int] = list(forest.unborn)
    for nid in range(n):
        if keep[nid]:
            continue
        sink = kept_ancestor(nid)
        if sink is None:
            noise.extend(p for p, _ in nodes[nid].members)
        else:
            # points of a trimmed-away branch join the surviving cluster where
            # the branch merged into it (the sink's birth), capped by the
            # sink's own trimmed top
            inherited[sink].extend(
                (p, new_birth[sink]) for p, _ in nodes[nid].members)

    kept_children: dict[int, list[int]] = {i: [] for i in range(n)}
    for nid in range(n):
        if keep[nid] and nodes[nid].parent is not None:
            kept_children[nodes[nid].parent].append(nid)

    # chain representative: walk up while this node is its parent's only
    # surviving child; everything on the walk glues into one cluster
    rep = list(range(n))

    def find_rep(nid: int) -> int:
        cur = nid
        while True:
            par = nodes[cur].parent
            if par is None or not keep[par] or len(kept_children[par]) != 1:
                return cur
            cur = par

    groups: dict[int, list[int]] = {}
    for nid in range(n):
        if keep[nid]:
            r = find_rep(nid)
            rep[nid] = r
            groups.setdefault(r, []).append(nid)

    new_ids: dict[int, int] = {}
    for nid in range(n):
        if keep[nid] and rep[nid] == nid and nid not in new_ids:
            new_ids[nid] = len(new_ids)

    # ancestors of kept nodes are always kept, so a chain top's parent (when
    # present) is itself kept and already belongs to some group
    out_nodes: list[ForestNode] = []
    for r, new_id in sorted(new_ids.items(), key=lambda kv: kv[1]):
        chain = groups[r]
        bottom = max(chain, key=lambda i: new_birth[i])
        members: list[tuple[int, float]] = []
        for nid in chain:
            members.extend((p, min(e, new_birth[nid])) for p, e in nodes[nid].members)
            members.extend(inherited[nid])
        members.sort(key=lambda pe: (-pe[1], pe[0]))
        par = nodes[r].parent
        out_nodes.append(ForestNode(
            id=new_id,
            birth=new_birth[bottom],
            death=nodes[r].death,
            parent=None if par is None else new_ids[rep[par]],
            members=members,
        ))
    for r, new_id in sorted(new_ids.items(), key=lambda kv: kv[1]):
        bottom = max(groups[r], key=lambda i: new_birth[i])
        out_nodes[new_id].children = [new_ids[rep[c]] for c in kept_children[bottom]]

    pruned = MergeForest(
        nodes=out_nodes,
        unborn=sorted(noise),
        n_points=forest.n_points,
        orientation=forest.orientation,
        domain=forest.domain,
        curve_json=forest.curve_json,
    )
    if __debug__:
        check_forest(pruned)
    return pruned


def _max_subtree_entry(forest: MergeForest) -> list[float]:
    out = [-math.inf] * len(forest.nodes)
    for nid in _postorder(forest):
        nd = forest.nodes[nid]
        e = max((entry for _, entry in nd.members), default=-math.inf)
        for c in nd.children:
            e = max(e, out[c])
        out[nid] = e
    return out


def prune_persistence(forest: MergeForest, tau: float) -> MergeForest:
    """Restrict the hierarchy to clusters still tau-persistent: a cluster
    alive at u counts as pers >= tau when its oldest member entry exceeds
    u + tau."""
    if tau < 0:
        raise ValidationError("tau must be non-negative")
    tops = [m - tau for m in _max_subtree_entry(forest)]
    return prune_forest_tops(forest, tops)


def flatten_pf(forest: MergeForest, tau: float) -> tuple[list[list[int]], list[int]]:
    """Flat clustering: the leaves of the tau-pruned hierarchy, each expanded
    to every point it accumulated; everything else is noise."""
    if not tau > 0:
        raise ValidationError("tau must be positive")
    pruned = prune_persistence(forest, tau)
    clusters: list[list[int]] = []
    noise: list[int] = list(pruned.unborn)
    for nd in pruned.nodes:
        pts = sorted(p for p, _ in nd.members)
        if nd.children:
            noise.extend(pts)
        else:
            clusters.append(pts)
    return sorted(clusters, key=lambda c: c[0]), sorted(noise)


# ---------------------------------------------------------------------------
# vineyards


@dataclass(frozen=True)
class Vineyard:
    family_name: str
    thetas: tuple
    persistences: tuple      # per theta, sorted descending (after drop_top)
    diagrams: tuple          # per theta, PersistenceDiagram or None on failure
    drop_top: bool
    errors: tuple            # (theta, message) pairs


def vineyard(space: MetricProbabilitySpace, kernel: Kernel, family: CurveFamily,
             steps: int, drop_top: bool = False) -> Vineyard:
    if steps < 2:
        raise ValidationError("need at least 2 steps")
    thetas = np.linspace(family.theta_min, family.theta_max, int(steps))
    pers_lists: list[tuple] = []
    diagrams: list = []
    errors: list[tuple[float, str]] = []
    for theta in thetas:
        try:
            curve = family.make(float(theta))
            diag = diagram(build_forest(space, kernel, curve))
        except ValidationError as exc:
            errors.append((float(theta), str(exc)))
            diagrams.append(None)
            pers_lists.append(())
            continue
        diagrams.append(diag)
        pers_lists.append(tuple(total_persistences(diag, drop_top=drop_top)))
    return Vineyard(
        family_name=family.name,
        thetas=tuple(float(t) for t in thetas),
        persistences=tuple(pers_lists),
        diagrams=tuple(diagrams),
        drop_top=bool(drop_top),
        errors=tuple(errors),
    )


def confidence_band(vine: Vineyard, bound) -> list[list[tuple[float, float]]]:
    """Per sampled theta, one interval per displayed persistence value wide
    enough to contain the value at any unsampled theta in the half-cell
    around the sample: a diagram point moves by at most the interleaving
    bound on each axis, so its persistence moves by at most twice that."""
    thetas = vine.thetas
    bands: list[list[tuple[float, float]]] = []
    for i, theta in enumerate(thetas):
        left = thetas[i - 1] if i > 0 else theta
        right = thetas[i + 1] if i + 1 < len(thetas) else theta
        radius = max(
            bound(theta, (theta + left) / 2),
            bound(theta, (theta + right) / 2),
        )
        bands.append([
            (max(p - 2 * radius, 0.0), p + 2 * radius)
            for p in vine.persistences[i]
        ])
    return bands


# ---------------------------------------------------------------------------
# serialization


def diagram_to_json_dict(diag: PersistenceDiagram) -> dict:
    return {
        "orientation": diag.orientation,
        "points": [[low, high] for low, high in diag.points],
    }


def diagram_from_json_dict(d: dict) -> PersistenceDiagram:
    pts = tuple((float(a), float(b)) for a, b in d["points"])
    return PersistenceDiagram(points=_sorted_points(pts), orientation=str(d["orientation"]))


def vineyard_to_json_dict(vine: Vineyard) -> dict:
    return {
        "family": {
            "name": vine.family_name,
            "theta_min": vine.thetas[0] if vine.thetas else 0.0,
            "theta_max": vine.thetas[-1] if vine.thetas else 0.0,
            "steps": len(vine.thetas),
            "drop_top": vine.drop_top,
        },
        "theta": list(vine.thetas),
        "persistences": [list(p) for p in vine.persistences],
    }
