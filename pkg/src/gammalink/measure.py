"""Mass-based pruning of merge forests and the non-compressing diagnostic.

The mass of a cluster at time u is the total weight of subtree members whose
entry is at or past u; it only shrinks as u grows.  Pruning to a minimum mass
m therefore trims each node's life at the top, exactly like persistence
pruning, and shares its engine (including subtree removal and single-child
gluing).

The non-compressing check asks whether the hierarchy lingers near a target
mass: it fails when some cluster and a (not necessarily proper) ancestor both
sit within kappa of mass m at times at least rho apart.  Masses are step
functions with jumps at member entries, so the check enumerates those
critical values exactly.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .linkage import MergeForest
from .persistence import _postorder, prune_forest_tops
from .space import ValidationError

__all__ = [
    "MassProfile",
    "prune_measure",
    "non_compressing_check",
]


def _point_weights(forest: MergeForest, weights) -> np.ndarray:
    if weights is None:
        return np.full(forest.n_points, 1.0 / forest.n_points)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (forest.n_points,):
        raise ValidationError(
            f"weights shape {weights.shape} != ({forest.n_points},)")
    return weights


@dataclass(frozen=True)
class MassProfile:
    """Per node: subtree member entries sorted ascending with suffix weight
    sums, so the cluster mass at any u is one binary search away."""

    entries: tuple   # per node, ascending tuple of entry values
    suffix: tuple    # per node, suffix[i] = total weight of entries[i:]

    @classmethod
    def build(cls, forest: MergeForest, weights=None) -> "MassProfile":
        w = _point_weights(forest, weights)
        acc: list[list[tuple[float, float]]] = [[] for _ in forest.nodes]
        for nid in _postorder(forest):
            nd = forest.nodes[nid]
            pairs = [(e, w[p]) for p, e in nd.members]
            for c in nd.children:
                pairs.extend(acc[c])
            pairs.sort()
            acc[nid] = pairs
        entries, suffix = [], []
        for pairs in acc:
            es = tuple(e for e, _ in pairs)
            sw = [0.0] * (len(pairs) + 1)
            for i in range(len(pairs) - 1, -1, -1):
                sw[i] = sw[i + 1] + pairs[i][1]
            entries.append(es)
            suffix.append(tuple(sw))
        return cls(entries=tuple(entries), suffix=tuple(suffix))

    def mass(self, node_id: int, u: float) -> float:
        """Weight of subtree members with entry >= u."""
        es = self.entries[node_id]
        return self.suffix[node_id][bisect_left(es, u)]

    def top_with_mass(self, node_id: int, m: float) -> float:
        """Largest u at which the cluster still carries mass >= m."""
        es = self.entries[node_id]
        sw = self.suffix[node_id]
        # suffix sums decrease left to right; find the rightmost entry whose
        # suffix still reaches m (mass at that entry is attained, closed >=)
        best = -math.inf
        for i in range(len(es) - 1, -1, -1):
            if sw[i] >= m - 1e-15:
                best = es[i]
                break
        return best

    def bottom_exceeding(self, node_id: int, m: float) -> float:
        """Largest u at which the cluster mass still exceeds m (strictly)."""
        es = self.entries[node_id]
        sw = self.suffix[node_id]
        for i in range(len(es) - 1, -1, -1):
            if sw[i] > m + 1e-15:
                return es[i]
        return -math.inf


def prune_measure(forest: MergeForest, m: float, weights=None) -> MergeForest:
    """Restrict the hierarchy to clusters of mass at least m."""
    if not (0 < m <= 1):
        raise ValidationError("minimum mass must lie in (0, 1]")
    profile = MassProfile.build(forest, weights)
    tops = [profile.top_with_mass(nid, m) for nid in range(len(forest.nodes))]
    return prune_forest_tops(forest, tops)


def non_compressing_check(forest: MergeForest, m: float, kappa: float,
                          rho: float, weights=None):
    """(ok, witness): ok is False when some cluster and an ancestor-or-self
    both have mass within kappa of m at times at least rho apart.

    Per node the mass-window times form one interval (death, top] where
    top = top_with_mass(m - kappa) capped at birth, with the bottom pushed up
    past bottom_exceeding(m + kappa); interval ends are member entries or node
    bounds, so the scan below is exact.  Both ends are treated as closed when
    measuring the rho gap (boundary cases count as violations).
    """
    if not (m > 0 and kappa > 0 and rho > 0):
        raise ValidationError("m, kappa and rho must be positive")
    profile = MassProfile.build(forest, weights)
    nodes = forest.nodes
    win: list[tuple[float, float] | None] = []
    for nid in range(len(nodes)):
        top = min(nodes[nid].birth, profile.top_with_mass(nid, m - kappa))
        bot = max(nodes[nid].death, profile.bottom_exceeding(nid, m + kappa))
        win.append((bot, top) if top > bot else None)
    for nid in range(len(nodes)):
        if win[nid] is None:
            continue
        anc: int | None = nid
        while anc is not None:
            if win[anc] is not None:
                gap = win[nid][1] - win[anc][0]
                if gap >= rho:
                    witness = {
                        "node": nid,
                        "ancestor": anc,
                        "u_high": win[nid][1],
                        "u_low": win[anc][0],
                    }
                    return False, witness
            anc = nodes[anc].parent
    return True, None
