"""Precomputed parameter-sweep sessions.

A session bundles everything the read-only service and the UI need for one
dataset/kernel/family sweep: the theta grid, one merge forest and diagram per
theta, the vineyard, per-theta confidence bands, point coordinates (when the
dataset is Euclidean), and a cache of flattenings.  Sessions serialize to a
single canonical-JSON file whose payload hash is recorded and verified on
load, and any flattenings stored in the file are recomputed from their
forests on load so a stale cache can never be served.

Flattening combines the two prunings; the ``order`` string gives the order of
application: ``"pm"`` prunes by persistence then by mass, ``"mp"`` the other
way around.  A min-mass of 0 skips mass pruning entirely.  Cluster ids are
assigned by ascending smallest member index, matching the bare persistence
flattening.
"""

from __future__ import annotations

import hashlib
import math
import threading
from typing import Sequence

import numpy as np

from ._jsonutil import dumps, format_float, loads
from .curves import CurveFamily, curve_interleaving_upper
from .kernels import Kernel
from .linkage import MergeForest, build_forest, forest_from_json_dict, \
    forest_to_json_dict
from .measure import prune_measure
from .persistence import PersistenceDiagram, Vineyard, diagram, \
    diagram_from_json_dict, diagram_to_json_dict, flatten_pf, \
    prune_persistence, total_persistences, vineyard_to_json_dict, \
    confidence_band
from .space import MetricProbabilitySpace, ValidationError

__all__ = [
    "SESSION_FORMAT",
    "Session",
    "build_session",
    "flatten_payload",
    "session_json",
    "session_from_json",
    "write_session",
    "load_session",
]

SESSION_FORMAT = "gammalink-session/1"


# ---------------------------------------------------------------------------
# flattening shared by the CLI and the service
# ---------------------------------------------------------------------------


def _leaf_clusters(forest: MergeForest) -> tuple[list[list[int]], list[int]]:
    clusters: list[list[int]] = []
    noise: list[int] = list(forest.unborn)
    for nd in forest.nodes:
        pts = sorted(p for p, _ in nd.members)
        if nd.children:
            noise.extend(pts)
        else:
            clusters.append(pts)
    return sorted(clusters, key=lambda c: c[0]), sorted(noise)


def flatten_payload(forest: MergeForest, tau: float, min_mass: float = 0.0,
                    order: str = "pm", weights=None) -> dict:
    """Labels, noise, count and per-cluster masses of the flat clustering.

    ``weights`` defaults to uniform 1/n, which is also what a bare forest
    file implies; sessions pass their stored weights instead.
    """
    if order not in ("pm", "mp"):
        raise ValidationError(f"order must be 'pm' or 'mp', got {order!r}")
    if not tau > 0:
        raise ValidationError("tau must be positive")
    if min_mass < 0 or min_mass > 1:
        raise ValidationError("min-mass must lie in [0, 1]")
    if min_mass == 0:
        clusters, noise = flatten_pf(forest, tau)
    elif order == "pm":
        pruned = prune_measure(prune_persistence(forest, tau), min_mass, weights)
        clusters, noise = _leaf_clusters(pruned)
    else:
        pruned = prune_persistence(prune_measure(forest, min_mass, weights), tau)
        clusters, noise = _leaf_clusters(pruned)
    n = forest.n_points
    if weights is None:
        w = np.full(n, 1.0 / n)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise ValidationError(f"weights shape {w.shape} != ({n},)")
    labels = [-1] * n
    for ci, pts in enumerate(clusters):
        for p in pts:
            labels[p] = ci
    return {
        "count": len(clusters),
        "labels": labels,
        "noise": noise,
        "masses": [float(sum(w[p] for p in pts)) for pts in clusters],
    }


def _flatten_key(i: int, tau: float, min_mass: float, order: str) -> str:
    return f"{int(i)}|{format_float(float(tau))}|{format_float(float(min_mass))}|{order}"


# ---------------------------------------------------------------------------
# the session object
# ---------------------------------------------------------------------------


class Session:
    """Immutable precomputed sweep; the only mutable state is the insert-only
    flattening cache, guarded by a lock for concurrent service handlers."""

    def __init__(self, *, kernel: Kernel, family_name: str, thetas: Sequence[float],
                 drop_top: bool, forests: Sequence, diagrams: Sequence,
                 vineyard_dict: dict, bands: Sequence, weights: np.ndarray,
                 coords=None, dataset: dict | None = None,
                 errors: Sequence = (), flattenings: dict | None = None):
        self.kernel = kernel
        self.family_name = str(family_name)
        self.thetas = tuple(float(t) for t in thetas)
        self.drop_top = bool(drop_top)
        self.forests = tuple(forests)
        self.diagrams = tuple(diagrams)
        self.vineyard_dict = vineyard_dict
        self.bands = tuple(bands)
        self.weights = np.asarray(weights, dtype=float)
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.dataset = dataset
        self.errors = tuple(errors)
        self._cache: dict[str, dict] = dict(flattenings or {})
        self._lock = threading.Lock()

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int | None:
        return None if self.coords is None else int(self.coords.shape[1])

    def meta_dict(self) -> dict:
        return {
            "format": SESSION_FORMAT,
            "dataset": self.dataset,
            "kernel": self.kernel.to_string(),
            "family": {
                "name": self.family_name,
                "theta_min": self.thetas[0],
                "theta_max": self.thetas[-1],
                "steps": len(self.thetas),
                "drop_top": self.drop_top,
            },
            "n_points": self.n_points,
            "dim": self.dim,
            "theta": list(self.thetas),
        }

    def check_index(self, i) -> int:
        try:
            idx = int(i)
        except (TypeError, ValueError):
            raise ValidationError("theta index") from None
        if idx != i and not isinstance(i, str):
            raise ValidationError("theta index")   # reject silent truncation
        if not 0 <= idx < len(self.thetas):
            raise ValidationError("theta index")
        return idx

    def slice_dict(self, i) -> dict:
        idx = self.check_index(i)
        forest = self.forests[idx]
        diag = self.diagrams[idx]
        summary = None
        if forest is not None:
            lo, hi = forest.domain
            summary = {
                "nodes": len(forest.nodes),
                "unborn": len(forest.unborn),
                "orientation": forest.orientation,
                "domain": [lo, hi],
            }
        return {
            "theta": self.thetas[idx],
            "diagram": None if diag is None else diagram_to_json_dict(diag),
            "forest": summary,
        }

    def band_dict(self, i) -> dict:
        idx = self.check_index(i)
        return {
            "theta": self.thetas[idx],
            "band": [list(iv) for iv in self.bands[idx]],
        }

    def flatten(self, i, tau: float, min_mass: float = 0.0,
                order: str = "pm") -> dict:
        idx = self.check_index(i)
        forest = self.forests[idx]
        if forest is None:
            raise ValidationError("slice")
        key = _flatten_key(idx, tau, min_mass, order)
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        payload = flatten_payload(forest, float(tau), float(min_mass), order,
                                  self.weights)
        with self._lock:
            self._cache.setdefault(key, payload)
        return payload


# ---------------------------------------------------------------------------
# building
# ---------------------------------------------------------------------------


def build_session(space: MetricProbabilitySpace, kernel: Kernel,
                  family: CurveFamily, steps: int, *, coords=None,
                  dataset: dict | None = None, drop_top: bool = False) -> Session:
    """Precompute forests, diagrams, vineyard and confidence bands for the
    theta grid of the family."""
    if int(steps) < 2:
        raise ValidationError("need at least 2 steps")
    thetas = np.linspace(family.theta_min, family.theta_max, int(steps))
    forests: list = []
    diagrams: list = []
    pers: list = []
    errors: list = []
    for theta in thetas:
        try:
            curve = family.make(float(theta))
            forest = build_forest(space, kernel, curve)
        except ValidationError as exc:
            errors.append((float(theta), str(exc)))
            forests.append(None)
            diagrams.append(None)
            pers.append(())
            continue
        diag = diagram(forest)
        forests.append(forest)
        diagrams.append(diag)
        pers.append(tuple(total_persistences(diag, drop_top=drop_top)))
    vine = Vineyard(
        family_name=family.name,
        thetas=tuple(float(t) for t in thetas),
        persistences=tuple(pers),
        diagrams=tuple(diagrams),
        drop_top=bool(drop_top),
        errors=tuple(errors),
    )

    def bound(theta: float, mid: float) -> float:
        try:
            return curve_interleaving_upper(family.make(float(theta)),
                                            family.make(float(mid)))
        except ValidationError:
            return math.inf    # degenerate member: no finite modulus

    bands = confidence_band(vine, bound)
    return Session(
        kernel=kernel,
        family_name=family.name,
        thetas=vine.thetas,
        drop_top=drop_top,
        forests=forests,
        diagrams=diagrams,
        vineyard_dict=vineyard_to_json_dict(vine),
        bands=bands,
        weights=space.weights,
        coords=coords,
        dataset=dataset,
        errors=errors,
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _payload_dict(session: Session) -> dict:
    return {
        "format": SESSION_FORMAT,
        "dataset": session.dataset,
        "kernel": session.kernel.to_string(),
        "family": {
            "name": session.family_name,
            "theta_min": session.thetas[0],
            "theta_max": session.thetas[-1],
            "steps": len(session.thetas),
            "drop_top": session.drop_top,
        },
        "theta": list(session.thetas),
        "weights": [float(w) for w in session.weights],
        "coords": None if session.coords is None
        else [[float(v) for v in row] for row in session.coords],
        "slices": [
            {
                "theta": session.thetas[i],
                "forest": None if session.forests[i] is None
                else forest_to_json_dict(session.forests[i]),
                "diagram": None if session.diagrams[i] is None
                else diagram_to_json_dict(session.diagrams[i]),
            }
            for i in range(len(session.thetas))
        ],
        "vineyard": session.vineyard_dict,
        "bands": [[list(iv) for iv in band] for band in session.bands],
        "errors": [[t, msg] for t, msg in session.errors],
        "flattenings": dict(session._cache),
    }


def session_json(session: Session) -> str:
    payload = _payload_dict(session)
    body = dumps(payload)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return dumps({"hash": digest, "session": payload})


def session_from_json(text: str) -> Session:
    try:
        obj = loads(text)
    except ValueError as exc:
        raise ValidationError(f"unreadable session file: {exc}") from None
    if not isinstance(obj, dict) or "hash" not in obj or "session" not in obj:
        raise ValidationError("not a session file")
    payload = obj["session"]
    digest = hashlib.sha256(dumps(payload).encode("utf-8")).hexdigest()
    if digest != obj["hash"]:
        raise ValidationError("session hash mismatch")
    if payload.get("format") != SESSION_FORMAT:
        raise ValidationError(f"unsupported session format {payload.get('format')!r}")
    forests = []
    diagrams = []
    for sl in payload["slices"]:
        forests.append(None if sl["forest"] is None
                       else forest_from_json_dict(sl["forest"]))
        diagrams.append(None if sl["diagram"] is None
                        else diagram_from_json_dict(sl["diagram"]))
    fam = payload["family"]
    session = Session(
        kernel=Kernel.from_string(payload["kernel"]),
        family_name=fam["name"],
        thetas=payload["theta"],
        drop_top=bool(fam["drop_top"]),
        forests=forests,
        diagrams=diagrams,
        vineyard_dict=payload["vineyard"],
        bands=[[tuple(iv) for iv in band] for band in payload["bands"]],
        weights=payload["weights"],
        coords=payload["coords"],
        dataset=payload["dataset"],
        errors=[(float(t), str(m)) for t, m in payload["errors"]],
    )
    for key, stored in payload.get("flattenings", {}).items():
        parts = key.split("|")
        if len(parts) != 4:
            raise ValidationError(f"bad flattening key {key!r}")
        idx, tau, min_mass, order = int(parts[0]), float(parts[1]), \
            float(parts[2]), parts[3]
        fresh = session.flatten(idx, tau, min_mass, order)
        if fresh != stored:
            raise ValidationError(f"stored flattening {key!r} does not "
                                  "reproduce from its forest")
    return session


def write_session(session: Session, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(session_json(session))


def load_session(path) -> Session:
    with open(path, encoding="utf-8") as fh:
        return session_from_json(fh.read())
