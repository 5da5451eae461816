"""Monotone parameter curves in (scale, connectivity, threshold) space.

A curve assigns to each time r a triple (s, t, k): density bandwidth s,
connection radius t, density threshold k.  Contravariant curves tighten as r
grows (s, t non-increasing, k non-decreasing), covariant curves relax.  All
curves are piecewise-linear between knots, which covers every family used in
the experiments and arbitrary user-drawn curves.

Internally everything downstream runs on a single clock u in which all curves
behave contravariantly: u = r for contravariant curves and u = -r for
covariant ones.  Public values are always native r.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .kernels import Kernel
from .space import ValidationError

__all__ = [
    "Curve",
    "line",
    "hline",
    "vertical",
    "vertical_skew",
    "piecewise",
    "evaluate",
    "curves_interleaved",
    "curve_interleaving_upper",
    "is_covering",
    "RescaledCurve",
    "rescale_phi",
    "CurveFamily",
    "family_grid",
    "parse_curve",
    "parse_family",
    "curve_from_json_dict",
]

_TOL = 1e-12


def _as_knots(knots) -> tuple[tuple[float, float, float, float], ...]:
    out = []
    for kn in knots:
        r, s, t, k = (float(v) for v in kn)
        out.append((r, s, t, k))
    return tuple(out)


@dataclass(frozen=True)
class Curve:
    """Piecewise-linear parameter curve; evaluation extends the end segments."""

    knots: tuple[tuple[float, float, float, float], ...]
    max_r: float
    orientation: str  # "contra" | "co"
    name: str | None = None
    spec_str: str | None = None

    def __post_init__(self):
        knots = _as_knots(self.knots)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "max_r", float(self.max_r))
        if self.orientation not in ("contra", "co"):
            raise ValidationError(f"unknown orientation {self.orientation!r}")
        if len(knots) < 2:
            raise ValidationError("curve needs at least 2 knots")
        rs = [kn[0] for kn in knots]
        if any(not math.isfinite(v) for kn in knots for v in kn):
            raise ValidationError("knot values must be finite")
        if any(r1 <= r0 + _TOL * max(1.0, abs(r0)) for r0, r1 in zip(rs, rs[1:])):
            raise ValidationError("knot r-values must be strictly increasing")
        if rs[0] < -_TOL:
            raise ValidationError("knot r-values must be non-negative")
        if not (self.max_r > 0):
            raise ValidationError("max_r must be positive")
        if math.isfinite(self.max_r) and self.max_r < rs[-1] - 1e-9:
            raise ValidationError("max_r below final knot")

        sign = 1.0 if self.orientation == "contra" else -1.0
        for i, (k0, k1) in enumerate(zip(knots, knots[1:])):
            for c, comp in ((1, "s"), (2, "t")):
                if sign * (k1[c] - k0[c]) > 1e-9:
                    raise ValidationError(
                        f"{comp} must be {'non-increasing' if sign > 0 else 'non-decreasing'}"
                        f" (knots {i}, {i + 1})"
                    )
            if sign * (k1[3] - k0[3]) < -1e-9:
                raise ValidationError(
                    f"k must be {'non-decreasing' if sign > 0 else 'non-increasing'}"
                    f" (knots {i}, {i + 1})"
                )

        # Components must stay non-negative across the whole domain, strictly
        # positive strictly inside it.  With linear pieces it is enough to look
        # at interior knots, the (extended) domain endpoints, and at the final
        # slopes when the domain is unbounded.
        for kn in knots[1:-1]:
            if min(kn[1:]) <= 0:
                raise ValidationError("components must be positive inside the domain")
        for probe in (0.0, self.max_r if math.isfinite(self.max_r) else None):
            if probe is None:
                continue
            s, t, k = (float(v[0]) for v in self._components(np.array([probe])))
            if min(s, t, k) < -1e-9:
                raise ValidationError("components must stay non-negative on the domain")
        if not math.isfinite(self.max_r):
            (r0, s0, t0, k0), (r1, s1, t1, k1) = knots[-2], knots[-1]
            span = r1 - r0
            slopes = ((s1 - s0) / span, (t1 - t0) / span, (k1 - k0) / span)
            decaying = slopes[:2] if self.orientation == "contra" else (slopes[2],)
            if any(abs(v) > 1e-12 for v in decaying):
                raise ValidationError(
                    "unbounded domain requires the shrinking components to level off"
                )

    # -- native evaluation --------------------------------------------------

    def _components(self, r):
        """Vectorized (s, t, k) with two-sided linear extension, no domain check."""
        r = np.asarray(r, dtype=float)
        kn = np.asarray(self.knots)
        seg = np.clip(np.searchsorted(kn[:, 0], r, side="right") - 1, 0, len(kn) - 2)
        r0 = kn[seg, 0]
        r1 = kn[seg + 1, 0]
        frac = (r - r0) / (r1 - r0)
        out = kn[seg, 1:] + frac[..., None] * (kn[seg + 1, 1:] - kn[seg, 1:])
        return out[..., 0], out[..., 1], out[..., 2]

    def evaluate(self, r: float):
        """(s, t, k) at native time r, or None past the end of the domain."""
        r = float(r)
        if r < 0 or r >= self.max_r:
            return None
        s, t, k = self._components(np.array([r]))
        return float(s[0]), float(t[0]), float(k[0])

    # -- unified clock ------------------------------------------------------

    @property
    def is_contra(self) -> bool:
        return self.orientation == "contra"

    def to_u(self, r):
        return r if self.is_contra else -r

    def from_u(self, u):
        return u if self.is_contra else -u

    def domain_u(self) -> tuple[float, float]:
        if self.is_contra:
            return 0.0, self.max_r
        return -self.max_r, 0.0

    def eval_u(self, u):
        u = np.asarray(u, dtype=float)
        r = u if self.is_contra else -u
        return self._components(r)

    def knot_us(self) -> np.ndarray:
        us = np.array([kn[0] for kn in self.knots])
        if not self.is_contra:
            us = -us[::-1]
        lo, hi = self.domain_u()
        return us[(us >= lo) & (us <= hi)]

    def pieces_u(self):
        """Affine pieces (u0, u1, (as, bs), (at, bt), (ak, bk)), value = a + b*u.

        Pieces cover the whole u-domain; the outermost ones carry the linear
        extensions of the end segments.
        """
        lo, hi = self.domain_u()
        kn = list(self.knots)
        pieces = []
        for (r0, s0, t0, k0), (r1, s1, t1, k1) in zip(kn, kn[1:]):
            span = r1 - r0
            coeffs = []
            for v0, v1 in ((s0, s1), (t0, t1), (k0, k1)):
                slope_r = (v1 - v0) / span
                if self.is_contra:
                    coeffs.append((v0 - slope_r * r0, slope_r))
                else:
                    # r = -u, so v = v0 + slope_r * (-u - r0)
                    coeffs.append((v0 - slope_r * r0, -slope_r))
            if self.is_contra:
                pieces.append([r0, r1, *coeffs])
            else:
                pieces.append([-r1, -r0, *coeffs])
        if not self.is_contra:
            pieces.reverse()
        pieces[0][0] = lo
        pieces[-1][1] = hi
        # drop pieces squeezed out by domain clipping
        return [tuple(p) for p in pieces if p[0] < p[1]]

    def to_json_dict(self) -> dict:
        d = {
            "orientation": self.orientation,
            "max_r": self.max_r,
            "knots": [list(kn) for kn in self.knots],
        }
        if self.name:
            d["name"] = self.name
        if self.spec_str:
            d["spec"] = self.spec_str
        return d


def curve_from_json_dict(d: dict) -> Curve:
    return Curve(
        knots=_as_knots(d["knots"]),
        max_r=float(d["max_r"]),
        orientation=str(d["orientation"]),
        name=d.get("name"),
        spec_str=d.get("spec"),
    )


# ---------------------------------------------------------------------------
# constructors


def line(x: float, y: float, param: str = "k") -> Curve:
    """Line from (x, x, 0) to (0, 0, y), with s = t along the way.

    param="k" clocks it by the threshold (contravariant, domain (0, y));
    param="s" clocks it by the scale (covariant, domain (0, x)).  One of the
    intercepts may be infinite, yielding the constant-coordinate slice.
    """
    x, y = float(x), float(y)
    if param not in ("k", "s"):
        raise ValidationError(f"param must be 'k' or 's', got {param!r}")
    if math.isinf(x) and math.isinf(y):
        raise ValidationError("x and y cannot both be infinite")
    if not x > 0 or not y > 0:
        raise ValidationError("intercepts must be positive")
    if param == "k":
        if math.isinf(x):
            raise ValidationError("infinite x requires param='s'")
        if math.isinf(y):
            # (x, x, r) on (0, inf)
            return Curve(
                knots=((0.0, x, x, 0.0), (1.0, x, x, 1.0)),
                max_r=math.inf,
                orientation="contra",
                spec_str=f"line:x={x:g},y=inf",
            )
        return Curve(
            knots=((0.0, x, x, 0.0), (y, 0.0, 0.0, y)),
            max_r=y,
            orientation="contra",
            spec_str=f"line:x={x:g},y={y:g}",
        )
    if math.isinf(y):
        raise ValidationError("infinite y requires param='k'")
    if math.isinf(x):
        return hline(y)
    return Curve(
        knots=((0.0, 0.0, 0.0, y), (x, x, x, 0.0)),
        max_r=x,
        orientation="co",
        spec_str=f"line:x={x:g},y={y:g},param=s",
    )


def hline(y: float) -> Curve:
    """(r, r, y) on (0, inf): scale sweep at a fixed threshold (covariant)."""
    y = float(y)
    if not y > 0:
        raise ValidationError("y must be positive")
    return Curve(
        knots=((0.0, 0.0, 0.0, y), (1.0, 1.0, 1.0, y)),
        max_r=math.inf,
        orientation="co",
        spec_str=f"hline:y={y:g}",
    )


def vertical(s: float, t: float) -> Curve:
    """(s, t, r) on (0, inf): threshold sweep at fixed scale and radius."""
    s, t = float(s), float(t)
    if not s > 0 or not t > 0:
        raise ValidationError("s and t must be positive")
    return Curve(
        knots=((0.0, s, t, 0.0), (1.0, s, t, 1.0)),
        max_r=math.inf,
        orientation="contra",
        spec_str=f"vline:s={s:g},t={t:g}",
    )


def vertical_skew(s: float, t: float, beta: float) -> Curve:
    """(s, t - r/beta, r) on (0, beta*t): threshold sweep with shrinking radius."""
    s, t, beta = float(s), float(t), float(beta)
    if not s > 0 or not t > 0 or not beta > 0:
        raise ValidationError("s, t and beta must be positive")
    end = beta * t
    return Curve(
        knots=((0.0, s, t, 0.0), (end, s, 0.0, end)),
        max_r=end,
        orientation="contra",
        spec_str=f"vskew:s={s:g},t={t:g},beta={beta:g}",
    )


def piecewise(knots, orientation: str | None = None, max_r: float | None = None,
              name: str | None = None) -> Curve:
    """Curve through explicit knots; orientation inferred when omitted."""
    knots = _as_knots(knots)
    if orientation is None:
        def fits(sign: float) -> bool:
            return all(
                sign * (k1[1] - k0[1]) <= 1e-9
                and sign * (k1[2] - k0[2]) <= 1e-9
                and sign * (k1[3] - k0[3]) >= -1e-9
                for k0, k1 in zip(knots, knots[1:])
            )
        if fits(1.0):
            orientation = "contra"
        elif fits(-1.0):
            orientation = "co"
        else:
            raise ValidationError("knots are not monotone in either orientation")
    if max_r is None:
        max_r = knots[-1][0]
    return Curve(knots=knots, max_r=max_r, orientation=orientation, name=name)


def evaluate(curve: Curve, r: float):
    """(s, t, k) at r, or None once r passes the end of the curve."""
    return curve.evaluate(r)


# ---------------------------------------------------------------------------
# interleaving of curves
#
# Two curves are eps-interleaved when their domain endpoints differ by at most
# eps and, on the shared clock u, curve1 at u is at least as tight as curve2
# was at u - eps (s, t no larger; k no smaller), and symmetrically.  For
# piecewise-linear curves it suffices to test the inequality at every piece
# breakpoint of either side and to compare slopes on unbounded pieces.


def _endpoint_gap(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b) and (a > 0) == (b > 0):
        return 0.0
    return abs(a - b)


def _tight_leq(v1, v2, tol: float = 1e-9) -> bool:
    s1, t1, k1 = v1
    s2, t2, k2 = v2
    return s1 <= s2 + tol and t1 <= t2 + tol and k1 >= k2 - tol


def _shifted_dominates(c1: Curve, c2: Curve, eps: float, tol: float = 1e-9) -> bool:
    """True when c1(u) is tighter than c2(u - eps) across the overlap."""
    lo1, hi1 = c1.domain_u()
    lo2, hi2 = c2.domain_u()
    lo = max(lo1, lo2 + eps)
    hi = min(hi1, hi2 + eps)
    if lo > hi:
        return True
    cands: list[float] = []
    for u in c1.knot_us():
        if lo <= u <= hi:
            cands.append(float(u))
    for u in c2.knot_us():
        if lo <= u + eps <= hi:
            cands.append(float(u + eps))
    for end in (lo, hi):
        if math.isfinite(end):
            cands.append(end)
    for u in cands:
        if not _tight_leq(
            tuple(float(v[0]) for v in c1.eval_u(np.array([u]))),
            tuple(float(v[0]) for v in c2.eval_u(np.array([u - eps]))),
            tol,
        ):
            return False
    # unbounded ends: on the extreme affine pieces the inequality holds along
    # the whole ray iff it holds at the finite breakpoint with the right slope
    # ordering (value = a + b*u; toward +inf need b1 <= b2 for s,t, b1 >= b2
    # for k; reversed toward -inf)
    for toward_pos, take in ((True, -1), (False, 0)):
        end = hi if toward_pos else lo
        if math.isfinite(end):
            continue
        p1 = c1.pieces_u()[take]
        p2 = c2.pieces_u()[take]
        sgn = 1.0 if toward_pos else -1.0
        if sgn * (p1[2][1] - p2[2][1]) > tol or sgn * (p1[3][1] - p2[3][1]) > tol:
            return False
        if sgn * (p1[4][1] - p2[4][1]) < -tol:
            return False
    return True


def curves_interleaved(c1: Curve, c2: Curve, eps: float, tol: float = 1e-9) -> bool:
    if eps < 0:
        raise ValidationError("eps must be non-negative")
    if c1.orientation != c2.orientation:
        raise ValidationError("cannot interleave curves of opposite orientation")
    lo1, hi1 = c1.domain_u()
    lo2, hi2 = c2.domain_u()
    if _endpoint_gap(lo1, lo2) > eps + tol or _endpoint_gap(hi1, hi2) > eps + tol:
        return False
    return _shifted_dominates(c1, c2, eps, tol) and _shifted_dominates(c2, c1, eps, tol)


def curve_interleaving_upper(c1: Curve, c2: Curve, tol: float = 1e-9) -> float:
    """Smallest eps (up to tol) at which the two curves interleave."""
    if curves_interleaved(c1, c2, 0.0, tol):
        return 0.0
    hi = 1.0
    while not curves_interleaved(c1, c2, hi, tol):
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    lo = 0.0
    while hi - lo > max(tol, 1e-12 * hi):
        mid = 0.5 * (lo + hi)
        if curves_interleaved(c1, c2, mid, tol):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# covering curves and the density rescaling


def is_covering(curve: Curve, tol: float = 1e-9) -> bool:
    """Contravariant, scale strictly falling to 0, threshold strictly rising from 0."""
    if not curve.is_contra or not math.isfinite(curve.max_r):
        return False
    kn = curve.knots
    if abs(kn[0][3]) > tol:
        return False
    s_end, _, _ = (float(v[0]) for v in curve._components(np.array([curve.max_r])))
    if abs(s_end) > tol:
        return False
    for k0, k1 in zip(kn, kn[1:]):
        if not (k1[1] < k0[1] - tol * max(1.0, abs(k0[1]))):
            return False
        if not (k1[3] > k0[3] + tol * max(1.0, abs(k0[3]))):
            return False
    return True


@dataclass(frozen=True)
class RescaledCurve:
    """A covering curve reclocked by phi(r) = k(r) / volume(dim, s(r)).

    evaluate(phi(r)) reproduces the base curve at r; the new clock runs over
    (0, inf).  Not piecewise-linear, so it lives outside the knot format.
    """

    base: Curve
    kernel: Kernel
    dim: int

    @property
    def orientation(self) -> str:
        return "contra"

    @property
    def max_r(self) -> float:
        return math.inf

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        s, _, k = self.base._components(r)
        s = np.asarray(s, dtype=float)
        k = np.asarray(k, dtype=float)
        vol = np.where(s > 0, s, 1.0) ** self.dim * self.kernel.unit_volume(self.dim)
        out = np.where(s > 0, k / vol, np.inf)
        out = np.where(k == 0, 0.0, out)
        return out if out.ndim else float(out)

    def phi_inv(self, v: float) -> float:
        v = float(v)
        if v <= 0:
            return 0.0
        if math.isinf(v):
            return self.base.max_r
        lo, hi = 0.0, self.base.max_r
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.phi(mid) < v:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-10 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    def evaluate(self, v: float):
        v = float(v)
        if v < 0:
            return None
        r = self.phi_inv(v)
        s, t, k = (float(x[0]) for x in self.base._components(np.array([r])))
        return s, t, k


def rescale_phi(curve: Curve, kernel: Kernel, dim: int) -> RescaledCurve:
    if not is_covering(curve):
        raise ValidationError("rescaling requires a covering curve")
    return RescaledCurve(base=curve, kernel=kernel, dim=int(dim))


# ---------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class CurveFamily:
    name: str
    make: Callable[[float], Curve] = field(compare=False)
    theta_min: float = 0.0
    theta_max: float = 1.0

    def __post_init__(self):
        if not (self.theta_max > self.theta_min):
            raise ValidationError("empty parameter range")


def family_grid(family: CurveFamily, steps: int) -> list[Curve]:
    if steps < 2:
        raise ValidationError("need at least 2 steps")
    thetas = np.linspace(family.theta_min, family.theta_max, int(steps))
    return [family.make(float(th)) for th in thetas]


# ---------------------------------------------------------------------------
# text grammar
#
#   line:x=<f>,y=<f>[,param=k|s]   vline:s=<f>,t=<f>   vskew:s=<f>,t=<f>,beta=<f>
#   hline:y=<f>                    pl:<r,s,t,k>;<r,s,t,k>;...
# families: <curve-template>@theta=<min>:<max>:<steps> with {theta} inside.


def _parse_kv(body: str, required: Sequence[str], optional: Sequence[str] = ()) -> dict:
    out: dict[str, str] = {}
    for part in body.split(","):
        if "=" not in part:
            raise ValidationError(f"expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        key = key.strip()
        if key not in (*required, *optional):
            raise ValidationError(f"unknown curve option {key!r}")
        out[key] = val.strip()
    missing = [k for k in required if k not in out]
    if missing:
        raise ValidationError(f"missing curve option(s): {', '.join(missing)}")
    return out


def _parse_float(text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"bad {what}: {text!r}") from None


def parse_curve(text: str) -> Curve:
    text = text.strip()
    if ":" not in text:
        raise ValidationError(f"bad curve spec {text!r}")
    kind, body = text.split(":", 1)
    if kind == "line":
        kv = _parse_kv(body, ("x", "y"), ("param",))
        param = kv.get("param", "k")
        c = line(_parse_float(kv["x"], "x"), _parse_float(kv["y"], "y"), param=param)
    elif kind == "vline":
        kv = _parse_kv(body, ("s", "t"))
        c = vertical(_parse_float(kv["s"], "s"), _parse_float(kv["t"], "t"))
    elif kind == "vskew":
        kv = _parse_kv(body, ("s", "t", "beta"))
        c = vertical_skew(
            _parse_float(kv["s"], "s"),
            _parse_float(kv["t"], "t"),
            _parse_float(kv["beta"], "beta"),
        )
    elif kind == "hline":
        kv = _parse_kv(body, ("y",))
        c = hline(_parse_float(kv["y"], "y"))
    elif kind == "pl":
        knots = []
        for chunk in body.split(";"):
            vals = chunk.split(",")
            if len(vals) != 4:
                raise ValidationError(f"pl knot needs 4 numbers, got {chunk!r}")
            knots.append(tuple(_parse_float(v, "knot value") for v in vals))
        c = piecewise(knots)
        object.__setattr__(c, "spec_str", text)
    else:
        raise ValidationError(f"unknown curve kind {kind!r}")
    return c


_FAMILY_RE = re.compile(r"^(?P<tpl>.*)@theta=(?P<min>[^:]+):(?P<max>[^:]+):(?P<steps>\d+)$")


def parse_family(text: str) -> tuple[CurveFamily, int]:
    """Parse `<template>@theta=<min>:<max>:<steps>`; returns (family, steps)."""
    m = _FAMILY_RE.match(text.strip())
    if not m:
        raise ValidationError(f"bad family spec {text!r}")
    tpl = m.group("tpl")
    if "{theta}" not in tpl:
        raise ValidationError("family template must contain {theta}")
    tmin = _parse_float(m.group("min"), "theta min")
    tmax = _parse_float(m.group("max"), "theta max")
    steps = int(m.group("steps"))

    def make(theta: float) -> Curve:
        return parse_curve(tpl.replace("{theta}", repr(theta)))

    return CurveFamily(name=tpl, make=make, theta_min=tmin, theta_max=tmax), steps
