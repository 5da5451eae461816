"""Kernel shapes, generalized inverses, and kernel density estimates.

A kernel is a non-increasing right-continuous function K : [0, inf) -> [0, inf)
with K(0) = 1 and finite positive integral.  The local density estimate at
bandwidth s is

    density(x, s) = sum_y  w_y * K(d(x, y) / s)

with no 1/s^d normalization: dividing by the bandwidth volume would break
monotonicity in s, which the three-parameter filtration relies on.  The
Euclidean reference volume v_s = integral of K(|x|/s) over R^d is exposed
separately for the density-rescaling used by the consistency experiments.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import special

from .space import MetricProbabilitySpace, ValidationError

__all__ = [
    "Kernel",
    "IndexedSubset",
    "density",
    "density_all",
    "filtration_membership",
]

_SHAPES = ("uniform", "epanechnikov", "triangular", "gauss")


@dataclass(frozen=True)
class Kernel:
    """One of the four built-in kernel shapes, normalized to K(0) = 1.

    ``uniform``        1 on [0, 1), 0 after (right-continuous at the jump).
    ``epanechnikov``   max(0, 1 - r^2).
    ``triangular``     max(0, 1 - r).
    ``gauss``          exp(-r^2 / 2) truncated to 0 at ``cutoff``.
    """

    shape: str
    cutoff: float | None = None

    def __post_init__(self) -> None:
        if self.shape not in _SHAPES:
            raise ValidationError(f"unknown kernel shape {self.shape!r}")
        if self.shape == "gauss":
            if self.cutoff is None or not (self.cutoff > 0) or math.isinf(self.cutoff):
                raise ValidationError("gauss kernel needs a finite positive cutoff")
        elif self.cutoff is not None:
            raise ValidationError(f"{self.shape} kernel takes no cutoff")

    @staticmethod
    def from_string(text: str) -> "Kernel":
        text = text.strip()
        m = re.fullmatch(r"gauss:([^:]+)", text)
        if m:
            try:
                c = float(m.group(1))
            except ValueError:
                raise ValidationError(f"bad gauss cutoff {m.group(1)!r}") from None
            return Kernel("gauss", c)
        if text in _SHAPES[:3]:
            return Kernel(text)
        raise ValidationError(f"unknown kernel {text!r}")

    def to_string(self) -> str:
        if self.shape == "gauss":
            return f"gauss:{self.cutoff:g}"
        return self.shape

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise ValidationError("kernel argument must be >= 0")
        if self.shape == "uniform":
            out = np.where(r < 1.0, 1.0, 0.0)
        elif self.shape == "epanechnikov":
            out = np.maximum(0.0, 1.0 - r * r)
        elif self.shape == "triangular":
            out = np.maximum(0.0, 1.0 - r)
        else:
            out = np.where(r < self.cutoff, np.exp(-0.5 * r * r), 0.0)
        return out if out.ndim else float(out)

    def inverse(self, t):
        """Generalized inverse K^{-1}(t) = min{u >= 0 : K(u) <= t}, t > 0.

        Satisfies the duality K^{-1}(t) > s  iff  t < K(s).
        """
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ValidationError("kernel inverse needs t > 0")
        if self.shape == "uniform":
            out = np.where(t < 1.0, 1.0, 0.0)
        elif self.shape == "epanechnikov":
            out = np.where(t < 1.0, np.sqrt(np.maximum(0.0, 1.0 - t)), 0.0)
        elif self.shape == "triangular":
            out = np.where(t < 1.0, 1.0 - np.minimum(t, 1.0), 0.0)
        else:
            # exp(-u^2/2) <= t  at  u >= sqrt(-2 ln t); past the cutoff K is 0.
            with np.errstate(invalid="ignore"):
                base = np.sqrt(np.maximum(0.0, -2.0 * np.log(np.minimum(t, 1.0))))
            out = np.where(t < 1.0, np.minimum(base, self.cutoff), 0.0)
        return out if out.ndim else float(out)

    def unit_volume(self, dim: int) -> float:
        """integral over R^dim of K(|x|), in closed form."""
        if not isinstance(dim, int) or dim < 1:
            raise ValidationError(f"dimension must be a positive integer, got {dim!r}")
        ball = math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)
        if self.shape == "uniform":
            return ball
        if self.shape == "epanechnikov":
            return ball * 2.0 / (dim + 2.0)
        if self.shape == "triangular":
            return ball / (dim + 1.0)
        # d * ball * int_0^c exp(-r^2/2) r^{d-1} dr via the regularized lower
        # incomplete gamma function.
        c = float(self.cutoff)
        radial = 2.0 ** (dim / 2.0 - 1.0) * math.gamma(dim / 2.0) * float(
            special.gammainc(dim / 2.0, c * c / 2.0)
        )
        return dim * ball * radial

    def volume(self, dim: int, s: float) -> float:
        """integral over R^dim of K(|x|/s) = s^dim * unit volume."""
        if not (s > 0):
            raise ValidationError("bandwidth must be positive")
        return float(s) ** dim * self.unit_volume(dim)


def density_all(space: MetricProbabilitySpace, kernel: Kernel, s) -> np.ndarray:
    """Density estimate of every point; ``s`` is a scalar or one value per point."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValidationError("bandwidth must be positive")
    scaled = space.dist / (s[:, None] if s.ndim else s)
    return kernel(scaled) @ space.weights


def density(space: MetricProbabilitySpace, kernel: Kernel, x: int, s: float) -> float:
    # route through density_all so single-point queries reproduce the batch
    # computation bit for bit
    return float(density_all(space, kernel, s)[x])


@dataclass(frozen=True)
class IndexedSubset:
    """Points whose density at bandwidth ``s`` is >= level ``k`` (closed)."""

    mask: np.ndarray
    s: float
    k: float

    @property
    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)


def filtration_membership(
    space: MetricProbabilitySpace, kernel: Kernel, s: float, k: float
) -> IndexedSubset:
    dens = density_all(space, kernel, s)
    mask = dens >= k
    mask.setflags(write=False)
    return IndexedSubset(mask=mask, s=float(s), k=float(k))
