"""Elliptical corral geometry: coordinate transforms, containment, interior sampling.

The corral is an axis-aligned ellipse centered at the origin.  Confocal
elliptical coordinates (xi, eta) are tied to the semi-focal distance A:

    x = A cosh(xi) cos(eta),    y = A sinh(xi) sin(eta),

with xi >= 0 playing the radial role and eta in [-pi, pi] the angular one.
The boundary sits at xi0 = atanh(b/a).  All lengths are in millimeters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class EllipseGeometry:
    """Corral shape constants. Immutable; derived fields computed on construction."""

    a: float                      # semi-major axis (mm)
    e: float                      # eccentricity, 0 < e < 1
    b: float = field(init=False)  # semi-minor axis (mm)
    A: float = field(init=False)  # semi-focal distance (mm)
    xi0: float = field(init=False)  # radial coordinate of the boundary

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and self.a > 0.0):
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if not (0.0 < self.e < 1.0):
            raise ValueError(f"eccentricity must lie strictly in (0, 1), got {self.e}")
        object.__setattr__(self, "b", self.a * math.sqrt(1.0 - self.e * self.e))
        object.__setattr__(self, "A", self.a * self.e)
        object.__setattr__(self, "xi0", math.atanh(self.b / self.a))

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """Bounding box (x0, x1, y0, y1) of the ellipse."""
        return (-self.a, self.a, -self.b, self.b)


def elliptical_to_cartesian(geom: EllipseGeometry, xi: float, eta: float) -> Point:
    """Map (xi, eta) to Cartesian millimeters."""
    return Point(
        geom.A * math.cosh(xi) * math.cos(eta),
        geom.A * math.sinh(xi) * math.sin(eta),
    )


def cartesian_to_elliptical(geom: EllipseGeometry, p: Point) -> tuple[float, float]:
    """Invert the confocal transform.

    Uses the focal-radii identities r- + r+ = 2A cosh(xi) and
    r- - r+ = 2A cos(eta), which stay well conditioned near the focal
    segment.  eta takes the sign of y; on the focal segment (y == 0,
    |x| <= A) the positive branch eta = +acos(x/A) is returned with xi = 0.
    """
    rp = math.hypot(p.x - geom.A, p.y)
    rm = math.hypot(p.x + geom.A, p.y)
    c = (rm + rp) / (2.0 * geom.A)
    u = (rm - rp) / (2.0 * geom.A)
    xi = math.acosh(c) if c > 1.0 else 0.0
    eta = math.acos(min(1.0, max(-1.0, u)))
    if p.y < 0.0:
        eta = -eta
    return xi, eta


def cartesian_to_elliptical_arrays(
    geom: EllipseGeometry, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized inverse transform; same branch conventions as the scalar form."""
    rp = np.hypot(x - geom.A, y)
    rm = np.hypot(x + geom.A, y)
    c = (rm + rp) / (2.0 * geom.A)
    u = (rm - rp) / (2.0 * geom.A)
    xi = np.arccosh(np.maximum(c, 1.0))
    eta = np.arccos(np.clip(u, -1.0, 1.0))
    eta = np.where(y < 0.0, -eta, eta)
    return xi, eta


def contains(geom: EllipseGeometry, p: Point) -> bool:
    """Boundary-inclusive containment: (x/a)^2 + (y/b)^2 <= 1.

    Escape means strictly outside; points grazing the boundary at
    floating-point precision do not trigger a restart.
    """
    return (p.x / geom.a) ** 2 + (p.y / geom.b) ** 2 <= 1.0


def contains_mask(geom: EllipseGeometry, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (x / geom.a) ** 2 + (y / geom.b) ** 2 <= 1.0


def sample_interior(geom: EllipseGeometry, rng: np.random.Generator) -> Point:
    """Uniform point in the ellipse by rejection from the bounding box."""
    while True:
        x = rng.uniform(-geom.a, geom.a)
        y = rng.uniform(-geom.b, geom.b)
        if (x / geom.a) ** 2 + (y / geom.b) ** 2 <= 1.0:
            return Point(x, y)
