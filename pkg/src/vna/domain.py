"""Bounded domains with closed-form signed boundary distance.

Supported shapes: the unit polydisk, the unit ball, the annulus
``r < |z| < 1/r`` and a base domain with finitely many closed balls removed.
Signed distance is positive inside, negative outside.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "Region",
    "Polydisk",
    "Ball",
    "Annulus",
    "ClosedBall",
    "Difference",
    "Domain",
    "InfeasibleMarginError",
    "signed_distance",
    "classify_point",
    "sample_interior",
    "sample_boundary",
    "segment_point",
    "segment_velocity",
    "segment_clear",
    "domain_from_json",
    "domain_to_json",
    "parse_complex",
    "DEFAULT_MARGIN",
]

DEFAULT_MARGIN = 1e-6
MAX_REJECTIONS = 10_000


class Region(enum.Enum):
    INSIDE = "Inside"
    BOUNDARY_BAND = "BoundaryBand"
    OUTSIDE = "Outside"


class InfeasibleMarginError(ValueError):
    pass


@dataclass(frozen=True)
class Polydisk:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")

    @property
    def circumradius(self) -> float:
        return math.sqrt(self.dim)


@dataclass(frozen=True)
class Ball:
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")

    @property
    def circumradius(self) -> float:
        return 1.0


@dataclass(frozen=True)
class Annulus:
    """``r < |z| < 1/r`` in the plane."""

    r: float

    def __post_init__(self):
        if not 0 < self.r < 1:
            raise ValueError("annulus parameter r must lie in (0, 1)")

    @property
    def dim(self) -> int:
        return 1

    @property
    def circumradius(self) -> float:
        return 1.0 / self.r


@dataclass(frozen=True)
class ClosedBall:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(complex(c) for c in self.center))
        if self.radius <= 0:
            raise ValueError("removed ball radius must be positive")


@dataclass(frozen=True)
class Difference:
    """``base`` minus a union of pairwise disjoint closed balls.

    Connectivity of the result is assumed, not checked; it holds for a few
    small balls well inside the base.
    """

    base: object
    removed: tuple = field(default_factory=tuple)

    def __post_init__(self):
        removed = tuple(self.removed)
        object.__setattr__(self, "removed", removed)
        if isinstance(self.base, Difference):
            raise ValueError("nested Difference domains are not supported")
        for b in removed:
            if len(b.center) != self.base.dim:
                raise ValueError("removed ball dimension does not match the base")
            c = np.array(b.center)
            if _base_distance(self.base, c[None, :])[0] - b.radius <= 0:
                raise ValueError("removed ball must lie strictly inside the base domain")
        for i, a in enumerate(removed):
            for b in removed[i + 1:]:
                if np.linalg.norm(np.subtract(a.center, b.center)) <= a.radius + b.radius:
                    raise ValueError("removed balls must be pairwise disjoint")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def circumradius(self) -> float:
        return self.base.circumradius


Domain = Polydisk | Ball | Annulus | Difference


# ----------------------------------------------------------------------------
# distance and membership

def _as_points(d, z) -> tuple[np.ndarray, bool]:
    Z = np.asarray(z, dtype=complex)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    if Z.shape[1] != d.dim:
        raise ValueError(f"point has {Z.shape[1]} coordinates, domain has dimension {d.dim}")
    return Z, single


def _base_distance(d, Z: np.ndarray) -> np.ndarray:
    if isinstance(d, Polydisk):
        return 1.0 - np.abs(Z).max(axis=1)
    if isinstance(d, Ball):
        return 1.0 - np.linalg.norm(Z, axis=1)
    if isinstance(d, Annulus):
        a = np.abs(Z[:, 0])
        return np.minimum(a - d.r, 1.0 / d.r - a)
    raise TypeError(f"unsupported domain {d!r}")


def signed_distance(d, z) -> float | np.ndarray:
    """Signed boundary distance (positive inside) for one point or a batch."""
    Z, single = _as_points(d, z)
    if isinstance(d, Difference):
        out = _base_distance(d.base, Z)
        for b in d.removed:
            out = np.minimum(out, np.linalg.norm(Z - np.array(b.center), axis=1) - b.radius)
    else:
        out = _base_distance(d, Z)
    return float(out[0]) if single else out


def classify_point(d, z, margin: float = 0.0):
    """``Region`` of a point (or array of regions for a batch) at ``margin``."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    s = signed_distance(d, z)
    if np.ndim(s) == 0:
        return _region(s, margin)
    return [_region(x, margin) for x in s]


def _region(s: float, margin: float) -> Region:
    if s > margin:
        return Region.INSIDE
    if s < -margin:
        return Region.OUTSIDE
    return Region.BOUNDARY_BAND


# ----------------------------------------------------------------------------
# sampling

def _unit_disk(rng, n, dim):
    rad = np.sqrt(rng.random((n, dim)))
    ang = rng.random((n, dim)) * 2 * np.pi
    return rad * np.exp(1j * ang)


def _sample_base(d, rng, n) -> np.ndarray:
    if isinstance(d, Polydisk):
        return _unit_disk(rng, n, d.dim)
    if isinstance(d, Ball):
        g = rng.standard_normal((n, d.dim)) + 1j * rng.standard_normal((n, d.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        return g * rng.random((n, 1)) ** (1.0 / (2 * d.dim))
    if isinstance(d, Annulus):
        rad = np.sqrt(d.r ** 2 + rng.random(n) * (d.r ** -2 - d.r ** 2))
        return (rad * np.exp(2j * np.pi * rng.random(n)))[:, None]
    raise TypeError(f"unsupported domain {d!r}")


def sample_interior(d, n: int, margin: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` points classified Inside at ``margin`` (uniform rejection sampling)."""
    base = d.base if isinstance(d, Difference) else d
    out = []
    fails = 0
    while len(out) < n:
        z = _sample_base(base, rng, 1)[0]
        if signed_distance(d, z) > margin:
            out.append(z)
            fails = 0
        else:
            fails += 1
            if fails >= MAX_REJECTIONS:
                raise InfeasibleMarginError(
                    f"no interior point at margin {margin} after {MAX_REJECTIONS} tries")
    return np.array(out, dtype=complex).reshape(n, d.dim)


def sample_boundary(d, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points on the topological boundary."""
    pts = np.empty((n, d.dim), dtype=complex)
    for i in range(n):
        pts[i] = _boundary_point(d, rng)
    return pts


def _boundary_point(d, rng) -> np.ndarray:
    if isinstance(d, Difference):
        if d.removed and rng.random() < 0.5:
            b = d.removed[rng.integers(len(d.removed))]
            v = rng.standard_normal(d.dim) + 1j * rng.standard_normal(d.dim)
            return np.array(b.center) + b.radius * v / np.linalg.norm(v)
        return _boundary_point(d.base, rng)
    if isinstance(d, Polydisk):
        z = _unit_disk(rng, 1, d.dim)[0]
        k = rng.integers(d.dim)
        z[k] = np.exp(2j * np.pi * rng.random())
        return z
    if isinstance(d, Ball):
        v = rng.standard_normal(d.dim) + 1j * rng.standard_normal(d.dim)
        return v / np.linalg.norm(v)
    if isinstance(d, Annulus):
        # inner vs outer circle weighted by length
        inner = rng.random() < d.r ** 2 / (1 + d.r ** 2)
        rad = d.r if inner else 1.0 / d.r
        return np.array([rad * np.exp(2j * np.pi * rng.random())])
    raise TypeError(f"unsupported domain {d!r}")


# ----------------------------------------------------------------------------
# paths that respect the geometry

def _base_of(d):
    return d.base if isinstance(d, Difference) else d


def segment_point(d, a, b, t):
    """Point at parameter ``t`` on the domain-adapted segment from ``a`` to ``b``.

    Straight lines for the convex bases; log-polar interpolation on the
    annulus, so the segment never crosses the hole.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if isinstance(_base_of(d), Annulus):
        la, lb = _log_pair(a, b)
        return np.exp(la + t * (lb - la))
    return a + t * (b - a)


def segment_velocity(d, a, b, t):
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if isinstance(_base_of(d), Annulus):
        la, lb = _log_pair(a, b)
        return (lb - la) * np.exp(la + t * (lb - la))
    return b - a


def _log_pair(a, b):
    la = np.log(a)
    # shortest angular arc
    return la, la + np.log(np.abs(b) / np.abs(a)) + 1j * np.angle(b / a)


def segment_clear(d, a, b, margin: float = 0.0, samples: int = 64) -> bool:
    """True if the adapted segment from ``a`` to ``b`` stays Inside at ``margin``."""
    ts = np.linspace(0.0, 1.0, samples + 1)
    if isinstance(d, Difference) and not isinstance(d.base, Annulus):
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        if signed_distance(d.base, a) <= margin or signed_distance(d.base, b) <= margin:
            return False
        for ball in d.removed:
            if _segment_ball_distance(a, b, np.array(ball.center)) - ball.radius <= margin:
                return False
        return True
    pts = np.array([segment_point(d, a, b, t) for t in ts])
    return bool(np.all(signed_distance(d, pts) > margin))


def _segment_ball_distance(a, b, c) -> float:
    ab = b - a
    denom = np.vdot(ab, ab).real
    t = 0.0 if denom == 0 else float(np.clip(np.vdot(ab, c - a).real / denom, 0.0, 1.0))
    return float(np.linalg.norm(a + t * ab - c))


# ----------------------------------------------------------------------------
# JSON descriptors

def parse_complex(x) -> complex:
    """Accept numbers, ``[re, im]`` pairs and strings like ``"0.5i"``."""
    if isinstance(x, (int, float, complex)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(float(x[0]), float(x[1]))
    if isinstance(x, str):
        s = x.strip().replace(" ", "")
        if s.endswith("i") and not s.endswith("ji"):
            s = s[:-1] + "j"
            if s in ("j", "+j", "-j"):
                s = s.replace("j", "1j")
        return complex(s)
    raise ValueError(f"cannot read a complex number from {x!r}")


def domain_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "polydisk":
        return Polydisk(int(obj["dim"]))
    if kind == "ball":
        return Ball(int(obj["dim"]))
    if kind == "annulus":
        return Annulus(float(obj["r"]))
    if kind == "difference":
        base = domain_from_json(obj["base"])
        balls = tuple(
            ClosedBall(tuple(parse_complex(c) for c in b["center"]), float(b["radius"]))
            for b in obj.get("removed_balls", [])
        )
        return Difference(base, balls)
    raise ValueError(f"unknown domain type {kind!r}")


def _complex_str(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    if c.real == 0:
        return f"{c.imag!r}i"
    return f"{c.real!r}{'+' if c.imag >= 0 else '-'}{abs(c.imag)!r}i"


def domain_to_json(d) -> dict:
    if isinstance(d, Polydisk):
        return {"type": "polydisk", "dim": d.dim}
    if isinstance(d, Ball):
        return {"type": "ball", "dim": d.dim}
    if isinstance(d, Annulus):
        return {"type": "annulus", "r": d.r}
    if isinstance(d, Difference):
        return {
            "type": "difference",
            "base": domain_to_json(d.base),
            "removed_balls": [
                {"center": [_complex_str(c) for c in b.center], "radius": b.radius} for b in d.removed
            ],
        }
    raise TypeError(f"unsupported domain {d!r}")


def removed_balls(d) -> Sequence[ClosedBall]:
    return d.removed if isinstance(d, Difference) else ()
