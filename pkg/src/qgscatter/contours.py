"""Argument-principle plumbing: winding numbers along closed contours.

The phase change of a holomorphic function along a closed polyline is
accumulated segment by segment. A segment is only accepted once a midpoint
probe confirms both halves advance by less than pi/2; otherwise it is
bisected. Phase tracking by sampling cannot see rotations faster than the
sampling resolves (a whole turn between samples aliases to zero), so
callers that know a bound on the rotation rate of their function pass it
as ``rate_hint`` (radians per unit arc length) and the initial sampling is
densified to stay below the aliasing limit. For the interior determinants
built in this package the bulk rate is exactly the total directed-bond
length.

A function value close to zero on the contour aborts the computation,
since the winding number is then ill-defined; callers jitter their contour
and retry.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

from .errors import BoundaryZero

# |f| at or below this is treated as "the contour hit a zero".
ZERO_TOL = 1e-12
_MAX_DEPTH = 48


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self):
        return self.re_max - self.re_min

    @property
    def height(self):
        return self.im_max - self.im_min

    @property
    def center(self):
        return complex((self.re_min + self.re_max) / 2, (self.im_min + self.im_max) / 2)

    @property
    def diameter(self):
        return max(self.width, self.height)

    def corners(self):
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )

    def contains(self, z, margin=0.0):
        return (
            self.re_min + margin < z.real < self.re_max - margin
            and self.im_min + margin < z.imag < self.im_max - margin
        )

    def inflated(self, amount):
        return Rect(
            self.re_min - amount,
            self.re_max + amount,
            self.im_min - amount,
            self.im_max + amount,
        )

    def quadrants(self):
        cm = self.center
        return (
            Rect(self.re_min, cm.real, self.im_min, cm.imag),
            Rect(cm.real, self.re_max, self.im_min, cm.imag),
            Rect(self.re_min, cm.real, cm.imag, self.im_max),
            Rect(cm.real, self.re_max, cm.imag, self.im_max),
        )


def _checked_value(f, z, zero_tol):
    v = complex(f(z))
    if abs(v) <= zero_tol:
        raise BoundaryZero(f"|f({z})| = {abs(v):.3e} on the contour")
    return v


def _segment_phase(f, z0, v0, z1, v1, zero_tol, depth):
    """Phase advance along one segment, validated by a midpoint probe."""
    if depth >= _MAX_DEPTH:
        raise BoundaryZero(f"phase step cannot be resolved near {z0} (|f| ~ {abs(v0):.3e})")
    zm = (z0 + z1) / 2
    vm = _checked_value(f, zm, zero_tol)
    s1 = cmath.phase(vm / v0)
    s2 = cmath.phase(v1 / vm)
    if abs(s1) < 0.5 * cmath.pi and abs(s2) < 0.5 * cmath.pi:
        return s1 + s2
    return _segment_phase(f, z0, v0, zm, vm, zero_tol, depth + 1) + _segment_phase(
        f, zm, vm, z1, v1, zero_tol, depth + 1
    )


def phase_change(f, points, *, zero_tol=ZERO_TOL):
    """Total continuous phase change of f along the closed polyline.

    ``points`` are the vertices in order; the path closes from the last
    point back to the first.
    """
    pts = list(points)
    if len(pts) < 3:
        raise ValueError("need at least 3 points for a closed contour")
    vals = [_checked_value(f, z, zero_tol) for z in pts]
    total = 0.0
    n = len(pts)
    for i in range(n):
        total += _segment_phase(f, pts[i], vals[i], pts[(i + 1) % n], vals[(i + 1) % n],
                                zero_tol, 0)
    return total


def _winding_from_phase(total):
    w = total / (2 * cmath.pi)
    n = round(w)
    if abs(w - n) > 0.2:
        raise BoundaryZero(f"winding {w:.4f} is not close to an integer")
    return int(n)


def _samples_for(length: float, base: int, rate_hint) -> int:
    if rate_hint is None:
        return base
    # Keep the expected phase change per initial segment near 1 radian.
    return max(base, int(math.ceil(length * rate_hint)) + 1)


def rect_winding(f, rect: Rect, samples: int = 64, *, zero_tol=ZERO_TOL,
                 rate_hint=None) -> int:
    """Winding number of f around the rectangle boundary (counterclockwise)."""
    base = max(2, samples // 4)
    pts = []
    c = rect.corners()
    for i in range(4):
        z0, z1 = c[i], c[(i + 1) % 4]
        n = _samples_for(abs(z1 - z0), base, rate_hint)
        for j in range(n):
            pts.append(z0 + (z1 - z0) * j / n)
    return _winding_from_phase(phase_change(f, pts, zero_tol=zero_tol))


def circle_winding(f, center, radius, samples: int = 32, *, zero_tol=ZERO_TOL,
                   rate_hint=None) -> int:
    """Winding number of f around a circle."""
    n = _samples_for(2 * math.pi * radius, samples, rate_hint)
    pts = [center + radius * cmath.exp(2j * cmath.pi * j / n) for j in range(n)]
    return _winding_from_phase(phase_change(f, pts, zero_tol=zero_tol))


def circle_winding_jittered(f, center, radius, *, samples=32, retries=5, growth=1.4,
                            rate_hint=None):
    """Circle winding with radius growth when the contour hits a zero."""
    r = radius
    last = None
    for _ in range(retries):
        try:
            return circle_winding(f, center, r, samples=samples, rate_hint=rate_hint)
        except BoundaryZero as exc:
            last = exc
            r *= growth
    raise last
