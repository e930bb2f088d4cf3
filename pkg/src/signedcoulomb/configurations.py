"""Reference initial configurations, built to be exactly mirror-symmetric in floating point."""

from __future__ import annotations

import math

import numpy as np

from .core import Configuration, SignVector


def alternating_ring(n: int = 8, radius: float = 1.0) -> tuple[Configuration, SignVector]:
    """``n`` equispaced particles on a circle with alternating signs, first one positive.

    For ``n`` divisible by 8 the points are generated in the first octant and
    mirrored with exact operations (negation, coordinate swap), so the point
    set is invariant under the symmetries of the square bit for bit.
    """
    if n < 2 or n % 2:
        raise ValueError("n must be even and at least 2")
    if n % 8 == 0:
        m = n // 8
        octant = []
        for k in range(m + 1):
            if 2 * k == 2 * m:
                s = math.sqrt(0.5)
                octant.append((s, s))
            else:
                a = 2 * math.pi * k / n
                octant.append((math.cos(a), math.sin(a)))
        quadrant = octant[:m] + [(y, x) for x, y in reversed(octant[1:])]
        pts = list(quadrant)
        for rot in range(1, 4):
            for x, y in quadrant:
                for _ in range(rot):
                    x, y = -y, x
                pts.append((x, y))
        pos = np.array(pts)
    else:
        a = 2 * math.pi * np.arange(n) / n
        pos = np.c_[np.cos(a), np.sin(a)]
    signs = SignVector([1 if k % 2 == 0 else -1 for k in range(n)])
    return Configuration(radius * pos), signs


def triangle_with_center(radius: float = 1.0) -> tuple[Configuration, SignVector]:
    """Three positive particles on an equilateral triangle and a negative one at its center."""
    h = math.sqrt(3.0) / 2.0
    pos = np.array([[0.0, 1.0], [-h, -0.5], [h, -0.5], [0.0, 0.0]]) * radius
    return Configuration(pos), SignVector([1, 1, 1, -1])
