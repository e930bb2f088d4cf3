"""Hypothesis strategies for configurations and parameters."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from signedcoulomb.core import Configuration, SignVector, SimParams

GRID = 16


@st.composite
def configurations(draw, min_n=1, max_n=8, min_gap=0.0):
    """Distinct planar points with pairwise distances at least ``min_gap``.

    Points are jittered inside distinct cells of a GRID x GRID lattice and
    the whole picture is scaled; the jitter keeps neighbours at least 0.2
    cell widths apart, and the scale is chosen so that this exceeds ``min_gap``.
    """
    n = draw(st.integers(min_n, max_n))
    cells = draw(st.lists(st.tuples(st.integers(0, GRID - 1), st.integers(0, GRID - 1)),
                          min_size=n, max_size=n, unique=True))
    unit = st.floats(0.1, 0.9)
    jitter = draw(st.lists(st.tuples(unit, unit), min_size=n, max_size=n))
    scale = draw(st.floats(max(0.05, 5 * min_gap), 2.0))
    pts = (np.array(cells, dtype=float) + np.array(jitter) - GRID / 2) * scale
    return Configuration(pts)


@st.composite
def signed_configurations(draw, min_n=1, max_n=8, min_gap=0.0):
    x = draw(configurations(min_n, max_n, min_gap))
    b = draw(st.lists(st.sampled_from([-1, 1]), min_size=len(x), max_size=len(x)))
    return x, SignVector(b)


@st.composite
def sim_params(draw):
    x, b = draw(signed_configurations(1, 6, min_gap=1e-3))
    return SimParams(
        gamma=draw(st.floats(1e-3, 1e3)),
        signs=b,
        x0=x,
        t_end=draw(st.floats(1e-3, 1e3)),
        dt_max=draw(st.floats(1e-6, 1.0)),
        step_factor=draw(st.floats(1e-3, 1.0)),
        eps_coll=draw(st.floats(1e-5, 1e-1)),
        seed=draw(st.integers(0, 2**64 - 1)),
        record_stride=draw(st.integers(1, 1000)),
        stop_on_single_sign=draw(st.booleans()),
    )
