"""Compiled inner loops. Noise is always supplied by the caller."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# advance_sde status codes
REACHED_STOP = 0
OPPOSITE_CONTACT = 1
DT_UNDERFLOW = 2
NOISE_EXHAUSTED = 3
STEP_BUDGET = 4


@njit(cache=True)
def _min_sq_dists(pos, alive, signs):
    n = pos.shape[0]
    d_opp = np.inf
    d_same = np.inf
    for i in range(n):
        if not alive[i]:
            continue
        for j in range(i + 1, n):
            if not alive[j]:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            r2 = dx * dx + dy * dy
            if signs[i] != signs[j]:
                if r2 < d_opp:
                    d_opp = r2
            elif r2 < d_same:
                d_same = r2
    return d_opp, d_same


@njit(cache=True)
def drift_into(pos, alive, signs, gamma, out):
    n = pos.shape[0]
    for i in range(n):
        out[i, 0] = 0.0
        out[i, 1] = 0.0
    for i in range(n):
        if not alive[i]:
            continue
        for j in range(i + 1, n):
            if not alive[j]:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            w = gamma * signs[i] * signs[j] / (dx * dx + dy * dy)
            out[i, 0] += w * dx
            out[i, 1] += w * dy
            out[j, 0] -= w * dx
            out[j, 1] -= w * dy


@njit(cache=True)
def advance_sde(pos, alive, signs, gamma, t, t_stop, dt_max, step_factor, eps, dt_floor,
                noise, offset, max_steps):
    """Euler-Maruyama steps in place until a stop condition.

    Returns ``(status, t, offset, steps, same_sign_contacts)``. ``pos`` is
    updated in place; one noise row of shape (N, 2) is consumed per step,
    dead rows included.
    """
    n = pos.shape[0]
    F = np.empty((n, 2))
    eps2 = eps * eps
    steps = 0
    same_contacts = 0
    while True:
        if t >= t_stop:
            return REACHED_STOP, t, offset, steps, same_contacts
        if steps >= max_steps:
            return STEP_BUDGET, t, offset, steps, same_contacts
        if offset >= noise.shape[0]:
            return NOISE_EXHAUSTED, t, offset, steps, same_contacts
        d_opp, d_same = _min_sq_dists(pos, alive, signs)
        dt = dt_max
        if step_factor * d_opp < dt:
            dt = step_factor * d_opp
        if step_factor * d_same < dt:
            dt = step_factor * d_same
        last = False
        if t_stop - t <= dt:
            dt = t_stop - t
            last = True
        elif dt < dt_floor:
            return DT_UNDERFLOW, t, offset, steps, same_contacts
        drift_into(pos, alive, signs, gamma, F)
        sq = math.sqrt(dt)
        for i in range(n):
            if alive[i]:
                pos[i, 0] += sq * noise[offset, i, 0] + dt * F[i, 0]
                pos[i, 1] += sq * noise[offset, i, 1] + dt * F[i, 1]
        offset += 1
        steps += 1
        t = t_stop if last else t + dt
        d_opp, d_same = _min_sq_dists(pos, alive, signs)
        if d_same < eps2:
            same_contacts += 1
        if d_opp < eps2:
            return OPPOSITE_CONTACT, t, offset, steps, same_contacts


@njit(cache=True)
def advance_sqb0(R, t0, delta, h, xi, implicit, out):
    """Steps of a squared Bessel recursion with a common step ``h``.

    ``implicit`` (for ``delta >= 2``): drift-implicit step for ``Y = sqrt(R)``,
    ``a = Y + sqrt(h) xi``, ``Y' = (a + sqrt(a**2 + 2 (delta - 1) h)) / 2``;
    monotone in ``Y`` and strictly positive. Otherwise: truncated Euler,
    candidates <= 0 absorb (crossing time by linear interpolation).

    ``out[k]`` receives the value after step ``k``. Returns
    ``(R, hit_time, steps_done)``; ``hit_time`` is NaN if no hit.
    """
    sq = math.sqrt(h)
    m = xi.shape[0]
    if implicit:
        y = math.sqrt(max(R, 0.0))
        b = 2.0 * (delta - 1.0) * h
        for k in range(m):
            a = y + sq * xi[k]
            y = 0.5 * (a + math.sqrt(a * a + b))
            out[k] = y * y
        return y * y, np.nan, m
    for k in range(m):
        c = R + delta * h + 2.0 * math.sqrt(max(R, 0.0)) * sq * xi[k]
        if c <= 0.0:
            hit = t0 + k * h + h * R / (R - c)
            for q in range(k, m):
                out[q] = 0.0
            return 0.0, hit, k + 1
        R = c
        out[k] = R
    return R, np.nan, m
