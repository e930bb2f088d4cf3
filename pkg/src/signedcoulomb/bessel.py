"""Squared Bessel processes stopped at 0, for any real dimension.

Discretization
--------------
For ``delta < 2`` the origin is reached in finite time. Paths follow
Euler-Maruyama with full truncation,

    R_{k+1} = R_k + delta*h + 2 sqrt(max(R_k, 0)) sqrt(h) xi_k,

with standard normals ``xi_k``; the first nonpositive candidate absorbs the
path, and the hitting time is linearly interpolated between the last
positive sample and the (negative) candidate (first-order accurate). A start
at ``r = 0`` is absorbed at time 0.

For ``delta >= 2`` the origin is unattainable, and an explicit step would
overshoot it now and then. These paths use the drift-implicit scheme for
``Y = sqrt(R)`` (which solves ``dY = (delta - 1) / (2Y) dt + dbeta``),

    Y_{k+1} = (a + sqrt(a**2 + 2 (delta - 1) h)) / 2,   a = Y_k + sqrt(h) xi_k,

which stays strictly positive and is increasing in ``Y_k``, so paths driven
by the same noise are ordered by their initial value.

Every path ``k`` of a batch uses its own generator seeded with
``derive_seed(seed, k)``, so estimates do not depend on batch layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._kernels import advance_sqb0
from .core import derive_seed

DEFAULT_KS_THRESHOLD = 1e-3
_CHUNK = 4096


@dataclass(frozen=True)
class BesselResult:
    times: np.ndarray
    values: np.ndarray
    hit_zero_at: float | None


@dataclass(frozen=True)
class HittingEstimate:
    probability: float
    stderr: float
    n_samples: int
    n_hits: int


@dataclass(frozen=True)
class KSResult:
    time: float
    statistic: float
    p_value: float


def _grid(dt: float, t_end: float) -> tuple[int, float]:
    if not dt > 0 or not t_end > 0:
        raise ValueError("dt and t_end must be positive")
    if dt > t_end * (1 + 1e-12):
        raise ValueError("dt must not exceed t_end")
    n = max(1, math.ceil(t_end / dt - 1e-9))
    return n, t_end - (n - 1) * dt


def _rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(seed, index)))


def _run_path(delta, r, dt, t_end, rng, store):
    """One path; returns (values or None, terminal value, hit time or None)."""
    n, h_last = _grid(dt, t_end)
    values = np.zeros(n + 1) if store else None
    if store:
        values[0] = r
    implicit = delta >= 2
    if r <= 0 and not implicit:
        return values, 0.0, 0.0
    R = float(r)
    scratch = np.empty(_CHUNK)
    done = 0
    n_full = n - 1
    while done < n_full:
        m = min(_CHUNK, n_full - done)
        xi = rng.standard_normal(m)
        out = values[1 + done:1 + done + m] if store else scratch[:m]
        R, hit, _ = advance_sqb0(R, done * dt, delta, dt, xi, implicit, out)
        if not math.isnan(hit):
            return values, 0.0, hit
        done += m
    xi = rng.standard_normal(1)
    out = values[n:n + 1] if store else scratch[:1]
    R, hit, _ = advance_sqb0(R, n_full * dt, delta, h_last, xi, implicit, out)
    if not math.isnan(hit):
        return values, 0.0, hit
    return values, R, None


def simulate_sqb0(delta: float, r: float, dt: float, t_end: float, seed: int) -> BesselResult:
    """Sample one SqB_0(delta, r) path on the grid ``0, dt, 2dt, ..., t_end``.

    The final step is shortened so that the grid ends exactly at ``t_end``.
    After absorption every later sample is exactly 0.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    n, _ = _grid(dt, t_end)
    times = np.arange(n + 1) * dt
    times[-1] = t_end
    values, _, hit = _run_path(float(delta), float(r), dt, t_end, _rng(seed, 0), True)
    return BesselResult(times, values, hit)


def terminal_samples(delta: float, r: float, t: float, dt: float, n_samples: int,
                     seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Values ``R_t`` and hitting times (NaN if none) of ``n_samples`` independent paths."""
    vals = np.empty(n_samples)
    hits = np.full(n_samples, np.nan)
    for k in range(n_samples):
        _, v, h = _run_path(float(delta), float(r), dt, t, _rng(seed, k), False)
        vals[k] = v
        if h is not None:
            hits[k] = h
    return vals, hits


def hitting_probability(delta: float, r: float, t_end: float, dt: float, n_samples: int,
                        seed: int) -> HittingEstimate:
    """Monte Carlo estimate of ``P(sigma <= t_end)`` with its binomial standard error."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    _, hits = terminal_samples(delta, r, t_end, dt, n_samples, seed)
    k = int(np.count_nonzero(hits <= t_end))
    p = k / n_samples
    return HittingEstimate(p, math.sqrt(p * (1 - p) / n_samples), n_samples, k)


def extinction_probability(r: float, t: float) -> float:
    """Closed form ``P(sigma <= t) = exp(-r / (2t))`` for dimension 0."""
    return math.exp(-r / (2.0 * t))


def scaling_check(delta: float, r: float, alpha: float, t_grid, n_samples: int, seed: int,
                  dt: float = 1e-3) -> list[KSResult]:
    """Two-sample KS comparison of ``R_{alpha s} / alpha`` against fresh ``SqB_0(delta, r/alpha)``.

    Both arms use step ``dt`` on their own time axis and independent seeds.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    t_grid = sorted(float(s) for s in t_grid)
    seed_a, seed_b = derive_seed(seed, 0), derive_seed(seed, 1)
    scaled = _marginals(delta, r, [alpha * s for s in t_grid], dt, n_samples, seed_a) / alpha
    fresh = _marginals(delta, r / alpha, t_grid, dt, n_samples, seed_b)
    out = []
    for j, s in enumerate(t_grid):
        res = stats.ks_2samp(scaled[:, j], fresh[:, j])
        out.append(KSResult(s, float(res.statistic), float(res.pvalue)))
    return out


def _marginals(delta, r, times, dt, n_samples, seed) -> np.ndarray:
    """Path values at ``times`` (each a multiple of ``dt`` up to rounding) for many paths."""
    t_end = max(times)
    n, _ = _grid(dt, t_end)
    grid = np.arange(n + 1) * dt
    grid[-1] = t_end
    cols = [int(np.argmin(np.abs(grid - t))) for t in times]
    out = np.empty((n_samples, len(times)))
    for k in range(n_samples):
        values, _, _ = _run_path(float(delta), float(r), dt, t_end, _rng(seed, k), True)
        out[k] = values[cols]
    return out


def inverse_sqrt_time_integral(path: BesselResult) -> float:
    """``int_0^sigma R_s^{-1/2} ds`` for an absorbed path.

    Each cell is integrated exactly for the linear interpolant of ``R``:
    ``2h / (sqrt(R_a) + sqrt(R_b))``; the cell ending at the hitting time
    uses ``R_b = 0``, i.e. the closed form for a linear ramp to zero.
    """
    sigma = path.hit_zero_at
    if sigma is None:
        raise ValueError("path was not absorbed at 0")
    t, v = path.times, path.values
    k = int(np.searchsorted(t, sigma, side="left"))  # first grid time >= sigma
    last = k - 1
    while last >= 0 and v[last] <= 0:
        last -= 1
    if last < 0:
        return 0.0
    ta, va = t[: last + 1], v[: last + 1]
    sq = np.sqrt(va)
    total = float(np.sum(2.0 * np.diff(ta) / (sq[:-1] + sq[1:])))
    return total + 2.0 * (sigma - ta[-1]) / sq[-1]
