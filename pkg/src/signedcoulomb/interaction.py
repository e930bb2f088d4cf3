"""Coulomb kernel, drift field and Kirchhoff-Onsager energy.

All pair sums run over alive particles only; dead particles get a zero
force vector. Per-particle force sums are exactly rounded (``math.fsum``),
so they do not depend on summation order: a configuration that is
mirror-symmetric in floating point keeps that symmetry under the ODE
integrator instead of drifting off an unstable symmetric orbit.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .core import CoincidentParticlesError, Configuration, SignVector

# (N, 2) array of per-particle force vectors, zero rows for dead particles.
ForceField = NDArray[np.float64]


def kernel(z: ArrayLike) -> NDArray[np.float64]:
    """Coulomb force ``z / |z|**2`` with the convention ``kernel(0) = 0``.

    Works on a single planar vector or on any array whose last axis has length 2.
    """
    z = np.asarray(z, dtype=np.float64)
    r2 = np.sum(z * z, axis=-1, keepdims=True)
    out = np.zeros_like(z)
    np.divide(z, r2, out=out, where=r2 > 0)
    return out


def _alive_pairs(config: Configuration):
    idx = config.alive_indices
    pos = config.positions[idx]
    diff = pos[:, None, :] - pos[None, :, :]
    r2 = diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1]
    off = ~np.eye(len(idx), dtype=bool)
    zero = (r2 == 0) & off
    if zero.any():
        a, b = np.argwhere(np.triu(zero))[0]
        raise CoincidentParticlesError(int(idx[a]), int(idx[b]))
    return idx, pos, diff, r2


def drift(config: Configuration, signs: SignVector, gamma: float) -> ForceField:
    """Drift ``F^i = gamma * sum_j b^i b^j f(x^i - x^j)`` over alive particles.

    Raises
    ------
    CoincidentParticlesError
        If two alive particles share a position exactly.
    """
    idx, _, diff, r2 = _alive_pairs(config)
    b = signs.signs[idx].astype(np.float64)
    np.fill_diagonal(r2, np.inf)
    w = gamma * np.outer(b, b) / r2
    terms = w[:, :, None] * diff
    out = np.zeros((len(config), 2))
    for a, i in enumerate(idx):
        out[i, 0] = math.fsum(terms[a, :, 0])
        out[i, 1] = math.fsum(terms[a, :, 1])
    return out


def energy(config: Configuration, signs: SignVector, gamma: float) -> float:
    """Kirchhoff-Onsager energy ``-gamma * sum_{i<j} b^i b^j log|x^i - x^j|``."""
    idx, _, _, r2 = _alive_pairs(config)
    b = signs.signs[idx].astype(np.float64)
    iu = np.triu_indices(len(idx), k=1)
    bb = np.outer(b, b)[iu]
    return float(-gamma * np.sum(bb * 0.5 * np.log(r2[iu])))


def radial_power(config: Configuration, signs: SignVector, gamma: float) -> float:
    """``y . F(y)`` by direct summation over alive particles.

    In exact arithmetic this equals ``gamma/2 * ((sum b)**2 - N_alive)`` for
    every collision-free configuration.
    """
    F = drift(config, signs, gamma)
    idx = config.alive_indices
    return float(np.sum(config.positions[idx] * F[idx]))


def radial_power_closed_form(signs: SignVector, gamma: float, alive: ArrayLike | None = None) -> float:
    b = signs.signs if alive is None else signs.signs[np.asarray(alive, dtype=bool)]
    return 0.5 * gamma * (float(b.sum()) ** 2 - b.shape[0])
