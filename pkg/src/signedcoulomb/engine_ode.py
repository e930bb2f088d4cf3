"""Deterministic integration of ``dx/dt = F(x)`` up to the first collision."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import observables as obs
from .core import DT_FLOOR, Configuration, SimParams, validate
from .interaction import drift

log = logging.getLogger(__name__)

# extra steps allowed, after the first contact, for the contact cluster to fit inside eps_coll
MAX_COLLAPSE_STEPS = 10_000


class OdeTermination(str, enum.Enum):
    REACHED_T_END = "reached_t_end"
    COLLISION_DETECTED = "collision_detected"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class CollisionInfo:
    time: float
    indices: tuple[int, ...]
    site: tuple[float, float]


@dataclass(frozen=True)
class OdeRunResult:
    samples: list[tuple[float, Configuration]]
    terminated: OdeTermination
    collision_info: CollisionInfo | None = None

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.samples])


def _rk4(x: Configuration, params: SimParams, dt: float) -> Configuration:
    b, g = params.signs, params.gamma
    p = x.positions
    k1 = drift(x, b, g)
    k2 = drift(x.with_positions(p + 0.5 * dt * k1), b, g)
    k3 = drift(x.with_positions(p + 0.5 * dt * k2), b, g)
    k4 = drift(x.with_positions(p + dt * k3), b, g)
    return x.with_positions(p + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def _min_distance(x: Configuration) -> float:
    _, dist = obs.pairwise_distances(x)
    if dist.shape[0] < 2:
        return np.inf
    return float(dist[np.triu_indices(dist.shape[0], k=1)].min())


def _contact_block(x: Configuration, eps: float) -> tuple[int, ...]:
    idx, dist = obs.pairwise_distances(x)
    np.fill_diagonal(dist, np.inf)
    a, _ = np.unravel_index(np.argmin(dist), dist.shape)
    return obs.associated_partition(x, eps).block_of(int(idx[a]))


def _diameter(x: Configuration, block) -> float:
    pos = x.positions[list(block)]
    d = pos[:, None, :] - pos[None, :, :]
    return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", d, d))))


def run_ode(params: SimParams) -> OdeRunResult:
    """Classical RK4 with step ``min(dt_max, step_factor * d_min**2)``.

    A contact is registered once the minimal distance drops below
    ``eps_coll``. Integration then continues (with the same step law) until
    the associated-partition block of the closest pair has diameter below
    ``eps_coll``, so that multi-particle collapses are reported with their
    full colliding set. The reported site is that block's mean.
    """
    validate(params)
    eps = params.eps_coll
    x = params.x0
    t = 0.0
    samples = [(t, x)]
    steps = 0
    contact = False
    extra = 0

    def finish(term, info=None):
        if samples[-1][0] != t:
            samples.append((t, x))
        return OdeRunResult(samples, term, info)

    while True:
        d_min = _min_distance(x)
        if d_min < eps:
            block = _contact_block(x, eps)
            if not contact:
                contact = True
                log.debug("contact below eps_coll at t=%g", t)
            if _diameter(x, block) < eps or extra >= MAX_COLLAPSE_STEPS:
                m = obs.local_mean(x, block)
                return finish(
                    OdeTermination.COLLISION_DETECTED,
                    CollisionInfo(t, block, (float(m[0]), float(m[1]))),
                )
            extra += 1
        elif t >= params.t_end:
            return finish(OdeTermination.REACHED_T_END)
        dt = min(params.dt_max, params.step_factor * d_min**2)
        if not contact and params.t_end - t <= dt:
            dt = params.t_end - t
            last = True
        else:
            last = False
            if dt < DT_FLOOR:
                return finish(OdeTermination.STEP_UNDERFLOW)
        x = _rk4(x, params, dt)
        t = params.t_end if last else t + dt
        steps += 1
        if steps % params.record_stride == 0:
            samples.append((t, x))


@dataclass(frozen=True)
class ConservationReport:
    max_mean_drift: float
    max_dispersion_deviation: float
    max_relative_dispersion_deviation: float
    dispersion_rate: float


def conservation_report(result: OdeRunResult, params: SimParams,
                        r_floor: float = 0.0) -> ConservationReport:
    """Deviations from the conserved mean and from the affine dispersion law.

    ``R(x(t)) = R(x0) + gamma * ((sum b)**2 - N) * t``. Relative deviations
    are taken against the predicted value, over samples where it is at
    least ``r_floor``.
    """
    if len(result.samples) < 2:
        raise ValueError("need at least two samples")
    x0 = result.samples[0][1]
    m0 = obs.mean(x0)
    r0 = obs.dispersion(x0)
    b = params.signs.signs[x0.alive]
    rate = params.gamma * (float(b.sum()) ** 2 - b.size)
    mean_dev = 0.0
    abs_dev = 0.0
    rel_dev = 0.0
    for t, x in result.samples:
        mean_dev = max(mean_dev, float(np.max(np.abs(obs.mean(x) - m0))))
        pred = r0 + rate * t
        dev = abs(obs.dispersion(x) - pred)
        abs_dev = max(abs_dev, dev)
        if pred > 0 and pred >= r_floor:
            rel_dev = max(rel_dev, dev / pred)
    return ConservationReport(mean_dev, abs_dev, rel_dev, rate)
