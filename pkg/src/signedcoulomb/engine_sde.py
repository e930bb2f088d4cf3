"""Stochastic integration with the removal rule.

Step law: ``dt = min(dt_max, step_factor * D_opp**2, step_factor * D_same**2)``
where ``D_opp`` / ``D_same`` are the minimal alive opposite-sign / same-sign
distances. A step shorter than 1e-14 ends the run with ``step_underflow``.

After every step, an opposite-sign pair closer than ``eps_coll`` triggers
:func:`detect_and_remove`. Noise for all N particles is drawn every step
(rows of removed particles are discarded) so the stream layout never
depends on the alive set.
"""

from __future__ import annotations

import enum
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from . import observables as obs
from .core import DT_FLOOR, CollisionEvent, Configuration, SignVector, SimParams, validate
from .interaction import drift

log = logging.getLogger(__name__)

NOISE_CHUNK = 1024


class SdeTermination(str, enum.Enum):
    REACHED_T_END = "reached_t_end"
    ALL_SAME_SIGN_REMAINING = "all_same_sign_remaining"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class SdeRunResult:
    samples: list[tuple[float, Configuration]]
    events: list[CollisionEvent]
    final: Configuration
    final_time: float
    terminated: SdeTermination
    snapshots: dict[float, Configuration] = field(default_factory=dict)
    n_steps: int = 0
    same_sign_contacts: int = 0

    @property
    def n_events(self) -> int:
        return len(self.events)

    @property
    def first_event_time(self) -> float | None:
        return self.events[0].time if self.events else None

    def summary(self, signs: SignVector) -> dict:
        return {
            "terminated": self.terminated.value,
            "final_time": self.final_time,
            "n_events": self.n_events,
            "n_steps": self.n_steps,
            "final_alive": [int(i) for i in self.final.alive_indices],
            "net_charge": signs.net_charge(self.final.alive),
            "same_sign_contacts": self.same_sign_contacts,
        }


def step(config: Configuration, signs: SignVector, gamma: float, dt: float,
         noise: np.ndarray) -> Configuration:
    """One Euler-Maruyama step ``x += sqrt(dt) * noise + dt * F(x)`` for alive particles."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    noise = np.asarray(noise, dtype=np.float64).reshape(len(config), 2)
    F = drift(config, signs, gamma)
    alive = config.alive[:, None]
    new = config.positions + np.where(alive, np.sqrt(dt) * noise + dt * F, 0.0)
    return config.with_positions(new)


def detect_and_remove(config: Configuration, signs: SignVector, eps_coll: float,
                      time: float = 0.0) -> tuple[Configuration, CollisionEvent | None]:
    """Apply the removal rule to every cluster of the partition at ``eps_coll``.

    Inside each block, the closest remaining opposite-sign pair is removed
    repeatedly until the block is sign-constant. All pairs removed here form
    one event; sites are pair midpoints.
    """
    if config.n_alive < 2:
        return config, None
    pos = config.positions
    pairs: list[tuple[int, int]] = []
    for block in obs.associated_partition(config, eps_coll):
        if len(block) < 2:
            continue
        left = list(block)
        while True:
            best = None
            for a in range(len(left)):
                for c in range(a + 1, len(left)):
                    i, j = left[a], left[c]
                    if signs[i] == signs[j]:
                        continue
                    d = float(np.hypot(*(pos[i] - pos[j])))
                    if best is None or d < best[0]:
                        best = (d, i, j)
            if best is None:
                break
            _, i, j = best
            pairs.append((min(i, j), max(i, j)))
            left.remove(i)
            left.remove(j)
    if not pairs:
        return config, None
    before = config.alive_indices
    sites, clear = [], []
    for i, j in pairs:
        s = 0.5 * (pos[i] + pos[j])
        others = before[(before != i) & (before != j)]
        c = float(np.min(np.hypot(*(pos[others] - s).T))) if others.size else np.inf
        sites.append((float(s[0]), float(s[1])))
        clear.append(c)
    removed = [k for p in pairs for k in p]
    event = CollisionEvent(float(time), tuple(pairs), tuple(sites), tuple(clear))
    return config.with_removed(removed), event


def _single_signed(signs: np.ndarray, alive: np.ndarray) -> bool:
    b = signs[alive]
    return b.size == 0 or bool(np.all(b == b[0]))


def run_sde(params: SimParams, record: bool = True,
            sample_times: Sequence[float] | None = None) -> SdeRunResult:
    """Integrate until ``t_end``, sign exhaustion (if requested) or step underflow.

    Parameters
    ----------
    record : bool
        Keep a sample every ``record_stride`` steps (plus the initial and
        final states). Ensembles switch this off.
    sample_times : sequence of float, optional
        Times at which the integrator lands exactly and stores a snapshot
        in ``result.snapshots``.
    """
    validate(params)
    signs = params.signs
    b = signs.signs.astype(np.float64)
    rng = np.random.Generator(np.random.PCG64(params.seed))
    n = params.n
    pos = np.array(params.x0.positions)
    alive = np.array(params.x0.alive)
    stops = sorted({float(s) for s in (sample_times or ()) if 0 < s <= params.t_end})
    snapshots: dict[float, Configuration] = {}
    if sample_times is not None and 0.0 in {float(s) for s in sample_times}:
        snapshots[0.0] = params.x0
    t = 0.0
    steps = 0
    same_contacts = 0
    events: list[CollisionEvent] = []
    samples = [(0.0, params.x0)] if record else []
    noise = np.empty((0, n, 2))
    offset = 0
    stride = params.record_stride if record else np.iinfo(np.int64).max
    terminated = SdeTermination.REACHED_T_END

    while True:
        if params.stop_on_single_sign and _single_signed(signs.signs, alive):
            terminated = SdeTermination.ALL_SAME_SIGN_REMAINING
            break
        if t >= params.t_end:
            break
        while stops and stops[0] <= t:
            snapshots[stops.pop(0)] = Configuration(pos, alive)
        t_stop = stops[0] if stops else params.t_end
        if not alive.any():
            t = t_stop
            continue
        if offset >= noise.shape[0]:
            noise = rng.standard_normal((NOISE_CHUNK, n, 2))
            offset = 0
        budget = stride - steps % stride
        status, t, offset, done, sc = _kernels.advance_sde(
            pos, alive, b, params.gamma, t, t_stop, params.dt_max, params.step_factor,
            params.eps_coll, DT_FLOOR, noise, offset, budget,
        )
        steps += done
        same_contacts += sc
        if record and done and steps % stride == 0:
            samples.append((t, Configuration(pos, alive)))
        if status == _kernels.OPPOSITE_CONTACT:
            cfg, event = detect_and_remove(Configuration(pos, alive), signs, params.eps_coll, t)
            if event is not None:
                events.append(event)
                alive = np.array(cfg.alive)
        elif status == _kernels.DT_UNDERFLOW:
            terminated = SdeTermination.STEP_UNDERFLOW
            break
        if status == _kernels.REACHED_STOP and stops and t >= stops[0]:
            snapshots[stops.pop(0)] = Configuration(pos, alive)

    final = Configuration(pos, alive)
    if record and (not samples or samples[-1][0] != t):
        samples.append((t, final))
    if same_contacts:
        log.warning("same-sign pair closer than eps_coll on %d steps (seed %d)",
                    same_contacts, params.seed)
    return SdeRunResult(samples, events, final, t, terminated, snapshots, steps, same_contacts)
