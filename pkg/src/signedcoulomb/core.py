"""Domain types, parameter records, seeding and validation.

Particle indices are 0-based everywhere. Removed particles stay in the
arrays with ``alive == False`` so that indices are stable over a run.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
DT_FLOOR = 1e-14


class ValidationError(ValueError):
    """Raised with the full list of violated parameter invariants."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class CoincidentParticlesError(ValueError):
    """Two alive particles occupy exactly the same position."""

    def __init__(self, i: int, j: int):
        self.pair = (i, j)
        super().__init__(f"alive particles {i} and {j} coincide")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def derive_seed(master: int, index: int) -> int:
    """Derive a 64-bit child seed with the SplitMix64 generator.

    The child seed is the ``index``-th output (0-based) of a SplitMix64
    stream seeded with ``master``::

        z = (master + (index + 1) * 0x9E3779B97F4A7C15) mod 2**64
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
        return z ^ (z >> 31)

    The finalizer is a bijection of 64-bit words, so distinct indices below
    2**64 always give distinct seeds.
    """
    z = (int(master) + (int(index) + 1) * GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class SignVector:
    """Fixed charges, each -1 or +1."""

    signs: NDArray[np.int64]

    def __init__(self, signs: ArrayLike):
        arr = np.array(signs, dtype=np.int64).reshape(-1)
        object.__setattr__(self, "signs", _frozen(arr))

    def __len__(self) -> int:
        return self.signs.shape[0]

    def __getitem__(self, i):
        return self.signs[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignVector):
            return NotImplemented
        return np.array_equal(self.signs, other.signs)

    def __hash__(self) -> int:
        return hash(self.signs.tobytes())

    def is_valid(self) -> bool:
        return len(self) >= 1 and bool(np.all(np.abs(self.signs) == 1))

    def net_charge(self, alive: ArrayLike | None = None) -> int:
        if alive is None:
            return int(self.signs.sum())
        return int(self.signs[np.asarray(alive, dtype=bool)].sum())

    def flipped(self) -> SignVector:
        return SignVector(-self.signs)


@dataclass(frozen=True)
class Configuration:
    """Planar positions of N particles plus their alive flags."""

    positions: FloatArray
    alive: NDArray[np.bool_]

    def __init__(self, positions: ArrayLike, alive: ArrayLike | None = None):
        pos = np.array(positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError(f"positions must have shape (N, 2), got {pos.shape}")
        if alive is None:
            flags = np.ones(pos.shape[0], dtype=bool)
        else:
            flags = np.array(alive, dtype=bool).reshape(-1)
            if flags.shape[0] != pos.shape[0]:
                raise ValueError("alive must have one flag per particle")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "alive", _frozen(flags))

    def __len__(self) -> int:
        return self.positions.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return np.array_equal(self.positions, other.positions) and np.array_equal(
            self.alive, other.alive
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_alive(self) -> int:
        return int(self.alive.sum())

    @property
    def alive_indices(self) -> NDArray[np.int64]:
        return np.flatnonzero(self.alive)

    def coincident_pairs(self) -> list[tuple[int, int]]:
        """Alive pairs whose stored coordinates are exactly equal."""
        idx = self.alive_indices
        pos = self.positions[idx]
        same = np.all(pos[:, None, :] == pos[None, :, :], axis=2)
        ii, jj = np.nonzero(np.triu(same, k=1))
        return [(int(idx[a]), int(idx[b])) for a, b in zip(ii, jj)]

    def with_positions(self, positions: ArrayLike) -> Configuration:
        return Configuration(positions, self.alive)

    def with_removed(self, indices: Iterable[int]) -> Configuration:
        flags = self.alive.copy()
        flags[list(indices)] = False
        return Configuration(self.positions, flags)


@dataclass(frozen=True)
class Partition:
    """Disjoint index blocks, stored canonically (sorted, ordered by first index)."""

    blocks: tuple[tuple[int, ...], ...]

    def __init__(self, blocks: Iterable[Iterable[int]]):
        canon = [tuple(sorted(int(i) for i in b)) for b in blocks]
        if any(len(b) == 0 for b in canon):
            raise ValueError("partition blocks must be nonempty")
        flat = [i for b in canon for i in b]
        if len(flat) != len(set(flat)):
            raise ValueError("partition blocks must be disjoint")
        canon.sort(key=lambda b: b[0])
        object.__setattr__(self, "blocks", tuple(canon))

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @property
    def index_set(self) -> frozenset[int]:
        return frozenset(i for b in self.blocks for i in b)

    def covers(self, indices: Iterable[int]) -> bool:
        return self.index_set == frozenset(int(i) for i in indices)

    def block_of(self, i: int) -> tuple[int, ...]:
        for b in self.blocks:
            if i in b:
                return b
        raise KeyError(i)

    def refines(self, other: Partition) -> bool:
        """True if every block of ``self`` lies inside some block of ``other``."""
        if self.index_set != other.index_set:
            return False
        outer = [set(b) for b in other.blocks]
        return all(any(set(b) <= o for o in outer) for b in self.blocks)

    def separates_signs(self, signs: SignVector) -> bool:
        """True if every block is sign-constant."""
        return all(len({int(signs[i]) for i in b}) == 1 for b in self.blocks)


@dataclass(frozen=True)
class CollisionEvent:
    """One removal step: all opposite-sign pairs removed at ``time``.

    ``clearances[k]`` is the distance from ``sites[k]`` to the nearest particle
    outside pair ``k`` among those alive just before the removal (``inf`` if
    there is none).
    """

    time: float
    removed_pairs: tuple[tuple[int, int], ...]
    sites: tuple[tuple[float, float], ...]
    clearances: tuple[float, ...] = ()

    @property
    def n_pairs(self) -> int:
        return len(self.removed_pairs)

    @property
    def removed(self) -> list[int]:
        return [i for p in self.removed_pairs for i in p]

    def to_json(self) -> dict[str, Any]:
        return {
            "time": self.time,
            "pairs": [list(p) for p in self.removed_pairs],
            "sites": [list(s) for s in self.sites],
            "clearances": list(self.clearances),
        }


@dataclass(frozen=True)
class SimParams:
    """Run parameters shared by the ODE and SDE engines.

    Construction only coerces types; call :func:`validate` to check the
    invariants (the engines do).
    """

    gamma: float
    signs: SignVector
    x0: Configuration
    t_end: float
    dt_max: float = 1e-3
    step_factor: float = 0.1
    eps_coll: float = 1e-4
    seed: int = 0
    record_stride: int = 1
    stop_on_single_sign: bool = False

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "gamma", float(self.gamma))
        if not isinstance(self.signs, SignVector):
            set_(self, "signs", SignVector(self.signs))
        if not isinstance(self.x0, Configuration):
            set_(self, "x0", Configuration(self.x0))
        for name in ("t_end", "dt_max", "step_factor", "eps_coll"):
            set_(self, name, float(getattr(self, name)))
        set_(self, "seed", int(self.seed))
        set_(self, "record_stride", int(self.record_stride))
        set_(self, "stop_on_single_sign", bool(self.stop_on_single_sign))

    @property
    def n(self) -> int:
        return len(self.x0)

    def replace(self, **changes) -> SimParams:
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return SimParams(**kw)

    def to_dict(self) -> dict[str, Any]:
        return {
            "gamma": self.gamma,
            "signs": [int(s) for s in self.signs.signs],
            "x0": [[float(a), float(b)] for a, b in self.x0.positions],
            "t_end": self.t_end,
            "dt_max": self.dt_max,
            "step_factor": self.step_factor,
            "eps_coll": self.eps_coll,
            "seed": self.seed,
            "record_stride": self.record_stride,
            "stop_on_single_sign": self.stop_on_single_sign,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SimParams:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError([f"unknown parameter key {k!r}" for k in sorted(unknown)])
        missing = [k for k in ("gamma", "signs", "x0", "t_end") if k not in data]
        if missing:
            raise ValidationError([f"missing required key {k!r}" for k in missing])
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ValidationError([f"malformed parameters: {exc}"]) from exc


def validate(params: SimParams) -> None:
    """Check every SimParams invariant; raise :class:`ValidationError` listing all failures."""
    problems: list[str] = []
    p = params
    if not np.isfinite(p.gamma) or p.gamma <= 0:
        problems.append("gamma must be positive")
    if not np.isfinite(p.t_end) or p.t_end <= 0:
        problems.append("t_end must be positive")
    if not np.isfinite(p.dt_max) or p.dt_max <= 0:
        problems.append("dt_max must be positive")
    if not (0 < p.step_factor <= 1):
        problems.append("step_factor must lie in (0, 1]")
    if not np.isfinite(p.eps_coll) or p.eps_coll <= 0:
        problems.append("eps_coll must be positive")
    elif p.eps_coll**2 < 10 * p.step_factor * DT_FLOOR:
        problems.append("eps_coll too small: need eps_coll**2 >= 10 * step_factor * 1e-14")
    if not (0 <= p.seed <= MASK64):
        problems.append("seed must be an unsigned 64-bit integer")
    if p.record_stride < 1:
        problems.append("record_stride must be a positive integer")
    if not p.signs.is_valid():
        problems.append("signs must be a nonempty vector of -1/+1 entries")
    if len(p.signs) != len(p.x0):
        problems.append(f"signs has {len(p.signs)} entries but x0 has {len(p.x0)} particles")
    if not np.all(np.isfinite(p.x0.positions)):
        problems.append("x0 contains non-finite coordinates")
    if not p.x0.alive.all():
        problems.append("all particles of x0 must be alive")
    if p.x0.n_alive < 1:
        problems.append("x0 must contain at least one alive particle")
    for i, j in p.x0.coincident_pairs():
        problems.append(f"x0 particles {i} and {j} coincide")
    if problems:
        raise ValidationError(problems)


class _Loader(yaml.SafeLoader):
    """Safe YAML loader that also reads ``1e-3`` (no dot, unsigned exponent) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def load_yaml(text: str) -> Any:
    return yaml.load(text, Loader=_Loader)


def split_config(data: Any) -> tuple[SimParams | None, dict[str, Any]]:
    """Split a parsed config mapping into parameters and the remaining sections.

    Returns ``None`` for the parameters when the mapping holds no parameter
    key at all (e.g. a config that only has a ``bessel`` section).
    """
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ValidationError(["config file must contain a mapping at top level"])
    sim_keys = {f.name for f in fields(SimParams)}
    sim = {k: v for k, v in data.items() if k in sim_keys}
    extras = {k: v for k, v in data.items() if k not in sim_keys}
    return (SimParams.from_dict(sim) if sim else None), extras


def load_config(path: str | Path) -> tuple[SimParams | None, dict[str, Any]]:
    """Read a YAML config; returns the parameters and the remaining sections."""
    with open(path) as fh:
        return split_config(load_yaml(fh.read()))


def dump_config(params: SimParams, path: str | Path, extras: dict[str, Any] | None = None) -> None:
    data = params.to_dict()
    if extras:
        data.update(extras)
    with open(path, "w") as fh:
        yaml.safe_dump(data, fh, sort_keys=False)


def parse_params_text(text: str) -> SimParams:
    return SimParams.from_dict(load_yaml(text))


def dump_params_text(params: SimParams) -> str:
    return yaml.safe_dump(params.to_dict(), sort_keys=False)
