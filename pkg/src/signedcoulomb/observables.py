"""Cluster functionals of a configuration.

Index sets ``K`` are any iterable of particle indices; every index must be
alive. Partitions are returned in canonical form (blocks sorted, ordered by
smallest member).
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from .core import Configuration, Partition, SignVector


class InternalConsistencyError(AssertionError):
    """A bound that holds as a theorem was violated: indicates a bug."""


def _check_set(config: Configuration, K: Iterable[int]) -> np.ndarray:
    idx = np.array(sorted({int(i) for i in K}), dtype=np.int64)
    if idx.size == 0:
        raise ValueError("index set must be nonempty")
    if idx.min() < 0 or idx.max() >= len(config):
        raise ValueError(f"index out of range in {idx.tolist()}")
    dead = idx[~config.alive[idx]]
    if dead.size:
        raise ValueError(f"indices {dead.tolist()} refer to removed particles")
    return idx


def pairwise_distances(config: Configuration) -> tuple[np.ndarray, np.ndarray]:
    """Alive indices and their distance matrix."""
    idx = config.alive_indices
    pos = config.positions[idx]
    diff = pos[:, None, :] - pos[None, :, :]
    return idx, np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def local_mean(config: Configuration, K: Iterable[int]) -> np.ndarray:
    idx = _check_set(config, K)
    return config.positions[idx].mean(axis=0)


def local_dispersion(config: Configuration, K: Iterable[int]) -> float:
    """Centered second moment ``sum_{i in K} |x^i - M^K|**2``."""
    idx = _check_set(config, K)
    pos = config.positions[idx]
    return float(np.sum((pos - pos.mean(axis=0)) ** 2))


def local_dispersion_pairwise(config: Configuration, K: Iterable[int]) -> float:
    """Same quantity as :func:`local_dispersion`, via ``1/(2|K|) sum_ij |x^i - x^j|**2``."""
    idx = _check_set(config, K)
    pos = config.positions[idx]
    diff = pos[:, None, :] - pos[None, :, :]
    return float(np.sum(diff * diff) / (2 * idx.size))


def mean(config: Configuration) -> np.ndarray:
    return local_mean(config, config.alive_indices)


def dispersion(config: Configuration) -> float:
    return local_dispersion(config, config.alive_indices)


def cluster_separation(config: Configuration, K: Iterable[int]) -> float:
    """Minimal distance between the cluster ``K`` and the other alive particles."""
    idx = _check_set(config, K)
    alive, dist = pairwise_distances(config)
    inside = np.isin(alive, idx)
    if inside.all():
        raise ValueError("K must leave at least one alive particle outside")
    return float(dist[np.ix_(inside, ~inside)].min())


def partition_separation(config: Configuration, P: Partition) -> float:
    if len(P) < 2:
        raise ValueError("partition must have at least two blocks")
    if not P.covers(config.alive_indices):
        raise ValueError("partition must cover exactly the alive indices")
    return min(cluster_separation(config, K) for K in P)


def sign_extremes(config: Configuration, signs: SignVector) -> tuple[float | None, float | None]:
    """Smallest opposite-sign and same-sign distances; ``None`` when a category is empty."""
    idx, dist = pairwise_distances(config)
    b = signs.signs[idx]
    iu = np.triu_indices(idx.size, k=1)
    d = dist[iu]
    opp = b[iu[0]] != b[iu[1]]
    d_opp = float(d[opp].min()) if opp.any() else None
    d_same = float(d[~opp].min()) if (~opp).any() else None
    return d_opp, d_same


def bessel_dimension(K: Iterable[int], signs: SignVector, gamma: float) -> float:
    """``gamma * ((sum_{i in K} b^i)**2 - |K|) + 2 (|K| - 1)``."""
    idx = sorted({int(i) for i in K})
    if not idx:
        raise ValueError("index set must be nonempty")
    k = len(idx)
    q = int(signs.signs[idx].sum())
    return gamma * (q * q - k) + 2.0 * (k - 1)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, u: int) -> int:
        root = u
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[u] != root:
            self.parent[u], u = root, self.parent[u]
        return root

    def union(self, u: int, v: int) -> None:
        ru, rv = self.find(u), self.find(v)
        if ru == rv:
            return
        if self.rank[ru] < self.rank[rv]:
            ru, rv = rv, ru
        self.parent[rv] = ru
        if self.rank[ru] == self.rank[rv]:
            self.rank[ru] += 1


def associated_partition(config: Configuration, d0: float) -> Partition:
    """Connected components of the graph joining alive pairs with ``|x^i - x^j| < d0``."""
    if not d0 > 0:
        raise ValueError("d0 must be positive")
    idx, dist = pairwise_distances(config)
    if idx.size == 0:
        raise ValueError("configuration has no alive particles")
    uf = _UnionFind(idx.size)
    for a, b in zip(*np.nonzero(np.triu(dist < d0, k=1))):
        uf.union(int(a), int(b))
    groups: dict[int, list[int]] = {}
    for a in range(idx.size):
        groups.setdefault(uf.find(a), []).append(int(idx[a]))
    return Partition(groups.values())


def split_cluster(config: Configuration) -> tuple[int, ...]:
    """Proper subset ``K`` of the alive set with ``d^K >= sqrt(2R / N**3)``.

    Uses the associated partition at that threshold; the block holding the
    smallest alive index is returned.
    """
    n = config.n_alive
    if n < 2:
        raise ValueError("need at least two alive particles")
    R = dispersion(config)
    if R == 0:
        raise ValueError("all alive particles coincide")
    bound = math.sqrt(2.0 * R / n**3)
    P = associated_partition(config, bound)
    if len(P) < 2:
        raise InternalConsistencyError(
            f"associated partition at {bound:g} has one block; splitting bound cannot hold"
        )
    K = P.blocks[0]
    if cluster_separation(config, K) < bound:
        raise InternalConsistencyError(f"block {K} violates the splitting bound {bound:g}")
    return K


def good_set_constant(n: int) -> float:
    """``1 / (7**n * n**(3n/2))``."""
    return 1.0 / (7.0**n * float(n) ** (1.5 * n))


def in_good_set(config: Configuration, signs: SignVector) -> bool:
    """Whether ``D_same >= c_N * D_opp > 0`` with ``N`` the number of alive particles."""
    d_opp, d_same = sign_extremes(config, signs)
    if d_opp is None or d_same is None:
        raise ValueError("both an opposite-sign and a same-sign pair must be alive")
    c = good_set_constant(config.n_alive)
    return d_same >= c * d_opp and c * d_opp > 0


@dataclass(frozen=True)
class ClusterSummary:
    index_set: tuple[int, ...]
    mean: tuple[float, float]
    dispersion: float
    bessel_dimension: float


def cluster_summary(config: Configuration, K: Iterable[int], signs: SignVector, gamma: float) -> ClusterSummary:
    idx = tuple(int(i) for i in _check_set(config, K))
    m = local_mean(config, idx)
    return ClusterSummary(
        index_set=idx,
        mean=(float(m[0]), float(m[1])),
        dispersion=local_dispersion(config, idx),
        bessel_dimension=bessel_dimension(idx, signs, gamma),
    )
