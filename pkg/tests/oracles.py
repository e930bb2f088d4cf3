"""Independent reference implementations used as test oracles.

These are deliberately naive (explicit loops, brute force, other libraries)
and share no code with the package beyond its value types.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

MASK = (1 << 64) - 1


def splitmix64_stream(state: int, n: int) -> list[int]:
    """Textbook SplitMix64 generator (Python ints), first ``n`` outputs."""
    out = []
    for _ in range(n):
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        out.append(z ^ (z >> 31))
    return out


def splitmix64_vectorized(master: int, indices: np.ndarray) -> np.ndarray:
    """Output number ``index`` of a SplitMix64 stream seeded with ``master`` (numpy uint64)."""
    with np.errstate(over="ignore"):
        z = np.uint64(master) + (indices.astype(np.uint64) + np.uint64(1)) * np.uint64(0x9E3779B97F4A7C15)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))


def drift_loops(pos, signs, gamma, alive=None):
    n = len(pos)
    alive = [True] * n if alive is None else list(alive)
    F = [[0.0, 0.0] for _ in range(n)]
    for i in range(n):
        if not alive[i]:
            continue
        for j in range(n):
            if j == i or not alive[j]:
                continue
            dx, dy = pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]
            r2 = dx * dx + dy * dy
            F[i][0] += gamma * signs[i] * signs[j] * dx / r2
            F[i][1] += gamma * signs[i] * signs[j] * dy / r2
    return np.array(F)


def energy_loops(pos, signs, gamma):
    h = 0.0
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            h -= gamma * signs[i] * signs[j] * math.log(math.dist(pos[i], pos[j]))
    return h


def components(pos, d0, alive=None):
    """Connected components of ``|x^i - x^j| < d0`` via scipy's csgraph."""
    pos = np.asarray(pos, dtype=float)
    idx = np.arange(len(pos)) if alive is None else np.flatnonzero(alive)
    p = pos[idx]
    d = np.sqrt(((p[:, None, :] - p[None, :, :]) ** 2).sum(-1))
    _, labels = connected_components(csr_matrix(d < d0), directed=False)
    blocks = {}
    for k, lab in zip(idx, labels):
        blocks.setdefault(lab, []).append(int(k))
    return sorted(tuple(b) for b in blocks.values())


def dispersion_pairs(pos):
    pos = np.asarray(pos, dtype=float)
    n = len(pos)
    return sum(math.dist(a, b) ** 2 for a in pos for b in pos) / (2 * n)


def separation(pos, K):
    K = set(K)
    return min(math.dist(pos[i], pos[j]) for i in K for j in range(len(pos)) if j not in K)


def best_split(pos):
    """Exhaustive maximum of the cluster separation over all proper nonempty subsets."""
    n = len(pos)
    best, arg = -1.0, None
    for k in range(1, n):
        for K in itertools.combinations(range(n), k):
            s = separation(pos, K)
            if s > best:
                best, arg = s, K
    return best, arg
