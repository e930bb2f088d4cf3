"""Two opposite charges: the collision time is a squared Bessel hitting time.

For b = (1, -1) the dispersion R(X_t) = |X^1 - X^2|^2 / 2 is a squared Bessel
process of dimension 2 - 2 gamma.  At gamma = 1 the dimension is 0, whose
extinction probability by time T is exp(-R0 / (2T)).  This script compares
three estimates of P(collision <= 1) for particles at distance 1:

* the particle SDE engine,
* direct simulation of the squared Bessel process,
* the closed form exp(-0.25).

Run:  python demos/pair_collision_law.py
"""

import math

import numpy as np

from signedcoulomb import bessel
from signedcoulomb.core import SimParams
from signedcoulomb.verify import run_ensemble

n = 4000
params = SimParams(1.0, [1, -1], [[-0.5, 0.0], [0.5, 0.0]], t_end=1.0, seed=2024)
runs = run_ensemble(params, n)
hit = np.array([bool(r.events) for r in runs])
p_sde = hit.mean()
se_sde = math.sqrt(p_sde * (1 - p_sde) / n)

est = bessel.hitting_probability(0.0, 0.5, 1.0, 1e-4, 20_000, seed=7)

print(f"SDE engine    : {p_sde:.4f} +- {se_sde:.4f}  ({n} runs)")
print(f"squared Bessel: {est.probability:.4f} +- {est.stderr:.4f}  ({est.n_samples} paths)")
print(f"closed form   : {math.exp(-0.25):.4f}")

times = np.sort([r.first_event_time for r in runs if r.events])
print("\nempirical CDF of the collision time against exp(-1 / (4t)):")
for t in (0.1, 0.25, 0.5, 1.0):
    print(f"  t = {t:4.2f}: {np.searchsorted(times, t, side='right') / n:.4f}  "
          f"vs {math.exp(-0.25 / t):.4f}")
