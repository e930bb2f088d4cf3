"""Eight alternating charges on the unit circle collapse into the origin.

Without noise the particle system is a gradient flow of the energy, and the
dispersion R(x) = (1/2N) sum_{i,j} |x^i - x^j|^2 changes at the constant rate
gamma * ((sum b)^2 - N).  For the octagon with gamma = 1 and net charge 0
that rate is -8, so R(x(t)) = 8 - 8t hits zero at t = 1: all particles meet
at the centre simultaneously.  Noise adds 2 (N - 1) = 14 to the rate, the
Bessel dimension becomes 6 > 2, and the full collapse no longer happens.

Run:  python demos/octagon_collapse.py
"""

import math

from signedcoulomb import observables as obs
from signedcoulomb.configurations import alternating_ring
from signedcoulomb.core import SimParams
from signedcoulomb.engine_ode import conservation_report, run_ode

x, b = alternating_ring(8)
params = SimParams(1.0, b, x, t_end=2.0, step_factor=0.02, record_stride=50)
res = run_ode(params)

print(f"terminated: {res.terminated.value}")
info = res.collision_info
print(f"collision of particles {info.indices} at t = {info.time:.6f}, "
      f"|site| = {math.hypot(*info.site):.1e}")

print("\n   t        R(x(t))      8 - 8t")
for t, c in res.samples[:: max(1, len(res.samples) // 10)]:
    print(f"{t:7.4f}  {obs.dispersion(c):11.6f}  {8 - 8 * t:11.6f}")

rep = conservation_report(res, params, r_floor=1e-4)
print(f"\nlargest relative deviation from the affine law: {rep.max_relative_dispersion_deviation:.1e}")
print(f"largest drift of the mean: {rep.max_mean_drift:.1e}")

# With noise the symmetric collapse breaks down into pairwise collisions.
from signedcoulomb.engine_sde import run_sde  # noqa: E402

sde = run_sde(params.replace(t_end=50.0, stop_on_single_sign=True, seed=1), record=False)
print("\nwith Brownian noise:")
for e in sde.events:
    print(f"  t = {e.time:.4f}: removed pairs {e.removed_pairs}")
