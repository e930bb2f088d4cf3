"""Dimension 2 is the sharp threshold for a squared Bessel process to hit zero.

A cluster K of particles can only collapse if its Bessel dimension
gamma * ((sum_K b)^2 - |K|) + 2 (|K| - 1) is below 2.  This script tabulates
the dimension for a few clusters and shows the matching hitting behaviour of
the squared Bessel process started at r = 1.

Run:  python demos/bessel_threshold.py
"""

from signedcoulomb import bessel
from signedcoulomb import observables as obs
from signedcoulomb.core import SignVector

print("cluster signs      gamma  dimension")
for signs, gamma in [([1, -1], 1.0), ([1, -1], 0.5), ([1, 1], 1.0), ([1, 1, -1], 1.0),
                     ([1, 1, -1, -1], 1.0), ([1, -1, 1, -1, 1, -1, 1, -1], 1.0)]:
    d = obs.bessel_dimension(range(len(signs)), SignVector(signs), gamma)
    print(f"{str(signs):24s} {gamma:4.1f}  {d:6.2f}")

print("\ndelta   P(hit 0 by t=5) from r=1")
for delta in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
    est = bessel.hitting_probability(delta, 1.0, 5.0, 1e-3, 4000, seed=3)
    print(f"{delta:5.1f}   {est.probability:.3f} +- {est.stderr:.3f}")

# The hitting time integral of 1/sqrt(R) stays finite: time spent near zero is short.
path = bessel.simulate_sqb0(0.0, 1.0, 1e-4, 10.0, seed=5)
if path.hit_zero_at is not None:
    print(f"\none delta=0 path hits zero at {path.hit_zero_at:.4f}; "
          f"integral of R^(-1/2) up to then = {bessel.inverse_sqrt_time_integral(path):.4f}")
