"""Exit criteria of the toolkit, each at its stated tolerance.

Criteria 1-4 are exact and deterministic; 5-10 are Monte Carlo checks at a
fixed master seed. A summary line per criterion is printed at the end of the
session (see ``conftest.py``).
"""

import math
import time

import numpy as np
import pytest

from oracles import best_split, separation
from signedcoulomb import bessel, verify
from signedcoulomb import observables as obs
from signedcoulomb.configurations import alternating_ring, triangle_with_center
from signedcoulomb.core import Configuration, Partition, SignVector, SimParams
from signedcoulomb.engine_ode import OdeTermination, conservation_report, run_ode
from signedcoulomb.interaction import drift, energy, radial_power

pytestmark = pytest.mark.slow


def acceptance(k, title):
    return pytest.mark.acceptance(k, title=title)


def _random_config(rng, n, min_gap):
    """Uniform points in a random box, redrawn until pairwise gaps exceed ``min_gap``."""
    scale = 10 ** rng.uniform(-1, 1)
    while True:
        p = rng.uniform(-scale, scale, (n, 2))
        d = np.hypot(*(p[:, None, :] - p[None, :, :]).transpose(2, 0, 1))
        if n == 1 or d[np.triu_indices(n, 1)].min() > min_gap * scale:
            return Configuration(p)


def _clustered_config(rng, n):
    """Points around a few centres with spreads over several decades."""
    k = rng.integers(1, n + 1)
    centres = rng.uniform(-3, 3, (k, 2))
    spread = 10 ** rng.uniform(-3, 0, k)
    lab = rng.integers(0, k, n)
    return Configuration(centres[lab] + spread[lab, None] * rng.normal(size=(n, 2)))


def _random_signs(rng, n):
    return SignVector(rng.choice([-1, 1], n))


# --- 1 -------------------------------------------------------------------------

def _fd_gradient(x, b, gamma, h):
    p = x.positions.copy()
    g = np.zeros_like(p)
    for i in range(len(p)):
        for c in range(2):
            old = p[i, c]
            p[i, c] = old + h
            up = energy(x.with_positions(p), b, gamma)
            p[i, c] = old - h
            down = energy(x.with_positions(p), b, gamma)
            p[i, c] = old
            g[i, c] = (up - down) / (2 * h)
    return g


@acceptance(1, "drift identities over 1000 random configurations")
def test_drift_identities(record_property):
    rng = np.random.default_rng(101)
    worst_sum = worst_power = worst_grad = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        x = _random_config(rng, n, 0.05)
        b = _random_signs(rng, n)
        gamma = float(rng.uniform(0.1, 3.0))
        F = drift(x, b, gamma)
        closed = 0.5 * gamma * (b.signs.sum() ** 2 - n)
        worst_sum = max(worst_sum, float(np.abs(F.sum(axis=0)).max()))
        worst_power = max(worst_power, abs(radial_power(x, b, gamma) - closed))
        if n >= 2:
            h = 1e-6 * float(np.abs(x.positions).max())
            G = _fd_gradient(x, b, gamma, h)
            worst_grad = max(worst_grad, float(np.linalg.norm(F + G) / np.linalg.norm(F)))
    record_property("detail", f"max |sum F| = {worst_sum:.2e}, max radial-power error = "
                              f"{worst_power:.2e}, max relative gradient error = {worst_grad:.2e}")
    assert worst_sum < 1e-12
    assert worst_power < 1e-10
    assert worst_grad < 1e-6


# --- 2 -------------------------------------------------------------------------

def _octagon_params():
    x, b = alternating_ring(8)
    return SimParams(1.0, b, x, t_end=2.0, dt_max=1e-3, step_factor=0.02, eps_coll=1e-4)


@acceptance(2, "octagon ODE collapse at t = 1")
def test_ode_collapse_benchmark(record_property):
    p = _octagon_params()
    run_ode(p.replace(t_end=1e-3))  # compile the kernels outside the timed run
    start = time.perf_counter()
    res = run_ode(p)
    elapsed = time.perf_counter() - start
    info = res.collision_info
    rep = conservation_report(res, p, r_floor=1e-4)
    record_property("detail", f"collision t = {info.time:.6f}, |site| = {math.hypot(*info.site):.1e}, "
                              f"max rel. deviation of R from 8 - 8t = "
                              f"{rep.max_relative_dispersion_deviation:.1e}, runtime {elapsed:.2f} s")
    assert res.terminated is OdeTermination.COLLISION_DETECTED
    assert info.indices == tuple(range(8))
    assert abs(info.time - 1.0) <= 1e-3
    assert math.hypot(*info.site) <= 1e-3
    assert rep.dispersion_rate == -8.0
    assert rep.max_relative_dispersion_deviation < 1e-5
    assert elapsed < 5.0


# --- 3 -------------------------------------------------------------------------

@acceptance(3, "triangle-with-centre ODE stationarity")
def test_ode_stationary_benchmark(record_property):
    x, b = triangle_with_center()
    F = drift(x, b, 1.0)
    res = run_ode(SimParams(1.0, b, x, t_end=1.0, record_stride=1))
    disp = max(float(np.abs(c.positions - x.positions).max()) for _, c in res.samples)
    record_property("detail", f"max |F(x0)| = {np.abs(F).max():.1e}, max displacement = {disp:.1e}")
    assert np.linalg.norm(F, axis=1).max() < 1e-12
    assert res.terminated is OdeTermination.REACHED_T_END and res.samples[-1][0] == 1.0
    assert disp < 1e-6


# --- 4 -------------------------------------------------------------------------

@acceptance(4, "partition lemmas and split bound over 1000 configurations")
def test_partition_lemmas(record_property):
    rng = np.random.default_rng(404)
    violations = {"a": 0, "b": 0, "c": 0, "d": 0, "split": 0, "oracle": 0}
    multi_block = 0
    for k in range(1000):
        n = int(rng.integers(2, 9))
        x = _clustered_config(rng, n) if k % 2 else _random_config(rng, n, 1e-3)
        _, dist = obs.pairwise_distances(x)
        d0 = float(rng.choice(dist[np.triu_indices(n, 1)])) * float(rng.uniform(0.5, 1.5))
        P = obs.associated_partition(x, d0)
        if len(P) >= 2:
            multi_block += 1
            violations["a"] += obs.partition_separation(x, P) < d0
        d1 = d0 * float(rng.uniform(0, 1))
        violations["b"] += not obs.associated_partition(x, d1).refines(P)
        labels = rng.integers(0, rng.integers(2, n + 1), n)
        if len(set(labels.tolist())) >= 2:
            L = Partition([np.flatnonzero(labels == v).tolist() for v in np.unique(labels)])
            dL = obs.partition_separation(x, L)
            violations["c"] += not obs.associated_partition(x, dL).refines(L)
        violations["d"] += sum(obs.local_dispersion(x, K) >= 0.5 * len(K) ** 3 * d0**2 for K in P)
        bound = math.sqrt(2 * obs.dispersion(x) / n**3)
        K = obs.split_cluster(x)
        violations["split"] += separation(x.positions, K) < bound
        best, _ = best_split(x.positions)
        violations["oracle"] += best < bound
    record_property("detail", f"violations {violations}; {multi_block} configs with >= 2 blocks")
    assert multi_block > 100
    assert sum(violations.values()) == 0


# --- 5 -------------------------------------------------------------------------

@acceptance(5, "squared Bessel suite")
def test_bessel_suite(record_property):
    start = time.perf_counter()
    notes = []

    sup = bessel.hitting_probability(2.0, 1.0, 5.0, 1e-3, 10_000, seed=501)
    notes.append(f"delta=2: {sup.n_hits} hits in {sup.n_samples} paths to T=5")
    assert sup.n_hits == 0

    exact = bessel.extinction_probability(1.0, 1.0)
    assert exact == pytest.approx(0.6065, abs=1e-4)
    est = bessel.hitting_probability(0.0, 1.0, 1.0, 1e-4, 100_000, seed=502)
    half = bessel.hitting_probability(0.0, 1.0, 1.0, 5e-5, 100_000, seed=503)
    joint = math.hypot(est.stderr, half.stderr)
    notes.append(f"delta=0 P(hit<=1): dt=1e-4 {est.probability:.4f}+-{est.stderr:.4f}, "
                 f"dt=5e-5 {half.probability:.4f}+-{half.stderr:.4f}, exact {exact:.4f}")
    assert abs(est.probability - exact) <= 3 * est.stderr
    assert abs(half.probability - exact) <= 3 * half.stderr
    assert abs(est.probability - half.probability) <= 3 * joint

    for delta, r, alpha in [(1.0, 1.0, 2.0), (3.0, 0.5, 0.25)]:
        ks = bessel.scaling_check(delta, r, alpha, [0.25, 0.5, 1.0], 5000, seed=504)
        p_min = min(c.p_value for c in ks)
        notes.append(f"scaling delta={delta:g} alpha={alpha:g}: min KS p = {p_min:.3f}")
        assert p_min > 1e-3

    for delta in (2.0, 4.0):
        n = 10_000
        vals, _ = bessel.terminal_samples(delta, 1.0, 1.0, 1e-3, n, seed=505)
        se = vals.std(ddof=1) / math.sqrt(n)
        notes.append(f"E R_1 delta={delta:g}: {vals.mean():.4f} vs {1 + delta:g} (se {se:.4f})")
        assert abs(vals.mean() - (1 + delta)) <= 3 * se

    elapsed = time.perf_counter() - start
    notes.append(f"runtime {elapsed:.1f} s")
    for line in notes:
        record_property("detail", line)
    assert elapsed < 120


# --- 6 -------------------------------------------------------------------------

def _pair_params(**kw):
    base = dict(gamma=1.0, signs=[1, -1], x0=[[-0.5, 0.0], [0.5, 0.0]], t_end=1.0, seed=606)
    base.update(kw)
    return SimParams(**base)


@acceptance(6, "two-particle collision-time law")
def test_two_particle_collision_law(record_property):
    rep = verify.verify_collisions_happen(_pair_params(), 10_000, horizons=[0.25, 0.5, 1.0],
                                          bessel_horizon=1.0, bessel_samples=100_000)
    m = rep.moment_checks[0]
    record_property("detail", f"SDE P(collision<=1) = {m.mean:.4f}, bessel {m.target:.4f}, "
                              f"joint se {m.stderr:.4f}, exact {math.exp(-0.25):.4f}")
    # eps_coll sensitivity: reported, no rate is asserted
    half = verify.verify_collisions_happen(_pair_params(eps_coll=5e-5), 10_000,
                                           horizons=[0.25, 0.5, 1.0])
    p_half = 1 - half.n_censored / half.n_runs
    record_property("detail", f"eps_coll/2 arm: P(collision<=1) = {p_half:.4f} "
                              f"(shift {p_half - m.mean:+.4f})")
    assert m.passed, rep.table()
    assert rep.passed, rep.table()


# --- 7 -------------------------------------------------------------------------

@acceptance(7, "collision-count theorem for two plus and two minus")
def test_collision_count(record_property):
    p = SimParams(1.0, [1, 1, -1, -1], [[0, 0], [1, 1], [1, 0], [0, 1]], t_end=100.0, seed=707)
    start = time.perf_counter()
    rep = verify.verify_collision_count(p, 500)
    elapsed = time.perf_counter() - start
    record_property("detail", f"events per run {rep.event_count_histogram}, pairs per event "
                              f"{rep.multiplicity_histogram}, censored {rep.n_censored}/500, "
                              f"runtime {elapsed:.1f} s")
    assert rep.passed, rep.table()
    assert rep.n_censored / rep.n_runs < 0.05
    assert set(rep.multiplicity_histogram) == {1}
    assert elapsed < 600


# --- 8 -------------------------------------------------------------------------

@acceptance(8, "no collisions in a single-signed system")
def test_no_same_sign_collisions(record_property):
    x = [[1.0, 0.0], [-0.5, 0.8660254037844386], [-0.5, -0.8660254037844386]]
    runs = verify.run_ensemble(SimParams(1.0, [1, 1, 1], x, t_end=1.0, seed=808), 1000)
    n_events = sum(r.n_events for r in runs)
    contacts = sum(r.same_sign_contacts for r in runs)
    record_property("detail", f"{n_events} events, {contacts} same-sign contacts in 1000 runs")
    assert n_events == 0
    assert all(r.final.n_alive == 3 for r in runs)


# --- 9 -------------------------------------------------------------------------

@acceptance(9, "simple collisions from the alternating octagon")
def test_simple_collisions_octagon(record_property):
    x, b = alternating_ring(8)
    p = SimParams(1.0, b, x, t_end=50.0, seed=909, stop_on_single_sign=True)
    rep = verify.verify_simple_collisions(p, 500)
    frac = next(c for c in rep.checks if c.name.startswith("fraction")).value
    record_property("detail", f"pairs per event {rep.multiplicity_histogram}, "
                              f"clearance fraction {frac:.4f}")
    assert rep.passed, rep.table()
    assert set(rep.multiplicity_histogram) == {1}


# --- 10 ------------------------------------------------------------------------

@acceptance(10, "scaling invariance of the first-event time")
def test_scaling_invariance(record_property):
    p = _pair_params(t_end=20.0, seed=1010)
    rep = verify.verify_scaling_invariance(p, 2.0, 2000)
    ks = rep.ks_checks[0]
    record_property("detail", f"KS D = {ks.statistic:.4f}, p = {ks.p_value:.3f}, "
                              f"censored {rep.n_censored} of 4000")
    assert ks.n == 2000
    assert ks.p_value > 1e-3
    assert rep.passed, rep.table()
