"""Monte Carlo ensembles that confront the SDE engine with the theory.

Run ``k`` of an ensemble uses seed ``derive_seed(params.seed, k)``; results
are always aggregated in run order, so every report is a deterministic
function of ``(params, n_runs)`` regardless of ``jobs``.

Default thresholds: moment checks pass within 3 standard errors, KS checks
pass when ``p > 1e-3``.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import bessel
from . import observables as obs
from .core import SimParams, derive_seed, validate
from .engine_sde import SdeRunResult, SdeTermination, run_sde

SE_THRESHOLD = 3.0
KS_THRESHOLD = 1e-3


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""


@dataclass
class MomentCheck:
    label: str
    t: float
    mean: float
    target: float
    stderr: float
    passed: bool


@dataclass
class KSCheck:
    label: str
    statistic: float
    p_value: float
    n: int
    passed: bool


@dataclass
class EnsembleReport:
    suite: str
    n_runs: int
    event_count_histogram: dict[int, int] = field(default_factory=dict)
    multiplicity_histogram: dict[int, int] = field(default_factory=dict)
    n_censored: int = 0
    moment_checks: list[MomentCheck] = field(default_factory=list)
    ks_checks: list[KSCheck] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.moment_checks + self.ks_checks + self.checks)

    def failures(self) -> list[str]:
        out = [f"{c.label} (t={c.t:g})" for c in self.moment_checks if not c.passed]
        out += [c.label for c in self.ks_checks if not c.passed]
        out += [c.name for c in self.checks if not c.passed]
        return out

    def moment(self, label, t, mean, target, stderr, k=SE_THRESHOLD):
        passed = bool(abs(mean - target) <= k * stderr)
        self.moment_checks.append(MomentCheck(label, float(t), float(mean), float(target),
                                              float(stderr), passed))

    def ks(self, label, a, b=None, cdf="norm", threshold=KS_THRESHOLD):
        res = stats.ks_2samp(a, b) if b is not None else stats.kstest(a, cdf)
        self.ks_checks.append(KSCheck(label, float(res.statistic), float(res.pvalue), len(a),
                                      bool(res.pvalue > threshold)))

    def check(self, name, value, threshold, passed, detail=""):
        self.checks.append(Check(name, float(value), float(threshold), bool(passed), detail))

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        d["event_count_histogram"] = {str(k): v for k, v in sorted(self.event_count_histogram.items())}
        d["multiplicity_histogram"] = {str(k): v for k, v in sorted(self.multiplicity_histogram.items())}
        return d

    def table(self) -> str:
        rows = [f"suite {self.suite}: n_runs={self.n_runs} censored={self.n_censored} "
                f"{'PASS' if self.passed else 'FAIL'}"]
        if self.event_count_histogram:
            rows.append(f"  events per run: {dict(sorted(self.event_count_histogram.items()))}")
        if self.multiplicity_histogram:
            rows.append(f"  pairs per event: {dict(sorted(self.multiplicity_histogram.items()))}")
        for c in self.moment_checks:
            rows.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.label} t={c.t:g}: mean={c.mean:.6g} "
                        f"target={c.target:.6g} se={c.stderr:.3g} (|z|<={SE_THRESHOLD:g})")
        for c in self.ks_checks:
            rows.append(f"  [{'ok' if c.passed else 'FAIL'}] KS {c.label}: D={c.statistic:.4g} "
                        f"p={c.p_value:.4g} n={c.n} (p>{KS_THRESHOLD:g})")
        for c in self.checks:
            rows.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: {c.value:.6g} "
                        f"(threshold {c.threshold:.6g}) {c.detail}".rstrip())
        return "\n".join(rows)


def _one(args):
    params, sample_times = args
    return run_sde(params, record=False, sample_times=sample_times)


def run_ensemble(params: SimParams, n_runs: int, sample_times: Sequence[float] | None = None,
                 jobs: int = 1) -> list[SdeRunResult]:
    """Independent runs with derived seeds, returned in run order."""
    validate(params)
    tasks = [(params.replace(seed=derive_seed(params.seed, k)), sample_times) for k in range(n_runs)]
    if jobs <= 1:
        return [_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_one, tasks, chunksize=max(1, n_runs // (4 * jobs))))


def _histograms(report: EnsembleReport, results: Sequence[SdeRunResult]) -> None:
    report.event_count_histogram = dict(Counter(r.n_events for r in results))
    report.multiplicity_histogram = dict(Counter(e.n_pairs for r in results for e in r.events))


def _both_signs(params: SimParams) -> None:
    b = params.signs.signs
    if not (np.any(b > 0) and np.any(b < 0)):
        raise ValueError("this check needs both signs present")


def _single_signed(params: SimParams) -> None:
    b = params.signs.signs
    if not (np.all(b > 0) or np.all(b < 0)):
        raise ValueError("this check needs a single-signed sign vector")


def expected_collisions(params: SimParams) -> int:
    """``(N - |sum b|) / 2`` removal events over the whole life of the system."""
    return (params.n - abs(params.signs.net_charge())) // 2


def verify_collision_count(params: SimParams, n_runs: int, max_censored: float = 0.05,
                           jobs: int = 1) -> EnsembleReport:
    """Every run that reaches sign exhaustion has exactly ``m`` single-pair events.

    Runs still holding both signs at ``t_end`` are censored, counted and
    excluded from the event-count check; their fraction must stay below
    ``max_censored``.
    """
    params = params.replace(stop_on_single_sign=True)
    results = run_ensemble(params, n_runs, jobs=jobs)
    rep = EnsembleReport("collision-count", n_runs)
    _histograms(rep, results)
    m = expected_collisions(params)
    done = [r for r in results if r.terminated == SdeTermination.ALL_SAME_SIGN_REMAINING]
    rep.n_censored = n_runs - len(done)
    wrong = sum(r.n_events != m for r in done)
    rep.check("uncensored runs with event count != m", wrong, 0, wrong == 0, f"m={m}")
    multi = sum(e.n_pairs != 1 for r in results for e in r.events)
    rep.check("events removing more than one pair", multi, 0, multi == 0)
    net = params.signs.net_charge()
    drift_q = sum(params.signs.net_charge(r.final.alive) != net for r in results)
    rep.check("runs with changed net charge", drift_q, 0, drift_q == 0)
    frac = rep.n_censored / n_runs
    rep.check("censored fraction", frac, max_censored, frac < max_censored or m == 0)
    return rep


def _dispersion_samples(results, t_grid):
    return np.array([[obs.dispersion(r.snapshots[t]) for t in t_grid] for r in results])


def verify_dispersion_law(params: SimParams, n_runs: int, t_grid: Sequence[float],
                          delta_target: float | None = None, bessel_dt: float | None = None,
                          jobs: int = 1) -> EnsembleReport:
    """Mean and law of ``R(X_t)`` against a squared Bessel process of the system's dimension.

    ``delta_target`` replaces the theoretical dimension (used to exercise
    the failure path).
    """
    _single_signed(params)
    params = params.replace(stop_on_single_sign=False, t_end=max(max(t_grid), params.t_end))
    t_grid = sorted(float(t) for t in t_grid)
    delta = obs.bessel_dimension(range(params.n), params.signs, params.gamma)
    if delta_target is not None:
        delta = float(delta_target)
    r0 = obs.dispersion(params.x0)
    results = run_ensemble(params, n_runs, sample_times=t_grid, jobs=jobs)
    rep = EnsembleReport("dispersion", n_runs)
    _histograms(rep, results)
    R = _dispersion_samples(results, t_grid)
    for j, t in enumerate(t_grid):
        rep.moment("mean R(X_t)", t, R[:, j].mean(), r0 + delta * t, R[:, j].std(ddof=1) / math.sqrt(n_runs))
    dt = bessel_dt or params.dt_max
    ref = bessel._marginals(delta, r0, t_grid, dt, n_runs, derive_seed(params.seed, 1 << 40))
    for j, t in enumerate(t_grid):
        rep.ks(f"R(X_t) vs SqB0({delta:g}, {r0:g}) at t={t:g}", R[:, j], ref[:, j])
    events = sum(r.n_events for r in results)
    rep.check("events in single-signed system", events, 0, events == 0)
    return rep


def verify_mean_is_brownian(params: SimParams, n_runs: int, t_grid: Sequence[float],
                            jobs: int = 1) -> EnsembleReport:
    """``M(X_t) - M(x0)`` is a planar Brownian motion with variance ``t / N`` per coordinate."""
    _single_signed(params)
    params = params.replace(stop_on_single_sign=False, t_end=max(max(t_grid), params.t_end))
    t_grid = sorted(float(t) for t in t_grid)
    n = params.n
    m0 = obs.mean(params.x0)
    results = run_ensemble(params, n_runs, sample_times=t_grid, jobs=jobs)
    rep = EnsembleReport("mean-brownian", n_runs)
    _histograms(rep, results)
    for t in t_grid:
        dev = np.array([obs.mean(r.snapshots[t]) - m0 for r in results])
        var = t / n
        for c, name in enumerate("xy"):
            v = dev[:, c].var(ddof=1)
            rep.moment(f"var M_{name}", t, v, var, var * math.sqrt(2.0 / (n_runs - 1)))
            rep.ks(f"M_{name}(t={t:g}) / sqrt(t/N) ~ N(0,1)", dev[:, c] / math.sqrt(var))
        cov = float(np.mean((dev[:, 0] - dev[:, 0].mean()) * (dev[:, 1] - dev[:, 1].mean())))
        rep.moment("cov(M_x, M_y)", t, cov, 0.0, var / math.sqrt(n_runs))
    return rep


def _first_event_times(results, t_end):
    return np.array([r.first_event_time if r.events else t_end for r in results])


def verify_scaling_invariance(params: SimParams, L: float, n_runs: int,
                              jobs: int = 1) -> EnsembleReport:
    """KS test: first event times from ``x0`` vs those from ``L x0`` divided by ``L**2``.

    The rescaled arm uses ``L x0``, ``L eps_coll``, ``L**2 dt_max`` and
    ``L**2 t_end``; the step law ``step_factor * d**2`` is scale covariant
    on its own. Runs without an event are censored at ``t_end`` in both arms.
    """
    _both_signs(params)
    if not L > 0:
        raise ValueError("L must be positive")
    # a run ends at sign exhaustion at the latest; only its first event is used
    base = params.replace(seed=derive_seed(params.seed, 0), stop_on_single_sign=True)
    scaled = base.replace(
        seed=derive_seed(params.seed, 1),
        x0=base.x0.with_positions(L * base.x0.positions),
        eps_coll=L * base.eps_coll,
        dt_max=L * L * base.dt_max,
        t_end=L * L * base.t_end,
    )
    res_a = run_ensemble(base, n_runs, jobs=jobs)
    res_b = run_ensemble(scaled, n_runs, jobs=jobs)
    rep = EnsembleReport("scaling", n_runs)
    _histograms(rep, res_a)  # histograms describe the base arm
    ta = _first_event_times(res_a, base.t_end)
    tb = _first_event_times(res_b, scaled.t_end) / (L * L)
    rep.n_censored = int(np.sum([not r.events for r in res_a + res_b]))
    rep.ks(f"first event time, base vs L={L:g} rescaled", ta, tb)
    return rep


def verify_simple_collisions(params: SimParams, n_runs: int, clearance_factor: float = 10.0,
                             min_clear_fraction: float = 0.99, jobs: int = 1) -> EnsembleReport:
    """All events remove a single pair, and almost all happen away from third particles."""
    _both_signs(params)
    params = params.replace(stop_on_single_sign=True)
    results = run_ensemble(params, n_runs, jobs=jobs)
    rep = EnsembleReport("simple-collisions", n_runs)
    _histograms(rep, results)
    rep.n_censored = sum(r.terminated != SdeTermination.ALL_SAME_SIGN_REMAINING for r in results)
    events = [e for r in results for e in r.events]
    multi = sum(e.n_pairs != 1 for e in events)
    rep.check("events removing more than one pair", multi, 0, multi == 0, f"of {len(events)} events")
    limit = clearance_factor * params.eps_coll
    clear = [min(e.clearances) > limit for e in events]
    frac = float(np.mean(clear)) if events else 1.0
    rep.check(f"fraction of events with third particle beyond {clearance_factor:g} eps_coll",
              frac, min_clear_fraction, frac >= min_clear_fraction, f"of {len(events)} events")
    rep.check("events observed", len(events), 1, len(events) >= 1)
    return rep


def verify_collisions_happen(params: SimParams, n_runs: int, horizons: Sequence[float] | None = None,
                             bessel_horizon: float | None = None, bessel_samples: int | None = None,
                             bessel_dt: float = 1e-4, jobs: int = 1) -> EnsembleReport:
    """Sign exhaustion happens in finite time: its empirical CDF grows with the horizon.

    For two particles of opposite sign the first collision is the zero
    hitting time of ``R(X_t)``, a squared Bessel process of dimension
    ``2 - 2 gamma``; its empirical CDF at ``bessel_horizon`` is then compared with
    :func:`bessel.hitting_probability` within 3 joint standard errors.
    """
    _both_signs(params)
    params = params.replace(stop_on_single_sign=True)
    if horizons is None:
        horizons = [params.t_end / 10, params.t_end / 3, params.t_end]
    horizons = sorted(float(h) for h in horizons)
    params = params.replace(t_end=max(params.t_end, horizons[-1]))
    results = run_ensemble(params, n_runs, jobs=jobs)
    rep = EnsembleReport("collisions-happen", n_runs)
    _histograms(rep, results)
    done = np.array([r.terminated == SdeTermination.ALL_SAME_SIGN_REMAINING for r in results])
    t_exh = np.array([r.events[-1].time if d else np.inf for r, d in zip(results, done)])
    rep.n_censored = int(np.sum(~done))
    fracs = [float(np.mean(t_exh <= h)) for h in horizons]
    for h, f in zip(horizons, fracs):
        rep.check(f"fraction exhausted by t={h:g}", f, 0, True)
    rep.check("exhaustion fraction nondecreasing in horizon", fracs[-1] - fracs[0], 0,
              all(a <= b for a, b in zip(fracs, fracs[1:])) and fracs[-1] > fracs[0])
    if params.n == 2 and bessel_horizon is not None:
        T = float(bessel_horizon)
        delta = obs.bessel_dimension(range(2), params.signs, params.gamma)
        r0 = obs.dispersion(params.x0)
        first = np.array([r.first_event_time if r.events else np.inf for r in results])
        p_sde = float(np.mean(first <= T))
        est = bessel.hitting_probability(delta, r0, T, bessel_dt, bessel_samples or n_runs,
                                         derive_seed(params.seed, 1 << 41))
        se = math.sqrt(p_sde * (1 - p_sde) / n_runs + est.stderr**2)
        rep.moment(f"P(first collision <= T) vs SqB0({delta:g}, {r0:g}) hitting", T, p_sde,
                   est.probability, se)
    return rep


SUITES = {
    "collision-count": verify_collision_count,
    "dispersion": verify_dispersion_law,
    "mean-brownian": verify_mean_is_brownian,
    "scaling": verify_scaling_invariance,
    "simple-collisions": verify_simple_collisions,
    "collisions-happen": verify_collisions_happen,
}
