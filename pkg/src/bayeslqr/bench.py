"""Monte Carlo comparison of LQR synthesis methods on a random
spring-mass-damper family.

Each trial draws a true system from the parameter prior, collects a short
open-loop data record, synthesizes a gain with every configured method and
scores it on the true system. A sweep repeats this over a grid of
regularization weights (fixed horizon) or horizons (weight ``c / T``).

Per-trial randomness comes from a seed derived from
``(master_seed, axis_index, trial_index)``, so results do not depend on how
trials are scheduled across worker processes.
"""
import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from bayeslqr.errors import (
    AggregationError,
    BayesLqrError,
    ConfigError,
    DomainError,
)
from bayeslqr.estimation import Prior, compute_posterior
from bayeslqr.linalg import spectral_radius
from bayeslqr.lqr import (
    UNSTABLE,
    LqrWeights,
    ce_lqr,
    evaluate_cost,
    indirect_bayes_lqr,
    lqr_true,
)
from bayeslqr.sdp import data_covariances, direct_bayes_lqr
from bayeslqr.sysdata import NoiseSpec, SystemModel, check_persistency, simulate_openloop

log = logging.getLogger(__name__)

SYNTHESIS_METHODS = ("ce", "indirect_bayes", "direct_bayes", "cov_param")
CSV_COLUMNS = ("axis_value", "method", "runs", "valid_runs", "stable_runs",
               "stability_rate", "median_gap", "mean_gap", "p25_gap", "p75_gap")
MAX_REJECTIONS = 10_000
PE_RETRIES = 10
# noise variance used to score gains when the literal value is zero
SIGMA_FLOOR = 1e-12
DEFAULT_LAMBDAS = (0.0,) + tuple(float(v) for v in np.logspace(-3, 2, 15))


@dataclass(frozen=True)
class SpringMassParams:
    """Gaussian parameter prior of ``A = [[1, Ts], [-a, 1-b]]``, ``B = [0; g]``."""

    alpha_bar: float = 1.05
    beta_bar: float = 0.05
    gamma_bar: float = 1.0
    sigma_alpha: float = 0.5
    sigma_beta: float = 0.1
    sigma_gamma: float = 0.8
    sample_time: float = 1.0

    def __post_init__(self):
        for name in ("sigma_alpha", "sigma_beta", "sigma_gamma"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"{name} must be >= 0")

    def system(self, alpha, beta, gamma):
        A = [[1.0, self.sample_time], [-alpha, 1.0 - beta]]
        return SystemModel(A, [[0.0], [gamma]])

    def prior(self):
        return Prior.spring_mass(self.alpha_bar, self.beta_bar, self.gamma_bar,
                                 self.sigma_alpha, self.sigma_beta, self.sigma_gamma,
                                 self.sample_time)


@dataclass(frozen=True)
class LambdaSweep:
    lambdas: tuple = DEFAULT_LAMBDAS
    T: int = 8

    axis_name = "lambda"

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        if not self.lambdas:
            raise ConfigError("lambda sweep needs at least one value")
        if any(not v >= 0 for v in self.lambdas):
            raise ConfigError("lambda values must be >= 0")
        if self.T < 1:
            raise ConfigError("T must be >= 1")

    @property
    def axis(self):
        return self.lambdas

    def point(self, i):
        """``(lambda, T)`` at axis index ``i``."""
        return self.lambdas[i], self.T


@dataclass(frozen=True)
class HorizonSweep:
    Ts: tuple = (8, 16, 32, 64, 128)
    c: float = 1.0

    axis_name = "T"

    def __post_init__(self):
        object.__setattr__(self, "Ts", tuple(int(v) for v in self.Ts))
        if not self.Ts:
            raise ConfigError("horizon sweep needs at least one T")
        if any(v < 1 for v in self.Ts):
            raise ConfigError("horizons must be >= 1")
        if not self.c >= 0:
            raise ConfigError("lambda rule coefficient must be >= 0")

    @property
    def axis(self):
        return self.Ts

    def point(self, i):
        T = self.Ts[i]
        return self.c / T, T


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a sweep's output.

    ``threads`` only changes wall time. ``noninformative_prior`` replaces
    the parameter prior by Omega = 0 for the Bayesian methods.
    """

    prior_params: SpringMassParams = field(default_factory=SpringMassParams)
    weights: LqrWeights = field(
        default_factory=lambda: LqrWeights(np.diag([5.0, 0.1]), [[0.1]]))
    sigma_w: float = 0.25
    methods: tuple = ("direct_bayes", "cov_param")
    sweep: object = field(default_factory=LambdaSweep)
    runs: int = 1000
    master_seed: int = 0
    rho_max: float = 1.05
    input_std: float = 1.0
    x0_std: float = 1.0
    threads: int = 1
    sdp_backend: str = None
    noninformative_prior: bool = False

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if not self.rho_max > 0:
            raise ConfigError(f"rho_max must be > 0, got {self.rho_max}")
        if not self.sigma_w >= 0:
            raise ConfigError(f"sigma_w must be >= 0, got {self.sigma_w}")
        if self.input_std < 0 or self.x0_std < 0:
            raise ConfigError("input_std and x0_std must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.master_seed < 0:
            raise ConfigError("master_seed must be a nonnegative integer")
        bad = [m for m in self.methods if m not in SYNTHESIS_METHODS]
        if bad or not self.methods:
            raise ConfigError(f"methods must be a nonempty subset of {SYNTHESIS_METHODS}, got {bad}")
        if not isinstance(self.sweep, (LambdaSweep, HorizonSweep)):
            raise ConfigError("sweep must be a LambdaSweep or a HorizonSweep")

    @property
    def noise(self):
        return NoiseSpec.from_std(self.sigma_w)


@dataclass
class MethodOutcome:
    K: np.ndarray  # None when synthesis failed
    stable: bool
    cost: float
    gap: float  # nan unless stable
    error: str = ""


@dataclass
class TrialRecord:
    seed: int
    lam: float
    T: int
    valid: bool
    true_system: SystemModel = None
    cstar: float = math.nan
    outcomes: dict = field(default_factory=dict)
    rejections: int = 0
    reason: str = ""


@dataclass
class SweepResult:
    axis_name: str
    axis: tuple
    methods: tuple
    runs_per_point: int
    series: dict  # method -> list of aggregate dicts, one per axis point
    invalid: list  # invalid-trial count per axis point
    records: list = None  # per axis point, list of TrialRecord

    def column(self, method, key):
        return [row[key] for row in self.series[method]]


def trial_seed(master_seed, axis_index, trial_index):
    ss = np.random.SeedSequence(master_seed, spawn_key=(axis_index, trial_index))
    return int(ss.generate_state(1, np.uint64)[0])


def sample_true_system(cfg, rng):
    """Draw ``(alpha, beta, gamma)`` from the parameter prior until the open
    loop has spectral radius at most ``rho_max``.

    Returns ``(system, rejections)``.
    """
    pp = cfg.prior_params
    for rejections in range(MAX_REJECTIONS + 1):
        alpha = pp.alpha_bar + pp.sigma_alpha * rng.standard_normal()
        beta = pp.beta_bar + pp.sigma_beta * rng.standard_normal()
        gamma = pp.gamma_bar + pp.sigma_gamma * rng.standard_normal()
        sys = pp.system(alpha, beta, gamma)
        if spectral_radius(sys.A) <= cfg.rho_max:
            return sys, rejections
    raise ConfigError(
        f"no system with spectral radius <= {cfg.rho_max} after {MAX_REJECTIONS} "
        "rejections; the parameter prior is inconsistent with rho_max"
    )


def _synthesize(method, lam, cfg, post, covs):
    if method == "ce":
        return ce_lqr(post, cfg.weights).K
    if method == "indirect_bayes":
        return indirect_bayes_lqr(post, cfg.weights, lam).K
    if method == "direct_bayes":
        return direct_bayes_lqr(post, cfg.weights, lam, backend=cfg.sdp_backend).K
    return direct_bayes_lqr(covs, cfg.weights, lam, backend=cfg.sdp_backend,
                            method="cov_param").K


def run_trial(cfg, lam, T, seed):
    """One Monte Carlo trial. Failures of the experiment itself (no
    exciting data, no optimal controller for the true system) give an
    invalid record; a failed synthesis counts as an unstable outcome.
    """
    rng = np.random.default_rng(seed)
    sys, rejections = sample_true_system(cfg, rng)
    rec = TrialRecord(seed=seed, lam=float(lam), T=int(T), valid=False,
                      true_system=sys, rejections=rejections)
    noise = cfg.noise
    score_noise = NoiseSpec(max(noise.sigma_w_sq, SIGMA_FLOOR))
    if T < sys.n + sys.m:
        rec.reason = f"T={T} < n+m={sys.n + sys.m}; data cannot be persistently exciting"
        return rec
    try:
        _, cstar = lqr_true(sys, cfg.weights, score_noise)
    except BayesLqrError as exc:
        rec.reason = f"true LQR failed: {exc}"
        return rec
    rec.cstar = cstar

    for _ in range(PE_RETRIES):
        d = simulate_openloop(sys, noise, T, rng, input_std=cfg.input_std, x0_std=cfg.x0_std)
        if check_persistency(d):
            break
    else:
        rec.reason = "data not persistently exciting after retries"
        return rec

    prior = (Prior.noninformative(sys.n, sys.m) if cfg.noninformative_prior
             else cfg.prior_params.prior())
    try:
        post = compute_posterior(d, prior, noise)
        covs = data_covariances(d, noise)
    except BayesLqrError as exc:
        rec.reason = f"posterior failed: {exc}"
        return rec
    rec.valid = True

    for method in cfg.methods:
        try:
            K = _synthesize(method, lam, cfg, post, covs)
        except (BayesLqrError, np.linalg.LinAlgError) as exc:
            rec.outcomes[method] = MethodOutcome(None, False, UNSTABLE, math.nan,
                                                 f"{type(exc).__name__}: {exc}")
            continue
        cost = evaluate_cost(sys, K, cfg.weights, score_noise)
        stable = cost != UNSTABLE
        gap = (cost - cstar) / cstar if stable else math.nan
        rec.outcomes[method] = MethodOutcome(K, stable, cost, gap)
    return rec


def aggregate(records, method):
    """Stability rate over valid trials and gap statistics over stable ones.

    Undefined statistics (no stable trial) are ``nan``.
    """
    if not records:
        raise AggregationError("no trials to aggregate")
    valid = [r for r in records if r.valid]
    if not valid:
        raise AggregationError(f"all {len(records)} trials are invalid")
    gaps = np.array([r.outcomes[method].gap for r in valid if r.outcomes[method].stable])
    out = {
        "runs": len(records),
        "valid_runs": len(valid),
        "stable_runs": int(gaps.size),
        "stability_rate": gaps.size / len(valid),
    }
    if gaps.size:
        p25, med, p75 = np.percentile(gaps, [25, 50, 75])
        out.update(median_gap=float(med), mean_gap=float(gaps.mean()),
                   p25_gap=float(p25), p75_gap=float(p75))
    else:
        out.update(median_gap=math.nan, mean_gap=math.nan, p25_gap=math.nan, p75_gap=math.nan)
    return out


def _empty_row(n):
    return {"runs": n, "valid_runs": 0, "stable_runs": 0, "stability_rate": math.nan,
            "median_gap": math.nan, "mean_gap": math.nan, "p25_gap": math.nan,
            "p75_gap": math.nan}


def _run_task(args):
    cfg, lam, T, seed = args
    return run_trial(cfg, lam, T, seed)


def sweep(cfg, keep_records=True, progress=None):
    """Run ``cfg.runs`` trials at every axis point and aggregate.

    ``progress``, if given, is called with ``(axis_index, n_points)`` after
    each point.
    """
    sw = cfg.sweep
    n_points = len(sw.axis)
    series = {m: [] for m in cfg.methods}
    invalid = []
    all_records = [] if keep_records else None
    pool = ProcessPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for i in range(n_points):
            lam, T = sw.point(i)
            tasks = [(cfg, lam, T, trial_seed(cfg.master_seed, i, j)) for j in range(cfg.runs)]
            if pool is None:
                records = [_run_task(t) for t in tasks]
            else:
                chunk = max(1, cfg.runs // (4 * cfg.threads))
                records = list(pool.map(_run_task, tasks, chunksize=chunk))
            n_invalid = sum(not r.valid for r in records)
            invalid.append(n_invalid)
            if n_invalid:
                reasons = sorted({r.reason for r in records if not r.valid})
                log.info("%s=%r: %d invalid trials (%s)", sw.axis_name, sw.axis[i],
                         n_invalid, "; ".join(reasons[:3]))
            for m in cfg.methods:
                try:
                    series[m].append(aggregate(records, m))
                except AggregationError:
                    series[m].append(_empty_row(len(records)))
            if keep_records:
                all_records.append(records)
            if progress is not None:
                progress(i, n_points)
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(sw.axis_name, tuple(sw.axis), cfg.methods, cfg.runs, series,
                       invalid, all_records)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "nan" if math.isnan(v) else repr(v)


def sweep_csv(result):
    """CSV text of a sweep; identical results give identical bytes."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for i, x in enumerate(result.axis):
        for m in result.methods:
            row = result.series[m][i]
            wr.writerow([_fmt(x), m] + [_fmt(row[k]) for k in CSV_COLUMNS[2:]])
    return buf.getvalue()


def write_sweep_csv(result, path):
    with open(path, "w", newline="") as fh:
        fh.write(sweep_csv(result))


def read_sweep_csv(path):
    """Parse a sweep CSV back into a list of row dicts (numbers as floats)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        if list(row) != list(CSV_COLUMNS):
            raise DomainError(f"unexpected CSV columns {list(row)}")
        for k in CSV_COLUMNS:
            if k != "method":
                row[k] = float(row[k])
    return rows
