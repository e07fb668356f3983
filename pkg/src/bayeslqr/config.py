"""TOML run configuration.

A config file has these tables; only ``[weights]`` and ``[prior]`` are
required by every command::

    [system]          # optional true system, used to score gains
    A = [[...]]
    B = [[...]]

    [noise]
    sigma_w = 0.25

    [weights]
    Q = [[5.0, 0.0], [0.0, 0.1]]
    R = [[0.1]]

    [prior]
    kind = "spring_mass"      # or "matrix" (mean, precision) or "noninformative"
    alpha_bar = 1.05          # ... spring-mass parameters

    [regularization]
    lambda = 0.125

    [data]
    T = 8
    input_std = 1.0
    x0_std = 1.0

    [benchmark]
    runs = 1000
    master_seed = 0
    methods = ["direct_bayes", "cov_param"]
    [benchmark.lambda_sweep]
    T = 8
    lambdas = [0.0, 0.001, ...]   # optional; log grid by default
    [benchmark.horizon_sweep]
    Ts = [8, 16, 32, 64, 128]
    c = 1.0

Unknown tables or keys are rejected, so typos fail loudly.
"""
import copy
import sys
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from bayeslqr.bench import ExperimentConfig, HorizonSweep, LambdaSweep, SpringMassParams
from bayeslqr.errors import BayesLqrError, ConfigError
from bayeslqr.estimation import Prior
from bayeslqr.lqr import LqrWeights
from bayeslqr.sysdata import NoiseSpec, SystemModel

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

BUILTIN = ("table1", "smoke")

_SCHEMA = {
    "system": {"A", "B"},
    "noise": {"sigma_w"},
    "weights": {"Q", "R"},
    "prior": {"kind", "alpha_bar", "beta_bar", "gamma_bar", "sigma_alpha", "sigma_beta",
              "sigma_gamma", "sample_time", "mean", "precision"},
    "regularization": {"lambda"},
    "data": {"T", "input_std", "x0_std"},
    "benchmark": {"runs", "master_seed", "rho_max", "methods", "threads", "sdp_backend",
                  "noninformative_prior", "lambda_sweep", "horizon_sweep"},
}
_SWEEP_KEYS = {"lambda_sweep": {"T", "lambdas"}, "horizon_sweep": {"Ts", "c"}}
_SPRING_KEYS = ("alpha_bar", "beta_bar", "gamma_bar", "sigma_alpha", "sigma_beta",
                "sigma_gamma", "sample_time")


@dataclass(frozen=True)
class Config:
    raw: dict
    weights: LqrWeights
    prior: Prior
    noise: NoiseSpec
    lam: float = 0.0
    T: int = 8
    input_std: float = 1.0
    x0_std: float = 1.0
    system: SystemModel = None
    spring: SpringMassParams = None
    experiments: dict = field(default_factory=dict)  # "lambda"/"T" -> ExperimentConfig

    @property
    def sigma_w(self):
        return float(np.sqrt(self.noise.sigma_w_sq))


def _check_keys(table, allowed, where):
    extra = sorted(set(table) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _matrix(value, where):
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where} must be a list of numeric rows") from None
    if M.ndim != 2:
        raise ConfigError(f"{where} must be a 2-D list (list of rows), got ndim={M.ndim}")
    return M


def _number(table, key, default, where, kind=float):
    v = table.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    if kind is int and v != int(v):
        raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
    return kind(v)


def parse_config(raw):
    """Build a :class:`Config` from an already-parsed TOML mapping."""
    raw = copy.deepcopy(raw)
    _check_keys(raw, _SCHEMA, "config")
    for name, table in raw.items():
        if not isinstance(table, dict):
            raise ConfigError(f"[{name}] must be a table")
        _check_keys(table, _SCHEMA[name], f"[{name}]")
    try:
        return _build(raw)
    except ConfigError:
        raise
    except BayesLqrError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def _build(raw):
    if "weights" not in raw:
        raise ConfigError("missing [weights] table")
    wt = raw["weights"]
    if "Q" not in wt or "R" not in wt:
        raise ConfigError("[weights] needs Q and R")
    weights = LqrWeights(_matrix(wt["Q"], "weights.Q"), _matrix(wt["R"], "weights.R"))
    sigma_w = _number(raw.get("noise", {}), "sigma_w", 0.25, "noise")
    if sigma_w < 0:
        raise ConfigError("noise.sigma_w must be >= 0")
    noise = NoiseSpec.from_std(sigma_w)
    n, m = weights.n, weights.m

    pr = raw.get("prior")
    if pr is None:
        raise ConfigError("missing [prior] table")
    kind = pr.get("kind", "spring_mass")
    spring = None
    if kind == "spring_mass":
        _check_keys(pr, ("kind",) + _SPRING_KEYS, "[prior] (spring_mass)")
        defaults = SpringMassParams()
        spring = SpringMassParams(**{k: _number(pr, k, getattr(defaults, k), "prior")
                                     for k in _SPRING_KEYS})
        if (n, m) != (2, 1):
            raise ConfigError(f"spring_mass prior needs n=2, m=1 weights, got n={n}, m={m}")
        prior = spring.prior()
    elif kind == "matrix":
        _check_keys(pr, ("kind", "mean", "precision"), "[prior] (matrix)")
        if "mean" not in pr or "precision" not in pr:
            raise ConfigError("matrix prior needs mean and precision")
        prior = Prior(_matrix(pr["mean"], "prior.mean"), _matrix(pr["precision"], "prior.precision"))
    elif kind == "noninformative":
        _check_keys(pr, ("kind",), "[prior] (noninformative)")
        prior = Prior.noninformative(n, m)
    else:
        raise ConfigError(f"prior.kind must be spring_mass, matrix or noninformative, got {kind!r}")
    if (prior.n, prior.m) != (n, m):
        raise ConfigError(f"prior is for n={prior.n}, m={prior.m} but weights are n={n}, m={m}")

    system = None
    if "system" in raw:
        st = raw["system"]
        if "A" not in st or "B" not in st:
            raise ConfigError("[system] needs A and B")
        system = SystemModel(_matrix(st["A"], "system.A"), _matrix(st["B"], "system.B"))
        if (system.n, system.m) != (n, m):
            raise ConfigError(f"[system] is n={system.n}, m={system.m} but weights are n={n}, m={m}")

    lam = _number(raw.get("regularization", {}), "lambda", 0.0, "regularization")
    if lam < 0:
        raise ConfigError("regularization.lambda must be >= 0")
    dt = raw.get("data", {})
    T = _number(dt, "T", 8, "data", int)
    input_std = _number(dt, "input_std", 1.0, "data")
    x0_std = _number(dt, "x0_std", 1.0, "data")
    if T < 1 or input_std < 0 or x0_std < 0:
        raise ConfigError("data.T must be >= 1 and data.input_std, data.x0_std >= 0")

    experiments = {}
    if "benchmark" in raw:
        experiments = _experiments(raw["benchmark"], spring, weights, sigma_w, input_std, x0_std)
    return Config(raw, weights, prior, noise, lam, T, input_std, x0_std, system, spring,
                  experiments)


def _experiments(bt, spring, weights, sigma_w, input_std, x0_std):
    if spring is None:
        raise ConfigError("[benchmark] samples true systems and needs a spring_mass prior")
    common = dict(
        prior_params=spring,
        weights=weights,
        sigma_w=sigma_w,
        runs=_number(bt, "runs", 1000, "benchmark", int),
        master_seed=_number(bt, "master_seed", 0, "benchmark", int),
        rho_max=_number(bt, "rho_max", 1.05, "benchmark"),
        threads=_number(bt, "threads", 1, "benchmark", int),
        input_std=input_std,
        x0_std=x0_std,
    )
    if "methods" in bt:
        if not isinstance(bt["methods"], list):
            raise ConfigError("benchmark.methods must be a list of method tags")
        common["methods"] = tuple(bt["methods"])
    if "sdp_backend" in bt:
        common["sdp_backend"] = str(bt["sdp_backend"])
    if "noninformative_prior" in bt:
        if not isinstance(bt["noninformative_prior"], bool):
            raise ConfigError("benchmark.noninformative_prior must be true or false")
        common["noninformative_prior"] = bt["noninformative_prior"]
    out = {}
    for key, cls, axis in (("lambda_sweep", LambdaSweep, "lambda"),
                           ("horizon_sweep", HorizonSweep, "T")):
        if key not in bt:
            continue
        table = bt[key]
        if not isinstance(table, dict):
            raise ConfigError(f"[benchmark.{key}] must be a table")
        _check_keys(table, _SWEEP_KEYS[key], f"[benchmark.{key}]")
        if key == "lambda_sweep":
            kw = {"T": _number(table, "T", 8, f"benchmark.{key}", int)}
            if "lambdas" in table:
                kw["lambdas"] = tuple(table["lambdas"])
        else:
            kw = {"c": _number(table, "c", 1.0, f"benchmark.{key}")}
            if "Ts" in table:
                kw["Ts"] = tuple(table["Ts"])
        try:
            sw = cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[benchmark.{key}]: {exc}") from None
        out[axis] = ExperimentConfig(sweep=sw, **common)
    if not out:
        raise ConfigError("[benchmark] needs a lambda_sweep and/or horizon_sweep table")
    return out


def override_experiments(cfg, **changes):
    """Copy of ``cfg`` with fields (e.g. runs, master_seed, threads) replaced
    in every experiment; ``None`` values are ignored. The raw snapshot is
    updated too, so a manifest written from it replays the same run.
    """
    changes = {k: v for k, v in changes.items() if v is not None}
    if not changes:
        return cfg
    try:
        exps = {k: replace(e, **changes) for k, e in cfg.experiments.items()}
    except BayesLqrError as exc:
        raise ConfigError(str(exc)) from exc
    raw = copy.deepcopy(cfg.raw)
    raw.setdefault("benchmark", {}).update(changes)
    return replace(cfg, raw=raw, experiments=exps)


def load_config(path):
    """Read a TOML file, or a built-in config by name (``table1``, ``smoke``)."""
    try:
        if path in BUILTIN:
            text = resources.files("bayeslqr").joinpath("configs", f"{path}.toml").read_text()
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(raw)
