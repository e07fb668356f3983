"""Command-line interface: ``bayeslqr {estimate,solve,benchmark,demo}``.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 synthesis or
solver failure, 4 internal numerical failure. Log verbosity is read from
``BAYESLQR_LOG_LEVEL`` (default WARNING).
"""
import argparse
import json
import logging
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from bayeslqr import __version__, bench, kernels
from bayeslqr.config import load_config, override_experiments, parse_config
from bayeslqr.errors import (
    BayesLqrError,
    ConfigError,
    ConvergenceError,
    DataError,
    DimensionError,
    InstabilityError,
    RankDeficiencyError,
    SdpError,
    StabilizabilityError,
    SynthesisError,
)
from bayeslqr.estimation import Prior, compute_posterior
from bayeslqr.lqr import UNSTABLE, ce_lqr, evaluate_cost, indirect_bayes_lqr, lqr_true
from bayeslqr.plots import write_sweep_charts
from bayeslqr.sdp import (
    BACKENDS,
    build_direct_sdp,
    data_covariances,
    default_backend,
    direct_bayes_lqr,
    write_sdpa,
)
from bayeslqr.sysdata import check_persistency, read_dataset_csv, simulate_openloop, write_dataset_csv

log = logging.getLogger("bayeslqr")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_SYNTHESIS = 3
EXIT_NUMERICAL = 4

SOLVE_METHODS = {"ce": "ce", "indirect": "indirect_bayes", "direct": "direct_bayes",
                 "cov_param": "cov_param"}
_SYNTHESIS_FAILURES = (SdpError, StabilizabilityError, ConvergenceError, InstabilityError)


def exit_code(exc):
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (DataError, RankDeficiencyError)):
        return EXIT_DATA
    if isinstance(exc, SynthesisError):
        return EXIT_SYNTHESIS
    return EXIT_NUMERICAL


def _now():
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


@dataclass
class RunManifest:
    """What was run, with which inputs, producing which files."""

    command: str
    config: dict
    arguments: dict
    version: str = __version__
    master_seed: int = None
    started: str = ""
    finished: str = ""
    outputs: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)

    def write(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path):
        try:
            return cls(**json.loads(Path(path).read_text()))
        except (OSError, ValueError, TypeError) as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from None


def _environment(sdp_backend=None):
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernels": kernels.BACKEND,
        "sdp_backend": sdp_backend or default_backend(),
    }


def _tolist(M):
    return np.asarray(M).tolist()


def _load_data(data_dir, cfg):
    d = read_dataset_csv(data_dir)
    if (d.n, d.m) != (cfg.weights.n, cfg.weights.m):
        raise DataError(f"data has n={d.n}, m={d.m}; config expects n={cfg.weights.n}, "
                        f"m={cfg.weights.m}")
    return d


def _posterior(d, prior, noise):
    try:
        return compute_posterior(d, prior, noise)
    except DimensionError as exc:
        raise DataError(str(exc)) from None


def run_estimate(cfg, data_dir):
    d = _load_data(data_dir, cfg)
    p = _posterior(d, cfg.prior, cfg.noise)
    return {
        "T": d.T,
        "persistently_exciting": bool(check_persistency(d)),
        "noninformative_prior": cfg.prior.is_noninformative,
        "posterior_mean": _tolist(p.mean),
        "B_hat": _tolist(p.B_hat),
        "A_hat": _tolist(p.A_hat),
        "psi": _tolist(p.psi),
        "param_cov": _tolist(p.param_cov),
    }


def run_solve(cfg, data_dir, method, lam=None, export_sdp=None, sdp_backend=None):
    """Synthesize a gain from the data on disk; returns a report dict.

    ``export_sdp`` writes the SDP in SDPA format. It is the problem that is
    actually solved, i.e. posed at unit noise scale.
    """
    tag = SOLVE_METHODS[method]
    lam = cfg.lam if lam is None else float(lam)
    if tag == "ce" and lam != 0:
        log.warning("lambda=%g is ignored by the certainty-equivalence method", lam)
    d = _load_data(data_dir, cfg)
    if tag == "cov_param":
        prior = Prior.noninformative(d.n, d.m)
        p = data_covariances(d, cfg.noise)
    else:
        prior = cfg.prior
        p = _posterior(d, prior, cfg.noise)
    report = {"method": method, "lambda": lam, "T": d.T,
              "noninformative_prior": prior.is_noninformative}
    if export_sdp and tag in ("direct_bayes", "cov_param"):
        write_sdpa(build_direct_sdp(p, cfg.weights, lam, sigma_w_sq=1.0), export_sdp)
        report["sdp_export"] = str(export_sdp)
    elif export_sdp:
        log.warning("--export-sdp only applies to the direct and cov_param methods")
    try:
        if tag == "ce":
            K = ce_lqr(p, cfg.weights).K
        elif tag == "indirect_bayes":
            K = indirect_bayes_lqr(p, cfg.weights, lam).K
        else:
            gain, sol = direct_bayes_lqr(p, cfg.weights, lam, backend=sdp_backend,
                                         method=tag, return_solution=True)
            K = gain.K
            report["sdp"] = {"backend": sol.backend, "status": sol.status,
                             "objective": sol.objective_value,
                             "residuals": {k: float(v) for k, v in sol.residuals.items()}}
    except _SYNTHESIS_FAILURES as exc:
        raise SynthesisError(f"{method} synthesis failed: {exc}") from exc
    report["K"] = _tolist(K)
    if cfg.system is not None:
        noise = cfg.noise if cfg.noise.sigma_w_sq > 0 else type(cfg.noise)(bench.SIGMA_FLOOR)
        _, cstar = lqr_true(cfg.system, cfg.weights, noise)
        cost = evaluate_cost(cfg.system, K, cfg.weights, noise)
        report["optimal_cost"] = cstar
        report["cost"] = None if cost == UNSTABLE else cost
        report["stable"] = cost != UNSTABLE
        report["gap"] = None if cost == UNSTABLE else (cost - cstar) / cstar
    return report


def run_benchmark(cfg, out_dir, which=("lambda", "T")):
    """Run the configured sweeps; returns ``{name: path}`` of written files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = {}
    stems = {"lambda": "lambda_sweep", "T": "horizon_sweep"}
    for axis in which:
        if axis not in cfg.experiments:
            continue
        exp = cfg.experiments[axis]
        stem = stems[axis]
        log.info("running %s: %d points x %d runs", stem, len(exp.sweep.axis), exp.runs)
        res = bench.sweep(exp, keep_records=False,
                          progress=lambda i, k: log.info("  point %d/%d done", i + 1, k))
        csv_path = out / f"{stem}.csv"
        bench.write_sweep_csv(res, csv_path)
        outputs[f"{stem}_csv"] = str(csv_path)
        for path in write_sweep_charts(res, str(out / stem)):
            outputs[Path(path).stem + "_svg"] = path
        if any(res.invalid):
            outputs[f"{stem}_invalid_trials"] = res.invalid
    if not outputs:
        raise ConfigError(f"config has no sweep among {list(which)}")
    return outputs


def _format_report(report):
    lines = []
    for k, v in report.items():
        if isinstance(v, list):
            arr = np.array(v)
            body = np.array2string(arr, precision=6, suppress_small=False)
            lines.append(f"{k} =\n{body}")
        elif isinstance(v, dict):
            lines.append(f"{k}:")
            lines += [f"  {kk}: {vv}" for kk, vv in v.items()]
        else:
            lines.append(f"{k}: {v}")
    return "\n".join(lines)


def _write_outputs(out_dir, name, report, manifest):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    manifest.outputs[name] = str(path)
    manifest.finished = _now()
    manifest.write(out / "manifest.json")


def cmd_estimate(args):
    cfg = load_config(args.config)
    man = RunManifest("estimate", cfg.raw, {"data": str(args.data)}, started=_now(),
                      environment=_environment())
    report = run_estimate(cfg, args.data)
    if report["noninformative_prior"]:
        print("non-informative prior (OLS)")
    if not report["persistently_exciting"]:
        print("warning: data is not persistently exciting; the prior carries the estimate")
    print(_format_report(report))
    if args.out:
        _write_outputs(args.out, "estimate", report, man)
    return EXIT_OK


def cmd_solve(args):
    cfg = load_config(args.config)
    arguments = {"data": str(args.data), "method": args.method, "lambda": args.lam,
                 "sdp_backend": args.sdp_backend}
    man = RunManifest("solve", cfg.raw, arguments, started=_now(),
                      environment=_environment(args.sdp_backend))
    report = run_solve(cfg, args.data, args.method, args.lam, args.export_sdp, args.sdp_backend)
    if report["noninformative_prior"]:
        print("non-informative prior (OLS)")
    print(_format_report(report))
    if args.out:
        if args.export_sdp:
            man.outputs["sdp"] = str(args.export_sdp)
        _write_outputs(args.out, "solve", report, man)
    return EXIT_OK


def _bench_config(args):
    cfg = load_config(args.config)
    # demo treats --runs 0 as "skip the sweeps"
    runs = None if (args.command == "demo" and args.runs == 0) else args.runs
    return override_experiments(cfg, runs=runs, master_seed=args.seed, threads=args.threads)


def cmd_benchmark(args):
    cfg = _bench_config(args)
    which = {"lambda": ("lambda",), "horizon": ("T",), "both": ("lambda", "T")}[args.sweep]
    seed = next(iter(cfg.experiments.values())).master_seed if cfg.experiments else None
    man = RunManifest("benchmark", cfg.raw, {"sweep": args.sweep}, master_seed=seed,
                      started=_now())
    exp = next(iter(cfg.experiments.values()), None)
    man.environment = _environment(exp.sdp_backend if exp else None)
    man.environment.update(input_std=cfg.input_std, x0_std=cfg.x0_std)
    man.outputs = run_benchmark(cfg, args.out, which)
    man.finished = _now()
    man.write(Path(args.out) / "manifest.json")
    for name, path in man.outputs.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_demo(args):
    """One sampled scenario walked through every method, then small sweeps."""
    cfg = _bench_config(args)
    if "lambda" not in cfg.experiments:
        raise ConfigError("demo needs a [benchmark.lambda_sweep] table")
    exp = cfg.experiments["lambda"]
    out = Path(args.out)
    rng = np.random.default_rng(exp.master_seed)
    sys_, _ = bench.sample_true_system(exp, rng)
    d = simulate_openloop(sys_, cfg.noise, cfg.T, rng, input_std=cfg.input_std, x0_std=cfg.x0_std)
    write_dataset_csv(d, out / "data")
    print("true system")
    print(f"A =\n{np.array2string(sys_.A, precision=4)}\nB =\n{np.array2string(sys_.B, precision=4)}")
    print(f"data: T={d.T}, persistently exciting: {check_persistency(d)}")
    scored = parse_config({**cfg.raw, "system": {"A": _tolist(sys_.A), "B": _tolist(sys_.B)}})
    print(f"\n{'method':<10} {'stable':<7} {'gap':>12}   K")
    results = {}
    for method in SOLVE_METHODS:
        try:
            r = run_solve(scored, out / "data", method, lam=None if method != "ce" else 0.0)
        except SynthesisError as exc:
            print(f"{method:<10} failed: {exc}")
            continue
        results[method] = r
        gap = "unstable" if r["gap"] is None else f"{r['gap']:.4e}"
        print(f"{method:<10} {str(r['stable']):<7} {gap:>12}   {np.round(np.array(r['K']), 4).tolist()}")
    man = RunManifest("demo", scored.raw, {"runs": args.runs}, master_seed=exp.master_seed,
                      started=_now(), environment=_environment(exp.sdp_backend))
    (out / "demo.json").write_text(json.dumps(results, indent=2, sort_keys=True) + "\n")
    man.outputs = {"demo": str(out / "demo.json"), "data": str(out / "data")}
    if args.runs != 0:
        man.outputs.update(run_benchmark(cfg, out))
    man.finished = _now()
    man.write(out / "manifest.json")
    print(f"\noutputs in {out}")
    return EXIT_OK


def replay_manifest(path, out_dir=None):
    """Re-run the command recorded in a manifest.

    For ``estimate`` and ``solve`` the report dict is returned; for
    ``benchmark`` the sweeps are rerun into ``out_dir`` and the output paths
    returned.
    """
    man = RunManifest.read(path)
    cfg = parse_config(man.config)
    a = man.arguments
    if man.command == "estimate":
        return run_estimate(cfg, a["data"])
    if man.command == "solve":
        return run_solve(cfg, a["data"], a["method"], a.get("lambda"),
                         sdp_backend=a.get("sdp_backend"))
    if man.command == "benchmark":
        if out_dir is None:
            raise ConfigError("replaying a benchmark needs an output directory")
        which = {"lambda": ("lambda",), "horizon": ("T",), "both": ("lambda", "T")}[a["sweep"]]
        return run_benchmark(cfg, out_dir, which)
    raise ConfigError(f"cannot replay command {man.command!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bayeslqr",
        description="Bayesian data-driven LQR: posterior estimation, gain synthesis "
                    "and Monte Carlo benchmarks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--config", default="table1",
                       help="TOML config path, or a built-in name (table1, smoke)")
        if data:
            p.add_argument("--data", required=True,
                           help="directory holding X0.csv, U0.csv and X1.csv")
        return p

    p = common(sub.add_parser("estimate", help="posterior of [B A] from a data set"), data=True)
    p.add_argument("--out", help="write estimate.json and manifest.json here")
    p.set_defaults(func=cmd_estimate)

    p = common(sub.add_parser("solve", help="synthesize a state-feedback gain"), data=True)
    p.add_argument("--method", choices=sorted(SOLVE_METHODS), default="direct")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="regularization weight (overrides the config)")
    p.add_argument("--export-sdp", help="write the direct SDP in SDPA sparse format")
    p.add_argument("--sdp-backend", choices=sorted(BACKENDS), default=None)
    p.add_argument("--out", help="write solve.json and manifest.json here")
    p.set_defaults(func=cmd_solve)

    for name, func, helptext, out_default in (
        ("benchmark", cmd_benchmark, "run the configured Monte Carlo sweeps", "results"),
        ("demo", cmd_demo, "walk through one sampled scenario and run small sweeps", "demo_out"),
    ):
        p = common(sub.add_parser(name, help=helptext))
        p.add_argument("--out", default=out_default)
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--runs", type=int, default=50 if name == "demo" else None,
                       help="runs per sweep point (overrides config)")
        p.add_argument("--threads", type=int, default=None, help="worker processes")
        if name == "benchmark":
            p.add_argument("--sweep", choices=("lambda", "horizon", "both"), default="both")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    level = os.environ.get("BAYESLQR_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BayesLqrError as exc:
        code = exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code
    except np.linalg.LinAlgError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
