import copy

import numpy as np
import pytest

from bayeslqr.bench import DEFAULT_LAMBDAS, HorizonSweep, LambdaSweep
from bayeslqr.config import load_config, override_experiments, parse_config
from bayeslqr.errors import ConfigError
from conftest import TABLE1

MINIMAL = {
    "weights": {"Q": [[5.0, 0.0], [0.0, 0.1]], "R": [[0.1]]},
    "prior": {"kind": "spring_mass"},
}


def _with(**tables):
    raw = copy.deepcopy(MINIMAL)
    raw.update(tables)
    return raw


def test_table1_builtin():
    cfg = load_config("table1")
    np.testing.assert_array_equal(cfg.weights.Q, np.diag([5.0, 0.1]))
    np.testing.assert_array_equal(cfg.weights.R, [[0.1]])
    assert cfg.sigma_w == 0.25 and cfg.lam == 0.125 and cfg.T == 8
    for k, v in TABLE1.items():
        assert getattr(cfg.spring, k) == v
    assert cfg.spring.sample_time == 1.0
    lam_exp, t_exp = cfg.experiments["lambda"], cfg.experiments["T"]
    assert lam_exp.runs == 1000 and lam_exp.master_seed == t_exp.master_seed
    assert lam_exp.sweep == LambdaSweep(DEFAULT_LAMBDAS, T=8)
    assert t_exp.sweep == HorizonSweep((8, 16, 32, 64, 128), c=1.0)
    assert cfg.system is None


def test_smoke_builtin():
    cfg = load_config("smoke")
    assert cfg.experiments["lambda"].runs == 10
    np.testing.assert_array_equal(cfg.system.A, [[1.0, 1.0], [-0.1, 0.95]])


def test_file_round_trip(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text('[weights]\nQ = [[1.0]]\nR = [[2.0]]\n[prior]\nkind = "noninformative"\n'
                    "[noise]\nsigma_w = 0.0\n")
    cfg = load_config(str(path))
    assert cfg.prior.is_noninformative and cfg.noise.sigma_w_sq == 0.0
    assert cfg.experiments == {}


def test_matrix_prior():
    cfg = parse_config(_with(prior={"kind": "matrix", "mean": [[0.0, 1.0, 1.0], [1.0, -1.0, 1.0]],
                                    "precision": np.eye(3).tolist()}))
    np.testing.assert_array_equal(cfg.prior.precision, np.eye(3))


@pytest.mark.parametrize("raw, match", [
    (_with(extra={"a": 1}), "unknown"),
    (_with(noise={"sigma": 0.1}), "unknown"),
    (_with(prior={"kind": "spring_mass", "alpha": 1.0}), "unknown"),
    (_with(prior={"kind": "wishart"}), "kind"),
    (_with(prior={"kind": "spring_mass", "sigma_alpha": 0.0}), "> 0"),
    (_with(prior={"kind": "matrix", "mean": [[0.0, 1.0]], "precision": [[1.0]]}), "precision"),
    (_with(noise={"sigma_w": -0.1}), "sigma_w"),
    (_with(noise={"sigma_w": "big"}), "number"),
    (_with(system={"A": [[1.0, 0.0, 0.0]], "B": [[1.0]]}), "square"),
    (_with(system={"A": np.eye(3).tolist(), "B": [[1.0], [0.0], [0.0]]}), "system"),
    (_with(regularization={"lambda": -1.0}), "lambda"),
    (_with(data={"T": 2.5}), "integer"),
    (_with(benchmark={"runs": 10}), "sweep"),
    (_with(benchmark={"runs": 0, "lambda_sweep": {}}), "runs"),
    (_with(benchmark={"methods": ["ce", "lqg"], "lambda_sweep": {}}), "methods"),
    (_with(benchmark={"lambda_sweep": {"lambdas": [0.1, "x"]}}), "lambda_sweep"),
    (_with(benchmark={"horizon_sweep": {"Ts": [8], "k": 2}}), "unknown"),
    ({"prior": {"kind": "spring_mass"}}, "weights"),
    ({"weights": MINIMAL["weights"]}, "prior"),
    ({"weights": {"Q": [[1.0, 0.0], [0.0, -1.0]], "R": [[1.0]]}, "prior": {}}, "semidefinite"),
])
def test_rejects(raw, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(raw)


def test_benchmark_needs_spring_prior():
    raw = {"weights": {"Q": [[1.0]], "R": [[1.0]]}, "prior": {"kind": "noninformative"},
           "benchmark": {"lambda_sweep": {}}}
    with pytest.raises(ConfigError, match="spring_mass"):
        parse_config(raw)


def test_spring_prior_dimension():
    with pytest.raises(ConfigError, match="n=2"):
        parse_config({"weights": {"Q": [[1.0]], "R": [[1.0]]}, "prior": {}})


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "missing.toml"))
    bad = tmp_path / "bad.toml"
    bad.write_text("[weights\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_override():
    cfg = load_config("smoke")
    new = override_experiments(cfg, runs=3, master_seed=42, threads=None)
    assert all(e.runs == 3 and e.master_seed == 42 for e in new.experiments.values())
    assert new.raw["benchmark"]["runs"] == 3
    assert cfg.experiments["lambda"].runs == 10
    again = parse_config(new.raw).experiments["T"]
    assert (again.runs, again.master_seed, again.sweep) == (3, 42, new.experiments["T"].sweep)
    with pytest.raises(ConfigError):
        override_experiments(cfg, runs=0)
