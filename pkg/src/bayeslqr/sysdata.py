"""Open-loop data collection and the input-state regressor."""
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bayeslqr import kernels
from bayeslqr.errors import DataError, DimensionError, DomainError
from bayeslqr.linalg import as_matrix

CSV_NAMES = ("X0", "U0", "X1")


@dataclass(frozen=True)
class SystemModel:
    """The pair (A, B) of ``x+ = A x + B u + w``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def theta(self):
        """Stacked parameter matrix ``[B A]`` (input block first)."""
        return np.hstack([self.B, self.A])


@dataclass(frozen=True)
class NoiseSpec:
    """Process noise ``w_k ~ N(0, sigma_w_sq I)``; the variance is known."""

    sigma_w_sq: float

    def __post_init__(self):
        if not self.sigma_w_sq >= 0.0:
            raise DomainError(f"sigma_w_sq must be >= 0, got {self.sigma_w_sq}")

    @classmethod
    def from_std(cls, sigma_w):
        return cls(float(sigma_w) ** 2)


@dataclass(frozen=True)
class DataSet:
    X0: np.ndarray
    U0: np.ndarray
    X1: np.ndarray

    def __post_init__(self):
        X0 = as_matrix(self.X0, "X0")
        U0 = as_matrix(self.U0, "U0")
        X1 = as_matrix(self.X1, "X1")
        T = X0.shape[1]
        if T < 1 or U0.shape[1] != T or X1.shape[1] != T:
            raise DimensionError(
                f"column counts differ: X0 {X0.shape}, U0 {U0.shape}, X1 {X1.shape}"
            )
        if X1.shape[0] != X0.shape[0]:
            raise DimensionError(f"X1 has {X1.shape[0]} rows, X0 has {X0.shape[0]}")
        for name, M in (("X0", X0), ("U0", U0), ("X1", X1)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def T(self):
        return self.X0.shape[1]

    @property
    def n(self):
        return self.X0.shape[0]

    @property
    def m(self):
        return self.U0.shape[0]

    @property
    def D0(self):
        return regressor(self)

    def permuted(self, order):
        """Same samples with columns reordered jointly."""
        order = np.asarray(order)
        return DataSet(self.X0[:, order], self.U0[:, order], self.X1[:, order])


def simulate_openloop(sys, noise, T, rng, input_std=1.0, x0_std=1.0, x0=None):
    """Collect ``T`` samples from the open-loop system driven by white noise.

    ``x_0 ~ N(0, x0_std^2 I)`` unless ``x0`` is given, ``u_k ~ N(0,
    input_std^2 I)`` and ``w_k ~ N(0, sigma_w^2 I)``. Draw order is fixed
    (x0, then U0, then W0) so a given generator state reproduces the data.
    """
    if T < 1:
        raise DomainError(f"T must be >= 1, got {T}")
    if input_std < 0 or x0_std < 0:
        raise DomainError("input_std and x0_std must be >= 0")
    n, m = sys.n, sys.m
    x0_draw = x0_std * rng.standard_normal(n)
    if x0 is not None:
        x0_draw = np.asarray(x0, dtype=float).reshape(n)
    U0 = input_std * rng.standard_normal((m, T))
    W0 = np.sqrt(noise.sigma_w_sq) * rng.standard_normal((n, T))
    X = kernels.simulate(sys.A, sys.B, x0_draw, U0, W0)
    return DataSet(X[:, :-1], U0, X[:, 1:])


def regressor(d):
    """``D0 = [U0; X0]`` with the inputs on top, shape (m+n, T)."""
    return np.vstack([d.U0, d.X0])


def check_persistency(d, rank_tol=1e-10):
    """True iff D0 has full row rank n+m (relative singular value test)."""
    D0 = regressor(d)
    if D0.shape[1] < D0.shape[0]:
        return False
    s = np.linalg.svd(D0, compute_uv=False)
    if s[0] == 0.0:
        return False
    return int(np.sum(s > rank_tol * s[0])) == D0.shape[0]


def write_dataset_csv(d, directory):
    """Write X0.csv, U0.csv, X1.csv (one column per time step)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in CSV_NAMES:
        M = getattr(d, name)
        path = directory / f"{name}.csv"
        lines = [f"name={name},rows={M.shape[0]},cols={M.shape[1]}"]
        lines += [",".join(repr(float(v)) for v in row) for row in M]
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths


def _read_matrix_csv(path):
    if not path.is_file():
        raise DataError(f"missing data file: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path}: empty file")
    try:
        header = dict(field.split("=", 1) for field in lines[0].split(","))
        rows, cols = int(header["rows"]), int(header["cols"])
    except (ValueError, KeyError):
        raise DataError(
            f"{path}: line 1: header must read 'name=<X>,rows=<r>,cols=<c>'"
        ) from None
    body = lines[1:]
    if len(body) != rows:
        raise DataError(f"{path}: header declares {rows} rows, found {len(body)}")
    M = np.empty((rows, cols))
    for i, line in enumerate(body):
        fields = line.split(",")
        if len(fields) != cols:
            raise DataError(
                f"{path}: line {i + 2}: expected {cols} columns, found {len(fields)}"
            )
        for j, field in enumerate(fields):
            try:
                M[i, j] = float(field)
            except ValueError:
                raise DataError(
                    f"{path}: line {i + 2}, column {j + 1}: cannot parse {field!r}"
                ) from None
    return M


def read_dataset_csv(directory):
    directory = Path(directory)
    mats = {name: _read_matrix_csv(directory / f"{name}.csv") for name in CSV_NAMES}
    try:
        return DataSet(**mats)
    except (DimensionError, DomainError) as exc:
        raise DataError(f"{directory}: inconsistent data files: {exc}") from None
