"""Direct Bayesian LQR as a semidefinite program.

Decision variables are Sigma (n x n, symmetric), S ((m+n) x n), L (m x m,
symmetric) and M ((m+n) x (m+n), symmetric). With Psi split row-wise into
Psi1 (first m rows) and Psi2 (last n rows) and Xbar1 from the posterior:

    min  Tr(Q Sigma) + Tr(R L) + lam Tr(M Psi)
    s.t. Psi2 S = Sigma
         [[Sigma - s2 I, Xbar1 S], [S' Xbar1', Sigma]] >= 0
         [[L, Psi1 S], [S' Psi1', Sigma]]               >= 0
         [[M, S], [S', Sigma]]                          >= 0

The optimal gain is ``K = Psi1 S Sigma^-1``. Problem data is stored in a
solver-neutral "LMI form": a linear objective ``c'x``, equalities
``A_eq x = b_eq`` and blocks ``F(x) = const + sum_i x_i coef[i] >= 0``.
Symmetric variables contribute their upper triangle to ``x``.
"""
from dataclasses import dataclass, field

import numpy as np

from bayeslqr.errors import DimensionError, DomainError
from bayeslqr.linalg import solve_discrete_lyapunov, symmetrize


@dataclass(frozen=True)
class PsiSplit:
    psi1: np.ndarray
    psi2: np.ndarray

    @classmethod
    def from_psi(cls, psi, m):
        psi = np.asarray(psi, dtype=float)
        return cls(psi[:m].copy(), psi[m:].copy())

    @property
    def psi(self):
        return np.vstack([self.psi1, self.psi2])


@dataclass(frozen=True)
class VarSpec:
    offset: int
    shape: tuple
    symmetric: bool

    @property
    def size(self):
        r, c = self.shape
        return r * (r + 1) // 2 if self.symmetric else r * c

    def basis(self):
        """Coefficient matrix of every scalar variable, shape (size, r, c)."""
        r, c = self.shape
        if self.symmetric:
            iu, ju = np.triu_indices(r)
            E = np.zeros((iu.size, r, r))
            k = np.arange(iu.size)
            E[k, iu, ju] = 1.0
            E[k, ju, iu] = 1.0
            return E
        return np.eye(r * c).reshape(r * c, r, c)

    def unpack(self, x):
        r, c = self.shape
        v = x[self.offset:self.offset + self.size]
        if self.symmetric:
            M = np.zeros((r, r))
            iu, ju = np.triu_indices(r)
            M[iu, ju] = v
            M[ju, iu] = v
            return M
        return v.reshape(r, c).copy()

    def pack(self, M):
        M = np.asarray(M, dtype=float)
        if M.shape != self.shape:
            raise DimensionError(f"expected shape {self.shape}, got {M.shape}")
        if self.symmetric:
            return symmetrize(M)[np.triu_indices(self.shape[0])]
        return M.reshape(-1)


@dataclass
class LmiBlock:
    name: str
    const: np.ndarray
    coef: np.ndarray

    @property
    def dim(self):
        return self.const.shape[0]

    def evaluate(self, x):
        return self.const + np.tensordot(x, self.coef, axes=1)


@dataclass
class SdpProblem:
    n: int
    m: int
    variables: dict
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    blocks: list = field(default_factory=list)

    @property
    def num_vars(self):
        return self.c.size

    @property
    def equality_count(self):
        return self.b_eq.size

    @property
    def block_sizes(self):
        return tuple(b.dim for b in self.blocks)

    def unpack(self, x):
        return {name: spec.unpack(x) for name, spec in self.variables.items()}

    def pack(self, **mats):
        """Inverse of ``unpack``; matrices for absent variables are ignored."""
        x = np.zeros(self.num_vars)
        for name, spec in self.variables.items():
            x[spec.offset:spec.offset + spec.size] = spec.pack(mats[name])
        return x

    def objective(self, x):
        return float(self.c @ x)

    def add_equality(self, rows, rhs):
        """Append equality rows ``rows @ x = rhs``."""
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        if rows.shape != (rhs.size, self.num_vars):
            raise DimensionError(f"equality rows have shape {rows.shape}")
        self.A_eq = np.vstack([self.A_eq, rows])
        self.b_eq = np.concatenate([self.b_eq, rhs])

    def variable_rows(self, name, target):
        """Rows and rhs that pin variable ``name`` to the matrix ``target``."""
        spec = self.variables[name]
        rows = np.zeros((spec.size, self.num_vars))
        rows[:, spec.offset:spec.offset + spec.size] = np.eye(spec.size)
        return rows, spec.pack(target)

    def residuals(self, x):
        """Equality residual (2-norm) and smallest eigenvalue over LMI blocks."""
        eq = float(np.linalg.norm(self.A_eq @ x - self.b_eq)) if self.b_eq.size else 0.0
        min_eig = min(float(np.linalg.eigvalsh(b.evaluate(x))[0]) for b in self.blocks)
        return {"equality": eq, "psd_min_eig": min_eig}


def build_direct_sdp(p, w, lam, sigma_w_sq=None):
    """Assemble the direct Bayesian LQR SDP from a posterior.

    ``sigma_w_sq`` defaults to the posterior's noise variance. It only enters
    the first LMI block, and the optimal gain does not depend on it.
    """
    lam = float(lam)
    if lam < 0:
        raise DomainError(f"regularization weight must be >= 0, got {lam}")
    s2 = p.sigma_w_sq if sigma_w_sq is None else float(sigma_w_sq)
    if not s2 > 0:
        raise DomainError("the direct SDP needs sigma_w^2 > 0 (first block degenerates)")
    n, m = p.n, p.m
    k = n + m
    if w.Q.shape != (n, n) or w.R.shape != (m, m):
        raise DimensionError(f"weights Q {w.Q.shape}, R {w.R.shape} do not match n={n}, m={m}")
    split = PsiSplit.from_psi(p.psi, m)
    Xb = p.xbar1

    # at lam = 0 the regularizer block only bounds M from below, and a free
    # variable with no cost drifts off and ruins the conditioning: drop both
    layout = [("Sigma", (n, n), True), ("S", (k, n), False), ("L", (m, m), True)]
    if lam > 0:
        layout.append(("M", (k, k), True))
    specs = {}
    off = 0
    for name, shape, sym in layout:
        specs[name] = VarSpec(off, shape, sym)
        off += specs[name].size
    nv = off
    E = {name: spec.basis() for name, spec in specs.items()}
    sl = {name: slice(spec.offset, spec.offset + spec.size) for name, spec in specs.items()}

    c = np.zeros(nv)
    c[sl["Sigma"]] = np.einsum("ij,kji->k", w.Q, E["Sigma"])
    c[sl["L"]] = np.einsum("ij,kji->k", w.R, E["L"])
    if lam > 0:
        c[sl["M"]] = lam * np.einsum("ij,kji->k", p.psi, E["M"])

    # Psi2 S - Sigma = 0, all n*n entries (Psi2 S is not structurally symmetric)
    A_eq = np.zeros((n * n, nv))
    A_eq[:, sl["S"]] = np.einsum("ij,kjl->kil", split.psi2, E["S"]).reshape(-1, n * n).T
    A_eq[:, sl["Sigma"]] = -E["Sigma"].reshape(-1, n * n).T
    b_eq = np.zeros(n * n)

    def block(name, top_dim, top_var, top_const, offdiag):
        """[[top_var + top_const, offdiag @ S], [., Sigma]]."""
        d = top_dim + n
        coef = np.zeros((nv, d, d))
        coef[sl["Sigma"], top_dim:, top_dim:] += E["Sigma"]
        coef[sl[top_var], :top_dim, :top_dim] += E[top_var]
        Y = np.einsum("ij,kjl->kil", offdiag, E["S"])
        coef[sl["S"], :top_dim, top_dim:] += Y
        coef[sl["S"], top_dim:, :top_dim] += np.swapaxes(Y, 1, 2)
        const = np.zeros((d, d))
        const[:top_dim, :top_dim] = top_const
        return LmiBlock(name, const, coef)

    blocks = [
        block("dynamics", n, "Sigma", -s2 * np.eye(n), Xb),
        block("input", m, "L", 0.0, split.psi1),
    ]
    if lam > 0:
        blocks.append(block("regularizer", k, "M", 0.0, np.eye(k)))
    return SdpProblem(n, m, specs, c, A_eq, b_eq, blocks)


def certificate_from_gain(p, K, sigma_w_sq=None):
    """Feasible point of the SDP built from a gain that stabilizes the
    posterior mean system (constraints 1-3 hold with equality Schur
    complements).
    """
    s2 = p.sigma_w_sq if sigma_w_sq is None else float(sigma_w_sq)
    n, m = p.n, p.m
    K = np.asarray(K, dtype=float)
    V = p.psi_inv @ np.vstack([K, np.eye(n)])
    Acl = p.xbar1 @ V
    Sigma = solve_discrete_lyapunov(Acl, s2 * np.eye(n))
    S = V @ Sigma
    Sinv_St = np.linalg.solve(Sigma, S.T)
    psi1 = p.psi[:m]
    return {
        "Sigma": Sigma,
        "S": S,
        "L": symmetrize(psi1 @ S @ Sinv_St @ psi1.T),
        "M": symmetrize(S @ Sinv_St),
    }


def write_sdpa(prob, path):
    """Export in SDPA sparse format (``.dat-s``).

    Equalities become a diagonal (LP) block holding ``a'x - b >= 0`` and
    ``-a'x + b >= 0``. SDPA's form is ``min c'x`` s.t. ``sum_i x_i F_i - F_0
    >= 0``, so ``F_0 = -const`` and ``F_i = coef[i]``.
    """
    lines = []
    nv = prob.num_vars
    neq = prob.equality_count
    sizes = list(prob.block_sizes) + ([-2 * neq] if neq else [])
    lines.append(f"{nv} = mDIM")
    lines.append(f"{len(sizes)} = nBLOCK")
    lines.append(" ".join(str(s) for s in sizes) + " = bLOCKsTRUCT")
    lines.append(" ".join(repr(float(v)) for v in prob.c))

    def entries(mat_no, blk_no, M):
        iu, ju = np.nonzero(np.triu(M))
        for i, j in zip(iu, ju):
            lines.append(f"{mat_no} {blk_no} {i + 1} {j + 1} {float(M[i, j])!r}")

    for b_no, blk in enumerate(prob.blocks, start=1):
        entries(0, b_no, -blk.const)
        for i in range(nv):
            entries(i + 1, b_no, blk.coef[i])
    if neq:
        lp = len(prob.blocks) + 1
        for r in range(neq):
            if prob.b_eq[r] != 0.0:
                lines.append(f"0 {lp} {r + 1} {r + 1} {float(prob.b_eq[r])!r}")
                lines.append(f"0 {lp} {neq + r + 1} {neq + r + 1} {float(-prob.b_eq[r])!r}")
        for i in range(nv):
            for r in np.nonzero(prob.A_eq[:, i])[0]:
                a = prob.A_eq[r, i]
                lines.append(f"{i + 1} {lp} {r + 1} {r + 1} {float(a)!r}")
                lines.append(f"{i + 1} {lp} {neq + r + 1} {neq + r + 1} {float(-a)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
