"""Solver backends for :class:`~bayeslqr.sdp.problem.SdpProblem`.

Every backend takes ``(prob, tol)`` and returns ``(x, status, info)`` with
status in {'optimal', 'infeasible', 'numerical_failure'}; ``x`` is None
unless a primal point is available.
"""
import numpy as np
import scipy.sparse as sp

from bayeslqr.sdp import ipm

SQRT2 = np.sqrt(2.0)


def _svec_rows(M):
    """Scaled upper-triangle vectorization, column by column, for a stack of
    symmetric matrices of shape (k, d, d); returns shape (d(d+1)/2, k).
    """
    d = M.shape[-1]
    # column-major upper triangle: for each column j, rows i <= j
    ii, jj = np.triu_indices(d)
    order = np.lexsort((ii, jj))
    ii, jj = ii[order], jj[order]
    w = np.where(ii == jj, 1.0, SQRT2)
    return (M[..., ii, jj] * w).T


def solve_clarabel(prob, tol):
    import clarabel

    nv = prob.num_vars
    rows = []
    rhs = []
    cones = []
    if prob.equality_count:
        rows.append(prob.A_eq)
        rhs.append(prob.b_eq)
        cones.append(clarabel.ZeroConeT(prob.equality_count))
    for blk in prob.blocks:
        # s = svec(F(x)) = svec(const) + svec(coef) x  ->  -svec(coef) x + s = svec(const)
        rows.append(-_svec_rows(blk.coef))
        rhs.append(_svec_rows(blk.const[None])[:, 0])
        cones.append(clarabel.PSDTriangleConeT(blk.dim))
    A = sp.csc_matrix(np.vstack(rows))
    b = np.concatenate(rhs)
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = tol
    settings.tol_gap_rel = tol
    settings.tol_feas = tol
    settings.max_iter = 200
    solver = clarabel.DefaultSolver(sp.csc_matrix((nv, nv)), prob.c, A, b, cones, settings)
    sol = solver.solve()
    name = str(sol.status)
    info = {"iterations": int(sol.iterations), "raw_status": name}
    if name in ("Solved", "AlmostSolved"):
        # AlmostSolved only met clarabel's reduced tolerances
        info["inaccurate"] = name == "AlmostSolved"
        return np.array(sol.x), "optimal", info
    if name in ("PrimalInfeasible", "AlmostPrimalInfeasible"):
        return None, "infeasible", info
    return None, "numerical_failure", info


def solve_cvxopt(prob, tol):
    from cvxopt import matrix, solvers

    nv = prob.num_vars
    Gs = [matrix(-blk.coef.reshape(nv, -1).T.copy()) for blk in prob.blocks]
    hs = [matrix(blk.const.copy()) for blk in prob.blocks]
    kwargs = {}
    if prob.equality_count:
        kwargs = {"A": matrix(prob.A_eq), "b": matrix(prob.b_eq)}
    opts = {"show_progress": False, "abstol": tol, "reltol": tol, "feastol": tol,
            "maxiters": 200}
    try:
        sol = solvers.sdp(matrix(prob.c), Gs=Gs, hs=hs, options=opts, **kwargs)
    except (ArithmeticError, ValueError) as exc:
        # cvxopt can break down near the optimum when asked for a very tight gap
        return None, "numerical_failure", {"raw_status": f"{type(exc).__name__}: {exc}"}
    info = {"iterations": int(sol.get("iterations", 0)), "raw_status": sol["status"]}
    if sol["status"] == "optimal":
        return np.array(sol["x"]).ravel(), "optimal", info
    if sol["status"] == "primal infeasible":
        return None, "infeasible", info
    return None, "numerical_failure", info


def solve_ipm(prob, tol):
    x, status, info = ipm.solve_lmi(
        prob.c, prob.A_eq, prob.b_eq,
        [blk.const for blk in prob.blocks], [blk.coef for blk in prob.blocks],
        tol=tol,
    )
    info.pop("y", None)
    return (x if status == "optimal" else None), status, info


BACKENDS = {
    "clarabel": solve_clarabel,
    "cvxopt": solve_cvxopt,
    "ipm": solve_ipm,
}


def available_backends():
    out = ["ipm"]
    for name, mod in (("clarabel", "clarabel"), ("cvxopt", "cvxopt")):
        try:
            __import__(mod)
        except ImportError:
            continue
        out.append(name)
    return out


def default_backend():
    avail = available_backends()
    return "clarabel" if "clarabel" in avail else "ipm"
