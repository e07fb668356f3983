"""Self-contained primal-dual interior-point method for small LMI problems.

Solves

    min c'x  s.t.  A x = b,  F_j(x) = C_j + sum_i x_i G_ji >= 0  (all j)

with an infeasible-start path-following scheme: HKM search direction,
Mehrotra predictor-corrector, and separate primal/dual step lengths. The
dual is ``max -b'y - sum_j <C_j, Z_j>`` s.t. ``sum_j G_j*(Z_j) - A'y = c``.
Sized for the handful of variables of the direct LQR SDP; everything is
dense.
"""
import numpy as np
from scipy import linalg as sla

STEP_FRACTION = 0.98
# iterations without improvement of the best merit before giving up
STALL_LIMIT = 6


def _max_step(X, dX):
    """Largest alpha in (0, 1] with X + alpha dX >= 0 (X > 0)."""
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(X.shape[0]), lower=True)
    lam_min = np.linalg.eigvalsh(Li @ dX @ Li.T)[0]
    if lam_min >= 0:
        return 1.0
    return min(1.0, -1.0 / lam_min)


def _sym(X):
    return 0.5 * (X + X.T)


def solve_lmi(c, A, b, consts, coefs, tol=1e-8, max_iter=100, accept_tol=1e-6):
    """Returns ``(x, status, info)``; status is 'optimal', 'infeasible' or
    'numerical_failure'.

    Near mu -> 0 the normal equations lose accuracy and the dual residual
    can drift back up. The best iterate (by the largest of relative primal
    residual, dual residual and gap) is therefore kept; if the run stalls
    or breaks down with that merit below ``accept_tol``, the best iterate
    is returned as optimal and ``info["inaccurate"]`` is set.
    """
    c = np.asarray(c, dtype=float)
    nv = c.size
    A = np.asarray(A, dtype=float).reshape(-1, nv)
    b = np.asarray(b, dtype=float)
    neq = b.size
    nu = sum(C.shape[0] for C in consts)
    scale = max(1.0, np.abs(c).max(), max(np.abs(C).max() for C in consts))

    x = np.zeros(nv)
    y = np.zeros(neq)
    S = [scale * np.eye(C.shape[0]) for C in consts]
    Z = [scale * np.eye(C.shape[0]) for C in consts]
    normc = 1.0 + np.linalg.norm(c)
    normb = 1.0 + np.linalg.norm(b)
    normC = 1.0 + np.sqrt(sum(np.sum(C * C) for C in consts))

    def G(v, j):
        return np.tensordot(v, coefs[j], axes=1)

    def Gadj(Ms):
        return sum(np.einsum("kab,ab->k", coefs[j], Ms[j]) for j in range(len(Ms)))

    info = {"iterations": 0, "inaccurate": False}
    status = "numerical_failure"
    best = (np.inf, x, y)
    since_best = 0
    for it in range(1, max_iter + 1):
        info["iterations"] = it
        rd = c + A.T @ y - Gadj(Z)
        rp = A @ x - b
        rs = [S[j] - consts[j] - G(x, j) for j in range(len(S))]
        gap = sum(np.sum(S[j] * Z[j]) for j in range(len(S)))
        mu = gap / nu
        pobj = c @ x
        dobj = -b @ y - sum(np.sum(consts[j] * Z[j]) for j in range(len(S)))
        info.update(pobj=pobj, dobj=dobj, gap=gap)

        pres = max(np.linalg.norm(rp) / normb,
                   np.sqrt(sum(np.sum(r * r) for r in rs)) / normC)
        dres = np.linalg.norm(rd) / normc
        rgap = gap / (1.0 + abs(pobj))
        merit = max(pres, dres, rgap)
        if merit < best[0]:
            best = (merit, x, y)
            since_best = 0
        else:
            since_best += 1
        if merit <= tol:
            status = "optimal"
            break
        # stalls only count once the run is near optimal; an infeasible
        # problem keeps iterating until the Farkas test fires
        if since_best >= STALL_LIMIT and best[0] <= accept_tol:
            break
        # Farkas certificate of primal infeasibility: dual ray with positive value
        if dobj > 0 and np.linalg.norm(c - rd) <= tol * dobj and pres > tol:
            status = "infeasible"
            break

        try:
            Sinv = [np.linalg.inv(Sj) for Sj in S]
            H = np.zeros((nv, nv))
            for j in range(len(S)):
                GS = coefs[j] @ Sinv[j]
                GZ = coefs[j] @ Z[j]
                H += np.einsum("iab,kba->ik", GS, GZ)
            H = _sym(H)
            KKT = np.block([[H, A.T], [A, np.zeros((neq, neq))]])
            lu = sla.lu_factor(KKT)
        except (np.linalg.LinAlgError, ValueError):
            break

        def direction(Rc):
            g = Gadj([Sinv[j] @ (Rc[j] + rs[j] @ Z[j]) for j in range(len(S))])
            sol = sla.lu_solve(lu, np.concatenate([-rd + g, -rp]))
            dx, dy = sol[:nv], sol[nv:]
            dS = [G(dx, j) - rs[j] for j in range(len(S))]
            dZ = [_sym(Sinv[j] @ (Rc[j] - dS[j] @ Z[j])) for j in range(len(S))]
            return dx, dy, dS, dZ

        def steps(dS, dZ):
            ap = min(_max_step(S[j], dS[j]) for j in range(len(S)))
            ad = min(_max_step(Z[j], dZ[j]) for j in range(len(S)))
            return ap, ad

        # predictor
        Rc = [-S[j] @ Z[j] for j in range(len(S))]
        try:
            dx, dy, dS, dZ = direction(Rc)
            ap, ad = steps(dS, dZ)
        except np.linalg.LinAlgError:
            break
        gap_aff = sum(np.sum((S[j] + ap * dS[j]) * (Z[j] + ad * dZ[j])) for j in range(len(S)))
        sigma = min(1.0, (gap_aff / gap) ** 3) if gap > 0 else 0.0
        # corrector
        Rc = [sigma * mu * np.eye(S[j].shape[0]) - S[j] @ Z[j] - dS[j] @ dZ[j]
              for j in range(len(S))]
        try:
            dx, dy, dS, dZ = direction(Rc)
            ap, ad = steps(dS, dZ)
        except np.linalg.LinAlgError:
            break
        ap = min(1.0, STEP_FRACTION * ap)
        ad = min(1.0, STEP_FRACTION * ad)
        x = x + ap * dx
        S = [_sym(S[j] + ap * dS[j]) for j in range(len(S))]
        y = y + ad * dy
        Z = [_sym(Z[j] + ad * dZ[j]) for j in range(len(S))]
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            break
    if status == "numerical_failure" and best[0] <= accept_tol:
        status = "optimal"
        info["inaccurate"] = True
    if status == "optimal":
        _, x, y = best
    info["merit"] = best[0]
    info["y"] = y
    return x, status, info
