"""Dense primal-dual interior-point solver for block-diagonal SDPs.

Problem form (maximization):

    maximize    sum_b <C_b, X_b> + c_f' x_f
    subject to  sum_b <A_b^(i), X_b> + a_f^(i)' x_f = b_i     (i = 1..m)
                X_b  positive semidefinite,  x_f free.

Row coefficients are stored upper-triangular with the convention that an
off-diagonal entry a at (i, j) contributes 2*a*X[i,j] to the row value
(the underlying constraint matrix is symmetric with both (i,j) and (j,i)
equal to a).

Algorithm: infeasible-start path following with Nesterov-Todd scaling and
a Mehrotra predictor-corrector step.  The Newton system is reduced to a
dense Schur complement in the dual multipliers, factored by Cholesky;
free variables are carried through an augmented quasi-definite system.
Dependent equality rows are dropped in a presolve pass by rank-revealing
QR.  Infeasibility is declared heuristically from normalized certificate
residuals holding for a fixed number of consecutive iterations.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

_SQRT2 = math.sqrt(2.0)


class SdpStatus(Enum):
    OPTIMAL = "optimal"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"  # primal objective unbounded above
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class SdpSettings:
    tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    # Consecutive iterations a certificate residual test must hold.
    infeas_consecutive: int = 10
    infeas_tol: float = 1e-8
    # Primal objective beyond which (with small primal residual) the
    # problem is declared unbounded.
    objective_blowup: float = 1e10
    qr_rank_tol: float = 1e-10
    verbose: bool = False


class EqualityRow:
    """One linear equality over (PSD blocks, free variables)."""

    __slots__ = ("block_entries", "free_entries", "rhs")

    def __init__(self, rhs: float = 0.0):
        # (block, i, j) with i <= j  ->  coefficient
        self.block_entries: dict[tuple[int, int, int], float] = {}
        self.free_entries: dict[int, float] = {}
        self.rhs = float(rhs)

    def add_block(self, block: int, i: int, j: int, coeff: float) -> None:
        if i > j:
            i, j = j, i
        key = (block, i, j)
        c = self.block_entries.get(key, 0.0) + float(coeff)
        if c == 0.0:
            self.block_entries.pop(key, None)
        else:
            self.block_entries[key] = c

    def add_free(self, index: int, coeff: float) -> None:
        c = self.free_entries.get(index, 0.0) + float(coeff)
        if c == 0.0:
            self.free_entries.pop(index, None)
        else:
            self.free_entries[index] = c


class SdpProblem:
    """Standard-form block SDP with linear equalities (see module doc)."""

    def __init__(self, block_dims: list[int], nfree: int = 0):
        if any(d < 1 for d in block_dims):
            raise ValueError("block dimensions must be >= 1")
        self.block_dims = list(int(d) for d in block_dims)
        self.nfree = int(nfree)
        self.obj_blocks = [np.zeros((d, d)) for d in self.block_dims]
        self.obj_free = np.zeros(self.nfree)
        self.rows: list[EqualityRow] = []

    def set_objective_block(self, block: int, matrix: np.ndarray) -> None:
        m = np.asarray(matrix, dtype=float)
        d = self.block_dims[block]
        if m.shape != (d, d):
            raise ValueError(f"objective block {block} must be {d}x{d}")
        self.obj_blocks[block] = 0.5 * (m + m.T)

    def set_objective_free(self, coeffs: np.ndarray) -> None:
        c = np.asarray(coeffs, dtype=float).reshape(-1)
        if c.shape[0] != self.nfree:
            raise ValueError("free objective length mismatch")
        self.obj_free = c

    def add_row(self, row: EqualityRow) -> None:
        for (b, i, j) in row.block_entries:
            d = self.block_dims[b]
            if not (0 <= i <= j < d):
                raise ValueError(f"row entry ({b},{i},{j}) outside block of dim {d}")
        for k in row.free_entries:
            if not 0 <= k < self.nfree:
                raise ValueError(f"free index {k} out of range")
        self.rows.append(row)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def row_value(self, blocks: list[np.ndarray], free: np.ndarray, row: EqualityRow) -> float:
        total = 0.0
        for (b, i, j), a in row.block_entries.items():
            if i == j:
                total += a * blocks[b][i, i]
            else:
                total += 2.0 * a * blocks[b][i, j]
        for k, a in row.free_entries.items():
            total += a * free[k]
        return total

    def objective_value(self, blocks: list[np.ndarray], free: np.ndarray) -> float:
        total = float(self.obj_free @ free) if self.nfree else 0.0
        for C, X in zip(self.obj_blocks, blocks):
            total += float(np.sum(C * X))
        return total

    def dump(self, path: str) -> None:
        """Write the problem in a sparse text format, one equality row per
        line: ``row b <blk> <i> <j> <coeff> ... f <idx> <coeff> ... rhs <v>``.
        Objective entries use the same entry syntax on ``obj`` lines."""
        with open(path, "w") as fh:
            fh.write("sdp-dump 1\n")
            fh.write("blocks " + " ".join(str(d) for d in self.block_dims) + "\n")
            fh.write(f"free {self.nfree}\n")
            for b, C in enumerate(self.obj_blocks):
                for i in range(C.shape[0]):
                    for j in range(i, C.shape[1]):
                        if C[i, j] != 0.0:
                            fh.write(f"obj b {b} {i} {j} {C[i, j]:.17g}\n")
            for k in range(self.nfree):
                if self.obj_free[k] != 0.0:
                    fh.write(f"obj f {k} {self.obj_free[k]:.17g}\n")
            for row in self.rows:
                parts = ["row"]
                for (b, i, j), a in sorted(row.block_entries.items()):
                    parts += ["b", str(b), str(i), str(j), f"{a:.17g}"]
                for k, a in sorted(row.free_entries.items()):
                    parts += ["f", str(k), f"{a:.17g}"]
                parts += ["rhs", f"{row.rhs:.17g}"]
                fh.write(" ".join(parts) + "\n")


@dataclass
class SdpSolution:
    status: SdpStatus
    blocks: list[np.ndarray] = field(default_factory=list)
    free: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual_slacks: list[np.ndarray] = field(default_factory=list)
    objective: float = math.nan  # value of the maximized objective
    dual_objective: float = math.nan
    iterations: int = 0
    residuals: dict = field(default_factory=dict)
    merit_history: list[float] = field(default_factory=list)
    # Certificate of infeasibility when status warrants: for
    # PRIMAL_INFEASIBLE a dual ray y; for DUAL_INFEASIBLE a primal ray.
    certificate: dict = field(default_factory=dict)
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == SdpStatus.OPTIMAL


# -- svec helpers -----------------------------------------------------


class _BlockIndex:
    """Upper-triangle (svec) indexing for one block."""

    def __init__(self, n: int):
        self.n = n
        iu, ju = np.triu_indices(n)
        self.iu = iu
        self.ju = ju
        self.nsvec = iu.shape[0]
        self.scale = np.where(iu == ju, 1.0, _SQRT2)

    def svec(self, X: np.ndarray) -> np.ndarray:
        return X[self.iu, self.ju] * self.scale

    def unsvec(self, v: np.ndarray) -> np.ndarray:
        X = np.zeros((self.n, self.n))
        vals = v / self.scale
        X[self.iu, self.ju] = vals
        X[self.ju, self.iu] = vals
        return X

    def svec_batch(self, T: np.ndarray) -> np.ndarray:
        return T[:, self.iu, self.ju] * self.scale


def _min_eig_ratio(L: np.ndarray, D: np.ndarray) -> float:
    """Smallest eigenvalue of L^-1 D L^-T for Cholesky factor L."""
    Y = scipy.linalg.solve_triangular(L, D, lower=True)
    Y = scipy.linalg.solve_triangular(L, Y.T, lower=True)
    Y = 0.5 * (Y + Y.T)
    return float(np.linalg.eigvalsh(Y)[0])


def _step_to_boundary(L: np.ndarray, D: np.ndarray) -> float:
    d = _min_eig_ratio(L, D)
    if d >= 0.0:
        return np.inf
    return -1.0 / d


def _chol_with_jitter(M: np.ndarray, max_tries: int = 4):
    jitter = 0.0
    scale = max(1.0, float(np.trace(M)) / max(1, M.shape[0]))
    for attempt in range(max_tries):
        try:
            return np.linalg.cholesky(M + jitter * np.eye(M.shape[0])), jitter
        except np.linalg.LinAlgError:
            jitter = scale * (1e-14 if attempt == 0 else jitter / scale * 100.0)
    return None, jitter


class _Workspace:
    """Vectorized problem data for one solve (owns no global state)."""

    def __init__(self, prob: SdpProblem, settings: SdpSettings):
        self.prob = prob
        self.settings = settings
        self.idx = [_BlockIndex(d) for d in prob.block_dims]
        self.nblocks = len(prob.block_dims)

        m = prob.num_rows
        self.m_orig = m
        # Dense per-block row matrices (m x nsvec_b) and free part.
        self.Ab = [np.zeros((m, ix.nsvec)) for ix in self.idx]
        self.Af = np.zeros((m, prob.nfree))
        self.b = np.zeros(m)
        for r, row in enumerate(prob.rows):
            self.b[r] = row.rhs
            for (bk, i, j), a in row.block_entries.items():
                ix = self.idx[bk]
                pos = self._svec_pos(ix, i, j)
                # Symmetric matrix entry a at (i,j): svec value a (diag)
                # or sqrt(2)*a (off-diagonal).
                self.Ab[bk][r, pos] += a if i == j else _SQRT2 * a
            for k, a in row.free_entries.items():
                self.Af[r, k] += a

        # Min-form objective (solver minimizes).
        self.c_blk = [-ix.svec(C) for ix, C in zip(self.idx, prob.obj_blocks)]
        self.c_free = -prob.obj_free.copy()

    @staticmethod
    def _svec_pos(ix: _BlockIndex, i: int, j: int) -> int:
        n = ix.n
        return i * n - (i * (i - 1)) // 2 + (j - i)

    def full_matrix(self) -> np.ndarray:
        return np.hstack(self.Ab + [self.Af]) if (self.Ab or self.prob.nfree) else np.zeros((self.m_orig, 0))


def _presolve(ws: _Workspace):
    """Drop dependent rows (rank-revealing QR) and pin free variables
    that appear in no row.  Returns (kept_rows, pinned_mask, error)."""
    A = ws.full_matrix()
    m = A.shape[0]
    settings = ws.settings

    pinned = np.zeros(ws.prob.nfree, dtype=bool)
    if ws.prob.nfree:
        col_norm = np.abs(ws.Af).max(axis=0) if m else np.zeros(ws.prob.nfree)
        pinned = col_norm == 0.0
        if np.any(pinned & (ws.c_free != 0.0)):
            return None, pinned, "unconstrained free variable with nonzero objective"

    if m == 0:
        return np.array([], dtype=int), pinned, None

    scale = np.linalg.norm(A, ord=np.inf) if A.size else 1.0
    scale = max(scale, 1.0)
    _, R, piv = scipy.linalg.qr(A.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    thresh = settings.qr_rank_tol * max(scale, diag[0] if diag.size else 1.0)
    rank = int(np.sum(diag > thresh))
    kept = np.sort(piv[:rank])
    dropped = np.sort(piv[rank:])

    if dropped.size:
        # Dependent rows must be consistent with the kept ones.
        coeffs, *_ = np.linalg.lstsq(A[kept].T, A[dropped].T, rcond=None)
        b_pred = coeffs.T @ ws.b[kept]
        mismatch = np.abs(b_pred - ws.b[dropped])
        tol = 1e-8 * (1.0 + np.abs(ws.b).max())
        if np.any(mismatch > tol):
            return None, pinned, "inconsistent dependent equality rows"
        if settings.verbose:
            print(f"[sdp] presolve dropped {dropped.size} dependent rows", file=sys.stderr)
    return kept, pinned, None


def solve(prob: SdpProblem, settings: SdpSettings | None = None) -> SdpSolution:
    """Solve the SDP; see module docstring for the algorithm outline."""
    settings = settings or SdpSettings()
    if os.environ.get("POLYHEUR_SDP_VERBOSE"):
        settings = SdpSettings(**{**settings.__dict__, "verbose": True})
    ws = _Workspace(prob, settings)

    kept, pinned, err = _presolve(ws)
    if err == "unconstrained free variable with nonzero objective":
        return SdpSolution(
            status=SdpStatus.DUAL_INFEASIBLE,
            message=err,
            certificate={"free_ray": (ws.c_free * pinned * -1.0)},
        )
    if err is not None:
        return SdpSolution(status=SdpStatus.PRIMAL_INFEASIBLE, message=err)

    active_free = np.where(~pinned)[0]
    nfree = active_free.size
    Ab = [M[kept] for M in ws.Ab]
    Af = ws.Af[np.ix_(kept, active_free)]
    b = ws.b[kept]
    c_blk = ws.c_blk
    c_free = ws.c_free[active_free]
    m = kept.size
    dims = prob.block_dims
    idx = ws.idx
    nu = sum(dims)

    # Batched unsvec of all row matrices, done once per solve.
    U = []
    for bk, ix in enumerate(idx):
        V = Ab[bk] / ix.scale
        T = np.zeros((m, ix.n, ix.n))
        T[:, ix.iu, ix.ju] = V
        T[:, ix.ju, ix.iu] = V
        U.append(T)

    norm_b = np.linalg.norm(b)
    norm_c = math.sqrt(sum(float(v @ v) for v in c_blk) + float(c_free @ c_free))
    rho = 1.0 + (np.abs(b).max() if m else 0.0) + max(
        (max(np.abs(v).max() for v in c_blk if v.size) if any(v.size for v in c_blk) else 0.0),
        (np.abs(c_free).max() if nfree else 0.0),
    )

    X = [rho * np.eye(d) for d in dims]
    S = [rho * np.eye(d) for d in dims]
    y = np.zeros(m)
    xf = np.zeros(nfree)

    Cm = [ix.unsvec(v) for ix, v in zip(idx, c_blk)]

    def A_apply(Xb, xfv):
        out = np.zeros(m)
        for bk, ix in enumerate(idx):
            out += Ab[bk] @ ix.svec(Xb[bk])
        if nfree:
            out += Af @ xfv
        return out

    def AT_apply(yv):
        mats = [ix.unsvec(Ab[bk].T @ yv) for bk, ix in enumerate(idx)]
        fr = Af.T @ yv if nfree else np.zeros(0)
        return mats, fr

    def finish(status, message="", cert=None):
        Xout = [Xb.copy() for Xb in X]
        free_full = np.zeros(prob.nfree)
        if nfree:
            free_full[active_free] = xf
        y_full = np.zeros(ws.m_orig)
        y_full[kept] = y
        pobj = prob.objective_value(Xout, free_full)
        sol = SdpSolution(
            status=status,
            blocks=Xout,
            free=free_full,
            y=y_full,
            dual_slacks=[Sb.copy() for Sb in S],
            objective=pobj,
            dual_objective=-float(b @ y),
            iterations=it,
            merit_history=merits,
            certificate=cert or {},
            message=message,
        )
        sol.residuals = residuals(prob, sol)
        return sol

    merits: list[float] = []
    pinf_streak = 0
    dinf_streak = 0
    it = 0

    for it in range(1, settings.max_iter + 1):
        rp = b - A_apply(X, xf)
        ATy_blk, ATy_free = AT_apply(y)
        Rd = [Cm[bk] - ATy_blk[bk] - S[bk] for bk in range(len(dims))]
        rd_free = (c_free - ATy_free) if nfree else np.zeros(0)

        gap_inner = sum(float(np.sum(X[bk] * S[bk])) for bk in range(len(dims)))
        mu = gap_inner / nu

        pobj_min = sum(float(np.sum(Cm[bk] * X[bk])) for bk in range(len(dims)))
        if nfree:
            pobj_min += float(c_free @ xf)
        dobj_min = float(b @ y)
        relp = np.linalg.norm(rp) / (1.0 + norm_b)
        reld = math.sqrt(
            sum(float(np.sum(R * R)) for R in Rd) + float(rd_free @ rd_free)
        ) / (1.0 + norm_c)
        relgap = abs(pobj_min - dobj_min) / (1.0 + abs(pobj_min) + abs(dobj_min))

        merits.append(mu + np.linalg.norm(rp) + math.sqrt(sum(float(np.sum(R * R)) for R in Rd) + float(rd_free @ rd_free)))

        if settings.verbose:
            print(
                f"[sdp] it={it:3d} mu={mu:9.2e} relp={relp:9.2e} "
                f"reld={reld:9.2e} relgap={relgap:9.2e} pobj={-pobj_min:+.6e}",
                file=sys.stderr,
            )

        if relp <= settings.tol and reld <= settings.tol and relgap <= settings.tol:
            return finish(SdpStatus.OPTIMAL)

        # Heuristic infeasibility certificates (normalized iterate rays).
        t = -dobj_min  # > 0 when y is a candidate primal-infeasibility ray
        if t > 1e-10:
            resid = math.sqrt(
                sum(float(np.sum((ATy_blk[bk] + S[bk]) ** 2)) for bk in range(len(dims)))
                + (float(ATy_free @ ATy_free) if nfree else 0.0)
            ) / t
            ynorm = np.linalg.norm(y) / t
            if resid <= settings.infeas_tol * max(1.0, ynorm):
                pinf_streak += 1
            else:
                pinf_streak = 0
        else:
            pinf_streak = 0
        if pinf_streak >= settings.infeas_consecutive:
            return finish(
                SdpStatus.PRIMAL_INFEASIBLE,
                "dual improving ray detected",
                cert={"y_ray": (-y / t)},
            )

        tau = -pobj_min  # > 0 when X is a candidate unboundedness ray
        if tau > 1e-10:
            ray_resid = np.linalg.norm(A_apply(X, xf)) / tau
            xnorm = math.sqrt(
                sum(float(np.sum(Xb * Xb)) for Xb in X) + float(xf @ xf)
            ) / tau
            if ray_resid <= settings.infeas_tol * max(1.0, xnorm):
                dinf_streak += 1
            else:
                dinf_streak = 0
        else:
            dinf_streak = 0
        if dinf_streak >= settings.infeas_consecutive:
            return finish(
                SdpStatus.DUAL_INFEASIBLE,
                "primal improving ray detected (objective unbounded)",
                cert={"block_rays": [Xb / tau for Xb in X]},
            )
        if -pobj_min > settings.objective_blowup and relp <= 1e-4:
            return finish(
                SdpStatus.DUAL_INFEASIBLE,
                "objective exceeded blow-up threshold",
            )

        # Nesterov-Todd scaling per block.
        Ls, R_list, Rinv_list, lam_list, W_list = [], [], [], [], []
        failed = False
        for bk, d in enumerate(dims):
            Xb = 0.5 * (X[bk] + X[bk].T)
            Sb = 0.5 * (S[bk] + S[bk].T)
            LX, jx = _chol_with_jitter(Xb)
            LS, js = _chol_with_jitter(Sb)
            if LX is None or LS is None:
                failed = True
                break
            Uv, sv, Vt = np.linalg.svd(LS.T @ LX)
            sv = np.maximum(sv, 1e-300)
            Rb = LX @ Vt.T @ np.diag(1.0 / np.sqrt(sv))
            Rinv = np.diag(np.sqrt(sv)) @ Vt @ np.linalg.inv(LX)
            Ls.append((LX, LS))
            R_list.append(Rb)
            Rinv_list.append(Rinv)
            lam_list.append(sv)
            W_list.append(Rb @ Rb.T)
        if failed:
            return finish(
                SdpStatus.NUMERICAL_FAILURE,
                "iterate lost positive definiteness",
            )

        # Schur complement M = A W (.) W A^T, block-accumulated.
        M = np.zeros((m, m))
        svecWUW = []
        for bk, ix in enumerate(idx):
            W = W_list[bk]
            T = np.matmul(U[bk], W)
            T = np.matmul(W[None, :, :], T)
            Sv = ix.svec_batch(T)
            svecWUW.append(Sv)
            M += Ab[bk] @ Sv.T
        M = 0.5 * (M + M.T)

        LM, _ = _chol_with_jitter(M) if m else (np.zeros((0, 0)), 0.0)
        if m and LM is None:
            return finish(
                SdpStatus.NUMERICAL_FAILURE,
                "Schur complement lost positive definiteness",
            )

        if nfree:
            Z = scipy.linalg.solve_triangular(LM, Af, lower=True) if m else np.zeros((0, nfree))
            G = Z.T @ Z + 1e-14 * np.eye(nfree)
            LG, _ = _chol_with_jitter(G)
            if LG is None:
                return finish(
                    SdpStatus.NUMERICAL_FAILURE,
                    "free-variable reduced system is singular",
                )

        def solve_kkt(r1, r2):
            if m == 0:
                return np.zeros(0), np.zeros(nfree)
            w = scipy.linalg.solve_triangular(LM, r1, lower=True)
            if nfree:
                rhs = Z.T @ w - r2
                u = scipy.linalg.solve_triangular(LG, rhs, lower=True)
                dxf = scipy.linalg.solve_triangular(LG.T, u, lower=False)
                dy = scipy.linalg.solve_triangular(LM.T, w - Z @ dxf, lower=False)
            else:
                dxf = np.zeros(0)
                dy = scipy.linalg.solve_triangular(LM.T, w, lower=False)
            return dy, dxf

        def directions(Dx):
            # r1 = rp - A(Dx) + A(W Rd W)
            r1 = rp.copy()
            for bk, ix in enumerate(idx):
                W = W_list[bk]
                r1 -= Ab[bk] @ ix.svec(Dx[bk])
                r1 += Ab[bk] @ ix.svec(W @ Rd[bk] @ W)
            dy, dxf = solve_kkt(r1, rd_free)
            dS, dX = [], []
            ATdy_blk, _ = AT_apply(dy)
            for bk in range(len(dims)):
                dSb = Rd[bk] - ATdy_blk[bk]
                W = W_list[bk]
                dXb = Dx[bk] - W @ dSb @ W
                dS.append(0.5 * (dSb + dSb.T))
                dX.append(0.5 * (dXb + dXb.T))
            return dX, dS, dy, dxf

        def max_steps(dX, dS):
            ap = ad = np.inf
            for bk in range(len(dims)):
                LX, LS = Ls[bk]
                ap = min(ap, _step_to_boundary(LX, dX[bk]))
                ad = min(ad, _step_to_boundary(LS, dS[bk]))
            return ap, ad

        # Predictor (affine scaling direction): Dx = -X.
        try:
            dX_aff, dS_aff, _, _ = directions([-X[bk] for bk in range(len(dims))])
        except np.linalg.LinAlgError:
            return finish(SdpStatus.NUMERICAL_FAILURE, "linear solve failed")

        ap_aff, ad_aff = max_steps(dX_aff, dS_aff)
        ap_aff = min(1.0, ap_aff)
        ad_aff = min(1.0, ad_aff)
        gap_aff = 0.0
        for bk in range(len(dims)):
            gap_aff += float(
                np.sum((X[bk] + ap_aff * dX_aff[bk]) * (S[bk] + ad_aff * dS_aff[bk]))
            )
        mu_aff = max(gap_aff, 0.0) / nu
        sigma = min(1.0, max((mu_aff / mu) ** 3 if mu > 0 else 0.0, 0.0))

        # Corrector: recompute the complementarity target in scaled space.
        Dx = []
        for bk in range(len(dims)):
            Rb, Rinv = R_list[bk], Rinv_list[bk]
            lam = lam_list[bk]
            dxt = Rinv @ dX_aff[bk] @ Rinv.T
            dst = Rb.T @ dS_aff[bk] @ Rb
            cross = dxt @ dst
            rhs = sigma * mu * np.eye(dims[bk]) - np.diag(lam * lam) - 0.5 * (cross + cross.T)
            denom = lam[:, None] + lam[None, :]
            D = 2.0 * rhs / denom
            Dx.append(R_list[bk] @ D @ R_list[bk].T)

        try:
            dX, dS, dy, dxf = directions(Dx)
        except np.linalg.LinAlgError:
            return finish(SdpStatus.NUMERICAL_FAILURE, "linear solve failed")

        ap, ad = max_steps(dX, dS)
        ap = min(1.0, settings.step_fraction * ap)
        ad = min(1.0, settings.step_fraction * ad)

        for bk in range(len(dims)):
            X[bk] = 0.5 * ((X[bk] + ap * dX[bk]) + (X[bk] + ap * dX[bk]).T)
            S[bk] = 0.5 * ((S[bk] + ad * dS[bk]) + (S[bk] + ad * dS[bk]).T)
        if nfree:
            xf = xf + ap * dxf
        y = y + ad * dy

    return finish(SdpStatus.ITERATION_LIMIT, "iteration limit reached")


def residuals(prob: SdpProblem, sol: SdpSolution) -> dict:
    """Recompute feasibility residuals and duality gap from a solution,
    independently of the solve loop."""
    if not sol.blocks:
        return {"primal": math.nan, "dual": math.nan, "gap": math.nan}
    for bk, d in enumerate(prob.block_dims):
        if sol.blocks[bk].shape != (d, d):
            raise ValueError("solution block shape mismatch")
    if sol.free.shape[0] != prob.nfree:
        raise ValueError("solution free-variable length mismatch")

    m = prob.num_rows
    rp = np.zeros(m)
    for r, row in enumerate(prob.rows):
        rp[r] = row.rhs - prob.row_value(sol.blocks, sol.free, row)
    norm_b = np.linalg.norm([row.rhs for row in prob.rows]) if m else 0.0
    primal = float(np.linalg.norm(rp)) / (1.0 + norm_b)

    # Dual residual: C + sum_i y_i A_i + S_dual ... in max form the dual
    # constraint reads  sum_i y_i A_i + S = -C  for the internal min form;
    # reconstruct in the same min convention used by the solver.
    dual_sq = 0.0
    norm_c_sq = 0.0
    y = sol.y
    for bk, d in enumerate(prob.block_dims):
        acc = -prob.obj_blocks[bk].copy()
        norm_c_sq += float(np.sum(acc * acc))
        for r, row in enumerate(prob.rows):
            coeff = np.zeros((d, d))
            for (b2, i, j), a in row.block_entries.items():
                if b2 != bk:
                    continue
                coeff[i, j] += a
                if i != j:
                    coeff[j, i] += a
            if np.any(coeff):
                acc -= y[r] * coeff
        if sol.dual_slacks:
            acc -= sol.dual_slacks[bk]
        dual_sq += float(np.sum(acc * acc))
    if prob.nfree:
        accf = -prob.obj_free.copy()
        norm_c_sq += float(accf @ accf)
        for r, row in enumerate(prob.rows):
            for k, a in row.free_entries.items():
                accf[k] -= y[r] * a
        dual_sq += float(accf @ accf)
    dual = math.sqrt(dual_sq) / (1.0 + math.sqrt(norm_c_sq))

    pobj = prob.objective_value(sol.blocks, sol.free)
    dobj = sol.dual_objective
    gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    return {"primal": primal, "dual": dual, "gap": gap}
