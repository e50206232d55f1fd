"""Solver and dense linear-algebra contracts used by every other module.

No control-theory semantics live here: the rest of the library describes its
linear programs and semidefinite programs with the plain data types below and
never names a concrete solver.  `solve_lp` is backed by scipy's HiGHS and
`solve_sdp` by conic solvers reached through cvxpy; returned points are always
re-checked against the problem data before being reported as Optimal.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import scipy.optimize

from .tolerances import DEFAULT_TOL, ToleranceProfile


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolveStatus:
    """Outcome of an LP or SDP solve.

    `x` and `value` are present exactly when `status` is OPTIMAL.  For LPs
    `slacks` holds the per-inequality residual b - Ax; for SDPs it holds the
    minimum eigenvalue of every LMI block at the solution.
    """

    status: Status
    value: Optional[float] = None
    x: Optional[np.ndarray] = None
    slacks: Optional[np.ndarray] = None
    message: str = ""

    def __post_init__(self):
        has_sol = self.x is not None
        if has_sol != (self.status is Status.OPTIMAL):
            raise ValueError("solution must be present iff status is OPTIMAL")

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _finite_2d(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} must have finite entries")
    return M


@dataclass(frozen=True)
class LinearProgram:
    """min c @ x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lb <= x <= ub.

    Bounds default to free variables; +-inf entries are allowed.
    """

    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        if not np.all(np.isfinite(c)):
            raise ValueError("objective must be finite")
        object.__setattr__(self, "c", c)
        n = c.size
        for mat_name, rhs_name in (("A_ub", "b_ub"), ("A_eq", "b_eq")):
            M, r = getattr(self, mat_name), getattr(self, rhs_name)
            if (M is None) != (r is None):
                raise ValueError(f"{mat_name} and {rhs_name} must come together")
            if M is None:
                continue
            M = _finite_2d(M, mat_name)
            r = np.asarray(r, dtype=float).ravel()
            if M.shape != (r.size, n):
                raise ValueError(f"{mat_name} shape {M.shape} inconsistent with "
                                 f"{r.size} rhs entries and {n} variables")
            if not np.all(np.isfinite(r)):
                raise ValueError(f"{rhs_name} must be finite")
            object.__setattr__(self, mat_name, M)
            object.__setattr__(self, rhs_name, r)
        for bname in ("lb", "ub"):
            v = getattr(self, bname)
            if v is not None:
                v = np.asarray(v, dtype=float).ravel()
                if v.size != n:
                    raise ValueError(f"{bname} has wrong length")
                object.__setattr__(self, bname, v)

    @property
    def num_vars(self) -> int:
        return self.c.size


def solve_lp(p: LinearProgram, tol: ToleranceProfile = DEFAULT_TOL) -> SolveStatus:
    """Solve a linear program; never reports an infeasible point as Optimal."""
    n = p.num_vars
    lb = p.lb if p.lb is not None else np.full(n, -np.inf)
    ub = p.ub if p.ub is not None else np.full(n, np.inf)
    res = scipy.optimize.linprog(
        p.c, A_ub=p.A_ub, b_ub=p.b_ub, A_eq=p.A_eq, b_eq=p.b_eq,
        bounds=list(zip(lb, ub)), method="highs")
    if res.status == 2:
        return SolveStatus(Status.INFEASIBLE, message=res.message)
    if res.status == 3:
        return SolveStatus(Status.UNBOUNDED, message=res.message)
    if res.status != 0 or res.x is None:
        return SolveStatus(Status.NUMERICAL_FAILURE, message=res.message)
    x = np.asarray(res.x, dtype=float)
    slacks = None
    if p.A_ub is not None:
        scale = 1.0 + np.abs(p.b_ub)
        slacks = p.b_ub - p.A_ub @ x
        if np.any(slacks < -tol.lp_feas * scale):
            return SolveStatus(
                Status.NUMERICAL_FAILURE,
                message="solver returned a point violating inequalities")
    if p.A_eq is not None:
        resid = np.abs(p.A_eq @ x - p.b_eq)
        if np.any(resid > tol.lp_feas * (1.0 + np.abs(p.b_eq))):
            return SolveStatus(
                Status.NUMERICAL_FAILURE,
                message="solver returned a point violating equalities")
    return SolveStatus(Status.OPTIMAL, value=float(res.fun), x=x, slacks=slacks)


@dataclass(frozen=True)
class LMIBlock:
    """Affine symmetric-matrix map  F0 + sum_i x_i F_i  required >= margin*I.

    `coeffs` maps scalar-variable indices to symmetric coefficient matrices.
    """

    name: str
    size: int
    const: np.ndarray
    coeffs: dict[int, np.ndarray] = field(default_factory=dict)
    margin: float = 0.0

    def __post_init__(self):
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        C = _finite_2d(self.const, f"block {self.name} const")
        if C.shape != (self.size, self.size):
            raise ValueError(f"block {self.name}: const has shape {C.shape}")
        if np.max(np.abs(C - C.T), initial=0.0) > 1e-12 * (1 + np.abs(C).max()):
            raise ValueError(f"block {self.name}: const not symmetric")
        object.__setattr__(self, "const", 0.5 * (C + C.T))
        sym = {}
        for i, F in self.coeffs.items():
            F = _finite_2d(F, f"block {self.name} coeff {i}")
            if F.shape != (self.size, self.size):
                raise ValueError(f"block {self.name}: coeff {i} has shape {F.shape}")
            if np.max(np.abs(F - F.T), initial=0.0) > 1e-12 * (1 + np.abs(F).max()):
                raise ValueError(f"block {self.name}: coeff {i} not symmetric")
            sym[int(i)] = 0.5 * (F + F.T)
        object.__setattr__(self, "coeffs", sym)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        M = self.const.copy()
        for i, F in self.coeffs.items():
            M += x[i] * F
        return M

    def min_eig(self, x: np.ndarray) -> float:
        return float(np.linalg.eigvalsh(self.evaluate(x))[0])

    @property
    def is_diagonal(self) -> bool:
        def diag_only(M):
            return np.count_nonzero(M - np.diag(np.diagonal(M))) == 0
        return diag_only(self.const) and all(diag_only(F) for F in self.coeffs.values())


@dataclass(frozen=True)
class SemidefiniteProgram:
    """min objective @ x  s.t.  every LMI block is PSD (with its margin)
    and  A_eq x = b_eq."""

    num_vars: int
    objective: np.ndarray
    blocks: Sequence[LMIBlock]
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        if c.size != self.num_vars or not np.all(np.isfinite(c)):
            raise ValueError("objective must be finite with num_vars entries")
        object.__setattr__(self, "objective", c)
        for blk in self.blocks:
            for i in blk.coeffs:
                if not 0 <= i < self.num_vars:
                    raise ValueError(f"block {blk.name} references variable {i}")
        if (self.A_eq is None) != (self.b_eq is None):
            raise ValueError("A_eq and b_eq must come together")
        if self.A_eq is not None:
            M = _finite_2d(self.A_eq, "A_eq")
            r = np.asarray(self.b_eq, dtype=float).ravel()
            if M.shape != (r.size, self.num_vars):
                raise ValueError("A_eq shape inconsistent")
            object.__setattr__(self, "A_eq", M)
            object.__setattr__(self, "b_eq", r)

    def block_margins(self, x: np.ndarray) -> np.ndarray:
        """Minimum eigenvalue of every block at x (before margin shift)."""
        return np.array([blk.min_eig(x) for blk in self.blocks])


#: solver preference order; overridable via the HANDSOFF_SDP_SOLVER env var
_SDP_SOLVERS = ("CLARABEL", "SCS", "CVXOPT")


def _sdp_solver_chain() -> tuple[str, ...]:
    forced = os.environ.get("HANDSOFF_SDP_SOLVER")
    if forced:
        return (forced.upper(),)
    return _SDP_SOLVERS


def solve_sdp(p: SemidefiniteProgram, tol: ToleranceProfile = DEFAULT_TOL,
              solvers: Optional[Sequence[str]] = None) -> SolveStatus:
    """Solve a semidefinite program and independently re-check the solution.

    Every LMI block of a reported Optimal point is re-assembled from the
    problem data and must have minimum eigenvalue >= -tol.psd; equality
    constraints must hold within tol.eq.  Failures to meet this on one
    conic solver fall through to the next one in the chain (`solvers`
    overrides the default chain).
    """
    import cvxpy as cp

    x = cp.Variable(p.num_vars)
    constraints = []
    for blk in p.blocks:
        if blk.size == 1 or blk.is_diagonal:
            # diagonal blocks are PSD iff their diagonal is nonnegative
            diag_c = np.diagonal(blk.const).copy()
            rows = {i: np.diagonal(F).copy() for i, F in blk.coeffs.items()}
            expr = cp.Constant(diag_c)
            for i, d in rows.items():
                expr = expr + x[i] * d
            constraints.append(expr >= blk.margin)
            continue
        s = blk.size
        idx = sorted(blk.coeffs)
        flat = cp.Constant(blk.const.reshape(-1))
        if idx:
            C = np.stack([blk.coeffs[i].reshape(-1) for i in idx], axis=1)
            flat = flat + C @ x[idx]
        M = cp.reshape(flat, (s, s), order="C")
        constraints.append(0.5 * (M + M.T) >> blk.margin * np.eye(s))
    if p.A_eq is not None and p.A_eq.shape[0] > 0:
        constraints.append(p.A_eq @ x == p.b_eq)

    problem = cp.Problem(cp.Minimize(p.objective @ x), constraints)

    solver_opts = {
        "CLARABEL": {"tol_gap_abs": 1e-10, "tol_gap_rel": 1e-10,
                     "tol_feas": 1e-10},
        "SCS": {"max_iters": 25_000, "time_limit_secs": 120.0},
    }
    last_msg = ""
    saw_infeasible = False
    for solver in (solvers if solvers is not None else _sdp_solver_chain()):
        try:
            problem.solve(solver=solver, **solver_opts.get(solver, {}))
        except (cp.SolverError, Exception) as exc:  # noqa: BLE001 - fall through the chain
            last_msg = f"{solver}: {exc}"
            continue
        status = problem.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            if status == cp.INFEASIBLE:
                return SolveStatus(Status.INFEASIBLE, message=solver)
            saw_infeasible = True
            last_msg = f"{solver}: {status}"
            continue
        if status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            if status == cp.UNBOUNDED:
                return SolveStatus(Status.UNBOUNDED, message=solver)
            last_msg = f"{solver}: {status}"
            continue
        if x.value is None:
            last_msg = f"{solver}: {status}"
            continue
        xv = np.asarray(x.value, dtype=float).ravel()
        margins = p.block_margins(xv)
        bad = np.nonzero(margins < -tol.psd)[0]
        if bad.size:
            last_msg = (f"{solver}: block '{p.blocks[bad[0]].name}' min eig "
                        f"{margins[bad[0]]:.3e} below requirement")
            continue
        if p.A_eq is not None and p.A_eq.shape[0] > 0:
            resid = np.max(np.abs(p.A_eq @ xv - p.b_eq))
            if resid > tol.eq * (1.0 + np.max(np.abs(p.b_eq), initial=0.0)):
                last_msg = f"{solver}: equality residual {resid:.3e}"
                continue
        return SolveStatus(Status.OPTIMAL, value=float(p.objective @ xv),
                           x=xv, slacks=margins, message=solver)
    if saw_infeasible:
        return SolveStatus(Status.INFEASIBLE, message=last_msg)
    return SolveStatus(Status.NUMERICAL_FAILURE, message=last_msg or "no solver available")


def _square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix must be finite")
    return M


def eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a square real matrix (complex vector)."""
    return np.linalg.eigvals(_square(M))


def spectral_radius(M) -> float:
    """max |lambda_i| of a square real matrix."""
    M = _square(M)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def min_singular_value(M) -> float:
    M = np.asarray(M, dtype=float)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix must be finite")
    if M.size == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[-1])
