"""Joint synthesis of the feedback controller and the invariant set pair.

The design variables are the controller matrices (A_K, B_K, C_K, D_K), the
lifted inner-set factor Htilde_I, the outer-set factor H_O, and explicit
inverse factors Htilde_Ii, H_Oi.  The conditions C1-C2 and O1-O4 become
linear matrix inequalities in these unknowns after an S-procedure with
diagonal multipliers, one slack-variable linearization around frozen
invertible points Y_*, and the bilinear couplings

    Htilde_I @ Htilde_Ii = I     and     H_O @ H_Oi = I

are enforced asymptotically: each iteration locks one factor of every pair
(alternating by iteration parity), minimizes the squared Frobenius norm of
the residual G = [Htilde_I Htilde_Ii - I,  H_O H_Oi - I]  subject to all
LMIs, and refreshes the frozen points from the previous optimizer.  The
optimal cost sequence is non-increasing and bounded below, so the loop
terminates; if the residual reaches (numerical) zero the extracted design
provably satisfies every condition, which is re-verified here at strict
tolerance before anything is returned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._affine import MatExpr, VarRegistry
from .backend import (LMIBlock, SemidefiniteProgram, SolveStatus, Status,
                      min_singular_value, solve_sdp)
from .conditions import GuaranteeReport, InvariantSets, verify_all
from .controller import ControllerRealization
from .model import DerivedSets, PlantModel, outer_box_Z, validate
from .polytope import SymmetricBoxImage
from .tolerances import DEFAULT_TOL, ToleranceProfile


class InitializationFailedError(Exception):
    """No seed on the line-search grid made the first problem feasible."""

    def __init__(self, message, last_status: Optional[SolveStatus] = None):
        super().__init__(message)
        self.last_status = last_status


class RecursiveFeasibilityBrokenError(Exception):
    """A mid-run solve was not Optimal.

    By construction every iteration is feasible at the previous optimizer,
    so this indicates numerical margins too tight for the backend, not a
    modelling error by the caller.
    """

    def __init__(self, k: int, status: SolveStatus):
        super().__init__(f"solve at iteration {k} returned {status.status}: "
                         f"{status.message}")
        self.k = k
        self.status = status


class SynthesisContractError(Exception):
    """A guaranteed property (monotone cost, invertible factors) failed."""


class ExtractionRejectedError(Exception):
    """Extracted artifacts failed re-verification; nothing was returned."""

    def __init__(self, failing: list[str], report: GuaranteeReport):
        super().__init__(f"extracted artifacts fail conditions: {failing}")
        self.report = report


@dataclass(frozen=True)
class SynthesisParams:
    """Inputs of the synthesis procedure.

    n_K is the controller order; eta the one-step contraction factor of the
    lifted inner set; eps_s the deactivation margin (must exceed
    eps_p + eps_m of the model); eps_c the stopping threshold on cost
    improvement; cert_tol the residual below which the design counts as
    certified.  Strict inequalities are realized with psd_margin.
    """

    n_K: int
    eta: float
    eps_s: float
    eps_c: float = 1e-9
    max_iters: int = 100
    psd_margin: float = DEFAULT_TOL.psd_margin
    cert_tol: float = 1e-6
    init_strategy: str = "scaled-identity"
    init_grid: tuple[float, ...] = tuple(np.logspace(-1.5, 1.5, 13))
    # after each solve, re-center within the optimal face by maximizing
    # eigenvalue floors on the slack matrices X_*; this keeps the next
    # iteration's linearization points Y = X^{-1} H well-scaled without
    # touching the cost value, so monotonicity and recursive feasibility
    # are preserved exactly
    recenter: bool = True
    # gentle floors condition the Y updates without distorting the
    # linearization geometry; large caps destabilize the tail
    recenter_floor_cap: float = 0.1
    # relative cost slack of the re-centering pass; accepted iterates are
    # still forced non-increasing against the previous gap, so this only
    # trades a sliver of per-step progress for conditioning
    recenter_cost_slack: float = 1e-2
    # the first problem's cost provably pins the X slacks near the margin
    # floor, so its re-centering pass is allowed to trade cost for
    # conditioning; later iterations keep the cost tight (the monotone
    # sequence only starts at the first iterate's evaluated gap)
    recenter_init_cost_factor: float = 1.5

    def __post_init__(self):
        if self.n_K < 0:
            raise ValueError("n_K must be >= 0")
        if not 0.0 < self.eta < 1.0:
            raise ValueError("eta must be in (0, 1)")
        if not 0.0 < self.eps_s < 1.0:
            raise ValueError("eps_s must be in (0, 1)")
        if self.eps_c <= 0:
            raise ValueError("eps_c must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init_strategy not in ("scaled-identity", "warm"):
            raise ValueError(f"unknown init strategy {self.init_strategy!r}")


@dataclass(frozen=True)
class ProblemData:
    """Fixed numerical data entering every iteration's problem."""

    A: np.ndarray
    B: np.ndarray
    H_S: np.ndarray
    H_X: np.ndarray
    H_U: np.ndarray
    H_Z: np.ndarray
    omega: np.ndarray  # vertices of S_c
    n: int
    m: int
    n_K: int

    @property
    def p(self) -> int:
        return self.n + self.n_K


def problem_data(m: PlantModel, derived: DerivedSets, n_K: int) -> ProblemData:
    """Normalize the constraint sets to b = 1 and collect problem matrices."""
    return ProblemData(
        A=m.A, B=m.B,
        H_S=m.S.normalized().H,
        H_X=m.X.normalized().H,
        H_U=m.U.normalized().H,
        H_Z=outer_box_Z(derived).H_Z,
        omega=derived.omega,
        n=m.n, m=m.m, n_K=n_K)


@dataclass(frozen=True)
class FrozenPoints:
    """Linearization points Y_* (all invertible p x p matrices)."""

    Y_I1: list[np.ndarray]
    Y_I2: list[np.ndarray]
    Y_O1: list[np.ndarray]
    Y_O2: list[np.ndarray]
    Y_U: list[np.ndarray]

    @classmethod
    def scaled_identity(cls, p: int, n_U: int, c: float) -> "FrozenPoints":
        eye = c * np.eye(p)
        return cls(Y_I1=[eye.copy() for _ in range(p)],
                   Y_I2=[eye.copy() for _ in range(p)],
                   Y_O1=[eye.copy() for _ in range(p)],
                   Y_O2=[eye.copy() for _ in range(p)],
                   Y_U=[eye.copy() for _ in range(n_U)])


#: variable-group names extracted from every solved iterate
_H_NAMES = ("HtI", "HtIi", "HO", "HOi")


@dataclass
class ProblemHandle:
    sdp: SemidefiniteProgram
    registry: VarRegistry
    lock: Optional[str]  # None, "HI_HO" (odd k) or "HIi_HOi" (even k)


def build_problem(data: ProblemData, params: SynthesisParams,
                  frozen: FrozenPoints, lock: Optional[str],
                  prev: Optional[dict[str, np.ndarray]],
                  eps_p: float, eps_m: float,
                  recenter_cap: Optional[float] = None) -> ProblemHandle:
    """Assemble one iteration's semidefinite program.

    `lock` selects which factor pair is pinned to its previous value via
    equality constraints ("HI_HO" on odd iterations, "HIi_HOi" on even,
    None for the very first problem, whose cost regularizes all four
    factors instead of the inversion residual).

    With `recenter_cap` set, the program instead maximizes per-family
    eigenvalue floors on the X slack matrices subject to the original cost
    staying at or below the cap: a re-centering pass within the optimal
    face of the same constraint system.
    """
    n, m_in, nK, p = data.n, data.m, data.n_K, data.p
    nS, nX, nU = data.H_S.shape[0], data.H_X.shape[0], data.H_U.shape[0]
    nZ2 = data.H_Z.shape[1]  # = 2n
    q = data.H_Z.shape[0]
    if len(frozen.Y_U) != nU:
        raise ValueError(f"need {nU} frozen Y_U points, got {len(frozen.Y_U)}")
    margin = params.psd_margin

    reg = VarRegistry()
    AK = reg.full("AK", nK, nK)
    BK = reg.full("BK", nK, n)
    CK = reg.full("CK", m_in, nK)
    DK = reg.full("DK", m_in, n)
    HtI = reg.full("HtI", p, p)
    HtIi = reg.full("HtIi", p, p)
    HO = reg.full("HO", p, p)
    HOi = reg.full("HOi", p, p)
    XI1 = [reg.symmetric(f"XI1[{j}]", p) for j in range(p)]
    XI2 = [reg.symmetric(f"XI2[{j}]", p) for j in range(p)]
    XO1 = [reg.symmetric(f"XO1[{j}]", p) for j in range(p)]
    XO2 = [reg.symmetric(f"XO2[{j}]", p) for j in range(p)]
    XU = [reg.symmetric(f"XU[{l}]", p) for l in range(nU)]
    DI1 = [reg.diagonal(f"DI1[{j}]", p) for j in range(p)]
    DI2 = [reg.diagonal(f"DI2[{j}]", q) for j in range(p)]
    DO1 = [reg.diagonal(f"DO1[{j}]", p) for j in range(p)]
    DO2 = [reg.diagonal(f"DO2[{j}]", q) for j in range(p)]
    DS = [reg.diagonal(f"DS[{qq}]", p) for qq in range(nS)]
    DX = [reg.diagonal(f"DX[{pp}]", p) for pp in range(nX)]
    DU1 = [reg.diagonal(f"DU1[{l}]", p) for l in range(nU)]
    DU2 = [reg.diagonal(f"DU2[{l}]", q) for l in range(nU)]
    t_epi = reg.scalar("t")
    lam = {}
    if recenter_cap is not None:
        for fam in ("I1", "I2", "O1", "O2", "U"):
            lam[fam] = reg.scalar(f"lam_{fam}")

    # closed-loop blocks, affine in the controller variables
    A_CL = MatExpr.block([[data.A + data.B @ DK, data.B @ CK],
                          [BK, AK]])
    B_CL = MatExpr.block([[MatExpr.constant(np.eye(n)), data.B @ DK],
                          [MatExpr.constant(np.zeros((nK, n))), BK]])
    C_CL = MatExpr.block([[DK, CK]])
    D_CL = MatExpr.block([[MatExpr.constant(np.zeros((m_in, n))), DK]])

    blocks: list[LMIBlock] = []

    def emit(name: str, expr: MatExpr, blk_margin: float):
        e = expr.sym()
        blocks.append(LMIBlock(name=name, size=e.shape[0], const=e.const,
                               coeffs=e.coeffs, margin=blk_margin))

    ones_p = np.ones((p, 1))
    ones_q = np.ones((q, 1))
    HZ = data.H_Z
    zeros_p2n = MatExpr.constant(np.zeros((p, nZ2)))
    I_p = MatExpr.constant(np.eye(p))

    # multiplier sign constraints (diagonality is structural)
    for j in range(p):
        emit(f"opt_b_DI1[{j}]", DI1[j], 0.0)
        emit(f"opt_b_DI2[{j}]", DI2[j], 0.0)
        emit(f"opt_b_DO1[{j}]", DO1[j], 0.0)
        emit(f"opt_b_DO2[{j}]", DO2[j], 0.0)
    for qq in range(nS):
        emit(f"opt_c_DS[{qq}]", DS[qq], 0.0)
    for pp in range(nX):
        emit(f"opt_d_DX[{pp}]", DX[pp], 0.0)
    for l in range(nU):
        emit(f"opt_e_DU1[{l}]", DU1[l], 0.0)
        emit(f"opt_e_DU2[{l}]", DU2[l], 0.0)

    for j in range(p):
        # invariance S-procedure cores for the inner and outer pairs
        for tag, X2, D2, X1 in (("I", XI2[j], DI2[j], XI1[j]),
                                ("O", XO2[j], DO2[j], XO1[j])):
            mid = HZ.T @ D2 @ HZ
            blk = MatExpr.block([
                [X2, zeros_p2n, A_CL.T],
                [zeros_p2n.T, mid, B_CL.T],
                [A_CL, B_CL, X1]])
            emit(f"opt_f_{tag}[{j}]", blk, margin)

        # slack-variable linearizations tying the factors to the cores
        Y = frozen.Y_I2[j]
        low = (HtI @ Y).T + (HtI @ Y) - Y.T @ XI2[j] @ Y
        emit(f"opt_g[{j}]", MatExpr.block([[DI1[j], I_p], [I_p, low]]), margin)

        Y = frozen.Y_O2[j]
        low = (HO @ Y).T + (HO @ Y) - Y.T @ XO2[j] @ Y
        emit(f"opt_h[{j}]", MatExpr.block([[DO1[j], I_p], [I_p, low]]), margin)

        e_j = np.zeros((p, 1)); e_j[j, 0] = 1.0
        r_I = (MatExpr.constant([[2.0 * params.eta]])
               - ones_p.T @ DI1[j] @ ones_p - ones_q.T @ DI2[j] @ ones_q)
        Y = frozen.Y_I1[j]
        up = Y.T @ HtIi + (Y.T @ HtIi).T - Y.T @ XI1[j] @ Y
        emit(f"opt_i[{j}]", MatExpr.block([[up, MatExpr.constant(e_j)],
                                           [MatExpr.constant(e_j.T), r_I]]),
             margin)

        r_O = (MatExpr.constant([[2.0]])
               - ones_p.T @ DO1[j] @ ones_p - ones_q.T @ DO2[j] @ ones_q)
        Y = frozen.Y_O1[j]
        up = Y.T @ HOi + (Y.T @ HOi).T - Y.T @ XO1[j] @ Y
        emit(f"opt_k[{j}]", MatExpr.block([[up, MatExpr.constant(e_j)],
                                           [MatExpr.constant(e_j.T), r_O]]),
             margin)

    # projections of the factored sets into the plant constraint sets
    HS0 = np.hstack([data.H_S, np.zeros((nS, nK))])
    HX0 = np.hstack([data.H_X, np.zeros((nX, nK))])
    gap = 2.0 * (params.eps_s - eps_m - eps_p)
    for qq in range(nS):
        e_q = np.zeros((nS, 1)); e_q[qq, 0] = 1.0
        col = (HS0 @ HtIi).T @ e_q
        rhs = MatExpr.constant([[gap]]) - ones_p.T @ DS[qq] @ ones_p
        emit(f"opt_m[{qq}]", MatExpr.block([[DS[qq], col], [col.T, rhs]]),
             margin)
    for pp in range(nX):
        e_p = np.zeros((nX, 1)); e_p[pp, 0] = 1.0
        col = (HX0 @ HOi).T @ e_p
        rhs = MatExpr.constant([[2.0]]) - ones_p.T @ DX[pp] @ ones_p
        emit(f"opt_n[{pp}]", MatExpr.block([[DX[pp], col], [col.T, rhs]]),
             margin)

    # input-constraint S-procedure for each facet of U
    for l in range(nU):
        e_l = np.zeros((nU, 1)); e_l[l, 0] = 1.0
        colC = (data.H_U @ C_CL).T @ e_l
        colD = (data.H_U @ D_CL).T @ e_l
        mid = HZ.T @ DU2[l] @ HZ
        rhs = (MatExpr.constant([[2.0]])
               - ones_p.T @ DU1[l] @ ones_p - ones_q.T @ DU2[l] @ ones_q)
        blk = MatExpr.block([
            [XU[l], zeros_p2n, colC],
            [zeros_p2n.T, mid, colD],
            [colC.T, colD.T, rhs]])
        emit(f"opt_o[{l}]", blk, margin)

        Y = frozen.Y_U[l]
        low = (HO @ Y).T + (HO @ Y) - Y.T @ XU[l] @ Y
        emit(f"opt_p[{l}]", MatExpr.block([[DU1[l], I_p], [I_p, low]]), margin)

    # S_c vertices, lifted with zero controller state, inside the outer set
    for i, w in enumerate(data.omega):
        xi = np.concatenate([w, np.zeros(nK)]).reshape(p, 1)
        col = HO @ xi
        emit(f"opt_q_hi[{i}]",
             MatExpr.constant(np.eye(p)) - MatExpr.diag_of_column(col), 0.0)
        emit(f"opt_q_lo[{i}]",
             MatExpr.constant(np.eye(p)) + MatExpr.diag_of_column(col), 0.0)

    # cost: epigraph of the squared Frobenius norm of the residual
    if lock is None:
        vec = MatExpr.vstack([HtI.reshape((p * p, 1)),
                              HtIi.reshape((p * p, 1)),
                              HO.reshape((p * p, 1)),
                              HOi.reshape((p * p, 1))])
    else:
        I = np.eye(p)
        if lock == "HI_HO":
            G1 = prev["HtI"] @ HtIi - I
            G2 = prev["HO"] @ HOi - I
        elif lock == "HIi_HOi":
            G1 = HtI @ prev["HtIi"] - I
            G2 = HO @ prev["HOi"] - I
        else:
            raise ValueError(f"unknown lock {lock!r}")
        vec = MatExpr.vstack([G1.reshape((p * p, 1)), G2.reshape((p * p, 1))])
    nv = vec.shape[0]
    epi = MatExpr.block([
        [t_epi, vec.T],
        [vec, MatExpr.constant(np.eye(nv))]])
    emit("cost_epigraph", epi, 0.0)

    if recenter_cap is not None:
        fam_X = {"I1": XI1, "I2": XI2, "O1": XO1, "O2": XO2, "U": XU}
        for fam, Xs in fam_X.items():
            for j, X in enumerate(Xs):
                emit(f"recenter_floor_{fam}[{j}]",
                     X - _scalar_times_eye(lam[fam], p), 0.0)
            emit(f"recenter_lam_pos_{fam}", lam[fam], 0.0)
            emit(f"recenter_lam_cap_{fam}",
                 MatExpr.constant([[params.recenter_floor_cap]]) - lam[fam], 0.0)
        emit("recenter_cost_cap",
             MatExpr.constant([[recenter_cap]]) - t_epi, 0.0)

    # freeze equalities pinning the locked factor pair
    eq_rows, eq_rhs = [], []
    if lock is not None:
        locked = ("HtI", "HO") if lock == "HI_HO" else ("HtIi", "HOi")
        for name in locked:
            idx = list(reg.variable_indices(name))
            vals = prev[name].reshape(-1)
            for pos, i in enumerate(idx):
                row = np.zeros(reg.count)
                row[i] = 1.0
                eq_rows.append(row)
                eq_rhs.append(vals[pos])
    A_eq = np.array(eq_rows) if eq_rows else None
    b_eq = np.array(eq_rhs) if eq_rows else None

    c = np.zeros(reg.count)
    if recenter_cap is None:
        c[next(iter(reg.variable_indices("t")))] = 1.0
    else:
        for fam in lam:
            c[next(iter(reg.variable_indices(f"lam_{fam}")))] = -1.0
    sdp = SemidefiniteProgram(num_vars=reg.count, objective=c, blocks=blocks,
                              A_eq=A_eq, b_eq=b_eq)
    return ProblemHandle(sdp=sdp, registry=reg, lock=lock)


def _scalar_times_eye(s: MatExpr, p: int) -> MatExpr:
    """Lift a 1x1 expression to s * I_p."""
    I = np.eye(p)
    return MatExpr((p, p), s.const[0, 0] * I,
                   {i: c[0, 0] * I for i, c in s.coeffs.items()})


def _extract_values(reg: VarRegistry, x: np.ndarray) -> dict[str, np.ndarray]:
    return {name: reg.extract(name, x) for name in reg.names()}


def _solve_iteration(data: ProblemData, params: SynthesisParams,
                     frozen: FrozenPoints, lock: Optional[str],
                     prev: Optional[dict[str, np.ndarray]],
                     eps_p: float, eps_m: float, tol: ToleranceProfile,
                     solvers=None
                     ) -> tuple[Optional[dict], Optional[dict],
                                Optional[SolveStatus], str, float]:
    """Solve one iteration's problem, then re-center within its near-optimal set.

    Returns (solved values, re-centered values or None, phase-1 status,
    solver tag, wall seconds); solved values are None when the phase-1
    solve was not Optimal.  Re-centering maximizes eigenvalue floors on the
    X slacks at (nearly) unchanged cost, keeping the next iteration's
    linearization points well-scaled; it is best-effort (one solver try).
    """
    t0 = time.perf_counter()
    handle = build_problem(data, params, frozen, lock=lock, prev=prev,
                           eps_p=eps_p, eps_m=eps_m)
    st = solve_sdp(handle.sdp, tol, solvers=solvers)
    if st.status is not Status.OPTIMAL:
        return None, None, st, st.message, time.perf_counter() - t0
    values = _extract_values(handle.registry, st.x)
    recentered = None
    tag = st.message
    if params.recenter:
        if lock is None:
            cap = params.recenter_init_cost_factor * abs(float(st.value)) + 1e-6
        else:
            cap = float(st.value) + max(1e-9, params.recenter_cost_slack
                                        * abs(float(st.value)))
        h2 = build_problem(data, params, frozen, lock=lock, prev=prev,
                           eps_p=eps_p, eps_m=eps_m, recenter_cap=cap)
        st2 = solve_sdp(h2.sdp, tol, solvers=("CLARABEL",))
        if st2.status is Status.OPTIMAL:
            recentered = _extract_values(h2.registry, st2.x)
            tag = f"{st.message}+recenter"
    return values, recentered, st, tag, time.perf_counter() - t0


def _gap_matrix(values: dict[str, np.ndarray]) -> np.ndarray:
    p = values["HtI"].shape[0]
    I = np.eye(p)
    return np.hstack([values["HtI"] @ values["HtIi"] - I,
                      values["HO"] @ values["HOi"] - I])


def _gap_cost(values: dict[str, np.ndarray]) -> float:
    G = _gap_matrix(values)
    return float(np.trace(G @ G.T))


@dataclass
class SynthesisIterate:
    """One accepted iterate: all decision values plus bookkeeping."""

    k: int
    values: dict[str, np.ndarray] = field(repr=False)
    J_solver: float
    J_gap: float
    lock: Optional[str]
    solver: str
    wall_time_s: float
    min_sing: dict[str, float]

    def controller(self) -> ControllerRealization:
        return ControllerRealization(self.values["AK"], self.values["BK"],
                                     self.values["CK"], self.values["DK"])


@dataclass
class SynthesisState:
    """Mutable state of a synthesis run (created by `initialize`)."""

    m: PlantModel
    derived: DerivedSets
    params: SynthesisParams
    data: ProblemData
    frozen: FrozenPoints
    iterates: list[SynthesisIterate]
    seed_scale: Optional[float]

    @property
    def latest(self) -> SynthesisIterate:
        return self.iterates[-1]


def initialize(m: PlantModel, derived: DerivedSets, params: SynthesisParams,
               warm_frozen: Optional[FrozenPoints] = None,
               tol: ToleranceProfile = DEFAULT_TOL) -> SynthesisState:
    """Find frozen points making the first problem feasible, and solve it.

    The "scaled-identity" strategy seeds every Y as c*I and line-searches c
    over a logarithmic grid; "warm" uses caller-provided points.  The first
    problem has no locked factors and minimizes the total squared Frobenius
    norm of the four factors.
    """
    report = validate(m, tol)
    if not report.ok:
        raise ValueError(f"model fails validation: "
                         f"{[c.name for c in report.failed()]}")
    if not m.eps_p + m.eps_m < params.eps_s:
        raise ValueError("params.eps_s must exceed model eps_p + eps_m")
    data = problem_data(m, derived, params.n_K)
    nU = data.H_U.shape[0]

    candidates: list[tuple[Optional[float], FrozenPoints]]
    if params.init_strategy == "warm":
        if warm_frozen is None:
            raise ValueError("warm initialization needs frozen points")
        candidates = [(None, warm_frozen)]
    else:
        candidates = [(c, FrozenPoints.scaled_identity(data.p, nU, c))
                      for c in params.init_grid]

    last: Optional[SolveStatus] = None
    for scale, frozen in candidates:
        # grid scan: one fast solver try per candidate, no rescue chain
        values, recentered, st, tag, wall = _solve_iteration(
            data, params, frozen, lock=None, prev=None,
            eps_p=m.eps_p, eps_m=m.eps_m, tol=tol, solvers=("CLARABEL",))
        if recentered is not None:
            values = recentered
        last = st
        if values is not None:
            it0 = SynthesisIterate(
                k=0, values=values, J_solver=float(st.value),
                J_gap=_gap_cost(values), lock=None, solver=tag,
                wall_time_s=wall, min_sing=_factor_min_sing(values))
            return SynthesisState(m=m, derived=derived, params=params,
                                  data=data, frozen=frozen,
                                  iterates=[it0], seed_scale=scale)
    raise InitializationFailedError(
        f"no feasible seed on the grid ({len(candidates)} candidates tried); "
        f"last status: {None if last is None else last.status}", last)


def _factor_min_sing(values: dict[str, np.ndarray]) -> dict[str, float]:
    return {name: min_singular_value(values[name]) for name in _H_NAMES}


def _update_frozen(prev_values: dict[str, np.ndarray], p: int, nU: int
                   ) -> FrozenPoints:
    """Refresh the linearization points from the previous optimizer."""
    def inv_times(Xname_fmt, count, rhs_of):
        out = []
        for j in range(count):
            X = prev_values[Xname_fmt.format(j)]
            out.append(np.linalg.solve(X, rhs_of()))
        return out

    return FrozenPoints(
        Y_I1=inv_times("XI1[{}]", p, lambda: prev_values["HtIi"]),
        Y_I2=inv_times("XI2[{}]", p, lambda: prev_values["HtI"].T),
        Y_O1=inv_times("XO1[{}]", p, lambda: prev_values["HOi"]),
        Y_O2=inv_times("XO2[{}]", p, lambda: prev_values["HO"].T),
        Y_U=inv_times("XU[{}]", nU, lambda: prev_values["HO"].T))


@dataclass
class SynthesisResult:
    """Outcome of a synthesis run.

    verdict is "certified" (residual at or below cert_tol), "stalled"
    (improvement fell below eps_c first) or "budget" (max_iters reached).
    """

    verdict: str
    state: SynthesisState
    J_history: list[float]  # gap costs, starting at the first iterate
    log_lines: list[str]

    @property
    def final(self) -> SynthesisIterate:
        return self.state.latest

    @property
    def final_cost(self) -> float:
        return self.final.J_gap

    @property
    def certified(self) -> bool:
        return self.verdict == "certified"


def iterate(state: SynthesisState, log=None,
            tol: ToleranceProfile = DEFAULT_TOL) -> SynthesisResult:
    """Run the alternating-lock loop until improvement drops below eps_c.

    Every solve must be Optimal (recursive feasibility); the evaluated gap
    cost sequence must be non-increasing within 1e-9, and all four factors
    must stay numerically invertible at every accepted iterate.  Violations
    raise rather than silently continuing.
    """
    params, data = state.params, state.data
    p, nU = data.p, data.H_U.shape[0]
    slack = 1e-9

    J_prev = state.latest.J_gap
    history = [J_prev]
    lines = [_log_line(state.latest)]
    if log:
        log(lines[-1])
    _require_invertible(state.latest, tol)

    k = state.latest.k
    while True:
        k += 1
        prev_vals = state.latest.values
        state.frozen = _update_frozen(prev_vals, p, nU)
        lock = "HI_HO" if k % 2 == 1 else "HIi_HOi"
        values, recentered, st, tag, wall = _solve_iteration(
            data, params, state.frozen, lock=lock, prev=prev_vals,
            eps_p=state.m.eps_p, eps_m=state.m.eps_m, tol=tol)
        if values is None:
            raise RecursiveFeasibilityBrokenError(k, st)
        # accept the best-conditioned candidate that keeps the gap sequence
        # non-increasing; the carried-over optimizer is always feasible here
        # at cost J_prev, so monotonicity never breaks
        if recentered is not None and _gap_cost(recentered) <= J_prev:
            values = recentered
        elif _gap_cost(values) <= J_prev:
            tag = tag.replace("+recenter", "")
        else:
            values = {name: (v.copy() if isinstance(v, np.ndarray) else v)
                      for name, v in prev_vals.items()}
            tag += "+carryover"
        it = SynthesisIterate(k=k, values=values, J_solver=float(st.value),
                              J_gap=_gap_cost(values), lock=lock,
                              solver=tag, wall_time_s=wall,
                              min_sing=_factor_min_sing(values))
        state.iterates.append(it)
        history.append(it.J_gap)
        lines.append(_log_line(it))
        if log:
            log(lines[-1])
        if it.J_gap > J_prev + slack:
            raise SynthesisContractError(
                f"cost increased at iteration {k}: {J_prev:.6e} -> "
                f"{it.J_gap:.6e}")
        _require_invertible(it, tol)
        improvement = J_prev - it.J_gap
        J_prev = it.J_gap
        if improvement < params.eps_c:
            verdict = "certified" if it.J_gap <= params.cert_tol else "stalled"
            break
        if k - state.iterates[0].k >= params.max_iters:
            verdict = "certified" if it.J_gap <= params.cert_tol else "budget"
            break
    return SynthesisResult(verdict=verdict, state=state, J_history=history,
                           log_lines=lines)


def _require_invertible(it: SynthesisIterate, tol: ToleranceProfile):
    for name, s in it.min_sing.items():
        if s <= tol.sing:
            raise SynthesisContractError(
                f"factor {name} numerically singular at iteration {it.k} "
                f"(min singular value {s:.3e})")


def _log_line(it: SynthesisIterate) -> str:
    return (f"k={it.k:3d} lock={it.lock or '-':8s} J={it.J_solver:.6e} "
            f"gap={it.J_gap:.6e} solver={it.solver} "
            f"wall={it.wall_time_s:.3f}s")


def extract(result: SynthesisResult, minimal: bool = False,
            tol: ToleranceProfile = DEFAULT_TOL
            ) -> tuple[ControllerRealization, InvariantSets, GuaranteeReport]:
    """Return (controller, sets, report) from a certified run.

    Refused unless the verdict is "certified"; the assembled artifacts are
    re-verified by the full conditions suite at strict tolerance and
    rejected on any failure, so uncertified designs can never leak out.
    """
    if not result.certified:
        raise ValueError(f"extraction requires a certified run, got "
                         f"verdict {result.verdict!r}")
    it = result.final
    K = it.controller()
    if minimal:
        from .controller import minimal_realization
        K = minimal_realization(K, tol.rank_rel)
    sets = InvariantSets(
        lifted_inner=SymmetricBoxImage(it.values["HtI"], name="Omega_I_lifted"),
        outer=SymmetricBoxImage(it.values["HO"], name="Omega_O"))
    report = verify_all(result.state.m, result.state.derived,
                        it.controller(), sets, eta=result.state.params.eta,
                        facet_tol=tol.set_containment, tol=tol)
    if not report.all_ok:
        raise ExtractionRejectedError(report.failed(), report)
    return K, sets, report
