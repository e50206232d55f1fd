"""Verification of the invariance conditions and certified scalars.

The controller deactivation logic is sound when the inner set Omega_I and
the outer set Omega_O satisfy, for the closed loop (A_CL, B_CL, C_CL, D_CL)
and exogenous set Z = W x V with N = (-V) + V:

  I1)  Omega_I inside eps_s * S
  I2)  some ball of radius alpha > 0 inside Omega_I - N
  I3)  the accumulated forced response  sum_{i<=N} [I 0] A_CL^i B_CL Z
       inside beta * (Omega_I - N) for every horizon N, some beta in (0,1)
  O1)  S_c x {0} inside Omega_O
  O2)  A_CL Omega_O + B_CL Z inside Omega_O      (robust invariance)
  O3)  [I 0] Omega_O inside X
  O4)  C_CL Omega_O + D_CL Z inside U

Working with a lifted inner set Omega_I_lifted = {xi : |Htilde xi| <= 1}
replaces I1-I3 by two one-step conditions:

  C1)  A_CL Omega_I_lifted + B_CL Z inside eta * Omega_I_lifted
  C2)  [I 0] Omega_I_lifted inside (eps_s - eps_p - eps_m) * S

which certify I1-I3 for Omega_I = [I 0] Omega_I_lifted + N with
alpha = 1/||Htilde|| and beta = eta, and additionally force A_CL Schur.
This module checks all of the above, cross-validates the lifted route
against a direct truncated I3 check with a certified tail bound, and
computes the dwell bound T_max from ||A_CL^j|| <= alpha(1-beta)/mu.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import polytope as pt
from .controller import ClosedLoop, ControllerRealization, assemble_closed_loop, is_schur
from .model import DerivedSets, PlantModel
from .polytope import HPolytope, SymmetricBoxImage, VPolytope
from .tolerances import DEFAULT_TOL, ToleranceProfile


@dataclass(frozen=True)
class InvariantSets:
    """The designed set pair, plus an optional explicit inner H-rep.

    `lifted_inner` and `outer` live in the closed-loop space R^{n+n_K};
    `explicit_inner` (when given, e.g. transcribed from a published table)
    is an H-rep of Omega_I in the plant space R^n and is preferred by the
    runtime monitors.
    """

    lifted_inner: SymmetricBoxImage
    outer: SymmetricBoxImage
    explicit_inner: Optional[HPolytope] = None

    def to_json(self) -> dict:
        obj = {"H_inner_lifted": self.lifted_inner.Htilde.tolist(),
               "H_outer": self.outer.Htilde.tolist()}
        if self.explicit_inner is not None:
            obj["H_inner"] = self.explicit_inner.H.tolist()
            obj["b_inner"] = self.explicit_inner.b.tolist()
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "InvariantSets":
        explicit = None
        if "H_inner" in obj:
            explicit = HPolytope(np.array(obj["H_inner"], dtype=float),
                                 np.array(obj["b_inner"], dtype=float),
                                 name="Omega_I")
        return cls(
            lifted_inner=SymmetricBoxImage(
                np.array(obj["H_inner_lifted"], dtype=float), name="Omega_I_lifted"),
            outer=SymmetricBoxImage(np.array(obj["H_outer"], dtype=float),
                                    name="Omega_O"),
            explicit_inner=explicit)

    @classmethod
    def load(cls, path) -> "InvariantSets":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


@dataclass(frozen=True)
class CheckResult:
    """One facet-wise containment check.

    `margin` is the worst value of (lhs support - rhs); negative margins mean
    the condition holds with room.  A positive margin within the allowed
    facet tolerance passes but is flagged `rounding_marginal`, which is how
    4-decimal published data is distinguished from a genuine violation.
    """

    name: str
    passed: bool
    margin: float
    rounding_marginal: bool = False
    detail: str = ""

    def __bool__(self):
        return bool(self.passed)


def _mk_check(name: str, margin: float, facet_tol: float, detail: str = "") -> CheckResult:
    margin = float(margin)
    return CheckResult(name=name, passed=bool(margin <= facet_tol), margin=margin,
                       rounding_marginal=bool(0.0 < margin <= facet_tol),
                       detail=detail)


def check_C1(CL: ClosedLoop, lifted_inner: SymmetricBoxImage, Z: VPolytope,
             eta: float, facet_tol: float = DEFAULT_TOL.set_containment
             ) -> CheckResult:
    """C1: one-step contraction A_CL Omega + B_CL Z inside eta * Omega."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must be in (0, 1)")
    Ht = lifted_inner.Htilde
    rows = np.vstack([Ht, -Ht])
    worst, worst_row = -np.inf, -1
    for i, h in enumerate(rows):
        lhs = (lifted_inner.support(CL.A_CL.T @ h)
               + float(np.max(Z.V @ (CL.B_CL.T @ h))))
        if lhs - eta > worst:
            worst, worst_row = lhs - eta, i
    return _mk_check("C1", worst, facet_tol, f"worst facet {worst_row}")


def check_C2(lifted_inner: SymmetricBoxImage, S: HPolytope, eps_s: float,
             eps_p: float, eps_m: float,
             facet_tol: float = DEFAULT_TOL.set_containment) -> CheckResult:
    """C2: projected lifted inner set inside (eps_s - eps_p - eps_m) * S."""
    if not eps_p + eps_m < eps_s:
        raise ValueError("requires eps_p + eps_m < eps_s")
    factor = eps_s - eps_p - eps_m
    S = S.normalized()  # facet slacks on the b = 1 scale
    n = S.dim
    pad = lifted_inner.dim - n
    worst = -np.inf
    for i in range(S.num_facets):
        h = np.concatenate([S.H[i], np.zeros(pad)])
        worst = max(worst, lifted_inner.support(h) - factor)
    return _mk_check("C2", worst, facet_tol)


class InnerSet:
    """Omega_I in the plant space, explicit or in projection-plus-sum form.

    The implicit form keeps the projected corner cloud of the lifted set and
    the noise hull N; supports are evaluated by additivity, never by building
    the projected H-rep unless a halfspace form is explicitly requested
    (monitor precomputation).
    """

    def __init__(self, projection: Optional[VPolytope] = None,
                 N: Optional[VPolytope] = None,
                 explicit: Optional[HPolytope] = None):
        if explicit is None and (projection is None or N is None):
            raise ValueError("need either an explicit H-rep or projection + N")
        self.projection = projection
        self.N = N
        self.explicit = explicit

    @property
    def dim(self) -> int:
        if self.explicit is not None:
            return self.explicit.dim
        return self.projection.dim

    def support(self, h, tol: ToleranceProfile = DEFAULT_TOL) -> float:
        if self.explicit is not None:
            return pt.support(self.explicit, h, tol)
        return (float(np.max(self.projection.V @ np.asarray(h, dtype=float)))
                + float(np.max(self.N.V @ np.asarray(h, dtype=float))))

    def as_hpolytope(self, tol: ToleranceProfile = DEFAULT_TOL) -> HPolytope:
        if self.explicit is not None:
            return self.explicit
        summed = pt.minkowski_sum(self.projection, self.N, tol)
        return pt.to_hpolytope(summed, tol)

    def shrunk_by(self, Q, tol: ToleranceProfile = DEFAULT_TOL) -> HPolytope:
        """H-rep of Omega_I - Q (used for the runtime deactivation monitor)."""
        return pt.pontryagin_difference(self.as_hpolytope(tol), Q, tol)


def build_inner_set(lifted_inner: SymmetricBoxImage, N: VPolytope, n: int,
                    tol: ToleranceProfile = DEFAULT_TOL) -> InnerSet:
    """Assemble Omega_I = [I 0] Omega_I_lifted + N in implicit form."""
    corners = lifted_inner.corners()[:, :n]
    proj = VPolytope(pt._prune_to_hull(corners, tol), name="proj_inner")
    return InnerSet(projection=proj, N=N)


@dataclass(frozen=True)
class TruncatedI3:
    """Direct check of I3 over horizons N <= N_trunc plus a geometric tail.

    status is "pass", "fail" or "inconclusive"; "fail" is definitive (the
    truncated sum already escapes), "inconclusive" means the tail bound was
    too loose to decide.
    """

    status: str
    N_trunc: int
    worst_margin: float
    tail_bound: float
    detail: str = ""

    def __bool__(self):
        return self.status == "pass"


def _power_norms(A: np.ndarray, count: int) -> list[float]:
    out = []
    Ak = np.eye(A.shape[0])
    for _ in range(count):
        Ak = Ak @ A
        out.append(float(np.linalg.norm(Ak, 2)))
    return out


def check_I3_direct(CL: ClosedLoop, inner: InnerSet, N_set: VPolytope,
                    beta: float, Z: VPolytope, N_trunc: int = 50,
                    facet_tol: float = DEFAULT_TOL.set_containment,
                    tol: ToleranceProfile = DEFAULT_TOL) -> TruncatedI3:
    """Check sum_{i<=N} [I 0] A_CL^i B_CL Z inside beta*(Omega_I - N) directly.

    The truncated supports are exact (vertex maxima); horizons beyond
    N_trunc are covered by the submultiplicative bound
    sum_{i>N} ||A^i|| <= (sum_{r=1..j0} ||A^{N+r}||) / (1 - ||A^{j0}||)
    for any j0 with ||A^{j0}|| < 1.
    """
    A, B = CL.A_CL, CL.B_CL
    p, n = CL.dim, CL.n
    Hrep = inner.as_hpolytope(tol)
    rhs = beta * (Hrep.b - np.array([float(np.max(N_set.V @ h)) for h in Hrep.H]))

    # find j0 with ||A^j0|| < 1 to make the tail geometric
    probe = _power_norms(A, 2000)
    j0 = next((j + 1 for j, v in enumerate(probe) if v < 0.5), None)
    if j0 is None:
        return TruncatedI3("inconclusive", N_trunc, np.inf, np.inf,
                           "no contracting power found within 2000 steps")
    c = probe[j0 - 1]
    need = max(N_trunc + j0, len(probe))
    norms = probe if need <= len(probe) else _power_norms(A, need)
    tail_norm_sum = sum(norms[N_trunc + r] for r in range(j0)) / (1.0 - c)

    R_Z = float(np.max(np.linalg.norm(Z.V, axis=1)))
    norm_B = float(np.linalg.norm(B, 2))

    worst = -np.inf
    inconclusive = False
    Zt = Z.V  # rows are vertices of Z
    for i_row in range(Hrep.num_facets):
        h = np.concatenate([Hrep.H[i_row], np.zeros(p - n)])
        partial = 0.0
        g = h.copy()
        for _ in range(N_trunc + 1):
            partial += float(np.max(Zt @ (B.T @ g)))
            g = A.T @ g
        tail = norm_B * R_Z * float(np.linalg.norm(h)) * tail_norm_sum
        margin_exact = partial - rhs[i_row]
        margin_tail = partial + tail - rhs[i_row]
        worst = max(worst, margin_tail)
        if margin_exact > facet_tol:
            return TruncatedI3("fail", N_trunc, float(margin_exact), float(tail),
                               f"facet {i_row} escapes at horizon <= {N_trunc}")
        if margin_tail > facet_tol:
            inconclusive = True
    status = "inconclusive" if inconclusive else "pass"
    return TruncatedI3(status, N_trunc, float(worst), float(tail_norm_sum))


@dataclass(frozen=True)
class IConditionsResult:
    I1: CheckResult
    I2: CheckResult
    I3: CheckResult
    alpha: float
    beta: float
    alpha_direct: float
    direct_I3: Optional[TruncatedI3] = None


def check_I_conditions(inner: InnerSet, S: HPolytope, eps_s: float,
                       CL: ClosedLoop, Z: VPolytope, N_set: VPolytope,
                       lifted_inner: Optional[SymmetricBoxImage] = None,
                       c1: Optional[CheckResult] = None,
                       c2: Optional[CheckResult] = None,
                       eta: Optional[float] = None,
                       N_trunc: int = 50,
                       facet_tol: float = DEFAULT_TOL.set_containment,
                       tol: ToleranceProfile = DEFAULT_TOL) -> IConditionsResult:
    """Certify I1-I3 for Omega_I.

    Two routes are evaluated.  When the lifted set together with passing C1
    and C2 results is supplied, I1-I3 are inherited with alpha = 1/||Htilde||
    and beta = eta, and that certificate is the one of record (I3 quantifies
    over all horizons).  The direct route checks I1 by supports, I2 by the
    origin-centered inscribed radius of Omega_I - N, and I3 by truncation
    with a tail bound; it cross-validates the lifted route.
    """
    # I1 directly, by support additivity (slacks on the b = 1 scale)
    Sn = S.normalized()
    worst = -np.inf
    for i in range(Sn.num_facets):
        worst = max(worst, inner.support(Sn.H[i], tol) - eps_s)
    i1 = _mk_check("I1", worst, facet_tol)

    # I2: inscribed radius of Omega_I - N around the origin
    Hrep = inner.as_hpolytope(tol)
    shrunk = pt.pontryagin_difference(Hrep, N_set, tol)
    alpha_direct, _ = pt.chebyshev_radius(shrunk, centered=True)

    lifted_route = (lifted_inner is not None and c1 is not None
                    and c2 is not None and eta is not None
                    and bool(c1) and bool(c2))
    if lifted_route:
        alpha = 1.0 / float(np.linalg.norm(lifted_inner.Htilde, 2))
        beta = float(eta)
        i2 = CheckResult("I2", alpha > 0, -alpha,
                         detail=f"alpha=1/||Htilde||={alpha:.6g} "
                                f"(direct radius {alpha_direct:.6g})")
        i3 = CheckResult("I3", True, c1.margin,
                         detail=f"inherited from C1, C2 with beta={beta}")
    else:
        alpha = max(alpha_direct, 0.0)
        beta = float(eta) if eta is not None else 0.99
        i2 = CheckResult("I2", alpha_direct > 0, -alpha_direct,
                         detail=f"direct inscribed radius {alpha_direct:.6g}")
        i3 = CheckResult("I3", False, np.inf,
                         detail="no lifted certificate supplied; see direct check")

    direct = check_I3_direct(CL, inner, N_set, beta, Z, N_trunc, facet_tol, tol)
    if not lifted_route:
        i3 = CheckResult("I3", direct.status == "pass", direct.worst_margin,
                         detail=f"direct truncated check: {direct.status}")
    return IConditionsResult(I1=i1, I2=i2, I3=i3, alpha=float(alpha),
                             beta=float(beta), alpha_direct=float(alpha_direct),
                             direct_I3=direct)


@dataclass(frozen=True)
class OConditionsResult:
    O1: CheckResult
    O2: CheckResult
    O3: CheckResult
    O4: CheckResult

    def __iter__(self):
        return iter((self.O1, self.O2, self.O3, self.O4))


def check_O_conditions(CL: ClosedLoop, outer: SymmetricBoxImage,
                       S_c: VPolytope, X: HPolytope, U: HPolytope,
                       Z: VPolytope,
                       facet_tol: float = DEFAULT_TOL.set_containment
                       ) -> OConditionsResult:
    """Check O1-O4 for the outer set by vertex tests and support additivity.

    Facet slacks are reported on the b = 1 scale (X and U normalized), so
    one facet tolerance is meaningful across all four conditions.
    """
    X, U = X.normalized(), U.normalized()
    p, n = outer.dim, X.dim
    pad = p - n

    # O1: every S_c vertex, lifted with zero controller state, inside Omega_O
    o1_worst = -np.inf
    for w in S_c.V:
        xi = np.concatenate([w, np.zeros(pad)])
        o1_worst = max(o1_worst, float(np.max(np.abs(outer.Htilde @ xi))) - 1.0)
    o1 = _mk_check("O1", o1_worst, facet_tol)

    # O2: robust invariance, facet-wise on +-rows of H_O
    rows = np.vstack([outer.Htilde, -outer.Htilde])
    o2_worst = -np.inf
    for h in rows:
        lhs = outer.support(CL.A_CL.T @ h) + float(np.max(Z.V @ (CL.B_CL.T @ h)))
        o2_worst = max(o2_worst, lhs - 1.0)
    o2 = _mk_check("O2", o2_worst, facet_tol)

    # O3: projection inside X
    o3_worst = -np.inf
    for i in range(X.num_facets):
        h = np.concatenate([X.H[i], np.zeros(pad)])
        o3_worst = max(o3_worst, outer.support(h) - X.b[i])
    o3 = _mk_check("O3", o3_worst, facet_tol)

    # O4: commanded input stays in U under any exogenous z
    o4_worst = -np.inf
    for i in range(U.num_facets):
        h = U.H[i]
        lhs = (outer.support(CL.C_CL.T @ h)
               + float(np.max(Z.V @ (CL.D_CL.T @ h))))
        o4_worst = max(o4_worst, lhs - U.b[i])
    o4 = _mk_check("O4", o4_worst, facet_tol)
    return OConditionsResult(o1, o2, o3, o4)


@dataclass(frozen=True)
class TmaxCertificate:
    """Certified dwell bound: ||A_CL^j|| <= alpha(1-beta)/mu for all j >= T_max.

    The threshold crossing is established by exact per-power norms up to a
    horizon beyond which a submultiplicative envelope keeps every norm under
    the threshold; T_max is the first index of the all-below suffix.
    """

    T_max: int
    mu: float
    threshold: float
    certified_horizon: int
    norms: np.ndarray = field(repr=False)


def compute_Tmax(CL: ClosedLoop, S_c: VPolytope, alpha: float, beta: float,
                 tol: ToleranceProfile = DEFAULT_TOL,
                 max_horizon: int = 200_000) -> TmaxCertificate:
    """Dwell bound for closed-loop episodes started anywhere in S_c."""
    schur, rho = is_schur(CL, tol.schur)
    if not schur:
        raise ValueError(f"A_CL is not Schur (spectral radius {rho:.6g})")
    if not (alpha > 0 and 0 < beta < 1):
        raise ValueError("need alpha > 0 and beta in (0, 1)")
    mu = float(np.max(np.linalg.norm(S_c.V, axis=1)))
    if mu <= 0:
        raise ValueError("S_c must have positive extent")
    thr = alpha * (1.0 - beta) / mu

    A = CL.A_CL
    norms: list[float] = []
    Ak = np.eye(A.shape[0])

    def norm_at(j):
        nonlocal Ak
        while len(norms) < j:
            Ak = Ak @ A
            norms.append(float(np.linalg.norm(Ak, 2)))
        return norms[j - 1]

    j0 = None
    for j in range(1, max_horizon + 1):
        if norm_at(j) < 1.0:
            j0 = j
            break
    if j0 is None:
        raise ValueError("no contracting power found; matrix effectively not Schur")
    c = norm_at(j0)
    M = max(norm_at(r) for r in range(j0, 2 * j0)) if j0 > 1 else c
    M = max(M, norm_at(j0))
    if c == 0.0:
        J_cert = 2 * j0
    else:
        qmin = max(0, int(np.ceil(np.log(thr / M) / np.log(c))))
        J_cert = j0 * qmin + 2 * j0
    J_cert = max(J_cert, j0)
    if J_cert > max_horizon:
        raise ValueError(f"certified horizon {J_cert} exceeds budget {max_horizon}")
    norm_at(J_cert)
    arr = np.array(norms[:J_cert])
    below = arr <= thr
    # first index of the suffix that stays below the threshold
    T_max = J_cert
    for j in range(J_cert, 0, -1):
        if below[j - 1]:
            T_max = j
        else:
            break
    if not below[T_max - 1]:
        raise ValueError("threshold never reached within certified horizon")
    return TmaxCertificate(T_max=int(T_max), mu=mu, threshold=float(thr),
                           certified_horizon=int(J_cert), norms=arr)


# ---------------------------------------------------------------------------
# full report


@dataclass(frozen=True)
class GuaranteeReport:
    """Verified condition flags and certified scalars for one design."""

    C1: CheckResult
    C2: CheckResult
    I1: CheckResult
    I2: CheckResult
    I3: CheckResult
    O1: CheckResult
    O2: CheckResult
    O3: CheckResult
    O4: CheckResult
    schur: bool
    spectral_radius: float
    alpha: float
    beta: float
    mu: float
    T_max: Optional[int]
    direct_I3: Optional[TruncatedI3] = None
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.T_max is not None and self.T_max < 1:
            raise ValueError("T_max must be >= 1 when present")

    @property
    def all_ok(self) -> bool:
        return (self.schur and all(bool(c) for c in self.condition_checks()))

    def condition_checks(self) -> tuple[CheckResult, ...]:
        return (self.C1, self.C2, self.I1, self.I2, self.I3,
                self.O1, self.O2, self.O3, self.O4)

    def failed(self) -> list[str]:
        out = [c.name for c in self.condition_checks() if not c]
        if not self.schur:
            out.append("schur")
        return out

    def to_json(self) -> dict:
        def enc(c: CheckResult):
            return {"passed": c.passed, "margin": c.margin,
                    "rounding_marginal": c.rounding_marginal, "detail": c.detail}
        obj = {c.name: enc(c) for c in self.condition_checks()}
        obj.update({
            "schur": self.schur,
            "spectral_radius": self.spectral_radius,
            "alpha": self.alpha, "beta": self.beta, "mu": self.mu,
            "T_max": self.T_max,
            "all_ok": self.all_ok,
            "notes": list(self.notes),
        })
        if self.direct_I3 is not None:
            obj["I3_direct"] = {"status": self.direct_I3.status,
                                "N_trunc": self.direct_I3.N_trunc,
                                "worst_margin": self.direct_I3.worst_margin}
        return obj


def verify_all(m: PlantModel, derived: DerivedSets, K: ControllerRealization,
               sets: InvariantSets, eta: float,
               facet_tol: float = DEFAULT_TOL.set_containment,
               N_trunc: int = 50,
               tol: ToleranceProfile = DEFAULT_TOL) -> GuaranteeReport:
    """Run every condition check for (plant, controller, set pair).

    The inner conditions are certified through the lifted route (which also
    quantifies I3 over all horizons) and cross-validated by the direct
    truncated check.  The explicit inner H-rep, when present, is only used
    by the runtime monitors, not by this certificate.
    """
    CL = assemble_closed_loop(m, K)
    schur, rho = is_schur(CL, tol.schur)

    c1 = check_C1(CL, sets.lifted_inner, derived.Z, eta, facet_tol)
    c2 = check_C2(sets.lifted_inner, m.S, m.eps_s, m.eps_p, m.eps_m, facet_tol)
    inner = build_inner_set(sets.lifted_inner, derived.N, m.n, tol)
    ires = check_I_conditions(inner, m.S, m.eps_s, CL, derived.Z, derived.N,
                              lifted_inner=sets.lifted_inner, c1=c1, c2=c2,
                              eta=eta, N_trunc=N_trunc, facet_tol=facet_tol,
                              tol=tol)
    ores = check_O_conditions(CL, sets.outer, derived.S_c, m.X, m.U,
                              derived.Z, facet_tol)
    notes = []
    T_max = None
    if schur and ires.alpha > 0 and 0 < ires.beta < 1:
        T_max = compute_Tmax(CL, derived.S_c, ires.alpha, ires.beta, tol).T_max
    else:
        notes.append("T_max not computed: missing Schur property or scalars")
    if sets.explicit_inner is not None:
        fwd, bwd = compare_inner_forms(inner, sets.explicit_inner, tol)
        notes.append(f"explicit vs implicit inner set: implicit-in-explicit "
                     f"slack {fwd:.3e}, explicit-in-implicit slack {bwd:.3e}")
    mu = float(np.max(np.linalg.norm(derived.S_c.V, axis=1)))
    return GuaranteeReport(
        C1=c1, C2=c2, I1=ires.I1, I2=ires.I2, I3=ires.I3,
        O1=ores.O1, O2=ores.O2, O3=ores.O3, O4=ores.O4,
        schur=schur, spectral_radius=rho,
        alpha=ires.alpha, beta=ires.beta, mu=mu, T_max=T_max,
        direct_I3=ires.direct_I3, notes=tuple(notes))


def compare_inner_forms(implicit: InnerSet, explicit: HPolytope,
                        tol: ToleranceProfile = DEFAULT_TOL
                        ) -> tuple[float, float]:
    """Mutual containment slacks between the two Omega_I forms.

    Returns (implicit-in-explicit, explicit-in-implicit) worst facet slacks;
    values near zero mean the forms agree up to transcription rounding.
    """
    fwd = max(implicit.support(explicit.H[i], tol) - explicit.b[i]
              for i in range(explicit.num_facets))
    impl_h = implicit.as_hpolytope(tol)
    bwd = pt.contains_polytope(explicit, impl_h, tol.set_containment).worst_slack
    return float(fwd), float(bwd)
