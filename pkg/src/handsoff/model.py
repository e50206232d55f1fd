"""Plant description, standing-assumption validation and derived sets.

The plant is ``x[k+1] = A x[k] + sigma[k] B u[k] + (1 - sigma[k]) d[k] + w[k]``
with measurement ``y[k] = x[k] + v[k]``.  Alongside (A, B) it carries the
six problem sets: the hands-off region S, the state constraint set X, the
input set U, the uncontrolled-input set D, the process-noise set W and the
measurement-noise set V, plus the scalars eps_p, eps_m (noise-to-S scalings),
eps_s (deactivation margin) and delta (inscribed-ball radius of S).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import polytope as pt
from .polytope import HPolytope, VPolytope
from .tolerances import DEFAULT_TOL, ToleranceProfile


@dataclass(frozen=True)
class PlantModel:
    A: np.ndarray
    B: np.ndarray
    S: HPolytope
    X: HPolytope
    U: HPolytope
    D: HPolytope
    W: HPolytope
    V: HPolytope
    eps_p: float
    eps_m: float
    eps_s: float
    delta: Optional[float] = None
    Ts: Optional[float] = None  # sample time, metadata only

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("A must be square")
        if B.shape[0] != A.shape[0]:
            raise ValueError("B must have as many rows as A")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        n, m = A.shape[0], B.shape[1]
        for name, want in (("S", n), ("X", n), ("D", n), ("W", n), ("V", n),
                           ("U", m)):
            got = getattr(self, name).dim
            if got != want:
                raise ValueError(f"set {name} has dim {got}, expected {want}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class ValidationCheck:
    name: str
    passed: bool
    margin: float  # negative = satisfied with room, positive = violated by this much
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[ValidationCheck, ...]
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[ValidationCheck]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "checks": [{"name": c.name, "passed": c.passed, "margin": c.margin,
                        "detail": c.detail} for c in self.checks],
            "notes": list(self.notes),
        }


def validate(m: PlantModel, tol: ToleranceProfile = DEFAULT_TOL) -> ValidationReport:
    """Check the standing inclusions and scalar ranges of a plant model.

    Verified: 0 interior to S, X, U and 0 inside D, W, V; S inside X with
    positive margin; V inside eps_p*S and -V inside eps_m*S; the inscribed
    ball radius of S at least delta; A*S + W + D inside X (by support
    additivity); and 0 < eps_p, eps_m, eps_p + eps_m < eps_s < 1.

    Violations are reported with their margins, never raised.
    """
    checks: list[ValidationCheck] = []
    notes: list[str] = []

    for name in ("S", "X", "U"):
        P: HPolytope = getattr(m, name)
        r, _ = pt.chebyshev_radius(P, centered=True)
        checks.append(ValidationCheck(
            f"0 interior to {name}", r > 0.0, -r,
            f"origin-centered inscribed radius {r:.6g}"))
    for name in ("D", "W", "V"):
        P = getattr(m, name)
        slack = float(np.max(P.H @ np.zeros(m.n) - P.b))
        checks.append(ValidationCheck(
            f"0 in {name}", slack <= tol.set_containment, slack,
            "membership of the origin"))
        if not P.is_full_dimensional():
            notes.append(f"{name} is lower-dimensional (degenerate "
                         "disturbance set); handled via its vertex form")

    sx = pt.contains_polytope(m.S, m.X, tol.set_containment)
    checks.append(ValidationCheck("S strictly inside X",
                                  sx.holds and sx.worst_slack < 0,
                                  sx.worst_slack,
                                  f"worst facet slack {sx.worst_slack:.6g}"))

    lam_p = pt.minimal_scaling(m.V, m.S.normalized(), tol)
    checks.append(ValidationCheck(
        "V inside eps_p*S", lam_p <= m.eps_p + tol.set_containment,
        lam_p - m.eps_p, f"minimal scaling {lam_p:.6g} vs eps_p {m.eps_p}"))
    lam_m = pt.minimal_scaling(m.V.reflected(), m.S.normalized(), tol)
    checks.append(ValidationCheck(
        "-V inside eps_m*S", lam_m <= m.eps_m + tol.set_containment,
        lam_m - m.eps_m, f"minimal scaling {lam_m:.6g} vs eps_m {m.eps_m}"))

    rS, _ = pt.chebyshev_radius(m.S, centered=True)
    delta = m.delta if m.delta is not None else rS
    checks.append(ValidationCheck(
        "ball of radius delta inside S", delta <= rS + tol.set_containment,
        delta - rS, f"delta {delta:.6g}, inscribed radius {rS:.6g}"))

    # A*S + W + D inside X, facet-wise by support additivity
    worst = -np.inf
    for i in range(m.X.num_facets):
        h = m.X.H[i]
        lhs = (pt.support(m.S, m.A.T @ h, tol) + pt.support(m.W, h, tol)
               + pt.support(m.D, h, tol))
        worst = max(worst, lhs - m.X.b[i])
    checks.append(ValidationCheck(
        "A*S + W + D inside X", worst <= tol.set_containment, float(worst),
        f"worst facet slack {worst:.6g}"))

    eps_ok = (0 < m.eps_p < 1 and 0 < m.eps_m < 1
              and m.eps_p + m.eps_m < m.eps_s < 1)
    checks.append(ValidationCheck(
        "eps_p + eps_m < eps_s < 1", eps_ok,
        max(m.eps_p + m.eps_m - m.eps_s, m.eps_s - 1.0),
        f"eps_p={m.eps_p}, eps_m={m.eps_m}, eps_s={m.eps_s}"))

    return ValidationReport(tuple(checks), tuple(notes))


@dataclass(frozen=True)
class DerivedSets:
    """Sets derived from a validated plant model.

    S_plus = A*S + W + D is where one open-loop step from S can land;
    S_c = conv(S, S_plus) collects every state from which the controller can
    be switched on; N = (-V) + V absorbs measurement noise both ways;
    Z = W x V stacks the exogenous signals of the closed loop.
    """

    S_plus: VPolytope
    S_c: VPolytope
    N: VPolytope
    Z: VPolytope
    S_monitor: HPolytope  # S shrunk by (-V): robust membership proxy for S
    omega: np.ndarray = field(repr=False)  # S_c vertices, canonical order

    @property
    def n_c(self) -> int:
        return self.omega.shape[0]


def derive_sets(m: PlantModel, tol: ToleranceProfile = DEFAULT_TOL) -> DerivedSets:
    """Compute the derived sets; requires a model that passes validate()."""
    AS = pt.affine_image(m.S, m.A, tol)
    S_plus = pt.minkowski_sum(pt.minkowski_sum(AS, m.W, tol), m.D, tol)
    S_c = pt.convex_hull_union(m.S, S_plus, tol)
    N = pt.minkowski_sum(m.V.reflected(), m.V, tol)
    Wv = pt.vertices_of(m.W, tol)
    Vv = pt.vertices_of(m.V, tol)
    Zverts = np.array([np.concatenate([w, v]) for w in Wv for v in Vv])
    Z = VPolytope(pt._prune_to_hull(Zverts, tol), name="Z")
    S_monitor = pt.pontryagin_difference(m.S, m.V.reflected(), tol)
    return DerivedSets(S_plus=S_plus, S_c=S_c, N=N, Z=Z, S_monitor=S_monitor,
                       omega=S_c.V)


@dataclass(frozen=True)
class HZOuterBox:
    """Symmetric outer box for Z: ``Z subseteq {z : -1 <= H_Z z <= 1}``."""

    H_Z: np.ndarray
    symmetrized: bool  # True if Z itself was not symmetric about 0

    @property
    def rows(self) -> int:
        return self.H_Z.shape[0]


def outer_box_Z(derived: DerivedSets, tol: ToleranceProfile = DEFAULT_TOL
                ) -> HZOuterBox:
    """Tightest axis-scaled symmetric box containing Z.

    Coordinates where Z is flat get unit rows (any scaling contains them),
    keeping H_Z full column rank.  If Z is asymmetric the symmetrized hull
    conv(Z, -Z) is what ends up inside the box; the flag reports that.
    """
    V = derived.Z.V
    hi = V.max(axis=0)
    lo = V.min(axis=0)
    r = np.maximum(np.abs(hi), np.abs(lo))
    scale = np.where(r > tol.dedup, 1.0 / np.where(r > tol.dedup, r, 1.0), 1.0)
    H_Z = np.diag(scale)
    symmetrized = bool(np.any(np.abs(hi + lo) > tol.dedup * (1.0 + r)))
    # containment is exact by construction; verify anyway
    if np.any(np.abs(V @ H_Z.T) > 1.0 + tol.set_containment):
        raise AssertionError("outer box construction failed to contain Z")
    return HZOuterBox(H_Z=H_Z, symmetrized=symmetrized)


# ---------------------------------------------------------------------------
# JSON model files


def model_to_json(m: PlantModel) -> dict:
    return {
        "A": m.A.tolist(),
        "B": m.B.tolist(),
        "Ts": m.Ts,
        "sets": {name: pt.polytope_to_json(getattr(m, name))
                 for name in ("S", "X", "U", "D", "W", "V")},
        "params": {"eps_p": m.eps_p, "eps_m": m.eps_m, "eps_s": m.eps_s,
                   "delta": m.delta},
    }


def model_from_json(obj: dict) -> PlantModel:
    sets = {}
    for name in ("S", "X", "U", "D", "W", "V"):
        P = pt.polytope_from_json(obj["sets"][name], name=name)
        if not isinstance(P, HPolytope):
            raise ValueError(f"model set {name} must be in halfspace form")
        sets[name] = P
    params = obj["params"]
    return PlantModel(
        A=np.array(obj["A"], dtype=float),
        B=np.array(obj["B"], dtype=float),
        eps_p=float(params["eps_p"]), eps_m=float(params["eps_m"]),
        eps_s=float(params["eps_s"]),
        delta=None if params.get("delta") is None else float(params["delta"]),
        Ts=None if obj.get("Ts") is None else float(obj["Ts"]),
        **sets)


def load_model(path) -> PlantModel:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def save_model(m: PlantModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(m), fh, indent=2)
