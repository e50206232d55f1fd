"""Online switching controller: open loop inside the hands-off region,
dynamic feedback outside it, with hysteresis between activation and
deactivation thresholds.

Because only the noisy measurement y = x + v is available, membership of x
in a set P is decided through the robust monitor P - (-V): y inside the
monitor guarantees x inside P.  Activation is triggered by leaving the
S-monitor; deactivation requires entering the tighter inner-set monitor, so
the band between the two suppresses rapid open/closed-loop chattering.

Per-step work is a fixed number of matrix-vector products and comparisons;
no optimization problem is ever solved in the loop.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import polytope as pt
from .conditions import InvariantSets, build_inner_set
from .controller import ControllerRealization
from .model import DerivedSets, PlantModel
from .polytope import HPolytope
from .tolerances import DEFAULT_TOL, ToleranceProfile


@dataclass(frozen=True)
class Monitors:
    """Precomputed halfspace forms of S - (-V) and Omega_I - (-V)."""

    S_shrunk: HPolytope
    inner_shrunk: HPolytope


def build_monitors(m: PlantModel, derived: DerivedSets, sets: InvariantSets,
                   tol: ToleranceProfile = DEFAULT_TOL) -> Monitors:
    """Shrink S and Omega_I by (-V), offline.

    The explicit inner H-rep is used when available; otherwise the implicit
    projection-plus-sum form is converted to a halfspace form once, here,
    so that the runtime loop only ever evaluates matrix-vector products.
    """
    S_shrunk = pt.pontryagin_difference(m.S, m.V.reflected(), tol)
    if sets.explicit_inner is not None:
        inner_h = sets.explicit_inner
    else:
        inner_h = build_inner_set(sets.lifted_inner, derived.N, m.n,
                                  tol).as_hpolytope(tol)
    inner_shrunk = pt.pontryagin_difference(inner_h, m.V.reflected(), tol)
    for name, P in (("S monitor", S_shrunk), ("inner monitor", inner_shrunk)):
        r, _ = pt.chebyshev_radius(P, centered=True)
        if r < 0:
            raise ValueError(f"{name} is empty: measurement noise too large "
                             "for the monitored set")
    return Monitors(S_shrunk=S_shrunk, inner_shrunk=inner_shrunk)


@dataclass(frozen=True)
class MembershipDiagnostics:
    in_S_monitor: bool
    in_inner_monitor: bool
    S_slacks: np.ndarray
    inner_slacks: np.ndarray

    def to_dict(self) -> dict:
        return {"in_S_monitor": self.in_S_monitor,
                "in_inner_monitor": self.in_inner_monitor,
                "S_worst_slack": float(self.S_slacks.min()),
                "inner_worst_slack": float(self.inner_slacks.min())}


@dataclass(frozen=True)
class StepDecision:
    sigma: int
    u: np.ndarray
    event: str  # "none", "activated" or "deactivated"
    diagnostics: MembershipDiagnostics
    step_time_us: float

    def __post_init__(self):
        if self.sigma == 0 and np.any(self.u != 0.0):
            raise AssertionError("open-loop decisions must carry u = 0")


@dataclass(frozen=True)
class RuntimeState:
    phase: str  # block that produced the latest decision: init/monitoring/control
    sigma_prev: int
    x_K: np.ndarray
    k: int
    last_y: Optional[np.ndarray] = None


class SwitchingController:
    """State machine producing (sigma[k], u[k]) from measurements.

    One instance per plant; steps are strictly ordered (single writer), and
    distinct plants can run their own instances concurrently.
    """

    def __init__(self, K: ControllerRealization, monitors: Monitors):
        self.K = K
        self.monitors = monitors

    # -- membership helpers (plain <=: closed sets, deterministic boundaries)

    def _membership(self, y: np.ndarray) -> MembershipDiagnostics:
        s_slack = self.monitors.S_shrunk.facet_slacks(y)
        i_slack = self.monitors.inner_shrunk.facet_slacks(y)
        return MembershipDiagnostics(
            in_S_monitor=bool(np.all(s_slack >= 0.0)),
            in_inner_monitor=bool(np.all(i_slack >= 0.0)),
            S_slacks=s_slack, inner_slacks=i_slack)

    def _control(self, y: np.ndarray, x_K: np.ndarray
                 ) -> tuple[np.ndarray, np.ndarray]:
        u = self.K.C_K @ x_K + self.K.D_K @ y
        x_K_next = self.K.A_K @ x_K + self.K.B_K @ y
        return u, x_K_next

    @staticmethod
    def _check_measurement(y) -> np.ndarray:
        y = np.asarray(y, dtype=float).ravel()
        if not np.all(np.isfinite(y)):
            raise ValueError("non-finite measurement")
        return y

    def init(self, y0) -> tuple[RuntimeState, StepDecision]:
        """Process the first measurement.

        Inside the S-monitor: stay hands-off.  Outside: reset the controller
        state to zero and apply the control law in this same step.
        """
        t0 = time.perf_counter_ns()
        y0 = self._check_measurement(y0)
        diag = self._membership(y0)
        x_K = np.zeros(self.K.n_K)
        if diag.in_S_monitor:
            sigma, u, event, phase = 0, np.zeros(self.K.m), "none", "init"
        else:
            u, x_K = self._control(y0, x_K)
            sigma, event, phase = 1, "activated", "control"
        state = RuntimeState(phase=phase, sigma_prev=sigma, x_K=x_K, k=1,
                             last_y=y0)
        dt = (time.perf_counter_ns() - t0) / 1000.0
        return state, StepDecision(sigma, u, event, diag, dt)

    def step(self, state: RuntimeState, y) -> tuple[RuntimeState, StepDecision]:
        """Process one measurement after initialization.

        Branches: inside the S-monitor the controller keeps running only if
        it was already on and the inner monitor has not been reached yet
        (hysteresis); otherwise the loop opens.  Outside the S-monitor the
        controller runs, with its state reset to zero on a fresh activation
        and kept across consecutive active steps.
        """
        t0 = time.perf_counter_ns()
        y = self._check_measurement(y)
        diag = self._membership(y)
        x_K = state.x_K
        if diag.in_S_monitor:
            if state.sigma_prev == 1 and not diag.in_inner_monitor:
                u, x_K = self._control(y, x_K)
                sigma, event, phase = 1, "none", "control"
            else:
                sigma, u, phase = 0, np.zeros(self.K.m), "monitoring"
                event = "deactivated" if state.sigma_prev == 1 else "none"
        else:
            if state.sigma_prev == 0:
                x_K = np.zeros(self.K.n_K)
            u, x_K = self._control(y, x_K)
            sigma, phase = 1, "control"
            event = "activated" if state.sigma_prev == 0 else "none"
        new_state = RuntimeState(phase=phase, sigma_prev=sigma, x_K=x_K,
                                 k=state.k + 1, last_y=y)
        dt = (time.perf_counter_ns() - t0) / 1000.0
        return new_state, StepDecision(sigma, u, event, diag, dt)

    def membership_mode(self, state: RuntimeState, y=None) -> dict:
        """Monitor memberships (with facet slacks) for trace annotation."""
        if y is None:
            y = state.last_y
        if y is None:
            raise ValueError("no measurement seen yet and none supplied")
        return self._membership(self._check_measurement(y)).to_dict()


def build_controller(m: PlantModel, derived: DerivedSets,
                     K: ControllerRealization, sets: InvariantSets,
                     tol: ToleranceProfile = DEFAULT_TOL) -> SwitchingController:
    """Convenience: monitors + switching controller in one call."""
    return SwitchingController(K, build_monitors(m, derived, sets, tol))
