"""Closed-loop scenario execution, disturbance generation and timing stats.

The simulator owns the true plant state, so the guarantees are checked on x
itself (the switching controller only ever sees y = x + v).  Per step k:
draw v, form y, let the switching logic pick (sigma, u), draw w, and
propagate x+ = A x + sigma B u + (1 - sigma) d + w.  The uncontrolled input
d is gated by sigma: its source is consulted only on open-loop steps.
"""

from __future__ import annotations

import csv
import io
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import polytope as pt
from .conditions import GuaranteeReport, InvariantSets
from .controller import ControllerRealization
from .model import DerivedSets, PlantModel
from .runtime import SwitchingController, build_controller
from .tolerances import DEFAULT_TOL, ToleranceProfile


@dataclass(frozen=True)
class SourceSpec:
    """How one exogenous signal is produced: uniform-in-set, scripted or zero."""

    kind: str  # "uniform" | "scripted" | "zero"
    sequence: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("uniform", "scripted", "zero"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if (self.kind == "scripted") != (self.sequence is not None):
            raise ValueError("scripted sources need a sequence; others must not have one")
        if self.sequence is not None:
            seq = np.atleast_2d(np.asarray(self.sequence, dtype=float))
            if not np.all(np.isfinite(seq)):
                raise ValueError("scripted sequence must be finite")
            object.__setattr__(self, "sequence", seq)


ZERO = SourceSpec("zero")
UNIFORM = SourceSpec("uniform")


def scripted(sequence) -> SourceSpec:
    return SourceSpec("scripted", np.asarray(sequence, dtype=float))


class _Drawer:
    """Stateful sampler for one source; counts how often it is consulted."""

    def __init__(self, spec: SourceSpec, P, dim: int,
                 rng: Optional[np.random.Generator],
                 tol: ToleranceProfile):
        self.spec = spec
        self.dim = dim
        self.rng = rng
        self.draws = 0
        self.sampler = (pt.UniformSampler(P, tol=tol)
                        if spec.kind == "uniform" else None)

    def draw(self, k: int) -> np.ndarray:
        self.draws += 1
        if self.spec.kind == "zero":
            return np.zeros(self.dim)
        if self.spec.kind == "scripted":
            return self.spec.sequence[k]
        return self.sampler.draw(self.rng)


@dataclass(frozen=True)
class Scenario:
    """One simulation episode: horizon, initial state, sources, seed."""

    horizon: int
    x0: np.ndarray
    w: SourceSpec = ZERO
    v: SourceSpec = ZERO
    d: SourceSpec = ZERO
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).ravel())


def uniform_scenario(derived: DerivedSets, horizon: int, seed: int,
                     name: str = "") -> Scenario:
    """Scenario with x0 drawn in S_c and all three sources uniform."""
    rng = np.random.default_rng(seed)
    x0 = pt.sample_uniform(derived.S_c, rng)
    return Scenario(horizon=horizon, x0=x0, w=UNIFORM, v=UNIFORM, d=UNIFORM,
                    seed=seed, name=name)


@dataclass
class Trace:
    """Complete record of one episode plus guarantee violation counters."""

    k: np.ndarray
    x: np.ndarray
    y: np.ndarray
    sigma: np.ndarray
    u: np.ndarray
    d: np.ndarray
    w: np.ndarray
    v: np.ndarray
    event: list[str]
    S_slack: np.ndarray
    inner_slack: np.ndarray
    step_time_us: np.ndarray
    violations: dict[str, int]
    draws: dict[str, int]
    aborted_at: Optional[int] = None
    name: str = ""

    @property
    def horizon(self) -> int:
        return self.k.size

    def episode_lengths(self) -> list[int]:
        """Lengths of maximal runs of sigma = 1."""
        runs, count = [], 0
        for s in self.sigma:
            if s == 1:
                count += 1
            elif count:
                runs.append(count)
                count = 0
        if count:
            runs.append(count)
        return runs

    def summary(self) -> dict:
        stats = timing_stats([self])
        return {
            "horizon": int(self.horizon),
            "activations": int(sum(e == "activated" for e in self.event)),
            "deactivations": int(sum(e == "deactivated" for e in self.event)),
            "episode_lengths": self.episode_lengths(),
            "open_loop_steps": int(np.sum(self.sigma == 0)),
            "violations": dict(self.violations),
            "timing_ms": stats.to_dict(),
            "draws": dict(self.draws),
        }

    def to_csv(self, path=None) -> Optional[str]:
        """Write the per-step rows as CSV; returns the text if path is None."""
        buf = io.StringIO()
        wtr = csv.writer(buf)
        n, m = self.x.shape[1], self.u.shape[1]
        hdr = (["k"] + [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(n)]
               + ["sigma"] + [f"u{i}" for i in range(m)]
               + [f"d{i}" for i in range(n)] + [f"w{i}" for i in range(n)]
               + [f"v{i}" for i in range(n)]
               + ["event", "S_slack", "inner_slack", "step_time_us"])
        wtr.writerow(hdr)
        for i in range(self.horizon):
            row = ([int(self.k[i])] + list(self.x[i]) + list(self.y[i])
                   + [int(self.sigma[i])] + list(self.u[i]) + list(self.d[i])
                   + list(self.w[i]) + list(self.v[i])
                   + [self.event[i], float(self.S_slack[i]),
                      float(self.inner_slack[i]), float(self.step_time_us[i])])
            wtr.writerow(row)
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None


def _validate_scripted(spec: SourceSpec, P, horizon: int, label: str,
                       tol: ToleranceProfile) -> None:
    if spec.kind != "scripted":
        return
    seq = spec.sequence
    if seq.shape[0] < horizon:
        raise ValueError(f"{label}: scripted sequence shorter than horizon "
                         f"({seq.shape[0]} < {horizon})")
    for i, val in enumerate(seq[:horizon]):
        if not pt.contains_point(P, val, tol.set_containment):
            raise ValueError(f"{label}: scripted value at index {i} "
                             f"outside its set: {val}")


def run(m: PlantModel, derived: DerivedSets, K: ControllerRealization,
        sets: InvariantSets, scenario: Scenario, *,
        report: Optional[GuaranteeReport] = None,
        allow_uncertified: bool = False,
        controller: Optional[SwitchingController] = None,
        T_max: Optional[int] = None,
        tol: ToleranceProfile = DEFAULT_TOL) -> Trace:
    """Execute one scenario and record the full trace.

    A certified configuration (an all-true GuaranteeReport) is required
    unless `allow_uncertified` is set.  `controller` may be passed to reuse
    precomputed monitors across scenario batches.
    """
    if report is not None and not report.all_ok:
        raise ValueError(f"guarantee report has failures: {report.failed()}")
    if report is None and not allow_uncertified:
        raise ValueError("pass a certified GuaranteeReport or set "
                         "allow_uncertified=True")
    if not pt.contains_point(derived.S_c, scenario.x0, tol.set_containment):
        raise ValueError(f"x0 {scenario.x0} is outside S_c")
    for spec, P, label in ((scenario.w, m.W, "w"), (scenario.v, m.V, "v"),
                           (scenario.d, m.D, "d")):
        _validate_scripted(spec, P, scenario.horizon, label, tol)

    if controller is None:
        controller = build_controller(m, derived, K, sets, tol)
    rng = np.random.default_rng(scenario.seed)
    rng_w, rng_v, rng_d = rng.spawn(3)
    src_w = _Drawer(scenario.w, m.W, m.n, rng_w, tol)
    src_v = _Drawer(scenario.v, m.V, m.n, rng_v, tol)
    src_d = _Drawer(scenario.d, m.D, m.n, rng_d, tol)

    H = scenario.horizon
    n, mm = m.n, m.m
    xs = np.zeros((H, n)); ys = np.zeros((H, n)); us = np.zeros((H, mm))
    ds = np.zeros((H, n)); ws = np.zeros((H, n)); vs = np.zeros((H, n))
    sig = np.zeros(H, dtype=int); times = np.zeros(H)
    s_slk = np.zeros(H); i_slk = np.zeros(H)
    events: list[str] = []
    violations = {"x_outside_X": 0, "u_outside_U": 0,
                  "open_loop_x_outside_S": 0, "open_loop_u_nonzero": 0,
                  "episode_exceeds_T_max": 0}

    x = scenario.x0.copy()
    state = None
    aborted = None
    episode = 0
    for k in range(H):
        if not np.all(np.isfinite(x)):
            aborted = k
            break
        v = src_v.draw(k)
        y = x + v
        if k == 0:
            state, dec = controller.init(y)
        else:
            state, dec = controller.step(state, y)
        w = src_w.draw(k)
        d = src_d.draw(k) if dec.sigma == 0 else np.zeros(n)

        xs[k], ys[k], us[k] = x, y, dec.u
        ds[k], ws[k], vs[k] = d, w, v
        sig[k] = dec.sigma
        times[k] = dec.step_time_us
        s_slk[k] = dec.diagnostics.S_slacks.min()
        i_slk[k] = dec.diagnostics.inner_slacks.min()
        events.append(dec.event)

        if not m.X.contains(x, tol.set_containment):
            violations["x_outside_X"] += 1
        if not m.U.contains(dec.u, tol.set_containment):
            violations["u_outside_U"] += 1
        if dec.sigma == 0:
            if not m.S.contains(x, tol.set_containment):
                violations["open_loop_x_outside_S"] += 1
            if np.any(dec.u != 0.0):
                violations["open_loop_u_nonzero"] += 1
            episode = 0
        else:
            episode += 1
            if T_max is not None and episode > T_max:
                violations["episode_exceeds_T_max"] += 1

        x = m.A @ x + dec.sigma * (m.B @ dec.u) + (1 - dec.sigma) * d + w

    if aborted is not None:
        raise FloatingPointError(f"state became non-finite at step {aborted}")
    return Trace(k=np.arange(H), x=xs, y=ys, sigma=sig, u=us, d=ds, w=ws,
                 v=vs, event=events, S_slack=s_slk, inner_slack=i_slk,
                 step_time_us=times, violations=violations,
                 draws={"w": src_w.draws, "v": src_v.draws, "d": src_d.draws},
                 name=scenario.name)


@dataclass(frozen=True)
class TimingStats:
    """Five-number step-duration summary in milliseconds."""

    min: float
    max: float
    mean: float
    median: float
    mode: float
    samples: int

    def to_dict(self) -> dict:
        return {"min": self.min, "max": self.max, "mean": self.mean,
                "median": self.median, "mode": self.mode,
                "samples": self.samples}

    def table(self) -> str:
        hdr = f"{'Computation time':<22}{'min':>9}{'max':>9}{'mean':>9}{'median':>9}{'mode':>9}"
        row = (f"{'Duration (milliseconds)':<22}{self.min:>9.3f}{self.max:>9.3f}"
               f"{self.mean:>9.3f}{self.median:>9.3f}{self.mode:>9.3f}")
        return hdr + "\n" + row


def timing_stats(traces) -> TimingStats:
    """Aggregate step-time statistics over one or more traces.

    The mode is computed over 1 microsecond bins; ties resolve to the
    smallest bin for determinism.
    """
    all_us = np.concatenate([t.step_time_us for t in traces]) if traces else \
        np.array([])
    if all_us.size == 0:
        raise ValueError("no timing samples captured")
    bins = np.round(all_us).astype(int)
    counts = Counter(bins)
    best = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0][0]
    to_ms = 1e-3
    return TimingStats(
        min=float(all_us.min()) * to_ms,
        max=float(all_us.max()) * to_ms,
        mean=float(all_us.mean()) * to_ms,
        median=float(np.median(all_us)) * to_ms,
        mode=float(best) * to_ms,
        samples=int(all_us.size))


def piecewise_sequence(horizon: int, dim: int, segments, default=None
                       ) -> np.ndarray:
    """Piecewise-constant sequence from [{"start", "stop", "value"}, ...]."""
    base = np.zeros(dim) if default is None else \
        np.asarray(default, dtype=float).ravel()
    seq = np.tile(base, (horizon, 1))
    for i, seg in enumerate(segments):
        start, stop = int(seg["start"]), int(seg["stop"])
        if not 0 <= start < stop <= horizon:
            raise ValueError(f"segment {i}: bad range [{start}, {stop})")
        seq[start:stop] = np.asarray(seg["value"], dtype=float).ravel()
    return seq


def scripted_scenario_builder(cfg: dict, m: PlantModel,
                              tol: ToleranceProfile = DEFAULT_TOL) -> Scenario:
    """Build a Scenario from a declarative dict.

    Shape: {"horizon": int, "x0": [...], "seed": int, and for each of
    "w", "v", "d" either {"kind": "zero"}, {"kind": "uniform"} or
    {"kind": "scripted", "segments": [...], "default": [...]}}.
    Scripted values are validated against their sets and rejected with the
    offending index.
    """
    horizon = int(cfg["horizon"])
    specs = {}
    for label, P in (("w", m.W), ("v", m.V), ("d", m.D)):
        sub = cfg.get(label, {"kind": "zero"})
        kind = sub.get("kind", "zero")
        if kind == "scripted":
            seq = piecewise_sequence(horizon, m.n, sub.get("segments", ()),
                                     sub.get("default"))
            spec = scripted(seq)
            _validate_scripted(spec, P, horizon, label, tol)
            specs[label] = spec
        elif kind in ("zero", "uniform"):
            specs[label] = SourceSpec(kind)
        else:
            raise ValueError(f"{label}: unknown source kind {kind!r}")
    return Scenario(horizon=horizon,
                    x0=np.asarray(cfg["x0"], dtype=float),
                    w=specs["w"], v=specs["v"], d=specs["d"],
                    seed=int(cfg.get("seed", 0)),
                    name=str(cfg.get("name", "")))
