"""Dynamic output-feedback controllers and their closed loops.

The controller is ``x_K[k+1] = A_K x_K + B_K y``, ``u = C_K x_K + D_K y``.
Interconnecting it with the plant over the lifted state xi = (x, x_K) and
the exogenous vector z = (w, v) gives

    xi[k+1] = A_CL xi[k] + B_CL z[k],    u[k] = C_CL xi[k] + D_CL z[k]

with A_CL = [[A + B D_K, B C_K], [B_K, A_K]], B_CL = [[I, B D_K], [0, B_K]],
C_CL = [D_K, C_K] and D_CL = [0, D_K].  All norms are induced 2-norms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .backend import spectral_radius
from .model import PlantModel
from .tolerances import DEFAULT_TOL


@dataclass(frozen=True)
class ControllerRealization:
    A_K: np.ndarray
    B_K: np.ndarray
    C_K: np.ndarray
    D_K: np.ndarray

    def __post_init__(self):
        A_K = np.asarray(self.A_K, dtype=float)
        A_K = np.zeros((0, 0)) if A_K.size == 0 else np.atleast_2d(A_K)
        if A_K.shape[0] != A_K.shape[1]:
            raise ValueError("A_K must be square")
        nK = A_K.shape[0]
        D_K = np.atleast_2d(np.asarray(self.D_K, dtype=float))
        m, n = D_K.shape
        B_K = np.asarray(self.B_K, dtype=float).reshape(nK, n) \
            if np.size(self.B_K) else np.zeros((nK, n))
        C_K = np.asarray(self.C_K, dtype=float).reshape(m, nK) \
            if np.size(self.C_K) else np.zeros((m, nK))
        for M in (A_K, B_K, C_K, D_K):
            if not np.all(np.isfinite(M)):
                raise ValueError("controller matrices must be finite")
        for name, M in (("A_K", A_K), ("B_K", B_K), ("C_K", C_K), ("D_K", D_K)):
            M.flags.writeable = False
            object.__setattr__(self, name, M)

    @property
    def n_K(self) -> int:
        return self.A_K.shape[0]

    @property
    def n(self) -> int:
        return self.D_K.shape[1]

    @property
    def m(self) -> int:
        return self.D_K.shape[0]

    @classmethod
    def zero(cls, n: int, m: int, n_K: int = 0) -> "ControllerRealization":
        return cls(np.zeros((n_K, n_K)), np.zeros((n_K, n)),
                   np.zeros((m, n_K)), np.zeros((m, n)))

    @classmethod
    def static(cls, D_K) -> "ControllerRealization":
        D_K = np.atleast_2d(np.asarray(D_K, dtype=float))
        m, n = D_K.shape
        return cls(np.zeros((0, 0)), np.zeros((0, n)), np.zeros((m, 0)), D_K)

    def to_json(self) -> dict:
        return {"A_K": self.A_K.tolist(), "B_K": self.B_K.tolist(),
                "C_K": self.C_K.tolist(), "D_K": self.D_K.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "ControllerRealization":
        return cls(np.array(obj["A_K"], dtype=float),
                   np.array(obj["B_K"], dtype=float),
                   np.array(obj["C_K"], dtype=float),
                   np.array(obj["D_K"], dtype=float))

    @classmethod
    def load(cls, path) -> "ControllerRealization":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


@dataclass(frozen=True)
class ClosedLoop:
    A_CL: np.ndarray
    B_CL: np.ndarray
    C_CL: np.ndarray
    D_CL: np.ndarray
    n: int
    n_K: int

    @property
    def dim(self) -> int:
        return self.n + self.n_K


def assemble_closed_loop(m: PlantModel, K: ControllerRealization) -> ClosedLoop:
    """Form the lifted closed-loop matrices from plant and controller."""
    if K.n != m.n or K.m != m.m:
        raise ValueError(f"controller sized for (n={K.n}, m={K.m}), "
                         f"plant has (n={m.n}, m={m.m})")
    n, nK = m.n, K.n_K
    A_CL = np.block([[m.A + m.B @ K.D_K, m.B @ K.C_K],
                     [K.B_K, K.A_K]])
    B_CL = np.block([[np.eye(n), m.B @ K.D_K],
                     [np.zeros((nK, n)), K.B_K]])
    C_CL = np.block([[K.D_K, K.C_K]])
    D_CL = np.block([[np.zeros((K.m, n)), K.D_K]])
    return ClosedLoop(A_CL, B_CL, C_CL, D_CL, n=n, n_K=nK)


def markov_parameters(K: ControllerRealization, count: int) -> list[np.ndarray]:
    """First `count` impulse-response matrices [D_K, C_K B_K, C_K A_K B_K, ...].

    These are invariant across all realizations of the same transfer
    function, which is what lets a minimal realization stand in for the
    original controller whenever the state starts at zero.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    out = [K.D_K.copy()]
    if count == 1:
        return out
    M = K.B_K.copy()
    for _ in range(count - 1):
        out.append(K.C_K @ M)
        M = K.A_K @ M
    return out


def _invariant_basis(A: np.ndarray, B: np.ndarray, rel_tol: float) -> np.ndarray:
    """Orthonormal basis of the smallest A-invariant subspace containing im B."""
    nK = A.shape[0]
    if nK == 0 or B.size == 0:
        return np.zeros((nK, 0))

    def orth(M):
        if M.shape[1] == 0:
            return M
        U, s, _ = np.linalg.svd(M, full_matrices=False)
        r = int(np.sum(s > rel_tol * max(s[0] if s.size else 0.0, 1.0)))
        return U[:, :r]

    basis = orth(B)
    while basis.shape[1] < nK:
        grown = orth(np.hstack([basis, A @ basis]))
        if grown.shape[1] == basis.shape[1]:
            break
        basis = grown
    return basis


def minimal_realization(K: ControllerRealization,
                        rank_tol: float = DEFAULT_TOL.rank_rel
                        ) -> ControllerRealization:
    """Reduce to a minimal realization with the same Markov parameters.

    Two-sided reduction: restrict to the reachable subspace, then to the
    observable one, each found by SVD-orthonormalized subspace iteration
    with the given relative rank tolerance.  Deterministic; an already
    minimal input comes back at the same order.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    A, B, C = K.A_K, K.B_K, K.C_K
    Q = _invariant_basis(A, B, rank_tol)
    A, B, C = Q.T @ A @ Q, Q.T @ B, C @ Q
    Qo = _invariant_basis(A.T, C.T, rank_tol)
    A, B, C = Qo.T @ A @ Qo, Qo.T @ B, C @ Qo
    return ControllerRealization(A, B, C, K.D_K)


def is_schur(CL: ClosedLoop, tol: float = DEFAULT_TOL.schur) -> tuple[bool, float]:
    """Whether the closed-loop state matrix has all eigenvalues inside the
    unit circle (with margin tol); also returns the spectral radius."""
    rho = spectral_radius(CL.A_CL)
    return rho < 1.0 - tol, rho
