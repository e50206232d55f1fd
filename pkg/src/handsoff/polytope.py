"""Polytope algebra over halfspace and vertex representations.

Covers every set operation the controller pipeline needs: support functions,
affine images, Minkowski sums, Pontryagin differences, convex hulls of
unions, containment with slack reporting, minimal scalings, Chebyshev radii,
exact low-dimensional vertex enumeration and uniform sampling.

Conventions: the canonical halfspace form is ``{x : H x <= b}`` with ``b``
normalized to the all-ones vector whenever the origin is interior; vertex
representations are computed on demand and cached; all values are immutable
after construction and safe to share between threads.
"""

from __future__ import annotations

import itertools
import threading
from typing import Optional, Union

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .backend import LinearProgram, Status, solve_lp
from .tolerances import DEFAULT_TOL, ToleranceProfile


class PolytopeError(Exception):
    pass


class UnboundedDirectionError(PolytopeError):
    """The set is unbounded in the queried direction."""


class DegenerateSetError(PolytopeError):
    """The set is lower-dimensional where a full-dimensional one is required."""


class SamplingBudgetError(PolytopeError):
    """Rejection sampling exhausted its budget."""


def _as_points(V) -> np.ndarray:
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.size == 0 or not np.all(np.isfinite(V)):
        raise ValueError("vertex array must be nonempty and finite")
    return V


def _lexsorted(V: np.ndarray) -> np.ndarray:
    # canonical ordering: first coordinate primary
    order = np.lexsort(V.T[::-1])
    return V[order]


def _dedupe_points(V: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for v in V:
        if not any(np.linalg.norm(v - w, np.inf) <= tol for w in kept):
            kept.append(v)
    return np.array(kept)


class HPolytope:
    """Convex polytope ``{x in R^n : H x <= b}``.

    Parameters
    ----------
    H : (k, n) array
        Facet normals, one per row; rows must be nonzero.
    b : (k,) array
        Right-hand sides.
    name : str
        Optional label used in error messages.
    """

    def __init__(self, H, b, name: str = ""):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if H.shape[0] != b.size:
            raise ValueError("H and b must have matching row counts")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(b))):
            raise ValueError("H and b must be finite")
        norms = np.linalg.norm(H, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("every row of H must be nonzero")
        self.H = H
        self.b = b
        self.name = name
        self.H.flags.writeable = False
        self.b.flags.writeable = False
        self._lock = threading.Lock()
        self._vrep: Optional[VPolytope] = None
        self._bounded: Optional[bool] = None

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    @property
    def num_facets(self) -> int:
        return self.H.shape[0]

    @classmethod
    def from_box(cls, lower, upper, name: str = "") -> "HPolytope":
        """Axis-aligned box ``{x : lower <= x <= upper}``."""
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        if lower.size != upper.size or np.any(lower > upper):
            raise ValueError("invalid box bounds")
        n = lower.size
        I = np.eye(n)
        return cls(np.vstack([I, -I]), np.concatenate([upper, -lower]), name=name)

    @classmethod
    def from_symmetric_rows(cls, H, name: str = "") -> "HPolytope":
        """Set ``{x : -1 <= H x <= 1}`` as a stacked halfspace form."""
        H = np.atleast_2d(np.asarray(H, dtype=float))
        k = H.shape[0]
        return cls(np.vstack([H, -H]), np.ones(2 * k), name=name)

    def normalized(self) -> "HPolytope":
        """Equivalent polytope with b = 1 (requires 0 strictly interior)."""
        if np.any(self.b <= 0):
            raise DegenerateSetError(
                f"cannot normalize {self.name or 'polytope'}: some b <= 0 "
                "(origin not strictly interior)")
        return HPolytope(self.H / self.b[:, None], np.ones(self.num_facets),
                         name=self.name)

    def contains(self, x, tol: float = DEFAULT_TOL.set_containment) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        return bool(np.all(self.H @ x <= self.b + tol))

    def facet_slacks(self, x) -> np.ndarray:
        """Per-facet slack ``b - Hx`` (negative entries mean violation)."""
        x = np.asarray(x, dtype=float).ravel()
        return self.b - self.H @ x

    def is_bounded(self) -> bool:
        with self._lock:
            if self._bounded is None:
                self._bounded = self._check_bounded()
            return self._bounded

    def _check_bounded(self) -> bool:
        for i in range(self.dim):
            e = np.zeros(self.dim)
            for sign in (1.0, -1.0):
                e[i] = sign
                st = solve_lp(LinearProgram(-e, A_ub=self.H, b_ub=self.b))
                if st.status is Status.UNBOUNDED:
                    return False
                if st.status is Status.INFEASIBLE:
                    return True  # empty sets are vacuously bounded
            e[i] = 0.0
        return True

    def is_full_dimensional(self, tol: float = 1e-9) -> bool:
        r, _ = chebyshev_radius(self, centered=False)
        return r > tol

    def is_proper(self, tol: float = 1e-9) -> bool:
        """Bounded with nonempty interior."""
        return self.is_full_dimensional(tol) and self.is_bounded()

    def reflected(self) -> "HPolytope":
        """The set ``-P``."""
        return HPolytope(-self.H, self.b, name=self.name)

    def scaled(self, c: float) -> "HPolytope":
        """The set ``c P`` for c > 0."""
        if c <= 0:
            raise ValueError("scaling factor must be positive")
        return HPolytope(self.H, c * self.b, name=self.name)

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"HPolytope{tag}({self.num_facets} facets, dim {self.dim})"


class VPolytope:
    """Convex polytope given as the hull of a finite vertex list."""

    def __init__(self, vertices, name: str = "", prune: bool = False,
                 tol: ToleranceProfile = DEFAULT_TOL):
        V = _as_points(vertices)
        if prune:
            V = _prune_to_hull(V, tol)
        self.V = _lexsorted(V)
        self.V.flags.writeable = False
        self.name = name

    @property
    def dim(self) -> int:
        return self.V.shape[1]

    @property
    def num_vertices(self) -> int:
        return self.V.shape[0]

    def reflected(self) -> "VPolytope":
        return VPolytope(-self.V, name=self.name)

    def scaled(self, c: float) -> "VPolytope":
        return VPolytope(c * self.V, name=self.name)

    def rank(self, rel_tol: float = DEFAULT_TOL.rank_rel) -> int:
        """Dimension of the affine hull of the vertices."""
        if self.num_vertices == 1:
            return 0
        C = self.V - self.V.mean(axis=0)
        s = np.linalg.svd(C, compute_uv=False)
        return int(np.sum(s > rel_tol * max(s[0], 1.0)))

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"VPolytope{tag}({self.num_vertices} vertices, dim {self.dim})"


class SymmetricBoxImage:
    """Set ``{xi : -1 <= Htilde xi <= 1}`` for square invertible ``Htilde``.

    Algebraically the image of the unit hypercube under ``Htilde^{-1}``,
    which makes supports, memberships and vertices available in closed form.
    """

    def __init__(self, Htilde, name: str = "", sing_tol: float = DEFAULT_TOL.sing):
        Ht = np.atleast_2d(np.asarray(Htilde, dtype=float))
        if Ht.shape[0] != Ht.shape[1]:
            raise ValueError("Htilde must be square")
        if not np.all(np.isfinite(Ht)):
            raise ValueError("Htilde must be finite")
        smin = float(np.linalg.svd(Ht, compute_uv=False)[-1])
        if smin <= sing_tol:
            raise DegenerateSetError(
                f"Htilde numerically singular (min singular value {smin:.3e})")
        self.Htilde = Ht
        self.Hinv = np.linalg.inv(Ht)
        self.name = name
        self.Htilde.flags.writeable = False
        self.Hinv.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.Htilde.shape[0]

    def contains(self, x, tol: float = DEFAULT_TOL.set_containment) -> bool:
        x = np.asarray(x, dtype=float).ravel()
        return bool(np.max(np.abs(self.Htilde @ x)) <= 1.0 + tol)

    def support(self, h) -> float:
        h = np.asarray(h, dtype=float).ravel()
        return float(np.abs(self.Hinv.T @ h).sum())

    def corners(self) -> np.ndarray:
        """All ``2^n`` vertices ``Htilde^{-1} c`` for sign patterns c."""
        n = self.dim
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
        return signs @ self.Hinv.T

    def as_hpolytope(self) -> HPolytope:
        return HPolytope.from_symmetric_rows(self.Htilde, name=self.name)

    def as_vpolytope(self) -> VPolytope:
        return VPolytope(self.corners(), name=self.name)

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"SymmetricBoxImage{tag}(dim {self.dim})"


AnyPolytope = Union[HPolytope, VPolytope, SymmetricBoxImage]


# ---------------------------------------------------------------------------
# hull pruning


def _extreme_point_filter(V: np.ndarray) -> np.ndarray:
    """Keep exactly the extreme points of conv(V), via one LP per point."""
    keep = []
    N = V.shape[0]
    for i in range(N):
        others = np.delete(V, i, axis=0)
        if others.shape[0] == 0:
            keep.append(i)
            continue
        # feasibility of  V[i] = sum_j lam_j others_j,  lam >= 0, sum lam = 1
        A_eq = np.vstack([others.T, np.ones(others.shape[0])])
        b_eq = np.concatenate([V[i], [1.0]])
        st = solve_lp(LinearProgram(np.zeros(others.shape[0]), A_eq=A_eq,
                                    b_eq=b_eq, lb=np.zeros(others.shape[0])))
        if st.status is not Status.OPTIMAL:
            keep.append(i)
    return V[keep]


def _prune_to_hull(V: np.ndarray, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Extreme points of conv(V), robust to rank-deficient point clouds."""
    V = _dedupe_points(_as_points(V), tol.dedup)
    if V.shape[0] <= 2:
        return V
    center = V.mean(axis=0)
    C = V - center
    s = np.linalg.svd(C, compute_uv=False)
    rank = int(np.sum(s > tol.rank_rel * max(s[0], 1.0)))
    if rank == 0:
        return V[:1]
    if rank == 1:
        # extremes along the principal direction
        d = (V[np.argmax(np.linalg.norm(C, axis=1))] - center)
        t = C @ d
        return _dedupe_points(V[[np.argmin(t), np.argmax(t)]], tol.dedup)
    if rank == V.shape[1] and 2 <= rank <= 3:
        try:
            hull = ConvexHull(V)
            return V[np.unique(hull.vertices)]
        except QhullError:
            pass
    return _extreme_point_filter(V)


def vertices_of(P: AnyPolytope, tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Vertex array of any supported representation."""
    if isinstance(P, VPolytope):
        return _prune_to_hull(P.V, tol)
    if isinstance(P, SymmetricBoxImage):
        return P.corners()
    return vertices(P, tol=tol).V


# ---------------------------------------------------------------------------
# support and containment


def support(P: AnyPolytope, h, tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """Support function ``max_{x in P} h @ x``.

    Solved as an LP for halfspace forms, as a vertex maximum otherwise.
    Raises UnboundedDirectionError if P is unbounded in direction h.
    """
    h = np.asarray(h, dtype=float).ravel()
    if isinstance(P, VPolytope):
        return float(np.max(P.V @ h))
    if isinstance(P, SymmetricBoxImage):
        return P.support(h)
    st = solve_lp(LinearProgram(-h, A_ub=P.H, b_ub=P.b), tol)
    if st.status is Status.UNBOUNDED:
        raise UnboundedDirectionError(
            f"{P.name or 'polytope'} unbounded in direction {h}")
    if st.status is not Status.OPTIMAL:
        raise PolytopeError(f"support LP failed: {st.status} {st.message}")
    return float(-st.value)


def contains_point(P: AnyPolytope, x, tol: float = DEFAULT_TOL.set_containment) -> bool:
    """Membership test with non-strict inequalities (closed sets)."""
    x = np.asarray(x, dtype=float).ravel()
    if isinstance(P, (HPolytope, SymmetricBoxImage)):
        return P.contains(x, tol)
    # V-rep: x in conv(V) iff the convex-combination LP is feasible
    V = P.V
    A_eq = np.vstack([V.T, np.ones(V.shape[0])])
    b_eq = np.concatenate([x, [1.0]])
    st = solve_lp(LinearProgram(np.zeros(V.shape[0]), A_eq=A_eq, b_eq=b_eq,
                                lb=np.zeros(V.shape[0])))
    if st.status is Status.OPTIMAL:
        return True
    if st.status is Status.INFEASIBLE:
        # retry with tolerance: allow x to sit within tol of the hull
        n = x.size
        c = np.concatenate([np.zeros(V.shape[0]), np.ones(2 * n)])
        A_eq = np.hstack([A_eq, np.vstack([np.hstack([np.eye(n), -np.eye(n)]),
                                           np.zeros((1, 2 * n))])])
        st2 = solve_lp(LinearProgram(c, A_eq=A_eq, b_eq=b_eq,
                                     lb=np.zeros(V.shape[0] + 2 * n)))
        return st2.status is Status.OPTIMAL and st2.value <= tol
    raise PolytopeError(f"membership LP failed: {st.status}")


class ContainmentCheck:
    """Result of a polytope containment test.

    Truthy iff the containment holds; `worst_slack` is the largest value of
    support(inner, row) - rhs over the outer facets (negative means strict
    containment with margin) and `worst_row` its argmax.
    """

    def __init__(self, holds: bool, worst_slack: float, worst_row: int,
                 slacks: np.ndarray):
        self.holds = holds
        self.worst_slack = worst_slack
        self.worst_row = worst_row
        self.slacks = slacks

    def __bool__(self) -> bool:
        return self.holds

    def __repr__(self):
        return (f"ContainmentCheck(holds={self.holds}, "
                f"worst_slack={self.worst_slack:.3e}, row={self.worst_row})")


def contains_polytope(inner: AnyPolytope, outer: HPolytope,
                      tol: float = DEFAULT_TOL.set_containment) -> ContainmentCheck:
    """Check ``inner subseteq outer`` facet by facet via support functions."""
    if inner_dim(inner) != outer.dim:
        raise ValueError("dimension mismatch")
    slacks = np.array([support(inner, outer.H[i]) - outer.b[i]
                       for i in range(outer.num_facets)])
    worst = int(np.argmax(slacks))
    return ContainmentCheck(bool(np.all(slacks <= tol)), float(slacks[worst]),
                            worst, slacks)


def inner_dim(P: AnyPolytope) -> int:
    return P.dim


def minimal_scaling(P: AnyPolytope, Q: HPolytope,
                    tol: ToleranceProfile = DEFAULT_TOL) -> float:
    """Smallest lambda >= 0 with ``P subseteq lambda Q``.

    Q must contain the origin in its interior (all b > 0); then
    lambda = max_i support(P, H_i) / b_i.
    """
    if np.any(Q.b <= 0):
        raise DegenerateSetError("minimal_scaling requires 0 interior to Q")
    vals = [support(P, Q.H[i], tol) / Q.b[i] for i in range(Q.num_facets)]
    return max(0.0, max(vals))


# ---------------------------------------------------------------------------
# set arithmetic


def affine_image(P: AnyPolytope, M, tol: ToleranceProfile = DEFAULT_TOL) -> VPolytope:
    """Image ``{M x : x in P}`` as the hull of mapped vertices."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] != P.dim:
        raise ValueError(f"matrix has {M.shape[1]} columns, set has dim {P.dim}")
    V = vertices_of(P, tol)
    return VPolytope(_prune_to_hull(V @ M.T, tol))


def minkowski_sum(P: AnyPolytope, Q: AnyPolytope,
                  tol: ToleranceProfile = DEFAULT_TOL) -> VPolytope:
    """Minkowski sum ``P + Q`` via pairwise vertex sums."""
    if P.dim != Q.dim:
        raise ValueError("dimension mismatch")
    Vp, Vq = vertices_of(P, tol), vertices_of(Q, tol)
    sums = (Vp[:, None, :] + Vq[None, :, :]).reshape(-1, P.dim)
    return VPolytope(_prune_to_hull(sums, tol))


def pontryagin_difference(P: HPolytope, Q: AnyPolytope,
                          tol: ToleranceProfile = DEFAULT_TOL) -> HPolytope:
    """Pontryagin difference ``P - Q = {x : x + q in P for all q in Q}``.

    Computed row-wise as ``{x : H x <= b - support(Q, H_i)}``.  The result
    may be empty; callers can detect that via a negative Chebyshev radius.
    """
    if P.dim != Q.dim:
        raise ValueError("dimension mismatch")
    shrink = np.array([support(Q, P.H[i], tol) for i in range(P.num_facets)])
    return HPolytope(P.H, P.b - shrink, name=P.name)


def convex_hull_union(P: AnyPolytope, Q: AnyPolytope,
                      tol: ToleranceProfile = DEFAULT_TOL) -> VPolytope:
    """Convex hull of the union, from the combined vertex sets."""
    if P.dim != Q.dim:
        raise ValueError("dimension mismatch")
    V = np.vstack([vertices_of(P, tol), vertices_of(Q, tol)])
    return VPolytope(_prune_to_hull(V, tol))


# ---------------------------------------------------------------------------
# radii, vertex enumeration, conversions


def chebyshev_radius(P: HPolytope, centered: bool = True
                     ) -> tuple[float, np.ndarray]:
    """Radius of the largest ball inside P, with its center.

    With ``centered=True`` the ball is pinned at the origin and the radius is
    ``min_i b_i / ||H_i||`` (negative iff the origin is outside).  With
    ``centered=False`` the center is free and found by LP; the radius is then
    negative iff P has empty interior.
    """
    norms = np.linalg.norm(P.H, axis=1)
    if centered:
        return float(np.min(P.b / norms)), np.zeros(P.dim)
    n = P.dim
    # variables (x, r): maximize r  s.t.  H x + ||H_i|| r <= b
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A = np.hstack([P.H, norms[:, None]])
    st = solve_lp(LinearProgram(c, A_ub=A, b_ub=P.b))
    if st.status is Status.UNBOUNDED:
        raise UnboundedDirectionError("Chebyshev LP unbounded: set has no "
                                      "bounded inscribed ball")
    if st.status is not Status.OPTIMAL:
        raise PolytopeError(f"Chebyshev LP failed: {st.status}")
    return float(st.x[-1]), st.x[:-1].copy()


def vertices(P: HPolytope, tol: ToleranceProfile = DEFAULT_TOL,
             max_dim: int = 3) -> VPolytope:
    """Exact vertex enumeration for dim <= 3 halfspace forms.

    Every affinely independent n-subset of facets is intersected; feasible
    intersection points are the vertices.  Higher dimensions are rejected:
    callers must supply vertex forms themselves there.
    """
    n = P.dim
    if n > max_dim:
        raise DegenerateSetError(
            f"vertex enumeration supports dim <= {max_dim}; got dim {n} "
            "(supply a vertex representation instead)")
    if not P.is_bounded():
        raise UnboundedDirectionError("cannot enumerate vertices of an "
                                      "unbounded polyhedron")
    scale = 1.0 + np.abs(P.b).max()
    pts = []
    for rows in itertools.combinations(range(P.num_facets), n):
        Hs = P.H[list(rows)]
        s = np.linalg.svd(Hs, compute_uv=False)
        if s[-1] <= 1e-10 * max(s[0], 1.0):
            continue
        x = np.linalg.solve(Hs, P.b[list(rows)])
        if np.all(P.H @ x <= P.b + 1e-9 * scale):
            pts.append(x)
    if not pts:
        raise DegenerateSetError(f"{P.name or 'polytope'} has no vertices "
                                 "(empty or degenerate beyond recovery)")
    return VPolytope(_prune_to_hull(np.array(pts), tol))


def to_hpolytope(P: VPolytope, tol: ToleranceProfile = DEFAULT_TOL) -> HPolytope:
    """Facet form of a full-dimensional vertex polytope (dim 1 to 3)."""
    V = _prune_to_hull(P.V, tol)
    n = P.dim
    if V.shape[0] == 1:
        raise DegenerateSetError("a single point has no full-dimensional H-rep")
    r = VPolytope(V).rank(tol.rank_rel)
    if r < n:
        raise DegenerateSetError(
            f"vertex set spans only {r} of {n} dimensions")
    if n == 1:
        lo, hi = float(V.min()), float(V.max())
        return HPolytope(np.array([[1.0], [-1.0]]), np.array([hi, -lo]),
                         name=P.name)
    if n > 3:
        raise DegenerateSetError("H-rep conversion supports dim <= 3")
    hull = ConvexHull(V)
    H = hull.equations[:, :-1]
    b = -hull.equations[:, -1]
    # merge duplicate facets produced by triangulated QHull output
    rows = np.hstack([H, b[:, None]])
    rows = _dedupe_points(rows, 1e-12 * (1.0 + np.abs(rows).max()))
    return HPolytope(rows[:, :-1], rows[:, -1], name=P.name)


# ---------------------------------------------------------------------------
# sampling


def _box_bounds(P: HPolytope) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([-support(P, -e) for e in np.eye(P.dim)])
    hi = np.array([support(P, e) for e in np.eye(P.dim)])
    return lo, hi


def _is_axis_box(P: HPolytope) -> bool:
    return all(np.count_nonzero(row) == 1 for row in P.H)


class UniformSampler:
    """Precomputed uniform sampler for repeated draws from one set.

    Axis-aligned boxes and invertible box images are sampled exactly; other
    full-dimensional sets use rejection from the bounding box.  Lower
    dimensional sets are sampled uniformly inside their affine hull, so
    degenerate disturbance sets (segments, single points) are supported.
    """

    def __init__(self, P: AnyPolytope, max_tries: int = 100_000,
                 tol: ToleranceProfile = DEFAULT_TOL):
        self.name = getattr(P, "name", "") or "polytope"
        self.max_tries = max_tries
        self._mode = None
        if isinstance(P, SymmetricBoxImage):
            # linear bijection of the cube: constant Jacobian, exactly uniform
            self._mode = "image"
            self._Hinv = P.Hinv
            self._dim = P.dim
            return
        if isinstance(P, HPolytope):
            if _is_axis_box(P):
                self._mode = "box"
                self._lo, self._hi = _box_bounds(P)
                return
            r, _ = chebyshev_radius(P, centered=False)
            if r > 1e-12:
                self._mode = "reject"
                self._set = P
                self._lo, self._hi = _box_bounds(P)
                return
            P = vertices(P, tol)  # degenerate: fall through to the V-rep path
        V = _prune_to_hull(P.V, tol)
        if V.shape[0] == 1:
            self._mode = "point"
            self._point = V[0].copy()
            return
        self._center = V.mean(axis=0)
        C = V - self._center
        _, s, Vh = np.linalg.svd(C, full_matrices=False)
        r = int(np.sum(s > tol.rank_rel * max(s[0], 1.0)))
        self._basis = Vh[:r].T
        R = C @ self._basis  # vertex coordinates in the affine hull
        if r == 1:
            self._mode = "segment"
            self._t_lo, self._t_hi = float(R.min()), float(R.max())
            return
        if r > 3:
            raise DegenerateSetError("uniform sampling supports affine hulls "
                                     "of dimension <= 3 for vertex forms")
        self._mode = "reduced"
        self._set = to_hpolytope(VPolytope(R), tol)
        self._lo, self._hi = _box_bounds(self._set)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if self._mode == "image":
            return self._Hinv @ rng.uniform(-1.0, 1.0, size=self._dim)
        if self._mode == "box":
            return rng.uniform(self._lo, self._hi)
        if self._mode == "point":
            return self._point.copy()
        if self._mode == "segment":
            t = rng.uniform(self._t_lo, self._t_hi)
            return self._center + self._basis[:, 0] * t
        for _ in range(self.max_tries):
            y = rng.uniform(self._lo, self._hi)
            if self._set.contains(y, tol=0.0):
                if self._mode == "reduced":
                    return self._center + self._basis @ y
                return y
        raise SamplingBudgetError(
            f"rejection sampling exhausted {self.max_tries} tries "
            f"on {self.name}")


def sample_uniform(P: AnyPolytope, rng: np.random.Generator,
                   max_tries: int = 100_000,
                   tol: ToleranceProfile = DEFAULT_TOL) -> np.ndarray:
    """Uniform sample from P (one-shot; see UniformSampler for batches)."""
    return UniformSampler(P, max_tries, tol).draw(rng)


# ---------------------------------------------------------------------------
# JSON forms


def polytope_to_json(P: AnyPolytope) -> dict:
    """JSON object form: {"H": ..., "b": ...} or {"V": ...}."""
    if isinstance(P, HPolytope):
        return {"H": P.H.tolist(), "b": P.b.tolist()}
    if isinstance(P, SymmetricBoxImage):
        return {"H_sym": P.Htilde.tolist()}
    return {"V": P.V.tolist()}


def polytope_from_json(obj: dict, name: str = "") -> AnyPolytope:
    if "H_sym" in obj:
        return SymmetricBoxImage(np.array(obj["H_sym"], dtype=float), name=name)
    if "H" in obj:
        return HPolytope(np.array(obj["H"], dtype=float),
                         np.array(obj["b"], dtype=float), name=name)
    if "V" in obj:
        return VPolytope(np.array(obj["V"], dtype=float), name=name)
    raise ValueError("polytope JSON must contain 'H'/'b', 'H_sym' or 'V'")
