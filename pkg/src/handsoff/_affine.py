"""Affine matrix expressions over a scalar decision vector.

Small helper layer for assembling LMI blocks: a MatExpr is a matrix whose
entries are affine in the decision variables, stored as a constant part plus
one dense coefficient matrix per participating variable.  Only products with
constant matrices are defined; attempting a variable-variable product is a
bug in the caller (the point of the convexified synthesis is that such
products never appear).
"""

from __future__ import annotations

import numpy as np


class MatExpr:
    """Matrix with entries affine in scalar decision variables."""

    __slots__ = ("shape", "const", "coeffs")

    # make numpy defer to the reflected operators on ndarray <op> MatExpr
    __array_ufunc__ = None

    def __init__(self, shape, const=None, coeffs=None):
        self.shape = tuple(shape)
        self.const = np.zeros(self.shape) if const is None else \
            np.asarray(const, dtype=float).reshape(self.shape)
        self.coeffs: dict[int, np.ndarray] = coeffs if coeffs is not None else {}

    @classmethod
    def constant(cls, M) -> "MatExpr":
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls(M.shape, M.copy())

    def copy(self) -> "MatExpr":
        return MatExpr(self.shape, self.const.copy(),
                       {i: c.copy() for i, c in self.coeffs.items()})

    # -- ring operations with constants and other expressions

    def __add__(self, other) -> "MatExpr":
        other = other if isinstance(other, MatExpr) else MatExpr.constant(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        out = self.copy()
        out.const = out.const + other.const
        for i, c in other.coeffs.items():
            out.coeffs[i] = out.coeffs.get(i, 0.0) + c
        return out

    __radd__ = __add__

    def __neg__(self) -> "MatExpr":
        return MatExpr(self.shape, -self.const,
                       {i: -c for i, c in self.coeffs.items()})

    def __sub__(self, other) -> "MatExpr":
        other = other if isinstance(other, MatExpr) else MatExpr.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "MatExpr":
        return (-self) + other

    def scale(self, a: float) -> "MatExpr":
        return MatExpr(self.shape, a * self.const,
                       {i: a * c for i, c in self.coeffs.items()})

    def __matmul__(self, M) -> "MatExpr":
        if isinstance(M, MatExpr):
            raise TypeError("product of two variable expressions is not affine")
        M = np.asarray(M, dtype=float)
        M = M.reshape(-1, 1) if M.ndim == 1 else M
        out_shape = (self.shape[0], M.shape[1])
        return MatExpr(out_shape, self.const @ M,
                       {i: c @ M for i, c in self.coeffs.items()})

    def __rmatmul__(self, M) -> "MatExpr":
        M = np.asarray(M, dtype=float)
        M = M.reshape(1, -1) if M.ndim == 1 else M
        out_shape = (M.shape[0], self.shape[1])
        return MatExpr(out_shape, M @ self.const,
                       {i: M @ c for i, c in self.coeffs.items()})

    @property
    def T(self) -> "MatExpr":
        return MatExpr(self.shape[::-1], self.const.T,
                       {i: c.T for i, c in self.coeffs.items()})

    def reshape(self, shape) -> "MatExpr":
        return MatExpr(shape, self.const.reshape(shape),
                       {i: c.reshape(shape) for i, c in self.coeffs.items()})

    def sym(self) -> "MatExpr":
        """(E + E^T) / 2 for square expressions."""
        return (self + self.T).scale(0.5)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        M = self.const.copy()
        for i, c in self.coeffs.items():
            M += x[i] * c
        return M

    @staticmethod
    def block(rows) -> "MatExpr":
        """Assemble a block matrix from MatExpr / ndarray entries."""
        rows = [[e if isinstance(e, MatExpr) else MatExpr.constant(e)
                 for e in row] for row in rows]
        heights = [row[0].shape[0] for row in rows]
        widths = [e.shape[1] for e in rows[0]]
        for row, h in zip(rows, heights):
            for e, w in zip(row, widths):
                if e.shape != (h, w):
                    raise ValueError(f"block entry shape {e.shape} != ({h}, {w})")
        total = (sum(heights), sum(widths))
        out = MatExpr(total)
        r0 = 0
        for row, h in zip(rows, heights):
            c0 = 0
            for e, w in zip(row, widths):
                out.const[r0:r0 + h, c0:c0 + w] = e.const
                for i, c in e.coeffs.items():
                    if i not in out.coeffs:
                        out.coeffs[i] = np.zeros(total)
                    out.coeffs[i][r0:r0 + h, c0:c0 + w] += c
                c0 += w
            r0 += h
        return out

    @staticmethod
    def vstack(exprs) -> "MatExpr":
        return MatExpr.block([[e] for e in exprs])

    @staticmethod
    def diag_of_column(col: "MatExpr") -> "MatExpr":
        """Square diagonal expression from a column expression."""
        if col.shape[1] != 1:
            raise ValueError("expected a column")
        p = col.shape[0]
        return MatExpr((p, p), np.diagflat(col.const),
                       {i: np.diagflat(c) for i, c in col.coeffs.items()})


class VarRegistry:
    """Allocates scalar decision variables for named matrix blocks.

    Supported kinds: full matrices, symmetric matrices (upper triangle
    stored), diagonal matrices and scalars.  Extraction rebuilds the numeric
    matrix from a solution vector.
    """

    def __init__(self):
        self._entries: dict[str, tuple[int, tuple, str]] = {}
        self.count = 0

    def _alloc(self, name: str, num: int, shape, kind: str) -> int:
        if name in self._entries:
            raise ValueError(f"variable {name!r} already allocated")
        start = self.count
        self._entries[name] = (start, tuple(shape), kind)
        self.count += num
        return start

    def full(self, name: str, rows: int, cols: int) -> MatExpr:
        start = self._alloc(name, rows * cols, (rows, cols), "full")
        coeffs = {}
        for i in range(rows):
            for j in range(cols):
                C = np.zeros((rows, cols))
                C[i, j] = 1.0
                coeffs[start + i * cols + j] = C
        return MatExpr((rows, cols), coeffs=coeffs)

    def symmetric(self, name: str, p: int) -> MatExpr:
        start = self._alloc(name, p * (p + 1) // 2, (p, p), "sym")
        coeffs = {}
        k = 0
        for i in range(p):
            for j in range(i, p):
                C = np.zeros((p, p))
                C[i, j] = 1.0
                C[j, i] = 1.0
                coeffs[start + k] = C
                k += 1
        return MatExpr((p, p), coeffs=coeffs)

    def diagonal(self, name: str, p: int) -> MatExpr:
        start = self._alloc(name, p, (p, p), "diag")
        coeffs = {}
        for i in range(p):
            C = np.zeros((p, p))
            C[i, i] = 1.0
            coeffs[start + i] = C
        return MatExpr((p, p), coeffs=coeffs)

    def scalar(self, name: str) -> MatExpr:
        start = self._alloc(name, 1, (1, 1), "scalar")
        return MatExpr((1, 1), coeffs={start: np.ones((1, 1))})

    def names(self):
        return tuple(self._entries)

    def extract(self, name: str, x: np.ndarray) -> np.ndarray:
        start, shape, kind = self._entries[name]
        if kind == "scalar":
            return float(x[start])
        if kind == "full":
            r, c = shape
            return x[start:start + r * c].reshape(r, c).copy()
        p = shape[0]
        if kind == "diag":
            return np.diag(x[start:start + p])
        M = np.zeros((p, p))
        k = 0
        for i in range(p):
            for j in range(i, p):
                M[i, j] = M[j, i] = x[start + k]
                k += 1
        return M

    def variable_indices(self, name: str) -> range:
        start, shape, kind = self._entries[name]
        if kind == "scalar":
            return range(start, start + 1)
        if kind == "full":
            return range(start, start + shape[0] * shape[1])
        if kind == "diag":
            return range(start, start + shape[0])
        p = shape[0]
        return range(start, start + p * (p + 1) // 2)
