"""Block linear algebra over 2x2 quaternion cells.

A quaternion matrix of quaternion dimension n is stored as its 2n x 2n
scalar array; quaternion index i addresses scalar rows 2i, 2i+1 (the one
index-mapping rule used everywhere in the package).  Matrices are treated
as immutable after construction; all operations return new objects.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import Singular

__all__ = [
    "QMatrix",
    "zmat",
    "qcell_dual",
    "qcell_inverse",
    "shift_power",
    "proj_low",
    "proj_high",
    "proj_band",
    "triangular_inverse",
]


def _as_array(m):
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
        raise ValueError(f"scalar backing must be square with even size, got {a.shape}")
    return a


class QMatrix:
    """Square quaternion matrix backed by a scalar ndarray."""

    __slots__ = ("m",)

    def __init__(self, scalar):
        self.m = _as_array(scalar)

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zeros(n_q: int, dtype=float) -> "QMatrix":
        return QMatrix(np.zeros((2 * n_q, 2 * n_q), dtype=dtype))

    @staticmethod
    def identity(n_q: int, dtype=float) -> "QMatrix":
        return QMatrix(np.eye(2 * n_q, dtype=dtype))

    # -- basic structure ---------------------------------------------------
    @property
    def n_q(self) -> int:
        return self.m.shape[0] // 2

    def cell(self, i: int, j: int):
        return self.m[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]

    def with_cell(self, i: int, j: int, block) -> "QMatrix":
        out = self.m.copy()
        out[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = block
        return QMatrix(out)

    def copy(self) -> "QMatrix":
        return QMatrix(self.m.copy())

    # -- algebra -----------------------------------------------------------
    def __matmul__(self, other):
        if isinstance(other, QMatrix):
            return QMatrix(self.m @ other.m)
        return self.m @ np.asarray(other)

    def __add__(self, other):
        return QMatrix(self.m + other.m)

    def __sub__(self, other):
        return QMatrix(self.m - other.m)

    def __neg__(self):
        return QMatrix(-self.m)

    def scaled(self, a) -> "QMatrix":
        return QMatrix(a * self.m)

    def transpose(self) -> "QMatrix":
        return QMatrix(self.m.T.copy())

    def dual(self) -> "QMatrix":
        """A^D = -Z A^t Z with Z the block-diagonal symplectic unit."""
        z = zmat(self.n_q, dtype=self.m.dtype)
        return QMatrix(-z @ self.m.T @ z)

    def commutator(self, other: "QMatrix") -> "QMatrix":
        return QMatrix(self.m @ other.m - other.m @ self.m)

    def power(self, k: int) -> "QMatrix":
        return QMatrix(np.linalg.matrix_power(self.m, k))

    # -- cell-level triangular parts ----------------------------------------
    def part(self, which: str) -> "QMatrix":
        """Strictly-upper / strictly-lower / diagonal part in cell indexing."""
        n = self.n_q
        out = np.zeros_like(self.m)
        for i in range(n):
            if which == "diag":
                out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = self.cell(i, i)
            elif which == "upper":
                out[2 * i : 2 * i + 2, 2 * i + 2 :] = self.m[2 * i : 2 * i + 2, 2 * i + 2 :]
            elif which == "lower":
                out[2 * i : 2 * i + 2, : 2 * i] = self.m[2 * i : 2 * i + 2, : 2 * i]
            else:
                raise ValueError(which)
        return QMatrix(out)

    # -- diagnostics ---------------------------------------------------------
    def band_leak(self, halfwidth: int, rows=None) -> float:
        """Largest |entry| outside quaternion band |i-j| <= halfwidth."""
        n = self.n_q
        rows = range(n) if rows is None else rows
        worst = 0.0
        for i in rows:
            for j in range(n):
                if abs(i - j) > halfwidth:
                    worst = max(worst, float(np.abs(self.cell(i, j)).max()))
        return worst

    def anti_self_dual_residual(self, rows=None) -> float:
        s = (self + self.dual()).m
        if rows is None:
            return float(np.abs(s).max())
        idx = [r for i in rows for r in (2 * i, 2 * i + 1)]
        return float(np.abs(s[np.ix_(idx, idx)]).max())

    def interior_max(self, other: "QMatrix", guard: int) -> float:
        """max |self-other| over quaternion rows/cols in [guard, n_q-guard)."""
        lo, hi = 2 * guard, 2 * (self.n_q - guard)
        return float(np.abs(self.m[lo:hi, lo:hi] - other.m[lo:hi, lo:hi]).max())

    def to_csv(self, path):
        with open(path, "w") as fh:
            for row in self.m:
                fh.write(",".join(repr(v) for v in row) + "\n")

    def __repr__(self):
        return f"QMatrix(n_q={self.n_q}, dtype={self.m.dtype})"


def zmat(n_q: int, dtype=float) -> np.ndarray:
    """Block-diagonal symplectic unit Z, Z^2 = -1 per block."""
    z = np.zeros((2 * n_q, 2 * n_q), dtype=dtype)
    for i in range(n_q):
        z[2 * i, 2 * i + 1] = 1
        z[2 * i + 1, 2 * i] = -1
    return z


def qcell_dual(cell):
    """Dual of a single 2x2 cell: [[a,b],[c,e]] -> [[e,-b],[-c,a]]."""
    a, b = cell[0]
    c, e = cell[1]
    return np.array([[e, -b], [-c, a]], dtype=np.asarray(cell).dtype)


def qcell_inverse(cell, tol: float = 1e-300):
    """Exact 2x2 inverse; lower-triangular cells [[a,0],[b,c]] invert to
    [[1/a,0],[-b/(ac),1/c]]."""
    cell = np.asarray(cell)
    det = cell[0, 0] * cell[1, 1] - cell[0, 1] * cell[1, 0]
    if abs(det) <= tol:
        raise Singular(f"cell determinant {det!r} below tolerance")
    return np.array([[cell[1, 1], -cell[0, 1]], [-cell[1, 0], cell[0, 0]]],
                    dtype=cell.dtype) / det


def shift_power(n_q: int, d: int, dtype=float) -> QMatrix:
    """Shift matrix power: unit cells on the d-th quaternion superdiagonal."""
    if not 0 <= d <= n_q:
        raise ValueError(f"need 0 <= d <= n_q, got d={d}")
    out = QMatrix.zeros(n_q, dtype=dtype)
    m = out.m
    for i in range(n_q - d):
        m[2 * i, 2 * (i + d)] = 1
        m[2 * i + 1, 2 * (i + d) + 1] = 1
    return out


def proj_low(n_q: int, N: int, dtype=float) -> QMatrix:
    """Diagonal projection onto quaternion indices < N."""
    out = QMatrix.zeros(n_q, dtype=dtype)
    for i in range(min(N, n_q)):
        out.m[2 * i, 2 * i] = 1
        out.m[2 * i + 1, 2 * i + 1] = 1
    return out


def proj_high(n_q: int, N: int, dtype=float) -> QMatrix:
    """1 - proj_low: indices >= N."""
    return QMatrix.identity(n_q, dtype=dtype) - proj_low(n_q, N, dtype=dtype)


def proj_band(n_q: int, N: int, M: int, dtype=float) -> QMatrix:
    """proj_low(N) - proj_low(M): indices M <= i < N."""
    if not 0 <= M <= N <= n_q:
        raise ValueError(f"need 0 <= M <= N <= n_q, got M={M}, N={N}")
    return proj_low(n_q, N, dtype=dtype) - proj_low(n_q, M, dtype=dtype)


def triangular_inverse(t: QMatrix, kind: str) -> QMatrix:
    """(1 - T)^{-1} for strictly triangular T, via unit-triangular solve.

    Equal to the terminating Neumann sum sum_k T^k on the truncation; the
    solve form avoids building the powers.
    """
    leak = t.part("diag").m
    if float(np.abs(leak).max()) > 0:
        raise ValueError("T must be strictly triangular in cell indexing")
    n = t.m.shape[0]
    one_minus = np.eye(n, dtype=t.m.dtype) - t.m
    lower = kind == "strictly-lower"
    if not lower and kind != "strictly-upper":
        raise ValueError(kind)
    inv = scipy.linalg.solve_triangular(one_minus, np.eye(n, dtype=t.m.dtype),
                                        lower=lower, unit_diagonal=True)
    return QMatrix(inv)


def neumann_length(t: QMatrix, tol: float = 0.0) -> int:
    """Smallest k with T^k = 0 (<= tol) on the truncation."""
    acc = t.copy()
    k = 1
    while float(np.abs(acc.m).max()) > tol:
        acc = acc @ t
        k += 1
        if k > 2 * t.n_q + 2:
            raise ValueError("matrix is not nilpotent on this truncation")
    return k
