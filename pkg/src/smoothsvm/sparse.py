"""Compressed sparse row kernels and the matrix-free regularized Hessian.

The training Hessian has the form lam*E + (1/n) * X^T D X with D diagonal and
nonnegative; its action on a vector is computed as the sequential pipeline
s1 = X s, s2 = D s1, s3 = X^T s2 without ever forming a p x p matrix.
Accumulation is in float64 and follows storage (row-major) order, so results
are bitwise reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch


class CsrMatrix:
    """Immutable CSR matrix: row offsets, column indices, values.

    Column indices must be strictly increasing within each row (duplicates are
    rejected); explicit zeros are permitted. Instances are safe to share
    across threads.
    """

    __slots__ = ("n_rows", "n_cols", "row_offsets", "col_indices", "values", "_row_of_nnz")

    def __init__(self, n_rows, n_cols, row_offsets, col_indices, values):
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)
        self.row_offsets = np.ascontiguousarray(row_offsets, dtype=np.int64)
        self.col_indices = np.ascontiguousarray(col_indices, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        self._validate()
        self._row_of_nnz = np.repeat(
            np.arange(self.n_rows, dtype=np.int64), np.diff(self.row_offsets)
        )

    def _validate(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise ValueError("negative matrix dimensions")
        off = self.row_offsets
        if off.shape != (self.n_rows + 1,):
            raise ValueError("row_offsets must have length n_rows + 1")
        if off[0] != 0:
            raise ValueError("row_offsets[0] must be 0")
        if np.any(np.diff(off) < 0):
            raise ValueError("row_offsets must be nondecreasing")
        if off[-1] != self.col_indices.size or off[-1] != self.values.size:
            raise ValueError("last row offset must equal the number of stored values")
        if self.col_indices.size:
            if self.col_indices.min() < 0 or self.col_indices.max() >= self.n_cols:
                raise ValueError("column index out of range")
            d = np.diff(self.col_indices)
            if d.size:
                # strictly increasing within each row; positions where a new
                # row starts are exempt from the check
                boundary = np.zeros(d.size, dtype=bool)
                starts = off[1:-1]
                starts = starts[(starts > 0) & (starts < self.col_indices.size)]
                boundary[starts - 1] = True
                if np.any((d <= 0) & ~boundary):
                    raise ValueError("column indices must be strictly increasing within a row")

    @classmethod
    def from_dense(cls, dense) -> "CsrMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        if dense.ndim != 2:
            raise ValueError("expected a 2-d array")
        n, p = dense.shape
        offsets = [0]
        cols, vals = [], []
        for i in range(n):
            nz = np.nonzero(dense[i])[0]
            cols.extend(nz.tolist())
            vals.extend(dense[i, nz].tolist())
            offsets.append(len(cols))
        return cls(n, p, offsets, cols, vals)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        out[self._row_of_nnz, self.col_indices] = self.values
        return out

    def nnz(self) -> int:
        return int(self.values.size)

    def row_norms_sq(self) -> np.ndarray:
        """Squared Euclidean norm of every row."""
        return np.bincount(self._row_of_nnz, weights=self.values**2, minlength=self.n_rows)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Column indices and values of row i (views, do not mutate)."""
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi], self.values[lo:hi]

    def matvec(self, s) -> np.ndarray:
        """X @ s for a dense vector s of length n_cols."""
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (self.n_cols,):
            raise DimensionMismatch(f"expected vector of length {self.n_cols}, got {s.shape}")
        products = self.values * s[self.col_indices]
        return np.bincount(self._row_of_nnz, weights=products, minlength=self.n_rows)

    def transpose_matvec(self, u) -> np.ndarray:
        """X.T @ u for a dense vector u of length n_rows."""
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.n_rows,):
            raise DimensionMismatch(f"expected vector of length {self.n_rows}, got {u.shape}")
        contrib = self.values * u[self._row_of_nnz]
        return np.bincount(self.col_indices, weights=contrib, minlength=self.n_cols)


def matvec(m: CsrMatrix, s) -> np.ndarray:
    return m.matvec(s)


def transpose_matvec(m: CsrMatrix, u) -> np.ndarray:
    return m.transpose_matvec(u)


@dataclass(frozen=True)
class HessianOperator:
    """Matrix-free lam*E + (1/n) X^T D X with d_i >= 0."""

    lam: float
    matrix: CsrMatrix
    diag: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "diag", np.ascontiguousarray(self.diag, dtype=np.float64))
        if not self.lam > 0.0:
            raise ValueError("lam must be > 0")
        if self.diag.shape != (self.matrix.n_rows,):
            raise DimensionMismatch("diag length must equal the number of matrix rows")
        if self.diag.size and self.diag.min() < 0.0:
            raise ValueError("Hessian diagonal entries must be nonnegative")

    @property
    def dim(self) -> int:
        return self.matrix.n_cols


def hessian_vector_product(op: HessianOperator, s) -> np.ndarray:
    """lam*s + (1/n) X^T (D (X s)), computed as three sequential passes."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (op.matrix.n_cols,):
        raise DimensionMismatch(f"expected vector of length {op.matrix.n_cols}, got {s.shape}")
    s1 = op.matrix.matvec(s)
    s2 = op.diag * s1
    s3 = op.matrix.transpose_matvec(s2)
    return op.lam * s + s3 / op.matrix.n_rows
