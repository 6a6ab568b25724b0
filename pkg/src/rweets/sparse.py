"""Row-compressed sparse matrix holding only nonzero (row, col, value)
entries, plus the small set of operations the classifiers need.

Entries are kept row-major with strictly increasing column indices inside
each row; duplicate coordinates are rejected, zeros are dropped.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class SparseRow:
    """A single matrix row: parallel column/value arrays plus its width."""

    dim: int
    cols: np.ndarray
    values: np.ndarray

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values * self.values)))


class SparseMatrix:
    def __init__(self, rows: int, cols: int, indptr, indices, data, _trusted=False):
        self.rows = int(rows)
        self.cols = int(cols)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        self._row_of_nnz = None
        if not _trusted:
            self._validate()

    def _validate(self):
        if self.rows < 0 or self.cols < 0:
            raise ValidationError("matrix dimensions must be nonnegative")
        if len(self.indptr) != self.rows + 1 or self.indptr[0] != 0:
            raise ValidationError("malformed row pointer array")
        if self.indptr[-1] != len(self.indices) or len(self.indices) != len(self.data):
            raise ValidationError("index and value arrays disagree with row pointers")
        if np.any(np.diff(self.indptr) < 0):
            raise ValidationError("row pointers must be nondecreasing")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.cols):
            raise ValidationError("column index out of range")
        for r in range(self.rows):
            row_cols = self.indices[self.indptr[r] : self.indptr[r + 1]]
            if len(row_cols) > 1 and np.any(np.diff(row_cols) <= 0):
                raise ValidationError(f"row {r} has unsorted or duplicate column indices")
        if len(self.data) and not np.all(np.isfinite(self.data)):
            raise ValidationError("matrix values must be finite")
        if np.any(self.data == 0.0):
            raise ValidationError("stored values must be nonzero")

    # --- constructors -------------------------------------------------------

    @classmethod
    def from_triplets(cls, rows: int, cols: int, triplets) -> "SparseMatrix":
        """Build from (row, col, value) triples in any order. Zero values are
        dropped; duplicate coordinates are an error."""
        kept = [(r, c, v) for r, c, v in triplets if v != 0.0]
        kept.sort(key=lambda t: (t[0], t[1]))
        seen_prev = None
        for r, c, _v in kept:
            if not (0 <= r < rows) or not (0 <= c < cols):
                raise ValidationError(f"triplet ({r},{c}) outside {rows}x{cols} matrix")
            if (r, c) == seen_prev:
                raise ValidationError(f"duplicate entry at ({r},{c})")
            seen_prev = (r, c)
        indptr = np.zeros(rows + 1, dtype=np.int64)
        for r, _c, _v in kept:
            indptr[r + 1] += 1
        np.cumsum(indptr, out=indptr)
        indices = np.fromiter((c for _r, c, _v in kept), dtype=np.int64, count=len(kept))
        data = np.fromiter((v for _r, _c, v in kept), dtype=np.float64, count=len(kept))
        return cls(rows, cols, indptr, indices, data)

    @classmethod
    def from_dense(cls, array) -> "SparseMatrix":
        array = np.asarray(array, dtype=np.float64)
        if array.ndim != 2:
            raise ValidationError("from_dense expects a 2-D array")
        triplets = [
            (r, c, array[r, c])
            for r in range(array.shape[0])
            for c in range(array.shape[1])
            if array[r, c] != 0.0
        ]
        return cls.from_triplets(array.shape[0], array.shape[1], triplets)

    # --- inspection ---------------------------------------------------------

    @property
    def nnz(self) -> int:
        return len(self.data)

    def row(self, r: int) -> SparseRow:
        if not 0 <= r < self.rows:
            raise ValidationError(f"row {r} out of range")
        lo, hi = self.indptr[r], self.indptr[r + 1]
        return SparseRow(self.cols, self.indices[lo:hi], self.data[lo:hi])

    def iter_triplets(self):
        for r in range(self.rows):
            for k in range(self.indptr[r], self.indptr[r + 1]):
                yield r, int(self.indices[k]), float(self.data[k])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols))
        out_flat = out.reshape(-1)
        np.add.at(out_flat, self._nnz_rows() * self.cols + self.indices, self.data)
        return out

    def _nnz_rows(self) -> np.ndarray:
        if self._row_of_nnz is None:
            self._row_of_nnz = np.repeat(
                np.arange(self.rows, dtype=np.int64), np.diff(self.indptr)
            )
        return self._row_of_nnz

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"SparseMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    # --- transforms ---------------------------------------------------------

    def row_norms(self) -> np.ndarray:
        norms = np.zeros(self.rows)
        np.add.at(norms, self._nnz_rows(), self.data * self.data)
        return np.sqrt(norms)

    def scale_rows(self, factors) -> "SparseMatrix":
        factors = np.asarray(factors, dtype=np.float64)
        if len(factors) != self.rows:
            raise ValidationError("one scale factor per row required")
        data = self.data * factors[self._nnz_rows()]
        return SparseMatrix(self.rows, self.cols, self.indptr.copy(), self.indices.copy(), data)

    def scale_columns(self, factors) -> "SparseMatrix":
        factors = np.asarray(factors, dtype=np.float64)
        if len(factors) != self.cols:
            raise ValidationError("one scale factor per column required")
        data = self.data * factors[self.indices]
        return SparseMatrix(self.rows, self.cols, self.indptr.copy(), self.indices.copy(), data)

    def take_rows(self, row_indices) -> "SparseMatrix":
        """New matrix holding the given rows, in the given order."""
        row_indices = list(row_indices)
        indptr = [0]
        indices = []
        data = []
        for r in row_indices:
            if not 0 <= r < self.rows:
                raise ValidationError(f"row {r} out of range")
            lo, hi = self.indptr[r], self.indptr[r + 1]
            indices.append(self.indices[lo:hi])
            data.append(self.data[lo:hi])
            indptr.append(indptr[-1] + (hi - lo))
        indices = np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64)
        data = np.concatenate(data) if data else np.zeros(0)
        return SparseMatrix(len(row_indices), self.cols, np.asarray(indptr), indices, data)

    def append_dense_columns(self, block) -> "SparseMatrix":
        """Widen the matrix with a dense column block (row counts must match);
        only nonzero block entries are stored."""
        block = np.asarray(block, dtype=np.float64)
        if block.ndim != 2 or block.shape[0] != self.rows:
            raise ValidationError(
                f"column block must have {self.rows} rows, got shape {block.shape}"
            )
        extra = block.shape[1]
        indptr = [0]
        indices = []
        data = []
        for r in range(self.rows):
            lo, hi = self.indptr[r], self.indptr[r + 1]
            row_cols = list(self.indices[lo:hi])
            row_vals = list(self.data[lo:hi])
            for j in range(extra):
                if block[r, j] != 0.0:
                    row_cols.append(self.cols + j)
                    row_vals.append(block[r, j])
            indices.extend(row_cols)
            data.extend(row_vals)
            indptr.append(len(indices))
        return SparseMatrix(
            self.rows,
            self.cols + extra,
            np.asarray(indptr, dtype=np.int64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(data),
        )

    # --- linear algebra -----------------------------------------------------

    def matmul_dense(self, weights: np.ndarray) -> np.ndarray:
        """self @ weights for a dense (cols, k) matrix; returns (rows, k)."""
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape[0] != self.cols:
            raise ValidationError(
                f"weight matrix has {weights.shape[0]} rows, expected {self.cols}"
            )
        out = np.zeros((self.rows, weights.shape[1]))
        if self.nnz:
            np.add.at(out, self._nnz_rows(), self.data[:, None] * weights[self.indices])
        return out

    def t_matmul_dense(self, dense: np.ndarray) -> np.ndarray:
        """self.T @ dense for a dense (rows, k) matrix; returns (cols, k)."""
        dense = np.asarray(dense, dtype=np.float64)
        if dense.shape[0] != self.rows:
            raise ValidationError(f"matrix has {dense.shape[0]} rows, expected {self.rows}")
        out = np.zeros((self.cols, dense.shape[1]))
        if self.nnz:
            np.add.at(out, self.indices, self.data[:, None] * dense[self._nnz_rows()])
        return out

    def sum_rows_by_group(self, groups, n_groups: int) -> np.ndarray:
        """Sum rows into n_groups buckets given a per-row group index."""
        groups = np.asarray(groups, dtype=np.int64)
        if len(groups) != self.rows:
            raise ValidationError("one group index per row required")
        out = np.zeros((n_groups, self.cols))
        if self.nnz:
            np.add.at(out, (groups[self._nnz_rows()], self.indices), self.data)
        return out
