"""Thin QR factorization kept up to date under append-right / delete-left.

Anderson acceleration needs the least-squares solution against a sliding
window of residual differences.  Refactorizing that window each iteration
costs O(n m^2); appending one column by Gram-Schmidt and removing the
oldest one with plane rotations costs O(n m).
"""

from __future__ import annotations

import numpy as np

from .errors import (
    CapacityExceeded,
    DimensionMismatch,
    EmptyFactorization,
    RankDeficientColumn,
    SingularTriangular,
)

DROP_TOL = 1e-14
REORTH_RATIO = 0.5


class ThinQr:
    """Thin QR factors ``F = Q R`` of an ``n x k`` matrix with ``k <= capacity``.

    ``Q`` is held as a list of ``k`` orthonormal columns, ``R`` as a dense
    upper-triangular ``k x k`` array.  Mutating methods work in place.
    """

    def __init__(self, n: int, capacity: int):
        if n < 1 or capacity < 1:
            raise ValueError("n and capacity must be positive")
        self.n = int(n)
        self.capacity = int(capacity)
        self.q_cols: list[np.ndarray] = []
        self.r = np.zeros((0, 0))

    @property
    def k(self) -> int:
        return len(self.q_cols)

    @property
    def q(self) -> np.ndarray:
        if not self.q_cols:
            return np.zeros((self.n, 0))
        return np.column_stack(self.q_cols)

    def reconstruct(self) -> np.ndarray:
        return self.q @ self.r

    def project(self, v: np.ndarray) -> np.ndarray:
        """Return ``Q^T v``."""
        return np.array([qj @ v for qj in self.q_cols], dtype=float)

    def copy(self) -> "ThinQr":
        other = ThinQr(self.n, self.capacity)
        other.q_cols = [qj.copy() for qj in self.q_cols]
        other.r = self.r.copy()
        return other

    def _check_vec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise DimensionMismatch(f"expected vector of length {self.n}, got shape {v.shape}")
        return v

    def append_column(self, col) -> float:
        """Append ``col`` on the right and return the new diagonal entry.

        One modified Gram-Schmidt sweep, followed by a second (classical)
        projection pass when more than half of the column's norm was removed.

        Raises:
            RankDeficientColumn: the new diagonal would fall below
                ``DROP_TOL * max|r_jj|``.  The factorization is unchanged.
        """
        col = self._check_vec(col)
        k = self.k
        if k >= self.capacity:
            raise CapacityExceeded(f"factorization already holds {k} columns")

        v = col.copy()
        coeffs = np.zeros(k)
        for j, qj in enumerate(self.q_cols):
            coeffs[j] = qj @ v
            v -= coeffs[j] * qj
        if np.linalg.norm(v) < REORTH_RATIO * np.linalg.norm(col):
            for j, qj in enumerate(self.q_cols):
                s = qj @ v
                coeffs[j] += s
                v -= s * qj

        diag = float(np.linalg.norm(v))
        scale = max([diag] + [abs(self.r[j, j]) for j in range(k)])
        if diag == 0.0 or diag < DROP_TOL * scale:
            raise RankDeficientColumn(diag, scale)

        r = np.zeros((k + 1, k + 1))
        r[:k, :k] = self.r
        r[:k, k] = coeffs
        r[k, k] = diag
        self.r = r
        self.q_cols.append(v / diag)
        return diag

    def delete_first_column(self) -> None:
        """Drop the leftmost column and restore triangularity with Givens rotations."""
        k = self.k
        if k == 0:
            raise EmptyFactorization("no column to delete")
        if k == 1:
            self.q_cols = []
            self.r = np.zeros((0, 0))
            return

        # R without its first column is upper Hessenberg (k x k-1).
        h = self.r[:, 1:].copy()
        cols = self.q_cols
        for i in range(k - 1):
            a, b = h[i, i], h[i + 1, i]
            rho = np.hypot(a, b)
            if rho == 0.0:
                continue
            c, s = a / rho, b / rho
            hi, hi1 = h[i, i:].copy(), h[i + 1, i:].copy()
            h[i, i:] = c * hi + s * hi1
            h[i + 1, i:] = -s * hi + c * hi1
            h[i + 1, i] = 0.0
            qi, qi1 = cols[i], cols[i + 1]
            cols[i], cols[i + 1] = c * qi + s * qi1, -s * qi + c * qi1
        self.r = np.triu(h[: k - 1, :])
        self.q_cols = cols[: k - 1]

    def solve_upper(self, rhs) -> np.ndarray:
        """Least-squares coefficients ``gamma`` minimizing ``||rhs - F gamma||_2``."""
        rhs = self._check_vec(rhs)
        k = self.k
        if k == 0:
            return np.zeros(0)
        diag = np.abs(np.diag(self.r))
        if diag.min() < DROP_TOL * diag.max() or diag.min() == 0.0:
            raise SingularTriangular(f"min |r_ii| = {diag.min():.3e}, max = {diag.max():.3e}")
        b = self.project(rhs)
        gamma = np.zeros(k)
        for i in range(k - 1, -1, -1):
            gamma[i] = (b[i] - self.r[i, i + 1 :] @ gamma[i + 1 :]) / self.r[i, i]
        return gamma
