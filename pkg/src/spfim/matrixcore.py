"""Small dense symmetric-matrix substrate.

Symmetric matrices are stored as the upper triangle in row-major order
(``packed[k]`` for ``k`` running over ``(0,0), (0,1), ..., (0,p-1), (1,1), ...``).
The same ordering is used for the covariance part of parameter vectors in
:mod:`spfim.models`, so one index helper serves both.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DimensionError, NotPositiveDefiniteError, ValidationError


def packed_size(dim: int) -> int:
    return dim * (dim + 1) // 2


@lru_cache(maxsize=None)
def triu_indices(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the packed upper triangle, in storage order."""
    rows, cols = np.triu_indices(dim)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def dim_from_packed(length: int) -> int:
    dim = int((math.isqrt(8 * length + 1) - 1) // 2)
    if packed_size(dim) != length:
        raise DimensionError(f"length {length} is not a triangular number")
    return dim


def pack(dense: np.ndarray) -> np.ndarray:
    """Upper triangle of ``(..., p, p)`` arrays as ``(..., p(p+1)/2)``."""
    dense = np.asarray(dense)
    rows, cols = triu_indices(dense.shape[-1])
    return dense[..., rows, cols]


def unpack(packed: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pack`; works on batches along leading axes."""
    packed = np.asarray(packed, dtype=float)
    dim = dim_from_packed(packed.shape[-1])
    rows, cols = triu_indices(dim)
    out = np.empty(packed.shape[:-1] + (dim, dim))
    out[..., rows, cols] = packed
    out[..., cols, rows] = packed
    return out


class SymmetricMatrix:
    """Immutable symmetric matrix in packed upper-triangle storage.

    Symmetry is structural: only one copy of each off-diagonal entry exists.
    Supports ``+``, ``-``, scalar ``*`` and ``np.asarray`` conversion.
    """

    __slots__ = ("dim", "packed", "_dense")

    def __init__(self, packed, dim: int):
        packed = np.array(packed, dtype=float).ravel()
        if dim < 1:
            raise DimensionError(f"dim must be positive, got {dim}")
        if packed.size != packed_size(dim):
            raise DimensionError(
                f"packed length {packed.size} != dim*(dim+1)/2 = {packed_size(dim)}"
            )
        if not np.all(np.isfinite(packed)):
            raise ValidationError("non-finite entry in symmetric matrix")
        packed.setflags(write=False)
        self.dim = dim
        self.packed = packed
        self._dense = None

    @classmethod
    def from_dense(cls, dense, atol: float = 0.0) -> "SymmetricMatrix":
        """Build from a square array; entries must be symmetric within ``atol``."""
        dense = np.asarray(dense, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {dense.shape}")
        if not np.all(np.abs(dense - dense.T) <= atol):
            raise ValidationError("matrix is not symmetric")
        return cls(pack(dense), dense.shape[0])

    @classmethod
    def identity(cls, dim: int) -> "SymmetricMatrix":
        return cls.from_dense(np.eye(dim))

    def get(self, j: int, l: int) -> float:
        if j > l:
            j, l = l, j
        if not (0 <= j and l < self.dim):
            raise IndexError((j, l))
        # offset of row j in packed storage
        return float(self.packed[j * self.dim - j * (j - 1) // 2 + (l - j)])

    def dense(self) -> np.ndarray:
        if self._dense is None:
            d = unpack(self.packed)
            d.setflags(write=False)
            self._dense = d
        return self._dense

    def diagonal(self) -> np.ndarray:
        return self.dense().diagonal().copy()

    def __array__(self, dtype=None, copy=None):
        d = self.dense()
        return d.astype(dtype) if dtype is not None else d.copy()

    def _check_dim(self, other: "SymmetricMatrix"):
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if self._check_dim(other) is NotImplemented:
            return NotImplemented
        return SymmetricMatrix(self.packed + other.packed, self.dim)

    def __sub__(self, other):
        if self._check_dim(other) is NotImplemented:
            return NotImplemented
        return SymmetricMatrix(self.packed - other.packed, self.dim)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return SymmetricMatrix(self.packed * scalar, self.dim)

    __rmul__ = __mul__

    def __neg__(self):
        return SymmetricMatrix(-self.packed, self.dim)

    def __eq__(self, other):
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.packed, other.packed)

    def __hash__(self):
        return hash((self.dim, self.packed.tobytes()))

    def __repr__(self):
        return f"SymmetricMatrix(dim={self.dim}, packed={self.packed.tolist()})"


def sym_from_packed(packed, dim: int) -> SymmetricMatrix:
    return SymmetricMatrix(packed, dim)


class LowerTriangularFactor:
    """Cholesky factor ``L`` with strictly positive diagonal, stored row-major."""

    __slots__ = ("dim", "entries")

    def __init__(self, entries, dim: int):
        entries = np.array(entries, dtype=float).ravel()
        if entries.size != packed_size(dim):
            raise DimensionError("lower-triangular entry count does not match dim")
        rows, cols = np.tril_indices(dim)
        if np.any(entries[rows == cols] <= 0.0):
            raise ValidationError("Cholesky factor needs a positive diagonal")
        entries.setflags(write=False)
        self.dim = dim
        self.entries = entries

    def dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        out[np.tril_indices(self.dim)] = self.entries
        return out

    def __repr__(self):
        return f"LowerTriangularFactor(dim={self.dim}, entries={self.entries.tolist()})"


def cholesky(m: SymmetricMatrix) -> LowerTriangularFactor:
    """Cholesky-Banachiewicz factorization; never regularizes.

    Raises :class:`NotPositiveDefiniteError` on a non-positive pivot.
    """
    a = m.dense()
    p = m.dim
    L = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1):
            s = a[i, j] - L[i, :j] @ L[j, :j]
            if i == j:
                if not s > 0.0:
                    raise NotPositiveDefiniteError(
                        f"non-positive pivot {s!r} at row {i}; matrix is not positive definite"
                    )
                L[i, i] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return LowerTriangularFactor(L[np.tril_indices(p)], p)


def mvn_sample(mean, chol: LowerTriangularFactor, rng: np.random.Generator) -> np.ndarray:
    """One draw ``mean + L w`` with ``w`` standard normal from ``rng``."""
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (chol.dim,):
        raise DimensionError(f"mean has shape {mean.shape}, factor has dim {chol.dim}")
    w = rng.standard_normal(chol.dim)
    return mean + chol.dense() @ w


def _jacobi_eigenvalues(a: np.ndarray, tol: float, max_sweeps: int) -> np.ndarray:
    a = np.array(a, dtype=float)
    p = a.shape[0]
    big = np.abs(a).max()
    if big == 0.0 or p == 1:
        return a.diagonal().copy()
    # work on a unit-scale copy so squared sums neither overflow nor underflow
    a /= big
    scale = np.sqrt(np.sum(a * a))
    off_mask = ~np.eye(p, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[off_mask] ** 2))
        if off <= tol * scale:
            break
        for i in range(p - 1):
            for j in range(i + 1, p):
                aij = a[i, j]
                if aij == 0.0:
                    continue
                theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ai = a[:, i].copy()
                aj = a[:, j].copy()
                a[:, i] = c * ai - s * aj
                a[:, j] = s * ai + c * aj
                ai = a[i, :].copy()
                aj = a[j, :].copy()
                a[i, :] = c * ai - s * aj
                a[j, :] = s * ai + c * aj
                a[i, j] = a[j, i] = 0.0
    return a.diagonal() * big


def eigenvalues(m: SymmetricMatrix, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues (ascending) by cyclic Jacobi rotations."""
    return np.sort(_jacobi_eigenvalues(m.dense(), tol, max_sweeps))


def spectral_norm(m: SymmetricMatrix) -> float:
    """Largest eigenvalue magnitude of a symmetric matrix."""
    if not np.all(np.isfinite(m.packed)):
        raise ValidationError("non-finite entry")
    return float(np.max(np.abs(eigenvalues(m))))
