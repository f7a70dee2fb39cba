"""Dense column-vector arithmetic and orthogonal projection.

Everything here is pure: inputs are never mutated, outputs are freshly
allocated, and all arithmetic is float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateFeatureError,
    DegenerateSubspaceError,
    DimensionError,
    FeatureLookupError,
)

# Rank-deficiency cutoff: residual norms below drop_tol times the candidate's
# original norm are treated as rounding debris, not a new direction.
DEFAULT_DROP_TOL = 1e-10

# A vector with Euclidean norm <= this (times sqrt(n)) cannot be projected
# against without dividing by noise.
ZERO_NORM_TOL = 1e-12


def _as_float_array(values, *, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{what} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError(f"{what} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class FeatureVector:
    """A named column of n finite float64 samples. Immutable."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.values, what=f"feature '{self.name}'").copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def with_values(self, values: np.ndarray) -> "FeatureVector":
        return FeatureVector(self.name, values)


@dataclass(frozen=True)
class FeatureMatrix:
    """An ordered collection of uniquely named columns sharing length n."""

    columns: tuple[FeatureVector, ...]

    def __post_init__(self):
        cols = tuple(self.columns)
        if len(cols) < 1:
            raise DimensionError("matrix needs at least one column")
        n = len(cols[0])
        if n < 2:
            raise DimensionError("matrix needs at least two samples")
        for c in cols:
            if len(c) != n:
                raise DimensionError(
                    f"column '{c.name}' has length {len(c)}, expected {n}"
                )
        names = [c.name for c in cols]
        if len(set(names)) != len(names):
            dupes = sorted({x for x in names if names.count(x) > 1})
            raise DimensionError(f"duplicate column names: {dupes}")
        object.__setattr__(self, "columns", cols)

    @classmethod
    def from_arrays(cls, names: Sequence[str], data: np.ndarray) -> "FeatureMatrix":
        """Build from an n x k array whose columns line up with ``names``."""
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {data.shape}")
        if data.shape[1] != len(names):
            raise DimensionError(
                f"{len(names)} names for {data.shape[1]} columns"
            )
        return cls(tuple(FeatureVector(nm, data[:, j]) for j, nm in enumerate(names)))

    @property
    def n(self) -> int:
        return len(self.columns[0])

    @property
    def k(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def index(self, name: str) -> int:
        for j, c in enumerate(self.columns):
            if c.name == name:
                return j
        raise FeatureLookupError(f"no feature named '{name}' (have {list(self.names)})")

    def column(self, name: str) -> FeatureVector:
        return self.columns[self.index(name)]

    def as_array(self) -> np.ndarray:
        """Fresh n x k float64 array in column order."""
        return np.column_stack([c.values for c in self.columns])

    def take_rows(self, rows: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            tuple(FeatureVector(c.name, c.values[rows]) for c in self.columns)
        )

    def drop(self, name: str) -> "FeatureMatrix":
        idx = self.index(name)
        return FeatureMatrix(tuple(c for j, c in enumerate(self.columns) if j != idx))


@dataclass(frozen=True)
class ProjectionBasis:
    """Mutually orthonormal vectors spanning the subspace to remove.

    ``dropped_count`` is how many near-dependent candidates were discarded
    while building the basis.
    """

    vectors: tuple[FeatureVector, ...]
    dropped_count: int = 0

    def __post_init__(self):
        vecs = tuple(self.vectors)
        if not vecs:
            raise DegenerateSubspaceError("a projection basis needs at least one vector")
        n = len(vecs[0])
        for v in vecs:
            if len(v) != n:
                raise DimensionError("basis vectors must share a common length")
            if abs(v.norm - 1.0) > 1e-10:
                raise ValueError(f"basis vector '{v.name}' is not unit-norm")
        arr = np.column_stack([v.values for v in vecs])
        gram = arr.T @ arr
        off = gram - np.eye(len(vecs))
        if np.max(np.abs(off)) > 1e-10 * n:
            raise ValueError("basis vectors are not mutually orthogonal")
        object.__setattr__(self, "vectors", vecs)

    @property
    def n(self) -> int:
        return len(self.vectors[0])

    def as_array(self) -> np.ndarray:
        return np.column_stack([v.values for v in self.vectors])


def dot(a: FeatureVector, b: FeatureVector) -> float:
    """Mathematical dot product of two equal-length vectors."""
    if len(a) != len(b):
        raise DimensionError(f"length mismatch: {len(a)} vs {len(b)}")
    return float(np.dot(a.values, b.values))


def project_out(v: FeatureVector, u: FeatureVector) -> FeatureVector:
    """Component of ``v`` orthogonal to ``u``: v - (u.v / u.u) u.

    Raises DegenerateFeatureError when ``u`` is numerically zero, since the
    coefficient would divide by noise.
    """
    if len(v) != len(u):
        raise DimensionError(f"length mismatch: {len(v)} vs {len(u)}")
    n = len(u)
    u_norm = float(np.linalg.norm(u.values))
    if u_norm <= ZERO_NORM_TOL * np.sqrt(n):
        raise DegenerateFeatureError(
            f"cannot project against '{u.name}': norm {u_norm:.3e} is numerically zero"
        )
    coef = float(np.dot(u.values, v.values)) / float(np.dot(u.values, u.values))
    return v.with_values(v.values - coef * u.values)


def orthonormalize(
    candidates: Sequence[FeatureVector], drop_tol: float = DEFAULT_DROP_TOL
) -> ProjectionBasis:
    """Modified Gram-Schmidt with one re-orthogonalization pass per vector.

    A candidate is dropped when its residual after projection against the
    vectors accepted so far has norm < drop_tol times its original norm
    (rank deficiency rather than a new direction). Raises
    DegenerateSubspaceError when nothing survives.
    """
    cands = list(candidates)
    if not cands:
        raise DegenerateSubspaceError("no candidates to orthonormalize")
    n = len(cands[0])
    for c in cands:
        if len(c) != n:
            raise DimensionError("candidates must share a common length")

    accepted: list[np.ndarray] = []
    kept: list[FeatureVector] = []
    dropped = 0
    for c in cands:
        v = c.values.copy()
        orig = float(np.linalg.norm(v))
        if orig == 0.0:
            dropped += 1
            continue
        for _ in range(2):  # second sweep mops up cancellation error
            for q in accepted:
                v -= np.dot(q, v) * q
        resid = float(np.linalg.norm(v))
        if resid < drop_tol * orig:
            dropped += 1
            continue
        q = v / resid
        accepted.append(q)
        kept.append(FeatureVector(c.name, q))
    if not kept:
        raise DegenerateSubspaceError(
            f"all {len(cands)} candidates were dropped as rank-deficient"
        )
    return ProjectionBasis(tuple(kept), dropped_count=dropped)


def _complement_projection(data: np.ndarray, basis_arr: np.ndarray) -> np.ndarray:
    # Two passes: the second removes the components reintroduced by rounding,
    # keeping residuals orthogonal relative to their own (possibly tiny) norms.
    out = data - basis_arr @ (basis_arr.T @ data)
    out -= basis_arr @ (basis_arr.T @ out)
    return out


def transform_against_feature(
    X_pre: FeatureMatrix, current: str, basis: ProjectionBasis
) -> FeatureMatrix:
    """Drop ``current`` and project every other column onto the orthogonal
    complement of span(basis). Column order and names are preserved."""
    idx = X_pre.index(current)
    if X_pre.k == 1:
        raise DimensionError("cannot transform a single-column matrix; nothing remains")
    if basis.n != X_pre.n:
        raise DimensionError(
            f"basis length {basis.n} does not match sample count {X_pre.n}"
        )
    rest = [c for j, c in enumerate(X_pre.columns) if j != idx]
    data = np.column_stack([c.values for c in rest])
    projected = _complement_projection(data, basis.as_array())
    return FeatureMatrix(
        tuple(FeatureVector(c.name, projected[:, j]) for j, c in enumerate(rest))
    )


def transform_against_vector(
    X_pre: FeatureMatrix, current: str, u: FeatureVector
) -> FeatureMatrix:
    """Single-vector removal: drop ``current`` and apply project_out(col, u)
    to every remaining column. This is the linear-only transformation; the
    basis route reduces to it when no nonlinear companions are enabled."""
    idx = X_pre.index(current)
    if X_pre.k == 1:
        raise DimensionError("cannot transform a single-column matrix; nothing remains")
    rest = [c for j, c in enumerate(X_pre.columns) if j != idx]
    return FeatureMatrix(tuple(project_out(c, u) for c in rest))
