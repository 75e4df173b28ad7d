"""Core distance-geometry predicates and constructions.

Distances, Cayley-Menger volumes, Gram matrices, realizability in R^d,
canonical-gauge embedding and congruence testing.  All functions are pure.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DuplicatePointError, RealizabilityError, ShapeError

STRUCTURAL_TOL = 1e-9
PAPER_TOL = 1e-4

# (d+1)-minor cross-check is only recorded below this point count
_MINOR_CHECK_MAX_N = 7


@dataclass(frozen=True)
class PointConfiguration:
    """``n`` labeled points in R^d, stored as an ``(n, d)`` float array."""

    points: np.ndarray

    def __init__(self, points: Iterable[Sequence[float]], dimension: Optional[int] = None):
        arr = np.array(points, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1) if dimension == 1 else arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ShapeError(f"points must form a non-empty (n, d) array, got shape {arr.shape}")
        if dimension is not None and arr.shape[1] != dimension:
            raise ShapeError(f"expected {dimension} coordinates per point, got {arr.shape[1]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coordinates must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "points", arr)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PointConfiguration):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(np.all(self.points == other.points))

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    def transformed(self, rotation: np.ndarray, translation: Optional[np.ndarray] = None) -> "PointConfiguration":
        out = self.points @ np.asarray(rotation, dtype=float).T
        if translation is not None:
            out = out + np.asarray(translation, dtype=float)
        return PointConfiguration(out)

    def scaled(self, factor: float) -> "PointConfiguration":
        return PointConfiguration(self.points * factor)

    def relabeled(self, order: Sequence[int]) -> "PointConfiguration":
        return PointConfiguration(self.points[list(order)])


@dataclass(frozen=True)
class DistanceAssignment:
    """Symmetric matrix of pair distances with zero diagonal.

    Coincident points (zero off-diagonal entries) are rejected unless
    ``allow_coincident`` is set; the collapsed x = 1/2 kite-trapezoid limit
    needs them.
    """

    matrix: np.ndarray

    def __init__(self, matrix, allow_coincident: bool = False, atol: float = 1e-12):
        arr = np.array(matrix, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ShapeError(f"distance matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("distances must be finite")
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        if not np.allclose(arr, arr.T, rtol=0.0, atol=atol * scale):
            raise ValueError("distance matrix is not symmetric")
        if np.any(np.abs(np.diag(arr)) > atol * scale):
            raise ValueError("distance matrix must have a zero diagonal")
        arr = 0.5 * (arr + arr.T)
        np.fill_diagonal(arr, 0.0)
        if np.any(arr < 0):
            raise ValueError("distances must be nonnegative")
        n = arr.shape[0]
        if n > 1 and not allow_coincident:
            off = arr[np.triu_indices(n, 1)]
            if np.any(off <= 0):
                raise DuplicatePointError("off-diagonal distances must be strictly positive")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @classmethod
    def from_pairs(cls, n: int, pairs: dict, allow_coincident: bool = False) -> "DistanceAssignment":
        """Build from ``{(i, j): distance}`` with every pair ``i < j`` present."""
        m = np.zeros((n, n))
        seen = set()
        for (i, j), v in pairs.items():
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ShapeError(f"bad pair ({i}, {j}) for n={n}")
            m[i, j] = m[j, i] = v
            seen.add((min(i, j), max(i, j)))
        missing = [p for p in itertools.combinations(range(n), 2) if p not in seen]
        if missing:
            raise ShapeError(f"missing distances for pairs {missing[:5]}")
        return cls(m, allow_coincident=allow_coincident)

    @classmethod
    def from_ordered(cls, values: Sequence[float], n: Optional[int] = None, allow_coincident: bool = False) -> "DistanceAssignment":
        """Fill pairs in construction order (1,2), (1,3), (2,3), (1,4), (2,4), (3,4), ...

        This is the ordering ``d_1, d_2, ...`` used when points are added one at a
        time, each new point contributing its distances to all earlier points.
        """
        values = list(values)
        if n is None:
            n = n_from_pair_count(len(values))
        pairs = construction_pairs(n)
        if len(pairs) != len(values):
            raise ShapeError(f"{len(values)} values do not fill {len(pairs)} pairs")
        return cls.from_pairs(n, dict(zip(pairs, values)), allow_coincident=allow_coincident)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def upper(self) -> np.ndarray:
        """Upper-triangle values in row-major order."""
        return self.matrix[np.triu_indices(self.n, 1)]

    def ordered(self) -> np.ndarray:
        """Values in construction order (see :meth:`from_ordered`)."""
        return np.array([self.matrix[i, j] for i, j in construction_pairs(self.n)])

    def multiset(self) -> "DistanceMultiset":
        return DistanceMultiset(self.upper())

    def subset(self, labels: Sequence[int]) -> "DistanceAssignment":
        idx = list(labels)
        return DistanceAssignment(self.matrix[np.ix_(idx, idx)], allow_coincident=True)


@dataclass(frozen=True)
class DistanceMultiset:
    """Unordered multiset of ``m = n(n-1)/2`` pair distances (stored sorted)."""

    values: tuple

    def __init__(self, values: Iterable[float]):
        vals = tuple(sorted(float(v) for v in values))
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise ValueError("multiset values must be finite and nonnegative")
        n_from_pair_count(len(vals))
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return n_from_pair_count(len(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


@dataclass
class FeasibilityReport:
    """Verdict of :func:`realizability_check` with its diagnostics.

    ``residuals`` holds scale-normalized quantities: simplex squared volumes
    (divided by ``scale**(2k)``) and, for small ``n``, the (d+1)-minor
    determinants of the Gram matrix (divided by ``scale**(2(d+1))``).
    ``eigenvalues`` are Gram eigenvalues divided by ``scale**2``.
    """

    realizable: bool
    dimension: int
    failed_condition: Optional[str] = None
    residuals: list = field(default_factory=list)
    residual_labels: list = field(default_factory=list)
    eigenvalues: list = field(default_factory=list)
    rank: int = 0
    tolerance_used: float = STRUCTURAL_TOL
    scale: float = 1.0

    def __bool__(self) -> bool:
        return self.realizable


def n_from_pair_count(m: int) -> int:
    n = int(round((1 + math.sqrt(1 + 8 * m)) / 2))
    if n < 2 or n * (n - 1) // 2 != m:
        raise ShapeError(f"{m} is not a pair count n(n-1)/2 for any n >= 2")
    return n


def construction_pairs(n: int) -> list[tuple[int, int]]:
    """Pairs in the order points are attached: (0,1), (0,2), (1,2), (0,3), ..."""
    return [(j, i) for i in range(1, n) for j in range(i)]


def _as_matrix(dists) -> np.ndarray:
    if isinstance(dists, DistanceAssignment):
        return dists.matrix
    return np.asarray(dists, dtype=float)


def _scale(mat: np.ndarray) -> float:
    n = mat.shape[0]
    if n < 2:
        return 1.0
    off = mat[np.triu_indices(n, 1)]
    s = float(np.mean(off))
    return s if s > 0 else 1.0


def distance_matrix(points) -> np.ndarray:
    """Euclidean distance matrix of raw coordinates, no validity checks."""
    p = points.points if isinstance(points, PointConfiguration) else np.asarray(points, dtype=float)
    diff = p[:, None, :] - p[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def pairwise_distances(config: PointConfiguration, tol: float = 1e-12, allow_coincident: bool = False) -> DistanceAssignment:
    """Measure all pair distances of a configuration.

    Raises :class:`DuplicatePointError` if two points are closer than
    ``tol`` times the mean pair distance.
    """
    if config.n < 2:
        raise ShapeError("need at least two points")
    mat = distance_matrix(config)
    if not allow_coincident:
        off = mat[np.triu_indices(config.n, 1)]
        if np.any(off <= tol * max(_scale(mat), 1e-300)):
            i, j = np.argwhere(np.triu(mat <= tol * _scale(mat), 1) & ~np.eye(config.n, dtype=bool))[0]
            raise DuplicatePointError(f"points {i} and {j} coincide")
    return DistanceAssignment(mat, allow_coincident=allow_coincident)


def cayley_menger_squared_volume(dists, k: Optional[int] = None) -> float:
    """Squared volume of the k-simplex with the given ``(k+1)`` x ``(k+1)`` distances.

    Negative values signal distances that cannot close into a simplex.
    """
    mat = _as_matrix(dists)
    if k is None:
        k = mat.shape[0] - 1
    if mat.shape != (k + 1, k + 1):
        raise ShapeError(f"a {k}-simplex needs a {k + 1}x{k + 1} distance matrix, got {mat.shape}")
    if k == 0:
        return 1.0
    bordered = np.ones((k + 2, k + 2))
    bordered[0, 0] = 0.0
    bordered[1:, 1:] = mat * mat
    coeff = (-1) ** (k + 1) / (2**k * math.factorial(k) ** 2)
    return float(coeff * np.linalg.det(bordered))


def simplex_inequality_holds(dists, k: Optional[int] = None, tol: float = STRUCTURAL_TOL, strict: bool = False) -> bool:
    """True if the distances close into a k-simplex of nonnegative volume.

    The squared volume is compared against ``tol * scale**(2k)``; in strict
    mode the simplex must have volume clearly above zero.
    """
    mat = _as_matrix(dists)
    if k is None:
        k = mat.shape[0] - 1
    vol2 = cayley_menger_squared_volume(mat, k) / _scale(mat) ** (2 * k)
    return vol2 > tol if strict else vol2 >= -tol


def gram_from_distances(dists, origin_index: int = 0) -> np.ndarray:
    """Gram matrix of the difference vectors ``v_i - v_origin``.

    Rows/columns follow the point order with the origin removed.
    """
    mat = _as_matrix(dists)
    sq = mat * mat
    keep = [i for i in range(mat.shape[0]) if i != origin_index]
    to_origin = sq[keep, origin_index]
    g = 0.5 * (to_origin[:, None] + to_origin[None, :] - sq[np.ix_(keep, keep)])
    return g


def _all_minors(g: np.ndarray, size: int) -> list[float]:
    rows = list(itertools.combinations(range(g.shape[0]), size))
    return [float(np.linalg.det(g[np.ix_(r, c)])) for r in rows for c in rows]


def _gram_realizable(mat: np.ndarray, d: int, tol: float) -> bool:
    """Fast eigenvalue-only version of :func:`realizability_check`."""
    n = mat.shape[0]
    if n < 2:
        return True
    s2 = _scale(mat) ** 2
    ev = np.linalg.eigvalsh(gram_from_distances(mat)) / s2
    return bool(ev[0] >= -tol and np.count_nonzero(ev > tol) <= d)


def realizability_check(dists, d: int, tol: float = STRUCTURAL_TOL) -> FeasibilityReport:
    """Decide whether the distances are realizable by points in R^d.

    The verdict is the Gram test: positive semidefinite with at most ``d``
    eigenvalues above tolerance.  Simplex inequalities along the construction
    order (and, for small ``n``, all (d+1)-minors) are recorded as a
    cross-check and must agree for a positive verdict.
    """
    mat = _as_matrix(dists)
    n = mat.shape[0]
    if n < 2:
        raise ShapeError("need at least two points")
    scale = _scale(mat)
    report = FeasibilityReport(realizable=True, dimension=d, tolerance_used=tol, scale=scale)

    # reference simplices P1..Pk, then each later point against P1..Pd
    ref = min(d, n)
    for k in range(2, ref + 1):
        idx = list(range(k))
        _record_simplex(report, mat, idx, scale, tol, f"simplex-inequality:{tuple(i + 1 for i in idx)}")
    for i in range(d, n):
        idx = list(range(d)) + [i]
        if len(idx) >= 3:
            _record_simplex(report, mat, idx, scale, tol, f"simplex-inequality:{tuple(j + 1 for j in idx)}")

    g = gram_from_distances(mat)
    ev = np.linalg.eigvalsh(g) / scale**2
    report.eigenvalues = [float(v) for v in ev]
    report.rank = int(np.count_nonzero(ev > tol))
    if report.failed_condition is None:
        if ev[0] < -tol:
            report.realizable = False
            report.failed_condition = "gram-negative-eigenvalue"
        elif report.rank > d:
            report.realizable = False
            report.failed_condition = f"gram-rank>{d}"

    if n - 1 > d and n <= _MINOR_CHECK_MAX_N:
        for value in _all_minors(g, d + 1):
            v = value / scale ** (2 * (d + 1))
            report.residuals.append(v)
            report.residual_labels.append(f"minor-{d + 1}")
            if abs(v) > tol and report.failed_condition is None:
                report.realizable = False
                report.failed_condition = f"minor-rank:{d + 1}"
    return report


def _record_simplex(report: FeasibilityReport, mat: np.ndarray, idx: list, scale: float, tol: float, label: str) -> None:
    k = len(idx) - 1
    v = cayley_menger_squared_volume(mat[np.ix_(idx, idx)], k) / scale ** (2 * k)
    report.residuals.append(v)
    report.residual_labels.append(label)
    if v < -tol and report.failed_condition is None:
        report.realizable = False
        report.failed_condition = label


def embed(dists, d: int, tol: float = STRUCTURAL_TOL, strict: bool = False) -> PointConfiguration:
    """Coordinates in R^d reproducing the given distances, in canonical gauge.

    Point 1 sits at the origin, point 2 on the positive first axis, and each
    point that leaves the span of its predecessors opens the next axis with a
    positive coordinate.  Points inside that span get zero trailing
    coordinates.  In strict mode a configuration whose affine hull has lower
    dimension than ``min(n-1, d)`` is rejected.
    """
    mat = _as_matrix(dists)
    report = realizability_check(mat, d, tol)
    if not report.realizable:
        raise RealizabilityError(report)
    n = mat.shape[0]
    scale = report.scale
    thr = tol * scale**2

    g = gram_from_distances(mat)
    ev, vecs = np.linalg.eigh(g)
    order = np.argsort(ev)[::-1][:d]
    lam = ev[order]
    keep = lam > thr
    y = np.zeros((n - 1, d))
    y[:, : int(keep.sum())] = vecs[:, order[keep]] * np.sqrt(lam[keep])

    axes: list[np.ndarray] = []
    opened = []  # axes available after each point is placed
    for row in y:
        if len(axes) < d:
            resid = row.copy()
            for a in axes:
                resid -= (resid @ a) * a
            if resid @ resid > thr:
                axes.append(resid / np.linalg.norm(resid))
        opened.append(len(axes))
    if strict and len(axes) < min(n - 1, d):
        raise RealizabilityError(report, f"degenerate reference simplex: affine rank {len(axes)} < {min(n - 1, d)}")

    coords = np.zeros((n, d))
    if axes:
        coords[1:, : len(axes)] = y @ np.array(axes).T
        for i, c in enumerate(opened, start=1):
            coords[i, c:] = 0.0
    return PointConfiguration(coords)


def _rows_signature(mat: np.ndarray) -> np.ndarray:
    return np.sort(np.sort(mat, axis=1), axis=0)


def distance_matrices_congruent(a: np.ndarray, b: np.ndarray, tol: float) -> Optional[list[int]]:
    """Search a relabeling ``perm`` with ``a[i, j] ~= b[perm[i], perm[j]]``.

    Backtracking over bijections; candidates for each point are pruned by
    comparing sorted distance rows.  Returns the relabeling or ``None``.
    """
    n = a.shape[0]
    if b.shape != a.shape:
        return None
    rows_a = np.sort(a, axis=1)
    rows_b = np.sort(b, axis=1)
    compat = np.all(np.abs(rows_a[:, None, :] - rows_b[None, :, :]) <= tol, axis=2)
    if not np.all(compat.any(axis=1)) or not np.all(compat.any(axis=0)):
        return None
    # most constrained points first
    order = sorted(range(n), key=lambda i: int(compat[i].sum()))
    perm = [-1] * n
    used = [False] * n

    def extend(depth: int) -> bool:
        if depth == n:
            return True
        i = order[depth]
        placed = order[:depth]
        for j in np.flatnonzero(compat[i]):
            if used[j]:
                continue
            if all(abs(a[i, k] - b[j, perm[k]]) <= tol for k in placed):
                perm[i] = int(j)
                used[j] = True
                if extend(depth + 1):
                    return True
                used[j] = False
                perm[i] = -1
        return False

    return perm if extend(0) else None


def congruent(
    a: PointConfiguration,
    b: PointConfiguration,
    tol: float = 1e-6,
    allow_isotropic_rescale: bool = False,
) -> bool:
    """True if ``b`` is an isometric copy of ``a`` up to relabeling of points.

    Reflections count as isometries.  ``tol`` is relative to the mean pair
    distance of ``a``.  With ``allow_isotropic_rescale`` each configuration is
    first normalized to unit mean pair distance.
    """
    if a.n != b.n or a.dimension != b.dimension:
        raise ShapeError(f"cannot compare {a.n} points in R^{a.dimension} with {b.n} points in R^{b.dimension}")
    da = distance_matrix(a)
    db = distance_matrix(b)
    if a.n == 1:
        return True
    sa, sb = _scale(da), _scale(db)
    if allow_isotropic_rescale:
        da, db = da / sa, db / sb
        sa = 1.0
    return distance_matrices_congruent(da, db, tol * sa) is not None


def free_dimension(n: int, d: int) -> int:
    """Number of pair distances constrained only by inequalities."""
    if n < 2 or d < 1:
        raise ValueError("need n >= 2 and d >= 1")
    if n <= d:
        return n * (n - 1) // 2
    return d * (d - 1) // 2 + (n - d) * d
