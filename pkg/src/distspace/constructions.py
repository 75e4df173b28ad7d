"""Generators for explicit degenerate families.

* the kite / trapezoid pair of planar four-point sets,
* two-fold degenerate pairs built from centrally symmetric pieces and an
  inversion of the points on a line through the symmetry center,
* near-equal simplex edge lengths for probing simplex degeneracy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .degeneracy import enumerate_assemblies
from .errors import ConstructionError
from .geometry import (
    STRUCTURAL_TOL,
    DistanceMultiset,
    PointConfiguration,
    congruent,
    DistanceAssignment,
    distance_matrix,
    embed,
    realizability_check,
)

# reference parameter for recovering edge patterns in the collapsed limit
_PATTERN_X = 0.75


def kite_trapezoid_lengths(x: float) -> tuple[float, float, float, float]:
    """Edge lengths ``(a, b, c, 1)`` of the kite-trapezoid family."""
    a = math.sqrt(2 * x * x - 3 * x + 1.25)
    b = math.sqrt(2 * x * x - x + 0.25)
    c = 2 * x - 1
    return a, b, c, 1.0


@dataclass
class KiteTrapezoidPair:
    x: float
    kite: PointConfiguration
    trapezoid: PointConfiguration
    edge_lengths: tuple
    # pair -> symbol ('a', 'b', 'c', 'd') for each shape
    kite_pattern: dict = field(default_factory=dict)
    trapezoid_pattern: dict = field(default_factory=dict)

    @property
    def multiset(self) -> tuple:
        a, b, c, d = self.edge_lengths
        return tuple(sorted((a, a, b, b, c, d)))


def _mirror_fixed_counts(mat: np.ndarray, tol: float) -> set:
    """Fixed-point counts of nontrivial involutive relabelings preserving ``mat``."""
    n = mat.shape[0]
    counts = set()
    for perm in itertools.permutations(range(n)):
        if list(perm) == list(range(n)) or any(perm[perm[i]] != i for i in range(n)):
            continue
        if np.max(np.abs(mat - mat[np.ix_(perm, perm)])) <= tol:
            counts.add(sum(perm[i] == i for i in range(n)))
    return counts


def _shape_patterns(x: float, tol: float) -> tuple[dict, dict]:
    a, b, c, d = kite_trapezoid_lengths(x)
    values = [a, a, b, b, c, d]
    symbols = ["a", "a", "b", "b", "c", "d"]
    classes = enumerate_assemblies(values, 2, tol)
    vals_sorted = classes.multiset.values
    # map sorted slot index back to a symbol
    order = sorted(range(6), key=lambda k: values[k])
    slot_symbol = {pos: symbols[k] for pos, k in enumerate(order)}
    kite = trap = None
    for rep, slots in zip(classes.classes, classes.slot_assignments):
        fixed = _mirror_fixed_counts(distance_matrix(rep), 1e-9 * max(vals_sorted))
        pattern = {pair: slot_symbol[k] for pair, k in slots.items()}
        if 2 in fixed and kite is None:
            kite = pattern
        elif 0 in fixed and trap is None:
            trap = pattern
    if kite is None or trap is None:
        raise ConstructionError(f"could not identify kite and trapezoid among {classes.order} classes at x={x}")
    return kite, trap


def _embed_pattern(pattern: dict, lengths: dict, tol: float) -> PointConfiguration:
    mat = np.zeros((4, 4))
    for (i, j), sym in pattern.items():
        mat[i, j] = mat[j, i] = lengths[sym]
    return embed(DistanceAssignment(mat, allow_coincident=True), 2, tol)


def kite_trapezoid(x: float, boundary: bool = False, tol: float = STRUCTURAL_TOL) -> KiteTrapezoidPair:
    """The kite and the trapezoid sharing the lengths ``{a, a, b, b, c, 1}``.

    Which length goes on which edge is not assumed.  All realizable
    assignments of the six lengths are enumerated.  The class with a mirror
    symmetry fixing two vertices is the kite, and the class whose mirror
    fixes no vertex is the trapezoid.  At ``x = 1/2`` (``boundary=True``) both
    shapes collapse onto a segment.  Their patterns are then taken from
    ``x = 0.75``.
    """
    if x < 0.5 or (x == 0.5 and not boundary):
        raise ConstructionError(f"x must exceed 1/2 (got {x}); pass boundary=True for x = 1/2")
    pattern_x = x if x > 0.5 else _PATTERN_X
    kite_pat, trap_pat = _shape_patterns(pattern_x, tol)
    lengths = kite_trapezoid_lengths(x)
    table = dict(zip("abcd", lengths))
    return KiteTrapezoidPair(
        x=x,
        kite=_embed_pattern(kite_pat, table, tol),
        trapezoid=_embed_pattern(trap_pat, table, tol),
        edge_lengths=lengths,
        kite_pattern=kite_pat,
        trapezoid_pattern=trap_pat,
    )


def outer_boundary_vertices(config: PointConfiguration) -> int:
    """Number of convex-hull vertices of a planar configuration."""
    from scipy.spatial import ConvexHull

    return len(ConvexHull(config.points).vertices)


# ---------------------------------------------------------------------------
# centrally symmetric two-fold construction
# ---------------------------------------------------------------------------


@dataclass
class SymmetricConstructionParams:
    """Geometry of the symmetric two-fold construction.

    ``gamma1`` is centrally symmetric about ``center``.  ``gamma2_positions``
    are positions along ``direction`` of points on a line through
    ``center + offset``, and must be symmetric about 0.  ``offset`` is
    perpendicular to ``direction``.  ``primary_positions`` place the primary
    points on the parallel line through ``center``.  The dual points are
    their mirror images through ``center``.
    """

    gamma1: PointConfiguration
    center: np.ndarray
    direction: np.ndarray
    offset: np.ndarray
    gamma2_positions: Sequence[float]
    primary_positions: Sequence[float]

    @property
    def dimension(self) -> int:
        return self.gamma1.dimension

    @property
    def n2(self) -> int:
        return len(self.gamma2_positions)

    @property
    def n3(self) -> int:
        return len(self.primary_positions)

    def validate(self, tol: float = 1e-9) -> None:
        d = self.dimension
        center = np.asarray(self.center, float)
        u = np.asarray(self.direction, float)
        off = np.asarray(self.offset, float)
        if center.shape != (d,) or u.shape != (d,) or off.shape != (d,):
            raise ConstructionError("center, direction and offset must have the dimension of gamma1")
        if np.linalg.norm(u) < tol or np.linalg.norm(off) < tol:
            raise ConstructionError("direction and offset must be nonzero")
        if abs(u @ off) > tol * np.linalg.norm(u) * np.linalg.norm(off):
            raise ConstructionError("offset (O1 -> O2) must be perpendicular to the lines")
        pts = self.gamma1.points
        mirrored = 2 * center - pts
        if not _same_point_set(pts, mirrored, tol):
            raise ConstructionError("gamma1 is not centrally symmetric about the center")
        s = np.asarray(self.gamma2_positions, float)
        if not _same_point_set(s[:, None], -s[:, None], tol):
            raise ConstructionError("gamma2 positions must be symmetric about O2")
        t = np.asarray(self.primary_positions, float)
        for i, j in itertools.combinations_with_replacement(range(len(t)), 2):
            if abs(t[i] + t[j]) <= tol:
                raise ConstructionError(f"primary points {i} and {j} are symmetric about the center")


def _same_point_set(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    if a.shape != b.shape:
        return False
    left = list(range(len(b)))
    for p in a:
        hit = next((k for k in left if np.linalg.norm(b[k] - p) <= tol), None)
        if hit is None:
            return False
        left.remove(hit)
    return True


@dataclass
class SymmetricPair:
    primary: PointConfiguration
    dual: PointConfiguration
    multisets_equal: bool
    congruent: bool
    max_multiset_gap: float


def symmetric_two_fold(params: SymmetricConstructionParams, tol: float = 1e-9) -> SymmetricPair:
    """Build the primary/dual pair and verify it is degenerate.

    Both configurations share the centrally symmetric set and the line set.
    One carries the primary points on the line through the center, the other
    carries their inversions through the center.  Raises
    :class:`ConstructionError` if the two come out congruent or if the
    combined point sets contain coincident points.
    """
    params.validate()
    center = np.asarray(params.center, float)
    u = np.asarray(params.direction, float)
    u = u / np.linalg.norm(u)
    o2 = center + np.asarray(params.offset, float)
    line2 = np.array([o2 + s * u for s in params.gamma2_positions]).reshape(-1, params.dimension)
    primary_pts = np.array([center + t * u for t in params.primary_positions]).reshape(-1, params.dimension)
    dual_pts = 2 * center - primary_pts
    shared = np.vstack([params.gamma1.points, line2])
    primary = PointConfiguration(np.vstack([shared, primary_pts]))
    dual = PointConfiguration(np.vstack([shared, dual_pts]))

    dp, dd = distance_matrix(primary), distance_matrix(dual)
    iu = np.triu_indices(primary.n, 1)
    scale = float(np.mean(dp[iu]))
    if np.min(dp[iu]) <= tol * scale or np.min(dd[iu]) <= tol * scale:
        raise ConstructionError("construction produced coincident points")
    gap = float(np.max(np.abs(np.sort(dp[iu]) - np.sort(dd[iu]))))
    same = gap <= 1e-12 * max(1.0, scale)
    is_congruent = congruent(primary, dual, tol=1e-6)
    if is_congruent:
        raise ConstructionError("primary and dual configurations are congruent (accidental symmetry)")
    return SymmetricPair(primary, dual, same, is_congruent, gap)


def default_symmetric_params(d: int = 2) -> SymmetricConstructionParams:
    """A documented default instance in 2 or 3 dimensions.

    The centrally symmetric piece is a rectangle (2D) or a box (3D), tilted so
    that it has no mirror plane perpendicular to the lines.  Three evenly
    spaced points sit on a line at unit offset.  Two primary points sit on
    the line through the center.
    """
    if d == 2:
        half = np.array([[0.8, 0.45], [0.8, -0.45]])
        rot = _rotation2(0.5)
    elif d == 3:
        half = np.array([[0.8, 0.45, 0.3], [0.8, -0.45, 0.3], [0.8, 0.45, -0.3], [-0.8, 0.45, 0.3]])
        rot = _rotation3(0.5, 0.3, 0.2)
    else:
        raise ValueError("default parameters exist for d = 2 and d = 3")
    half = half @ rot.T
    gamma1 = PointConfiguration(np.vstack([half, -half]))
    direction = np.eye(d)[0]
    offset = np.eye(d)[1] * 1.0
    return SymmetricConstructionParams(
        gamma1=gamma1,
        center=np.zeros(d),
        direction=direction,
        offset=offset,
        gamma2_positions=[-1.0, 0.0, 1.0],
        primary_positions=[0.35, 1.3],
    )


def random_symmetric_params(d: int, seed: int, n1_half: int = 2, n2: int = 3, n3: int = 2) -> SymmetricConstructionParams:
    """Randomized parameters satisfying the construction's invariants."""
    rng = np.random.default_rng(seed)
    half = rng.normal(size=(n1_half, d))
    gamma1 = PointConfiguration(np.vstack([half, -half]))
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    direction, offset = q[:, 0], q[:, 1] * rng.uniform(0.5, 2.0)
    center = rng.normal(size=d)
    gamma1 = PointConfiguration(gamma1.points + center)
    k = n2 // 2
    steps = np.cumsum(rng.uniform(0.3, 1.0, size=k))
    gamma2 = list(-steps[::-1]) + ([0.0] if n2 % 2 else []) + list(steps)
    primary = []
    while len(primary) < n3:
        t = float(rng.uniform(0.2, 2.0) * rng.choice([-1, 1]))
        if all(abs(t + s) > 0.05 and abs(t - s) > 0.05 for s in primary):
            primary.append(t)
    return SymmetricConstructionParams(gamma1, center, direction, offset, gamma2, primary)


def _rotation2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _rotation3(a: float, b: float, c: float) -> np.ndarray:
    rz = np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1]])
    ry = np.array([[math.cos(b), 0, math.sin(b)], [0, 1, 0], [-math.sin(b), 0, math.cos(b)]])
    rx = np.array([[1, 0, 0], [0, math.cos(c), -math.sin(c)], [0, math.sin(c), math.cos(c)]])
    return rz @ ry @ rx


# ---------------------------------------------------------------------------
# near-equal simplex edges
# ---------------------------------------------------------------------------

_RESAMPLE_CAP = 100


def generic_simplex_distances(
    d: int,
    mean: float = 1.0,
    spread: float = 0.05,
    seed: int = 0,
    distinct: bool = True,
    tol: float = STRUCTURAL_TOL,
) -> DistanceMultiset:
    """``d(d+1)/2`` lengths ``mean + delta_i`` with mutually distinct ``|delta_i| <= spread``.

    The offsets come from a scrambled Halton sequence seeded by ``seed``, so
    output is reproducible.  Draws that fail the simplex inequalities are
    replaced by the next block of the sequence.
    """
    m = d * (d + 1) // 2
    if spread == 0:
        if distinct:
            raise ConstructionError("spread 0 cannot give distinct offsets; pass distinct=False")
        return DistanceMultiset([mean] * m)
    sampler = qmc.Halton(d=1, scramble=True, seed=seed)
    for _ in range(_RESAMPLE_CAP):
        delta = spread * (2.0 * sampler.random(m)[:, 0] - 1.0)
        values = mean + delta
        if distinct and len(np.unique(values)) < m:
            continue
        mat = DistanceAssignment.from_ordered(values, n=d + 1)
        if realizability_check(mat, d, tol).realizable:
            return DistanceMultiset(values)
    raise ConstructionError(f"no realizable draw within {_RESAMPLE_CAP} attempts; reduce spread")
