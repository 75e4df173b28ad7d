"""Three-body and circuit diagnostics of finite configurations."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ShapeError
from .geometry import DistanceMultiset, PointConfiguration, _scale, distance_matrix

logger = logging.getLogger(__name__)

MAX_CIRCUIT_POINTS = 12


@dataclass(frozen=True)
class TriangleMultiset:
    """Side lengths of every point triple, each sorted, the list sorted lexicographically."""

    triples: tuple

    def __len__(self) -> int:
        return len(self.triples)

    def as_array(self) -> np.ndarray:
        return np.array(self.triples).reshape(-1, 3)


def triangle_multiset(config: PointConfiguration) -> TriangleMultiset:
    if config.n < 3:
        raise ShapeError("need at least three points")
    mat = distance_matrix(config)
    triples = []
    for i, j, k in itertools.combinations(range(config.n), 3):
        triples.append(tuple(sorted((float(mat[i, j]), float(mat[i, k]), float(mat[j, k])))))
    triples.sort()
    return TriangleMultiset(tuple(triples))


def _sorted_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    # lexicographic sort with tolerance: round keys to the tolerance grid
    if len(rows) == 0:
        return rows
    grid = max(tol, 1e-300)
    keys = np.round(rows / grid)
    order = np.lexsort(keys.T[::-1])
    return rows[order]


def multiset_equal(a, b, tol: float = 1e-9) -> bool:
    """Compare two distance multisets or two triangle multisets within ``tol``."""
    if isinstance(a, TriangleMultiset) != isinstance(b, TriangleMultiset):
        raise TypeError("cannot compare a triangle multiset with a distance multiset")
    if isinstance(a, TriangleMultiset):
        ra, rb = a.as_array(), b.as_array()
        if ra.shape != rb.shape:
            logger.info("triangle multisets differ in size: %d vs %d", len(ra), len(rb))
            return False
        # triples are already sorted lexicographically; re-sorting on the
        # tolerance grid makes near-ties order consistently on both sides
        ra, rb = _sorted_rows(ra, tol), _sorted_rows(rb, tol)
        if np.all(np.abs(ra - rb) <= tol):
            return True
        return _match_triples(ra, rb, tol)
    va = np.sort(np.asarray(a.values if isinstance(a, DistanceMultiset) else list(a), dtype=float))
    vb = np.sort(np.asarray(b.values if isinstance(b, DistanceMultiset) else list(b), dtype=float))
    if va.shape != vb.shape:
        logger.info("multisets differ in size: %d vs %d", len(va), len(vb))
        return False
    return bool(np.all(np.abs(va - vb) <= tol))


def _match_triples(ra: np.ndarray, rb: np.ndarray, tol: float) -> bool:
    """Greedy matching fallback when near-ties break the sorted order."""
    left = list(range(len(rb)))
    for row in ra:
        hit = next((k for k in left if np.all(np.abs(rb[k] - row) <= tol)), None)
        if hit is None:
            return False
        left.remove(hit)
    return True


@dataclass
class CircuitReport:
    """All undirected Hamiltonian cycles through the points.

    ``orders[i]`` is a cycle starting at point 0 whose second vertex is
    smaller than its last, so each undirected cycle appears once.
    ``distinct_lengths`` are cycle lengths merged within the length
    tolerance.
    """

    orders: np.ndarray
    lengths: np.ndarray
    distinct_lengths: list
    length_tol: float

    @property
    def count(self) -> int:
        return len(self.lengths)

    @property
    def distinct_length_count(self) -> int:
        return len(self.distinct_lengths)

    @property
    def shortest(self) -> tuple:
        k = int(np.argmin(self.lengths))
        return [int(v) for v in self.orders[k]], float(self.lengths[k])

    @property
    def circuits(self) -> list:
        return [([int(v) for v in o], float(length)) for o, length in zip(self.orders, self.lengths)]


def _cluster(values: np.ndarray, tol: float) -> list:
    """Representative (smallest) value of each run of sorted values with gaps <= tol."""
    if len(values) == 0:
        return []
    v = np.sort(values)
    starts = np.concatenate([[True], np.diff(v) > tol])
    return [float(x) for x in v[starts]]


def _permutations(k: int) -> np.ndarray:
    """All permutations of ``range(k)`` as a ``(k!, k)`` int8 array."""
    perms = np.zeros((1, 0), dtype=np.int8)
    for m in range(k):
        # insert the new element m at every position of each shorter permutation
        rows = len(perms)
        out = np.empty((rows * (m + 1), m + 1), dtype=np.int8)
        for pos in range(m + 1):
            block = out[pos * rows : (pos + 1) * rows]
            block[:, :pos] = perms[:, :pos]
            block[:, pos] = m
            block[:, pos + 1 :] = perms[:, pos:]
        perms = out
    return perms


def hamiltonian_circuits(config: PointConfiguration, length_tol: Optional[float] = None) -> CircuitReport:
    """Brute-force every Hamiltonian cycle and group cycles by length.

    There are ``(n-1)!/2`` undirected cycles.  They are generated in shards by
    the vertex that follows point 0, and each shard's lengths are summed in
    numpy.  Lengths within ``length_tol`` count as the same circuit.  The
    default tolerance is ``1e-9`` times the mean pair distance.
    """
    n = config.n
    if n < 3:
        raise ShapeError("need at least three points")
    if n > MAX_CIRCUIT_POINTS:
        raise ShapeError(f"brute-force circuits are limited to n <= {MAX_CIRCUIT_POINTS}, got {n}")
    mat = distance_matrix(config)
    if length_tol is None:
        length_tol = 1e-9 * _scale(mat)
    dtype = np.int8
    orders = []
    lengths = []
    rest = list(range(1, n))
    base = _permutations(n - 2)
    for second in rest:
        # remaining vertices after 0 -> second, last vertex must exceed second
        others = [v for v in rest if v != second]
        if not others:
            continue
        perms = np.asarray(others, dtype=dtype)[base]
        perms = perms[perms[:, -1] > second]
        if perms.size == 0:
            continue
        block = np.empty((len(perms), n), dtype=dtype)
        block[:, 0] = 0
        block[:, 1] = second
        block[:, 2:] = perms
        nxt = np.roll(block, -1, axis=1)
        lengths.append(mat[block, nxt].sum(axis=1))
        orders.append(block)
    orders_arr = np.concatenate(orders) if orders else np.empty((0, n), dtype=dtype)
    lengths_arr = np.concatenate(lengths) if lengths else np.empty(0)
    return CircuitReport(orders_arr, lengths_arr, _cluster(lengths_arr, length_tol), length_tol)
