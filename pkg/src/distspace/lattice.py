"""Bravais-lattice distance spectra and fundamental-cell reconstruction."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ReconstructionError, ShapeError
from .geometry import STRUCTURAL_TOL, DistanceAssignment, embed

MAX_LATTICE_VECTORS = 10**7
SHELL_RTOL = 1e-9


@dataclass(frozen=True)
class LatticeBasis:
    """Rows of ``vectors`` are the basis vectors ``a_1 .. a_d``."""

    vectors: np.ndarray

    def __init__(self, vectors: Sequence[Sequence[float]], tol: float = 1e-12):
        arr = np.array(vectors, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeError(f"need d vectors of length d, got shape {arr.shape}")
        g = arr @ arr.T
        scale = float(np.mean(np.diag(g))) ** arr.shape[0]
        if np.linalg.det(g) <= tol * scale:
            raise ShapeError("basis vectors are linearly dependent")
        arr.setflags(write=False)
        object.__setattr__(self, "vectors", arr)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[0]

    @property
    def gram(self) -> np.ndarray:
        return self.vectors @ self.vectors.T

    def lengths(self) -> np.ndarray:
        return np.sqrt(np.diag(self.gram))

    def angle(self, i: int = 0, j: int = 1) -> float:
        """Angle between basis vectors ``i`` and ``j`` in degrees."""
        g = self.gram
        return float(np.degrees(np.arccos(np.clip(g[i, j] / np.sqrt(g[i, i] * g[j, j]), -1, 1))))

    def reduced(self) -> "LatticeBasis":
        return LatticeBasis(reduce_basis(self.vectors))


@dataclass
class LatticeSpectrum:
    """Distinct nonzero lattice-vector lengths up to ``cutoff`` and their counts."""

    distances: np.ndarray
    multiplicities: np.ndarray
    cutoff: float

    def all_distances(self) -> np.ndarray:
        return np.repeat(self.distances, self.multiplicities)

    def __len__(self) -> int:
        return len(self.distances)

    def matches(self, other: "LatticeSpectrum", rtol: float = 1e-7) -> bool:
        if len(self.distances) != len(other.distances):
            return False
        if not np.array_equal(self.multiplicities, other.multiplicities):
            return False
        return bool(np.allclose(self.distances, other.distances, rtol=rtol, atol=0.0))


def _coefficient_bounds(vectors: np.ndarray, cutoff: float) -> np.ndarray:
    # n_i = <v, column i of inv(B)>, so |n_i| <= cutoff * |column i|
    inv = np.linalg.inv(vectors)
    return np.floor(cutoff * np.linalg.norm(inv, axis=0) + 1e-9).astype(int)


def lattice_vectors(basis: LatticeBasis, cutoff: float):
    """Integer coefficient tuples and squared lengths of all vectors with length <= cutoff."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    # enumerate in a reduced basis (tight box), then express in the given one
    red = reduce_basis(basis.vectors)
    to_given = np.rint(red @ np.linalg.inv(basis.vectors)).astype(int)
    bounds = _coefficient_bounds(red, cutoff * (1 + SHELL_RTOL))
    total = int(np.prod(2 * bounds + 1))
    if total > MAX_LATTICE_VECTORS:
        raise ValueError(f"cutoff {cutoff} needs {total} coefficient tuples (limit {MAX_LATTICE_VECTORS})")
    axes = [np.arange(-b, b + 1) for b in bounds]
    coeffs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, basis.dimension)
    coeffs = coeffs[np.any(coeffs != 0, axis=1)] @ to_given
    # squared length from the metric: sum n_i n_j <a_i, a_j>
    sq = np.einsum("ki,ij,kj->k", coeffs, basis.gram, coeffs)
    keep = sq <= (cutoff * (1 + SHELL_RTOL)) ** 2
    return coeffs[keep], sq[keep]


def lattice_distance_spectrum(basis: LatticeBasis, cutoff: float) -> LatticeSpectrum:
    """Shells of lattice distances ``<= cutoff`` with multiplicities, origin excluded.

    Lengths within a relative ``1e-9`` of each other form one shell.  The
    cutoff comparison has the same slack, so shells sitting exactly on it
    are kept consistently.
    """
    _, sq = lattice_vectors(basis, cutoff)
    dist = np.sort(np.sqrt(sq))
    if len(dist) == 0:
        return LatticeSpectrum(np.empty(0), np.empty(0, dtype=int), cutoff)
    breaks = np.flatnonzero(np.diff(dist) > SHELL_RTOL * dist[1:]) + 1
    groups = np.split(dist, breaks)
    shells = np.array([g.mean() for g in groups])
    mult = np.array([len(g) for g in groups], dtype=int)
    return LatticeSpectrum(shells, mult, cutoff)


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------


def gauss_reduce(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction of a two-dimensional lattice basis."""
    a, b = np.array(a, float), np.array(b, float)
    if a @ a > b @ b:
        a, b = b, a
    while True:
        mu = round(float(a @ b) / float(a @ a))
        b = b - mu * a
        if b @ b >= a @ a:
            return a, b
        a, b = b, a


def _closest_in_span(target: np.ndarray, gens: np.ndarray) -> np.ndarray:
    """Closest lattice vector to ``target`` in the sublattice spanned by ``gens``."""
    coef, *_ = np.linalg.lstsq(gens.T, target, rcond=None)
    base = np.floor(coef)
    best, best_d = None, np.inf
    for delta in itertools.product((0, 1), repeat=len(gens)):
        v = (base + np.array(delta)) @ gens
        dv = float((target - v) @ (target - v))
        if dv < best_d:
            best, best_d = v, dv
    return best


def reduce_basis(vectors: np.ndarray, max_rounds: int = 100) -> np.ndarray:
    """Greedy reduction, shortest vectors first.

    In two dimensions this is Lagrange-Gauss reduction.  In three, each
    vector is reduced against the closest vector of the sublattice spanned by
    the shorter ones, repeating until nothing shortens.  Up to dimension 4
    the greedy scheme reaches the successive minima.
    """
    b = np.array(vectors, dtype=float)
    d = b.shape[0]
    if d == 1:
        return b
    if d == 2:
        return np.array(gauss_reduce(b[0], b[1]))
    for _ in range(max_rounds):
        b = b[np.argsort(np.einsum("ij,ij->i", b, b))]
        changed = False
        sub = reduce_basis(b[: d - 1], max_rounds)
        if not np.allclose(sub, b[: d - 1]):
            b[: d - 1] = sub
            changed = True
        v = b[d - 1] - _closest_in_span(b[d - 1], b[: d - 1])
        if v @ v < b[d - 1] @ b[d - 1] * (1 - 1e-12):
            b[d - 1] = v
            changed = True
        if not changed:
            break
    return b[np.argsort(np.einsum("ij,ij->i", b, b), kind="stable")]


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


def _half_spectrum(spectrum: LatticeSpectrum) -> np.ndarray:
    """Vector lengths counting ``v`` and ``-v`` once, ascending."""
    return np.repeat(spectrum.distances, spectrum.multiplicities // 2)


class _ShellIndex:
    """Membership test for lengths against the spectrum's shells."""

    def __init__(self, spectrum: LatticeSpectrum, rtol: float = 1e-7):
        self.shells = np.asarray(spectrum.distances, dtype=float)
        self.cutoff = spectrum.cutoff
        self.rtol = rtol

    def admits(self, lengths) -> np.ndarray:
        """False only where a length lies inside the cutoff yet matches no shell."""
        x = np.atleast_1d(np.asarray(lengths, dtype=float))
        k = np.clip(np.searchsorted(self.shells, x), 1, max(len(self.shells) - 1, 1))
        lo = np.abs(self.shells[k - 1] - x) <= self.rtol * x
        hi = np.abs(self.shells[np.minimum(k, len(self.shells) - 1)] - x) <= self.rtol * x
        outside = x > self.cutoff * (1 - 10 * SHELL_RTOL)
        return (outside | lo | hi) & (x > 0)

    def admits_sum(self, a, b, diff) -> np.ndarray:
        """Parallelogram law: with |u|=a, |v|=b, |u-v|=diff, |u+v| must be a shell too."""
        sq = 2 * np.asarray(a) ** 2 + 2 * np.asarray(b) ** 2 - np.asarray(diff) ** 2
        return (sq > 0) & self.admits(np.sqrt(np.maximum(sq, 0.0)))


def _short_vectors_present(vectors: np.ndarray, index: _ShellIndex, span: int = 2) -> bool:
    d = vectors.shape[0]
    coefs = np.array([c for c in itertools.product(range(-span, span + 1), repeat=d) if any(c)])
    lengths = np.linalg.norm(coefs @ vectors, axis=1)
    return bool(np.all(index.admits(lengths)))


def reconstruct_cell(
    spectrum: LatticeSpectrum,
    d: int,
    tol: float = STRUCTURAL_TOL,
) -> LatticeBasis:
    """Recover a reduced basis whose lattice has the given distance spectrum.

    The cell is assembled as the simplex spanned by the origin and the basis
    endpoints.  Its edges are the basis lengths and the endpoint
    separations ``|a_i - a_j|``, all read off the spectrum.  The shortest
    length is always ``|a_1|``.  The remaining edges are tried in increasing
    order, so a well-shaped lattice succeeds on its smallest ``d(d+1)/2``
    lengths at once.  Elongated lattices, where multiples of ``a_1`` come
    before ``a_2``, need a wider search.  The search is pruned by the
    parallelogram law (``|a_i + a_j|`` must also be a shell).  Each surviving
    simplex is embedded and kept only if its regenerated spectrum matches
    the input.
    """
    if d not in (1, 2, 3):
        raise ValueError("reconstruction is implemented for d <= 3")
    m = d * (d + 1) // 2
    half = _half_spectrum(spectrum)
    if len(half) < m:
        raise ReconstructionError(f"spectrum has {len(half)} vector lengths, need at least {m}; raise the cutoff")
    index = _ShellIndex(spectrum)
    lengths = np.asarray(spectrum.distances, dtype=float)
    l1 = float(half[0])
    attempts = 0

    def validated(edges: dict):
        nonlocal attempts
        mat = np.zeros((d + 1, d + 1))
        for (i, j), v in edges.items():
            mat[i, j] = mat[j, i] = v
        try:
            cell = embed(DistanceAssignment(mat), d, tol, strict=True)
        except ValueError:
            return None
        attempts += 1
        basis_vectors = cell.points[1:] - cell.points[0]
        if not _short_vectors_present(basis_vectors, index):
            return None
        basis = LatticeBasis(basis_vectors)
        if lattice_distance_spectrum(basis, spectrum.cutoff).matches(spectrum):
            return basis.reduced()
        return None

    if d == 1:
        found = validated({})
        if found is None:
            raise ReconstructionError("one-dimensional spectrum is not a lattice spectrum")
        return found

    def partners(a: float, b: float) -> np.ndarray:
        """Endpoint separations compatible with two edge lengths a, b."""
        ok = _triangle_ok(a, b, lengths, tol) & index.admits_sum(a, b, lengths)
        return lengths[ok]

    for l2 in lengths:
        for e12 in partners(l1, l2):
            if d == 2:
                found = validated({(0, 1): l1, (0, 2): l2, (1, 2): e12})
                if found is not None:
                    return found
                continue
            for l3 in lengths[lengths >= l2 * (1 - 1e-12)]:
                e13s = partners(l1, l3)
                if len(e13s) == 0:
                    continue
                for e23 in partners(l2, l3):
                    for e13 in e13s:
                        found = validated(
                            {(0, 1): l1, (0, 2): l2, (0, 3): l3, (1, 2): e12, (1, 3): e13, (2, 3): e23}
                        )
                        if found is not None:
                            return found
    raise ReconstructionError(
        f"none of {attempts} simplex assemblies reproduces the spectrum; input may be non-lattice or cutoff too small"
    )


def _triangle_ok(a, b, c, tol: float):
    s = np.maximum(np.maximum(a, b), c)
    return a + b + c - 2 * s > tol * s
