"""Degeneracy search: congruence classes sharing one distance multiset.

Two routes are provided.  :func:`enumerate_assemblies` assigns multiset values
to point pairs by backtracking, keeps the realizable assignments and merges
congruent ones.  :func:`solve_constrained` goes the other way for planar
four-point sets: it fixes some distances and solves for the rest so that
several orderings of the same six values are simultaneously planar.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import NoSolutionError, SearchBudgetExceeded, ShapeError, SolverError
from .geometry import (
    STRUCTURAL_TOL,
    DistanceAssignment,
    DistanceMultiset,
    PointConfiguration,
    _gram_realizable,
    _scale,
    construction_pairs,
    distance_matrices_congruent,
    embed,
    n_from_pair_count,
    realizability_check,
)

DEFAULT_BUDGET = 10**7

# Newton settings
MAX_ITER = 200
GRID_POINTS = 16
GRID_RANGE = (0.1, 3.0)


# ---------------------------------------------------------------------------
# planar four-point constraint
# ---------------------------------------------------------------------------


def _constraint_parts(x: np.ndarray):
    """Determinant value and its gradient for a batch of sextuples ``(..., 6)``."""
    s = x * x
    s1, s2, s3, s4, s5, s6 = np.moveaxis(s, -1, 0)
    a = -2.0 * s1
    b = s3 - s1 - s2
    c = s5 - s1 - s4
    e = -2.0 * s2
    f = s6 - s2 - s4
    i = -2.0 * s4
    det = a * (e * i - f * f) - b * (b * i - c * f) + c * (b * f - c * e)
    # partial derivatives w.r.t. the six distinct matrix entries
    da = e * i - f * f
    de = a * i - c * c
    di = a * e - b * b
    db = 2.0 * (c * f - b * i)
    dc = 2.0 * (b * f - c * e)
    df = 2.0 * (b * c - a * f)
    ds = np.stack(
        [
            -2.0 * da - db - dc,
            -db - 2.0 * de - df,
            db,
            -dc - df - 2.0 * di,
            dc,
            df,
        ],
        axis=-1,
    )
    return det, 2.0 * x * ds


def constraint_polynomial(x1: float, x2: float, x3: float, x4: float, x5: float, x6: float) -> float:
    """Planarity determinant of six distances in construction order.

    The arguments are the distances P1P2, P1P3, P2P3, P1P4, P2P4, P3P4.  The
    value is the determinant of ``-2`` times the Gram matrix with origin P1,

        | -2x1^2         x3^2-x1^2-x2^2   x5^2-x1^2-x4^2 |
        | x3^2-x1^2-x2^2 -2x2^2           x6^2-x2^2-x4^2 |
        | x5^2-x1^2-x4^2 x6^2-x2^2-x4^2   -2x4^2         |

    and vanishes when the four points lie in a plane.
    """
    det, _ = _constraint_parts(np.array([x1, x2, x3, x4, x5, x6], dtype=float))
    return float(det)


@dataclass
class PermutationConstraintSystem:
    """Fixed distances, unknown distances and the orderings that must all be planar.

    Slots are 0-based positions ``0..5`` of the construction-ordered sextuple.
    Each entry of ``equations`` is an ordering ``omega`` (a permutation of the
    slots); it contributes the equation ``D(x[omega[0]], ..., x[omega[5]]) = 0``.
    """

    free_values: dict
    unknowns: list
    equations: list

    def __post_init__(self):
        self.free_values = {int(k): float(v) for k, v in self.free_values.items()}
        self.unknowns = [int(u) for u in self.unknowns]
        self.equations = [tuple(int(i) for i in eq) for eq in self.equations]
        slots = set(self.free_values) | set(self.unknowns)
        if slots != set(range(6)) or len(self.free_values) + len(self.unknowns) != 6:
            raise ShapeError("free and unknown slots must partition 0..5")
        for eq in self.equations:
            if sorted(eq) != list(range(6)):
                raise ShapeError(f"{eq} is not a permutation of the six slots")
        if len(self.equations) > len(self.unknowns):
            raise ShapeError(f"{len(self.equations)} equations for {len(self.unknowns)} unknowns")

    @classmethod
    def from_leading(cls, free: Sequence[float], equations: Sequence[Sequence[int]]) -> "PermutationConstraintSystem":
        """Leading slots fixed to ``free``, the trailing ones unknown."""
        k = len(free)
        return cls(dict(enumerate(free)), list(range(k, 6)), [tuple(e) for e in equations])

    def full(self, unknown_values: np.ndarray) -> np.ndarray:
        """Complete sextuple(s) from values of the unknowns, shape ``(..., 6)``."""
        u = np.asarray(unknown_values, dtype=float)
        out = np.empty(u.shape[:-1] + (6,))
        for slot, v in self.free_values.items():
            out[..., slot] = v
        for j, slot in enumerate(self.unknowns):
            out[..., slot] = u[..., j]
        return out

    def residuals(self, unknown_values: np.ndarray):
        """Equation values and Jacobian w.r.t. the unknowns (batched)."""
        x = self.full(unknown_values)
        vals = []
        jac = []
        for eq in self.equations:
            det, grad = _constraint_parts(x[..., list(eq)])
            vals.append(det)
            # grad[k] is d/d(x[eq[k]]); scatter back to slots
            g_slots = np.zeros_like(grad)
            g_slots[..., list(eq)] = grad
            jac.append(g_slots[..., self.unknowns])
        return np.stack(vals, axis=-1), np.stack(jac, axis=-2)

    def assignments(self, unknown_values) -> list[DistanceAssignment]:
        """One planar four-point distance assignment per ordering."""
        x = self.full(unknown_values)
        return [DistanceAssignment.from_ordered(x[list(eq)], n=4) for eq in self.equations]


@dataclass
class ConstrainedSolution:
    """Positive real roots of a :class:`PermutationConstraintSystem`.

    ``roots`` have pairwise distinct distance values.  Roots where two of the
    six distances coincide are kept apart in ``multiple_roots``: they tend to
    merge configurations, so they realize fewer classes than equations.
    """

    system: PermutationConstraintSystem
    roots: list = field(default_factory=list)
    multiple_roots: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def full(self, index: int = 0) -> np.ndarray:
        return self.system.full(self.roots[index])

    def closest(self, target: Sequence[float]) -> np.ndarray:
        target = np.asarray(target, dtype=float)
        return min(self.roots, key=lambda r: float(np.max(np.abs(r - target))))


def _newton_batch(system: PermutationConstraintSystem, starts: np.ndarray, tol: float, max_iter: int):
    """Damped Newton from many starting points at once.

    The step is halved while the residual norm does not decrease.  Returns
    final iterates, final residual norms (relative) and a converged mask.
    """
    mean = float(np.mean(list(system.free_values.values()))) if system.free_values else 1.0
    norm = mean**6
    u = np.array(starts, dtype=float)
    f, jac = system.residuals(u)
    res = np.linalg.norm(f, axis=-1) / norm
    done = res <= tol
    for _ in range(max_iter):
        active = ~done & np.all(np.isfinite(u), axis=-1)
        if not np.any(active):
            break
        ua, fa, ja, ra = u[active], f[active], jac[active], res[active]
        step = -np.einsum("bij,bj->bi", np.linalg.pinv(ja), fa)
        lam = np.ones(len(ua))
        new_u = ua + step
        new_f, new_j = system.residuals(new_u)
        new_r = np.linalg.norm(new_f, axis=-1) / norm
        for _ in range(40):
            worse = ~(new_r < ra) & (lam > 1e-12)
            if not np.any(worse):
                break
            lam[worse] *= 0.5
            trial = ua[worse] + lam[worse, None] * step[worse]
            tf, tj = system.residuals(trial)
            new_u[worse], new_f[worse], new_j[worse] = trial, tf, tj
            new_r[worse] = np.linalg.norm(tf, axis=-1) / norm
        stalled = ~(new_r < ra)
        idx = np.flatnonzero(active)
        u[idx], f[idx], jac[idx], res[idx] = new_u, new_f, new_j, new_r
        done[idx[new_r <= tol]] = True
        # a stalled start cannot improve further
        done[idx[stalled]] = True
    converged = res <= tol
    return u, res, converged


def solve_constrained(
    system: PermutationConstraintSystem,
    initial_guess: Optional[Sequence[float]] = None,
    tol: float = 1e-12,
    max_iter: int = MAX_ITER,
    realizability_tol: float = STRUCTURAL_TOL,
) -> ConstrainedSolution:
    """Find positive roots of the simultaneous planarity equations.

    With ``initial_guess`` a single damped Newton run is made and its root is
    returned; failure to converge raises :class:`SolverError`.  Without it,
    Newton is started from a grid of 16 values per unknown spanning
    ``[0.1, 3]`` times the mean fixed distance, and every distinct root is
    collected.  This grid search is a heuristic: it does not prove that no
    other roots exist.  Roots are kept only if every ordering in the system
    is a realizable planar quadrilateral (nonnegative triangle areas).
    """
    q = len(system.unknowns)
    if len(system.equations) != q:
        raise ShapeError(f"need as many equations as unknowns, got {len(system.equations)} for {q}")
    mean = float(np.mean(list(system.free_values.values())))
    if initial_guess is not None:
        starts = np.asarray(initial_guess, dtype=float).reshape(1, q)
    else:
        axis = np.linspace(GRID_RANGE[0] * mean, GRID_RANGE[1] * mean, GRID_POINTS)
        starts = np.array(list(itertools.product(axis, repeat=q)))
    u, res, ok = _newton_batch(system, starts, tol, max_iter)
    if initial_guess is not None and not ok[0]:
        raise SolverError(f"Newton did not converge from {list(starts[0])}: residual {res[0]:.3e}", float(res[0]))

    sol = ConstrainedSolution(system)
    dedup_tol = 1e-7 * mean
    for root, r in zip(u[ok], res[ok]):
        if np.any(root <= 0):
            continue
        if any(np.max(np.abs(root - seen)) <= dedup_tol for seen in sol.roots + sol.multiple_roots):
            continue
        if not all(realizability_check(a, 2, realizability_tol).realizable for a in system.assignments(root)):
            continue
        full = np.sort(system.full(root))
        if np.any(np.diff(full) <= dedup_tol):
            sol.multiple_roots.append(root)
        else:
            sol.roots.append(root)
            sol.residuals.append(float(r))
    order = sorted(range(len(sol.roots)), key=lambda k: tuple(sol.roots[k]))
    sol.roots = [sol.roots[k] for k in order]
    sol.residuals = [sol.residuals[k] for k in order]
    sol.multiple_roots.sort(key=tuple)
    if not sol.roots and not sol.multiple_roots:
        raise NoSolutionError("no positive real root passes the realizability check")
    return sol


# ---------------------------------------------------------------------------
# enumeration of assemblies
# ---------------------------------------------------------------------------


@dataclass
class DegeneracyClassSet:
    """All congruence classes realizing one distance multiset in R^d.

    ``slot_assignments[i]`` maps each point pair ``(a, b)`` to the index of the
    multiset value placed on it (indices into ``multiset.values``), for the
    representative ``classes[i]``.
    """

    multiset: DistanceMultiset
    dimension: int
    classes: list = field(default_factory=list)
    slot_assignments: list = field(default_factory=list)
    complete: bool = True
    explored_fraction: float = 1.0
    evaluations: int = 0

    @property
    def order(self) -> int:
        return len(self.classes)


def _row_key(mat: np.ndarray) -> np.ndarray:
    return np.sort(mat.sum(axis=1))


def enumerate_assemblies(
    multiset,
    d: int,
    tol: float = STRUCTURAL_TOL,
    budget: int = DEFAULT_BUDGET,
    congruence_tol: float = 1e-6,
) -> DegeneracyClassSet:
    """Every non-congruent configuration in R^d with the given pair distances.

    The largest value is pinned to pair (1, 2), which removes rigid motions.
    The remaining values are placed on pairs point by point; once all
    distances of a new point are placed, the partial configuration must be
    realizable, which prunes most of the tree.  Equal values are tried once
    per branch.  Realizable complete assignments are embedded and merged by
    congruence (``congruence_tol`` relative to the mean distance).

    Raises :class:`SearchBudgetExceeded` carrying the partial result when
    more than ``budget`` realizability evaluations would be needed.
    """
    if not isinstance(multiset, DistanceMultiset):
        multiset = DistanceMultiset(multiset)
    values = np.array(multiset.values)
    n = n_from_pair_count(len(values))
    result = DegeneracyClassSet(multiset=multiset, dimension=d)
    scale = float(np.mean(values)) if np.mean(values) > 0 else 1.0
    ctol = congruence_tol * scale
    pairs = construction_pairs(n)
    # positions at which a point's last pair is placed
    closes = {p: j for p, (_, j) in enumerate(pairs) if pairs[p][0] == j - 1}

    mat = np.zeros((n, n))
    slots = np.full((n, n), -1, dtype=int)
    top = len(values) - 1  # values are sorted ascending
    mat[0, 1] = mat[1, 0] = values[top]
    slots[0, 1] = slots[1, 0] = top
    remaining = [k for k in range(len(values)) if k != top]
    used = [False] * len(values)
    used[top] = True
    reps: list[np.ndarray] = []
    keys: list[np.ndarray] = []

    state = {"evals": 0, "explored": 0.0, "stopped": False}

    def record(full: np.ndarray, slot_mat: np.ndarray) -> None:
        key = _row_key(full)
        for rep, k in zip(reps, keys):
            if np.max(np.abs(k - key)) <= ctol * n and distance_matrices_congruent(full, rep, ctol) is not None:
                return
        reps.append(full.copy())
        keys.append(key)
        result.slot_assignments.append(
            {(a, b): int(slot_mat[a, b]) for a, b in itertools.combinations(range(n), 2)}
        )

    def descend(pos: int, weight: float) -> None:
        if state["stopped"]:
            return
        if pos == len(pairs):
            record(mat, slots)
            state["explored"] += weight
            return
        a, b = pairs[pos]
        choices = []
        tried = set()
        for k in remaining:
            if used[k] or values[k] in tried:
                continue
            tried.add(values[k])
            choices.append(k)
        if not choices:
            state["explored"] += weight
            return
        w = weight / len(choices)
        for k in choices:
            if state["stopped"]:
                return
            used[k] = True
            mat[a, b] = mat[b, a] = values[k]
            slots[a, b] = slots[b, a] = k
            ok = True
            if pos in closes:
                if state["evals"] >= budget:
                    state["stopped"] = True
                    used[k] = False
                    return
                state["evals"] += 1
                j = closes[pos]
                ok = _gram_realizable(mat[: j + 1, : j + 1], d, tol)
            if ok:
                descend(pos + 1, w)
            else:
                state["explored"] += w
            used[k] = False
        mat[a, b] = mat[b, a] = 0.0
        slots[a, b] = slots[b, a] = -1

    if n == 2:
        record(mat, slots)
    else:
        descend(1, 1.0)

    result.evaluations = state["evals"]
    result.explored_fraction = min(1.0, state["explored"]) if n > 2 else 1.0
    result.classes = [embed(DistanceAssignment(rep, allow_coincident=True), d, tol) for rep in reps]
    _sort_classes(result)
    if state["stopped"]:
        result.complete = False
        raise SearchBudgetExceeded(result)
    return result


def _sort_classes(result: DegeneracyClassSet) -> None:
    keyed = sorted(
        zip(result.classes, result.slot_assignments),
        key=lambda cs: tuple(np.round(cs[0].points.ravel(), 9)),
    )
    result.classes = [c for c, _ in keyed]
    result.slot_assignments = [s for _, s in keyed]


def kmax_simplex(d: int) -> int:
    """Upper bound on distinct d-simplices assembled from one set of distinct edge lengths.

    ``(m-1)! / 2**(d-1)`` with ``m = d(d+1)/2``; exact integer arithmetic.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    m = d * (d + 1) // 2
    return math.factorial(m - 1) // 2 ** (d - 1)


def enumerate_simplex_classes(multiset, d: int, tol: float = STRUCTURAL_TOL, budget: int = DEFAULT_BUDGET) -> DegeneracyClassSet:
    """Distinct d-simplices with the given ``d(d+1)/2`` edge lengths."""
    if not isinstance(multiset, DistanceMultiset):
        multiset = DistanceMultiset(multiset)
    if len(multiset) != d * (d + 1) // 2:
        raise ShapeError(f"a {d}-simplex has {d * (d + 1) // 2} edges, got {len(multiset)} values")
    return enumerate_assemblies(multiset, d, tol, budget)


def system_class_count(solution: ConstrainedSolution, root_index: int = 0, tol: float = STRUCTURAL_TOL) -> int:
    """Number of congruence classes realized by a solved root's full multiset."""
    values = solution.full(root_index)
    return enumerate_assemblies(values, 2, tol).order


def classes_from_mapping(slot_map: Mapping, values: Sequence[float], n: int, d: int, tol: float = STRUCTURAL_TOL) -> PointConfiguration:
    """Embed a slot assignment with new values (same pattern, different lengths)."""
    mat = np.zeros((n, n))
    for (a, b), k in slot_map.items():
        mat[a, b] = mat[b, a] = values[k]
    return embed(DistanceAssignment(mat, allow_coincident=True), d, tol)
