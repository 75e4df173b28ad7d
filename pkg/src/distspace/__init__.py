"""Distance-space geometry: realizability, embedding and degenerate configurations."""

from .analysis import CircuitReport, TriangleMultiset, hamiltonian_circuits, multiset_equal, triangle_multiset
from .constructions import (
    KiteTrapezoidPair,
    SymmetricConstructionParams,
    SymmetricPair,
    default_symmetric_params,
    generic_simplex_distances,
    kite_trapezoid,
    kite_trapezoid_lengths,
    outer_boundary_vertices,
    random_symmetric_params,
    symmetric_two_fold,
)
from .degeneracy import (
    ConstrainedSolution,
    DegeneracyClassSet,
    PermutationConstraintSystem,
    constraint_polynomial,
    enumerate_assemblies,
    enumerate_simplex_classes,
    kmax_simplex,
    solve_constrained,
    system_class_count,
)
from .errors import (
    ConstructionError,
    DuplicatePointError,
    NoSolutionError,
    RealizabilityError,
    ReconstructionError,
    SearchBudgetExceeded,
    ShapeError,
    SolverError,
)
from .geometry import (
    PAPER_TOL,
    STRUCTURAL_TOL,
    DistanceAssignment,
    DistanceMultiset,
    FeasibilityReport,
    PointConfiguration,
    cayley_menger_squared_volume,
    congruent,
    embed,
    free_dimension,
    gram_from_distances,
    pairwise_distances,
    realizability_check,
    simplex_inequality_holds,
)
from .lattice import (
    LatticeBasis,
    LatticeSpectrum,
    lattice_distance_spectrum,
    lattice_vectors,
    reconstruct_cell,
    reduce_basis,
)

__version__ = "0.1.0"
