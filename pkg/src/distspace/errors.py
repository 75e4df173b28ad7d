"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Inputs have incompatible sizes or dimensions."""


class DuplicatePointError(ValueError):
    """Two points of a configuration coincide."""


class RealizabilityError(ValueError):
    """Distances cannot be realized in the requested dimension."""

    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or f"not realizable in R^{report.dimension}: {report.failed_condition}")


class SolverError(RuntimeError):
    """Newton iteration failed to converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NoSolutionError(RuntimeError):
    """No positive real root satisfies the constraint system."""


class SearchBudgetExceeded(RuntimeError):
    """Enumeration stopped at its evaluation budget; ``partial`` holds what was found."""

    def __init__(self, partial):
        self.partial = partial
        super().__init__(
            f"search budget exhausted after {partial.evaluations} evaluations "
            f"({partial.explored_fraction:.3%} explored, {partial.order} classes so far)"
        )


class ConstructionError(ValueError):
    """Construction parameters violate their preconditions."""


class ReconstructionError(RuntimeError):
    """No simplex assembly reproduces the lattice spectrum."""
