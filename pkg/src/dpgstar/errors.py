"""Exception types shared across the package."""


class DpgstarError(Exception):
    """Base class for package errors."""


class DegreeError(DpgstarError):
    """Polynomial degree or quadrature point count out of range."""


class RankDeficiency(DpgstarError):
    """An operator matrix fails its full-rank precondition.

    Carries the numerical rank so callers can report how degenerate the
    instance is.
    """

    def __init__(self, rank, needed, message=None):
        self.rank = int(rank)
        self.needed = int(needed)
        super().__init__(message or f"numerical rank {rank} < required {needed}")


class NotFound(DpgstarError):
    """Unknown element or edge id."""


class ShapeError(DpgstarError):
    """Inconsistent array dimensions."""


class GramNotSPD(DpgstarError):
    """A Gram matrix failed its Cholesky factorization."""

    def __init__(self, element_id=None, message=None):
        self.element_id = element_id
        where = "" if element_id is None else f" on element {element_id}"
        super().__init__(message or f"Gram matrix not symmetric positive definite{where}")


class SolverError(DpgstarError):
    """Linear solve did not reach the requested residual."""

    def __init__(self, residual, message=None):
        self.residual = float(residual)
        super().__init__(message or f"solver stalled at relative residual {residual:.3e}")


class CaseError(DpgstarError):
    """Unknown manufactured case name."""


class InsufficientData(DpgstarError):
    """Not enough study records for the requested fit."""


class ConfigError(DpgstarError):
    """Malformed run configuration."""
