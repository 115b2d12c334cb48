"""Exception types shared across the package."""


class ParaspecError(Exception):
    """Base class for all package errors."""


class ConfigurationError(ParaspecError):
    """Invalid or inconsistent configuration (bad grid sizes, angle indices, keys...)."""


class ShapeError(ParaspecError):
    """Array shapes do not match the grid or each other."""


class DegenerateInputError(ParaspecError):
    """Input is degenerate for the requested operation (e.g. zero field to normalize)."""


class WindowError(ParaspecError):
    """Invalid time-averaging window (T <= S)."""


class EllipticityError(ParaspecError):
    """Diffusion coefficient dips below the ellipticity floor."""


class PositivityError(ParaspecError):
    """Positivity structure lost (M-matrix failure under positivity_required,
    or a nonpositive value where a strictly positive one is required)."""


class AlignmentError(ParaspecError):
    """A requested time is not an integer number of steps."""


class SolverError(ParaspecError):
    """Linear solve failed (singular or non-finite result)."""


class InsufficientDataError(ParaspecError):
    """Not enough samples for the requested estimate."""


class RankLossError(ParaspecError):
    """Second vector collapsed during two-vector iteration."""


class OracleFailureError(ParaspecError):
    """Independent oracle failed to converge."""


class EigensolverError(ParaspecError):
    """Inverse power iteration failed to converge."""


class StructureError(ParaspecError):
    """Computed object violates expected structure (e.g. sign-changing principal vector)."""


class PreconditionError(ParaspecError):
    """Caller violated a documented precondition (e.g. unnormalized profile)."""
