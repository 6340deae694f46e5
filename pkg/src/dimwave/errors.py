"""Exception types raised by the solver."""


class DimwaveError(Exception):
    """Base class for all solver errors."""


class InvalidMaterialError(DimwaveError):
    """Material parameters violate rho > 0, mu >= 0 or lambda + 2 mu > 0."""


class DegenerateEigenspaceError(DimwaveError):
    """Analytic eigenvectors requested where the eigenspace degenerates (alpha = 0)."""


class NumericalDegeneracyError(DimwaveError):
    """Numerical eigendecomposition of an interface matrix failed."""


class NoSignalError(DimwaveError):
    """No cell carries a positive wave speed; the CFL time step is undefined."""


class PredictorDivergenceError(DimwaveError):
    """Space-time Picard iteration failed to converge within the hard cap."""

    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = tuple(cells)


class NumericalBlowupError(DimwaveError):
    """NaN/Inf detected in an unlimited cell during time stepping."""

    def __init__(self, message, cell=None, step=None):
        super().__init__(message)
        self.cell = cell
        self.step = step


class ConfigError(DimwaveError):
    """Run configuration failed validation; the message names the offending key."""


class GeometryError(DimwaveError):
    """Geometry query outside the supported domain (e.g. raster extent)."""


class DtmParseError(DimwaveError):
    """Malformed ESRI ASCII grid file; carries line/column diagnostics."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
