"""Exception types shared across the package."""


class ViewQError(Exception):
    """Base class for all viewq errors."""


class MeshFormatError(ViewQError):
    """Raised when a mesh file cannot be parsed."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


class MeshIndexError(ViewQError):
    """Raised when a face references a vertex that does not exist."""


class EmptyMeshError(ViewQError):
    """Raised for meshes with no vertices, no faces, or zero total area."""


class DegenerateGeometryError(ViewQError):
    """Raised when geometry is too degenerate to build a camera (zero bbox)."""


class EmptyViewError(ViewQError):
    """Raised when the model rasterizes to zero pixels from a view."""


class MeasureUndefinedError(ViewQError):
    """Raised when a measure is undefined, e.g. a visible face with zero area."""


class InconsistentPriorError(ViewQError):
    """Raised when a conditional distribution has mass where the prior has none."""


class RecordFormatError(ViewQError):
    """Raised when a stored record violates the documented schema."""
