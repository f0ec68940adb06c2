"""Exception types shared across the package."""


class MeshError(Exception):
    """Base class for mesh construction and I/O failures."""


class NonManifoldError(MeshError):
    """An edge is not shared by exactly two faces, or a vertex link is not a single cycle."""


class UnorientedError(MeshError):
    """Two faces traverse a shared edge in the same direction (inconsistent winding)."""


class DegenerateFaceError(MeshError):
    """A face has (numerically) zero area."""


class ParseError(MeshError):
    """A mesh file could not be parsed."""


class NonTriangularError(MeshError):
    """A mesh file contains a face with more than three vertices."""


class DegenerateCotanError(Exception):
    """Cotangent weights are non-finite (a face collapsed during evaluation)."""


class DegenerateProfileError(Exception):
    """A revolution profile is unusable: non-positive radii, too few samples, or self-crossing."""


class Lambda1NonPositiveError(Exception):
    """The area-term coefficient must be positive for singularity classification."""


class BelowWillmoreFloorError(Exception):
    """An initial energy below the round-sphere floor is inconsistent with a closed surface."""


class NoSingularityError(Exception):
    """Blowup analysis requires a trajectory that ended in a detected singularity."""


class TooFewSnapshotsError(Exception):
    """Blowup analysis requires more snapshots near the singular time than are available."""
