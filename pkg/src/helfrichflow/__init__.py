"""helfrichflow: a numerical laboratory for constrained Willmore gradient flow.

Triangle meshes move by L2-steepest descent of the bending-plus-constraint
energy  E = W + lambda1 * Area + lambda2 * Volume,  where W integrates the
squared mean curvature.  The package provides mesh construction and I/O,
discrete curvature operators, exact gradients of the discrete energy, an
adaptive explicit flow driver, shape generators, and analysis tools for
singularities and analytic bounds.

Submodules holding the heavy numerics (``energy``, ``flow``, ``analysis``)
are imported lazily so that thread limits can be configured first.
"""

from importlib import import_module

from . import errors
from .errors import (
    BelowWillmoreFloorError,
    DegenerateCotanError,
    DegenerateFaceError,
    DegenerateProfileError,
    Lambda1NonPositiveError,
    MeshError,
    NonManifoldError,
    NonTriangularError,
    NoSingularityError,
    ParseError,
    TooFewSnapshotsError,
    UnorientedError,
)
from .mesh import MeshQuality, TriMesh, build, load_obj, mesh_quality, save_obj

__version__ = "0.1.0"

_LAZY_MODULES = ("geometry", "shapes", "energy", "flow", "analysis", "cli")

__all__ = [
    "TriMesh",
    "MeshQuality",
    "build",
    "load_obj",
    "save_obj",
    "mesh_quality",
    "errors",
    "MeshError",
    "NonManifoldError",
    "UnorientedError",
    "DegenerateFaceError",
    "ParseError",
    "NonTriangularError",
    "DegenerateCotanError",
    "DegenerateProfileError",
    "Lambda1NonPositiveError",
    "BelowWillmoreFloorError",
    "NoSingularityError",
    "TooFewSnapshotsError",
    *_LAZY_MODULES,
]


def __getattr__(name):
    if name in _LAZY_MODULES:
        module = import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
