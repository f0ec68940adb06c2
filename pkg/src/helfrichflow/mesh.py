"""Triangle surface meshes with halfedge connectivity.

A mesh is a pair of arrays: vertex positions ``(V, 3)`` float64 and face
vertex indices ``(F, 3)`` int64, counter-clockwise as seen from outside.
``build`` derives halfedge connectivity and rejects anything that is not a
closed, consistently oriented, manifold triangle surface.  Halfedge ``h``
is corner ``h % 3`` of face ``h // 3`` and runs from that corner's vertex
to the next one in the face.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateFaceError,
    NonManifoldError,
    NonTriangularError,
    ParseError,
    UnorientedError,
)

log = logging.getLogger(__name__)

_AREA_REL_TOL = 1e-14


class Halfedges(NamedTuple):
    """Connectivity maps indexed by halfedge id (``3 * face + corner``)."""

    twin: np.ndarray
    next: np.ndarray
    origin: np.ndarray


class TriMesh:
    """A validated, closed, oriented triangle mesh.

    Instances are produced by :func:`build` and are immutable: the arrays
    are flagged read-only so downstream code cannot mutate a mesh that has
    already passed validation.  Use :meth:`with_positions` to obtain a new
    mesh with the same connectivity at different vertex positions.
    """

    def __init__(self, positions, faces, halfedges, edges, n_components):
        self.positions = positions
        self.faces = faces
        self.halfedges = halfedges
        self.edges = edges
        self.n_components = n_components
        for arr in (positions, faces, edges, *halfedges):
            arr.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return self.positions.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self) -> int:
        """Genus of a connected mesh."""
        if self.n_components != 1:
            raise ValueError("genus is only defined for a connected mesh")
        return (2 - self.euler_characteristic) // 2

    def with_positions(self, positions) -> "TriMesh":
        """Same connectivity, new vertex positions.

        Skips connectivity re-derivation; only the face-area check is
        repeated, since moving vertices cannot change the topology.
        """
        positions = np.ascontiguousarray(positions, dtype=np.float64)
        if positions.shape != self.positions.shape:
            raise ValueError("positions shape must match the existing mesh")
        if not np.all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        _check_face_areas(positions, self.faces)
        return TriMesh(positions, self.faces, self.halfedges, self.edges, self.n_components)

    def face_normals(self):
        """Unnormalized face normals (cross products; twice the area vectors)."""
        p = self.positions[self.faces]
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def face_areas(self):
        return 0.5 * np.linalg.norm(self.face_normals(), axis=1)

    def edge_lengths(self):
        d = self.positions[self.edges[:, 0]] - self.positions[self.edges[:, 1]]
        return np.linalg.norm(d, axis=1)


@dataclass(frozen=True)
class MeshQuality:
    """Summary statistics of mesh resolution and triangle shape."""

    n_vertices: int
    n_faces: int
    n_edges: int
    euler_characteristic: int
    min_edge: float
    mean_edge: float
    max_edge: float
    min_angle: float
    max_angle: float
    min_area: float
    max_aspect: float


def _face_corner_angles(positions, faces):
    """Interior angles per face corner, shape (F, 3)."""
    p = positions[faces]
    angles = np.empty((faces.shape[0], 3))
    for c in range(3):
        a = p[:, (c + 1) % 3] - p[:, c]
        b = p[:, (c + 2) % 3] - p[:, c]
        na = np.linalg.norm(a, axis=1)
        nb = np.linalg.norm(b, axis=1)
        cosang = np.einsum("ij,ij->i", a, b) / np.maximum(na * nb, 1e-300)
        angles[:, c] = np.arccos(np.clip(cosang, -1.0, 1.0))
    return angles


def mesh_quality(mesh: TriMesh) -> MeshQuality:
    """Edge-length, angle, area and aspect-ratio statistics."""
    lengths = mesh.edge_lengths()
    angles = _face_corner_angles(mesh.positions, mesh.faces)
    areas = mesh.face_areas()
    p = mesh.positions[mesh.faces]
    sides = np.stack(
        [
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ],
        axis=1,
    )
    # longest edge over inradius-like scale: 2*area/perimeter is the inradius
    inradius = 2.0 * areas / sides.sum(axis=1)
    aspect = sides.max(axis=1) / np.maximum(2.0 * np.sqrt(3.0) * inradius, 1e-300)
    return MeshQuality(
        n_vertices=mesh.n_vertices,
        n_faces=mesh.n_faces,
        n_edges=mesh.n_edges,
        euler_characteristic=mesh.euler_characteristic,
        min_edge=float(lengths.min()),
        mean_edge=float(lengths.mean()),
        max_edge=float(lengths.max()),
        min_angle=float(angles.min()),
        max_angle=float(angles.max()),
        min_area=float(areas.min()),
        max_aspect=float(aspect.max()),
    )


def _check_face_areas(positions, faces):
    p = positions[faces]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    areas = 0.5 * np.linalg.norm(normals, axis=1)
    mean = areas.mean() if areas.size else 0.0
    if mean <= 0.0 or not np.isfinite(mean):
        raise DegenerateFaceError("mesh has no usable face area")
    bad = np.flatnonzero(areas < _AREA_REL_TOL * mean)
    if bad.size:
        raise DegenerateFaceError(f"face {int(bad[0])} has (near-)zero area")


def _count_components(n_vertices, edges):
    """Connected components of the vertex graph via union-find."""
    parent = np.arange(n_vertices)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for a, b in edges:
        ra, rb = find(int(a)), find(int(b))
        if ra != rb:
            parent[rb] = ra
    return len({find(i) for i in range(n_vertices)})


def build(positions, faces) -> TriMesh:
    """Validate arrays and derive halfedge connectivity.

    Raises :class:`NonManifoldError` if any edge is not shared by exactly
    two faces or a vertex link is not a single cycle,
    :class:`UnorientedError` if two faces traverse a shared edge in the
    same direction, and :class:`DegenerateFaceError` for zero-area faces.
    """
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise ValueError("positions must have shape (V, 3)")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise NonTriangularError("faces must have shape (F, 3)")
    if faces.shape[0] == 0:
        raise ValueError("mesh has no faces")
    if not np.all(np.isfinite(positions)):
        raise ValueError("positions must be finite")
    nv = positions.shape[0]
    if faces.min() < 0 or faces.max() >= nv:
        raise ValueError("face indices out of range")
    if np.any(faces[:, 0] == faces[:, 1]) or np.any(faces[:, 1] == faces[:, 2]) or np.any(faces[:, 2] == faces[:, 0]):
        raise DegenerateFaceError("a face repeats a vertex")

    _check_face_areas(positions, faces)

    nf = faces.shape[0]
    nh = 3 * nf
    # halfedge h = 3*f + c runs faces[f, c] -> faces[f, (c+1) % 3]
    origin = faces.reshape(-1)
    dest = faces[:, [1, 2, 0]].reshape(-1)
    hnext = (np.arange(nh) // 3) * 3 + (np.arange(nh) + 1) % 3

    directed = origin * np.int64(nv) + dest
    undirected = np.minimum(origin, dest) * np.int64(nv) + np.maximum(origin, dest)

    ukeys, ucounts = np.unique(undirected, return_counts=True)
    if np.any(ucounts != 2):
        k = int(ukeys[np.flatnonzero(ucounts != 2)[0]])
        a, b = divmod(k, nv)
        n = int(ucounts[np.flatnonzero(ucounts != 2)[0]])
        raise NonManifoldError(f"edge ({a}, {b}) belongs to {n} faces, expected 2")

    dkeys, dcounts = np.unique(directed, return_counts=True)
    if np.any(dcounts != 1):
        k = int(dkeys[np.flatnonzero(dcounts != 1)[0]])
        a, b = divmod(k, nv)
        raise UnorientedError(f"two faces traverse edge ({a}, {b}) in the same direction")

    # twin lookup: each directed key is unique, and its reverse exists
    order = np.argsort(directed, kind="stable")
    reverse = dest * np.int64(nv) + origin
    pos = np.searchsorted(directed[order], reverse)
    twin = order[pos]
    # after the multiplicity checks this always matches, but keep it cheap and explicit
    if not np.array_equal(directed[twin], reverse):
        raise NonManifoldError("halfedge twin pairing failed")

    halfedges = Halfedges(twin=twin, next=hnext, origin=origin)
    _check_vertex_links(nv, halfedges)

    first = directed < reverse
    edges = np.stack([origin[first], dest[first]], axis=1)

    n_components = _count_components(nv, edges)
    chi = nv - edges.shape[0] + nf
    if chi % 2 != 0:
        raise NonManifoldError(f"Euler characteristic {chi} is odd")
    log.debug("built mesh: V=%d E=%d F=%d chi=%d components=%d", nv, edges.shape[0], nf, chi, n_components)
    return TriMesh(positions, faces, halfedges, edges, n_components)


def _check_vertex_links(n_vertices, halfedges):
    """Every vertex's outgoing halfedges must form a single rotation cycle."""
    twin, hnext, origin = halfedges
    nh = origin.shape[0]
    prev = hnext[hnext]  # triangle: prev == next o next
    rot = twin[prev]  # next outgoing halfedge counter-clockwise around origin
    visited = np.zeros(nh, dtype=bool)
    cycles = np.zeros(n_vertices, dtype=np.int64)
    for h0 in range(nh):
        if visited[h0]:
            continue
        cycles[origin[h0]] += 1
        h = h0
        while not visited[h]:
            visited[h] = True
            h = rot[h]
    if np.any(cycles > 1):
        v = int(np.flatnonzero(cycles > 1)[0])
        raise NonManifoldError(f"vertex {v} link is not a single cycle")
    if np.any((cycles == 0) & (np.bincount(origin, minlength=n_vertices) > 0)):
        raise NonManifoldError("vertex link walk failed")


def save_obj(mesh: TriMesh, path) -> None:
    """Write a minimal OBJ file: ``v`` and ``f`` records only."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"# {mesh.n_vertices} vertices, {mesh.n_faces} faces\n")
        for x, y, z in mesh.positions:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces + 1:
            fh.write(f"f {a} {b} {c}\n")


def load_obj(path) -> TriMesh:
    """Read a minimal OBJ file.

    Accepts only ``v x y z`` and plain triangular ``f i j k`` records
    (positive 1-based indices) plus comments and blank lines; anything
    else raises :class:`ParseError`, and a face record with more than
    three vertices raises :class:`NonTriangularError`.
    """
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            kind, args = tokens[0], tokens[1:]
            if kind == "v":
                if len(args) != 3:
                    raise ParseError(f"line {lineno}: vertex needs exactly 3 coordinates")
                try:
                    verts.append((float(args[0]), float(args[1]), float(args[2])))
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: bad vertex coordinate") from exc
            elif kind == "f":
                if len(args) > 3:
                    raise NonTriangularError(f"line {lineno}: face with {len(args)} vertices")
                if len(args) < 3:
                    raise ParseError(f"line {lineno}: face needs 3 vertices")
                idx = []
                for tok in args:
                    if not tok.isdigit():
                        raise ParseError(f"line {lineno}: face index {tok!r} is not a plain positive integer")
                    idx.append(int(tok) - 1)
                faces.append((idx[0], idx[1], idx[2]))
            else:
                raise ParseError(f"line {lineno}: unsupported record {kind!r}")
    if not verts or not faces:
        raise ParseError("file contains no usable v/f records")
    positions = np.asarray(verts, dtype=np.float64)
    face_arr = np.asarray(faces, dtype=np.int64)
    if face_arr.min() < 0 or face_arr.max() >= positions.shape[0]:
        raise ParseError("face index out of range")
    return build(positions, face_arr)
