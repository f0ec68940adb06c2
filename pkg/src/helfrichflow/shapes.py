"""Deterministic mesh generators for the test corpus.

Icospheres and ellipsoids come from icosahedron subdivision; tori,
biconcave disks and the two-spheres-with-catenoid-neck surface are built
as surfaces of revolution about the z axis from explicit profiles in the
(r, z) half-plane.

The profile convention used throughout: the curve is traversed so that
the surface normal is n = (-sin(theta), cos(theta)) with theta the
tangent angle, the meridian curvature is -d(theta)/ds and the parallel
curvature is -sin(theta)/r; a unit sphere traversed from its top pole
clockwise then has H = +1 everywhere, and an ascending catenoid has
H = 0 exactly.  ``profile_mean_curvature`` and ``profile_willmore``
evaluate these smooth quantities by quadrature, independently of any
mesh discretization.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateProfileError
from .mesh import TriMesh, build

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# icosphere family


def _icosahedron():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    return verts / np.linalg.norm(verts, axis=1)[:, None], faces


def icosphere(radius: float = 1.0, center=(0.0, 0.0, 0.0), subdiv: int = 3) -> TriMesh:
    """Sphere mesh by icosahedron subdivision, vertices projected to the sphere.

    subdiv=0 is the icosahedron itself; each level quadruples the face count.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if not 0 <= subdiv <= 7:
        raise ValueError("subdiv must be between 0 and 7")
    verts, faces = _icosahedron()
    vlist = [v for v in verts]
    for _ in range(subdiv):
        midpoint: dict[tuple[int, int], int] = {}

        def mid(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            idx = midpoint.get(key)
            if idx is None:
                m = vlist[a] + vlist[b]
                m /= np.linalg.norm(m)
                idx = len(vlist)
                vlist.append(m)
                midpoint[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
        faces = np.asarray(new_faces, dtype=np.int64)
    positions = np.asarray(vlist) * radius + np.asarray(center, dtype=np.float64)
    return build(positions, faces)


def ellipsoid(a: float, b: float, c: float, subdiv: int = 3) -> TriMesh:
    """Axis-aligned ellipsoid with half-axes (a, b, c), built by scaling an icosphere."""
    if min(a, b, c) <= 0:
        raise ValueError("half-axes must be positive")
    base = icosphere(1.0, (0.0, 0.0, 0.0), subdiv)
    return base.with_positions(base.positions * np.array([a, b, c]))


# ---------------------------------------------------------------------------
# surfaces of revolution


@dataclass(frozen=True)
class RevolutionProfile:
    """A sampled profile curve in the (r, z) half-plane to be revolved about z.

    Closed profiles (all r > 0) produce tori; open profiles must start and
    end exactly on the axis (r = 0) and produce sphere-topology meshes with
    triangle fans at the poles.  ``allow_self_crossing`` skips the planar
    simplicity check, which is needed for immersed (self-intersecting)
    surfaces of revolution.
    """

    samples: np.ndarray
    count: int
    closed: bool = False
    allow_self_crossing: bool = field(default=False, compare=False)


def _segments_cross(p, q):
    """Proper-intersection test between every pair of segments in two lists."""
    # p, q: (n,2,2) arrays of segment endpoints
    a0, a1 = p[:, None, 0], p[:, None, 1]
    b0, b1 = q[None, :, 0], q[None, :, 1]

    def orient(o, x, y):
        return (x[..., 0] - o[..., 0]) * (y[..., 1] - o[..., 1]) - (
            x[..., 1] - o[..., 1]
        ) * (y[..., 0] - o[..., 0])

    d1 = orient(a0, a1, b0)
    d2 = orient(a0, a1, b1)
    d3 = orient(b0, b1, a0)
    d4 = orient(b0, b1, a1)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def profile_is_simple(samples: np.ndarray, closed: bool) -> bool:
    """True when no two non-adjacent profile segments properly cross."""
    pts = np.asarray(samples, dtype=np.float64)
    n = pts.shape[0]
    if closed:
        seg = np.stack([pts, np.roll(pts, -1, axis=0)], axis=1)
    else:
        seg = np.stack([pts[:-1], pts[1:]], axis=1)
    m = seg.shape[0]
    cross = _segments_cross(seg, seg)
    idx = np.arange(m)
    adjacent = np.abs(idx[:, None] - idx[None, :]) <= 1
    if closed:
        adjacent |= np.abs(idx[:, None] - idx[None, :]) == m - 1
    return not bool(np.any(cross & ~adjacent))


def _validate_profile(profile: RevolutionProfile) -> np.ndarray:
    pts = np.asarray(profile.samples, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DegenerateProfileError("profile needs at least 3 (r, z) samples")
    if profile.count < 3:
        raise DegenerateProfileError("angular resolution must be at least 3")
    if not np.all(np.isfinite(pts)):
        raise DegenerateProfileError("profile samples must be finite")
    r = pts[:, 0]
    if profile.closed:
        if np.any(r <= 0):
            raise DegenerateProfileError("closed profile requires r > 0 everywhere")
    else:
        if r[0] != 0.0 or r[-1] != 0.0:
            raise DegenerateProfileError("open profile must start and end on the axis (r = 0)")
        if np.any(r[1:-1] <= 0):
            raise DegenerateProfileError("open profile requires r > 0 away from the poles")
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    if np.any(steps == 0.0):
        raise DegenerateProfileError("profile contains a repeated sample")
    if not profile.allow_self_crossing and not profile_is_simple(pts, profile.closed):
        raise DegenerateProfileError("profile is self-crossing")
    return pts


def revolve(profile: RevolutionProfile) -> TriMesh:
    """Revolve a profile about the z axis into a triangle mesh.

    Face winding is normalized so the signed enclosed volume is positive.
    """
    pts = _validate_profile(profile)
    n_seg = profile.count
    ang = 2.0 * np.pi * np.arange(n_seg) / n_seg
    cs, sn = np.cos(ang), np.sin(ang)

    if profile.closed:
        rings = pts
        ring_ids = np.arange(rings.shape[0] * n_seg).reshape(rings.shape[0], n_seg)
        positions = np.empty((rings.shape[0] * n_seg, 3))
        poles: list[np.ndarray] = []
    else:
        rings = pts[1:-1]
        ring_ids = np.arange(rings.shape[0] * n_seg).reshape(rings.shape[0], n_seg)
        positions = np.empty((rings.shape[0] * n_seg + 2, 3))
        poles = [pts[0], pts[-1]]

    for i, (r, z) in enumerate(rings):
        positions[ring_ids[i], 0] = r * cs
        positions[ring_ids[i], 1] = r * sn
        positions[ring_ids[i], 2] = z

    faces = []
    nxt = np.roll(np.arange(n_seg), -1)
    n_rings = rings.shape[0]
    pair_count = n_rings if profile.closed else n_rings - 1
    for i in range(pair_count):
        j = (i + 1) % n_rings
        a, b = ring_ids[i], ring_ids[j]
        for k in range(n_seg):
            faces.append([a[k], a[nxt[k]], b[nxt[k]]])
            faces.append([a[k], b[nxt[k]], b[k]])
    if not profile.closed:
        p0 = ring_ids.max() + 1
        p1 = p0 + 1
        positions[p0] = [0.0, 0.0, poles[0][1]]
        positions[p1] = [0.0, 0.0, poles[1][1]]
        first, last = ring_ids[0], ring_ids[-1]
        for k in range(n_seg):
            faces.append([p0, first[nxt[k]], first[k]])
            faces.append([p1, last[k], last[nxt[k]]])

    faces = np.asarray(faces, dtype=np.int64)
    p = positions[faces]
    vol = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0
    if vol < 0.0:
        faces = faces[:, [0, 2, 1]]
    return build(positions, faces)


def torus(R: float, r: float, n_u: int = 64, n_v: int = 32) -> TriMesh:
    """Torus of revolution: tube radius r around a circle of radius R."""
    if not R > r > 0:
        raise DegenerateProfileError("torus requires R > r > 0")
    ang = 2.0 * np.pi * np.arange(n_v) / n_v
    samples = np.stack([R + r * np.cos(ang), r * np.sin(ang)], axis=1)
    return revolve(RevolutionProfile(samples=samples, count=n_u, closed=True))


def biconcave(
    radius: float = 1.0,
    c0: float = 0.207,
    c1: float = 2.003,
    c2: float = -1.123,
    n_profile: int = 48,
    count: int = 96,
) -> TriMesh:
    """Red-blood-cell shape: revolution of the standard quartic profile.

    z(rho) = +/- (radius/2) sqrt(1 - rho^2) (c0 + c1 rho^2 + c2 rho^4)
    with rho = r/radius; the defaults give the classic dimple.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    psi = np.linspace(0.0, np.pi / 2.0, n_profile)
    rho = np.sin(psi)
    zz = 0.5 * radius * np.sqrt(np.maximum(1.0 - rho**2, 0.0)) * (c0 + c1 * rho**2 + c2 * rho**4)
    rr = radius * rho
    upper = np.stack([rr, zz], axis=1)
    lower = np.stack([rr[-2::-1], -zz[-2::-1]], axis=1)
    samples = np.vstack([upper, lower])
    samples[0] = [0.0, samples[0, 1]]
    samples[-1] = [0.0, samples[-1, 1]]
    return revolve(RevolutionProfile(samples=samples, count=count, closed=False))


# ---------------------------------------------------------------------------
# profile-curve analysis (smooth oracles, independent of meshing)


def _tangent_angles(samples: np.ndarray) -> np.ndarray:
    d = np.diff(samples, axis=0)
    return np.unwrap(np.arctan2(d[:, 1], d[:, 0]))


def turning_index(samples) -> int:
    """Half-turn winding of an open profile's tangent (round sphere: 1).

    Total tangent rotation divided by pi, rounded; the profile of any
    embedded surface of revolution gives 1, and values >= 3 certify a
    self-crossing profile.
    """
    theta = _tangent_angles(np.asarray(samples, dtype=np.float64))
    return int(round(abs(theta[-1] - theta[0]) / np.pi))


def profile_mean_curvature(samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Smooth H at interior profile samples by finite differences.

    Returns (H, r, ds): mean curvature, radius and arclength weight per
    interior sample, with H = (kappa_meridian + kappa_parallel)/2 in the
    outward convention (unit sphere: +1; catenoid: 0).
    """
    pts = np.asarray(samples, dtype=np.float64)
    d = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(d, axis=1)
    theta = _tangent_angles(pts)
    # interior sample i sits between segments i-1 and i
    dtheta = theta[1:] - theta[:-1]
    ds = 0.5 * (seg_len[1:] + seg_len[:-1])
    kappa_m = -dtheta / ds
    mid_theta = 0.5 * (theta[1:] + theta[:-1])
    r = pts[1:-1, 0]
    kappa_p = -np.sin(mid_theta) / np.where(r > 0, r, np.inf)
    return 0.5 * (kappa_m + kappa_p), r, ds


def profile_willmore(samples) -> float:
    """Willmore energy of the revolved profile by quadrature: int H^2 2 pi r ds."""
    h, r, ds = profile_mean_curvature(samples)
    return float(np.sum(h * h * 2.0 * np.pi * r * ds))


# ---------------------------------------------------------------------------
# two spheres joined by a catenoid neck (turning index 3)


def _quintic_hermite(p0, v0, a0, p1, v1, a1, n: int) -> np.ndarray:
    """Quintic Hermite arc matching position, velocity and acceleration."""
    u = np.linspace(0.0, 1.0, n)[:, None]
    u2, u3, u4, u5 = u * u, u**3, u**4, u**5
    h0 = 1 - 10 * u3 + 15 * u4 - 6 * u5
    h1 = u - 6 * u3 + 8 * u4 - 3 * u5
    h2 = 0.5 * u2 - 1.5 * u3 + 1.5 * u4 - 0.5 * u5
    h3 = 0.5 * u3 - u4 + 0.5 * u5
    h4 = -4 * u3 + 7 * u4 - 3 * u5
    h5 = 10 * u3 - 15 * u4 + 6 * u5
    return h0 * p0 + h1 * v0 + h2 * a0 + h3 * a1 + h4 * v1 + h5 * p1


def _blend(p0, th0, k0, p1, th1, k1, n: int, speed: float | None = None) -> np.ndarray:
    """C^2 planar blend between oriented curve endpoints.

    Endpoint data: position, tangent angle, signed meridian curvature
    (kappa_m = -dtheta/ds).  The velocity magnitude defaults to the chord
    length; passing the expected arc length as ``speed`` keeps the spline
    close to arclength-parametrized on strongly curved blends.
    """
    if speed is None:
        speed = float(np.linalg.norm(p1 - p0))
    t0 = np.array([math.cos(th0), math.sin(th0)])
    t1 = np.array([math.cos(th1), math.sin(th1)])
    # acceleration for near-unit-speed parametrization: kappa * |v|^2 * left
    # normal, the plane's signed curvature being -kappa_m in our convention
    n0 = np.array([-t0[1], t0[0]])
    n1 = np.array([-t1[1], t1[0]])
    a0 = -k0 * speed * speed * n0
    a1 = -k1 * speed * speed * n1
    return _quintic_hermite(p0, speed * t0, a0, p1, speed * t1, a1, n)


# endpoint-curvature scales and vertical offset for the neck blends, tuned
# jointly over neck_scale in {0.3, 0.2, 0.1, 0.05, 0.035} so that W decreases
# monotonically toward 8 pi as the neck shrinks and sits within one unit of
# 8 pi at the default neck, while every blend stays clear of the axis
_NECK_K_SPHERE = 1.25  # scale on the unit sphere curvature at the hole rim
_NECK_K_CAT = 1.6  # scale on the catenoid junction curvature c / r_j^2
_NECK_DROP = -0.15  # extra sphere drop, in units of the hole radius


def catenoid_spheres_profile(
    neck_scale: float = 0.05,
    blend_width: float = 1.35,
    resolution: int = 1,
) -> np.ndarray:
    """Profile of two unit spheres joined through an ascending catenoid neck.

    The curve turns clockwise monotonically through three half-turns: down
    the upper sphere, through a dipping blend into the catenoid
    r = c cosh(z/c), up through the waist (the hairpin), over a cresting
    blend, and down around the lower sphere.  The hairpin necessarily
    crosses the rest of the profile, so the revolved surface is immersed
    rather than embedded; its Willmore energy exceeds 8 pi and approaches
    it as neck_scale shrinks.
    """
    c = float(neck_scale)
    if not 0.0 < c < 0.7:
        raise DegenerateProfileError("neck_scale must lie in (0, 0.7)")
    if blend_width <= 0:
        raise DegenerateProfileError("blend_width must be positive")
    if resolution < 1:
        raise DegenerateProfileError("resolution must be >= 1")

    # keep half of the catenoid arc that would reach r = sqrt(c) (where its
    # meridian curvature crosses 1); a shorter neck spends less bending
    # energy, and the blends absorb the remaining turning
    s = 0.5 * math.acosh(1.0 / math.sqrt(c))
    zeta = c * s
    r_j = c * math.cosh(s)  # junction radius
    sin_f = 1.0 / math.cosh(s)  # sine of the flare angle at the junction
    cos_f = math.tanh(s)
    flare = math.asin(sin_f)
    k_j = c / (r_j * r_j)  # catenoid meridian curvature at the junction
    # sphere hole radius and corresponding polar angle
    r_h = min(math.sqrt(c) * (1.0 + blend_width), 0.92)
    alpha = math.asin(r_h)
    # blend model: a clockwise arc of constant turning rate from the hole
    # tangent to the catenoid flare tangent fixes the blend's displacement
    rho = (r_h - r_j) / (r_h + sin_f)
    d_theta = alpha + flare
    dz_blend = rho * (math.cos(alpha) - cos_f) + _NECK_DROP * r_h
    # vertical placement: upper sphere centre z_top, lower sphere at -z_top
    z_top = math.cos(alpha) - zeta - dz_blend

    n_arc = 160 * resolution
    n_blend = max(24, int(60 * resolution * d_theta))
    n_cat = max(24, 40 * resolution)

    # upper sphere: from its top pole clockwise down to the hole rim
    phi = np.linspace(0.0, np.pi - alpha, n_arc)
    sph_t = np.stack([np.sin(phi), z_top + np.cos(phi)], axis=1)
    p_exit_t = sph_t[-1]
    th_exit_t = -(np.pi - alpha)

    # catenoid piece, ascending through the waist at z = 0
    zz = np.linspace(-zeta, zeta, n_cat)
    cat = np.stack([c * np.cosh(zz / c), zz], axis=1)
    th_cat_in = math.atan2(1.0, -math.sinh(s)) - 2.0 * np.pi  # up-left
    th_cat_out = math.atan2(1.0, math.sinh(s)) - 2.0 * np.pi  # up-right

    # blend 1: hole rim of the upper sphere -> catenoid lower end, dipping
    # clockwise through the horizontal
    speed = rho * d_theta
    b1 = _blend(
        p_exit_t, th_exit_t, _NECK_K_SPHERE,
        cat[0], th_cat_in, _NECK_K_CAT * k_j,
        n_blend,
        speed=speed,
    )

    # blend 2: catenoid upper end -> hole rim of the lower sphere,
    # cresting over a shallow local z-maximum
    p_enter_b = np.array([math.sin(alpha), -z_top + math.cos(alpha)])
    b2 = _blend(
        cat[-1], th_cat_out, _NECK_K_CAT * k_j,
        p_enter_b, -2.0 * np.pi - alpha, _NECK_K_SPHERE,
        n_blend,
        speed=speed,
    )

    # lower sphere: from the hole rim near its top pole, clockwise around
    # the equator and down to its bottom pole
    psi = np.linspace(alpha, np.pi, n_arc)
    sph_b = np.stack([np.sin(psi), -z_top + np.cos(psi)], axis=1)

    profile = np.vstack([sph_t, b1[1:], cat[1:], b2[1:], sph_b[1:]])
    profile[0] = [0.0, profile[0, 1]]
    profile[-1] = [0.0, profile[-1, 1]]
    if np.any(profile[1:-1, 0] <= 0):
        raise DegenerateProfileError("neck construction collapsed through the axis")
    return profile


def catenoid_spheres(
    neck_scale: float = 0.05,
    blend_width: float = 1.35,
    resolution: int = 1,
    count: int = 48,
) -> tuple[TriMesh, float]:
    """Two unit spheres joined by a catenoid neck; returns (mesh, measured W).

    The measured Willmore energy is evaluated on the generated mesh.  For
    the default parameters it lies a little above 8 pi and decreases
    toward 8 pi as neck_scale shrinks; the profile's turning index is 3,
    which forces the surface to be immersed (self-intersecting).
    """
    profile = catenoid_spheres_profile(neck_scale, blend_width, resolution)
    mesh = revolve(
        RevolutionProfile(samples=profile, count=count, closed=False, allow_self_crossing=True)
    )
    from .geometry import geometry_report, willmore_energy

    w = willmore_energy(geometry_report(mesh))
    log.info("catenoid_spheres(neck=%.3g): W = %.6f (8*pi = %.6f)", neck_scale, w, 8 * np.pi)
    return mesh, w
