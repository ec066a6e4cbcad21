"""Analytic test surfaces: icospheres, tori, capped cylinders, ellipsoids,
concentric-sphere ("dante") families, and sphere inversions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import TriMesh, concatenate, rescale

GENERATOR_KINDS = (
    "icosphere",
    "dante",
    "torus",
    "cappedCylinder",
    "ellipsoid",
    "disjointUnion",
    "inversion",
)


class GeneratorError(ValueError):
    """Invalid generator specification."""


@dataclass(frozen=True)
class GeneratorSpec:
    """Declarative surface request; ``params`` are kind-specific.

    Kinds and parameters:
      icosphere       r, level, center
      dante           lam (> 1), k, level
      torus           major_radius, minor_radius, n_major, n_minor, center
      cappedCylinder  radius, height, n_circ, center
      ellipsoid       a, c, level, center
      disjointUnion   parts (tuple of GeneratorSpec)
      inversion       base (GeneratorSpec), center, radius
    """

    kind: str
    params: dict = field(default_factory=dict)

    def describe(self) -> str:
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items(), key=lambda kv: kv[0]))
        return f"{self.kind}({inner})"


def _orient_outward(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Flip winding if the signed enclosed volume is negative."""
    p = verts[tris]
    vol = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0
    if vol < 0:
        tris = tris[:, [0, 2, 1]]
    return tris


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v[0])
    f = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    return v, _orient_outward(v, f)


def _subdivide(verts: np.ndarray, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One 1-to-4 midpoint subdivision pass with shared-edge deduplication."""
    vlist = list(verts)
    cache: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        if key not in cache:
            cache[key] = len(vlist)
            vlist.append(0.5 * (vlist[a] + vlist[b]))
        return cache[key]

    out = np.empty((4 * len(tris), 3), dtype=np.int64)
    for i, (a, b, c) in enumerate(tris):
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out[4 * i : 4 * i + 4] = [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return np.array(vlist), out


def icosphere(radius: float = 1.0, level: int = 3, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Subdivided icosahedron reprojected to the sphere.

    Level 0 is the regular icosahedron at unit circumradius; each level
    quadruples the triangle count (level 3: 642 vertices).
    """
    if radius <= 0:
        raise GeneratorError("icosphere radius must be positive")
    if level < 0:
        raise GeneratorError("icosphere level must be >= 0")
    v, f = _icosahedron()
    for _ in range(level):
        v, f = _subdivide(v, f)
        v /= np.linalg.norm(v, axis=1)[:, None]
    return TriMesh(np.asarray(center, dtype=np.float64) + radius * v, f)


def torus(
    major_radius: float = 2.0,
    minor_radius: float = 1.0,
    n_major: int = 64,
    n_minor: int = 32,
    center=(0.0, 0.0, 0.0),
) -> TriMesh:
    """Torus of revolution about the z axis; requires major > minor radius."""
    if not (major_radius > minor_radius > 0):
        raise GeneratorError("torus requires major_radius > minor_radius > 0")
    if n_major < 3 or n_minor < 3:
        raise GeneratorError("torus resolution must be at least 3x3")
    R, r = major_radius, minor_radius
    u = 2 * np.pi * np.arange(n_major) / n_major
    w = 2 * np.pi * np.arange(n_minor) / n_minor
    uu, ww = np.meshgrid(u, w, indexing="ij")
    verts = np.stack(
        [
            (R + r * np.cos(ww)) * np.cos(uu),
            (R + r * np.cos(ww)) * np.sin(uu),
            r * np.sin(ww),
        ],
        axis=-1,
    ).reshape(-1, 3)

    idx = (np.arange(n_major)[:, None] * n_minor + np.arange(n_minor)[None, :])
    i_next = np.roll(idx, -1, axis=0)
    j_next = np.roll(idx, -1, axis=1)
    ij_next = np.roll(i_next, -1, axis=1)
    quads = np.stack([idx, i_next, ij_next, j_next], axis=-1).reshape(-1, 4)
    tris = np.vstack([quads[:, [0, 1, 2]], quads[:, [0, 2, 3]]])
    tris = _orient_outward(verts, tris)
    return TriMesh(np.asarray(center, dtype=np.float64) + verts, tris)


def ellipsoid(a: float, c: float, level: int = 3, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Ellipsoid x^2/a^2 + y^2/a^2 + z^2/c^2 = 1 (icosphere scaled per axis)."""
    if a <= 0 or c <= 0:
        raise GeneratorError("ellipsoid semi-axes must be positive")
    base = icosphere(1.0, level)
    verts = base.vertices * np.array([a, a, c])
    return TriMesh(np.asarray(center, dtype=np.float64) + verts, base.triangles)


def capped_cylinder(
    radius: float = 1.0,
    height: float = 2.0,
    n_circ: int = 32,
    center=(0.0, 0.0, 0.0),
) -> TriMesh:
    """Cylinder side of the given height along z, closed by two hemispherical
    caps of the same radius. Cap rings share the cylinder boundary rings
    exactly, so the surface is C^1 across the seams."""
    if radius <= 0 or height <= 0:
        raise GeneratorError("capped cylinder radius and height must be positive")
    if n_circ < 6:
        raise GeneratorError("capped cylinder needs n_circ >= 6")
    ring_step = 2 * np.pi * radius / n_circ
    n_cap = max(3, int(round((np.pi / 2 * radius) / ring_step)))
    n_side = max(1, int(round(height / ring_step)))
    theta = 2 * np.pi * np.arange(n_circ) / n_circ
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    verts: list[np.ndarray] = []
    rings: list[np.ndarray] = []  # vertex indices per ring, top to bottom

    def add_ring(r: float, z: float) -> np.ndarray:
        start = len(verts)
        for cx, cy in circle:
            verts.append(np.array([r * cx, r * cy, z]))
        return np.arange(start, start + n_circ)

    verts.append(np.array([0.0, 0.0, height / 2 + radius]))  # top pole
    top_pole = 0
    for k in range(1, n_cap + 1):
        phi = (np.pi / 2) * k / n_cap
        rings.append(add_ring(radius * np.sin(phi), height / 2 + radius * np.cos(phi)))
    for k in range(1, n_side + 1):
        rings.append(add_ring(radius, height / 2 - height * k / n_side))
    for k in range(1, n_cap):
        psi = (np.pi / 2) * k / n_cap
        rings.append(add_ring(radius * np.cos(psi), -height / 2 - radius * np.sin(psi)))
    bottom_pole = len(verts)
    verts.append(np.array([0.0, 0.0, -height / 2 - radius]))

    tris: list[tuple[int, int, int]] = []
    first = rings[0]
    for j in range(n_circ):
        tris.append((top_pole, first[j], first[(j + 1) % n_circ]))
    for ra, rb in zip(rings[:-1], rings[1:]):
        for j in range(n_circ):
            jn = (j + 1) % n_circ
            tris.append((ra[j], rb[j], rb[jn]))
            tris.append((ra[j], rb[jn], ra[jn]))
    last = rings[-1]
    for j in range(n_circ):
        tris.append((bottom_pole, last[(j + 1) % n_circ], last[j]))

    v = np.array(verts)
    f = _orient_outward(v, np.array(tris, dtype=np.int64))
    return TriMesh(np.asarray(center, dtype=np.float64) + v, f)


def dante_radii(lam: float, k: int) -> np.ndarray:
    """Radii of the k concentric spheres: interpolate from 1/sqrt(lam) toward 1."""
    if lam <= 1:
        raise GeneratorError("dante requires lambda > 1")
    if k < 1:
        raise GeneratorError("dante requires k >= 1")
    r1 = 1.0 / math.sqrt(lam)
    i = np.arange(1, k + 1, dtype=np.float64)
    return r1 + (i - 1) / k * (1.0 - r1)


def dante(lam: float, k: int, level: int = 3) -> TriMesh:
    """k concentric spheres with radii interpolating from 1/sqrt(lam) toward 1;
    all components lie strictly inside the unit ball."""
    radii = dante_radii(lam, k)
    parts = [icosphere(r, level) for r in radii]
    return concatenate(parts)


def dante_energy_analytic(lam: float, k: int) -> float:
    """4*pi*k - lam * sum_i 4*pi*r_i^2 with the concentric-sphere radii."""
    radii = dante_radii(lam, k)
    return 4 * math.pi * k - lam * float((4 * math.pi * radii**2).sum())


def invert(mesh: TriMesh, center, radius: float) -> TriMesh:
    """Spherical inversion x -> center + radius^2 (x - center)/|x - center|^2.

    The map reverses orientation, so the triangle winding is flipped to keep
    the result consistently oriented. The caller must keep ``center`` off the
    mesh (a vertex at the center has no image)."""
    c = np.asarray(center, dtype=np.float64)
    d = mesh.vertices - c
    r2 = np.einsum("ij,ij->i", d, d)
    if (r2 == 0).any():
        raise GeneratorError("inversion center coincides with a mesh vertex")
    new_v = c + (radius**2) * d / r2[:, None]
    return TriMesh(new_v, mesh.triangles[:, [0, 2, 1]], labels=mesh.labels)


def perturb(mesh: TriMesh, amplitude_rel: float, seed: int) -> TriMesh:
    """Displace each vertex along its area-weighted normal by a uniform random
    fraction of the local mean edge length (amplitude_rel at most)."""
    rng = np.random.default_rng(seed)
    normals = _vertex_normals_area(mesh)
    local = _local_edge_length(mesh)
    noise = rng.uniform(-1.0, 1.0, size=mesh.vertex_count)
    disp = (amplitude_rel * local * noise)[:, None] * normals
    return mesh.with_vertices(mesh.vertices + disp)


def perturb_radial(mesh: TriMesh, amplitude_rel: float, seed: int, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Scale each vertex radially about ``center`` by 1 + U(-a, a)."""
    rng = np.random.default_rng(seed)
    c = np.asarray(center, dtype=np.float64)
    factors = 1.0 + rng.uniform(-amplitude_rel, amplitude_rel, size=mesh.vertex_count)
    return mesh.with_vertices(c + factors[:, None] * (mesh.vertices - c))


def _vertex_normals_area(mesh: TriMesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    fn = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])  # area-weighted already
    out = np.zeros_like(mesh.vertices)
    for k in range(3):
        np.add.at(out, mesh.triangles[:, k], fn)
    norms = np.linalg.norm(out, axis=1)
    norms[norms == 0] = 1.0
    return out / norms[:, None]


def _local_edge_length(mesh: TriMesh) -> np.ndarray:
    e = mesh.edges
    lengths = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
    total = np.zeros(mesh.vertex_count)
    count = np.zeros(mesh.vertex_count)
    for k in range(2):
        np.add.at(total, e[:, k], lengths)
        np.add.at(count, e[:, k], 1.0)
    count[count == 0] = 1.0
    return total / count


def generate(spec: GeneratorSpec) -> TriMesh:
    """Build the mesh described by ``spec``; raises GeneratorError on invalid
    parameters."""
    if spec.kind not in GENERATOR_KINDS:
        raise GeneratorError(f"unknown generator kind {spec.kind!r}")
    p = dict(spec.params)
    if spec.kind == "icosphere":
        return icosphere(
            radius=float(p.get("r", 1.0)),
            level=int(p.get("level", 3)),
            center=p.get("center", (0.0, 0.0, 0.0)),
        )
    if spec.kind == "dante":
        return dante(float(p["lam"]), int(p.get("k", 1)), level=int(p.get("level", 3)))
    if spec.kind == "torus":
        return torus(
            major_radius=float(p.get("major_radius", 2.0)),
            minor_radius=float(p.get("minor_radius", 1.0)),
            n_major=int(p.get("n_major", 64)),
            n_minor=int(p.get("n_minor", 32)),
            center=p.get("center", (0.0, 0.0, 0.0)),
        )
    if spec.kind == "cappedCylinder":
        return capped_cylinder(
            radius=float(p.get("radius", 1.0)),
            height=float(p.get("height", 2.0)),
            n_circ=int(p.get("n_circ", 32)),
            center=p.get("center", (0.0, 0.0, 0.0)),
        )
    if spec.kind == "ellipsoid":
        return ellipsoid(
            a=float(p["a"]),
            c=float(p["c"]),
            level=int(p.get("level", 3)),
            center=p.get("center", (0.0, 0.0, 0.0)),
        )
    if spec.kind == "disjointUnion":
        parts = p.get("parts", ())
        if not parts:
            raise GeneratorError("disjointUnion requires at least one part")
        return concatenate([generate(s) for s in parts])
    if spec.kind == "inversion":
        base = p.get("base")
        if base is None:
            raise GeneratorError("inversion requires a base spec")
        return invert(generate(base), p.get("center", (0.0, 0.0, 3.0)), float(p.get("radius", 1.0)))
    raise GeneratorError(f"unhandled generator kind {spec.kind!r}")
