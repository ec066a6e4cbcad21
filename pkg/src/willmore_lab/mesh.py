"""Closed oriented triangle meshes: validation, metric queries, OBJ exchange.

A mesh is an indexed triangle list. Adjacency information (edges, incidence
counts) is derived on demand and cached; the vertex/triangle arrays are frozen
after construction so meshes can be shared between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull, QhullError

# Triangles with area below DEGENERACY_FLOOR_FACTOR * (bbox diagonal)^2 are
# considered degenerate during validation (configurable per call).
DEGENERACY_FLOOR_FACTOR = 1e-12


class MeshError(Exception):
    """Base class for mesh precondition failures."""


class InvalidMeshError(MeshError):
    """Raised when an operation requires a valid mesh and validation fails."""

    def __init__(self, report: "ValidationReport"):
        self.report = report
        shown = "; ".join(str(v) for v in report.violations[:4])
        extra = len(report.violations) - 4
        if extra > 0:
            shown += f"; (+{extra} more)"
        super().__init__(f"invalid mesh: {shown}")


class DegenerateTriangleError(MeshError):
    """Raised when a computation hits a triangle below the degeneracy floor."""

    def __init__(self, triangle_index: int, area: float):
        self.triangle_index = int(triangle_index)
        self.area = float(area)
        super().__init__(
            f"degenerate triangle {triangle_index} (area {area:.3e})"
        )


@dataclass(frozen=True)
class Violation:
    kind: str
    simplices: tuple[int, ...]
    detail: str = ""

    def __str__(self) -> str:
        where = ",".join(str(s) for s in self.simplices)
        msg = f"{self.kind} [{where}]"
        return f"{msg}: {self.detail}" if self.detail else msg


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...] = ()


@dataclass(frozen=True)
class MeshMetrics:
    """Global scalar metrics of a validated mesh.

    ``euler_characteristics`` and ``genera`` are per edge-connected component,
    in the component order produced by :func:`split_components`.
    """

    area: float
    diameter: float
    component_count: int
    euler_characteristics: tuple[int, ...]
    genera: tuple[int, ...]
    vertex_count: int
    triangle_count: int


class TriMesh:
    """Indexed triangle mesh in R^3.

    Triangles are expected counterclockwise with respect to the outward
    normal; :func:`validate` checks orientation consistency and closedness.
    ``labels`` is an optional per-triangle integer tag (used e.g. to track
    which component of a multi-sphere configuration a triangle belongs to).
    """

    def __init__(self, vertices, triangles, labels=None):
        v = np.asarray(vertices, dtype=np.float64)
        t = np.asarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"triangles must be (m, 3), got {t.shape}")
        self.vertices = v.copy()
        self.triangles = t.copy()
        self.vertices.flags.writeable = False
        self.triangles.flags.writeable = False
        if labels is not None:
            lab = np.asarray(labels, dtype=np.int64).copy()
            if lab.shape != (len(t),):
                raise MeshError("labels must be one integer per triangle")
            lab.flags.writeable = False
            self.labels = lab
        else:
            self.labels = None

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    @cached_property
    def halfedges(self) -> np.ndarray:
        """Directed edges (3 per triangle, in winding order), shape (3m, 2)."""
        t = self.triangles
        return np.column_stack(
            [t[:, [0, 1, 2]].reshape(-1), t[:, [1, 2, 0]].reshape(-1)]
        )

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as sorted index pairs, shape (e, 2)."""
        he = np.sort(self.halfedges, axis=1)
        return np.unique(he, axis=0)

    @cached_property
    def bbox_diagonal(self) -> float:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    @cached_property
    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def with_vertices(self, vertices) -> "TriMesh":
        """Same connectivity, new vertex positions."""
        return TriMesh(vertices, self.triangles, labels=self.labels)

    def __repr__(self) -> str:
        return f"TriMesh({self.vertex_count} vertices, {self.triangle_count} triangles)"


def rescale(mesh: TriMesh, alpha: float, center=(0.0, 0.0, 0.0)) -> TriMesh:
    """Dilate the mesh by ``alpha`` about ``center``."""
    if alpha <= 0:
        raise ValueError("rescale factor must be positive")
    c = np.asarray(center, dtype=np.float64)
    return mesh.with_vertices(c + alpha * (mesh.vertices - c))


def translate(mesh: TriMesh, offset) -> TriMesh:
    return mesh.with_vertices(mesh.vertices + np.asarray(offset, dtype=np.float64))


def concatenate(meshes: list[TriMesh]) -> TriMesh:
    """Disjoint union of meshes (indices shifted); labels identify the part."""
    if not meshes:
        raise ValueError("cannot concatenate an empty list of meshes")
    verts, tris, labels = [], [], []
    offset = 0
    for part_id, m in enumerate(meshes):
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        if m.labels is not None:
            labels.append(m.labels)
        else:
            labels.append(np.full(m.triangle_count, part_id, dtype=np.int64))
        offset += m.vertex_count
    return TriMesh(np.vstack(verts), np.vstack(tris), labels=np.concatenate(labels))


def validate(mesh: TriMesh, area_floor: float | None = None) -> ValidationReport:
    """Check every TriMesh invariant; violations are returned, never raised.

    area_floor defaults to DEGENERACY_FLOOR_FACTOR * (bbox diagonal)^2.
    """
    violations: list[Violation] = []
    t = mesh.triangles
    nv = mesh.vertex_count

    bad = np.nonzero((t < 0).any(axis=1) | (t >= nv).any(axis=1))[0]
    for i in bad:
        violations.append(Violation("vertex index out of range", (int(i),)))
    repeated = np.nonzero(
        (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
    )[0]
    for i in repeated:
        violations.append(Violation("repeated vertex within triangle", (int(i),)))
    if violations:
        # Connectivity checks below assume indexable, non-collapsed triangles.
        return ValidationReport(False, tuple(violations))

    he = mesh.halfedges
    und = np.sort(he, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    boundary = uniq[counts == 1]
    nonmanifold = uniq[counts > 2]
    for e in boundary:
        violations.append(
            Violation("edge with one incident face", (int(e[0]), int(e[1])))
        )
    for e, c in zip(nonmanifold, counts[counts > 2]):
        violations.append(
            Violation(
                "non-manifold edge",
                (int(e[0]), int(e[1])),
                f"{int(c)} incident faces",
            )
        )
    # Orientation: each undirected edge must be traversed once per direction,
    # so a repeated directed edge means two triangles wind the same way.
    dir_uniq, dir_counts = np.unique(he, axis=0, return_counts=True)
    for e in dir_uniq[dir_counts > 1]:
        violations.append(
            Violation("inconsistent orientation", (int(e[0]), int(e[1])))
        )

    if area_floor is None:
        area_floor = DEGENERACY_FLOOR_FACTOR * mesh.bbox_diagonal**2
    degenerate = np.nonzero(mesh.triangle_areas < area_floor)[0]
    for i in degenerate:
        violations.append(
            Violation(
                "degenerate triangle",
                (int(i),),
                f"area {mesh.triangle_areas[i]:.3e} < floor {area_floor:.3e}",
            )
        )

    return ValidationReport(not violations, tuple(violations))


def require_valid(mesh: TriMesh, area_floor: float | None = None) -> None:
    report = validate(mesh, area_floor=area_floor)
    if not report.ok:
        raise InvalidMeshError(report)


def _component_labels(mesh: TriMesh) -> np.ndarray:
    """Edge-connectivity component id per vertex (unreferenced vertices get -1)."""
    nv = mesh.vertex_count
    parent = np.arange(nv)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    for a, b in mesh.edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    referenced = np.zeros(nv, dtype=bool)
    referenced[mesh.triangles.reshape(-1)] = True
    labels = np.full(nv, -1, dtype=np.int64)
    next_id = 0
    root_to_id: dict[int, int] = {}
    for i in range(nv):
        if not referenced[i]:
            continue
        r = find(i)
        if r not in root_to_id:
            root_to_id[r] = next_id
            next_id += 1
        labels[i] = root_to_id[r]
    return labels


def exact_diameter(points: np.ndarray) -> float:
    """Max pairwise distance; convex-hull pre-filter, exact result."""
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) > 64:
        try:
            hull = ConvexHull(pts)
            pts = pts[hull.vertices]
        except QhullError:
            pass  # degenerate configurations fall back to brute force
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff**2).sum(axis=2).max()))


def metrics(mesh: TriMesh) -> MeshMetrics:
    """Area, exact vertex-pairwise diameter, and per-component topology."""
    require_valid(mesh)
    area = float(mesh.triangle_areas.sum())
    referenced = np.unique(mesh.triangles.reshape(-1))
    diameter = exact_diameter(mesh.vertices[referenced])

    labels = _component_labels(mesh)
    ncomp = int(labels.max()) + 1
    tri_comp = labels[mesh.triangles[:, 0]]
    chis, genera = [], []
    edge_comp = labels[mesh.edges[:, 0]]
    for c in range(ncomp):
        v = int((labels == c).sum())
        e = int((edge_comp == c).sum())
        f = int((tri_comp == c).sum())
        chi = v - e + f
        chis.append(chi)
        if (2 - chi) % 2 != 0 or chi > 2:
            raise InvalidMeshError(
                ValidationReport(
                    False,
                    (Violation("component with non-surface Euler characteristic", (c,), f"chi={chi}"),),
                )
            )
        genera.append((2 - chi) // 2)

    return MeshMetrics(
        area=area,
        diameter=diameter,
        component_count=ncomp,
        euler_characteristics=tuple(chis),
        genera=tuple(genera),
        vertex_count=len(referenced),
        triangle_count=mesh.triangle_count,
    )


def split_components(mesh: TriMesh) -> list[TriMesh]:
    """Partition by edge-connectivity; concatenation reproduces the input
    up to reindexing."""
    require_valid(mesh)
    labels = _component_labels(mesh)
    ncomp = int(labels.max()) + 1
    parts = []
    tri_comp = labels[mesh.triangles[:, 0]]
    for c in range(ncomp):
        tris = mesh.triangles[tri_comp == c]
        used = np.unique(tris.reshape(-1))
        remap = np.full(mesh.vertex_count, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        lab = mesh.labels[tri_comp == c] if mesh.labels is not None else None
        parts.append(TriMesh(mesh.vertices[used], remap[tris], labels=lab))
    return parts


# ---------------------------------------------------------------------------
# OBJ exchange: `v x y z` and `f i j k` records only (1-based, triangles only).
# ---------------------------------------------------------------------------

def save_obj(mesh: TriMesh, path) -> None:
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def load_obj(path) -> TriMesh:
    """Parse an OBJ file. Polygons with more than 3 vertices are rejected;
    unknown record types are ignored."""
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        tag = fields[0]
        if tag == "v":
            if len(fields) < 4:
                raise MeshError(f"{path}:{lineno}: vertex record needs 3 coordinates")
            verts.append([float(x) for x in fields[1:4]])
        elif tag == "f":
            idx = fields[1:]
            if len(idx) != 3:
                raise MeshError(
                    f"{path}:{lineno}: only triangles are supported "
                    f"(face with {len(idx)} vertices)"
                )
            face = []
            for tok in idx:
                head = tok.split("/", 1)[0]
                i = int(head)
                if i < 0:
                    raise MeshError(f"{path}:{lineno}: negative OBJ indices unsupported")
                face.append(i - 1)
            tris.append(face)
        # every other record type is ignored
    if not verts or not tris:
        raise MeshError(f"{path}: no triangle mesh found")
    return TriMesh(np.array(verts), np.array(tris))
