"""Two-radius area/curvature balance identity around a center point.

For a center y and radii sigma < rho, the smooth identity equates

    |S_sigma|/sigma^2 + int_{annulus} |H/2 + Xp/|X|^2|^2

with

    |S_rho|/rho^2 + (1/4) int_{annulus} |H|^2
    + int_{S_rho} <X,H>/rho^2 - int_{S_sigma} <X,H>/sigma^2,

where X = x - y and Xp is the normal component of X. Discretely, every
integral is a vertex-cell sum: each triangle's area inside a ball is computed
by exact edge-sphere clipping (chord polygon, fan retriangulation) and then
attributed to the triangle's vertex cells in proportion to their unclipped
mixed-area shares. When both balls contain the whole mesh this reduces the
identity to an algebraic cancellation, so the residual drops to roundoff.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrete_ops import _corner_areas, _corner_quantities, curvature
from .mesh import TriMesh, require_valid


@dataclass(frozen=True)
class MonotonicityResidual:
    lhs: float
    rhs: float
    residual: float


def vertex_normals(mesh: TriMesh) -> np.ndarray:
    """Angle-weighted vertex normals (unit length)."""
    V, F = mesh.vertices, mesh.triangles
    L, cot, s = _corner_quantities(V, F)
    dots = (L[:, [1, 2, 0]] + L[:, [2, 0, 1]] - L) / 2.0
    angles = np.arctan2(s[:, None], dots)
    p = V[F]
    fn = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    fn = fn / np.linalg.norm(fn, axis=1)[:, None]
    out = np.zeros_like(V)
    for k in range(3):
        np.add.at(out, F[:, k], angles[:, k][:, None] * fn)
    norms = np.linalg.norm(out, axis=1)
    norms[norms == 0] = 1.0
    return out / norms[:, None]


def _clip_triangle_area(q: np.ndarray, tau: float) -> float:
    """Area of one triangle (corners q, already relative to the ball center)
    inside the ball of radius tau. The spherical boundary is replaced by the
    chords between exact edge-sphere intersection points."""
    r = np.linalg.norm(q, axis=1)
    inside = r <= tau
    full = 0.5 * np.linalg.norm(np.cross(q[1] - q[0], q[2] - q[0]))
    if inside.all():
        return full
    pts: list[np.ndarray] = []
    for k in range(3):
        a, b = q[k], q[(k + 1) % 3]
        if inside[k]:
            pts.append(a)
        d = b - a
        qa = float(d @ d)
        qb = 2.0 * float(a @ d)
        qc = float(a @ a) - tau * tau
        disc = qb * qb - 4.0 * qa * qc
        if disc <= 0.0 or qa == 0.0:
            continue
        root = np.sqrt(disc)
        for t in sorted(((-qb - root) / (2 * qa), (-qb + root) / (2 * qa))):
            if 1e-12 < t < 1.0 - 1e-12:
                pts.append(a + t * d)
    if len(pts) < 3:
        return 0.0
    # Inside region of a convex triangle cut by a ball is convex, so the fan
    # over the boundary-ordered points is a valid polygon triangulation.
    area = np.zeros(3)
    for i in range(1, len(pts) - 1):
        area = area + np.cross(pts[i] - pts[0], pts[i + 1] - pts[0])
    return 0.5 * float(np.linalg.norm(area))


def clipped_cell_areas(mesh: TriMesh, y, tau: float) -> np.ndarray:
    """Per-vertex cell area inside the ball B_tau(y). Each triangle's clipped
    area is split between its vertices in proportion to the mixed-area corner
    shares, so summing over a ball containing the mesh returns the exact
    vertex areas."""
    V, F = mesh.vertices, mesh.triangles
    y = np.asarray(y, dtype=np.float64)
    L, cot, s = _corner_quantities(V, F)
    corner, _ = _corner_areas(L, cot, s)
    full = s / 2.0

    rel = V - y
    r = np.linalg.norm(rel, axis=1)
    rmax_per_tri = np.max(r[F], axis=1)
    rmin_per_tri = np.min(r[F], axis=1)

    frac = np.zeros(len(F))
    frac[rmax_per_tri <= tau] = 1.0
    boundary = np.nonzero((rmax_per_tri > tau) & (rmin_per_tri <= tau))[0]
    for t in boundary:
        frac[t] = _clip_triangle_area(rel[F[t]], tau) / full[t]

    out = np.zeros(len(V))
    for k in range(3):
        np.add.at(out, F[:, k], corner[:, k] * frac)
    return out


def monotonicity_residual(mesh: TriMesh, y, sigma: float, rho: float) -> MonotonicityResidual:
    """Evaluate both sides of the identity; the residual is
    |lhs - rhs| / max(|lhs|, 1)."""
    if not (0 < sigma < rho):
        raise ValueError("need 0 < sigma < rho")
    require_valid(mesh)
    y = np.asarray(y, dtype=np.float64)
    V = mesh.vertices
    X = V - y
    r2 = np.einsum("ij,ij->i", X, X)
    if r2.min() < (1e-12 * max(mesh.bbox_diagonal, 1e-300)) ** 2:
        raise ValueError("center y coincides with a mesh vertex")

    field = curvature(mesh)
    H = field.mean_curvature
    h2 = np.einsum("ij,ij->i", H, H)
    n = vertex_normals(mesh)
    xperp = np.einsum("ij,ij->i", X, n)[:, None] * n

    a_sig = clipped_cell_areas(mesh, y, sigma)
    a_rho = clipped_cell_areas(mesh, y, rho)
    annulus = np.maximum(a_rho - a_sig, 0.0)

    combo = H / 2.0 + xperp / r2[:, None]
    combo2 = np.einsum("ij,ij->i", combo, combo)
    xh = np.einsum("ij,ij->i", X, H)

    lhs = a_sig.sum() / sigma**2 + float(combo2 @ annulus)
    rhs = (
        a_rho.sum() / rho**2
        + 0.25 * float(h2 @ annulus)
        + float(xh @ a_rho) / rho**2
        - float(xh @ a_sig) / sigma**2
    )
    return MonotonicityResidual(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs) / max(abs(lhs), 1.0))
