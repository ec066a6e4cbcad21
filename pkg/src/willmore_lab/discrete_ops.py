"""Discrete curvature operators and the scalar functionals built on them.

Conventions:
  * mean curvature is the arithmetic mean of the principal curvatures, carried
    as a vector: a round sphere of radius r yields |H| = 1/r pointing toward
    the center;
  * the bending energy is W = sum_v |H(v)|^2 A(v) with mixed Voronoi vertex
    areas (barycentric thirds for obtuse triangles);
  * Gaussian curvature is the angle defect divided by the vertex area, which
    makes the total-curvature identity sum K*A = 2*pi*chi exact.
"""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .mesh import DegenerateTriangleError, TriMesh, require_valid, DEGENERACY_FLOOR_FACTOR


@dataclass(frozen=True)
class CurvatureField:
    """Per-vertex curvature data: mean curvature vector (1/length), Gaussian
    curvature (1/length^2), and the vertex area weights (length^2)."""

    mean_curvature: np.ndarray  # (V, 3)
    gaussian: np.ndarray        # (V,)
    vertex_area: np.ndarray     # (V,)


@dataclass(frozen=True)
class EnergyReport:
    """All scalar functionals of one mesh at one area weight ``lam``."""

    willmore: float
    area: float
    w_lambda: float
    ratio: float
    sq_second_ff: float
    lam: float

    CSV_HEADER = "W,area,wLambda,ratio,sqA2,lambda"

    def to_csv_row(self) -> str:
        return (
            f"{self.willmore:.17g},{self.area:.17g},{self.w_lambda:.17g},"
            f"{self.ratio:.17g},{self.sq_second_ff:.17g},{self.lam:.17g}"
        )

    def to_text(self) -> str:
        buf = io.StringIO()
        for key, val in (
            ("W", self.willmore),
            ("area", self.area),
            ("wLambda", self.w_lambda),
            ("ratio", self.ratio),
            ("sqA2", self.sq_second_ff),
            ("lambda", self.lam),
        ):
            buf.write(f"{key} = {val:.17g}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Low-level kernels on raw (V, 3) / (F, 3) arrays. The optimizer calls these
# directly in its inner loop; the TriMesh-facing API validates first.
# ---------------------------------------------------------------------------

def _corner_quantities(V: np.ndarray, F: np.ndarray, floor: float | None = None):
    """Per-triangle squared opposite-edge lengths L, cotangents, and double
    area s (= 2 * triangle area). Raises on triangles below the area floor."""
    p = V[F]
    # e[:, k] is the edge opposite corner k
    e = p[:, [2, 0, 1], :] - p[:, [1, 2, 0], :]
    L = np.einsum("fkd,fkd->fk", e, e)
    cross = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    s = np.linalg.norm(cross, axis=1)
    if floor is None:
        lo, hi = V.min(axis=0), V.max(axis=0)
        floor = DEGENERACY_FLOOR_FACTOR * float(np.dot(hi - lo, hi - lo))
    bad = np.nonzero(s < 2.0 * floor)[0]
    if bad.size:
        raise DegenerateTriangleError(int(bad[0]), float(s[bad[0]] / 2))
    cot = (L[:, [1, 2, 0]] + L[:, [2, 0, 1]] - L) / (2.0 * s[:, None])
    return L, cot, s


def _corner_areas(L: np.ndarray, cot: np.ndarray, s: np.ndarray):
    """Mixed Voronoi corner areas with barycentric-thirds fallback for obtuse
    triangles. Returns (corner areas (F,3), obtuse mask (F,))."""
    voronoi = (L[:, [1, 2, 0]] * cot[:, [1, 2, 0]] + L[:, [2, 0, 1]] * cot[:, [2, 0, 1]]) / 8.0
    obtuse = (cot < 0).any(axis=1)
    thirds = (s / 6.0)[:, None]
    return np.where(obtuse[:, None], thirds, voronoi), obtuse


def _scatter_laplacian(F: np.ndarray, cot: np.ndarray, field: np.ndarray) -> np.ndarray:
    """Cotangent Laplacian applied to a per-vertex field:
    out_i = sum_j w_ij (field_j - field_i), w_ij = (cot a + cot b)/2."""
    out = np.zeros_like(field)
    for k in range(3):
        a = F[:, (k + 1) % 3]
        b = F[:, (k + 2) % 3]
        w = (0.5 * cot[:, k])[:, None]
        np.add.at(out, a, w * (field[b] - field[a]))
        np.add.at(out, b, w * (field[a] - field[b]))
    return out


def _vertex_areas(F: np.ndarray, corner: np.ndarray, nv: int) -> np.ndarray:
    A = np.zeros(nv)
    for k in range(3):
        np.add.at(A, F[:, k], corner[:, k])
    return A


def _curvature_arrays(V: np.ndarray, F: np.ndarray):
    """Returns (H vectors, vertex areas, Laplacian of positions m, cot, L, s)."""
    L, cot, s = _corner_quantities(V, F)
    corner, _ = _corner_areas(L, cot, s)
    A = _vertex_areas(F, corner, len(V))
    m = _scatter_laplacian(F, cot, V)
    H = m / (2.0 * A[:, None])
    return H, A, m, cot, L, s


def _willmore_area(V: np.ndarray, F: np.ndarray) -> tuple[float, float]:
    H, A, m, cot, L, s = _curvature_arrays(V, F)
    W = float((np.einsum("ij,ij->i", m, m) / (4.0 * A)).sum())
    return W, float(s.sum() / 2.0)


def _wlambda(V: np.ndarray, F: np.ndarray, lam: float) -> float:
    W, area = _willmore_area(V, F)
    return W - lam * area


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def curvature(mesh: TriMesh) -> CurvatureField:
    """Cotangent mean-curvature vector and angle-defect Gaussian curvature."""
    require_valid(mesh)
    V, F = mesh.vertices, mesh.triangles
    H, A, m, cot, L, s = _curvature_arrays(V, F)
    # corner angle k = atan2(|u x v|, u . v); u.v = (L_{k+1}+L_{k+2}-L_k)/2
    dots = (L[:, [1, 2, 0]] + L[:, [2, 0, 1]] - L) / 2.0
    angles = np.arctan2(s[:, None], dots)
    defect = np.full(len(V), 2.0 * np.pi)
    for k in range(3):
        np.add.at(defect, F[:, k], -angles[:, k])
    # unreferenced vertices carry no curvature
    referenced = np.zeros(len(V), dtype=bool)
    referenced[F.reshape(-1)] = True
    defect[~referenced] = 0.0
    gaussian = np.where(A > 0, defect / np.where(A > 0, A, 1.0), 0.0)
    return CurvatureField(mean_curvature=H, gaussian=gaussian, vertex_area=A)


def euler_characteristic(mesh: TriMesh) -> int:
    referenced = np.unique(mesh.triangles.reshape(-1))
    return int(len(referenced) - len(mesh.edges) + mesh.triangle_count)


def energy_report(mesh: TriMesh, lam: float) -> EnergyReport:
    """Evaluate W, |Sigma|, W_lambda = W - lam*|Sigma|, the ratio W/|Sigma|,
    and the squared-second-fundamental-form integral 4W - 2(2 pi chi)."""
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    require_valid(mesh)
    W, area = _willmore_area(mesh.vertices, mesh.triangles)
    chi = euler_characteristic(mesh)
    return EnergyReport(
        willmore=W,
        area=area,
        w_lambda=W - lam * area,
        ratio=W / area,
        sq_second_ff=4.0 * W - 2.0 * (2.0 * np.pi * chi),
        lam=lam,
    )


def wlambda_gradient(mesh: TriMesh, lam: float) -> np.ndarray:
    """Gradient of W_lambda with respect to vertex positions, shape (V, 3).

    Matches central finite differences of ``energy_report(...).w_lambda``
    with step 1e-5 * (bbox diagonal) to relative error well under 1e-4.
    """
    require_valid(mesh)
    return _wlambda_gradient_arrays(mesh.vertices, mesh.triangles, lam)


def _wlambda_gradient_arrays(V: np.ndarray, F: np.ndarray, lam: float) -> np.ndarray:
    L, cot, s = _corner_quantities(V, F)
    corner, obtuse = _corner_areas(L, cot, s)
    A = _vertex_areas(F, corner, len(V))
    m = _scatter_laplacian(F, cot, V)
    H = m / (2.0 * A[:, None])
    h2 = np.einsum("ij,ij->i", H, H)

    grad = _scatter_laplacian(F, cot, H)  # position part: d|m|^2/(4A) via m

    # Coefficients of d(cot_k): the energy sees cot_k through the edge weight
    # of the opposite edge (a, b) = (k+1, k+2) and, on non-obtuse triangles,
    # through the Voronoi areas of a and b (term L_k cot_k / 8 each).
    q_cot = np.empty_like(cot)
    h2_sum = np.zeros(len(F))
    for k in range(3):
        a = F[:, (k + 1) % 3]
        b = F[:, (k + 2) % 3]
        edge = V[b] - V[a]
        q_cot[:, k] = 0.5 * np.einsum("ij,ij->i", H[a] - H[b], edge)
        q_cot[:, k] += np.where(obtuse, 0.0, -(h2[a] + h2[b]) * L[:, k] / 8.0)
        h2_sum += h2[F[:, k]]

    # Coefficients of d(L_k) (squared opposite-edge length), non-obtuse only.
    for k in range(3):
        a = F[:, (k + 1) % 3]
        b = F[:, (k + 2) % 3]
        qL = np.where(obtuse, 0.0, -(h2[a] + h2[b]) * cot[:, k] / 8.0)
        edge = V[b] - V[a]
        np.add.at(grad, b, (2.0 * qL)[:, None] * edge)
        np.add.at(grad, a, (-2.0 * qL)[:, None] * edge)

    # Coefficient of d(area_t): thirds areas on obtuse triangles, and the
    # -lam * total-area term everywhere.
    q_S = np.where(obtuse, -h2_sum / 3.0, 0.0) - lam

    # d(cot_k)/dx with u, v the edges leaving corner k.
    for k in range(3):
        vk = F[:, k]
        va = F[:, (k + 1) % 3]
        vb = F[:, (k + 2) % 3]
        u = V[va] - V[vk]
        v = V[vb] - V[vk]
        d = np.einsum("ij,ij->i", u, v)
        s3 = s**3
        du = v / s[:, None] - (d / s3)[:, None] * (L[:, [1, 2, 0]][:, k][:, None] * u - d[:, None] * v)
        dv = u / s[:, None] - (d / s3)[:, None] * (L[:, [2, 0, 1]][:, k][:, None] * v - d[:, None] * u)
        q = q_cot[:, k][:, None]
        np.add.at(grad, va, q * du)
        np.add.at(grad, vb, q * dv)
        np.add.at(grad, vk, -q * (du + dv))

    # d(area_t)/dx from the corner-0 parameterization.
    p0, p1, p2 = V[F[:, 0]], V[F[:, 1]], V[F[:, 2]]
    u0 = p1 - p0
    v0 = p2 - p0
    d0 = np.einsum("ij,ij->i", u0, v0)
    dS_du = (np.einsum("ij,ij->i", v0, v0)[:, None] * u0 - d0[:, None] * v0) / (2.0 * s[:, None])
    dS_dv = (np.einsum("ij,ij->i", u0, u0)[:, None] * v0 - d0[:, None] * u0) / (2.0 * s[:, None])
    qs = q_S[:, None]
    np.add.at(grad, F[:, 1], qs * dS_du)
    np.add.at(grad, F[:, 2], qs * dS_dv)
    np.add.at(grad, F[:, 0], -qs * (dS_du + dS_dv))

    return grad
