"""Implicit confinement regions: signed distance, closest-point projection,
and the analytic shell parameter / threshold bracket for each primitive.

Every primitive provides an exact signed distance (negative inside) and an
exact closest-point projection onto the closed region. The threshold bracket
reported by :func:`analyze` is [1/R^2, 1/eps^2] where R is the radius of an
enclosing ball and eps the radius of the largest thin spherical shell that
fits inside the closure.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Invalid domain specification."""


@dataclass(frozen=True)
class DomainAnalysis:
    epsilon_omega: float | None     # None means "unknown" (unbounded domains)
    lambda_lower: float
    lambda_upper: float             # math.inf when no shell radius is known
    enclosing_ball_radius: float    # math.inf for unbounded domains


def _as_point(x) -> np.ndarray:
    p = np.asarray(x, dtype=np.float64)
    if p.shape != (3,):
        raise DomainError(f"expected a 3D point, got shape {p.shape}")
    return p


def _unit(v) -> np.ndarray:
    v = _as_point(v)
    n = np.linalg.norm(v)
    if n == 0:
        raise DomainError("axis must be nonzero")
    return v / n


class Domain:
    """Base class; subclasses implement the scalar kernels."""

    bounded: bool = True

    def signed_distance(self, x) -> float:
        return float(self.signed_distance_many(np.asarray(x, dtype=np.float64).reshape(1, 3))[0])

    def project(self, x) -> np.ndarray:
        return self.project_many(np.asarray(x, dtype=np.float64).reshape(1, 3))[0]

    def signed_distance_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def project_many(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def analyze(self) -> DomainAnalysis:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Ball(Domain):
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in _as_point(self.center)))

    def signed_distance_many(self, pts):
        return np.linalg.norm(pts - np.array(self.center), axis=1) - self.radius

    def project_many(self, pts):
        c = np.array(self.center)
        d = pts - c
        r = np.linalg.norm(d, axis=1)
        out = pts.copy()
        outside = r > self.radius
        out[outside] = c + d[outside] * (self.radius / r[outside])[:, None]
        return out

    def analyze(self):
        return DomainAnalysis(
            epsilon_omega=self.radius,
            lambda_lower=1.0 / self.radius**2,
            lambda_upper=1.0 / self.radius**2,
            enclosing_ball_radius=self.radius,
        )

    def describe(self):
        return f"ball(center={self.center[0]},{self.center[1]},{self.center[2]}; r={self.radius})"


@dataclass(frozen=True)
class SphericalShell(Domain):
    center: tuple = (0.0, 0.0, 0.0)
    r_outer: float = 0.5
    r_inner: float = 0.4

    # projection tie-break for the shell center, which is equidistant from
    # every inner-boundary point
    _TIE_BREAK = np.array([1.0, 0.0, 0.0])

    def __post_init__(self):
        if not (0 < self.r_inner < self.r_outer):
            raise DomainError("shell requires 0 < r_inner < r_outer")
        object.__setattr__(self, "center", tuple(float(c) for c in _as_point(self.center)))

    def signed_distance_many(self, pts):
        r = np.linalg.norm(pts - np.array(self.center), axis=1)
        return np.maximum(r - self.r_outer, self.r_inner - r)

    def project_many(self, pts):
        c = np.array(self.center)
        d = pts - c
        r = np.linalg.norm(d, axis=1)
        out = pts.copy()
        at_center = r == 0
        if at_center.any():
            out[at_center] = c + self.r_inner * self._TIE_BREAK
        inner = (~at_center) & (r < self.r_inner)
        out[inner] = c + d[inner] * (self.r_inner / r[inner])[:, None]
        outer = r > self.r_outer
        out[outer] = c + d[outer] * (self.r_outer / r[outer])[:, None]
        return out

    def analyze(self):
        return DomainAnalysis(
            epsilon_omega=self.r_outer,
            lambda_lower=1.0 / self.r_outer**2,
            lambda_upper=1.0 / self.r_outer**2,
            enclosing_ball_radius=self.r_outer,
        )

    def describe(self):
        return (
            f"shell(center={self.center[0]},{self.center[1]},{self.center[2]}; "
            f"r_outer={self.r_outer}; r_inner={self.r_inner})"
        )


@dataclass(frozen=True)
class Slab(Domain):
    half_width: float = 1.0
    axis: tuple = (0.0, 0.0, 1.0)
    bounded = False

    def __post_init__(self):
        if self.half_width <= 0:
            raise DomainError("slab half width must be positive")
        object.__setattr__(self, "axis", tuple(float(c) for c in _unit(self.axis)))

    def signed_distance_many(self, pts):
        a = np.array(self.axis)
        return np.abs(pts @ a) - self.half_width

    def project_many(self, pts):
        a = np.array(self.axis)
        t = pts @ a
        clamped = np.clip(t, -self.half_width, self.half_width)
        return pts + (clamped - t)[:, None] * a

    def analyze(self):
        # A thin shell of radius up to half_width fits inside the slab, so
        # the threshold upper bound is finite even though eps itself is
        # reported unknown for unbounded domains.
        return DomainAnalysis(
            epsilon_omega=None,
            lambda_lower=0.0,
            lambda_upper=1.0 / self.half_width**2,
            enclosing_ball_radius=math.inf,
        )

    def describe(self):
        return f"slab(half_width={self.half_width}; axis={self.axis[0]},{self.axis[1]},{self.axis[2]})"


@dataclass(frozen=True)
class InfiniteCylinder(Domain):
    axis: tuple = (0.0, 0.0, 1.0)
    radius: float = 1.0
    bounded = False

    def __post_init__(self):
        if self.radius <= 0:
            raise DomainError("cylinder radius must be positive")
        object.__setattr__(self, "axis", tuple(float(c) for c in _unit(self.axis)))

    def _radial(self, pts):
        a = np.array(self.axis)
        axial = (pts @ a)[:, None] * a
        radial = pts - axial
        return axial, radial, np.linalg.norm(radial, axis=1)

    def signed_distance_many(self, pts):
        _, _, r = self._radial(pts)
        return r - self.radius

    def project_many(self, pts):
        axial, radial, r = self._radial(pts)
        out = pts.copy()
        outside = r > self.radius
        out[outside] = axial[outside] + radial[outside] * (self.radius / r[outside])[:, None]
        return out

    def analyze(self):
        return DomainAnalysis(
            epsilon_omega=None,
            lambda_lower=0.0,
            lambda_upper=1.0 / self.radius**2,
            enclosing_ball_radius=math.inf,
        )

    def describe(self):
        return f"cylinder(axis={self.axis[0]},{self.axis[1]},{self.axis[2]}; r={self.radius})"


def _ellipse_foot_point(s: float, z: float, a: float, c: float) -> tuple[float, float]:
    """Closest point on the ellipse (s/a)^2 + (z/c)^2 = 1, s >= 0, to (s, z)
    with s >= 0. Robust bisection on the standard distance parameterization."""
    # Work in the first quadrant; restore the z sign at the end.
    zs = 1.0 if z >= 0 else -1.0
    z = abs(z)
    if s < 1e-300 and z < 1e-300:
        # Degenerate query at the center: nearest point lies on the shorter axis.
        return (a, 0.0) if a <= c else (0.0, zs * c)
    # Parameterize candidates as (a cos t, c sin t), t in [0, pi/2]; the
    # foot point satisfies g(t) = (a^2 - c^2) sin t cos t - a s sin t + c z cos t = 0.
    def g(t: float) -> float:
        return (a * a - c * c) * math.sin(t) * math.cos(t) - a * s * math.sin(t) + c * z * math.cos(t)

    lo, hi = 0.0, math.pi / 2
    glo, ghi = g(lo), g(hi)
    if glo == 0.0:
        t = lo
    elif ghi == 0.0:
        t = hi
    elif glo * ghi > 0:
        # No interior root: nearest point is an axis endpoint.
        cand = [(a, 0.0), (0.0, c)]
        t = None
        best = min(cand, key=lambda p: (p[0] - s) ** 2 + (p[1] - z) ** 2)
        return best[0], zs * best[1]
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            if gm == 0.0:
                break
            if glo * gm < 0:
                hi, ghi = mid, gm
            else:
                lo, glo = mid, gm
        t = 0.5 * (lo + hi)
    return a * math.cos(t), zs * c * math.sin(t)


@dataclass(frozen=True)
class EllipsoidShell(Domain):
    """Region between the spheroid x^2/a^2 + y^2/a^2 + z^2/c^2 = 1 and its
    inner normal offset at depth ``delta``."""

    a: float = 0.45
    c: float = 0.5
    delta: float = 0.1
    center: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.a <= 0 or self.c <= 0:
            raise DomainError("ellipsoid semi-axes must be positive")
        if not (0 < self.delta < min(self.a, self.c)):
            raise DomainError("ellipsoid shell requires 0 < delta < min(a, c)")
        object.__setattr__(self, "center", tuple(float(x) for x in _as_point(self.center)))

    def _surface_distance(self, pts):
        """Signed distance to the spheroid surface (negative inside) and the
        foot points, exploiting rotational symmetry about z."""
        c0 = np.array(self.center)
        q = pts - c0
        s = np.sqrt(q[:, 0] ** 2 + q[:, 1] ** 2)
        feet = np.empty_like(q)
        dist = np.empty(len(q))
        for i in range(len(q)):
            fs, fz = _ellipse_foot_point(float(s[i]), float(q[i, 2]), self.a, self.c)
            if s[i] > 1e-300:
                ux, uy = q[i, 0] / s[i], q[i, 1] / s[i]
            else:
                ux, uy = 1.0, 0.0
            feet[i] = (fs * ux, fs * uy, fz)
            d = math.sqrt((s[i] - fs) ** 2 + (q[i, 2] - fz) ** 2)
            inside = (s[i] / self.a) ** 2 + (q[i, 2] / self.c) ** 2 <= 1.0
            dist[i] = -d if inside else d
        return dist, feet + c0

    def signed_distance_many(self, pts):
        d, _ = self._surface_distance(pts)
        return np.maximum(d, -d - self.delta)

    def project_many(self, pts):
        d, feet = self._surface_distance(pts)
        out = pts.copy()
        outside = d > 0
        out[outside] = feet[outside]
        too_deep = d < -self.delta
        if too_deep.any():
            # Inner offset surface: foot point on the spheroid pulled inward
            # by delta along the normal (valid while delta is below the reach).
            n = feet[too_deep] - pts[too_deep]
            norms = np.linalg.norm(n, axis=1)
            n = n / norms[:, None]
            out[too_deep] = feet[too_deep] - self.delta * n
        return out

    def analyze(self):
        return DomainAnalysis(
            epsilon_omega=self.delta / 2.0,
            lambda_lower=1.0 / max(self.a, self.c) ** 2,
            lambda_upper=4.0 / self.delta**2,
            enclosing_ball_radius=max(self.a, self.c),
        )

    def describe(self):
        return (
            f"ellipsoid_shell(a={self.a}; c={self.c}; delta={self.delta}; "
            f"center={self.center[0]},{self.center[1]},{self.center[2]})"
        )


@dataclass(frozen=True)
class UnionOfBalls(Domain):
    balls: tuple = ()

    def __post_init__(self):
        if not self.balls:
            raise DomainError("union of balls needs at least one ball")
        object.__setattr__(self, "balls", tuple(self.balls))
        for b in self.balls:
            if not isinstance(b, Ball):
                raise DomainError("union members must be Ball domains")

    def signed_distance_many(self, pts):
        return np.min(np.stack([b.signed_distance_many(pts) for b in self.balls]), axis=0)

    def project_many(self, pts):
        dists = np.stack([b.signed_distance_many(pts) for b in self.balls])
        nearest = np.argmin(dists, axis=0)
        out = pts.copy()
        for i, b in enumerate(self.balls):
            sel = nearest == i
            if sel.any():
                out[sel] = b.project_many(pts[sel])
        return out

    def analyze(self):
        # The largest thin shell fits just inside the largest member ball.
        eps = max(b.radius for b in self.balls)
        return DomainAnalysis(
            epsilon_omega=eps,
            lambda_lower=1.0 / _enclosing_ball_radius(self.balls) ** 2,
            lambda_upper=1.0 / eps**2,
            enclosing_ball_radius=_enclosing_ball_radius(self.balls),
        )

    def describe(self):
        inner = " | ".join(
            f"{b.center[0]},{b.center[1]},{b.center[2]},{b.radius}" for b in self.balls
        )
        return f"union_balls(balls={inner})"


def _enclosing_ball_radius(balls) -> float:
    """Radius of a small ball enclosing all member balls (exact for 1-2 balls,
    iterative refinement otherwise)."""
    if len(balls) == 1:
        return balls[0].radius
    centers = np.array([b.center for b in balls])
    radii = np.array([b.radius for b in balls])
    if len(balls) == 2:
        d = float(np.linalg.norm(centers[0] - centers[1]))
        if d + radii[1] <= radii[0]:
            return float(radii[0])
        if d + radii[0] <= radii[1]:
            return float(radii[1])
        return float((d + radii[0] + radii[1]) / 2.0)
    # Iterative: move the candidate center toward the farthest ball surface.
    c = centers.mean(axis=0)
    for step in range(1, 20000):
        reach = np.linalg.norm(centers - c, axis=1) + radii
        i = int(np.argmax(reach))
        direction = centers[i] - c
        n = np.linalg.norm(direction)
        if n == 0:
            break
        c = c + direction / n * (reach[i] * 1.0 / (step + 1.0)) * 0.5
    return float((np.linalg.norm(centers - c, axis=1) + radii).max())


@dataclass(frozen=True)
class Rescale(Domain):
    """alpha * Omega (about the origin): distances scale by alpha."""

    base: Domain = None
    alpha: float = 1.0

    def __post_init__(self):
        if self.base is None:
            raise DomainError("Rescale needs a base domain")
        if self.alpha <= 0:
            raise DomainError("rescale factor must be positive")
        object.__setattr__(self, "bounded", self.base.bounded)

    def signed_distance_many(self, pts):
        return self.alpha * self.base.signed_distance_many(pts / self.alpha)

    def project_many(self, pts):
        return self.alpha * self.base.project_many(pts / self.alpha)

    def analyze(self):
        inner = self.base.analyze()
        eps = None if inner.epsilon_omega is None else inner.epsilon_omega * self.alpha
        return DomainAnalysis(
            epsilon_omega=eps,
            lambda_lower=inner.lambda_lower / self.alpha**2,
            lambda_upper=inner.lambda_upper / self.alpha**2,
            enclosing_ball_radius=inner.enclosing_ball_radius * self.alpha,
        )

    def describe(self):
        return f"rescale(alpha={self.alpha}; base={self.base.describe()})"


@dataclass(frozen=True)
class Translate(Domain):
    base: Domain = None
    offset: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.base is None:
            raise DomainError("Translate needs a base domain")
        object.__setattr__(self, "offset", tuple(float(c) for c in _as_point(self.offset)))
        object.__setattr__(self, "bounded", self.base.bounded)

    def signed_distance_many(self, pts):
        return self.base.signed_distance_many(pts - np.array(self.offset))

    def project_many(self, pts):
        return self.base.project_many(pts - np.array(self.offset)) + np.array(self.offset)

    def analyze(self):
        return self.base.analyze()

    def describe(self):
        o = self.offset
        return f"translate(offset={o[0]},{o[1]},{o[2]}; base={self.base.describe()})"


# Module-level functional API mirroring the operation names.

def signed_distance(domain: Domain, x) -> float:
    return domain.signed_distance(x)


def project(domain: Domain, x) -> np.ndarray:
    return domain.project(x)


def analyze(domain: Domain) -> DomainAnalysis:
    return domain.analyze()


# ---------------------------------------------------------------------------
# Config-syntax parsing: name(key=value; key=value); triples are
# comma-separated, lists of triples are separated by '|'.
# ---------------------------------------------------------------------------

_SPEC_RE = re.compile(r"^\s*([a-zA-Z_]+)\s*\((.*)\)\s*$", re.DOTALL)


def _split_top_level(body: str, sep: str) -> list[str]:
    """Split on ``sep`` outside parentheses (nested domain specs keep theirs)."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == sep and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    parts.append(body[start:])
    return parts


def _parse_kwargs(body: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in _split_top_level(body, ";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise DomainError(f"expected key=value, got {part!r}")
        key, val = part.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _triple(text: str) -> tuple[float, float, float]:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 3:
        raise DomainError(f"expected three comma-separated numbers, got {text!r}")
    return tuple(vals)


def parse_domain(text: str) -> Domain:
    """Parse the config syntax, e.g.
    ``shell(center=0,0,0; r_outer=0.5; r_inner=0.4)``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise DomainError(f"cannot parse domain spec {text!r}")
    name, body = m.group(1).lower(), m.group(2)
    kw = _parse_kwargs(body)
    try:
        if name == "ball":
            return Ball(center=_triple(kw.get("center", "0,0,0")), radius=float(kw["r"]))
        if name == "shell":
            return SphericalShell(
                center=_triple(kw.get("center", "0,0,0")),
                r_outer=float(kw["r_outer"]),
                r_inner=float(kw["r_inner"]),
            )
        if name == "slab":
            return Slab(
                half_width=float(kw["half_width"]),
                axis=_triple(kw.get("axis", "0,0,1")),
            )
        if name == "cylinder":
            return InfiniteCylinder(
                axis=_triple(kw.get("axis", "0,0,1")), radius=float(kw["r"])
            )
        if name == "ellipsoid_shell":
            return EllipsoidShell(
                a=float(kw["a"]),
                c=float(kw["c"]),
                delta=float(kw["delta"]),
                center=_triple(kw.get("center", "0,0,0")),
            )
        if name == "union_balls":
            balls = []
            for chunk in kw["balls"].split("|"):
                vals = [float(v) for v in chunk.split(",")]
                if len(vals) != 4:
                    raise DomainError(
                        f"union_balls member needs cx,cy,cz,r; got {chunk!r}"
                    )
                balls.append(Ball(center=tuple(vals[:3]), radius=vals[3]))
            return UnionOfBalls(balls=tuple(balls))
        if name == "rescale":
            return Rescale(base=parse_domain(kw["base"]), alpha=float(kw["alpha"]))
        if name == "translate":
            return Translate(base=parse_domain(kw["base"]), offset=_triple(kw["offset"]))
    except KeyError as exc:
        raise DomainError(f"domain {name!r} is missing parameter {exc}") from exc
    raise DomainError(f"unknown domain primitive {name!r}")
