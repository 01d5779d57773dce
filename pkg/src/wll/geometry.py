"""Oriented closed contours in a chart of the plane or the sphere.

A contour is an ordered tuple of parametric pieces, each mapping ``u in [0, 1]``
to the complex chart coordinate and carrying an exact tangent.  Pieces are
concatenated uniformly: piece ``j`` of ``m`` covers ``t in [j/m, (j+1)/m]``,
so the global tangent is ``m`` times the piece tangent.

Surfaces carry the area density used for areas and, on the sphere, for the
propagator normalisation.  Sphere contours live in the chart around the
south pole (``z = 0``); the north pole is the chart point at infinity.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ChartOverflow,
    NonSimple,
    NotClosed,
    OrientationError,
    PointOnContour,
    SingularityCrossed,
    Unsupported,
)

#: Width of the band around a contour treated as "on the contour".
ON_CONTOUR_TOL = 1e-9
CHART_RADIUS_MAX = 1e6


# ---------------------------------------------------------------------------
# Pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Arc:
    """Circular arc ``center + radius * exp(i theta)``, theta from theta0 to theta1."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, u):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(u, dtype=float)
        return self.center + self.radius * np.exp(1j * th)

    def tangent(self, u):
        th = self.theta0 + (self.theta1 - self.theta0) * np.asarray(u, dtype=float)
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)


@dataclass(frozen=True)
class Bezier:
    """Polynomial piece in Bernstein form; two control points give a segment."""

    control: tuple[complex, ...]

    def point(self, u):
        return _bernstein(np.asarray(self.control, dtype=complex), np.asarray(u, dtype=float))

    def tangent(self, u):
        c = np.asarray(self.control, dtype=complex)
        deg = len(c) - 1
        return deg * _bernstein(np.diff(c), np.asarray(u, dtype=float))


def _bernstein(ctrl, u):
    deg = len(ctrl) - 1
    out = np.zeros(np.shape(u), dtype=complex)
    for k, ck in enumerate(ctrl):
        out = out + math.comb(deg, k) * u**k * (1.0 - u) ** (deg - k) * ck
    return out


@dataclass(frozen=True)
class FourierLoop:
    """Closed loop ``sum_k a_k exp(2 pi i k u)``; ``terms`` holds ``(k, a_k)`` pairs."""

    terms: tuple[tuple[int, complex], ...]

    def point(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape, dtype=complex)
        for k, a in self.terms:
            out = out + a * np.exp(2j * np.pi * k * u)
        return out

    def tangent(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape, dtype=complex)
        for k, a in self.terms:
            if k:
                out = out + 2j * np.pi * k * a * np.exp(2j * np.pi * k * u)
        return out


@dataclass(frozen=True)
class Affine:
    """``scale * base + shift`` with complex ``scale`` (rotation and dilation)."""

    base: object
    scale: complex = 1.0
    shift: complex = 0.0

    def point(self, u):
        return self.scale * self.base.point(u) + self.shift

    def tangent(self, u):
        return self.scale * self.base.tangent(u)


@dataclass(frozen=True)
class Reversed:
    base: object

    def point(self, u):
        return self.base.point(1.0 - np.asarray(u, dtype=float))

    def tangent(self, u):
        return -self.base.tangent(1.0 - np.asarray(u, dtype=float))


@dataclass(frozen=True)
class Deformed:
    """Piece pushed along a vector field: ``p + s * F(p)``."""

    base: object
    field: object
    s: float

    def point(self, u):
        p = self.base.point(u)
        return p + self.s * self.field(p)

    def tangent(self, u):
        p = self.base.point(u)
        dp = self.base.tangent(u)
        fx, fy = self.field.jacobian(p)
        return dp + self.s * (fx * dp.real + fy * dp.imag)


# ---------------------------------------------------------------------------
# Vector fields used by deformations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialField:
    """``F(z) = z - center``; pushes a circle about ``center`` outward."""

    center: complex = 0.0

    def __call__(self, z):
        return np.asarray(z) - self.center

    def jacobian(self, z):
        z = np.asarray(z)
        return np.ones(z.shape, dtype=complex), np.full(z.shape, 1j)


@dataclass(frozen=True)
class FourierField:
    """Smooth field ``sum_j c_j exp(i (kx_j x + ky_j y))`` with exact partials."""

    coeffs: tuple[complex, ...]
    wavevectors: tuple[tuple[float, float], ...]

    @classmethod
    def random(cls, rng: np.random.Generator, modes: int = 4, amplitude: float = 1.0,
               max_wavenumber: float = 2.0) -> "FourierField":
        c = amplitude * (rng.normal(size=modes) + 1j * rng.normal(size=modes)) / math.sqrt(2 * modes)
        k = rng.uniform(-max_wavenumber, max_wavenumber, size=(modes, 2))
        return cls(tuple(complex(x) for x in c), tuple((float(a), float(b)) for a, b in k))

    def _phases(self, z):
        z = np.asarray(z, dtype=complex)
        k = np.asarray(self.wavevectors)
        return np.exp(1j * (np.multiply.outer(z.real, k[:, 0]) + np.multiply.outer(z.imag, k[:, 1])))

    def __call__(self, z):
        return self._phases(z) @ np.asarray(self.coeffs)

    def jacobian(self, z):
        e = self._phases(z) * np.asarray(self.coeffs)
        k = np.asarray(self.wavevectors)
        return 1j * (e @ k[:, 0]), 1j * (e @ k[:, 1])


@dataclass(frozen=True)
class CallableField:
    """Wraps a plain callable; partials by central differences unless given."""

    fn: Callable
    jac: Callable | None = None
    step: float = 1e-6

    def __call__(self, z):
        return np.asarray(self.fn(np.asarray(z, dtype=complex)), dtype=complex)

    def jacobian(self, z):
        if self.jac is not None:
            return self.jac(z)
        z = np.asarray(z, dtype=complex)
        h = self.step
        fx = (self(z + h) - self(z - h)) / (2 * h)
        fy = (self(z + 1j * h) - self(z - 1j * h)) / (2 * h)
        return fx, fy


# ---------------------------------------------------------------------------
# Gauss-Legendre panels
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes/weights on [-1, 1] and the cumulative integration matrix.

    ``cumulative[i, j]`` integrates the j-th Lagrange basis polynomial from -1
    to node i, so ``cumulative @ f`` is the running integral at the nodes.
    """
    from numpy.polynomial import legendre as L

    x, w = L.leggauss(order)
    vander = L.legvander(x, order - 1)
    integrated = np.empty_like(vander)
    for k in range(order):
        e = np.zeros(order)
        e[k] = 1.0
        integrated[:, k] = L.legval(x, L.legint(e, lbnd=-1.0))
    cumulative = integrated @ np.linalg.inv(vander)
    x.setflags(write=False)
    w.setflags(write=False)
    cumulative.setflags(write=False)
    return x, w, cumulative


@dataclass(frozen=True)
class Nodes:
    """Composite Gauss-Legendre discretisation of a contour.

    Arrays have shape ``(panels, order)``; ``weights`` are global ``dt`` weights.
    """

    t: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    panel_width: float
    cumulative: np.ndarray


# ---------------------------------------------------------------------------
# Contour
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Contour:
    """Piecewise-smooth parametric curve, closed unless built with ``closed=False``.

    Only counterclockwise orientation is accepted when a :class:`Region` is
    formed; a reversed contour is still a valid object for sign checks.
    """

    pieces: tuple
    closure_tolerance: float = 1e-9
    closed: bool = True
    _cache: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("contour needs at least one piece")
        object.__setattr__(self, "pieces", tuple(self.pieces))
        tol = self.closure_tolerance
        for a, b in zip(self.pieces[:-1], self.pieces[1:]):
            gap = abs(complex(a.point(1.0)) - complex(b.point(0.0)))
            if gap > tol:
                raise NotClosed(f"consecutive pieces are {gap:.3g} apart")
        if self.closed:
            gap = abs(complex(self.pieces[-1].point(1.0)) - complex(self.pieces[0].point(0.0)))
            if gap > tol:
                raise NotClosed(f"end point misses start point by {gap:.3g}")
        grid = np.linspace(0.0, 1.0, 33)
        for j, p in enumerate(self.pieces):
            if np.min(np.abs(p.tangent(grid))) <= 0.0:
                raise ValueError(f"piece {j} has a vanishing tangent")

    @property
    def m(self) -> int:
        return len(self.pieces)

    # -- evaluation ---------------------------------------------------------

    def sample(self, t):
        """Point and global tangent at parameter(s) ``t``.

        At a junction between pieces the incoming piece is used (left limit);
        ``t = 0`` on a closed contour therefore evaluates the last piece at its end.
        """
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        s = t * self.m
        j = np.floor(s).astype(int)
        u = s - j
        left = u == 0.0
        if self.closed:
            j = np.where(left, j - 1, j) % self.m
        else:
            j = np.where(left & (j > 0), j - 1, np.minimum(j, self.m - 1))
            left = left & (t > 0)
        u = np.where(left, 1.0, u)
        pts = np.empty(t.shape, dtype=complex)
        tan = np.empty(t.shape, dtype=complex)
        for k, piece in enumerate(self.pieces):
            sel = j == k
            if np.any(sel):
                pts[sel] = piece.point(u[sel])
                tan[sel] = self.m * piece.tangent(u[sel])
        if scalar:
            return complex(pts[0]), complex(tan[0])
        return pts, tan

    def nodes(self, panels: int = 64, order: int = 16) -> Nodes:
        """Gauss-Legendre nodes with ``panels`` total panels (rounded up to a multiple of m)."""
        per_piece = max(1, -(-panels // self.m))
        key = ("nodes", per_piece, order)
        if key not in self._cache:
            x, w, cum = gauss_legendre(order)
            total = per_piece * self.m
            width = 1.0 / total
            starts = np.arange(total) * width
            t = starts[:, None] + 0.5 * width * (x[None, :] + 1.0)
            pts = np.empty(t.shape, dtype=complex)
            tan = np.empty(t.shape, dtype=complex)
            for k, piece in enumerate(self.pieces):
                rows = slice(k * per_piece, (k + 1) * per_piece)
                u = t[rows] * self.m - k
                pts[rows] = piece.point(u)
                tan[rows] = self.m * piece.tangent(u)
            weights = np.broadcast_to(0.5 * width * w, t.shape)
            self._cache[key] = Nodes(t, weights, pts, tan, width, cum)
        return self._cache[key]

    def polyline(self, per_piece: int = 512) -> np.ndarray:
        """Vertices of an inscribed polygon (closed contours: last vertex not repeated)."""
        key = ("poly", per_piece)
        if key not in self._cache:
            u = np.linspace(0.0, 1.0, per_piece, endpoint=False)
            verts = np.concatenate([p.point(u) for p in self.pieces])
            if not self.closed:
                verts = np.append(verts, complex(self.pieces[-1].point(1.0)))
            self._cache[key] = verts
        return self._cache[key]

    # -- derived geometry ---------------------------------------------------

    def chart_signed_area(self) -> float:
        """(1/2) contour integral of ``x dy - y dx`` in the chart coordinate."""
        nd = self.nodes(64)
        return 0.5 * float(np.sum(nd.weights * (np.conj(nd.points) * nd.tangents).imag))

    @property
    def orientation(self) -> int:
        return 1 if self.chart_signed_area() > 0 else -1

    def length(self) -> float:
        nd = self.nodes(64)
        return float(np.sum(nd.weights * np.abs(nd.tangents)))

    def bbox(self) -> tuple[float, float, float, float]:
        v = self.polyline(1024)
        return float(v.real.min()), float(v.real.max()), float(v.imag.min()), float(v.imag.max())

    def diameter(self) -> float:
        x0, x1, y0, y1 = self.bbox()
        return math.hypot(x1 - x0, y1 - y0)

    def distance(self, z) -> np.ndarray:
        """Euclidean distance from each point to the curve (refined near the curve)."""
        from scipy.spatial import cKDTree

        z = np.atleast_1d(np.asarray(z, dtype=complex))
        per_piece = 2048
        key = ("kdtree", per_piece)
        if key not in self._cache:
            u = np.linspace(0.0, 1.0, per_piece + 1)
            t = (np.arange(self.m)[:, None] + u[None, :]).ravel() / self.m
            pts = np.concatenate([p.point(u) for p in self.pieces])
            tree = cKDTree(np.column_stack([pts.real, pts.imag]))
            spacing = float(np.max(np.abs(np.diff(pts))))
            self._cache[key] = (tree, t, spacing)
        tree, tgrid, spacing = self._cache[key]
        d, idx = tree.query(np.column_stack([z.real, z.imag]))
        near = np.flatnonzero(d < 2.0 * spacing)
        for i in near:
            t0 = tgrid[idx[i]]
            dt = 2.0 / (per_piece * self.m)
            lo = t0 - dt if self.closed else max(0.0, t0 - dt)
            hi = t0 + dt if self.closed else min(1.0, t0 + dt)

            def f(t, zi=z[i]):
                return abs(self._point_wrapped(t) - zi)

            res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-14})
            d[i] = min(d[i], float(res.fun))
        return d

    def _point_wrapped(self, t: float) -> complex:
        if self.closed:
            t = t % 1.0
        t = min(max(t, 0.0), 1.0)
        s = t * self.m
        j = min(int(s), self.m - 1)
        return complex(self.pieces[j].point(s - j))

    # -- transforms ---------------------------------------------------------

    def reversed(self) -> "Contour":
        return Contour(tuple(Reversed(p) for p in reversed(self.pieces)),
                       self.closure_tolerance, self.closed)

    def transformed(self, scale: complex = 1.0, shift: complex = 0.0) -> "Contour":
        return Contour(tuple(Affine(p, scale, shift) for p in self.pieces),
                       self.closure_tolerance * max(1.0, abs(scale)), self.closed)

    def translated(self, shift: complex) -> "Contour":
        return self.transformed(1.0, shift)

    def dilated(self, factor: float, about: complex = 0.0) -> "Contour":
        return self.transformed(factor, about * (1 - factor))


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------


def circle(center: complex = 0.0, radius: float = 1.0, clockwise: bool = False) -> Contour:
    sweep = -2 * math.pi if clockwise else 2 * math.pi
    return Contour((Arc(complex(center), float(radius), 0.0, sweep),))


def ellipse(a: float, b: float, center: complex = 0.0) -> Contour:
    """Axis-aligned ellipse ``x = a cos, y = b sin`` as a two-mode Fourier loop."""
    return fourier({0: center, 1: (a + b) / 2, -1: (a - b) / 2})


def fourier(coeffs: dict[int, complex]) -> Contour:
    terms = tuple((int(k), complex(v)) for k, v in sorted(coeffs.items()) if v != 0)
    return Contour((FourierLoop(terms),))


def perturbed_circle(amplitudes: dict[int, complex], radius: float = 1.0,
                     center: complex = 0.0) -> Contour:
    """Circle plus extra Fourier modes ``radius * sum_k eps_k exp(2 pi i k t)``."""
    coeffs = {0: center, 1: radius}
    for k, eps in amplitudes.items():
        coeffs[k] = coeffs.get(k, 0) + radius * eps
    return fourier(coeffs)


def polygon(vertices: Sequence[complex], corner_rounding: float = 0.0) -> Contour:
    """Closed polygon; with ``corner_rounding > 0`` every corner is filleted by a
    tangent arc of that radius, giving a C1 curve."""
    v = [complex(x) for x in vertices]
    n = len(v)
    if n < 3:
        raise ValueError("polygon needs at least three vertices")
    if corner_rounding <= 0:
        return Contour(tuple(Bezier((v[i], v[(i + 1) % n])) for i in range(n)))
    r = float(corner_rounding)
    fillets = []
    for i in range(n):
        prev, cur, nxt = v[i - 1], v[i], v[(i + 1) % n]
        u_in = (cur - prev) / abs(cur - prev)
        u_out = (nxt - cur) / abs(nxt - cur)
        turn = math.atan2((u_out / u_in).imag, (u_out / u_in).real)
        if abs(turn) < 1e-12:
            fillets.append((cur, cur, None))
            continue
        d = r * math.tan(abs(turn) / 2)
        if d > 0.5 * min(abs(cur - prev), abs(nxt - cur)) + 1e-12:
            raise ValueError("corner_rounding too large for the polygon edges")
        t1 = cur - d * u_in
        t2 = cur + d * u_out
        normal = 1j * u_in if turn > 0 else -1j * u_in
        c = t1 + r * normal
        a0 = math.atan2((t1 - c).imag, (t1 - c).real)
        fillets.append((t1, t2, Arc(c, r, a0, a0 + turn)))
    pieces = []
    for i in range(n):
        t1, t2, arc = fillets[i]
        if arc is not None:
            pieces.append(arc)
        nxt_start = fillets[(i + 1) % n][0]
        if abs(nxt_start - t2) > 1e-12:
            pieces.append(Bezier((t2, nxt_start)))
    return Contour(tuple(pieces), closure_tolerance=1e-9)


def rounded_square(side: float = 1.0, rounding: float = 0.1, center: complex = 0.0) -> Contour:
    h = side / 2
    verts = [center + complex(-h, -h), center + complex(h, -h),
             center + complex(h, h), center + complex(-h, h)]
    return polygon(verts, rounding)


def open_path(pieces: Sequence) -> Contour:
    """Non-closed curve, used for endpoint-preserving homotopy checks."""
    return Contour(tuple(pieces), closed=False)


# ---------------------------------------------------------------------------
# Surfaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Plane:
    """The standard area form on R^2."""

    def density(self, z):
        return np.ones(np.shape(z))


@dataclass(frozen=True)
class DensityPlane:
    """R^2 with area density equal to 1 outside ``|z| > support_radius``."""

    density_fn: Callable
    support_radius: float
    expr: str | None = None

    def __post_init__(self):
        rng = np.random.default_rng(0)
        r = self.support_radius * (1.0 + rng.exponential(1.0, 256))
        th = rng.uniform(0, 2 * np.pi, 256)
        outside = r * np.exp(1j * th)
        if not np.allclose(self.density(outside), 1.0, atol=1e-12):
            raise ValueError("density must equal 1 outside the declared support")
        inside = self.support_radius * np.sqrt(rng.uniform(0, 1, 1024)) * np.exp(
            1j * rng.uniform(0, 2 * np.pi, 1024))
        if np.any(self.density(inside) <= 0):
            raise ValueError("density must be positive")

    def density(self, z):
        z = np.asarray(z, dtype=complex)
        return np.broadcast_to(np.asarray(self.density_fn(z.real, z.imag), dtype=float), z.shape)

    @classmethod
    def from_expr(cls, expr: str, support_radius: float = 10.0) -> "DensityPlane":
        """Density given as an expression in ``x`` and ``y`` (parsed with sympy)."""
        import sympy

        x, y = sympy.symbols("x y", real=True)
        fn = sympy.lambdify((x, y), sympy.sympify(expr, locals={"x": x, "y": y}), "numpy")
        return cls(fn, float(support_radius), expr)


@dataclass(frozen=True)
class RoundSphere:
    """Round sphere of chart radius ``radius`` scaled to ``total_area``.

    Chart density ``4 c / (1 + |z/radius|^2)^2`` with ``c = total_area / (4 pi radius^2)``.
    """

    total_area: float = 4 * math.pi
    radius: float = 1.0
    chart_radius_max: float = CHART_RADIUS_MAX

    def __post_init__(self):
        if not self.total_area > 0:
            raise ValueError("total_area must be positive")
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    @property
    def scale(self) -> float:
        return self.total_area / (4 * math.pi * self.radius**2)

    def density(self, z):
        z = np.asarray(z, dtype=complex)
        return 4 * self.scale / (1 + np.abs(z / self.radius) ** 2) ** 2

    def check_chart(self, z) -> None:
        if np.any(np.abs(z) > self.chart_radius_max):
            raise ChartOverflow(f"|z| exceeds chart bound {self.chart_radius_max:g}")

    def sample_points(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Chart coordinates of points distributed by the normalised area form."""
        v = rng.normal(size=(size, 3))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return self.radius * (v[:, 0] + 1j * v[:, 1]) / (1.0 - v[:, 2])

    def cap_area(self, a: float) -> float:
        """Area of the chart disk ``|z| < a``."""
        q = (a / self.radius) ** 2
        return self.total_area * q / (1 + q)


Surface = Plane | DensityPlane | RoundSphere


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def signed_area(c: Contour, s: Surface = Plane()) -> float:
    """Area enclosed by ``c`` weighted by the surface density.

    On the plane the sign follows the orientation.  On the sphere a clockwise
    chart contour bounds the region containing the chart's point at infinity,
    so ``signed_area(c) + signed_area(c.reversed()) == total_area``.
    """
    if not c.closed:
        raise NotClosed("area needs a closed contour")
    nd = c.nodes(128)
    xdy_ydx = (np.conj(nd.points) * nd.tangents).imag
    if isinstance(s, Plane):
        return 0.5 * float(np.sum(nd.weights * xdy_ydx))
    if isinstance(s, RoundSphere):
        s.check_chart(nd.points)
        form = 2 * s.scale * xdy_ydx / (1 + np.abs(nd.points / s.radius) ** 2)
        val = float(np.sum(nd.weights * form))
        return val if val >= 0 else s.total_area + val
    if isinstance(s, DensityPlane):
        # Green's theorem with Phi(x, y) = int_{x_ref}^{x} density(s, y) ds.
        x_ref = c.bbox()[0] - 1.0
        x, w, _ = gauss_legendre(32)
        px, py = nd.points.real, nd.points.imag
        spans = px - x_ref
        panels = int(max(1, math.ceil(np.max(spans) / 0.25)))
        phi = np.zeros_like(px)
        for k in range(panels):
            a = x_ref + spans * k / panels
            b = x_ref + spans * (k + 1) / panels
            xs = 0.5 * (a + b)[..., None] + 0.5 * (b - a)[..., None] * x
            vals = s.density(xs + 1j * py[..., None])
            phi += 0.5 * (b - a) * (vals @ w)
        return float(np.sum(nd.weights * phi * nd.tangents.imag))
    raise Unsupported(f"unknown surface {s!r}")


def winding_number(c: Contour, z: complex, tol: float = ON_CONTOUR_TOL) -> int:
    """Index of ``c`` about ``z``; +1 for points inside a counterclockwise contour.

    Equals ``-chi`` for the order-one iterated Cauchy integral.
    """
    if not c.closed:
        raise NotClosed("winding number needs a closed contour")
    d = float(c.distance(z)[0])
    if d <= tol:
        raise PointOnContour(f"point {z} lies within {tol:g} of the contour")
    per_piece = 256
    prev = None
    while True:
        v = c.polyline(per_piece) - z
        ang = np.angle(np.roll(v, -1) / v)
        w = int(round(float(np.sum(ang)) / (2 * math.pi)))
        # chord sagitta must fall well below the distance for the polygon to agree
        chord = float(np.max(np.abs(np.diff(np.append(v, v[0])))))
        if (prev is not None and w == prev and chord**2 < d) or per_piece >= 2**20 // c.m:
            return w
        prev = w
        per_piece *= 4


def winding_numbers(c: Contour, zs, per_piece: int = 256, chunk: int = 4096) -> np.ndarray:
    """Vectorised winding numbers for many points (refining points near the curve)."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    verts = c.polyline(per_piece)
    nxt = np.roll(verts, -1)
    out = np.empty(zs.shape, dtype=int)
    for lo in range(0, zs.size, chunk):
        z = zs[lo:lo + chunk, None]
        ang = np.angle((nxt[None, :] - z) / (verts[None, :] - z))
        out[lo:lo + chunk] = np.rint(ang.sum(axis=1) / (2 * math.pi)).astype(int)
    spacing = float(np.max(np.abs(nxt - verts)))
    d = c.distance(zs)
    for i in np.flatnonzero(d < 4 * spacing):
        out[i] = winding_number(c, complex(zs[i]))
    return out


def contains(c: Contour, zs, band: float = ON_CONTOUR_TOL) -> np.ndarray:
    """Point-in-region test for a counterclockwise contour; points within ``band``
    of the curve count as outside."""
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    d = c.distance(zs)
    inside = np.zeros(zs.shape, dtype=bool)
    ok = d > band
    inside[ok] = winding_numbers(c, zs[ok]) > 0
    return inside


def sample(c: Contour, t):
    """Point and tangent of ``c`` at global parameter ``t``."""
    return c.sample(t)


def deform(c: Contour, fld, s: float, avoid: Sequence[complex] = (),
           exclusion: float = 0.0, steps: int = 16) -> Contour:
    """Contour ``t -> gamma(t) + s * field(gamma(t))``.

    Every intermediate curve of the homotopy (``steps`` evenly spaced values of
    the deformation parameter) must stay more than ``exclusion`` away from each
    point in ``avoid``.
    """
    if avoid:
        pts = np.asarray(avoid, dtype=complex)
        base = c.polyline(256)
        dir_ = fld(base)
        for k in range(1, steps + 1):
            curve = base + (s * k / steps) * dir_
            dmin = np.min(np.abs(curve[:, None] - pts[None, :]))
            if dmin <= exclusion:
                raise SingularityCrossed(
                    f"deformation passes within {dmin:.3g} of a registered point")
    deformed = Contour(tuple(Deformed(p, fld, float(s)) for p in c.pieces),
                       c.closure_tolerance, c.closed)
    if avoid:
        dmin = float(np.min(deformed.distance(np.asarray(avoid, dtype=complex))))
        if dmin <= exclusion:
            raise SingularityCrossed(f"deformed contour is {dmin:.3g} from a registered point")
    return deformed


def check_simple(c: Contour, strictness: str = "coarse") -> None:
    """Raise NonSimple if the inscribed polygon self-intersects.

    ``strictness`` is ``"off"``, ``"coarse"`` (64 vertices per piece) or
    ``"fine"`` (512 per piece).
    """
    if strictness == "off":
        return
    per_piece = {"coarse": 64, "fine": 512}[strictness]
    v = c.polyline(per_piece)
    a, b = v, np.roll(v, -1)
    n = len(v)

    def cross(p, q):
        # collinear neighbours give rounding-level values of either sign: treat as 0
        x = (np.conj(p) * q).imag
        return np.where(np.abs(x) > 1e-12 * np.abs(p) * np.abs(q), x, 0.0)

    d1 = b - a
    rel_a = a[None, :] - a[:, None]
    rel_b = b[None, :] - a[:, None]
    s1 = np.sign(cross(d1[:, None], rel_a))
    s2 = np.sign(cross(d1[:, None], rel_b))
    straddle = (s1 * s2) < 0
    hit = straddle & straddle.T
    idx = np.arange(n)
    gap = np.abs(idx[:, None] - idx[None, :])
    hit &= (gap > 1) & (gap < n - 1)
    if np.any(hit):
        i, j = np.argwhere(hit)[0]
        raise NonSimple(f"segments {i} and {j} of the contour cross")


@dataclass(frozen=True)
class Region:
    boundary: Contour
    area: float


def region(c: Contour, s: Surface = Plane()) -> Region:
    if c.orientation < 0:
        raise OrientationError("region boundary must be counterclockwise")
    return Region(c, signed_area(c, s))


# ---------------------------------------------------------------------------
# JSON description files
# ---------------------------------------------------------------------------


def contour_from_spec(spec: dict) -> Contour:
    """Build a contour from its JSON description.

    ``fourier`` coefficient lists of odd length ``2K+1`` hold modes ``-K..K``;
    an explicit ``"modes"`` list overrides that indexing.
    """
    kind = spec.get("type")
    if kind == "circle":
        cx, cy = spec.get("center", [0.0, 0.0])
        return circle(complex(cx, cy), float(spec["radius"]))
    if kind == "ellipse":
        cx, cy = spec.get("center", [0.0, 0.0])
        return ellipse(float(spec["a"]), float(spec["b"]), complex(cx, cy))
    if kind == "polygon":
        verts = [complex(x, y) for x, y in spec["vertices"]]
        return polygon(verts, float(spec.get("corner_rounding", 0.0)))
    if kind == "fourier":
        re = list(spec["coeffs_re"])
        im = list(spec.get("coeffs_im", [0.0] * len(re)))
        if len(im) != len(re):
            raise ValueError("coeffs_re and coeffs_im differ in length")
        if "modes" in spec:
            modes = [int(k) for k in spec["modes"]]
        else:
            if len(re) % 2 == 0:
                raise ValueError("fourier coefficients need odd length (modes -K..K)")
            half = len(re) // 2
            modes = list(range(-half, half + 1))
        return fourier({k: complex(a, b) for k, a, b in zip(modes, re, im)})
    raise ValueError(f"unknown contour type {kind!r}")


def surface_from_spec(spec: dict) -> Surface:
    kind = spec.get("surface", "plane")
    if kind == "plane":
        return Plane()
    if kind == "plane_density":
        return DensityPlane.from_expr(spec["density"], float(spec.get("support_radius", 10.0)))
    if kind == "sphere":
        return RoundSphere(float(spec.get("total_area", 4 * math.pi)), float(spec.get("radius", 1.0)))
    raise ValueError(f"unknown surface {kind!r}")


def load_contour(path: str) -> Contour:
    with open(path) as fh:
        return contour_from_spec(json.load(fh))
