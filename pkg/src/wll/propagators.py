"""Scalar propagator kernels of generalized axial gauge.

Each kernel returns the coefficient ``p(z, w)`` of the propagator two-form with
the coordinate differentials stripped.  Along a contour the full integrand is
``p(gamma(t), gamma(t')) * plus(gamma'(t)) * plus(gamma'(t'))`` where ``plus``
projects a tangent onto the gauge's ``dx_+`` leg (see :func:`plus_component`).

Points are complex chart coordinates ``x0 + i x1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ChartOverflow, Coincident, LightConeSingularity, Unsupported
from .geometry import CHART_RADIUS_MAX, DensityPlane, Plane, RoundSphere

FOUR_PI = 4 * math.pi


@dataclass(frozen=True)
class GaugeChoice:
    """``kind`` is ``"hol"``, ``"alpha"`` or ``"wml"``.

    ``alpha`` in (0, pi/2] selects the alpha-gauge (``hol`` is alpha = pi/2).
    WML carries a regulator ``epsilon``; with ``ladder`` set, integrals are
    repeated over that list of regulators and Richardson-extrapolated to zero.
    """

    kind: str = "hol"
    alpha: float = math.pi / 2
    epsilon: float = 1e-6
    ladder: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("hol", "alpha", "wml"):
            raise ValueError(f"unknown gauge kind {self.kind!r}")
        if self.kind == "hol":
            object.__setattr__(self, "alpha", math.pi / 2)
        if self.kind == "alpha" and not 0 < self.alpha <= math.pi / 2:
            raise ValueError("alpha must lie in (0, pi/2]")
        if self.kind == "wml":
            if not self.epsilon > 0:
                raise ValueError("wml_epsilon must be positive")
            if self.ladder is not None and any(e <= 0 for e in self.ladder):
                raise ValueError("ladder regulators must be positive")

    @property
    def is_holomorphic(self) -> bool:
        return self.kind == "hol" or (self.kind == "alpha" and self.alpha == math.pi / 2)

    def at_epsilon(self, eps: float) -> "GaugeChoice":
        return GaugeChoice("wml", epsilon=eps)

    def label(self) -> str:
        if self.kind == "hol":
            return "hol"
        if self.kind == "alpha":
            return f"alpha:{self.alpha:g}"
        if self.ladder:
            return "wml:" + ",".join(f"{e:g}" for e in self.ladder)
        return f"wml:{self.epsilon:g}"


def parse_gauge(text: str) -> GaugeChoice:
    """``hol`` | ``alpha:<radians>`` | ``wml:<eps>`` | ``wml:<eps1>,<eps2>,...`` (ladder)."""
    text = text.strip()
    if text == "hol":
        return GaugeChoice("hol")
    name, _, arg = text.partition(":")
    if name == "alpha":
        return GaugeChoice("alpha", alpha=float(arg))
    if name == "wml":
        if not arg:
            return GaugeChoice("wml")
        eps = tuple(float(x) for x in arg.split(","))
        if len(eps) == 1:
            return GaugeChoice("wml", epsilon=eps[0])
        return GaugeChoice("wml", epsilon=min(eps), ladder=eps)
    raise ValueError(f"cannot parse gauge {text!r}")


def _coincident_check(diff, strict: bool):
    if strict and np.any(diff == 0):
        raise Coincident("kernel evaluated on the diagonal")


def kernel_hol_plane(z, w, strict: bool = True):
    """``(1/4pi) (conj(z) - conj(w)) / (z - w)``; modulus exactly 1/(4 pi)."""
    d = np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex)
    _coincident_check(d, strict)
    out = np.conj(d) / d / FOUR_PI
    return complex(out) if out.ndim == 0 else out


def alpha_coordinates(x, alpha: float):
    """``(x_{alpha,+}, x_{alpha,-}) = (x0 + e^{i alpha} x1, x0 - e^{i alpha} x1)``."""
    x = np.asarray(x, dtype=complex)
    rot = np.exp(1j * alpha)
    return x.real + rot * x.imag, x.real - rot * x.imag


def kernel_alpha_plane(z, w, alpha: float, tol: float = 0.0):
    """``(i / (4 pi e^{i alpha})) (x - x')_- / (x - x')_+`` with alpha-rotated light-cone
    coordinates; agrees with :func:`kernel_hol_plane` at alpha = pi/2."""
    if not 0 < alpha <= math.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2]")
    plus, minus = alpha_coordinates(np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex), alpha)
    if np.any(np.abs(plus) <= tol):
        raise LightConeSingularity("separation lies on the alpha light cone")
    out = 1j * np.exp(-1j * alpha) / FOUR_PI * minus / plus
    return complex(out) if out.ndim == 0 else out


def kernel_wml_plane(z, w, epsilon: float):
    """``(i/4pi) x_-^2 / (x_+ x_- - i eps)`` with ``x_pm = x0 pm x1``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    plus, minus = alpha_coordinates(np.asarray(z, dtype=complex) - np.asarray(w, dtype=complex), 0.0)
    out = 1j / FOUR_PI * minus**2 / (plus * minus - 1j * epsilon)
    return complex(out) if out.ndim == 0 else out


def kernel_hol_sphere_round(z, w, total_area: float = FOUR_PI, radius: float = 1.0,
                            hat: bool = False, chart_radius_max: float = CHART_RADIUS_MAX,
                            strict: bool = True):
    """Holomorphic-gauge kernel of the round sphere in the chart around ``z = 0``.

    For ``total_area = 4 pi`` and ``radius = 1``:
    ``(1/pi) / (1+|z|^2) / (1+|w|^2) * (conj(z)-conj(w)) / (z-w)``.  A sphere of
    chart radius ``r`` scaled to area ``A`` gives ``c p_1(z/r, w/r)`` with
    ``c = A / (4 pi r^2)``; ``hat=True`` divides by ``A``.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(z) > chart_radius_max) or np.any(np.abs(w) > chart_radius_max):
        raise ChartOverflow("point outside the sphere chart")
    d = z - w
    _coincident_check(d, strict)
    zs, ws = z / radius, w / radius
    c = total_area / (FOUR_PI * radius**2)
    out = c / math.pi / (1 + np.abs(zs) ** 2) / (1 + np.abs(ws) ** 2) * np.conj(d) / d
    if hat:
        out = out / total_area
    return complex(out) if out.ndim == 0 else out


def plus_component(tangent, gauge: GaugeChoice):
    """Coefficient of ``dx_+`` on a tangent ``x0' + i x1'``: ``x0' + e^{i alpha} x1'``.

    For holomorphic gauge this is the tangent itself; WML uses alpha = 0.
    """
    tangent = np.asarray(tangent, dtype=complex)
    if gauge.kind == "hol":
        return tangent
    alpha = 0.0 if gauge.kind == "wml" else gauge.alpha
    return tangent.real + np.exp(1j * alpha) * tangent.imag


@dataclass(frozen=True)
class PropagatorKernel:
    """Kernel bound to a surface and gauge; ``hat`` normalisation only on the sphere."""

    surface: object
    gauge: GaugeChoice
    hat: bool = False

    def __post_init__(self):
        if isinstance(self.surface, RoundSphere):
            if not self.gauge.is_holomorphic:
                raise Unsupported("the sphere only carries holomorphic gauge")
        elif self.hat:
            raise ValueError("hat normalisation is only defined on the sphere")
        if isinstance(self.surface, DensityPlane):
            raise Unsupported("no closed kernel for non-standard plane densities")

    def __call__(self, z, w):
        s = self.surface
        if isinstance(s, RoundSphere):
            return kernel_hol_sphere_round(z, w, s.total_area, s.radius, self.hat,
                                           s.chart_radius_max, strict=False)
        if isinstance(s, Plane):
            g = self.gauge
            if g.kind == "hol":
                return kernel_hol_plane(z, w, strict=False)
            if g.kind == "alpha":
                return kernel_alpha_plane(z, w, g.alpha)
            return kernel_wml_plane(z, w, g.epsilon)
        raise Unsupported(f"no kernel for surface {s!r}")

    def plus(self, tangent):
        return plus_component(tangent, self.gauge)
