"""Wilson loop coefficients: diagrammatic assembly, the Gaussian matrix model
reference, and end-to-end verification reports.

Coefficients are stored per power of the coupling with the coupling itself
factored out; the matrix model takes one scalar ``t`` standing for the area
(plane) or ``rho`` (sphere).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import ndtri

from .diagrams import classes_of_order, enumerate_matchings
from .errors import CapExceeded, NotACircle, NotSymmetricDensity, Unsupported
from .geometry import Contour, DensityPlane, Plane, RoundSphere, circle, signed_area
from .integrate import (QuadratureConfig, analytic_factor, child_seeds, class_factors,
                        estimate, sphere_circle_factor, sphere_cov_chi, sphere_rho)
from .lie import GroupSpec, build_basis, casimirs, lie_factor
from .propagators import GaugeChoice, PropagatorKernel

MAX_DIAGRAM_ORDER = 3
MAX_SERIES_ORDER = 4
SIGMAS = 3.0
# absolute slack for zero-variance estimates: a few hundred ulps of the scale
ULP_SLACK = 256 * np.finfo(float).eps


@dataclass
class WilsonSeries:
    coefficients: list[float]
    provenance: str  # "diagrammatic" | "matrix-model-series" | "matrix-model-mc"
    errors: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.errors:
            self.errors = [0.0] * len(self.coefficients)
        if self.coefficients and abs(self.coefficients[0] - 1.0) > 1e-12:
            raise ValueError("c0 must be 1 for the normalised trace")

    def evaluate(self, coupling: float) -> float:
        return float(sum(c * coupling**k for k, c in enumerate(self.coefficients)))


@dataclass
class EvalContext:
    contour: Contour
    surface: object
    gauge: GaugeChoice
    group: GroupSpec
    max_order: int = 2
    area: float | None = None
    rho: float | None = None

    def __post_init__(self):
        if self.max_order > MAX_DIAGRAM_ORDER:
            raise CapExceeded(f"diagrammatic order is capped at {MAX_DIAGRAM_ORDER}")
        if isinstance(self.surface, DensityPlane):
            raise Unsupported("diagrammatic series needs the standard plane or the round sphere")
        PropagatorKernel(self.surface, self.gauge, hat=isinstance(self.surface, RoundSphere))
        if isinstance(self.surface, RoundSphere):
            if self.rho is None:
                self.rho = sphere_rho(self.contour, self.surface)
        elif self.area is None:
            self.area = signed_area(self.contour, self.surface)

    @property
    def t(self) -> float:
        return self.rho if isinstance(self.surface, RoundSphere) else self.area


def _lie_values(g: GroupSpec, n: int):
    b = build_basis(g)
    classes = classes_of_order(n)
    return classes, np.array([lie_factor(c.representative, b).real for c in classes])


def coefficient(ctx: EvalContext, n: int, q: QuadratureConfig = QuadratureConfig()
                ) -> tuple[float, float]:
    """``c_n = sum over classes of orbit size x Lie factor x analytic factor``.

    With ``q.method == "pairs"`` all classes come from one sample and the sum
    is estimated directly; otherwise each class gets its own seed substream
    and errors add in quadrature.
    """
    if n > ctx.max_order:
        raise CapExceeded(f"order {n} exceeds context max_order {ctx.max_order}")
    if n == 0:
        return 1.0, 0.0
    classes, lie = _lie_values(ctx.group, n)
    sizes = np.array([c.orbit_size for c in classes], dtype=float)
    if q.method == "pairs":
        res = class_factors(ctx.contour, ctx.surface, ctx.gauge, n, q,
                            combos=(sizes * lie)[None, :])
        total = res[-1][1]
        return float(total.value.real), total.est_err
    seeds = child_seeds(q.seed, len(classes))
    value, var = 0.0, 0.0
    for cls, lf, size, seed in zip(classes, lie, sizes, seeds):
        f = analytic_factor(ctx.contour, ctx.surface, ctx.gauge, cls.representative,
                            q.with_seed(seed))
        value += size * lf * f.value.real
        var += (size * lf * f.est_err) ** 2
    return value, math.sqrt(var)


def diagrammatic_series(ctx: EvalContext, q: QuadratureConfig = QuadratureConfig()) -> WilsonSeries:
    seeds = child_seeds(q.seed, ctx.max_order + 1)
    vals, errs = [], []
    for n in range(ctx.max_order + 1):
        v, e = coefficient(ctx, n, q.with_seed(seeds[n]))
        vals.append(v)
        errs.append(e)
    return WilsonSeries(vals, "diagrammatic", errs)


def matrix_model_series(g: GroupSpec, t: float, max_order: int) -> WilsonSeries:
    """``c_n = t^n/(2n)! * sum of Lie factors over all order-n diagrams`` (exact)."""
    if max_order > MAX_SERIES_ORDER:
        raise CapExceeded(f"series order is capped at {MAX_SERIES_ORDER}")
    b = build_basis(g)
    coeffs = []
    for n in range(max_order + 1):
        total = sum(c.orbit_size * lie_factor(c.representative, b).real
                    for c in classes_of_order(n)) if n else 1.0
        coeffs.append(float(total * t**n / math.factorial(2 * n)))
    return WilsonSeries(coeffs, "matrix-model-series")


def _lie_sum_all(g: GroupSpec, n: int) -> float:
    """Sum of Lie factors over the full enumeration (used as a consistency check)."""
    b = build_basis(g)
    return float(sum(lie_factor(d, b).real for d in enumerate_matchings(n)))


def matrix_model_mc(g: GroupSpec, t: float, q: QuadratureConfig = QuadratureConfig(samples=1_000_000)
                    ) -> tuple[float, float]:
    """Mean and standard error of ``Re tr(exp X)/N`` for ``X = sum x_a e_a``,
    ``x_a`` independent normals of variance ``t``.

    Normals come from the inverse CDF of the shared uniform stream, so the
    same seed gives common random numbers across ``t``.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if q.method not in ("mc", "sobol"):
        raise Unsupported("matrix model sampling supports mc or sobol")
    b = build_basis(g)
    scale = math.sqrt(t)

    def batch(u):
        x = scale * ndtri(np.clip(u, 1e-300, 1 - 1e-16))
        mats = np.einsum("ka,aij->kij", x, b.elements)
        ex = scipy.linalg.expm(mats)
        return np.trace(ex, axis1=1, axis2=2).real / b.n

    res = estimate(batch, b.dim, q)
    return float(res.value.real), res.est_err


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


def _compare(value: float, err: float, pred: float, sigmas: float = SIGMAS) -> dict:
    slack = ULP_SLACK * max(1.0, abs(pred))
    dev = abs(value - pred)
    scale = max(err, slack / sigmas)
    sigma = dev / scale if scale > 0 else (0.0 if dev == 0 else math.inf)
    return {"value": value, "err": err, "prediction": pred, "sigma": sigma,
            "pass": bool(dev <= sigmas * err + slack)}


def verify_plane_series(ctx: EvalContext, q: QuadratureConfig = QuadratureConfig()) -> dict:
    """Diagrammatic ``c_1 .. c_max`` on the plane against the matrix model at ``t = |R|``."""
    if not isinstance(ctx.surface, Plane):
        raise Unsupported("plane series verification runs on the standard plane")
    pred = matrix_model_series(ctx.group, ctx.area, ctx.max_order).coefficients
    seeds = child_seeds(q.seed, ctx.max_order + 1)
    rows = []
    for n in range(1, ctx.max_order + 1):
        v, e = coefficient(ctx, n, q.with_seed(seeds[n]))
        rows.append({"n": n, **_compare(v, e, pred[n])})
    cas = casimirs(build_basis(ctx.group))
    return _report("plane-series", ctx, q, rows, {"casimir_fundamental": cas.c_fundamental,
                                              "casimir_adjoint": cas.c_adjoint})


def _report(kind: str, ctx: EvalContext, q: QuadratureConfig, rows: list, extra: dict) -> dict:
    return {
        "check": kind,
        "group": str(ctx.group),
        "gauge": ctx.gauge.label(),
        "t": ctx.t,
        "seed": q.seed,
        "samples": q.samples,
        "method": q.method,
        "coefficients": [1.0] + [r["value"] for r in rows],
        "errors": [0.0] + [r["err"] for r in rows],
        "predictions": [1.0] + [r["prediction"] for r in rows],
        "sigmas": [0.0] + [r["sigma"] for r in rows],
        "rows": rows,
        "pass": all(r["pass"] for r in rows),
        **extra,
    }


def circle_on_sphere(rho: float, s: RoundSphere = RoundSphere()) -> Contour:
    """Chart circle about the origin whose enclosed cap gives modulus ``rho``."""
    if not 0 < rho <= 0.25:
        raise ValueError("rho must lie in (0, 1/4]")
    q = 1.0 if rho == 0.25 else ((1 - 2 * rho) - math.sqrt(1 - 4 * rho)) / (2 * rho)
    return circle(0.0, s.radius * math.sqrt(q))


def _check_symmetric_circle(c: Contour, tol: float = 1e-9) -> float:
    pts = c.polyline(256)
    center = pts.mean()
    r = np.abs(pts - center)
    if np.ptp(r) > tol * max(1.0, r.mean()):
        raise NotACircle("contour is not a circle")
    if abs(center) > tol * max(1.0, r.mean()):
        raise NotSymmetricDensity("the round-sphere density is symmetric about the chart origin only")
    return float(r.mean())


def verify_sphere_circles(ctx: EvalContext, max_order: int | None = None,
                    q: QuadratureConfig = QuadratureConfig(samples=20_000),
                    cov_samples: int = 0) -> dict:
    """Circle on the round sphere: every factor equals ``rho^n/(2n)!``.

    Checks per order: the closed form, direct numerical factors for each
    class (``n <= max_order``), optionally ``sphere_cov_chi/(2n)`` for ``n <= 2``,
    and the assembled series against the matrix model at ``t = rho``.
    """
    if not isinstance(ctx.surface, RoundSphere):
        raise Unsupported("sphere circle verification runs on the round sphere")
    _check_symmetric_circle(ctx.contour)
    order = ctx.max_order if max_order is None else max_order
    if order > MAX_DIAGRAM_ORDER:
        raise CapExceeded(f"order {order} exceeds {MAX_DIAGRAM_ORDER}")
    rho = ctx.rho
    pred = matrix_model_series(ctx.group, rho, order).coefficients
    seeds = child_seeds(q.seed, order + 1)
    rows, factors = [], []
    for n in range(1, order + 1):
        closed = sphere_circle_factor(n, rho)
        classes, lie = _lie_values(ctx.group, n)
        cseeds = child_seeds(seeds[n], len(classes))
        value, var = 0.0, 0.0
        for cls, lf, sd in zip(classes, lie, cseeds):
            f = analytic_factor(ctx.contour, ctx.surface, ctx.gauge, cls.representative,
                                q.with_seed(sd))
            entry = {"n": n, "class": str(cls.representative),
                     **_compare(f.value.real, f.est_err, closed)}
            if cov_samples and n <= 2:
                cv = sphere_cov_chi(ctx.contour, ctx.surface, cls.representative,
                                    QuadratureConfig(samples=cov_samples, seed=sd))
                cmp = _compare(cv.value.real / (2 * n), cv.est_err / (2 * n), closed)
                entry["cov_chi"] = {k: cmp[k] for k in ("value", "err", "sigma", "pass")}
                entry["pass"] = entry["pass"] and cmp["pass"]
            factors.append(entry)
            value += cls.orbit_size * lf * f.value.real
            var += (cls.orbit_size * lf * f.est_err) ** 2
        closed_series = float(sum(c.orbit_size * lf for c, lf in zip(classes, lie)) * closed)
        row = {"n": n, **_compare(value, math.sqrt(var), pred[n]),
               "closed_form": closed_series}
        row["pass"] = row["pass"] and abs(closed_series - pred[n]) <= ULP_SLACK * max(1, abs(pred[n]))
        rows.append(row)
    ok_factors = all(f["pass"] for f in factors)
    rep = _report("sphere-circles", ctx, q, rows, {"rho": rho, "factors": factors})
    rep["pass"] = rep["pass"] and ok_factors
    return rep


def explore_third_order(ctx: EvalContext, q: QuadratureConfig = QuadratureConfig()) -> dict:
    """Third-order class factors on the plane next to the ``|R|^3/6!`` pairing.

    Exploratory: individual factors of non-circular contours need not equal
    ``|R|^3/720``; the report flags deviations and compares the assembled
    ``c_3`` with the matrix model.
    """
    if not isinstance(ctx.surface, Plane):
        raise Unsupported("third-order exploration runs on the standard plane")
    n = 3
    classes, lie = _lie_values(ctx.group, n)
    sizes = np.array([c.orbit_size for c in classes], dtype=float)
    ref = ctx.area**n / math.factorial(2 * n)
    if q.method == "pairs":
        res = class_factors(ctx.contour, ctx.surface, ctx.gauge, n, q,
                            combos=(sizes * lie)[None, :])
        facs = [r for _, r in res[:len(classes)]]
        c3, c3_err = float(res[-1][1].value.real), res[-1][1].est_err
    else:
        seeds = child_seeds(q.seed, len(classes))
        facs = [analytic_factor(ctx.contour, ctx.surface, ctx.gauge, cls.representative,
                                q.with_seed(sd)) for cls, sd in zip(classes, seeds)]
        c3 = float(sum(s * lf * f.value.real for s, lf, f in zip(sizes, lie, facs)))
        c3_err = math.sqrt(sum((s * lf * f.est_err) ** 2 for s, lf, f in zip(sizes, lie, facs)))
    rows = []
    for cls, lf, f in zip(classes, lie, facs):
        cmp = _compare(f.value.real, f.est_err, ref)
        rows.append({"class": str(cls.representative), "orbit_size": cls.orbit_size,
                     "lie_factor": float(lf), "factor": f.value.real, "err": f.est_err,
                     "factor_imag": f.value.imag, "sigma_from_area_pairing": cmp["sigma"],
                     "deviates": not cmp["pass"]})
    pred = matrix_model_series(ctx.group, ctx.area, n).coefficients[n]
    cmp = _compare(c3, c3_err, pred)
    return {"check": "third-order", "group": str(ctx.group), "gauge": ctx.gauge.label(),
            "area": ctx.area, "seed": q.seed, "samples": q.samples, "method": q.method,
            "area_pairing": ref, "classes": rows, "lie_vector": [float(x) for x in lie],
            "c3": c3, "c3_err": c3_err, "c3_prediction": pred, "c3_sigma": cmp["sigma"],
            "c3_agrees": cmp["pass"], "any_class_deviates": any(r["deviates"] for r in rows),
            "pass": True}
