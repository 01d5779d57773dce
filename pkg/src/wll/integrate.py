"""Iterated Cauchy integrals (chi) and cyclically-ordered analytic factors.

Conventions
-----------
* ``chi`` takes its points as ``(z_n, ..., z_1)``: slot 1 is the earliest time
  on the path-ordered domain ``1 >= t_n >= ... >= t_1 >= 0``.
* The cyclically-ordered domain is the union of the ``n`` cyclic relabelings
  of the path-ordered simplex.  Monte Carlo draws one sorted uniform tuple and
  sums the integrand over all relabelings; the simplex volume is ``1/n!``.
* ``est_err`` is the standard error of the complex mean,
  ``sqrt(var(Re) + var(Im) / N)``; acceptance bands use three of them.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .diagrams import FeynmanDiagram
from .errors import CapExceeded, PointOnContour, Unsupported
from .geometry import Contour, Plane, RoundSphere, gauss_legendre, signed_area
from .propagators import GaugeChoice, PropagatorKernel

CHUNK = 1 << 15
EXCLUSION_REL = 1e-3
TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class OrderedDomain:
    n: int
    kind: str = "cyclic"  # "path" or "cyclic"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("domain order must be >= 1")
        if self.kind not in ("path", "cyclic"):
            raise ValueError(f"unknown domain kind {self.kind!r}")


@dataclass(frozen=True)
class QuadratureConfig:
    """``method`` is ``"mc"``, ``"sobol"``, ``"pairs"`` (analytic factors only:
    importance-sampled independent pairs, see :func:`class_factors`) or
    ``"gauss"`` (deterministic; chi only).

    Identical ``(method, samples, seed, shards)`` give bit-identical results.
    """

    method: str = "mc"
    samples: int = 2_000_000
    seed: int = 0
    shards: int = 1
    target_rel_err: float = 0.0
    replicas: int = 16
    panels: int = 64
    order: int = 8

    def __post_init__(self):
        if self.method not in ("mc", "sobol", "gauss", "pairs"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.samples < 1 or self.shards < 1:
            raise ValueError("samples and shards must be positive")

    def with_seed(self, seed: int) -> "QuadratureConfig":
        return QuadratureConfig(self.method, self.samples, seed, self.shards,
                                self.target_rel_err, self.replicas, self.panels, self.order)

    def with_samples(self, samples: int) -> "QuadratureConfig":
        return QuadratureConfig(self.method, samples, self.seed, self.shards,
                                self.target_rel_err, self.replicas, self.panels, self.order)


@dataclass
class ChiEvaluation:
    value: complex
    est_err: float
    samples: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.est_err >= 0:
            raise ValueError("est_err must be non-negative")

    def within(self, target: complex, sigmas: float = 3.0, floor: float = 0.0) -> bool:
        return abs(self.value - target) <= sigmas * self.est_err + floor


def worker_count(shards: int) -> int:
    env = os.environ.get("WLL_THREADS")
    return max(1, int(env)) if env else max(1, shards)


def child_seeds(seed: int, count: int) -> list[int]:
    """Independent 63-bit seeds derived from ``seed``."""
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(2, np.uint64)[0] >> np.uint64(1)) for s in ss.spawn(count)]


# ---------------------------------------------------------------------------
# Sampling engine
# ---------------------------------------------------------------------------


def _moments(values: np.ndarray) -> np.ndarray:
    """Count, sums and sums of squares (real and imaginary) per column."""
    v = values.reshape(values.shape[0], -1)
    return np.stack([np.full(v.shape[1], float(v.shape[0])), v.real.sum(0), v.imag.sum(0),
                     np.square(v.real).sum(0), np.square(v.imag).sum(0)])


def _finish(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = m[0]
    mean = (m[1] + 1j * m[2]) / n
    if n[0] < 2:
        return mean, np.full(mean.shape, np.inf)
    var = (m[3] - n * mean.real**2 + m[4] - n * mean.imag**2) / (n - 1)
    return mean, np.sqrt(np.maximum(var, 0.0) / n)


def estimate_many(batch: Callable[[np.ndarray], np.ndarray], dim: int,
                  q: QuadratureConfig) -> tuple[np.ndarray, np.ndarray, int]:
    """Column means of ``batch(u)`` (shape ``(k,)`` or ``(k, m)``) over ``[0,1)^dim``.

    MC splits the budget over ``q.shards`` contiguous seed substreams and
    reduces their moments in shard order.  Sobol uses ``q.replicas``
    independently scrambled sequences and reports their spread.
    Returns ``(means, standard errors, samples)``.
    """
    workers = worker_count(q.shards)
    if q.method in ("mc", "pairs"):
        seqs = np.random.SeedSequence(q.seed).spawn(q.shards)
        sizes = [q.samples // q.shards + (i < q.samples % q.shards) for i in range(q.shards)]

        def run(i):
            rng = np.random.default_rng(seqs[i])
            acc = None
            left = sizes[i]
            while left > 0:
                k = min(CHUNK, left)
                mom = _moments(np.asarray(batch(rng.random((k, dim))), dtype=complex))
                acc = mom if acc is None else acc + mom
                left -= k
            return acc

        with ThreadPoolExecutor(workers) as pool:
            parts = [p for p in pool.map(run, range(q.shards)) if p is not None]
        total = parts[0].copy()
        for p in parts[1:]:
            total += p
        mean, err = _finish(total)
        return mean, err, int(total[0, 0])
    if q.method == "sobol":
        from scipy.stats import qmc

        reps = max(2, q.replicas)
        m = max(1, int(math.floor(math.log2(max(2, q.samples // reps)))))
        seqs = np.random.SeedSequence(q.seed).spawn(reps)

        def run_rep(i):
            eng = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng(seqs[i]))
            pts = eng.random_base2(m)
            acc = None
            for lo in range(0, pts.shape[0], CHUNK):
                mom = _moments(np.asarray(batch(pts[lo:lo + CHUNK]), dtype=complex))
                acc = mom if acc is None else acc + mom
            return (acc[1] + 1j * acc[2]) / acc[0]

        with ThreadPoolExecutor(workers) as pool:
            means = np.array(list(pool.map(run_rep, range(reps))))
        mean = means.mean(axis=0)
        err = np.sqrt((np.var(means.real, axis=0, ddof=1)
                       + np.var(means.imag, axis=0, ddof=1)) / reps)
        return mean, err, reps * 2**m
    raise Unsupported(f"method {q.method!r} does not apply to sampled integrals")


def estimate(batch: Callable[[np.ndarray], np.ndarray], dim: int,
             q: QuadratureConfig) -> ChiEvaluation:
    """Scalar version of :func:`estimate_many`."""
    mean, err, count = estimate_many(batch, dim, q)
    return ChiEvaluation(complex(mean[0]), float(err[0]), count,
                         {"method": q.method, "seed": q.seed})


def _sorted_times(u: np.ndarray) -> np.ndarray:
    return np.sort(u, axis=1)


def _rotation_index(m: int) -> np.ndarray:
    """``idx[k, j]``: time index (into the sorted tuple) taken by slot j under rotation k."""
    k = np.arange(m)[:, None]
    j = np.arange(m)[None, :]
    return (j - k) % m


# ---------------------------------------------------------------------------
# chi: sampled
# ---------------------------------------------------------------------------


def _check_points(c: Contour, pts: np.ndarray, exclusion: float | None) -> float:
    band = EXCLUSION_REL * c.diameter() if exclusion is None else exclusion
    d = c.distance(pts)
    if np.any(d <= band):
        raise PointOnContour(f"evaluation point within {band:.3g} of the contour")
    return band


def chi(c: Contour, points: Sequence[complex], kind: OrderedDomain | str = "cyclic",
        q: QuadratureConfig = QuadratureConfig(), exclusion: float | None = None) -> ChiEvaluation:
    """``(2 pi i)^-n`` times the iterated integral of ``dw/(z_k - w)`` over the
    ordered (``"path"``) or cyclically ordered (``"cyclic"``) domain.

    ``points`` are ``(z_n, ..., z_1)``.  With ``q.method == "gauss"`` the value
    comes from composite Gauss-Legendre panels (error: difference to half the
    panel count); otherwise it is sampled.
    """
    kind = kind.kind if isinstance(kind, OrderedDomain) else kind
    z = np.asarray(points, dtype=complex)[::-1]  # slot order z_1..z_n
    n = z.size
    OrderedDomain(n, kind)
    if kind == "cyclic" and not c.closed:
        raise ValueError("cyclic ordering needs a closed contour")
    _check_points(c, z, exclusion)
    if q.method == "gauss":
        fine = chi_gauss(c, z[None, :], kind, panels=None, order=q.order, min_panels=q.panels)
        coarse = chi_gauss(c, z[None, :], kind, panels=None, order=q.order,
                           min_panels=q.panels, refine=-1)
        err = max(abs(complex(fine[0]) - complex(coarse[0])), 1e-14)
        return ChiEvaluation(complex(fine[0]), err, 0, {"method": "gauss"})
    fact = math.factorial(n)
    rot = _rotation_index(n) if kind == "cyclic" else np.arange(n)[None, :]

    def batch(u):
        t = _sorted_times(u)
        p, dp = c.sample(t.ravel())
        total = np.zeros(len(t), dtype=complex)
        for r in rot:
            total += np.prod(_slot_forms(t, p, dp, z, r), axis=1)
        return total / fact

    return estimate(batch, n, q)


def _slot_forms(t, p, dp, z, r):
    """Form value for slot j evaluated at time index r[j] of each sorted tuple."""
    pts = p.reshape(t.shape)[:, r]
    tan = dp.reshape(t.shape)[:, r]
    return tan / (TWO_PI_I * (z[None, :] - pts))


# ---------------------------------------------------------------------------
# chi: deterministic panels
# ---------------------------------------------------------------------------


def _panels_for(c: Contour, dist: np.ndarray, min_panels: int, max_panels: int = 1 << 15) -> np.ndarray:
    nd = c.nodes(min_panels)
    speed = float(np.max(np.abs(nd.tangents)))
    need = speed / np.maximum(2.0 * dist, 1e-300)
    p = np.maximum(min_panels, 2.0 ** np.ceil(np.log2(np.maximum(need, 1.0))))
    return np.minimum(p, max_panels).astype(int)


def chi_gauss(c: Contour, z: np.ndarray, kind: str = "cyclic", panels: int | None = None,
              order: int = 8, min_panels: int = 64, refine: int = 0,
              chunk: int = 1024) -> np.ndarray:
    """Deterministic chi for a batch of point tuples ``z[b, j]`` (slot order z_1..z_n).

    The path-ordered integral is computed by repeated running integration on
    Gauss-Legendre panels; the cyclic value is the sum over the n cyclic
    relabelings.  With ``panels=None`` the panel count is chosen per tuple so
    that panels are no longer than twice the distance to the nearest point
    (``refine`` shifts the resolution by powers of two).
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    out = np.empty(z.shape[0], dtype=complex)
    if panels is not None:
        levels = np.full(z.shape[0], panels)
    else:
        dist = c.distance(z.ravel()).reshape(z.shape).min(axis=1)
        levels = _panels_for(c, dist, min_panels)
        if refine:
            levels = np.maximum(1, (levels * 2.0**refine).astype(int))
    for lev in np.unique(levels):
        idx = np.flatnonzero(levels == lev)
        nd = c.nodes(int(lev), order)
        step = max(1, chunk * 64 // max(64, nd.t.size // order))
        for lo in range(0, idx.size, step):
            sel = idx[lo:lo + step]
            out[sel] = _chi_panels(nd, z[sel], kind)
    return out


def _chi_panels(nd, z: np.ndarray, kind: str) -> np.ndarray:
    n = z.shape[1]
    half = 0.5 * nd.panel_width
    _, w, cum = gauss_legendre(nd.cumulative.shape[0])
    # alpha_j at the nodes: (B, n, P, q); equal points share work through unique()
    uniq, inv = np.unique(z, return_inverse=True)
    inv = inv.reshape(z.shape)
    forms_u = nd.tangents[None] / (TWO_PI_I * (uniq[:, None, None] - nd.points[None]))
    orders = [list(range(n))]
    if kind == "cyclic":
        orders = [[(k + j) % n for j in range(n)] for k in range(n)]
    b = np.arange(z.shape[0])
    total = np.zeros(z.shape[0], dtype=complex)
    for seq in orders:
        running = None
        for pos, slot in enumerate(seq):
            a = forms_u[inv[b, slot]]
            g = a if running is None else a * running
            panel_tot = half * (g @ w)
            if pos == n - 1:
                total += panel_tot.sum(axis=1)
                break
            before = np.cumsum(panel_tot, axis=1) - panel_tot
            running = before[..., None] + half * (g @ cum.T)
    return total


# ---------------------------------------------------------------------------
# Analytic factors
# ---------------------------------------------------------------------------


def _kernel_for(s, g: GaugeChoice) -> PropagatorKernel:
    if isinstance(s, RoundSphere):
        if not g.is_holomorphic:
            raise Unsupported("sphere analytic factors need holomorphic gauge")
        return PropagatorKernel(s, g, hat=True)
    if isinstance(s, Plane):
        return PropagatorKernel(s, g)
    raise Unsupported(f"no propagator for surface {s!r}")


def _factor_batch(c: Contour, kernels: list[PropagatorKernel], d: FeynmanDiagram,
                  weights: Sequence[float]):
    """Integrand of the cyclically-ordered analytic factor, including ``1/(2n)``
    and the simplex volume, as a weighted sum over the given kernels."""
    n = d.n
    m = 2 * n
    pairs = np.array(d.pairs) - 1
    rot = _rotation_index(m)
    norm = 1.0 / (m * math.factorial(m))

    def batch(u):
        t = _sorted_times(u)
        p, dp = c.sample(t.ravel())
        p = p.reshape(t.shape)
        dp = dp.reshape(t.shape)
        total = np.zeros(len(t), dtype=complex)
        for kern, wt in zip(kernels, weights):
            plus = np.prod(kern.plus(dp), axis=1)
            acc = np.zeros(len(t), dtype=complex)
            for r in rot:
                prod = np.ones(len(t), dtype=complex)
                for i, j in pairs:
                    prod *= kern(p[:, r[i]], p[:, r[j]])
                acc += prod
            total += wt * acc * plus
        return total * norm

    return batch


def richardson_weights(ladder: Sequence[float]) -> np.ndarray:
    """Lagrange weights extrapolating values at ``ladder`` to regulator 0.

    The leading regulator dependence of the light-cone kernel's integrals is
    ``O(sqrt(eps))``, so the polynomial is taken in ``sqrt(eps)``.
    """
    e = np.sqrt(np.asarray(ladder, dtype=float))
    w = np.ones(e.size)
    for i in range(e.size):
        for j in range(e.size):
            if i != j:
                w[i] *= e[j] / (e[j] - e[i])
    return w


def _kernel_set(s, g: GaugeChoice) -> tuple[list[PropagatorKernel], list[float]]:
    if g.kind == "wml" and g.ladder:
        return ([_kernel_for(s, g.at_epsilon(e)) for e in g.ladder],
                list(richardson_weights(g.ladder)))
    return [_kernel_for(s, g)], [1.0]


def analytic_factor(c: Contour, s, g: GaugeChoice, d: FeynmanDiagram,
                    q: QuadratureConfig = QuadratureConfig()) -> ChiEvaluation:
    """``(1/2n)`` times the integral over the cyclic domain of the matched
    kernel product, with ``dx_+`` tangent components on every leg.

    On the sphere the kernel is divided by the total area.  A WML gauge with
    a regulator ladder is evaluated on common samples for every rung and
    extrapolated to zero per sample.  ``q.method == "pairs"`` delegates to
    :func:`class_factors`.
    """
    if d.n < 1:
        return ChiEvaluation(1.0 + 0j, 0.0, 0)
    if q.method == "pairs":
        for cls, res in class_factors(c, s, g, d.n, q):
            if d in cls.members:
                res.info["diagram"] = str(d)
                return res
    kernels, weights = _kernel_set(s, g)
    res = estimate(_factor_batch(c, kernels, d, weights), 2 * d.n, q)
    res.info.update({"diagram": str(d), "gauge": g.label()})
    return res


# ---------------------------------------------------------------------------
# Importance-sampled independent pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairDensity:
    """Mixture of the uniform density on ``[0,1)^2`` (weight ``mix``) and a
    piecewise-constant density on a ``grid x grid`` lattice of cells."""

    grid: int
    cdf: np.ndarray
    cell_density: np.ndarray  # density value inside each cell, flattened
    mix: float

    def draw(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Map four uniforms per row to ``(s, s', density)``."""
        g = self.grid
        cell = np.minimum(np.searchsorted(self.cdf, u[:, 1], side="right"), g * g - 1)
        hist = u[:, 0] >= self.mix
        i, j = np.divmod(cell, g)
        s1 = np.where(hist, (i + u[:, 2]) / g, u[:, 2])
        s2 = np.where(hist, (j + u[:, 3]) / g, u[:, 3])
        s1 = np.minimum(s1, np.nextafter(1.0, 0.0))
        s2 = np.minimum(s2, np.nextafter(1.0, 0.0))
        ci = np.minimum((s1 * g).astype(int), g - 1)
        cj = np.minimum((s2 * g).astype(int), g - 1)
        dens = self.mix + (1.0 - self.mix) * self.cell_density[ci * g + cj]
        return s1, s2, dens


def build_pair_density(c: Contour, kernels: Sequence[PropagatorKernel], grid: int = 512,
                       sub: int = 4, mix: float = 0.2) -> PairDensity:
    """Tabulate the largest ``|p(s, s') plus(s) plus(s')|`` over ``kernels`` on a
    ``sub``-refined lattice and average it over each cell."""
    m = grid * sub
    p, dp = c.sample((np.arange(m) + 0.5) / m)
    pc, dpc = c.sample((np.arange(m) + 0.25) / m)  # offset columns avoid the diagonal
    table = np.zeros((m, m))
    rows = max(1, (1 << 21) // m)
    for lo in range(0, m, rows):
        blk = slice(lo, lo + rows)
        best = np.zeros((min(rows, m - lo), m))
        for k in kernels:
            with np.errstate(invalid="ignore", divide="ignore"):
                v = np.abs(k(p[blk, None], pc[None, :]) * k.plus(dp[blk])[:, None]
                           * k.plus(dpc)[None, :])
            best = np.maximum(best, np.nan_to_num(v, nan=0.0, posinf=0.0))
        table[blk] = best
    cells = table.reshape(grid, sub, grid, sub).mean(axis=(1, 3)).ravel()
    total = cells.sum()
    if not total > 0:
        cells = np.ones_like(cells)
        total = cells.sum()
    prob = cells / total
    cdf = np.cumsum(prob)
    cdf[-1] = 1.0
    return PairDensity(grid, cdf, prob * grid * grid, mix)


def _class_lookup(n: int):
    """Code of a partner array (positions base 2n) -> index of its cyclic class."""
    from .diagrams import classes_of_order

    classes = classes_of_order(n)
    base = (2 * n) ** np.arange(2 * n)
    table = {}
    for ci, cls in enumerate(classes):
        for d in cls.members:
            table[int(np.dot(d.partner(), base))] = ci
    return classes, base, table


def class_factors(c: Contour, s, g: GaugeChoice, n: int,
                  q: QuadratureConfig = QuadratureConfig(method="pairs"),
                  combos: np.ndarray | None = None, grid: int = 512
                  ) -> list[tuple]:
    """Analytic factors of every cyclic class of order ``n`` from one sample.

    Every kernel here is symmetric, so the integral over the 2n-torus of
    ``n`` independent pair kernels, split by the matching the cyclic order
    of the 2n times induces, gives ``2^n n! |C|`` times the factor of class
    ``C``.  Each pair is drawn from a tabulated importance density, which
    absorbs light-cone peaks of the WML kernel.

    ``combos`` (rows of per-class weights) adds linear combinations of the
    class factors, estimated on the same samples with correct errors; they
    are returned after the classes as ``(None, ChiEvaluation)``.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    kernels, weights = _kernel_set(s, g)
    dens = build_pair_density(c, kernels, grid)
    classes, base, table = _class_lookup(n)
    sizes = np.array([cls.orbit_size for cls in classes], dtype=float)
    norm = 1.0 / (2.0**n * math.factorial(n) * sizes)
    extra = np.zeros((0, len(classes))) if combos is None else np.atleast_2d(combos)
    codes = np.array(sorted(table))
    idx_of = np.array([table[k] for k in codes])

    def batch(u):
        k = len(u)
        t = np.empty((k, 2 * n))
        qd = np.ones(k)
        for j in range(n):
            a, b, dj = dens.draw(u[:, 4 * j:4 * j + 4])
            t[:, 2 * j], t[:, 2 * j + 1] = a, b
            qd *= dj
        p, dp = c.sample(t.ravel())
        p = p.reshape(t.shape)
        dp = dp.reshape(t.shape)
        val = np.zeros(k, dtype=complex)
        for kern, wt in zip(kernels, weights):
            plus = kern.plus(dp)
            prod = np.full(k, wt, dtype=complex)
            for j in range(n):
                prod *= kern(p[:, 2 * j], p[:, 2 * j + 1]) * plus[:, 2 * j] * plus[:, 2 * j + 1]
            val += prod
        val /= qd
        pos = np.argsort(np.argsort(t, axis=1, kind="stable"), axis=1)
        partner = np.empty_like(pos)
        lab = np.arange(2 * n)
        np.put_along_axis(partner, pos, pos[:, lab ^ 1], axis=1)
        cls_idx = idx_of[np.searchsorted(codes, partner @ base)]
        out = np.zeros((k, len(classes)), dtype=complex)
        out[np.arange(k), cls_idx] = val
        out *= norm
        if extra.shape[0]:
            out = np.concatenate([out, out @ extra.T], axis=1)
        return out

    mean, err, count = estimate_many(batch, 4 * n, q)
    info = {"method": q.method, "seed": q.seed, "gauge": g.label(), "grid": grid}
    res = [(cls, ChiEvaluation(complex(mean[i]), float(err[i]), count, dict(info)))
           for i, cls in enumerate(classes)]
    res += [(None, ChiEvaluation(complex(mean[len(classes) + r]),
                                 float(err[len(classes) + r]), count, dict(info)))
            for r in range(extra.shape[0])]
    return res


def analytic_factor_via_chi(c: Contour, q: QuadratureConfig, d: FeynmanDiagram,
                            exclusion: float | None = None, pad: float = 0.1,
                            surface=Plane()) -> ChiEvaluation:
    """Independent route to the analytic factor: integrate chi of the cyclic
    domain, with the arguments of each matched pair identified, against the
    area form over a padded bounding box.

    Samples within ``exclusion`` (default 1e-3 x diameter) of the contour are
    dropped; their number and a bound on the resulting bias are in ``info``.
    """
    if not isinstance(surface, Plane):
        raise Unsupported("the chi oracle is implemented for the standard plane only")
    if q.method == "gauss":
        raise Unsupported("the chi oracle samples region points; use mc or sobol")
    n = d.n
    x0, x1, y0, y1 = c.bbox()
    px, py = pad * (x1 - x0), pad * (y1 - y0)
    x0, x1, y0, y1 = x0 - px, x1 + px, y0 - py, y1 + py
    box = (x1 - x0) * (y1 - y0)
    band = EXCLUSION_REL * c.diameter() if exclusion is None else exclusion
    slot_point = [0] * (2 * n)
    for k, (a, b) in enumerate(d.pairs):
        slot_point[a - 1] = slot_point[b - 1] = k
    dropped = [0]

    def batch(u):
        zs = (x0 + (x1 - x0) * u[:, 0::2]) + 1j * (y0 + (y1 - y0) * u[:, 1::2])
        dist = c.distance(zs.ravel()).reshape(zs.shape).min(axis=1)
        keep = dist > band
        dropped[0] += int((~keep).sum())
        vals = np.zeros(len(u), dtype=complex)
        if np.any(keep):
            vals[keep] = chi_gauss(c, zs[keep][:, slot_point], "cyclic")
        return vals * box**n / (2 * n)

    res = estimate(batch, 2 * n, q)
    # chi of the cyclic domain is bounded by 1/(2n-1)! away from the curve
    frac = dropped[0] / max(1, res.samples)
    res.info.update({"diagram": str(d), "dropped": dropped[0], "band": band,
                     "bias_bound": frac * box**n / (2 * n) / math.factorial(2 * n - 1)})
    return res


def sphere_circle_factor(n: int, rho: float) -> float:
    """Closed-form cyclically-ordered analytic factor ``rho^n / (2n)!`` shared by
    all order-n diagrams for circles with rotationally symmetric density."""
    if n < 1:
        raise ValueError("order must be >= 1")
    if not 0 <= rho:
        raise ValueError("rho must be non-negative")
    return rho**n / math.factorial(2 * n)


def sphere_rho(c: Contour, s: RoundSphere) -> float:
    a = signed_area(c, s)
    return a * (s.total_area - a) / s.total_area**2


def sphere_cov_chi(c: Contour, s: RoundSphere, d: FeynmanDiagram,
                   q: QuadratureConfig = QuadratureConfig(), exclusion: float | None = None
                   ) -> ChiEvaluation:
    """Nested covariance ``cov_{i1 j1} ... cov_{in jn}`` of chi over the cyclic
    domain under the normalised area form (equal to the integral of the
    area-normalised kernels over that domain, i.e. ``2n`` times the factor).

    Each sample draws, per pair, one shared point and two independent points
    and forms the inclusion-exclusion sum over which pairs are split.
    """
    if not isinstance(s, RoundSphere):
        raise Unsupported("sphere_cov_chi needs a round sphere")
    n = d.n
    if n > 2:
        raise CapExceeded("sphere covariances are implemented for n <= 2")
    if q.method == "gauss":
        raise Unsupported("sphere covariances are sampled; use mc")
    band = EXCLUSION_REL * c.diameter() if exclusion is None else exclusion
    pairs = [(a - 1, b - 1) for a, b in d.pairs]
    dropped = [0]
    subsets = [[(mask >> k) & 1 for k in range(n)] for mask in range(1 << n)]

    def run(count: int, rng: np.random.Generator):
        shared = s.sample_points(rng, count * n).reshape(count, n)
        split = s.sample_points(rng, count * 2 * n).reshape(count, n, 2)
        s.check_chart(np.concatenate([shared.ravel(), split.ravel()]))
        allpts = np.concatenate([shared, split.reshape(count, 2 * n)], axis=1)
        dist = c.distance(allpts.ravel()).reshape(allpts.shape).min(axis=1)
        keep = dist > band
        dropped[0] += int((~keep).sum())
        tuples, signs = [], []
        for sub in subsets:
            z = np.empty((count, 2 * n), dtype=complex)
            for k, (i, j) in enumerate(pairs):
                if sub[k]:
                    z[:, i], z[:, j] = split[:, k, 0], split[:, k, 1]
                else:
                    z[:, i] = z[:, j] = shared[:, k]
            tuples.append(z)
            signs.append((-1) ** sum(sub))
        vals = np.zeros(count, dtype=complex)
        if np.any(keep):
            for z, sg in zip(tuples, signs):
                vals[keep] += sg * chi_gauss(c, z[keep], "cyclic")
        return vals

    seqs = np.random.SeedSequence(q.seed).spawn(q.shards)
    sizes = [q.samples // q.shards + (i < q.samples % q.shards) for i in range(q.shards)]

    def shard(i):
        rng = np.random.default_rng(seqs[i])
        acc = np.zeros((5, 1))
        left = sizes[i]
        while left > 0:
            k = min(4096, left)
            acc += _moments(run(k, rng))
            left -= k
        return acc

    with ThreadPoolExecutor(worker_count(q.shards)) as pool:
        parts = list(pool.map(shard, range(q.shards)))
    total = np.zeros((5, 1))
    for p in parts:
        total += p
    mean, err = _finish(total)
    return ChiEvaluation(complex(mean[0]), float(err[0]), int(total[0, 0]),
                         {"diagram": str(d), "dropped": dropped[0], "band": band})
