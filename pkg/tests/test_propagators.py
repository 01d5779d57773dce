import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wll.errors import ChartOverflow, Coincident, LightConeSingularity, Unsupported
from wll.geometry import DensityPlane, Plane, RoundSphere
from wll.propagators import (GaugeChoice, PropagatorKernel, kernel_alpha_plane, kernel_hol_plane,
                             kernel_hol_sphere_round, kernel_wml_plane, parse_gauge,
                             plus_component)

FOUR_PI = 4 * math.pi


def test_hol_plane_examples():
    assert kernel_hol_plane(1, 0) == pytest.approx(1 / FOUR_PI)
    assert kernel_hol_plane(1j, 0) == pytest.approx(-1 / FOUR_PI)
    assert kernel_hol_plane(0.3 + 2j, -1) == pytest.approx(kernel_hol_plane(-1, 0.3 + 2j))


def test_hol_plane_coincident():
    with pytest.raises(Coincident):
        kernel_hol_plane(0.5, 0.5)


def test_hol_plane_unimodular_on_many_pairs():
    rng = np.random.default_rng(3)
    z = rng.normal(size=100_000) + 1j * rng.normal(size=100_000)
    w = rng.normal(size=100_000) + 1j * rng.normal(size=100_000)
    assert np.max(np.abs(np.abs(kernel_hol_plane(z, w)) - 1 / FOUR_PI)) < 1e-15


def test_alpha_examples():
    assert kernel_alpha_plane(1, 0, math.pi / 2) == pytest.approx(1 / FOUR_PI)
    assert kernel_alpha_plane(1, 0, math.pi / 4) == pytest.approx((1 + 1j) * math.sqrt(2) / 2 / FOUR_PI)
    assert kernel_alpha_plane(1j, 0, math.pi / 2) == pytest.approx(-1 / FOUR_PI)


def test_alpha_half_pi_is_holomorphic():
    rng = np.random.default_rng(4)
    z = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    w = rng.normal(size=1000) + 1j * rng.normal(size=1000)
    assert np.allclose(kernel_alpha_plane(z, w, math.pi / 2), kernel_hol_plane(z, w), atol=1e-16, rtol=1e-14)


def test_alpha_light_cone():
    with pytest.raises(LightConeSingularity):
        kernel_alpha_plane(0.0, 0.0, 0.3)
    with pytest.raises(ValueError):
        kernel_alpha_plane(1, 0, 0.0)


def _richardson(values, eps):
    w = np.ones(len(eps))
    for i in range(len(eps)):
        for j in range(len(eps)):
            if i != j:
                w[i] *= eps[j] / (eps[j] - eps[i])
    return np.dot(w, values)


def test_wml_off_light_cone_limit():
    eps = [1e-2, 1e-3, 1e-4]
    vals = [kernel_wml_plane(1j, 0, e) for e in eps]
    assert _richardson(vals, eps) == pytest.approx(-1j / FOUR_PI, abs=1e-9)


def test_wml_vanishes_when_minus_component_vanishes():
    # x0 = x1 makes x_- = 0
    for e in (1e-1, 1e-6):
        assert kernel_wml_plane(1 + 1j, 0, e) == 0


def test_wml_matches_alpha_limit_off_light_cone():
    sep = 0.3 + 1.1j
    wml = _richardson([kernel_wml_plane(sep, 0, e) for e in (1e-2, 1e-3, 1e-4)], [1e-2, 1e-3, 1e-4])
    al = _richardson([kernel_alpha_plane(sep, 0, a) for a in (0.1, 0.05, 0.01)], [0.1, 0.05, 0.01])
    assert al == pytest.approx(wml, abs=1e-6)
    gaps = [abs(kernel_wml_plane(sep, 0, e) - kernel_alpha_plane(sep, 0, a))
            for e, a in ((1e-2, 0.1), (1e-3, 0.01), (1e-4, 0.001))]
    assert gaps[0] > gaps[1] > gaps[2]


def test_sphere_examples():
    assert kernel_hol_sphere_round(1, 0) == pytest.approx(1 / (2 * math.pi))
    assert kernel_hol_sphere_round(1j, 0) == pytest.approx(-1 / (2 * math.pi))
    assert kernel_hol_sphere_round(1, 0, hat=True) == pytest.approx(1 / (2 * math.pi) / FOUR_PI)


def test_sphere_overflow_and_coincident():
    with pytest.raises(ChartOverflow):
        kernel_hol_sphere_round(1e7, 0)
    with pytest.raises(Coincident):
        kernel_hol_sphere_round(0.2, 0.2)


@pytest.mark.parametrize("r", [10.0, 100.0, 1000.0])
def test_sphere_decompactifies_to_plane(r):
    # chart radius r with c = A/(4 pi r^2) = 1/4
    z, w = 0.3 + 0.4j, -0.2 + 0.1j
    k = kernel_hol_sphere_round(z, w, total_area=math.pi * r * r, radius=r)
    assert abs(k - kernel_hol_plane(z, w)) < 2.0 / r**2


def test_plus_components():
    t = 0.6 - 0.8j
    assert plus_component(t, GaugeChoice("hol")) == t
    assert plus_component(t, GaugeChoice("alpha", alpha=math.pi / 2)) == pytest.approx(t)
    assert plus_component(t, GaugeChoice("wml", epsilon=0.1)) == pytest.approx(0.6 - 0.8)


def test_parse_gauge():
    assert parse_gauge("hol").is_holomorphic
    g = parse_gauge("alpha:0.5")
    assert g.kind == "alpha" and g.alpha == 0.5
    w = parse_gauge("wml:0.2,0.1,0.05")
    assert w.ladder == (0.2, 0.1, 0.05)
    assert parse_gauge("wml:1e-3").epsilon == 1e-3
    with pytest.raises(ValueError):
        parse_gauge("coulomb")
    with pytest.raises(ValueError):
        GaugeChoice("alpha", alpha=2.0)
    with pytest.raises(ValueError):
        GaugeChoice("wml", epsilon=0.0)


def test_kernel_surface_rules():
    with pytest.raises(Unsupported):
        PropagatorKernel(RoundSphere(), parse_gauge("alpha:0.5"))
    with pytest.raises(ValueError):
        PropagatorKernel(Plane(), parse_gauge("hol"), hat=True)
    dens = DensityPlane.from_expr("1", 1.0)
    with pytest.raises(Unsupported):
        PropagatorKernel(dens, parse_gauge("hol"))


complexes = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(complexes, complexes, st.floats(0.05, math.pi / 2), st.floats(1e-4, 1.0))
def test_every_kernel_is_symmetric(z, w, alpha, eps):
    if abs(z - w) < 1e-6:
        return
    assert kernel_hol_plane(z, w) == pytest.approx(kernel_hol_plane(w, z), rel=1e-12)
    try:
        a = kernel_alpha_plane(z, w, alpha, tol=1e-9)
    except LightConeSingularity:
        return
    assert a == pytest.approx(kernel_alpha_plane(w, z, alpha), rel=1e-12)
    assert kernel_wml_plane(z, w, eps) == pytest.approx(kernel_wml_plane(w, z, eps), rel=1e-12)
    assert kernel_hol_sphere_round(z, w) == pytest.approx(kernel_hol_sphere_round(w, z), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, math.pi / 2))
def test_alpha_family_is_continuous(alpha):
    rng = np.random.default_rng(5)
    sep = rng.normal(size=200) + 1j * rng.normal(size=200)
    d1 = np.max(np.abs(kernel_alpha_plane(sep, 0, alpha) - kernel_alpha_plane(sep, 0, alpha - 1e-4)))
    d2 = np.max(np.abs(kernel_alpha_plane(sep, 0, alpha) - kernel_alpha_plane(sep, 0, alpha - 1e-6)))
    assert d2 < d1 and d2 < 1e-3
