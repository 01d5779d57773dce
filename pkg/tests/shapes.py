"""Contours shared by the unit and acceptance tests."""
from __future__ import annotations

import numpy as np

from wll.geometry import check_simple, circle, ellipse, perturbed_circle, polygon, rounded_square


def standard_three():
    """Unit circle, ellipse (2, 1) and the rounded unit square."""
    return {"circle": circle(0, 1), "ellipse": ellipse(2.0, 1.0), "rounded_square": rounded_square(1.0, 0.1)}


def random_simple_contours(rng: np.random.Generator, count: int):
    """Alternates Fourier-perturbed circles and rounded random quadrilaterals,
    each checked to be simple and to contain the origin comfortably."""
    out = []
    while len(out) < count:
        if len(out) % 2 == 0:
            modes = {int(k): complex(*rng.normal(scale=0.06, size=2)) for k in rng.choice([-2, 2, 3, 4], 2, replace=False)}
            c = perturbed_circle(modes, radius=float(rng.uniform(0.8, 1.5)))
        else:
            ang = np.linspace(0, 2 * np.pi, 5)[:-1] + rng.uniform(-0.3, 0.3, 4)
            rad = rng.uniform(0.9, 1.4, 4)
            c = polygon(list(rad * np.exp(1j * ang)), corner_rounding=0.15)
        check_simple(c)
        if c.distance(np.array([0j]))[0] > 0.3:
            out.append(c)
    return out
