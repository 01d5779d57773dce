"""Orthonormal bases of u(N), su(N), so(N) and Lie algebraic factors of diagrams.

Conventions: basis elements are antihermitian N x N matrices, orthonormal for
``<X, Y> = -tr(X Y)``.  Casimir numbers are therefore negative.

Basis ordering (reproducible across runs):

1. for each ``j < k`` in lexicographic order, ``i (E_jk + E_kj)/sqrt2`` (U, SU only)
   followed by ``(E_jk - E_kj)/sqrt2``;
2. diagonal elements: ``i E_jj`` for U, the generalised Gell-Mann ``i H_m``
   (``m = 1..N-1``) for SU, none for SO.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .diagrams import FeynmanDiagram
from .errors import CapExceeded, NotScalar, UnsupportedGroup

MAX_LIE_ORDER = 4
MAX_N = 6


@dataclass(frozen=True)
class GroupSpec:
    family: str
    n: int

    def __post_init__(self):
        fam = self.family.upper()
        object.__setattr__(self, "family", fam)
        if fam not in ("U", "SU", "SO"):
            raise UnsupportedGroup(f"unsupported family {self.family!r}")
        if self.n < 1 or (fam == "SO" and self.n < 3) or (fam == "SU" and self.n < 2):
            raise UnsupportedGroup(f"{fam}({self.n}) is not supported")

    @property
    def dim(self) -> int:
        n = self.n
        return {"U": n * n, "SU": n * n - 1, "SO": n * (n - 1) // 2}[self.family]

    def __str__(self) -> str:
        return f"{self.family}({self.n})"


def parse_group(text: str) -> GroupSpec:
    """``u:N`` | ``su:N`` | ``so:N``."""
    fam, _, n = text.partition(":")
    try:
        return GroupSpec(fam, int(n))
    except ValueError as exc:
        raise UnsupportedGroup(f"cannot parse group {text!r}") from exc


@dataclass(frozen=True)
class LieAlgebraBasis:
    group: GroupSpec
    elements: np.ndarray  # shape (dim, N, N)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def n(self) -> int:
        return self.group.n

    def gram(self) -> np.ndarray:
        """``-tr(e_a e_b)``."""
        return -np.einsum("aij,bji->ab", self.elements, self.elements)

    def rotated(self, orthogonal: np.ndarray) -> "LieAlgebraBasis":
        """Basis ``e'_a = sum_b O_ab e_b`` for a real orthogonal ``O``."""
        return LieAlgebraBasis(self.group, np.einsum("ab,bij->aij", orthogonal, self.elements))


@lru_cache(maxsize=None)
def build_basis(g: GroupSpec) -> LieAlgebraBasis:
    n = g.n
    if n > MAX_N:
        raise CapExceeded(f"N={n} exceeds the basis cap {MAX_N}")
    mats = []
    r2 = math.sqrt(2.0)
    for j in range(n):
        for k in range(j + 1, n):
            if g.family in ("U", "SU"):
                m = np.zeros((n, n), dtype=complex)
                m[j, k] = m[k, j] = 1j / r2
                mats.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[j, k], m[k, j] = 1 / r2, -1 / r2
            mats.append(m)
    if g.family == "U":
        for j in range(n):
            m = np.zeros((n, n), dtype=complex)
            m[j, j] = 1j
            mats.append(m)
    elif g.family == "SU":
        for mm in range(1, n):
            diag = np.zeros(n)
            diag[:mm] = 1.0
            diag[mm] = -mm
            mats.append(np.diag(1j * diag / math.sqrt(mm * (mm + 1))))
    elems = np.array(mats, dtype=complex).reshape(-1, n, n)
    elems.setflags(write=False)
    basis = LieAlgebraBasis(g, elems)
    if basis.dim != g.dim:
        raise AssertionError("dimension mismatch in basis construction")
    return basis


@dataclass(frozen=True)
class CasimirData:
    c_fundamental: float
    c_adjoint: float | None  # None for U(N): its adjoint representation is reducible


def casimirs(b: LieAlgebraBasis, tol: float = 1e-10) -> CasimirData:
    e = b.elements
    n = b.n
    s = np.einsum("aij,ajk->ik", e, e)
    cf = np.trace(s).real / n
    if np.max(np.abs(s - cf * np.eye(n))) > tol:
        raise NotScalar("sum_a e_a e_a is not a multiple of the identity")
    if b.group.family == "U":
        return CasimirData(float(cf), None)
    ad2 = np.zeros_like(e)
    for a in range(b.dim):
        inner = np.einsum("ij,bjk->bik", e[a], e) - np.einsum("bij,jk->bik", e, e[a])
        ad2 += np.einsum("ij,bjk->bik", e[a], inner) - np.einsum("bij,jk->bik", inner, e[a])
    # least-squares fit of ad2 = C_A * e over the whole basis
    ca = np.vdot(e.ravel(), ad2.ravel()).real / np.vdot(e.ravel(), e.ravel()).real
    if np.max(np.abs(ad2 - ca * e)) > tol:
        raise NotScalar("adjoint Casimir is not a scalar on this basis")
    return CasimirData(float(cf), float(ca))


def observable_trace(m) -> complex:
    """Normalised fundamental trace ``tr(m) / N``."""
    m = np.asarray(m)
    return complex(np.trace(m, axis1=-2, axis2=-1) / m.shape[-1]) if m.ndim == 2 else \
        np.trace(m, axis1=-2, axis2=-1) / m.shape[-1]


def lie_factor(d: FeynmanDiagram, b: LieAlgebraBasis, max_order: int = MAX_LIE_ORDER,
               imag_tol: float = 1e-10) -> complex:
    """``sum delta...delta (1/N) tr(e_{a_2n} ... e_{a_1})`` over index assignments
    respecting the matching.

    The sum is carried out exactly as one tensor contraction; its cost grows
    like ``dim^n``, hence the order cap.
    """
    n = d.n
    if n > max_order:
        raise CapExceeded(f"order {n} exceeds lie_factor cap {max_order}")
    if n == 0:
        return 1.0 + 0j
    letters = iter(string.ascii_letters)
    lie_idx = {}
    for a, bb in d.pairs:
        lie_idx[a] = lie_idx[bb] = next(letters)
    mat_idx = [next(letters) for _ in range(2 * n)]
    terms = []
    # product e_{a_2n} e_{a_2n-1} ... e_{a_1}; matrix index k links neighbours
    for pos, slot in enumerate(range(2 * n, 0, -1)):
        row = mat_idx[pos]
        col = mat_idx[(pos + 1) % (2 * n)]
        terms.append(lie_idx[slot] + row + col)
    expr = ",".join(terms) + "->"
    val = complex(np.einsum(expr, *([b.elements] * (2 * n)), optimize="optimal")) / b.n
    if abs(val.imag) > imag_tol * max(1.0, abs(val)):
        raise AssertionError(f"lie factor {val} has a non-negligible imaginary part")
    return val
