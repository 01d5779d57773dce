"""Feynman diagrams as perfect matchings of 2n insertion points, and their
orbits under cyclic rotation of the points.

Insertion points are labelled 1..2n.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import BadMatching, CapExceeded, InconsistentInput

DEFAULT_CAP = 6


@dataclass(frozen=True, order=True)
class FeynmanDiagram:
    """Sorted tuple of sorted pairs partitioning {1..2n}."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted(tuple(sorted(p)) for p in self.pairs))
        object.__setattr__(self, "pairs", pairs)
        labels = sorted(i for p in pairs for i in p)
        if labels != list(range(1, 2 * len(pairs) + 1)) or any(len(p) != 2 for p in pairs):
            raise BadMatching(f"{self.pairs} is not a perfect matching of 1..{2 * len(pairs)}")

    @property
    def n(self) -> int:
        return len(self.pairs)

    def rotate(self, k: int = 1) -> "FeynmanDiagram":
        """Relabel ``i -> ((i - 1 + k) mod 2n) + 1``."""
        m = 2 * self.n
        return FeynmanDiagram(tuple(((a - 1 + k) % m + 1, (b - 1 + k) % m + 1)
                                    for a, b in self.pairs))

    def partner(self) -> list[int]:
        """0-based partner index for each 0-based slot."""
        out = [0] * (2 * self.n)
        for a, b in self.pairs:
            out[a - 1], out[b - 1] = b - 1, a - 1
        return out

    def __str__(self) -> str:
        return "".join(f"({a},{b})" for a, b in self.pairs) or "()"


def parse_diagram(text: str) -> FeynmanDiagram:
    """Parse ``"(1,2)(3,4)"``; the empty string or ``"()"`` is the n = 0 diagram."""
    body = text.replace(" ", "")
    if body in ("", "()"):
        return FeynmanDiagram(())
    if not (body.startswith("(") and body.endswith(")")):
        raise BadMatching(f"cannot parse diagram {text!r}")
    pairs = []
    for chunk in body[1:-1].split(")("):
        a, b = chunk.split(",")
        pairs.append((int(a), int(b)))
    return FeynmanDiagram(tuple(pairs))


def _matchings(labels: list[int]):
    if not labels:
        yield ()
        return
    first, rest = labels[0], labels[1:]
    for i, other in enumerate(rest):
        for tail in _matchings(rest[:i] + rest[i + 1:]):
            yield ((first, other),) + tail


def enumerate_matchings(n: int, cap: int = DEFAULT_CAP) -> list[FeynmanDiagram]:
    """All (2n-1)!! matchings of {1..2n}, in lexicographic order of their pairs."""
    if n < 0:
        raise ValueError("order must be non-negative")
    if n > cap:
        raise CapExceeded(f"order {n} exceeds cap {cap}")
    return sorted(FeynmanDiagram(m) for m in _matchings(list(range(1, 2 * n + 1))))


@dataclass(frozen=True)
class CyclicClass:
    representative: FeynmanDiagram
    members: tuple[FeynmanDiagram, ...]

    @property
    def orbit_size(self) -> int:
        return len(self.members)


def cyclic_classes(ds: list[FeynmanDiagram]) -> list[CyclicClass]:
    """Partition a complete enumeration into rotation orbits.

    Representatives are the lexicographically least members; classes are
    ordered by representative.
    """
    if not ds:
        raise InconsistentInput("empty diagram list")
    n = ds[0].n
    given = set(ds)
    if len(given) != len(ds) or given != set(enumerate_matchings(n, cap=max(n, DEFAULT_CAP))):
        raise InconsistentInput(f"input is not the complete set of order-{n} matchings")
    seen: set[FeynmanDiagram] = set()
    classes = []
    for d in sorted(ds):
        if d in seen:
            continue
        orbit = {d.rotate(k) for k in range(max(1, 2 * n))}
        seen |= orbit
        members = tuple(sorted(orbit))
        classes.append(CyclicClass(members[0], members))
    return classes


def classes_of_order(n: int, cap: int = DEFAULT_CAP) -> list[CyclicClass]:
    return cyclic_classes(enumerate_matchings(n, cap))
