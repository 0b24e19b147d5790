"""Finite sets and partial maps.

Objects are the standard finite sets [n] = {1, ..., n} ([0] is empty).
Morphisms are partial maps with an explicit domain of definition, stored
as sorted assignment tables so that equality and serialization are exact.
Partial bijections are the injective ones; they carry a transpose.

Everything downstream indexes its element carriers by these maps, so the
conventions here (1-based points, tables sorted by key, fibers listed in
ascending order) are load-bearing for the whole package.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass
from functools import cached_property
from itertools import product as _iproduct
from typing import Iterator, Sequence

__all__ = [
    "FinSet",
    "PartialMap",
    "PartialBijection",
    "PullbackSquare",
    "pmap",
    "pbij",
    "identity",
    "empty_map",
    "total_to_point",
    "inclusion",
    "compose",
    "transpose",
    "pullback",
    "fiber_shapes",
    "leq",
    "quotient",
    "general_quotient",
    "sub_pmap",
    "all_pmaps",
    "all_pbijections",
    "random_pmap",
    "random_pbijection",
    "format_pmap",
    "parse_pmap",
]


@dataclass(frozen=True, order=True)
class FinSet:
    """The set {1, ..., size}; size 0 is the empty set."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 0:
            raise ValueError("FinSet size must be >= 0")

    def __iter__(self) -> Iterator[int]:
        return iter(range(1, self.size + 1))

    def __contains__(self, x: object) -> bool:
        return isinstance(x, int) and 1 <= x <= self.size

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"[{self.size}]"


@dataclass(frozen=True, eq=False)
class PartialMap:
    """A partial map source -> target given by a sorted assignment table.

    graph is a tuple of (x, f(x)) pairs, one per point of the domain of
    definition, sorted by x.  Compared structurally, so a PartialBijection
    equals the PartialMap with the same table.
    """

    source: FinSet
    target: FinSet
    graph: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for x, y in self.graph:
            if x not in self.source:
                raise ValueError(f"domain point {x} outside {self.source}")
            if y not in self.target:
                raise ValueError(f"value {y} outside {self.target}")
            if x in seen:
                raise ValueError(f"assignment not single-valued at {x}")
            seen.add(x)
        object.__setattr__(self, "graph", tuple(sorted(self.graph)))

    # -- structural identity ------------------------------------------------
    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PartialMap):
            return NotImplemented
        return (
            self.source == other.source
            and self.target == other.target
            and self.graph == other.graph
        )

    def __hash__(self) -> int:
        return hash((self.source, self.target, self.graph))

    # -- evaluation ---------------------------------------------------------
    @cached_property
    def _table(self) -> dict[int, int]:
        return dict(self.graph)

    def __call__(self, x: int) -> int | None:
        return self._table.get(x)

    @cached_property
    def domain(self) -> tuple[int, ...]:
        return tuple(x for x, _ in self.graph)

    @cached_property
    def image(self) -> tuple[int, ...]:
        return tuple(sorted({y for _, y in self.graph}))

    def fiber(self, y: int) -> tuple[int, ...]:
        return tuple(x for x, v in self.graph if v == y)

    @cached_property
    def fibers(self) -> tuple[tuple[int, tuple[int, ...]], ...]:
        by_y: dict[int, list[int]] = {}
        for x, y in self.graph:
            by_y.setdefault(y, []).append(x)
        return tuple((y, tuple(sorted(by_y[y]))) for y in sorted(by_y))

    def is_total(self) -> bool:
        return len(self.graph) == self.source.size

    def is_injective(self) -> bool:
        return len({y for _, y in self.graph}) == len(self.graph)

    def restrict(self, points: Sequence[int]) -> "PartialMap":
        keep = set(points)
        return PartialMap(
            self.source,
            self.target,
            tuple((x, y) for x, y in self.graph if x in keep),
        )

    def as_bijection(self) -> "PartialBijection":
        return PartialBijection(self.source, self.target, self.graph)

    def __repr__(self) -> str:
        return format_pmap(self)


class PartialBijection(PartialMap):
    """A partial map that is injective on its domain."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.is_injective():
            raise ValueError("assignment not injective; not a partial bijection")


@dataclass(frozen=True)
class PullbackSquare:
    """The fiber product of g: Z->Y and f: X->Y.

    apex = {(z, x) in D(g) x D(f) : g(z) = f(x)}, relabelled to [m] in
    lexicographic (z, x) order.  to_left sends a pair to its z, to_right
    to its x; both are total on the apex.  The lexicographic order makes
    each apex fiber order-isomorphic to the original fiber it identifies
    with, so fibered payloads transfer verbatim.
    """

    g: PartialMap
    f: PartialMap
    apex: FinSet
    pairs: tuple[tuple[int, int], ...]
    to_left: PartialMap
    to_right: PartialMap


# -- constructors -----------------------------------------------------------

def pmap(m: int, n: int, table: dict[int, int] | Sequence[tuple[int, int]]) -> PartialMap:
    items = table.items() if isinstance(table, dict) else table
    return PartialMap(FinSet(m), FinSet(n), tuple(items))


def pbij(m: int, n: int, table: dict[int, int] | Sequence[tuple[int, int]]) -> PartialBijection:
    items = table.items() if isinstance(table, dict) else table
    return PartialBijection(FinSet(m), FinSet(n), tuple(items))


def identity(n: int) -> PartialBijection:
    return PartialBijection(FinSet(n), FinSet(n), tuple((x, x) for x in range(1, n + 1)))


def empty_map(m: int, n: int) -> PartialMap:
    return PartialMap(FinSet(m), FinSet(n), ())


def total_to_point(m: int) -> PartialMap:
    """The total map [m] -> [1]."""
    return PartialMap(FinSet(m), FinSet(1), tuple((x, 1) for x in range(1, m + 1)))


def inclusion(points: Sequence[int], n: int) -> PartialBijection:
    """The subset {points} of [n] included via its rank order: [k] -> [n]."""
    pts = sorted(points)
    return PartialBijection(
        FinSet(len(pts)), FinSet(n), tuple((i + 1, p) for i, p in enumerate(pts))
    )


# -- categorical structure ----------------------------------------------------

def compose(g: PartialMap, f: PartialMap) -> PartialMap:
    if f.target != g.source:
        raise ValueError(f"cannot compose: {f.target} != {g.source}")
    graph = []
    for x, y in f.graph:
        z = g(y)
        if z is not None:
            graph.append((x, z))
    cls = PartialBijection if isinstance(g, PartialBijection) and isinstance(f, PartialBijection) else PartialMap
    return cls(f.source, g.target, tuple(graph))


def transpose(f: PartialMap) -> PartialBijection:
    if not f.is_injective():
        raise ValueError("transpose requires a partial bijection")
    return PartialBijection(f.target, f.source, tuple((y, x) for x, y in f.graph))


def pullback(g: PartialMap, f: PartialMap) -> PullbackSquare:
    if g.target != f.target:
        raise ValueError(f"pullback needs a common target: {g.target} != {f.target}")
    pairs = tuple(
        sorted((z, x) for z in g.domain for x in f.domain if g(z) == f(x))
    )
    apex = FinSet(len(pairs))
    to_left = PartialMap(apex, g.source, tuple((i + 1, z) for i, (z, _) in enumerate(pairs)))
    to_right = PartialMap(apex, f.source, tuple((i + 1, x) for i, (_, x) in enumerate(pairs)))
    return PullbackSquare(g=g, f=f, apex=apex, pairs=pairs, to_left=to_left, to_right=to_right)


def fiber_shapes(f: PartialMap) -> list[tuple[int, FinSet]]:
    """The (y, fiber size) index of a fibered carrier, y ascending over f(X)."""
    return [(y, FinSet(len(xs))) for y, xs in f.fibers]


# -- the partial order and quotients ------------------------------------------

def leq(f: PartialMap, g: PartialMap) -> bool:
    """f <= g iff g extends f."""
    if f.source != g.source or f.target != g.target:
        return False
    return all(g(x) == y for x, y in f.graph)


def quotient(h: PartialMap, f: PartialMap) -> PartialMap:
    """The minimal g with h <= g . f, defined on f(D(h)).

    Requires D(h) inside D(f) and that f separates the fibers of h.
    """
    if h.source != f.source:
        raise ValueError("quotient needs a common source")
    table: dict[int, int] = {}
    for x, z in h.graph:
        y = f(x)
        if y is None:
            raise ValueError(f"no quotient: point {x} undefined under the divisor")
        if table.setdefault(y, z) != z:
            raise ValueError(f"no quotient: divisor merges distinct values at {y}")
    return PartialMap(f.target, h.target, tuple(table.items()))


def general_quotient(h: PartialMap, f: PartialMap) -> PartialMap | None:
    """The quotient h/f without the domain-containment requirement.

    Defined on f(D(h) & D(f)); exists iff f keeps distinct h-fibers
    disjoint, i.e. f(h^{-1}(z1)) and f(h^{-1}(z2)) never meet for z1 != z2.
    """
    if h.source != f.source:
        raise ValueError("quotient needs a common source")
    table: dict[int, int] = {}
    for x, z in h.graph:
        y = f(x)
        if y is None:
            continue
        if table.setdefault(y, z) != z:
            return None
    return PartialMap(f.target, h.target, tuple(table.items()))


def sub_pmap(f: PartialMap, dom_points: Sequence[int], cod_points: Sequence[int]) -> PartialMap:
    """f restricted to given source/target subsets, both relabelled by rank.

    Requires f to map the chosen source points nowhere or into cod_points.
    Used to slice fibered data into per-fiber pieces without disturbing the
    ascending-order identification of points.
    """
    dom = sorted(dom_points)
    cod = sorted(cod_points)
    dpos = {p: i + 1 for i, p in enumerate(dom)}
    cpos = {p: i + 1 for i, p in enumerate(cod)}
    graph = []
    for x in dom:
        y = f(x)
        if y is None:
            continue
        if y not in cpos:
            raise ValueError(f"value {y} escapes the chosen codomain subset")
        graph.append((dpos[x], cpos[y]))
    return PartialMap(FinSet(len(dom)), FinSet(len(cod)), tuple(graph))


# -- enumeration and sampling --------------------------------------------------

def all_pmaps(m: int, n: int) -> Iterator[PartialMap]:
    """All (n+1)^m partial maps [m] -> [n]; value 0 encodes 'undefined'."""
    for assign in _iproduct(range(n + 1), repeat=m):
        yield PartialMap(
            FinSet(m), FinSet(n), tuple((i + 1, v) for i, v in enumerate(assign) if v)
        )


def all_pbijections(m: int, n: int) -> Iterator[PartialBijection]:
    for f in all_pmaps(m, n):
        if f.is_injective():
            yield f.as_bijection()


def random_pmap(rng: random.Random, m: int, n: int, defined_bias: float = 0.7) -> PartialMap:
    graph = []
    for x in range(1, m + 1):
        if n > 0 and rng.random() < defined_bias:
            graph.append((x, rng.randint(1, n)))
    return PartialMap(FinSet(m), FinSet(n), tuple(graph))


def random_pbijection(rng: random.Random, m: int, n: int, defined_bias: float = 0.7) -> PartialBijection:
    targets = list(range(1, n + 1))
    rng.shuffle(targets)
    graph = []
    for x in range(1, m + 1):
        if targets and rng.random() < defined_bias:
            graph.append((x, targets.pop()))
    return PartialBijection(FinSet(m), FinSet(n), tuple(graph))


# -- text form ------------------------------------------------------------------

_PMAP_RE = re.compile(
    r"^pmap \[(\d+)\]->\[(\d+)\] \{([^}]*)\}$"
)


def format_pmap(f: PartialMap) -> str:
    body = ", ".join(f"{x}>{y}" for x, y in f.graph)
    return f"pmap [{f.source.size}]->[{f.target.size}] {{{body}}}"


def parse_pmap(text: str) -> PartialMap:
    m = _PMAP_RE.match(text.strip())
    if not m:
        raise ValueError(f"not a pmap literal: {text!r}")
    src, tgt, body = int(m.group(1)), int(m.group(2)), m.group(3).strip()
    graph: list[tuple[int, int]] = []
    if body:
        for item in body.split(","):
            k, _, v = item.strip().partition(">")
            graph.append((int(k), int(v)))
    keys = [k for k, _ in graph]
    if keys != sorted(keys):
        raise ValueError("pmap keys must be ascending")
    return PartialMap(FinSet(src), FinSet(tgt), tuple(graph))
