"""The concrete models.

Four families, all commutative:

  * the initial model: carriers are the pointed sets X | {0}, operations
    pick points along fibers;
  * vector models over a commutative semiring, with coordinatewise
    multiplication against fibers and fiberwise sums for contraction;
  * the real integers site: rational vectors in the unit ball, closed
    under both operations by Cauchy-Schwarz, with its maximal ideal and
    residue field;
  * monoid rings: one monoid element riding on one chosen point, with the
    involution acting on contraction.

Plus finite quotients by equivalence ideals (congruence closure).
"""

from __future__ import annotations

import random
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product as _iproduct
from typing import Any, Callable, Iterator, Sequence

from .core import (
    Element,
    FiberedElement,
    GenRing,
    Homomorphism,
    contract as _contract_op,
    fibered as _fibered_op,
    functor_map,
    mul as _mul_op,
    transpose_elt,
)
from .fcat import FinSet, PartialMap, all_pmaps, identity as _identity, pbij

__all__ = [
    "SemiringSpec",
    "check_semiring",
    "NAT",
    "INT",
    "RAT",
    "NONNEG_RAT",
    "TROPICAL_NAT",
    "zmod",
    "make_F",
    "make_G",
    "make_Oeta",
    "norm_sq",
    "ideal_membership",
    "residue_field_Oeta",
    "residue_projection",
    "Monoid",
    "TableMonoid",
    "PowerMonoid",
    "LaurentMonoid",
    "LadderMonoid",
    "sign_monoid",
    "make_monoid_ring",
    "f_to_ring",
    "g_hom",
    "hom_from_monoid_map",
    "monoid_hom_candidates",
    "finite_quotient",
    "quotient_monoid",
]


# == semirings ==================================================================

@dataclass(frozen=True)
class SemiringSpec:
    """A commutative semiring given by its operations on python values.

    values must be hashable; zero may be a sentinel (tropical uses None
    for the additively neutral minus-infinity).
    """

    name: str
    key: tuple
    zero: Any
    one: Any
    add: Callable[[Any, Any], Any]
    mul: Callable[[Any, Any], Any]
    sample: Callable[[random.Random], Any]
    fmt: Callable[[Any], str]
    parse: Callable[[str], Any]
    validate: Callable[[Any], bool]
    carrier: tuple | None = None  # finite carriers only


def check_semiring(spec: SemiringSpec, trials: int = 200, seed: int = 0) -> None:
    """Randomized check of the commutative-semiring laws; raises on failure."""
    rng = random.Random(seed)
    for _ in range(trials):
        a, b, c = (spec.sample(rng) for _ in range(3))
        if spec.add(a, b) != spec.add(b, a):
            raise ValueError(f"{spec.name}: addition not commutative at {a},{b}")
        if spec.add(spec.add(a, b), c) != spec.add(a, spec.add(b, c)):
            raise ValueError(f"{spec.name}: addition not associative")
        if spec.add(a, spec.zero) != a:
            raise ValueError(f"{spec.name}: zero not neutral at {a}")
        if spec.mul(a, b) != spec.mul(b, a):
            raise ValueError(f"{spec.name}: product not commutative at {a},{b}")
        if spec.mul(spec.mul(a, b), c) != spec.mul(a, spec.mul(b, c)):
            raise ValueError(f"{spec.name}: product not associative")
        if spec.mul(a, spec.one) != a:
            raise ValueError(f"{spec.name}: one not neutral at {a}")
        if spec.mul(a, spec.zero) != spec.zero:
            raise ValueError(f"{spec.name}: zero not absorbing at {a}")
        lhs = spec.mul(a, spec.add(b, c))
        rhs = spec.add(spec.mul(a, b), spec.mul(a, c))
        if lhs != rhs:
            raise ValueError(f"{spec.name}: distributivity fails at {a},{b},{c}")


def _parse_frac(s: str) -> Fraction:
    return Fraction(s)


NAT = SemiringSpec(
    name="N",
    key=("semiring", "N"),
    zero=0,
    one=1,
    add=lambda a, b: a + b,
    mul=lambda a, b: a * b,
    sample=lambda rng: rng.randint(0, 6),
    fmt=str,
    parse=int,
    validate=lambda v: isinstance(v, int) and v >= 0,
)

INT = SemiringSpec(
    name="Z",
    key=("semiring", "Z"),
    zero=0,
    one=1,
    add=lambda a, b: a + b,
    mul=lambda a, b: a * b,
    sample=lambda rng: rng.randint(-5, 5),
    fmt=str,
    parse=int,
    validate=lambda v: isinstance(v, int),
)

RAT = SemiringSpec(
    name="Q",
    key=("semiring", "Q"),
    zero=Fraction(0),
    one=Fraction(1),
    add=lambda a, b: a + b,
    mul=lambda a, b: a * b,
    sample=lambda rng: Fraction(rng.randint(-6, 6), rng.randint(1, 4)),
    fmt=lambda v: str(Fraction(v)),
    parse=_parse_frac,
    validate=lambda v: isinstance(v, Fraction),
)

NONNEG_RAT = SemiringSpec(
    name="Q+",
    key=("semiring", "Q+"),
    zero=Fraction(0),
    one=Fraction(1),
    add=lambda a, b: a + b,
    mul=lambda a, b: a * b,
    sample=lambda rng: Fraction(rng.randint(0, 6), rng.randint(1, 4)),
    fmt=lambda v: str(Fraction(v)),
    parse=_parse_frac,
    validate=lambda v: isinstance(v, Fraction) and v >= 0,
)


def _trop_add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return max(a, b)


def _trop_mul(a, b):
    if a is None or b is None:
        return None
    return a + b


TROPICAL_NAT = SemiringSpec(
    name="Nt",
    key=("semiring", "Nt"),
    zero=None,  # minus infinity
    one=0,
    add=_trop_add,
    mul=_trop_mul,
    sample=lambda rng: None if rng.random() < 0.15 else rng.randint(0, 6),
    fmt=lambda v: "-inf" if v is None else str(v),
    parse=lambda s: None if s == "-inf" else int(s),
    validate=lambda v: v is None or (isinstance(v, int) and v >= 0),
)


@lru_cache(maxsize=None)
def zmod(n: int) -> SemiringSpec:
    if n < 2:
        raise ValueError("modulus must be >= 2")
    return SemiringSpec(
        name=f"Z/{n}",
        key=("semiring", "Zmod", n),
        zero=0,
        one=1 % n,
        add=lambda a, b: (a + b) % n,
        mul=lambda a, b: (a * b) % n,
        sample=lambda rng: rng.randint(0, n - 1),
        fmt=str,
        parse=lambda s: int(s) % n,
        validate=lambda v: isinstance(v, int) and 0 <= v < n,
        carrier=tuple(range(n)),
    )


# == the initial model ==========================================================

class FModel(GenRing):
    """Carriers X | {0}; payload 0 for zero, or the chosen point of X."""

    name = "F"

    @property
    def key(self) -> tuple:
        return ("F",)

    def make(self, shape: FinSet, data: Any) -> Element:
        data = int(data)
        if data and data not in shape:
            raise ValueError(f"point {data} outside {shape}")
        return Element(self, shape, data)

    def zero(self, shape: FinSet) -> Element:
        return Element(self, shape, 0)

    def one(self) -> Element:
        return Element(self, FinSet(1), 1)

    def mul(self, a: Element, b: FiberedElement) -> Element:
        f = b.map
        y0 = a.data
        if not y0 or not f.fiber(y0):
            return self.zero(f.source)
        pick = b.component(y0).data
        if not pick:
            return self.zero(f.source)
        return Element(self, f.source, f.fiber(y0)[pick - 1])

    def contract(self, a: Element, b: FiberedElement) -> Element:
        f = b.map
        x0 = a.data
        if not x0 or f(x0) is None:
            return self.zero(f.target)
        y = f(x0)
        pick = b.component(y).data
        if not pick or f.fiber(y)[pick - 1] != x0:
            return self.zero(f.target)
        return Element(self, f.target, y)

    def sample(self, rng: random.Random, shape: FinSet) -> Element:
        return Element(self, shape, rng.randint(0, shape.size))

    def elements(self, shape: FinSet) -> Iterator[Element]:
        for v in range(shape.size + 1):
            yield Element(self, shape, v)

    def format_elt(self, a: Element) -> str:
        return "0" if not a.data else f"x:{a.data}"

    def parse_elt(self, text: str, shape: FinSet) -> Element:
        text = text.strip()
        if text == "0":
            return self.zero(shape)
        if not text.startswith("x:"):
            raise ValueError(f"not a point element: {text!r}")
        return self.make(shape, int(text[2:]))


_F_MODEL = FModel()


def make_F() -> FModel:
    return _F_MODEL


# == vector models over a semiring ===============================================

class GModel(GenRing):
    """Coordinate vectors over a commutative semiring.

    Multiplication against a fibered element scales each fiber by the
    coordinate over its image point; contraction sums products along
    each fiber.  Self-adjoint and commutative.
    """

    def __init__(self, spec: SemiringSpec):
        check_semiring(spec)
        self.spec = spec
        self.name = f"G({spec.name})"

    @property
    def key(self) -> tuple:
        return ("G", self.spec.key)

    def make(self, shape: FinSet, data: Sequence[Any]) -> Element:
        vals = tuple(data)
        if len(vals) != shape.size:
            raise ValueError(f"expected {shape.size} coordinates, got {len(vals)}")
        for v in vals:
            if not self.spec.validate(v):
                raise ValueError(f"coordinate {v!r} outside {self.spec.name}")
        return Element(self, shape, vals)

    def zero(self, shape: FinSet) -> Element:
        return Element(self, shape, (self.spec.zero,) * shape.size)

    def one(self) -> Element:
        return Element(self, FinSet(1), (self.spec.one,))

    def ones(self, shape: FinSet) -> Element:
        return Element(self, shape, (self.spec.one,) * shape.size)

    def mul(self, a: Element, b: FiberedElement) -> Element:
        f = b.map
        out = [self.spec.zero] * f.source.size
        for y, comp in b.by_image.items():
            ay = a.data[y - 1]
            for i, x in enumerate(f.fiber(y)):
                out[x - 1] = self.spec.mul(ay, comp.data[i])
        return Element(self, f.source, tuple(out))

    def contract(self, a: Element, b: FiberedElement) -> Element:
        f = b.map
        out = [self.spec.zero] * f.target.size
        for y, comp in b.by_image.items():
            acc = self.spec.zero
            for i, x in enumerate(f.fiber(y)):
                acc = self.spec.add(acc, self.spec.mul(a.data[x - 1], comp.data[i]))
            out[y - 1] = acc
        return Element(self, f.target, tuple(out))

    def sample(self, rng: random.Random, shape: FinSet) -> Element:
        return Element(self, shape, tuple(self.spec.sample(rng) for _ in shape))

    def elements(self, shape: FinSet) -> Iterator[Element]:
        if self.spec.carrier is None:
            raise NotImplementedError(f"{self.name} has infinite carriers")
        for vals in _iproduct(self.spec.carrier, repeat=shape.size):
            yield Element(self, shape, vals)

    def format_elt(self, a: Element) -> str:
        return "g[ " + ", ".join(self.spec.fmt(v) for v in a.data) + " ]"

    def parse_elt(self, text: str, shape: FinSet) -> Element:
        m = re.match(r"^g\[\s*(.*?)\s*\]$", text.strip())
        if not m:
            raise ValueError(f"not a vector element: {text!r}")
        body = m.group(1)
        vals = [self.spec.parse(p.strip()) for p in body.split(",")] if body else []
        return self.make(shape, vals)


@lru_cache(maxsize=None)
def _g_cached(spec: SemiringSpec) -> GModel:
    return GModel(spec)


def make_G(spec: SemiringSpec) -> GModel:
    return _g_cached(spec)


# == the real integers site ======================================================

def _vec_norm_sq(vals: Sequence[Fraction]) -> Fraction:
    return sum((v * v for v in vals), Fraction(0))


def norm_sq(a: Element) -> Fraction:
    """Exact squared euclidean norm of a rational-vector element."""
    return _vec_norm_sq(a.data)


class OEtaModel(GModel):
    """Rational vectors in the closed unit ball.

    Both operations stay inside the ball (contraction is the
    Cauchy-Schwarz inequality); construction rejects anything outside.
    """

    def __init__(self) -> None:
        super().__init__(RAT)
        self.name = "Oeta"

    @property
    def key(self) -> tuple:
        return ("Oeta",)

    def make(self, shape: FinSet, data: Sequence[Any]) -> Element:
        vals = tuple(Fraction(v) for v in data)
        elt = super().make(shape, vals)
        if _vec_norm_sq(vals) > 1:
            raise ValueError(f"vector outside the unit ball: {vals}")
        return elt

    def mul(self, a: Element, b: FiberedElement) -> Element:
        out = super().mul(a, b)
        assert _vec_norm_sq(out.data) <= 1
        return out

    def contract(self, a: Element, b: FiberedElement) -> Element:
        out = super().contract(a, b)
        assert _vec_norm_sq(out.data) <= 1
        return out

    def sample(self, rng: random.Random, shape: FinSet) -> Element:
        n = shape.size
        if n == 0:
            return self.zero(shape)
        roll = rng.random()
        if roll < 0.1:
            return self.zero(shape)
        if roll < 0.3:
            # a signed basis vector: exactly on the unit sphere
            vals = [Fraction(0)] * n
            vals[rng.randrange(n)] = Fraction(rng.choice((-1, 1)))
            return Element(self, shape, tuple(vals))
        vals = [Fraction(rng.randint(-8, 8), 8) for _ in range(n)]
        n2 = _vec_norm_sq(vals)
        if n2 > 1:
            # shrink by an integer factor to stay exact
            k = 1
            while n2 > k * k:
                k += 1
            vals = [v / k for v in vals]
        return Element(self, shape, tuple(vals))

    def parse_elt(self, text: str, shape: FinSet) -> Element:
        elt = super().parse_elt(text, shape)
        return self.make(shape, elt.data)  # re-validate membership


_OETA = OEtaModel()


def make_Oeta() -> OEtaModel:
    return _OETA


def ideal_membership(a: Element | Sequence[Any]) -> str:
    """Position of a rational vector relative to the unit sphere."""
    vals = a.data if isinstance(a, Element) else tuple(Fraction(v) for v in a)
    n2 = _vec_norm_sq(vals)
    if n2 > 1:
        return "outside"
    return "unit-sphere" if n2 == 1 else "interior"


class ResidueFieldOEta(GModel):
    """The residue field of the real integers site.

    Carriers are the unit-sphere vectors plus zero; any operation whose
    ball-model result falls strictly inside the sphere collapses to zero.
    """

    def __init__(self) -> None:
        super().__init__(RAT)
        self.name = "k(eta)"

    @property
    def key(self) -> tuple:
        return ("k_eta",)

    def make(self, shape: FinSet, data: Sequence[Any]) -> Element:
        vals = tuple(Fraction(v) for v in data)
        n2 = _vec_norm_sq(vals)
        if n2 > 1:
            raise ValueError(f"vector outside the unit ball: {vals}")
        if n2 < 1:
            return self.zero(shape)
        return Element(self, shape, vals)

    def _collapse(self, elt: Element) -> Element:
        if _vec_norm_sq(elt.data) < 1:
            return self.zero(elt.shape)
        return Element(self, elt.shape, elt.data)

    def mul(self, a: Element, b: FiberedElement) -> Element:
        return self._collapse(super().mul(a, b))

    def contract(self, a: Element, b: FiberedElement) -> Element:
        return self._collapse(super().contract(a, b))

    def sample(self, rng: random.Random, shape: FinSet) -> Element:
        raw = _OETA.sample(rng, shape)
        return self.make(shape, raw.data)

    def parse_elt(self, text: str, shape: FinSet) -> Element:
        elt = super().parse_elt(text, shape)
        return self.make(shape, elt.data)


_K_ETA = ResidueFieldOEta()


def residue_field_Oeta() -> ResidueFieldOEta:
    return _K_ETA


def residue_projection() -> Homomorphism:
    """The collapse-below-the-sphere projection from the ball model."""
    k = _K_ETA

    def proj(a: Element) -> Element:
        return k.make(a.shape, a.data)

    return Homomorphism(source=_OETA, target=k, map_elt=proj, name="pi_eta")


# == monoids with involution ======================================================

class Monoid(ABC):
    """A commutative monoid with zero and involution; payloads hashable."""

    name: str = "?"
    zero: Any = None
    one: Any = None

    @property
    @abstractmethod
    def key(self) -> tuple:
        ...

    @abstractmethod
    def mul(self, m1: Any, m2: Any) -> Any:
        ...

    @abstractmethod
    def inv(self, m: Any) -> Any:
        """The involution m -> m^t."""

    @abstractmethod
    def sample(self, rng: random.Random) -> Any:
        """A random element, zero excluded when one exists."""

    def elements(self) -> tuple:
        raise NotImplementedError(f"monoid {self.name} is infinite")

    def generators(self) -> tuple:
        """A multiplicative generating set (quotients start from here)."""
        return tuple(m for m in self.elements() if m != self.zero)

    @abstractmethod
    def fmt(self, m: Any) -> str:
        ...

    @abstractmethod
    def parse(self, word: str) -> Any:
        ...


class TableMonoid(Monoid):
    """A finite commutative monoid-with-zero given by name tables."""

    def __init__(
        self,
        names: Sequence[str],
        table: dict[tuple[str, str], str],
        invol: dict[str, str] | None = None,
        zero_name: str = "0",
        one_name: str = "1",
        monoid_name: str | None = None,
    ):
        names = tuple(names)
        if zero_name not in names or one_name not in names:
            raise ValueError("carrier must contain the zero and the one")
        self.names = names
        self.zero = zero_name
        self.one = one_name
        self.invol = dict(invol) if invol else {n: n for n in names}
        self.name = monoid_name or f"M{{{','.join(names)}}}"
        full: dict[tuple[str, str], str] = {}
        for a in names:
            full[(a, zero_name)] = zero_name
            full[(zero_name, a)] = zero_name
            full[(a, one_name)] = a
            full[(one_name, a)] = a
        for (a, b), c in table.items():
            full[(a, b)] = c
            full[(b, a)] = c
        self.table = full
        self._check()

    @property
    def key(self) -> tuple:
        return ("table_monoid", self.names, tuple(sorted(self.table.items())), tuple(sorted(self.invol.items())))

    def _check(self) -> None:
        ns = self.names
        for a, b in _iproduct(ns, ns):
            if (a, b) not in self.table:
                raise ValueError(f"product {a}*{b} missing from the table")
            if self.table[(a, b)] != self.table[(b, a)]:
                raise ValueError(f"table not commutative at {a},{b}")
        for a, b, c in _iproduct(ns, ns, ns):
            if self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c)):
                raise ValueError(f"table not associative at {a},{b},{c}")
        if set(self.invol) != set(ns):
            raise ValueError("involution table must cover the carrier")
        if self.invol[self.zero] != self.zero or self.invol[self.one] != self.one:
            raise ValueError("involution must fix zero and one")
        for a in ns:
            if self.invol[self.invol[a]] != a:
                raise ValueError(f"involution not an involution at {a}")
        for a, b in _iproduct(ns, ns):
            if self.invol[self.mul(a, b)] != self.mul(self.invol[a], self.invol[b]):
                raise ValueError(f"involution not multiplicative at {a},{b}")

    def mul(self, m1: str, m2: str) -> str:
        return self.table[(m1, m2)]

    def inv(self, m: str) -> str:
        return self.invol[m]

    def sample(self, rng: random.Random) -> str:
        nonzero = [n for n in self.names if n != self.zero]
        return rng.choice(nonzero) if nonzero else self.zero

    def elements(self) -> tuple:
        return self.names

    def fmt(self, m: str) -> str:
        return m

    def parse(self, word: str) -> str:
        if word not in self.names:
            raise ValueError(f"unknown monoid element {word!r}")
        return word


def sign_monoid() -> TableMonoid:
    return TableMonoid(
        ("0", "1", "-1"),
        {("-1", "-1"): "1"},
        monoid_name="signs",
    )


class PowerMonoid(Monoid):
    """Non-negative powers of one generator, trivial involution."""

    name = "z^N"
    zero = None
    one = 0

    @property
    def key(self) -> tuple:
        return ("power_monoid",)

    def mul(self, m1, m2):
        if m1 is None or m2 is None:
            return None
        return m1 + m2

    def inv(self, m):
        return m

    def generators(self) -> tuple:
        return (1,)

    def sample(self, rng: random.Random):
        return rng.randint(0, 4)

    def fmt(self, m) -> str:
        if m is None:
            return "0"
        if m == 0:
            return "1"
        return "z" if m == 1 else f"z^{m}"

    def parse(self, word: str):
        word = word.strip()
        if word == "0":
            return None
        if word == "1":
            return 0
        m = re.match(r"^z(?:\^(-?\d+))?$", word)
        if not m:
            raise ValueError(f"bad power word {word!r}")
        e = int(m.group(1)) if m.group(1) else 1
        if e < 0:
            raise ValueError("negative power outside this monoid")
        return e


class LaurentMonoid(PowerMonoid):
    """All integer powers of one generator, trivial involution."""

    name = "z^Z"

    @property
    def key(self) -> tuple:
        return ("laurent_monoid",)

    def generators(self) -> tuple:
        return (1, -1)

    def sample(self, rng: random.Random):
        return rng.randint(-4, 4)

    def parse(self, word: str):
        word = word.strip()
        if word == "0":
            return None
        if word == "1":
            return 0
        m = re.match(r"^z(?:\^(-?\d+))?$", word)
        if not m:
            raise ValueError(f"bad power word {word!r}")
        return int(m.group(1)) if m.group(1) else 1


class LadderMonoid(Monoid):
    """Words z^n (z^t)^m with the swap involution; payload (n, m)."""

    name = "z^N.zt^N"
    zero = None
    one = (0, 0)

    @property
    def key(self) -> tuple:
        return ("ladder_monoid",)

    def mul(self, m1, m2):
        if m1 is None or m2 is None:
            return None
        return (m1[0] + m2[0], m1[1] + m2[1])

    def inv(self, m):
        if m is None:
            return None
        return (m[1], m[0])

    def generators(self) -> tuple:
        return ((1, 0), (0, 1))

    def sample(self, rng: random.Random):
        return (rng.randint(0, 3), rng.randint(0, 3))

    def fmt(self, m) -> str:
        if m is None:
            return "0"
        n, k = m
        parts = []
        if n:
            parts.append("z" if n == 1 else f"z^{n}")
        if k:
            parts.append("zt" if k == 1 else f"zt^{k}")
        return "*".join(parts) if parts else "1"

    def parse(self, word: str):
        word = word.strip()
        if word == "0":
            return None
        if word == "1":
            return (0, 0)
        n = k = 0
        for part in word.split("*"):
            m = re.match(r"^(z|zt)(?:\^(\d+))?$", part.strip())
            if not m:
                raise ValueError(f"bad ladder word {word!r}")
            e = int(m.group(2)) if m.group(2) else 1
            if m.group(1) == "z":
                n += e
            else:
                k += e
        return (n, k)


# == monoid rings ===================================================================

class MonoidRing(GenRing):
    """One monoid element riding on one chosen point of X, or zero.

    payload: 0, or (point, monoid element != monoid zero).
    """

    def __init__(self, monoid: Monoid):
        self.monoid = monoid
        self.name = f"F[{monoid.name}]"

    @property
    def key(self) -> tuple:
        return ("F_monoid", self.monoid.key)

    def make(self, shape: FinSet, data: Any) -> Element:
        if data == 0 or data is None:
            return self.zero(shape)
        x, m = data
        if x not in shape:
            raise ValueError(f"point {x} outside {shape}")
        if m == self.monoid.zero:
            return self.zero(shape)
        return Element(self, shape, (x, m))

    def zero(self, shape: FinSet) -> Element:
        return Element(self, shape, 0)

    def one(self) -> Element:
        # collapses to zero exactly when the monoid has 0 = 1
        return self.make(FinSet(1), (1, self.monoid.one))

    def mul(self, a: Element, b: FiberedElement) -> Element:
        f = b.map
        if a.data == 0:
            return self.zero(f.source)
        y0, m0 = a.data
        if not f.fiber(y0):
            return self.zero(f.source)
        comp = b.component(y0)
        if comp.data == 0:
            return self.zero(f.source)
        pick, m = comp.data
        out = self.monoid.mul(m0, m)
        if out == self.monoid.zero:
            return self.zero(f.source)
        return Element(self, f.source, (f.fiber(y0)[pick - 1], out))

    def contract(self, a: Element, b: FiberedElement) -> Element:
        f = b.map
        if a.data == 0:
            return self.zero(f.target)
        x0, m0 = a.data
        y = f(x0)
        if y is None:
            return self.zero(f.target)
        comp = b.component(y)
        if comp.data == 0:
            return self.zero(f.target)
        pick, m = comp.data
        if f.fiber(y)[pick - 1] != x0:
            return self.zero(f.target)
        out = self.monoid.mul(m0, self.monoid.inv(m))
        if out == self.monoid.zero:
            return self.zero(f.target)
        return Element(self, f.target, (y, out))

    def sample(self, rng: random.Random, shape: FinSet) -> Element:
        if shape.size == 0 or rng.random() < 0.2:
            return self.zero(shape)
        return self.make(shape, (rng.randint(1, shape.size), self.monoid.sample(rng)))

    def elements(self, shape: FinSet) -> Iterator[Element]:
        yield self.zero(shape)
        for m in self.monoid.elements():
            if m == self.monoid.zero:
                continue
            for x in shape:
                yield Element(self, shape, (x, m))

    def format_elt(self, a: Element) -> str:
        if a.data == 0:
            return "0"
        x, m = a.data
        return f"[x:{x}, m:{self.monoid.fmt(m)}]"

    def parse_elt(self, text: str, shape: FinSet) -> Element:
        text = text.strip()
        if text == "0":
            return self.zero(shape)
        m = re.match(r"^\[x:(\d+),\s*m:(.*?)\]$", text)
        if not m:
            raise ValueError(f"not a monoid-ring element: {text!r}")
        return self.make(shape, (int(m.group(1)), self.monoid.parse(m.group(2))))


_MONOID_RINGS: dict[tuple, MonoidRing] = {}


def make_monoid_ring(monoid: Monoid) -> MonoidRing:
    return _MONOID_RINGS.setdefault(monoid.key, MonoidRing(monoid))


# == canonical homomorphisms =========================================================

def f_to_ring(target: GenRing) -> Homomorphism:
    """The unique arrow out of the initial model: points go to unit coordinates."""
    F = _F_MODEL

    def phi(a: Element) -> Element:
        if not a.data:
            return target.zero(a.shape)
        return functor_map(target.one(), pbij(1, a.shape.size, {1: a.data}))

    return Homomorphism(source=F, target=target, map_elt=phi, name=f"F->{target.name}")


def g_hom(src: GModel, dst: GModel, fn: Callable[[Any], Any], name: str = "") -> Homomorphism:
    """The coordinatewise arrow induced by a semiring map."""

    def phi(a: Element) -> Element:
        return dst.make(a.shape, tuple(fn(v) for v in a.data))

    return Homomorphism(source=src, target=dst, map_elt=phi, name=name or f"{src.name}->{dst.name}")


def hom_from_monoid_map(
    monoid: Monoid, target: GenRing, images: Callable[[Any], Element], name: str = ""
) -> Homomorphism:
    """The adjunction direction: a monoid map into the [1]-carrier extends
    to the whole monoid ring, placing each image on its chosen point."""
    ring = make_monoid_ring(monoid)

    def phi(a: Element) -> Element:
        if a.data == 0:
            return target.zero(a.shape)
        x, m = a.data
        img = images(m)
        return functor_map(img, pbij(1, a.shape.size, {1: x}))

    return Homomorphism(source=ring, target=target, map_elt=phi, name=name)


def monoid_hom_candidates(
    monoid: Monoid, target: GenRing, candidates: Sequence[Element]
) -> list[dict[Any, Element]]:
    """All maps from a finite monoid into a candidate subset of the
    [1]-carrier that respect product, involution, zero, and one."""
    elems = [m for m in monoid.elements() if m != monoid.zero]
    one_img = {monoid.one: target.one()}
    frees = [m for m in elems if m != monoid.one]
    out: list[dict[Any, Element]] = []

    def elt_mul(u: Element, v: Element) -> Element:
        return _mul_op(u, _fibered_op(target, _identity(1), [v]))

    for choice in _iproduct(candidates, repeat=len(frees)):
        mapping = dict(one_img)
        mapping.update(dict(zip(frees, choice)))
        ok = True
        for m1 in elems:
            if transpose_elt(mapping[m1]) != mapping.get(monoid.inv(m1)):
                ok = False
                break
            for m2 in elems:
                prod = monoid.mul(m1, m2)
                want = target.zero(FinSet(1)) if prod == monoid.zero else mapping[prod]
                if elt_mul(mapping[m1], mapping[m2]) != want:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.append(mapping)
    return out


# == finite quotients ==================================================================

class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[Any, Any] = {}

    def add(self, x: Any) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: Any) -> Any:
        self.add(x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: Any, b: Any) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def quotient_monoid(
    monoid: Monoid, relations: Sequence[tuple[Any, Any]], cap: int = 400
) -> TableMonoid:
    """The quotient of a monoid-with-zero by generated relations.

    Starts from the generating set plus the relation sides, closes the
    congruence, and keeps adding products of class representatives until
    the table closes.  Errors out if the quotient is not visibly finite
    within the element cap.
    """
    known: set[Any] = {monoid.zero, monoid.one}
    known.update(monoid.generators())
    for u, v in relations:
        known.add(u)
        known.add(v)
    uf = _UnionFind()

    def display_reps() -> dict[Any, Any]:
        classes: dict[Any, list[Any]] = {}
        for x in known:
            classes.setdefault(uf.find(x), []).append(x)
        disp: dict[Any, Any] = {}
        for root, members in classes.items():
            if monoid.zero in members:
                disp[root] = monoid.zero
            elif monoid.one in members:
                disp[root] = monoid.one
            else:
                disp[root] = min(members, key=lambda m: (len(monoid.fmt(m)), monoid.fmt(m)))
        return disp

    for _round in range(64):
        for x in known:
            uf.add(x)
        for u, v in relations:
            uf.union(u, v)
        changed = True
        while changed:
            changed = False
            items = sorted(known, key=repr)
            for u in items:
                for v in items:
                    if u == v or uf.find(u) != uf.find(v):
                        continue
                    iu, iv = monoid.inv(u), monoid.inv(v)
                    if iu in known and iv in known and uf.union(iu, iv):
                        changed = True
                    for w in items:
                        a, b = monoid.mul(u, w), monoid.mul(v, w)
                        if a in known and b in known and uf.union(a, b):
                            changed = True
        disp = display_reps()
        missing: set[Any] = set()
        for a in disp.values():
            if monoid.inv(a) not in known:
                missing.add(monoid.inv(a))
            for b in disp.values():
                if monoid.mul(a, b) not in known:
                    missing.add(monoid.mul(a, b))
        if not missing:
            break
        known.update(missing)
        if len(known) > cap:
            raise ValueError("quotient closure does not stabilize within the element cap")
    else:
        raise ValueError("quotient closure does not stabilize")

    disp = display_reps()
    zero_disp = disp[uf.find(monoid.zero)]
    one_disp = disp[uf.find(monoid.one)]
    names: dict[Any, str] = {}
    for rep in sorted(disp.values(), key=lambda m: (monoid.fmt(m) != monoid.fmt(zero_disp), monoid.fmt(m))):
        base = monoid.fmt(rep)
        label = base
        k = 2
        while label in names.values():
            label = f"{base}#{k}"
            k += 1
        names[rep] = label
    if uf.find(monoid.zero) == uf.find(monoid.one):
        return TableMonoid(
            (names[zero_disp],), {}, zero_name=names[zero_disp], one_name=names[zero_disp],
            monoid_name=f"{monoid.name}/~ (collapsed)",
        )
    table = {}
    for a in disp.values():
        for b in disp.values():
            table[(names[a], names[b])] = names[disp[uf.find(monoid.mul(a, b))]]
    invol = {names[a]: names[disp[uf.find(monoid.inv(a))]] for a in disp.values()}
    return TableMonoid(
        tuple(sorted(names.values())),
        table,
        invol,
        zero_name=names[zero_disp],
        one_name=names[one_disp],
        monoid_name=f"{monoid.name}/~",
    )


def finite_quotient(
    ring: GenRing, pairs: Sequence[tuple[Element, Element]], shape_bound: int = 2
) -> GenRing:
    """Quotient by the equivalence ideal generated by element pairs.

    Monoid rings route through the monoid congruence (this is what keeps
    quotients of infinite monoid rings finite when the relations collapse
    enough); everything else needs finite carriers at the used shapes.
    """
    if isinstance(ring, MonoidRing):
        relations = []
        for u, v in pairs:
            mu = u.data[1] if u.data != 0 else ring.monoid.zero
            mv = v.data[1] if v.data != 0 else ring.monoid.zero
            if u.data != 0 and v.data != 0 and u.data[0] != v.data[0]:
                raise ValueError("monoid-ring relations must sit on a common point")
            relations.append((mu, mv))
        return make_monoid_ring(quotient_monoid(ring.monoid, relations))
    return _generic_finite_quotient(ring, pairs, shape_bound)


class QuotientRing(GenRing):
    """A finite-carrier quotient: payloads are class representatives."""

    def __init__(self, base: GenRing, classes: dict[FinSet, dict[Any, Any]], tag: tuple):
        self.base = base
        self._cls = classes  # shape -> payload -> representative payload
        self.name = f"{base.name}/~"
        self._tag = tag

    @property
    def key(self) -> tuple:
        return ("quotient", self.base.key, self._tag)

    def _rep(self, shape: FinSet, data: Any) -> Any:
        table = self._cls.get(shape)
        if table is None or data not in table:
            raise ValueError(f"shape {shape} outside the quotient's computed bound")
        return table[data]

    def make(self, shape: FinSet, data: Any) -> Element:
        base_elt = self.base.make(shape, data)
        return Element(self, shape, self._rep(shape, base_elt.data))

    def zero(self, shape: FinSet) -> Element:
        return Element(self, shape, self._rep(shape, self.base.zero(shape).data))

    def one(self) -> Element:
        return Element(self, FinSet(1), self._rep(FinSet(1), self.base.one().data))

    def _lift(self, a: Element) -> Element:
        return Element(self.base, a.shape, a.data)

    def _lift_fib(self, b: FiberedElement) -> FiberedElement:
        return FiberedElement(self.base, b.map, tuple(self._lift(c) for c in b.components))

    def mul(self, a: Element, b: FiberedElement) -> Element:
        out = self.base.mul(self._lift(a), self._lift_fib(b))
        return Element(self, out.shape, self._rep(out.shape, out.data))

    def contract(self, a: Element, b: FiberedElement) -> Element:
        out = self.base.contract(self._lift(a), self._lift_fib(b))
        return Element(self, out.shape, self._rep(out.shape, out.data))

    def sample(self, rng: random.Random, shape: FinSet) -> Element:
        base_elt = self.base.sample(rng, shape)
        return Element(self, shape, self._rep(shape, base_elt.data))

    def elements(self, shape: FinSet) -> Iterator[Element]:
        seen = set()
        for data, rep in self._cls[shape].items():
            if rep not in seen:
                seen.add(rep)
                yield Element(self, shape, rep)

    def format_elt(self, a: Element) -> str:
        return self.base.format_elt(Element(self.base, a.shape, a.data)) + "~"


def _generic_finite_quotient(
    ring: GenRing, pairs: Sequence[tuple[Element, Element]], shape_bound: int
) -> QuotientRing:
    shapes = [FinSet(k) for k in range(shape_bound + 1)]
    carriers: dict[FinSet, list[Element]] = {}
    for sh in shapes:
        carriers[sh] = list(ring.elements(sh))
    uf: dict[FinSet, _UnionFind] = {sh: _UnionFind() for sh in shapes}
    for sh in shapes:
        for e in carriers[sh]:
            uf[sh].add(e.data)
    for u, v in pairs:
        if u.shape != v.shape:
            raise ValueError("relation pair shapes differ")
        uf[u.shape].union(u.data, v.data)

    maps = [
        f
        for m in range(shape_bound + 1)
        for n in range(shape_bound + 1)
        for f in all_pmaps(m, n)
    ]

    def fibered_choices(f: PartialMap) -> Iterator[FiberedElement]:
        from .fcat import fiber_shapes as _fs

        per_fiber = [carriers[s] for _, s in _fs(f)]
        for combo in _iproduct(*per_fiber):
            yield _fibered_op(ring, f, combo)

    # two applications with class-equal inputs (element slot AND fibered
    # slot) must land in one class: bucket outputs by input-class signature
    changed = True
    rounds = 0
    while changed:
        changed = False
        rounds += 1
        if rounds > 32:
            raise ValueError("quotient closure does not stabilize")
        for f in maps:
            src, tgt = f.source, f.target
            buckets: dict[tuple, Any] = {}
            for b in fibered_choices(f):
                bsig = tuple(uf[c.shape].find(c.data) for c in b.components)
                for a in carriers[tgt]:
                    bkey = ("mul", uf[tgt].find(a.data), bsig)
                    out = _mul_op(a, b).data
                    if bkey in buckets:
                        if uf[src].union(buckets[bkey], out):
                            changed = True
                    else:
                        buckets[bkey] = out
                for a in carriers[src]:
                    bkey = ("con", uf[src].find(a.data), bsig)
                    out = _contract_op(a, b).data
                    if bkey in buckets:
                        if uf[tgt].union(buckets[bkey], out):
                            changed = True
                    else:
                        buckets[bkey] = out
    classes = {
        sh: {e.data: uf[sh].find(e.data) for e in carriers[sh]} for sh in shapes
    }
    tag = tuple(sorted((str(u.data), str(v.data)) for u, v in pairs)) + (shape_bound,)
    return QuotientRing(ring, classes, tag)
