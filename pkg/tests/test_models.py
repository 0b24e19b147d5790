import random
from fractions import Fraction

import pytest

from genring.core import (
    check_axioms,
    check_homomorphism,
    contract,
    ext_mul,
    fibered,
    mul,
    sample_fibered,
    transpose_elt,
    unit_fibered,
)
from genring.fcat import (
    FinSet,
    compose,
    fiber_shapes,
    identity,
    pmap,
    random_pmap,
    total_to_point,
)
from genring.models import (
    INT,
    NAT,
    NONNEG_RAT,
    RAT,
    TROPICAL_NAT,
    LadderMonoid,
    LaurentMonoid,
    PowerMonoid,
    SemiringSpec,
    TableMonoid,
    check_semiring,
    f_to_ring,
    finite_quotient,
    g_hom,
    hom_from_monoid_map,
    ideal_membership,
    make_F,
    make_G,
    make_monoid_ring,
    make_Oeta,
    monoid_hom_candidates,
    norm_sq,
    quotient_monoid,
    residue_field_Oeta,
    residue_projection,
    sign_monoid,
    zmod,
)

F = make_F()
GZ = make_G(INT)
GN = make_G(NAT)
OETA = make_Oeta()


# -- semirings -------------------------------------------------------------

def test_standard_semirings_pass_laws():
    for spec in (NAT, INT, RAT, NONNEG_RAT, TROPICAL_NAT, zmod(6)):
        check_semiring(spec)


def test_broken_semiring_rejected():
    bad = SemiringSpec(
        name="bad",
        key=("semiring", "bad"),
        zero=0,
        one=1,
        add=lambda a, b: a + b,
        mul=lambda a, b: a - b,  # not commutative
        sample=lambda rng: rng.randint(0, 5),
        fmt=str,
        parse=int,
        validate=lambda v: isinstance(v, int),
    )
    with pytest.raises(ValueError):
        check_semiring(bad)
    with pytest.raises(ValueError):
        make_G(bad)


def test_tropical_reading():
    # contraction sums become max of sums of exponents
    f = total_to_point(2)
    GT = make_G(TROPICAL_NAT)
    n = GT.make(FinSet(2), (2, 3))
    m = fibered(GT, f, [GT.make(FinSet(2), (1, 4))])
    assert contract(n, m) == GT.make(FinSet(1), (7,))
    # minus infinity is the zero coordinate
    z = GT.make(FinSet(2), (None, 0))
    assert contract(z, m) == GT.make(FinSet(1), (4,))


def test_counting_contraction_in_GN():
    f = total_to_point(2)
    n = GN.make(FinSet(2), (2, 3))
    m = fibered(GN, f, [GN.make(FinSet(2), (1, 4))])
    assert contract(n, m) == GN.make(FinSet(1), (14,))


# -- the initial model -------------------------------------------------------

def test_F_contract_examples():
    f = pmap(3, 2, {1: 1, 2: 2, 3: 2})
    # fiber over 2 is {2,3}; picking its 2nd point means 3
    b = fibered(F, f, [F.make(FinSet(1), 1), F.make(FinSet(2), 2)])
    assert contract(F.make(FinSet(3), 3), b) == F.make(FinSet(2), 2)
    # mismatch: the pick over 2 is 3, but the element is 2
    assert contract(F.make(FinSet(3), 2), b) == F.zero(FinSet(2))


def test_F_mul_picks_fiber_point():
    f = pmap(3, 2, {1: 1, 2: 2, 3: 2})
    b = fibered(F, f, [F.make(FinSet(1), 1), F.make(FinSet(2), 2)])
    assert mul(F.make(FinSet(2), 2), b) == F.make(FinSet(3), 3)
    assert mul(F.zero(FinSet(2)), b) == F.zero(FinSet(3))


def test_F_text_roundtrip():
    a = F.make(FinSet(3), 2)
    assert F.format_elt(a) == "x:2"
    assert F.parse_elt("x:2", FinSet(3)) == a
    assert F.parse_elt("0", FinSet(3)) == F.zero(FinSet(3))


def test_unique_arrow_from_F():
    phi = f_to_ring(GZ)
    a = F.make(FinSet(3), 2)
    assert phi(a) == GZ.make(FinSet(3), (0, 1, 0))
    res = check_homomorphism(phi, trials=60, seed=3)
    assert res["ok"], res


# -- vector models --------------------------------------------------------------

def test_g_text_roundtrip():
    GQ = make_G(RAT)
    a = GQ.make(FinSet(3), (Fraction(1, 2), Fraction(-3), Fraction(0)))
    text = GQ.format_elt(a)
    assert text == "g[ 1/2, -3, 0 ]"
    assert GQ.parse_elt(text, FinSet(3)) == a


def test_g_hom_functorial():
    G6 = make_G(zmod(6))
    phi = g_hom(GZ, G6, lambda v: v % 6)
    res = check_homomorphism(phi, trials=60, seed=4)
    assert res["ok"], res


def _all_ones(f):
    return fibered(GZ, f, [GZ.ones(s) for _, s in fiber_shapes(f)])


def test_tautological_ones_family():
    # singleton shapes give the unit; the family is closed under composition
    rng = random.Random(9)
    assert GZ.ones(FinSet(1)) == GZ.one()
    for _ in range(40):
        f = random_pmap(rng, rng.randint(0, 3), rng.randint(0, 3))
        g = random_pmap(rng, f.target.size, rng.randint(0, 3))
        assert ext_mul(_all_ones(g), _all_ones(f)) == _all_ones(compose(g, f))


def test_cyclic_identity():
    rng = random.Random(10)
    for _ in range(30):
        n = rng.randint(1, 4)
        a = GZ.sample(rng, FinSet(n))
        coords = [GZ.make(FinSet(1), (v,)) for v in a.data]
        assert mul(GZ.ones(FinSet(n)), fibered(GZ, identity(n), coords)) == a


def test_hom_determined_by_one_carrier():
    # identity extends; coordinatewise negation is not multiplicative
    ident = g_hom(GZ, GZ, lambda v: v, name="id")
    assert check_homomorphism(ident, trials=50, seed=5)["ok"]
    neg = g_hom(GZ, GZ, lambda v: -v, name="neg")
    assert not check_homomorphism(neg, trials=50, seed=6)["ok"]


# -- the real integers site ---------------------------------------------------------

def test_oeta_membership():
    assert ideal_membership((Fraction(3, 5), Fraction(4, 5))) == "unit-sphere"
    assert ideal_membership((Fraction(1, 2),)) == "interior"
    assert ideal_membership((Fraction(2), Fraction(1))) == "outside"
    with pytest.raises(ValueError):
        OETA.make(FinSet(2), (Fraction(2), Fraction(1)))


def test_oeta_dot_product_example():
    f = total_to_point(2)
    a = OETA.make(FinSet(2), (Fraction(3, 5), Fraction(4, 5)))
    b = fibered(OETA, f, [OETA.make(FinSet(2), (Fraction(4, 5), Fraction(3, 5)))])
    assert contract(a, b) == OETA.make(FinSet(1), (Fraction(24, 25),))


def test_oeta_closed_under_ops():
    rng = random.Random(7)
    for _ in range(300):
        f = random_pmap(rng, rng.randint(0, 3), rng.randint(0, 3))
        a = OETA.sample(rng, f.target)
        x = OETA.sample(rng, f.source)
        b = sample_fibered(OETA, rng, f)
        assert norm_sq(mul(a, b)) <= 1
        assert norm_sq(contract(x, b)) <= 1


def test_oeta_absorption():
    # interior elements absorb under both operations
    rng = random.Random(8)
    fails = 0
    for _ in range(200):
        n = rng.randint(1, 3)
        f = total_to_point(n)
        a = OETA.sample(rng, FinSet(1))
        b = sample_fibered(OETA, rng, f)
        if norm_sq(a) < 1:
            out = mul(a, b)
            assert norm_sq(out) < 1 or out.is_zero()
        x = OETA.sample(rng, FinSet(n))
        if norm_sq(x) < 1:
            out = contract(x, b)
            assert norm_sq(out) < 1 or out.is_zero()
    assert fails == 0


def test_oeta_parse_validates():
    with pytest.raises(ValueError):
        OETA.parse_elt("g[ 2, 1 ]", FinSet(2))
    a = OETA.parse_elt("g[ 3/5, 4/5 ]", FinSet(2))
    assert norm_sq(a) == 1


def test_residue_field():
    k = residue_field_Oeta()
    pi = residue_projection()
    a = OETA.make(FinSet(2), (Fraction(3, 5), Fraction(4, 5)))
    assert not pi(a).is_zero()
    b = OETA.make(FinSet(2), (Fraction(1, 2), Fraction(1, 2)))
    assert pi(b).is_zero()
    one = k.one()
    assert mul(one, fibered(k, identity(1), [one])) == one
    res = check_homomorphism(pi, trials=80, seed=11)
    assert res["ok"], res


# -- monoid rings ----------------------------------------------------------------------

def test_sign_monoid_ring_carrier():
    ring = make_monoid_ring(sign_monoid())
    elems = list(ring.elements(FinSet(1)))
    assert len(elems) == 3  # 0, 1, -1


def test_power_monoid_contract_uses_involution():
    ring = make_monoid_ring(PowerMonoid())
    f = total_to_point(1)
    a = ring.make(FinSet(1), (1, 2))  # z^2 at the only point
    b = fibered(ring, f, [ring.make(FinSet(1), (1, 1))])  # z
    out = contract(a, b)
    # trivial involution: z^2 * z^t = z^3
    assert out == ring.make(FinSet(1), (1, 3))


def test_ladder_ring_not_self_adjoint():
    ring = make_monoid_ring(LadderMonoid())
    z = ring.make(FinSet(1), (1, (1, 0)))
    assert transpose_elt(z) != z
    report = check_axioms(ring, trials=60, max_shape=3, seed=12)
    assert not report.results["self_adjoint"].ok
    assert report.results["self_adjoint"].counterexample is not None
    for name in ("associativity", "commutativity", "unit"):
        assert report.results[name].ok


def test_monoid_ring_text_roundtrip():
    ring = make_monoid_ring(LadderMonoid())
    a = ring.make(FinSet(3), (2, (1, 2)))
    text = ring.format_elt(a)
    assert text == "[x:2, m:z*zt^2]"
    assert ring.parse_elt(text, FinSet(3)) == a
    assert ring.parse_elt("0", FinSet(3)) == ring.zero(FinSet(3))


def test_monoid_hom_adjunction():
    # maps {0,+-1} -> G(Z) candidates: exactly u in {1,-1} with u^2=1
    cands = [GZ.make(FinSet(1), (v,)) for v in range(-3, 4)]
    maps = monoid_hom_candidates(sign_monoid(), GZ, cands)
    images = sorted(m["-1"].data[0] for m in maps)
    assert images == [-1, 1]
    phi = hom_from_monoid_map(sign_monoid(), GZ, lambda m: maps[0][m], name="sgn")
    res = check_homomorphism(phi, trials=60, seed=13)
    assert res["ok"], res


# -- quotients --------------------------------------------------------------------------

def test_quotient_monoid_z2_zero():
    P = PowerMonoid()
    Q = quotient_monoid(P, [(2, None)])  # z^2 ~ 0
    assert set(Q.elements()) == {"0", "1", "z"}
    assert Q.mul("z", "z") == "0"


def test_finite_quotient_monoid_ring():
    ring = make_monoid_ring(PowerMonoid())
    z2 = ring.make(FinSet(1), (1, 2))
    qring = finite_quotient(ring, [(z2, ring.zero(FinSet(1)))])
    elems = list(qring.elements(FinSet(1)))
    assert len(elems) == 3  # 0, 1, z
    report = check_axioms(qring, trials=60, max_shape=3, seed=14)
    assert report.ok(expect_self_adjoint=True), report.to_json()


def test_finite_quotient_collapse_one_zero():
    ring = make_monoid_ring(PowerMonoid())
    one = ring.one()
    qring = finite_quotient(ring, [(one, ring.zero(FinSet(1)))])
    assert qring.one() == qring.zero(FinSet(1))
    assert len(list(qring.elements(FinSet(1)))) == 1


def test_finite_quotient_trivial_is_isomorphic():
    ring = make_monoid_ring(sign_monoid())
    qring = finite_quotient(ring, [])
    assert len(list(qring.elements(FinSet(1)))) == len(list(ring.elements(FinSet(1))))


def test_generic_finite_quotient_on_F():
    # collapse the two points of nothing: trivial quotient of F is F-like
    qring = finite_quotient(F, [], shape_bound=2)
    assert len(list(qring.elements(FinSet(2)))) == 3
    # collapse point 1 ~ 0 at shape [1]: the closure drags everything built from it
    one_pt = F.make(FinSet(1), 1)
    qring2 = finite_quotient(F, [(one_pt, F.zero(FinSet(1)))], shape_bound=2)
    assert len(list(qring2.elements(FinSet(1)))) == 1


# -- the harness across models ------------------------------------------------------------

@pytest.mark.parametrize(
    "ring",
    [F, GZ, GN, make_G(zmod(6)), make_G(TROPICAL_NAT), OETA, make_monoid_ring(sign_monoid())],
    ids=lambda r: r.name,
)
def test_axiom_suite_smoke(ring):
    report = check_axioms(ring, trials=60, max_shape=3, seed=15)
    assert report.ok(expect_self_adjoint=True), report.to_json()


def test_axiom_suite_laurent_monoid():
    ring = make_monoid_ring(LaurentMonoid())
    report = check_axioms(ring, trials=60, max_shape=3, seed=16)
    assert report.ok(expect_self_adjoint=True), report.to_json()
