import random

import pytest
from hypothesis import given, strategies as st

from genring.fcat import (
    FinSet,
    PartialBijection,
    all_pbijections,
    all_pmaps,
    compose,
    empty_map,
    fiber_shapes,
    format_pmap,
    general_quotient,
    identity,
    inclusion,
    leq,
    parse_pmap,
    pbij,
    pmap,
    pullback,
    quotient,
    random_pbijection,
    random_pmap,
    sub_pmap,
    total_to_point,
    transpose,
)


def small_pmaps(max_size=3):
    return st.builds(
        lambda m, n, seed: random_pmap(random.Random(seed), m, n),
        st.integers(0, max_size),
        st.integers(0, max_size),
        st.integers(0, 10**6),
    )


def small_pbijs(max_size=3):
    return st.builds(
        lambda m, n, seed: random_pbijection(random.Random(seed), m, n),
        st.integers(0, max_size),
        st.integers(0, max_size),
        st.integers(0, 10**6),
    )


def test_finset_basics():
    assert list(FinSet(3)) == [1, 2, 3]
    assert 3 in FinSet(3) and 4 not in FinSet(3)
    assert len(FinSet(0)) == 0
    with pytest.raises(ValueError):
        FinSet(-1)


def test_pmap_validation():
    with pytest.raises(ValueError):
        pmap(2, 3, [(1, 2), (1, 3)])  # not single-valued
    with pytest.raises(ValueError):
        pmap(2, 3, [(3, 1)])  # point outside source
    with pytest.raises(ValueError):
        pmap(2, 3, [(1, 4)])  # value outside target
    with pytest.raises(ValueError):
        pbij(2, 3, [(1, 2), (2, 2)])  # not injective


def test_pmap_structural_equality():
    f = pmap(2, 3, [(1, 2)])
    g = pbij(2, 3, [(1, 2)])
    assert f == g  # bijection compares equal to the plain map with the same table
    assert hash(f) == hash(g)
    assert f != pmap(2, 3, [(1, 3)])


def test_compose_examples():
    f = pmap(2, 3, {1: 2})
    g = pmap(3, 2, {2: 1})
    assert compose(g, f) == pmap(2, 2, {1: 1})
    assert compose(g, empty_map(2, 3)) == empty_map(2, 2)
    with pytest.raises(ValueError):
        compose(pmap(2, 2, {1: 1}), f)  # inner lands in [3], outer starts at [2]


def test_compose_undefined_midpoint_drops():
    f = pmap(2, 3, {1: 2, 2: 3})
    g = pmap(3, 2, {2: 1})
    assert compose(g, f) == pmap(2, 2, {1: 1})


@given(small_pmaps())
def test_identity_neutral(f):
    assert compose(identity(f.target.size), f) == f
    assert compose(f, identity(f.source.size)) == f


@given(small_pmaps(), st.integers(0, 10**6), st.integers(0, 10**6))
def test_compose_associative(f, s1, s2):
    g = random_pmap(random.Random(s1), f.target.size, 3)
    h = random_pmap(random.Random(s2), 3, 2)
    assert compose(h, compose(g, f)) == compose(compose(h, g), f)


def test_transpose_examples():
    f = pbij(2, 3, {1: 2})
    assert transpose(f) == pbij(3, 2, {2: 1})
    assert transpose(identity(4)) == identity(4)
    with pytest.raises(ValueError):
        transpose(pmap(2, 1, {1: 1, 2: 1}))


@given(small_pbijs())
def test_transpose_involution(f):
    assert transpose(transpose(f)) == f
    # f^t . f is the identity on D(f)
    back = compose(transpose(f), f)
    assert back == pmap(f.source.size, f.source.size, [(x, x) for x in f.domain])


@given(small_pbijs(), st.integers(0, 10**6))
def test_transpose_antihomomorphism(f, seed):
    g = random_pbijection(random.Random(seed), f.target.size, 4)
    assert transpose(compose(g, f)) == compose(transpose(f), transpose(g))


def test_pullback_identity_diagonal():
    sq = pullback(identity(2), identity(2))
    assert sq.apex == FinSet(2)
    assert sq.pairs == ((1, 1), (2, 2))


def test_pullback_constant_times_fibers():
    g = pmap(3, 2, {1: 1, 2: 1, 3: 1})
    f = pmap(3, 2, {1: 1, 2: 1, 3: 2})
    sq = pullback(g, f)
    # brute-force count of matching pairs
    expected = [(z, x) for z in g.domain for x in f.domain if g(z) == f(x)]
    assert sq.apex.size == len(expected) == 3 * 2
    assert sq.pairs == tuple(sorted(expected))


def test_pullback_empty_and_square_commutes():
    sq = pullback(pmap(2, 2, {1: 1}), empty_map(3, 2))
    assert sq.apex.size == 0
    g = pmap(3, 3, {1: 2, 3: 2})
    f = pmap(2, 3, {1: 2, 2: 1})
    sq = pullback(g, f)
    assert compose(g, sq.to_left) == compose(f, sq.to_right)
    assert sq.to_left.is_total() and sq.to_right.is_total()


@given(small_pmaps(), st.integers(0, 10**6))
def test_pullback_cardinality(f, seed):
    g = random_pmap(random.Random(seed), 3, f.target.size)
    sq = pullback(g, f)
    total = sum(len(g.fiber(y)) * len(f.fiber(y)) for y in f.target)
    assert sq.apex.size == total


def test_pullback_fiber_identification():
    # the apex fiber over z is order-isomorphic to f^{-1}(g(z))
    g = pmap(3, 2, {1: 1, 2: 1, 3: 2})
    f = pmap(4, 2, {1: 1, 2: 2, 3: 1, 4: 2})
    sq = pullback(g, f)
    for z in g.domain:
        apex_fiber = sq.to_left.fiber(z)
        xs = [sq.to_right(p) for p in apex_fiber]
        assert xs == sorted(xs)
        assert tuple(xs) == f.fiber(g(z))


def test_fiber_shapes():
    f = pmap(3, 2, {1: 1, 2: 1, 3: 2})
    assert fiber_shapes(f) == [(1, FinSet(2)), (2, FinSet(1))]
    assert fiber_shapes(empty_map(3, 2)) == []


@given(small_pmaps())
def test_fiber_shapes_partition(f):
    shapes = fiber_shapes(f)
    assert sum(s.size for _, s in shapes) == len(f.domain)
    assert [y for y, _ in shapes] == sorted(set(f.image))


def test_leq():
    f = pmap(3, 2, {1: 1})
    g = pmap(3, 2, {1: 1, 2: 2})
    assert leq(f, g) and not leq(g, f)
    assert leq(f, f)
    assert not leq(f, pmap(3, 3, {1: 1}))


def test_quotient_by_self_is_identity_on_image():
    f = pmap(3, 2, {1: 1, 2: 1, 3: 2})
    assert quotient(f, f) == pmap(2, 2, {1: 1, 2: 2})


def test_quotient_injective_total_divisor():
    f = pbij(3, 4, {1: 2, 2: 3, 3: 1})
    h = pmap(3, 2, {1: 1, 3: 2})
    assert quotient(h, f) == compose(h, transpose(f))


def test_quotient_errors():
    f = pmap(2, 2, {1: 1})
    h = pmap(2, 2, {2: 1})
    with pytest.raises(ValueError, match="no quotient"):
        quotient(h, f)  # D(h) escapes D(f)
    f2 = pmap(2, 1, {1: 1, 2: 1})
    h2 = pmap(2, 2, {1: 1, 2: 2})
    with pytest.raises(ValueError, match="no quotient"):
        quotient(h2, f2)  # f merges points h separates


@given(small_pmaps(), st.integers(0, 10**6))
def test_quotient_recovers_h(f, seed):
    h = random_pmap(random.Random(seed), f.source.size, 3)
    try:
        q = quotient(h, f)
    except ValueError:
        return
    assert leq(h, compose(q, f))
    assert q.domain == tuple(sorted({f(x) for x in h.domain}))


def test_general_quotient_partial_divisor():
    # h defined where f is not: general form just drops those points
    h = pmap(3, 2, {1: 1, 2: 1, 3: 2})
    f = pmap(3, 3, {1: 2, 2: 3})
    q = general_quotient(h, f)
    assert q == pmap(3, 2, {2: 1, 3: 1})
    # and fails when f identifies points h separates
    f_bad = pmap(3, 1, {1: 1, 3: 1})
    assert general_quotient(h, f_bad) is None


def test_sub_pmap_slices_and_relabels():
    f = pmap(4, 3, {1: 2, 2: 2, 4: 3})
    g = sub_pmap(f, [2, 4], [2, 3])
    assert g == pmap(2, 2, {1: 1, 2: 2})
    with pytest.raises(ValueError):
        sub_pmap(f, [1], [3])  # f(1)=2 escapes {3}


def test_inclusion_and_point():
    assert inclusion([3, 1], 4) == pbij(2, 4, {1: 1, 2: 3})
    assert total_to_point(3) == pmap(3, 1, {1: 1, 2: 1, 3: 1})


def test_enumeration_counts():
    assert sum(1 for _ in all_pmaps(2, 2)) == 9  # (n+1)^m
    assert sum(1 for _ in all_pmaps(0, 5)) == 1
    # partial injections [2]->[2]: 1 empty + 4 singletons + 2 full
    assert sum(1 for _ in all_pbijections(2, 2)) == 7


def test_samplers_respect_shapes():
    rng = random.Random(7)
    for _ in range(200):
        f = random_pmap(rng, 4, 3)
        assert f.source == FinSet(4) and f.target == FinSet(3)
        b = random_pbijection(rng, 4, 3)
        assert b.is_injective()
        assert isinstance(b, PartialBijection)


def test_text_roundtrip():
    f = pmap(3, 2, {1: 2, 3: 1})
    text = format_pmap(f)
    assert text == "pmap [3]->[2] {1>2, 3>1}"
    assert parse_pmap(text) == f
    assert format_pmap(parse_pmap(text)) == text
    assert parse_pmap("pmap [2]->[2] {}") == empty_map(2, 2)


def test_parse_rejects_unsorted_keys():
    with pytest.raises(ValueError):
        parse_pmap("pmap [3]->[2] {3>1, 1>2}")
    with pytest.raises(ValueError):
        parse_pmap("pmap(3,2)")


@given(small_pmaps())
def test_text_roundtrip_random(f):
    assert parse_pmap(format_pmap(f)) == f
