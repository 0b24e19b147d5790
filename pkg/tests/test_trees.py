import random

import pytest

from genring.core import check_axioms, ext_mul, fibered, mul, transpose_elt
from genring.fcat import FinSet, pmap
from genring.models import INT, NAT, make_G, make_monoid_ring, LadderMonoid
from genring.trees import (
    EMPTY_TREE,
    POINT_TREE,
    DeltaElement,
    RootedTree,
    WLabeledTree,
    all_trees,
    alphabet_generator,
    canonical_datum,
    canonicalize,
    canonicalize_with_map,
    check_eval_family,
    class_closure,
    class_info,
    commute_subtrees,
    contract_generator,
    delta1_iso,
    delta_contract,
    delta_generator,
    delta_mul,
    empty_labeled,
    eval_hom,
    format_datum,
    format_tree,
    graft,
    graft_with_maps,
    ladder,
    ladder_labeled,
    leaf_perms,
    make_Delta,
    make_DeltaW,
    mul_generator,
    parse_datum,
    parse_tree,
    pi_to_GN,
    point_labeled,
    restrict,
    star,
    transpose_labeled,
    transpose_tree,
    transpose_with_maps,
    zero_datum,
)
from genring.trees import _min_sigma, _min_sigma_chain, _tree_key

D = make_Delta()
GZ = make_G(INT)
GN = make_G(NAT)


# -- plain trees ---------------------------------------------------------------


def test_tree_validation():
    with pytest.raises(ValueError):
        RootedTree((0, -1))
    with pytest.raises(ValueError):
        RootedTree((-1, 2, 1))
    assert star(3).boundary() == (1, 2, 3)
    assert ladder(4).ht() == 4
    assert POINT_TREE.size == 1 and EMPTY_TREE.size == 0


def test_format_parse_roundtrip():
    rng = random.Random(7)
    for _ in range(50):
        t = D._random_tree(rng, rng.randint(1, 6))
        assert format_tree(parse_tree(format_tree(t))) == format_tree(t)
    assert format_tree(star(2)) == "(()())"
    assert parse_tree("((())())").size == 4


def test_restrict():
    t = parse_tree("((()())())")
    # keep only the deep pair of leaves
    sub = restrict(t, [2, 3])
    assert format_tree(sub) == "((()()))"
    assert restrict(t, []).size == 0


def test_graft_examples():
    t = parse_tree("((())())")
    assert format_tree(graft(POINT_TREE, {0: t})) == format_tree(t)
    assert format_tree(graft(t, {b: POINT_TREE for b in t.boundary()})) == format_tree(t)
    assert graft(t, {b: EMPTY_TREE for b in t.boundary()}).size == 0
    g = graft(star(2), {1: star(2), 2: star(3)})
    assert g.size == 8 and len(g.boundary()) == 5
    # partial pruning keeps the grafted branch only
    half = graft(star(2), {1: star(2)})
    assert format_tree(half) == "((()()))"


def test_graft_maps_track_boundary():
    F = star(2)
    tree, fmap, gmaps = graft_with_maps(F, {1: star(2), 2: star(3)})
    for b, m in gmaps.items():
        for leaf in (star(2) if b == 1 else star(3)).boundary():
            assert m[leaf] in tree.boundary()
    assert fmap[0] == 0


def test_transpose_levels():
    T10 = graft(star(3), {b: star(2) for b in star(3).boundary()})
    out, omap, new_ids = transpose_with_maps(T10, 0)
    assert out.size == 9 and len(new_ids) == 2
    # boundary count is preserved by every exchange
    assert len(out.boundary()) == len(T10.boundary())
    with pytest.raises(ValueError):
        transpose_tree(parse_tree("((())(()()))"), 0)
    # equal child arity keeps the size when k == n
    sq = graft(star(2), {b: star(2) for b in star(2).boundary()})
    assert transpose_tree(sq, 0).size == sq.size
    # a pivot over bare leaves erases the level
    assert transpose_tree(star(3), 0).size == 1


def test_canonicalize_basics():
    T10 = graft(star(3), {b: star(2) for b in star(3).boundary()})
    rep = canonicalize(T10).rep
    assert format_tree(rep) == "((()()())(()()()))"
    assert canonicalize(rep).rep.parents == rep.parents
    # chains of each length form their own classes
    assert canonicalize(ladder(3)).key != canonicalize(ladder(4)).key


def test_canonicalize_move_invariance():
    rng = random.Random(23)
    for _ in range(40):
        t = D._random_tree(rng, rng.randint(2, 6))
        cls = canonicalize(t)
        pivots = [
            b
            for b in t.nodes()
            if t.children(b)
            and len({t.nu(a) for a in t.children(b)}) == 1
            and t.nu(t.children(b)[0]) >= 1
        ]
        if not pivots:
            continue
        moved = transpose_tree(t, rng.choice(pivots))
        assert canonicalize(moved).key == cls.key


def test_canonicalize_matches_closure_oracle():
    univ = [t for n in range(1, 7) for t in all_trees(n)]
    by_rep: dict[tuple, set] = {}
    for t in univ:
        by_rep.setdefault(canonicalize(t).key, set()).add(_tree_key(t))
    keys = {_tree_key(t): t for t in univ}
    parent = {k: k for k in keys}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for k, t in keys.items():
        for ck in class_closure(t, node_cap=11):
            if ck in parent and find(k) != find(ck):
                parent[find(k)] = find(ck)
    groups: dict[tuple, set] = {}
    for k in keys:
        groups.setdefault(find(k), set()).add(k)
    assert {frozenset(v) for v in by_rep.values()} == {frozenset(v) for v in groups.values()}


def test_tree_counts():
    assert [len(all_trees(n)) for n in range(1, 9)] == [1, 1, 2, 4, 9, 20, 48, 115]


def test_aut_gens_generate_full_automorphism_action():
    from genring.trees import _aut_gens

    for n in range(1, 7):
        for t in all_trees(n):
            gens = _aut_gens(t)
            bound = t.boundary()
            elems = {tuple(bound)}
            frontier = [dict(zip(bound, bound))]
            while frontier:
                cur = frontier.pop()
                for g in gens:
                    nxt = {v: g[cur[v]] for v in bound}
                    key = tuple(nxt[v] for v in bound)
                    if key not in elems:
                        elems.add(key)
                        frontier.append(nxt)
            assert len(elems) == len(leaf_perms(t))


def test_commute_matches_transposition():
    # exchanging the level below a pivot through the general block move
    T = graft(star(2), {b: star(3) for b in star(2).boundary()})
    out = transpose_tree(T, 0)
    kids = T.children(0)
    isos = {a: {a: 0, **{c: i + 1 for i, c in enumerate(T.children(a))}} for a in kids}
    blocked = commute_subtrees(T, [0, *kids], isos, star(3))
    assert canonicalize(blocked).key == canonicalize(out).key


def test_commute_rejects_bad_blocks():
    T = graft(star(2), {1: star(2), 2: star(3)})
    kids = T.children(0)
    isos = {a: {a: 0, **{c: i + 1 for i, c in enumerate(T.children(a))}} for a in kids}
    with pytest.raises(ValueError):
        commute_subtrees(T, [0, *kids], isos, star(2))


# -- labeled trees -------------------------------------------------------------


def test_labeled_validation():
    with pytest.raises(ValueError):
        WLabeledTree(star(2), (2,), (0, 1, 1), (1, 0, 0))
    with pytest.raises(ValueError):
        WLabeledTree(star(1), (1,), (0, 2), (1, 0))
    t = ladder_labeled(3)
    assert t.size == 4 and t.labels == (0, 1, 1, 1)


def test_labeled_transpose_swaps_letters_and_tags():
    # two alphabets: the root speaks alphabet 1, its children alphabet 2
    ws = (2, 2)
    tree = RootedTree((-1, 0, 0, 1, 1, 2, 2))
    lab = WLabeledTree(tree, ws, (0, 1, 2, 1, 2, 1, 2), (1, 2, 2, 0, 0, 0, 0))
    out = transpose_labeled(lab, 0)
    assert out.tags[0] == 2 and {out.tags[c] for c in out.tree.children(0)} == {1}
    # letters migrated: each new level-1 node carries one former grandchild letter
    assert sorted(out.labels[c] for c in out.tree.children(0)) == [1, 2]
    T = out.tree
    for c in T.children(0):
        assert sorted(out.labels[g] for g in T.children(c)) == [1, 2]


def test_labeled_transpose_requires_matching_letters():
    ws = (2,)
    tree = RootedTree((-1, 0, 0, 1, 2))
    lab = WLabeledTree(tree, ws, (0, 1, 2, 1, 2), (1, 1, 1, 0, 0))
    with pytest.raises(ValueError):
        transpose_labeled(lab, 0)


# -- datum layer ---------------------------------------------------------------


def test_datum_validation():
    with pytest.raises(ValueError):
        DeltaElement(star(2), (POINT_TREE,), ((1, 1), (1, 1)))
    with pytest.raises(ValueError):
        DeltaElement(star(2), (POINT_TREE,), ((1, 1),))
    d = DeltaElement(star(2), (star(2),), ((1, 1), (1, 2)))
    assert not d.is_zero()
    assert zero_datum(FinSet(2), star(2)).is_zero()


def test_datum_format_roundtrip():
    d = DeltaElement(star(2), (star(2),), ((1, 2), (1, 1)))
    back = parse_datum(format_datum(d))
    assert canonical_datum(back) == canonical_datum(d)
    z = zero_datum(FinSet(1), star(1))
    assert parse_datum(format_datum(z)) == 0
    with pytest.raises(ValueError):
        parse_datum("{top=(()) | x1=() | sigma=[1->(1,1,2)]}")


def test_canonical_datum_grid_matchings_agree():
    t9 = "((()()())(()()())(()()()))"
    ident = ", ".join(f"{k}->(1,{k})" for k in range(1, 10))
    swap = {1: 1, 2: 4, 3: 7, 4: 2, 5: 5, 6: 8, 7: 3, 8: 6, 9: 9}
    trans = ", ".join(f"{k}->(1,{swap[k]})" for k in range(1, 10))
    a = D.make(FinSet(1), parse_datum("{top=%s | x1=%s | sigma=[%s]}" % (t9, t9, ident)))
    b = D.make(FinSet(1), parse_datum("{top=%s | x1=%s | sigma=[%s]}" % (t9, t9, trans)))
    assert a == b


def test_canonical_datum_representative_invariance():
    rng = random.Random(41)
    shape = FinSet(2)
    for _ in range(25):
        a = D.sample(rng, shape)
        if a.data.is_zero():
            continue
        d: DeltaElement = a.data
        pivots = [
            b
            for b in d.top.nodes()
            if d.top.children(b)
            and len({d.top.nu(x) for x in d.top.children(b)}) == 1
            and d.top.nu(d.top.children(b)[0]) >= 1
        ]
        if not pivots:
            continue
        moved, omap, _ = transpose_with_maps(d.top, rng.choice(pivots))
        old = d.top.boundary()
        perm = sorted(range(len(old)), key=lambda i: moved.boundary().index(omap[old[i]]))
        sigma = tuple(d.sigma[i] for i in perm)
        again = D.make(shape, DeltaElement(moved, d.bottoms, sigma))
        assert again == a


def test_delta_mul_associativity_instance():
    # regression: matching only identified through five-node-deeper forms
    f = pmap(3, 3, {2: 3, 3: 2})
    g = pmap(3, 1, {1: 1, 2: 1, 3: 1})
    d = D.make(
        FinSet(1),
        parse_datum("{top=((()())) | x1=((()(()))) | sigma=[1->(1,1), 2->(1,2)]}"),
    )
    c1 = parse_datum(
        "{top=(()((()))((()))) | x1=0, x2=(), x3=((()())) | sigma=[1->(3,1), 2->(2,1), 3->(3,2)]}"
    )
    bc = parse_datum("{top=((())) | x1=() | sigma=[1->(1,1)]}")
    c = fibered(D, g, [D.make(FinSet(3), c1)])
    b = fibered(D, f, [D.make(FinSet(1), bc), D.make(FinSet(1), bc)])
    lhs = mul(d, ext_mul(c, b))
    rhs = mul(mul(d, c), b)
    assert lhs == rhs


def test_delta_axioms():
    rep = check_axioms(D, trials=60, max_shape=3, seed="t:delta")
    assert rep.ok(expect_self_adjoint=False)
    res = rep.results["self_adjoint"]
    assert res.passes < res.trials and res.counterexample is not None


def test_delta_not_self_adjoint_witness():
    # the involution trades top depth for bottom depth
    d = D.make(FinSet(1), parse_datum("{top=((())) | x1=() | sigma=[1->(1,1)]}"))
    t = transpose_elt(d)
    assert t != d
    assert t.data.top.size == 1 and t.data.bottoms[0].size == 3
    assert transpose_elt(t) == d


def test_deltaw_axioms():
    DW = make_DeltaW((2,))
    rep = check_axioms(DW, trials=40, max_shape=3, seed="t:dw")
    assert rep.ok(expect_self_adjoint=False)


def test_pi_counts_boundary():
    d = D.make(FinSet(2), parse_datum("{top=(()()) | x1=(()()), x2=0 | sigma=[1->(1,1), 2->(1,2)]}"))
    assert pi_to_GN(d).data == (2, 0)
    x = delta_generator(FinSet(3))
    assert pi_to_GN(x).data == (1, 1, 1)


def test_pi_is_multiplicative():
    rng = random.Random(3)
    from genring.core import sample_fibered
    from genring.fcat import random_pmap

    for _ in range(20):
        f = random_pmap(rng, rng.randint(1, 3), rng.randint(1, 3))
        a = D.sample(rng, f.target)
        b = sample_fibered(D, rng, f)
        pb = fibered(GN, f, [pi_to_GN(c) for _, c in sorted(b.by_image.items())])
        assert pi_to_GN(mul(a, b)) == mul(pi_to_GN(a), pb)


# -- evaluation ----------------------------------------------------------------


def test_check_eval_family_rejects_incoherent():
    fam = {1: GZ.make(FinSet(1), (2,)), 2: GZ.make(FinSet(2), (1, 1))}
    with pytest.raises(ValueError):
        check_eval_family(GZ, fam)
    good = {k: GZ.make(FinSet(k), (3,) * k) for k in (1, 2, 3)}
    check_eval_family(GZ, good)


def test_eval_at_ones_is_boundary_count():
    rng = random.Random(17)
    ones = {k: GN.make(FinSet(k), (1,) * k) for k in range(1, 5)}
    for _ in range(15):
        a = D.sample(rng, FinSet(rng.randint(1, 3)))
        assert eval_hom(ones, a) == pi_to_GN(a)


def test_eval_generator_returns_family_entry():
    fam = {k: GZ.make(FinSet(k), (5,) * k) for k in range(1, 5)}
    check_eval_family(GZ, fam)
    assert eval_hom(fam, delta_generator(FinSet(3))) == fam[3]


def test_eval_labeled_generator_returns_letters():
    DW = make_DeltaW((2,))
    letters = GZ.make(FinSet(2), (2, -3))
    assert eval_hom(letters, alphabet_generator(DW)) == letters


def test_eval_respects_mul():
    rng = random.Random(29)
    from genring.core import sample_fibered
    from genring.fcat import random_pmap

    fam = {k: GZ.make(FinSet(k), (2,) * k) for k in range(1, 5)}
    for _ in range(12):
        f = random_pmap(rng, rng.randint(1, 3), rng.randint(1, 3))
        a = D.sample(rng, f.target)
        b = sample_fibered(D, rng, f)
        eb = fibered(GZ, f, [eval_hom(fam, c) for _, c in sorted(b.by_image.items())])
        assert eval_hom(fam, mul(a, b)) == mul(eval_hom(fam, a), eb)


# -- the chain dictionary ------------------------------------------------------


def test_delta1_iso_roundtrip():
    fwd, back = delta1_iso()
    ring = fwd.source
    mring = fwd.target
    for n in range(4):
        for m in range(4):
            w = mring.make(FinSet(1), (1, (n, m)))
            assert fwd.map_elt(back.map_elt(w)) == w
            e = back.map_elt(w)
            assert back.map_elt(fwd.map_elt(e)) == e
    assert fwd.map_elt(ring.zero(FinSet(1))).data == 0


def test_delta1_iso_transports_mul():
    fwd, back = delta1_iso()
    mring = fwd.target
    f = pmap(1, 1, {1: 1})
    for na, ma in [(0, 0), (1, 0), (2, 1)]:
        for nb, mb in [(0, 1), (1, 1), (0, 2)]:
            a = mring.make(FinSet(1), (1, (na, ma)))
            b = mring.make(FinSet(1), (1, (nb, mb)))
            direct = mul(a, fibered(mring, f, [b]))
            lifted = mul(back.map_elt(a), fibered(fwd.source, f, [back.map_elt(b)]))
            assert fwd.map_elt(lifted) == direct


def test_operation_generators_evaluate_to_the_operations():
    rng = random.Random(31)
    from genring.core import contract, sample_fibered
    from genring.fcat import random_pmap

    empty = GZ.make(FinSet(0), ())
    for _ in range(12):
        f = random_pmap(rng, rng.randint(1, 3), rng.randint(1, 3))
        a = GZ.sample(rng, f.target)
        b = sample_fibered(GZ, rng, f)
        per_w = [b.by_image[w] if w in b.by_image else empty for w in sorted(f.target)]
        mg = mul_generator(f)
        cg = contract_generator(f)
        if not f.domain:
            assert mg == mg.ring.zero(f.source)
            assert cg == cg.ring.zero(f.target)
            continue
        assert eval_hom([a] + per_w, mg) == mul(a, b)
        s = GZ.sample(rng, f.source)
        assert eval_hom([s] + per_w, cg) == contract(s, b)


# -- matching minimization cross-checks -----------------------------------------


def test_min_sigma_paths_agree():
    rng = random.Random(53)
    import genring.trees as tr

    for _ in range(60):
        L = rng.randint(2, 5)
        deg = L + rng.randint(0, 2)
        # one random generator each side keeps the groups small but varied
        tperm = list(range(L))
        rng.shuffle(tperm)
        tgens = () if all(i == p for i, p in enumerate(tperm)) else (tuple(tperm),)
        bperm = list(range(deg))
        rng.shuffle(bperm)
        bgens = () if all(i == p for i, p in enumerate(bperm)) else (tuple(bperm),)
        vals = rng.sample(range(1, deg + 1), L)
        sigma = tuple((1, v) for v in vals)
        got = _min_sigma(sigma, tgens, (bgens,))
        want = _min_sigma_chain(sigma, tgens, (bgens,))
        assert got == want
        # brute force over the tiny orbit
        tr._SIGMA_MEMO.clear()
        G = tr._group_elements(tgens) if tgens else (tuple(range(len(sigma))),)
        H = tr._group_elements(bgens) if bgens else (tuple(range(deg)),)
        orbit = set()
        for g in G:
            for h in H:
                orbit.add(tuple((1, h[sigma[j][1] - 1] + 1) for j in g))
        assert got == min(orbit)


def test_class_info_gens_are_boundary_permutations():
    for t in all_trees(6):
        rep, bmap, gens = class_info(t)
        k = len(rep.boundary())
        for g in gens:
            assert sorted(g) == list(range(k))
        assert sorted(bmap) == sorted(t.boundary())
        assert sorted(bmap.values()) == sorted(rep.boundary())
