"""Rooted-tree calculus: grafting, transposition rewriting, canonical forms.

Trees are stored with nodes 0..n-1, node 0 the root, and every non-root
node's parent strictly below it.  The equivalence used for canonical
forms is generated by the boundary-preserving transpositions: every
child of the pivot is internal with the same arity.  The raw surgery
also covers the degenerate leaf-deleting and leaf-growing instances,
but those change the boundary and are never used as equivalence moves.

On top of the rewriting sit two free commutative carriers: data made of
one top tree, one bottom tree per coordinate, and a matching of the two
boundaries, multiplied and contracted by mutual grafting.  The labeled
variant pins each node's children to an alphabet, which freezes the
tree automorphisms; with a one-letter alphabet the data are chains and
behave like monomials z^n (z^t)^m.
"""

from __future__ import annotations

import itertools
import math
import re
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Mapping, Sequence

from .core import (
    Element,
    FiberedElement,
    GenRing,
    Homomorphism,
    contract,
    ext_mul,
    fibered,
    functor_map,
    mul,
    unit_fibered,
)
from .fcat import FinSet, PartialMap, fiber_shapes, pbij, pmap

ORBIT_CAP = 100_000
AUT_CAP = 20_000


# == plain rooted trees =================================================================

@dataclass(frozen=True)
class RootedTree:
    """parents[i] is the parent of node i; parents[0] == -1 marks the root."""

    parents: tuple[int, ...]

    def __post_init__(self) -> None:
        p = self.parents
        if p:
            if p[0] != -1:
                raise ValueError("node 0 must be the root")
            for i in range(1, len(p)):
                if not 0 <= p[i] < i:
                    raise ValueError(f"parent of node {i} must be an earlier node")

    @property
    def size(self) -> int:
        return len(self.parents)

    def nodes(self) -> range:
        return range(len(self.parents))

    def children(self, b: int) -> tuple[int, ...]:
        return tuple(i for i in range(1, len(self.parents)) if self.parents[i] == b)

    def child_lists(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.parents]
        for i in range(1, len(self.parents)):
            out[self.parents[i]].append(i)
        return out

    def nu(self, b: int) -> int:
        return len(self.children(b))

    def boundary(self) -> tuple[int, ...]:
        kids = self.child_lists()
        return tuple(i for i in self.nodes() if not kids[i])

    def height(self, a: int) -> int:
        h = 0
        while self.parents[a] != -1:
            a = self.parents[a]
            h += 1
        return h

    def ht(self) -> int:
        return max((self.height(i) for i in self.nodes()), default=0)

    def __repr__(self) -> str:
        return f"RootedTree({format_tree(self)})"


EMPTY_TREE = RootedTree(())
POINT_TREE = RootedTree((-1,))


def star(k: int) -> RootedTree:
    return RootedTree((-1,) + (0,) * k)


def ladder(n: int) -> RootedTree:
    """The path with n edges; ladder(0) is the single node."""
    return RootedTree((-1,) + tuple(range(n)))


def _build(order: Sequence[Any], parent_of: Mapping[Any, Any], root: Any) -> tuple[RootedTree, dict[Any, int]]:
    """Relabel an arbitrary parent table to the packed form, breadth first.

    Children are visited in the order they appear in `order`, which keeps
    the relabeling deterministic.
    """
    kids: dict[Any, list[Any]] = {v: [] for v in order}
    for v in order:
        if v != root:
            kids[parent_of[v]].append(v)
    idx = {root: 0}
    parents = [-1]
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for c in kids[v]:
            idx[c] = len(parents)
            parents.append(idx[v])
            queue.append(c)
    if len(idx) != len(order):
        raise ValueError("parent table does not reach every node from the root")
    return RootedTree(tuple(parents)), idx


def restrict_with_map(F: RootedTree, B: Sequence[int]) -> tuple[RootedTree, dict[int, int]]:
    """Prune everything not above a kept boundary node; map covers survivors."""
    bset = set(B)
    if not bset <= set(F.boundary()):
        raise ValueError("can only restrict to a subset of the boundary")
    n = F.size
    keep = [False] * n
    for i in range(n - 1, -1, -1):
        if i in bset:
            keep[i] = True
        if keep[i] and i > 0:
            keep[F.parents[i]] = True
    survivors = [i for i in range(n) if keep[i]]
    if not survivors:
        return EMPTY_TREE, {}
    tree, idx = _build(survivors, {i: F.parents[i] for i in survivors}, 0)
    return tree, idx


def restrict(F: RootedTree, B: Sequence[int]) -> RootedTree:
    return restrict_with_map(F, B)[0]


def graft_with_maps(
    F: RootedTree, gs: Mapping[int, RootedTree]
) -> tuple[RootedTree, dict[int, int], dict[int, dict[int, int]]]:
    """Attach a tree at each boundary node; empty or missing entries prune.

    Returns the grafted tree, the node map for the surviving part of F,
    and one node map per attachment.  An attached single point maps its
    root to the attachment leaf, so boundary bookkeeping stays uniform.
    """
    leaves = set(F.boundary())
    for b in gs:
        if b not in leaves:
            raise ValueError(f"node {b} is not a boundary node")
    B = sorted(b for b, g in gs.items() if g.size > 0)
    FB, fmap = restrict_with_map(F, B)
    if FB.size == 0:
        return EMPTY_TREE, {}, {}
    order: list[Any] = [("f", i) for i in range(FB.size)]
    parent_of: dict[Any, Any] = {("f", i): ("f", FB.parents[i]) for i in range(1, FB.size)}
    for b in B:
        g = gs[b]
        for j in range(1, g.size):
            order.append(("g", b, j))
            p = g.parents[j]
            parent_of[("g", b, j)] = ("f", fmap[b]) if p == 0 else ("g", b, p)
    tree, idx = _build(order, parent_of, ("f", 0))
    fmap2 = {v: idx[("f", i)] for v, i in fmap.items()}
    gmaps: dict[int, dict[int, int]] = {}
    for b in B:
        g = gs[b]
        m = {0: fmap2[b]}
        for j in range(1, g.size):
            m[j] = idx[("g", b, j)]
        gmaps[b] = m
    return tree, fmap2, gmaps


def graft(F: RootedTree, gs: Mapping[int, RootedTree]) -> RootedTree:
    return graft_with_maps(F, gs)[0]


def transpose_with_maps(
    F: RootedTree,
    b: int,
    sigmas: Mapping[int, Mapping[int, int]] | None = None,
    n: int | None = None,
) -> tuple[RootedTree, dict[int, int], list[int]]:
    """Swap the two levels below b: its children go, their class nodes come.

    Every child of b must have the same number n of children; sigmas
    assigns each grandchild a class in 1..n (default: by node order).
    Returns the new tree, the node map for everything outside the removed
    level, and the new nodes listed by class.
    """
    if not 0 <= b < F.size:
        raise ValueError("pivot outside the tree")
    kids = F.children(b)
    counts = {F.nu(a) for a in kids}
    if len(counts) > 1:
        raise ValueError("children of the pivot must have equal arity")
    if kids:
        inferred = counts.pop()
        if n is not None and n != inferred:
            raise ValueError("requested arity does not match the children")
        n = inferred
    elif n is None:
        raise ValueError("pivot has no children: the new arity must be given")
    if sigmas is None:
        sigmas = {a: {x: i + 1 for i, x in enumerate(F.children(a))} for a in kids}
    for a in kids:
        sg = sigmas[a]
        if sorted(sg.values()) != list(range(1, n + 1)) or set(sg) != set(F.children(a)):
            raise ValueError("each class assignment must biject the grandchildren onto 1..n")
    removed = set(kids)
    survivors = [i for i in F.nodes() if i not in removed]
    order: list[Any] = [("o", i) for i in survivors]
    parent_of: dict[Any, Any] = {}
    for i in survivors:
        if i == 0:
            continue
        p = F.parents[i]
        parent_of[("o", i)] = ("n", sigmas[p][i]) if p in removed else ("o", p)
    for j in range(1, n + 1):
        order.append(("n", j))
        parent_of[("n", j)] = ("o", b)
    tree, idx = _build(order, parent_of, ("o", 0))
    omap = {i: idx[("o", i)] for i in survivors}
    new_ids = [idx[("n", j)] for j in range(1, n + 1)]
    return tree, omap, new_ids


def transpose_tree(
    F: RootedTree,
    b: int,
    sigmas: Mapping[int, Mapping[int, int]] | None = None,
    n: int | None = None,
) -> RootedTree:
    return transpose_with_maps(F, b, sigmas, n)[0]


# == letter-labeled trees ================================================================

@dataclass(frozen=True)
class WLabeledTree:
    """A tree whose edges carry letters: each node's children are labeled
    injectively from the alphabet its tag selects.  ws lists the alphabet
    sizes; labels[0] is 0 (the root carries no letter); leaves carry tag 0.
    """

    tree: RootedTree
    ws: tuple[int, ...]
    labels: tuple[int, ...]
    tags: tuple[int, ...]

    def __post_init__(self) -> None:
        t = self.tree
        if len(self.labels) != t.size or len(self.tags) != t.size:
            raise ValueError("label and tag tables must cover all nodes")
        if t.size and self.labels[0] != 0:
            raise ValueError("the root carries no letter")
        kids = t.child_lists()
        for v in t.nodes():
            cs = kids[v]
            if not cs:
                if self.tags[v] != 0:
                    raise ValueError("boundary nodes carry no alphabet tag")
                continue
            tg = self.tags[v]
            if not 1 <= tg <= len(self.ws):
                raise ValueError(f"node {v} has alphabet tag {tg} outside the family")
            ls = [self.labels[c] for c in cs]
            if len(set(ls)) != len(ls):
                raise ValueError(f"children of node {v} repeat a letter")
            for l in ls:
                if not 1 <= l <= self.ws[tg - 1]:
                    raise ValueError(f"letter {l} outside alphabet {tg}")

    @property
    def size(self) -> int:
        return self.tree.size

    def boundary(self) -> tuple[int, ...]:
        return self.tree.boundary()

    def __repr__(self) -> str:
        return f"WLabeledTree({format_tree(self)})"


def empty_labeled(ws: Sequence[int]) -> WLabeledTree:
    return WLabeledTree(EMPTY_TREE, tuple(ws), (), ())


def point_labeled(ws: Sequence[int]) -> WLabeledTree:
    return WLabeledTree(POINT_TREE, tuple(ws), (0,), (0,))


def ladder_labeled(n: int, ws: Sequence[int] = (1,), tag: int = 1) -> WLabeledTree:
    labels = (0,) + (1,) * n
    tags = tuple(tag if i < n else 0 for i in range(n + 1))
    return WLabeledTree(ladder(n), tuple(ws), labels, tags)


def transpose_labeled_with_map(F: WLabeledTree, b: int) -> tuple[WLabeledTree, dict[int, int]]:
    """Two-level swap under b.  Every child of b must show the same letter
    set on its own children and the same tag.  Letters migrate: each
    grandchild moves under the new node named by its own letter and is
    renamed by its old parent's letter; the two alphabet tags trade places.
    """
    t = F.tree
    kids = t.children(b)
    if not kids:
        raise ValueError("pivot has no children")
    sets = {tuple(sorted(F.labels[c] for c in t.children(a))) for a in kids}
    tgs = {F.tags[a] for a in kids}
    if len(sets) > 1 or len(tgs) > 1:
        raise ValueError("children of the pivot must agree on letters and alphabet")
    w0 = sorted(sets.pop())
    j = tgs.pop()
    if not w0:
        raise ValueError("letter set below the pivot is empty")
    removed = set(kids)
    survivors = [i for i in t.nodes() if i not in removed]
    order: list[Any] = [("o", i) for i in survivors]
    parent_of: dict[Any, Any] = {}
    lab: dict[Any, int] = {}
    tg: dict[Any, int] = {}
    for i in survivors:
        lab[("o", i)] = F.labels[i]
        tg[("o", i)] = F.tags[i]
        if i == 0:
            continue
        p = t.parents[i]
        if p in removed:
            parent_of[("o", i)] = ("n", F.labels[i])
            lab[("o", i)] = F.labels[p]
        else:
            parent_of[("o", i)] = ("o", p)
    tg[("o", b)] = j
    for w in w0:
        order.append(("n", w))
        parent_of[("n", w)] = ("o", b)
        lab[("n", w)] = w
        tg[("n", w)] = F.tags[b]
    tree, idx = _build(order, parent_of, ("o", 0))
    labels = [0] * tree.size
    tags = [0] * tree.size
    for key, i in idx.items():
        labels[i] = lab[key]
        tags[i] = tg[key]
    out = WLabeledTree(tree, F.ws, tuple(labels), tuple(tags))
    return out, {v: idx[("o", v)] for v in survivors}


def transpose_labeled(F: WLabeledTree, b: int) -> WLabeledTree:
    return transpose_labeled_with_map(F, b)[0]


# == canonical labeling and class reduction ===============================================

def _encodings(F: RootedTree, labels: Sequence[int] | None, tags: Sequence[int] | None) -> list[tuple]:
    kids = F.child_lists()
    enc: list[tuple] = [()] * F.size

    def E(v: int) -> tuple:
        t = tags[v] if tags else 0
        enc[v] = (t, tuple(sorted((labels[c] if labels else 0, E(c)) for c in kids[v])))
        return enc[v]

    if F.size:
        E(0)
    return enc


def _canon_build(
    F: RootedTree, labels: Sequence[int] | None = None, tags: Sequence[int] | None = None
) -> tuple[RootedTree, dict[int, int], tuple[int, ...], tuple[int, ...]]:
    """Deterministic representative of the isomorphism class, with node map."""
    if F.size == 0:
        return F, {}, (), ()
    kids = F.child_lists()
    enc = _encodings(F, labels, tags)
    parents = [-1]
    new_labels = [0]
    new_tags = [tags[0] if tags else 0]
    idx: dict[int, int] = {0: 0}

    def place(v: int) -> None:
        cs = sorted(kids[v], key=lambda c: (labels[c] if labels else 0, enc[c], c))
        for c in cs:
            idx[c] = len(parents)
            parents.append(idx[v])
            new_labels.append(labels[c] if labels else 0)
            new_tags.append(tags[c] if tags else 0)
            place(c)

    place(0)
    return RootedTree(tuple(parents)), idx, tuple(new_labels), tuple(new_tags)


def _canon_plain(F: RootedTree) -> tuple[RootedTree, dict[int, int]]:
    tree, idx, _, _ = _canon_build(F)
    return tree, idx


def _canon_labeled(F: WLabeledTree) -> tuple[WLabeledTree, dict[int, int]]:
    tree, idx, labels, tags = _canon_build(F.tree, F.labels, F.tags)
    return WLabeledTree(tree, F.ws, labels, tags), idx


def _sigma_combos(n: int, m: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Matching tuples for the non-pivot children of a level exchange.  The
    full product of per-child permutations is enumerated while it is small;
    past COMBO_FULL it is thinned to the identity plus every single-child
    deviation, which still links the same forms through chains of moves."""
    perms = list(itertools.permutations(range(1, n + 1)))
    if len(perms) ** m <= COMBO_FULL:
        yield from itertools.product(perms, repeat=m)
        return
    ident = perms[0]
    yield (ident,) * m
    for i in range(m):
        for p in perms[1:]:
            yield (ident,) * i + (p,) + (ident,) * (m - i - 1)


def _plain_moves(T: RootedTree, max_size: int) -> Iterator[tuple[RootedTree, dict[int, int]]]:
    for b in T.nodes():
        kids = T.children(b)
        if not kids:
            continue
        counts = {T.nu(a) for a in kids}
        if len(counts) != 1:
            continue
        n = counts.pop()
        if n < 1 or T.size - len(kids) + n > max_size:
            continue
        first, rest = kids[0], kids[1:]
        base = {first: {x: i + 1 for i, x in enumerate(T.children(first))}}
        for combo in _sigma_combos(n, len(rest)):
            sigmas = dict(base)
            for a, perm in zip(rest, combo):
                sigmas[a] = {x: perm[i] for i, x in enumerate(T.children(a))}
            R, omap, _ = transpose_with_maps(T, b, sigmas)
            Rc, cmap = _canon_plain(R)
            yield Rc, {v: cmap[omap[v]] for v in T.boundary()}


def _labeled_moves(T: WLabeledTree, max_size: int) -> Iterator[tuple[WLabeledTree, dict[int, int]]]:
    t = T.tree
    for b in t.nodes():
        kids = t.children(b)
        if not kids:
            continue
        sets = {tuple(sorted(T.labels[c] for c in t.children(a))) for a in kids}
        tgs = {T.tags[a] for a in kids}
        if len(sets) != 1 or len(tgs) != 1:
            continue
        w0 = sets.pop()
        if not w0:
            continue
        if T.size - len(kids) + len(w0) > max_size:
            continue
        R, omap = transpose_labeled_with_map(T, b)
        Rc, cmap = _canon_labeled(R)
        yield Rc, {v: cmap[omap[v]] for v in t.boundary()}


def _aut_gens(T: RootedTree) -> list[dict[int, int]]:
    """Generators of the automorphism action on the boundary: one swap per
    adjacent pair of equal siblings, at every node.  Letter-labeled trees
    are rigid and contribute none."""
    if T.size == 0:
        return []
    kids = T.child_lists()
    enc = _encodings(T, None, None)
    bound = T.boundary()

    def pair_leaves(u: int, v: int, out: dict[int, int]) -> None:
        # leaf pairing of the order-respecting iso between equal subtrees
        stack = [(u, v)]
        while stack:
            a, b = stack.pop()
            if not kids[a]:
                out[a] = b
                continue
            ca = sorted(kids[a], key=lambda c: (enc[c], c))
            cb = sorted(kids[b], key=lambda c: (enc[c], c))
            stack.extend(zip(ca, cb))

    gens: list[dict[int, int]] = []
    stack = [0]
    while stack:
        v = stack.pop()
        groups: dict[tuple, list[int]] = {}
        for c in kids[v]:
            groups.setdefault(enc[c], []).append(c)
            stack.append(c)
        for cs in groups.values():
            for a, b in zip(cs, cs[1:]):
                g = {l: l for l in bound}
                pair_leaves(a, b, g)
                pair_leaves(b, a, g)
                if any(l != w for l, w in g.items()):
                    gens.append(g)
    return gens


def _no_aut_gens(T: WLabeledTree) -> list[dict[int, int]]:
    return []


# memo: canonical form key -> (class representative, boundary map onto it,
# generators of the class's boundary symmetry group as position tuples,
# and, for plain trees, the exported variants keyed by root arity)
_PLAIN_CLASS_MEMO: dict[tuple, tuple[RootedTree, dict[int, int], tuple, dict]] = {}
_LABELED_CLASS_MEMO: dict[tuple, tuple[WLabeledTree, dict[int, int], tuple]] = {}

# Closure slacks tried in order; a phase whose closure outgrows its budgets
# is discarded and rerun at the next smaller slack, and when every rung
# overflows the search drops to plain downhill steps.  Budgets shrink as
# trees grow: big forms get their identifications from the recursion on
# their subtrees, not from wide top-level sweeps.  Identifications needing
# intermediates deeper than the slack a class ends up with are not seen;
# the small sizes are validated against the brute-force oracle.
SLACK_SCHEDULE = ((16, (5, 3, 2), 4_000, 60_000), (26, (3, 2), 800, 8_000))
SLACK_FLOOR = ((2,), 250, 2_500)
COMBO_FULL = 1_000
# members kept per root arity when a class exports its level-exchange variants
VARIANT_CAP = 3


def _tree_key(T: RootedTree | WLabeledTree) -> tuple:
    if isinstance(T, RootedTree):
        return T.parents
    return (T.tree.parents, T.labels, T.tags, T.ws)


def _sort_key(T: RootedTree | WLabeledTree) -> tuple:
    if isinstance(T, RootedTree):
        return (T.size, T.parents)
    return (T.size, T.tree.parents, T.labels, T.tags)


def _phase(T0, moves, slack: int, form_cap: int, edge_cap: int):
    """Breadth-first closure from a canonical form through forms at most
    `slack` nodes larger.  Returns the visited forms with boundary maps
    from T0, the least form, and the boundary permutations of T0 induced
    by move cycles (paths that meet a form already reached another way).
    Returns None instead once the closure outgrows the given budgets."""
    cap = T0.size + slack
    key0 = _tree_key(T0)
    seen: dict[tuple, tuple[Any, dict[int, int]]] = {key0: (T0, {v: v for v in T0.boundary()})}
    cycles: set[tuple[tuple[int, int], ...]] = set()
    queue = deque([T0])
    best = T0
    edges = 0
    while queue:
        cur = queue.popleft()
        cur_map = seen[_tree_key(cur)][1]
        for nxt, mv in moves(cur, cap):
            edges += 1
            if edges > edge_cap:
                return None
            k = _tree_key(nxt)
            new_map = {v: mv[w] for v, w in cur_map.items()}
            hit = seen.get(k)
            if hit is None:
                seen[k] = (nxt, new_map)
                queue.append(nxt)
                if len(seen) > form_cap:
                    return None
                if _sort_key(nxt) < _sort_key(best):
                    best = nxt
            else:
                inv = {w: v for v, w in hit[1].items()}
                g = tuple(sorted((v, inv[w]) for v, w in new_map.items()))
                if any(a != b for a, b in g):
                    cycles.add(g)
    return seen, best, cycles


def _descend_only(start, moves):
    """Deterministic floor under the capped phases: walk to the least
    neighbour not larger than the current form while one exists.  The
    result is shaped like a phase closure holding only the walked path."""
    seen = {_tree_key(start): (start, {v: v for v in start.boundary()})}
    cur = start
    while True:
        cur_map = seen[_tree_key(cur)][1]
        down = None
        for nxt, mv in moves(cur, cur.size):
            if _sort_key(nxt) < _sort_key(cur) and (down is None or _sort_key(nxt) < _sort_key(down[0])):
                down = (nxt, mv)
        if down is None:
            return seen, cur, set()
        nxt, mv = down
        seen[_tree_key(nxt)] = (nxt, {v: mv[w] for v, w in cur_map.items()})
        cur = nxt


def _run_phase(start, moves):
    slacks, form_cap, edge_cap = SLACK_FLOOR
    for bound, s, f, e in SLACK_SCHEDULE:
        if start.size <= bound:
            slacks, form_cap, edge_cap = s, f, e
            break
    for slack in slacks:
        out = _phase(start, moves, slack, form_cap, edge_cap)
        if out is not None:
            return out
    return _descend_only(start, moves)


def _subtree_with_map(T: RootedTree, c: int) -> tuple[RootedTree, dict[int, int]]:
    """Extract the subtree rooted at c, with the node map into it."""
    sub = {c}
    for i in range(c + 1, T.size):
        if T.parents[i] in sub:
            sub.add(i)
    order = sorted(sub)
    return _build(order, {i: T.parents[i] for i in order}, c)


# reduced form and boundary map by (packed tree, ceiling); the result is a
# pure function of the pair, so sharing it across move enumeration is safe
_CHILD_NORMAL_MEMO: dict[tuple[tuple, int], tuple[RootedTree, dict[int, int]]] = {}


def _child_normalize(T: RootedTree, ceiling: int) -> tuple[RootedTree, dict[int, int]]:
    """Replace each subtree under the root by its class representative.

    Rewriting inside a grafted component is rewriting of the whole tree,
    so the class of a tree only depends on the classes of the subtrees
    hanging off its root.  Exploration therefore works on these reduced
    forms; the state space stops multiplying across unrelated branches.
    Returns the reduced form and the boundary map onto it.
    """
    if T.size <= 1:
        return T, {v: v for v in T.boundary()}
    ck = (T.parents, ceiling)
    hit = _CHILD_NORMAL_MEMO.get(ck)
    if hit is not None:
        return hit
    kids0 = T.children(0)
    gs: dict[int, RootedTree] = {}
    blocks: list[tuple[int, dict[int, int], dict[int, int], set[int]]] = []
    for slot, c in enumerate(kids0, start=1):
        S, smap = _subtree_with_map(T, c)
        repc, bmapc, _, _ = _plain_info(S, ceiling)
        gs[slot] = repc
        blocks.append((slot, smap, bmapc, set(S.boundary())))
    G, _, gmaps = graft_with_maps(star(len(kids0)), gs)
    Gc, cmap = _canon_plain(G)
    out: dict[int, int] = {}
    for slot, smap, bmapc, sb in blocks:
        gm = gmaps[slot]
        for u, su in smap.items():
            if su in sb:
                out[u] = cmap[gm[bmapc[su]]]
    _CHILD_NORMAL_MEMO[ck] = (Gc, out)
    return Gc, out


def _normalized_moves(cur: RootedTree, max_size: int, ceiling: int) -> Iterator[tuple[RootedTree, dict[int, int]]]:
    """Level exchanges at the root of a reduced form, fed by class variants.

    Moves below the root never leave the class of the subtree they touch,
    so the only structural moves left on a reduced form pivot at the root.
    A pivot needs all children at one arity; each child may first be
    swapped for an exported member of its class with the right root
    arity.  The least variant everywhere gets the full matching sweep;
    single-child variant deviations get the order matching only, deeper
    combinations being reachable through chains of moves.  Results are
    reduced again before they are reported.
    """
    if cur.size <= 1:
        return
    kids0 = cur.children(0)
    k = len(kids0)
    avail: list[dict[int, list[tuple[RootedTree, dict[int, int]]]]] = []
    lifts: list[tuple[dict[int, int], dict[int, int], set[int]]] = []
    for c in kids0:
        S, smap = _subtree_with_map(cur, c)
        repc, bmapc, _, variants = _plain_info(S, ceiling)
        avail.append(variants)
        lifts.append((smap, bmapc, set(S.boundary())))
    arities = set(avail[0])
    for va in avail[1:]:
        arities &= set(va)
    leaves = cur.boundary()
    for n in sorted(a for a in arities if a >= 1):
        vlists = [va[n] for va in avail]
        base = tuple(vl[0] for vl in vlists)
        combos: list[tuple[tuple, bool]] = [(base, True)]
        for i, vl in enumerate(vlists):
            for alt in vl[1:]:
                combos.append((base[:i] + (alt,) + base[i + 1:], False))
        for combo, full_sweep in combos:
            total = 1 + sum(V.size for V, _ in combo)
            if total - k + n > max_size:
                continue
            G, _, gmaps = graft_with_maps(star(k), {i + 1: V for i, (V, _) in enumerate(combo)})
            into: dict[int, int] = {}
            for i, (smap, bmapc, sb) in enumerate(lifts):
                gm = gmaps[i + 1]
                rm = combo[i][1]
                for u, su in smap.items():
                    if su in sb:
                        into[u] = gm[rm[bmapc[su]]]
            gkids = G.children(0)
            first, rest = gkids[0], gkids[1:]
            base_sig = {first: {x: j + 1 for j, x in enumerate(G.children(first))}}
            ident = tuple(range(1, n + 1))
            sweeps = _sigma_combos(n, len(rest)) if full_sweep else iter([(ident,) * len(rest)])
            for sigcombo in sweeps:
                sigmas = dict(base_sig)
                for a, perm in zip(rest, sigcombo):
                    sigmas[a] = {x: perm[j] for j, x in enumerate(G.children(a))}
                R, omap, _ = transpose_with_maps(G, 0, sigmas)
                Rc, cmap = _canon_plain(R)
                N, nmap = _child_normalize(Rc, ceiling)
                yield N, {l: nmap[cmap[omap[into[l]]]] for l in leaves}


# move lists by (packed form, ceiling), enumerated up to a recorded size
# bound and filtered per use; re-enumerated if a wider bound is requested
_MOVES_MEMO: dict[tuple[tuple, int], tuple[int, tuple]] = {}


def _cached_moves(cur: RootedTree, max_size: int, ceiling: int) -> Iterator[tuple[RootedTree, dict[int, int]]]:
    key = (cur.parents, ceiling)
    hit = _MOVES_MEMO.get(key)
    if hit is None or hit[0] < max_size:
        bound = max(cur.size + 8, max_size)
        hit = (bound, tuple(_normalized_moves(cur, bound, ceiling)))
        _MOVES_MEMO[key] = hit
    for nxt, mp in hit[1]:
        if nxt.size <= max_size:
            yield nxt, mp


def _lifted_child_gens(V: RootedTree, ceiling: int) -> Iterator[dict[int, int]]:
    """Boundary permutations of a reduced form coming from the symmetry
    groups of the subtrees under its root, extended by the identity."""
    if V.size <= 1:
        return
    bl = V.boundary()
    for c in V.children(0):
        S, smap = _subtree_with_map(V, c)
        repc, bmapc, gens, _ = _plain_info(S, ceiling)
        if not gens:
            continue
        sb = set(S.boundary())
        emb = {u: bmapc[su] for u, su in smap.items() if su in sb}
        inv = {r: u for u, r in emb.items()}
        blc = repc.boundary()
        pos = {r: i for i, r in enumerate(blc)}
        for g in gens:
            alpha = {l: l for l in bl}
            for u, r in emb.items():
                alpha[u] = inv[blc[g[pos[r]]]]
            yield alpha


def _plain_info(
    T: RootedTree, ceiling: int | None = None
) -> tuple[RootedTree, dict[int, int], tuple, dict[int, list[tuple[RootedTree, dict[int, int]]]]]:
    """Class representative, boundary map, symmetry group generators, and
    exported variants (class members keyed by root arity) of a tree.

    Proper subtrees are resolved recursively and replaced by their
    representatives, so each closure only explores root-level structure.
    Exploration is cut off above `ceiling`: oversized intermediates fall
    back to their packed form, which keeps the recursion well founded and
    the result independent of what was computed before.  The closure's
    move cycles, the per-form automorphisms, and the lifted subtree
    groups generate the group by which two matchings onto the
    representative may differ.
    """
    T0, m0 = _canon_plain(T)
    key0 = T0.parents
    if ceiling is not None and T0.size > ceiling:
        ident = {v: v for v in T0.boundary()}
        variants = {T0.nu(0): [(T0, ident)]} if T0.size > 1 else {}
        return T0, {v: m0[v] for v in T.boundary()}, (), variants
    hit = _PLAIN_CLASS_MEMO.get(key0)
    if hit is not None:
        rep, bmap, gens, variants = hit
        return rep, {v: bmap[m0[v]] for v in T.boundary()}, gens, variants
    if T0.size <= 1:
        ident = {v: v for v in T0.boundary()}
        out = (T0, ident, (), {})
        _PLAIN_CLASS_MEMO[key0] = out
        rep, bmap, gens, variants = out
        return rep, {v: bmap[m0[v]] for v in T.boundary()}, gens, variants
    child_ceiling = T0.size - 1
    moves = lambda cur, cap: _cached_moves(cur, cap, child_ceiling)
    records: list[tuple[tuple, dict[int, int]]] = []
    N0, nmap0 = _child_normalize(T0, child_ceiling)
    if _tree_key(N0) != key0:
        records.append((key0, nmap0))
    start = N0
    while True:
        seen, best, cycles = _run_phase(start, moves)
        if _tree_key(best) == _tree_key(start):
            break
        records.append((_tree_key(start), seen[_tree_key(best)][1]))
        start = best
    rep = start
    gen_set = set(cycles)
    for k, (form, m) in seen.items():
        inv = {w: v for v, w in m.items()}
        for alpha in itertools.chain(_aut_gens(form), _lifted_child_gens(form, child_ceiling)):
            g = tuple(sorted((v, inv[alpha[m[v]]]) for v in m))
            if any(a != b for a, b in g):
                gen_set.add(g)
    bl = rep.boundary()
    pos = {v: i for i, v in enumerate(bl)}
    gens = tuple(sorted(tuple(pos[dict(g)[v]] for v in bl) for g in gen_set))
    by_arity: dict[int, list[tuple[RootedTree, dict[int, int]]]] = {}
    for k, (form, m) in sorted(seen.items(), key=lambda kv: _sort_key(kv[1][0])):
        if form.size > 1:
            by_arity.setdefault(form.nu(0), [])
            if len(by_arity[form.nu(0)]) < VARIANT_CAP:
                by_arity[form.nu(0)].append((form, m))
    for k, (form, m) in seen.items():
        if k not in _PLAIN_CLASS_MEMO:
            _PLAIN_CLASS_MEMO[k] = (rep, {w: v for v, w in m.items()}, gens, by_arity)
    tail = {v: v for v in bl}
    for kstart, m_p in reversed(records):
        tail = {v: tail[w] for v, w in m_p.items()}
        if kstart not in _PLAIN_CLASS_MEMO:
            _PLAIN_CLASS_MEMO[kstart] = (rep, dict(tail), gens, by_arity)
    rep, bmap, gens, variants = _PLAIN_CLASS_MEMO[key0]
    return rep, {v: bmap[m0[v]] for v in T.boundary()}, gens, variants


def _class_explore(T, canon, moves, aut_gen_fn, memo) -> tuple[Any, dict[int, int], tuple]:
    """Resolve a tree to its class representative, with a boundary map and
    the boundary symmetry group of the class.

    A single non-growing reduction pass is not confluent (two reduced
    forms of one class may only be connected through a strictly larger
    form), so each pass explores the move graph restricted to forms a
    bounded number of nodes above its start and restarts from the least
    form found until that is stable.  The final closure defines the
    class; its move cycles and the per-form automorphisms generate the
    group by which two matchings onto the representative may differ.
    Identifications that would need even larger intermediate forms are
    not seen; the slack is validated against the brute-force oracle.
    """
    T0, m0 = canon(T)
    key0 = _tree_key(T0)
    hit = memo.get(key0)
    if hit is not None:
        rep, bmap, gens = hit
        return rep, {v: bmap[m0[v]] for v in T.boundary()}, gens
    records: list[tuple[tuple, dict[int, int]]] = []
    start = T0
    while True:
        seen, best, cycles = _run_phase(start, moves)
        if _tree_key(best) == _tree_key(start):
            break
        records.append((_tree_key(start), seen[_tree_key(best)][1]))
        start = best
    rep = start
    gen_set = set(cycles)
    for k, (form, m) in seen.items():
        inv = {w: v for v, w in m.items()}
        for alpha in aut_gen_fn(form):
            g = tuple(sorted((v, inv[alpha[m[v]]]) for v in m))
            if any(a != b for a, b in g):
                gen_set.add(g)
    bl = rep.boundary()
    pos = {v: i for i, v in enumerate(bl)}
    gens = tuple(sorted(tuple(pos[dict(g)[v]] for v in bl) for g in gen_set))
    for k, (form, m) in seen.items():
        if k not in memo:
            memo[k] = (rep, {w: v for v, w in m.items()}, gens)
    tail = {v: v for v in bl}
    for kstart, m_p in reversed(records):
        tail = {v: tail[w] for v, w in m_p.items()}
        if kstart not in memo:
            memo[kstart] = (rep, dict(tail), gens)
    rep, bmap, gens = memo[key0]
    return rep, {v: bmap[m0[v]] for v in T.boundary()}, gens


def class_info(T: RootedTree | WLabeledTree) -> tuple[Any, dict[int, int], tuple]:
    if isinstance(T, RootedTree):
        rep, bmap, gens, _ = _plain_info(T)
        return rep, bmap, gens
    return _class_explore(T, _canon_labeled, _labeled_moves, _no_aut_gens, _LABELED_CLASS_MEMO)


def canonicalize_with_map(T: RootedTree | WLabeledTree) -> tuple[Any, dict[int, int]]:
    rep, bmap, _ = class_info(T)
    return rep, bmap


@dataclass(frozen=True)
class TreeClass:
    """The least member of a rewriting class, by (size, packed encoding)."""

    rep: RootedTree | WLabeledTree

    @property
    def key(self) -> tuple:
        return _tree_key(self.rep)

    def __repr__(self) -> str:
        return f"TreeClass({format_tree(self.rep)})"


def canonicalize(T: RootedTree | WLabeledTree) -> TreeClass:
    return TreeClass(canonicalize_with_map(T)[0])


def class_closure(
    T: RootedTree | WLabeledTree, node_cap: int, orbit_cap: int = ORBIT_CAP
) -> set[tuple]:
    """Oracle: every form reachable by moves in both directions, capped by
    node count.  Returns the set of form keys."""
    plain = isinstance(T, RootedTree)
    canon = _canon_plain if plain else _canon_labeled
    moves = _plain_moves if plain else _labeled_moves
    T0 = canon(T)[0]
    seen = {_tree_key(T0)}
    queue = deque([T0])
    while queue:
        cur = queue.popleft()
        for nxt, _ in moves(cur, node_cap):
            k = _tree_key(nxt)
            if k not in seen:
                seen.add(k)
                queue.append(nxt)
                if len(seen) > orbit_cap:
                    raise RuntimeError("closure orbit exceeded the configured cap")
    return seen


_TREE_TABLES: dict[int, tuple[tuple[int, ...], ...]] = {}


def _all_tree_tables(n: int) -> tuple[tuple[int, ...], ...]:
    if n in _TREE_TABLES:
        return _TREE_TABLES[n]
    if n <= 0:
        out: tuple[tuple[int, ...], ...] = ((),) if n == 0 else ()
    elif n == 1:
        out = ((-1,),)
    else:
        forms: set[tuple[int, ...]] = set()
        for split in _partitions(n - 1):
            pools = [_all_tree_tables(part) for part in split]
            for combo in itertools.product(*pools):
                parents = [-1]
                for sub in combo:
                    off = len(parents)
                    parents.append(0)
                    for i in range(1, len(sub)):
                        parents.append(sub[i] + off)
                forms.add(_canon_plain(RootedTree(tuple(parents)))[0].parents)
        out = tuple(sorted(forms))
    _TREE_TABLES[n] = out
    return out


def all_trees(n: int) -> list[RootedTree]:
    """All isomorphism classes with exactly n nodes, as canonical forms."""
    return [RootedTree(p) for p in _all_tree_tables(n)]


def _partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    if largest is None:
        largest = n
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, first):
            yield (first,) + rest


# == boundary automorphisms ===============================================================

_LEAF_PERMS_MEMO: dict[tuple[int, ...], list[dict[int, int]]] = {}


def leaf_perms(T: RootedTree | WLabeledTree) -> list[dict[int, int]]:
    """Every permutation of the boundary induced by a tree automorphism.

    Letter-labeled trees are rigid (siblings carry distinct letters), so
    they contribute only the identity.
    """
    if isinstance(T, WLabeledTree):
        return [{v: v for v in T.boundary()}]
    if T.size == 0:
        return [{}]
    cached = _LEAF_PERMS_MEMO.get(T.parents)
    if cached is not None:
        return cached
    kids = T.child_lists()
    enc = _encodings(T, None, None)

    def canon_iso(u: int, v: int) -> dict[int, int]:
        # leaf pairing of the unique order-respecting iso between equal subtrees
        out: dict[int, int] = {}
        stack = [(u, v)]
        while stack:
            a, b = stack.pop()
            if not kids[a]:
                out[a] = b
                continue
            ca = sorted(kids[a], key=lambda c: (enc[c], c))
            cb = sorted(kids[b], key=lambda c: (enc[c], c))
            stack.extend(zip(ca, cb))
        return out

    def rec(v: int) -> list[dict[int, int]]:
        if not kids[v]:
            return [{v: v}]
        groups: dict[tuple, list[int]] = {}
        for c in kids[v]:
            groups.setdefault(enc[c], []).append(c)
        per_group: list[list[dict[int, int]]] = []
        for cs in groups.values():
            auts = {c: rec(c) for c in cs}
            opts: list[dict[int, int]] = []
            for perm in itertools.permutations(cs):
                for choice in itertools.product(*(auts[c] for c in cs)):
                    m: dict[int, int] = {}
                    for c, target, alpha in zip(cs, perm, choice):
                        if c == target:
                            m.update(alpha)
                        else:
                            iso = canon_iso(c, target)
                            m.update({l: iso[w] for l, w in alpha.items()})
                    opts.append(m)
                    if len(opts) > AUT_CAP:
                        raise RuntimeError("automorphism enumeration exceeded the cap")
            per_group.append(opts)
        out: list[dict[int, int]] = []
        for combo in itertools.product(*per_group):
            m = {}
            for part in combo:
                m.update(part)
            out.append(m)
            if len(out) > AUT_CAP:
                raise RuntimeError("automorphism enumeration exceeded the cap")
        return out

    result = rec(0)
    _LEAF_PERMS_MEMO[T.parents] = result
    return result


# == composable tree data ==================================================================

@dataclass(frozen=True)
class DeltaElement:
    """One top tree, one bottom tree per coordinate, and a matching of the
    top boundary onto the disjoint union of the bottom boundaries.

    sigma[i] = (x, e): the i-th top boundary node (in node order) matches
    the e-th boundary node of the bottom tree at coordinate x, 1-based.
    """

    top: RootedTree | WLabeledTree
    bottoms: tuple
    sigma: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        tb = self.top.boundary()
        if len(self.sigma) != len(tb):
            raise ValueError("matching must cover the whole top boundary")
        want = {x: len(bt.boundary()) for x, bt in enumerate(self.bottoms, start=1)}
        got = {x: 0 for x in want}
        seen: set[tuple[int, int]] = set()
        for x, e in self.sigma:
            if x not in want or not 1 <= e <= want[x]:
                raise ValueError(f"matching entry ({x}, {e}) outside the bottom boundaries")
            if (x, e) in seen:
                raise ValueError(f"matching entry ({x}, {e}) repeated")
            seen.add((x, e))
            got[x] += 1
        if any(got[x] != want[x] for x in want):
            raise ValueError("matching must hit every bottom boundary node exactly once")
        if self.top.size == 0 and any(bt.size for bt in self.bottoms):
            raise ValueError("empty top forces empty bottoms")

    def is_zero(self) -> bool:
        return self.top.size == 0


def _t_empty(like) -> Any:
    return empty_labeled(like.ws) if isinstance(like, WLabeledTree) else EMPTY_TREE


def _t_graft(F, gs: Mapping[int, Any]):
    """Kind-generic grafting with maps."""
    if isinstance(F, RootedTree):
        return graft_with_maps(F, gs)
    tree, fmap, gmaps = graft_with_maps(F.tree, {b: g.tree for b, g in gs.items()})
    labels = [0] * tree.size
    tags = [0] * tree.size
    for v, i in fmap.items():
        labels[i] = F.labels[v]
        tags[i] = F.tags[v]
    for b, m in gmaps.items():
        g = gs[b]
        for j, i in m.items():
            if j == 0:
                tags[i] = g.tags[0]
            else:
                labels[i] = g.labels[j]
                tags[i] = g.tags[j]
    return WLabeledTree(tree, F.ws, tuple(labels), tuple(tags)), fmap, gmaps


def zero_datum(shape: FinSet, like) -> DeltaElement:
    e = _t_empty(like)
    return DeltaElement(e, (e,) * shape.size, ())


def delta_mul(G: DeltaElement, f: PartialMap, comps: Mapping[int, DeltaElement]) -> DeltaElement:
    """Compose data along f: component tops graft onto the top boundary,
    and the left factor's bottoms graft onto the component bottoms."""
    Y, X = f.target, f.source
    if len(G.bottoms) != Y.size:
        raise ValueError("left factor does not live over the target")
    tleaves = G.top.boundary()
    gs: dict[int, Any] = {}
    for pos, b in enumerate(tleaves):
        y, _ = G.sigma[pos]
        if y in comps:
            gs[b] = comps[y].top
    top, _, gmaps = _t_graft(G.top, gs)
    empty = _t_empty(G.top)
    bottoms: list[Any] = []
    bgmaps: dict[int, dict[int, dict[int, int]]] = {}
    for x in X:
        y = f(x)
        if y is None or y not in comps:
            bottoms.append(empty)
            continue
        comp = comps[y]
        xpos = f.fiber(y).index(x) + 1
        fbar = comp.bottoms[xpos - 1]
        gbar = G.bottoms[y - 1]
        bt, _, bg = _t_graft(fbar, {l: gbar for l in fbar.boundary()})
        bottoms.append(bt)
        bgmaps[x] = bg
    leaf_src: dict[int, tuple[int, int]] = {}
    for pos, b in enumerate(tleaves):
        if b not in gmaps:
            continue
        y = G.sigma[pos][0]
        for cpos, c in enumerate(comps[y].top.boundary()):
            leaf_src[gmaps[b][c]] = (pos, cpos)
    sigma: list[tuple[int, int]] = []
    for leaf in top.boundary():
        pos, cpos = leaf_src[leaf]
        y, d = G.sigma[pos]
        comp = comps[y]
        xpos, e = comp.sigma[cpos]
        x = f.fiber(y)[xpos - 1]
        fl = comp.bottoms[xpos - 1].boundary()[e - 1]
        gleaf = G.bottoms[y - 1].boundary()[d - 1]
        node = bgmaps[x][fl][gleaf]
        sigma.append((x, bottoms[x - 1].boundary().index(node) + 1))
    return DeltaElement(top, tuple(bottoms), tuple(sigma))


def delta_contract(G: DeltaElement, f: PartialMap, comps: Mapping[int, DeltaElement]) -> DeltaElement:
    """Contract data along f: component bottoms graft onto the top
    boundary, and the left factor's bottoms graft onto the component tops."""
    Y, X = f.target, f.source
    if len(G.bottoms) != X.size:
        raise ValueError("left factor does not live over the source")
    tleaves = G.top.boundary()
    gs: dict[int, Any] = {}
    for pos, b in enumerate(tleaves):
        x, _ = G.sigma[pos]
        y = f(x)
        if y is None or y not in comps:
            continue
        xpos = f.fiber(y).index(x) + 1
        gs[b] = comps[y].bottoms[xpos - 1]
    top, _, gmaps = _t_graft(G.top, gs)
    empty = _t_empty(G.top)
    bottoms: list[Any] = []
    bgmaps: dict[int, dict[int, dict[int, int]]] = {}
    inv_sigma: dict[int, dict[tuple[int, int], int]] = {}
    for y in Y:
        if y not in comps:
            bottoms.append(empty)
            continue
        comp = comps[y]
        fib = f.fiber(y)
        per_leaf: dict[int, Any] = {}
        for cpos, c in enumerate(comp.top.boundary()):
            xpos, _ = comp.sigma[cpos]
            per_leaf[c] = G.bottoms[fib[xpos - 1] - 1]
        bt, _, bg = _t_graft(comp.top, per_leaf)
        bottoms.append(bt)
        bgmaps[y] = bg
        inv_sigma[y] = {xe: cpos for cpos, xe in enumerate(comp.sigma)}
    leaf_src: dict[int, tuple[int, int]] = {}
    for pos, b in enumerate(tleaves):
        if b not in gmaps:
            continue
        x = G.sigma[pos][0]
        y = f(x)
        comp = comps[y]
        xpos = f.fiber(y).index(x) + 1
        fbar = comp.bottoms[xpos - 1]
        for epos, l in enumerate(fbar.boundary()):
            leaf_src[gmaps[b][l]] = (pos, epos)
    sigma: list[tuple[int, int]] = []
    for leaf in top.boundary():
        pos, epos = leaf_src[leaf]
        x, d = G.sigma[pos]
        y = f(x)
        comp = comps[y]
        xpos = f.fiber(y).index(x) + 1
        cpos = inv_sigma[y][(xpos, epos + 1)]
        c = comp.top.boundary()[cpos]
        gleaf = G.bottoms[x - 1].boundary()[d - 1]
        node = bgmaps[y][c][gleaf]
        sigma.append((y, bottoms[y - 1].boundary().index(node) + 1))
    return DeltaElement(top, tuple(bottoms), tuple(sigma))


# -- canonical data -----------------------------------------------------------------------

def canonical_datum(d: DeltaElement) -> DeltaElement:
    """Reduce the top and every bottom to class representatives, transport
    the matching through the reductions, then minimize it over the class
    boundary symmetry groups so equal data get equal payloads."""
    if d.is_zero():
        return zero_datum(FinSet(len(d.bottoms)), d.top)
    top, tmap, tgens = class_info(d.top)
    bots: list[Any] = []
    bmaps: list[dict[int, int]] = []
    bgens: list[tuple] = []
    for bt in d.bottoms:
        if bt.size == 0:
            bots.append(_t_empty(d.top))
            bmaps.append({})
            bgens.append(())
        else:
            r, m, gs = class_info(bt)
            bots.append(r)
            bmaps.append(m)
            bgens.append(gs)
    old_leaves = d.top.boundary()
    pos_of = {tmap[l]: i for i, l in enumerate(old_leaves)}
    new_sigma: list[tuple[int, int]] = []
    for leaf in top.boundary():
        x, e = d.sigma[pos_of[leaf]]
        old_bl = d.bottoms[x - 1].boundary()[e - 1]
        new_bl = bmaps[x - 1][old_bl]
        new_sigma.append((x, bots[x - 1].boundary().index(new_bl) + 1))
    sigma = _min_sigma(tuple(new_sigma), tgens, tuple(bgens))
    return DeltaElement(top, tuple(bots), sigma)


GROUP_CAP = 20_000
STATE_CAP = 4096

_GROUP_ELTS_MEMO: dict[tuple, tuple[tuple[int, ...], ...] | None] = {}
_SIGMA_MEMO: dict[tuple, tuple[tuple[int, int], ...]] = {}
_SYM_ORBITS_MEMO: dict[tuple, tuple[tuple[int, ...], ...] | None] = {}


def _symmetric_orbits(gens: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...] | None:
    """The orbit partition when the group is the full symmetric group on
    each of its orbits, else None.  Exact: the group order (stabilizer
    chain, no enumeration) must equal the product of orbit factorials."""
    if gens in _SYM_ORBITS_MEMO:
        return _SYM_ORBITS_MEMO[gens]
    n = len(gens[0])
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for g in gens:
        for i, j in enumerate(g):
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    orbits = tuple(tuple(sorted(v)) for v in sorted(groups.values()))
    target = math.prod(math.factorial(len(o)) for o in orbits)
    out: tuple[tuple[int, ...], ...] | None = orbits
    if target > 1:
        from sympy.combinatorics import Permutation, PermutationGroup

        if PermutationGroup([Permutation(list(g)) for g in gens]).order() != target:
            out = None
    _SYM_ORBITS_MEMO[gens] = out
    return out


def _greedy_values(es: tuple[int, ...], orbits: tuple[tuple[int, ...], ...]) -> tuple[int, ...]:
    """Lex-least relabeling of a value sequence under the full symmetric
    group on each orbit: scanning left to right, every value takes the
    least unused value of its orbit."""
    v2o = {v: oid for oid, o in enumerate(orbits) for v in o}
    free = {oid: list(o) for oid, o in enumerate(orbits)}
    return tuple(free[v2o[e]].pop(0) for e in es)


def _min_sigma_sym(
    sigma: tuple[tuple[int, int], ...],
    torbits: tuple[tuple[int, ...], ...],
    bsym: Mapping[int, tuple[tuple[int, ...], ...] | None],
) -> tuple[tuple[int, int], ...]:
    """Exact orbit minimum when every group involved is symmetric on each
    of its orbits.  Slot i may draw any remaining entry from its position
    orbit, and a drawn entry takes the least unused value of its leaf
    orbit; tied draws are interchangeable, so one greedy pass suffices."""
    L = len(sigma)
    orb_of = {i: oid for oid, o in enumerate(torbits) for i in o}
    remaining: dict[int, list[tuple[int, int]]] = {}
    for i, ent in enumerate(sigma):
        remaining.setdefault(orb_of[i], []).append(ent)
    v2o: dict[int, dict[int, int]] = {}
    free: dict[tuple[int, int], list[int]] = {}
    for x, orbs in bsym.items():
        if orbs is None:
            continue
        v2o[x] = {v: oid for oid, o in enumerate(orbs) for v in o}
        for oid, o in enumerate(orbs):
            free[(x, oid)] = list(o)
    out: list[tuple[int, int]] = []
    for i in range(L):
        cands = remaining[orb_of[i]]
        best_k = 0
        best_val: tuple[int, int] | None = None
        for k, (x, e) in enumerate(cands):
            m = v2o.get(x)
            v = e if m is None else free[(x, m[e - 1])][0] + 1
            if best_val is None or (x, v) < best_val:
                best_val, best_k = (x, v), k
        assert best_val is not None
        x, e = cands.pop(best_k)
        m = v2o.get(x)
        if m is not None:
            free[(x, m[e - 1])].pop(0)
        out.append(best_val)
    return tuple(out)


def _group_elements(gens: tuple[tuple[int, ...], ...]) -> tuple[tuple[int, ...], ...] | None:
    """Every element of the permutation group the image tuples generate,
    or None when the group is larger than the enumeration cap."""
    if gens in _GROUP_ELTS_MEMO:
        return _GROUP_ELTS_MEMO[gens]
    n = len(gens[0])
    ident = tuple(range(n))
    seen = {ident}
    queue = deque([ident])
    overflow = False
    while queue and not overflow:
        u = queue.popleft()
        for g in gens:
            w = tuple(g[i] for i in u)
            if w not in seen:
                if len(seen) >= GROUP_CAP:
                    overflow = True
                    break
                seen.add(w)
                queue.append(w)
    out = None if overflow else tuple(sorted(seen))
    _GROUP_ELTS_MEMO[gens] = out
    return out


def _min_sigma(
    sigma: tuple[tuple[int, int], ...],
    tgens: tuple[tuple[int, ...], ...],
    bgens: tuple[tuple, ...],
) -> tuple[tuple[int, int], ...]:
    """Lexicographic minimum of the matching over its symmetry orbit: the
    top group permutes positions, each bottom group renames that slot's
    leaf indices.  Fully-symmetric-per-orbit groups (the common shape)
    take a tie-free greedy; otherwise the top group is enumerated and the
    bottoms minimized per coordinate, with the stabilizer-chain search as
    the last resort."""
    if not tgens and not any(bgens):
        return sigma
    key = (sigma, tgens, bgens)
    hit = _SIGMA_MEMO.get(key)
    if hit is not None:
        return hit
    L = len(sigma)
    used = {x for x, _ in sigma}
    torbits = _symmetric_orbits(tgens) if tgens else tuple((i,) for i in range(L))
    bsym: dict[int, tuple[tuple[int, ...], ...] | None] = {}
    allsym = torbits is not None
    if allsym:
        for x in used:
            gs = bgens[x - 1]
            if not gs:
                bsym[x] = None
                continue
            so = _symmetric_orbits(gs)
            if so is None:
                allsym = False
                break
            bsym[x] = so
    if allsym:
        assert torbits is not None
        best = _min_sigma_sym(sigma, torbits, bsym)
        _SIGMA_MEMO[key] = best
        return best
    G = _group_elements(tgens) if tgens else (tuple(range(L)),)
    need_enum = [x for x in used if bgens[x - 1] and _symmetric_orbits(bgens[x - 1]) is None]
    Hs = {x: _group_elements(bgens[x - 1]) for x in need_enum}
    if G is None or any(Hs[x] is None for x in need_enum):
        best = _min_sigma_chain(sigma, tgens, bgens)
    else:
        vcache: dict[tuple, tuple[int, ...]] = {}
        best = None
        for g in G:
            seq = [sigma[j] for j in g]
            by_x: dict[int, list[int]] = {}
            for i, (x, _) in enumerate(seq):
                by_x.setdefault(x, []).append(i)
            for x, idxs in by_x.items():
                gs = bgens[x - 1]
                if not gs:
                    continue
                es = tuple(seq[i][1] - 1 for i in idxs)
                ck = (x, es)
                sub = vcache.get(ck)
                if sub is None:
                    so = _symmetric_orbits(gs)
                    if so is not None:
                        sub = _greedy_values(es, so)
                    else:
                        sub = min(tuple(h[e] for e in es) for h in Hs[x])
                    vcache[ck] = sub
                for i, v in zip(idxs, sub):
                    seq[i] = (x, v + 1)
            tc = tuple(seq)
            if best is None or tc < best:
                best = tc
        assert best is not None
    _SIGMA_MEMO[key] = best
    return best


def _min_sigma_chain(
    sigma: tuple[tuple[int, int], ...],
    tgens: tuple[tuple[int, ...], ...],
    bgens: tuple[tuple, ...],
) -> tuple[tuple[int, int], ...]:
    """Stabilizer-chain version of the orbit minimum, for groups too large
    to enumerate.  Slots are fixed left to right; a state is one coset of
    the choices made so far (a concrete group element plus the stabilizer
    of the committed points), and all states achieving the running
    minimum are kept, deduplicated by their commitments."""
    from sympy.combinatorics import Permutation, PermutationGroup

    L = len(sigma)
    G = PermutationGroup([Permutation(list(g)) for g in tgens]) if tgens else None
    Hfull = [
        PermutationGroup([Permutation(list(g)) for g in gs]) if gs else None
        for gs in bgens
    ]
    # state: (g0, gstab, hmap); hmap[x] = (h0, hstab, committed {old: new})
    states: list[tuple[Any, Any, dict[int, tuple[Any, Any, dict[int, int]]]]]
    states = [(None if G is None else G.identity, G, {})]
    out: list[tuple[int, int]] = []
    for i in range(L):
        best_val: tuple[int, int] | None = None
        per_state = []
        for st in states:
            g0, gstab, hmap = st
            if g0 is None:
                jpairs = [(i, None)]
            else:
                jpairs = gstab.orbit_transversal(g0(i), pairs=True)
            cands = []
            for j, s in jpairs:
                x, e = sigma[j]
                e0 = e - 1
                Hx = Hfull[x - 1]
                if Hx is None:
                    cands.append(((x, e0), j, s, e0, e0, False))
                    continue
                h0, hstab, comm = hmap.get(x, (None, Hx, {}))
                if e0 in comm:
                    cands.append(((x, comm[e0]), j, s, e0, comm[e0], False))
                else:
                    base = e0 if h0 is None else h0(e0)
                    v = min(hstab.orbit(base))
                    cands.append(((x, v), j, s, e0, v, True))
            mn = min(c[0] for c in cands)
            if best_val is None or mn < best_val:
                best_val = mn
            per_state.append((st, cands))
        assert best_val is not None
        nxt: list[tuple[Any, Any, dict]] = []
        seen_keys: set = set()
        for (g0, gstab, hmap), cands in per_state:
            for val, j, s, e0, v, commit in cands:
                if val != best_val:
                    continue
                x = val[0]
                if g0 is None:
                    g1, gstab1 = None, None
                else:
                    g1 = g0 if s is None else g0 * s
                    gstab1 = gstab.stabilizer(j)
                hmap1 = hmap
                if commit:
                    Hx = Hfull[x - 1]
                    h0, hstab, comm = hmap.get(x, (None, Hx, {}))
                    base = e0 if h0 is None else h0(e0)
                    s_h = next(t for b, t in hstab.orbit_transversal(base, pairs=True) if b == v)
                    h1 = s_h if h0 is None else h0 * s_h
                    hmap1 = dict(hmap)
                    hmap1[x] = (h1, hstab.stabilizer(v), {**comm, e0: v})
                kg = i if g1 is None else tuple(g1(t) for t in range(i + 1))
                kh = tuple(
                    sorted((x2, tuple(sorted(c.items()))) for x2, (_, _, c) in hmap1.items())
                )
                kk = (kg, kh)
                if kk in seen_keys:
                    continue
                seen_keys.add(kk)
                nxt.append((g1, gstab1, hmap1))
        if len(nxt) > STATE_CAP:
            raise RuntimeError("matching minimization exceeded the state cap")
        states = nxt
        out.append((best_val[0], best_val[1] + 1))
    return tuple(out)


# == the tree-built carriers ===============================================================

class DeltaRing(GenRing):
    """The free commutative carrier on one generator per arity: tree data
    up to transposition equivalence on tops and bottoms."""

    name = "Delta"

    @property
    def key(self) -> tuple:
        return ("Delta",)

    def _empty(self):
        return EMPTY_TREE

    def _point(self):
        return POINT_TREE

    def _validate_kind(self, t) -> None:
        if not isinstance(t, RootedTree):
            raise ValueError("plain tree data expected")

    def make(self, shape: FinSet, data: Any) -> Element:
        if data == 0 or data is None:
            return self.zero(shape)
        if not isinstance(data, DeltaElement):
            raise ValueError("payload must be tree data")
        if len(data.bottoms) != shape.size:
            raise ValueError("one bottom tree per coordinate")
        self._validate_kind(data.top)
        for bt in data.bottoms:
            self._validate_kind(bt)
        if data.is_zero():
            return self.zero(shape)
        return Element(self, shape, canonical_datum(data))

    def zero(self, shape: FinSet) -> Element:
        return Element(self, shape, zero_datum(shape, self._point()))

    def one(self) -> Element:
        p = self._point()
        return self.make(FinSet(1), DeltaElement(p, (p,), ((1, 1),)))

    def mul(self, a: Element, b: FiberedElement) -> Element:
        comps = {y: c.data for y, c in b.by_image.items() if not c.data.is_zero()}
        if a.data.is_zero():
            return self.zero(b.map.source)
        return self.make(b.map.source, delta_mul(a.data, b.map, comps))

    def contract(self, a: Element, b: FiberedElement) -> Element:
        comps = {y: c.data for y, c in b.by_image.items() if not c.data.is_zero()}
        if a.data.is_zero():
            return self.zero(b.map.target)
        return self.make(b.map.target, delta_contract(a.data, b.map, comps))

    def _random_tree(self, rng, n_leaves: int, max_arity: int = 3):
        if n_leaves == 0:
            return self._empty()

        def build(leaves: int) -> list[list[int]]:
            # child-list table, root at index 0
            if leaves == 1:
                h = rng.randint(0, 2)
                return [[i + 1] if i < h else [] for i in range(h + 1)]
            k = rng.randint(2, min(max_arity, leaves))
            cut = sorted(rng.sample(range(1, leaves), k - 1))
            parts = [b - a for a, b in zip([0] + cut, cut + [leaves])]
            table: list[list[int]] = [[]]
            for part in parts:
                sub = build(part)
                off = len(table)
                table[0].append(off)
                for row in sub:
                    table.append([c + off for c in row])
            return table

        table = build(n_leaves)
        parents: dict[int, int] = {}
        for v, cs in enumerate(table):
            for c in cs:
                parents[c] = v
        tree, _ = _build(list(range(len(table))), parents, 0)
        return tree

    def sample(self, rng, shape: FinSet) -> Element:
        if shape.size == 0 or rng.random() < 0.15:
            return self.zero(shape)
        bottoms = []
        for _ in shape:
            roll = rng.random()
            if roll < 0.35:
                bottoms.append(self._empty())
            elif roll < 0.8:
                bottoms.append(self._point())
            else:
                bottoms.append(self._random_tree(rng, rng.randint(1, 2)))
        slots = [
            (x, e)
            for x, bt in enumerate(bottoms, start=1)
            for e in range(1, len(bt.boundary()) + 1)
        ]
        if not slots:
            x = rng.randint(1, shape.size)
            bottoms[x - 1] = self._point()
            slots = [(x, 1)]
        top = self._random_tree(rng, len(slots))
        rng.shuffle(slots)
        return self.make(shape, DeltaElement(top, tuple(bottoms), tuple(slots)))

    def format_elt(self, a: Element) -> str:
        return format_datum(a.data)

    def parse_elt(self, text: str, shape: FinSet) -> Element:
        return self.make(shape, parse_datum(text, ws=None))


class DeltaWRing(DeltaRing):
    """Letter-labeled variant: one alphabet per tensor slot."""

    def __init__(self, ws: Sequence[int]):
        self.ws = tuple(ws)
        self.name = "Delta^W" + str(list(self.ws))

    @property
    def key(self) -> tuple:
        return ("DeltaW", self.ws)

    def _empty(self):
        return empty_labeled(self.ws)

    def _point(self):
        return point_labeled(self.ws)

    def _validate_kind(self, t) -> None:
        if not isinstance(t, WLabeledTree):
            raise ValueError("letter-labeled tree data expected")
        if t.ws != self.ws:
            raise ValueError("alphabet family does not match the carrier")

    def _label_randomly(self, rng, plain: RootedTree) -> WLabeledTree:
        kids = plain.child_lists()
        labels = [0] * plain.size
        tags = [0] * plain.size
        for v in plain.nodes():
            cs = kids[v]
            if not cs:
                continue
            options = [j for j, w in enumerate(self.ws, start=1) if w >= len(cs)]
            if not options:
                raise ValueError("no alphabet large enough for the sampled arity")
            j = rng.choice(options)
            tags[v] = j
            for c, l in zip(cs, rng.sample(range(1, self.ws[j - 1] + 1), len(cs))):
                labels[c] = l
        return WLabeledTree(plain, self.ws, tuple(labels), tuple(tags))

    def _random_tree(self, rng, n_leaves: int, max_arity: int = 3):
        # deep branching reaches any leaf count; only the arity is capped
        cap = max(self.ws, default=0)
        if cap <= 1:
            n_leaves = min(n_leaves, 1)
        plain = super()._random_tree(rng, n_leaves, max_arity=min(max_arity, max(cap, 1)))
        if plain.size == 0:
            return self._empty()
        return self._label_randomly(rng, plain)

    def sample(self, rng, shape: FinSet) -> Element:
        if shape.size == 0 or rng.random() < 0.15:
            return self.zero(shape)
        if max(self.ws, default=0) == 1:
            # one-letter alphabets only admit chains
            x = rng.randint(1, shape.size)
            bottoms = tuple(
                ladder_labeled(rng.randint(0, 2), self.ws) if i == x else self._empty()
                for i in shape
            )
            top = ladder_labeled(rng.randint(0, 2), self.ws)
            return self.make(shape, DeltaElement(top, bottoms, ((x, 1),)))
        return super().sample(rng, shape)

    def parse_elt(self, text: str, shape: FinSet) -> Element:
        return self.make(shape, parse_datum(text, ws=self.ws))


_DELTA = DeltaRing()
_DELTA_W: dict[tuple[int, ...], DeltaWRing] = {}


def make_Delta() -> DeltaRing:
    return _DELTA


def make_DeltaW(ws: Sequence[int]) -> DeltaWRing:
    key = tuple(ws)
    if key not in _DELTA_W:
        _DELTA_W[key] = DeltaWRing(key)
    return _DELTA_W[key]


def delta_generator(shape: FinSet) -> Element:
    """The arity generator: a star over the shape with point bottoms."""
    ring = _DELTA
    if shape.size == 0:
        return ring.zero(shape)
    sigma = tuple((x, 1) for x in shape)
    return ring.make(shape, DeltaElement(star(shape.size), (POINT_TREE,) * shape.size, sigma))


def alphabet_generator(ring: DeltaWRing, slot: int = 1) -> Element:
    """The generator of a labeled carrier: the full one-level star on the
    chosen alphabet, one point bottom per letter."""
    w = ring.ws[slot - 1]
    shape = FinSet(w)
    if w == 0:
        return ring.zero(shape)
    labels = (0,) + tuple(range(1, w + 1))
    tags = (slot,) + (0,) * w
    top = WLabeledTree(star(w), ring.ws, labels, tags)
    bottoms = tuple(point_labeled(ring.ws) for _ in range(w))
    sigma = tuple((x, 1) for x in shape)
    return ring.make(shape, DeltaElement(top, bottoms, sigma))


# == evaluation ============================================================================

def check_eval_family(ring: GenRing, fam: Mapping[int, Element], max_size: int = 4) -> None:
    """An arity family must restrict coherently along every total injection
    between the sizes it provides; raise on the first failure."""
    sizes = sorted(k for k in fam if k <= max_size)
    for k in sizes:
        if fam[k].shape != FinSet(k):
            raise ValueError(f"family entry {k} has the wrong shape")
        if fam[k].ring.key != ring.key:
            raise ValueError("family entries must live in the target carrier")
    for r in sizes:
        for m in sizes:
            if r > m:
                continue
            for img in itertools.permutations(range(1, m + 1), r):
                f = pmap(r, m, {i + 1: img[i] for i in range(r)})
                if mul(fam[m], unit_fibered(ring, f)) != fam[r]:
                    raise ValueError(f"family is not restriction-coherent along {f}")


def _tree_value(ring: GenRing, t, comp_of: Callable[[Any, int, int], Element]) -> tuple[Element, list[int]]:
    """The layered product of one nonempty tree: an element over its
    boundary, whose coordinate order is the returned node list."""
    tr = t.tree if isinstance(t, WLabeledTree) else t
    hs = {v: tr.height(v) for v in tr.nodes()}
    bound = tr.boundary()
    h = max(hs[v] for v in bound)
    if h == 0:
        return ring.one(), [0]
    # boundary nodes shallower than a layer ride along as chain slots
    layers: list[list[tuple[str, int]]] = [[("n", 0)]]
    for j in range(1, h + 1):
        layer = [("n", v) for v in tr.nodes() if hs[v] == j]
        layer += [("c", v) for v in bound if hs[v] < j]
        layers.append(layer)
    cur: FiberedElement | None = None
    for j in range(1, h + 1):
        below = {key: i + 1 for i, key in enumerate(layers[j - 1])}
        table: dict[int, int] = {}
        for i, (kind, v) in enumerate(layers[j], start=1):
            if kind == "n":
                table[i] = below[("n", tr.parents[v])]
            else:
                table[i] = below[("n", v)] if hs[v] == j - 1 else below[("c", v)]
        S = pmap(len(layers[j]), len(layers[j - 1]), table)
        comps = []
        for y, fshape in fiber_shapes(S):
            kind, v = layers[j - 1][y - 1]
            if kind == "c" or tr.nu(v) == 0:
                comps.append(ring.one())
            else:
                comps.append(comp_of(t, v, fshape.size))
        fib = fibered(ring, S, comps)
        cur = fib if cur is None else ext_mul(cur, fib)
    assert cur is not None
    value = cur.components[0]
    order = [v for _, v in layers[h]]
    return value, order


def eval_hom(a: Any, E: Element) -> Element:
    """Evaluate tree data in a commutative carrier.

    For the plain carrier a is an arity family {k: element over [k]}; for
    a labeled carrier it is one element per alphabet slot (a bare element
    is promoted to the one-slot family).  Each node contributes its arity
    component (restricted along its letter map when labeled), multiplied
    layer by layer; the matching then contracts the top against the
    bottoms.
    """
    src = E.ring
    d: DeltaElement = E.data
    labeled = isinstance(src, DeltaWRing)
    if labeled:
        letters = list(a) if isinstance(a, (list, tuple)) else [a]
        if len(letters) != len(src.ws):
            raise ValueError("need one element per alphabet slot")
        ring = letters[0].ring
        for j, el in enumerate(letters, start=1):
            if el.ring.key != ring.key:
                raise ValueError("slot elements must share a carrier")
            if el.shape.size != src.ws[j - 1]:
                raise ValueError(f"slot {j} element must live over its alphabet")

        def comp_of(t, v, k: int) -> Element:
            cs = t.tree.children(v)
            tg = t.tags[v]
            table = {i + 1: t.labels[c] for i, c in enumerate(cs)}
            return mul(letters[tg - 1], unit_fibered(ring, pmap(k, src.ws[tg - 1], table)))

    else:
        fam = dict(a)
        if not fam:
            raise ValueError("empty arity family")
        ring = next(iter(fam.values())).ring

        def comp_of(t, v, k: int) -> Element:
            if k not in fam:
                raise ValueError(f"arity family lacks size {k}")
            return fam[k]

    shape = E.shape
    if d.is_zero():
        return ring.zero(shape)
    a_top, top_order = _tree_value(ring, d.top, comp_of)
    offsets = [0]
    for bt in d.bottoms:
        offsets.append(offsets[-1] + len(bt.boundary()))
    total = offsets[-1]
    tl = list(d.top.boundary())
    table = {}
    for i, leaf in enumerate(top_order):
        x, e = d.sigma[tl.index(leaf)]
        table[i + 1] = offsets[x - 1] + e
    moved = functor_map(a_top, pbij(len(tl), total, table))
    pi_table = {}
    comps = []
    for x, bt in enumerate(d.bottoms, start=1):
        if bt.size == 0:
            continue
        for e in range(1, len(bt.boundary()) + 1):
            pi_table[offsets[x - 1] + e] = x
        val, order = _tree_value(ring, bt, comp_of)
        bl = list(bt.boundary())
        perm = pbij(len(bl), len(bl), {i + 1: bl.index(v) + 1 for i, v in enumerate(order)})
        comps.append(functor_map(val, perm))
    forest = fibered(ring, pmap(total, shape.size, pi_table), comps)
    return contract(moved, forest)


def pi_to_GN(E: Element) -> Element:
    """Boundary counting: the coordinate at x is the size of the bottom
    boundary there.  This is evaluation at the all-ones family."""
    from .models import NAT, make_G

    GN = make_G(NAT)
    d: DeltaElement = E.data
    return GN.make(E.shape, tuple(len(bt.boundary()) for bt in d.bottoms))


# == the chain dictionary ==================================================================

def delta1_iso() -> tuple[Homomorphism, Homomorphism]:
    """The one-letter labeled carrier matches the monomial carrier on words
    z^n (z^t)^m: data are a top chain, one bottom chain, and the coordinate
    holding it."""
    from .models import LadderMonoid, make_monoid_ring

    ring = make_DeltaW((1,))
    mring = make_monoid_ring(LadderMonoid())

    def fwd(a: Element) -> Element:
        d: DeltaElement = a.data
        if d.is_zero():
            return mring.zero(a.shape)
        n = d.top.size - 1
        x, _ = d.sigma[0]
        m = d.bottoms[x - 1].size - 1
        return mring.make(a.shape, (x, (n, m)))

    def back(a: Element) -> Element:
        if a.data == 0:
            return ring.zero(a.shape)
        x, (n, m) = a.data
        bottoms = tuple(
            ladder_labeled(m) if i == x else empty_labeled((1,)) for i in a.shape
        )
        return ring.make(a.shape, DeltaElement(ladder_labeled(n), bottoms, ((x, 1),)))

    return (
        Homomorphism(source=ring, target=mring, map_elt=fwd, name="chains_to_monomials"),
        Homomorphism(source=mring, target=ring, map_elt=back, name="monomials_to_chains"),
    )


# == data dual to the basic operations ====================================================

def mul_generator(f: PartialMap) -> Element:
    """The tree datum that evaluates to multiplication against a fibered
    element over f.  It lives in the labeled carrier whose alphabets are
    the target of f and the fibers of f."""
    Z, W = f.source, f.target
    ws = (W.size,) + tuple(len(f.fiber(w)) for w in W)
    ring = make_DeltaW(ws)
    dom = sorted(f.domain)
    if not dom:
        return ring.zero(Z)
    image = sorted(set(f.image))
    order: list[Any] = ["r"] + [("w", w) for w in image] + [("z", z) for z in dom]
    parent_of: dict[Any, Any] = {("w", w): "r" for w in image}
    for z in dom:
        parent_of[("z", z)] = ("w", f(z))
    tree, idx = _build(order, parent_of, "r")
    labels = [0] * tree.size
    tags = [0] * tree.size
    tags[idx["r"]] = 1
    for w in image:
        labels[idx[("w", w)]] = w
        tags[idx[("w", w)]] = 1 + w
    for z in dom:
        labels[idx[("z", z)]] = f.fiber(f(z)).index(z) + 1
    top = WLabeledTree(tree, ws, tuple(labels), tuple(tags))
    dset = set(dom)
    bottoms = tuple(point_labeled(ws) if z in dset else empty_labeled(ws) for z in Z)
    sigma = tuple((z, 1) for z in sorted(dom, key=lambda z: idx[("z", z)]))
    return ring.make(Z, DeltaElement(top, bottoms, sigma))


def contract_generator(f: PartialMap) -> Element:
    """The tree datum that evaluates to contraction against a fibered
    element over f: the domain letters the top, the fibers letter the
    bottoms."""
    Z, W = f.source, f.target
    ws = (Z.size,) + tuple(len(f.fiber(w)) for w in W)
    ring = make_DeltaW(ws)
    dom = sorted(f.domain)
    if not dom:
        return ring.zero(W)
    order: list[Any] = ["r"] + [("z", z) for z in dom]
    tree, idx = _build(order, {("z", z): "r" for z in dom}, "r")
    labels = [0] * tree.size
    tags = [0] * tree.size
    tags[idx["r"]] = 1
    for z in dom:
        labels[idx[("z", z)]] = z
    top = WLabeledTree(tree, ws, tuple(labels), tuple(tags))
    bottoms: list[WLabeledTree] = []
    for w in W:
        fib = f.fiber(w)
        if not fib:
            bottoms.append(empty_labeled(ws))
            continue
        names = ["r"] + [("x", i) for i in range(1, len(fib) + 1)]
        btree, bidx = _build(names, {("x", i): "r" for i in range(1, len(fib) + 1)}, "r")
        blabels = [0] * btree.size
        btags = [0] * btree.size
        btags[bidx["r"]] = 1 + w
        for i in range(1, len(fib) + 1):
            blabels[bidx[("x", i)]] = i
        bottoms.append(WLabeledTree(btree, ws, tuple(blabels), tuple(btags)))
    sigma = tuple((f(z), f.fiber(f(z)).index(z) + 1) for z in dom)
    return ring.make(W, DeltaElement(top, tuple(bottoms), sigma))


# == text format ===========================================================================

def format_tree(t) -> str:
    if isinstance(t, WLabeledTree):
        tr = t.tree
        if tr.size == 0:
            return "0"
        kids = tr.child_lists()
        multi = len(t.ws) > 1

        def fmt(v: int) -> str:
            parts = []
            if v != 0:
                parts.append(f"w:{t.labels[v]}")
            if kids[v] and multi:
                parts.append(f"t:{t.tags[v]}")
            return "(" + " ".join(parts + [fmt(c) for c in kids[v]]) + ")"

        return fmt(0)
    if t.size == 0:
        return "0"
    kids = t.child_lists()

    def fmt_plain(v: int) -> str:
        return "(" + "".join(fmt_plain(c) for c in kids[v]) + ")"

    return fmt_plain(0)


def parse_tree(text: str, ws: Sequence[int] | None = None):
    """Inverse of format_tree; pass the alphabet family for labeled trees."""
    text = text.strip()
    if text == "0":
        return EMPTY_TREE if ws is None else empty_labeled(ws)
    pos = 0
    parents: list[int] = []
    labels: list[int] = []
    tags: list[int] = []

    def parse_node(parent: int) -> None:
        nonlocal pos
        if pos >= len(text) or text[pos] != "(":
            raise ValueError(f"expected '(' at position {pos}")
        pos += 1
        me = len(parents)
        parents.append(parent)
        labels.append(0)
        tags.append(0)
        while pos < len(text):
            if text[pos] == " ":
                pos += 1
                continue
            if text[pos] == ")":
                pos += 1
                return
            if text[pos] == "(":
                parse_node(me)
                continue
            m = re.match(r"(w|t):(\d+)", text[pos:])
            if not m:
                raise ValueError(f"unexpected token at position {pos}")
            if m.group(1) == "w":
                labels[me] = int(m.group(2))
            else:
                tags[me] = int(m.group(2))
            pos += m.end()
        raise ValueError("unbalanced parentheses")

    parse_node(-1)
    if pos != len(text):
        raise ValueError("trailing input after the tree")
    tree = RootedTree(tuple(parents))
    if ws is None:
        if any(labels) or any(tags):
            raise ValueError("labeled nodes need an alphabet family")
        return tree
    kids = tree.child_lists()
    tags2 = [t if kids[v] else 0 for v, t in enumerate(tags)]
    for v in tree.nodes():
        if kids[v] and tags2[v] == 0:
            tags2[v] = 1
    return WLabeledTree(tree, tuple(ws), tuple(labels), tuple(tags2))


def format_datum(d: DeltaElement) -> str:
    if d.is_zero():
        return "0"
    bots = ", ".join(f"x{i}={format_tree(bt)}" for i, bt in enumerate(d.bottoms, start=1))
    sig = ", ".join(f"{i}->({x},{e})" for i, (x, e) in enumerate(d.sigma, start=1))
    return f"{{top={format_tree(d.top)} | {bots} | sigma=[{sig}]}}"


def parse_datum(text: str, ws: Sequence[int] | None = None) -> DeltaElement | int:
    text = text.strip()
    if text == "0":
        return 0
    m = re.match(r"^\{top=(.*?) \| (.*?) \| sigma=\[(.*?)\]\}$", text)
    if not m:
        raise ValueError(f"not tree data: {text!r}")
    top = parse_tree(m.group(1), ws)
    bottoms: list[Any] = []
    for part in m.group(2).split(","):
        part = part.strip()
        bm = re.match(r"^x(\d+)=(.*)$", part)
        if not bm or int(bm.group(1)) != len(bottoms) + 1:
            raise ValueError(f"bottom list must read x1=..., x2=... in order: {part!r}")
        bottoms.append(parse_tree(bm.group(2), ws))
    sigma: list[tuple[int, int]] = []
    sig = m.group(3).strip()
    if sig:
        entries = re.findall(r"(\d+)\s*->\s*\((\d+)\s*,\s*(\d+)\)", sig)
        if re.sub(r"(\d+)\s*->\s*\((\d+)\s*,\s*(\d+)\)|,|\s", "", sig):
            raise ValueError(f"malformed sigma list: {sig!r}")
        for i, x, e in entries:
            if int(i) != len(sigma) + 1:
                raise ValueError(f"sigma entries must be numbered in order: {sig!r}")
            sigma.append((int(x), int(e)))
    return DeltaElement(top, tuple(bottoms), tuple(sigma))


# == the general exchange, kept as an oracle ==============================================

def commute_subtrees(
    F: RootedTree,
    g_nodes: Sequence[int],
    isos: Mapping[int, Mapping[int, int]],
    H: RootedTree,
) -> RootedTree:
    """Exchange an inner block with the isomorphic blocks on its boundary.

    g_nodes is a full inner subtree (every non-boundary member keeps all
    its children); below each of its boundary nodes a sits a block mapped
    onto the model tree H by isos[a], with a itself sent to H's root.
    The subtrees hanging below those blocks ride along: the one at model
    position y under a reattaches under the copy of a indexed by y.  The
    two-level transposition is the special case H = star.
    """
    gset = set(g_nodes)
    if not gset:
        raise ValueError("empty block")
    kids = F.child_lists()
    groot = min(gset, key=F.height)
    for v in gset:
        if v != groot and F.parents[v] not in gset:
            raise ValueError("block must be connected at its root")
    g_bound = [v for v in sorted(gset) if not set(kids[v]) & gset]
    gb_set = set(g_bound)
    for v in gset:
        if v not in gb_set and not set(kids[v]) <= gset:
            raise ValueError("inner block nodes must keep all children")
    if set(isos) != gb_set:
        raise ValueError("need one iso per boundary node of the block")
    H_bound = set(H.boundary())
    h_isos: dict[int, dict[int, int]] = {}
    for a in g_bound:
        iso = dict(isos[a])
        if iso.get(a) != 0:
            raise ValueError("iso must send the attachment node to the model root")
        if sorted(iso.values()) != sorted(H.nodes()):
            raise ValueError("iso must cover the model tree exactly once")
        for v in iso:
            if v != a and (F.parents[v] not in iso or iso[F.parents[v]] != H.parents[iso[v]]):
                raise ValueError("iso must preserve the parent relation")
        h_isos[a] = iso
    removed = set(gset)
    for iso in h_isos.values():
        removed |= set(iso)
    rest_parent: dict[int, tuple[int, int]] = {}
    for a in g_bound:
        iso = h_isos[a]
        for v, y in iso.items():
            for c in kids[v]:
                if c not in iso:
                    if y not in H_bound:
                        raise ValueError("hanging subtrees may only sit below model boundary nodes")
                    rest_parent[c] = (a, y)

    order: list[Any] = []
    parent_of: dict[Any, Any] = {}
    for i in F.nodes():
        if i in removed:
            continue
        order.append(("o", i))
        if i == 0:
            continue
        p = F.parents[i]
        if p not in removed:
            parent_of[("o", i)] = ("o", p)
        elif i in rest_parent:
            a, y = rest_parent[i]
            parent_of[("o", i)] = ("p", y, a)
        else:
            raise ValueError("a node hangs below the removed region unexpectedly")
    up: Any = ("o", F.parents[groot]) if groot != 0 else None
    inner_h = [y for y in sorted(H.nodes()) if y not in H_bound]
    for y in inner_h:
        order.append(("h", y))
        if y == 0:
            if up is not None:
                parent_of[("h", y)] = up
        else:
            parent_of[("h", y)] = ("h", H.parents[y])
    for y in sorted(H_bound):
        for z in sorted(gset):
            order.append(("p", y, z))
            if z == groot:
                if y == 0:
                    if up is not None:
                        parent_of[("p", y, z)] = up
                else:
                    hp = H.parents[y]
                    parent_of[("p", y, z)] = ("h", hp) if hp not in H_bound else ("p", hp, groot)
            else:
                parent_of[("p", y, z)] = ("p", y, F.parents[z])
    if up is None:
        root: Any = ("h", 0) if inner_h else ("p", 0, groot)
    else:
        root = ("o", 0)
    tree, _ = _build(order, parent_of, root)
    return tree
