"""Counting, unranking and enumeration of convex characters by size.

The dynamic program stores, per rooted node u and size k, two counts:

* ``g[u][k]`` -- convex characters of the subtree below u with k states;
* ``h[u][k]`` -- pairs (character, highlighted state available at u's root
  for merging with a state above).

A leaf has g = h = [1] at size 1.  For an internal node with children l, r:

    h[u][k] = sum_i h[l][i] g[r][k-i]  +  sum_i g[l][i] h[r][k-i]
            + sum_i h[l][i] h[r][k+1-i]
    g[u][k] = sum_i g[l][i] g[r][k-i]  +  sum_i h[l][i] h[r][k+1-i]

(the last sums merge the two highlighted states across the root).  The
summand order written above, with ascending inner index and the h-term
before the g-term, fixes the canonical enumeration order used by unranking.
The left child is the one whose subtree holds the smallest taxon.

Counts are arbitrary-precision throughout; at the root they must agree with
the closed form C(2n-k-1, k-1), which is checked on every count query.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .phylo_core import rooted_view
from .parsimony import character


@dataclass(frozen=True)
class CountTable:
    tree: object                    # rooted view the table was built on
    root: int
    kids: dict                     # node -> () for leaves, (left, right) else
    taxon: dict                    # leaf node -> taxon name
    m: dict                        # node -> number of leaves below
    g: dict                        # node -> list, index k
    h: dict                        # node -> list, index k

    @property
    def n(self):
        return self.m[self.root]

    def size_count(self, k):
        """Number of convex characters with exactly k states."""
        if not 1 <= k <= self.n:
            raise ValueError(f"size {k} out of range 1..{self.n}")
        return self.g[self.root][k]


def build_count_tables(tree):
    """Complete g/h tables for a tree (rooted by subdivision if needed)."""
    rv = tree._cache.get("rooted_view_enum")
    if rv is None:
        rv = rooted_view(tree)
        tree._cache["rooted_view_enum"] = rv
    cached = rv._cache.get("count_table")
    if cached is not None:
        return cached

    kids = {}
    taxon = {}
    order = []
    stack = [(rv.root, None, False)]
    while stack:
        u, parent, expanded = stack.pop()
        children = [v for v in rv.adj[u] if v != parent]
        if not children:
            kids[u] = ()
            taxon[u] = rv.labels[u]
            order.append(u)
        elif expanded:
            order.append(u)
        else:
            stack.append((u, parent, True))
            for v in children:
                stack.append((v, u, False))
            kids[u] = tuple(children)

    # smallest taxon below each node fixes the left/right orientation
    min_taxon = {}
    m = {}
    g = {}
    h = {}
    for u in order:
        if not kids[u]:
            min_taxon[u] = taxon[u]
            m[u] = 1
            g[u] = [0, 1]
            h[u] = [0, 1]
            continue
        left, right = sorted(kids[u], key=lambda v: min_taxon[v])
        kids[u] = (left, right)
        min_taxon[u] = min_taxon[left]
        ml, mr = m[left], m[right]
        mu = ml + mr
        m[u] = mu
        gl, hl = g[left], h[left]
        gr, hr = g[right], h[right]
        gu = [0] * (mu + 1)
        hu = [0] * (mu + 1)
        for k in range(1, mu + 1):
            acc_g = 0
            acc_h = 0
            lo = max(1, k - mr)
            hi = min(ml, k - 1)
            for i in range(lo, hi + 1):
                acc_g += gl[i] * gr[k - i]
                acc_h += hl[i] * gr[k - i] + gl[i] * hr[k - i]
            lo = max(1, k + 1 - mr)
            hi = min(ml, k)
            for i in range(lo, hi + 1):
                cross = hl[i] * hr[k + 1 - i]
                acc_g += cross
                acc_h += cross
            gu[k] = acc_g
            hu[k] = acc_h
        g[u] = gu
        h[u] = hu

    table = CountTable(tree=rv, root=rv.root, kids=kids, taxon=taxon,
                       m=m, g=g, h=h)
    rv._cache["count_table"] = table
    return table


def steel_tail(n, k):
    """Closed-form number of convex characters of size >= k on n taxa."""
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    return sum(comb(2 * n - r - 1, r - 1) for r in range(k, n + 1))


def count_convex(tree, k, mode="exact"):
    """g(T,k) (``exact``) or the tail sum over sizes >= k (``at_least``).

    Both are cross-checked against the topology-independent closed form.
    """
    if mode not in ("exact", "at_least"):
        raise ValueError(f"unknown mode {mode!r}")
    table = build_count_tables(tree)
    n = table.n
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    if mode == "exact":
        value = table.size_count(k)
        closed = comb(2 * n - k - 1, k - 1)
    else:
        value = sum(table.size_count(r) for r in range(k, n + 1))
        closed = steel_tail(n, k)
    if value != closed:
        raise RuntimeError(
            f"DP count {value} disagrees with closed form {closed}"
        )
    return value


def unrank_convex(tree, k, index):
    """The index-th size-k convex character in canonical order."""
    table = build_count_tables(tree)
    total = table.size_count(k)
    if not 0 <= index < total:
        raise IndexError(f"index {index} out of range for {total} characters")
    blocks, _ = _unrank(table, table.root, "g", k, index)
    return character(blocks)


def iter_convex(tree, min_size=1, offset=0, limit=None):
    """Characters of size >= min_size, sizes ascending, canonical order."""
    table = build_count_tables(tree)
    n = table.n
    if not 1 <= min_size <= n:
        raise ValueError(f"min_size {min_size} out of range 1..{n}")
    emitted = 0
    skipped = 0
    for k in range(min_size, n + 1):
        ck = table.size_count(k)
        start = 0
        if skipped < offset:
            if offset - skipped >= ck:
                skipped += ck
                continue
            start = offset - skipped
            skipped = offset
        for idx in range(start, ck):
            if limit is not None and emitted >= limit:
                return
            blocks, _ = _unrank(table, table.root, "g", k, idx)
            yield character(blocks)
            emitted += 1


def _unrank(table, u, typ, k, idx):
    """Backtrack one DP entry into (blocks, highlighted block position)."""
    if not table.kids[u]:
        return [{table.taxon[u]}], 0 if typ == "h" else None
    left, right = table.kids[u]
    gl, hl = table.g[left], table.h[left]
    gr, hr = table.g[right], table.h[right]
    ml, mr = table.m[left], table.m[right]

    if typ == "h":
        for i in range(max(1, k - mr), min(ml, k - 1) + 1):
            c = hl[i] * gr[k - i]
            if idx < c:
                il, ir = divmod(idx, gr[k - i])
                bl, al = _unrank(table, left, "h", i, il)
                br, _ = _unrank(table, right, "g", k - i, ir)
                return bl + br, al
            idx -= c
        for i in range(max(1, k - mr), min(ml, k - 1) + 1):
            c = gl[i] * hr[k - i]
            if idx < c:
                il, ir = divmod(idx, hr[k - i])
                bl, _ = _unrank(table, left, "g", i, il)
                br, ar = _unrank(table, right, "h", k - i, ir)
                return bl + br, len(bl) + ar
            idx -= c
    else:
        for i in range(max(1, k - mr), min(ml, k - 1) + 1):
            c = gl[i] * gr[k - i]
            if idx < c:
                il, ir = divmod(idx, gr[k - i])
                bl, _ = _unrank(table, left, "g", i, il)
                br, _ = _unrank(table, right, "g", k - i, ir)
                return bl + br, None
            idx -= c
    for i in range(max(1, k + 1 - mr), min(ml, k) + 1):
        c = hl[i] * hr[k + 1 - i]
        if idx < c:
            il, ir = divmod(idx, hr[k + 1 - i])
            bl, al = _unrank(table, left, "h", i, il)
            br, ar = _unrank(table, right, "h", k + 1 - i, ir)
            merged = bl[al] | br[ar]
            blocks = (
                [b for j, b in enumerate(bl) if j != al]
                + [b for j, b in enumerate(br) if j != ar]
                + [merged]
            )
            return blocks, len(blocks) - 1 if typ == "h" else None
        idx -= c
    raise AssertionError("index exceeded summands; tables inconsistent")
