"""Tree data model, Newick I/O and derived-tree constructions.

Two tree kinds live here:

* ``PhyloTree`` -- a binary phylogenetic tree whose leaves are bijectively
  labelled by a taxa set X.  It carries an optional root; unrooted trees have
  every internal node of degree 3, rooted trees have a degree-2 root and all
  other internal nodes with two children.
* ``CoreTree`` -- the max-degree-3 tree left over when all leaves of a
  PhyloTree are deleted.  Each core node is weighted by the number of taxa it
  was adjacent to, which always equals ``3 - deg``.

All structures are immutable after construction and all functions are pure
given (inputs, seed), so they are safe to share between threads.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field


class TreeError(ValueError):
    """Domain error for tree construction and tree operations."""


class NewickError(TreeError):
    """Newick syntax or validation error; carries the input position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# --------------------------------------------------------------------------
# PhyloTree
# --------------------------------------------------------------------------

class PhyloTree:
    """A binary phylogenetic tree on dense integer node ids.

    Attributes
    ----------
    adj    : dict node -> tuple of neighbour ids (sorted)
    labels : dict leaf node -> taxon name
    root   : node id of the root, or None for an unrooted tree
    """

    __slots__ = ("adj", "labels", "root", "_cache")

    def __init__(self, adj, labels, root=None, validate=True):
        self.adj = {u: tuple(sorted(vs)) for u, vs in sorted(adj.items())}
        self.labels = dict(labels)
        self.root = root
        self._cache = {}  # derived views, filled lazily; never mutated inputs
        if validate:
            self._validate()

    def __getstate__(self):
        return (self.adj, self.labels, self.root)

    def __setstate__(self, state):
        self.adj, self.labels, self.root = state
        self._cache = {}

    # -- basic queries ------------------------------------------------------

    @property
    def taxa(self):
        """Sorted tuple of taxon names."""
        return tuple(sorted(self.labels.values()))

    @property
    def n(self):
        return len(self.labels)

    @property
    def is_rooted(self):
        return self.root is not None

    def nodes(self):
        return sorted(self.adj)

    def edges(self):
        """Sorted list of edges as (u, v) tuples with u < v."""
        return sorted(
            (u, v) for u in self.adj for v in self.adj[u] if u < v
        )

    def leaf_of(self, taxon):
        for u, name in self.labels.items():
            if name == taxon:
                return u
        raise TreeError(f"unknown taxon {taxon!r}")

    def degree(self, u):
        return len(self.adj[u])

    def to_json(self):
        """JSON-friendly dump of nodes, edges and labels (debugging aid)."""
        return {
            "nodes": [
                {"id": u, "label": self.labels.get(u)} for u in self.nodes()
            ],
            "edges": [list(e) for e in self.edges()],
            "root": self.root,
        }

    def __repr__(self):
        kind = "rooted" if self.is_rooted else "unrooted"
        return f"<PhyloTree {kind} n={self.n}>"

    # -- validation ----------------------------------------------------------

    def _validate(self):
        if not self.labels:
            raise TreeError("tree has no leaves")
        seen = set()
        for u, name in self.labels.items():
            if not name:
                raise TreeError("empty leaf label")
            if name in seen:
                raise TreeError(f"duplicate leaf label {name!r}")
            seen.add(name)
            if u not in self.adj:
                raise TreeError(f"labelled node {u} missing from adjacency")
        # connected and acyclic
        nodes = list(self.adj)
        if len(self.edges()) != len(nodes) - 1:
            raise TreeError("edge count does not match a tree")
        reached = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            x = stack.pop()
            for y in self.adj[x]:
                if y not in reached:
                    reached.add(y)
                    stack.append(y)
        if len(reached) != len(nodes):
            raise TreeError("tree is not connected")
        # degree discipline
        for u in nodes:
            d = self.degree(u)
            if u in self.labels:
                if len(nodes) > 1 and d != 1:
                    raise TreeError(f"leaf {u} has degree {d}")
            elif self.root is not None and u == self.root:
                if d != 2:
                    raise TreeError(f"root must have 2 children, has {d}")
            elif d != 3:
                # internal: degree 3 unrooted, two children plus parent rooted
                raise TreeError(f"internal node {u} has degree {d}")


# --------------------------------------------------------------------------
# CoreTree
# --------------------------------------------------------------------------

class CoreTree:
    """A tree of maximum degree 3 with node weights ``3 - deg``.

    ``origin`` maps core node ids back to the internal node ids of the
    originating PhyloTree and ``taxa`` lists the taxa each core node was
    adjacent to.  For synthetically generated cores both are trivial.
    ``root`` is an optional designated node used by generators that care
    about one (the lower-bound construction does).
    """

    __slots__ = ("adj", "weights", "origin", "taxa", "root")

    def __init__(self, adj, origin=None, taxa=None, root=None):
        self.adj = {u: tuple(sorted(vs)) for u, vs in sorted(adj.items())}
        self.weights = {u: 3 - len(vs) for u, vs in self.adj.items()}
        self.origin = dict(origin) if origin else {u: u for u in self.adj}
        self.taxa = dict(taxa) if taxa else {u: () for u in self.adj}
        self.root = root
        self._validate()

    @property
    def n(self):
        return len(self.adj)

    def nodes(self):
        return sorted(self.adj)

    def edges(self):
        return sorted((u, v) for u in self.adj for v in self.adj[u] if u < v)

    def degree(self, u):
        return len(self.adj[u])

    def leaves(self):
        """Degree-<=1 nodes (includes an isolated single node)."""
        return [u for u in self.nodes() if self.degree(u) <= 1]

    def __repr__(self):
        return f"<CoreTree n={self.n}>"

    def _validate(self):
        nodes = list(self.adj)
        if not nodes:
            raise TreeError("empty core tree")
        if len(self.edges()) != len(nodes) - 1:
            raise TreeError("core edge count does not match a tree")
        reached = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            x = stack.pop()
            for y in self.adj[x]:
                if y not in reached:
                    reached.add(y)
                    stack.append(y)
        if len(reached) != len(nodes):
            raise TreeError("core tree is not connected")
        for u in nodes:
            if self.degree(u) > 3:
                raise TreeError(f"core node {u} has degree {self.degree(u)}")


# --------------------------------------------------------------------------
# Newick parsing
# --------------------------------------------------------------------------

_LABEL_CHARS = set(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_."
)


def parse_newick(text, mode="auto"):
    """Parse a single Newick expression into a PhyloTree.

    ``mode`` is one of ``rooted``, ``unrooted`` or ``auto``.  A degree-2 top
    node is suppressed in unrooted mode; in auto mode a trifurcating top node
    yields an unrooted tree and a bifurcating one a rooted tree.  Branch
    lengths are parsed and ignored.  Multifurcations (other than a
    trifurcating top node in unrooted/auto mode) are rejected.
    """
    if mode not in ("rooted", "unrooted", "auto"):
        raise ValueError(f"unknown parse mode {mode!r}")
    s = text.strip()
    pos = 0

    def error(msg):
        raise NewickError(msg, pos)

    def peek():
        return s[pos] if pos < len(s) else ""

    def skip_ws():
        nonlocal pos
        while pos < len(s) and s[pos].isspace():
            pos += 1

    def read_label():
        nonlocal pos
        start = pos
        while pos < len(s) and s[pos] in _LABEL_CHARS:
            pos += 1
        return s[start:pos]

    def skip_length():
        # ":<number>" after a subtree; value discarded
        nonlocal pos
        skip_ws()
        if peek() == ":":
            pos += 1
            start = pos
            while pos < len(s) and (s[pos].isdigit() or s[pos] in ".eE+-"):
                pos += 1
            if pos == start:
                error("expected branch length after ':'")

    # children(list) for internal nodes, or taxon name for leaves
    def read_subtree():
        nonlocal pos
        skip_ws()
        if peek() == "(":
            pos += 1
            children = [read_subtree()]
            skip_ws()
            while peek() == ",":
                pos += 1
                children.append(read_subtree())
                skip_ws()
            if peek() != ")":
                error("unbalanced parentheses")
            pos += 1
            read_label()  # internal label (support value etc.), ignored
            skip_length()
            return children
        name = read_label()
        if not name:
            error("expected leaf label or '('")
        skip_length()
        return name

    top = read_subtree()
    skip_ws()
    if peek() != ";":
        error("expected ';'")
    pos += 1
    skip_ws()
    if pos != len(s):
        error("trailing characters after ';'")
    if isinstance(top, str):
        raise TreeError("fewer than 2 leaves")

    # decide rootedness
    top_deg = len(top)
    if mode == "auto":
        rooted = top_deg == 2
    else:
        rooted = mode == "rooted"
    if rooted and top_deg != 2:
        raise TreeError(f"rooted tree must have a bifurcating top node, got {top_deg}")
    if not rooted and top_deg not in (2, 3):
        raise TreeError(f"top node of unrooted tree must have 2 or 3 children, got {top_deg}")

    # build adjacency, ids in parse order (parents before children)
    adj = {}
    labels = {}

    def build(node):
        u = len(adj)
        adj[u] = []
        if isinstance(node, str):
            labels[u] = node
        else:
            if len(node) != 2:
                raise TreeError(f"multifurcating internal node with {len(node)} children")
            for child in node:
                c = build(child)
                adj[u].append(c)
                adj[c].append(u)
        return u

    if rooted:
        root = len(adj)
        adj[root] = []
        for child in top:
            c = build(child)
            adj[root].append(c)
            adj[c].append(root)
        tree = PhyloTree(adj, labels, root=root)
    else:
        if top_deg == 3:
            r = len(adj)
            adj[r] = []
            for child in top:
                c = build(child)
                adj[r].append(c)
                adj[c].append(r)
            tree = PhyloTree(adj, labels, root=None)
        else:
            # suppress the degree-2 top node
            ca = build(top[0])
            cb = build(top[1])
            adj[ca].append(cb)
            adj[cb].append(ca)
            tree = PhyloTree(adj, labels, root=None)
    if tree.n < 2:
        raise TreeError("fewer than 2 leaves")
    return tree


# --------------------------------------------------------------------------
# Canonical serialization
# --------------------------------------------------------------------------

def serialize_newick(tree):
    """Canonical Newick string; inverse of parse_newick up to isomorphism.

    Children are ordered by smallest descendant taxon.  Unrooted trees are
    written from the tree centre, so the output is a pure isomorphism
    invariant: two trees serialize identically iff they are equal up to an
    isomorphism that is the identity on X.
    """
    if tree.n == 1:
        return next(iter(tree.labels.values())) + ";"

    memo = {}

    def emit(start, parent):
        # (text, min taxon) for the subtree of start away from parent
        stack = [(start, parent, False)]
        while stack:
            u, p, expanded = stack.pop()
            kids = [v for v in tree.adj[u] if v != p]
            if not kids:
                memo[(u, p)] = (tree.labels[u], tree.labels[u])
            elif not expanded:
                stack.append((u, p, True))
                for v in kids:
                    stack.append((v, u, False))
            else:
                parts = sorted((memo[(v, u)] for v in kids), key=lambda t: t[1])
                text = "(" + ",".join(t[0] for t in parts) + ")"
                memo[(u, p)] = (text, parts[0][1])
        return memo[(start, parent)]

    if tree.is_rooted:
        return emit(tree.root, None)[0] + ";"

    centre = _tree_centre(tree.adj)
    if len(centre) == 2:
        u, v = centre
        parts = sorted([emit(u, v), emit(v, u)], key=lambda t: t[1])
        return "(" + ",".join(t[0] for t in parts) + ");"
    return emit(centre[0], None)[0] + ";"


def _tree_centre(adj):
    """The 1 or 2 middle nodes of a tree (iterative leaf stripping)."""
    degree = {u: len(vs) for u, vs in adj.items()}
    if len(degree) <= 2:
        return sorted(degree)
    remaining = set(adj)
    layer = [u for u in adj if degree[u] <= 1]
    while len(remaining) > 2:
        nxt = []
        for u in layer:
            remaining.discard(u)
            for v in adj[u]:
                if v in remaining:
                    degree[v] -= 1
                    if degree[v] == 1:
                        nxt.append(v)
        layer = nxt
    return sorted(remaining)


def tree_equal(t1, t2):
    """Equality up to isomorphism fixing the taxa labels."""
    return serialize_newick(t1) == serialize_newick(t2)


# --------------------------------------------------------------------------
# Derived constructions
# --------------------------------------------------------------------------

def restrict(tree, subset):
    """T|subset: minimal spanning subtree with degree-2 nodes suppressed.

    Rooted input gives a rooted restriction (rooted at the LCA of the
    subset); unrooted input gives an unrooted restriction.
    """
    subset = frozenset(subset)
    if not subset:
        raise TreeError("empty restriction subset")
    taxa = set(tree.labels.values())
    unknown = subset - taxa
    if unknown:
        raise TreeError(f"unknown taxa in restriction: {sorted(unknown)}")

    marked = {u for u, name in tree.labels.items() if name in subset}
    span = _spanning_nodes(tree.adj, marked, tree.root)

    if len(subset) == 1:
        leaf = next(iter(marked))
        name = tree.labels[leaf]
        return PhyloTree({0: ()}, {0: name},
                         root=0 if tree.is_rooted else None, validate=False)

    # subgraph on span, then suppress degree-2 nodes (keep the top for rooted)
    sub = {u: [v for v in tree.adj[u] if v in span] for u in span}
    top = None
    if tree.is_rooted:
        top = _lca_in_span(tree, span, marked)
    for u in list(sub):
        if len(sub[u]) == 2 and u not in marked and u != top:
            a, b = sub[u]
            sub[a].remove(u)
            sub[b].remove(u)
            sub[a].append(b)
            sub[b].append(a)
            del sub[u]

    relabel = {u: i for i, u in enumerate(sorted(sub))}
    adj = {relabel[u]: [relabel[v] for v in vs] for u, vs in sub.items()}
    labels = {relabel[u]: tree.labels[u] for u in sub if u in marked}
    root = relabel[top] if top is not None else None
    return PhyloTree(adj, labels, root=root)


def _parent_map(adj, start):
    parent = {start: None}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in parent:
                parent[y] = x
                stack.append(y)
    return parent


def _spanning_nodes(adj, marked, root):
    """Nodes on the union of pairwise paths between ``marked`` nodes."""
    anchor = next(iter(marked))
    parent = _parent_map(adj, anchor)
    span = set()
    for target in marked:
        x = target
        while x is not None and x not in span:
            span.add(x)
            x = parent[x]
    return span


def _lca_in_span(tree, span, marked):
    """Topmost span node seen from the root (the subset's LCA)."""
    parent = _parent_map(tree.adj, tree.root)
    for u in span:
        if parent[u] not in span:
            return u
    raise AssertionError("connected span must have a topmost node")


def core_tree(tree):
    """CoreTree of an unrooted binary tree with n >= 4 taxa."""
    if tree.is_rooted:
        raise TreeError("core_tree expects an unrooted tree")
    if tree.n < 4:
        raise TreeError(f"core_tree needs n >= 4 taxa, got {tree.n}")
    internal = [u for u in tree.nodes() if u not in tree.labels]
    relabel = {u: i for i, u in enumerate(sorted(internal))}
    adj = {
        relabel[u]: [relabel[v] for v in tree.adj[u] if v not in tree.labels]
        for u in internal
    }
    taxa = {
        relabel[u]: tuple(sorted(
            tree.labels[v] for v in tree.adj[u] if v in tree.labels
        ))
        for u in internal
    }
    origin = {relabel[u]: u for u in internal}
    core = CoreTree(adj, origin=origin, taxa=taxa)
    assert sum(core.weights.values()) == tree.n
    return core


def root_by_subdivision(tree, edge):
    """Root an unrooted tree at a new node subdividing ``edge``."""
    if tree.is_rooted:
        raise TreeError("tree is already rooted")
    u, v = edge
    if v not in tree.adj.get(u, ()):
        raise TreeError(f"edge {edge} not in tree")
    adj = {x: list(ys) for x, ys in tree.adj.items()}
    r = max(adj) + 1
    adj[u].remove(v)
    adj[v].remove(u)
    adj[r] = [u, v]
    adj[u].append(r)
    adj[v].append(r)
    return PhyloTree(adj, tree.labels, root=r)


def default_root_edge(tree):
    """Pendant edge of the smallest taxon (canonical rooting choice)."""
    leaf = tree.leaf_of(min(tree.labels.values()))
    return tuple(sorted((leaf, tree.adj[leaf][0])))


def rooted_view(tree):
    """The tree itself if rooted, else rooted at the canonical pendant edge."""
    if tree.is_rooted:
        return tree
    return root_by_subdivision(tree, default_root_edge(tree))


# --------------------------------------------------------------------------
# Generators
# --------------------------------------------------------------------------

def _taxon_names(n):
    if n <= 26:
        return [chr(ord("a") + i) for i in range(n)]
    return [f"t{i:03d}" for i in range(1, n + 1)]


def generate(family, size, seed=0):
    """Tree generators for tests and lower-bound experiments.

    random      -> PhyloTree, sequential uniform leaf attachment (seeded;
                   not uniform over tree shapes)
    caterpillar -> PhyloTree with taxa in alphabetical order along the spine
    comb        -> CoreTree C_k: shaft of k nodes, a length-2 tooth on each
    appendix_c  -> CoreTree T_k: k copies of the 22-node lower-bound piece
                   attached to a single starting node; good tree by
                   construction, designated root on the last piece
    """
    if family == "random":
        return _random_tree(size, seed)
    if family == "caterpillar":
        return _caterpillar(size)
    if family == "comb":
        return _comb(size)
    if family == "appendix_c":
        return _appendix_c_tree(size)
    raise ValueError(f"unknown family {family!r}")


def _random_tree(n, seed):
    if n < 2:
        raise TreeError("random tree needs n >= 2")
    names = _taxon_names(n)
    rng = random.Random(seed)
    adj = {0: [1], 1: [0]}
    labels = {0: names[0], 1: names[1]}
    edges = [(0, 1)]
    for i in range(2, n):
        u, v = edges[rng.randrange(len(edges))]
        w = len(adj)
        leaf = w + 1
        adj[u].remove(v)
        adj[v].remove(u)
        adj[w] = [u, v, leaf]
        adj[u].append(w)
        adj[v].append(w)
        adj[leaf] = [w]
        labels[leaf] = names[i]
        edges.remove((u, v))
        edges.extend([(u, w), (w, v), (w, leaf)])
    return PhyloTree(adj, labels)


def _caterpillar(n):
    if n < 2:
        raise TreeError("caterpillar needs n >= 2")
    names = _taxon_names(n)
    if n == 2:
        return PhyloTree({0: [1], 1: [0]}, {0: names[0], 1: names[1]})
    if n == 3:
        return PhyloTree(
            {0: [1, 2, 3], 1: [0], 2: [0], 3: [0]},
            {1: names[0], 2: names[1], 3: names[2]},
        )
    adj = {}
    labels = {}

    def new_node():
        u = len(adj)
        adj[u] = []
        return u

    def link(a, b):
        adj[a].append(b)
        adj[b].append(a)

    spine = [new_node() for _ in range(n - 2)]
    for a, b in zip(spine, spine[1:]):
        link(a, b)
    first = new_node()
    labels[first] = names[0]
    link(spine[0], first)
    for i in range(1, n - 1):
        leaf = new_node()
        labels[leaf] = names[i]
        link(spine[i - 1], leaf)
    last = new_node()
    labels[last] = names[n - 1]
    link(spine[-1], last)
    return PhyloTree(adj, labels)


def _comb(k):
    if k < 1:
        raise TreeError("comb needs k >= 1 teeth")
    adj = {}

    def link(a, b):
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)

    for i in range(k):
        shaft = 3 * i
        adj.setdefault(shaft, [])
        if i:
            link(3 * (i - 1), shaft)
        link(shaft, shaft + 1)
        link(shaft + 1, shaft + 2)
    return CoreTree(adj)


# The 22-node repeating piece of the lower-bound construction.  Offsets are
# relative node ids; the piece's node 0 becomes the new designated root and
# ATTACH is the piece node joined to the previous root.  Shape: a 6-node
# shaft carrying two Y-shaped 6-node teeth and two plain 2-node teeth.
_PIECE_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4), (4, 5),          # shaft
    (1, 6), (6, 7), (7, 8), (8, 9), (7, 10), (10, 11),     # Y tooth at 1
    (2, 12), (12, 13), (13, 14), (14, 15), (13, 16), (16, 17),  # Y tooth at 2
    (4, 18), (18, 19),                                # plain tooth at 4
    (5, 20), (20, 21),                                # plain tooth at 5
)
_PIECE_SIZE = 22
_PIECE_ATTACH = 5
_PIECE_ROOT = 0


def appendix_c_piece():
    """Edge list of the 22-node piece plus its attach and root offsets."""
    return _PIECE_EDGES, _PIECE_SIZE, _PIECE_ATTACH, _PIECE_ROOT


def _appendix_c_tree(k):
    if k < 0:
        raise TreeError("appendix_c needs k >= 0 repetitions")
    adj = {0: []}
    root = 0
    for _ in range(k):
        base = len(adj)
        for off in range(_PIECE_SIZE):
            adj[base + off] = []
        for a, b in _PIECE_EDGES:
            adj[base + a].append(base + b)
            adj[base + b].append(base + a)
        adj[base + _PIECE_ATTACH].append(root)
        adj[root].append(base + _PIECE_ATTACH)
        root = base + _PIECE_ROOT
    return CoreTree(adj, root=root)


# --------------------------------------------------------------------------
# Good-tree transformation
# --------------------------------------------------------------------------

def is_good_tree(core):
    """True iff no two adjacent nodes both have degree 2."""
    return not _find_bad_pair(core.adj)


def _find_bad_pair(adj):
    for u in sorted(adj):
        if len(adj[u]) != 2:
            continue
        for v in sorted(adj[u]):
            if len(adj[v]) == 2:
                return (u, v) if u < v else (v, u)
    return None


def good_tree_transform(core):
    """Rewire adjacent degree-2 pairs until the tree is good.

    Each step takes adjacent degree-2 nodes v1, v2 with outer neighbours
    v0, v3 and replaces the edge v0-v1 by v0-v2.  The legal-matching count
    never decreases and the node count is preserved.  Smallest-id pairs are
    rewired first so the output is deterministic.
    """
    adj = {u: list(vs) for u, vs in core.adj.items()}
    while True:
        pair = _find_bad_pair(adj)
        if pair is None:
            break
        v1, v2 = pair
        v0 = next(x for x in adj[v1] if x != v2)
        adj[v0].remove(v1)
        adj[v1].remove(v0)
        adj[v0].append(v2)
        adj[v2].append(v0)
    return CoreTree(adj, root=core.root)
