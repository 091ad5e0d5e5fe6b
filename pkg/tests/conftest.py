"""Shared fixtures and independent brute-force oracles.

The oracles here deliberately avoid the code paths they check: convexity is
decided by spanning-subtree disjointness (not Fitch), parsimony scores by
exhaustive minimisation over internal assignments (not Fitch), legality by
scanning for flanked single-edge islands (not the s > 2m - 2 form), and
full legality by the weight-vs-incident-edges definition directly.
"""

import itertools

import pytest

from convexforest import phylo_core
from convexforest.phylo_core import core_tree, generate


@pytest.fixture
def caterpillar7():
    """The 7-taxon caterpillar with cherries (a,b) and (f,g)."""
    return generate("caterpillar", 7)


@pytest.fixture
def quartet():
    return phylo_core.parse_newick("((a,b),(c,d));", mode="unrooted")


@pytest.fixture
def quartet_pair():
    t1 = phylo_core.parse_newick("((a,b),(c,d));", mode="unrooted")
    t2 = phylo_core.parse_newick("((a,c),(b,d));", mode="unrooted")
    return t1, t2


def random_tree(n, seed):
    return generate("random", n, seed=seed)


def random_core(n_nodes, seed):
    """Any max-degree-3 tree on n nodes arises as the core of a tree on
    n + 2 taxa, so this covers the whole core family."""
    return core_tree(generate("random", n_nodes + 2, seed=seed))


# --------------------------------------------------------------------------
# Independent oracles
# --------------------------------------------------------------------------

def iter_partitions(items):
    """All set partitions by recursive insertion (first item anchored)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in iter_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [[first] + partial[i]] + partial[i + 1:]
        yield [[first]] + partial


def spanning_set(tree, taxa):
    """Vertex set of the minimal subtree spanning the given taxa."""
    marked = {u for u, name in tree.labels.items() if name in set(taxa)}
    anchor = next(iter(marked))
    parent = {anchor: None}
    stack = [anchor]
    while stack:
        x = stack.pop()
        for y in tree.adj[x]:
            if y not in parent:
                parent[y] = x
                stack.append(y)
    span = set()
    for target in marked:
        x = target
        while x is not None and x not in span:
            span.add(x)
            x = parent[x]
    return span


def convex_oracle(tree, blocks):
    """Convexity as vertex-disjointness of the blocks' spanning subtrees."""
    spans = [spanning_set(tree, b) for b in blocks]
    for s1, s2 in itertools.combinations(spans, 2):
        if s1 & s2:
            return False
    return True


def covering_oracle(tree, blocks):
    covered = set()
    for b in blocks:
        covered |= spanning_set(tree, b)
    return covered == set(tree.adj)


def brute_convex_characters(tree, min_block_size=1):
    """All convex characters as a set of canonical block tuples."""
    out = set()
    for partition in iter_partitions(sorted(tree.taxa)):
        if any(len(b) < min_block_size for b in partition):
            continue
        if convex_oracle(tree, partition):
            out.add(canonical(partition))
    return out


def canonical(blocks):
    return tuple(sorted((tuple(sorted(b)) for b in blocks),
                        key=lambda b: b[0]))


def exhaustive_score(tree, char):
    """Minimum mutation count over every assignment of internal nodes."""
    state = {x: i for i, b in enumerate(char) for x in b}
    internal = [u for u in tree.adj if u not in tree.labels]
    edges = tree.edges()
    best = None
    for combo in itertools.product(range(len(char)), repeat=len(internal)):
        h = {u: s for u, s in zip(internal, combo)}
        for u, name in tree.labels.items():
            h[u] = state[name]
        cost = sum(1 for (u, v) in edges if h[u] != h[v])
        if best is None or cost < best:
            best = cost
    return best


def legal_oracle(core, matching):
    """No component that is a single edge flanked by two matching edges."""
    matching = {tuple(sorted(e)) for e in matching}
    nbr = {
        u: [v for v in core.adj[u] if tuple(sorted((u, v))) not in matching]
        for u in core.adj
    }
    seen = set()
    for s in core.nodes():
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            for y in nbr[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        if len(comp) == 2:
            incident = sum(
                1 for e in matching if e[0] in comp or e[1] in comp
            )
            if incident == 2:
                return False
    return True


def fully_legal_oracle(core, matching):
    """Every region's total weight strictly exceeds its incident edges."""
    matching = {tuple(sorted(e)) for e in matching}
    nbr = {
        u: [v for v in core.adj[u] if tuple(sorted((u, v))) not in matching]
        for u in core.adj
    }
    seen = set()
    for s in core.nodes():
        if s in seen:
            continue
        comp = {s}
        stack = [s]
        seen.add(s)
        while stack:
            x = stack.pop()
            for y in nbr[x]:
                if y not in seen:
                    seen.add(y)
                    comp.add(y)
                    stack.append(y)
        incident = sum(1 for e in matching if e[0] in comp or e[1] in comp)
        if sum(core.weights[u] for u in comp) <= incident:
            return False
    return True


def brute_matchings(core):
    """All matchings by subset filtering over the edge list."""
    edges = core.edges()
    out = []
    for r in range(len(edges) + 1):
        for combo in itertools.combinations(edges, r):
            ends = [x for e in combo for x in e]
            if len(ends) == len(set(ends)):
                out.append(frozenset(combo))
    return out
