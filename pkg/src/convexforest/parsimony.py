"""Fitch scoring, convexity and extensions of characters.

A character is a partition of the taxa set, held in canonical form: a tuple
of blocks, each block a sorted tuple of taxon names, blocks ordered by their
smallest taxon.  State ids are block indices in this canonical order.

State sets in the bottom-up pass are bitmasks internally; the number of union
nodes equals the parsimony score, and the top-down pass realises an optimal
extension (ties resolved by smallest state id under the ``first`` policy, or
by a seeded RNG under ``seeded``).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .phylo_core import (
    PhyloTree,
    TreeError,
    _spanning_nodes,
    rooted_view,
)


class CharacterError(ValueError):
    """A character does not fit the tree or violates an operation's input."""


# --------------------------------------------------------------------------
# Characters
# --------------------------------------------------------------------------

def character(blocks):
    """Canonical form: sorted blocks, ordered by smallest taxon."""
    canon = tuple(sorted(
        (tuple(sorted(b)) for b in blocks if b),
        key=lambda b: b[0],
    ))
    if not canon:
        raise CharacterError("character has no blocks")
    return canon


def validate_character(char, taxa):
    taxa = set(taxa)
    seen = set()
    for block in char:
        for x in block:
            if x in seen:
                raise CharacterError(f"taxon {x!r} in two blocks")
            if x not in taxa:
                raise CharacterError(f"taxon {x!r} not in the tree")
            seen.add(x)
    if seen != taxa:
        missing = sorted(taxa - seen)
        raise CharacterError(f"character misses taxa {missing}")


def state_of_map(char):
    """taxon -> block index in canonical order."""
    return {x: i for i, block in enumerate(char) for x in block}


# --------------------------------------------------------------------------
# Fitch's algorithm
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FitchResult:
    tree: PhyloTree                 # the rooted view the passes ran on
    character: tuple
    score: int
    state_sets: dict                # node id -> frozenset of state ids


@dataclass(frozen=True)
class Extension:
    tree: PhyloTree
    character: tuple
    assignment: dict                # node id -> state id, total over V(tree)


@dataclass(frozen=True)
class PartialExtension:
    tree: PhyloTree
    character: tuple
    assignment: dict                # node id -> state id, covered nodes only
    covered: frozenset
    covering: bool


def _postorder(tree):
    """Cached (node, children) pairs in postorder for a rooted tree."""
    po = tree._cache.get("postorder")
    if po is None:
        po = []
        stack = [(tree.root, None, False)]
        while stack:
            u, parent, expanded = stack.pop()
            kids = tuple(v for v in tree.adj[u] if v != parent)
            if expanded or not kids:
                po.append((u, kids))
                continue
            stack.append((u, parent, True))
            for v in reversed(kids):
                stack.append((v, u, False))
        tree._cache["postorder"] = po
    return po


def _scoring_tree(tree):
    rv = tree._cache.get("rooted_view")
    if rv is None:
        rv = rooted_view(tree)
        tree._cache["rooted_view"] = rv
    return rv


def parsimony_score(tree, char):
    """l_f(T): minimum mutation edges over all extensions (Fitch count)."""
    validate_character(char, tree.taxa)
    rv = _scoring_tree(tree)
    state = state_of_map(char)
    masks = {}
    score = 0
    for u, kids in _postorder(rv):
        if not kids:
            masks[u] = 1 << state[rv.labels[u]]
            continue
        m = masks[kids[0]]
        for v in kids[1:]:
            inter = m & masks[v]
            if inter:
                m = inter
            else:
                m |= masks[v]
                score += 1
        masks[u] = m
    return score


def fitch_bottom_up(tree, char):
    """Bottom-up pass; unrooted input is rooted at the canonical pendant edge.

    The returned state sets refer to the rooted view carried in the result.
    """
    validate_character(char, tree.taxa)
    rv = _scoring_tree(tree)
    state = state_of_map(char)
    masks = {}
    score = 0
    for u, kids in _postorder(rv):
        if not kids:
            masks[u] = 1 << state[rv.labels[u]]
            continue
        m = masks[kids[0]]
        for v in kids[1:]:
            inter = m & masks[v]
            if inter:
                m = inter
            else:
                m |= masks[v]
                score += 1
        masks[u] = m
    sets = {
        u: frozenset(i for i in range(len(char)) if m >> i & 1)
        for u, m in masks.items()
    }
    return FitchResult(tree=rv, character=char, score=score, state_sets=sets)


def fitch_top_down(fitch, choice_policy="first", seed=0):
    """An optimal extension from bottom-up state sets.

    ``first`` picks the smallest state id at every arbitrary choice;
    ``seeded`` draws from a deterministic RNG.
    """
    if choice_policy not in ("first", "seeded"):
        raise ValueError(f"unknown choice policy {choice_policy!r}")
    rng = random.Random(seed) if choice_policy == "seeded" else None
    rv = fitch.tree

    def choose(options):
        options = sorted(options)
        return options[0] if rng is None else rng.choice(options)

    assignment = {}
    stack = [(rv.root, None)]
    while stack:
        u, parent = stack.pop()
        fu = fitch.state_sets[u]
        if parent is not None and assignment[parent] in fu:
            assignment[u] = assignment[parent]
        else:
            assignment[u] = choose(fu)
        for v in rv.adj[u]:
            if v != parent:
                stack.append((v, u))
    return Extension(tree=rv, character=fitch.character, assignment=assignment)


def optimal_extension(tree, char, choice_policy="first", seed=0):
    """An optimal extension mapped back onto the given tree's own nodes."""
    ext = fitch_top_down(fitch_bottom_up(tree, char), choice_policy, seed)
    if ext.tree is tree or set(ext.tree.adj) == set(tree.adj):
        return Extension(tree=tree, character=char, assignment=ext.assignment)
    # the rooted view added one subdividing node: drop it
    assignment = {
        u: s for u, s in ext.assignment.items() if u in tree.adj
    }
    return Extension(tree=tree, character=char, assignment=assignment)


def mutation_edges(tree, extension):
    """Bichromatic edges of an extension on ``tree``."""
    h = extension.assignment
    return frozenset(
        (u, v) for (u, v) in tree.edges() if h[u] != h[v]
    )


# --------------------------------------------------------------------------
# Convexity and natural extensions
# --------------------------------------------------------------------------

def is_convex(tree, char):
    """True iff the parsimony score equals (number of blocks - 1)."""
    return parsimony_score(tree, char) == len(char) - 1


def natural_partial_extension(tree, char):
    """Each state on the minimal spanning subtree of its block.

    Requires a convex character; the flag reports whether the partial
    extension covers every node (a natural covering extension).
    """
    if not is_convex(tree, char):
        raise CharacterError("character is not convex on the tree")
    leaf_by_name = {name: u for u, name in tree.labels.items()}
    assignment = {}
    for i, block in enumerate(char):
        marked = {leaf_by_name[x] for x in block}
        for u in _spanning_nodes(tree.adj, marked, tree.root):
            if u in assignment:
                raise CharacterError(
                    "spanning subtrees overlap; character not convex"
                )
            assignment[u] = i
    covered = frozenset(assignment)
    return PartialExtension(
        tree=tree,
        character=char,
        assignment=assignment,
        covered=covered,
        covering=len(covered) == len(tree.adj),
    )


def two_state_from_covering(tree, f_c):
    """Red/blue relabelling of a covering convex character.

    Cutting the mutation edges of the unique optimal extension leaves one
    component per state; those components linked by mutation edges form a
    tree whose unique bipartition yields the two-state character.  The side
    containing the smallest taxon is red and is returned as the first block.
    A single-block input degenerates to the one-colour labelling.
    """
    npe = natural_partial_extension(tree, f_c)
    if not npe.covering:
        raise CharacterError("character is not covering")
    if len(f_c) == 1:
        return character([f_c[0]])
    colour = {0: 0}
    links = {i: set() for i in range(len(f_c))}
    for (u, v) in tree.edges():
        a, b = npe.assignment[u], npe.assignment[v]
        if a != b:
            links[a].add(b)
            links[b].add(a)
    stack = [0]
    while stack:
        a = stack.pop()
        for b in links[a]:
            if b not in colour:
                colour[b] = 1 - colour[a]
                stack.append(b)
    # block 0 holds the smallest taxon in canonical order, so red = colour 0
    red = [x for i, block in enumerate(f_c) if colour[i] == 0 for x in block]
    blue = [x for i, block in enumerate(f_c) if colour[i] == 1 for x in block]
    return character([red, blue])
