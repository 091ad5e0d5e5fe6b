"""Two-state maximum parsimony distance through core-tree matchings.

The pipeline for one direction: enumerate matchings of the source tree's
core tree, map each matching to the covering convex character induced by
the components it cuts out, relabel that character red/blue through its
unique optimal extension, and score the absolute parsimony gap of the
two-state character on the two inputs.  Both directions are evaluated
because the directional maxima can differ.  Legal matchings suffice; the
state-flipping argument extends to every region whose total weight does not
exceed its incident matching edges, which is what the fully-legal mode
filters on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .phylo_core import core_tree
from .parsimony import (
    CharacterError,
    character,
    parsimony_score,
    two_state_from_covering,
)
from .matchings import legality, match_vectors, unrank_from_tables

MODES = ("legal", "all", "fully_legal")


@dataclass(frozen=True)
class Mp2Result:
    distance: int
    witness: tuple            # two-state character (single block if trivial)
    direction: str            # "first" | "second" | "tie": lower-score side
    mode: str
    matchings_examined: int


def character_of_matching(tree, core, matching):
    """Covering convex character induced by the components of core - M.

    Each component contributes the taxa its nodes are adjacent to in the
    originating tree; the matching is exactly the mutation-edge set of the
    character's unique optimal extension, so every block has >= 2 taxa.
    """
    core_taxa = sorted(x for ts in core.taxa.values() for x in ts)
    if tuple(core_taxa) != tree.taxa:
        raise CharacterError("core tree does not belong to the given tree")
    report = legality(core, matching, k=0)
    blocks = []
    for comp in report.components:
        taxa = [x for u in comp.nodes for x in core.taxa[u]]
        blocks.append(taxa)
    return character(blocks)


def _score_candidate(tree, tree2, witness):
    l1 = parsimony_score(tree, witness)
    l2 = parsimony_score(tree2, witness)
    gap = abs(l1 - l2)
    if l1 < l2:
        direction = "first"
    elif l2 < l1:
        direction = "second"
    else:
        direction = "tie"
    return gap, direction


def _better(candidate, best):
    """Larger distance first; ties by lexicographically smaller red block."""
    if candidate[0] != best[0]:
        return candidate[0] > best[0]
    return candidate[1][0] < best[1][0]


def _scan_range(args):
    """Best candidate over one rank range of one source tree's matchings."""
    tree, tree2, source_index, mode, lo, hi = args
    source = (tree, tree2)[source_index]
    core = core_tree(source)
    kind = "all" if mode == "all" else "legal"
    tables = match_vectors(core, kind=kind)
    best = None
    examined = 0
    for idx in range(lo, hi):
        matching = unrank_from_tables(tables, idx)
        if mode == "fully_legal" and not legality(
                core, matching, math.inf).legal:
            continue
        examined += 1
        f_c = character_of_matching(source, core, matching)
        witness = two_state_from_covering(source, f_c)
        if len(witness) < 2:
            continue  # trivial character, gap 0 is the baseline
        gap, direction = _score_candidate(tree, tree2, witness)
        candidate = (gap, witness, direction)
        if best is None or _better(candidate, best):
            best = candidate
    return best, examined


def mp2_distance(tree, tree2, mode="legal", jobs=1):
    """Maximum two-state parsimony gap via matchings of both core trees.

    ``legal`` is the headline algorithm, ``all`` scans every matching, and
    ``fully_legal`` additionally drops matchings enclosing any region of
    weight at most its incident matching edges.  All three return the same
    distance; witnesses are canonical per mode.  Inputs with fewer than 4
    taxa fall back to the bipartition brute force.  ``jobs`` splits the
    matching ranks over processes; the reduction order is fixed, so the
    result does not depend on the parallel width.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mp2 mode {mode!r}")
    if tree.taxa != tree2.taxa:
        raise CharacterError("trees are not on the same taxa set")
    if tree.n < 4:
        return mp2_brute(tree, tree2)

    kind = "all" if mode == "all" else "legal"
    tasks = []
    for source_index, source in enumerate((tree, tree2)):
        total = match_vectors(core_tree(source), kind=kind).total
        per = max(1, math.ceil(total / max(1, jobs)))
        for lo in range(0, total, per):
            tasks.append((tree, tree2, source_index, mode, lo,
                          min(total, lo + per)))

    if jobs <= 1:
        partials = [_scan_range(t) for t in tasks]
    else:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            partials = list(pool.map(_scan_range, tasks))

    trivial = character([tree.taxa])
    best = (0, trivial, "tie")
    examined = 0
    for candidate, count in partials:
        examined += count
        if candidate is not None and _better(candidate, best):
            best = candidate
    return Mp2Result(distance=best[0], witness=best[1], direction=best[2],
                     mode=mode, matchings_examined=examined)


def mp2_brute(tree, tree2, cap=20):
    """Exact maximum over all bipartitions of X (plus the trivial one)."""
    if tree.taxa != tree2.taxa:
        raise CharacterError("trees are not on the same taxa set")
    taxa = list(tree.taxa)
    n = len(taxa)
    if n > cap:
        raise ValueError(f"n={n} exceeds the brute-force cap {cap}")
    trivial = character([taxa])
    best = (0, trivial, "tie")
    first, rest = taxa[0], taxa[1:]
    examined = 0
    for mask in range(2 ** (n - 1) - 1):
        red = [first] + [x for i, x in enumerate(rest) if mask >> i & 1]
        blue = [x for i, x in enumerate(rest) if not mask >> i & 1]
        witness = character([red, blue])
        examined += 1
        gap, direction = _score_candidate(tree, tree2, witness)
        candidate = (gap, witness, direction)
        if _better(candidate, best):
            best = candidate
    return Mp2Result(distance=best[0], witness=best[1], direction=best[2],
                     mode="brute", matchings_examined=examined)


def directional_maxima(tree, tree2, cap=20):
    """(max over f of l(T2)-l(T), max of l(T)-l(T2)) by brute force.

    The two values can differ; the larger one is the distance.
    """
    taxa = list(tree.taxa)
    n = len(taxa)
    if n > cap:
        raise ValueError(f"n={n} exceeds the brute-force cap {cap}")
    first, rest = taxa[0], taxa[1:]
    up = down = 0
    for mask in range(2 ** (n - 1) - 1):
        red = [first] + [x for i, x in enumerate(rest) if mask >> i & 1]
        blue = [x for i, x in enumerate(rest) if not mask >> i & 1]
        witness = character([red, blue])
        l1 = parsimony_score(tree, witness)
        l2 = parsimony_score(tree2, witness)
        up = max(up, l2 - l1)
        down = max(down, l1 - l2)
    return up, down
