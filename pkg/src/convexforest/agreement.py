"""Agreement forests and the hybrid FPT-threshold / enumeration strategy.

An agreement forest of two trees on X is a partition of X whose blocks
induce identical restricted trees in both inputs (condition 1) and whose
minimal spanning subtrees are pairwise vertex-disjoint in each input
(condition 2).  Condition 2 makes every agreement forest a convex character
on both trees, which is what lets enumeration find a minimum one.

The hybrid strategy runs a sound-and-complete "is there an AF of size <= k"
oracle for k up to a tipping point c*n and falls back to enumerating convex
characters with more than c*n states.  The oracle here is a pluggable
baseline that searches edge deletions; the tipping point balances the
oracle's base against the entropy bound on the convex-character tail.

Rooted inputs are handled throughout with the rooted reading of both
conditions: restrictions compare as rooted trees (rooted at the block's
LCA), and spanning subtrees are taken with the LCA included.  Attaching a
root taxon above each root, as the rooted formulation does, adds nodes no
block of X can reach, so the checks are evaluated on the trees as given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .phylo_core import TreeError, restrict, serialize_newick, _spanning_nodes
from .parsimony import CharacterError, character, validate_character
from .convex_enum import build_count_tables, iter_convex

C_UMAF_DEFAULT = 0.7571
C_RMAF_DEFAULT = 0.8204


@dataclass(frozen=True)
class AgreementForest:
    partition: tuple
    size: int
    valid: bool
    reason: str = None
    mode_used: str = None
    k_tried: int = None


def _check_taxa(t1, t2):
    if t1.taxa != t2.taxa:
        raise CharacterError("trees are not on the same taxa set")
    if t1.is_rooted != t2.is_rooted:
        raise TreeError("trees must be both rooted or both unrooted")


def is_agreement_forest(tree, tree2, partition):
    """Validity verdict for a partition, with the failing condition named."""
    _check_taxa(tree, tree2)
    partition = character(partition)
    validate_character(partition, tree.taxa)

    def fail(reason):
        return AgreementForest(partition=partition, size=len(partition),
                               valid=False, reason=reason)

    for block in partition:
        r1 = serialize_newick(restrict(tree, block))
        r2 = serialize_newick(restrict(tree2, block))
        if r1 != r2:
            return fail(f"condition 1: restrictions differ on block {block}")
    for label, t in (("T", tree), ("T'", tree2)):
        leaf_by_name = {name: u for u, name in t.labels.items()}
        owner = {}
        for i, block in enumerate(partition):
            marked = {leaf_by_name[x] for x in block}
            for u in _spanning_nodes(t.adj, marked, t.root):
                if u in owner:
                    return fail(
                        f"condition 2: blocks {owner[u]} and {i} share a "
                        f"node in {label}"
                    )
                owner[u] = i
    return AgreementForest(partition=partition, size=len(partition),
                           valid=True)


# --------------------------------------------------------------------------
# Exact algorithms
# --------------------------------------------------------------------------

def maf_enumerate(tree, tree2, min_size=1):
    """Minimum agreement forest among convex characters with >= min_size states.

    Sizes are scanned in increasing order, so the first size producing a
    valid forest is minimal; ties go to the lexicographically smallest
    partition.  With min_size=1 this is an exact MAF.
    """
    _check_taxa(tree, tree2)
    if min_size < 1:
        raise ValueError("min_size must be >= 1")
    n = tree.n
    for k in range(min_size, n + 1):
        best = None
        for char in iter_convex_size(tree, k):
            af = is_agreement_forest(tree, tree2, char)
            if af.valid and (best is None or af.partition < best.partition):
                best = af
        if best is not None:
            return AgreementForest(partition=best.partition, size=best.size,
                                   valid=True, mode_used="enum")
    raise AssertionError("the all-singletons partition is always an AF")


def iter_convex_size(tree, k):
    """All size-k convex characters of a tree, canonical order."""
    table = build_count_tables(tree)
    return iter_convex(tree, min_size=k, limit=table.size_count(k))


def fpt_baseline(tree, tree2, k):
    """Baseline oracle: an AF of size <= k if one exists, else None.

    Searches every way of deleting at most k-1 edges of the first tree and
    validates the induced partition.  Sound and complete, desk-scale only;
    stands in for branching-based oracles behind the same interface.
    """
    _check_taxa(tree, tree2)
    if k < 1:
        raise ValueError("k must be >= 1")
    edges = tree.edges()
    seen = set()
    for j in range(0, k):
        for cut in combinations(edges, j):
            partition = _partition_after_deletion(tree, cut)
            if partition in seen:
                continue
            seen.add(partition)
            if len(partition) > k:
                continue
            af = is_agreement_forest(tree, tree2, partition)
            if af.valid:
                return AgreementForest(partition=af.partition, size=af.size,
                                       valid=True, mode_used="fpt",
                                       k_tried=k)
    return None


def _partition_after_deletion(tree, cut):
    cut = set(cut)
    blocks = []
    seen = set()
    for start in tree.nodes():
        if start in seen:
            continue
        seen.add(start)
        stack = [start]
        block = []
        while stack:
            u = stack.pop()
            if u in tree.labels:
                block.append(tree.labels[u])
            for v in tree.adj[u]:
                edge = (u, v) if u < v else (v, u)
                if v not in seen and edge not in cut:
                    seen.add(v)
                    stack.append(v)
        if block:
            blocks.append(block)
    return character(blocks)


def maf_hybrid(tree, tree2, oracle=None, c=None):
    """Exact MAF via the FPT oracle up to ceil(c*n), then enumeration.

    The oracle must answer "is there an AF of size <= k" soundly and
    completely; incrementing k from 1 makes its first success minimal.  On
    oracle exhaustion the optimum exceeds the threshold and is found among
    convex characters of the first tree with more than ceil(c*n) states.
    """
    _check_taxa(tree, tree2)
    if oracle is None:
        oracle = fpt_baseline
    if c is None:
        c = C_RMAF_DEFAULT if tree.is_rooted else C_UMAF_DEFAULT
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    n = tree.n
    threshold = min(n, math.ceil(c * n))
    for k in range(1, threshold + 1):
        found = oracle(tree, tree2, k)
        if found is not None:
            return AgreementForest(partition=found.partition,
                                   size=found.size, valid=True,
                                   mode_used="fpt", k_tried=k)
    for k in range(threshold + 1, n + 1):
        best = None
        for char in iter_convex_size(tree, k):
            af = is_agreement_forest(tree, tree2, char)
            if af.valid and (best is None or af.partition < best.partition):
                best = af
        if best is not None:
            return AgreementForest(partition=best.partition, size=best.size,
                                   valid=True, mode_used="enum",
                                   k_tried=threshold)
    raise AssertionError("the all-singletons partition is always an AF")


def rmaf(tree, tree2, mode="enumerate", c=None):
    """Minimum rooted agreement forest via enumeration or the hybrid."""
    if not tree.is_rooted or not tree2.is_rooted:
        raise TreeError("rmaf expects rooted trees")
    if mode == "enumerate":
        return maf_enumerate(tree, tree2)
    if mode == "hybrid":
        return maf_hybrid(tree, tree2,
                          c=C_RMAF_DEFAULT if c is None else c)
    raise ValueError(f"unknown rmaf mode {mode!r}")


def maf_brute(tree, tree2):
    """Exhaustive-partition oracle: minimum AF over all partitions of X."""
    _check_taxa(tree, tree2)
    taxa = list(tree.taxa)
    best = None
    for partition in _set_partitions(taxa):
        af = is_agreement_forest(tree, tree2, partition)
        if af.valid:
            key = (af.size, af.partition)
            if best is None or key < (best.size, best.partition):
                best = af
    return AgreementForest(partition=best.partition, size=best.size,
                           valid=True, mode_used="brute")


def _set_partitions(items):
    """All set partitions via restricted-growth strings."""
    n = len(items)
    if n == 0:
        return
    rgs = [0] * n
    maxima = [0] * n

    while True:
        blocks = {}
        for x, b in zip(items, rgs):
            blocks.setdefault(b, []).append(x)
        yield list(blocks.values())
        i = n - 1
        while i > 0:
            if rgs[i] <= maxima[i - 1]:
                rgs[i] += 1
                maxima[i] = max(maxima[i - 1], rgs[i])
                for j in range(i + 1, n):
                    rgs[j] = 0
                    maxima[j] = maxima[i]
                break
            i -= 1
        else:
            return


# --------------------------------------------------------------------------
# Tipping point
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TippingPoint:
    base: float
    c: float
    runtime_base: float


def entropy(p):
    """Natural-log entropy H(p) with the 0*log(0) = 0 convention."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1 - p) * math.log(1 - p)


def tipping_point(base, tol=1e-9):
    """Solve base**c = exp((2-c) * H(c / (2-c))) for c on (c0, 1].

    c0 = 1 - 1/sqrt(5) is where the tail's largest term peaks; below it the
    tail no longer shrinks with c, so the balance point lies above.  The
    returned runtime base is base**c.
    """
    if base < 1:
        raise ValueError("oracle base must be >= 1")

    def gap(c):
        return c * math.log(base) - (2 - c) * entropy(c / (2 - c))

    c0 = 1 - 1 / math.sqrt(5)
    lo, hi = c0, 1.0
    if gap(lo + 1e-12) > 0:
        raise ValueError(f"base {base} has no tipping point in (c0, 1]")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    c = (lo + hi) / 2
    return TippingPoint(base=base, c=c, runtime_base=base ** c)
