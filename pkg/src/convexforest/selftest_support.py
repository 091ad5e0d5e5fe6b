"""Randomised oracle probes shared by the selftest command.

Each probe returns True when the exact algorithms agree with an independent
brute-force oracle on a seeded corpus.  The pytest suite runs the same kinds
of comparisons at larger scale; these are the quick desk checks.
"""

from __future__ import annotations

import math
import random

from . import agreement, matchings, mp2, phylo_core


def random_core(n_nodes, seed):
    """A random max-degree-3 tree: the core of a random tree on n+2 taxa."""
    return phylo_core.core_tree(
        phylo_core.generate("random", n_nodes + 2, seed=seed)
    )


def random_pair(n, seed):
    t1 = phylo_core.generate("random", n, seed=seed)
    t2 = phylo_core.generate("random", n, seed=seed + 10_000)
    return t1, t2


def random_rooted_pair(n, seed):
    rng = random.Random(seed)
    pair = []
    for t in random_pair(n, seed):
        edge = t.edges()[rng.randrange(len(t.edges()))]
        pair.append(phylo_core.root_by_subdivision(t, edge))
    return pair


def matching_dp_probe(seed, trials=30):
    rng = random.Random(seed)
    for _ in range(trials):
        core = random_core(rng.randint(2, 12), rng.randrange(10 ** 6))
        brute = matchings.brute_force_matchings(core)
        legal = {
            m for m in brute if matchings.legality(core, m, 2).legal
        }
        if matchings.count_matchings(core, "all") != len(brute):
            return False
        if matchings.count_matchings(core, "legal") != len(legal):
            return False
        if set(matchings.iter_matchings(core, kind="legal")) != legal:
            return False
    return True


def mp2_probe(seed, pairs=10):
    rng = random.Random(seed + 1)
    for _ in range(pairs):
        t1, t2 = random_pair(rng.randint(4, 9), rng.randrange(10 ** 6))
        want = mp2.mp2_brute(t1, t2).distance
        for mode in mp2.MODES:
            if mp2.mp2_distance(t1, t2, mode).distance != want:
                return False
    return True


def maf_probe(seed, pairs=4):
    rng = random.Random(seed + 2)
    for _ in range(pairs):
        n = rng.randint(4, 6)
        base_seed = rng.randrange(10 ** 6)
        t1, t2 = random_pair(n, base_seed)
        want = agreement.maf_brute(t1, t2).size
        if agreement.maf_enumerate(t1, t2).size != want:
            return False
        if agreement.maf_hybrid(t1, t2).size != want:
            return False
        r1, r2 = random_rooted_pair(n, base_seed)
        rooted_want = agreement.maf_brute(r1, r2).size
        if agreement.rmaf(r1, r2, "enumerate").size != rooted_want:
            return False
        if agreement.rmaf(r1, r2, "hybrid").size != rooted_want:
            return False
    return True


def good_tree_probe(seed, trials=25):
    rng = random.Random(seed + 3)
    for _ in range(trials):
        core = random_core(rng.randint(2, 12), rng.randrange(10 ** 6))
        good = phylo_core.good_tree_transform(core)
        if not phylo_core.is_good_tree(good):
            return False
        if good.n != core.n:
            return False
        before = matchings.count_matchings(core, "legal")
        after = matchings.count_matchings(good, "legal")
        if after < before:
            return False
    return True
