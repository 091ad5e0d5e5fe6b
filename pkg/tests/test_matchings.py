import math
import random

import pytest

from convexforest import (
    MatchingError,
    TreeError,
    appendix_c_verify,
    brute_force_matchings,
    comb_constants,
    core_tree,
    count_fully_legal_brute,
    count_matchings,
    generate,
    good_tree_transform,
    is_good_tree,
    iter_matchings,
    legality,
    match_vectors,
    unrank_matching,
)
from convexforest.matchings import (
    alpha_constant,
    comb_series_coefficients,
    round_up_4dp,
)
from convexforest.phylo_core import CoreTree
from conftest import (
    brute_matchings,
    fully_legal_oracle,
    legal_oracle,
    random_core,
)


def path_core(n):
    return CoreTree({i: [j for j in (i - 1, i + 1) if 0 <= j < n]
                     for i in range(n)})


@pytest.fixture
def p5():
    return path_core(5)


class TestMatchVectors:
    def test_single_node(self):
        core = CoreTree({0: []})
        assert match_vectors(core).root_vector == (1, 0, 0, 0, 0)

    def test_two_node_path(self):
        core = path_core(2)
        assert match_vectors(core).root_vector == (1, 0, 0, 1, 0)

    def test_p5_total(self, p5):
        assert match_vectors(p5).total == 6

    def test_root_must_be_leaf(self, p5):
        with pytest.raises(TreeError):
            match_vectors(p5, root=2)


class TestCounts:
    def test_p5(self, p5):
        assert count_matchings(p5, "all") == 8
        assert count_matchings(p5, "legal") == 6

    def test_quartet_core(self, quartet):
        core = core_tree(quartet)
        assert count_matchings(core, "all") == 2
        assert count_matchings(core, "legal") == 2

    def test_caterpillar_core(self, caterpillar7):
        core = core_tree(caterpillar7)
        assert count_matchings(core, "all") == 8
        assert count_matchings(core, "legal") == 6


class TestUnrank:
    def test_index_zero_is_empty(self, p5):
        assert unrank_matching(p5, "all", 0) == frozenset()
        assert unrank_matching(p5, "legal", 0) == frozenset()

    def test_p5_legal_set(self, p5):
        got = set(iter_matchings(p5, kind="legal"))
        e = [(0, 1), (1, 2), (2, 3), (3, 4)]
        expected = {
            frozenset(), frozenset({e[0]}), frozenset({e[1]}),
            frozenset({e[2]}), frozenset({e[3]}),
            frozenset({e[0], e[3]}),
        }
        assert got == expected

    def test_out_of_range(self, p5):
        with pytest.raises(IndexError):
            unrank_matching(p5, "legal", 6)

    @pytest.mark.parametrize("seed", range(50))
    def test_bijection_random_cores(self, seed):
        core = random_core(2 + seed % 15, seed * 7)
        brute = brute_matchings(core)
        legal = {m for m in brute if legal_oracle(core, m)}
        got_all = list(iter_matchings(core, kind="all"))
        got_legal = list(iter_matchings(core, kind="legal"))
        assert len(got_all) == len(set(got_all)) == len(brute)
        assert set(got_all) == set(brute)
        assert len(got_legal) == len(set(got_legal)) == len(legal)
        assert set(got_legal) == legal


class TestBruteForce:
    def test_single_edge(self):
        core = path_core(2)
        assert sorted(brute_force_matchings(core), key=len) == [
            frozenset(), frozenset({(0, 1)})
        ]

    def test_p5_count(self, p5):
        assert len(brute_force_matchings(p5)) == 8

    def test_star(self):
        star = CoreTree({0: [1, 2, 3], 1: [0], 2: [0], 3: [0]})
        assert len(brute_force_matchings(star)) == 4

    def test_cap(self):
        big = path_core(30)
        with pytest.raises(MatchingError):
            brute_force_matchings(big)


class TestLegality:
    def test_empty_matching_fully_legal(self, p5):
        assert legality(p5, frozenset(), math.inf).legal

    def test_p5_island(self, p5):
        report = legality(p5, {(0, 1), (2, 3)}, 2)
        assert not report.legal
        bad = report.components[report.violations[0]]
        assert bad.size == 2 and bad.incident == 2

    def test_weight_identity(self, p5):
        for m in brute_force_matchings(p5):
            for comp in legality(p5, m, 2).components:
                assert comp.weight == comp.size - comp.incident + 2

    def test_enclosed_island_of_weight_four(self):
        # two adjacent degree-3 nodes enclosed by 4 matching edges: the
        # island has s=6, m=4, total weight 4, so 6 > 2*4-2 fails
        adj = {
            0: [1, 2, 3], 1: [0, 4, 5],
            2: [0, 6], 3: [0, 7], 4: [1, 8], 5: [1, 9],
            6: [2], 7: [3], 8: [4], 9: [5],
        }
        core = CoreTree(adj)
        m = {(2, 6), (3, 7), (4, 8), (5, 9)}
        assert not legality(core, m, 6).legal
        assert legality(core, m, 5).legal
        island = next(c for c in legality(core, m, 6).components
                      if c.size == 6)
        assert island.weight == 4 and island.incident == 4
        assert not legality(core, m, math.inf).legal

    def test_non_matching_rejected(self, p5):
        with pytest.raises(MatchingError):
            legality(p5, {(0, 1), (1, 2)}, 2)
        with pytest.raises(MatchingError):
            legality(p5, {(0, 2)}, 2)

    def test_k_monotone(self):
        rng = random.Random(3)
        for _ in range(20):
            core = random_core(rng.randint(2, 10), rng.randrange(10 ** 6))
            for m in iter_matchings(core, kind="all"):
                verdicts = [legality(core, m, k).legal
                            for k in (0, 1, 2, 4, math.inf)]
                # k-legal implies k'-legal for smaller k'
                assert verdicts == sorted(verdicts, reverse=True)


class TestFullyLegal:
    def test_single_edge(self):
        assert count_fully_legal_brute(path_core(2)) == 2

    @pytest.mark.parametrize("k,expected", [(4, 117), (5, 451), (6, 1725),
                                            (7, 6547), (8, 24801)])
    def test_comb_counts(self, k, expected):
        comb = generate("comb", k)
        assert count_fully_legal_brute(comb, cap_edges=23) == expected

    def test_ratios_approach_inverse_rho(self):
        rho = comb_constants(40).rho
        counts = {k: count_fully_legal_brute(generate("comb", k),
                                             cap_edges=23)
                  for k in range(4, 9)}
        for k in range(5, 9):
            ratio = counts[k] / counts[k - 1]
            assert abs(ratio * rho - 1) < 0.05

    def test_matches_definition_oracle(self):
        rng = random.Random(8)
        for _ in range(25):
            core = random_core(rng.randint(2, 12), rng.randrange(10 ** 6))
            want = sum(1 for m in brute_matchings(core)
                       if fully_legal_oracle(core, m))
            assert count_fully_legal_brute(core) == want

    def test_p5_four_legal_equals_fully_legal(self, p5):
        # no component of P5 with more than 4 vertices can fail the test
        four = sum(1 for m in brute_force_matchings(p5)
                   if legality(p5, m, 4).legal)
        assert four == count_fully_legal_brute(p5)


class TestAppendixC:
    def test_report(self):
        report = appendix_c_verify()
        assert report.matrix == ((19888, 10144), (13456, 6880))
        assert report.eigenvalue_identities_ok
        assert report.alpha_4dp == 1.5895
        assert report.dp_ok and report.ok

    def test_growth_ratio_converges(self):
        report = appendix_c_verify()
        by_k = {k: z for k, z, *_ in report.dp_checks}
        alpha22 = report.dominant_eigenvalue
        ratio = by_k[5] / by_k[4]
        assert abs(ratio / alpha22 - 1) < 0.01


class TestCombConstants:
    def test_low_order_coefficients(self):
        coeffs = comb_series_coefficients(12)
        assert coeffs[2] == 3 and coeffs[3] == 8 and coeffs[4] == 24

    def test_constants(self):
        c = comb_constants(40)
        assert abs(c.rho - 0.2633) < 5e-4
        assert abs(c.beta - 1.5603) < 5e-4
        # geometric tail of the series: drift 30 -> 40 sits near (3*rho)**30
        assert c.truncation_drift < 1e-4

    def test_truncation_too_small(self):
        with pytest.raises(ValueError):
            comb_constants(5)

    def test_round_up_convention(self):
        assert round_up_4dp(alpha_constant()) == 1.5895
        assert round_up_4dp(0.75706) == 0.7571
        assert round_up_4dp(2.0649) == 2.0649


class TestGoodTrees:
    def test_every_matching_legal_on_good_trees(self):
        rng = random.Random(10)
        for _ in range(15):
            core = good_tree_transform(
                random_core(rng.randint(2, 12), rng.randrange(10 ** 6))
            )
            assert is_good_tree(core)
            assert count_matchings(core, "all") == \
                count_matchings(core, "legal")

    def test_growth_within_alpha_bound(self):
        # log(matchings)/n <= log(alpha) + 0.05 for good trees, 15..22 nodes
        bound = math.log(alpha_constant()) + 0.05
        rng = random.Random(11)
        for n in range(15, 23):
            for _ in range(4):
                core = good_tree_transform(
                    random_core(n, rng.randrange(10 ** 6))
                )
                assert core.n == n
                total = count_matchings(core, "all")
                assert math.log(total) / n <= bound
