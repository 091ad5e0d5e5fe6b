import math
import random

import pytest

from convexforest import (
    CharacterError,
    character,
    character_of_matching,
    core_tree,
    is_convex,
    iter_matchings,
    mp2_brute,
    mp2_distance,
    natural_partial_extension,
    parse_newick,
    parsimony_score,
)
from convexforest.mp2 import MODES, directional_maxima
from conftest import random_tree


def char(text):
    return character([list(part) for part in text.split("|")])


# found by a seeded search over random 6-taxon pairs: the two directional
# maxima differ (1 vs 2), which mp2 must survive by scanning both trees
ASYM_T1 = "((a,d),c,(f,(b,e)));"
ASYM_T2 = "(b,f,(a,(c,(d,e))));"


class TestCharacterOfMatching:
    def test_empty_matching(self, caterpillar7):
        core = core_tree(caterpillar7)
        assert character_of_matching(caterpillar7, core, frozenset()) == \
            char("abcdefg")

    def test_single_edge(self, caterpillar7):
        core = core_tree(caterpillar7)
        first_edge = min(core.edges())
        got = character_of_matching(caterpillar7, core, {first_edge})
        assert len(got) == 2
        assert min(len(b) for b in got) >= 2

    def test_caterpillar_all_eight(self, caterpillar7):
        core = core_tree(caterpillar7)
        got = {
            character_of_matching(caterpillar7, core, m)
            for m in iter_matchings(core, kind="all")
        }
        expected = {
            char(t) for t in (
                "abcdefg", "ab|cdefg", "abc|defg", "abcd|efg", "abcde|fg",
                "ab|cd|efg", "abc|de|fg", "ab|cde|fg",
            )
        }
        assert got == expected

    def test_blocks_convex_covering_two_taxa(self):
        rng = random.Random(6)
        for _ in range(12):
            t = random_tree(rng.randint(4, 9), rng.randrange(10 ** 6))
            core = core_tree(t)
            for m in iter_matchings(core, kind="all"):
                c = character_of_matching(t, core, m)
                assert all(len(b) >= 2 for b in c)
                assert is_convex(t, c)
                assert natural_partial_extension(t, c).covering

    def test_bijection_with_covering_characters(self):
        from conftest import (
            brute_convex_characters, canonical, covering_oracle,
            iter_partitions,
        )

        rng = random.Random(7)
        for _ in range(5):
            t = random_tree(rng.randint(4, 8), rng.randrange(10 ** 6))
            core = core_tree(t)
            via_matchings = [
                character_of_matching(t, core, m)
                for m in iter_matchings(core, kind="all")
            ]
            assert len(via_matchings) == len(set(via_matchings))
            convex = brute_convex_characters(t, min_block_size=2)
            brute = {c for c in convex if covering_oracle(t, c)}
            assert set(via_matchings) == brute

    def test_wrong_core_rejected(self, caterpillar7, quartet):
        with pytest.raises(CharacterError):
            character_of_matching(quartet, core_tree(caterpillar7), frozenset())


class TestMp2Distance:
    def test_identical_trees(self, caterpillar7):
        assert mp2_distance(caterpillar7, caterpillar7).distance == 0

    def test_quartet_pair(self, quartet_pair):
        result = mp2_distance(*quartet_pair)
        assert result.distance == 1
        assert result.witness == char("ab|cd")

    def test_modes_agree(self, quartet_pair):
        for mode in MODES:
            assert mp2_distance(*quartet_pair, mode).distance == 1

    @pytest.mark.parametrize("seed", range(15))
    def test_oracle_equivalence(self, seed):
        n = 4 + seed % 8
        t1 = random_tree(n, seed)
        t2 = random_tree(n, seed + 4242)
        want = mp2_brute(t1, t2).distance
        for mode in MODES:
            assert mp2_distance(t1, t2, mode).distance == want

    def test_witness_validity(self):
        rng = random.Random(12)
        for _ in range(10):
            t1 = random_tree(rng.randint(4, 9), rng.randrange(10 ** 6))
            t2 = random_tree(t1.n, rng.randrange(10 ** 6))
            res = mp2_distance(t1, t2)
            gap = abs(parsimony_score(t1, res.witness)
                      - parsimony_score(t2, res.witness))
            assert gap == res.distance

    def test_direction_reports_lower_side(self, quartet_pair):
        res = mp2_distance(*quartet_pair)
        t1, t2 = quartet_pair
        l1 = parsimony_score(t1, res.witness)
        l2 = parsimony_score(t2, res.witness)
        assert res.direction == ("first" if l1 < l2 else
                                 "second" if l2 < l1 else "tie")

    def test_legal_examines_subset_of_all(self):
        rng = random.Random(13)
        for _ in range(8):
            t1 = random_tree(rng.randint(4, 9), rng.randrange(10 ** 6))
            t2 = random_tree(t1.n, rng.randrange(10 ** 6))
            legal = mp2_distance(t1, t2, "legal")
            full = mp2_distance(t1, t2, "all")
            fully = mp2_distance(t1, t2, "fully_legal")
            assert fully.matchings_examined <= legal.matchings_examined \
                <= full.matchings_examined
            assert legal.distance == full.distance == fully.distance

    def test_small_n_falls_back_to_brute(self):
        t1 = parse_newick("(a,b,c);", "unrooted")
        t2 = parse_newick("(a,b,c);", "unrooted")
        result = mp2_distance(t1, t2)
        assert result.mode == "brute"
        assert result.distance == 0

    def test_jobs_deterministic(self, quartet_pair):
        seq = mp2_distance(*quartet_pair, "legal", jobs=1)
        par = mp2_distance(*quartet_pair, "legal", jobs=3)
        assert (seq.distance, seq.witness, seq.matchings_examined) == \
            (par.distance, par.witness, par.matchings_examined)

    def test_bad_mode(self, quartet_pair):
        with pytest.raises(ValueError):
            mp2_distance(*quartet_pair, "bogus")


class TestMp2Brute:
    def test_identical(self, caterpillar7):
        assert mp2_brute(caterpillar7, caterpillar7).distance == 0

    def test_quartet(self, quartet_pair):
        assert mp2_brute(*quartet_pair).distance == 1

    def test_caterpillar_vs_reversed(self):
        t1 = parse_newick("(((a,b),c),(d,(e,f)));", "unrooted")
        t2 = parse_newick("(((f,e),d),(c,(b,a)));", "unrooted")
        # same tree up to label-fixing isomorphism? no: reversal relabels
        want = mp2_brute(t1, t2).distance
        assert mp2_distance(t1, t2, "legal").distance == want

    def test_cap(self):
        t = random_tree(21, 0)
        with pytest.raises(ValueError):
            mp2_brute(t, random_tree(21, 1), cap=20)

    def test_examines_all_bipartitions(self, quartet):
        res = mp2_brute(quartet, quartet)
        assert res.matchings_examined == 2 ** 3 - 1


class TestAsymmetry:
    def test_directional_maxima_differ(self):
        t1 = parse_newick(ASYM_T1, "unrooted")
        t2 = parse_newick(ASYM_T2, "unrooted")
        up, down = directional_maxima(t1, t2)
        assert (up, down) == (1, 2)

    def test_distance_is_the_larger_direction(self):
        t1 = parse_newick(ASYM_T1, "unrooted")
        t2 = parse_newick(ASYM_T2, "unrooted")
        assert mp2_brute(t1, t2).distance == 2
        for mode in MODES:
            assert mp2_distance(t1, t2, mode).distance == 2

    def test_swapping_inputs_keeps_distance(self):
        t1 = parse_newick(ASYM_T1, "unrooted")
        t2 = parse_newick(ASYM_T2, "unrooted")
        assert mp2_distance(t1, t2).distance == \
            mp2_distance(t2, t1).distance
