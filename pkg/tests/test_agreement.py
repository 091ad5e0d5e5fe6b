import random

import pytest

from convexforest import (
    CharacterError,
    character,
    fpt_baseline,
    is_agreement_forest,
    is_convex,
    maf_brute,
    maf_enumerate,
    maf_hybrid,
    parse_newick,
    rmaf,
    root_by_subdivision,
    tipping_point,
)
from conftest import random_tree


def rooted_pair(n, seed):
    rng = random.Random(seed)
    out = []
    for t in (random_tree(n, seed), random_tree(n, seed + 5000)):
        edge = t.edges()[rng.randrange(len(t.edges()))]
        out.append(root_by_subdivision(t, edge))
    return out


class TestIsAgreementForest:
    def test_identical_trees_trivial(self, quartet):
        af = is_agreement_forest(quartet, quartet, [quartet.taxa])
        assert af.valid and af.size == 1

    def test_condition_one_fails(self, quartet_pair):
        t1, t2 = quartet_pair
        af = is_agreement_forest(t1, t2, [t1.taxa])
        assert not af.valid
        assert "condition 1" in af.reason

    def test_size_two_witness(self, quartet_pair):
        t1, t2 = quartet_pair
        af = is_agreement_forest(t1, t2, [["a"], ["b", "c", "d"]])
        assert af.valid and af.size == 2

    def test_condition_two_fails(self, quartet_pair):
        # {ab, cd} restricts to cherries in both trees, but in the second
        # tree both spanning paths run through the middle edge
        t1, t2 = quartet_pair
        af = is_agreement_forest(t1, t2, [["a", "b"], ["c", "d"]])
        assert not af.valid
        assert "condition 2" in af.reason

    def test_condition_two_fails_same_tree(self):
        t1 = parse_newick("((a,b),(c,d));", "unrooted")
        af = is_agreement_forest(t1, t1, [["a", "c"], ["b", "d"]])
        assert not af.valid
        assert "condition 2" in af.reason

    def test_taxa_mismatch(self, quartet):
        other = parse_newick("((a,b),(c,e));", "unrooted")
        with pytest.raises(CharacterError):
            is_agreement_forest(quartet, other, [quartet.taxa])

    def test_forests_are_convex_on_both(self, quartet_pair):
        t1, t2 = quartet_pair
        af = is_agreement_forest(t1, t2, [["a"], ["b", "c", "d"]])
        assert af.valid
        assert is_convex(t1, af.partition)
        assert is_convex(t2, af.partition)


class TestMafEnumerate:
    def test_identical(self, caterpillar7):
        assert maf_enumerate(caterpillar7, caterpillar7).size == 1

    def test_quartet_pair(self, quartet_pair):
        af = maf_enumerate(*quartet_pair)
        assert af.size == 2
        assert is_agreement_forest(*quartet_pair, af.partition).valid

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_partition_oracle(self, seed):
        n = 4 + seed % 4
        t1 = random_tree(n, seed)
        t2 = random_tree(n, seed + 1000)
        assert maf_enumerate(t1, t2).size == maf_brute(t1, t2).size

    def test_min_size_floor(self, quartet_pair):
        af = maf_enumerate(*quartet_pair, min_size=3)
        assert af.size >= 3
        assert is_agreement_forest(*quartet_pair, af.partition).valid


class TestFptBaseline:
    def test_identical_k1(self, caterpillar7):
        af = fpt_baseline(caterpillar7, caterpillar7, 1)
        assert af is not None and af.size == 1

    def test_quartet_k1_none(self, quartet_pair):
        assert fpt_baseline(*quartet_pair, 1) is None

    def test_quartet_k2(self, quartet_pair):
        af = fpt_baseline(*quartet_pair, 2)
        assert af is not None and af.size == 2
        assert af.size == maf_enumerate(*quartet_pair).size

    def test_bad_k(self, quartet_pair):
        with pytest.raises(ValueError):
            fpt_baseline(*quartet_pair, 0)


class TestMafHybrid:
    def test_identical_uses_oracle(self, caterpillar7):
        af = maf_hybrid(caterpillar7, caterpillar7)
        assert af.size == 1 and af.mode_used == "fpt" and af.k_tried == 1

    def test_quartet_oracle_phase(self, quartet_pair):
        af = maf_hybrid(*quartet_pair, c=0.7571)
        assert af.size == 2 and af.mode_used == "fpt"

    def test_enumeration_phase_exercised(self, quartet_pair):
        # c = 0.25 caps the oracle at k=1, forcing enumeration
        af = maf_hybrid(*quartet_pair, c=0.25)
        assert af.size == 2 and af.mode_used == "enum"

    @pytest.mark.parametrize("c", [0.25, 0.7571])
    @pytest.mark.parametrize("seed", [3, 8, 21])
    def test_agrees_with_enumerate(self, c, seed):
        n = 4 + seed % 4
        t1 = random_tree(n, seed)
        t2 = random_tree(n, seed + 999)
        assert maf_hybrid(t1, t2, c=c).size == maf_enumerate(t1, t2).size

    def test_every_result_is_valid_forest(self, quartet_pair):
        af = maf_hybrid(*quartet_pair)
        assert is_agreement_forest(*quartet_pair, af.partition).valid

    def test_custom_oracle_pluggable(self, quartet_pair):
        calls = []

        def oracle(t1, t2, k):
            calls.append(k)
            return fpt_baseline(t1, t2, k)

        af = maf_hybrid(*quartet_pair, oracle=oracle)
        assert af.size == 2
        assert calls == [1, 2]

    def test_bad_c(self, quartet_pair):
        with pytest.raises(ValueError):
            maf_hybrid(*quartet_pair, c=0.0)


class TestRmaf:
    def test_identical(self):
        r = parse_newick("((a,b),(c,d));", "rooted")
        assert rmaf(r, r, "enumerate").size == 1

    def test_triple_example(self):
        r1 = parse_newick("((a,b),c);", "rooted")
        r2 = parse_newick("((a,c),b);", "rooted")
        assert rmaf(r1, r2, "enumerate").size == 2
        assert maf_brute(r1, r2).size == 2

    def test_rooted_order_matters(self):
        # same unrooted topology, different roots: rooted AF must see it
        r1 = parse_newick("((a,b),(c,d));", "rooted")
        r2 = parse_newick("(((a,b),c),d);", "rooted")
        size = rmaf(r1, r2, "enumerate").size
        assert size == maf_brute(r1, r2).size

    @pytest.mark.parametrize("seed", range(5))
    def test_hybrid_agrees_with_enumerate(self, seed):
        n = 4 + seed % 4
        r1, r2 = rooted_pair(n, seed)
        want = rmaf(r1, r2, "enumerate").size
        assert rmaf(r1, r2, "hybrid").size == want
        assert maf_brute(r1, r2).size == want

    def test_unrooted_inputs_rejected(self, quartet_pair):
        from convexforest import TreeError

        with pytest.raises(TreeError):
            rmaf(*quartet_pair)


class TestTippingPoint:
    def test_base_three(self):
        tp = tipping_point(3.0)
        assert abs(tp.c - 0.7571) < 5e-4
        assert abs(tp.runtime_base - 2.2973) < 1e-3

    def test_base_242(self):
        tp = tipping_point(2.42)
        assert abs(tp.c - 0.8204) < 5e-4
        assert abs(tp.runtime_base - 2.0649) < 1e-3

    def test_degenerate_base_one(self):
        tp = tipping_point(1.0)
        assert abs(tp.c - 1.0) < 1e-6
        assert abs(tp.runtime_base - 1.0) < 1e-6

    def test_base_below_one_rejected(self):
        with pytest.raises(ValueError):
            tipping_point(0.9)

    def test_monotone_in_base(self):
        # a costlier oracle moves the switch-over earlier: c decreases in
        # the base (the paper's own pair 3 -> 0.7571, 2.42 -> 0.8204)
        grid = [1.5 + 0.25 * i for i in range(11)]
        cs = [tipping_point(b).c for b in grid]
        assert all(a > b for a, b in zip(cs, cs[1:]))

    def test_balances_equation(self):
        import math

        from convexforest.agreement import entropy

        for base in (3.0, 2.42, 1.7):
            tp = tipping_point(base, tol=1e-12)
            lhs = base ** tp.c
            rhs = math.exp((2 - tp.c) * entropy(tp.c / (2 - tp.c)))
            assert abs(lhs - rhs) < 1e-6
