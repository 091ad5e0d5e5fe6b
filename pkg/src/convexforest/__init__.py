"""Exact algorithms for convex characters, agreement forests and d_MP2.

Counting and unranking of convex characters by size, hybrid FPT-threshold
maximum agreement forests (rooted and unrooted), the two-state maximum
parsimony distance via legal matchings on core trees, and verifiers for the
associated growth constants and certificates.
"""

from .phylo_core import (
    CoreTree,
    NewickError,
    PhyloTree,
    TreeError,
    core_tree,
    generate,
    good_tree_transform,
    is_good_tree,
    parse_newick,
    restrict,
    root_by_subdivision,
    serialize_newick,
    tree_equal,
)
from .parsimony import (
    CharacterError,
    Extension,
    FitchResult,
    PartialExtension,
    character,
    fitch_bottom_up,
    fitch_top_down,
    is_convex,
    mutation_edges,
    natural_partial_extension,
    optimal_extension,
    parsimony_score,
    two_state_from_covering,
)
from .convex_enum import (
    CountTable,
    build_count_tables,
    count_convex,
    iter_convex,
    steel_tail,
    unrank_convex,
)
from .agreement import (
    AgreementForest,
    TippingPoint,
    fpt_baseline,
    is_agreement_forest,
    maf_brute,
    maf_enumerate,
    maf_hybrid,
    rmaf,
    tipping_point,
)
from .matchings import (
    LegalityReport,
    MatchingError,
    VerificationError,
    appendix_c_verify,
    brute_force_matchings,
    comb_constants,
    count_fully_legal_brute,
    count_matchings,
    iter_matchings,
    legality,
    match_vectors,
    unrank_matching,
)
from .mp2 import (
    Mp2Result,
    character_of_matching,
    mp2_brute,
    mp2_distance,
)
from .bounds import (
    BoundVector,
    bilinear_B,
    conv_membership,
    set_s_vectors,
    tree_vector_membership,
    verify_set_s,
)

__version__ = "0.1.0"
