"""Matchings on core trees: counting, unranking, legality, growth constants.

A matching of a core tree is *legal* when deleting its edges leaves no
component that is a single edge flanked by two matching edges.  Counting
runs over trees rooted at a leaf, with one 5-component vector per subtree:

    [a0, a1, b0, b1, e]

* ``b0`` -- legal, root uncovered, root has one child and one grandchild
  with the child covered (the fragile shape: a matched incoming edge would
  create an illegal island);
* ``b1`` -- legal, root covered, root has one child only;
* ``a0`` / ``a1`` -- the remaining legal matchings with the root uncovered /
  covered;
* ``e``  -- 1 exactly for the empty branch.

Subtree vectors combine through the bilinear map ``combine_vectors``; the
expansion of each component into nonnegative summands (the two negative
terms of a0 cancel against the expanded product) fixes a canonical order
used for unranking.  ``k``-legality generalises legality through the
``s > 2m - 2`` test on components with at most k vertices; ``fully legal``
means k-legal for every k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .phylo_core import CoreTree, TreeError, appendix_c_piece, generate


class MatchingError(ValueError):
    """Bad matching input or an exceeded brute-force cap."""


class VerificationError(RuntimeError):
    """A verification run found a mismatch against expected values."""


EMPTY_VECTOR = (0, 0, 0, 0, 1)

# class indices into the vector
A0, A1, B0, B1, E = range(5)


def combine_vectors(left, right):
    """Vector of a tree from its two (possibly empty) root branches.

    Works for any commutative-ring entries: integer counts in the DP,
    Decimal entries in the growth-bound verification.
    """
    a0l, a1l, b0l, b1l, el = left
    a0r, a1r, b0r, b1r, er = right
    sl = a0l + a1l + b0l + b1l
    sr = a0r + a1r + b0r + b1r
    return (
        (sl + el) * (sr + er) - b1l * er - el * b1r,
        sl * a0r + a0l * sr,
        b1l * er + el * b1r,
        a0l * er + el * a0r,
        el * 0,
    )


def _combine_all(left, right):
    """Same shape for unrestricted matchings; b0/b1 stay unused."""
    c0l, c1l, _, _, el = left
    c0r, c1r, _, _, er = right
    tl = c0l + c1l + el
    tr = c0r + c1r + er
    return (tl * tr, c0l * tr + tl * c0r, 0, 0, 0)


# Summand tables: (left class, right class, root edge added) per class, in
# canonical order.  The a0 product is expanded with (b1,e) and (e,b1)
# cancelled; a1 lists the left-root-edge group before the right one.
_FIVE = (A0, A1, B0, B1, E)
_LEGAL_SUMMANDS = {
    A0: tuple(
        (l, r, None)
        for l in _FIVE for r in _FIVE
        if (l, r) not in ((B1, E), (E, B1))
    ),
    A1: tuple((A0, r, "L") for r in (A0, A1, B0, B1))
        + tuple((l, A0, "R") for l in (A0, A1, B0, B1)),
    B0: ((B1, E, None), (E, B1, None)),
    B1: ((A0, E, "L"), (E, A0, "R")),
}
_THREE = (A0, A1, E)
_ALL_SUMMANDS = {
    A0: tuple((l, r, None) for l in _THREE for r in _THREE),
    A1: tuple((A0, r, "L") for r in _THREE)
        + tuple((l, A0, "R") for l in _THREE),
}


@dataclass(frozen=True)
class MatchTables:
    """Per-node matching vectors of a core tree rooted at a leaf."""

    core: CoreTree
    root: int
    kind: str
    kids: dict                      # node -> tuple of children (<= 2)
    vectors: dict                   # node -> 5-tuple of counts

    @property
    def root_vector(self):
        return self.vectors[self.root]

    @property
    def total(self):
        return sum(self.root_vector[:4])


def default_match_root(core):
    """The leaf with the smallest origin node id."""
    leaves = core.leaves()
    if not leaves:
        raise TreeError("core tree has no leaf to root at")
    return min(leaves, key=lambda u: core.origin[u])


def match_vectors(core, root=None, kind="legal"):
    """Exact per-subtree matching vectors; root must be a leaf."""
    if kind not in ("legal", "all"):
        raise ValueError(f"unknown matching kind {kind!r}")
    if root is None:
        root = default_match_root(core)
    if core.degree(root) > 1:
        raise TreeError(f"matching root {root} is not a leaf")
    combine = combine_vectors if kind == "legal" else _combine_all

    kids = {}
    order = []
    stack = [(root, None, False)]
    while stack:
        u, parent, expanded = stack.pop()
        if expanded:
            order.append(u)
            continue
        children = tuple(v for v in core.adj[u] if v != parent)
        kids[u] = children
        stack.append((u, parent, True))
        for v in reversed(children):
            stack.append((v, u, False))

    vectors = {}
    for u in order:
        ch = kids[u]
        vl = vectors[ch[0]] if len(ch) >= 1 else EMPTY_VECTOR
        vr = vectors[ch[1]] if len(ch) >= 2 else EMPTY_VECTOR
        vectors[u] = combine(vl, vr)
    return MatchTables(core=core, root=root, kind=kind, kids=kids,
                       vectors=vectors)


def count_matchings(core, kind="all"):
    """Exact number of matchings (``all``) or legal matchings (``legal``)."""
    return match_vectors(core, kind=kind).total


def _class_count(tables, u, cls, child_exists):
    if not child_exists:
        return 1 if cls == E else 0
    return 0 if cls == E else tables.vectors[u][cls]


def _unrank_node(tables, u, cls, idx):
    ch = tables.kids[u]
    summands = (_LEGAL_SUMMANDS if tables.kind == "legal"
                else _ALL_SUMMANDS)[cls]
    for cl, cr, root_edge in summands:
        nl = _class_count(tables, ch[0] if ch else None, cl, len(ch) >= 1)
        nr = _class_count(tables, ch[1] if len(ch) >= 2 else None, cr,
                          len(ch) >= 2)
        c = nl * nr
        if idx < c:
            il, ir = divmod(idx, nr)
            edges = []
            if cl != E:
                edges.extend(_unrank_node(tables, ch[0], cl, il))
            if cr != E:
                edges.extend(_unrank_node(tables, ch[1], cr, ir))
            if root_edge == "L":
                edges.append(tuple(sorted((u, ch[0]))))
            elif root_edge == "R":
                edges.append(tuple(sorted((u, ch[1]))))
            return edges
        idx -= c
    raise AssertionError("index exceeded summands; tables inconsistent")


def unrank_from_tables(tables, index):
    total = tables.total
    if not 0 <= index < total:
        raise IndexError(f"index {index} out of range for {total} matchings")
    classes = (A0, A1, B0, B1) if tables.kind == "legal" else (A0, A1)
    for cls in classes:
        c = tables.root_vector[cls]
        if index < c:
            return frozenset(_unrank_node(tables, tables.root, cls, index))
        index -= c
    raise AssertionError("unreachable")


def unrank_matching(core, kind, index, root=None):
    """The index-th matching in the canonical order of the recursion."""
    return unrank_from_tables(match_vectors(core, root=root, kind=kind),
                              index)


def iter_matchings(core, kind="legal", offset=0, limit=None, root=None):
    tables = match_vectors(core, root=root, kind=kind)
    stop = tables.total if limit is None else min(tables.total,
                                                  offset + limit)
    for idx in range(offset, stop):
        yield unrank_from_tables(tables, idx)


# --------------------------------------------------------------------------
# Brute-force oracles and legality
# --------------------------------------------------------------------------

def brute_force_matchings(core, cap_edges=22):
    """Every matching by branch-and-prune over the edge list."""
    edges = core.edges()
    if len(edges) > cap_edges:
        raise MatchingError(
            f"{len(edges)} edges exceed the brute-force cap {cap_edges}"
        )
    out = []
    used = set()
    chosen = []

    def rec(i):
        if i == len(edges):
            out.append(frozenset(chosen))
            return
        rec(i + 1)
        u, v = edges[i]
        if u not in used and v not in used:
            used.add(u)
            used.add(v)
            chosen.append(edges[i])
            rec(i + 1)
            chosen.pop()
            used.discard(u)
            used.discard(v)

    rec(0)
    return out


@dataclass(frozen=True)
class ComponentReport:
    nodes: tuple
    size: int          # s, number of vertices
    incident: int      # m, matching edges touching the component
    weight: int        # sum of node weights; always s - m + 2

    def satisfies(self, k):
        """The s > 2m - 2 test, binding only when size <= k."""
        return self.size > k or self.size > 2 * self.incident - 2


@dataclass(frozen=True)
class LegalityReport:
    k: object                       # int or math.inf
    components: tuple
    legal: bool
    violations: tuple               # indices of failing components


def legality(core, matching, k=2):
    """Per-component report and the k-legality verdict for a matching."""
    matching = frozenset(tuple(sorted(e)) for e in matching)
    edge_set = set(core.edges())
    seen_ends = set()
    for e in matching:
        if e not in edge_set:
            raise MatchingError(f"edge {e} not in the core tree")
        if e[0] in seen_ends or e[1] in seen_ends:
            raise MatchingError("edges share an endpoint; not a matching")
        seen_ends.update(e)

    remaining = {
        u: [v for v in core.adj[u] if tuple(sorted((u, v))) not in matching]
        for u in core.adj
    }
    components = []
    assigned = {}
    for start in core.nodes():
        if start in assigned:
            continue
        comp = [start]
        assigned[start] = len(components)
        stack = [start]
        while stack:
            x = stack.pop()
            for y in remaining[x]:
                if y not in assigned:
                    assigned[y] = len(components)
                    comp.append(y)
                    stack.append(y)
        comp = tuple(sorted(comp))
        s = len(comp)
        in_comp = set(comp)
        m = sum(1 for e in matching if e[0] in in_comp or e[1] in in_comp)
        weight = sum(core.weights[u] for u in comp)
        if weight != s - m + 2:
            raise AssertionError("weight identity s - m + 2 violated")
        components.append(ComponentReport(nodes=comp, size=s, incident=m,
                                          weight=weight))
    violations = tuple(
        i for i, c in enumerate(components) if not c.satisfies(k)
    )
    return LegalityReport(k=k, components=tuple(components),
                          legal=not violations, violations=violations)


def count_fully_legal_brute(core, cap_edges=22):
    """Exact count of fully legal matchings by filtered brute force."""
    return sum(
        1 for m in brute_force_matchings(core, cap_edges)
        if legality(core, m, math.inf).legal
    )


# --------------------------------------------------------------------------
# Growth constants
# --------------------------------------------------------------------------

def round_up_4dp(x):
    """Constants convention: four decimals, always rounded up."""
    return math.ceil(x * 10000 - 1e-9) / 10000


ALPHA_RADICAND = 2793745
ALPHA_EIGENVALUE_INT = 13384
TRANSFER_MATRIX = ((19888, 10144), (13456, 6880))


def alpha_constant():
    """Growth base of legal matchings: (13384 + 8*sqrt(2793745))**(1/22)."""
    return (ALPHA_EIGENVALUE_INT + 8 * math.sqrt(ALPHA_RADICAND)) ** (1 / 22)


@dataclass(frozen=True)
class AppendixCReport:
    matrix: tuple
    matrix_expected: tuple
    matrix_ok: bool
    eigenvalue_identities_ok: bool
    dominant_eigenvalue: float
    alpha: float
    alpha_4dp: float
    dp_checks: tuple                # (k, z, z0, z_expected, z0_expected)
    dp_ok: bool

    @property
    def ok(self):
        return self.matrix_ok and self.eigenvalue_identities_ok and self.dp_ok


def appendix_c_verify(max_k=5):
    """Re-derive the lower-bound transfer matrix and cross-check the DP.

    Brute-forces the matchings of the 22-edge repeating piece (classified by
    whether the old and new roots are covered), compares the four counts with
    the expected transfer matrix, verifies the dominant-eigenvalue closed
    form exactly, and checks the legal-matching DP on the generated trees
    against matrix powers.  Any mismatch raises VerificationError, since it
    signals a mis-transcribed construction.
    """
    piece_edges, size, attach, new_root = appendix_c_piece()
    junction = size  # the previous root, one node beyond the piece
    edges = list(piece_edges) + [(attach, junction)]

    counts = [0, 0, 0, 0]  # [not-cover, cover] x [any, new root uncovered]
    used = set()

    def rec(i, covers_junction, covers_root):
        if i == len(edges):
            idx = 1 if covers_junction else 0
            counts[idx] += 1
            if not covers_root:
                counts[2 + idx] += 1
            return
        rec(i + 1, covers_junction, covers_root)
        u, v = edges[i]
        if u not in used and v not in used:
            used.add(u)
            used.add(v)
            rec(i + 1,
                covers_junction or junction in (u, v),
                covers_root or new_root in (u, v))
            used.discard(u)
            used.discard(v)

    rec(0, False, False)
    matrix = ((counts[0], counts[1]), (counts[2], counts[3]))
    matrix_ok = matrix == TRANSFER_MATRIX

    # eigenvalues 13384 +- 8*sqrt(R): check trace and determinant exactly
    (a, b), (c, d) = TRANSFER_MATRIX
    trace = a + d
    det = a * d - b * c
    eig_ok = (
        trace == 2 * ALPHA_EIGENVALUE_INT
        and ALPHA_EIGENVALUE_INT ** 2 - 64 * ALPHA_RADICAND == det
    )
    dominant = ALPHA_EIGENVALUE_INT + 8 * math.sqrt(ALPHA_RADICAND)

    dp_checks = []
    dp_ok = True
    z_exp, z0_exp = 1, 1  # the single starting node: one empty matching
    for k in range(0, max_k + 1):
        tree = generate("appendix_c", k)
        tables = match_vectors(tree, root=tree.root)
        vec = tables.root_vector
        z = sum(vec[:4])
        z0 = vec[A0] + vec[B0]
        dp_checks.append((k, z, z0, z_exp, z0_exp))
        if (z, z0) != (z_exp, z0_exp):
            dp_ok = False
        z_exp, z0_exp = (a * z_exp + b * z0_exp, c * z_exp + d * z0_exp)

    alpha = dominant ** (1 / 22)
    report = AppendixCReport(
        matrix=matrix,
        matrix_expected=TRANSFER_MATRIX,
        matrix_ok=matrix_ok,
        eigenvalue_identities_ok=eig_ok,
        dominant_eigenvalue=dominant,
        alpha=alpha,
        alpha_4dp=round_up_4dp(alpha),
        dp_checks=tuple(dp_checks),
        dp_ok=dp_ok,
    )
    if not report.ok:
        raise VerificationError(
            f"lower-bound construction mismatch: matrix={matrix}, "
            f"dp_checks={dp_checks}"
        )
    return report


def comb_series_coefficients(truncation):
    """Coefficients of the comb-tree piece generating series by power.

    The power-(t+2) coefficient sums, over compositions a+b+c=t, the
    multinomial times the weight [3a+4>c] + 2[3a+1>c] + [3a-2>c].
    """
    if truncation < 10:
        raise ValueError("truncation must be at least 10")
    coeffs = {}
    for t in range(0, truncation - 1):
        total = 0
        for a_ in range(t + 1):
            for b_ in range(t - a_ + 1):
                c_ = t - a_ - b_
                mult = math.comb(t, a_) * math.comb(t - a_, b_)
                weight = (
                    (1 if 3 * a_ + 4 > c_ else 0)
                    + 2 * (1 if 3 * a_ + 1 > c_ else 0)
                    + (1 if 3 * a_ - 2 > c_ else 0)
                )
                total += mult * weight
        coeffs[t + 2] = total
    return coeffs


@dataclass(frozen=True)
class CombConstants:
    rho: float
    beta: float
    truncation: int
    truncation_drift: float   # |rho(truncation) - rho(truncation - 10)|


def comb_constants(truncation=40):
    """Positive root of the comb generating-series denominator, and beta.

    The series 1 = 3*rho^2 + 8*rho^3 + 24*rho^4 + ... is truncated at the
    given order and the root found by bisection on (0, 0.5) to 1e-10;
    beta = rho**(-1/3).  The drift between this truncation and one ten
    orders lower is reported so truncation error stays visible.
    """
    rho = _comb_root(truncation)
    drift = abs(rho - _comb_root(truncation - 10)) if truncation >= 20 else 0.0
    return CombConstants(rho=rho, beta=rho ** (-1 / 3),
                         truncation=truncation, truncation_drift=drift)


def _comb_root(truncation):
    coeffs = comb_series_coefficients(truncation)

    def series(x):
        return sum(c * x ** p for p, c in coeffs.items())

    lo, hi = 0.0, 0.5
    if series(hi) < 1:
        raise ValueError(f"truncation {truncation} too small to bracket a root")
    for _ in range(200):
        mid = (lo + hi) / 2
        if series(mid) < 1:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    return (lo + hi) / 2
