"""Certificate verification for the legal-matching growth bound.

The legal-matching growth bound rests on a set S of 62 nonnegative 5-vectors such that
(1) S contains [0,0,0,0,1/alpha] and (2) the bilinear subtree-combination
map B sends every ordered pair of S-vectors into

    conv_<=(S) = { w >= 0 : w <= sum_v c_v v, c >= 0, sum c = 1 }.

The vectors are algebraic numbers in alpha and sqrt(R) with R = 2793745 and
alpha = (13384 + 8 sqrt(R))**(1/22); they are tabulated below as exact
rational combinations of half-integer powers of R times a power of alpha,
and evaluated with ``decimal`` at 50 significant digits.  Membership in
conv_<=(S) is decided by a two-phase simplex over the same Decimal
arithmetic: phase one finds a basic feasible point of the constraint system
and phase two maximises the minimum componentwise slack t, so the verdict
(t >= -tol) comes with a margin that exposes equality-tight pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

from .matchings import (
    ALPHA_EIGENVALUE_INT,
    ALPHA_RADICAND,
    combine_vectors,
    default_match_root,
    match_vectors,
)

PRECISION = 50
DEFAULT_TOL = Decimal("1e-9")


class NumericalError(RuntimeError):
    """Simplex breakdown (unbounded ray or pivot limit), not infeasibility."""


@dataclass(frozen=True)
class BoundVector:
    components: tuple            # 5 Decimals
    provenance: str              # "v1".."v62" or "derived"
    group: int = None            # 1..4 for tabulated vectors

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i):
        return self.components[i]


# --------------------------------------------------------------------------
# The tabulated set S
#
# One entry per vector: (alpha_power, five components); a component is a
# tuple of terms (num, den, rpow2) standing for num/den * R**(rpow2/2), so
# rpow2=-1 is 1/sqrt(R), rpow2=-3 is R**(-3/2), rpow2=1 is sqrt(R).  Group-3
# vectors (51..61) reuse the component pairs of group-2 vectors (40..50)
# with the first component duplicated into the third slot.
# --------------------------------------------------------------------------

_Z = ()

_C40_1 = ((1895, 216, 0), (-2436799, 216, -1))
_C40_4 = ((-1625, 108, 0), (2887105, 108, -1))
_C41_1 = ((605232455, 216, -2), (368465, 216, -1))
_C41_4 = ((143768593, 108, -2), (85015, 108, -1))
_C42_1 = ((26, 1, 0), (43142, 1, -1))
_C42_4 = ((12, 1, 0), (20676, 1, -1))
_C43_1 = ((4149082184, 9, -2), (6934995913784, 9, -3))
_C43_4 = ((1969470208, 9, -2), (3291861361024, 9, -3))
_C44_1 = ((23696513, 54, -2), (14327, 54, -1))
_C44_4 = ((1877966, 9, -2), (1142, 9, -1))
_C45_1 = ((1, 8, 0), (2551, 8, -1))
_C45_4 = ((1, 8, 0), (343, 8, -1))
_C46_1 = ((18403, 54, 0), (-11, 54, 1))
_C46_4 = ((11711, 72, 0), (-7, 72, 1))
_C47_1 = ((73, 216, 0), (-8081, 216, -1))
_C47_4 = ((-7, 36, 0), (20783, 36, -1))
_C49_1 = ((4, 1, 0), (6616, 1, -1))
_C49_4 = ((2, 1, 0), (3446, 1, -1))

_SET_S_TABLE = (
    # group 1: x = y = z = 0
    (-2, (((1, 1, 0),), _Z, _Z, _Z, _Z)),                                 # v1
    (-6, (((2, 1, 0), (3446, 1, -1)), ((2, 1, 0), (3170, 1, -1)),
          _Z, _Z, _Z)),                                                   # v2
    (-6, (((4, 1, 0),), ((4, 1, 0),), _Z, _Z, _Z)),                       # v3
    (-21, (((2016, 1, 0), (3380832, 1, -1)),
           ((2208, 1, 0), (3671904, 1, -1)), _Z, _Z, _Z)),                # v4
    (-21, (((4032, 1, 0),), ((4416, 1, 0),), _Z, _Z, _Z)),                # v5
    (-21, (((2016, 1, 0), (3367584, 1, -1)),
           ((2208, 1, 0), (3693984, 1, -1)), _Z, _Z, _Z)),                # v6
    (-21, (((5628705696, 1, -2), (3367584, 1, -1)),
           ((6174294432, 1, -2), (3693984, 1, -1)), _Z, _Z, _Z)),         # v7
    (-14, (((1969470208, 9, -2), (3291861361024, 9, -3)),
           ((2179611976, 9, -2), (3643134552760, 9, -3)), _Z, _Z, _Z)),   # v8
    (-10, (((12, 1, 0), (20676, 1, -1)),
           ((14, 1, 0), (22466, 1, -1)), _Z, _Z, _Z)),                    # v9
    (-3, (((143768593, 108, -2), (85015, 108, -1)),
          ((105898423, 72, -2), (66145, 72, -1)), _Z, _Z, _Z)),           # v10
    (-3, (((-1625, 108, 0), (2887105, 108, -1)),
          ((1715, 72, 0), (-2737003, 72, -1)), _Z, _Z, _Z)),              # v11
    (-3, (((108745, 108, 0), (-65, 108, 1)),
          ((28441, 24, 0), (-17, 24, 1)), _Z, _Z, _Z)),                   # v12
    (-3, (((1, 2, 0), (1447, 2, -1)),
          ((1, 2, 0), (1999, 2, -1)), _Z, _Z, _Z)),                       # v13
    (-14, (((201818664, 1, -2), (120744, 1, -1)),
           ((267240144, 1, -2), (159888, 1, -1)), _Z, _Z, _Z)),           # v14
    (-14, (((72, 1, 0), (120744, 1, -1)),
           ((96, 1, 0), (159888, 1, -1)), _Z, _Z, _Z)),                   # v15
    (-14, (((144, 1, 0),), ((192, 1, 0),), _Z, _Z, _Z)),                  # v16
    (-7, (((31, 18, 0), (116617, 18, -1)),
          ((281, 54, 0), (208991, 54, -1)), _Z, _Z, _Z)),                 # v17
    (-7, (((108745, 18, 0), (-65, 18, 1)),
          ((219163, 27, 0), (-131, 27, 1)), _Z, _Z, _Z)),                 # v18
    (0, (((8142156817, 23328, -2), (3615127, 23328, -1)),
         ((2689931479, 11664, -2), (4131265, 11664, -1)), _Z, _Z, _Z)),   # v19
    (0, (((-2104505, 23328, 0), (3526059745, 23328, -1)),
         ((2807237, 23328, 0), (-4680672973, 23328, -1)), _Z, _Z, _Z)),   # v20
    (0, (((11814523825, 23328, 0), (-7068425, 23328, 1)),
         ((1999380955, 2916, 0), (-1196195, 2916, 1)), _Z, _Z, _Z)),      # v21
    (0, (((7345, 432, 0), (-12119705, 432, -1)),
         ((-6197, 288, 0), (10499773, 288, -1)), _Z, _Z, _Z)),            # v22
    (0, (((2443777, 8, -2), (1447, 8, -1)),
         ((3242521, 8, -2), (1999, 8, -1)), _Z, _Z, _Z)),                 # v23
    (0, (((32805161, 108, -2), (54881040239, 108, -3)),
         ((29641217, 72, -2), (49498725911, 72, -3)), _Z, _Z, _Z)),       # v24
    (0, (((1237818669070513, 1458, -4), (740509100311, 1458, -3)),
         ((838121265457801, 729, -4), (501401051935, 729, -3)),
         _Z, _Z, _Z)),                                                    # v25
    (-15, (((71754261114955960, 81, -4),
            (119933657317951854472, 81, -5)),
           ((291727305240092752, 243, -4),
            (487607592266798252080, 243, -5)), _Z, _Z, _Z)),              # v26
    (-8, (((140725263328052732114393, 1458, -6),
           (84193524123331244303, 1458, -5)),
          ((286283955528410226595427, 2187, -6),
           (171278806193160289301, 2187, -5)), _Z, _Z, _Z)),              # v27
    (-4, (((10512907255001141, 1944, -4), (6289683368723, 1944, -3)),
          ((10709134162880129, 1458, -4), (6407069939495, 1458, -3)),
          _Z, _Z, _Z)),                                                   # v28
    (0, (((794956577, 2592, -2), (464135, 2592, -1)),
         ((524137043, 1296, -2), (325541, 1296, -1)), _Z, _Z, _Z)),       # v29
    (-15, (((17072730067, 54, -2), (28535661518197, 54, -3)),
           ((3873220609, 9, -2), (6473856199063, 9, -3)), _Z, _Z, _Z)),   # v30
    (-8, (((803579524335268753, 23328, -4), (480751987830295, 23328, -3)),
          ((547329217239002015, 11664, -4),
           (327434508313145, 11664, -3)), _Z, _Z, _Z)),                   # v31
    (-8, (((293738136445, 23328, -2), (470526609087163, 23328, -3)),
          ((197305889945, 11664, -2), (325111894094399, 11664, -3)),
          _Z, _Z, _Z)),                                                   # v32
    (-8, (((8133848923273, 23328, -2), (-4522191905, 23328, -1)),
          ((-7653084333757, 11664, -2), (4813128245, 11664, -1)),
          _Z, _Z, _Z)),                                                   # v33
    (-2, (((34964309, 54, -2), (21179, 54, -1)),
          ((29330411, 27, -2), (17753, 27, -1)), _Z, _Z, _Z)),            # v34
    (-17, (((2039517464, 3, -2), (3408952424936, 3, -3)),
           ((10267634576, 9, -2), (17161853188592, 9, -3)), _Z, _Z, _Z)),  # v35
    (-13, (((38, 1, 0), (63818, 1, -1)),
           ((64, 1, 0), (106960, 1, -1)), _Z, _Z, _Z)),                   # v36
    (-6, (((892769641, 216, -2), (538495, 216, -1)),
          ((62416754, 9, -2), (37790, 9, -1)), _Z, _Z, _Z)),              # v37
    (-6, (((-1355, 216, 0), (3337411, 216, -1)),
          ((5, 2, 0), (8339, 2, -1)), _Z, _Z, _Z)),                       # v38
    (-4, (((1, 1, 0),), ((2, 1, 0),), _Z, _Z, _Z)),                       # v39
    # group 2: w = x = z = 0
    (-4, (_C40_1, _Z, _Z, _C40_4, _Z)),                                   # v40
    (-4, (_C41_1, _Z, _Z, _C41_4, _Z)),                                   # v41
    (-11, (_C42_1, _Z, _Z, _C42_4, _Z)),                                  # v42
    (-15, (_C43_1, _Z, _Z, _C43_4, _Z)),                                  # v43
    (0, (_C44_1, _Z, _Z, _C44_4, _Z)),                                    # v44
    (0, (_C45_1, _Z, _Z, _C45_4, _Z)),                                    # v45
    (0, (_C46_1, _Z, _Z, _C46_4, _Z)),                                    # v46
    (0, (_C47_1, _Z, _Z, _C47_4, _Z)),                                    # v47
    (-7, (((8, 1, 0),), _Z, _Z, ((4, 1, 0),), _Z)),                       # v48
    (-7, (_C49_1, _Z, _Z, _C49_4, _Z)),                                   # v49
    (-3, (((1, 1, 0),), _Z, _Z, ((1, 1, 0),), _Z)),                       # v50
    # group 3: w = z = 0 and v = y
    (-5, (_C40_1, _Z, _C40_4, _C40_1, _Z)),                               # v51
    (-5, (_C41_1, _Z, _C41_4, _C41_1, _Z)),                               # v52
    (-12, (_C42_1, _Z, _C42_4, _C42_1, _Z)),                              # v53
    (-16, (_C43_1, _Z, _C43_4, _C43_1, _Z)),                              # v54
    (-1, (_C44_1, _Z, _C44_4, _C44_1, _Z)),                               # v55
    (-1, (_C45_1, _Z, _C45_4, _C45_1, _Z)),                               # v56
    (-1, (_C46_1, _Z, _C46_4, _C46_1, _Z)),                               # v57
    (-1, (_C47_1, _Z, _C47_4, _C47_1, _Z)),                               # v58
    (-8, (((8, 1, 0),), _Z, ((4, 1, 0),), ((8, 1, 0),), _Z)),             # v59
    (-8, (_C49_1, _Z, _C49_4, _C49_1, _Z)),                               # v60
    (-4, (((1, 1, 0),), _Z, ((1, 1, 0),), ((1, 1, 0),), _Z)),             # v61
    # group 4: only z > 0
    (-1, (_Z, _Z, _Z, _Z, ((1, 1, 0),))),                                 # v62
)

_GROUP_ZERO_SLOTS = {1: (2, 3, 4), 2: (1, 2, 4), 3: (1, 4), 4: (0, 1, 2, 3)}


def group_of(index):
    """Appendix-table group (1..4) of the 1-based vector index."""
    if index <= 39:
        return 1
    if index <= 50:
        return 2
    if index <= 61:
        return 3
    return 4


def alpha_decimal():
    """alpha at the working precision."""
    with localcontext() as ctx:
        ctx.prec = PRECISION
        radical = Decimal(ALPHA_RADICAND).sqrt()
        return ((ALPHA_EIGENVALUE_INT + 8 * radical).ln() / 22).exp()


def set_s_vectors(tol=DEFAULT_TOL):
    """The 62 tabulated vectors, evaluated and structurally checked.

    Every declared-zero slot must be exactly zero, every component at least
    -tol, and group-3 vectors must have equal first and fourth components;
    a violation signals a transcription error and raises.
    """
    with localcontext() as ctx:
        ctx.prec = PRECISION
        sqrt_r = Decimal(ALPHA_RADICAND).sqrt()
        alpha = ((ALPHA_EIGENVALUE_INT + 8 * sqrt_r).ln() / 22).exp()
        half_powers = {0: Decimal(1)}

        def r_half(rpow2):
            if rpow2 not in half_powers:
                half_powers[rpow2] = sqrt_r ** rpow2
            return half_powers[rpow2]

        vectors = []
        for idx, (apow, comps) in enumerate(_SET_S_TABLE, start=1):
            scale = alpha ** apow
            values = []
            for terms in comps:
                x = Decimal(0)
                for num, den, rpow2 in terms:
                    x += Decimal(num) / Decimal(den) * r_half(rpow2)
                values.append(x * scale)
            group = group_of(idx)
            for slot in _GROUP_ZERO_SLOTS[group]:
                if values[slot] != 0:
                    raise AssertionError(
                        f"v{idx}: slot {slot} should be exactly zero"
                    )
            for slot, x in enumerate(values):
                if x < -tol:
                    raise AssertionError(f"v{idx}: component {slot} negative")
            if group == 3 and abs(values[0] - values[3]) > tol:
                raise AssertionError(f"v{idx}: group 3 requires v = y")
            vectors.append(BoundVector(components=tuple(values),
                                       provenance=f"v{idx}", group=group))
        return vectors


def bilinear_B(v1, v2):
    """The subtree-combination map on 5-vectors, as printed."""
    with localcontext() as ctx:
        ctx.prec = PRECISION
        combined = combine_vectors(tuple(v1), tuple(v2))
        return BoundVector(components=tuple(
            x if isinstance(x, Decimal) else Decimal(x) for x in combined
        ), provenance="derived")


# --------------------------------------------------------------------------
# Linear feasibility by two-phase simplex in Decimal arithmetic
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MembershipResult:
    feasible: bool
    slack: Decimal               # maximised minimum componentwise slack
    certificate: tuple           # coefficients over the generators
    tight: bool                  # |slack| < 10 * tol: review at equality

    def dominating_combination(self, generators):
        return tuple(
            sum(c * g[i] for c, g in zip(self.certificate, generators))
            for i in range(5)
        )


_PIVOT_EPS = Decimal("1e-30")
_MAX_PIVOTS = 20000


def conv_membership(target, generators=None, tol=DEFAULT_TOL):
    """Decide target in conv_<=(generators) and return the margin.

    Maximises t subject to: sum_v c_v v - s - t * 1 = target, c >= 0,
    s >= 0, sum c = 1 (t split into u - w to stay sign-free).  The target
    is a member iff the optimum t* is at least -tol; t* is returned as the
    slack and the c values as the certificate.
    """
    with localcontext() as ctx:
        ctx.prec = PRECISION
        if generators is None:
            generators = set_s_vectors(tol)
        target = [
            x if isinstance(x, Decimal) else Decimal(x) for x in target
        ]
        if any(x < -tol for x in target):
            raise ValueError("membership target must be nonnegative")
        ngen = len(generators)
        zero, one = Decimal(0), Decimal(1)

        # columns: ngen c's | 5 surplus | u | w | 6 artificials | rhs
        n_struct = ngen + 5 + 2
        width = n_struct + 6 + 1
        rows = []
        for i in range(5):
            row = [zero] * width
            for j, g in enumerate(generators):
                row[j] = +g[i]
            row[ngen + i] = -one
            row[ngen + 5] = -one       # u
            row[ngen + 6] = +one       # w
            row[-1] = target[i]
            rows.append(row)
        convexity = [zero] * width
        for j in range(ngen):
            convexity[j] = one
        convexity[-1] = one
        rows.append(convexity)
        for i in range(6):
            rows[i][n_struct + i] = one
        basis = [n_struct + i for i in range(6)]

        # phase 1: minimise the artificials
        obj = [zero] * width
        for row in rows:
            for j in range(n_struct):
                obj[j] -= row[j]
            obj[-1] -= row[-1]
        _simplex(rows, basis, obj, n_struct)
        if -obj[-1] > tol:
            raise NumericalError(
                f"phase 1 failed to reach feasibility (residual {-obj[-1]})"
            )
        _drive_out_artificials(rows, basis, n_struct)

        # phase 2: minimise w - u, i.e. maximise t = u - w
        cost = [zero] * width
        cost[ngen + 5] = -one
        cost[ngen + 6] = one
        obj = list(cost)
        for i, b in enumerate(basis):
            if cost[b] != 0:
                for j in range(width):
                    obj[j] -= cost[b] * rows[i][j]
        _simplex(rows, basis, obj, n_struct)

        values = {}
        for i, b in enumerate(basis):
            values[b] = rows[i][-1]
        slack = values.get(ngen + 5, zero) - values.get(ngen + 6, zero)
        certificate = tuple(values.get(j, zero) for j in range(ngen))
        return MembershipResult(
            feasible=slack >= -tol,
            slack=slack,
            certificate=certificate,
            tight=abs(slack) < 10 * tol,
        )


def _drive_out_artificials(rows, basis, n_struct):
    """Pivot any zero-level basic artificial onto a structural column.

    The constraint rows are independent over the structural columns (each
    carries its own surplus variable), so a pivot target always exists; the
    pivots are degenerate and preserve feasibility.
    """
    for i, b in enumerate(basis):
        if b < n_struct:
            continue
        row = rows[i]
        enter = next(
            (j for j in range(n_struct) if abs(row[j]) > _PIVOT_EPS), None
        )
        if enter is None:
            raise NumericalError("artificial stuck in a dependent row")
        p = row[enter]
        for j in range(len(row)):
            row[j] /= p
        for k, other in enumerate(rows):
            if k != i and other[enter] != 0:
                f = other[enter]
                for j in range(len(other)):
                    other[j] -= f * row[j]
        basis[i] = enter


def _simplex(rows, basis, obj, n_struct):
    """Minimise obj over the tableau with Bland's rule; artificials barred."""
    for _ in range(_MAX_PIVOTS):
        enter = -1
        for j in range(n_struct):
            if obj[j] < -_PIVOT_EPS:
                enter = j
                break
        if enter < 0:
            return
        leave = -1
        best = None
        for i, row in enumerate(rows):
            a = row[enter]
            if a > _PIVOT_EPS:
                ratio = row[-1] / a
                if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            raise NumericalError("unbounded pivot column")
        pivot_row = rows[leave]
        p = pivot_row[enter]
        for j in range(len(pivot_row)):
            pivot_row[j] /= p
        for i, row in enumerate(rows):
            if i != leave and row[enter] != 0:
                f = row[enter]
                for j in range(len(row)):
                    row[j] -= f * pivot_row[j]
        if obj[enter] != 0:
            f = obj[enter]
            for j in range(len(obj)):
                obj[j] -= f * pivot_row[j]
        basis[leave] = enter
    raise NumericalError("pivot limit exceeded")


# --------------------------------------------------------------------------
# Full verification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PairCheck:
    i: int                      # 1-based indices into S
    j: int
    feasible: bool
    slack: Decimal
    tight: bool


@dataclass(frozen=True)
class SetSReport:
    property1_ok: bool
    checks_total: int
    failures: tuple
    worst_slack: Decimal
    tight_pairs: tuple

    @property
    def ok(self):
        return self.property1_ok and not self.failures


def verify_set_s(tol=DEFAULT_TOL, jobs=1):
    """Run property (1) and all 62*62 closure checks; collect the report.

    Every check solves one membership problem; the worst (smallest) slack
    and all pairs within 10*tol of equality are reported for review.
    """
    if not isinstance(tol, Decimal):
        tol = Decimal(str(tol))
    vectors = set_s_vectors(tol)
    with localcontext() as ctx:
        ctx.prec = PRECISION
        alpha = alpha_decimal()
        expected_last = (0, 0, 0, 0, 1 / alpha)
        diffs = [
            abs(a - (b if isinstance(b, Decimal) else Decimal(b)))
            for a, b in zip(vectors[-1], expected_last)
        ]
        property1_ok = max(diffs) <= tol

    pairs = [(i, j) for i in range(62) for j in range(62)]
    results = _run_pair_checks(pairs, vectors, tol, jobs)

    failures = tuple(
        (c.i, c.j) for c in results if not c.feasible
    )
    worst = min((c.slack for c in results), default=Decimal(0))
    tight = tuple((c.i, c.j) for c in results if c.tight)
    return SetSReport(
        property1_ok=property1_ok,
        checks_total=len(results) + 1,
        failures=failures,
        worst_slack=worst,
        tight_pairs=tight,
    )


def _check_one_pair(args):
    i, j, vectors, tol = args
    target = bilinear_B(vectors[i], vectors[j])
    result = conv_membership(target, vectors, tol)
    return PairCheck(i=i + 1, j=j + 1, feasible=result.feasible,
                     slack=result.slack, tight=result.tight)


def _run_pair_checks(pairs, vectors, tol, jobs):
    tasks = [(i, j, vectors, tol) for i, j in pairs]
    if jobs <= 1:
        return [_check_one_pair(t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_check_one_pair, tasks, chunksize=64))


def tree_vector_membership(core, tol=DEFAULT_TOL, generators=None):
    """Check alpha**(-n-1) v(T) in conv_<=(S) for a max-degree-3 tree."""
    tables = match_vectors(core, root=default_match_root(core))
    vec = tables.root_vector
    n = core.n
    with localcontext() as ctx:
        ctx.prec = PRECISION
        scale = alpha_decimal() ** (-(n + 1))
        target = tuple(Decimal(x) * scale for x in vec)
    if generators is None:
        generators = set_s_vectors(tol)
    return conv_membership(target, generators, tol)


def max_component_bound(vectors=None):
    """Largest component over S; bounds every member of conv_<=(S)."""
    if vectors is None:
        vectors = set_s_vectors()
    return max(x for v in vectors for x in v.components)
