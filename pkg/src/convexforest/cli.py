"""Command-line entry point.

Every command prints one JSON envelope to stdout:

    {"command": ..., "inputs": {file: sha256}, "seed": ..., "output": {...},
     "elapsed_ms": ...}

Identical (command, inputs, seed) produce byte-identical envelopes except
for elapsed_ms.  Enumeration commands stream one JSON array per item before
the envelope.  Exit codes: 0 success, 1 domain error (bad input), 2
verification failure, 64 usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time

from . import agreement, bounds, convex_enum, matchings, mp2, phylo_core
from .matchings import MatchingError, VerificationError, round_up_4dp
from .parsimony import CharacterError
from .phylo_core import TreeError

USAGE_EXIT = 64
DOMAIN_EXIT = 1
VERIFY_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(USAGE_EXIT)


def _sig10(x):
    return float(f"{float(x):.10g}")


def _read_tree(path, mode, inputs):
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise TreeError(f"cannot read {path}: {exc}") from exc
    inputs[os.path.basename(path)] = hashlib.sha256(data).hexdigest()
    return phylo_core.parse_newick(data.decode("utf-8"), mode=mode)


def _emit(command, inputs, seed, output, started):
    envelope = {
        "command": command,
        "inputs": inputs,
        "seed": seed,
        "output": output,
        "elapsed_ms": int((time.monotonic() - started) * 1000),
    }
    sys.stdout.write(json.dumps(envelope, sort_keys=True) + "\n")


def build_parser():
    parser = _Parser(prog="convexforest")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel width for rank-partitioned work")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed (default: CONVEXFOREST_SEED or 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    tree = sub.add_parser("tree", help="tree inspection")
    tree_sub = tree.add_subparsers(dest="subcommand", required=True)
    stats = tree_sub.add_parser("stats", help="parse a tree and report stats")
    stats.add_argument("file")
    stats.add_argument("--mode", default="auto",
                       choices=("auto", "rooted", "unrooted"))

    convex = sub.add_parser("convex", help="convex character counts")
    convex_sub = convex.add_subparsers(dest="subcommand", required=True)
    ccount = convex_sub.add_parser("count")
    ccount.add_argument("file")
    ccount.add_argument("--min-size", type=int, default=1)
    cenum = convex_sub.add_parser("enum")
    cenum.add_argument("file")
    cenum.add_argument("--min-size", type=int, default=1)
    cenum.add_argument("--limit", type=int, default=None)
    cenum.add_argument("--offset", type=int, default=0)

    maf = sub.add_parser("maf", help="maximum agreement forest")
    maf.add_argument("file1")
    maf.add_argument("file2")
    maf.add_argument("--rooted", action="store_true")
    maf.add_argument("--mode", default="hybrid",
                     choices=("hybrid", "enum", "brute"))
    maf.add_argument("--c", type=float, default=None)

    mp2p = sub.add_parser("mp2", help="two-state maximum parsimony distance")
    mp2p.add_argument("file1")
    mp2p.add_argument("file2")
    mp2p.add_argument("--mode", default="legal",
                      choices=("legal", "all", "fully-legal", "brute"))

    match = sub.add_parser("matchings", help="core-tree matchings")
    match.add_argument("file")
    match.add_argument("--kind", default="legal",
                       choices=("all", "legal", "k-legal"))
    match.add_argument("--k", type=int, default=2)
    group = match.add_mutually_exclusive_group()
    group.add_argument("--count", action="store_true", default=True)
    group.add_argument("--enum", action="store_true")
    match.add_argument("--limit", type=int, default=None)
    match.add_argument("--offset", type=int, default=0)

    verify = sub.add_parser("verify", help="verification runs")
    verify_sub = verify.add_subparsers(dest="subcommand", required=True)
    sets = verify_sub.add_parser("set-s")
    sets.add_argument("--tol", type=float, default=1e-9)
    sets.add_argument("--report", default=None, metavar="PATH.json")
    verify_sub.add_parser("appendix-c")

    sub.add_parser("constants", help="growth constants and tipping points")
    sub.add_parser("selftest", help="desk-scale oracle suite")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    seed = args.seed
    if seed is None:
        seed = int(os.environ.get("CONVEXFOREST_SEED", "0"))
    started = time.monotonic()
    inputs = {}
    try:
        handler = _HANDLERS[args.command]
        output, exit_code = handler(args, seed, inputs)
    except (TreeError, CharacterError, MatchingError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return DOMAIN_EXIT
    except VerificationError as exc:
        sys.stderr.write(f"verification failure: {exc}\n")
        return VERIFY_EXIT
    _emit(args.command, inputs, seed, output, started)
    return exit_code


# --------------------------------------------------------------------------
# Handlers
# --------------------------------------------------------------------------

def _cmd_tree(args, seed, inputs):
    tree = _read_tree(args.file, args.mode, inputs)
    output = {
        "taxa": list(tree.taxa),
        "n": tree.n,
        "nodes": len(tree.adj),
        "edges": len(tree.edges()),
        "internal_nodes": len(tree.adj) - tree.n,
        "rooted": tree.is_rooted,
        "newick": phylo_core.serialize_newick(tree),
        "dump": tree.to_json(),
    }
    if not tree.is_rooted and tree.n >= 4:
        core = phylo_core.core_tree(tree)
        output["core_nodes"] = core.n
        output["core_weight_sum"] = sum(core.weights.values())
    return output, 0


def _cmd_convex(args, seed, inputs):
    tree = _read_tree(args.file, "unrooted", inputs)
    if args.subcommand == "count":
        count = convex_enum.count_convex(tree, args.min_size, "at_least")
        return {"n": tree.n, "min_size": args.min_size, "count": count}, 0
    emitted = 0
    for char in convex_enum.iter_convex(tree, min_size=args.min_size,
                                        offset=args.offset,
                                        limit=args.limit):
        sys.stdout.write(json.dumps([list(b) for b in char]) + "\n")
        emitted += 1
    return {"n": tree.n, "min_size": args.min_size,
            "offset": args.offset, "emitted": emitted}, 0


def _cmd_maf(args, seed, inputs):
    mode = args.mode
    tree_mode = "rooted" if args.rooted else "unrooted"
    t1 = _read_tree(args.file1, tree_mode, inputs)
    t2 = _read_tree(args.file2, tree_mode, inputs)
    if mode == "brute":
        forest = agreement.maf_brute(t1, t2)
    elif mode == "enum":
        forest = (agreement.rmaf(t1, t2, "enumerate")
                  if args.rooted else agreement.maf_enumerate(t1, t2))
    else:
        forest = (agreement.rmaf(t1, t2, "hybrid", c=args.c)
                  if args.rooted
                  else agreement.maf_hybrid(t1, t2, c=args.c))
    return {
        "size": forest.size,
        "blocks": [list(b) for b in forest.partition],
        "mode_used": forest.mode_used,
        "k_tried": forest.k_tried,
    }, 0


def _cmd_mp2(args, seed, inputs):
    t1 = _read_tree(args.file1, "unrooted", inputs)
    t2 = _read_tree(args.file2, "unrooted", inputs)
    if args.mode == "brute":
        result = mp2.mp2_brute(t1, t2)
    else:
        result = mp2.mp2_distance(t1, t2, args.mode.replace("-", "_"),
                                  jobs=args.jobs)
    return {
        "distance": result.distance,
        "witness_red_block": list(result.witness[0]),
        "direction": result.direction,
        "matchings_examined": result.matchings_examined,
        "mode": result.mode,
    }, 0


def _cmd_matchings(args, seed, inputs):
    tree = _read_tree(args.file, "unrooted", inputs)
    core = phylo_core.core_tree(tree)
    if args.kind in ("all", "legal"):
        if args.enum:
            emitted = 0
            for m in matchings.iter_matchings(core, kind=args.kind,
                                              offset=args.offset,
                                              limit=args.limit):
                sys.stdout.write(json.dumps(sorted(list(e) for e in m)) + "\n")
                emitted += 1
            return {"kind": args.kind, "emitted": emitted,
                    "offset": args.offset}, 0
        return {"kind": args.kind,
                "count": matchings.count_matchings(core, args.kind)}, 0
    # k-legal: filter-after-enumeration; k <= 1 never constrains a matching
    k = args.k
    base_kind = "all" if k <= 1 else "legal"
    selected = (
        m for m in matchings.iter_matchings(core, kind=base_kind)
        if matchings.legality(core, m, k).legal
    )
    if args.enum:
        emitted = 0
        skipped = 0
        for m in selected:
            if skipped < args.offset:
                skipped += 1
                continue
            if args.limit is not None and emitted >= args.limit:
                break
            sys.stdout.write(json.dumps(sorted(list(e) for e in m)) + "\n")
            emitted += 1
        return {"kind": "k-legal", "k": k, "emitted": emitted,
                "offset": args.offset}, 0
    return {"kind": "k-legal", "k": k, "count": sum(1 for _ in selected)}, 0


def _cmd_verify(args, seed, inputs):
    if args.subcommand == "appendix-c":
        report = matchings.appendix_c_verify()
        return {
            "matrix": [list(r) for r in report.matrix],
            "matrix_ok": report.matrix_ok,
            "eigenvalue_identities_ok": report.eigenvalue_identities_ok,
            "dominant_eigenvalue": _sig10(report.dominant_eigenvalue),
            "alpha": report.alpha_4dp,
            "alpha_precise": _sig10(report.alpha),
            "dp_checks": [list(c) for c in report.dp_checks],
            "ok": report.ok,
        }, 0
    report = bounds.verify_set_s(tol=args.tol, jobs=args.jobs)
    output = {
        "property1_ok": report.property1_ok,
        "checks_total": report.checks_total,
        "failures": [list(f) for f in report.failures],
        "worst_slack": str(report.worst_slack),
        "tight_pairs": len(report.tight_pairs),
        "ok": report.ok,
    }
    if args.report:
        full = dict(output)
        full["tight_pairs_list"] = [list(p) for p in report.tight_pairs]
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(full, fh, sort_keys=True, indent=2)
    return output, 0 if report.ok else VERIFY_EXIT


def _cmd_constants(args, seed, inputs):
    alpha = matchings.alpha_constant()
    comb = matchings.comb_constants(40)
    umaf = agreement.tipping_point(3.0)
    rmaf_tp = agreement.tipping_point(2.42)
    return {
        "alpha": round_up_4dp(alpha),
        "alpha_precise": _sig10(alpha),
        "rho": round_up_4dp(comb.rho),
        "rho_precise": _sig10(comb.rho),
        "beta": round_up_4dp(comb.beta),
        "beta_precise": _sig10(comb.beta),
        "c_umaf": round_up_4dp(umaf.c),
        "c_umaf_precise": _sig10(umaf.c),
        "runtime_base_umaf": round_up_4dp(umaf.runtime_base),
        "runtime_base_umaf_precise": _sig10(umaf.runtime_base),
        "c_rmaf": round_up_4dp(rmaf_tp.c),
        "c_rmaf_precise": _sig10(rmaf_tp.c),
        "runtime_base_rmaf": round_up_4dp(rmaf_tp.runtime_base),
        "runtime_base_rmaf_precise": _sig10(rmaf_tp.runtime_base),
    }, 0


# --------------------------------------------------------------------------
# Selftest: the desk-scale oracle suite
# --------------------------------------------------------------------------

def _cmd_selftest(args, seed, inputs):
    from math import comb as binom

    from .parsimony import character
    from . import selftest_support as sup

    checks = []

    def check(name, ok, detail=""):
        checks.append({"name": name, "ok": bool(ok), "detail": detail})

    cat7 = phylo_core.generate("caterpillar", 7)

    # convex character DP against the closed form and the caterpillar total
    steel_ok = True
    for i in range(20):
        t = phylo_core.generate("random", 3 + (i % 8), seed=seed + i)
        table = convex_enum.build_count_tables(t)
        for k in range(1, t.n + 1):
            if table.size_count(k) != binom(2 * t.n - k - 1, k - 1):
                steel_ok = False
    check("steel_identity", steel_ok)
    check("caterpillar7_total_233",
          convex_enum.count_convex(cat7, 1, "at_least") == 233)

    # matchings on the caterpillar core and DP-vs-brute on random cores
    core = phylo_core.core_tree(cat7)
    check("p5_counts",
          matchings.count_matchings(core, "all") == 8
          and matchings.count_matchings(core, "legal") == 6)
    chars = {
        mp2.character_of_matching(cat7, core, m)
        for m in matchings.iter_matchings(core, kind="all")
    }
    expected = {
        character([list(part) for part in text.split("|")])
        for text in (
            "abcdefg", "ab|cdefg", "abc|defg", "abcd|efg", "abcde|fg",
            "ab|cd|efg", "abc|de|fg", "ab|cde|fg",
        )
    }
    check("caterpillar7_characters", chars == expected)
    check("matching_dp_vs_brute", sup.matching_dp_probe(seed, trials=30))

    # lower-bound construction and constants
    try:
        matchings.appendix_c_verify()
        check("appendix_c", True)
    except VerificationError as exc:
        check("appendix_c", False, str(exc))
    comb_c = matchings.comb_constants(40)
    check("comb_constants",
          abs(comb_c.rho - 0.2633) < 5e-4 and abs(comb_c.beta - 1.5603) < 5e-4)
    tp3 = agreement.tipping_point(3.0)
    tp242 = agreement.tipping_point(2.42)
    check("tipping_points",
          abs(tp3.c - 0.7571) < 5e-4
          and abs(tp3.runtime_base - 2.2973) < 1e-3
          and abs(tp242.c - 0.8204) < 5e-4
          and abs(tp242.runtime_base - 2.0649) < 1e-3)

    # distance oracles
    check("mp2_oracles", sup.mp2_probe(seed, pairs=10))
    check("maf_oracles", sup.maf_probe(seed, pairs=4))
    check("good_tree_transform", sup.good_tree_probe(seed, trials=25))

    # growth-bound certificate
    report = bounds.verify_set_s(jobs=args.jobs)
    check("set_s", report.ok,
          f"failures={len(report.failures)} worst={report.worst_slack}")

    ok = all(c["ok"] for c in checks)
    return {"checks": checks, "ok": ok}, 0 if ok else VERIFY_EXIT


_HANDLERS = {
    "tree": _cmd_tree,
    "convex": _cmd_convex,
    "maf": _cmd_maf,
    "mp2": _cmd_mp2,
    "matchings": _cmd_matchings,
    "verify": _cmd_verify,
    "constants": _cmd_constants,
    "selftest": _cmd_selftest,
}


if __name__ == "__main__":
    sys.exit(main())
