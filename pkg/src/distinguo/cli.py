"""Command-line front end.

Exit codes: 0 success or equivalent, 1 negative verdict, 2 input error,
3 when borel-check finds the two deciders disagreeing.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .borel import borel_branches, lossless_nmax, remark_check
from .docs import load_structure
from .equivalence import (
    ClassMap,
    Distinction,
    Permutation,
    classify,
    e_equiv,
    ef_equiv,
    isomorphic,
)
from .errors import BudgetExceeded, DistinguoError
from .formulas import Formula, generate_fragment, parse, parse_formula_list, pretty
from .games import Move
from .semantics import cardinality, count, explicit_members, realizations
from .structures import Count, FiniteStructure, PeriodicSet, Signature, all_periodic_sets, backend, make_periodic

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_DISAGREE = 0, 1, 2, 3
SHOW_LIMIT = 20


# ------------------------------------------------------------------ output


def _json(v):
    if isinstance(v, Count):
        return v.to_json()
    if isinstance(v, Formula):
        return pretty(v)
    if isinstance(v, dict):
        return {str(k): _json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json(x) for x in v]
    return v


def _text(v) -> str:
    if isinstance(v, Formula):
        return pretty(v)
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, dict):
        return " ".join(f"{k}->{_text(x)}" if not isinstance(x, (dict, list)) else f"{k}=[{_text(x)}]"
                        for k, x in v.items())
    if isinstance(v, (list, tuple)):
        return ", ".join(_text(x) for x in v)
    return str(v)


def emit(report: dict, as_json: bool, out=None):
    out = out or sys.stdout
    if as_json:
        out.write(json.dumps(_json(report), indent=2) + "\n")
        return
    for key, value in report.items():
        if isinstance(value, list) and value and isinstance(value[0], dict):
            out.write(f"{key}:\n")
            for item in value:
                out.write(f"  {_text(item)}\n")
        else:
            out.write(f"{key}: {_text(value)}\n")


def _tuples_text(ts) -> str:
    return "{" + ",".join("(" + ",".join(map(str, t)) + ")" for t in sorted(ts)) + "}"


def _move(m: Move) -> dict:
    return {"round": m.round, "side": m.side, "element": m.element,
            "reply": "none" if m.reply is None else m.reply}


def _witness_map(w, bound: int = 12) -> dict:
    if isinstance(w, Permutation):
        return w.as_dict()
    if isinstance(w, ClassMap):
        return w.segment(bound)
    return {}


def _distinction(d: Distinction) -> dict:
    return {"formula": pretty(d.formula), "left": d.left, "right": d.right}


# ------------------------------------------------------------------ inputs


def _formulas(args, sig: Signature) -> list[Formula]:
    if getattr(args, "fragment", None):
        try:
            r, v = (int(x) for x in args.fragment.split(":"))
        except ValueError:
            raise DistinguoError(f"--fragment expects RANK:VARS, got {args.fragment!r}") from None
        return list(generate_fragment(sig, r, v, cap=args.max_fragment))
    path = Path(args.afile)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DistinguoError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return parse_formula_list(text, sig)
    except DistinguoError as exc:
        raise DistinguoError(f"{path}: {exc}") from None


def _pair(args):
    M, N = load_structure(args.left), load_structure(args.right)
    return M, N


# ---------------------------------------------------------------- commands


def cmd_count(args) -> tuple[dict, int]:
    M = load_structure(args.structure)
    phi = parse(args.formula, M.signature)
    rs = realizations(M, phi)
    c = cardinality(rs)
    report = {"command": "count", "structure": args.structure, "formula": pretty(phi), "count": c}
    if c.is_finite and (args.show or c.value <= SHOW_LIMIT):
        report["realizations"] = _tuples_text(explicit_members(rs))
    elif args.show:
        report["realizations"] = str(rs) if isinstance(rs, PeriodicSet) else repr(rs)
    return report, EXIT_OK


def cmd_distinguish(args) -> tuple[dict, int]:
    M, N = _pair(args)
    A = _formulas(args, M.signature)
    rep = e_equiv(M, N, A)
    report = {"command": "distinguish", "left": args.left, "right": args.right, "formulas": len(A),
              "verdict": "equivalent" if rep.verdict else "distinguishable"}
    if rep.witness is not None:
        report["witness"] = _distinction(rep.witness)
    if args.iso:
        iso = isomorphic(M, N)
        report["isomorphic"] = iso.verdict
        if iso.verdict:
            report["isomorphism"] = _witness_map(iso.witness)
    if args.ef_rank is not None:
        ef = ef_equiv(M, N, args.ef_rank)
        report[f"ef_rank_{args.ef_rank}"] = ef.verdict
        if not ef.verdict:
            report["spoiler"] = [_move(m) for m in ef.witness]
    return report, EXIT_OK if rep.verdict else EXIT_NEGATIVE


def _pair_verdict(task):
    relation, q, M, N = task
    if relation == "iso":
        return isomorphic(M, N).verdict
    return ef_equiv(M, N, q).verdict


def _parallel_partition(structures, relation, q, workers=None) -> list[list[int]]:
    """All-pairs verdicts evaluated in worker processes, merged by union-find."""
    n = len(structures)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        verdicts = list(ex.map(_pair_verdict, [(relation, q, structures[i], structures[j]) for i, j in pairs],
                               chunksize=max(1, len(pairs) // 64)))
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (i, j), ok in zip(pairs, verdicts):
        if ok:
            parent[max(find(i), find(j))] = min(find(i), find(j))
    groups: dict = defaultdict(list)
    for i in range(n):
        groups[find(i)].append(i)
    return [groups[k] for k in sorted(groups)]


def cmd_classify(args) -> tuple[dict, int]:
    root = Path(args.directory)
    if not root.is_dir():
        raise DistinguoError(f"{root} is not a directory")
    files = sorted(p for p in root.iterdir() if p.is_file() and not p.name.startswith("."))
    if not files:
        raise DistinguoError(f"no structure files in {root}")
    structures = [load_structure(p) for p in files]
    for p, M in zip(files[1:], structures[1:]):
        if M.signature != structures[0].signature or backend(M) != backend(structures[0]):
            raise DistinguoError(f"{p.name}: signature or backend differs from {files[0].name}")
    q = args.ef_rank
    if args.ea:
        args.afile = args.ea
        relation, label = "ea", "E_A"
    elif args.fragment:
        relation, label = "ea", "E_A"
    elif args.iso:
        relation, label = "iso", "iso"
    elif q is not None:
        relation, label = "ef", f"ef_rank_{q}"
    else:
        raise DistinguoError("choose a relation: --ea FILE, --fragment R:V, --iso or --ef-rank Q")
    if relation == "ea":
        A = _formulas(args, structures[0].signature)
        classes = classify(structures, "ea", formulas=A).classes
    elif args.parallel:
        classes = _parallel_partition(structures, relation, q)
    else:
        classes = classify(structures, relation, q=q).classes
    classes = sorted((sorted(c) for c in classes), key=lambda c: c[0])
    report = {"command": "classify", "directory": str(root), "relation": label, "structures": len(files),
              "class_count": len(classes),
              "classes": [{"representative": files[c[0]].name, "size": len(c),
                           "members": [files[i].name for i in c]} for c in classes]}
    return report, EXIT_OK


def cmd_borel_check(args) -> tuple[dict, int]:
    M, N = _pair(args)
    A = _formulas(args, M.signature)
    branches = []
    borel = True
    for phi, b in borel_branches(M, N, A):
        branches.append(b)
        if b is None:
            borel = False
            break
    ea = e_equiv(M, N, A)
    report = {"command": "borel-check", "left": args.left, "right": args.right, "formulas": len(A),
              "borel": borel, "e_equiv": ea.verdict}
    report["branches"] = {"finite": branches.count("finite"), "infinite": branches.count("infinite")}
    agree = borel == ea.verdict
    same_universe = not isinstance(M, FiniteStructure) or M.size == N.size
    if same_universe:
        n_max = args.nmax if args.nmax is not None else lossless_nmax(M, N, A)
        remark = remark_check(M, N, A, n_max)
        report["remark"] = remark
        report["nmax"] = n_max
        agree = agree and remark == ea.verdict
    if ea.witness is not None:
        report["witness"] = _distinction(ea.witness)
    report["agreement"] = "AGREE" if agree else "DISAGREE"
    if not agree:
        return report, EXIT_DISAGREE
    return report, EXIT_OK if ea.verdict else EXIT_NEGATIVE


def _vaught_chunk(task):
    structures, pairs, A = task
    bad = []
    for i, j in pairs:
        if isomorphic(structures[i], structures[j]).verdict != e_equiv(structures[i], structures[j], A).verdict:
            bad.append((i, j))
    return bad


def cmd_vaught_demo(args) -> tuple[dict, int]:
    if not (0 <= args.prefix <= 10 and 1 <= args.cycle <= 6):
        raise DistinguoError("bounds must satisfy 0 <= prefix <= 10 and 1 <= cycle <= 6")
    sig = Signature.of(R=1)
    A = [parse("R(v0)", sig), parse("~R(v0)", sig)]
    structures = [make_periodic(sig, {"R": s}) for s in all_periodic_sets(args.prefix, args.cycle)]
    n = len(structures)
    rows = [[(i, j) for j in range(i, n)] for i in range(n)]
    if args.parallel:
        with ProcessPoolExecutor() as ex:
            chunks = list(ex.map(_vaught_chunk, [(structures, r, A) for r in rows], chunksize=8))
    else:
        chunks = [_vaught_chunk((structures, r, A)) for r in rows]
    violations = [p for c in chunks for p in c]
    census: dict = defaultdict(list)
    for i, M in enumerate(structures):
        census[(count(M, A[0]), count(M, A[1]))].append(i)
    classes = []
    for key in sorted(census):
        members = census[key]
        first, last = structures[members[0]], structures[members[-1]]
        iso = isomorphic(first, last)
        classes.append({"R": key[0], "notR": key[1], "size": len(members),
                        "from": str(first.interp[0]), "to": str(last.interp[0]),
                        "theta": _witness_map(iso.witness)})
    report = {"command": "vaught-demo", "prefix": args.prefix, "cycle": args.cycle, "structures": n,
              "pairs": n * (n + 1) // 2, "violations": len(violations), "class_count": len(classes),
              "classes": classes}
    if violations:
        report["violating_pairs"] = [{"left": str(structures[i].interp[0]), "right": str(structures[j].interp[0])}
                                     for i, j in violations[:20]]
    return report, EXIT_OK if not violations else EXIT_NEGATIVE


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distinguo", description="Realization-count equivalence of structures.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON report")
    common.add_argument("--max-fragment", type=int, default=10 ** 6, metavar="N",
                        help="cap on generated fragment size")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("count", parents=[common], help="count realizations of a formula")
    c.add_argument("structure")
    c.add_argument("formula")
    c.add_argument("--show", action="store_true", help="always print the realization set")
    c.set_defaults(func=cmd_count)

    def formula_source(sp, positional=True):
        if positional:
            sp.add_argument("afile", nargs="?", help="formula list, one per line")
        sp.add_argument("--fragment", metavar="RANK:VARS", help="use a generated fragment instead of a file")

    d = sub.add_parser("distinguish", parents=[common], help="find a distinguishing formula")
    d.add_argument("left")
    d.add_argument("right")
    formula_source(d)
    d.add_argument("--iso", action="store_true", help="also decide isomorphism")
    d.add_argument("--ef-rank", "--ef", type=int, metavar="Q", help="also play the Q-round EF game")
    d.set_defaults(func=cmd_distinguish)

    k = sub.add_parser("classify", parents=[common], help="partition a directory of structures")
    k.add_argument("directory")
    k.add_argument("--ea", metavar="AFILE", help="classify under E_A for the formulas in AFILE")
    formula_source(k, positional=False)
    k.add_argument("--iso", action="store_true")
    k.add_argument("--ef-rank", "--ef", type=int, metavar="Q")
    k.add_argument("--parallel", action="store_true")
    k.set_defaults(func=cmd_classify)

    b = sub.add_parser("borel-check", parents=[common], help="cross-check the Borel construction")
    b.add_argument("left")
    b.add_argument("right")
    formula_source(b)
    b.add_argument("--nmax", type=int, metavar="K", help="truncation for the product-language check")
    b.set_defaults(func=cmd_borel_check)

    v = sub.add_parser("vaught-demo", parents=[common], help="unary isomorphism census")
    v.add_argument("--prefix", type=int, default=6)
    v.add_argument("--cycle", type=int, default=4)
    v.add_argument("--parallel", action="store_true")
    v.set_defaults(func=cmd_vaught_demo)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.command in ("distinguish", "borel-check") and not (args.afile or args.fragment):
        print("error: give a formula file or --fragment RANK:VARS", file=sys.stderr)
        return EXIT_INPUT
    start = time.perf_counter()
    try:
        report, code = args.func(args)
    except (DistinguoError, BudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report["elapsed"] = round(time.perf_counter() - start, 6)
    emit(report, args.json)
    return code


if __name__ == "__main__":
    sys.exit(main())
