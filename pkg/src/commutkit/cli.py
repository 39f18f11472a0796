"""Command-line front end: analyze, simulate, verify.

``analyze`` derives a conflict matrix for a catalog ADT (or, signatures
only, for a user-declared JSON spec file) and prints it as text, CSV or
JSON. ``simulate`` runs seeded workloads through the transaction engine
and reports delay rates, optionally paired with the read/write
compatibility baseline. ``verify`` runs the full property suites
(compensability plus the convergence, order-independence,
view-stability and undo-equivalence checks) over every pairwise
commuting bag drawn from the chosen catalogs.

Exit codes: 0 success, 1 a verification or analysis check failed,
2 usage errors.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys
from dataclasses import dataclass

from . import sim
from .analyzer import (INTERLEAVE_CAP, check_any_order, check_convergence,
                       check_undo_equivalence, commuting_bags, full_matrix,
                       structural_matrix)
from .catalog import CATALOG_NAMES, AdtDefinition, build_adt
from .model import FunctionSpec, StateSpace, UsageError, check_compensability

USAGE_EXIT = 2
CHECK_FAILED_EXIT = 1


# ---------------------------------------------------------------------------
# declared ADT spec files (signatures only)


@dataclass
class AdtSpecFile:
    name: str
    regions: list
    functions: list  # of {"id", "domain": [labels], "codomain": [labels]}

    def to_json(self) -> str:
        return json.dumps({"name": self.name, "regions": self.regions,
                           "functions": self.functions}, indent=2)


def parse_adt_spec(text: str):
    """Parse and validate a JSON spec document.

    Returns (AdtSpecFile, []) or (None, diagnostics). Regions are
    disjoint blocks by construction; functions reference them by label.
    Never returns a partial result.
    """
    diagnostics = []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        return None, [f"malformed JSON: {e}"]
    if not isinstance(doc, dict):
        return None, ["top-level JSON value must be an object"]
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        diagnostics.append("missing or empty 'name'")
        name = "?"
    regions = doc.get("regions")
    if not isinstance(regions, list) or not all(isinstance(r, str) for r in regions):
        diagnostics.append("'regions' must be a list of labels")
        regions = []
    if len(set(regions)) != len(regions):
        diagnostics.append("duplicate region labels")
    functions = doc.get("functions")
    if not isinstance(functions, list):
        diagnostics.append("'functions' must be a list")
        functions = []
    seen = set()
    known = set(regions)
    cleaned = []
    for k, f in enumerate(functions):
        if not isinstance(f, dict) or not isinstance(f.get("id"), str):
            diagnostics.append(f"function #{k} has no id")
            continue
        fid = f["id"]
        if fid in seen:
            diagnostics.append(f"duplicate function id {fid!r}")
        seen.add(fid)
        entry = {"id": fid}
        for fld in ("domain", "codomain"):
            labels = f.get(fld)
            if not isinstance(labels, list) or not labels:
                diagnostics.append(f"function {fid!r}: {fld} must be a "
                                   "non-empty list of region labels")
                labels = []
            for lab in labels:
                if lab not in known:
                    diagnostics.append(
                        f"function {fid!r} references undeclared region {lab!r}")
            entry[fld] = labels
        cleaned.append(entry)
    if diagnostics:
        return None, diagnostics
    return AdtSpecFile(name, regions, cleaned), []


def spec_inventory(spec: AdtSpecFile) -> list[FunctionSpec]:
    """Signature-only inventory: one synthetic state per declared region
    (regions are disjoint blocks, so label-set algebra is exact)."""
    space = StateSpace(spec.name, spec.regions)
    blocks = {r: space.region(r, [r]) for r in spec.regions}

    def union(labels, tag):
        members = frozenset(labels)
        return space.region(tag, members)

    out = []
    for f in spec.functions:
        out.append(FunctionSpec(
            fid=f["id"],
            domain=union(f["domain"], f"{f['id']}.dom"),
            codomain=union(f["codomain"], f"{f['id']}.cod"),
            transition=None, view=None, inverse=None,
        ))
    return out


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> int:
    if bool(args.adt) == bool(args.spec):
        print("analyze: exactly one of --adt or --spec is required",
              file=sys.stderr)
        return USAGE_EXIT
    try:
        if args.adt:
            adt = build_adt(args.adt)
            if not adt.inventory:
                print(f"analyze: {adt.name} is too large for whole-object "
                      "analysis; reduce its size parameters", file=sys.stderr)
                return USAGE_EXIT
            if args.mode == "paper":
                matrix = structural_matrix(adt.inventory, adt.name)
            else:
                matrix = full_matrix(adt)
        else:
            text = open(args.spec).read()
            spec, diagnostics = parse_adt_spec(text)
            if spec is None:
                for d in diagnostics:
                    print(f"analyze: {args.spec}: {d}", file=sys.stderr)
                return USAGE_EXIT
            if args.mode == "full":
                print("analyze: spec files carry signatures only; "
                      "--mode full needs executable semantics", file=sys.stderr)
                return USAGE_EXIT
            inventory = spec_inventory(spec)
            if not inventory:
                print(f"analyze: {args.spec}: empty function list",
                      file=sys.stderr)
                return USAGE_EXIT
            matrix = structural_matrix(inventory, spec.name)
    except FileNotFoundError as e:
        print(f"analyze: {e}", file=sys.stderr)
        return USAGE_EXIT
    except UsageError as e:
        print(f"analyze: {e}", file=sys.stderr)
        return USAGE_EXIT

    if args.format == "text":
        out = matrix.render(args.mode)
    elif args.format == "csv":
        out = matrix.to_csv(args.mode)
    else:
        out = matrix.to_json(args.mode)
    _write_out(args.out, out)
    return 0


def _write_out(path, text):
    if not text.endswith("\n"):
        text += "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    try:
        config = sim.SimConfig(
            adt=args.adt, relation=args.relation, txn_count=args.txns,
            ops_per_txn=args.ops, abort_probability=args.abort_probability,
            seed=args.seed)
        adt = build_adt(args.adt)
        config.validate(adt)
        if args.baseline:
            commut, compat = sim.run_paired(config, adt)
            rows = [commut, compat]
        else:
            stats, _, _ = sim.run_sim(config, adt)
            rows = [stats]
    except UsageError as e:
        print(f"simulate: {e}", file=sys.stderr)
        return USAGE_EXIT
    _write_out(args.out, sim.stats_csv(rows))
    return 0


# ---------------------------------------------------------------------------
# verify


def _verify_adt(adt: AdtDefinition, max_bag: int, seed: int,
                report_lines: list) -> bool:
    ok = True

    def emit(status, text):
        report_lines.append(f"[{status}] {adt.name}: {text}")

    for f in adt.inventory + adt.aux_functions:
        rep = check_compensability(f)
        if rep.holds:
            emit("pass", f"compensability {f.name}")
        else:
            ok = False
            emit("FAIL", f"compensability {f.name} witness={rep.witnesses[0]!r}")

    matrix = full_matrix(adt)
    checked = 0
    for bag in commuting_bags(adt, max_bag, matrix):
        reports = check_convergence(bag, seed)
        n = len(bag)
        undo_sets = [subset for m in range(0, min(n, INTERLEAVE_CAP - n) + 1)
                     for subset in itertools.combinations(range(n), m)]
        for x in bag.common_domain:
            reports += check_any_order(bag, x, seed, assume_commuting=True)
            for undo in undo_sets:
                reports.append(
                    check_undo_equivalence(bag, undo, x, assume_commuting=True))
        checked += 1
        for r in reports:
            if r.failed:
                ok = False
                emit("FAIL", f"{r.property} bag={r.bag} "
                             f"counterexample={r.counterexample}")
    emit("pass" if ok else "FAIL",
         f"{checked} pairwise-commuting bags (size <= {max_bag}) verified")
    return ok


def cmd_verify(args) -> int:
    names = list(CATALOG_NAMES) if args.adt == "all" else [args.adt]
    lines: list = []
    all_ok = True
    try:
        for name in names:
            adt = build_adt(name)
            if not _verify_adt(adt, args.max_bag, args.seed, lines):
                all_ok = False
    except UsageError as e:
        print(f"verify: {e}", file=sys.stderr)
        return USAGE_EXIT
    _write_out(args.out, "\n".join(lines))
    return 0 if all_ok else CHECK_FAILED_EXIT


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="commutkit",
        description="Commutativity analysis and transactional execution "
                    "for abstract data types.")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="derive a conflict matrix")
    pa.add_argument("--adt", help="catalog key, e.g. stack:depth=3,alpha=2")
    pa.add_argument("--spec", help="JSON spec file (signatures only)")
    pa.add_argument("--mode", choices=["paper", "full"], default="paper")
    pa.add_argument("--format", choices=["text", "csv", "json"], default="text")
    pa.add_argument("--out", help="output file (default stdout)")
    pa.set_defaults(func=cmd_analyze)

    ps = sub.add_parser("simulate", help="run a seeded workload")
    ps.add_argument("--adt", required=True)
    ps.add_argument("--relation", choices=["commutativity", "compatibility"],
                    default="commutativity")
    ps.add_argument("--txns", type=int, default=10)
    ps.add_argument("--ops", type=int, default=4)
    ps.add_argument("--abort-probability", type=float, default=0.0)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--baseline", action="store_true",
                    help="also run the compatibility pairing")
    ps.add_argument("--out", help="output file (default stdout)")
    ps.set_defaults(func=cmd_simulate)

    pv = sub.add_parser("verify", help="run the theorem property suites")
    pv.add_argument("--adt", default="all",
                    help="catalog name or 'all'")
    pv.add_argument("--max-bag", type=int, default=4)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--out", help="output file (default stdout)")
    pv.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # argparse exits with 2 on bad flags
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
