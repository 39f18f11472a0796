"""Conflict-matrix derivation and executable commutativity properties.

The matrix is built in passes. The structural pass works on declared
signature regions alone and marks pairs that can never belong to one
commutative bag: a codomain escaping a partner's domain ("i"), an
exclusive member whose domain and codomain are disjoint ("i'"), and a
pair of exclusives that additionally have disjoint domains ("i''").
Cells left blank are then settled by the semantic pass, which replays
both application orders over every state of the pair's tight common
domain and compares final states and views. Decomposable types get an
independence pass first: members addressing distinct sub-object keys
commute outright. A declared conflict rule (the tuple's read/write
compatibility) short-circuits the state-level passes where the model
deliberately does not rely on them.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional, Sequence

from .catalog import AdtDefinition
from .model import (COMPOSABILITY, FAILS, HOLDS, STATE_ORDER, VACUOUS,
                    VIEW_ORDER, CompositionReport, FunctionBag, FunctionSpec,
                    UsageError, check_compensability, check_composition,
                    check_state_commutativity, check_view_independence,
                    compose, enumerate_orders)

# cell marks
NO_COMPOSITION = "no-composition"      # i: a codomain escapes a partner domain
EXCLUSIVE = "exclusive"                # i': a member maps wholly outside itself
DISJOINT_DOMAINS = "disjoint-domains"  # i'': the two domains never overlap
RW_EXCLUSION = "rw-exclusion"          # declared read/write rule (tuple fields)
SEMANTIC_CONFLICT = "semantic-conflict"
COMMUTE = "commute"
UNKNOWN = "unknown"

STRUCTURAL_MARKS = frozenset({NO_COMPOSITION, EXCLUSIVE, DISJOINT_DOMAINS})

COMPENSABILITY = "compensability"

# admission classes consumed by the transaction engine
ADMIT = "admit"
DELAY = "delay"
CONDITIONAL = "conditional"

ORDER_CAP = 5          # exhaustive permutations up to this bag size
ORDER_SAMPLE = 1000    # seeded sample beyond the cap
INTERLEAVE_CAP = 6     # exhaustive direct/inverse interleavings up to n+m


@dataclass
class CellVerdict:
    pair: tuple                       # (row id, row id)
    marks: frozenset
    display: str                      # one glyph: '', i, i', i'', c, x, ?
    reasons: list = field(default_factory=list)
    detail: list = field(default_factory=list)  # per-instantiation verdicts

    @property
    def is_structural(self) -> bool:
        return bool(self.marks & STRUCTURAL_MARKS)

    @property
    def commutes(self) -> bool:
        return COMMUTE in self.marks


class ConflictMatrix:
    """Square matrix of pair verdicts over an ordered function inventory."""

    def __init__(self, name: str, rows: Sequence[str]):
        self.name = name
        self.rows = list(rows)
        self.cells: dict = {}
        self.instance_classes: dict = {}  # (sig_a, sig_b) -> ADMIT|DELAY|CONDITIONAL

    def set_cell(self, a: str, b: str, verdict: CellVerdict):
        self.cells[(a, b)] = verdict
        if a != b:
            mirrored = CellVerdict((b, a), verdict.marks, verdict.display,
                                   verdict.reasons, verdict.detail)
            self.cells[(b, a)] = mirrored

    def cell(self, a: str, b: str) -> CellVerdict:
        return self.cells[(a, b)]

    def set_instance_class(self, fa: FunctionSpec, fb: FunctionSpec, cls: str):
        self.instance_classes[(fa.signature, fb.signature)] = cls
        self.instance_classes[(fb.signature, fa.signature)] = cls

    def instance_class(self, fa: FunctionSpec, fb: FunctionSpec) -> str:
        return self.instance_classes.get((fa.signature, fb.signature), CONDITIONAL)

    def commuting_cells(self) -> list:
        return [p for p, v in sorted(self.cells.items()) if v.commutes]

    def exclusive_rows(self) -> list:
        out = []
        for r in self.rows:
            v = self.cell(r, r)
            if EXCLUSIVE in v.marks:
                out.append(r)
        return out

    # -- export ------------------------------------------------------------

    def glyph(self, a: str, b: str, mode: str = "full") -> str:
        v = self.cell(a, b)
        if mode == "paper":
            return v.display if v.display in ("i", "i'", "i''") else ""
        return v.display

    def render(self, mode: str = "full") -> str:
        width = max(len(r) for r in self.rows) + 1
        cell_w = max(len(r) for r in self.rows) + 2
        head = " " * width + "".join(c.rjust(cell_w) for c in self.rows)
        out = [head]
        for a in self.rows:
            line = a.ljust(width)
            line += "".join(self.glyph(a, b, mode).rjust(cell_w) for b in self.rows)
            out.append(line)
        return "\n".join(out)

    def to_csv(self, mode: str = "full") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([""] + self.rows)
        for a in self.rows:
            w.writerow([a] + [self.glyph(a, b, mode) for b in self.rows])
        return buf.getvalue()

    def to_json(self, mode: str = "full") -> str:
        cells = []
        for a in self.rows:
            for b in self.rows:
                v = self.cell(a, b)
                cells.append({
                    "row": a,
                    "col": b,
                    "display": self.glyph(a, b, mode),
                    "marks": sorted(v.marks),
                    "reasons": v.reasons,
                    "instances": v.detail,
                })
        doc = {"name": self.name, "mode": mode, "inventory": self.rows,
               "cells": cells}
        return json.dumps(doc, indent=2, default=str)


# ---------------------------------------------------------------------------
# structural pass


def _row_table(inventory: Sequence[FunctionSpec]) -> tuple[list, dict]:
    rows: list = []
    groups: dict = {}
    for f in inventory:
        if f.fid not in groups:
            rows.append(f.fid)
            groups[f.fid] = []
        groups[f.fid].append(f)
    for fid, members in groups.items():
        first = members[0]
        for m in members[1:]:
            if (m.declared_domain.members != first.declared_domain.members or
                    m.declared_codomain.members != first.declared_codomain.members):
                raise UsageError(
                    f"instantiations of {fid} declare different signatures")
    return rows, groups


def _structural_cell(a: str, b: str, fa: FunctionSpec,
                     fb: FunctionSpec) -> CellVerdict:
    marks = set()
    da, ca = fa.declared_domain, fa.declared_codomain
    db, cb = fb.declared_domain, fb.declared_codomain
    if not ca.is_subset(db) or not cb.is_subset(da):
        marks.add(NO_COMPOSITION)
    excl_a, excl_b = fa.is_exclusive(), fb.is_exclusive()
    if excl_a or excl_b:
        marks.add(EXCLUSIVE)
    disjoint = da.intersect(db).is_empty
    if disjoint:
        marks.add(DISJOINT_DOMAINS)
    if excl_a and excl_b and disjoint:
        display = "i''"
    elif excl_a or excl_b:
        display = "i'"
    elif NO_COMPOSITION in marks:
        display = "i"
    else:
        display = ""
    return CellVerdict((a, b), frozenset(marks), display)


def structural_matrix(inventory: Sequence[FunctionSpec],
                      name: str = "") -> ConflictMatrix:
    """Mark, from declared signatures alone, every pair that cannot
    belong to a commutative bag; unmarked cells stay candidates."""
    if not inventory:
        raise UsageError("empty function inventory")
    rows, groups = _row_table(inventory)
    matrix = ConflictMatrix(name or "inventory", rows)
    for i, a in enumerate(rows):
        for b in rows[i:]:
            cell = _structural_cell(a, b, groups[a][0], groups[b][0])
            if not cell.marks:
                cell = CellVerdict((a, b), frozenset({UNKNOWN}), "?")
            matrix.set_cell(a, b, cell)
            cls = DELAY if cell.marks & STRUCTURAL_MARKS else CONDITIONAL
            for fa in groups[a]:
                for fb in groups[b]:
                    matrix.set_instance_class(fa, fb, cls)
    return matrix


# ---------------------------------------------------------------------------
# semantic pass


def pair_semantic(f: FunctionSpec, g: FunctionSpec) -> tuple[str, dict]:
    """Settle one concrete pair by exhaustion over the tight common domain.

    Returns (verdict mark, reasons) where reasons maps a failed condition
    to its first witness state. The pair commutes only if both members
    are compensable, the common domain is non-empty, and at every common
    state both orders compose, agree on the final state, and leave each
    other's views unchanged.
    """
    reasons: dict = {}
    for h in (f, g):
        rep = check_compensability(h)
        if not rep.holds:
            reasons[COMPENSABILITY] = rep.witnesses[0]
            return SEMANTIC_CONFLICT, reasons
    common = [x for x in f.space.states if x in f.domain and x in g.domain]
    if not common:
        return DISJOINT_DOMAINS, {}
    for x in common:
        gx, fx = g.transition(x), f.transition(x)
        if gx not in f.domain or fx not in g.domain:
            reasons.setdefault(COMPOSABILITY, x)
            continue
        if f.transition(gx) != g.transition(fx):
            reasons.setdefault(STATE_ORDER, x)
            continue
        if (f.view(gx, f.transition(gx)) != f.view(x, fx) or
                g.view(fx, g.transition(fx)) != g.view(x, gx)):
            reasons.setdefault(VIEW_ORDER, x)
    if reasons:
        return SEMANTIC_CONFLICT, reasons
    return COMMUTE, {}


def semantic_verdict(f: FunctionSpec, g: FunctionSpec) -> CellVerdict:
    """Semantic complement for one structurally unmarked pair."""
    structural = _structural_cell(f.fid, g.fid, f, g)
    if structural.marks:
        raise UsageError(
            f"pair ({f.name}, {g.name}) is structurally marked; the fast "
            "path must not be bypassed")
    verdict, reasons = pair_semantic(f, g)
    display = {COMMUTE: "c", SEMANTIC_CONFLICT: "x",
               DISJOINT_DOMAINS: "i''"}[verdict]
    reason_list = [{"condition": c, "witness": repr(w)}
                   for c, w in sorted(reasons.items())]
    return CellVerdict((f.fid, g.fid), frozenset({verdict}), display,
                       reason_list)


def _instance_pairs(members_a: list, members_b: list, same_row: bool):
    if same_row:
        return list(itertools.combinations_with_replacement(members_a, 2))
    return list(itertools.product(members_a, members_b))


def full_matrix(adt: AdtDefinition,
                inventory: Optional[Sequence[FunctionSpec]] = None) -> ConflictMatrix:
    """Structural pass first, then the semantic pass on candidate cells.

    Decomposed types get an independence pass ahead of everything:
    members addressing distinct sub-object keys commute by coordinate
    disjointness. Rows whose members carry no executable transition
    (signature-only declarations) leave their candidate cells UNKNOWN.
    """
    inventory = list(inventory if inventory is not None else adt.inventory)
    if not inventory:
        raise UsageError(f"{adt.name} has no enumerated inventory to analyze")
    rows, groups = _row_table(inventory)
    matrix = ConflictMatrix(adt.name, rows)

    for i, a in enumerate(rows):
        for b in rows[i:]:
            fa0, fb0 = groups[a][0], groups[b][0]
            pairs = _instance_pairs(groups[a], groups[b], a == b)

            if (adt.decomposition is not None
                    and fa0.subkey is not None and fb0.subkey is not None
                    and fa0.subkey != fb0.subkey):
                cell = CellVerdict((a, b), frozenset({COMMUTE}), "c",
                                   [{"condition": "independent",
                                     "witness": None}])
                matrix.set_cell(a, b, cell)
                for fa, fb in pairs:
                    matrix.set_instance_class(fa, fb, ADMIT)
                continue

            if adt.conflict_rule is not None:
                label = adt.conflict_rule(fa0, fb0)
                if label:
                    cell = CellVerdict((a, b), frozenset({RW_EXCLUSION}), "x",
                                       [{"condition": label, "witness": None}])
                    matrix.set_cell(a, b, cell)
                    for fa, fb in pairs:
                        matrix.set_instance_class(fa, fb, DELAY)
                    continue

            cell = _structural_cell(a, b, fa0, fb0)
            if cell.marks:
                matrix.set_cell(a, b, cell)
                for fa, fb in pairs:
                    matrix.set_instance_class(fa, fb, DELAY)
                continue

            if fa0.transition is None or fb0.transition is None:
                matrix.set_cell(a, b, CellVerdict(
                    (a, b), frozenset({UNKNOWN}), "?"))
                continue

            # semantic pass per concrete instantiation; a row commutes only
            # if every instantiation pair commutes
            detail = []
            merged: dict = {}
            verdicts = set()
            for fa, fb in pairs:
                verdict, reasons = pair_semantic(fa, fb)
                verdicts.add(verdict)
                detail.append([fa.name, fb.name, verdict])
                for c, w in reasons.items():
                    merged.setdefault(c, (fa.name, fb.name, repr(w)))
                matrix.set_instance_class(fa, fb, {
                    COMMUTE: ADMIT, DISJOINT_DOMAINS: DELAY,
                    SEMANTIC_CONFLICT: CONDITIONAL}[verdict])
            if verdicts == {COMMUTE}:
                cell = CellVerdict((a, b), frozenset({COMMUTE}), "c", [], detail)
            elif SEMANTIC_CONFLICT in verdicts:
                reason_list = [
                    {"condition": c, "witness": w, "instances": [ia, ib]}
                    for c, (ia, ib, w) in sorted(merged.items())]
                cell = CellVerdict((a, b), frozenset({SEMANTIC_CONFLICT}), "x",
                                   reason_list, detail)
            else:
                cell = CellVerdict((a, b), frozenset({DISJOINT_DOMAINS}), "i''",
                                   [], detail)
            matrix.set_cell(a, b, cell)
    return matrix


def render_matrix(matrix: ConflictMatrix, mode: str = "paper") -> str:
    if mode not in ("paper", "full"):
        raise UsageError(f"unknown render mode {mode!r}")
    return matrix.render(mode)


# ---------------------------------------------------------------------------
# theorem-level properties

CONVERGENCE_LIMIT = "convergence-limit"
CONVERGENCE_FINAL = "final-state-convergence"
ORDER_INDEPENDENCE = "order-independence"
VIEW_STABILITY = "view-stability"
UNDO_EQUIVALENCE = "undo-equivalence"

PASS = "pass"
FAIL = "fail"
NOT_APPLICABLE = "not-applicable"


@dataclass
class TheoremReport:
    property: str
    outcome: str
    bag: list
    counterexample: Optional[dict] = None
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.outcome == FAIL


def _bag_names(bag: FunctionBag) -> list:
    return [f.name for f in bag]


def _pairwise_commute(bag: FunctionBag) -> Optional[tuple]:
    """First non-commuting position pair, or None if all pairs commute."""
    for i, j in itertools.combinations(range(len(bag)), 2):
        verdict, _ = pair_semantic(bag[i], bag[j])
        if verdict != COMMUTE:
            return (i, j, verdict)
    return None


def check_convergence(bag: FunctionBag, seed: int = 0) -> list[TheoremReport]:
    """Convergence properties of a composable commuting bag: the common
    codomain is contained in the common domain, and every order drives
    every common-domain state into the common codomain.

    Hypotheses (bag size >= 2, signature composition, pairwise state
    commutativity) are gated; an unmet hypothesis yields not-applicable,
    never a pass.
    """
    names = _bag_names(bag)
    if len(bag) < 2:
        return [TheoremReport(p, NOT_APPLICABLE, names,
                              detail="bag size must be >= 2")
                for p in (CONVERGENCE_LIMIT, CONVERGENCE_FINAL)]
    comp = check_composition(bag, declared=True)
    if not comp.holds:
        detail = f"signature composition fails at pairs {comp.violations}"
        return [TheoremReport(p, NOT_APPLICABLE, names, detail=detail)
                for p in (CONVERGENCE_LIMIT, CONVERGENCE_FINAL)]
    for i, j in itertools.combinations(range(len(bag)), 2):
        rep = check_state_commutativity(bag[i], bag[j])
        if rep.verdict == FAILS:
            detail = f"state commutativity fails for positions ({i},{j})"
            return [TheoremReport(p, NOT_APPLICABLE, names, detail=detail)
                    for p in (CONVERGENCE_LIMIT, CONVERGENCE_FINAL)]

    reports = []
    a_all = bag.declared_common_domain
    b_all = bag.declared_common_codomain
    if b_all.is_subset(a_all):
        reports.append(TheoremReport(CONVERGENCE_LIMIT, PASS, names))
    else:
        extra = next(iter(b_all.members - a_all.members))
        reports.append(TheoremReport(
            CONVERGENCE_LIMIT, FAIL, names,
            counterexample={"state": repr(extra)}))

    orders = enumerate_orders(len(bag), ORDER_CAP, ORDER_SAMPLE, seed)
    failure = None
    for x in bag.common_domain:
        for order in orders:
            res = compose(bag, order, x)
            if not res.defined:
                failure = {"state": repr(x), "order": list(order),
                           "failed_step": res.failed_step}
                break
            if res.state not in b_all:
                failure = {"state": repr(x), "order": list(order),
                           "final": repr(res.state)}
                break
        if failure:
            break
    if failure:
        reports.append(TheoremReport(CONVERGENCE_FINAL, FAIL, names,
                                     counterexample=failure))
    else:
        reports.append(TheoremReport(CONVERGENCE_FINAL, PASS, names))
    return reports


def check_any_order(bag: FunctionBag, x, seed: int = 0,
                    assume_commuting: bool = False) -> list[TheoremReport]:
    """All orders of a pairwise commuting bag agree on the final state,
    and each member's view equals its solo view in every order."""
    names = _bag_names(bag)
    if x not in bag.common_domain:
        raise UsageError(f"{x!r} is not in the bag's common domain")
    if not assume_commuting:
        bad = _pairwise_commute(bag)
        if bad is not None:
            detail = f"positions ({bad[0]},{bad[1]}) do not commute: {bad[2]}"
            return [TheoremReport(p, NOT_APPLICABLE, names, detail=detail)
                    for p in (ORDER_INDEPENDENCE, VIEW_STABILITY)]

    solo_views = [f.apply(x)[1] for f in bag]
    orders = enumerate_orders(len(bag), ORDER_CAP, ORDER_SAMPLE, seed)
    final = None
    state_fail = None
    view_fail = None
    for order in orders:
        state = x
        for step, k in enumerate(order):
            f = bag[k]
            if state not in f.domain:
                state_fail = {"state": repr(x), "order": list(order),
                              "failed_step": step}
                break
            post, view, _ = f.apply(state)
            if view != solo_views[k] and view_fail is None:
                view_fail = {"state": repr(x), "order": list(order),
                             "member": f.name, "view": view,
                             "solo_view": solo_views[k]}
            state = post
        if state_fail:
            break
        if final is None:
            final = state
        elif state != final:
            state_fail = {"state": repr(x), "order": list(order),
                          "final": repr(state), "expected": repr(final)}
            break
    reports = [
        TheoremReport(ORDER_INDEPENDENCE, FAIL if state_fail else PASS, names,
                      counterexample=state_fail),
        TheoremReport(VIEW_STABILITY, FAIL if view_fail else PASS, names,
                      counterexample=view_fail),
    ]
    return reports


def interleavings(n: int, undo_positions: Sequence[int]):
    """All sequences of direct applications 0..n-1 and undos of the given
    positions, each undo after its direct application. Symbols are
    ('do', i) and ('undo', i)."""
    undo_set = frozenset(undo_positions)

    def rec(done, undone, seq):
        if len(seq) == n + len(undo_set):
            yield tuple(seq)
            return
        for i in range(n):
            if i not in done:
                yield from rec(done | {i}, undone, seq + [("do", i)])
        for i in undo_set:
            if i in done and i not in undone:
                yield from rec(done, undone | {i}, seq + [("undo", i)])

    yield from rec(frozenset(), frozenset(), [])


def check_undo_equivalence(bag: FunctionBag, undo_positions: Sequence[int],
                           x, assume_commuting: bool = False) -> TheoremReport:
    """Undoing a sub-bag at any point after the direct applications is
    equivalent to never having applied the undone members at all."""
    names = _bag_names(bag)
    if x not in bag.common_domain:
        raise UsageError(f"{x!r} is not in the bag's common domain")
    undo_positions = sorted(set(undo_positions))
    if any(not 0 <= p < len(bag) for p in undo_positions):
        raise UsageError("undo positions outside the bag")
    if not assume_commuting:
        bad = _pairwise_commute(bag)
        if bad is not None:
            detail = f"positions ({bad[0]},{bad[1]}) do not commute: {bad[2]}"
            return TheoremReport(UNDO_EQUIVALENCE, NOT_APPLICABLE, names,
                                 detail=detail)
        for f in bag:
            if not check_compensability(f).holds:
                return TheoremReport(UNDO_EQUIVALENCE, NOT_APPLICABLE, names,
                                     detail=f"{f.name} is not compensable")

    kept = [i for i in range(len(bag)) if i not in undo_positions]
    state = x
    for i in kept:
        if state not in bag[i].domain:
            return TheoremReport(
                UNDO_EQUIVALENCE, FAIL, names,
                counterexample={"state": repr(x),
                                "detail": "kept composition undefined"})
        state = bag[i].transition(state)
    expected = state

    n, m = len(bag), len(undo_positions)
    if n + m > INTERLEAVE_CAP:
        raise UsageError(f"interleaving enumeration capped at n+m <= {INTERLEAVE_CAP}")
    for seq in interleavings(n, undo_positions):
        state = x
        captured: dict = {}
        for kind, i in seq:
            f = bag[i]
            if kind == "do":
                if state not in f.domain:
                    return TheoremReport(
                        UNDO_EQUIVALENCE, FAIL, names,
                        counterexample={"state": repr(x), "sequence": seq,
                                        "detail": f"{f.name} undefined mid-sequence"})
                post, _, pre = f.apply(state)
                captured[i] = pre
                state = post
            else:
                state = f.undo(state, captured[i])
        if state != expected:
            return TheoremReport(
                UNDO_EQUIVALENCE, FAIL, names,
                counterexample={"state": repr(x), "sequence": seq,
                                "final": repr(state),
                                "expected": repr(expected)})
    return TheoremReport(UNDO_EQUIVALENCE, PASS, names)


# ---------------------------------------------------------------------------
# bag enumeration for the verification suites


def commuting_bags(adt: AdtDefinition, max_size: int = 4,
                   matrix: Optional[ConflictMatrix] = None):
    """Yield every multiset of inventory functions, sizes 2..max_size,
    whose position pairs (duplicates included) all commute."""
    matrix = matrix or full_matrix(adt)
    functions = list(adt.inventory)
    admit: dict = {}

    def commutes(i, j):
        key = (i, j) if i <= j else (j, i)
        if key not in admit:
            admit[key] = matrix.instance_class(functions[key[0]],
                                               functions[key[1]]) == ADMIT
        return admit[key]

    idx = range(len(functions))
    for size in range(2, max_size + 1):
        for combo in itertools.combinations_with_replacement(idx, size):
            # position pairs of a multiset include self-pairs of duplicates
            ok = True
            for a, b in itertools.combinations(combo, 2):
                if not commutes(a, b):
                    ok = False
                    break
            if ok:
                yield FunctionBag([functions[i] for i in combo])
