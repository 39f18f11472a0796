"""Seeded workload generator and conflict-rate measurement.

A run pre-generates every transaction's operation script (and its final
commit-or-abort choice) from the seed alone, so the compatibility and
commutativity relation modes execute the same logical workload and their
delay rates are directly comparable. Transactions all begin up front and
issue operations round-robin; a delayed transaction holds its place
until the engine wakes or aborts its request. Time is logical: nothing
here measures the host machine.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from typing import Optional

from .analyzer import COMMUTE, pair_semantic
from .catalog import AdtDefinition, build_adt
from .engine import ABORTED, ADMITTED, DELAYED, Engine
from .model import FunctionBag, UsageError

STATS_COLUMNS = [
    "adt", "relation", "txns", "ops_per_txn", "abort_probability", "seed",
    "invocations", "delays", "delay_rate", "deadlock_aborts",
    "voluntary_aborts", "completed_txns", "mean_pending", "conflict_ratio",
]


@dataclass
class SimConfig:
    adt: str                      # catalog key, e.g. "directory:items=100"
    relation: str = "commutativity"
    txn_count: int = 10
    ops_per_txn: int = 4
    abort_probability: float = 0.0
    seed: int = 0
    mix: Optional[dict] = None    # op name -> weight; None = uniform
    window: int = 5               # multiprogramming level (concurrent txns)

    def validate(self, adt: AdtDefinition):
        if self.txn_count <= 0:
            raise UsageError("txn_count must be positive")
        if self.ops_per_txn <= 0:
            raise UsageError("ops_per_txn must be positive")
        if self.window <= 0:
            raise UsageError("window must be positive")
        if not 0.0 <= self.abort_probability <= 1.0:
            raise UsageError("abort_probability must lie in [0, 1]")
        if self.mix:
            for op, w in self.mix.items():
                if op not in adt.op_names:
                    raise UsageError(f"mix names unknown operation {op!r}")
                if w < 0:
                    raise UsageError("mix weights must be non-negative")
            if not any(self.mix.get(op, 0) > 0 for op in adt.op_names):
                raise UsageError("mix has no positive weight")


@dataclass
class SimStats:
    config: SimConfig
    invocations: int = 0
    delays: int = 0
    deadlock_aborts: int = 0
    voluntary_aborts: int = 0
    completed_txns: int = 0
    mean_pending: float = 0.0
    conflict_ratio: Optional[float] = None

    @property
    def delay_rate(self) -> float:
        return self.delays / self.invocations if self.invocations else 0.0

    def csv_row(self) -> list:
        c = self.config
        return [
            c.adt, c.relation, c.txn_count, c.ops_per_txn,
            f"{c.abort_probability:.3f}", c.seed,
            self.invocations, self.delays, f"{self.delay_rate:.6f}",
            self.deadlock_aborts, self.voluntary_aborts, self.completed_txns,
            f"{self.mean_pending:.6f}",
            "" if self.conflict_ratio is None else f"{self.conflict_ratio:.6f}",
        ]


def stats_csv(rows: list[SimStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_COLUMNS)
    for s in rows:
        w.writerow(s.csv_row())
    return buf.getvalue()


@dataclass
class _Script:
    ops: list            # of (op, args)
    final: str           # "commit" | "abort"


def generate_scripts(config: SimConfig, adt: AdtDefinition) -> list[_Script]:
    """Deterministic per-transaction scripts; independent of relation mode."""
    rng = random.Random(config.seed)
    ops = list(adt.op_names)
    weights = [ (config.mix or {}).get(op, 1 if not config.mix else 0)
                for op in ops ]
    scripts = []
    for _ in range(config.txn_count):
        body = []
        for _ in range(config.ops_per_txn):
            op = rng.choices(ops, weights=weights)[0]
            body.append((op, adt.draw_args(op, rng)))
        final = "abort" if rng.random() < config.abort_probability else "commit"
        scripts.append(_Script(body, final))
    return scripts


def run_sim(config: SimConfig, adt: Optional[AdtDefinition] = None,
            instrumented: bool = False):
    """Execute one seeded workload; returns (SimStats, History, Engine).

    Every run with at most six transactions is checked against the
    serializability oracle before returning.
    """
    adt = adt or build_adt(config.adt)
    config.validate(adt)
    scripts = generate_scripts(config, adt)
    engine = Engine(relation=config.relation, instrumented=instrumented)
    engine.register_object("obj", adt)
    stats = SimStats(config)

    # round-robin issue order over a bounded multiprogramming window:
    # a fresh transaction begins whenever a slot frees up
    script_of: dict = {}
    waiting: dict = {}
    cursor: dict = {}
    active: list = []
    started = 0
    finished = 0
    pending_sizes = []

    while finished < config.txn_count:
        while started < config.txn_count and len(active) < config.window:
            txn = engine.begin()
            script_of[txn] = scripts[started]
            waiting[txn] = None
            cursor[txn] = 0
            active.append(txn)
            started += 1
        progressed = False
        for txn in list(active):
            if engine.txn_status(txn) == ABORTED:
                # deadlock victim; its waiting request was cancelled
                active.remove(txn)
                stats.deadlock_aborts += 1
                finished += 1
                progressed = True
                continue
            req = waiting[txn]
            if req is not None:
                # a cancelled request is observed via txn_status above
                if req.status == ADMITTED:
                    waiting[txn] = None
                    pending_sizes.append(req.pending_after)
                    progressed = True
                continue
            script = script_of[txn]
            if cursor[txn] < len(script.ops):
                op, args = script.ops[cursor[txn]]
                cursor[txn] += 1
                stats.invocations += 1
                req = engine.invoke(txn, "obj", op, args)
                if req.status == ADMITTED:
                    pending_sizes.append(req.pending_after)
                else:
                    stats.delays += 1
                    if req.status == DELAYED:
                        waiting[txn] = req
                progressed = True
                continue
            # script exhausted: commit or voluntary abort
            if script.final == "abort":
                engine.abort(txn)
                stats.voluntary_aborts += 1
            else:
                engine.commit(txn)
                stats.completed_txns += 1
            active.remove(txn)
            finished += 1
            progressed = True
        if not progressed:
            raise RuntimeError("simulation stalled with transactions waiting")

    if pending_sizes:
        stats.mean_pending = sum(pending_sizes) / len(pending_sizes)
    if config.txn_count <= 6:
        order = engine.check_serializable()
        if order is None:
            raise RuntimeError(
                f"history failed the serializability oracle (seed {config.seed})")
    return stats, engine.history, engine


def run_paired(config: SimConfig, adt: Optional[AdtDefinition] = None):
    """Run the commutativity mode and its compatibility baseline on one
    seed; the commutativity stats carry the delay-rate ratio."""
    adt = adt or build_adt(config.adt)
    commut_cfg = SimConfig(config.adt, "commutativity", config.txn_count,
                           config.ops_per_txn, config.abort_probability,
                           config.seed, config.mix, config.window)
    compat_cfg = SimConfig(config.adt, "compatibility", config.txn_count,
                           config.ops_per_txn, config.abort_probability,
                           config.seed, config.mix, config.window)
    commut, _, _ = run_sim(commut_cfg, adt)
    compat, _, _ = run_sim(compat_cfg, adt)
    if compat.delay_rate > 0:
        commut.conflict_ratio = commut.delay_rate / compat.delay_rate
    return commut, compat


# ---------------------------------------------------------------------------
# convergence trace


@dataclass
class TraceStep:
    member: str
    state_repr: str
    regions: list
    remaining_applicable: bool


@dataclass
class TraceReport:
    start_repr: str
    steps: list
    final_repr: str
    final_in_common_codomain: bool

    @property
    def ok(self) -> bool:
        return (self.final_in_common_codomain
                and all(s.remaining_applicable for s in self.steps))


def run_convergence_trace(adt: AdtDefinition, bag: FunctionBag, x,
                          seed: int = 0) -> TraceReport:
    """Run the bag members as concurrent single-operation transactions
    from a common-domain state and watch convergence live: after every
    admission each not-yet-applied member must still be applicable, and
    the final state must land in the bag's common codomain."""
    for i in range(len(bag)):
        for j in range(i + 1, len(bag)):
            verdict, _ = pair_semantic(bag[i], bag[j])
            if verdict != COMMUTE:
                raise UsageError(
                    f"bag members {bag[i].name} and {bag[j].name} do not commute")
    if x not in bag.common_domain:
        raise UsageError(f"{x!r} is not in the bag's common domain")

    order = list(range(len(bag)))
    random.Random(seed).shuffle(order)
    engine = Engine()
    engine.register_object("obj", adt, initial=x)
    txns = [engine.begin() for _ in bag]
    shadow = x

    def region_labels(state):
        return [label for label, region in adt.regions.items() if state in region]

    steps = []
    for step_idx, k in enumerate(order):
        member = bag[k]
        req = engine.invoke(txns[k], "obj", member.op, member.params)
        if not req.admitted:
            raise RuntimeError(f"commuting member {member.name} was delayed")
        shadow = member.transition(shadow)
        rest = [bag[j] for j in order[step_idx + 1:]]
        applicable = all(shadow in f.domain for f in rest)
        steps.append(TraceStep(member.name, adt.format_state(shadow),
                               region_labels(shadow), applicable))
    for t in txns:
        engine.commit(t)
    final_ok = shadow in bag.common_codomain
    return TraceReport(adt.format_state(x), steps, adt.format_state(shadow),
                       final_ok)
