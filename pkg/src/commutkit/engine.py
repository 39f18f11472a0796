"""Strict transaction scheduler over catalog ADT instances.

Operations are admitted when they commute (at the object's base state)
with every other transaction's pending operations on the same sub-object
granule; otherwise the request is delayed until the holders commit or
abort. Admitted operations apply in place with a captured undo record.
Abort applies the transaction's captured inverses in reverse order of
its own application sequence, with no conflict test against anyone
else's pending work: each inverse application is only atomic. Commit
releases the transaction's pending entries and advances base states
where granules quiesce.

Admission detail: the precomputed conflict matrix is the fast path.
A pair verdict of commute admits outright when the base state lies in
the candidate's domain; any structural or declared-rule mark delays;
state-conditional cells fall back to a direct bag check at the base
state (all orders compose, final states agree, views match their solo
values). The base state always lies inside every pending member's
domain, so the fast path stays sound across aborts.

Every public engine event runs inside one engine-wide critical section;
during abort the critical section is taken per inverse application,
never across the whole undo sequence.
"""

from __future__ import annotations

import csv
import io
import itertools
import random
import threading
import zlib
from dataclasses import dataclass, field
from typing import Any, Optional

from .analyzer import ADMIT, CONDITIONAL, DELAY, ConflictMatrix, full_matrix
from .catalog import AdtDefinition
from .model import FunctionSpec, UsageError

ACTIVE = "active"
COMMITTED = "committed"
ABORTED = "aborted"

ADMITTED = "admitted"
DELAYED = "delayed"
REQUEST_ABORTED = "request-aborted"

BAG_ORDER_CAP = 5
BAG_ORDER_SAMPLE = 120

# matrices and bag-check results are pure functions of the ADT model, so
# they are shared across engines (one simulation sweep builds thousands)
_MATRIX_CACHE: dict = {}
_BAG_MEMO: dict = {}


@dataclass
class OperationRecord:
    seq: int
    txn: int
    obj: str
    subkey: Any
    op: str
    args: tuple
    spec: FunctionSpec
    view: Any
    captured: Any  # pre-state captured at application time


@dataclass
class Event:
    seq: int
    kind: str  # begin | invoke | commit | abort
    txn: int
    obj: str = ""
    subkey: Any = None
    function: str = ""
    view: Any = None
    op: str = ""
    args: tuple = ()


class History:
    """Append-only event log; sequence numbers strictly increase."""

    def __init__(self):
        self.events: list[Event] = []

    def append(self, event: Event):
        if self.events and event.seq <= self.events[-1].seq:
            raise UsageError("history sequence numbers must increase")
        self.events.append(event)

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def committed_txns(self) -> list[int]:
        return [e.txn for e in self.events if e.kind == "commit"]

    def aborted_txns(self) -> list[int]:
        return [e.txn for e in self.events if e.kind == "abort"]

    def invokes(self, txn: Optional[int] = None) -> list[Event]:
        return [e for e in self.events
                if e.kind == "invoke" and (txn is None or e.txn == txn)]

    def is_complete(self) -> bool:
        begun = {e.txn for e in self.events if e.kind == "begin"}
        done = set(self.committed_txns()) | set(self.aborted_txns())
        return begun <= done

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seq", "event", "txn", "object", "subkey", "function", "view"])
        for e in self.events:
            w.writerow([
                e.seq, e.kind, e.txn, e.obj,
                "" if e.subkey is None else str(e.subkey),
                e.function, "" if e.view is None else str(e.view),
            ])
        return buf.getvalue()


@dataclass
class PendingOp:
    txn: int
    spec: FunctionSpec
    op: str
    seq: int
    record: OperationRecord


class ObjectRuntime:
    """Mutable state of one (object, sub-object key) granule."""

    def __init__(self, initial):
        self.base = initial      # state as of the last pending-free instant
        self.current = initial
        self.pending: list[PendingOp] = []

    def pending_of(self, txn: int) -> list[PendingOp]:
        return [p for p in self.pending if p.txn == txn]


@dataclass(eq=False)
class Request:
    """Outcome handle for one invoke; delayed requests are updated in
    place when the engine wakes or cancels them."""

    txn: int
    obj: str
    op: str
    args: tuple
    status: str = DELAYED
    view: Any = None
    blockers: frozenset = frozenset()
    enqueue_seq: int = 0
    pending_after: int = 0  # granule pending-bag size right after admission

    @property
    def admitted(self) -> bool:
        return self.status == ADMITTED


@dataclass
class _ObjectInfo:
    adt: AdtDefinition
    initial: Any
    matrix: ConflictMatrix
    runtimes: dict = field(default_factory=dict)  # key -> ObjectRuntime


@dataclass
class _TxnState:
    txn: int
    status: str = ACTIVE
    records: list = field(default_factory=list)
    waiting: Optional[Request] = None


def _locate(adt: AdtDefinition, op: str, args: tuple):
    """Map an operation to its granule: (key, granule adt, op, args)."""
    if adt.decomposition is not None:
        d = adt.decomposition
        return d.key_of(op, args), d.granule, op, d.granule_args(op, args)
    return None, adt, op, args


class Engine:
    """Deterministic strict scheduler; safe for concurrent client flows."""

    def __init__(self, relation: str = "commutativity", instrumented: bool = False):
        if relation not in ("commutativity", "compatibility"):
            raise UsageError(f"unknown relation mode {relation!r}")
        self.relation = relation
        self.instrumented = instrumented
        self.history = History()
        self.wait_edges_created = 0
        self.delayed_invokes = 0
        self._objects: dict[str, _ObjectInfo] = {}
        self._txns: dict[int, _TxnState] = {}
        self._next_txn = 0
        self._next_seq = 0
        self._queue: list[Request] = []
        self._lock = threading.RLock()

    # -- registration -------------------------------------------------------

    def register_object(self, name: str, adt: AdtDefinition, initial=None):
        with self._lock:
            if name in self._objects:
                raise UsageError(f"object {name!r} already registered")
            if initial is None:
                initial = adt.initial_state
            model = adt.decomposition.granule if adt.decomposition else adt
            if id(model) not in _MATRIX_CACHE:
                _MATRIX_CACHE[id(model)] = (model, full_matrix(model))
            matrix = _MATRIX_CACHE[id(model)][1]
            self._objects[name] = _ObjectInfo(adt, initial, matrix)

    def _runtime(self, name: str, key) -> ObjectRuntime:
        info = self._objects[name]
        if key not in info.runtimes:
            if info.adt.decomposition is not None:
                initial = info.adt.decomposition.project(info.initial, key)
            else:
                initial = info.initial
            info.runtimes[key] = ObjectRuntime(initial)
        return info.runtimes[key]

    def final_states(self) -> dict:
        """Current state of every materialized granule."""
        with self._lock:
            return {(name, key): rt.current
                    for name, info in self._objects.items()
                    for key, rt in info.runtimes.items()}

    # -- transaction lifecycle ----------------------------------------------

    def begin(self) -> int:
        with self._lock:
            self._next_txn += 1
            txn = self._next_txn
            self._txns[txn] = _TxnState(txn)
            self._append_event("begin", txn)
            return txn

    def txn_status(self, txn: int) -> str:
        return self._txns[txn].status

    def _require_active(self, txn: int) -> _TxnState:
        state = self._txns.get(txn)
        if state is None:
            raise UsageError(f"unknown transaction {txn}")
        if state.status != ACTIVE:
            raise UsageError(f"transaction {txn} is {state.status}")
        return state

    def _append_event(self, kind: str, txn: int, **kw):
        self._next_seq += 1
        self.history.append(Event(self._next_seq, kind, txn, **kw))
        return self._next_seq

    # -- admission ----------------------------------------------------------

    def _bag_check(self, groups: list[list[FunctionSpec]], base) -> bool:
        """Direct check at the base state. Each group is one transaction's
        pending sequence (own order fixed, candidate appended to its own
        group); groups must compose in every group order, agree on the
        final state, and give every operation the same view in every
        group order."""
        # spec names are unique within one state space, and the space is
        # pinned by the matrix cache for as long as results may be reused
        space = groups[0][0].space
        signature = tuple(sorted(tuple(f.name for f in g) for g in groups))
        key = (id(space), signature, base)
        hit = _BAG_MEMO.get(key)
        if hit is not None:
            return hit
        ok = self._bag_check_uncached(groups, base, signature)
        _BAG_MEMO[key] = ok
        return ok

    def _bag_check_uncached(self, groups, base, signature) -> bool:
        n = len(groups)
        if n <= BAG_ORDER_CAP:
            orders = itertools.permutations(range(n))
        else:
            rng = random.Random(zlib.crc32(repr((signature, base)).encode()))
            base_order = list(range(n))
            orders = []
            for _ in range(BAG_ORDER_SAMPLE):
                rng.shuffle(base_order)
                orders.append(tuple(base_order))
        final = None
        views_ref = None
        for order in orders:
            state = base
            views = {}
            for gi in order:
                for k, f in enumerate(groups[gi]):
                    if state not in f.domain:
                        return False
                    post = f.transition(state)
                    views[(gi, k)] = f.view(state, post)
                    state = post
            if final is None:
                final, views_ref = state, views
            elif state != final or views != views_ref:
                return False
        return True

    def _admission(self, rt: ObjectRuntime, matrix: ConflictMatrix,
                   spec: FunctionSpec, txn: int) -> tuple[bool, frozenset]:
        """Commutativity admission on one granule. A transaction's own
        pending operations never conflict with its own candidate; they
        enter the direct check as one fixed-order sequence."""
        others = [p for p in rt.pending if p.txn != txn]
        if not others:
            return True, frozenset()
        classes = [matrix.instance_class(spec, p.spec) for p in others]
        blockers = frozenset(p.txn for p, c in zip(others, classes) if c != ADMIT)
        if any(c == DELAY for c in classes):
            return False, blockers
        own = [p.spec for p in rt.pending if p.txn == txn]
        if all(c == ADMIT for c in classes) and not own and rt.base in spec.domain:
            return True, frozenset()
        groups: dict = {}
        for p in rt.pending:
            groups.setdefault(p.txn, []).append(p.spec)
        groups.setdefault(txn, []).append(spec)
        if self._bag_check(list(groups.values()), rt.base):
            return True, frozenset()
        return False, blockers or frozenset(p.txn for p in others)

    def _admission_compat(self, info: _ObjectInfo, op: str,
                          txn: int) -> tuple[bool, frozenset]:
        """Classic read/write compatibility at whole-object granularity."""
        readers = info.adt.readers
        blockers = set()
        for rt in info.runtimes.values():
            for p in rt.pending:
                if p.txn == txn:
                    continue
                if op in readers and p.op in readers:
                    continue
                blockers.add(p.txn)
        return (not blockers), frozenset(blockers)

    # -- invoke -------------------------------------------------------------

    def invoke(self, txn: int, obj: str, op: str, args: tuple = ()) -> Request:
        with self._lock:
            state = self._require_active(txn)
            if state.waiting is not None:
                raise UsageError(
                    f"transaction {txn} already has a delayed request")
            if obj not in self._objects:
                raise UsageError(f"unknown object {obj!r}")
            info = self._objects[obj]
            if op not in info.adt.op_names:
                raise UsageError(f"{info.adt.name} has no operation {op!r}")
            args = tuple(args)
            request = Request(txn, obj, op, args)
            admitted = self._try_admit(request)
            if admitted:
                return request
            self.delayed_invokes += 1
            self._next_seq += 1
            request.enqueue_seq = self._next_seq
            request.status = DELAYED
            state.waiting = request
            self._queue.append(request)
            self.wait_edges_created += len(request.blockers)
            self.resolve_deadlock()
            return request

    def _try_admit(self, request: Request) -> bool:
        info = self._objects[request.obj]
        key, gadt, gop, gargs = _locate(info.adt, request.op, request.args)
        rt = self._runtime(request.obj, key)
        spec = gadt.resolve(gop, gargs, rt.current)
        if self.relation == "compatibility":
            ok, blockers = self._admission_compat(info, request.op, request.txn)
        else:
            ok, blockers = self._admission(rt, info.matrix, spec, request.txn)
        if not ok:
            request.blockers = blockers
            return False
        post, view, captured = spec.apply(rt.current)
        rt.current = post
        seq = self._append_event(
            "invoke", request.txn, obj=request.obj, subkey=key,
            function=spec.name, view=view, op=request.op, args=request.args)
        record = OperationRecord(seq, request.txn, request.obj, key,
                                 request.op, request.args, spec, view, captured)
        rt.pending.append(PendingOp(request.txn, spec, request.op, seq, record))
        self._txns[request.txn].records.append(record)
        request.status = ADMITTED
        request.view = view
        request.blockers = frozenset()
        request.pending_after = len(rt.pending)
        if self.instrumented:
            self._check_invariants()
        return True

    # -- commit / abort -----------------------------------------------------

    def commit(self, txn: int):
        with self._lock:
            state = self._require_active(txn)
            if state.waiting is not None:
                raise UsageError(f"transaction {txn} has a delayed request")
            for (name, key) in self._touched(state):
                rt = self._runtime(name, key)
                rt.pending = [p for p in rt.pending if p.txn != txn]
                if not rt.pending:
                    rt.base = rt.current
            state.status = COMMITTED
            self._append_event("commit", txn)
            if self.instrumented:
                self._check_invariants()
            self._wake_scan()

    def abort(self, txn: int):
        with self._lock:
            state = self._require_active(txn)
            state.status = ABORTED
            if state.waiting is not None:
                state.waiting.status = REQUEST_ABORTED
                if state.waiting in self._queue:
                    self._queue.remove(state.waiting)
                state.waiting = None
            records = list(reversed(state.records))
        # each inverse application takes the critical section by itself;
        # no conflict test is run against anyone's pending operations
        for rec in records:
            with self._lock:
                rt = self._runtime(rec.obj, rec.subkey)
                rt.current = rec.spec.undo(rt.current, rec.captured)
                rt.pending = [p for p in rt.pending if p.record is not rec]
                if not rt.pending:
                    rt.base = rt.current
        with self._lock:
            self._append_event("abort", txn)
            if self.instrumented:
                self._check_invariants()
            self._wake_scan()

    def _touched(self, state: _TxnState) -> list:
        seen = []
        for rec in state.records:
            pair = (rec.obj, rec.subkey)
            if pair not in seen:
                seen.append(pair)
        return seen

    # -- waiting and deadlock -----------------------------------------------

    def _wake_scan(self):
        for request in list(self._queue):
            if request.status != DELAYED:
                self._queue.remove(request)
                continue
            if self._try_admit(request):
                self._queue.remove(request)
                self._txns[request.txn].waiting = None
            else:
                self.wait_edges_created += len(request.blockers)
        self.resolve_deadlock()

    def resolve_deadlock(self) -> Optional[int]:
        """Abort the youngest transaction on a wait-for cycle, if any."""
        graph = {r.txn: set(r.blockers) for r in self._queue
                 if r.status == DELAYED}
        cycle = self._find_cycle(graph)
        if not cycle:
            return None
        victim = max(cycle)
        self.abort(victim)
        return victim

    @staticmethod
    def _find_cycle(graph: dict) -> Optional[set]:
        for start in sorted(graph):
            path: list = []
            seen: set = set()

            def visit(node) -> Optional[set]:
                if node in path:
                    return set(path[path.index(node):])
                if node in seen or node not in graph:
                    return None
                seen.add(node)
                path.append(node)
                for nxt in sorted(graph[node]):
                    found = visit(nxt)
                    if found:
                        return found
                path.pop()
                return None

            found = visit(start)
            if found:
                return found
        return None

    # -- instrumented invariants ---------------------------------------------

    def _check_invariants(self):
        for name, info in self._objects.items():
            for key, rt in info.runtimes.items():
                if not rt.pending:
                    assert rt.base == rt.current, (name, key)
                    continue
                state = rt.base
                for p in sorted(rt.pending, key=lambda p: p.seq):
                    assert state in p.spec.domain, (name, key, p.spec.name)
                    post = p.spec.transition(state)
                    # a pending view stays derivable at its replay position
                    assert p.spec.view(state, post) == p.record.view, (
                        name, key, p.spec.name)
                    state = post
                assert state == rt.current, (name, key)
                if self.relation != "commutativity":
                    continue
                # strictness at transaction-group granularity: the pending
                # groups of different transactions commute at the base state
                groups: dict = {}
                for p in sorted(rt.pending, key=lambda p: p.seq):
                    groups.setdefault(p.txn, []).append(p.spec)
                if len(groups) > 1:
                    assert self._bag_check(list(groups.values()), rt.base), (
                        name, key, [f.name for g in groups.values() for f in g])

    # -- serializability ------------------------------------------------------

    def check_serializable(self, max_committed: int = 6):
        objects = {name: (info.adt, info.initial)
                   for name, info in self._objects.items()}
        return check_serializable(self.history, objects, self.final_states(),
                                  max_committed=max_committed)


def check_serializable(history: History, objects: dict, final_states: dict,
                       max_committed: int = 6):
    """Search for a serial order of the committed transactions whose
    replay reproduces every recorded view and every final state; aborted
    transactions' effects must be absent entirely. Returns the first
    matching order (ascending-id enumeration) or None.
    """
    if not history.is_complete():
        raise UsageError("history is incomplete: transactions still active")
    committed = sorted(history.committed_txns())
    if len(committed) > max_committed:
        raise UsageError(
            f"serializability oracle is desk-scale: {len(committed)} committed "
            f"transactions exceed the cap of {max_committed}")
    ops = {txn: history.invokes(txn) for txn in committed}

    def granule_initial(obj, key):
        adt, initial = objects[obj]
        if adt.decomposition is not None:
            return adt.decomposition.project(initial, key)
        return initial

    for order in itertools.permutations(committed):
        states: dict = {}
        ok = True
        for txn in order:
            for e in ops[txn]:
                adt, initial = objects[e.obj]
                key, gadt, gop, gargs = _locate(adt, e.op, e.args)
                site = (e.obj, key)
                if site not in states:
                    states[site] = granule_initial(e.obj, key)
                spec = gadt.resolve(gop, gargs, states[site])
                post, view, _ = spec.apply(states[site])
                if view != e.view:
                    ok = False
                    break
                states[site] = post
            if not ok:
                break
        if not ok:
            continue
        sites = set(states) | set(final_states)
        for site in sites:
            replayed = states.get(site, granule_initial(*site))
            concurrent = final_states.get(site, granule_initial(*site))
            if replayed != concurrent:
                ok = False
                break
        if ok:
            return list(order)
    return None
