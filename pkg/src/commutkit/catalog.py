"""Executable desk-scale definitions of the example abstract data types.

Each builder returns an AdtDefinition: an enumerated state space, named
regions, the function inventory (one FunctionSpec per operation/outcome
case), a deterministic operation resolver, and, for independently
decomposable types (directory entries, tuple fields), a per-key granule
model the transaction engine schedules against.

Conventions shared by all catalogs: acknowledgement-style operations
(PUSH, CLEAR, INSERT, DELETE, WRITE, ADD) return a constant view equal
to their outcome qualifier; read-style operations return the observed
value; an operation refused at a bound (counter ADD outside the
interval, PUSH/ENQ on a full instance) is an identity with a "refused"
view rather than an error, so every operation resolves on every state.
"""

from __future__ import annotations

import itertools
import random
import string
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional

from .model import FunctionSpec, StateRegion, StateSpace, UsageError

State = Any


@dataclass
class Decomposition:
    """Independent sub-object structure of a decomposable type."""

    keys: tuple
    key_of: Callable[[str, tuple], Any]        # (op, args) -> sub-object key
    granule: "AdtDefinition"                   # shared per-key model
    granule_args: Callable[[str, tuple], tuple]  # strip the key from args
    project: Callable[[State, Any], State]     # whole state -> key coordinate


@dataclass
class AdtDefinition:
    name: str
    space: Optional[StateSpace]
    regions: dict
    inventory: list
    initial_state: State
    op_names: tuple
    readers: frozenset
    params: dict = field(default_factory=dict)
    decomposition: Optional[Decomposition] = None
    aux_functions: list = field(default_factory=list)
    conflict_rule: Optional[Callable[[FunctionSpec, FunctionSpec], Optional[str]]] = None
    _resolver: Callable[[str, tuple, State], FunctionSpec] = None
    _draw_args: Callable[[str, random.Random], tuple] = None
    format_state: Callable[[State], str] = repr

    def resolve(self, op: str, args: tuple, state: State) -> FunctionSpec:
        """Pick the unique applicable function for (op, args) at state."""
        if op not in self.op_names:
            raise UsageError(f"{self.name} has no operation {op!r}")
        spec = self._resolver(op, tuple(args), state)
        assert state in spec.domain, (op, args, state, spec.fid)
        return spec

    def draw_args(self, op: str, rng: random.Random) -> tuple:
        return self._draw_args(op, rng) if self._draw_args else ()

    def functions_by_id(self) -> dict:
        out: dict = {}
        for f in self.inventory:
            out.setdefault(f.fid, []).append(f)
        return out

    @property
    def key_params(self) -> str:
        return ",".join(f"{k}={v}" for k, v in self.params.items())


def _letters(n: int) -> list[str]:
    if n <= 26:
        return list(string.ascii_lowercase[:n])
    return [f"i{k}" for k in range(n)]


# ---------------------------------------------------------------------------
# STACK


def build_stack(max_depth: int = 3, alphabet_size: int = 2) -> AdtDefinition:
    """Bounded stack of at most ``max_depth`` items over a small alphabet.

    Four operations split into nine functions over the regions S0 (the
    empty stack) and S+ (non-empty stacks): EMPTY/yes, EMPTY/no,
    CLEAR/yes, CLEAR/already, POP/empty, POP/last, POP/yes, PUSH/first
    and PUSH/yes. PUSH on a full stack resolves to the auxiliary
    identity PUSH/refused, which is not part of the analysis inventory.
    """
    if max_depth < 2:
        raise UsageError("max_depth must be >= 2 (interior states are needed)")
    if alphabet_size < 2:
        raise UsageError("alphabet_size must be >= 2")
    items = _letters(alphabet_size)
    states = [()]
    for n in range(1, max_depth + 1):
        states.extend(itertools.product(items, repeat=n))
    space = StateSpace(f"stack(depth<={max_depth},alpha={alphabet_size})", states)

    s0 = space.region("S0", [()])
    splus = space.region_where("S+", lambda s: len(s) > 0)

    def length_region(label, lo, hi):
        return space.region_where(label, lambda s: lo <= len(s) <= hi)

    def ack(value):
        return lambda pre, post: value

    ident = lambda s: s
    undo_ident = lambda cur, pre: cur
    pop = lambda s: s[:-1]
    push_back_top = lambda cur, pre: cur + (pre[-1],)
    drop_top = lambda cur, pre: cur[:-1]

    e_y = FunctionSpec("EMPTY/yes", s0, s0, ident, ack("yes"), undo_ident,
                       op="EMPTY", declared_domain=s0, declared_codomain=s0)
    e_n = FunctionSpec("EMPTY/no", splus, splus, ident, ack("no"), undo_ident,
                       op="EMPTY", declared_domain=splus, declared_codomain=splus)
    c_y = FunctionSpec("CLEAR/yes", splus, s0, lambda s: (), ack("yes"),
                       lambda cur, pre: pre, op="CLEAR",
                       declared_domain=splus, declared_codomain=s0)
    c_a = FunctionSpec("CLEAR/already", s0, s0, ident, ack("already"), undo_ident,
                       op="CLEAR", declared_domain=s0, declared_codomain=s0)
    p_e = FunctionSpec("POP/empty", s0, s0, ident, ack("empty"), undo_ident,
                       op="POP", declared_domain=s0, declared_codomain=s0)
    p_l = FunctionSpec("POP/last", length_region("L1", 1, 1), s0, pop,
                       lambda pre, post: pre[-1], push_back_top, op="POP",
                       declared_domain=splus, declared_codomain=s0)
    p_y = FunctionSpec("POP/yes", length_region("L2+", 2, max_depth),
                       length_region("L1..D-1", 1, max_depth - 1), pop,
                       lambda pre, post: pre[-1], push_back_top, op="POP",
                       declared_domain=splus, declared_codomain=splus)

    inventory = [e_y, e_n, c_y, c_a, p_e, p_l, p_y]
    push_first = {}
    push_yes = {}
    for m in items:
        push = (lambda m: lambda s: s + (m,))(m)
        push_first[m] = FunctionSpec(
            "PUSH/first", s0, space.region(f"{{({m})}}", [(m,)]), push,
            ack("first"), drop_top, op="PUSH", params=(m,),
            declared_domain=s0, declared_codomain=splus)
        # enumeration domain shrunk so the successor stays inside the bound
        push_yes[m] = FunctionSpec(
            "PUSH/yes", length_region("L1..D-1", 1, max_depth - 1),
            space.region_where(f"img(PUSH/yes({m}))",
                               lambda s, m=m: 2 <= len(s) <= max_depth and s[-1] == m),
            push, ack("yes"), drop_top, op="PUSH", params=(m,),
            declared_domain=splus, declared_codomain=splus)
    inventory.extend(push_first.values())
    inventory.extend(push_yes.values())

    full = length_region("Lmax", max_depth, max_depth)
    push_refused = FunctionSpec("PUSH/refused", full, full, ident,
                                ack("refused"), undo_ident, op="PUSH",
                                declared_domain=splus, declared_codomain=splus)

    def resolver(op, args, state):
        if op == "EMPTY":
            return e_y if not state else e_n
        if op == "CLEAR":
            return c_a if not state else c_y
        if op == "POP":
            if not state:
                return p_e
            return p_l if len(state) == 1 else p_y
        # PUSH
        (m,) = args
        if m not in items:
            raise UsageError(f"unknown stack item {m!r}")
        if not state:
            return push_first[m]
        if len(state) < max_depth:
            return push_yes[m]
        return push_refused

    def draw(op, rng):
        return (rng.choice(items),) if op == "PUSH" else ()

    return AdtDefinition(
        name="stack", space=space, regions={"S0": s0, "S+": splus},
        inventory=inventory, initial_state=(),
        op_names=("EMPTY", "CLEAR", "POP", "PUSH"),
        readers=frozenset({"EMPTY"}),
        params={"depth": max_depth, "alpha": alphabet_size},
        aux_functions=[push_refused],
        _resolver=resolver, _draw_args=draw,
        format_state=lambda s: "[" + ",".join(s) + "]",
    )


# ---------------------------------------------------------------------------
# SET / DIRECTORY


def _presence_granule() -> AdtDefinition:
    """One directory entry: a boolean coordinate with its own functions."""
    space = StateSpace("entry", [False, True])
    absent = space.region("absent", [False])
    present = space.region("present", [True])
    ident = lambda s: s
    undo_ident = lambda cur, pre: cur

    def ack(value):
        return lambda pre, post: value

    inv = [
        FunctionSpec("INSERT/new", absent, present, lambda s: True, ack("new"),
                     lambda cur, pre: False, op="INSERT"),
        FunctionSpec("INSERT/already", present, present, ident, ack("already"),
                     undo_ident, op="INSERT"),
        FunctionSpec("DELETE/present", present, absent, lambda s: False,
                     ack("present"), lambda cur, pre: True, op="DELETE"),
        FunctionSpec("DELETE/absent", absent, absent, ident, ack("absent"),
                     undo_ident, op="DELETE"),
        FunctionSpec("MEMBER/yes", present, present, ident, ack("yes"),
                     undo_ident, op="MEMBER"),
        FunctionSpec("MEMBER/no", absent, absent, ident, ack("no"),
                     undo_ident, op="MEMBER"),
    ]
    by = {f.fid: f for f in inv}

    def resolver(op, args, state):
        if op == "INSERT":
            return by["INSERT/new"] if not state else by["INSERT/already"]
        if op == "DELETE":
            return by["DELETE/present"] if state else by["DELETE/absent"]
        return by["MEMBER/yes"] if state else by["MEMBER/no"]

    return AdtDefinition(
        name="entry", space=space,
        regions={"absent": absent, "present": present},
        inventory=inv, initial_state=False,
        op_names=("INSERT", "DELETE", "MEMBER"),
        readers=frozenset({"MEMBER"}),
        _resolver=resolver,
        format_state=lambda s: "present" if s else "absent",
    )


def build_set(item_count: int = 3) -> AdtDefinition:
    """Directory of named entries; operations on distinct entries are
    independent by construction (the sub-object key is the entry name).

    The whole-object enumerated model (all subsets) is built only for
    small universes; larger directories are usable by the engine and
    simulator through the per-entry granule model alone.
    """
    if item_count < 2:
        raise UsageError("need at least 2 items")
    items = _letters(item_count)
    granule = _presence_granule()
    decomposition = Decomposition(
        keys=tuple(items),
        key_of=lambda op, args: args[0],
        granule=granule,
        granule_args=lambda op, args: (),
        project=lambda s, key: key in s,
    )

    space = None
    regions: dict = {}
    inventory: list = []
    resolver = None
    if item_count <= 4:
        subsets = [frozenset(c) for n in range(item_count + 1)
                   for c in itertools.combinations(items, n)]
        space = StateSpace(f"set({item_count} items)", subsets)
        by_id: dict = {}
        for x in items:
            has = space.region_where(f"{{{x} in S}}", lambda s, x=x: x in s)
            lacks = space.region_where(f"{{{x} not in S}}", lambda s, x=x: x not in s)
            regions[f"{x} in S"] = has
            regions[f"{x} not in S"] = lacks
            ident = lambda s: s
            undo_ident = lambda cur, pre: cur

            def ack(value):
                return lambda pre, post: value

            add = (lambda x: lambda s: s | {x})(x)
            rem = (lambda x: lambda s: s - {x})(x)
            specs = [
                FunctionSpec(f"INSERT({x})/new", lacks, has, add, ack("new"),
                             (lambda x: lambda cur, pre: cur - {x})(x),
                             op="INSERT", params=(x,), subkey=x),
                FunctionSpec(f"INSERT({x})/already", has, has, ident,
                             ack("already"), undo_ident, op="INSERT", params=(x,), subkey=x),
                FunctionSpec(f"DELETE({x})/present", has, lacks, rem,
                             ack("present"),
                             (lambda x: lambda cur, pre: cur | {x})(x),
                             op="DELETE", params=(x,), subkey=x),
                FunctionSpec(f"DELETE({x})/absent", lacks, lacks, ident,
                             ack("absent"), undo_ident, op="DELETE", params=(x,), subkey=x),
                FunctionSpec(f"MEMBER({x})/yes", has, has, ident, ack("yes"),
                             undo_ident, op="MEMBER", params=(x,), subkey=x),
                FunctionSpec(f"MEMBER({x})/no", lacks, lacks, ident, ack("no"),
                             undo_ident, op="MEMBER", params=(x,), subkey=x),
            ]
            inventory.extend(specs)
            for sp in specs:
                by_id[sp.fid] = sp

        def resolver(op, args, state):
            (x,) = args
            if x not in items:
                raise UsageError(f"unknown item {x!r}")
            if op == "INSERT":
                case = "already" if x in state else "new"
            elif op == "DELETE":
                case = "present" if x in state else "absent"
            else:
                case = "yes" if x in state else "no"
            return by_id[f"{op}({x})/{case}"]

    def draw(op, rng):
        return (rng.choice(items),)

    return AdtDefinition(
        name="directory", space=space, regions=regions, inventory=inventory,
        initial_state=frozenset(),
        op_names=("INSERT", "DELETE", "MEMBER"),
        readers=frozenset({"MEMBER"}),
        params={"items": item_count},
        decomposition=decomposition,
        _resolver=resolver, _draw_args=draw,
        format_state=lambda s: "{" + ",".join(sorted(s)) + "}",
    )


# ---------------------------------------------------------------------------
# COUNTER


DEFAULT_MENU = (1, 3, 5, -2, -4)


def build_counter(lo: int = 0, hi: int = 20,
                  menu: tuple = DEFAULT_MENU) -> AdtDefinition:
    """Escrow-style counter on [lo, hi] with a fixed menu of increments.

    ADD(n) inside the interval is ADD(n)/ok (inverse: subtract n); at
    the bound it is the identity ADD(n)/bound with a "refused" view.
    Every function's declared signature is the whole interval, so no
    counter pair is ruled out structurally; verdicts are state-level.
    """
    if hi - lo < 10:
        raise UsageError("degenerate interval: need hi - lo >= 10")
    if any(n == 0 for n in menu):
        raise UsageError("menu increments must be non-zero")
    space = StateSpace(f"counter[{lo},{hi}]", range(lo, hi + 1))
    whole = space.region("R", space.states)
    ident = lambda s: s
    undo_ident = lambda cur, pre: cur

    by_id: dict = {}
    inventory = []
    read = FunctionSpec("READ", whole, whole, ident, lambda pre, post: post,
                        undo_ident, op="READ",
                        declared_domain=whole, declared_codomain=whole)
    inventory.append(read)
    for n in menu:
        ok_dom = space.region_where(f"{{v: v+{n} in range}}",
                                    lambda v, n=n: lo <= v + n <= hi)
        ok_img = space.region_where(f"img(ADD({n}))",
                                    lambda v, n=n: lo <= v - n <= hi)
        ok = FunctionSpec(f"ADD({n})/ok", ok_dom, ok_img,
                          (lambda n: lambda v: v + n)(n),
                          lambda pre, post: "ok",
                          (lambda n: lambda cur, pre: cur - n)(n),
                          op="ADD", params=(n,),
                          declared_domain=whole, declared_codomain=whole)
        bound_dom = space.region_where(f"{{v: v+{n} out of range}}",
                                       lambda v, n=n: not (lo <= v + n <= hi))
        bound = FunctionSpec(f"ADD({n})/bound", bound_dom, bound_dom, ident,
                             lambda pre, post: "refused", undo_ident,
                             op="ADD", params=(n,), declared_domain=whole,
                             declared_codomain=whole)
        inventory.extend([ok, bound])
        by_id[(n, "ok")] = ok
        by_id[(n, "bound")] = bound

    def resolver(op, args, state):
        if op == "READ":
            return read
        (n,) = args
        if n not in menu:
            raise UsageError(f"increment {n!r} not in the menu {menu}")
        return by_id[(n, "ok" if lo <= state + n <= hi else "bound")]

    def draw(op, rng):
        return (rng.choice(menu),) if op == "ADD" else ()

    mid = (lo + hi) // 2
    return AdtDefinition(
        name="counter", space=space, regions={"R": whole},
        inventory=inventory, initial_state=mid,
        op_names=("ADD", "READ"),
        readers=frozenset({"READ"}),
        params={"lo": lo, "hi": hi},
        _resolver=resolver, _draw_args=draw,
        format_state=str,
    )


# ---------------------------------------------------------------------------
# FIFOQUEUE


def build_fifoqueue(max_len: int = 3, alphabet_size: int = 2) -> AdtDefinition:
    """Bounded FIFO queue; the inventory mirrors the stack's nine-way
    split with first-in-first-out transition semantics (head at index 0,
    enqueue appends at the tail)."""
    if max_len < 2:
        raise UsageError("max_len must be >= 2")
    if alphabet_size < 2:
        raise UsageError("alphabet_size must be >= 2")
    items = _letters(alphabet_size)
    states = [()]
    for n in range(1, max_len + 1):
        states.extend(itertools.product(items, repeat=n))
    space = StateSpace(f"fifoqueue(len<={max_len},alpha={alphabet_size})", states)
    s0 = space.region("S0", [()])
    splus = space.region_where("S+", lambda s: len(s) > 0)

    def length_region(label, lo, hi):
        return space.region_where(label, lambda s: lo <= len(s) <= hi)

    def ack(value):
        return lambda pre, post: value

    ident = lambda s: s
    undo_ident = lambda cur, pre: cur
    deq = lambda s: s[1:]
    put_back_head = lambda cur, pre: (pre[0],) + cur
    drop_tail = lambda cur, pre: cur[:-1]

    e_y = FunctionSpec("EMPTY/yes", s0, s0, ident, ack("yes"), undo_ident,
                       op="EMPTY", declared_domain=s0, declared_codomain=s0)
    e_n = FunctionSpec("EMPTY/no", splus, splus, ident, ack("no"), undo_ident,
                       op="EMPTY", declared_domain=splus, declared_codomain=splus)
    c_y = FunctionSpec("CLEAR/yes", splus, s0, lambda s: (), ack("yes"),
                       lambda cur, pre: pre, op="CLEAR",
                       declared_domain=splus, declared_codomain=s0)
    c_a = FunctionSpec("CLEAR/already", s0, s0, ident, ack("already"),
                       undo_ident, op="CLEAR",
                       declared_domain=s0, declared_codomain=s0)
    d_e = FunctionSpec("DEQ/empty", s0, s0, ident, ack("empty"), undo_ident,
                       op="DEQ", declared_domain=s0, declared_codomain=s0)
    d_l = FunctionSpec("DEQ/last", length_region("L1", 1, 1), s0, deq,
                       lambda pre, post: pre[0], put_back_head, op="DEQ",
                       declared_domain=splus, declared_codomain=s0)
    d_y = FunctionSpec("DEQ/yes", length_region("L2+", 2, max_len),
                       length_region("L1..D-1", 1, max_len - 1), deq,
                       lambda pre, post: pre[0], put_back_head, op="DEQ",
                       declared_domain=splus, declared_codomain=splus)

    inventory = [e_y, e_n, c_y, c_a, d_e, d_l, d_y]
    enq_first = {}
    enq_yes = {}
    for m in items:
        enq = (lambda m: lambda s: s + (m,))(m)
        enq_first[m] = FunctionSpec(
            "ENQ/first", s0, space.region(f"{{({m})}}", [(m,)]), enq,
            ack("first"), drop_tail, op="ENQ", params=(m,),
            declared_domain=s0, declared_codomain=splus)
        enq_yes[m] = FunctionSpec(
            "ENQ/yes", length_region("L1..D-1", 1, max_len - 1),
            space.region_where(f"img(ENQ/yes({m}))",
                               lambda s, m=m: 2 <= len(s) <= max_len and s[-1] == m),
            enq, ack("yes"), drop_tail, op="ENQ", params=(m,),
            declared_domain=splus, declared_codomain=splus)
    inventory.extend(enq_first.values())
    inventory.extend(enq_yes.values())

    full = length_region("Lmax", max_len, max_len)
    enq_refused = FunctionSpec("ENQ/refused", full, full, ident, ack("refused"),
                               undo_ident, op="ENQ",
                               declared_domain=splus, declared_codomain=splus)

    def resolver(op, args, state):
        if op == "EMPTY":
            return e_y if not state else e_n
        if op == "CLEAR":
            return c_a if not state else c_y
        if op == "DEQ":
            if not state:
                return d_e
            return d_l if len(state) == 1 else d_y
        (m,) = args
        if m not in items:
            raise UsageError(f"unknown queue item {m!r}")
        if not state:
            return enq_first[m]
        if len(state) < max_len:
            return enq_yes[m]
        return enq_refused

    def draw(op, rng):
        return (rng.choice(items),) if op == "ENQ" else ()

    return AdtDefinition(
        name="fifoqueue", space=space, regions={"S0": s0, "S+": splus},
        inventory=inventory, initial_state=(),
        op_names=("EMPTY", "CLEAR", "DEQ", "ENQ"),
        readers=frozenset({"EMPTY"}),
        params={"maxlen": max_len, "alpha": alphabet_size},
        aux_functions=[enq_refused],
        _resolver=resolver, _draw_args=draw,
        format_state=lambda s: "<" + ",".join(s) + "<",
    )


# ---------------------------------------------------------------------------
# TUPLE


def _register_granule(values: int) -> AdtDefinition:
    """One tuple field: a small register with READ and per-value WRITE."""
    space = StateSpace(f"register({values})", range(values))
    whole = space.region("R", space.states)
    ident = lambda s: s
    undo_ident = lambda cur, pre: cur
    inv = [FunctionSpec("READ", whole, whole, ident, lambda pre, post: post,
                        undo_ident, op="READ")]
    writes = {}
    for v in range(values):
        w = FunctionSpec(f"WRITE({v})", whole, space.region(f"{{{v}}}", [v]),
                         (lambda v: lambda s: v)(v), lambda pre, post: "ok",
                         lambda cur, pre: pre, op="WRITE",
                         declared_domain=whole, declared_codomain=whole)
        writes[v] = w
        inv.append(w)

    def resolver(op, args, state):
        if op == "READ":
            return inv[0]
        (v,) = args
        if v not in writes:
            raise UsageError(f"value {v!r} outside the register range")
        return writes[v]

    def rule(fa, fb):
        # declared read/write compatibility: a write excludes everything
        if fa.op == "WRITE" or fb.op == "WRITE":
            return "rw-exclusion"
        return None

    return AdtDefinition(
        name="register", space=space, regions={"R": whole},
        inventory=inv, initial_state=0,
        op_names=("READ", "WRITE"),
        readers=frozenset({"READ"}),
        conflict_rule=rule,
        _resolver=resolver,
        format_state=str,
    )


def build_tuple(fields=3, values_per_field: int = 2) -> AdtDefinition:
    """Record of tightly coupled fields; the sub-object key is the field
    name and the per-field conflict relation is plain read/write
    compatibility (a write excludes everything on its field)."""
    if isinstance(fields, int):
        names = [f"f{k}" for k in range(fields)]
    else:
        names = list(fields)
    if not 2 <= len(names) <= 4:
        raise UsageError("need between 2 and 4 fields")
    if values_per_field < 2:
        raise UsageError("need at least 2 values per field")
    index = {f: i for i, f in enumerate(names)}
    granule = _register_granule(values_per_field)

    states = list(itertools.product(range(values_per_field), repeat=len(names)))
    space = StateSpace(f"tuple({len(names)}x{values_per_field})", states)
    whole = space.region("R", space.states)
    regions = {"R": whole}
    ident = lambda s: s
    undo_ident = lambda cur, pre: cur

    inventory = []
    by_id: dict = {}
    for f in names:
        i = index[f]
        read = FunctionSpec(f"READ({f})", whole, whole, ident,
                            (lambda i: lambda pre, post: post[i])(i),
                            undo_ident, op="READ", params=(f,), subkey=f)
        inventory.append(read)
        by_id[("READ", f)] = read
        for v in range(values_per_field):
            w = FunctionSpec(
                f"WRITE({f},{v})", whole,
                space.region_where(f"{{{f}={v}}}", lambda s, i=i, v=v: s[i] == v),
                (lambda i, v: lambda s: s[:i] + (v,) + s[i + 1:])(i, v),
                lambda pre, post: "ok",
                (lambda i: lambda cur, pre: cur[:i] + (pre[i],) + cur[i + 1:])(i),
                op="WRITE", params=(f, v), subkey=f,
                declared_domain=whole, declared_codomain=whole)
            inventory.append(w)
            by_id[("WRITE", f, v)] = w

    def resolver(op, args, state):
        if op == "READ":
            (f,) = args
            if f not in index:
                raise UsageError(f"unknown field {f!r}")
            return by_id[("READ", f)]
        f, v = args
        if f not in index:
            raise UsageError(f"unknown field {f!r}")
        if not 0 <= v < values_per_field:
            raise UsageError(f"value {v!r} outside the field range")
        return by_id[("WRITE", f, v)]

    def rule(fa, fb):
        if fa.op == "WRITE" or fb.op == "WRITE":
            return "rw-exclusion"
        return None

    def draw(op, rng):
        f = rng.choice(names)
        if op == "READ":
            return (f,)
        return (f, rng.randrange(values_per_field))

    decomposition = Decomposition(
        keys=tuple(names),
        key_of=lambda op, args: args[0],
        granule=granule,
        granule_args=lambda op, args: args[1:],
        project=lambda s, key: s[index[key]],
    )

    return AdtDefinition(
        name="tuple", space=space, regions=regions, inventory=inventory,
        initial_state=(0,) * len(names),
        op_names=("READ", "WRITE"),
        readers=frozenset({"READ"}),
        params={"fields": len(names), "values": values_per_field},
        decomposition=decomposition,
        conflict_rule=rule,
        _resolver=resolver, _draw_args=draw,
        format_state=lambda s: "(" + ",".join(str(v) for v in s) + ")",
    )


# ---------------------------------------------------------------------------
# registry and CLI-style lookup


_BUILDERS = {
    "stack": (build_stack, {"depth": "max_depth", "alpha": "alphabet_size"}),
    "fifoqueue": (build_fifoqueue, {"maxlen": "max_len", "alpha": "alphabet_size"}),
    "queue": (build_fifoqueue, {"maxlen": "max_len", "alpha": "alphabet_size"}),
    "directory": (build_set, {"items": "item_count"}),
    "set": (build_set, {"items": "item_count"}),
    "counter": (build_counter, {"lo": "lo", "hi": "hi"}),
    "tuple": (build_tuple, {"fields": "fields", "values": "values_per_field"}),
}

CATALOG_NAMES = ("stack", "directory", "counter", "fifoqueue", "tuple")


def build_adt(key: str) -> AdtDefinition:
    """Build a catalog ADT from a ``name:param=value,...`` key, e.g.
    ``stack:depth=3,alpha=2`` or ``directory:items=100``."""
    name, _, rest = key.partition(":")
    name = name.strip().lower()
    if name not in _BUILDERS:
        raise UsageError(f"unknown ADT {name!r}; catalog: {', '.join(CATALOG_NAMES)}")
    builder, flagmap = _BUILDERS[name]
    kwargs = {}
    if rest:
        for pair in rest.split(","):
            k, eq, v = pair.partition("=")
            k = k.strip()
            if not eq or k not in flagmap:
                raise UsageError(
                    f"bad parameter {pair!r} for {name}; "
                    f"known: {', '.join(sorted(flagmap))}")
            try:
                kwargs[flagmap[k]] = int(v)
            except ValueError:
                raise UsageError(f"parameter {k}={v!r} is not an integer")
    return builder(**kwargs)
