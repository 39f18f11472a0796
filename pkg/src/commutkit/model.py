"""Operations-as-functions over finite enumerated state spaces.

An abstract data type is modelled as a finite state space plus a set of
functions, one per (operation, outcome) case. Each function carries a
domain and codomain region, a total transition on its domain, a view
(the out-parameter a caller observes), and a per-application inverse
that restores the captured pre-state. The executable checkers below
decide, by exhaustion, the four conditions a bag of functions must meet
to be treated as pairwise commutative: composability of signatures,
compensability, state commutativity, and view independence.

Functions carry two region levels. The tight ``domain``/``codomain``
are where the transition is total and where all pointwise checks
iterate. The ``declared_domain``/``declared_codomain`` are the coarse
signature regions (e.g. "non-empty stacks") used by the structural
conflict pass and by the signature-level composition check; they
default to the tight regions when no coarser signature exists.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

State = Any
View = Any


class UsageError(ValueError):
    """Raised when an operation is called outside its contract."""


class StateSpace:
    """Finite ordered collection of distinct, hashable state values."""

    def __init__(self, label: str, states: Iterable[State]):
        self.label = label
        self.states = tuple(states)
        if not self.states:
            raise UsageError(f"state space {label!r} is empty")
        self._index = {}
        for i, s in enumerate(self.states):
            if s in self._index:
                raise UsageError(f"duplicate state {s!r} in space {label!r}")
            self._index[s] = i

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, state: State) -> bool:
        return state in self._index

    def index(self, state: State) -> int:
        return self._index[state]

    def region(self, label: str, members: Iterable[State]) -> "StateRegion":
        return StateRegion(self, frozenset(members), label)

    def region_where(self, label: str, pred: Callable[[State], bool]) -> "StateRegion":
        return StateRegion(self, frozenset(s for s in self.states if pred(s)), label)

    def __repr__(self):
        return f"StateSpace({self.label!r}, {len(self.states)} states)"


@dataclass(frozen=True)
class StateRegion:
    """An explicit subset of one state space's states."""

    space: StateSpace
    members: frozenset
    label: str = ""

    def __post_init__(self):
        for s in self.members:
            if s not in self.space:
                raise UsageError(
                    f"region {self.label!r} contains {s!r}, not a state of "
                    f"space {self.space.label!r}"
                )

    def __contains__(self, state: State) -> bool:
        return state in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        # deterministic iteration in space order
        return iter(s for s in self.space.states if s in self.members)

    @property
    def is_empty(self) -> bool:
        return not self.members

    def _require_same_space(self, other: "StateRegion"):
        if self.space is not other.space:
            raise UsageError(
                f"regions {self.label!r} and {other.label!r} live in "
                "different state spaces"
            )

    def is_subset(self, other: "StateRegion") -> bool:
        self._require_same_space(other)
        return self.members <= other.members

    def intersect(self, other: "StateRegion") -> "StateRegion":
        self._require_same_space(other)
        return StateRegion(
            self.space, self.members & other.members,
            f"({self.label}&{other.label})",
        )

    def union(self, other: "StateRegion") -> "StateRegion":
        self._require_same_space(other)
        return StateRegion(
            self.space, self.members | other.members,
            f"({self.label}|{other.label})",
        )


def region_subset(r1: StateRegion, r2: StateRegion) -> bool:
    """True iff every member of r1 is a member of r2 (same space required)."""
    return r1.is_subset(r2)


@dataclass(eq=False)
class FunctionSpec:
    """One (operation, outcome) case as a function on a state space.

    ``transition`` must be total on ``domain`` and map into ``codomain``.
    ``view`` takes (pre_state, post_state) and returns the out-parameter
    the caller observes. ``inverse`` takes (current_state, captured_pre)
    and undoes this application against whatever the current state is;
    the captured pre-state is recorded at application time.
    """

    fid: str
    domain: StateRegion
    codomain: StateRegion
    transition: Callable[[State], State]
    view: Callable[[State, State], View]
    inverse: Callable[[State, State], State]
    op: str = ""
    params: tuple = ()
    subkey: Any = None  # sub-object coordinate this function touches, if any
    declared_domain: Optional[StateRegion] = None
    declared_codomain: Optional[StateRegion] = None

    def __post_init__(self):
        if not self.op:
            self.op = self.fid.split("/", 1)[0]
        if self.declared_domain is None:
            self.declared_domain = self.domain
        if self.declared_codomain is None:
            self.declared_codomain = self.codomain

    @property
    def space(self) -> StateSpace:
        return self.domain.space

    @property
    def signature(self) -> tuple:
        return (self.fid, self.params)

    @property
    def name(self) -> str:
        # ids minted per parameter (e.g. "INSERT(a)/new") already carry them
        if self.params and "(" not in self.fid:
            inner = ",".join(str(p) for p in self.params)
            return f"{self.fid}({inner})"
        return self.fid

    def applies_to(self, state: State) -> bool:
        return state in self.domain

    def apply(self, state: State) -> tuple[State, View, State]:
        """Apply at ``state``; returns (post, view, captured_pre)."""
        if state not in self.domain:
            raise UsageError(f"{self.name} applied outside its domain: {state!r}")
        post = self.transition(state)
        return post, self.view(state, post), state

    def undo(self, current: State, captured_pre: State) -> State:
        return self.inverse(current, captured_pre)

    def is_exclusive(self, declared: bool = True) -> bool:
        """Domain and codomain disjoint (at the declared level by default)."""
        if declared:
            return self.declared_domain.intersect(self.declared_codomain).is_empty
        return self.domain.intersect(self.codomain).is_empty

    def __repr__(self):
        return f"FunctionSpec({self.name})"


class FunctionBag:
    """Multiset of functions over one shared state space.

    A function may occur more than once; a function need not commute
    with itself, so duplicates are meaningful. The common domain and
    codomain are recomputed from the members on every access.
    """

    def __init__(self, functions: Sequence[FunctionSpec]):
        self.functions = list(functions)
        if not self.functions:
            raise UsageError("empty function bag")
        space = self.functions[0].space
        for f in self.functions[1:]:
            if f.space is not space:
                raise UsageError("bag members live in different state spaces")
        self.space = space

    def __len__(self):
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, i):
        return self.functions[i]

    def _intersection(self, regions: list[StateRegion], label: str) -> StateRegion:
        members = frozenset(self.space.states)
        for r in regions:
            members &= r.members
        return StateRegion(self.space, members, label)

    @property
    def common_domain(self) -> StateRegion:
        return self._intersection([f.domain for f in self.functions], "A_all")

    @property
    def common_codomain(self) -> StateRegion:
        return self._intersection([f.codomain for f in self.functions], "B_all")

    @property
    def declared_common_domain(self) -> StateRegion:
        return self._intersection(
            [f.declared_domain for f in self.functions], "A_all")

    @property
    def declared_common_codomain(self) -> StateRegion:
        return self._intersection(
            [f.declared_codomain for f in self.functions], "B_all")


# ---------------------------------------------------------------------------
# condition checkers


@dataclass
class CompositionReport:
    """Signature-level composability of a bag: every codomain must be
    contained in every other member's domain."""

    holds: bool
    violations: list  # ordered (i, j) pairs where codomain(f_j) !<= domain(f_i)


def check_composition(bag: FunctionBag, declared: bool = True) -> CompositionReport:
    violations = []
    for i, fi in enumerate(bag):
        dom = fi.declared_domain if declared else fi.domain
        for j, fj in enumerate(bag):
            if i == j:
                continue
            cod = fj.declared_codomain if declared else fj.codomain
            if not cod.is_subset(dom):
                violations.append((i, j))
    return CompositionReport(holds=not violations, violations=violations)


@dataclass
class CompensabilityReport:
    """Left-inverse law: undoing an application restores the pre-state."""

    holds: bool
    witnesses: list  # states where inverse(transition(x), x) != x


def check_compensability(f: FunctionSpec) -> CompensabilityReport:
    witnesses = []
    for x in f.domain:
        post = f.transition(x)
        if f.undo(post, x) != x:
            witnesses.append(x)
    return CompensabilityReport(holds=not witnesses, witnesses=witnesses)


HOLDS = "holds"
FAILS = "fails"
VACUOUS = "vacuous"

# failure labels carried by pair reports and conflict-cell reasons
COMPOSABILITY = "composability"
STATE_ORDER = "state-commutativity"
VIEW_ORDER = "view-independence"


@dataclass
class PairReport:
    verdict: str  # HOLDS | FAILS | VACUOUS
    witnesses: dict = field(default_factory=dict)  # failure label -> first witness state
    checked: int = 0


def _common_states(f: FunctionSpec, g: FunctionSpec) -> list:
    if f.space is not g.space:
        raise UsageError("pair members live in different state spaces")
    return [x for x in f.space.states if x in f.domain and x in g.domain]


def _both_orders_defined(f: FunctionSpec, g: FunctionSpec, x: State) -> bool:
    return g.transition(x) in f.domain and f.transition(x) in g.domain


def check_state_commutativity(f: FunctionSpec, g: FunctionSpec) -> PairReport:
    """Both application orders yield equal states on the common domain.

    A state where either order fails to compose (an intermediate leaves
    the partner's domain) is a failure too, recorded under the
    composability label.
    """
    common = _common_states(f, g)
    if not common:
        return PairReport(VACUOUS)
    witnesses: dict = {}
    checked = 0
    for x in common:
        if not _both_orders_defined(f, g, x):
            witnesses.setdefault(COMPOSABILITY, x)
            continue
        checked += 1
        if f.transition(g.transition(x)) != g.transition(f.transition(x)):
            witnesses.setdefault(STATE_ORDER, x)
    if witnesses:
        return PairReport(FAILS, witnesses, checked)
    return PairReport(HOLDS, {}, checked)


def check_view_independence(f: FunctionSpec, g: FunctionSpec) -> PairReport:
    """Each member's view is unchanged by a prior application of the other.

    Iterates the states of the common domain where both orders compose;
    vacuous only when the common domain itself is empty.
    """
    common = _common_states(f, g)
    if not common:
        return PairReport(VACUOUS)
    witnesses: dict = {}
    checked = 0
    for x in common:
        if not _both_orders_defined(f, g, x):
            continue
        checked += 1
        gx = g.transition(x)
        fx = f.transition(x)
        if f.view(gx, f.transition(gx)) != f.view(x, fx):
            witnesses.setdefault(VIEW_ORDER, x)
            continue
        if g.view(fx, g.transition(fx)) != g.view(x, gx):
            witnesses.setdefault(VIEW_ORDER, x)
    if witnesses:
        return PairReport(FAILS, witnesses, checked)
    return PairReport(HOLDS, {}, checked)


# ---------------------------------------------------------------------------
# composition


@dataclass
class ComposeResult:
    defined: bool
    state: Optional[State]
    failed_step: Optional[int] = None  # index into the order where it broke

    def __bool__(self):
        return self.defined


def compose(bag: FunctionBag | Sequence[FunctionSpec],
            order: Sequence[int], x: State) -> ComposeResult:
    """Apply the bag members in the given position order, starting at x.

    Returns an undefined result the moment an intermediate state leaves
    the next function's domain, identifying the failing step. The empty
    order is the identity.
    """
    functions = list(bag)
    if sorted(order) != list(range(len(functions))):
        raise UsageError(f"order {order!r} is not a permutation of bag positions")
    if functions and x not in functions[0].space:
        raise UsageError(f"{x!r} is not a state of the bag's space")
    state = x
    for step, k in enumerate(order):
        f = functions[k]
        if state not in f.domain:
            return ComposeResult(False, None, failed_step=step)
        state = f.transition(state)
    return ComposeResult(True, state)


def enumerate_orders(n: int, cap: int = 5, sample: int = 1000,
                     seed: int = 0) -> list[tuple[int, ...]]:
    """All n! position orders for n <= cap, else a seeded sample."""
    if n <= cap:
        return list(itertools.permutations(range(n)))
    rng = random.Random(seed)
    base = list(range(n))
    orders = []
    for _ in range(sample):
        rng.shuffle(base)
        orders.append(tuple(base))
    return orders


# ---------------------------------------------------------------------------
# refinement


def refine_function(f: FunctionSpec,
                    partition: Sequence[StateRegion]) -> list[FunctionSpec]:
    """Split f along a partition of its domain into finer functions.

    Each block with a non-empty intersection with the domain yields one
    function restricted to that intersection, keeping f's transition,
    view and inverse; its codomain is the exact image of the restricted
    domain. Blocks must be pairwise disjoint and jointly cover the
    domain.
    """
    blocks = list(partition)
    if not blocks:
        raise UsageError("empty partition")
    for b in blocks:
        if b.space is not f.space:
            raise UsageError("partition block lives in a different state space")
    covered: set = set()
    for b in blocks:
        if covered & b.members:
            raise UsageError("partition blocks overlap")
        covered |= b.members
    if not f.domain.members <= covered:
        raise UsageError("partition does not cover the function's domain")

    out = []
    for k, b in enumerate(blocks):
        sub = f.domain.intersect(b)
        if sub.is_empty:
            continue
        image = frozenset(f.transition(x) for x in sub)
        label = b.label or str(k)
        out.append(FunctionSpec(
            fid=f"{f.fid}@{label}",
            domain=StateRegion(f.space, sub.members, f"{f.fid}@{label}.dom"),
            codomain=StateRegion(f.space, image, f"{f.fid}@{label}.img"),
            transition=f.transition,
            view=f.view,
            inverse=f.inverse,
            op=f.op,
            params=f.params,
        ))
    return out
