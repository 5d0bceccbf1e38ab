"""Seeded random generators for constraints, types, and processes.

Used by the property and acceptance suites: random constraints exercise
the zone engine against the structural evaluator, random types feed the
empirical progress check, and random processes exercise time-passing.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .constraints import (
    And,
    Constraint,
    Not,
    Or,
    TRUE,
    atom_eq,
    atom_ge,
    atom_gt,
    atom_le,
    atom_lt,
    atom_ne,
)
from .processes import (
    Branch,
    Buffer,
    DelayExact,
    LinearExpr,
    P_END,
    P_ERR,
    Par,
    ProcNode,
    ReceiveAfter,
    Scope,
)
from .sessiontypes import (
    Choice,
    ChoiceOption,
    END,
    NONE,
    RECV,
    Rec,
    SEND,
    TypeNode,
    Var,
    check_well_formed,
)

HALVES = [Fraction(n, 2) for n in range(0, 11)]


def random_valuation(rng: random.Random, clocks: Sequence[str],
                     values: Sequence[Fraction] = HALVES):
    return {clock: rng.choice(values) for clock in clocks}


_ATOM_BUILDERS = (atom_gt, atom_eq, atom_lt, atom_le, atom_ge, atom_ne)


def random_constraint(rng: random.Random, clocks: Sequence[str],
                      constants: Sequence[Fraction] = HALVES,
                      max_depth: int = 3, diagonals: bool = True) -> Constraint:
    def go(depth: int) -> Constraint:
        roll = rng.random()
        if depth <= 0 or roll < 0.45:
            clock = rng.choice(clocks)
            sub = None
            if diagonals and len(clocks) > 1 and rng.random() < 0.25:
                sub = rng.choice([c for c in clocks if c != clock])
            return rng.choice(_ATOM_BUILDERS)(clock, rng.choice(constants), sub)
        if roll < 0.60:
            return Not(go(depth - 1))
        if roll < 0.85:
            return And(go(depth - 1), go(depth - 1))
        return Or(go(depth - 1), go(depth - 1))

    return go(max_depth)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

_LABELS = "abcdefgh"


def random_type(rng: random.Random, clocks: Sequence[str] = ("x", "y"),
                depth: int = 3, max_constant: int = 5) -> TypeNode:
    """A random closed type: guarded choices with integer-constant guards,
    occasional recursion, no payloads."""

    def guard() -> Constraint:
        clock = rng.choice(clocks)
        c = Fraction(rng.randint(0, max_constant))
        roll = rng.random()
        if roll < 0.25:
            return atom_le(clock, c)
        if roll < 0.50:
            return atom_gt(clock, c)
        if roll < 0.65:
            hi = c + rng.randint(1, 2)
            return And(atom_ge(clock, c), atom_lt(clock, hi))
        if roll < 0.75:
            return atom_lt(clock, c) if c > 0 else atom_le(clock, c)
        return TRUE

    counter = [0]

    def fresh_var() -> str:
        counter[0] += 1
        return f"r{counter[0]}"

    # bound maps each open recursion variable to the directions consumed
    # since its binder.  A loop is only closed once it contains both a send
    # and a receive: a cycle of sends floods the peer queue (and a cycle of
    # receives is a cycle of sends for the dual), which would make bounded
    # exploration of the composed system meaningless.
    def leaf(bound) -> TypeNode:
        usable = [v for v, dirs in bound if len(dirs) == 2]
        if usable and rng.random() < 0.6:
            return Var(rng.choice(usable))
        return END

    def choice(depth_left: int, bound) -> TypeNode:
        count = rng.randint(1, 3)
        labels = rng.sample(_LABELS, count)
        options = []
        for label in labels:
            direction = rng.choice((SEND, RECV))
            inner_bound = tuple((v, dirs | {direction}) for v, dirs in bound)
            resets = frozenset(
                clock for clock in clocks if rng.random() < 0.5)
            if depth_left <= 1:
                cont = leaf(inner_bound)
            else:
                cont = subtype(depth_left - 1, inner_bound)
            options.append(ChoiceOption(direction, label, NONE, guard(),
                                        resets, cont))
        return Choice(tuple(options))

    def subtype(depth_left: int, bound) -> TypeNode:
        if depth_left <= 0:
            return leaf(bound)
        if rng.random() < 0.35:
            var = fresh_var()
            return Rec(var, choice(depth_left, bound + ((var, frozenset()),)))
        if rng.random() < 0.12:
            return leaf(bound)
        return choice(depth_left, bound)

    node = subtype(depth, ())
    return END if isinstance(node, Var) else node


def well_formed_types(count: int, seed: int = 0,
                      clocks: Sequence[str] = ("x", "y"), depth: int = 3,
                      max_constant: int = 5,
                      max_attempts: int = 100000) -> List[TypeNode]:
    """Sample until `count` types pass the well-formedness check."""
    rng = random.Random(seed)
    found: List[TypeNode] = []
    attempts = 0
    while len(found) < count and attempts < max_attempts:
        attempts += 1
        node = random_type(rng, clocks, depth, max_constant)
        if isinstance(node, type(END)):
            continue
        if check_well_formed(node, clocks=clocks).verdict:
            found.append(node)
    if len(found) < count:
        raise RuntimeError(
            f"only {len(found)} well-formed types in {max_attempts} attempts")
    return found


def ill_formed_types(count: int, seed: int = 0,
                     clocks: Sequence[str] = ("x", "y"), depth: int = 3,
                     max_constant: int = 5,
                     max_attempts: int = 200000) -> List[Tuple[TypeNode, str]]:
    """Sample types that violate exactly one well-formedness condition."""
    rng = random.Random(seed)
    found: List[Tuple[TypeNode, str]] = []
    attempts = 0
    while len(found) < count and attempts < max_attempts:
        attempts += 1
        node = random_type(rng, clocks, depth, max_constant)
        if isinstance(node, type(END)):
            continue
        report = check_well_formed(node, clocks=clocks)
        if report.verdict:
            continue
        conditions = {v.condition for v in report.violations}
        if len(conditions) == 1:
            found.append((node, conditions.pop()))
    if len(found) < count:
        raise RuntimeError(
            f"only {len(found)} singly-ill-formed types in {max_attempts} attempts")
    return found


# ---------------------------------------------------------------------------
# Processes
# ---------------------------------------------------------------------------

def random_phi_term(rng: random.Random, depth: int = 3) -> ProcNode:
    """Random terms over the time-permeable constructors, for exercising
    the time-passing function."""
    endpoints = ("p", "q")

    def go(depth_left: int) -> ProcNode:
        roll = rng.random()
        if depth_left <= 0 or roll < 0.18:
            return P_ERR if rng.random() < 0.2 else P_END
        if roll < 0.40:
            return DelayExact(Fraction(rng.randint(0, 6), rng.choice((1, 2))),
                              go(depth_left - 1))
        if roll < 0.70:
            after: Optional[LinearExpr]
            if rng.random() < 0.25:
                after = None
                timeout = None
            else:
                after = LinearExpr(Fraction(rng.randint(0, 5)))
                timeout = go(depth_left - 1)
            return ReceiveAfter(rng.choice(endpoints),
                                (Branch("m", None, go(depth_left - 1)),),
                                after, timeout)
        if roll < 0.85:
            return Par((go(depth_left - 1), go(depth_left - 1)))
        if roll < 0.95:
            return Buffer("q", "p", (("m", ()),) if rng.random() < 0.4 else ())
        return Scope("p", "q", Par((
            go(depth_left - 1), go(depth_left - 1),
            Buffer("p", "q", ()), Buffer("q", "p", ()))))

    return go(depth)
