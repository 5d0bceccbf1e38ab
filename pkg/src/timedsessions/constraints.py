"""Clock valuations and the clock-constraint language.

The core constraint grammar is ``true | x>c | x=c | x-y>c | x-y=c`` closed
under negation and conjunction.  Comparisons such as ``<``, ``<=``, ``>=``,
``!=`` and bounded intervals are surface sugar and are desugared by the
parser (and by the helper constructors below) into this core; disjunction
is admitted internally since the well-formedness rules take the past of a
disjunction of guards.

Satisfaction is decided here by direct structural evaluation over exact
rationals.  The zone machinery in :mod:`timedsessions.zones` provides the
canonical decision form; the two are kept independent so each can serve as
an oracle for the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, Mapping, Set, Union

from .errors import SpecError
from .rational import format_rational

Valuation = Dict[str, Fraction]


# ---------------------------------------------------------------------------
# Constraint AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrueC:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class Atom:
    """Core atom ``clock op const`` or ``clock - sub op const`` (op is > or =)."""

    clock: str
    op: str  # '>' or '='
    const: Fraction
    sub: Union[str, None] = None  # second clock of a difference atom

    def __post_init__(self) -> None:
        if self.op not in (">", "="):
            raise ValueError(f"core atoms use > or =, got {self.op!r}")

    def lhs(self) -> str:
        return self.clock if self.sub is None else f"{self.clock}-{self.sub}"

    def __str__(self) -> str:
        return f"{self.lhs()}{self.op}{format_rational(self.const)}"


@dataclass(frozen=True)
class Not:
    inner: "Constraint"

    def __str__(self) -> str:
        return f"not ({self.inner})"


@dataclass(frozen=True)
class And:
    left: "Constraint"
    right: "Constraint"

    def __str__(self) -> str:
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Or:
    left: "Constraint"
    right: "Constraint"

    def __str__(self) -> str:
        return f"({self.left} or {self.right})"


Constraint = Union[TrueC, Atom, Not, And, Or]

TRUE: Constraint = TrueC()
FALSE: Constraint = Not(TrueC())


# ---------------------------------------------------------------------------
# Sugar constructors (desugar to the core grammar)
# ---------------------------------------------------------------------------

def atom_gt(clock: str, const: Fraction, sub: str | None = None) -> Constraint:
    return Atom(clock, ">", Fraction(const), sub)


def atom_eq(clock: str, const: Fraction, sub: str | None = None) -> Constraint:
    return Atom(clock, "=", Fraction(const), sub)


def atom_ge(clock: str, const: Fraction, sub: str | None = None) -> Constraint:
    return Or(atom_gt(clock, const, sub), atom_eq(clock, const, sub))


def atom_le(clock: str, const: Fraction, sub: str | None = None) -> Constraint:
    return Not(atom_gt(clock, const, sub))


def atom_lt(clock: str, const: Fraction, sub: str | None = None) -> Constraint:
    return And(Not(atom_gt(clock, const, sub)), Not(atom_eq(clock, const, sub)))


def atom_ne(clock: str, const: Fraction, sub: str | None = None) -> Constraint:
    return Not(atom_eq(clock, const, sub))


def conj(*parts: Constraint) -> Constraint:
    result: Constraint | None = None
    for part in parts:
        result = part if result is None else And(result, part)
    return TRUE if result is None else result


def disj(*parts: Constraint) -> Constraint:
    result: Constraint | None = None
    for part in parts:
        result = part if result is None else Or(result, part)
    return FALSE if result is None else result


# ---------------------------------------------------------------------------
# Structural queries
# ---------------------------------------------------------------------------

def atoms_of(c: Constraint) -> Iterator[Atom]:
    if isinstance(c, Atom):
        yield c
    elif isinstance(c, Not):
        yield from atoms_of(c.inner)
    elif isinstance(c, (And, Or)):
        yield from atoms_of(c.left)
        yield from atoms_of(c.right)


def clocks_of(c: Constraint) -> Set[str]:
    names: Set[str] = set()
    for atom in atoms_of(c):
        names.add(atom.clock)
        if atom.sub is not None:
            names.add(atom.sub)
    return names


def map_clocks(c: Constraint, mapping: Mapping[str, str]) -> Constraint:
    """Rename clock names throughout a constraint."""
    if isinstance(c, TrueC):
        return c
    if isinstance(c, Atom):
        sub = mapping.get(c.sub, c.sub) if c.sub is not None else None
        return Atom(mapping.get(c.clock, c.clock), c.op, c.const, sub)
    if isinstance(c, Not):
        return Not(map_clocks(c.inner, mapping))
    if isinstance(c, And):
        return And(map_clocks(c.left, mapping), map_clocks(c.right, mapping))
    if isinstance(c, Or):
        return Or(map_clocks(c.left, mapping), map_clocks(c.right, mapping))
    raise TypeError(f"not a constraint: {c!r}")


# ---------------------------------------------------------------------------
# Valuations
# ---------------------------------------------------------------------------

def zero_valuation(clocks) -> Valuation:
    return {name: Fraction(0) for name in clocks}


def shift(nu: Mapping[str, Fraction], t: Fraction) -> Valuation:
    """Advance every clock by t; t must be nonnegative."""
    t = Fraction(t)
    if t < 0:
        raise ValueError(f"cannot shift by negative time {t}")
    return {name: value + t for name, value in nu.items()}


def apply_reset(nu: Mapping[str, Fraction], resets) -> Valuation:
    """Zero the clocks in the reset set, leaving the others unchanged."""
    resets = set(resets)
    unknown = resets - set(nu)
    if unknown:
        raise SpecError(f"reset of undeclared clock(s): {sorted(unknown)}")
    return {name: Fraction(0) if name in resets else value for name, value in nu.items()}


def eval_constraint(nu: Mapping[str, Fraction], c: Constraint) -> bool:
    """Decide nu |= c by direct structural evaluation."""
    if isinstance(c, TrueC):
        return True
    if isinstance(c, Atom):
        if c.clock not in nu:
            raise SpecError(f"unknown clock {c.clock!r} in constraint")
        value = nu[c.clock]
        if c.sub is not None:
            if c.sub not in nu:
                raise SpecError(f"unknown clock {c.sub!r} in constraint")
            value = value - nu[c.sub]
        return value > c.const if c.op == ">" else value == c.const
    if isinstance(c, Not):
        return not eval_constraint(nu, c.inner)
    if isinstance(c, And):
        return eval_constraint(nu, c.left) and eval_constraint(nu, c.right)
    if isinstance(c, Or):
        return eval_constraint(nu, c.left) or eval_constraint(nu, c.right)
    raise TypeError(f"not a constraint: {c!r}")


# ---------------------------------------------------------------------------
# Finite delay sampling
# ---------------------------------------------------------------------------

def boundary_delays(nu: Mapping[str, Fraction], guards, horizon: Fraction):
    """Delay samples that cover every region boundary any guard can cross.

    Contains 0, the distance to every single-clock atom boundary within the
    horizon, the midpoints of consecutive collected values, and one sample
    beyond all boundaries.  Difference atoms contribute nothing: they are
    invariant under uniform delay.
    """
    horizon = Fraction(horizon)
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    collected = {Fraction(0)}
    for guard in guards:
        for atom in atoms_of(guard):
            if atom.sub is not None:
                continue
            if atom.clock not in nu:
                raise SpecError(f"unknown clock {atom.clock!r} in guard")
            boundary = max(Fraction(0), atom.const - nu[atom.clock])
            if boundary <= horizon:
                collected.add(boundary)
    ordered = sorted(collected)
    midpoints = [(a + b) / 2 for a, b in zip(ordered, ordered[1:])]
    beyond = min(horizon, ordered[-1] + 1)
    return sorted(set(ordered) | set(midpoints) | {beyond})
