"""Difference-bound zones: the canonical decision form for clock constraints.

A constraint denotes a union of convex zones; each zone is a difference
bound matrix (DBM) over the declared clocks plus the reference clock 0.
Entries carry an exact rational bound and a strictness flag so open/closed
distinctions are never approximated.  Satisfiability, entailment, the past
operator and reset images are all decided here, zone by zone, after a
negation-normal-form / DNF split of the input constraint.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

from .constraints import (
    And,
    Atom,
    Constraint,
    FALSE,
    Not,
    Or,
    TRUE,
    TrueC,
    atom_eq,
    atom_gt,
    clocks_of,
    conj,
    disj,
)
from .errors import SpecError

# A bound is (value, strict); value None means +infinity.
Bound = Tuple[Optional[Fraction], bool]

INF: Bound = (None, True)
ZERO_WEAK: Bound = (Fraction(0), False)


def bound_lt(a: Bound, b: Bound) -> bool:
    """Is bound a tighter than bound b?"""
    av, astrict = a
    bv, bstrict = b
    if bv is None:
        return av is not None
    if av is None:
        return False
    if av != bv:
        return av < bv
    return astrict and not bstrict


def bound_min(a: Bound, b: Bound) -> Bound:
    return a if bound_lt(a, b) else b


def bound_add(a: Bound, b: Bound) -> Bound:
    av, astrict = a
    bv, bstrict = b
    if av is None or bv is None:
        return INF
    return (av + bv, astrict or bstrict)


def _value_ok(diff: Fraction, bound: Bound) -> bool:
    value, strict = bound
    if value is None:
        return True
    return diff < value if strict else diff <= value


@dataclass
class Zone:
    """Canonical DBM over ``clocks`` plus the reference clock at index 0."""

    clocks: Tuple[str, ...]
    m: List[List[Bound]]
    empty: bool = False

    # -- construction -------------------------------------------------------

    @classmethod
    def universal(cls, clocks: Sequence[str]) -> "Zone":
        clocks = tuple(clocks)
        n = len(clocks) + 1
        m = [[INF] * n for _ in range(n)]
        for i in range(n):
            m[i][i] = ZERO_WEAK
        for j in range(1, n):
            m[0][j] = ZERO_WEAK  # clocks are nonnegative
        return cls(clocks, m)

    def index(self, clock: str) -> int:
        try:
            return self.clocks.index(clock) + 1
        except ValueError:
            raise SpecError(f"clock {clock!r} not in zone clock set {self.clocks}")

    def copy(self) -> "Zone":
        return Zone(self.clocks, [row[:] for row in self.m], self.empty)

    def tighten(self, i: int, j: int, bound: Bound) -> None:
        if bound_lt(bound, self.m[i][j]):
            self.m[i][j] = bound

    def canonicalize(self) -> "Zone":
        """Shortest-path closure; flags emptiness on a negative cycle."""
        n = len(self.m)
        m = self.m
        for k in range(n):
            for i in range(n):
                ik = m[i][k]
                if ik[0] is None:
                    continue
                for j in range(n):
                    cand = bound_add(ik, m[k][j])
                    if bound_lt(cand, m[i][j]):
                        m[i][j] = cand
        for i in range(n):
            if bound_lt(m[i][i], ZERO_WEAK):
                self.empty = True
                break
        return self

    # -- queries -------------------------------------------------------------

    def contains(self, nu: Mapping[str, Fraction]) -> bool:
        if self.empty:
            return False
        values = [Fraction(0)]
        for clock in self.clocks:
            if clock not in nu:
                raise SpecError(f"valuation lacks clock {clock!r}")
            values.append(Fraction(nu[clock]))
        n = len(values)
        for i in range(n):
            for j in range(n):
                if not _value_ok(values[i] - values[j], self.m[i][j]):
                    return False
        return True

    def intersect(self, other: "Zone") -> "Zone":
        if self.clocks != other.clocks:
            raise SpecError("zone clock sets differ")
        if self.empty or other.empty:
            out = self.copy()
            out.empty = True
            return out
        out = self.copy()
        n = len(out.m)
        for i in range(n):
            for j in range(n):
                out.m[i][j] = bound_min(out.m[i][j], other.m[i][j])
        return out.canonicalize()

    # -- timed operations ----------------------------------------------------

    def down(self) -> "Zone":
        """Delay predecessor: valuations that reach this zone by waiting."""
        out = self.copy()
        n = len(out.m)
        for i in range(1, n):
            best = ZERO_WEAK
            for j in range(1, n):
                if j != i and bound_lt(out.m[j][i], best):
                    best = out.m[j][i]
            out.m[0][i] = best
        return out.canonicalize()

    def up(self) -> "Zone":
        """Delay successor: valuations reachable from this zone by waiting."""
        out = self.copy()
        n = len(out.m)
        for i in range(1, n):
            out.m[i][0] = INF
        return out.canonicalize()

    def reset(self, resets: Iterable[str]) -> "Zone":
        """Image under zeroing the given clocks (on a canonical zone)."""
        out = self.copy()
        n = len(out.m)
        for clock in resets:
            x = out.index(clock)
            for j in range(n):
                out.m[x][j] = out.m[0][j]
                out.m[j][x] = out.m[j][0]
            out.m[x][x] = ZERO_WEAK
        return out.canonicalize()

    # -- rendering -----------------------------------------------------------

    def to_constraint(self) -> Constraint:
        """Re-express this canonical zone in the surface constraint grammar."""
        if self.empty:
            return FALSE
        parts: List[Constraint] = []
        n = len(self.m)
        for i in range(n):
            for j in range(i + 1, n):
                if i == 0:
                    clock, sub = self.clocks[j - 1], None
                    up_b = self.m[j][0]   # x - 0 bound
                    low_b = self.m[0][j]  # 0 - x bound
                else:
                    clock, sub = self.clocks[i - 1], self.clocks[j - 1]
                    up_b = self.m[i][j]   # x - y bound
                    low_b = self.m[j][i]  # y - x bound
                parts.extend(_bounds_to_atoms(clock, sub, up_b, low_b))
        return conj(*parts) if parts else TRUE


def _bounds_to_atoms(clock: str, sub: Optional[str], upper: Bound,
                     lower: Bound) -> List[Constraint]:
    """Atoms for  lo <= expr <= hi  where expr is a clock or a difference."""
    out: List[Constraint] = []
    uv, ustrict = upper
    lv, lstrict = lower  # bound on -expr: expr >= -lv (strict if lstrict)
    if uv is not None and lv is not None and uv == -lv and not ustrict and not lstrict:
        out.append(atom_eq(clock, uv, sub))
        return out
    if uv is not None:
        # expr <= uv  (or < uv)
        le = Not(atom_gt(clock, uv, sub))
        if ustrict:
            le = And(le, Not(atom_eq(clock, uv, sub)))
        out.append(le)
    if lv is not None:
        low = -lv
        # skip the implicit nonnegativity bound on single clocks
        if not (sub is None and low == 0 and not lstrict):
            if lstrict:
                out.append(atom_gt(clock, low, sub))
            elif not (sub is None and low <= 0):
                out.append(Or(atom_gt(clock, low, sub), atom_eq(clock, low, sub)))
    return out


# ---------------------------------------------------------------------------
# Constraint -> ZoneSet
# ---------------------------------------------------------------------------

ZoneSet = List[Zone]

_Literal = Tuple[Atom, bool]  # (atom, positive?)


def _dnf(c: Constraint, positive: bool) -> List[List[_Literal]]:
    if isinstance(c, TrueC):
        return [[]] if positive else []
    if isinstance(c, Atom):
        return [[(c, positive)]]
    if isinstance(c, Not):
        return _dnf(c.inner, not positive)
    if isinstance(c, And):
        if positive:
            return _dnf_product(_dnf(c.left, True), _dnf(c.right, True))
        return _dnf(c.left, False) + _dnf(c.right, False)
    if isinstance(c, Or):
        if positive:
            return _dnf(c.left, True) + _dnf(c.right, True)
        return _dnf_product(_dnf(c.left, False), _dnf(c.right, False))
    raise TypeError(f"not a constraint: {c!r}")


def _dnf_product(lhs: List[List[_Literal]],
                 rhs: List[List[_Literal]]) -> List[List[_Literal]]:
    return [a + b for a in lhs for b in rhs]


def _apply_literal(zone: Zone, atom: Atom, positive: bool) -> List[Zone]:
    """Tighten a zone by one literal; a negated equality splits it in two."""
    i = zone.index(atom.clock)
    j = zone.index(atom.sub) if atom.sub is not None else 0
    if atom.op == ">":
        if positive:
            zone.tighten(j, i, (-atom.const, True))    # x_j - x_i < -c
            return [zone]
        zone.tighten(i, j, (atom.const, False))        # x_i - x_j <= c
        return [zone]
    if positive:
        zone.tighten(i, j, (atom.const, False))
        zone.tighten(j, i, (-atom.const, False))
        return [zone]
    below = zone.copy()
    below.tighten(i, j, (atom.const, True))            # x_i - x_j < c
    above = zone
    above.tighten(j, i, (-atom.const, True))           # x_i - x_j > c
    return [below, above]


_ZONE_CACHE: dict = {}


def to_zones(c: Constraint, clocks: Optional[Iterable[str]] = None) -> ZoneSet:
    """Equivalent ZoneSet: DNF split, then per-conjunct DBM canonicalization.

    Results are cached per (constraint, clock set); callers must not mutate
    the returned zones.
    """
    universe = set(clocks_of(c))
    if clocks is not None:
        universe |= set(clocks)
    ordered = tuple(sorted(universe))
    key = (c, ordered)
    cached = _ZONE_CACHE.get(key)
    if cached is not None:
        return cached
    result: ZoneSet = []
    for conjunct in _dnf(c, True):
        zones = [Zone.universal(ordered)]
        for atom, positive in conjunct:
            zones = [z for zone in zones for z in _apply_literal(zone, atom, positive)]
        for zone in zones:
            zone.canonicalize()
            if not zone.empty:
                result.append(zone)
    if len(_ZONE_CACHE) > 50000:
        _ZONE_CACHE.clear()
    _ZONE_CACHE[key] = result
    return result


def zoneset_contains(zones: ZoneSet, nu: Mapping[str, Fraction]) -> bool:
    return any(zone.contains(nu) for zone in zones)


def zoneset_to_constraint(zones: ZoneSet) -> Constraint:
    if not zones:
        return FALSE
    return disj(*[zone.to_constraint() for zone in zones])


# ---------------------------------------------------------------------------
# Decision operations on constraints
# ---------------------------------------------------------------------------

def is_sat(c: Constraint, clocks: Optional[Iterable[str]] = None) -> bool:
    return bool(to_zones(c, clocks))


def zone_minus(w: Zone, z: Zone) -> List[Zone]:
    """w with z removed, as disjoint zones: one piece per negated bound of z."""
    if w.empty:
        return []
    if z.empty:
        return [w]
    pieces: List[Zone] = []
    n = len(z.m)
    remaining = w
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            value, strict = z.m[i][j]
            if value is None:
                continue
            if i == 0 and z.m[i][j] == ZERO_WEAK:
                continue  # implicit nonnegativity: its negation is empty
            # negation of  x_i - x_j (<|<=) c  is  x_j - x_i (<=|<) -c
            piece = remaining.copy()
            piece.tighten(j, i, (-value, not strict))
            piece.canonicalize()
            if not piece.empty:
                pieces.append(piece)
            # keep the bound on the remainder so pieces stay disjoint
            remaining = remaining.copy()
            remaining.tighten(i, j, (value, strict))
            remaining.canonicalize()
            if remaining.empty:
                return pieces
    return pieces


def entails(c1: Constraint, c2: Constraint,
            clocks: Optional[Iterable[str]] = None) -> bool:
    """c1 |= c2, decided as unsatisfiability of c1 and not c2.

    The negation is distributed bound-wise over c2's zones, so entailment
    never builds the disjunctive normal form of a negated zone union.
    """
    universe = clocks_of(c1) | clocks_of(c2)
    if clocks is not None:
        universe |= set(clocks)
    ordered = sorted(universe)
    remaining = to_zones(c1, ordered)
    for z in to_zones(c2, ordered):
        remaining = [piece for w in remaining for piece in zone_minus(w, z)]
        if not remaining:
            return True
    return not remaining


def constraint_equiv(c1: Constraint, c2: Constraint,
                     clocks: Optional[Iterable[str]] = None) -> bool:
    return entails(c1, c2, clocks) and entails(c2, c1, clocks)


def past(c: Constraint, clocks: Optional[Iterable[str]] = None) -> Constraint:
    """Weakest constraint holding now iff c holds after some delay."""
    zones = [zone.down() for zone in to_zones(c, clocks)]
    zones = [zone for zone in zones if not zone.empty]
    return zoneset_to_constraint(zones)


def future(c: Constraint, clocks: Optional[Iterable[str]] = None) -> Constraint:
    """Delay closure upward: satisfiable now or after the clocks advance."""
    zones = [zone.up() for zone in to_zones(c, clocks)]
    zones = [zone for zone in zones if not zone.empty]
    return zoneset_to_constraint(zones)


def reset_constraint(c: Constraint, resets: Iterable[str],
                     clocks: Optional[Iterable[str]] = None) -> Constraint:
    """Image of c under zeroing the reset set."""
    resets = list(resets)
    universe = clocks_of(c) | set(resets)
    if clocks is not None:
        universe |= set(clocks)
    zones = [zone.reset(resets) for zone in to_zones(c, universe)]
    zones = [zone for zone in zones if not zone.empty]
    return zoneset_to_constraint(zones)


def trajectory_zone(nu: Mapping[str, Fraction], t: Fraction,
                    include_end: bool) -> Zone:
    """The zone swept by nu while up to t time passes.

    All pairwise clock differences stay fixed at nu's; the designated first
    clock ranges over [nu(x0), nu(x0)+t), closed at the right end when
    include_end is set.
    """
    t = Fraction(t)
    if t <= 0:
        raise ValueError("trajectory needs a positive duration")
    if not nu:
        raise SpecError("trajectory of an empty valuation")
    ordered = tuple(sorted(nu))
    zone = Zone.universal(ordered)
    for a in range(1, len(ordered) + 1):
        for b in range(a + 1, len(ordered) + 1):
            diff = Fraction(nu[ordered[a - 1]]) - Fraction(nu[ordered[b - 1]])
            zone.tighten(a, b, (diff, False))
            zone.tighten(b, a, (-diff, False))
    start = Fraction(nu[ordered[0]])
    zone.tighten(0, 1, (-start, False))
    zone.tighten(1, 0, (start + t, not include_end))
    return zone.canonicalize()
