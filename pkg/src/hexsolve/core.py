"""Ground atoms, signed literals, assignments and nogoods.

These are the value types shared by every other module: the static
program encoding, conflict learning and external behavior learning all
trade in the same nogood currency.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

log = logging.getLogger(__name__)

CHOICE = None  # reason marker for decision literals


class InconsistentAssignment(Exception):
    """Raised when a literal contradicts one already on the trail."""


@dataclass(frozen=True, order=True)
class Atom:
    """A ground atom p(c1, ..., cn); args are constant strings."""

    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(self.args)})"

    __repr__ = __str__


@dataclass(frozen=True, order=True)
class Literal:
    """A signed ground atom: T a (sign=True) or F a (sign=False)."""

    atom: Atom
    sign: bool

    @classmethod
    def T(cls, atom: Atom) -> "Literal":
        return cls(atom, True)

    @classmethod
    def F(cls, atom: Atom) -> "Literal":
        return cls(atom, False)

    def negated(self) -> "Literal":
        return Literal(self.atom, not self.sign)

    def __str__(self) -> str:
        return f"{'T' if self.sign else 'F'} {self.atom}"

    __repr__ = __str__


def negate(lit: Literal) -> Literal:
    """Flip the sign of a literal; involutive."""
    return lit.negated()


class Origin(enum.Enum):
    """Where a nogood came from; informational only (not part of equality)."""

    STATIC_COMPLETION = "static-completion"
    STATIC_SHIFT = "static-shift"
    LOOP = "loop"
    CONFLICT = "conflict"
    EBL_GENERAL = "ebl-general"
    EBL_MONOTONIC = "ebl-monotonic"
    EBL_FUNCTIONAL = "ebl-functional"
    EBL_USER = "ebl-user"
    COMPATIBILITY_REJECT = "compatibility-reject"
    ENUM_BLOCK = "enum-block"


class Nogood:
    """A set of signed literals that must not jointly hold.

    Nogoods are canonical: duplicate literals collapse, and a nogood that
    contains both T a and F a can never be contained in a consistent
    assignment, so `make` drops it at construction. Equality and hashing
    ignore the origin tag, which keeps deduplication purely syntactic.
    """

    __slots__ = ("literals", "origin", "_sorted")

    def __init__(self, literals: Iterable[Literal], origin: Origin = Origin.CONFLICT):
        lits = frozenset(literals)
        atoms = {l.atom for l in lits}
        if len(atoms) != len(lits):
            raise ValueError(f"tautological nogood: {sorted(map(str, lits))}")
        self.literals: frozenset[Literal] = lits
        self.origin = origin
        self._sorted: Optional[tuple[Literal, ...]] = None

    @classmethod
    def make(cls, literals: Iterable[Literal], origin: Origin) -> Optional["Nogood"]:
        """Build a nogood, returning None for tautological literal sets."""
        lits = frozenset(literals)
        if len({l.atom for l in lits}) != len(lits):
            log.debug("dropping tautological nogood %s", sorted(map(str, lits)))
            return None
        return cls(lits, origin)

    @property
    def sorted_literals(self) -> tuple[Literal, ...]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self.literals, key=lambda l: (l.atom, not l.sign)))
        return self._sorted

    def __len__(self) -> int:
        return len(self.literals)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.sorted_literals)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Nogood) and self.literals == other.literals

    def __hash__(self) -> int:
        return hash(self.literals)

    def __str__(self) -> str:
        return "{" + ", ".join(str(l) for l in self.sorted_literals) + "}"

    __repr__ = __str__


@dataclass
class _Entry:
    literal: Literal
    level: int
    reason: Optional[Nogood]


class Assignment:
    """A consistent set of signed literals with trail bookkeeping.

    Each assigned atom carries the decision level it was set at and the
    nogood that implied it (or CHOICE for guessed literals).
    """

    def __init__(self) -> None:
        self._by_atom: dict[Atom, _Entry] = {}
        self._trail: list[_Entry] = []

    @classmethod
    def from_literals(cls, literals: Iterable[Literal], level: int = 0) -> "Assignment":
        a = cls()
        for lit in literals:
            a.assign(lit, level)
        return a

    def assign(self, lit: Literal, level: int = 0, reason: Optional[Nogood] = CHOICE) -> None:
        prev = self._by_atom.get(lit.atom)
        if prev is not None:
            if prev.literal.sign != lit.sign:
                raise InconsistentAssignment(
                    f"cannot add {lit}: {prev.literal} already holds"
                )
            return
        entry = _Entry(lit, level, reason)
        self._by_atom[lit.atom] = entry
        self._trail.append(entry)

    def value(self, atom: Atom) -> Optional[bool]:
        entry = self._by_atom.get(atom)
        return None if entry is None else entry.literal.sign

    def holds(self, lit: Literal) -> bool:
        entry = self._by_atom.get(lit.atom)
        return entry is not None and entry.literal.sign == lit.sign

    def decision_level(self, atom: Atom) -> int:
        return self._by_atom[atom].level

    def reason(self, atom: Atom) -> Optional[Nogood]:
        return self._by_atom[atom].reason

    def backjump(self, level: int) -> None:
        """Drop every literal assigned above the given decision level."""
        kept = [e for e in self._trail if e.level <= level]
        self._trail = kept
        self._by_atom = {e.literal.atom: e for e in kept}

    @property
    def literals(self) -> frozenset[Literal]:
        return frozenset(e.literal for e in self._trail)

    @property
    def trail(self) -> tuple[Literal, ...]:
        return tuple(e.literal for e in self._trail)

    def __contains__(self, lit: Literal) -> bool:
        return self.holds(lit)

    def __iter__(self) -> Iterator[Literal]:
        return iter(self.trail)

    def __len__(self) -> int:
        return len(self._trail)

    def __str__(self) -> str:
        return "{" + ", ".join(f"{e.literal}@{e.level}" for e in self._trail) + "}"


def _literal_set(assignment: "Assignment | Iterable[Literal]") -> frozenset[Literal]:
    if isinstance(assignment, Assignment):
        return assignment.literals
    return frozenset(assignment)


def is_solution(assignment: "Assignment | Iterable[Literal]", nogoods: Iterable[Nogood]) -> bool:
    """True iff no nogood is fully contained in the assignment."""
    lits = _literal_set(assignment)
    return all(not ng.literals <= lits for ng in nogoods)


def extension(predicate: str, assignment: "Assignment | Iterable[Literal]") -> set[tuple[str, ...]]:
    """Argument tuples of the true atoms over a predicate."""
    return {
        lit.atom.args
        for lit in _literal_set(assignment)
        if lit.sign and lit.atom.predicate == predicate
    }


def restrict(
    assignment: "Assignment | Iterable[Literal]", predicates: Iterable[str]
) -> set[Literal]:
    """Both-polarity literals over the listed predicates."""
    preds = set(predicates)
    return {lit for lit in _literal_set(assignment) if lit.atom.predicate in preds}
