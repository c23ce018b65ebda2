"""Unfounded-set detection and on-the-fly loop nogoods.

Atoms that only support each other through positive cycles must be
false; the checker works per strongly connected component of the
positive dependency graph. Head-cycle-free components use a linear
discard loop, components with shared disjunctive heads fall back to
subset enumeration (they stay tiny in practice: guessing rules are
head-cycle-free by construction).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .core import Atom, Literal, Nogood, Origin
from .program import GuessingProgram, StaticEncoding, encode

log = logging.getLogger(__name__)


@dataclass
class _IntRule:
    head: tuple[int, ...]
    positive: tuple[int, ...]
    negative: tuple[int, ...]
    body_atom: int


def _tarjan_sccs(vertices: Sequence[int], edges: dict[int, list[int]]) -> list[list[int]]:
    """Iterative Tarjan; components come out in a deterministic order."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    result: list[list[int]] = []
    counter = itertools.count()

    for root in vertices:
        if root in index:
            continue
        work: list[tuple[int, int]] = [(root, 0)]
        while work:
            v, edge_pos = work.pop()
            if edge_pos == 0:
                index[v] = low[v] = next(counter)
                stack.append(v)
                on_stack.add(v)
            advanced = False
            targets = edges.get(v, ())
            for i in range(edge_pos, len(targets)):
                w = targets[i]
                if w not in index:
                    work.append((v, i + 1))
                    work.append((w, 0))
                    advanced = True
                    break
                if w in on_stack and low[v] > index[w]:
                    low[v] = index[w]
            if advanced:
                continue
            if work and low[work[-1][0]] > low[v]:
                low[work[-1][0]] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                result.append(sorted(comp))
    return result


class FoundednessChecker:
    """Per-program index for unfounded-set queries against engine values."""

    def __init__(self, rules: Sequence[_IntRule], num_atoms: int):
        self.rules = rules
        edges: dict[int, list[int]] = {}
        self_loop: set[int] = set()
        for rule in rules:
            for h in rule.head:
                bucket = edges.setdefault(h, [])
                for b in rule.positive:
                    if b not in bucket:
                        bucket.append(b)
                    if b == h:
                        self_loop.add(h)
        vertices = sorted({a for r in rules for a in r.head + r.positive})
        components = _tarjan_sccs(vertices, edges)
        self.sccs: list[frozenset[int]] = []
        self.scc_rules: list[list[_IntRule]] = []
        self.scc_hcf: list[bool] = []
        for comp in sorted(components, key=min):
            cset = frozenset(comp)
            if len(cset) == 1 and next(iter(cset)) not in self_loop:
                continue  # acyclic atoms are covered by the static support nogoods
            members = [r for r in rules if any(h in cset for h in r.head)]
            hcf = all(sum(h in cset for h in r.head) <= 1 for r in members)
            self.sccs.append(cset)
            self.scc_rules.append(members)
            self.scc_hcf.append(hcf)

    # -- queries -------------------------------------------------------------

    @staticmethod
    def _body_satisfied(rule: _IntRule, values: Sequence[int]) -> bool:
        return all(values[a] == a for a in rule.positive) and all(
            values[a] == -a for a in rule.negative
        )

    def _supports(self, rule: _IntRule, unfounded: frozenset[int], values) -> bool:
        """True if the rule justifies some atom of the set from outside it."""
        if not any(h in unfounded for h in rule.head):
            return False
        if any(b in unfounded for b in rule.positive):
            return False
        if not self._body_satisfied(rule, values):
            return False
        return all(values[h] == -h for h in rule.head if h not in unfounded)

    def _discard_loop(self, scc_idx: int, values) -> frozenset[int]:
        """Head-cycle-free case: peel off externally supported atoms."""
        unfounded = {a for a in self.sccs[scc_idx] if values[a] == a}
        rules = self.scc_rules[scc_idx]
        changed = True
        while changed and unfounded:
            changed = False
            for rule in rules:
                if any(b in unfounded for b in rule.positive):
                    continue
                if not self._body_satisfied(rule, values):
                    continue
                for h in rule.head:
                    if h in unfounded and all(
                        values[x] == -x for x in rule.head if x != h
                    ):
                        unfounded.discard(h)
                        changed = True
        return frozenset(unfounded)

    def _enumerate_unfounded(self, scc_idx: int, values) -> frozenset[int]:
        """Disjunctive head cycles: test candidate subsets directly."""
        true_atoms = sorted(a for a in self.sccs[scc_idx] if values[a] == a)
        rules = self.scc_rules[scc_idx]
        for size in range(len(true_atoms), 0, -1):
            for combo in itertools.combinations(true_atoms, size):
                candidate = frozenset(combo)
                if not any(self._supports(r, candidate, values) for r in rules):
                    return candidate
        return frozenset()

    def unfounded_set(self, values) -> frozenset[int]:
        for idx, scc in enumerate(self.sccs):
            if not any(values[a] == a for a in scc):
                continue
            if self.scc_hcf[idx]:
                found = self._discard_loop(idx, values)
            else:
                found = self._enumerate_unfounded(idx, values)
            if found:
                log.debug("unfounded set of %d atoms in component %d", len(found), idx)
                return found
        return frozenset()

    def loop_nogood_ints(self, unfounded: frozenset[int], values) -> Optional[tuple[int, ...]]:
        """One violated loop nogood for an unfounded set.

        Built from the smallest true member plus, per potential support
        rule, the witness that disarms it: a false body atom or a true
        head atom outside the set. Returns None when some rule has no
        assigned witness (possible only on partial assignments).
        """
        atom = min(unfounded)
        lits = {atom}
        for rule in self.rules:
            if not any(h in unfounded for h in rule.head):
                continue
            if any(b in unfounded for b in rule.positive):
                continue
            beta = rule.body_atom
            if values[beta] == -beta:
                lits.add(-beta)
                continue
            witness = next(
                (h for h in rule.head if h not in unfounded and values[h] == h), None
            )
            if witness is None:
                return None
            lits.add(witness)
        return tuple(sorted(lits))

    # -- engine hooks -----------------------------------------------------------

    def complete_check(self, engine) -> Optional[tuple[int, ...]]:
        if not self.sccs:
            return None
        unfounded = self.unfounded_set(engine.values)
        if not unfounded:
            return None
        lits = self.loop_nogood_ints(unfounded, engine.values)
        assert lits is not None, "complete assignments always carry a witness"
        return lits

    def partial_check(self, engine) -> Optional[tuple[int, ...]]:
        if not self.sccs:
            return None
        values = engine.values
        for idx, scc in enumerate(self.sccs):
            if any(values[a] == 0 for a in scc):
                continue
            if not any(values[a] == a for a in scc):
                continue
            if self.scc_hcf[idx]:
                found = self._discard_loop(idx, values)
            else:
                found = self._enumerate_unfounded(idx, values)
            if found:
                lits = self.loop_nogood_ints(found, values)
                if lits is not None:
                    return lits
        return None


def build_checker(guessing: GuessingProgram, table, encoding: StaticEncoding) -> FoundednessChecker:
    rules = [
        _IntRule(
            tuple(table.id(a) for a in rule.head),
            tuple(table.id(a) for a in rule.positive),
            tuple(table.id(a) for a in rule.negative),
            table.id(encoding.rule_body_atom[rule]),
        )
        for rule in guessing.rules
    ]
    return FoundednessChecker(rules, len(table))


# ---------------------------------------------------------------------------
# Standalone views over core-level values (used directly in tests)


def _values_from_assignment(assignment, table, encoding) -> list[int]:
    from .core import Assignment

    values = [0] * (len(table) + 1)
    holds = (
        assignment.holds
        if isinstance(assignment, Assignment)
        else frozenset(assignment).__contains__
    )
    for atom, aid in table.ids.items():
        if holds(Literal.T(atom)):
            values[aid] = aid
        elif holds(Literal.F(atom)):
            values[aid] = -aid
    # body atoms follow from their literal sets when unassigned
    for body, atom in encoding.body_table.items():
        aid = table.ids[atom]
        if values[aid] == 0:
            if all(values[table.ids[l.atom]] == table.lit(l) for l in body):
                values[aid] = aid
            elif any(values[table.ids[l.atom]] == -table.lit(l) for l in body):
                values[aid] = -aid
    return values


def _standalone(guessing: GuessingProgram):
    from .cdnl import AtomTable

    table = AtomTable()
    for atom in guessing.atoms:
        table.intern(atom)
    encoding = encode(guessing)
    for atom in encoding.body_table.atoms:
        table.intern(atom)
    checker = build_checker(guessing, table, encoding)
    return table, encoding, checker


def unfounded_set(guessing: GuessingProgram, assignment) -> frozenset[Atom]:
    """A nonempty unfounded set of true atoms, or the empty set."""
    table, encoding, checker = _standalone(guessing)
    values = _values_from_assignment(assignment, table, encoding)
    return frozenset(table.atom(a) for a in checker.unfounded_set(values))


def loop_nogood(guessing: GuessingProgram, unfounded: Iterable[Atom], assignment) -> Nogood:
    """The violated loop nogood for an unfounded set under an assignment."""
    table, encoding, checker = _standalone(guessing)
    values = _values_from_assignment(assignment, table, encoding)
    ids = frozenset(table.id(a) for a in unfounded)
    lits = checker.loop_nogood_ints(ids, values)
    if lits is None:
        raise ValueError("unfounded set has no assigned witness under this assignment")
    return table.nogood(lits, Origin.LOOP)
