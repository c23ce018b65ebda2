"""Conflict-driven nogood learning over interned atoms.

The engine works on integer literals (+id for T, -id for F) with atoms
interned densely at load. Propagation is indexed either by two watched
literals per nogood (default; enumeration with full-assignment blocking
nogoods stays cheap) or by satisfied/unassigned counters. Conflicts are
resolved to the first unique implication point at the conflict's own
maximum decision level, which also covers nogoods that arrive mid-search
(external learning, loop nogoods) already violated below the current
level; backjumping removes literals by level, not by trail suffix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .core import Atom, Literal, Nogood, Origin

log = logging.getLogger(__name__)


class AtomTable:
    """Dense integer ids for atoms; selectable atoms come first."""

    def __init__(self) -> None:
        self.atoms: list[Optional[Atom]] = [None]
        self.ids: dict[Atom, int] = {}
        self.selectable_end = 0  # ids 1..selectable_end are decision candidates

    def intern(self, atom: Atom) -> int:
        aid = self.ids.get(atom)
        if aid is None:
            aid = len(self.atoms)
            self.atoms.append(atom)
            self.ids[atom] = aid
        return aid

    def freeze_selectable(self) -> None:
        self.selectable_end = len(self.atoms) - 1

    def atom(self, aid: int) -> Atom:
        return self.atoms[aid]

    def id(self, atom: Atom) -> int:
        return self.ids[atom]

    def lit(self, literal: Literal) -> int:
        aid = self.ids[literal.atom]
        return aid if literal.sign else -aid

    def literal(self, lit: int) -> Literal:
        return Literal(self.atoms[abs(lit)], lit > 0)

    def nogood_ints(self, nogood: Nogood) -> tuple[int, ...]:
        return tuple(sorted(self.lit(l) for l in nogood.literals))

    def nogood(self, lits: Iterable[int], origin: Origin) -> Nogood:
        return Nogood((self.literal(l) for l in lits), origin)

    def __len__(self) -> int:
        return len(self.atoms) - 1


@dataclass
class Stats:
    decisions: int = 0
    propagations: int = 0
    conflicts: int = 0
    external_evaluations: int = 0
    external_calls: int = 0
    ebl_nogoods: int = 0
    loop_nogoods: int = 0
    candidates: int = 0
    rejected: int = 0

    def as_dict(self) -> dict[str, int]:
        return dict(self.__dict__)


class _WatchedIndex:
    """Two watched literals per nogood; nothing to undo on backjump."""

    def __init__(self) -> None:
        self.watches: dict[int, list[int]] = {}
        self.watch_pos: list[list[int]] = []

    def _watch(self, lit: int, ngid: int) -> None:
        self.watches.setdefault(lit, []).append(ngid)

    def attach(self, ngid: int, lits: tuple[int, ...], engine: "Engine") -> Optional[int]:
        """Register a nogood under the current assignment.

        Returns the nogood id if it is violated right now; a unit nogood
        implies immediately. Watches prefer non-holding literals and fall
        back to the highest-level holding ones so they stay valid across
        backjumps.
        """
        while len(self.watch_pos) <= ngid:
            self.watch_pos.append([0, 0])
        values = engine.values
        n = len(lits)
        if n == 0:
            return ngid
        if n == 1:
            lit = lits[0]
            self.watch_pos[ngid] = [0, 0]
            self._watch(lit, ngid)
            v = values[abs(lit)]
            if v == lit:
                return ngid
            if v == 0:
                engine._imply(-lit, ngid)
            return None
        nonholding = [k for k in range(n) if values[abs(lits[k])] != lits[k]]
        levels = engine.levels
        if len(nonholding) >= 2:
            i, j = nonholding[0], nonholding[1]
            self.watch_pos[ngid] = [i, j]
            self._watch(lits[i], ngid)
            self._watch(lits[j], ngid)
            return None
        if len(nonholding) == 1:
            k = nonholding[0]
            other = max(
                (m for m in range(n) if m != k), key=lambda m: levels[abs(lits[m])]
            )
            self.watch_pos[ngid] = [k, other]
            self._watch(lits[k], ngid)
            self._watch(lits[other], ngid)
            if values[abs(lits[k])] == 0:
                engine._imply(-lits[k], ngid)
            return None
        order = sorted(range(n), key=lambda m: levels[abs(lits[m])], reverse=True)
        i, j = order[0], order[1]
        self.watch_pos[ngid] = [i, j]
        self._watch(lits[i], ngid)
        self._watch(lits[j], ngid)
        return ngid

    def on_assign(self, lit: int, engine: "Engine") -> Optional[int]:
        watch_list = self.watches.get(lit)
        if not watch_list:
            return None
        values = engine.values
        nogoods = engine.nogood_lits
        kept: list[int] = []
        conflict: Optional[int] = None
        for idx, ngid in enumerate(watch_list):
            lits = nogoods[ngid]
            pos = self.watch_pos[ngid]
            if lits[pos[0]] == lit:
                slot, other_slot = 0, 1
            else:
                slot, other_slot = 1, 0
            other_pos = pos[other_slot]
            replacement = -1
            for k in range(len(lits)):
                if k == other_pos:
                    continue
                cand = lits[k]
                if values[abs(cand)] != cand:
                    replacement = k
                    break
            if replacement >= 0:
                pos[slot] = replacement
                self._watch(lits[replacement], ngid)
                continue
            kept.append(ngid)
            other = lits[other_pos]
            ov = values[abs(other)]
            if ov == other or other == lit:
                conflict = ngid
                kept.extend(watch_list[idx + 1 :])
                break
            if ov == 0:
                engine._imply(-other, ngid)
        self.watches[lit] = kept
        return conflict

    def on_unassign(self, lit: int, engine: "Engine") -> None:
        pass


class _CounterIndex:
    """Per-nogood counters of holding and unassigned literals."""

    def __init__(self) -> None:
        self.occ: dict[int, list[int]] = {}
        self.sat: list[int] = []
        self.unk: list[int] = []

    def attach(self, ngid: int, lits: tuple[int, ...], engine: "Engine") -> Optional[int]:
        while len(self.sat) <= ngid:
            self.sat.append(0)
            self.unk.append(0)
        values = engine.values
        trail_index = engine.trail_index
        qhead = engine.qhead
        sat = unk = 0
        pending_sat = pending_fals = 0
        for l in lits:
            self.occ.setdefault(l, []).append(ngid)
            a = abs(l)
            v = values[a]
            if v == 0:
                unk += 1
            elif trail_index[a] >= qhead:
                # Enqueued but not yet propagated: on_assign will count it.
                unk += 1
                if v == l:
                    pending_sat += 1
                else:
                    pending_fals += 1
            elif v == l:
                sat += 1
        self.sat[ngid] = sat
        self.unk[ngid] = unk
        n = len(lits)
        # Status checks look through the pending queue so freshly added
        # nogoods behave as if propagation had caught up.
        if sat + pending_sat == n:
            return ngid
        if sat + pending_sat == n - 1 and unk - pending_sat - pending_fals == 1:
            self._imply_remaining(ngid, lits, engine)
        return None

    def _imply_remaining(self, ngid: int, lits: tuple[int, ...], engine: "Engine") -> None:
        values = engine.values
        for l in lits:
            if values[abs(l)] == 0:
                engine._imply(-l, ngid)
                return

    def on_assign(self, lit: int, engine: "Engine") -> Optional[int]:
        nogoods = engine.nogood_lits
        sat, unk = self.sat, self.unk
        conflict: Optional[int] = None
        for ngid in self.occ.get(lit, ()):
            sat[ngid] += 1
            unk[ngid] -= 1
            lits = nogoods[ngid]
            if sat[ngid] == len(lits):
                if conflict is None:
                    conflict = ngid
            elif sat[ngid] == len(lits) - 1 and unk[ngid] == 1:
                self._imply_remaining(ngid, lits, engine)
        for ngid in self.occ.get(-lit, ()):
            unk[ngid] -= 1
        return conflict

    def on_unassign(self, lit: int, engine: "Engine") -> None:
        for ngid in self.occ.get(lit, ()):
            self.sat[ngid] -= 1
            self.unk[ngid] += 1
        for ngid in self.occ.get(-lit, ()):
            self.unk[ngid] += 1


class Engine:
    """Trail, nogood stores and the search loop over one interned program.

    Enumeration is warm: `next_model` resumes from the previous complete
    assignment once new (blocking, rejection, learned) nogoods arrive, so
    repeated models share all propagation work below the flip level.
    """

    def __init__(
        self,
        table: AtomTable,
        propagation: str = "watched",
        heuristic: str = "lex",
    ):
        self.table = table
        n = len(table)
        self.num_atoms = n
        self.values = [0] * (n + 1)
        self.levels = [0] * (n + 1)
        self.reasons: list[Optional[int]] = [None] * (n + 1)
        self.trail: list[int] = []
        self.trail_index = [0] * (n + 1)
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.dl = 0
        self.nogood_lits: list[tuple[int, ...]] = []
        self.origins: list[Origin] = []
        self._dedup: dict[frozenset[int], int] = {}
        if propagation == "watched":
            self.index = _WatchedIndex()
        elif propagation == "counters":
            self.index = _CounterIndex()
        else:
            raise ValueError(f"unknown propagation index {propagation!r}")
        self.heuristic = heuristic
        self.activity = [0.0] * (n + 1)
        self._act_inc = 1.0
        self.pending_conflict: Optional[int] = None
        self.root_conflict = False
        self.stats = Stats()
        self.ebl_hook: Optional[Callable[["Engine"], bool]] = None
        self.foundedness = None  # ufs.FoundednessChecker, attached by the evaluator

    # -- nogood management ---------------------------------------------------

    def add_nogood(self, nogood: Nogood) -> tuple[int, bool]:
        """Intern a nogood; returns (id, freshly-added)."""
        return self.add_ints(self.table.nogood_ints(nogood), nogood.origin)

    def add_ints(self, lits: tuple[int, ...], origin: Origin) -> tuple[int, bool]:
        key = frozenset(lits)
        existing = self._dedup.get(key)
        if existing is not None:
            # A re-learned nogood may be unit or violated right now without a
            # watch trigger pending; restore eagerness explicitly.
            self._recheck(existing)
            return existing, False
        ngid = len(self.nogood_lits)
        self.nogood_lits.append(lits)
        self.origins.append(origin)
        self._dedup[key] = ngid
        conflict = self.index.attach(ngid, lits, self)
        if conflict is not None and self.pending_conflict is None:
            self.pending_conflict = conflict
        return ngid, True

    def nogood(self, ngid: int) -> Nogood:
        return self.table.nogood(self.nogood_lits[ngid], self.origins[ngid])

    def _recheck(self, ngid: int) -> None:
        values = self.values
        unassigned = None
        nonholding = 0
        for l in self.nogood_lits[ngid]:
            v = values[abs(l)]
            if v != l:
                nonholding += 1
                if nonholding > 1:
                    return
                if v == 0:
                    unassigned = l
        if nonholding == 0:
            if self.pending_conflict is None:
                self.pending_conflict = ngid
        elif unassigned is not None:
            self._imply(-unassigned, ngid)

    # -- trail ----------------------------------------------------------------

    def holds(self, lit: int) -> bool:
        return self.values[abs(lit)] == lit

    def _enqueue(self, lit: int, level: int, reason: Optional[int]) -> None:
        a = abs(lit)
        assert self.values[a] == 0, f"atom {self.table.atom(a)} already assigned"
        self.values[a] = lit
        self.levels[a] = level
        self.reasons[a] = reason
        self.trail_index[a] = len(self.trail)
        self.trail.append(lit)

    def _imply(self, lit: int, reason: int) -> None:
        a = abs(lit)
        if self.values[a] == lit:
            return
        level = 0
        for other in self.nogood_lits[reason]:
            if other != -lit:
                lv = self.levels[abs(other)]
                if lv > level:
                    level = lv
        self.stats.propagations += 1
        self._enqueue(lit, level, reason)

    def decide(self, lit: int) -> None:
        self.dl += 1
        self.trail_lim.append(len(self.trail))
        self.stats.decisions += 1
        self._enqueue(lit, self.dl, None)

    def assume(self, literal: Literal) -> None:
        """Guess a core-level literal at a fresh decision level."""
        self.decide(self.table.lit(literal))

    def propagate(self) -> Optional[int]:
        """Unit propagation to fixpoint; returns a violated nogood id."""
        if self.pending_conflict is not None:
            conflict = self.pending_conflict
            self.pending_conflict = None
            return conflict
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            conflict = self.index.on_assign(lit, self)
            if conflict is not None:
                return conflict
        return None

    def backjump(self, level: int) -> None:
        """Remove every literal assigned above the given level."""
        values, levels, reasons = self.values, self.levels, self.reasons
        keep: list[int] = []
        processed = self.qhead
        new_qhead = None
        for idx, lit in enumerate(self.trail):
            a = abs(lit)
            if levels[a] <= level:
                if idx >= processed and new_qhead is None:
                    new_qhead = len(keep)
                keep.append(lit)
            else:
                values[a] = 0
                reasons[a] = None
                if idx < processed:
                    self.index.on_unassign(lit, self)
        self.trail = keep
        for idx, lit in enumerate(keep):
            self.trail_index[abs(lit)] = idx
        self.trail_lim = []
        for idx, lit in enumerate(keep):
            if reasons[abs(lit)] is None and levels[abs(lit)] > 0:
                self.trail_lim.append(idx)
        self.qhead = len(keep) if new_qhead is None else new_qhead
        self.dl = level

    # -- conflict analysis -----------------------------------------------------

    def conflict_level(self, lits: Iterable[int]) -> int:
        return max((self.levels[abs(l)] for l in lits), default=0)

    def analyze(self, conflict_lits: Iterable[int]) -> tuple[tuple[int, ...], int]:
        """Resolve a violated nogood to the first unique implication point.

        Resolution runs at the conflict's maximum decision level: while
        more than one literal of the working nogood sits at that level,
        the most recently assigned one is replaced by the rest of its
        reason. Literals forced at level 0 hold in every model of the
        stores and are dropped from the result. Returns the learned
        nogood and the second-highest level among its literals (0 for
        unit results).
        """
        levels = self.levels
        reasons = self.reasons
        nogoods = self.nogood_lits
        trail = self.trail
        m = max(levels[abs(l)] for l in conflict_lits)
        assert m > 0, "conflicts at level 0 must be handled as unsatisfiable"
        seen = bytearray(self.num_atoms + 1)
        out: list[int] = []
        at_conflict_level = 0
        for l in conflict_lits:
            a = abs(l)
            if seen[a]:
                continue
            seen[a] = 1
            lv = levels[a]
            if lv == m:
                at_conflict_level += 1
            elif lv > 0:
                out.append(l)
        bump = self._bump_activity
        i = len(trail) - 1
        while at_conflict_level > 1:
            while not seen[abs(trail[i])] or levels[abs(trail[i])] != m:
                i -= 1
            sigma = trail[i]
            i -= 1
            a = abs(sigma)
            seen[a] = 0  # resolved away; reason literals take its place
            at_conflict_level -= 1
            reason = reasons[a]
            assert reason is not None, "only the decision can end up last at its level"
            bump(a)
            for x in nogoods[reason]:
                if x == -sigma:
                    continue
                xa = abs(x)
                if seen[xa]:
                    continue
                seen[xa] = 1
                lv = levels[xa]
                if lv == m:
                    at_conflict_level += 1
                elif lv > 0:
                    out.append(x)
        while not seen[abs(trail[i])] or levels[abs(trail[i])] != m:
            i -= 1
        uip = trail[i]
        bump(abs(uip))
        for l in out:
            bump(abs(l))
        self._act_inc /= 0.95
        if self._act_inc > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self._act_inc *= 1e-100
        lits = tuple(sorted(out + [uip]))
        backjump_level = max((levels[abs(l)] for l in out), default=0)
        return lits, backjump_level

    def _bump_activity(self, atom: int) -> None:
        self.activity[atom] += self._act_inc

    # -- heuristics --------------------------------------------------------------

    def select(self) -> int:
        """An unassigned atom with negative sign, per the active heuristic."""
        values = self.values
        end = self.table.selectable_end
        if self.heuristic == "activity":
            best = 0
            best_act = -1.0
            for a in range(1, end + 1):
                if values[a] == 0:
                    act = self.activity[a]
                    if act > best_act:
                        best, best_act = a, act
            if best:
                return -best
        else:
            for a in range(1, end + 1):
                if values[a] == 0:
                    return -a
        for a in range(end + 1, self.num_atoms + 1):  # pragma: no cover - body atoms
            if values[a] == 0:
                return -a
        raise RuntimeError("select called on a complete assignment")

    # -- search --------------------------------------------------------------------

    @property
    def complete(self) -> bool:
        return len(self.trail) == self.num_atoms

    def _handle_conflict(self, lits: tuple[int, ...], store: Optional[Origin] = None) -> bool:
        """Learn from a violated nogood; False when unsatisfiable at the root."""
        if self.conflict_level(lits) == 0:
            log.debug("conflict over root-level literals only; unsatisfiable")
            self.root_conflict = True
            return False
        self.stats.conflicts += 1
        learned, bj = self.analyze(lits)
        self.backjump(bj)
        if store is not None:
            self.add_ints(lits, store)
        self.add_ints(learned, Origin.CONFLICT)
        return True

    def next_model(self) -> Optional[list[int]]:
        """Search for the next complete assignment solving every nogood.

        Runs propagation, conflict learning and backjumping; at complete
        assignments the foundedness checker may veto with a loop nogood,
        otherwise the assignment snapshot is returned. At propagation
        fixpoints the external-learning hook may add nogoods before a
        truth value is guessed.
        """
        if self.root_conflict:
            return None
        while True:
            conflict = self.propagate()
            if conflict is not None:
                if not self._handle_conflict(self.nogood_lits[conflict]):
                    return None
                continue
            if self.complete:
                unfounded_lits = (
                    self.foundedness.complete_check(self) if self.foundedness else None
                )
                if unfounded_lits is not None:
                    self.stats.loop_nogoods += 1
                    if not self._handle_conflict(unfounded_lits, Origin.LOOP):
                        return None
                    continue
                self.stats.candidates += 1
                return list(self.values)
            if self.foundedness is not None:
                unfounded_lits = self.foundedness.partial_check(self)
                if unfounded_lits is not None:
                    self.stats.loop_nogoods += 1
                    if not self._handle_conflict(unfounded_lits, Origin.LOOP):
                        return None
                    continue
            if self.ebl_hook is not None and self.ebl_hook(self):
                continue
            self.decide(self.select())

    # -- views ------------------------------------------------------------------

    def assignment_literals(self) -> list[Literal]:
        return [self.table.literal(l) for l in self.trail]

    def true_atoms(self) -> set[Atom]:
        return {self.table.atom(abs(l)) for l in self.trail if l > 0}
