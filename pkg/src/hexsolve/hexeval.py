"""Outer solve driver: enumerate compatible sets, verify against oracles,
accumulate learned nogoods, and return subset-minimal answer sets.

Candidates come from the conflict-driven engine over the guessing
program. Every complete candidate is checked against the external
sources; learned input/output nogoods are added either way, mismatching
candidates additionally leave their full assignment behind as a
rejection nogood, and accepted ones are blocked the same way so
enumeration never repeats a compatible set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from . import external as ext
from .cdnl import AtomTable, Engine, Stats
from .core import Assignment, Atom, Literal, Nogood, Origin
from .program import GuessingProgram, encode, ground, parse, to_guessing
from .ufs import build_checker

log = logging.getLogger(__name__)

EBL_MODES = ("off", "general", "informed", "user")
EVAL_POLICIES = ("fixpoint", "never")


@dataclass
class SolveOptions:
    ebl: str = "informed"
    enum: "str | int" = "all"  # "all", "first", or a positive bound
    heuristic: str = "lex"  # "lex" or "activity"
    seed: int = 0  # reserved for randomized heuristics; solving is deterministic
    propagation: str = "watched"  # or "counters"
    eval_policy: str = "fixpoint"  # evaluate at fixpoints; "never" guesses blindly
    validate_user_nogoods: bool = False  # record-only audit of user learning
    property_overrides: Mapping[tuple[str, tuple[str, ...]], dict] = field(
        default_factory=dict
    )

    @property
    def bound(self) -> Optional[int]:
        if self.enum == "all":
            return None
        if self.enum == "first":
            return 1
        bound = int(self.enum)
        if bound < 1:
            raise ValueError("enumeration bound must be at least 1")
        return bound

    def __post_init__(self) -> None:
        if self.ebl not in EBL_MODES:
            raise ValueError(f"unknown EBL mode {self.ebl!r}")
        if self.heuristic not in ("lex", "activity"):
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if self.eval_policy not in EVAL_POLICIES:
            raise ValueError(f"unknown evaluation policy {self.eval_policy!r}")
        self.bound  # validate eagerly


@dataclass
class CompatibleSet:
    """A checked full assignment plus its projection to true original atoms."""

    values: list[int]
    projection: frozenset[Atom]

    def literals(self, table: AtomTable) -> frozenset[Literal]:
        return frozenset(table.literal(v) for v in self.values[1:])


@dataclass
class SolveResult:
    answer_sets: list[frozenset[Atom]]
    compatible_sets: list[CompatibleSet]
    stats: Stats

    @property
    def answer_set_strings(self) -> list[list[str]]:
        return [[str(a) for a in sorted(s)] for s in self.answer_sets]


@dataclass
class _Group:
    """One external predicate with ground input list and its guessed outputs."""

    source: ext.ExternalSource
    terms: tuple[str, ...]
    outputs: list[tuple[tuple[str, ...], int]]  # (output tuple, e-atom id)
    input_atom_ids: tuple[int, ...]

    @property
    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.source.name, self.terms)


class Evaluator:
    """Solver state for one program: engine, external groups and caches."""

    def __init__(
        self,
        guessing: GuessingProgram,
        registry: Mapping[str, ext.ExternalSource],
        options: Optional[SolveOptions] = None,
    ):
        self.options = options or SolveOptions()
        self.guessing = guessing
        self.registry = registry

        self.table = AtomTable()
        for atom in guessing.atoms:
            self.table.intern(atom)
        self.table.freeze_selectable()
        self.encoding = encode(guessing)
        for atom in self.encoding.body_table.atoms:
            self.table.intern(atom)

        self.engine = Engine(
            self.table,
            propagation=self.options.propagation,
            heuristic=self.options.heuristic,
        )
        for nogood in self.encoding.nogoods:
            self.engine.add_nogood(nogood)
        self.engine.foundedness = build_checker(guessing, self.table, self.encoding)

        self.groups = self._build_groups()
        self.cache = ext.EvaluationCache()
        self.functional_memory: dict[tuple, set[tuple[str, ...]]] = {
            g.key: set() for g in self.groups
        }
        self.user_audit: list[Nogood] = []
        self.emitted: list[Nogood] = []

        if self.options.ebl != "off" and self.options.eval_policy == "fixpoint":
            self.engine.ebl_hook = self._fixpoint_hook

        self.original_ids = sorted(
            self.table.id(a) for a in guessing.original_atoms
        )

    @property
    def stats(self) -> Stats:
        return self.engine.stats

    def _build_groups(self) -> list[_Group]:
        by_key: dict[tuple, _Group] = {}
        pred_atoms: dict[str, list[int]] = {}
        for atom in self.guessing.atoms:
            pred_atoms.setdefault(atom.predicate, []).append(self.table.id(atom))
        for expr, (e_atom, _) in self.guessing.replacement.items():
            source = self.registry[expr.name]
            override = self.options.property_overrides.get((expr.name, expr.inputs))
            if override:
                source = source.with_properties(**override)
            key = (expr.name, expr.inputs)
            group = by_key.get(key)
            if group is None:
                preds = [
                    t
                    for t, k in zip(expr.inputs, source.input_signature)
                    if k is ext.PRED
                ]
                input_ids = sorted(
                    {aid for p in preds for aid in pred_atoms.get(p, [])}
                )
                group = _Group(source, expr.inputs, [], tuple(input_ids))
                by_key[key] = group
            group.outputs.append((expr.outputs, self.table.id(e_atom)))
        for group in by_key.values():
            group.outputs.sort()
        return list(by_key.values())

    # -- oracle plumbing -------------------------------------------------------

    def _source_input(self, group: _Group, values: Sequence[int]) -> ext.SourceInput:
        literals = tuple(
            sorted(
                (
                    Literal(self.table.atom(aid), values[aid] > 0)
                    for aid in group.input_atom_ids
                ),
                key=lambda l: (l.atom, l.sign),
            )
        )
        return ext.SourceInput(
            group.source.name, group.terms, group.source.input_signature, literals
        )

    def _e_namer(self, group: _Group):
        atoms = {out: self.table.atom(aid) for out, aid in group.outputs}
        return atoms.get

    def _learn(self, group: _Group, inp: ext.SourceInput, outputs) -> list[Nogood]:
        mode = self.options.ebl
        if mode == "off":
            return []
        source = group.source
        e_atom = self._e_namer(group)
        nogoods: list[Nogood] = []
        if mode == "general":
            nogoods.extend(ext.learn_general(inp, outputs, e_atom))
        else:
            if mode == "user" and source.learn is not None:
                nogoods.extend(ext.user_learn(source, inp, outputs, e_atom))
            elif source.monotonic:
                nogoods.extend(ext.learn_monotonic(source, inp, outputs, e_atom))
            else:
                nogoods.extend(ext.learn_general(inp, outputs, e_atom))
            if source.functional:
                memory = self.functional_memory[group.key]
                for out in sorted(outputs):
                    if out not in memory:
                        nogoods.extend(ext.learn_functional(out, memory, e_atom))
                        memory.add(out)
        return nogoods

    def _absorb(self, nogoods: Iterable[Nogood]) -> int:
        """Feed learned nogoods to the engine; user audit mode only records."""
        fresh = 0
        for nogood in nogoods:
            self.emitted.append(nogood)
            if self.options.validate_user_nogoods and nogood.origin is Origin.EBL_USER:
                self.user_audit.append(nogood)
                continue
            try:
                _, added = self.engine.add_nogood(nogood)
            except KeyError as exc:
                raise ext.PluginError(
                    f"learned nogood mentions unknown atom: {exc}"
                ) from exc
            if added:
                fresh += 1
        self.stats.ebl_nogoods += fresh
        return fresh

    def _evaluate_group(self, group: _Group, values: Sequence[int]):
        inp = self._source_input(group, values)
        entry, oracle_called = self.cache.lookup(group.source, inp)
        if oracle_called:
            self.stats.external_evaluations += 1
            learned = self._learn(group, inp, entry.outputs)
            entry.nogoods.extend(learned)
            self._absorb(learned)
        self.stats.external_calls += len(group.outputs)
        return entry

    def _fixpoint_hook(self, engine: Engine) -> bool:
        """Evaluate sources whose full input restriction is assigned and
        whose input signature has not been seen; new nogoods feed back into
        propagation before any truth value is guessed."""
        values = engine.values
        evaluated = False
        for group in self.groups:
            if any(values[aid] == 0 for aid in group.input_atom_ids):
                continue
            inp = self._source_input(group, values)
            if self.cache.get(inp) is not None:
                continue
            self._evaluate_group(group, values)
            evaluated = True
        return evaluated

    # -- compatibility ---------------------------------------------------------

    def check_candidate(self, values: Sequence[int]) -> bool:
        """Compare oracle truth against every replacement-atom guess.

        Learned nogoods are added regardless of the outcome; an
        incompatible candidate is also blocked wholesale by its own
        assignment.
        """
        compatible = True
        for group in self.groups:
            entry = self._evaluate_group(group, values)
            for out, e_aid in group.outputs:
                guessed = values[e_aid] == e_aid
                actual = out in entry.outputs
                if guessed != actual:
                    compatible = False
        if not compatible:
            self.engine.add_ints(
                tuple(values[1:]), Origin.COMPATIBILITY_REJECT
            )
        return compatible

    def _audit_compatible(self, compat: CompatibleSet) -> None:
        lits = compat.literals(self.table)
        for nogood in self.user_audit:
            if nogood.literals <= lits:
                raise ext.PluginError(
                    f"user-defined nogood {nogood} eliminates a verified "
                    "compatible set; the learning hook is incorrect"
                )

    # -- enumeration -------------------------------------------------------------

    def _projection(self, values: Sequence[int]) -> frozenset[Atom]:
        return frozenset(
            self.table.atom(aid) for aid in self.original_ids if values[aid] > 0
        )

    def enumerate_compatible_sets(self) -> list[CompatibleSet]:
        """All compatible sets (up to the enumeration bound), each blocked by
        its full assignment so it cannot be produced twice."""
        bound = self.options.bound
        found: list[CompatibleSet] = []
        while bound is None or len(found) < bound:
            values = self.engine.next_model()
            if values is None:
                break
            if self.check_candidate(values):
                compat = CompatibleSet(values, self._projection(values))
                if self.user_audit:
                    self._audit_compatible(compat)
                found.append(compat)
                self.engine.add_ints(tuple(values[1:]), Origin.ENUM_BLOCK)
                log.debug("candidate %d accepted", self.stats.candidates)
            else:
                self.stats.rejected += 1
                log.debug("candidate %d rejected", self.stats.candidates)
        return found

    def solve(self) -> SolveResult:
        compatible = self.enumerate_compatible_sets()
        answers = minimal_answer_sets(compatible)
        return SolveResult(answers, compatible, self.stats)


def minimal_answer_sets(compatible: Iterable[CompatibleSet]) -> list[frozenset[Atom]]:
    """Deduplicated, subset-minimal projections in a deterministic order."""
    projections: list[frozenset[Atom]] = []
    for c in compatible:
        projection = c.projection if isinstance(c, CompatibleSet) else frozenset(c)
        if projection not in projections:
            projections.append(projection)
    minimal = [
        p for p in projections if not any(q < p for q in projections)
    ]
    return sorted(minimal, key=lambda s: tuple(sorted(s)))


def build_evaluator(
    text: str,
    options: Optional[SolveOptions] = None,
    registry: Optional[Mapping[str, ext.ExternalSource]] = None,
) -> Evaluator:
    registry = registry if registry is not None else ext.builtin_registry()
    program = parse(text, registry)
    guessing = to_guessing(ground(program))
    return Evaluator(guessing, registry, options)


def solve(
    text: str,
    options: Optional[SolveOptions] = None,
    registry: Optional[Mapping[str, ext.ExternalSource]] = None,
) -> SolveResult:
    """Parse, ground, rewrite and solve a program given as text."""
    return build_evaluator(text, options, registry).solve()


def compatibility_check(
    guessing: GuessingProgram,
    assignment: "Assignment | Iterable[Literal]",
    registry: Optional[Mapping[str, ext.ExternalSource]] = None,
    options: Optional[SolveOptions] = None,
) -> tuple[bool, list[Nogood]]:
    """Check one complete assignment against the sources.

    Returns whether every guess agrees with the oracles, together with
    the nogoods learned from the evaluation (including, on mismatch, the
    full assignment as a rejection nogood).
    """
    registry = registry if registry is not None else ext.builtin_registry()
    options = options or SolveOptions(ebl="general")
    evaluator = Evaluator(guessing, registry, options)
    lits = assignment.literals if isinstance(assignment, Assignment) else frozenset(assignment)
    values = list(evaluator.engine.values)
    for lit in lits:
        aid = evaluator.table.ids.get(lit.atom)
        if aid is not None:
            values[aid] = aid if lit.sign else -aid
    for aid in range(1, len(evaluator.table) + 1):
        if values[aid] == 0 and not evaluator.table.atom(aid).predicate.startswith("__body"):
            raise ValueError(f"assignment misses atom {evaluator.table.atom(aid)}")
    _complete_body_atoms(evaluator, values)
    before = len(evaluator.emitted)
    compatible = evaluator.check_candidate(values)
    learned = list(evaluator.emitted[before:])
    if not compatible:
        learned.append(
            evaluator.table.nogood(tuple(values[1:]), Origin.COMPATIBILITY_REJECT)
        )
    return compatible, learned


def _complete_body_atoms(evaluator: Evaluator, values: list[int]) -> None:
    table = evaluator.table
    for body, atom in evaluator.encoding.body_table.items():
        aid = table.id(atom)
        if values[aid] == 0:
            satisfied = all(values[table.id(l.atom)] == table.lit(l) for l in body)
            values[aid] = aid if satisfied else -aid
