"""External source plugins: oracles, evaluation caching and behavior learning.

A source is registered with a name, an input signature (predicate and
constant positions), an output arity, an oracle over the assigned input
restriction, and optional properties. Declared properties feed the
informed learning functions; a user hook can replace the default
input/output nogoods with source-specific ones.

Built-ins: diff, empty, concat, union, tc, sudokuCheck.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Optional

from .core import Atom, Literal, Nogood, Origin, restrict

log = logging.getLogger(__name__)


class PluginError(Exception):
    """An external source misbehaved: oracle failure or contract violation."""


class InputKind(enum.Enum):
    PREDICATE = "predicate"
    CONSTANT = "constant"


PRED = InputKind.PREDICATE
CONST = InputKind.CONSTANT


@dataclass
class SourceInput:
    """The ground input list of one external atom family under an assignment.

    Oracles and user learning hooks see the input restriction (both
    polarities over the input predicates) plus per-position extensions.
    """

    name: str
    terms: tuple[str, ...]
    kinds: tuple[InputKind, ...]
    literals: tuple[Literal, ...]

    def extension(self, position: int) -> frozenset[tuple[str, ...]]:
        if self.kinds[position] is not PRED:
            raise PluginError(f"&{self.name} input {position} is not a predicate")
        pred = self.terms[position]
        return frozenset(
            l.atom.args for l in self.literals if l.sign and l.atom.predicate == pred
        )

    def constant(self, position: int) -> str:
        if self.kinds[position] is not CONST:
            raise PluginError(f"&{self.name} input {position} is not a constant")
        return self.terms[position]


Oracle = Callable[[SourceInput], Iterable[tuple[str, ...]]]
ENamer = Callable[[tuple[str, ...]], Optional[Atom]]
LearnHook = Callable[[SourceInput, frozenset[tuple[str, ...]], ENamer], Iterable[Nogood]]


@dataclass
class ExternalSource:
    """Descriptor of one external predicate."""

    name: str
    input_signature: tuple[InputKind, ...]
    output_arity: int
    oracle: Oracle
    monotonic: frozenset[int] = frozenset()
    functional: bool = False
    learn: Optional[LearnHook] = None

    def __post_init__(self) -> None:
        for pos in self.monotonic:
            if pos >= len(self.input_signature) or self.input_signature[pos] is not PRED:
                raise ValueError(f"&{self.name}: monotonic position {pos} is not a predicate input")

    def with_properties(
        self, monotonic: Optional[Iterable[int]] = None, functional: Optional[bool] = None
    ) -> "ExternalSource":
        """Per-usage property override; unset fields keep the registered value."""
        return replace(
            self,
            monotonic=self.monotonic if monotonic is None else frozenset(monotonic),
            functional=self.functional if functional is None else functional,
        )


class Registry(dict):
    """Name-indexed external sources."""

    def register(
        self,
        name: str,
        input_signature: Iterable[InputKind],
        output_arity: int,
        oracle: Oracle,
        monotonic: Iterable[int] = (),
        functional: bool = False,
        learn: Optional[LearnHook] = None,
    ) -> ExternalSource:
        source = ExternalSource(
            name, tuple(input_signature), output_arity, oracle, frozenset(monotonic), functional, learn
        )
        self[name] = source
        return source


def evaluate(
    source: ExternalSource, assignment, inputs: Iterable[str]
) -> frozenset[tuple[str, ...]]:
    """Run a source oracle on the input restriction drawn from an assignment."""
    inp = make_source_input(source, assignment, tuple(inputs))
    return call_oracle(source, inp)


def make_source_input(source: ExternalSource, assignment, inputs: tuple[str, ...]) -> SourceInput:
    preds = [t for t, k in zip(inputs, source.input_signature) if k is PRED]
    lits = tuple(sorted(restrict(assignment, preds), key=lambda l: (l.atom, l.sign)))
    return SourceInput(source.name, inputs, source.input_signature, lits)


def call_oracle(source: ExternalSource, inp: SourceInput) -> frozenset[tuple[str, ...]]:
    try:
        raw = source.oracle(inp)
    except PluginError:
        raise
    except Exception as exc:
        raise PluginError(f"&{source.name} oracle failed: {exc}") from exc
    out = frozenset(tuple(t) for t in raw)
    for tup in out:
        if len(tup) != source.output_arity:
            raise PluginError(
                f"&{source.name} returned tuple of arity {len(tup)}, expected {source.output_arity}"
            )
    if source.functional and len(out) > 1:
        raise PluginError(f"&{source.name} is declared functional but returned {len(out)} tuples")
    return out


# ---------------------------------------------------------------------------
# Learning functions


def learn_general(
    inp: SourceInput, outputs: Iterable[tuple[str, ...]], e_atom: ENamer
) -> list[Nogood]:
    """Uninformed learning: the full input restriction forbids a false guess
    for every produced output tuple."""
    nogoods = []
    for out in sorted(outputs):
        atom = e_atom(out)
        if atom is None:
            continue
        ng = Nogood.make(set(inp.literals) | {Literal.F(atom)}, Origin.EBL_GENERAL)
        if ng is not None:
            nogoods.append(ng)
    return nogoods


def learn_monotonic(
    source: ExternalSource,
    inp: SourceInput,
    outputs: Iterable[tuple[str, ...]],
    e_atom: ENamer,
) -> list[Nogood]:
    """Monotonicity-aware learning: false literals of monotonic parameters
    cannot shrink the output, so they are dropped from the nogood."""
    mono_preds = {inp.terms[i] for i in source.monotonic}
    nonmono_preds = {
        t for i, (t, k) in enumerate(zip(inp.terms, inp.kinds)) if k is PRED and i not in source.monotonic
    }
    kept = tuple(
        l
        for l in inp.literals
        if l.atom.predicate in nonmono_preds or (l.atom.predicate in mono_preds and l.sign)
    )
    nogoods = []
    for out in sorted(outputs):
        atom = e_atom(out)
        if atom is None:
            continue
        ng = Nogood.make(set(kept) | {Literal.F(atom)}, Origin.EBL_MONOTONIC)
        if ng is not None:
            nogoods.append(ng)
    return nogoods


def learn_functional(
    new_output: tuple[str, ...],
    prior_outputs: Iterable[tuple[str, ...]],
    e_atom: ENamer,
) -> list[Nogood]:
    """Pair a newly observed output tuple against previously observed ones:
    a functional source never admits two true output guesses."""
    new_atom = e_atom(new_output)
    if new_atom is None:
        return []
    nogoods = []
    for prior in sorted(prior_outputs):
        if prior == new_output:
            continue
        prior_atom = e_atom(prior)
        if prior_atom is None:
            continue
        ng = Nogood.make(
            {Literal.T(prior_atom), Literal.T(new_atom)}, Origin.EBL_FUNCTIONAL
        )
        if ng is not None:
            nogoods.append(ng)
    return nogoods


def user_learn(
    source: ExternalSource,
    inp: SourceInput,
    outputs: frozenset[tuple[str, ...]],
    e_atom: ENamer,
) -> list[Nogood]:
    """Run the source's learning hook, normalizing its output."""
    if source.learn is None:
        return []
    try:
        raw = list(source.learn(inp, outputs, e_atom))
    except PluginError:
        raise
    except Exception as exc:
        raise PluginError(f"&{source.name} user learning failed: {exc}") from exc
    out = []
    for ng in raw:
        if not isinstance(ng, Nogood):
            raise PluginError(f"&{source.name} user learning returned {type(ng).__name__}")
        ng = Nogood.make(ng.literals, Origin.EBL_USER)
        if ng is not None:
            out.append(ng)
    return out


# ---------------------------------------------------------------------------
# Evaluation cache


@dataclass
class CacheEntry:
    outputs: frozenset[tuple[str, ...]]
    nogoods: list[Nogood] = field(default_factory=list)


class EvaluationCache:
    """Memoizes oracle calls per (source, inputs, canonical input restriction).

    A hit bypasses the oracle; with verification enabled the oracle is
    re-run and compared, surfacing nondeterministic plugins.
    """

    def __init__(self, verify: bool = False):
        self._entries: dict[tuple, CacheEntry] = {}
        self.verify = verify
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(inp: SourceInput) -> tuple:
        return (inp.name, inp.terms, inp.literals)

    def get(self, inp: SourceInput) -> Optional[CacheEntry]:
        return self._entries.get(self.key(inp))

    def lookup(self, source: ExternalSource, inp: SourceInput) -> tuple[CacheEntry, bool]:
        """Return the cache entry for an input, calling the oracle on a miss."""
        key = self.key(inp)
        entry = self._entries.get(key)
        if entry is not None:
            self.hits += 1
            if self.verify:
                again = call_oracle(source, inp)
                if again != entry.outputs:
                    raise PluginError(
                        f"&{source.name} is nondeterministic: {sorted(entry.outputs)} "
                        f"then {sorted(again)} for identical input"
                    )
            return entry, False
        self.misses += 1
        log.debug("oracle call &%s[%s]", source.name, ",".join(inp.terms))
        entry = CacheEntry(call_oracle(source, inp))
        self._entries[key] = entry
        return entry, True

    def __len__(self) -> int:
        return len(self._entries)

    def items(self) -> list[tuple[tuple, CacheEntry]]:
        return list(self._entries.items())

    @property
    def entries(self) -> list[CacheEntry]:
        return list(self._entries.values())


# ---------------------------------------------------------------------------
# Built-in sources


def _diff_oracle(inp: SourceInput):
    return inp.extension(0) - inp.extension(1)


def _diff_learn(inp: SourceInput, outputs, e_atom: ENamer):
    """Elementwise learning for diff: membership in the first extension and
    absence from the second pins the output element, whatever the rest of
    the input looks like."""
    left, right = inp.terms[0], inp.terms[1]
    right_true = inp.extension(1)
    right_atoms = {l.atom.args: l.atom for l in inp.literals if l.atom.predicate == right}
    nogoods = []
    for args in sorted(inp.extension(0)):
        if args in right_true:
            continue
        atom = e_atom(args)
        if atom is None:
            continue
        lits = {Literal.T(Atom(left, args)), Literal.F(atom)}
        if args in right_atoms:
            lits.add(Literal.F(right_atoms[args]))
        ng = Nogood.make(lits, Origin.EBL_USER)
        if ng is not None:
            nogoods.append(ng)
    return nogoods


def _empty_oracle(inp: SourceInput):
    return {("c0",)} if not inp.extension(0) else {("c1",)}


def _concat_oracle(inp: SourceInput):
    return {(inp.constant(0) + inp.constant(1),)}


def _union_oracle(inp: SourceInput):
    return inp.extension(0) | inp.extension(1)


def _closure(edges: frozenset[tuple[str, ...]]) -> set[tuple[str, str]]:
    closed = {(a, b) for a, b in edges}
    changed = True
    while changed:
        changed = False
        for a, b in list(closed):
            for c, d in list(closed):
                if b == c and (a, d) not in closed:
                    closed.add((a, d))
                    changed = True
    return closed


def _tc_oracle(inp: SourceInput):
    edges = inp.extension(0)
    return _closure(edges) - {(a, b) for a, b in edges}


def _tc_learn(inp: SourceInput, outputs, e_atom: ENamer):
    """For each missing transitive edge, blame a concrete path: the selected
    edges along it plus the absent direct edge explain the conflict."""
    pred = inp.terms[0]
    edges = {(a, b) for a, b in inp.extension(0)}
    succ: dict[str, list[str]] = {}
    for a, b in sorted(edges):
        succ.setdefault(a, []).append(b)
    false_edges = {
        l.atom.args for l in inp.literals if not l.sign and l.atom.predicate == pred
    }
    nogoods = []
    for out in sorted(outputs):
        v, w = out
        atom = e_atom(out)
        if atom is None:
            continue
        path = _shortest_path(succ, v, w)
        if path is None:
            continue
        lits = {Literal.T(Atom(pred, (a, b))) for a, b in zip(path, path[1:])}
        if (v, w) in false_edges:
            lits.add(Literal.F(Atom(pred, (v, w))))
        lits.add(Literal.F(atom))
        ng = Nogood.make(lits, Origin.EBL_USER)
        if ng is not None:
            nogoods.append(ng)
    return nogoods


def _shortest_path(succ: Mapping[str, list[str]], start: str, goal: str) -> Optional[list[str]]:
    from collections import deque

    queue = deque([[start]])
    seen = {start}
    while queue:
        path = queue.popleft()
        for nxt in succ.get(path[-1], []):
            if nxt == goal:
                return path + [nxt]
            if nxt not in seen:
                seen.add(nxt)
                queue.append(path + [nxt])
    return None


def _sudoku_groups(r1: str, c1: str, r2: str, c2: str, block: int) -> bool:
    if (r1, c1) == (r2, c2):
        return False
    if r1 == r2 or c1 == c2:
        return True
    br1, bc1 = (int(r1) - 1) // block, (int(c1) - 1) // block
    br2, bc2 = (int(r2) - 1) // block, (int(c2) - 1) // block
    return (br1, bc1) == (br2, bc2)


def _sudoku_oracle(inp: SourceInput):
    cells = inp.extension(0)
    # 4x4 boards use 2x2 blocks, 9x9 boards 3x3; infer from the coordinates
    dims = {r for r, _, _ in cells} | {c for _, c, _ in cells}
    block = 3 if any(int(d) > 4 for d in dims) else 2
    by_digit: dict[str, list[tuple[str, str]]] = {}
    for r, c, d in sorted(cells):
        by_digit.setdefault(d, []).append((r, c))
    conflicts = set()
    for d, coords in by_digit.items():
        for i, (r1, c1) in enumerate(coords):
            for r2, c2 in coords[i + 1 :]:
                if _sudoku_groups(r1, c1, r2, c2, block):
                    conflicts.add((r1, c1, r2, c2))
                    conflicts.add((r2, c2, r1, c1))
    return conflicts


def _sudoku_learn(inp: SourceInput, outputs, e_atom: ENamer):
    """Blame exactly the two clashing cell assignments for each conflict."""
    pred = inp.terms[0]
    by_cell: dict[tuple[str, str], list[str]] = {}
    for r, c, d in inp.extension(0):
        by_cell.setdefault((r, c), []).append(d)
    nogoods = []
    for r1, c1, r2, c2 in sorted(outputs):
        shared = sorted(set(by_cell.get((r1, c1), ())) & set(by_cell.get((r2, c2), ())))
        for d in shared:
            ng = Nogood.make(
                {Literal.T(Atom(pred, (r1, c1, d))), Literal.T(Atom(pred, (r2, c2, d)))},
                Origin.EBL_USER,
            )
            if ng is not None:
                nogoods.append(ng)
    return nogoods


def builtin_registry() -> Registry:
    """A fresh registry holding the shipped sources."""
    reg = Registry()
    reg.register("diff", (PRED, PRED), 1, _diff_oracle, monotonic=(0,), learn=_diff_learn)
    reg.register("empty", (PRED,), 1, _empty_oracle, functional=True)
    reg.register("concat", (CONST, CONST), 1, _concat_oracle, functional=True)
    reg.register("union", (PRED, PRED), 1, _union_oracle, monotonic=(0, 1))
    reg.register("tc", (PRED,), 2, _tc_oracle, learn=_tc_learn)
    reg.register("sudokuCheck", (PRED,), 4, _sudoku_oracle, learn=_sudoku_learn)
    return reg
