"""Surface language parsing, grounding, guessing rewrite and static nogoods.

The surface language:

    p(c).                                   % fact
    h1 v h2 :- b1, not b2, &g[p,q](X).      % rule ("v" or "|" for disjunction)
    :- sel(X), sel(Y), X != Y.              % constraint with builtins
    % comments run to end of line

Identifiers are lowercase (or integers), variables uppercase. External
atoms &name[inputs](outputs) are checked against the registered source
signatures at parse time. After grounding, every external atom is
replaced by an ordinary replacement-atom pair with a disjunctive
guessing rule, and the resulting ordinary program is encoded as
nogoods: Clark's completion plus shifted-program support nogoods.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .core import Atom, Literal, Nogood, Origin

log = logging.getLogger(__name__)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})" if line else message)
        self.message = message
        self.line = line
        self.column = column


class GroundingError(Exception):
    pass


def is_variable(term: str) -> bool:
    return bool(term) and (term[0].isupper() or term[0] == "_")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class ExternalAtomExpr:
    """&name[inputs](outputs); inputs mix predicate names and constant terms.

    pred_inputs marks the predicate-name positions of the input list, as
    declared by the registered source; those names never join the
    Herbrand constants.
    """

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    pred_inputs: tuple[bool, ...] = ()

    def input_is_predicate(self, position: int) -> bool:
        return bool(self.pred_inputs) and self.pred_inputs[position]

    def __str__(self) -> str:
        out = f"({','.join(self.outputs)})" if self.outputs else ""
        return f"&{self.name}[{','.join(self.inputs)}]{out}"

    __repr__ = __str__


@dataclass(frozen=True)
class BodyAtom:
    atom: Atom
    negated: bool = False


@dataclass(frozen=True)
class BodyExternal:
    expr: ExternalAtomExpr
    negated: bool = False


@dataclass(frozen=True)
class Builtin:
    op: str  # "=" or "!="
    left: str
    right: str

    def holds(self) -> bool:
        return (self.left == self.right) == (self.op == "=")


BodyElement = "BodyAtom | BodyExternal | Builtin"


@dataclass(frozen=True)
class Rule:
    head: tuple[Atom, ...]
    body: tuple = ()

    @property
    def is_fact(self) -> bool:
        return not self.body and len(self.head) == 1

    @property
    def ordinary_positive(self) -> tuple[Atom, ...]:
        return tuple(e.atom for e in self.body if isinstance(e, BodyAtom) and not e.negated)


@dataclass
class Program:
    rules: list[Rule] = field(default_factory=list)

    @property
    def constants(self) -> list[str]:
        seen: set[str] = set()
        for rule in self.rules:
            for atom in rule.head:
                seen.update(t for t in atom.args if not is_variable(t))
            for elem in rule.body:
                if isinstance(elem, BodyAtom):
                    seen.update(t for t in elem.atom.args if not is_variable(t))
                elif isinstance(elem, BodyExternal):
                    seen.update(
                        t
                        for i, t in enumerate(elem.expr.inputs)
                        if not elem.expr.input_is_predicate(i) and not is_variable(t)
                    )
                    seen.update(t for t in elem.expr.outputs if not is_variable(t))
                elif isinstance(elem, Builtin):
                    seen.update(t for t in (elem.left, elem.right) if not is_variable(t))
        return sorted(seen)


# ---------------------------------------------------------------------------
# Tokenizer / parser

_PUNCT = {
    ":-": "IMPLIES",
    "!=": "NEQ",
    "=": "EQ",
    "(": "LPAREN",
    ")": "RPAREN",
    "[": "LBRACK",
    "]": "RBRACK",
    ",": "COMMA",
    ".": "DOT",
    "|": "BAR",
    "&": "AMP",
}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "%":
            while i < n and text[i] != "\n":
                i += 1
            continue
        two = text[i : i + 2]
        if two in (":-", "!="):
            tokens.append(_Token(_PUNCT[two], two, line, col))
            i += 2
            col += 2
            continue
        if ch in _PUNCT:
            tokens.append(_Token(_PUNCT[ch], ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isalpha() or ch == "_" or ch.isdigit():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = "NOT" if word == "not" else "IDENT"
            tokens.append(_Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], registry: Optional[Mapping] = None):
        self.tokens = tokens
        self.pos = 0
        self.registry = registry or {}

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.text!r}", tok.line, tok.column)
        return self.next()

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.column)

    def parse_program(self) -> Program:
        rules = []
        while self.peek().kind != "EOF":
            rules.append(self.parse_statement())
        return Program(rules)

    def parse_statement(self) -> Rule:
        head: tuple[Atom, ...] = ()
        if self.peek().kind != "IMPLIES":
            head = self.parse_head()
        body: tuple = ()
        if self.peek().kind == "IMPLIES":
            self.next()
            body = self.parse_body()
        self.expect("DOT")
        return Rule(head, body)

    def parse_head(self) -> tuple[Atom, ...]:
        atoms = [self.parse_atom()]
        while True:
            tok = self.peek()
            if tok.kind == "BAR" or (tok.kind == "IDENT" and tok.text == "v"):
                self.next()
                atoms.append(self.parse_atom())
            else:
                break
        return tuple(atoms)

    def parse_body(self) -> tuple:
        elems = [self.parse_body_element()]
        while self.peek().kind == "COMMA":
            self.next()
            elems.append(self.parse_body_element())
        return tuple(elems)

    def parse_body_element(self):
        negated = False
        if self.peek().kind == "NOT":
            self.next()
            negated = True
        tok = self.peek()
        if tok.kind == "AMP":
            return BodyExternal(self.parse_external(), negated)
        if tok.kind != "IDENT":
            raise self.error(f"expected atom, found {tok.text!r}")
        # builtin comparison: term (=|!=) term
        if not negated and self.tokens[self.pos + 1].kind in ("EQ", "NEQ"):
            left = self.next().text
            op = "=" if self.next().kind == "EQ" else "!="
            right_tok = self.expect("IDENT")
            return Builtin(op, left, right_tok.text)
        if negated and self.tokens[self.pos + 1].kind in ("EQ", "NEQ"):
            raise self.error("'not' cannot be applied to a builtin")
        return BodyAtom(self.parse_atom(), negated)

    def parse_atom(self) -> Atom:
        tok = self.expect("IDENT")
        if is_variable(tok.text):
            raise ParseError(f"predicate name {tok.text!r} must be lowercase", tok.line, tok.column)
        args: tuple[str, ...] = ()
        if self.peek().kind == "LPAREN":
            self.next()
            args = self.parse_terms()
            self.expect("RPAREN")
        return Atom(tok.text, args)

    def parse_terms(self) -> tuple[str, ...]:
        terms = [self.expect("IDENT").text]
        while self.peek().kind == "COMMA":
            self.next()
            terms.append(self.expect("IDENT").text)
        return tuple(terms)

    def parse_external(self) -> ExternalAtomExpr:
        amp = self.expect("AMP")
        name_tok = self.expect("IDENT")
        name = name_tok.text
        self.expect("LBRACK")
        inputs: tuple[str, ...] = ()
        if self.peek().kind != "RBRACK":
            inputs = self.parse_terms()
        self.expect("RBRACK")
        outputs: tuple[str, ...] = ()
        if self.peek().kind == "LPAREN":
            self.next()
            if self.peek().kind != "RPAREN":
                outputs = self.parse_terms()
            self.expect("RPAREN")
        source = self.registry.get(name)
        if source is None:
            raise ParseError(f"unknown external predicate &{name}", name_tok.line, name_tok.column)
        if len(inputs) != len(source.input_signature):
            raise ParseError(
                f"&{name} expects {len(source.input_signature)} inputs, got {len(inputs)}",
                name_tok.line,
                name_tok.column,
            )
        if len(outputs) != source.output_arity:
            raise ParseError(
                f"&{name} expects {source.output_arity} outputs, got {len(outputs)}",
                name_tok.line,
                name_tok.column,
            )
        for i, (term, kind) in enumerate(zip(inputs, source.input_signature)):
            if kind.name == "PREDICATE" and is_variable(term):
                raise ParseError(
                    f"&{name} input {i} must be a predicate name, got variable {term!r}",
                    name_tok.line,
                    name_tok.column,
                )
        return ExternalAtomExpr(
            name,
            inputs,
            outputs,
            tuple(k.name == "PREDICATE" for k in source.input_signature),
        )


def parse(text: str, registry: Optional[Mapping] = None) -> Program:
    """Parse surface-language text into a (possibly non-ground) program."""
    return _Parser(_tokenize(text), registry).parse_program()


# ---------------------------------------------------------------------------
# Grounding


def _rule_variables(rule: Rule) -> list[str]:
    ordered: list[str] = []

    def add(term: str) -> None:
        if is_variable(term) and term not in ordered:
            ordered.append(term)

    for atom in rule.head:
        for t in atom.args:
            add(t)
    for elem in rule.body:
        if isinstance(elem, BodyAtom):
            for t in elem.atom.args:
                add(t)
        elif isinstance(elem, BodyExternal):
            for t in elem.expr.inputs:
                add(t)
            for t in elem.expr.outputs:
                add(t)
        else:
            add(elem.left)
            add(elem.right)
    return ordered


def _check_safety(rule: Rule, variables: Sequence[str]) -> None:
    safe = {
        t
        for elem in rule.body
        if isinstance(elem, BodyAtom) and not elem.negated
        for t in elem.atom.args
        if is_variable(t)
    }
    for var in variables:
        if var not in safe:
            raise GroundingError(
                f"unsafe rule: variable {var} does not occur in a positive body atom"
            )


def _substitute_atom(atom: Atom, binding: Mapping[str, str]) -> Atom:
    return Atom(atom.predicate, tuple(binding.get(t, t) for t in atom.args))


def _substitute_elem(elem, binding: Mapping[str, str]):
    if isinstance(elem, BodyAtom):
        return BodyAtom(_substitute_atom(elem.atom, binding), elem.negated)
    if isinstance(elem, BodyExternal):
        expr = elem.expr
        return BodyExternal(
            ExternalAtomExpr(
                expr.name,
                tuple(binding.get(t, t) for t in expr.inputs),
                tuple(binding.get(t, t) for t in expr.outputs),
                expr.pred_inputs,
            ),
            elem.negated,
        )
    return Builtin(elem.op, binding.get(elem.left, elem.left), binding.get(elem.right, elem.right))


def ground(program: Program) -> Program:
    """Instantiate every rule over the program's constants.

    Builtins are evaluated during instantiation and never survive into
    the ground program; instances with a false builtin are dropped.
    """
    constants = program.constants
    ground_rules: list[Rule] = []
    for rule in program.rules:
        variables = _rule_variables(rule)
        if not variables:
            body = tuple(e for e in rule.body if not isinstance(e, Builtin))
            if all(e.holds() for e in rule.body if isinstance(e, Builtin)):
                ground_rules.append(Rule(rule.head, body))
            continue
        _check_safety(rule, variables)
        if not constants:
            raise GroundingError("program has variables but no constants")
        for combo in itertools.product(constants, repeat=len(variables)):
            binding = dict(zip(variables, combo))
            elems = [_substitute_elem(e, binding) for e in rule.body]
            if not all(e.holds() for e in elems if isinstance(e, Builtin)):
                continue
            head = tuple(_substitute_atom(a, binding) for a in rule.head)
            body = tuple(e for e in elems if not isinstance(e, Builtin))
            ground_rules.append(Rule(head, body))
    log.debug("grounded %d rules into %d instances", len(program.rules), len(ground_rules))
    return Program(ground_rules)


# ---------------------------------------------------------------------------
# Guessing rewrite


@dataclass(frozen=True)
class GroundRule:
    """An ordinary ground rule: disjunctive head, positive and negative body."""

    head: tuple[Atom, ...]
    positive: tuple[Atom, ...]
    negative: tuple[Atom, ...]

    @property
    def body_literals(self) -> frozenset[Literal]:
        return frozenset(
            [Literal.T(a) for a in self.positive] + [Literal.F(a) for a in self.negative]
        )


@dataclass
class GuessingProgram:
    """The ordinary rewrite of a ground HEX program.

    Every distinct ground external atom gets a replacement pair (e, ne)
    and one disjunctive guessing rule guarded by the ordinary positive
    atoms of the rule it first occurred in.
    """

    rules: list[GroundRule]
    replacement: dict[ExternalAtomExpr, tuple[Atom, Atom]]
    original_atoms: frozenset[Atom]

    @property
    def atoms(self) -> list[Atom]:
        seen: dict[Atom, None] = {}
        for rule in self.rules:
            for atom in itertools.chain(rule.head, rule.positive, rule.negative):
                seen.setdefault(atom)
        return list(seen)


def replacement_atoms(expr: ExternalAtomExpr) -> tuple[Atom, Atom]:
    base = f"&{expr.name}[{','.join(expr.inputs)}]"
    return Atom(f"e_{base}", expr.outputs), Atom(f"ne_{base}", expr.outputs)


def to_guessing(ground_program: Program) -> GuessingProgram:
    """Replace external atoms by replacement atoms plus guessing rules."""
    replacement: dict[ExternalAtomExpr, tuple[Atom, Atom]] = {}
    guards: dict[ExternalAtomExpr, tuple[Atom, ...]] = {}
    original_atoms: set[Atom] = set()
    rewritten: list[GroundRule] = []

    for rule in ground_program.rules:
        positive: list[Atom] = []
        negative: list[Atom] = []
        original_atoms.update(rule.head)
        for elem in rule.body:
            if isinstance(elem, BodyAtom):
                original_atoms.add(elem.atom)
                (negative if elem.negated else positive).append(elem.atom)
            elif isinstance(elem, BodyExternal):
                e_atom, _ = replacement.setdefault(elem.expr, replacement_atoms(elem.expr))
                guards.setdefault(elem.expr, rule.ordinary_positive)
                (negative if elem.negated else positive).append(e_atom)
            else:  # pragma: no cover - builtins are compiled away at grounding
                raise GroundingError("builtin survived grounding")
        # grounding can instantiate distinct variables to the same constant;
        # a duplicated head atom would corrupt the shifted support encoding
        rewritten.append(
            GroundRule(
                tuple(dict.fromkeys(rule.head)),
                tuple(dict.fromkeys(positive)),
                tuple(dict.fromkeys(negative)),
            )
        )

    for expr, (e_atom, ne_atom) in replacement.items():
        rewritten.append(
            GroundRule((e_atom, ne_atom), tuple(dict.fromkeys(guards[expr])), ())
        )

    return GuessingProgram(rewritten, replacement, frozenset(original_atoms))


# ---------------------------------------------------------------------------
# Static nogoods


class BodyAtomTable:
    """Canonical fresh atoms for rule bodies, shared by identical literal sets."""

    def __init__(self) -> None:
        self._atoms: dict[frozenset[Literal], Atom] = {}

    def get(self, body: frozenset[Literal]) -> Optional[Atom]:
        return self._atoms.get(body)

    def get_or_create(self, body: frozenset[Literal]) -> tuple[Atom, bool]:
        atom = self._atoms.get(body)
        if atom is not None:
            return atom, False
        atom = Atom(f"__body{len(self._atoms)}")
        self._atoms[body] = atom
        return atom, True

    @property
    def atoms(self) -> list[Atom]:
        return list(self._atoms.values())

    def items(self) -> list[tuple[frozenset[Literal], Atom]]:
        return list(self._atoms.items())

    def __len__(self) -> int:
        return len(self._atoms)


def conjunction_nogoods(body: Iterable[Literal], body_atom: Atom) -> list[Nogood]:
    """Tie a fresh body atom to the truth of a conjunction of literals.

    The body atom is false only if some literal fails, and true only if
    all literals hold; an empty conjunction forces the body atom true. A
    contradictory conjunction (both polarities of an atom, as produced by
    shifting a rule whose head atom recurs in its body) keeps only the
    per-literal direction, which pins the body atom false.
    """
    lits = frozenset(body)
    nogoods = []
    whole = Nogood.make(set(lits) | {Literal.F(body_atom)}, Origin.STATIC_COMPLETION)
    if whole is not None:
        nogoods.append(whole)
    for lit in sorted(lits, key=lambda l: (l.atom, l.sign)):
        nogoods.append(Nogood({Literal.T(body_atom), lit.negated()}, Origin.STATIC_COMPLETION))
    return nogoods


@dataclass
class StaticEncoding:
    completion: list[Nogood]
    shifted: list[Nogood]
    body_table: BodyAtomTable
    rule_body_atom: dict[GroundRule, Atom]

    @property
    def nogoods(self) -> list[Nogood]:
        return self.completion + self.shifted


def completion_nogoods(
    rules: Sequence[GroundRule], table: Optional[BodyAtomTable] = None
) -> tuple[list[Nogood], BodyAtomTable, dict[GroundRule, Atom]]:
    """Clark's completion over the rules plus shared body atoms."""
    table = table if table is not None else BodyAtomTable()
    nogoods: list[Nogood] = []
    seen: set[Nogood] = set()
    rule_body_atom: dict[GroundRule, Atom] = {}

    def emit(ng: Optional[Nogood]) -> None:
        if ng is not None and ng not in seen:
            seen.add(ng)
            nogoods.append(ng)

    for rule in rules:
        body = rule.body_literals
        beta, fresh = table.get_or_create(body)
        rule_body_atom[rule] = beta
        if fresh:
            for ng in conjunction_nogoods(body, beta):
                emit(ng)
        emit(
            Nogood.make(
                {Literal.T(beta)} | {Literal.F(a) for a in rule.head},
                Origin.STATIC_COMPLETION,
            )
        )
    return nogoods, table, rule_body_atom


def shifted_rules(rule: GroundRule) -> list[GroundRule]:
    """Shift a disjunctive rule into one rule per head atom."""
    if not rule.head:
        return []
    out = []
    for i, atom in enumerate(rule.head):
        extra_neg = tuple(a for j, a in enumerate(rule.head) if j != i)
        out.append(GroundRule((atom,), rule.positive, rule.negative + extra_neg))
    return out


def shifted_nogoods(
    rules: Sequence[GroundRule],
    atoms: Iterable[Atom],
    table: Optional[BodyAtomTable] = None,
) -> tuple[list[Nogood], BodyAtomTable]:
    """Support nogoods from the shifted program.

    Every atom must have some shifted rule with the atom in the head and
    a true body; atoms with no potential support are forced false.
    """
    table = table if table is not None else BodyAtomTable()
    nogoods: list[Nogood] = []
    seen: set[Nogood] = set()

    def emit(ng: Optional[Nogood]) -> None:
        if ng is not None and ng not in seen:
            seen.add(ng)
            nogoods.append(ng)

    supports: dict[Atom, list[Atom]] = {}
    for rule in rules:
        for shifted in shifted_rules(rule):
            body = shifted.body_literals
            beta, fresh = table.get_or_create(body)
            if fresh:
                for ng in conjunction_nogoods(body, beta):
                    emit(Nogood(ng.literals, Origin.STATIC_SHIFT))
            bucket = supports.setdefault(shifted.head[0], [])
            if beta not in bucket:
                bucket.append(beta)
    for atom in atoms:
        body_atoms = supports.get(atom, [])
        emit(
            Nogood.make(
                {Literal.T(atom)} | {Literal.F(b) for b in body_atoms},
                Origin.STATIC_SHIFT,
            )
        )
    return nogoods, table


def encode(guessing: GuessingProgram) -> StaticEncoding:
    """Full static encoding: completion plus shifted-support nogoods."""
    table = BodyAtomTable()
    completion, table, rule_body_atom = completion_nogoods(guessing.rules, table)
    shifted, table = shifted_nogoods(guessing.rules, guessing.atoms, table)
    return StaticEncoding(completion, shifted, table, rule_body_atom)
