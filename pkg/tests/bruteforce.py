"""Independent reference implementations used as test oracles.

Everything here recomputes results from first principles (subset
enumeration, reduct checks, direct oracle semantics) without touching
the solver's propagation, learning or unfounded-set machinery.
"""

from __future__ import annotations

import itertools
import random
from typing import Iterable, Sequence

from hexsolve.core import Atom
from hexsolve.program import GroundRule, GuessingProgram


# ---------------------------------------------------------------------------
# Ordinary disjunctive answer sets via bitmask enumeration


class MaskProgram:
    """Rules as (head, positive, negative) bitmasks over an atom list."""

    def __init__(self, rules: Sequence[GroundRule]):
        atoms: dict[Atom, int] = {}
        for rule in rules:
            for atom in itertools.chain(rule.head, rule.positive, rule.negative):
                atoms.setdefault(atom, len(atoms))
        self.atoms = list(atoms)
        self.index = atoms
        self.rules = [
            (
                self._mask(rule.head),
                self._mask(rule.positive),
                self._mask(rule.negative),
            )
            for rule in rules
        ]

    def _mask(self, items: Iterable[Atom]) -> int:
        mask = 0
        for atom in items:
            mask |= 1 << self.index[atom]
        return mask

    def to_atoms(self, mask: int) -> frozenset[Atom]:
        return frozenset(a for i, a in enumerate(self.atoms) if mask >> i & 1)

    def is_model(self, mask: int) -> bool:
        for head, pos, neg in self.rules:
            if pos & ~mask == 0 and neg & mask == 0 and head & mask == 0:
                return False
        return True

    def reduct(self, mask: int) -> list[tuple[int, int]]:
        return [(head, pos) for head, pos, neg in self.rules if neg & mask == 0]

    def is_answer_set(self, mask: int) -> bool:
        """Model of the program whose true part is a minimal model of the reduct."""
        if not self.is_model(mask):
            return False
        reduct = self.reduct(mask)
        if all(bin(head & mask).count("1") <= 1 for head, pos in reduct if pos & ~mask == 0):
            # Effectively non-disjunctive inside the candidate: the least
            # fixpoint of the applicable rules is the unique minimal submodel.
            closure = 0
            changed = True
            while changed:
                changed = False
                for head, pos in reduct:
                    if pos & ~mask:
                        continue
                    target = head & mask
                    if pos & ~closure == 0 and target and target & closure != target:
                        closure |= target
                        changed = True
            return closure == mask
        # General case: look for a proper submodel of the reduct.
        if mask == 0:
            return True
        sub = (mask - 1) & mask
        while True:
            if all(
                not (pos & ~sub == 0 and head & sub == 0) for head, pos in reduct
            ):
                return False
            if sub == 0:
                return True
            sub = (sub - 1) & mask

    def answer_sets(self) -> list[int]:
        n = len(self.atoms)
        return [mask for mask in range(1 << n) if self.is_answer_set(mask)]


def ordinary_answer_sets(rules: Sequence[GroundRule]) -> list[frozenset[Atom]]:
    mp = MaskProgram(rules)
    return [mp.to_atoms(m) for m in mp.answer_sets()]


# ---------------------------------------------------------------------------
# Direct oracle semantics (independent of hexsolve.external)


def diff_semantics(true_atoms: frozenset[Atom], p: str, q: str) -> set[tuple[str, ...]]:
    left = {a.args for a in true_atoms if a.predicate == p}
    right = {a.args for a in true_atoms if a.predicate == q}
    return left - right


def empty_semantics(true_atoms: frozenset[Atom], p: str) -> set[tuple[str, ...]]:
    return {("c0",)} if not any(a.predicate == p for a in true_atoms) else {("c1",)}


def union_semantics(true_atoms: frozenset[Atom], p: str, q: str) -> set[tuple[str, ...]]:
    return {a.args for a in true_atoms if a.predicate in (p, q)}


_ORACLES = {"diff": diff_semantics, "empty": empty_semantics, "union": union_semantics}


def oracle_output(name: str, inputs: tuple[str, ...], true_atoms: frozenset[Atom]):
    return _ORACLES[name](true_atoms, *inputs)


# ---------------------------------------------------------------------------
# Compatible sets and answer sets of HEX programs by full enumeration


def compatible_sets_bruteforce(guessing: GuessingProgram) -> list[frozenset[Atom]]:
    """True parts of all compatible sets: answer sets of the rewritten
    program whose replacement guesses agree with the direct oracle output."""
    result = []
    for true_atoms in ordinary_answer_sets(guessing.rules):
        ok = True
        for expr, (e_atom, _) in guessing.replacement.items():
            actual = expr.outputs in oracle_output(expr.name, expr.inputs, true_atoms)
            guessed = e_atom in true_atoms
            if actual != guessed:
                ok = False
                break
        if ok:
            result.append(true_atoms)
    return result


def minimal_projections(
    compatible: Iterable[frozenset[Atom]], original_atoms: frozenset[Atom]
) -> list[frozenset[Atom]]:
    projections = []
    for c in compatible:
        p = frozenset(a for a in c if a in original_atoms)
        if p not in projections:
            projections.append(p)
    minimal = [p for p in projections if not any(q < p for q in projections)]
    return sorted(minimal, key=lambda s: tuple(sorted(s)))


def hex_answer_sets_bruteforce(guessing: GuessingProgram) -> list[frozenset[Atom]]:
    return minimal_projections(
        compatible_sets_bruteforce(guessing), guessing.original_atoms
    )


# ---------------------------------------------------------------------------
# Set-partitioning reference: enumerate selected subsets directly


def partition_compatible_count(guessing: GuessingProgram, n: int) -> int:
    """Count compatible sets of a partitioning instance by enumerating all
    subsets of selected elements and checking the compatibility definition
    (rewritten-program answer set plus oracle agreement) directly."""
    domain = [f"c{i}" for i in range(1, n + 1)]
    mp = MaskProgram(guessing.rules)
    count = 0
    for mask in range(1 << n):
        selected = {domain[i] for i in range(n) if mask >> i & 1}
        trues = {Atom("dom", (c,)) for c in domain}
        trues |= {Atom("sel", (c,)) for c in selected}
        trues |= {Atom("nsel", (c,)) for c in domain if c not in selected}
        for expr, (e_atom, ne_atom) in guessing.replacement.items():
            out = oracle_output(expr.name, expr.inputs, frozenset(trues))
            trues.add(e_atom if expr.outputs in out else ne_atom)
        candidate_mask = 0
        for atom in trues:
            candidate_mask |= 1 << mp.index[atom]
        if not mp.is_answer_set(candidate_mask):
            continue
        candidate = mp.to_atoms(candidate_mask)
        if all(
            (expr.outputs in oracle_output(expr.name, expr.inputs, candidate))
            == (e_atom in candidate)
            for expr, (e_atom, _) in guessing.replacement.items()
        ):
            count += 1
    return count


# ---------------------------------------------------------------------------
# Unfounded sets directly from the definition


def is_unfounded(
    rules: Sequence[GroundRule], true_atoms: frozenset[Atom], candidate: frozenset[Atom]
) -> bool:
    """No rule with a head in the candidate set is satisfied from outside it."""
    if not candidate or not candidate <= true_atoms:
        return False
    return not _externally_supported(rules, true_atoms, candidate)


def _externally_supported(rules, true_atoms, candidate) -> bool:
    for rule in rules:
        if not set(rule.head) & candidate:
            continue
        if set(rule.positive) & candidate:
            continue
        if not all(a in true_atoms for a in rule.positive):
            continue
        if any(a in true_atoms for a in rule.negative):
            continue
        if all(h in candidate or h not in true_atoms for h in rule.head):
            return True
    return False


def unfounded_sets_bruteforce(
    rules: Sequence[GroundRule], true_atoms: frozenset[Atom]
) -> list[frozenset[Atom]]:
    """Every nonempty unfounded subset of the true atoms."""
    atoms = sorted(true_atoms)
    found = []
    for size in range(1, len(atoms) + 1):
        for combo in itertools.combinations(atoms, size):
            candidate = frozenset(combo)
            if not _externally_supported(rules, true_atoms, candidate):
                found.append(candidate)
    return found


# ---------------------------------------------------------------------------
# Random ground HEX programs over diff/empty


def random_hex_program(rng: random.Random) -> str:
    """A small random ground program: up to 3 rules over 6 atoms, up to two
    ground external atoms over diff/empty, optional width-2 disjunction.
    Declared externals are driven into rule bodies so learning actually
    fires on a good share of the corpus."""
    preds = ["p", "q", "r"]
    consts = ["c0", "c1"]
    atoms = [f"{p}({c})" for p in preds for c in consts]

    externals = []
    for _ in range(rng.randint(0, 2)):
        if rng.random() < 0.5:
            a, b = rng.sample(preds, 2)
            externals.append(f"&diff[{a},{b}]({rng.choice(consts)})")
        else:
            externals.append(f"&empty[{rng.choice(preds)}]({rng.choice(consts)})")

    lines = []
    for _ in range(rng.randint(0, 3)):
        lines.append(f"{rng.choice(atoms)}.")
    pending = list(externals)
    for _ in range(rng.randint(1, 3)):
        head_width = rng.choices([0, 1, 2], weights=[1, 4, 2])[0]
        head = " v ".join(rng.sample(atoms, head_width)) if head_width else ""
        body = []
        if pending:
            body.append(pending.pop())
        for _ in range(rng.randint(0 if (head or body) else 1, 2)):
            if externals and rng.random() < 0.3:
                elem = externals[rng.randrange(len(externals))]
            else:
                elem = rng.choice(atoms)
            body.append(elem)
        body = [f"not {e}" if rng.random() < 0.3 else e for e in body]
        if head and not body:
            lines.append(f"{head}.")
        elif body:
            lines.append(f"{head} :- {', '.join(body)}." if head else f":- {', '.join(body)}.")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Sudoku completion by plain backtracking


def solve_sudoku(grid: list[list[int]]) -> list[list[list[int]]]:
    """All completions of a partial grid; block size inferred from the side."""
    size = len(grid)
    block = 3 if size == 9 else 2
    board = [row[:] for row in grid]
    solutions: list[list[list[int]]] = []

    def valid(r: int, c: int, d: int) -> bool:
        for i in range(size):
            if board[r][i] == d or board[i][c] == d:
                return False
        br, bc = (r // block) * block, (c // block) * block
        for i in range(br, br + block):
            for j in range(bc, bc + block):
                if board[i][j] == d:
                    return False
        return True

    def walk(pos: int) -> None:
        if pos == size * size:
            solutions.append([row[:] for row in board])
            return
        r, c = divmod(pos, size)
        if board[r][c]:
            walk(pos + 1)
            return
        for d in range(1, size + 1):
            if valid(r, c, d):
                board[r][c] = d
                walk(pos + 1)
                board[r][c] = 0
                if len(solutions) > 1:
                    return

    walk(0)
    return solutions
