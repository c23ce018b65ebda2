"""Acceptance suite: one test per criterion, each printing a PASS line.

Heavy runs (partitioning family, fuzz corpus, Sudoku instances) live in
module-scoped fixtures shared by several criteria; run with -s to see
the per-criterion lines alongside pytest's own verdicts.
"""

import random
import time

import pytest

from bruteforce import (
    compatible_sets_bruteforce,
    hex_answer_sets_bruteforce,
    partition_compatible_count,
    random_hex_program,
    solve_sudoku,
)
from hexsolve.cdnl import AtomTable, Engine
from hexsolve.core import Atom, Literal, Nogood, Origin, is_solution
from hexsolve.external import (
    builtin_registry,
    call_oracle,
    learn_general,
    learn_monotonic,
    make_source_input,
    user_learn,
    SourceInput,
)
from hexsolve.generators import gen_partition, gen_sudoku, parse_grid
from hexsolve.hexeval import (
    SolveOptions,
    build_evaluator,
    compatibility_check,
    solve,
)
from hexsolve.program import parse, ground, to_guessing

T, F = Literal.T, Literal.F
REG = builtin_registry()
MODES = ("off", "general", "informed", "user")
EBL_ORIGINS = (
    Origin.EBL_GENERAL,
    Origin.EBL_MONOTONIC,
    Origin.EBL_FUNCTIONAL,
    Origin.EBL_USER,
)

PE_TEXT = """
p(c0). dom(c0). dom(c1). dom(c2).
p(X) :- dom(X), &empty[p](X).
"""

PE_ANSWER = frozenset(
    {
        Atom("dom", ("c0",)),
        Atom("dom", ("c1",)),
        Atom("dom", ("c2",)),
        Atom("p", ("c0",)),
        Atom("p", ("c1",)),
    }
)


def report(criterion, ok=True):
    print(f"\ncriterion {criterion}: {'PASS' if ok else 'FAIL'}")


# ---------------------------------------------------------------------------
# Shared fixtures


@pytest.fixture(scope="module")
def pe_runs():
    runs = {}
    start = time.perf_counter()
    for mode in MODES:
        evaluator = build_evaluator(PE_TEXT, SolveOptions(ebl=mode))
        runs[mode] = (evaluator, evaluator.solve())
    return runs, time.perf_counter() - start


@pytest.fixture(scope="module")
def partition_runs():
    runs = {}
    for n in range(1, 9):
        start = time.perf_counter()
        per_mode = {}
        for mode in MODES:
            per_mode[mode] = solve(gen_partition(n), SolveOptions(ebl=mode))
        runs[n] = (per_mode, time.perf_counter() - start)
    return runs


@pytest.fixture(scope="module")
def fuzz_corpus():
    rng = random.Random(20120229)
    corpus = []
    start = time.perf_counter()
    for _ in range(200):
        text = random_hex_program(rng)
        guessing = to_guessing(ground(parse(text, REG)))
        expected = frozenset(hex_answer_sets_bruteforce(guessing))
        per_mode = {}
        for mode in MODES:
            evaluator = build_evaluator(text, SolveOptions(ebl=mode))
            result = evaluator.solve()
            per_mode[mode] = (frozenset(result.answer_sets), evaluator)
        corpus.append((text, guessing, expected, per_mode))
    return corpus, time.perf_counter() - start


SUDOKU_BASE = [[1, 2, 3, 4], [3, 4, 1, 2], [2, 1, 4, 3], [4, 3, 2, 1]]
SUDOKU_PERMS = [
    (1, 2, 3, 4),
    (2, 1, 4, 3),
    (3, 4, 1, 2),
    (4, 3, 2, 1),
    (2, 3, 4, 1),
]
SUDOKU_BLANKS = [
    [(0, 0), (1, 1), (2, 2)],
    [(0, 1), (1, 2), (3, 0)],
    [(0, 0), (0, 1), (2, 3), (3, 2)],
    [(1, 0), (1, 3), (2, 1), (3, 3)],
    [(0, 2), (1, 0), (2, 2), (3, 1)],
    [(0, 0), (1, 2), (2, 0), (3, 3)],
    [(0, 3), (1, 1), (2, 0), (2, 3), (3, 2)],
    [(0, 0), (0, 2), (1, 3), (2, 1), (3, 0)],
    [(0, 1), (1, 0), (2, 3), (3, 1), (3, 2)],
    [(0, 0), (1, 1), (2, 2), (3, 3), (0, 3)],
]


def sudoku_instances():
    grids = []
    for i, blanks in enumerate(SUDOKU_BLANKS):
        perm = SUDOKU_PERMS[i % len(SUDOKU_PERMS)]
        grid = [[perm[d - 1] for d in row] for row in SUDOKU_BASE]
        for r, c in blanks:
            grid[r][c] = 0
        grids.append("\n".join("".join(str(d) if d else "." for d in row) for row in grid))
    return grids


@pytest.fixture(scope="module")
def sudoku_runs():
    runs = []
    for grid_text in sudoku_instances():
        program = gen_sudoku(grid_text)
        per_mode = {}
        for mode in MODES:
            start = time.perf_counter()
            per_mode[mode] = (solve(program, SolveOptions(ebl=mode)), time.perf_counter() - start)
        runs.append((grid_text, per_mode))
    return runs


# ---------------------------------------------------------------------------
# Criterion 1: the conflict-learning trace


def test_criterion_1_conflict_learning_trace():
    """Six nogoods, four decisions: the engine derives F y at level 4, hits
    the expected conflict, learns {F a, T x}, backjumps to level 1 and
    asserts F x there."""
    start = time.perf_counter()
    a, b, c, x, y = (Atom(n) for n in "abcxy")
    table = AtomTable()
    ids = {atom: table.intern(atom) for atom in (a, b, c, x, y)}
    table.freeze_selectable()
    engine = Engine(table, propagation="counters")
    for ng in [
        Nogood({T(a), T(b)}),
        Nogood({T(a), T(c)}),
        Nogood({F(a), T(x), T(y)}),
        Nogood({F(a), T(x), F(y)}),
        Nogood({F(a), F(x), T(y)}),
        Nogood({F(a), F(x), F(y)}),
    ]:
        engine.add_nogood(ng)
    for lit in (F(a), T(b), T(c), T(x)):
        engine.assume(lit)
    conflict = engine.propagate()

    assert engine.values[ids[y]] == -ids[y], "F y must be derived"
    assert engine.levels[ids[y]] == 4
    assert conflict is not None
    assert engine.nogood(conflict) == Nogood({F(a), T(x), F(y)})

    learned, level = engine.analyze(engine.nogood_lits[conflict])
    assert engine.table.nogood(learned, Origin.CONFLICT) == Nogood({F(a), T(x)})
    assert level == 1

    engine.backjump(level)
    engine.add_ints(learned, Origin.CONFLICT)
    assert engine.values[ids[x]] == -ids[x], "F x must be asserted"
    assert engine.levels[ids[x]] == 1
    assert time.perf_counter() - start < 1.0
    report(1)


# ---------------------------------------------------------------------------
# Criterion 2: empty-source program end to end


def test_criterion_2_empty_source_end_to_end(pe_runs):
    runs, _ = pe_runs
    start = time.perf_counter()

    for mode in MODES:
        _, result = runs[mode]
        assert result.answer_sets == [PE_ANSWER], mode
    _, off_result = runs["off"]
    assert off_result.stats.candidates == 8

    # the learned input/output nogood for guesses that leave the extension
    # at the fact alone, recorded verbatim
    golden = Nogood(
        {
            T(Atom("p", ("c0",))),
            F(Atom("p", ("c1",))),
            F(Atom("p", ("c2",))),
            F(Atom("e_&empty[p]", ("c1",))),
        }
    )
    general_evaluator, _ = runs["general"]
    assert golden in general_evaluator.emitted

    # and the same nogood arises from checking the guess that sets the
    # first replacement atom true
    guessing = to_guessing(ground(parse(PE_TEXT, REG)))
    lits = set()
    for atom in guessing.atoms:
        if atom.predicate == "e_&empty[p]":
            sign = atom.args == ("c0",)
        elif atom.predicate == "ne_&empty[p]":
            sign = atom.args != ("c0",)
        elif atom.predicate == "dom":
            sign = True
        else:
            sign = atom.args == ("c0",)
        lits.add(Literal(atom, sign))
    compatible, learned = compatibility_check(guessing, lits)
    assert not compatible
    assert golden in learned
    assert time.perf_counter() - start < 1.0
    report(2)


# ---------------------------------------------------------------------------
# Criterion 3: learning-function goldens


def test_criterion_3_learning_function_goldens():
    start = time.perf_counter()

    def namer(pred):
        return lambda out: Atom(pred, out)

    # diff under extensions {a,b} minus {b}
    from hexsolve.core import Assignment

    diff_assignment = Assignment()
    for atom in (Atom("p", ("a",)), Atom("p", ("b",)), Atom("q", ("b",))):
        diff_assignment.assign(T(atom))
    for atom in (Atom("p", ("c",)), Atom("q", ("a",)), Atom("q", ("c",))):
        diff_assignment.assign(F(atom))
    inp = make_source_input(REG["diff"], diff_assignment, ("p", "q"))
    outputs = call_oracle(REG["diff"], inp)
    naive = learn_general(inp, outputs, namer("e_&diff[p,q]"))
    assert naive == [
        Nogood(
            {
                T(Atom("p", ("a",))),
                T(Atom("p", ("b",))),
                F(Atom("p", ("c",))),
                F(Atom("q", ("a",))),
                T(Atom("q", ("b",))),
                F(Atom("q", ("c",))),
                F(Atom("e_&diff[p,q]", ("a",))),
            }
        )
    ]
    informed = learn_monotonic(REG["diff"], inp, outputs, namer("e_&diff[p,q]"))
    assert informed == [
        Nogood(
            {
                T(Atom("p", ("a",))),
                T(Atom("p", ("b",))),
                F(Atom("q", ("a",))),
                T(Atom("q", ("b",))),
                F(Atom("q", ("c",))),
                F(Atom("e_&diff[p,q]", ("a",))),
            }
        )
    ]

    # transitive-closure hook: blame the path and the missing edge
    tc_assignment = Assignment()
    tc_assignment.assign(T(Atom("r", ("a", "b"))))
    tc_assignment.assign(T(Atom("r", ("b", "c"))))
    tc_assignment.assign(F(Atom("r", ("a", "c"))))
    tc_inp = make_source_input(REG["tc"], tc_assignment, ("r",))
    tc_out = call_oracle(REG["tc"], tc_inp)
    tc_nogoods = user_learn(REG["tc"], tc_inp, tc_out, namer("e_&tc[r]"))
    assert tc_nogoods == [
        Nogood(
            {
                T(Atom("r", ("a", "b"))),
                T(Atom("r", ("b", "c"))),
                F(Atom("r", ("a", "c"))),
                F(Atom("e_&tc[r]", ("a", "c"))),
            }
        )
    ]

    # elementwise diff hook
    lin_assignment = Assignment()
    lin_assignment.assign(T(Atom("p", ("a",))))
    lin_assignment.assign(F(Atom("q", ("a",))))
    lin_inp = make_source_input(REG["diff"], lin_assignment, ("p", "q"))
    lin_out = call_oracle(REG["diff"], lin_inp)
    lin_nogoods = user_learn(REG["diff"], lin_inp, lin_out, namer("e"))
    assert lin_nogoods == [
        Nogood({T(Atom("p", ("a",))), F(Atom("q", ("a",))), F(Atom("e", ("a",)))})
    ]
    assert time.perf_counter() - start < 1.0
    report(3)


# ---------------------------------------------------------------------------
# Criterion 4: set partitioning


def test_criterion_4_set_partitioning(partition_runs):
    for n, (per_mode, duration) in partition_runs.items():
        expected = 1 + n + n * (n - 1) // 2
        guessing = to_guessing(ground(parse(gen_partition(n), REG)))
        assert partition_compatible_count(guessing, n) == expected, n
        counts = {mode: len(result.answer_sets) for mode, result in per_mode.items()}
        assert set(counts.values()) == {expected}, (n, counts)
        if n >= 4:
            assert (
                per_mode["informed"].stats.candidates
                <= per_mode["off"].stats.candidates
            ), n
        if n == 5:
            assert (
                per_mode["informed"].stats.candidates
                < per_mode["off"].stats.candidates
            )
        assert duration < 30.0, (n, duration)
    report(4)


# ---------------------------------------------------------------------------
# Criterion 5: differential fuzzing


def test_criterion_5_differential_fuzzing(fuzz_corpus):
    corpus, duration = fuzz_corpus
    assert len(corpus) >= 200
    for text, _, expected, per_mode in corpus:
        for mode in MODES:
            answers, _ = per_mode[mode]
            assert answers == expected, (text, mode)
    assert duration < 300.0
    report(5)


# ---------------------------------------------------------------------------
# Criterion 6: correctness of every learned nogood


def test_criterion_6_nogood_correctness(fuzz_corpus):
    corpus, _ = fuzz_corpus
    violations = 0
    checked = 0
    for text, guessing, _, per_mode in corpus:
        reference = compatible_sets_bruteforce(guessing)
        if not reference:
            continue
        atoms = guessing.atoms
        assignments = [
            {(T(a) if a in trues else F(a)) for a in atoms} for trues in reference
        ]
        for mode in MODES:
            _, evaluator = per_mode[mode]
            emitted = [n for n in evaluator.emitted if n.origin in EBL_ORIGINS]
            for lits in assignments:
                checked += len(emitted)
                if not is_solution(lits, emitted):
                    violations += 1
    assert checked > 100, "corpus produced too few nogood checks to be meaningful"
    assert violations == 0
    report(6)


# ---------------------------------------------------------------------------
# Criterion 7: monotonic nogoods generalize the uninformed ones


def test_criterion_7_monotonic_subset(fuzz_corpus):
    corpus, _ = fuzz_corpus
    pairs = 0
    for _, _, _, per_mode in corpus:
        _, evaluator = per_mode["informed"]
        for (name, terms, literals), entry in evaluator.cache.items():
            source = REG[name]
            if not source.monotonic:
                continue
            inp = SourceInput(name, terms, source.input_signature, literals)
            namer = lambda out: Atom("e", out)
            general = learn_general(inp, entry.outputs, namer)
            informed = learn_monotonic(source, inp, entry.outputs, namer)
            assert len(general) == len(informed)
            # both learning functions emit one nogood per output tuple, in
            # sorted output order
            for g_ng, m_ng in zip(general, informed):
                assert m_ng.literals <= g_ng.literals
                pairs += 1
    assert pairs > 20
    report(7)


# ---------------------------------------------------------------------------
# Criterion 8: Sudoku with user-defined learning


def test_criterion_8_sudoku(sudoku_runs):
    assert len(sudoku_runs) == 10
    for grid_text, per_mode in sudoku_runs:
        completions = solve_sudoku(parse_grid(grid_text))
        assert len(completions) == 1, "instances must have unique solutions"
        user_result, user_time = per_mode["user"]
        off_result, _ = per_mode["off"]
        assert user_time < 10.0, (grid_text, user_time)
        assert user_result.stats.candidates < off_result.stats.candidates
        assert len(user_result.answer_sets) == 1
        assigns = {
            a.args for a in user_result.answer_sets[0] if a.predicate == "assign"
        }
        expected = {
            (str(r + 1), str(c + 1), str(d))
            for r, row in enumerate(completions[0])
            for c, d in enumerate(row)
        }
        assert assigns == expected
    report(8)


# ---------------------------------------------------------------------------
# Criterion 9: learning never changes the answer-set set


def test_criterion_9_ebl_invariance(pe_runs, partition_runs, fuzz_corpus, sudoku_runs):
    pe, _ = pe_runs
    reference = frozenset(pe["off"][1].answer_sets)
    for mode in MODES:
        assert frozenset(pe[mode][1].answer_sets) == reference

    for n, (per_mode, _) in partition_runs.items():
        sets = {frozenset(result.answer_sets) for result in per_mode.values()}
        assert len(sets) == 1, n

    corpus, _ = fuzz_corpus
    for text, _, _, per_mode in corpus:
        sets = {answers for answers, _ in per_mode.values()}
        assert len(sets) == 1, text

    for grid_text, per_mode in sudoku_runs:
        sets = {frozenset(result.answer_sets) for result, _ in per_mode.values()}
        assert len(sets) == 1, grid_text
    report(9)
