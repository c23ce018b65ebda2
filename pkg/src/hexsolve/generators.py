"""Benchmark instance generators: set partitioning and Sudoku."""

from __future__ import annotations

class GridError(Exception):
    pass


def gen_partition(n: int) -> str:
    """Partition n elements into two subsets, at most two on the selected side.

    The two difference rules tie sel and nsel together through the diff
    source; the constraint caps the selected subset at two elements.
    """
    if n < 1:
        raise ValueError("partition instances need at least one element")
    lines = [" ".join(f"dom(c{i})." for i in range(1, n + 1))]
    lines.append("nsel(X) :- dom(X), &diff[dom,sel](X).")
    lines.append("sel(X) :- dom(X), &diff[dom,nsel](X).")
    lines.append(":- sel(X), sel(Y), sel(Z), X != Y, X != Z, Y != Z.")
    return "\n".join(lines) + "\n"


def parse_grid(text: str) -> list[list[int]]:
    """Read a 4x4 or 9x9 grid; digits fill cells, '.' or '0' mark blanks."""
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if len(rows) not in (4, 9):
        raise GridError(f"expected 4 or 9 grid rows, found {len(rows)}")
    size = len(rows)
    grid: list[list[int]] = []
    for line in rows:
        cells = line.split() if " " in line else list(line)
        if len(cells) != size:
            raise GridError(f"row {line!r} does not have {size} cells")
        row = []
        for cell in cells:
            if cell in (".", "0"):
                row.append(0)
            elif cell.isdigit() and 1 <= int(cell) <= size:
                row.append(int(cell))
            else:
                raise GridError(f"bad cell {cell!r} for a {size}x{size} grid")
        grid.append(row)
    return grid


def gen_sudoku(grid_text: str) -> str:
    """Encode a Sudoku instance: guess digits per cell, require exactly one,
    and reject assignments for which the checking source reports a clashing
    pair of cells."""
    grid = parse_grid(grid_text)
    size = len(grid)
    rng = range(1, size + 1)
    lines = []
    lines.append(" ".join(f"digit({d})." for d in rng))
    for r in rng:
        lines.append(" ".join(f"cell({r},{c})." for c in rng))
    givens = [
        f"assign({r},{c},{grid[r - 1][c - 1]})."
        for r in rng
        for c in rng
        if grid[r - 1][c - 1]
    ]
    if givens:
        lines.append(" ".join(givens))
    lines.append("assign(R,C,D) v nassign(R,C,D) :- cell(R,C), digit(D).")
    lines.append("filled(R,C) :- assign(R,C,D).")
    lines.append(":- cell(R,C), not filled(R,C).")
    lines.append(":- assign(R,C,D), assign(R,C,E), D != E.")
    lines.append(":- &sudokuCheck[assign](R1,C1,R2,C2), cell(R1,C1), cell(R2,C2).")
    return "\n".join(lines) + "\n"
