"""HTTP service exposing the solver and the benchmark generators.

The CLI is a thin client of these endpoints; they accept program text
plus run configuration and return answer sets with counters. Input
problems map to 400, misbehaving external sources to 500.
"""

from __future__ import annotations

from typing import Literal, Union

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from . import __version__
from .external import PluginError
from .generators import GridError, gen_partition, gen_sudoku
from .hexeval import SolveOptions, solve
from .program import GroundingError, ParseError

app = FastAPI(
    title="hexsolve",
    version=__version__,
    description="Conflict-driven solving for ground HEX programs with external behavior learning",
)


class SolveRequest(BaseModel):
    program: str = Field(description="program text in the surface language")
    ebl: Literal["off", "general", "informed", "user"] = "informed"
    enum: Union[Literal["all", "first"], int] = "all"
    heuristic: Literal["lex", "activity"] = "lex"
    seed: int = 0
    propagation: Literal["watched", "counters"] = "watched"

    @field_validator("enum")
    @classmethod
    def _positive_bound(cls, v):
        if isinstance(v, int) and v < 1:
            raise ValueError("enumeration bound must be at least 1")
        return v

    def to_options(self) -> SolveOptions:
        return SolveOptions(
            ebl=self.ebl,
            enum=self.enum,
            heuristic=self.heuristic,
            seed=self.seed,
            propagation=self.propagation,
        )


class SolveStats(BaseModel):
    candidates: int
    rejected: int
    external_calls: int
    ebl_nogoods: int
    conflicts: int
    decisions: int
    propagations: int
    external_evaluations: int
    loop_nogoods: int


class SolveResponse(BaseModel):
    answer_sets: list[list[str]] = Field(
        description="each answer set as sorted atom strings"
    )
    stats: SolveStats


class PartitionRequest(BaseModel):
    n: int = Field(ge=1, description="number of domain elements")


class SudokuRequest(BaseModel):
    grid: str = Field(description="4 or 9 lines; digits fill cells, '.' or '0' are blank")


class ProgramResponse(BaseModel):
    program: str


def _input_error(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail={"error": "input", "message": str(exc)})


def _plugin_error(exc: PluginError) -> HTTPException:
    return HTTPException(status_code=500, detail={"error": "plugin", "message": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/solve", response_model=SolveResponse)
def solve_program(request: SolveRequest) -> SolveResponse:
    try:
        result = solve(request.program, request.to_options())
    except (ParseError, GroundingError, ValueError) as exc:
        raise _input_error(exc)
    except PluginError as exc:
        raise _plugin_error(exc)
    return SolveResponse(
        answer_sets=result.answer_set_strings,
        stats=SolveStats(**result.stats.as_dict()),
    )


@app.post("/generate/partition", response_model=ProgramResponse)
def generate_partition(request: PartitionRequest) -> ProgramResponse:
    try:
        return ProgramResponse(program=gen_partition(request.n))
    except ValueError as exc:
        raise _input_error(exc)


@app.post("/generate/sudoku", response_model=ProgramResponse)
def generate_sudoku(request: SudokuRequest) -> ProgramResponse:
    try:
        return ProgramResponse(program=gen_sudoku(request.grid))
    except GridError as exc:
        raise _input_error(exc)
