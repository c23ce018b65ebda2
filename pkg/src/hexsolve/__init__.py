"""Conflict-driven solver for ground HEX programs with external behavior learning."""

from .core import Assignment, Atom, Literal, Nogood, Origin, negate, is_solution, extension, restrict
from .external import ExternalSource, InputKind, PluginError, Registry, builtin_registry
from .hexeval import SolveOptions, SolveResult, solve
from .program import GroundingError, ParseError, ground, parse, to_guessing

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "Atom",
    "ExternalSource",
    "GroundingError",
    "InputKind",
    "Literal",
    "Nogood",
    "Origin",
    "ParseError",
    "PluginError",
    "Registry",
    "SolveOptions",
    "SolveResult",
    "builtin_registry",
    "extension",
    "ground",
    "is_solution",
    "negate",
    "parse",
    "restrict",
    "solve",
    "to_guessing",
]
